//! Many identical exponential items priced with one common price near the
//! expected maximum.
use unit_pricing::iid::{single_price_forced, single_price_mhr, uniform_price_revenue, IidPrice};
use unit_pricing::{CdfOracle, Item};

fn show(item: &Item, n: u64, res: &IidPrice) {
    match res.price {
        Some(p) => println!(
            "n = {n}: alpha_n = {:.4}, price {p:.4}, revenue {:.4} ({} cdf queries)",
            res.alpha_n.unwrap_or(f64::NAN),
            uniform_price_revenue(item, n, p),
            res.cdf_queries
        ),
        None => println!("n = {n}: below threshold e^{:.2}, use the general solver", res.log_threshold),
    }
}

fn main() -> unit_pricing::Result<()> {
    let item = Item::Oracle(CdfOracle::exponential(1.0)?);
    // The guaranteed threshold is astronomically large for any useful eps.
    show(&item, 1_000_000, &single_price_mhr(&item, 1_000_000, 0.9)?);

    for n in [10u64, 1_000, 1_000_000, 1_000_000_000] {
        show(&item, n, &single_price_forced(&item, n, 0.05)?);
    }
    Ok(())
}
