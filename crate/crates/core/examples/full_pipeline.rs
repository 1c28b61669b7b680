//! The whole solver on a shipped instance file, with coarse grids so it runs
//! in a few seconds.
use std::path::Path;

use unit_pricing::pipeline::{solve, Discretization, SolveOptions};
use unit_pricing::rational::{ratio, to_f64};
use unit_pricing::Instance;

fn main() -> unit_pricing::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let counter = Instance::from_path(dir.join("counterexample.json"))?;
    let report = solve(&counter, &SolveOptions::new(ratio(1, 5)))?;
    println!("counterexample: prices {:?}, revenue {:?}", report.prices_approx, report.revenue_approx);
    if let Some(g) = &report.grid_check {
        println!("  grid optimum {:.6} (gap {:.6})", to_f64(&g.best_revenue), to_f64(&g.gap));
    }

    let mhr = Instance::from_path(dir.join("mhr_exponential.json"))?;
    let mut opts = SolveOptions::new(ratio(1, 5));
    opts.discretization = Discretization::Given { delta: ratio(1, 3), price_eps: ratio(1, 3) };
    opts.samples = 20_000;
    let report = solve(&mhr, &opts)?;
    println!("mhr_exponential: prices {:?}", report.prices_approx);
    if let Some(mc) = &report.monte_carlo {
        println!("  revenue {:.4} +- {:.4}", mc.estimate, mc.ci99);
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
    Ok(())
}
