//! Anchor a set of exponential items by the halving tournament, then check
//! the anchor by simulation.
use unit_pricing::anchoring::{beta_mhr, verify_mhr_anchor, DEFAULT_ORACLE_ETA};
use unit_pricing::rational::to_f64;
use unit_pricing::{CdfOracle, Class, Instance, TieBreak};

fn main() -> unit_pricing::Result<()> {
    let items = [0.5, 1.0, 1.0, 2.0, 4.0].iter().map(|&l| CdfOracle::exponential(l)).collect::<Result<Vec<_>, _>>()?;
    let instance = Instance::oracles(items, TieBreak::LowestIndex)?.with_class(Class::Mhr);

    let anchor = beta_mhr(&instance, DEFAULT_ORACLE_ETA)?;
    for round in &anchor.rounds {
        println!("round {}: beta_t = {:.4}, survivors {:?}", round.t, to_f64(&round.beta_t), round.survivors);
    }
    println!("beta = {:.4}", to_f64(&anchor.beta));

    let report = verify_mhr_anchor(&instance, &anchor, 0.1, 100_000, 7)?;
    for c in &report.checks {
        println!(
            "{:<40} estimate {:.4} +- {:.4} vs {:.4}: {}",
            c.name,
            c.estimate,
            c.ci99,
            c.bound,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
