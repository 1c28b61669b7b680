//! Anchor heavy-tailed regular items at a point of their distributions and
//! check the anchor by simulation.
use unit_pricing::anchoring::{alpha_regular, verify_regular_anchor};
use unit_pricing::distributions::{ANCHOR_C1, ANCHOR_C2};
use unit_pricing::rational::{from_f64, to_f64};
use unit_pricing::{CdfOracle, Class, Instance, TieBreak};

fn main() -> unit_pricing::Result<()> {
    let items = vec![CdfOracle::power_tail(2.0)?, CdfOracle::power_tail(3.0)?, CdfOracle::uniform(1.0, 3.0)?];
    let instance = Instance::oracles(items, TieBreak::LowestIndex)?.with_class(Class::Regular);

    let anchor = alpha_regular(&instance, &from_f64(ANCHOR_C1)?, &from_f64(ANCHOR_C2)?)?;
    for (x, r) in anchor.anchor_points.iter().zip(&anchor.anchor_revenues) {
        println!("anchor point {:.4}, revenue there {:.4}", to_f64(x), to_f64(r));
    }
    println!("alpha = {:.4}", to_f64(&anchor.alpha));

    let report = verify_regular_anchor(&instance, &anchor, 0.25, 50_000, 3)?;
    for c in &report.checks {
        let tag = if c.informational {
            "info"
        } else if c.pass {
            "ok"
        } else {
            "FAIL"
        };
        println!("{:<40} estimate {:.4} +- {:.4} vs {:.4}: {tag}", c.name, c.estimate, c.ci99, c.bound);
    }
    println!("passed: {}", report.passed());
    Ok(())
}
