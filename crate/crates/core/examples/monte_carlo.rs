//! Exact revenue against a seeded Monte-Carlo estimate, and a simulated
//! revenue for oracle items where no exact value exists.
use unit_pricing::oracle::{exact_revenue, monte_carlo_revenue};
use unit_pricing::rational::{int, ratio, to_f64};
use unit_pricing::{CdfOracle, DiscreteDistribution, Instance, TieBreak};

fn main() -> unit_pricing::Result<()> {
    let items = vec![
        DiscreteDistribution::uniform_over(vec![int(1), int(5)])?,
        DiscreteDistribution::uniform_over(vec![int(3), ratio(7, 2)])?,
    ];
    let instance = Instance::discrete(items, TieBreak::LowestIndex)?;
    let prices = [ratio(9, 2), int(3)];
    let exact = exact_revenue(&instance, &prices)?;
    let mc = monte_carlo_revenue(&instance, &prices, 200_000, 42)?;
    println!(
        "exact {:.5}, simulated {:.5} +- {:.5}, covered: {}",
        to_f64(&exact),
        mc.estimate,
        mc.ci99,
        mc.contains(to_f64(&exact))
    );

    let oracles =
        Instance::oracles(vec![CdfOracle::exponential(1.0)?, CdfOracle::uniform(0.0, 2.0)?], TieBreak::LowestIndex)?;
    for p in [ratio(1, 2), int(1), ratio(3, 2)] {
        let mc = monte_carlo_revenue(&oracles, &[p.clone(), p.clone()], 200_000, 42)?;
        println!("both at {:.2}: {:.5} +- {:.5}", to_f64(&p), mc.estimate, mc.ci99);
    }
    Ok(())
}
