//! Two items where pricing each item at its own best single-item price is
//! not optimal, checked exactly and by brute force.
use unit_pricing::oracle::{brute_force_optimum, exact_revenue, DEFAULT_BRUTE_CAP};
use unit_pricing::rational::{format, int, ratio};
use unit_pricing::{DiscreteDistribution, Instance, TieBreak};

fn main() -> unit_pricing::Result<()> {
    let v1 = DiscreteDistribution::uniform_over(vec![int(1), int(5)])?;
    let v2 = DiscreteDistribution::uniform_over(vec![int(3), ratio(7, 2)])?;
    let instance = Instance::discrete(vec![v1, v2], TieBreak::LowestIndex)?;

    for prices in [[ratio(9, 2), int(3)], [int(5), ratio(7, 2)], [int(5), int(3)]] {
        let r = exact_revenue(&instance, &prices)?;
        println!("p = ({}, {}): revenue {}", format(&prices[0]), format(&prices[1]), format(&r));
    }

    let support = [int(1), int(3), ratio(7, 2), int(5)];
    let best = brute_force_optimum(&instance, &support, DEFAULT_BRUTE_CAP)?;
    let shown: Vec<String> = best.prices.iter().map(format).collect();
    println!(
        "best over the support: ({}) -> {} after {} vectors",
        shown.join(", "),
        format(&best.revenue),
        best.vectors
    );
    Ok(())
}
