//! Discretize a small discrete instance and search prices with the dynamic
//! program, exactly and with rounded winning distributions; compare with
//! brute force over the same grid.
use unit_pricing::discretization::{full_discretize_with, DiscretizeParams, DEFAULT_MAX_GRID_POINTS};
use unit_pricing::dp::{run_dp, DpConfig};
use unit_pricing::oracle::{brute_force_optimum, DEFAULT_BRUTE_CAP};
use unit_pricing::rational::{int, ratio, to_f64};
use unit_pricing::Rational;
use unit_pricing::{DiscreteDistribution, Instance, TieBreak};

fn approx(xs: &[Rational]) -> Vec<f64> {
    xs.iter().map(to_f64).collect()
}

fn main() -> unit_pricing::Result<()> {
    let items = vec![
        DiscreteDistribution::uniform_over(vec![int(1), int(2), int(4)])?,
        DiscreteDistribution::uniform_over(vec![int(2), int(3)])?,
        DiscreteDistribution::from_points([(int(1), ratio(3, 4)), (int(5), ratio(1, 4))])?,
    ];
    let instance = Instance::discrete(items, TieBreak::LowestIndex)?;
    let params = DiscretizeParams {
        delta: ratio(1, 8),
        price_eps: ratio(1, 3),
        allow_inadmissible_delta: true,
        compress: true,
        max_grid_points: DEFAULT_MAX_GRID_POINTS,
    };
    let ri = full_discretize_with(&instance, &params)?;
    println!("{} values, {} prices", ri.values.len(), ri.prices.len());

    for config in [DpConfig::exact(), DpConfig::default()] {
        let res = run_dp(&ri, instance.tie_break, &config)?;
        let states: Vec<usize> = res.layers.iter().map(|l| l.states).collect();
        println!(
            "{:?}: prices {:?} predicted {:.6} (M = {:?}, states per layer {:?})",
            res.mode,
            approx(&res.prices),
            to_f64(&res.predicted_revenue),
            res.m,
            states
        );
    }

    let brute = brute_force_optimum(&ri.instance, &ri.prices, DEFAULT_BRUTE_CAP)?;
    println!("brute force: {:?} -> {:.6}", approx(&brute.prices), to_f64(&brute.revenue));
    Ok(())
}
