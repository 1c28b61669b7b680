//! Price and value grids, horizontal snapping onto the value grid and
//! vertical rounding of the masses.
use unit_pricing::discretization::{
    discretization_plan, horizontal_discretize, price_grid, snap_prices, total_variation, vertical_round_units,
    DiscretizeParams, ValueGrid, DEFAULT_MAX_GRID_POINTS,
};
use unit_pricing::rational::{format, int, ratio, to_f64};
use unit_pricing::{DiscreteDistribution, Instance, TieBreak};

fn main() -> unit_pricing::Result<()> {
    let eps = ratio(1, 4);
    let grid = price_grid(&int(1), &int(4), &eps, DEFAULT_MAX_GRID_POINTS)?;
    println!("price grid on [1, 4] at eps = 1/4: {} points", grid.len());
    for p in &grid {
        print!("{:.4} ", to_f64(p));
    }
    println!();
    let snapped = snap_prices(&[int(2), ratio(7, 2)], &int(1), &eps)?;
    println!("2 and 7/2 snap to {} and {}", format(&snapped[0]), format(&snapped[1]));

    let plan = discretization_plan(&int(1), &int(2), &DiscretizeParams::practical(&ratio(1, 10), &int(2)));
    println!("uniform(1, 2) at delta = {:.4}: k1 = {}, k2 = {}", plan.delta, plan.k1, plan.k2);

    let item = DiscreteDistribution::from_points([
        (int(1), ratio(1, 3)),
        (ratio(3, 2), ratio(1, 3)),
        (ratio(11, 5), ratio(1, 3)),
    ])?;
    let instance = Instance::discrete(vec![item], TieBreak::LowestIndex)?;
    let vg = ValueGrid::new(&int(1), &ratio(11, 5), &ratio(1, 4), false, DEFAULT_MAX_GRID_POINTS)?;
    let h = horizontal_discretize(&instance, &vg, true)?;
    let moved = h.instance.discrete_items()?[0].clone();
    for (v, m) in moved.iter() {
        println!("  {:.5} carries {}", to_f64(v), format(m));
    }

    let rounded = vertical_round_units(&h.instance, 8)?;
    let r = rounded.discrete_items()?[0].clone();
    println!("masses in eighths: {:?}", r.masses().iter().map(format).collect::<Vec<_>>());
    println!("total variation {}", format(&total_variation(&moved, &r)));
    Ok(())
}
