//! Builds the cross-RSE matrix of a fleet, symmetrizes it and shows how the
//! thresholded graph densifies as λ grows.
//!
//! ```text
//! cargo run --example dissimilarity_graph -- [out_dir]
//! ```

use fleetnet::meta_validation::lambda_grid;
use fleetnet::prelude::*;

fn main() -> fleetnet::Result<()> {
    let out = std::env::args().nth(1);
    let scenario = generate_scenario(&ScenarioConfig::new(ScenarioKind::ClearGrouping, 4))?;
    let network = FleetNetwork::build(&scenario.fleet, &BasisSpec::linear())?;

    let r = &network.raw.values;
    let asymmetry = (0..r.nrows())
        .flat_map(|i| (0..r.ncols()).map(move |j| (r[(i, j)] - r[(j, i)]).abs()))
        .fold(0.0, f64::max);
    println!("largest |R[i][j] − R[j][i]| before symmetrizing: {asymmetry:.4}");

    let n = scenario.fleet.len();
    let possible = n * (n - 1) / 2;
    println!("{:>10} {:>7} {:>11} {:>11}", "lambda", "edges", "density", "components");
    for lambda in lambda_grid(&network.dissimilarity, 10) {
        let g = network.graph(lambda);
        let components = fleetnet::community::connected_components(&g).len();
        println!(
            "{lambda:>10.4} {:>7} {:>11.3} {components:>11}",
            g.edge_count(),
            g.edge_count() as f64 / possible as f64
        );
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        network.dissimilarity.save_csv(std::path::Path::new(&dir).join("rprime.csv"))?;
        println!("wrote {dir}/rprime.csv");
    }
    Ok(())
}
