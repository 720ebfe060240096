//! Reads fleet data in the CSV layout `entity_id, x1..xp, y` (any column
//! order), checks it, and clusters it at a given λ.
//!
//! ```text
//! cargo run --example load_fleet_csv -- fleet.csv 1.5
//! ```
//!
//! Without arguments a small two-input fleet is parsed from memory.

use fleetnet::fleet_data::read_fleet_csv;
use fleetnet::prelude::*;

const DEMO: &str = "\
y,entity_id,x2,x1
3.0,pump-a,1,1
5.1,pump-a,2,1
6.9,pump-a,2,2
9.0,pump-a,3,2
3.1,pump-b,1,1
4.9,pump-b,2,1
7.1,pump-b,2,2
8.9,pump-b,3,2
1.0,pump-c,1,1
0.1,pump-c,2,1
2.9,pump-c,2,2
2.1,pump-c,3,2
";

fn main() -> fleetnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let fleet = match args.next() {
        Some(path) => load_fleet_csv(path)?,
        None => read_fleet_csv(DEMO.as_bytes())?,
    };
    let lambda: f64 = args.next().map_or(Ok(0.5), |s| s.parse()).map_err(|e| Error::InvalidConfig(format!("lambda: {e}")))?;
    println!(
        "{} entities, {} inputs, {} observations",
        fleet.len(),
        fleet.input_dim(),
        fleet.total_observations()
    );

    let basis = BasisSpec::linear();
    if let Some(issue) = validate_fleet(&fleet, &basis).first() {
        return Err(Error::InvalidFleet(issue.to_string()));
    }
    let network = FleetNetwork::build(&fleet, &basis)?;
    let partition = network.communities(lambda)?;
    let ids = fleet.entity_ids();
    for (id, c) in ids.iter().zip(&partition.assignment) {
        println!("{id:<10} community {c}");
    }
    println!("Q = {:.4}", partition.modularity_q);
    Ok(())
}
