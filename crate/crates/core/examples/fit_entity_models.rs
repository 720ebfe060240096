//! Fits one regression model per entity and prints coefficients and
//! training error. Pass a fleet CSV to use your own data; otherwise a
//! synthetic clear-grouping fleet is used.
//!
//! ```text
//! cargo run --example fit_entity_models -- [fleet.csv] [degree]
//! ```

use fleetnet::prelude::*;

fn main() -> fleetnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let fleet = match args.next() {
        Some(path) => load_fleet_csv(path)?,
        None => generate_scenario(&ScenarioConfig::new(ScenarioKind::ClearGrouping, 1))?.fleet,
    };
    let degree: usize = args.next().map_or(Ok(1), |s| s.parse()).map_err(|e| Error::InvalidConfig(format!("degree: {e}")))?;
    let basis = BasisSpec::new(degree);

    let issues = validate_fleet(&fleet, &basis);
    for issue in &issues {
        eprintln!("warning: {issue}");
    }
    if !issues.is_empty() {
        return Err(Error::InvalidFleet(format!("{} issue(s)", issues.len())));
    }

    println!("{:<10} {:>6} {:>10}  coefficients", "entity", "rows", "rse");
    for (entity, model) in fleet.entities().iter().zip(fit_fleet(&fleet, &basis)?) {
        let coef: Vec<String> = model.coefficients.iter().map(|c| format!("{c:.4}")).collect();
        println!("{:<10} {:>6} {:>10.4}  [{}]", entity.entity_id, entity.len(), model.training_rse, coef.join(", "));
    }
    Ok(())
}
