//! The full pipeline: sweep λ, score every grouping by meta-validation
//! accuracy, and pick the number of groups at the elbow of the curve.
//!
//! ```text
//! cargo run --release --example accuracy_sweep -- [none|fuzzy|clear] [seed]
//! ```

use fleetnet::prelude::*;

fn main() -> fleetnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ScenarioKind = args.next().as_deref().unwrap_or("clear").parse()?;
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse()).map_err(|e| Error::InvalidConfig(format!("seed: {e}")))?;

    let scenario = generate_scenario(&ScenarioConfig::new(kind, seed))?;
    let analysis = analyze(
        &scenario.fleet,
        &BasisSpec::linear(),
        &SweepConfig::default(),
        &ElbowThresholds::default(),
    )?;

    println!("{} λ values, {} distinct community counts", analysis.sweep.records.len(), analysis.sweep.best_per_k.len());
    for (k, eta) in analysis.sweep.accuracy_curve() {
        let bar = "#".repeat((eta.max(0.0) / 2.0) as usize);
        println!("k = {k:>2}  η = {eta:>7.3}  {bar}");
    }
    let e = &analysis.elbow;
    println!("\nverdict: {} (score {:.3}, k* = {:?})", e.verdict, e.curvature_score, e.k_star);
    if let Some(p) = analysis.chosen_partition() {
        println!("ARI of the chosen partition: {:.3}", adjusted_rand_index(&p.assignment, &scenario.true_labels));
        for g in analysis.chosen_groups() {
            println!("  group {}: {}", g.community_index, g.entity_ids.join(" "));
        }
    }
    Ok(())
}
