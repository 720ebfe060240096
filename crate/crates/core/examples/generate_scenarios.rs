//! Writes the three synthetic scenarios to disk and summarizes their slopes.
//!
//! ```text
//! cargo run --example generate_scenarios -- [out_dir] [seed]
//! ```

use fleetnet::prelude::*;

fn main() -> fleetnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "scenarios".into());
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse()).map_err(|e| Error::InvalidConfig(format!("seed: {e}")))?;

    for kind in ScenarioKind::ALL {
        let scenario = generate_scenario(&ScenarioConfig::new(kind, seed))?;
        let dir = std::path::Path::new(&out).join(kind.name());
        scenario.save(&dir)?;

        let mut slopes = scenario.slopes.clone();
        slopes.sort_by(f64::total_cmp);
        let labels = scenario.true_labels.iter().max().map_or(0, |m| m + 1);
        println!(
            "{:<6} {} entities, {} labels, slopes {:.2}..{:.2} -> {}",
            kind.name(),
            scenario.fleet.len(),
            labels,
            slopes[0],
            slopes[slopes.len() - 1],
            dir.display()
        );
    }
    Ok(())
}
