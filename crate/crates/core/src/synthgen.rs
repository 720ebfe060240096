//! Synthetic fleets of noisy lines with known grouping.
//!
//! Every curve is `y = s·x + b + ε` with `x ~ U(x_range)` and
//! `ε ~ N(0, noise_std²)`. The slope law decides whether groups exist:
//!
//! * `NoGrouping`: slopes uniform on an interval, each curve its own label.
//! * `FuzzyGrouping`: slopes from six Gaussian components, std 0.08 against
//!   a spacing of 0.6, so neighbouring groups blur into each other.
//! * `ClearGrouping`: slopes from five components, std 0.03 against a
//!   spacing of 0.75.
//!
//! Draws come from a single `ChaCha8Rng` stream consumed in a fixed order:
//! for each curve its slope, then its `x` values and noise terms point by
//! point.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet_data::{EntityDataset, FleetDataset, Observation};

/// Name of the generator recorded in metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seeded with seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    NoGrouping,
    FuzzyGrouping,
    ClearGrouping,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::NoGrouping,
        ScenarioKind::FuzzyGrouping,
        ScenarioKind::ClearGrouping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::NoGrouping => "none",
            ScenarioKind::FuzzyGrouping => "fuzzy",
            ScenarioKind::ClearGrouping => "clear",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "no" | "no_grouping" => Ok(ScenarioKind::NoGrouping),
            "fuzzy" | "fuzzy_grouping" => Ok(ScenarioKind::FuzzyGrouping),
            "clear" | "clear_grouping" => Ok(ScenarioKind::ClearGrouping),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario kind `{other}` (expected none, fuzzy or clear)"
            ))),
        }
    }
}

/// How slopes are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SlopeLaw {
    Uniform { low: f64, high: f64 },
    /// Equal-weight Gaussian mixture. With `balanced`, curve `i` belongs to
    /// component `i mod K` so every component gets `N/K` curves (±1);
    /// otherwise the component is drawn uniformly at random per curve.
    Mixture { means: Vec<f64>, std: f64, balanced: bool },
}

/// `n` means equally spaced on `[low, high]`.
pub fn equally_spaced(n: usize, low: f64, high: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![(low + high) / 2.0],
        _ => (0..n)
            .map(|i| low + (high - low) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub n_curves: usize,
    pub points_per_curve: usize,
    pub x_range: (f64, f64),
    pub noise_std: f64,
    pub intercept: f64,
    pub seed: u64,
    pub slopes: SlopeLaw,
}

impl ScenarioConfig {
    /// Defaults for `kind`: 30 curves of 100 points, `x ∈ [0, 100]`, unit
    /// noise variance, zero intercept, and slopes on `[0.5, 3.5]`.
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        let slopes = match kind {
            ScenarioKind::NoGrouping => SlopeLaw::Uniform { low: 0.5, high: 3.5 },
            ScenarioKind::FuzzyGrouping => SlopeLaw::Mixture {
                means: equally_spaced(6, 0.5, 3.5),
                std: 0.08,
                balanced: true,
            },
            ScenarioKind::ClearGrouping => SlopeLaw::Mixture {
                means: equally_spaced(5, 0.5, 3.5),
                std: 0.03,
                balanced: true,
            },
        };
        Self {
            kind,
            n_curves: 30,
            points_per_curve: 100,
            x_range: (0.0, 100.0),
            noise_std: 1.0,
            intercept: 0.0,
            seed,
            slopes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_curves < 2 {
            return bad("n_curves must be at least 2");
        }
        if self.points_per_curve < 1 {
            return bad("points_per_curve must be at least 1");
        }
        let (lo, hi) = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("x_range must be a finite interval with low < high");
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad("noise_std must be finite and non-negative");
        }
        if !self.intercept.is_finite() {
            return bad("intercept must be finite");
        }
        match &self.slopes {
            SlopeLaw::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad("uniform slope interval must satisfy low < high");
                }
            }
            SlopeLaw::Mixture { means, std, .. } => {
                if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
                    return bad("mixture needs at least one finite mean");
                }
                if !(std.is_finite() && *std >= 0.0) {
                    return bad("mixture std must be finite and non-negative");
                }
            }
        }
        Ok(())
    }
}

/// A generated fleet with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFleet {
    pub fleet: FleetDataset,
    /// Mixture component per curve; a unique index per curve for
    /// `NoGrouping`.
    pub true_labels: Vec<usize>,
    pub slopes: Vec<f64>,
    pub config: ScenarioConfig,
}

#[derive(Serialize)]
struct ScenarioMetadata<'a> {
    config: &'a ScenarioConfig,
    rng: &'static str,
    entity_ids: Vec<String>,
    true_labels: &'a [usize],
    slopes: &'a [f64],
}

impl LabeledFleet {
    pub fn write_labels_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["entity_id", "true_label"])?;
        for (e, label) in self.fleet.entities().iter().zip(&self.true_labels) {
            w.write_record([e.entity_id.as_str(), &label.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata_json(&self) -> Result<String> {
        let meta = ScenarioMetadata {
            config: &self.config,
            rng: RNG_ALGORITHM,
            entity_ids: self.fleet.entity_ids(),
            true_labels: &self.true_labels,
            slopes: &self.slopes,
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// Writes `fleet.csv`, `labels.csv` and `meta.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.fleet.save_csv(dir.join("fleet.csv"))?;
        let labels = std::fs::File::create(dir.join("labels.csv"))?;
        self.write_labels_csv(std::io::BufWriter::new(labels))?;
        std::fs::write(dir.join("meta.json"), self.metadata_json()? + "\n")?;
        Ok(())
    }
}

/// Reads a `entity_id,true_label` file, returning labels in file order.
pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<(String, usize)>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NoSuchFile(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(1).unwrap_or("");
        let label = raw.trim().parse::<usize>().map_err(|_| Error::NonNumericCell {
            row: i + 1,
            column: "true_label".into(),
            value: raw.into(),
        })?;
        out.push((rec.get(0).unwrap_or("").to_string(), label));
    }
    Ok(out)
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<LabeledFleet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x_dist = Uniform::new_inclusive(config.x_range.0, config.x_range.1)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let width = (config.n_curves - 1).to_string().len().max(2);

    let mut entities = Vec::with_capacity(config.n_curves);
    let mut labels = Vec::with_capacity(config.n_curves);
    let mut slopes = Vec::with_capacity(config.n_curves);
    for i in 0..config.n_curves {
        let (slope, label) = match &config.slopes {
            SlopeLaw::Uniform { low, high } => (rng.random_range(*low..*high), i),
            SlopeLaw::Mixture { means, std, balanced } => {
                let c = if *balanced {
                    i % means.len()
                } else {
                    rng.random_range(0..means.len())
                };
                let component =
                    Normal::new(means[c], *std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                (component.sample(&mut rng), c)
            }
        };
        let observations = (0..config.points_per_curve)
            .map(|_| {
                let x = x_dist.sample(&mut rng);
                let eps = noise.sample(&mut rng);
                Observation::new(vec![x], slope * x + config.intercept + eps)
            })
            .collect();
        entities.push(EntityDataset::new(format!("c{i:0width$}"), observations));
        labels.push(label);
        slopes.push(slope);
    }
    Ok(LabeledFleet {
        fleet: FleetDataset::new(entities)?,
        true_labels: labels,
        slopes,
        config: config.clone(),
    })
}
