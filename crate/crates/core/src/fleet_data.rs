//! Fleet data model and CSV ingestion.
//!
//! A fleet is a set of entities, each carrying its own ordered list of
//! observations `(x, y)` with `x ∈ R^p`. Entities may have different numbers
//! of observations, but they all share the input dimension `p`.
//!
//! The on-disk format is a UTF-8 CSV whose header names the columns
//! `entity_id`, `x1` … `xp` and `y` in any order. Rows of one entity need not
//! be contiguous; their relative order is preserved.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regression::{self, BasisSpec};

/// One observation: the operating conditions `x` and the measured output `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

/// Historical dataset of a single entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityDataset {
    pub entity_id: String,
    pub observations: Vec<Observation>,
}

impl EntityDataset {
    pub fn new(entity_id: impl Into<String>, observations: Vec<Observation>) -> Self {
        Self {
            entity_id: entity_id.into(),
            observations,
        }
    }

    /// Builds a single-input dataset from `(x, y)` pairs.
    pub fn from_pairs(entity_id: impl Into<String>, pairs: &[(f64, f64)]) -> Self {
        let observations = pairs
            .iter()
            .map(|&(x, y)| Observation::new(vec![x], y))
            .collect();
        Self::new(entity_id, observations)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// The whole fleet. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetDataset {
    entities: Vec<EntityDataset>,
    input_dim: usize,
}

impl FleetDataset {
    /// Checks the structural invariants: at least two entities, unique ids,
    /// every entity non-empty and every observation of the same dimension.
    ///
    /// Finiteness is not checked here; see [`validate_fleet`].
    pub fn new(entities: Vec<EntityDataset>) -> Result<Self> {
        if entities.len() < 2 {
            return Err(Error::SingleEntity(entities.len()));
        }
        let mut seen = HashSet::new();
        for e in &entities {
            if !seen.insert(e.entity_id.as_str()) {
                return Err(Error::InvalidFleet(format!(
                    "duplicate entity id `{}`",
                    e.entity_id
                )));
            }
            if e.is_empty() {
                return Err(Error::InvalidFleet(format!(
                    "entity `{}` has no observations",
                    e.entity_id
                )));
            }
        }
        let input_dim = entities[0].observations[0].x.len();
        if input_dim == 0 {
            return Err(Error::InvalidFleet("input dimension is zero".into()));
        }
        for e in &entities {
            for obs in &e.observations {
                if obs.x.len() != input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: input_dim,
                        got: obs.x.len(),
                    });
                }
            }
        }
        Ok(Self {
            entities,
            input_dim,
        })
    }

    pub fn entities(&self) -> &[EntityDataset] {
        &self.entities
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of entities `N`.
    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity_ids(&self) -> Vec<String> {
        self.entities.iter().map(|e| e.entity_id.clone()).collect()
    }

    pub fn total_observations(&self) -> usize {
        self.entities.iter().map(EntityDataset::len).sum()
    }

    /// Writes the fleet in the CSV format accepted by [`load_fleet_csv`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["entity_id".to_string()];
        header.extend((1..=self.input_dim).map(|j| format!("x{j}")));
        header.push("y".into());
        w.write_record(&header)?;
        for e in &self.entities {
            for obs in &e.observations {
                let mut rec = Vec::with_capacity(self.input_dim + 2);
                rec.push(e.entity_id.clone());
                rec.extend(obs.x.iter().map(|v| v.to_string()));
                rec.push(obs.y.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Loads a fleet from a CSV file.
pub fn load_fleet_csv(path: impl AsRef<Path>) -> Result<FleetDataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NoSuchFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_fleet_csv(std::io::BufReader::new(file))
}

/// Parses a fleet from any CSV source.
pub fn read_fleet_csv<R: Read>(reader: R) -> Result<FleetDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile);
    }
    let position = |name: &str| headers.iter().position(|h| h.trim() == name);

    let id_col = position("entity_id").ok_or_else(|| Error::MissingColumn("entity_id".into()))?;
    let y_col = position("y").ok_or_else(|| Error::MissingColumn("y".into()))?;

    let p = headers
        .iter()
        .filter_map(|h| h.trim().strip_prefix('x'))
        .filter_map(|s| s.parse::<usize>().ok())
        .max()
        .unwrap_or(0);
    if p == 0 {
        return Err(Error::MissingColumn("x1".into()));
    }
    let x_cols = (1..=p)
        .map(|j| {
            let name = format!("x{j}");
            position(&name).ok_or(Error::MissingColumn(name))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<Observation>> = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumericCell {
                    row,
                    column: headers[col].to_string(),
                    value: raw.to_string(),
                }),
            }
        };
        let id = record.get(id_col).unwrap_or("").to_string();
        let x = x_cols.iter().map(|&c| cell(c)).collect::<Result<Vec<_>>>()?;
        let y = cell(y_col)?;
        let entry = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        entry.push(Observation::new(x, y));
    }

    if order.is_empty() {
        return Err(Error::EmptyFile);
    }
    let entities = order
        .into_iter()
        .map(|id| {
            let obs = rows.remove(&id).unwrap_or_default();
            EntityDataset::new(id, obs)
        })
        .collect();
    FleetDataset::new(entities)
}

/// A problem found by [`validate_fleet`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FleetIssue {
    /// Fewer observations than basis coefficients.
    Unfittable {
        entity_id: String,
        observations: usize,
        coefficients: usize,
    },
    /// Enough rows, but the design matrix is not of full column rank
    /// (typically repeated `x` values).
    RankDeficient { entity_id: String },
    /// Observation `row` (0-based within the entity) holds a NaN or infinity.
    NonFinite { entity_id: String, row: usize },
}

impl fmt::Display for FleetIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FleetIssue::Unfittable {
                entity_id,
                observations,
                coefficients,
            } => write!(
                f,
                "entity `{entity_id}` is unfittable: {observations} observations < {coefficients} coefficients"
            ),
            FleetIssue::RankDeficient { entity_id } => {
                write!(f, "entity `{entity_id}` has a rank-deficient design matrix")
            }
            FleetIssue::NonFinite { entity_id, row } => {
                write!(f, "entity `{entity_id}` has a non-finite value in row {row}")
            }
        }
    }
}

/// Reports every entity that cannot be fitted with `basis`.
pub fn validate_fleet(fleet: &FleetDataset, basis: &BasisSpec) -> Vec<FleetIssue> {
    let m = basis.n_coefficients(fleet.input_dim());
    let mut issues = Vec::new();
    for e in fleet.entities() {
        let mut finite = true;
        for (row, obs) in e.observations.iter().enumerate() {
            if !obs.is_finite() {
                finite = false;
                issues.push(FleetIssue::NonFinite {
                    entity_id: e.entity_id.clone(),
                    row,
                });
            }
        }
        if e.len() < m {
            issues.push(FleetIssue::Unfittable {
                entity_id: e.entity_id.clone(),
                observations: e.len(),
                coefficients: m,
            });
        } else if finite && !regression::has_full_column_rank(&e.observations, basis) {
            issues.push(FleetIssue::RankDeficient {
                entity_id: e.entity_id.clone(),
            });
        }
    }
    issues
}
