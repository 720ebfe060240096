//! Scoring a grouping by meta-validation and sweeping the graph threshold.
//!
//! For a partition of the fleet, the datasets of each group are merged into a
//! meta-dataset, split into training and validation rows, and a meta-model
//! is fitted on the training rows. With `e_i` the validation RMSE of group `i`
//! and `|G_i|` its number of entities, the average meta-validation accuracy is
//!
//! ```text
//! η = 100 − Σ_i |G_i| · e_i / N
//! ```
//!
//! `η` mixes a percentage with an RMSE in the units of `y`; it is only
//! meaningful when those errors are much smaller than 100.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{detect_communities, CommunityPartition};
use crate::dissimilarity::{threshold_graph, DissimilarityMatrix};
use crate::error::{Error, Result};
use crate::fleet_data::{FleetDataset, Observation};
use crate::regression::{fit_observations, BasisSpec};

/// Offset added to every λ grid point so that ties fall inside the edge set.
pub const LAMBDA_NUDGE: f64 = 1e-12;

/// Merged data of one detected group.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub group_index: usize,
    /// Positions of the member entities in the fleet.
    pub member_indices: Vec<usize>,
    pub member_entity_ids: Vec<String>,
    /// Concatenation of the members' observations, in member order.
    pub observations: Vec<Observation>,
    /// Slice of `observations` owned by each member.
    pub member_ranges: Vec<Range<usize>>,
}

impl MetaDataset {
    /// `|G_i|`: the number of entities, not observations.
    pub fn unit_count(&self) -> usize {
        self.member_indices.len()
    }
}

pub fn merge_groups(fleet: &FleetDataset, partition: &CommunityPartition) -> Result<Vec<MetaDataset>> {
    if partition.len() != fleet.len() {
        return Err(Error::LengthMismatch {
            expected: fleet.len(),
            got: partition.len(),
        });
    }
    let mut metas: Vec<MetaDataset> = (0..partition.k)
        .map(|g| MetaDataset {
            group_index: g,
            member_indices: Vec::new(),
            member_entity_ids: Vec::new(),
            observations: Vec::new(),
            member_ranges: Vec::new(),
        })
        .collect();
    for (i, (entity, &g)) in fleet.entities().iter().zip(&partition.assignment).enumerate() {
        let meta = metas.get_mut(g).ok_or_else(|| {
            Error::InvalidConfig(format!("community index {g} out of range for k = {}", partition.k))
        })?;
        let start = meta.observations.len();
        meta.observations.extend(entity.observations.iter().cloned());
        meta.member_ranges.push(start..meta.observations.len());
        meta.member_indices.push(i);
        meta.member_entity_ids.push(entity.entity_id.clone());
    }
    Ok(metas)
}

/// Rows of one entity that go to training, for `total` rows.
fn training_rows(total: usize, fraction: f64) -> usize {
    if total < 2 {
        return total;
    }
    let n = (fraction * total as f64 + 1e-9).floor() as usize;
    n.clamp(1, total - 1)
}

fn member_rng(seed: u64, fleet_index: usize) -> ChaCha8Rng {
    // splitmix64 finalizer of the entity position, so every entity draws from
    // its own stream independent of how the fleet is grouped.
    let mut z = (fleet_index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(seed ^ z)
}

/// Training and validation rows of a meta-dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainValidationSplit {
    pub training: Vec<Observation>,
    pub validation: Vec<Observation>,
}

/// Stratified holdout: each member contributes `floor(fraction·T_i)` rows to
/// training, clamped so that both sides get at least one row when
/// `T_i ≥ 2`; single-row members go wholly to training. The rows chosen for
/// an entity depend only on the seed and the entity's fleet position.
pub fn split_train_validation(meta: &MetaDataset, fraction: f64, seed: u64) -> Result<TrainValidationSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("split fraction {fraction} not in (0, 1)")));
    }
    let mut training = Vec::new();
    let mut validation = Vec::new();
    for (&fleet_index, range) in meta.member_indices.iter().zip(&meta.member_ranges) {
        let rows = &meta.observations[range.clone()];
        let n_train = training_rows(rows.len(), fraction);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut member_rng(seed, fleet_index));
        let mut in_training = vec![false; rows.len()];
        for &r in &order[..n_train] {
            in_training[r] = true;
        }
        for (obs, train) in rows.iter().zip(in_training) {
            if train {
                training.push(obs.clone());
            } else {
                validation.push(obs.clone());
            }
        }
    }
    if validation.is_empty() {
        return Err(Error::TooFewObservations(format!(
            "group {} has no validation rows",
            meta.group_index
        )));
    }
    Ok(TrainValidationSplit { training, validation })
}

/// Validation error of one group's meta-model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub group_index: usize,
    pub unit_count: usize,
    pub validation_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaAccuracy {
    pub eta: f64,
    pub group_errors: Vec<GroupError>,
}

/// `η = 100 − Σ |G_i| e_i / N` from per-group errors.
pub fn eta_from_errors(group_errors: &[GroupError], n_entities: usize) -> f64 {
    let weighted: f64 = group_errors
        .iter()
        .map(|g| g.unit_count as f64 * g.validation_rmse)
        .sum();
    100.0 - weighted / n_entities as f64
}

/// Fits one meta-model per group and returns the average meta-validation
/// accuracy `η`.
pub fn meta_accuracy(
    fleet: &FleetDataset,
    partition: &CommunityPartition,
    basis: &BasisSpec,
    fraction: f64,
    seed: u64,
) -> Result<MetaAccuracy> {
    let metas = merge_groups(fleet, partition)?;
    let mut group_errors = Vec::with_capacity(metas.len());
    for meta in &metas {
        let split = split_train_validation(meta, fraction, seed).map_err(|e| match e {
            Error::TooFewObservations(_) => Error::EmptyValidation(meta.group_index),
            other => other,
        })?;
        let model = fit_observations(&split.training, basis)?;
        let validation_rmse = model.rse_on(&split.validation)?;
        group_errors.push(GroupError {
            group_index: meta.group_index,
            unit_count: meta.unit_count(),
            validation_rmse,
        });
    }
    let eta = eta_from_errors(&group_errors, fleet.len());
    if eta < 0.0 {
        warn!("mean weighted validation RMSE exceeds 100; η = {eta:.3} is negative");
    }
    Ok(MetaAccuracy { eta, group_errors })
}

/// Settings of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Number of quantile steps of the off-diagonal dissimilarities.
    pub quantiles: usize,
    /// Training share of each entity's rows.
    pub fraction: f64,
    pub seed: u64,
    /// Meta-model basis; the entity basis when `None`.
    pub meta_basis: Option<BasisSpec>,
    /// Explicit λ values replacing the quantile grid.
    pub lambdas: Option<Vec<f64>>,
}

pub const DEFAULT_QUANTILES: usize = 40;
pub const DEFAULT_SPLIT: f64 = 0.7;
pub const DEFAULT_SEED: u64 = 2014;

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            quantiles: DEFAULT_QUANTILES,
            fraction: DEFAULT_SPLIT,
            seed: DEFAULT_SEED,
            meta_basis: None,
            lambdas: None,
        }
    }
}

/// Quantile grid over the off-diagonal entries of `R′`: for `j = 0..=q` the
/// order statistic at rank `round(j (M − 1) / q)`, nudged up by
/// [`LAMBDA_NUDGE`], sorted and deduplicated.
pub fn lambda_grid(dis: &DissimilarityMatrix, quantiles: usize) -> Vec<f64> {
    let mut values = dis.off_diagonal();
    if values.is_empty() || quantiles == 0 {
        return Vec::new();
    }
    values.sort_by(f64::total_cmp);
    let last = values.len() - 1;
    let mut grid: Vec<f64> = (0..=quantiles)
        .map(|j| {
            let rank = (j as f64 * last as f64 / quantiles as f64).round() as usize;
            values[rank.min(last)] + LAMBDA_NUDGE
        })
        .collect();
    grid.dedup();
    grid
}

/// One threshold of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    pub k: usize,
    pub partition: CommunityPartition,
    /// `None` when the record failed.
    pub eta: Option<f64>,
    pub group_errors: Vec<GroupError>,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by λ.
    pub records: Vec<SweepRecord>,
    /// For each community count, the index into `records` of the successful
    /// record with the largest η (the smallest λ among ties).
    pub best_per_k: BTreeMap<usize, usize>,
}

impl SweepResult {
    /// The accuracy plot: `(k, best η)` sorted by `k`.
    pub fn accuracy_curve(&self) -> Vec<(usize, f64)> {
        self.best_per_k
            .iter()
            .filter_map(|(&k, &i)| self.records[i].eta.map(|eta| (k, eta)))
            .collect()
    }

    pub fn best_record(&self, k: usize) -> Option<&SweepRecord> {
        self.best_per_k.get(&k).map(|&i| &self.records[i])
    }

    pub fn any_failed(&self) -> bool {
        self.records.iter().any(SweepRecord::failed)
    }

    /// `lambda,k,eta,failed` rows; `eta` is empty for failed records.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lambda", "k", "eta", "failed"])?;
        for r in &self.records {
            w.write_record([
                r.lambda.to_string(),
                r.k.to_string(),
                r.eta.map(|e| e.to_string()).unwrap_or_default(),
                r.failed().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Plot-ready `k,eta` rows of [`SweepResult::accuracy_curve`].
    pub fn write_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curve_csv(&self.accuracy_curve(), writer)
    }
}

pub fn write_curve_csv<W: Write>(curve: &[(usize, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "eta"])?;
    for (k, eta) in curve {
        w.write_record([k.to_string(), eta.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NoSuchFile(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut curve = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |c: usize, name: &str| {
            rec.get(c).unwrap_or("").trim().to_string().parse::<f64>().map_err(|_| Error::NonNumericCell {
                row: i + 1,
                column: name.into(),
                value: rec.get(c).unwrap_or("").into(),
            })
        };
        curve.push((cell(0, "k")? as usize, cell(1, "eta")?));
    }
    Ok(curve)
}

/// Builds `A(λ)` for every grid value, detects communities, and scores each
/// partition with [`meta_accuracy`]. Records are evaluated in parallel; their
/// order and content do not depend on scheduling.
pub fn lambda_sweep(
    fleet: &FleetDataset,
    dis: &DissimilarityMatrix,
    basis: &BasisSpec,
    config: &SweepConfig,
) -> Result<SweepResult> {
    if dis.len() != fleet.len() {
        return Err(Error::LengthMismatch {
            expected: fleet.len(),
            got: dis.len(),
        });
    }
    let lambdas = match &config.lambdas {
        Some(l) => {
            let mut l = l.clone();
            l.sort_by(f64::total_cmp);
            l.dedup();
            l
        }
        None => lambda_grid(dis, config.quantiles),
    };
    let meta_basis = config.meta_basis.unwrap_or(*basis);

    let records = lambdas
        .par_iter()
        .map(|&lambda| -> Result<SweepRecord> {
            let graph = threshold_graph(dis, lambda);
            let partition = detect_communities(&graph)?;
            let k = partition.k;
            Ok(match meta_accuracy(fleet, &partition, &meta_basis, config.fraction, config.seed) {
                Ok(acc) => SweepRecord {
                    lambda,
                    k,
                    partition,
                    eta: Some(acc.eta),
                    group_errors: acc.group_errors,
                    failure: None,
                },
                Err(e) => {
                    warn!("sweep record at λ = {lambda} failed: {e}");
                    SweepRecord {
                        lambda,
                        k,
                        partition,
                        eta: None,
                        group_errors: Vec::new(),
                        failure: Some(e.to_string()),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_per_k: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let Some(eta) = r.eta else { continue };
        match best_per_k.get(&r.k) {
            Some(&j) if records[j].eta.is_some_and(|best| best >= eta) => {}
            _ => {
                best_per_k.insert(r.k, i);
            }
        }
    }
    Ok(SweepResult { records, best_per_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet_data::EntityDataset;

    fn fleet(sizes: &[usize]) -> FleetDataset {
        let entities = sizes
            .iter()
            .enumerate()
            .map(|(e, &t)| {
                let pairs: Vec<_> = (0..t).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
                EntityDataset::from_pairs(format!("e{e}"), &pairs)
            })
            .collect();
        FleetDataset::new(entities).unwrap()
    }

    #[test]
    fn merge_counts_observations_and_units() {
        let f = fleet(&[3, 4, 5]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0, 1])).unwrap();
        assert_eq!(metas.len(), 2);
        assert_eq!(metas[0].observations.len(), 7);
        assert_eq!(metas[0].unit_count(), 2);
        assert_eq!(metas[1].observations.len(), 5);
        assert_eq!(metas[1].unit_count(), 1);
    }

    #[test]
    fn merge_single_group_and_singletons() {
        let f = fleet(&[3, 4, 5]);
        let one = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0, 0])).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].unit_count(), 3);
        assert_eq!(one[0].observations.len(), 12);
        let all = merge_groups(&f, &CommunityPartition::from_labels(&[0, 1, 2])).unwrap();
        for (meta, entity) in all.iter().zip(f.entities()) {
            assert_eq!(meta.observations, entity.observations);
        }
    }

    #[test]
    fn merge_rejects_wrong_length() {
        let f = fleet(&[3, 4]);
        assert!(matches!(
            merge_groups(&f, &CommunityPartition::from_labels(&[0, 0, 0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn split_ten_rows() {
        let f = fleet(&[10, 2]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 1])).unwrap();
        let s = split_train_validation(&metas[0], 0.7, 1).unwrap();
        assert_eq!((s.training.len(), s.validation.len()), (7, 3));
        assert_eq!(s, split_train_validation(&metas[0], 0.7, 1).unwrap());
    }

    #[test]
    fn split_min_one_each_side() {
        let f = fleet(&[2, 2]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0])).unwrap();
        let s = split_train_validation(&metas[0], 0.7, 3).unwrap();
        assert_eq!((s.training.len(), s.validation.len()), (2, 2));
        let s = split_train_validation(&metas[0], 0.01, 3).unwrap();
        assert_eq!((s.training.len(), s.validation.len()), (2, 2));
    }

    #[test]
    fn split_single_row_entities() {
        let f = fleet(&[1, 1]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0])).unwrap();
        assert!(matches!(
            split_train_validation(&metas[0], 0.7, 0),
            Err(Error::TooFewObservations(_))
        ));
        let f = fleet(&[1, 3]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0])).unwrap();
        let s = split_train_validation(&metas[0], 0.5, 0).unwrap();
        assert_eq!((s.training.len(), s.validation.len()), (2, 2));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let f = fleet(&[4, 4]);
        let metas = merge_groups(&f, &CommunityPartition::from_labels(&[0, 0])).unwrap();
        assert!(split_train_validation(&metas[0], 1.0, 0).is_err());
        assert!(split_train_validation(&metas[0], 0.0, 0).is_err());
    }

    #[test]
    fn eta_arithmetic() {
        let errs = [
            GroupError {
                group_index: 0,
                unit_count: 1,
                validation_rmse: 1.0,
            },
            GroupError {
                group_index: 1,
                unit_count: 1,
                validation_rmse: 1.0,
            },
        ];
        assert_eq!(eta_from_errors(&errs, 2), 99.0);
    }

    #[test]
    fn noise_free_single_line_is_perfect() {
        let f = fleet(&[6, 8, 10]);
        let acc = meta_accuracy(&f, &CommunityPartition::from_labels(&[0, 0, 0]), &BasisSpec::linear(), 0.7, 9)
            .unwrap();
        assert!((acc.eta - 100.0).abs() < 1e-9, "{}", acc.eta);
    }

    #[test]
    fn underdetermined_group_fails() {
        let f = fleet(&[2, 2]);
        let err = meta_accuracy(&f, &CommunityPartition::from_labels(&[0, 1]), &BasisSpec::linear(), 0.7, 0)
            .unwrap_err();
        assert!(matches!(err, Error::Underdetermined { .. }), "{err}");
    }

    #[test]
    fn grid_is_sorted_and_unique() {
        let dis = DissimilarityMatrix {
            values: nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0, 2.0, 0.0]),
            entity_ids: vec!["a".into(), "b".into(), "c".into()],
        };
        let grid = lambda_grid(&dis, 40);
        assert_eq!(grid, vec![1.0 + LAMBDA_NUDGE, 2.0 + LAMBDA_NUDGE]);
    }
}
