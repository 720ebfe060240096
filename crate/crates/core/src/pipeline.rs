//! End-to-end wiring of the grouping pipeline.

use serde::Serialize;

use crate::community::{detect_communities, CommunityPartition};
use crate::dissimilarity::{cross_rse_matrix, symmetrize, threshold_graph, AdjacencyGraph, DissimilarityMatrix, RawCrossMatrix};
use crate::elbow::{find_elbow, ElbowReport, ElbowThresholds};
use crate::error::Result;
use crate::fleet_data::FleetDataset;
use crate::meta_validation::{lambda_sweep, SweepConfig, SweepResult};
use crate::regression::{fit_entity_model, BasisSpec, RegressionModel};

/// Fits one model per entity, in fleet order.
pub fn fit_fleet(fleet: &FleetDataset, basis: &BasisSpec) -> Result<Vec<RegressionModel>> {
    fleet
        .entities()
        .iter()
        .map(|e| fit_entity_model(e, basis))
        .collect()
}

/// Entity models with their raw and symmetrized cross-RSE matrices.
#[derive(Debug, Clone)]
pub struct FleetNetwork {
    pub models: Vec<RegressionModel>,
    pub raw: RawCrossMatrix,
    pub dissimilarity: DissimilarityMatrix,
}

impl FleetNetwork {
    pub fn build(fleet: &FleetDataset, basis: &BasisSpec) -> Result<Self> {
        let models = fit_fleet(fleet, basis)?;
        let raw = cross_rse_matrix(&models, fleet)?;
        let dissimilarity = symmetrize(&raw);
        Ok(Self {
            models,
            raw,
            dissimilarity,
        })
    }

    pub fn graph(&self, lambda: f64) -> AdjacencyGraph {
        threshold_graph(&self.dissimilarity, lambda)
    }

    pub fn communities(&self, lambda: f64) -> Result<CommunityPartition> {
        detect_communities(&self.graph(lambda))
    }
}

/// Membership of one group of the chosen partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMembers {
    pub community_index: usize,
    pub entity_ids: Vec<String>,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub network: FleetNetwork,
    pub sweep: SweepResult,
    pub elbow: ElbowReport,
}

impl Analysis {
    /// The best-η partition at the elbow's community count, if any.
    pub fn chosen_partition(&self) -> Option<&CommunityPartition> {
        self.elbow
            .k_star
            .and_then(|k| self.sweep.best_record(k))
            .map(|r| &r.partition)
    }

    pub fn chosen_groups(&self) -> Vec<GroupMembers> {
        let ids = &self.network.dissimilarity.entity_ids;
        self.chosen_partition()
            .map(|p| {
                p.groups()
                    .into_iter()
                    .enumerate()
                    .map(|(c, members)| GroupMembers {
                        community_index: c,
                        entity_ids: members.into_iter().map(|v| ids[v].clone()).collect(),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Fits, builds the network, sweeps λ and locates the elbow.
pub fn analyze(
    fleet: &FleetDataset,
    basis: &BasisSpec,
    sweep_config: &SweepConfig,
    thresholds: &ElbowThresholds,
) -> Result<Analysis> {
    let network = FleetNetwork::build(fleet, basis)?;
    let sweep = lambda_sweep(fleet, &network.dissimilarity, basis, sweep_config)?;
    let elbow = find_elbow(&sweep, thresholds)?;
    Ok(Analysis { network, sweep, elbow })
}
