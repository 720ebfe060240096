//! Grouping the entities of a fleet by behavior.
//!
//! Each entity's history is summarized by a least-squares regression model.
//! Testing every model on every other entity's data gives a matrix of
//! residual standard errors, which, after symmetrization and thresholding at
//! a level `λ`, becomes an unweighted graph of the fleet. Communities of that
//! graph, found by recursive leading-eigenvector bisection of the modularity
//! matrix, are the candidate groups. Sweeping `λ` and scoring each grouping
//! with merged-group validation error yields an accuracy curve whose elbow
//! selects the number of groups.
//!
//! ```no_run
//! use fleetnet::prelude::*;
//!
//! let scenario = generate_scenario(&ScenarioConfig::new(ScenarioKind::ClearGrouping, 7))?;
//! let analysis = analyze(
//!     &scenario.fleet,
//!     &BasisSpec::linear(),
//!     &SweepConfig::default(),
//!     &ElbowThresholds::default(),
//! )?;
//! println!("{:?} at k = {:?}", analysis.elbow.verdict, analysis.elbow.k_star);
//! # Ok::<(), fleetnet::Error>(())
//! ```

pub mod cli;
pub mod community;
pub mod dissimilarity;
pub mod elbow;
pub mod error;
pub mod evaluation;
pub mod fleet_data;
pub mod meta_validation;
pub mod pipeline;
pub mod regression;
pub mod synthgen;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::community::{detect_communities, modularity, modularity_matrix, CommunityPartition};
    pub use crate::dissimilarity::{cross_rse_matrix, symmetrize, threshold_graph, AdjacencyGraph, DissimilarityMatrix};
    pub use crate::elbow::{find_elbow, ElbowReport, ElbowThresholds, Verdict};
    pub use crate::evaluation::adjusted_rand_index;
    pub use crate::fleet_data::{load_fleet_csv, validate_fleet, EntityDataset, FleetDataset, Observation};
    pub use crate::meta_validation::{lambda_sweep, meta_accuracy, SweepConfig, SweepResult};
    pub use crate::pipeline::{analyze, fit_fleet, Analysis, FleetNetwork};
    pub use crate::regression::{fit_entity_model, rse, BasisSpec, RegressionModel};
    pub use crate::synthgen::{generate_scenario, LabeledFleet, ScenarioConfig, ScenarioKind};
    pub use crate::Error;
}
