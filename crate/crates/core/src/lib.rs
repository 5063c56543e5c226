//! Evidential occupancy grids built from simulated sonar and laser scans, with
//! conflict-based indicators that flag when a sensor is misreading its
//! environment.
//!
//! The pipeline: [`simworld`] generates run logs, [`gridmap`] folds them into
//! Dempster and Smets belief grids while tracking per-cell conflict,
//! [`indicators`] turns the conflict history into suspect maps and scores, and
//! [`eval`] / [`harness`] compare those against map error.

pub mod error;
pub mod eval;
pub mod evidence;
pub mod gridmap;
pub mod harness;
pub mod image;
pub mod indicators;
pub mod sensor_model;
pub mod simworld;

pub use error::{EvalError, EvidenceError, GridError, IndicatorError, ModelError, SimError};
pub use evidence::{combine_dempster, combine_smets, conflict_k, weight_of_conflict, BeliefMass, ConflictObservation};
pub use gridmap::{error_image, error_score, rasterize_truth, update_grid, CellStats, EvidenceGrid, GridSpec, TruthGrid};
pub use indicators::{conflict_map, conflict_score, enumerate_configs, IndicatorConfig, IndicatorKind};
pub use sensor_model::{Pose, RangeReading, Scan, SensorKind, SensorModelParams};
pub use simworld::{generate_run, AnomalyParams, Environment, Hallway, RunLog, Scenario};
