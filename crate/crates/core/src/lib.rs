//! Optimistic algorithms for logistic bandits, their confidence sets, and a
//! simulation harness for checking the accompanying bounds empirically.

pub mod config;
pub mod confidence;
pub mod environment;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod link;
pub mod martingale;
pub mod mle;
pub mod policies;
pub mod projection;
pub mod rng;

pub use config::{ConfigError, ExperimentConfig};
pub use confidence::{AdmissibleSet, ConfidenceSet, RadiusSchedule};
pub use environment::{ArmSetKind, ArmSetSpec, LogisticBanditInstance};
pub use estimation::{EstimationError, Interaction, InteractionHistory};
pub use experiments::{ExperimentError, RunOutput};
pub use linalg::{Matrix, Vector};
pub use link::LinkConstants;
pub use mle::{fit_mle, EstimatorSnapshot};
pub use policies::{Policy, PolicyKind};
