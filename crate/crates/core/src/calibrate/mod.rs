//! Uniaxial-stress calibration of the susceptibility parameters and
//! force inference from ODMR shifts of NVs embedded in cantilevers.

mod fit;
mod force;
mod scenario;

pub use fit::{
    fit_susceptibilities, recovery_trials, FitOptions, FitReport, IntrinsicEstimate,
    RecoveryScenario,
};
pub use force::{infer_force_from_odmr, ForceInference};
pub use scenario::{simulate_uniaxial, ShiftSplitRecord, StressAxis, UniaxialScenario};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },
    #[error("records cover only the [{axis}] axis; the susceptibilities are not jointly identifiable from one axis ({detail})")]
    SingleAxis { axis: String, detail: String },
    #[error("fit is structurally unidentifiable in {params:?} (rank-deficient design)")]
    Unidentifiable { params: Vec<String> },
    #[error("fit did not converge within {iterations} iterations (best chi2 = {best_chi2:.6e})")]
    NoConvergence { best_chi2: f64, iterations: usize },
    #[error("need records for at least {need} pressures per axis, got {got}")]
    TooFewPressures { need: usize, got: usize },
    #[error("force is not invertible: {reason}")]
    NonInvertible { reason: String },
    #[error(transparent)]
    Beam(#[from] crate::beam::BeamError),
    #[error(transparent)]
    Spin(#[from] crate::spin::SpinError),
}
