//! NV ground-state spin physics: stress coupling, resonances, spectra.

mod odmr;
mod resonance;
mod stress;

pub use odmr::{find_dips, frequency_grid, synthesize_odmr, OdmrRequest, OdmrSpectrum};
pub use resonance::{
    build_hamiltonian, resonances_exact, resonances_secular, stress_to_coupling,
    MagneticEnvironment, Resonances, ResponseBranch, SpinMechCoupling, SusceptibilityParams,
};
pub use stress::{NvOrientation, StressTensor, MAX_STRESS_PA};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("invalid stress component {component}: {value} (must be finite, |value| <= 100 GPa)")]
    InvalidStress { component: &'static str, value: f64 },
    #[error("invalid spin parameters: {reason}")]
    InvalidParams { reason: String },
    #[error("invalid magnetic environment: {reason}")]
    InvalidField { reason: String },
    #[error("orientation family index {index} outside 1..=4")]
    InvalidFamily { index: usize },
    #[error("state labeling ambiguous: best |0> character {zero_character:.3} < 0.9")]
    DegenerateLabeling { zero_character: f64 },
}
