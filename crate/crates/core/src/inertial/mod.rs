//! Inertial detection and imaging of adsorbates on nanobeams: mode
//! perturbations, driven response, spin readout, mass moments and
//! mass-distribution reconstruction.
//!
//! Integral conventions: mode shapes obey (1/l) int psi_n psi_m dx =
//! delta_nm. First-order mass loading then gives
//!
//!   delta_nu_n / nu_n = -(1 / 2 m_0) int mu_1(x) psi_n^2(x) dx,
//!   c_nm = [nu_n^2 / (nu_m^2 - nu_n^2)] (1 / m_0) int mu_1 psi_m psi_n dx,
//!
//! both verified against a finite-element eigensolve of the mass-loaded
//! beam. The factor 1/2 in the frequency shift is the Rayleigh-quotient
//! factor (nu scales as the square root of the mass ratio); the moment
//! and reconstruction formulas carry the matching factor so the chain is
//! algebraically consistent.

mod adsorbate;
mod drive;
mod imaging;
mod perturb;
mod sensing;

pub use adsorbate::{AdsorbateDistribution, GaussianBump};
pub use drive::{
    driven_amplitude, echo_phase, spin_signal, transduction_factor, DriveProtocol, DrivenResponse,
    EchoPhase, SpinSignal, DEFAULT_LINEAR_READOUT_BOUND,
};
pub use imaging::{
    estimate_mass_moments, fit_alpha_coeffs, fit_beta_coeffs, imaging_resolution, interior_grid,
    reconstruct_mass_distribution, AlphaFit, BetaFit, MassReconstruction,
};
pub use perturb::{coupling_coeffs, frequency_shift, mass_ratio, ModePerturbation};
pub use sensing::{
    mass_sensitivity, required_drive_amplitude, solve_couplings_multi_nv, CouplingSolve,
    MassSensitivity,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InertialError {
    #[error("invalid adsorbate distribution: {reason}")]
    InvalidAdsorbate { reason: String },
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] crate::quad::QuadError),
    #[error("modes {n} and {m} are near degenerate (relative gap {gap:.3e})")]
    NearDegenerate { n: usize, m: usize, gap: f64 },
    #[error("signal {signal:.3e} Hz exceeds the linear-readout bound {bound:.3e} Hz")]
    LinearReadoutExceeded { signal: f64, bound: f64 },
    #[error("Gram matrix condition number {cond:.3e} exceeds 1e12")]
    IllConditionedGram { cond: f64 },
    #[error("position x' = {x:.3e} m outside the open beam interior (0, {length:.3e})")]
    OutsideInterior { x: f64, length: f64 },
    #[error("need at least {need} modes, got {got}")]
    TooFewModes { need: usize, got: usize },
    #[error("NV placement has zero transduction (xi_z = 0): not a sensing site")]
    NonSensingPlacement,
    #[error("coupling solve is rank deficient; null direction over modes {null_direction:?}")]
    RankDeficientCouplings { null_direction: Vec<f64> },
    #[error("dimension mismatch: {reason}")]
    DimensionMismatch { reason: String },
    #[error(transparent)]
    Beam(#[from] crate::beam::BeamError),
}
