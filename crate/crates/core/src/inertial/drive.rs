//! Driven response of a perturbed mode and its spin readout.
//!
//! The beam is driven on resonance with the unperturbed mode frequency.
//! An adsorbate rotates part of the response from the out-of-phase
//! (sine) quadrature into in-phase (cosine), and couples other mode
//! shapes into the motion. At an NV site both effects appear as a
//! time-varying resonance shift
//!
//!   delta_f(t) = a_cos cos(2 pi nu t) + a_sin sin(2 pi nu t),
//!   a_cos = 2 Q_n Phi_n (delta_nu_n / nu_n),
//!   a_sin = sum_{m != n} c_nm Phi_m,
//!
//! with the transduction factor Phi_m = A_n a1 E xi_z psi_m''(xi_x).
//! A repeated Hahn echo locked to the drive period integrates one
//! quadrature and rejects the other exactly.

use crate::beam::{BeamSite, ModeBasis};
use crate::spin::SusceptibilityParams;

use super::perturb::ModePerturbation;
use super::InertialError;

/// Default cap on |delta_f(t)| (Hz) for the first-order spin response:
/// 10% of the zero-field splitting.
pub const DEFAULT_LINEAR_READOUT_BOUND: f64 = 0.1 * 2.87e9;

/// Echo alignment relative to the drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoPhase {
    /// Sequence aligned with the drive: accumulates the sine quadrature.
    InPhase,
    /// Sequence leading by a quarter period: accumulates the cosine
    /// quadrature.
    OutOfPhase,
}

/// On-resonance drive of one mode.
#[derive(Debug, Clone, Copy)]
pub struct DriveProtocol {
    /// Driven mode index.
    pub mode: usize,
    /// Unperturbed drive-limit amplitude A_n (m).
    pub amplitude: f64,
    /// Echo alignment.
    pub phase: EchoPhase,
    /// Number of echo periods accumulated.
    pub periods: u32,
    /// Cap on the first-order spin signal (Hz).
    pub linear_readout_bound: f64,
}

impl DriveProtocol {
    pub fn new(mode: usize, amplitude: f64, phase: EchoPhase, periods: u32) -> Self {
        Self {
            mode,
            amplitude,
            phase,
            periods,
            linear_readout_bound: DEFAULT_LINEAR_READOUT_BOUND,
        }
    }
}

/// In-/out-of-phase components of the driven amplitude.
#[derive(Debug, Clone, Copy)]
pub struct DrivenResponse {
    /// In-phase (cosine) component U.
    pub u: f64,
    /// Out-of-phase (sine) component V.
    pub v: f64,
    /// Displacement amplitude at time t (m).
    pub displacement: f64,
    /// First-order in-phase amplitude 2 Q A (delta_nu/nu) (m).
    pub first_order_in_phase: f64,
}

/// Steady-state response of a mode with relative detuning
/// `shift_ratio` = delta_nu/nu and quality factor `q`, driven at the
/// unperturbed frequency with limit amplitude `a_n`:
///
///   U = (s / 2Q) / (s^2 + (1/2Q)^2),  V = (1/2Q)^2 / (s^2 + (1/2Q)^2).
pub fn driven_amplitude(shift_ratio: f64, q: f64, a_n: f64, t: f64, nu: f64) -> DrivenResponse {
    let half_width = 1.0 / (2.0 * q);
    let denom = shift_ratio * shift_ratio + half_width * half_width;
    let u = shift_ratio * half_width / denom;
    let v = half_width * half_width / denom;
    let wt = 2.0 * std::f64::consts::PI * nu * t;
    DrivenResponse {
        u,
        v,
        displacement: a_n * (u * wt.cos() + v * wt.sin()),
        first_order_in_phase: 2.0 * q * a_n * shift_ratio,
    }
}

/// Transduction factor Phi_m(xi) = A_n a1 E xi_z psi_m''(xi_x) (Hz):
/// spin frequency change per unit modal response, at drive amplitude
/// `drive_amplitude` of the interrogated mode.
pub fn transduction_factor(
    site: &BeamSite,
    basis: &ModeBasis,
    mode: usize,
    drive_amplitude: f64,
    params: &SusceptibilityParams,
) -> Result<f64, InertialError> {
    let site = site.validated(basis.geometry())?;
    Ok(drive_amplitude
        * params.a1
        * basis.geometry().youngs_modulus
        * site.z
        * basis.curvature(mode, site.x))
}

/// Quadrature coefficients of the NV frequency signal (Hz).
#[derive(Debug, Clone, Copy)]
pub struct SpinSignal {
    /// Cosine coefficient: 2 Q_n Phi_n delta_nu_n/nu_n.
    pub a_cos: f64,
    /// Sine coefficient: sum over m != n of c_nm Phi_m.
    pub a_sin: f64,
    /// Drive frequency = unperturbed mode frequency (Hz).
    pub nu: f64,
}

/// Evaluate the spin readout coefficients at `site` for the given
/// perturbation and drive.
pub fn spin_signal(
    site: &BeamSite,
    basis: &ModeBasis,
    perturbation: &ModePerturbation,
    drive: &DriveProtocol,
    params: &SusceptibilityParams,
) -> Result<SpinSignal, InertialError> {
    let n = drive.mode;
    let n_modes = perturbation.shift_ratios.len();
    if n >= n_modes || perturbation.couplings.nrows() != n_modes {
        return Err(InertialError::DimensionMismatch {
            reason: format!("drive mode {n} outside the {n_modes}-mode perturbation data"),
        });
    }

    let phi_n = transduction_factor(site, basis, n, drive.amplitude, params)?;
    let q = basis.q_factor(n);
    let a_cos = 2.0 * q * phi_n * perturbation.shift_ratios[n];

    let mut a_sin = 0.0;
    for m in 0..n_modes {
        if m == n {
            continue;
        }
        let phi_m = transduction_factor(site, basis, m, drive.amplitude, params)?;
        a_sin += perturbation.couplings[(n, m)] * phi_m;
    }

    let signal = a_cos.abs() + a_sin.abs();
    if signal > drive.linear_readout_bound {
        return Err(InertialError::LinearReadoutExceeded {
            signal,
            bound: drive.linear_readout_bound,
        });
    }
    Ok(SpinSignal {
        a_cos,
        a_sin,
        nu: basis.frequency(n),
    })
}

/// Quantum phase (rad) accumulated by a repeated Hahn echo locked to the
/// drive period 1/nu, with the pi pulse at half period.
///
/// The phase is the exact piecewise integral of +-2 pi delta_f(t) with
/// the sign flipping at the pi pulse; for a sinusoidal signal each period
/// contributes (4 / nu) times the selected quadrature coefficient, and
/// the rejected quadrature integrates to zero identically.
pub fn echo_phase(signal: &SpinSignal, phase: EchoPhase, periods: u32) -> f64 {
    let period = 1.0 / signal.nu;
    let t0 = match phase {
        EchoPhase::InPhase => 0.0,
        EchoPhase::OutOfPhase => -0.25 * period,
    };
    // Antiderivative of delta_f: F(t) = (a_cos sin(wt) - a_sin cos(wt)) / w.
    let w = 2.0 * std::f64::consts::PI * signal.nu;
    let anti = |t: f64| (signal.a_cos * (w * t).sin() - signal.a_sin * (w * t).cos()) / w;
    let first = anti(t0 + 0.5 * period) - anti(t0);
    let second = anti(t0 + period) - anti(t0 + 0.5 * period);
    2.0 * std::f64::consts::PI * (first - second) * periods as f64
}
