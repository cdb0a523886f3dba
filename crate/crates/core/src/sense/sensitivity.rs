//! Photon-shot-noise force sensitivity of a single nanopillar sensor.

use crate::beam::{tip_compliance, BeamGeometry};
use crate::spin::{ResponseBranch, SusceptibilityParams};

use super::SenseError;

/// Optical-resolution threshold (m) above which the tip displacement
/// would be optically detectable, violating the spin-readout assumption.
pub const DEFAULT_OPTICAL_RESOLUTION: f64 = 10e-9;

/// Readout and timing parameters of the quantum sensing sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    /// Combined contrast/photon-rate readout factor (dimensionless).
    pub readout_factor: f64,
    /// Longest DC (Ramsey) shot time, capped by T2* (s).
    pub t_dc_max: f64,
    /// Longest AC (Hahn-echo) shot time, capped by T2 (s).
    pub t_ac_max: f64,
    /// Shortest practical shot period (s), set by the microwave pulses.
    pub min_shot_period: f64,
    /// Total measurement averaging time (s).
    pub averaging_time: f64,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self {
            readout_factor: 0.01,
            t_dc_max: 10e-6,
            t_ac_max: 100e-6,
            min_shot_period: 10e-9,
            averaging_time: 1.0,
        }
    }
}

impl MeasurementModel {
    pub fn validate(&self) -> Result<(), SenseError> {
        if !(self.readout_factor > 0.0 && self.readout_factor <= 1.0) {
            return Err(SenseError::InvalidModel {
                reason: format!("readout factor {} outside (0, 1]", self.readout_factor),
            });
        }
        for (name, v) in [
            ("t_dc_max", self.t_dc_max),
            ("t_ac_max", self.t_ac_max),
            ("min_shot_period", self.min_shot_period),
            ("averaging_time", self.averaging_time),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SenseError::InvalidModel {
                    reason: format!("{name} must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementMode {
    Dc,
    Ac,
}

/// Frequency-per-force responsivity (Hz/N) of a pillar with its NV a
/// distance `xi_offset` (m) from the neutral axis at the base plane,
/// for a force aligned with that offset.
///
/// `depth` (m) raises the NV above the base plane and degrades the
/// responsivity linearly with the remaining moment arm.
pub fn pillar_responsivity(
    geom: &BeamGeometry,
    xi_offset: f64,
    depth: f64,
    params: &SusceptibilityParams,
    branch: ResponseBranch,
) -> Result<f64, SenseError> {
    if xi_offset == 0.0 {
        return Err(SenseError::NeutralAxis);
    }
    let bound = geom.width / 2.0;
    if xi_offset.abs() > bound * (1.0 + 1e-12) {
        return Err(SenseError::Beam(
            crate::beam::BeamError::OutsideCrossSection {
                offset: xi_offset.abs(),
                bound,
            },
        ));
    }
    if depth < 0.0 || depth >= geom.length {
        return Err(SenseError::InvalidModel {
            reason: format!("NV depth {depth} outside [0, pillar height)"),
        });
    }
    let coeff = branch.coefficient(params);
    Ok(coeff * (geom.length - depth) * xi_offset.abs() / geom.moment_of_area())
}

/// Shot-noise-limited force sensitivity (N Hz^-1/2):
/// eta = (2 pi K (d delta_f / dF) sqrt(T))^-1 with T the DC or AC cap.
pub fn shot_noise_sensitivity(
    responsivity: f64,
    model: &MeasurementModel,
    mode: MeasurementMode,
) -> Result<f64, SenseError> {
    model.validate()?;
    if !(responsivity > 0.0) {
        return Err(SenseError::NonPositiveResponsivity {
            value: responsivity,
        });
    }
    let t = match mode {
        MeasurementMode::Dc => model.t_dc_max,
        MeasurementMode::Ac => model.t_ac_max,
    };
    Ok(1.0 / (2.0 * std::f64::consts::PI * model.readout_factor * responsivity * t.sqrt()))
}

/// AC sensing band (f_lo, f_hi) = (1 / T_ac_max, 1 / min shot period).
pub fn ac_band(model: &MeasurementModel) -> Result<(f64, f64), SenseError> {
    model.validate()?;
    if model.t_ac_max <= model.min_shot_period {
        return Err(SenseError::EmptyAcBand {
            t_max: model.t_ac_max,
            t_min: model.min_shot_period,
        });
    }
    Ok((1.0 / model.t_ac_max, 1.0 / model.min_shot_period))
}

/// Transverse field gradient (T/m) at which the spin-magnetic response of
/// a tip NV equals the spin-mechanical response of a base NV:
/// |grad Bz| = 3 E a1 (w/2) / (gamma_e h^2).
///
/// The ratio of the two linear responses is force independent, so the
/// crossover depends only on the geometry and material constants.
pub fn gradient_crossover(geom: &BeamGeometry, params: &SusceptibilityParams) -> f64 {
    3.0 * geom.youngs_modulus * params.a1 * (geom.width / 2.0)
        / (params.gamma_e * geom.length * geom.length)
}

/// Crossover gradient over a (w, h) grid, for contour plotting.
/// Returns (w, h, gradient) triples in row-major h-then-w order.
pub fn gradient_crossover_grid(
    params: &SusceptibilityParams,
    w_range: (f64, f64),
    h_range: (f64, f64),
    nw: usize,
    nh: usize,
) -> Result<Vec<(f64, f64, f64)>, SenseError> {
    if nw < 2 || nh < 2 || w_range.0 <= 0.0 || h_range.0 <= 0.0 {
        return Err(SenseError::InvalidModel {
            reason: "contour grid needs nw, nh >= 2 and positive ranges".into(),
        });
    }
    // Log-spaced axes, matching how the crossover spans decades.
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        let (lo, hi) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    };
    let ws = axis(w_range.0, w_range.1, nw);
    let hs = axis(h_range.0, h_range.1, nh);
    let mut out = Vec::with_capacity(nw * nh);
    for &h in &hs {
        for &w in &ws {
            let geom = BeamGeometry::cylindrical_pillar(w, h).map_err(SenseError::Beam)?;
            out.push((w, h, gradient_crossover(&geom, params)));
        }
    }
    Ok(out)
}

/// Full single-pillar sensitivity summary.
#[derive(Debug, Clone)]
pub struct SensitivityResult {
    /// d delta_f / dF (Hz/N).
    pub responsivity: f64,
    /// DC / AC sensitivities (N Hz^-1/2).
    pub eta_dc: f64,
    pub eta_ac: f64,
    /// Minimum detectable force after the configured averaging time (N).
    pub f_min_dc: f64,
    pub f_min_ac: f64,
    /// AC sensing band (Hz, Hz).
    pub ac_band: (f64, f64),
    /// Tip compliance (m/N).
    pub tip_compliance: f64,
    /// Tip displacement at the DC minimum detectable force (m).
    pub r_tip_at_f_min: f64,
    /// Crossover field gradient (T/m).
    pub gradient_crossover: f64,
    pub warnings: Vec<String>,
}

/// Evaluate the whole sensitivity chain for one pillar design.
pub fn sensitivity_report(
    geom: &BeamGeometry,
    xi_offset: f64,
    nv_depth: f64,
    params: &SusceptibilityParams,
    branch: ResponseBranch,
    model: &MeasurementModel,
    optical_resolution: f64,
) -> Result<SensitivityResult, SenseError> {
    let responsivity = pillar_responsivity(geom, xi_offset, nv_depth, params, branch)?;
    let eta_dc = shot_noise_sensitivity(responsivity, model, MeasurementMode::Dc)?;
    let eta_ac = shot_noise_sensitivity(responsivity, model, MeasurementMode::Ac)?;
    let sqrt_tm = model.averaging_time.sqrt();
    let f_min_dc = eta_dc / sqrt_tm;
    let f_min_ac = eta_ac / sqrt_tm;
    let band = ac_band(model)?;
    let compliance = tip_compliance(geom);
    let r_tip = compliance * f_min_dc;

    let mut warnings = Vec::new();
    if let Some(w) = geom.slenderness_warning() {
        warnings.push(w);
    }
    if r_tip > optical_resolution {
        warnings.push(format!(
            "tip displacement {r_tip:.3e} m at F_min exceeds the optical resolution threshold {optical_resolution:.3e} m"
        ));
    }

    Ok(SensitivityResult {
        responsivity,
        eta_dc,
        eta_ac,
        f_min_dc,
        f_min_ac,
        ac_band: band,
        tip_compliance: compliance,
        r_tip_at_f_min: r_tip,
        gradient_crossover: gradient_crossover(geom, params),
        warnings,
    })
}
