//! CW-ODMR spectrum synthesis for oriented NV ensembles.
//!
//! The line shape is a Lorentzian dip per resonance with a single
//! linewidth for the whole spectrum; this is a modeling choice, the
//! conventional one for CW spectra. Baseline is 1.

use super::resonance::{
    resonances_secular, stress_to_coupling, MagneticEnvironment, Resonances, SusceptibilityParams,
};
use super::stress::{NvOrientation, StressTensor};
use super::SpinError;

/// Synthesis inputs for one spectrum.
#[derive(Debug, Clone)]
pub struct OdmrRequest {
    /// Orientation families and their population weights.
    pub families: Vec<(NvOrientation, f64)>,
    pub stress: StressTensor,
    pub field: MagneticEnvironment,
    /// Lorentzian FWHM (Hz).
    pub linewidth: f64,
    /// Dip depth per unit weight, in (0, 1].
    pub contrast: f64,
}

/// Synthesized spectrum on a caller-supplied frequency grid.
#[derive(Debug, Clone)]
pub struct OdmrSpectrum {
    /// Grid frequencies (Hz).
    pub frequencies: Vec<f64>,
    /// Normalized intensity (baseline 1, dips below).
    pub intensity: Vec<f64>,
    /// Per-family resonances that generated the dips.
    pub resonances: Vec<(NvOrientation, Resonances)>,
    pub warnings: Vec<String>,
}

/// Evenly spaced frequency grid (Hz).
pub fn frequency_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}

/// Synthesize a spectrum: a sum of Lorentzian dips at every family's
/// resonance pair, depth contrast * weight each.
pub fn synthesize_odmr(
    req: &OdmrRequest,
    params: &SusceptibilityParams,
    grid: &[f64],
) -> Result<OdmrSpectrum, SpinError> {
    if !(req.linewidth > 0.0) {
        return Err(SpinError::InvalidParams {
            reason: "linewidth must be positive".into(),
        });
    }
    if !(req.contrast > 0.0 && req.contrast <= 1.0) {
        return Err(SpinError::InvalidParams {
            reason: "contrast must lie in (0, 1]".into(),
        });
    }
    if grid.len() < 2 {
        return Err(SpinError::InvalidParams {
            reason: "frequency grid needs at least two points".into(),
        });
    }

    let mut warnings = Vec::new();
    let spacing = (grid[grid.len() - 1] - grid[0]).abs() / (grid.len() - 1) as f64;
    if spacing > req.linewidth / 5.0 {
        warnings.push(format!(
            "grid spacing {:.3e} Hz exceeds linewidth/5 = {:.3e} Hz; dips may be undersampled",
            spacing,
            req.linewidth / 5.0
        ));
    }

    let mut resonances = Vec::with_capacity(req.families.len());
    for &(family, _) in &req.families {
        let coupling = stress_to_coupling(&req.stress, params, family);
        let r = resonances_secular(&coupling, req.field.axial_field(family), params);
        resonances.push((family, r));
    }

    let lo = grid[0].min(grid[grid.len() - 1]);
    let hi = grid[0].max(grid[grid.len() - 1]);
    for (fam, r) in &resonances {
        for f in [r.f_minus, r.f_plus] {
            if f < lo || f > hi {
                warnings.push(format!(
                    "family {} resonance at {:.6e} Hz lies outside the grid [{:.6e}, {:.6e}]",
                    fam.index(),
                    f,
                    lo,
                    hi
                ));
            }
        }
    }

    let half = req.linewidth / 2.0;
    let half2 = half * half;
    let intensity = grid
        .iter()
        .map(|&f| {
            let mut dip = 0.0;
            for (&(_, weight), (_, r)) in req.families.iter().zip(resonances.iter()) {
                for center in [r.f_minus, r.f_plus] {
                    let d = f - center;
                    dip += weight * req.contrast * half2 / (d * d + half2);
                }
            }
            1.0 - dip
        })
        .collect();

    Ok(OdmrSpectrum {
        frequencies: grid.to_vec(),
        intensity,
        resonances,
        warnings,
    })
}

/// Indices of strict local minima of the intensity curve deeper than
/// `depth_threshold` below baseline. Convenience for peak-structure tests
/// and reports.
pub fn find_dips(spectrum: &OdmrSpectrum, depth_threshold: f64) -> Vec<usize> {
    let y = &spectrum.intensity;
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] < y[i - 1] && y[i] < y[i + 1] && (1.0 - y[i]) > depth_threshold)
        .collect()
}
