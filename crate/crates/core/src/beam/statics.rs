//! Static Euler-Bernoulli responses: tip-loaded pillars and cantilevers.
//!
//! Sign convention: with compressive stress positive, the bending stress
//! at the base is positive on the side of the cross-section toward which
//! the tip force points (sigma = h F.xi / I).

use nalgebra::Vector2;

use super::{BeamError, BeamGeometry, BeamShape};

/// Default elastic-limit guard for nanoscale devices (N).
pub const DEFAULT_FORCE_LIMIT: f64 = 10e-6;

/// Transverse tip load in cross-section coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceLoad {
    /// Force vector (N) in the cross-section plane.
    pub force: Vector2<f64>,
    /// Elastic-limit guard (N).
    pub limit: f64,
}

impl ForceLoad {
    pub fn new(force: Vector2<f64>) -> Result<Self, BeamError> {
        Self::with_limit(force, DEFAULT_FORCE_LIMIT)
    }

    pub fn with_limit(force: Vector2<f64>, limit: f64) -> Result<Self, BeamError> {
        if force.norm() > limit {
            return Err(BeamError::ElasticLimit {
                force: force.norm(),
                limit,
            });
        }
        Ok(Self { force, limit })
    }
}

/// Tip displacement of a base-clamped, tip-loaded pillar:
/// r_tip = h^3 F / (3 E I), parallel to the force.
pub fn pillar_tip_displacement(
    load: &ForceLoad,
    geom: &BeamGeometry,
) -> Result<Vector2<f64>, BeamError> {
    let h = geom.length;
    let factor = h.powi(3) / (3.0 * geom.youngs_modulus * geom.moment_of_area());
    Ok(load.force * factor)
}

/// Tip compliance |r_tip| / |F| (m/N) of the pillar.
pub fn tip_compliance(geom: &BeamGeometry) -> f64 {
    geom.length.powi(3) / (3.0 * geom.youngs_modulus * geom.moment_of_area())
}

/// Axial bending stress (Pa) at the pillar base, at cross-section
/// position `xi` (m, from the neutral axis): sigma = h (F . xi) / I.
pub fn pillar_base_stress(
    load: &ForceLoad,
    geom: &BeamGeometry,
    xi: Vector2<f64>,
) -> Result<f64, BeamError> {
    let bound = geom.width / 2.0;
    if xi.norm() > bound * (1.0 + 1e-12) {
        return Err(BeamError::OutsideCrossSection {
            offset: xi.norm(),
            bound,
        });
    }
    Ok(geom.length * load.force.dot(&xi) / geom.moment_of_area())
}

/// Deflection (m) of a tip-loaded clamped-free cantilever at axial
/// position x: y(x) = F x^2 (3l - x) / (6 E I).
pub fn cantilever_profile(f_tip: f64, geom: &BeamGeometry, x: f64) -> Result<f64, BeamError> {
    if x < 0.0 || x > geom.length {
        return Err(BeamError::OutsideSpan {
            x,
            length: geom.length,
        });
    }
    let ei = geom.youngs_modulus * geom.moment_of_area();
    Ok(f_tip * x * x * (3.0 * geom.length - x) / (6.0 * ei))
}

/// Bending stress (Pa) in a tip-loaded cantilever at axial position `x`
/// and depth `z` from the neutral plane: sigma = F (l - x) z / I.
pub fn cantilever_stress_at(
    f_tip: f64,
    geom: &BeamGeometry,
    x: f64,
    z: f64,
) -> Result<f64, BeamError> {
    if x < 0.0 || x > geom.length {
        return Err(BeamError::OutsideSpan {
            x,
            length: geom.length,
        });
    }
    let half = match geom.shape {
        BeamShape::CylindricalPillar => geom.width / 2.0,
        _ => geom.thickness / 2.0,
    };
    if z.abs() > half * (1.0 + 1e-12) {
        return Err(BeamError::OutsideCrossSection {
            offset: z.abs(),
            bound: half,
        });
    }
    Ok(f_tip * (geom.length - x) * z / geom.moment_of_area())
}

/// Tip-force estimate recovered from a deflection profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEstimate {
    /// Estimated force (N).
    pub force: f64,
    /// 1-sigma uncertainty from the fit residuals (N).
    pub sigma: f64,
    /// Root-mean-square residual of the fit (m).
    pub rms_residual: f64,
}

/// Least-squares fit of the single force amplitude to measured profile
/// samples (x_i, y_i). The model is linear in F, so the solution is the
/// normal-equation quotient; the uncertainty comes from the residual
/// variance.
pub fn fit_force_from_profile(
    samples: &[(f64, f64)],
    geom: &BeamGeometry,
) -> Result<ForceEstimate, BeamError> {
    if samples.len() < 3 {
        return Err(BeamError::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    let ei = geom.youngs_modulus * geom.moment_of_area();
    let g = |x: f64| x * x * (3.0 * geom.length - x) / (6.0 * ei);

    let mut gg = 0.0;
    let mut gy = 0.0;
    for &(x, y) in samples {
        let gi = g(x);
        gg += gi * gi;
        gy += gi * y;
    }
    if gg == 0.0 {
        return Err(BeamError::RankDeficient);
    }

    let (min_x, max_x) = samples
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let span = max_x - min_x;
    if span < geom.length / 2.0 {
        return Err(BeamError::SpanTooSmall {
            span,
            need: geom.length / 2.0,
        });
    }

    let force = gy / gg;
    let ss: f64 = samples
        .iter()
        .map(|&(x, y)| {
            let r = y - force * g(x);
            r * r
        })
        .sum();
    let dof = (samples.len() - 1) as f64;
    let sigma = (ss / dof / gg).sqrt();
    Ok(ForceEstimate {
        force,
        sigma,
        rms_residual: (ss / samples.len() as f64).sqrt(),
    })
}
