//! Adsorbate mass distributions on a nanobeam.

use crate::quad;

use super::InertialError;

/// One Gaussian mass bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    /// Total mass (kg).
    pub mass: f64,
    /// Center position on the beam (m).
    pub center: f64,
    /// Standard deviation (m).
    pub width: f64,
}

/// Linear mass density mu_1(x) >= 0 on [0, l]: a sum of point masses,
/// Gaussian bumps and an optional tabulated component (linear
/// interpolation between samples).
///
/// Point masses are carried symbolically so weighted integrals treat
/// them exactly instead of pushing deltas through quadrature.
#[derive(Debug, Clone, Default)]
pub struct AdsorbateDistribution {
    point_masses: Vec<(f64, f64)>,
    gaussians: Vec<GaussianBump>,
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl AdsorbateDistribution {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Single point mass `mass` (kg) at `position` (m).
    pub fn point_mass(mass: f64, position: f64) -> Result<Self, InertialError> {
        Self::empty().with_point_mass(mass, position)
    }

    pub fn with_point_mass(mut self, mass: f64, position: f64) -> Result<Self, InertialError> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(InertialError::InvalidAdsorbate {
                reason: format!("point mass must be >= 0 and finite, got {mass}"),
            });
        }
        if !position.is_finite() {
            return Err(InertialError::InvalidAdsorbate {
                reason: "point-mass position must be finite".into(),
            });
        }
        self.point_masses.push((mass, position));
        Ok(self)
    }

    pub fn with_gaussian(mut self, bump: GaussianBump) -> Result<Self, InertialError> {
        if !(bump.mass >= 0.0) || !(bump.width > 0.0) {
            return Err(InertialError::InvalidAdsorbate {
                reason: "Gaussian bump needs mass >= 0 and width > 0".into(),
            });
        }
        self.gaussians.push(bump);
        Ok(self)
    }

    /// Tabulated density samples (positions strictly increasing, values
    /// >= 0); linear interpolation in between, zero outside.
    pub fn with_table(mut self, xs: Vec<f64>, values: Vec<f64>) -> Result<Self, InertialError> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(InertialError::InvalidAdsorbate {
                reason: "table needs >= 2 matching samples".into(),
            });
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(InertialError::InvalidAdsorbate {
                reason: "table positions must be strictly increasing".into(),
            });
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(InertialError::InvalidAdsorbate {
                reason: "table values must be finite and >= 0".into(),
            });
        }
        self.table = Some((xs, values));
        Ok(self)
    }

    pub fn point_masses(&self) -> &[(f64, f64)] {
        &self.point_masses
    }

    /// Smooth part of the density (kg/m) at x; point masses excluded.
    pub fn smooth_density(&self, x: f64) -> f64 {
        let mut mu = 0.0;
        for g in &self.gaussians {
            let z = (x - g.center) / g.width;
            mu += g.mass * (-0.5 * z * z).exp() / (g.width * (2.0 * std::f64::consts::PI).sqrt());
        }
        if let Some((xs, vs)) = &self.table {
            if x >= xs[0] && x <= *xs.last().unwrap() {
                let i = xs.partition_point(|&t| t <= x).min(xs.len() - 1).max(1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let t = (x - x0) / (x1 - x0);
                mu += vs[i - 1] * (1.0 - t) + vs[i] * t;
            }
        }
        mu
    }

    pub fn has_smooth_part(&self) -> bool {
        !self.gaussians.is_empty() || self.table.is_some()
    }

    /// Integral of mu_1(x) f(x) over [0, l]: point masses contribute
    /// m f(x0) analytically (positions outside the beam are ignored),
    /// the smooth part goes through adaptive quadrature.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(
        &self,
        f: F,
        length: f64,
        abs_tol: f64,
        panels: usize,
    ) -> Result<f64, InertialError> {
        let mut total = 0.0;
        for &(m, x0) in &self.point_masses {
            if (0.0..=length).contains(&x0) {
                total += m * f(x0);
            }
        }
        if self.has_smooth_part() {
            total += quad::integrate_subdivided(
                &|x| self.smooth_density(x) * f(x),
                0.0,
                length,
                abs_tol,
                panels,
            )?;
        }
        Ok(total)
    }

    /// Crude upper bound on the smooth-part mass (kg), used only to set
    /// quadrature tolerances.
    pub fn smooth_mass_scale(&self, length: f64) -> f64 {
        let mut scale: f64 = self.gaussians.iter().map(|g| g.mass).sum();
        if let Some((_, vs)) = &self.table {
            let vmax = vs.iter().cloned().fold(0.0, f64::max);
            scale += vmax * length;
        }
        scale
    }

    /// Total adsorbate mass on the beam (kg).
    pub fn total_mass(&self, length: f64) -> Result<f64, InertialError> {
        let tol = 1e-13 * self.smooth_mass_scale(length).max(f64::MIN_POSITIVE);
        self.integrate_weighted(|_| 1.0, length, tol, 8)
    }
}
