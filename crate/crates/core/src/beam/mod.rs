//! Euler-Bernoulli mechanics for diamond pillars, cantilevers and
//! doubly clamped nanobeams.

mod modes;
mod statics;

pub use modes::{clamped_clamped_modes, clamped_clamped_modes_with_q, ModeBasis};
pub use statics::{
    cantilever_profile, cantilever_stress_at, fit_force_from_profile, pillar_base_stress,
    pillar_tip_displacement, tip_compliance, ForceEstimate, ForceLoad,
};

use thiserror::Error;

/// Young's modulus of diamond (Pa).
pub const DIAMOND_YOUNGS_MODULUS: f64 = 1.220e12;
/// Density of diamond (kg/m^3).
pub const DIAMOND_DENSITY: f64 = 3515.0;
/// Slenderness ratio below which Euler-Bernoulli theory degrades.
pub const SLENDERNESS_GUARD: f64 = 3.0;

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("invalid geometry: {reason}")]
    InvalidGeometry { reason: String },
    #[error("operation requires shape {expected:?}, got {got:?}")]
    WrongShape { expected: BeamShape, got: BeamShape },
    #[error("force magnitude {force:.3e} N exceeds the elastic-limit guard {limit:.3e} N")]
    ElasticLimit { force: f64, limit: f64 },
    #[error("cross-section position |xi| = {offset:.3e} m outside radius {bound:.3e} m")]
    OutsideCrossSection { offset: f64, bound: f64 },
    #[error("position x = {x:.3e} m outside beam span [0, {length:.3e}] m")]
    OutsideSpan { x: f64, length: f64 },
    #[error("profile samples are rank deficient (no bending signal)")]
    RankDeficient,
    #[error("profile samples span {span:.3e} m, need at least half the beam ({need:.3e} m)")]
    SpanTooSmall { span: f64, need: f64 },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("mode root search failed: {0}")]
    RootFind(#[from] crate::quad::QuadError),
    #[error("mode count {n} not supported (characteristic root would overflow)")]
    TooManyModes { n: usize },
    #[error("amplitude list length {got} does not match mode count {expected}")]
    AmplitudeMismatch { got: usize, expected: usize },
}

/// Device cross-section and axis type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamShape {
    CylindricalPillar,
    RectangularCantilever,
    DoublyClampedBeam,
}

/// Beam geometry and elastic constants, SI units.
///
/// `length` is the pillar height or beam length; `thickness` is the
/// cross-section dimension in the bending direction (equals `width` for
/// cylinders).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub shape: BeamShape,
    pub width: f64,
    pub thickness: f64,
    pub length: f64,
    pub youngs_modulus: f64,
    pub density: f64,
}

impl BeamGeometry {
    pub fn cylindrical_pillar(width: f64, height: f64) -> Result<Self, BeamError> {
        Self::checked(BeamShape::CylindricalPillar, width, width, height)
    }

    pub fn rectangular_cantilever(
        width: f64,
        thickness: f64,
        length: f64,
    ) -> Result<Self, BeamError> {
        Self::checked(BeamShape::RectangularCantilever, width, thickness, length)
    }

    pub fn doubly_clamped_beam(width: f64, thickness: f64, length: f64) -> Result<Self, BeamError> {
        Self::checked(BeamShape::DoublyClampedBeam, width, thickness, length)
    }

    fn checked(
        shape: BeamShape,
        width: f64,
        thickness: f64,
        length: f64,
    ) -> Result<Self, BeamError> {
        for (name, v) in [
            ("width", width),
            ("thickness", thickness),
            ("length", length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BeamError::InvalidGeometry {
                    reason: format!("{name} must be positive and finite, got {v}"),
                });
            }
        }
        Ok(Self {
            shape,
            width,
            thickness,
            length,
            youngs_modulus: DIAMOND_YOUNGS_MODULUS,
            density: DIAMOND_DENSITY,
        })
    }

    pub fn with_elastic(mut self, youngs_modulus: f64, density: f64) -> Result<Self, BeamError> {
        if !(youngs_modulus > 0.0) || !(density > 0.0) {
            return Err(BeamError::InvalidGeometry {
                reason: "Young's modulus and density must be positive".into(),
            });
        }
        self.youngs_modulus = youngs_modulus;
        self.density = density;
        Ok(self)
    }

    /// Slenderness warning when length / transverse size < 3, where shear
    /// and rotary-inertia corrections start to matter.
    pub fn slenderness_warning(&self) -> Option<String> {
        let transverse = self.width.max(self.thickness);
        let ratio = self.length / transverse;
        (ratio < SLENDERNESS_GUARD).then(|| {
            format!(
                "aspect ratio {ratio:.2} < {SLENDERNESS_GUARD}: Euler-Bernoulli slenderness assumption is marginal"
            )
        })
    }

    /// Second moment of area (m^4): pi w^4 / 64 for cylinders,
    /// w t^3 / 12 for rectangles bending through the thickness.
    pub fn moment_of_area(&self) -> f64 {
        match self.shape {
            BeamShape::CylindricalPillar => std::f64::consts::PI * self.width.powi(4) / 64.0,
            BeamShape::RectangularCantilever | BeamShape::DoublyClampedBeam => {
                self.width * self.thickness.powi(3) / 12.0
            }
        }
    }

    /// Cross-section area (m^2).
    pub fn cross_section_area(&self) -> f64 {
        match self.shape {
            BeamShape::CylindricalPillar => std::f64::consts::PI * self.width * self.width / 4.0,
            BeamShape::RectangularCantilever | BeamShape::DoublyClampedBeam => {
                self.width * self.thickness
            }
        }
    }

    /// Total beam mass (kg).
    pub fn mass(&self) -> f64 {
        self.density * self.cross_section_area() * self.length
    }
}

/// Position of an NV center inside a beam: axial coordinate `x` from the
/// clamp and depth `z` from the neutral plane (|z| <= thickness/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSite {
    pub x: f64,
    pub z: f64,
}

impl BeamSite {
    pub fn validated(self, geom: &BeamGeometry) -> Result<Self, BeamError> {
        if self.x < 0.0 || self.x > geom.length {
            return Err(BeamError::OutsideSpan {
                x: self.x,
                length: geom.length,
            });
        }
        let half = geom.thickness / 2.0;
        if self.z.abs() > half {
            return Err(BeamError::OutsideCrossSection {
                offset: self.z.abs(),
                bound: half,
            });
        }
        Ok(self)
    }
}
