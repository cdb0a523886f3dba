//! Stress tensors in the diamond unit-cell frame and the NV orientation
//! families that sample them.
//!
//! Sign convention: compressive stress is positive, so hydrostatic
//! pressure P > 0 produces a positive resonance shift with a1 > 0.

use nalgebra::{Matrix3, Vector3};

use super::SpinError;
use crate::units::GPA;

/// Sanity bound on any stress component; diamond fails well below this.
pub const MAX_STRESS_PA: f64 = 100.0 * GPA;

/// Symmetric stress tensor in the cubic (XYZ) crystal frame, in pascals.
///
/// Only the six independent components are stored, so the tensor is
/// symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub yz: f64,
    pub zx: f64,
    pub xy: f64,
}

impl StressTensor {
    /// Build from SI components (Pa), checking finiteness and the
    /// 100 GPa sanity bound.
    pub fn new(xx: f64, yy: f64, zz: f64, yz: f64, zx: f64, xy: f64) -> Result<Self, SpinError> {
        let t = Self {
            xx,
            yy,
            zz,
            yz,
            zx,
            xy,
        };
        for (name, v) in t.components() {
            if !v.is_finite() {
                return Err(SpinError::InvalidStress {
                    component: name,
                    value: v,
                });
            }
            if v.abs() > MAX_STRESS_PA {
                return Err(SpinError::InvalidStress {
                    component: name,
                    value: v,
                });
            }
        }
        Ok(t)
    }

    /// Build from components in GPa.
    pub fn from_gpa(
        xx: f64,
        yy: f64,
        zz: f64,
        yz: f64,
        zx: f64,
        xy: f64,
    ) -> Result<Self, SpinError> {
        Self::new(xx * GPA, yy * GPA, zz * GPA, yz * GPA, zx * GPA, xy * GPA)
    }

    pub fn zero() -> Self {
        Self {
            xx: 0.0,
            yy: 0.0,
            zz: 0.0,
            yz: 0.0,
            zx: 0.0,
            xy: 0.0,
        }
    }

    /// Hydrostatic pressure `p` (Pa, compressive positive).
    pub fn hydrostatic(p: f64) -> Result<Self, SpinError> {
        Self::new(p, p, p, 0.0, 0.0, 0.0)
    }

    /// Uniaxial stress of magnitude `p` (Pa) along direction `dir`
    /// (crystal frame, need not be normalized).
    pub fn uniaxial(dir: Vector3<f64>, p: f64) -> Result<Self, SpinError> {
        let n = dir.normalize();
        Self::new(
            p * n.x * n.x,
            p * n.y * n.y,
            p * n.z * n.z,
            p * n.y * n.z,
            p * n.z * n.x,
            p * n.x * n.y,
        )
    }

    fn components(&self) -> [(&'static str, f64); 6] {
        [
            ("xx", self.xx),
            ("yy", self.yy),
            ("zz", self.zz),
            ("yz", self.yz),
            ("zx", self.zx),
            ("xy", self.xy),
        ]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Sum of the three independent off-diagonal components.
    pub fn off_diagonal_sum(&self) -> f64 {
        self.yz + self.zx + self.xy
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.zx, self.xy, self.yy, self.yz, self.zx, self.yz, self.zz,
        )
    }

    /// Tensor transform under the rotation `r`: sigma' = R sigma R^T.
    pub fn transformed(&self, r: &Matrix3<f64>) -> Self {
        let m = r * self.to_matrix() * r.transpose();
        Self {
            xx: m[(0, 0)],
            yy: m[(1, 1)],
            zz: m[(2, 2)],
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            zx: 0.5 * (m[(2, 0)] + m[(0, 2)]),
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
        }
    }
}

/// One of the four <111> orientation families of the NV center.
///
/// The axes are: family 1 = [111], family 2 = [-1-11], family 3 = [-11-1],
/// family 4 = [1-1-1]. Families 2-4 are carried onto the reference [111]
/// frame by the two-fold rotations about Z, Y and X respectively; those
/// rotations are lattice symmetry operations of diamond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NvOrientation {
    Family1,
    Family2,
    Family3,
    Family4,
}

impl NvOrientation {
    pub fn all() -> [NvOrientation; 4] {
        [
            NvOrientation::Family1,
            NvOrientation::Family2,
            NvOrientation::Family3,
            NvOrientation::Family4,
        ]
    }

    pub fn index(self) -> usize {
        match self {
            NvOrientation::Family1 => 1,
            NvOrientation::Family2 => 2,
            NvOrientation::Family3 => 3,
            NvOrientation::Family4 => 4,
        }
    }

    pub fn from_index(k: usize) -> Result<Self, SpinError> {
        match k {
            1 => Ok(NvOrientation::Family1),
            2 => Ok(NvOrientation::Family2),
            3 => Ok(NvOrientation::Family3),
            4 => Ok(NvOrientation::Family4),
            _ => Err(SpinError::InvalidFamily { index: k }),
        }
    }

    /// Unit vector along the family's symmetry axis (crystal frame).
    pub fn axis(self) -> Vector3<f64> {
        let s = 1.0 / 3.0_f64.sqrt();
        match self {
            NvOrientation::Family1 => Vector3::new(s, s, s),
            NvOrientation::Family2 => Vector3::new(-s, -s, s),
            NvOrientation::Family3 => Vector3::new(-s, s, -s),
            NvOrientation::Family4 => Vector3::new(s, -s, -s),
        }
    }

    /// Proper rotation that maps this family's axis onto [111]. The
    /// matrices are involutions (180 degree rotations), so the same
    /// matrix maps the reference frame back to this family.
    pub fn rotation_to_reference(self) -> Matrix3<f64> {
        match self {
            NvOrientation::Family1 => Matrix3::identity(),
            NvOrientation::Family2 => Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)),
            NvOrientation::Family3 => Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0)),
            NvOrientation::Family4 => Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)),
        }
    }

    /// Local NV frame (x, y, z) in crystal coordinates.
    ///
    /// Reference family: z || [111], x || [11-2]/sqrt(6), y = z cross x.
    /// Other families are the two-fold images of that triad. Only the
    /// transverse magnitude is observable; the frame fixes the signs of
    /// the individual components.
    pub fn frame(self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let x_ref = Vector3::new(1.0, 1.0, -2.0) / 6.0_f64.sqrt();
        let z_ref = Vector3::new(1.0, 1.0, 1.0) / 3.0_f64.sqrt();
        let y_ref = z_ref.cross(&x_ref);
        let r = self.rotation_to_reference();
        (r * x_ref, r * y_ref, r * z_ref)
    }

    /// Angle in radians between the family axis and `dir` (undirected,
    /// so always in [0, pi/2]).
    pub fn inclination_to(self, dir: Vector3<f64>) -> f64 {
        let c = self.axis().dot(&dir.normalize()).abs().min(1.0);
        c.acos()
    }
}
