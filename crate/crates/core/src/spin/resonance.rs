//! Ground-state spin Hamiltonian of the NV center under stress and
//! magnetic field, and the resonance frequencies it produces.
//!
//! The coupling map is evaluated once, for the reference [111] family;
//! other families are handled by transforming the stress tensor with the
//! lattice symmetry operation that carries the family onto the reference.

use nalgebra::{Complex, Matrix3, Vector3};

use super::stress::{NvOrientation, StressTensor};
use super::SpinError;
use crate::units::{GHZ, MHZ_PER_GPA};

type C64 = Complex<f64>;

/// Stress susceptibilities and spin constants, all SI (Hz/Pa, Hz, Hz/T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityParams {
    /// Hydrostatic shift susceptibility (Hz/Pa).
    pub a1: f64,
    /// Shear shift susceptibility (Hz/Pa).
    pub a2: f64,
    /// Normal-stress splitting susceptibility (Hz/Pa).
    pub b: f64,
    /// Shear splitting susceptibility (Hz/Pa).
    pub c: f64,
    /// Zero-field splitting (Hz).
    pub d: f64,
    /// Electron gyromagnetic ratio (Hz/T).
    pub gamma_e: f64,
}

impl Default for SusceptibilityParams {
    /// Calibrated room-temperature values: a1 = 4.86, a2 = -3.7,
    /// b = -2.3, c = 3.5 MHz/GPa; D = 2.87 GHz; gamma_e = 28.03 GHz/T.
    fn default() -> Self {
        Self {
            a1: 4.86 * MHZ_PER_GPA,
            a2: -3.7 * MHZ_PER_GPA,
            b: -2.3 * MHZ_PER_GPA,
            c: 3.5 * MHZ_PER_GPA,
            d: 2.87 * GHZ,
            gamma_e: 28.03 * GHZ,
        }
    }
}

impl SusceptibilityParams {
    /// Build from the conventional units (MHz/GPa, GHz, GHz/T).
    pub fn from_conventional(
        a1_mhz_gpa: f64,
        a2_mhz_gpa: f64,
        b_mhz_gpa: f64,
        c_mhz_gpa: f64,
        d_ghz: f64,
        gamma_e_ghz_t: f64,
    ) -> Result<Self, SpinError> {
        let p = Self {
            a1: a1_mhz_gpa * MHZ_PER_GPA,
            a2: a2_mhz_gpa * MHZ_PER_GPA,
            b: b_mhz_gpa * MHZ_PER_GPA,
            c: c_mhz_gpa * MHZ_PER_GPA,
            d: d_ghz * GHZ,
            gamma_e: gamma_e_ghz_t * GHZ,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        if !(self.d > 0.0) || !(self.gamma_e > 0.0) {
            return Err(SpinError::InvalidParams {
                reason: "D and gamma_e must be positive".into(),
            });
        }
        for v in [self.a1, self.a2, self.b, self.c] {
            if !v.is_finite() {
                return Err(SpinError::InvalidParams {
                    reason: "susceptibilities must be finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Spin-mechanical coupling components (Hz) in the NV frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMechCoupling {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl SpinMechCoupling {
    pub fn zero() -> Self {
        Self {
            mx: 0.0,
            my: 0.0,
            mz: 0.0,
        }
    }

    /// Transverse coupling magnitude sqrt(Mx^2 + My^2).
    pub fn transverse(&self) -> f64 {
        self.mx.hypot(self.my)
    }
}

/// Magnetic environment in the crystal (XYZ) frame.
///
/// The Hamiltonian consumes the field projected onto a family's local NV
/// frame; the crystal-frame storage lets one field value drive all four
/// orientation families consistently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticEnvironment {
    /// Static field (T), crystal frame.
    pub b_crystal: Vector3<f64>,
    /// Transverse gradient magnitude |grad B_z| (T/m), for tip-motion readout.
    pub grad_transverse: f64,
    /// Axial gradient dBz/dx (T/m), for spectrally addressing several NVs.
    pub grad_axial: f64,
}

impl MagneticEnvironment {
    pub fn new(b_crystal: Vector3<f64>) -> Result<Self, SpinError> {
        Self::with_gradients(b_crystal, 0.0, 0.0)
    }

    pub fn with_gradients(
        b_crystal: Vector3<f64>,
        grad_transverse: f64,
        grad_axial: f64,
    ) -> Result<Self, SpinError> {
        if !b_crystal.iter().all(|v| v.is_finite())
            || !grad_transverse.is_finite()
            || !grad_axial.is_finite()
        {
            return Err(SpinError::InvalidField {
                reason: "field values must be finite".into(),
            });
        }
        // Secular-approximation regime guard.
        if b_crystal.norm() >= 1.0 {
            return Err(SpinError::InvalidField {
                reason: format!(
                    "|B| = {:.3} T exceeds the 1 T regime bound",
                    b_crystal.norm()
                ),
            });
        }
        Ok(Self {
            b_crystal,
            grad_transverse,
            grad_axial,
        })
    }

    pub fn zero() -> Self {
        Self {
            b_crystal: Vector3::zeros(),
            grad_transverse: 0.0,
            grad_axial: 0.0,
        }
    }

    /// Field components in the local frame of `family`: (Bx, By, Bz).
    pub fn in_nv_frame(&self, family: NvOrientation) -> Vector3<f64> {
        let (x, y, z) = family.frame();
        Vector3::new(
            self.b_crystal.dot(&x),
            self.b_crystal.dot(&y),
            self.b_crystal.dot(&z),
        )
    }

    /// Axial (z) field component for `family`.
    pub fn axial_field(&self, family: NvOrientation) -> f64 {
        self.b_crystal.dot(&family.axis())
    }
}

/// Resonance pair, shift and splitting (all Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonances {
    pub f_plus: f64,
    pub f_minus: f64,
    /// delta: common shift of the pair midpoint from D.
    pub shift: f64,
    /// Delta: half the pair separation, always >= 0.
    pub splitting: f64,
}

impl Resonances {
    fn from_pair(f_plus: f64, f_minus: f64, d: f64) -> Self {
        debug_assert!(f_plus >= f_minus);
        Self {
            f_plus,
            f_minus,
            shift: 0.5 * (f_plus + f_minus) - d,
            splitting: 0.5 * (f_plus - f_minus),
        }
    }
}

/// Map the crystal-frame stress to the spin-mechanical coupling of one
/// orientation family.
///
/// For the reference family this is the susceptibility map itself; other
/// families first transform the stress by the symmetry operation that
/// carries them onto the reference, keeping a single source of truth for
/// the map.
pub fn stress_to_coupling(
    stress: &StressTensor,
    params: &SusceptibilityParams,
    orient: NvOrientation,
) -> SpinMechCoupling {
    let s = stress.transformed(&orient.rotation_to_reference());
    coupling_reference(&s, params)
}

fn coupling_reference(s: &StressTensor, p: &SusceptibilityParams) -> SpinMechCoupling {
    let sqrt3 = 3.0_f64.sqrt();
    SpinMechCoupling {
        mx: p.b * (s.xx + s.yy - 2.0 * s.zz) + p.c * (s.yz + s.zx - 2.0 * s.xy),
        my: sqrt3 * (p.b * (s.xx - s.yy) + p.c * (s.yz - s.zx)),
        mz: p.a1 * (s.xx + s.yy + s.zz) + 2.0 * p.a2 * (s.yz + s.zx + s.xy),
    }
}

/// Ground-state spin Hamiltonian (Hz) in the |+1>, |0>, |-1> basis.
///
/// Uses the traceless (Sz^2 - 2/3) form, so the matrix trace is exactly
/// zero. `b_nv` is the magnetic field in the NV frame (see
/// [`MagneticEnvironment::in_nv_frame`]).
pub fn build_hamiltonian(
    coupling: &SpinMechCoupling,
    b_nv: Vector3<f64>,
    params: &SusceptibilityParams,
) -> Matrix3<C64> {
    let re = |v: f64| C64::new(v, 0.0);
    let zero = C64::new(0.0, 0.0);

    let dz = params.d + coupling.mz;
    let bx = params.gamma_e * b_nv.x;
    let by = params.gamma_e * b_nv.y;
    let bz = params.gamma_e * b_nv.z;

    // (Sz^2 - 2/3) = diag(1/3, -2/3, 1/3)
    // Sx = [[0,1,0],[1,0,1],[0,1,0]] / sqrt(2)
    // Sy = [[0,-i,0],[i,0,-i],[0,i,0]] / sqrt(2)
    // Sx^2 - Sy^2 = [[0,0,1],[0,0,0],[1,0,0]]
    // {Sx, Sy}    = [[0,0,-i],[0,0,0],[i,0,0]]
    let s2 = 0.5_f64.sqrt();
    let bperp = C64::new(s2 * bx, -s2 * by);

    let mut h = Matrix3::from_element(zero);
    h[(0, 0)] = re(dz / 3.0 + bz);
    h[(1, 1)] = re(-2.0 * dz / 3.0);
    h[(2, 2)] = re(dz / 3.0 - bz);

    h[(0, 1)] = bperp;
    h[(1, 0)] = bperp.conj();
    h[(1, 2)] = bperp;
    h[(2, 1)] = bperp.conj();

    h[(0, 2)] = C64::new(-coupling.mx, -coupling.my);
    h[(2, 0)] = C64::new(-coupling.mx, coupling.my);

    h
}

/// Resonances in the secular approximation (transverse field neglected):
/// delta = Mz, Delta = sqrt((gamma_e Bz)^2 + Mx^2 + My^2), f+- = D + delta +- Delta.
pub fn resonances_secular(
    coupling: &SpinMechCoupling,
    b_axial: f64,
    params: &SusceptibilityParams,
) -> Resonances {
    let shift = coupling.mz;
    let zeeman = params.gamma_e * b_axial;
    let splitting =
        (zeeman * zeeman + coupling.mx * coupling.mx + coupling.my * coupling.my).sqrt();
    Resonances {
        f_plus: params.d + shift + splitting,
        f_minus: params.d + shift - splitting,
        shift,
        splitting,
    }
}

/// Minimum |0> character an eigenvector must have to be labeled as the
/// m_s = 0 level.
const LABEL_THRESHOLD: f64 = 0.9;

/// Exact resonances from the 3x3 Hermitian eigenproblem.
///
/// The two transitions are taken from the eigenstate of dominantly |0>
/// character; if no eigenvector reaches 90% |0> weight the state labels
/// are ambiguous and an error is returned.
pub fn resonances_exact(
    h: &Matrix3<C64>,
    params: &SusceptibilityParams,
) -> Result<Resonances, SpinError> {
    let eig = h.symmetric_eigen();

    // |0> weight of each eigenvector (basis row 1).
    let mut zero_idx = 0;
    let mut zero_weight = -1.0;
    for j in 0..3 {
        let w = eig.eigenvectors[(1, j)].norm_sqr();
        if w > zero_weight {
            zero_weight = w;
            zero_idx = j;
        }
    }
    if zero_weight < LABEL_THRESHOLD {
        return Err(SpinError::DegenerateLabeling {
            zero_character: zero_weight,
        });
    }

    let e0 = eig.eigenvalues[zero_idx];
    let mut others: Vec<f64> = (0..3)
        .filter(|&j| j != zero_idx)
        .map(|j| eig.eigenvalues[j])
        .collect();
    others.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let f_minus = others[0] - e0;
    let f_plus = others[1] - e0;
    Ok(Resonances::from_pair(f_plus, f_minus, params.d))
}

/// Which spin-mechanical response coefficient a measurement tracks, for
/// devices whose load axis is a <001> crystal direction (pure sigma_ZZ at
/// the sensing NV).
///
/// For such stress the couplings reduce to Mz = a1 sigma and
/// |M_transverse| = 2|b| sigma, so the two resonances move by
/// (a1 +- 2|b|) sigma. When random intrinsic stress dominates the
/// transverse coupling, both move by approximately a1 sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseBranch {
    /// Intrinsic-stress-dominated first-order response: a1.
    Intrinsic,
    /// Upper resonance: a1 + 2|b|.
    Upper,
    /// Lower resonance: a1 - 2|b|.
    Lower,
}

impl ResponseBranch {
    /// Frequency-per-stress coefficient (Hz/Pa).
    pub fn coefficient(self, params: &SusceptibilityParams) -> f64 {
        match self {
            ResponseBranch::Intrinsic => params.a1,
            ResponseBranch::Upper => params.a1 + 2.0 * params.b.abs(),
            ResponseBranch::Lower => params.a1 - 2.0 * params.b.abs(),
        }
    }
}
