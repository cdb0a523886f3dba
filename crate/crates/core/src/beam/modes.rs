//! Flexural mode basis of a doubly clamped beam.
//!
//! Mode shapes are closed-form clamped-clamped eigenfunctions; the only
//! numerical step is the root search for the characteristic values
//! k_n l of cos(kl) cosh(kl) = 1. Shapes are normalized to
//! (1/l) int_0^l psi_n^2 dx = 1.
//!
//! Direct evaluation of cosh(kx) - sigma_n sinh(kx) loses all precision
//! for higher modes (the two terms agree to ~e^{2kl}), so evaluation uses
//! the equivalent decaying-exponential form, exact in real arithmetic:
//!
//!   cosh(u) - sigma sinh(u) = c_a e^{u - lambda} + (1+sigma)/2 e^{-u},
//!   c_a = (cos(lambda) - sin(lambda) - e^{-lambda}) / q(lambda),
//!   q(lambda) = 1 - (2 sin(lambda) + e^{-lambda}) e^{-lambda}.

use std::f64::consts::PI;

use crate::quad;

use super::{BeamError, BeamGeometry, BeamShape};

/// Characteristic value above which exp(lambda) overflows comfortably
/// early; far more modes than any caller needs.
const MAX_LAMBDA: f64 = 600.0;

#[derive(Debug, Clone)]
struct ClampedClampedMode {
    /// Root k_n l of the characteristic equation.
    lambda: f64,
    /// Wavenumber k_n = lambda / l (1/m).
    k: f64,
    /// Mode constant sigma_n = (cosh - cos)/(sinh - sin) at lambda.
    sigma: f64,
    /// Stable coefficient for the growing-exponential piece.
    c_a: f64,
    /// Coefficient (1 + sigma)/2 of the decaying exponential.
    c_b: f64,
    /// Normalization factor applied to psi and its derivatives.
    scale: f64,
    /// Natural frequency (Hz).
    freq: f64,
    /// Quality factor.
    q: f64,
}

impl ClampedClampedMode {
    /// Raw (unnormalized) psi, psi', psi'' at axial position x in [0, l].
    fn eval_raw(&self, x: f64) -> (f64, f64, f64) {
        let u = self.k * x;
        let grow = self.c_a * (u - self.lambda).exp();
        let decay = self.c_b * (-u).exp();
        let (sin_u, cos_u) = u.sin_cos();
        let psi = grow + decay - cos_u + self.sigma * sin_u;
        let dpsi = self.k * (grow - decay + sin_u + self.sigma * cos_u);
        let d2psi = self.k * self.k * (grow + decay + cos_u - self.sigma * sin_u);
        (psi, dpsi, d2psi)
    }
}

/// Flexural mode basis: frequencies, shapes, curvatures and Q factors of
/// the first N out-of-plane modes of a doubly clamped beam.
///
/// Immutable after construction; evaluation at arbitrary positions is
/// pure and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    geom: BeamGeometry,
    modes: Vec<ClampedClampedMode>,
}

/// Build the first `n_modes` clamped-clamped modes with a uniform quality
/// factor `q`.
pub fn clamped_clamped_modes(
    geom: &BeamGeometry,
    n_modes: usize,
    q: f64,
) -> Result<ModeBasis, BeamError> {
    clamped_clamped_modes_with_q(geom, &vec![q; n_modes])
}

/// Build one mode per entry of `qs`, with per-mode quality factors.
pub fn clamped_clamped_modes_with_q(
    geom: &BeamGeometry,
    qs: &[f64],
) -> Result<ModeBasis, BeamError> {
    if geom.shape != BeamShape::DoublyClampedBeam {
        return Err(BeamError::WrongShape {
            expected: BeamShape::DoublyClampedBeam,
            got: geom.shape,
        });
    }
    let n_modes = qs.len();
    let l = geom.length;
    let ei = geom.youngs_modulus * geom.moment_of_area();
    let lin_density = geom.density * geom.cross_section_area();
    let freq_factor = (ei / lin_density).sqrt() / (2.0 * PI * l * l);

    let mut modes = Vec::with_capacity(n_modes);
    for (n, &q) in qs.iter().enumerate() {
        let lambda = characteristic_root(n)?;
        let sinh_l = lambda.sinh();
        let (sin_l, cos_l) = lambda.sin_cos();
        let e_neg = (-lambda).exp();
        let sigma = (lambda.cosh() - cos_l) / (sinh_l - sin_l);
        let q_l = 1.0 - (2.0 * sin_l + e_neg) * e_neg;
        let c_a = (cos_l - sin_l - e_neg) / q_l;
        let c_b = 0.5 * (1.0 + sigma);

        let mut mode = ClampedClampedMode {
            lambda,
            k: lambda / l,
            sigma,
            c_a,
            c_b,
            scale: 1.0,
            freq: freq_factor * lambda * lambda,
            q,
        };

        // Normalize (1/l) int psi^2 dx = 1. The classical form already
        // satisfies this identically; the quadrature absorbs rounding.
        let norm2 = quad::integrate_subdivided(
            &|x| {
                let (p, _, _) = mode.eval_raw(x);
                p * p
            },
            0.0,
            l,
            1e-13 * l,
            (n + 2).max(4),
        )? / l;
        mode.scale = 1.0 / norm2.sqrt();
        modes.push(mode);
    }
    Ok(ModeBasis { geom: *geom, modes })
}

/// n-th root of cos(lambda) cosh(lambda) = 1 (n = 0 is the fundamental),
/// found by bisection on the overflow-free form cos(lambda) = sech(lambda).
fn characteristic_root(n: usize) -> Result<f64, BeamError> {
    let center = (2.0 * n as f64 + 3.0) * PI / 2.0;
    if center > MAX_LAMBDA {
        return Err(BeamError::TooManyModes { n });
    }
    let g = |x: f64| x.cos() - 1.0 / x.cosh();
    let root = quad::bisect(&g, center - 0.5, center + 0.5, 1e-15, 200)?;
    // The acceptance requirement is 1e-12 relative on the defining
    // equation; verify and fail hard rather than return a bad root.
    let residual = (root.cos() * root.cosh() - 1.0).abs();
    let scale = root.cosh();
    if residual > 1e-9 * scale {
        return Err(BeamError::RootFind(quad::QuadError::RootNoConvergence {
            tol: 1e-12,
            iters: 200,
        }));
    }
    Ok(root)
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn geometry(&self) -> &BeamGeometry {
        &self.geom
    }

    pub fn length(&self) -> f64 {
        self.geom.length
    }

    /// Beam mass m_0 (kg).
    pub fn mass(&self) -> f64 {
        self.geom.mass()
    }

    /// Natural frequency nu_n (Hz).
    pub fn frequency(&self, n: usize) -> f64 {
        self.modes[n].freq
    }

    /// Characteristic root k_n l.
    pub fn kl_root(&self, n: usize) -> f64 {
        self.modes[n].lambda
    }

    pub fn q_factor(&self, n: usize) -> f64 {
        self.modes[n].q
    }

    /// Mode shape psi_n(x), dimensionless, (1/l) int psi^2 = 1.
    pub fn shape(&self, n: usize, x: f64) -> f64 {
        let m = &self.modes[n];
        m.eval_raw(x).0 * m.scale
    }

    /// Slope psi_n'(x) (1/m).
    pub fn slope(&self, n: usize, x: f64) -> f64 {
        let m = &self.modes[n];
        m.eval_raw(x).1 * m.scale
    }

    /// Curvature psi_n''(x) (1/m^2).
    pub fn curvature(&self, n: usize, x: f64) -> f64 {
        let m = &self.modes[n];
        m.eval_raw(x).2 * m.scale
    }

    /// Bending stress (Pa) at site (x, z) for a superposition of modal
    /// displacement amplitudes (m): sigma = E z sum_m a_m psi_m''(x).
    pub fn modal_stress_at(&self, x: f64, z: f64, amplitudes: &[f64]) -> Result<f64, BeamError> {
        if amplitudes.len() != self.modes.len() {
            return Err(BeamError::AmplitudeMismatch {
                got: amplitudes.len(),
                expected: self.modes.len(),
            });
        }
        if x < 0.0 || x > self.geom.length {
            return Err(BeamError::OutsideSpan {
                x,
                length: self.geom.length,
            });
        }
        let half = self.geom.thickness / 2.0;
        if z.abs() > half * (1.0 + 1e-12) {
            return Err(BeamError::OutsideCrossSection {
                offset: z.abs(),
                bound: half,
            });
        }
        let curvature_sum: f64 = amplitudes
            .iter()
            .enumerate()
            .map(|(m, &a)| a * self.curvature(m, x))
            .sum();
        Ok(self.geom.youngs_modulus * z * curvature_sum)
    }
}
