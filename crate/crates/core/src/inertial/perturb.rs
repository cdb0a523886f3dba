//! First-order mode perturbations from an adsorbate mass distribution.

use nalgebra::DMatrix;

use crate::beam::ModeBasis;

use super::adsorbate::AdsorbateDistribution;
use super::InertialError;

/// First-order validity guard: warn above this adsorbate/beam mass ratio.
pub const MASS_RATIO_GUARD: f64 = 0.05;

/// Relative frequency gap below which a mode pair counts as degenerate.
const DEGENERACY_GAP: f64 = 1e-6;

/// Quadrature tolerance for the perturbation integrals, relative to the
/// integrand scale mu * psi^2 ~ total_mass * O(1).
const SHIFT_TOL: f64 = 1e-10;

/// Relative frequency shifts and mode-coupling matrix for one adsorbate.
#[derive(Debug, Clone)]
pub struct ModePerturbation {
    /// delta_nu_n / nu_n per mode (dimensionless, <= 0 for mass loading).
    pub shift_ratios: Vec<f64>,
    /// Coupling coefficients c[n][m], zero on the diagonal.
    pub couplings: DMatrix<f64>,
    /// Adsorbate to beam mass ratio.
    pub mass_ratio: f64,
    /// True when the mass ratio exceeds the first-order guard.
    pub first_order_warning: bool,
}

impl ModePerturbation {
    /// Evaluate shifts and couplings for the first `n_modes` modes.
    pub fn evaluate(
        adsorbate: &AdsorbateDistribution,
        basis: &ModeBasis,
        n_modes: usize,
    ) -> Result<Self, InertialError> {
        if n_modes > basis.len() {
            return Err(InertialError::TooFewModes {
                need: n_modes,
                got: basis.len(),
            });
        }
        let shift_ratios = (0..n_modes)
            .map(|n| frequency_shift(adsorbate, basis, n))
            .collect::<Result<Vec<_>, _>>()?;
        let couplings = coupling_coeffs(adsorbate, basis, n_modes)?;
        let ratio = mass_ratio(adsorbate, basis)?;
        Ok(Self {
            shift_ratios,
            couplings,
            mass_ratio: ratio,
            first_order_warning: ratio > MASS_RATIO_GUARD,
        })
    }
}

/// Adsorbate-to-beam mass ratio.
pub fn mass_ratio(
    adsorbate: &AdsorbateDistribution,
    basis: &ModeBasis,
) -> Result<f64, InertialError> {
    Ok(adsorbate.total_mass(basis.length())? / basis.mass())
}

/// Relative frequency shift of mode `n`:
/// delta_nu_n / nu_n = -(1 / 2 m_0) int mu_1 psi_n^2 dx.
pub fn frequency_shift(
    adsorbate: &AdsorbateDistribution,
    basis: &ModeBasis,
    n: usize,
) -> Result<f64, InertialError> {
    let l = basis.length();
    let scale = adsorbate.total_mass(l)?.max(f64::MIN_POSITIVE);
    let integral = adsorbate.integrate_weighted(
        |x| {
            let p = basis.shape(n, x);
            p * p
        },
        l,
        SHIFT_TOL * scale * 4.0,
        2 * (n + 2),
    )?;
    Ok(-integral / (2.0 * basis.mass()))
}

/// Mode-coupling coefficients c_nm for the first `n_modes` modes:
/// c_nm = [nu_n^2 / (nu_m^2 - nu_n^2)] (1 / m_0) int mu_1 psi_m psi_n dx,
/// with c_nn = 0 by convention.
pub fn coupling_coeffs(
    adsorbate: &AdsorbateDistribution,
    basis: &ModeBasis,
    n_modes: usize,
) -> Result<DMatrix<f64>, InertialError> {
    if n_modes > basis.len() {
        return Err(InertialError::TooFewModes {
            need: n_modes,
            got: basis.len(),
        });
    }
    let l = basis.length();
    let m0 = basis.mass();
    let scale = adsorbate.total_mass(l)?.max(f64::MIN_POSITIVE);
    let mut c = DMatrix::zeros(n_modes, n_modes);
    for n in 0..n_modes {
        for m in 0..n_modes {
            if m == n {
                continue;
            }
            let nu_n = basis.frequency(n);
            let nu_m = basis.frequency(m);
            let gap = (nu_m - nu_n).abs() / nu_n;
            if gap < DEGENERACY_GAP {
                return Err(InertialError::NearDegenerate { n, m, gap });
            }
            let overlap = adsorbate.integrate_weighted(
                |x| basis.shape(m, x) * basis.shape(n, x),
                l,
                SHIFT_TOL * scale * 4.0,
                2 * (n.max(m) + 2),
            )?;
            c[(n, m)] = nu_n * nu_n / (nu_m * nu_m - nu_n * nu_n) * overlap / m0;
        }
    }
    Ok(c)
}
