//! Adaptive Gauss-Kronrod quadrature and bracketed root finding.
//!
//! The integrator is a plain recursive-bisection scheme on the 15-point
//! Kronrod rule with its embedded 7-point Gauss rule as error estimator.
//! It is used for mode-shape integrals (orthonormality checks, frequency
//! shifts, basis projections), all of which are smooth; point masses are
//! handled analytically by the callers and never reach the integrator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature failed to converge: error estimate {err:.3e} exceeds tolerance {tol:.3e} after {evals} evaluations")]
    NoConvergence { err: f64, tol: f64, evals: usize },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("root finder did not bracket a sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("root finder failed to reach relative tolerance {tol:.3e} in {iters} iterations")]
    RootNoConvergence { tol: f64, iters: usize },
}

// 15-point Kronrod abscissae on [0, 1] side (symmetric), QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

// 7-point Gauss weights, matching the odd-index Kronrod abscissae.
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod 15(7) panel. Returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: center - dx });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: center + dx });
        }
        let fsum = f1 + f2;
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }

    let integral = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Ok((integral, err))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// The interval is split recursively wherever the embedded-rule error
/// estimate exceeds the locally apportioned tolerance. Fails if the
/// evaluation budget is exhausted before the estimate converges.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut evals = 0usize;
    const MAX_EVALS: usize = 2_000_000;
    const MAX_DEPTH: u32 = 48;

    // Explicit stack of (a, b, tol, depth).
    let mut stack = vec![(a, b, abs_tol.max(f64::MIN_POSITIVE), 0u32)];
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi)?;
        evals += 15;
        if err <= tol || depth >= MAX_DEPTH {
            if err > tol {
                return Err(QuadError::NoConvergence { err, tol, evals });
            }
            total += val;
        } else {
            if evals > MAX_EVALS {
                return Err(QuadError::NoConvergence { err, tol, evals });
            }
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol, depth + 1));
            stack.push((mid, hi, 0.5 * tol, depth + 1));
        }
    }
    Ok(total)
}

/// Integrate with an initial uniform subdivision into `panels` pieces.
///
/// Oscillatory integrands (products of high-order mode shapes) need the
/// initial split so the error estimator sees the oscillation.
pub fn integrate_subdivided<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    panels: usize,
) -> Result<f64, QuadError> {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let tol = abs_tol / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = if i == n - 1 {
            b
        } else {
            a + (i + 1) as f64 * h
        };
        total += integrate(f, lo, hi, tol)?;
    }
    Ok(total)
}

/// Bisection to relative tolerance `rel_tol` on a bracketed sign change.
pub fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64, QuadError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(QuadError::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(QuadError::RootNoConvergence {
        tol: rel_tol,
        iters: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(&|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integral_converges() {
        // int_0^pi sin(20 x) dx = (1 - cos(20 pi)) / 20 = 0
        let v = integrate_subdivided(&|x: f64| (20.0 * x).sin(), 0.0, PI, 1e-12, 16).unwrap();
        assert!(v.abs() < 1e-11);
    }

    #[test]
    fn gaussian_mass_is_one() {
        let s = 0.01;
        let f = |x: f64| (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
        let v = integrate(&f, -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_cos_root() {
        let r = bisect(&|x: f64| x.cos(), 1.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(matches!(
            bisect(&|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(QuadError::NoBracket { .. })
        ));
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        assert!(matches!(
            integrate(&|x: f64| 1.0 / x, -1.0, 1.0, 1e-10),
            Err(QuadError::NonFinite { .. }) | Err(QuadError::NoConvergence { .. })
        ));
    }
}
