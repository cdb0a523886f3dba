//! Shared test oracle: finite-difference eigensolve of a clamped-clamped
//! Euler-Bernoulli beam with an arbitrary added mass distribution.
//!
//! Entirely independent of the library's closed-form mode machinery: the
//! biharmonic operator is discretized on a uniform grid (second-order,
//! ghost-point clamped ends) and the generalized symmetric eigenproblem
//! is solved densely. Used to pin the first-order perturbation formulas.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]

use nalgebra::DMatrix;
use spinmech_core::beam::BeamGeometry;

pub struct FdMode {
    /// Natural frequency (Hz).
    pub freq: f64,
    /// Mode shape at all nodes (normalized (1/l) sum psi^2 h = 1),
    /// including the clamped end nodes.
    pub shape: Vec<f64>,
}

pub struct FdSolution {
    pub x: Vec<f64>,
    pub modes: Vec<FdMode>,
}

/// Solve the first `n_modes` flexural modes with `nodes` grid points.
/// `added_density(x)` is the smooth extra linear density (kg/m) and
/// `point_masses` are (mass, position) pairs snapped to nearest nodes.
pub fn fd_clamped_modes(
    geom: &BeamGeometry,
    added_density: &dyn Fn(f64) -> f64,
    point_masses: &[(f64, f64)],
    nodes: usize,
    n_modes: usize,
) -> FdSolution {
    assert!(nodes >= 16, "grid too coarse");
    let l = geom.length;
    let h = l / (nodes - 1) as f64;
    let n_int = nodes - 2;
    let ei = geom.youngs_modulus * geom.moment_of_area();
    let rho_a = geom.density * geom.cross_section_area();

    // Pentadiagonal biharmonic with clamped (ghost-reflected) ends.
    let mut k = DMatrix::<f64>::zeros(n_int, n_int);
    for i in 0..n_int {
        k[(i, i)] = if i == 0 || i == n_int - 1 { 7.0 } else { 6.0 };
        if i + 1 < n_int {
            k[(i, i + 1)] = -4.0;
            k[(i + 1, i)] = -4.0;
        }
        if i + 2 < n_int {
            k[(i, i + 2)] = 1.0;
            k[(i + 2, i)] = 1.0;
        }
    }
    k *= ei / h.powi(4);

    // Diagonal mass: beam density plus adsorbate.
    let mut m = vec![0.0; n_int];
    for (i, mi) in m.iter_mut().enumerate() {
        let x = (i + 1) as f64 * h;
        *mi = rho_a + added_density(x);
    }
    for &(mass, x0) in point_masses {
        let node = (x0 / h).round() as usize;
        assert!(node >= 1 && node <= n_int, "point mass outside interior");
        m[node - 1] += mass / h;
    }

    // Symmetrize: D^{-1/2} K D^{-1/2}.
    let d_inv_sqrt: Vec<f64> = m.iter().map(|&mi| 1.0 / mi.sqrt()).collect();
    let mut s = k;
    for i in 0..n_int {
        for j in 0..n_int {
            s[(i, j)] *= d_inv_sqrt[i] * d_inv_sqrt[j];
        }
    }

    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n_int).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let x: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
    let modes = order
        .iter()
        .take(n_modes)
        .map(|&idx| {
            let omega2 = eig.eigenvalues[idx].max(0.0);
            let freq = omega2.sqrt() / (2.0 * std::f64::consts::PI);
            let mut shape = vec![0.0; nodes];
            for i in 0..n_int {
                shape[i + 1] = eig.eigenvectors[(i, idx)] * d_inv_sqrt[i];
            }
            // Normalize (1/l) int psi^2 dx = 1 (trapezoid; ends are zero).
            let norm2: f64 = shape.iter().map(|v| v * v).sum::<f64>() * h / l;
            let scale = 1.0 / norm2.sqrt();
            for v in &mut shape {
                *v *= scale;
            }
            // Fix sign: positive slope at the left clamp.
            if shape[2] < 0.0 {
                for v in &mut shape {
                    *v = -*v;
                }
            }
            FdMode { freq, shape }
        })
        .collect();
    FdSolution { x, modes }
}

/// Trapezoid inner product (1/l) int f g dx over the FD grid.
pub fn fd_inner(sol: &FdSolution, f: &[f64], g: &[f64]) -> f64 {
    let h = sol.x[1] - sol.x[0];
    let l = *sol.x.last().unwrap();
    f.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>() * h / l
}
