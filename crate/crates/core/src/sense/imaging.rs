//! Force-vector imaging with nanopillar arrays.
//!
//! Each pillar's NV reports the projection of the local in-plane force
//! onto the NV's cross-section offset: delta_f = a1 h (F . xi) / I.
//! Four neighboring pixels combine into one superpixel whose 4x2 offset
//! matrix is inverted by least squares for the in-plane force vector.

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::beam::BeamGeometry;
use crate::spin::SusceptibilityParams;

use super::SenseError;

/// Minimum pillar spacing (m) for independent optical addressing.
pub const MIN_PILLAR_SPACING: f64 = 250e-9;

/// Regular grid of nanopillar force pixels.
#[derive(Debug, Clone)]
pub struct PixelArray {
    pub nx: usize,
    pub ny: usize,
    /// Pillar pitch (m).
    pub spacing: f64,
    pub geom: BeamGeometry,
    /// NV cross-section offset per pillar (m), row-major [j][i].
    pub nv_offsets: Vec<Vector2<f64>>,
}

impl PixelArray {
    pub fn new(
        nx: usize,
        ny: usize,
        spacing: f64,
        geom: BeamGeometry,
        nv_offsets: Vec<Vector2<f64>>,
    ) -> Result<Self, SenseError> {
        if nx == 0 || ny == 0 {
            return Err(SenseError::InvalidArray {
                reason: "array dimensions must be nonzero".into(),
            });
        }
        if spacing < MIN_PILLAR_SPACING {
            return Err(SenseError::InvalidArray {
                reason: format!(
                    "spacing {spacing:.3e} m below the {MIN_PILLAR_SPACING:.3e} m optical-addressing bound"
                ),
            });
        }
        if nv_offsets.len() != nx * ny {
            return Err(SenseError::InvalidArray {
                reason: format!(
                    "need {} NV offsets for a {nx} x {ny} array, got {}",
                    nx * ny,
                    nv_offsets.len()
                ),
            });
        }
        let bound = geom.width / 2.0;
        if let Some(bad) = nv_offsets
            .iter()
            .find(|xi| xi.norm() > bound * (1.0 + 1e-12))
        {
            return Err(SenseError::InvalidArray {
                reason: format!(
                    "NV offset |xi| = {:.3e} m outside the pillar radius",
                    bad.norm()
                ),
            });
        }
        Ok(Self {
            nx,
            ny,
            spacing,
            geom,
            nv_offsets,
        })
    }

    /// Array whose NV offsets alternate between the diagonal
    /// (r, r)/sqrt(2) and antidiagonal (r, -r)/sqrt(2) directions in a
    /// checkerboard, with |offset| = `offset_radius`.
    ///
    /// Within every 2x2 superpixel the two diagonal pixels sit at
    /// opposite corners (and likewise the antidiagonal pair), so their
    /// outer products pair over opposite positions: Xi^T Xi is isotropic
    /// and affine force fields are recovered exactly at the superpixel
    /// centers.
    pub fn with_diagonal_offsets(
        nx: usize,
        ny: usize,
        spacing: f64,
        geom: BeamGeometry,
        offset_radius: f64,
    ) -> Result<Self, SenseError> {
        let r = offset_radius / 2.0_f64.sqrt();
        let mut offsets = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let sy = if i % 2 == j % 2 { 1.0 } else { -1.0 };
                offsets.push(Vector2::new(r, sy * r));
            }
        }
        Self::new(nx, ny, spacing, geom, offsets)
    }

    /// Array with seeded random NV offsets at radius `offset_radius`.
    pub fn with_random_offsets(
        nx: usize,
        ny: usize,
        spacing: f64,
        geom: BeamGeometry,
        offset_radius: f64,
        seed: u64,
    ) -> Result<Self, SenseError> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offsets = (0..nx * ny)
            .map(|_| {
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                Vector2::new(offset_radius * theta.cos(), offset_radius * theta.sin())
            })
            .collect();
        Self::new(nx, ny, spacing, geom, offsets)
    }

    /// In-plane position (m) of pillar (i, j).
    pub fn position(&self, i: usize, j: usize) -> Vector2<f64> {
        Vector2::new(i as f64 * self.spacing, j as f64 * self.spacing)
    }

    pub fn offset(&self, i: usize, j: usize) -> Vector2<f64> {
        self.nv_offsets[j * self.nx + i]
    }

    /// Projection gain a1 h / I (Hz per N m).
    pub fn projection_gain(&self, params: &SusceptibilityParams) -> f64 {
        params.a1 * self.geom.length / self.geom.moment_of_area()
    }
}

/// Simulate per-pixel frequency shifts for a force field `field(x, y)`
/// (N) with Gaussian frequency noise `sigma_f` (Hz). Deterministic per
/// seed. Returns row-major shifts (Hz).
pub fn simulate_pixel_measurements<F>(
    field: F,
    array: &PixelArray,
    params: &SusceptibilityParams,
    sigma_f: f64,
    seed: u64,
) -> Vec<f64>
where
    F: Fn(f64, f64) -> Vector2<f64>,
{
    let gain = array.projection_gain(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (sigma_f > 0.0).then(|| Normal::new(0.0, sigma_f).expect("sigma_f >= 0"));
    let mut out = Vec::with_capacity(array.nx * array.ny);
    for j in 0..array.ny {
        for i in 0..array.nx {
            let p = array.position(i, j);
            let f = field(p.x, p.y);
            let mut df = gain * f.dot(&array.offset(i, j));
            if let Some(n) = &noise {
                df += n.sample(&mut rng);
            }
            out.push(df);
        }
    }
    out
}

/// Force estimate for one superpixel.
#[derive(Debug, Clone, Copy)]
pub struct SuperpixelEstimate {
    /// Superpixel indices (I, J).
    pub index: (usize, usize),
    /// Superpixel center position (m).
    pub center: Vector2<f64>,
    /// In-plane force estimate (N); NaN when masked.
    pub force: Vector2<f64>,
    /// 1-sigma per-component uncertainties (N).
    pub sigma: Vector2<f64>,
    /// Full 2x2 force covariance (N^2).
    pub covariance: Matrix2<f64>,
    /// True when the offsets were rank deficient and no estimate exists.
    pub masked: bool,
}

/// Least-squares inversion of four pixel measurements into an in-plane
/// force: F = (a1 h / I)^-1 (Xi^T Xi)^-1 Xi^T delta_f, with covariance
/// (a1 h / I)^-2 sigma_f^2 (Xi^T Xi)^-1.
pub fn superpixel_invert(
    shifts: &[f64; 4],
    offsets: &[Vector2<f64>; 4],
    gain: f64,
    sigma_f: f64,
) -> Result<(Vector2<f64>, Matrix2<f64>), SenseError> {
    let mut xtx = Matrix2::zeros();
    let mut xty = Vector2::zeros();
    for (xi, &df) in offsets.iter().zip(shifts.iter()) {
        xtx += xi * xi.transpose();
        xty += xi * df;
    }
    // Rank check on the 2x2 normal matrix.
    let scale = xtx.trace();
    let det = xtx.determinant();
    if !(det > scale * scale * 1e-12) {
        return Err(SenseError::RankDeficientSuperpixel);
    }
    let inv = xtx
        .try_inverse()
        .ok_or(SenseError::RankDeficientSuperpixel)?;
    let force = inv * xty / gain;
    let covariance = inv * (sigma_f * sigma_f / (gain * gain));
    Ok((force, covariance))
}

/// Reconstructed force-vector image.
#[derive(Debug, Clone)]
pub struct ForceImage {
    /// Superpixel grid dimensions.
    pub nx: usize,
    pub ny: usize,
    /// Spatial resolution of the image (m): the superpixel pitch.
    pub resolution: f64,
    pub estimates: Vec<SuperpixelEstimate>,
}

/// Superpixel tiling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tiling {
    /// Non-overlapping 2x2 blocks (the baseline scheme).
    Blocks,
    /// Overlapping 2x2 windows at single-pixel stride (smoother image;
    /// an extension beyond the baseline, estimates are correlated).
    Sliding,
}

/// Tile the array into 2x2 superpixels and invert each one.
///
/// Rank-deficient superpixels are masked, not fatal. Trailing rows or
/// columns that do not fill a 2x2 block are ignored under
/// [`Tiling::Blocks`].
pub fn reconstruct_force_image(
    array: &PixelArray,
    shifts: &[f64],
    params: &SusceptibilityParams,
    sigma_f: f64,
    tiling: Tiling,
) -> Result<ForceImage, SenseError> {
    if shifts.len() != array.nx * array.ny {
        return Err(SenseError::InvalidArray {
            reason: format!("need {} shifts, got {}", array.nx * array.ny, shifts.len()),
        });
    }
    let gain = array.projection_gain(params);
    let (snx, sny, stride) = match tiling {
        Tiling::Blocks => (array.nx / 2, array.ny / 2, 2),
        Tiling::Sliding => (array.nx.saturating_sub(1), array.ny.saturating_sub(1), 1),
    };
    if snx == 0 || sny == 0 {
        return Err(SenseError::InvalidArray {
            reason: "array too small for a 2x2 superpixel".into(),
        });
    }

    let mut estimates = Vec::with_capacity(snx * sny);
    for sj in 0..sny {
        for si in 0..snx {
            let (i0, j0) = (si * stride, sj * stride);
            let pix = [(i0, j0), (i0 + 1, j0), (i0, j0 + 1), (i0 + 1, j0 + 1)];
            let block_shifts = [
                shifts[pix[0].1 * array.nx + pix[0].0],
                shifts[pix[1].1 * array.nx + pix[1].0],
                shifts[pix[2].1 * array.nx + pix[2].0],
                shifts[pix[3].1 * array.nx + pix[3].0],
            ];
            let offsets = [
                array.offset(pix[0].0, pix[0].1),
                array.offset(pix[1].0, pix[1].1),
                array.offset(pix[2].0, pix[2].1),
                array.offset(pix[3].0, pix[3].1),
            ];
            let center =
                (array.position(pix[0].0, pix[0].1) + array.position(pix[3].0, pix[3].1)) / 2.0;
            match superpixel_invert(&block_shifts, &offsets, gain, sigma_f) {
                Ok((force, covariance)) => estimates.push(SuperpixelEstimate {
                    index: (si, sj),
                    center,
                    force,
                    sigma: Vector2::new(
                        covariance[(0, 0)].max(0.0).sqrt(),
                        covariance[(1, 1)].max(0.0).sqrt(),
                    ),
                    covariance,
                    masked: false,
                }),
                Err(SenseError::RankDeficientSuperpixel) => estimates.push(SuperpixelEstimate {
                    index: (si, sj),
                    center,
                    force: Vector2::new(f64::NAN, f64::NAN),
                    sigma: Vector2::new(f64::NAN, f64::NAN),
                    covariance: Matrix2::zeros(),
                    masked: true,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ForceImage {
        nx: snx,
        ny: sny,
        resolution: 2.0 * array.spacing,
        estimates,
    })
}
