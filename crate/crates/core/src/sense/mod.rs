//! Shot-noise-limited force sensitivity of nanopillar sensors and
//! force-vector imaging with nanopillar arrays.

mod imaging;
mod sensitivity;

pub use imaging::{
    reconstruct_force_image, simulate_pixel_measurements, superpixel_invert, ForceImage,
    PixelArray, SuperpixelEstimate, Tiling, MIN_PILLAR_SPACING,
};
pub use sensitivity::{
    ac_band, gradient_crossover, gradient_crossover_grid, pillar_responsivity, sensitivity_report,
    shot_noise_sensitivity, MeasurementMode, MeasurementModel, SensitivityResult,
    DEFAULT_OPTICAL_RESOLUTION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("invalid measurement model: {reason}")]
    InvalidModel { reason: String },
    #[error("NV offset lies on the neutral axis: zero responsivity")]
    NeutralAxis,
    #[error("responsivity must be positive, got {value:.3e}")]
    NonPositiveResponsivity { value: f64 },
    #[error("AC band is empty: T_ac_max {t_max:.3e} s <= min shot period {t_min:.3e} s")]
    EmptyAcBand { t_max: f64, t_min: f64 },
    #[error("invalid pixel array: {reason}")]
    InvalidArray { reason: String },
    #[error("superpixel NV offsets are rank deficient (collinear)")]
    RankDeficientSuperpixel,
    #[error(transparent)]
    Beam(#[from] crate::beam::BeamError),
}
