//! Grayscale image denoising with non-local means (NLM) and its
//! modified-kernel variant (MK-NLM), plus the pieces needed to benchmark
//! them: seeded Gaussian noise, RMSE/SSIM and PGM/PNG I/O.
//!
//! ```
//! use nlm_core::{add_gaussian_noise, mk_nlm_filter, rmse, FilterParams, Image, NoiseSpec};
//!
//! let clean = Image::from_fn(32, 32, |r, c| if (r / 8 + c / 8) % 2 == 0 { 60.0 } else { 190.0 })?;
//! let noisy = add_gaussian_noise(&clean, &NoiseSpec::new(0.10, 7)?);
//! let out = mk_nlm_filter(&noisy, &FilterParams::new(10.0))?;
//! assert!(rmse(&out, &clean)? < rmse(&noisy, &clean)?);
//! # Ok::<(), nlm_core::Error>(())
//! ```

pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod mknlm;
pub mod nlm;
pub mod noise;

pub use error::{Error, Result};
pub use image::{extract_patch, residual, residual_visual, Image, Patch};
pub use io::{load_image, save_image};
pub use metrics::{rmse, ssim, MetricReport};
pub use mknlm::{
    intra_patch_weights, mk_distance, mk_distance_with, mk_nlm_filter, mk_nlm_filter_with,
    mk_nlm_weights, mk_nlm_weights_with, IntraPatchWeights, MkForm,
};
pub use nlm::{
    gaussian_kernel, nlm_filter, nlm_weights, patch_distance, CenterWeight, FilterParams,
    SearchWindow, SpatialKernel,
};
pub use noise::{add_gaussian_noise, NoiseSpec};
