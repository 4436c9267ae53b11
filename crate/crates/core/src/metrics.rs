//! RMSE and mean SSIM.
//!
//! SSIM uses the usual 11x11 Gaussian window with standard deviation 1.5 and
//! the constants `c1 = (0.01 * 255)^2`, `c2 = (0.03 * 255)^2`. Near the border
//! the window is clipped to the image and renormalized by its in-bounds mass.
//! Both metrics operate on the unquantized floating-point images.

use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Quality of one filtered image against its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub image_id: String,
    pub noise_level: f64,
    pub filter_id: String,
    pub rmse: f64,
    pub ssim: f64,
    /// Every parameter needed to reproduce the run.
    pub params_digest: String,
}

pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let ss: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok((ss / a.len() as f64).sqrt())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as isize;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as isize - r;
        *t = (-((d * d) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    taps
}

/// Five local moment planes: E[x], E[y], E[x^2], E[y^2], E[xy].
struct Moments {
    planes: [Vec<f64>; 5],
}

/// Separable weighted moments over the clipped window. The clipped window
/// is a rectangle, so its mass factors into a row part and a column part.
fn local_moments(a: &Image, b: &Image) -> Moments {
    let (w, h) = a.dimensions();
    let taps = gaussian_taps();
    let r = SSIM_WINDOW / 2;
    let (x, y) = (a.data(), b.data());
    let sources: [Vec<f64>; 5] = [
        x.to_vec(),
        y.to_vec(),
        x.iter().map(|v| v * v).collect(),
        y.iter().map(|v| v * v).collect(),
        x.iter().zip(y).map(|(u, v)| u * v).collect(),
    ];
    let span = |center: usize, len: usize| (center.saturating_sub(r), (center + r + 1).min(len));
    let mass = |center: usize, len: usize| {
        let (lo, hi) = span(center, len);
        (lo..hi).map(|i| taps[i + r - center]).sum::<f64>()
    };
    let col_mass: Vec<f64> = (0..w).map(|c| mass(c, w)).collect();
    let row_mass: Vec<f64> = (0..h).map(|rr| mass(rr, h)).collect();

    let planes = sources.map(|src| {
        let mut horiz = vec![0.0; w * h];
        for row in 0..h {
            let line = &src[row * w..(row + 1) * w];
            for col in 0..w {
                let (lo, hi) = span(col, w);
                horiz[row * w + col] = (lo..hi).map(|i| taps[i + r - col] * line[i]).sum();
            }
        }
        let mut out = vec![0.0; w * h];
        for row in 0..h {
            let (lo, hi) = span(row, h);
            for col in 0..w {
                let s: f64 = (lo..hi)
                    .map(|i| taps[i + r - row] * horiz[i * w + col])
                    .sum();
                out[row * w + col] = s / (row_mass[row] * col_mass[col]);
            }
        }
        out
    });
    Moments { planes }
}

/// Local SSIM index at every pixel.
pub fn ssim_map(a: &Image, b: &Image) -> Result<Image> {
    a.ensure_same_dims(b)?;
    let (w, h) = a.dimensions();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let m = local_moments(a, b);
    let [mx, my, mxx, myy, mxy] = &m.planes;
    let data = (0..w * h)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cov = mxy[i] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .collect();
    Ok(Image::from_parts_unchecked(w, h, data))
}

/// Mean of the local SSIM index over all pixels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    let map = ssim_map(a, b)?;
    Ok(map.data().iter().sum::<f64>() / map.len() as f64)
}
