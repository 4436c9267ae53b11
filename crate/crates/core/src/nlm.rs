//! Classic non-local means.
//!
//! Each output pixel is a normalized weighted average of the pixels `q` in a
//! search window around `p`, with weights `exp(-d(p, q) / h^2)` where `d` is
//! the Gaussian-weighted squared distance between the patches around `p` and
//! `q`. The distance is not divided by the patch size, so `h` is in gray-level
//! units.
//!
//! The per-pixel averaging loop is shared with the modified-kernel filter in
//! [`crate::mknlm`]; only the pairwise distance differs.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{check_odd, extract_patch, patch_table, Image, Patch};

pub const DEFAULT_PATCH_SIDE: usize = 3;
pub const DEFAULT_SEARCH_RADIUS: usize = 10;
pub const DEFAULT_RHO: f64 = 1.0;

/// Set of candidate pixels compared against each processed pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchWindow {
    /// Square of the given radius around the pixel, clipped to the image.
    Radius(usize),
    /// Every pixel of the image.
    FullImage,
}

impl fmt::Display for SearchWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchWindow::Radius(r) => write!(f, "{r}"),
            SearchWindow::FullImage => f.write_str("full"),
        }
    }
}

/// How the self-comparison weight `w(p, p)` is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CenterWeight {
    /// `p` takes part like any other pixel, with distance 0.
    #[default]
    Literal,
    /// `p` receives the largest weight among the other window pixels.
    MaxOfOthers,
}

impl CenterWeight {
    pub fn as_str(&self) -> &'static str {
        match self {
            CenterWeight::Literal => "literal",
            CenterWeight::MaxOfOthers => "max",
        }
    }
}

impl fmt::Display for CenterWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CenterWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(CenterWeight::Literal),
            "max" | "max-of-others" => Ok(CenterWeight::MaxOfOthers),
            other => Err(Error::InvalidParams(format!(
                "unknown center weight policy '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub patch_side: usize,
    pub search: SearchWindow,
    /// Smoothing parameter, gray-level units.
    pub h: f64,
    /// Standard deviation of the spatial kernel inside the patch distance.
    pub rho: f64,
    pub center_weight: CenterWeight,
}

impl FilterParams {
    /// 3x3 patches, 21x21 search window, `rho = 1`, literal center weight.
    pub fn new(h: f64) -> Self {
        Self {
            patch_side: DEFAULT_PATCH_SIDE,
            search: SearchWindow::Radius(DEFAULT_SEARCH_RADIUS),
            h,
            rho: DEFAULT_RHO,
            center_weight: CenterWeight::Literal,
        }
    }

    pub fn with_patch_side(mut self, side: usize) -> Self {
        self.patch_side = side;
        self
    }

    pub fn with_search(mut self, search: SearchWindow) -> Self {
        self.search = search;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_center_weight(mut self, policy: CenterWeight) -> Self {
        self.center_weight = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_odd(self.patch_side)?;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "h must be positive and finite, got {}",
                self.h
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::NonPositiveRho(self.rho));
        }
        if self.search == SearchWindow::Radius(0) {
            return Err(Error::InvalidParams("search radius must be >= 1".into()));
        }
        Ok(())
    }
}

/// Normalized isotropic Gaussian over a `side`x`side` patch, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialKernel {
    values: Vec<f64>,
    side: usize,
}

impl SpatialKernel {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn side(&self) -> usize {
        self.side
    }
}

pub fn gaussian_kernel(side: usize, rho: f64) -> Result<SpatialKernel> {
    check_odd(side)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveRho(rho));
    }
    let radius = (side / 2) as isize;
    let two_var = 2.0 * rho * rho;
    let mut values = Vec::with_capacity(side * side);
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            let d2 = (dr * dr + dc * dc) as f64;
            values.push((-d2 / two_var).exp());
        }
    }
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    Ok(SpatialKernel { values, side })
}

#[inline]
pub(crate) fn weighted_sq_diff(kernel: &[f64], a: &[f64], b: &[f64]) -> f64 {
    kernel
        .iter()
        .zip(a.iter().zip(b))
        .map(|(k, (x, y))| {
            let d = x - y;
            k * d * d
        })
        .sum()
}

/// Gaussian-weighted squared distance `sum_k kernel[k] * (p[k] - q[k])^2`.
pub fn patch_distance(p: &Patch, q: &Patch, kernel: &SpatialKernel) -> Result<f64> {
    if p.side() != q.side() {
        return Err(Error::SideMismatch(p.side(), q.side()));
    }
    if p.side() != kernel.side() {
        return Err(Error::SideMismatch(p.side(), kernel.side()));
    }
    Ok(weighted_sq_diff(kernel.values(), p.values(), q.values()))
}

/// Pairwise patch distance between two pixels, addressed by linear index.
pub(crate) trait PairDistance: Sync {
    fn distance(&self, p: usize, q: usize) -> f64;
}

/// Precomputed patches for every pixel plus the spatial kernel.
pub(crate) struct PatchField {
    table: Vec<f64>,
    n: usize,
    kernel: Vec<f64>,
}

impl PatchField {
    pub(crate) fn new(img: &Image, params: &FilterParams) -> Result<Self> {
        let kernel = gaussian_kernel(params.patch_side, params.rho)?;
        Ok(Self {
            table: patch_table(img, params.patch_side),
            n: params.patch_side * params.patch_side,
            kernel: kernel.values,
        })
    }
}

impl PairDistance for PatchField {
    #[inline]
    fn distance(&self, p: usize, q: usize) -> f64 {
        let n = self.n;
        weighted_sq_diff(
            &self.kernel,
            &self.table[p * n..(p + 1) * n],
            &self.table[q * n..(q + 1) * n],
        )
    }
}

/// Half-open row and column ranges of the search window around a pixel.
#[derive(Clone, Copy, Debug)]
pub(crate) struct WindowBounds {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl WindowBounds {
    pub(crate) fn around(
        search: SearchWindow,
        width: usize,
        height: usize,
        row: usize,
        col: usize,
    ) -> Self {
        match search {
            SearchWindow::FullImage => Self {
                rows: (0, height),
                cols: (0, width),
            },
            SearchWindow::Radius(r) => Self {
                rows: (row.saturating_sub(r), (row + r + 1).min(height)),
                cols: (col.saturating_sub(r), (col + r + 1).min(width)),
            },
        }
    }

    fn len(&self) -> usize {
        (self.rows.1 - self.rows.0) * (self.cols.1 - self.cols.0)
    }
}

/// Fills `buf` with the unnormalized weights of every window pixel in
/// row-major order and returns their sum.
///
/// Weights are `exp(-(d - d_min) / h^2)`; the common shift cancels on
/// normalization and keeps the largest weight at 1 so the sum never
/// underflows.
pub(crate) fn raw_weights<D: PairDistance>(
    dist: &D,
    params: &FilterParams,
    width: usize,
    win: &WindowBounds,
    row: usize,
    col: usize,
    buf: &mut Vec<f64>,
) -> f64 {
    let p = row * width + col;
    buf.clear();
    buf.reserve(win.len());
    let mut self_slot = usize::MAX;
    let mut min_other = f64::INFINITY;
    for r in win.rows.0..win.rows.1 {
        for c in win.cols.0..win.cols.1 {
            let q = r * width + c;
            if q == p {
                self_slot = buf.len();
                buf.push(0.0);
            } else {
                let d = dist.distance(p, q);
                min_other = min_other.min(d);
                buf.push(d);
            }
        }
    }
    let shift = match params.center_weight {
        CenterWeight::Literal => 0.0,
        CenterWeight::MaxOfOthers if min_other.is_finite() => {
            buf[self_slot] = min_other;
            min_other
        }
        CenterWeight::MaxOfOthers => 0.0,
    };
    let inv_h2 = 1.0 / (params.h * params.h);
    let mut total = 0.0;
    for v in buf.iter_mut() {
        *v = (-(*v - shift) * inv_h2).exp();
        total += *v;
    }
    total
}

pub(crate) fn weights_with<D: PairDistance>(
    img: &Image,
    dist: &D,
    params: &FilterParams,
    row: usize,
    col: usize,
) -> Vec<((usize, usize), f64)> {
    let (w, h) = img.dimensions();
    let win = WindowBounds::around(params.search, w, h, row, col);
    let mut buf = Vec::new();
    let total = raw_weights(dist, params, w, &win, row, col, &mut buf);
    let coords =
        (win.rows.0..win.rows.1).flat_map(|r| (win.cols.0..win.cols.1).map(move |c| (r, c)));
    coords.zip(buf).map(|(rc, v)| (rc, v / total)).collect()
}

/// Runs the weighted average over every pixel; rows are processed in
/// parallel and each pixel's arithmetic is independent of the thread count.
pub(crate) fn filter_with<D: PairDistance>(img: &Image, dist: &D, params: &FilterParams) -> Image {
    let (w, h) = img.dimensions();
    let src = img.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w)
        .enumerate()
        .for_each_init(Vec::new, |buf, (row, out_row)| {
            for (col, o) in out_row.iter_mut().enumerate() {
                let win = WindowBounds::around(params.search, w, h, row, col);
                let total = raw_weights(dist, params, w, &win, row, col, buf);
                let mut acc = 0.0;
                let mut k = 0;
                for r in win.rows.0..win.rows.1 {
                    let line = &src[r * w + win.cols.0..r * w + win.cols.1];
                    for v in line {
                        acc += buf[k] * v;
                        k += 1;
                    }
                }
                *o = acc / total;
            }
        });
    Image::from_parts_unchecked(w, h, out)
}

pub(crate) fn check_pixel(img: &Image, row: usize, col: usize) -> Result<()> {
    if row >= img.height() || col >= img.width() {
        return Err(Error::OutOfBounds {
            row,
            col,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

/// Normalized NLM weights of every window pixel for the pixel at `p`.
pub fn nlm_weights(
    img: &Image,
    p: (usize, usize),
    params: &FilterParams,
) -> Result<Vec<((usize, usize), f64)>> {
    params.validate()?;
    check_pixel(img, p.0, p.1)?;
    // Only the patches inside the window are needed; build them on demand.
    let kernel = gaussian_kernel(params.patch_side, params.rho)?;
    let lazy = LazyPatches {
        img,
        side: params.patch_side,
        kernel: &kernel,
    };
    Ok(weights_with(img, &lazy, params, p.0, p.1))
}

struct LazyPatches<'a> {
    img: &'a Image,
    side: usize,
    kernel: &'a SpatialKernel,
}

impl PairDistance for LazyPatches<'_> {
    fn distance(&self, p: usize, q: usize) -> f64 {
        let w = self.img.width();
        let pp = extract_patch(self.img, (p / w, p % w), self.side).expect("pixel in bounds");
        let qq = extract_patch(self.img, (q / w, q % w), self.side).expect("pixel in bounds");
        weighted_sq_diff(self.kernel.values(), pp.values(), qq.values())
    }
}

pub fn nlm_filter(img: &Image, params: &FilterParams) -> Result<Image> {
    params.validate()?;
    let field = PatchField::new(img, params)?;
    Ok(filter_with(img, &field, params))
}
