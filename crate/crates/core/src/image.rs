//! Grayscale image buffer and patch extraction.
//!
//! Intensities are kept as `f64` from load to save. Nothing in the filtering
//! or noise pipeline clamps values; quantization happens only when an image
//! is written to disk (see [`crate::io::save_image`]).

use crate::error::{Error, Result};

/// Offset added to residual images so that zero error renders as mid-gray.
pub const RESIDUAL_OFFSET: f64 = 128.0;

/// Row-major grayscale image with real-valued intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite intensity at index {idx}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transpose(&self) -> Image {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.width {
            for r in 0..self.height {
                data.push(self.get(r, c));
            }
        }
        Image {
            width: self.height,
            height: self.width,
            data,
        }
    }

    /// Centered `side`x`side` crop. Returns a clone when the image is not
    /// larger than `side` along an axis.
    pub fn center_crop(&self, side: usize) -> Image {
        let w = self.width.min(side.max(1));
        let h = self.height.min(side.max(1));
        let c0 = (self.width - w) / 2;
        let r0 = (self.height - h) / 2;
        let mut data = Vec::with_capacity(w * h);
        for r in r0..r0 + h {
            data.extend_from_slice(&self.data[r * self.width + c0..r * self.width + c0 + w]);
        }
        Image {
            width: w,
            height: h,
            data,
        }
    }

    pub(crate) fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), width * height);
        Image {
            width,
            height,
            data,
        }
    }
}

/// Square neighborhood of intensities around a pixel, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    values: Vec<f64>,
    side: usize,
    center: (usize, usize),
}

impl Patch {
    /// Builds a patch from raw values, e.g. for tests or synthetic inputs.
    /// The center is reported as `(0, 0)`.
    pub fn from_values(side: usize, values: Vec<f64>) -> Result<Self> {
        check_odd(side)?;
        if values.len() != side * side {
            return Err(Error::InvalidParams(format!(
                "patch of side {side} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        Ok(Self {
            values,
            side,
            center: (0, 0),
        })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn check_odd(side: usize) -> Result<()> {
    if side == 0 || side.is_multiple_of(2) {
        return Err(Error::EvenSide(side));
    }
    Ok(())
}

/// Maps a possibly out-of-range coordinate into `0..len` by reflecting about
/// the edge pixels (`-1 -> 1`, `len -> len - 2`). Edge pixels are not
/// repeated. Offsets larger than the image keep bouncing between both edges.
#[inline]
pub(crate) fn mirror(index: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let n = len as isize;
    let period = 2 * (n - 1);
    let mut i = index.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Extracts the `side`x`side` patch centered on `center = (row, col)`,
/// mirroring coordinates that fall outside the image.
pub fn extract_patch(img: &Image, center: (usize, usize), side: usize) -> Result<Patch> {
    check_odd(side)?;
    let (row, col) = center;
    if row >= img.height || col >= img.width {
        return Err(Error::CenterOutOfBounds {
            row,
            col,
            width: img.width,
            height: img.height,
        });
    }
    let radius = (side / 2) as isize;
    let mut values = Vec::with_capacity(side * side);
    for dr in -radius..=radius {
        let r = mirror(row as isize + dr, img.height);
        for dc in -radius..=radius {
            let c = mirror(col as isize + dc, img.width);
            values.push(img.get(r, c));
        }
    }
    Ok(Patch {
        values,
        side,
        center,
    })
}

/// Dense table holding the patch of every pixel, `side * side` values per
/// pixel in row-major pixel order. Built once per filter run.
pub(crate) fn patch_table(img: &Image, side: usize) -> Vec<f64> {
    let n = side * side;
    let radius = (side / 2) as isize;
    let (w, h) = img.dimensions();
    let row_idx: Vec<Vec<usize>> = (0..h)
        .map(|r| {
            (-radius..=radius)
                .map(|d| mirror(r as isize + d, h))
                .collect()
        })
        .collect();
    let col_idx: Vec<Vec<usize>> = (0..w)
        .map(|c| {
            (-radius..=radius)
                .map(|d| mirror(c as isize + d, w))
                .collect()
        })
        .collect();
    let mut table = Vec::with_capacity(w * h * n);
    for rows in &row_idx {
        for cols in &col_idx {
            for &r in rows {
                for &c in cols {
                    table.push(img.data[r * w + c]);
                }
            }
        }
    }
    table
}

/// Raw per-pixel difference `filtered - reference`.
pub fn residual(filtered: &Image, reference: &Image) -> Result<Image> {
    filtered.ensure_same_dims(reference)?;
    let data = filtered
        .data
        .iter()
        .zip(&reference.data)
        .map(|(f, r)| f - r)
        .collect();
    Ok(Image::from_parts_unchecked(
        filtered.width,
        filtered.height,
        data,
    ))
}

/// Shifts a raw residual by [`RESIDUAL_OFFSET`] for display.
pub fn residual_visual(raw: &Image) -> Image {
    let data = raw.data.iter().map(|v| v + RESIDUAL_OFFSET).collect();
    Image::from_parts_unchecked(raw.width, raw.height, data)
}
