//! Modified-kernel non-local means (MK-NLM).
//!
//! Every pixel of a patch gets a typicality weight
//!
//! ```text
//! weight_i = 1 / (1 + sqrt(sum_j (a_i - a_j)^2))
//! ```
//!
//! so intensities far from the rest of their patch (outliers) count for
//! little. Two patches are then compared with a weighted distance whose
//! normalizer is the per-pair scalar `sum_k wp[k] * wq[k]` over patch
//! positions `k` (it does not range over the search window). Two forms of the
//! numerator are available, see [`MkForm`]:
//!
//! ```text
//! difference: sum_k G[k] * wp[k] * wq[k] * (p[k] - q[k])^2  /  sum_k wp[k] * wq[k]
//! intensity:  sum_k G[k] * (wp[k] * p[k] - wq[k] * q[k])^2  /  sum_k wp[k] * wq[k]
//! ```
//!
//! The distance replaces `d` inside the usual `exp(-d / h^2)` weight;
//! everything else is the NLM pipeline.
//!
//! NOTE: the intensity form multiplies raw gray levels by weights that swing
//! with the local noise, so flat bright regions look dissimilar to each other
//! and the filter denoises far worse than plain NLM. The difference form keeps
//! the same weights and normalizer but applies them to the squared
//! differences, which is what suppresses outliers. It is the default.
//!
//! For two internally constant patches all weights are 1 and both forms give
//! `d / N`, so MK-NLM with `h / sqrt(N)` matches NLM with `h` there. In
//! practice `h` for MK-NLM is calibrated separately.

use crate::error::{Error, Result};
use crate::image::{patch_table, Image, Patch};
use crate::nlm::{
    check_pixel, filter_with, gaussian_kernel, weights_with, FilterParams, PairDistance,
    SpatialKernel,
};

/// Numerator of the modified-kernel distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MkForm {
    /// `sum_k G[k] * wp[k] * wq[k] * (p[k] - q[k])^2`
    #[default]
    WeightedDifference,
    /// `sum_k G[k] * (wp[k] * p[k] - wq[k] * q[k])^2`
    WeightedIntensity,
}

impl MkForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            MkForm::WeightedDifference => "difference",
            MkForm::WeightedIntensity => "intensity",
        }
    }
}

impl std::fmt::Display for MkForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MkForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "difference" => Ok(MkForm::WeightedDifference),
            "intensity" => Ok(MkForm::WeightedIntensity),
            other => Err(Error::InvalidParams(format!(
                "unknown MK-NLM form '{other}'"
            ))),
        }
    }
}

/// Per-pixel typicality weights of one patch, in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntraPatchWeights {
    values: Vec<f64>,
}

impl IntraPatchWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Writes the typicality weight of each entry of `values` into `out`.
/// The sum over `j` includes `j == i`, which contributes zero.
#[inline]
fn fill_weights(values: &[f64], out: &mut [f64]) {
    for (ai, wi) in values.iter().zip(out.iter_mut()) {
        let ss: f64 = values
            .iter()
            .map(|aj| {
                let d = ai - aj;
                d * d
            })
            .sum();
        *wi = 1.0 / (1.0 + ss.sqrt());
    }
}

pub fn intra_patch_weights(p: &Patch) -> IntraPatchWeights {
    let mut values = vec![0.0; p.len()];
    fill_weights(p.values(), &mut values);
    IntraPatchWeights { values }
}

#[inline]
fn mk_terms(
    form: MkForm,
    kernel: &[f64],
    p: &[f64],
    wp: &[f64],
    q: &[f64],
    wq: &[f64],
) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    match form {
        MkForm::WeightedDifference => {
            for k in 0..kernel.len() {
                let joint = wp[k] * wq[k];
                let d = p[k] - q[k];
                num += kernel[k] * joint * d * d;
                den += joint;
            }
        }
        MkForm::WeightedIntensity => {
            for k in 0..kernel.len() {
                let d = wp[k] * p[k] - wq[k] * q[k];
                num += kernel[k] * d * d;
                den += wp[k] * wq[k];
            }
        }
    }
    (num, den)
}

/// Modified-kernel distance in the default [`MkForm`].
pub fn mk_distance(
    p: &Patch,
    q: &Patch,
    wp: &IntraPatchWeights,
    wq: &IntraPatchWeights,
    kernel: &SpatialKernel,
) -> Result<f64> {
    mk_distance_with(MkForm::default(), p, q, wp, wq, kernel)
}

pub fn mk_distance_with(
    form: MkForm,
    p: &Patch,
    q: &Patch,
    wp: &IntraPatchWeights,
    wq: &IntraPatchWeights,
    kernel: &SpatialKernel,
) -> Result<f64> {
    let n = p.len();
    if p.side() != q.side() {
        return Err(Error::SideMismatch(p.side(), q.side()));
    }
    if p.side() != kernel.side() {
        return Err(Error::SideMismatch(p.side(), kernel.side()));
    }
    if wp.len() != n || wq.len() != n {
        return Err(Error::InvalidParams(format!(
            "weight vectors of length {} and {} for patches of {n} values",
            wp.len(),
            wq.len()
        )));
    }
    let (num, den) = mk_terms(
        form,
        kernel.values(),
        p.values(),
        wp.values(),
        q.values(),
        wq.values(),
    );
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(num / den)
}

/// Patches and their intra-patch weights for every pixel, computed once
/// before filtering and shared read-only by all workers.
struct WeightedPatchField {
    form: MkForm,
    table: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
    kernel: Vec<f64>,
}

impl WeightedPatchField {
    fn new(img: &Image, params: &FilterParams, form: MkForm) -> Result<Self> {
        let kernel = gaussian_kernel(params.patch_side, params.rho)?;
        let n = params.patch_side * params.patch_side;
        let table = patch_table(img, params.patch_side);
        let mut weights = vec![0.0; table.len()];
        for (vals, ws) in table.chunks_exact(n).zip(weights.chunks_exact_mut(n)) {
            fill_weights(vals, ws);
        }
        Ok(Self {
            form,
            table,
            weights,
            n,
            kernel: kernel.values().to_vec(),
        })
    }
}

impl PairDistance for WeightedPatchField {
    #[inline]
    fn distance(&self, p: usize, q: usize) -> f64 {
        let n = self.n;
        let (pr, qr) = (p * n..(p + 1) * n, q * n..(q + 1) * n);
        let (num, den) = mk_terms(
            self.form,
            &self.kernel,
            &self.table[pr.clone()],
            &self.weights[pr],
            &self.table[qr.clone()],
            &self.weights[qr],
        );
        num / den
    }
}

/// Normalized MK-NLM weights of every window pixel for the pixel at `p`.
pub fn mk_nlm_weights(
    img: &Image,
    p: (usize, usize),
    params: &FilterParams,
) -> Result<Vec<((usize, usize), f64)>> {
    mk_nlm_weights_with(img, p, params, MkForm::default())
}

pub fn mk_nlm_weights_with(
    img: &Image,
    p: (usize, usize),
    params: &FilterParams,
    form: MkForm,
) -> Result<Vec<((usize, usize), f64)>> {
    params.validate()?;
    check_pixel(img, p.0, p.1)?;
    let field = WeightedPatchField::new(img, params, form)?;
    Ok(weights_with(img, &field, params, p.0, p.1))
}

pub fn mk_nlm_filter(img: &Image, params: &FilterParams) -> Result<Image> {
    mk_nlm_filter_with(img, params, MkForm::default())
}

pub fn mk_nlm_filter_with(img: &Image, params: &FilterParams, form: MkForm) -> Result<Image> {
    params.validate()?;
    let field = WeightedPatchField::new(img, params, form)?;
    Ok(filter_with(img, &field, params))
}
