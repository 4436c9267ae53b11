//! Experiment configuration.
//!
//! Configs are TOML files: top-level keys plus `[[image]]` and `[[filter]]`
//! sections. Relative image paths are resolved against the directory of the
//! config file. See `configs/default.toml` for the full set of keys.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nlm_core::noise::sigma_for_level;
use nlm_core::{CenterWeight, FilterParams, MkForm, SearchWindow};
use serde::Deserialize;

use crate::error::{BenchError, Result};

pub const DEFAULT_NOISE_LEVELS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];
pub const DEFAULT_SEED: u64 = 20_240_521;
pub const DEFAULT_CROP: usize = 256;

/// Smoothing factors `c` (with `h = c * sigma`) found by grid search on the
/// 256x256 Lena crop, one per noise level, for a 3x3 patch, radius-10 window,
/// `rho = 1` and literal center weight. Reproduce with
/// `nlm-bench calibrate --config configs/default.toml`.
pub const CALIBRATED_NLM: [(f64, f64); 4] = [(0.05, 1.35), (0.10, 1.35), (0.15, 1.35), (0.20, 1.5)];
pub const CALIBRATED_MKNLM: [(f64, f64); 4] = [(0.05, 0.4), (0.10, 0.4), (0.15, 0.4), (0.20, 0.45)];

/// Grid searched by `calibrate` when none is given.
pub const DEFAULT_GRID: [f64; 22] = [
    0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.35, 1.5,
    1.75, 2.0, 2.5, 3.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Nlm,
    MkNlm,
}

impl FilterKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterKind::Nlm => "nlm",
            FilterKind::MkNlm => "mknlm",
        }
    }

    fn calibration_table(&self) -> &'static [(f64, f64)] {
        match self {
            FilterKind::Nlm => &CALIBRATED_NLM,
            FilterKind::MkNlm => &CALIBRATED_MKNLM,
        }
    }

    /// Shipped smoothing factor for `level`, linearly interpolated between
    /// calibrated levels and clamped outside them.
    pub fn default_factor(&self, level: f64) -> f64 {
        let table = self.calibration_table();
        let (first, last) = (table[0], table[table.len() - 1]);
        if level <= first.0 {
            return first.1;
        }
        if level >= last.0 {
            return last.1;
        }
        for pair in table.windows(2) {
            let ((l0, c0), (l1, c1)) = (pair[0], pair[1]);
            if level <= l1 {
                return c0 + (c1 - c0) * (level - l0) / (l1 - l0);
            }
        }
        last.1
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nlm" => Ok(FilterKind::Nlm),
            "mknlm" | "mk-nlm" => Ok(FilterKind::MkNlm),
            other => Err(BenchError::Config(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Where a run's smoothing parameter comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HSetting {
    /// Fixed `h` in gray levels, independent of the noise level.
    Absolute(f64),
    /// `h = c * sigma`.
    Factor(f64),
    /// Shipped calibrated factor for the filter kind and noise level.
    Calibrated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    pub id: String,
    pub kind: FilterKind,
    pub h: HSetting,
    pub patch_side: usize,
    pub search: SearchWindow,
    pub rho: f64,
    pub center_weight: CenterWeight,
    pub mk_form: MkForm,
}

/// `h` actually used for one run, with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedH {
    pub h: f64,
    pub factor: Option<f64>,
    pub source: &'static str,
}

impl FilterSpec {
    pub fn new(id: impl Into<String>, kind: FilterKind) -> Self {
        let base = FilterParams::new(1.0);
        Self {
            id: id.into(),
            kind,
            h: HSetting::Calibrated,
            patch_side: base.patch_side,
            search: base.search,
            rho: base.rho,
            center_weight: base.center_weight,
            mk_form: MkForm::default(),
        }
    }

    pub fn resolve_h(&self, level: f64) -> ResolvedH {
        let sigma = sigma_for_level(level);
        match self.h {
            HSetting::Absolute(h) => ResolvedH {
                h,
                factor: None,
                source: "explicit",
            },
            HSetting::Factor(c) => ResolvedH {
                h: c * sigma,
                factor: Some(c),
                source: "factor",
            },
            HSetting::Calibrated => {
                let c = self.kind.default_factor(level);
                ResolvedH {
                    h: c * sigma,
                    factor: Some(c),
                    source: "calibrated-default",
                }
            }
        }
    }

    pub fn params(&self, h: f64) -> FilterParams {
        FilterParams::new(h)
            .with_patch_side(self.patch_side)
            .with_search(self.search)
            .with_rho(self.rho)
            .with_center_weight(self.center_weight)
    }

    pub fn validate(&self) -> Result<()> {
        let h = match self.h {
            HSetting::Absolute(h) | HSetting::Factor(h) => h,
            HSetting::Calibrated => 1.0,
        };
        self.params(h).validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageEntry {
    pub id: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub images: Vec<ImageEntry>,
    pub noise_levels: Vec<f64>,
    pub filters: Vec<FilterSpec>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit_residuals: bool,
    /// Center crop applied to every loaded image; `None` keeps full size.
    pub crop: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(BenchError::Config("no images configured".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(BenchError::Config("no noise levels configured".into()));
        }
        if self.filters.is_empty() {
            return Err(BenchError::Config("no filters configured".into()));
        }
        for &l in &self.noise_levels {
            if !(l > 0.0 && l <= 1.0) {
                return Err(BenchError::Config(format!(
                    "noise level {l} outside (0, 1]"
                )));
            }
        }
        let mut seen = HashSet::new();
        for img in &self.images {
            if !seen.insert(img.id.as_str()) {
                return Err(BenchError::Config(format!(
                    "duplicate image id '{}'",
                    img.id
                )));
            }
        }
        let mut seen = HashSet::new();
        for f in &self.filters {
            if !seen.insert(f.id.as_str()) {
                return Err(BenchError::Config(format!(
                    "duplicate filter id '{}'",
                    f.id
                )));
            }
            f.validate()?;
        }
        if self.crop == Some(0) {
            return Err(BenchError::Config("crop must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.message().to_string()))?;
        raw.into_config(base_dir)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                BenchError::Core(nlm_core::Error::FileNotFound(path.to_path_buf()))
            } else {
                e.into()
            }
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<String>,
    noise_levels: Option<Vec<f64>>,
    emit_residuals: Option<bool>,
    crop: Option<usize>,
    #[serde(default)]
    image: Vec<RawImage>,
    #[serde(default)]
    filter: Vec<RawFilter>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImage {
    id: String,
    path: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    id: String,
    kind: String,
    h: Option<f64>,
    h_factor: Option<f64>,
    patch_side: Option<usize>,
    search_radius: Option<usize>,
    full_search: Option<bool>,
    rho: Option<f64>,
    center_weight: Option<String>,
    mk_form: Option<String>,
}

impl RawFilter {
    fn into_spec(self) -> Result<FilterSpec> {
        let kind: FilterKind = self.kind.parse()?;
        let mut spec = FilterSpec::new(self.id, kind);
        spec.h = match (self.h, self.h_factor) {
            (Some(_), Some(_)) => {
                return Err(BenchError::Config(format!(
                    "filter '{}': set either h or h_factor, not both",
                    spec.id
                )))
            }
            (Some(h), None) => HSetting::Absolute(h),
            (None, Some(c)) => HSetting::Factor(c),
            (None, None) => HSetting::Calibrated,
        };
        if let Some(side) = self.patch_side {
            spec.patch_side = side;
        }
        if let Some(r) = self.search_radius {
            spec.search = SearchWindow::Radius(r);
        }
        if self.full_search == Some(true) {
            spec.search = SearchWindow::FullImage;
        }
        if let Some(rho) = self.rho {
            spec.rho = rho;
        }
        if let Some(cw) = self.center_weight {
            spec.center_weight = cw.parse()?;
        }
        if let Some(form) = self.mk_form {
            spec.mk_form = form.parse()?;
        }
        Ok(spec)
    }
}

impl RawConfig {
    fn into_config(self, base_dir: &Path) -> Result<ExperimentConfig> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let cfg = ExperimentConfig {
            images: self
                .image
                .into_iter()
                .map(|i| ImageEntry {
                    path: resolve(&i.path),
                    id: i.id,
                })
                .collect(),
            noise_levels: self
                .noise_levels
                .unwrap_or_else(|| DEFAULT_NOISE_LEVELS.to_vec()),
            filters: self
                .filter
                .into_iter()
                .map(RawFilter::into_spec)
                .collect::<Result<_>>()?,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            output_dir: resolve(self.output_dir.as_deref().unwrap_or("results")),
            emit_residuals: self.emit_residuals.unwrap_or(false),
            crop: match self.crop {
                Some(0) => None,
                Some(c) => Some(c),
                None => Some(DEFAULT_CROP),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 9
output_dir = "out"
noise_levels = [0.05, 0.2]
crop = 0

[[image]]
id = "grad"
path = "fixtures/grad.pgm"

[[filter]]
id = "NLM"
kind = "nlm"
h_factor = 1.1

[[filter]]
id = "MK"
kind = "mknlm"
search_radius = 5
center_weight = "max"
mk_form = "intensity"
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE, Path::new("/base")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.images[0].path, PathBuf::from("/base/fixtures/grad.pgm"));
        assert_eq!(cfg.noise_levels, vec![0.05, 0.2]);
        assert_eq!(cfg.crop, None);
        assert!(!cfg.emit_residuals);
        assert_eq!(cfg.filters[0].h, HSetting::Factor(1.1));
        assert_eq!(cfg.filters[1].h, HSetting::Calibrated);
        assert_eq!(cfg.filters[1].search, SearchWindow::Radius(5));
        assert_eq!(cfg.filters[1].center_weight, CenterWeight::MaxOfOthers);
        assert_eq!(cfg.filters[1].mk_form, MkForm::WeightedIntensity);
    }

    #[test]
    fn defaults_and_rejections() {
        let minimal = "[[image]]\nid='a'\npath='a.pgm'\n[[filter]]\nid='n'\nkind='nlm'\n";
        let cfg = ExperimentConfig::from_toml_str(minimal, Path::new(".")).unwrap();
        assert_eq!(cfg.noise_levels, DEFAULT_NOISE_LEVELS.to_vec());
        assert_eq!(cfg.crop, Some(DEFAULT_CROP));
        assert_eq!(cfg.seed, DEFAULT_SEED);

        let bad = [
            "noise_levels=[0.1]\n[[filter]]\nid='n'\nkind='nlm'\n",
            "[[image]]\nid='a'\npath='a'\n",
            "noise_levels=[1.5]\n[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='nlm'\n",
            "noise_levels=[]\n[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='nlm'\n",
            "[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='bm3d'\n",
            "[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='nlm'\nh=1\nh_factor=1\n",
            "[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='nlm'\npatch_side=4\n",
            "[[image]]\nid='a'\npath='a'\n[[image]]\nid='a'\npath='b'\n[[filter]]\nid='n'\nkind='nlm'\n",
            "typo=1\n[[image]]\nid='a'\npath='a'\n[[filter]]\nid='n'\nkind='nlm'\n",
        ];
        for text in bad {
            assert!(
                ExperimentConfig::from_toml_str(text, Path::new(".")).is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn h_resolution() {
        let mut spec = FilterSpec::new("x", FilterKind::Nlm);
        let r = spec.resolve_h(0.1);
        assert_eq!(r.source, "calibrated-default");
        assert!((r.h - FilterKind::Nlm.default_factor(0.1) * 25.5).abs() < 1e-12);
        spec.h = HSetting::Factor(0.5);
        assert_eq!(spec.resolve_h(0.2).h, 0.5 * 51.0);
        spec.h = HSetting::Absolute(7.0);
        assert_eq!(spec.resolve_h(0.2).h, 7.0);
        assert_eq!(spec.resolve_h(0.2).factor, None);
    }

    #[test]
    fn default_factor_interpolates_and_clamps() {
        for kind in [FilterKind::Nlm, FilterKind::MkNlm] {
            let t = kind.calibration_table();
            for &(l, c) in t {
                assert_eq!(kind.default_factor(l), c);
            }
            assert_eq!(kind.default_factor(0.01), t[0].1);
            assert_eq!(kind.default_factor(0.9), t[t.len() - 1].1);
            let mid = kind.default_factor(0.075);
            let (lo, hi) = (t[0].1.min(t[1].1), t[0].1.max(t[1].1));
            assert!(mid >= lo && mid <= hi);
        }
    }
}
