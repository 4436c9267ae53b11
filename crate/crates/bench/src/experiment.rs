//! Running the full image x level x filter grid.

use std::fs;
use std::path::Path;

use nlm_core::noise::{sigma_for_level, RNG_ALGORITHM};
use nlm_core::{
    add_gaussian_noise, load_image, mk_nlm_filter_with, nlm_filter, residual, residual_visual,
    rmse, save_image, ssim, Image, MetricReport, NoiseSpec,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, FilterKind, FilterSpec, ResolvedH};
use crate::error::{BenchError, Result};
use crate::report;
use crate::seed::{derive_seed, image_digest};

pub const NOISE_CONVENTION: &str = "sigma=level*255";

/// Applies the configured filter to `noisy` with smoothing parameter `h`.
pub fn run_filter(spec: &FilterSpec, noisy: &Image, h: f64) -> Result<Image> {
    let params = spec.params(h);
    let out = match spec.kind {
        FilterKind::Nlm => nlm_filter(noisy, &params)?,
        FilterKind::MkNlm => mk_nlm_filter_with(noisy, &params, spec.mk_form)?,
    };
    Ok(out)
}

/// Human-readable record of everything that determines one run's output.
pub fn params_digest(
    spec: &FilterSpec,
    resolved: &ResolvedH,
    seed: u64,
    crop: Option<usize>,
    size: (usize, usize),
) -> String {
    let mut s = format!("kind={}", spec.kind);
    if spec.kind == FilterKind::MkNlm {
        s.push_str(&format!(";form={}", spec.mk_form));
    }
    s.push_str(&format!(";h={:.6}", resolved.h));
    match resolved.factor {
        Some(c) => s.push_str(&format!(";c={c}({})", resolved.source)),
        None => s.push_str(&format!(";c=none({})", resolved.source)),
    }
    s.push_str(&format!(
        ";patch={};search={};rho={};center={};seed={seed};rng={RNG_ALGORITHM};noise={NOISE_CONVENTION};crop={};size={}x{}",
        spec.patch_side,
        spec.search,
        spec.rho,
        spec.center_weight.as_str(),
        crop.map_or("none".to_string(), |c| c.to_string()),
        size.0,
        size.1,
    ));
    s
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Ok,
    Failed { kind: String, message: String },
}

/// One (image, level, filter) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub image_id: String,
    pub noise_level: f64,
    pub sigma: f64,
    pub filter_id: String,
    pub status: Status,
    pub rmse: Option<f64>,
    pub ssim: Option<f64>,
    pub best_rmse: bool,
    pub best_ssim: bool,
    pub noisy_rmse: Option<f64>,
    pub mean_abs_residual: Option<f64>,
    pub noisy_digest: Option<String>,
    pub params_digest: String,
}

impl Row {
    pub fn report(&self) -> Option<MetricReport> {
        Some(MetricReport {
            image_id: self.image_id.clone(),
            noise_level: self.noise_level,
            filter_id: self.filter_id.clone(),
            rmse: self.rmse?,
            ssim: self.ssim?,
            params_digest: self.params_digest.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<Row>,
    pub image_ids: Vec<String>,
    pub noise_levels: Vec<f64>,
    pub filter_ids: Vec<String>,
    pub seed: u64,
    pub crop: Option<usize>,
}

impl ResultsTable {
    pub fn row(&self, image_id: &str, level: f64, filter_id: &str) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.image_id == image_id && r.noise_level == level && r.filter_id == filter_id)
    }

    /// Flags the lowest-RMSE and highest-SSIM row of every (image, level)
    /// cell. Ties go to the filter listed first; failed rows never win.
    pub fn mark_best(&mut self) {
        for r in &mut self.rows {
            r.best_rmse = false;
            r.best_ssim = false;
        }
        for image in &self.image_ids {
            for &level in &self.noise_levels {
                let idx: Vec<usize> = (0..self.rows.len())
                    .filter(|&i| {
                        self.rows[i].image_id == *image && self.rows[i].noise_level == level
                    })
                    .collect();
                let pick = |key: &dyn Fn(&Row) -> Option<f64>, better: fn(f64, f64) -> bool| {
                    let mut best: Option<(usize, f64)> = None;
                    for &i in &idx {
                        if let Some(v) = key(&self.rows[i]) {
                            if best.is_none_or(|(_, b)| better(v, b)) {
                                best = Some((i, v));
                            }
                        }
                    }
                    best.map(|(i, _)| i)
                };
                let r = pick(&|row| row.rmse, |v, b| v < b);
                let s = pick(&|row| row.ssim, |v, b| v > b);
                if let Some(i) = r {
                    self.rows[i].best_rmse = true;
                }
                if let Some(i) = s {
                    self.rows[i].best_ssim = true;
                }
            }
        }
    }
}

struct Prepared {
    id: String,
    clean: std::result::Result<Image, BenchError>,
}

struct NoisyCell {
    noisy: Image,
    digest: String,
    noisy_rmse: f64,
}

fn load_clean(path: &Path, crop: Option<usize>) -> Result<Image> {
    let img = load_image(path)?;
    Ok(match crop {
        Some(side) => img.center_crop(side),
        None => img,
    })
}

fn failed_row(
    image_id: &str,
    level: f64,
    spec: &FilterSpec,
    err: &BenchError,
    noisy_digest: Option<String>,
    params: String,
) -> Row {
    Row {
        image_id: image_id.to_string(),
        noise_level: level,
        sigma: sigma_for_level(level),
        filter_id: spec.id.clone(),
        status: Status::Failed {
            kind: err.kind().to_string(),
            message: err.to_string(),
        },
        rmse: None,
        ssim: None,
        best_rmse: false,
        best_ssim: false,
        noisy_rmse: None,
        mean_abs_residual: None,
        noisy_digest,
        params_digest: params,
    }
}

fn level_tag(level: f64) -> String {
    format!("{level}")
}

/// Runs every configured cell and returns the table with best markers set.
/// Nothing is written to disk except residual images when requested; use
/// [`run_and_persist`] for the full pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let images: Vec<Prepared> = cfg
        .images
        .par_iter()
        .map(|e| Prepared {
            id: e.id.clone(),
            clean: load_clean(&e.path, cfg.crop),
        })
        .collect();

    // Noise is drawn once per (image, level) and shared by every filter.
    let noisy: Vec<Vec<Option<NoisyCell>>> = images
        .par_iter()
        .map(|p| {
            cfg.noise_levels
                .iter()
                .map(|&level| {
                    let clean = p.clean.as_ref().ok()?;
                    let spec = NoiseSpec::new(level, derive_seed(cfg.seed, &p.id, level)).ok()?;
                    let noisy = add_gaussian_noise(clean, &spec);
                    Some(NoisyCell {
                        digest: image_digest(&noisy),
                        noisy_rmse: rmse(&noisy, clean).ok()?,
                        noisy,
                    })
                })
                .collect()
        })
        .collect();

    if cfg.emit_residuals {
        let dir = cfg.output_dir.join("images");
        fs::create_dir_all(&dir)?;
        for (p, cells) in images.iter().zip(&noisy) {
            for (&level, cell) in cfg.noise_levels.iter().zip(cells) {
                if let Some(cell) = cell {
                    let name = format!("{}_{}_noisy.png", p.id, level_tag(level));
                    save_image(&cell.noisy, dir.join(name))?;
                }
            }
        }
    }

    let mut jobs = Vec::new();
    for ii in 0..images.len() {
        for li in 0..cfg.noise_levels.len() {
            for fi in 0..cfg.filters.len() {
                jobs.push((ii, li, fi));
            }
        }
    }

    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(ii, li, fi)| {
            let p = &images[ii];
            let level = cfg.noise_levels[li];
            let spec = &cfg.filters[fi];
            let resolved = spec.resolve_h(level);
            let clean = match &p.clean {
                Ok(c) => c,
                Err(e) => {
                    let params = params_digest(spec, &resolved, cfg.seed, cfg.crop, (0, 0));
                    return failed_row(&p.id, level, spec, e, None, params);
                }
            };
            let params = params_digest(spec, &resolved, cfg.seed, cfg.crop, clean.dimensions());
            let Some(cell) = &noisy[ii][li] else {
                let err = BenchError::Core(nlm_core::Error::InvalidNoiseLevel(level));
                return failed_row(&p.id, level, spec, &err, None, params);
            };
            match run_cell(cfg, &p.id, level, spec, &resolved, clean, cell) {
                Ok((rmse_v, ssim_v, mar)) => Row {
                    image_id: p.id.clone(),
                    noise_level: level,
                    sigma: sigma_for_level(level),
                    filter_id: spec.id.clone(),
                    status: Status::Ok,
                    rmse: Some(rmse_v),
                    ssim: Some(ssim_v),
                    best_rmse: false,
                    best_ssim: false,
                    noisy_rmse: Some(cell.noisy_rmse),
                    mean_abs_residual: Some(mar),
                    noisy_digest: Some(cell.digest.clone()),
                    params_digest: params,
                },
                Err(e) => failed_row(&p.id, level, spec, &e, Some(cell.digest.clone()), params),
            }
        })
        .collect();

    // A digest mismatch means filters did not share one noisy instance; that
    // invalidates the whole comparison, so it aborts rather than being recorded.
    if let Some(r) = rows
        .iter()
        .find(|r| matches!(&r.status, Status::Failed { kind, .. } if kind == "NoisyMismatch"))
    {
        return Err(BenchError::NoisyMismatch {
            image: r.image_id.clone(),
            level: r.noise_level,
        });
    }

    let mut table = ResultsTable {
        rows,
        image_ids: images.iter().map(|p| p.id.clone()).collect(),
        noise_levels: cfg.noise_levels.clone(),
        filter_ids: cfg.filters.iter().map(|f| f.id.clone()).collect(),
        seed: cfg.seed,
        crop: cfg.crop,
    };
    table.mark_best();
    Ok(table)
}

fn run_cell(
    cfg: &ExperimentConfig,
    image_id: &str,
    level: f64,
    spec: &FilterSpec,
    resolved: &ResolvedH,
    clean: &Image,
    cell: &NoisyCell,
) -> Result<(f64, f64, f64)> {
    if image_digest(&cell.noisy) != cell.digest {
        return Err(BenchError::NoisyMismatch {
            image: image_id.to_string(),
            level,
        });
    }
    let filtered = run_filter(spec, &cell.noisy, resolved.h)?;
    let res = residual(&filtered, &cell.noisy)?;
    let mar = res.data().iter().map(|v| v.abs()).sum::<f64>() / res.len() as f64;
    if cfg.emit_residuals {
        let dir = cfg.output_dir.join("images");
        let stem = format!("{image_id}_{}_{}", level_tag(level), spec.id);
        save_image(&filtered, dir.join(format!("{stem}_filtered.png")))?;
        save_image(
            &residual_visual(&res),
            dir.join(format!("{stem}_residual.png")),
        )?;
    }
    Ok((rmse(&filtered, clean)?, ssim(&filtered, clean)?, mar))
}

/// Runs the experiment and writes `results.csv` and `results.md` into the
/// configured output directory.
pub fn run_and_persist(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    let table = run_experiment(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    report::write_table(
        &table,
        report::Format::Csv,
        &cfg.output_dir.join("results.csv"),
    )?;
    report::write_table(
        &table,
        report::Format::Markdown,
        &cfg.output_dir.join("results.md"),
    )?;
    Ok(table)
}
