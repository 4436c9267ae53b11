use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlm_bench::config::{DEFAULT_GRID, DEFAULT_NOISE_LEVELS, DEFAULT_SEED};
use nlm_bench::seed::derive_seed;
use nlm_bench::{
    calibrate_h, report, run_and_persist, run_filter, BenchError, ExperimentConfig, FilterKind,
    FilterSpec, Format, HSetting, ImageEntry, Result,
};
use nlm_core::{
    add_gaussian_noise, load_image, residual, residual_visual, rmse, save_image, ssim, NoiseSpec,
    SearchWindow,
};

#[derive(Parser)]
#[command(
    name = "nlm-bench",
    version,
    about = "NLM / MK-NLM denoising benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise one image with one filter, optionally adding noise first.
    Denoise(DenoiseArgs),
    /// Run the full experiment described by a config file.
    Bench(BenchArgs),
    /// Grid-search the smoothing factor c (h = c * sigma).
    Calibrate(CalibrateArgs),
    /// Compare two images: RMSE and SSIM.
    Metrics(MetricsArgs),
}

/// Filter parameter overrides shared by every subcommand that filters.
#[derive(Args, Clone, Default)]
struct FilterFlags {
    /// Smoothing parameter in gray levels.
    #[arg(long, conflicts_with = "h_factor")]
    h: Option<f64>,
    /// Smoothing factor c, with h = c * sigma.
    #[arg(long)]
    h_factor: Option<f64>,
    #[arg(long)]
    patch_side: Option<usize>,
    #[arg(long, conflicts_with = "full_search")]
    search_radius: Option<usize>,
    #[arg(long)]
    full_search: bool,
    /// Center-pixel weight policy: literal or max.
    #[arg(long)]
    center_weight: Option<String>,
    /// MK-NLM distance form: difference or intensity.
    #[arg(long)]
    mk_form: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
}

impl FilterFlags {
    fn apply(&self, spec: &mut FilterSpec) -> Result<()> {
        if let Some(h) = self.h {
            spec.h = HSetting::Absolute(h);
        }
        if let Some(c) = self.h_factor {
            spec.h = HSetting::Factor(c);
        }
        if let Some(side) = self.patch_side {
            spec.patch_side = side;
        }
        if let Some(r) = self.search_radius {
            spec.search = SearchWindow::Radius(r);
        }
        if self.full_search {
            spec.search = SearchWindow::FullImage;
        }
        if let Some(cw) = &self.center_weight {
            spec.center_weight = cw.parse()?;
        }
        if let Some(f) = &self.mk_form {
            spec.mk_form = f.parse()?;
        }
        if let Some(rho) = self.rho {
            spec.rho = rho;
        }
        spec.validate()
    }
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    image: PathBuf,
    /// nlm or mknlm.
    #[arg(long, default_value = "mknlm")]
    filter: String,
    /// Add Gaussian noise of this level (fraction of 255) before filtering.
    #[arg(long)]
    noise_level: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output path for the filtered image (.png or PGM).
    #[arg(long)]
    out: PathBuf,
    /// Also write the noisy input and the residual next to the output.
    #[arg(long)]
    emit_residuals: bool,
    #[command(flatten)]
    flags: FilterFlags,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise level(s), overriding the config. Repeatable.
    #[arg(long)]
    noise_level: Vec<f64>,
    /// Only run filters of this kind.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    emit_residuals: bool,
    /// Center crop side; 0 disables cropping.
    #[arg(long)]
    crop: Option<usize>,
    /// Format printed to stdout; both formats are always written to disk.
    #[arg(long, default_value = "md")]
    format: String,
    #[command(flatten)]
    flags: FilterFlags,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Calibrate on this image instead of the config's images.
    #[arg(long, conflicts_with = "config")]
    image: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// nlm or mknlm; both when omitted.
    #[arg(long)]
    filter: Option<String>,
    /// Noise level(s). Repeatable.
    #[arg(long)]
    noise_level: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated factors c.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Center crop side; 0 disables cropping.
    #[arg(long, default_value_t = 256)]
    crop: usize,
    /// csv or md.
    #[arg(long, default_value = "md")]
    format: String,
    #[command(flatten)]
    flags: FilterFlags,
}

#[derive(Args)]
struct MetricsArgs {
    reference: PathBuf,
    other: PathBuf,
}

fn filter_kinds(filter: &Option<String>) -> Result<Vec<FilterKind>> {
    match filter {
        Some(f) => Ok(vec![f.parse()?]),
        None => Ok(vec![FilterKind::Nlm, FilterKind::MkNlm]),
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("png");
    out.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn denoise(a: DenoiseArgs) -> Result<()> {
    let clean = load_image(&a.image)?;
    let mut spec = FilterSpec::new(a.filter.clone(), a.filter.parse()?);
    a.flags.apply(&mut spec)?;
    let input = match a.noise_level {
        Some(level) => add_gaussian_noise(&clean, &NoiseSpec::new(level, a.seed)?),
        None => clean.clone(),
    };
    let h = match (a.noise_level, spec.h) {
        (_, HSetting::Absolute(h)) => h,
        (Some(level), _) => spec.resolve_h(level).h,
        (None, _) => {
            return Err(BenchError::Config(
                "without --noise-level the filter needs an explicit --h".into(),
            ))
        }
    };
    let out = run_filter(&spec, &input, h)?;
    save_image(&out, &a.out)?;
    if a.emit_residuals {
        save_image(&input, sibling(&a.out, "input"))?;
        save_image(
            &residual_visual(&residual(&out, &input)?),
            sibling(&a.out, "residual"),
        )?;
    }
    if a.noise_level.is_some() {
        println!(
            "h={h:.6} noisy_rmse={:.6} rmse={:.6} ssim={:.6}",
            rmse(&input, &clean)?,
            rmse(&out, &clean)?,
            ssim(&out, &clean)?
        );
    } else {
        println!("h={h:.6}");
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let format: Format = a.format.parse()?;
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if !a.noise_level.is_empty() {
        cfg.noise_levels = a.noise_level;
    }
    if let Some(kind) = &a.filter {
        let kind: FilterKind = kind.parse()?;
        cfg.filters.retain(|f| f.kind == kind);
    }
    if a.emit_residuals {
        cfg.emit_residuals = true;
    }
    if let Some(crop) = a.crop {
        cfg.crop = (crop > 0).then_some(crop);
    }
    for f in &mut cfg.filters {
        a.flags.apply(f)?;
    }
    let table = run_and_persist(&cfg)?;
    print!("{}", report::render(&table, format)?);
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let format: Format = a.format.parse()?;
    let images = match (&a.image, &a.config) {
        (Some(p), _) => vec![ImageEntry {
            id: p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string(),
            path: p.clone(),
        }],
        (None, Some(c)) => ExperimentConfig::from_file(c)?.images,
        (None, None) => {
            return Err(BenchError::Config(
                "calibrate needs --image or --config".into(),
            ))
        }
    };
    let levels = if a.noise_level.is_empty() {
        DEFAULT_NOISE_LEVELS.to_vec()
    } else {
        a.noise_level.clone()
    };
    let grid = if a.grid.is_empty() {
        DEFAULT_GRID.to_vec()
    } else {
        a.grid.clone()
    };
    let mut lines = Vec::new();
    for entry in &images {
        let clean = match load_image(&entry.path) {
            Ok(img) if a.crop > 0 => img.center_crop(a.crop),
            Ok(img) => img,
            Err(e) => {
                eprintln!("skipping {}: {e}", entry.id);
                continue;
            }
        };
        for kind in filter_kinds(&a.filter)? {
            let mut spec = FilterSpec::new(kind.as_str(), kind);
            a.flags.apply(&mut spec)?;
            for &level in &levels {
                let seed = derive_seed(a.seed, &entry.id, level);
                let noisy = add_gaussian_noise(&clean, &NoiseSpec::new(level, seed)?);
                let cal = calibrate_h(&clean, &noisy, level, &spec, &grid)?;
                lines.push((entry.id.clone(), kind, level, cal));
            }
        }
    }
    match format {
        Format::Csv => {
            println!("image_id,filter,noise_level,c,rmse,best");
            for (id, kind, level, cal) in &lines {
                for &(c, r) in &cal.table {
                    println!("{id},{kind},{level},{c},{r:.6},{}", c == cal.best);
                }
            }
        }
        Format::Markdown => {
            println!("| Image | Filter | Level | best c | RMSE | grid (c: RMSE) |");
            println!("|---|---|---:|---:|---:|---|");
            for (id, kind, level, cal) in &lines {
                let grid: Vec<String> = cal
                    .table
                    .iter()
                    .map(|(c, r)| format!("{c}: {r:.3}"))
                    .collect();
                println!(
                    "| {id} | {kind} | {level} | {} | {:.3} | {} |",
                    cal.best,
                    cal.best_rmse,
                    grid.join(", ")
                );
            }
        }
    }
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let x = load_image(&a.reference)?;
    let y = load_image(&a.other)?;
    println!("rmse={:.6} ssim={:.6}", rmse(&x, &y)?, ssim(&x, &y)?);
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let message = message
        .trim()
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ");
    eprintln!("error kind={kind} message=\"{message}\"");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail("UsageError", first.trim_start_matches("error: "));
        }
    };
    let result = match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Bench(a) => bench(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
