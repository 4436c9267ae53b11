//! CSV and Markdown renderings of a [`ResultsTable`].
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `image_id` | image id from the config |
//! | `noise_level` | noise level as a fraction of 255 |
//! | `sigma` | noise standard deviation in gray levels |
//! | `filter_id` | filter id from the config |
//! | `status` | `ok`, or `error:<Kind>` for a failed cell |
//! | `rmse` | RMSE of the filtered image against the clean image |
//! | `ssim` | mean SSIM of the filtered image against the clean image |
//! | `best_rmse` | `true` on the lowest-RMSE filter of the (image, level) cell |
//! | `best_ssim` | `true` on the highest-SSIM filter of the cell |
//! | `noisy_rmse` | RMSE of the noisy input against the clean image |
//! | `mean_abs_residual` | mean absolute difference between filtered and noisy |
//! | `noisy_digest` | digest of the noisy image every filter of the cell consumed |
//! | `params_digest` | all parameters that determine the run |
//!
//! Floats use six decimals. Values missing because of a failure are `—`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nlm_core::noise::RNG_ALGORITHM;

use crate::error::{BenchError, Result};
use crate::experiment::{ResultsTable, Row, Status, NOISE_CONVENTION};

pub const MISSING: &str = "—";

pub const CSV_COLUMNS: [&str; 13] = [
    "image_id",
    "noise_level",
    "sigma",
    "filter_id",
    "status",
    "rmse",
    "ssim",
    "best_rmse",
    "best_ssim",
    "noisy_rmse",
    "mean_abs_residual",
    "noisy_digest",
    "params_digest",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(BenchError::Config(format!("unknown format '{other}'"))),
        }
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.6}"))
}

fn status(row: &Row) -> String {
    match &row.status {
        Status::Ok => "ok".to_string(),
        Status::Failed { kind, .. } => format!("error:{kind}"),
    }
}

pub fn to_csv(table: &ResultsTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            r.image_id.clone(),
            format!("{}", r.noise_level),
            format!("{:.6}", r.sigma),
            r.filter_id.clone(),
            status(r),
            num(r.rmse),
            num(r.ssim),
            r.best_rmse.to_string(),
            r.best_ssim.to_string(),
            num(r.noisy_rmse),
            num(r.mean_abs_residual),
            r.noisy_digest
                .clone()
                .unwrap_or_else(|| MISSING.to_string()),
            r.params_digest.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cell(v: Option<f64>, best: bool, decimals: usize) -> String {
    match v {
        Some(v) if best => format!("**{v:.decimals$}**"),
        Some(v) => format!("{v:.decimals$}"),
        None => MISSING.to_string(),
    }
}

fn percent(level: f64) -> String {
    let p = level * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}%", p.round())
    } else {
        format!("{p}%")
    }
}

/// Grid with one row-group per image, one row per filter and an RMSE/SSIM
/// column pair per noise level. Best values of each cell are bold.
pub fn to_markdown(table: &ResultsTable) -> String {
    let mut s = String::new();
    let crop = table
        .crop
        .map_or("none".to_string(), |c| format!("{c}x{c} center"));
    writeln!(s, "# Denoising results\n").unwrap();
    writeln!(
        s,
        "seed: {} | rng: {RNG_ALGORITHM} | noise: {NOISE_CONVENTION} | crop: {crop}\n",
        table.seed
    )
    .unwrap();

    let mut header = String::from("| Image | Filter |");
    let mut rule = String::from("|---|---|");
    for &l in &table.noise_levels {
        let p = percent(l);
        write!(header, " {p} RMSE | {p} SSIM |").unwrap();
        rule.push_str("---:|---:|");
    }
    writeln!(s, "{header}\n{rule}").unwrap();

    for image in &table.image_ids {
        for (k, filter) in table.filter_ids.iter().enumerate() {
            let label = if k == 0 { image.as_str() } else { "" };
            write!(s, "| {label} | {filter} |").unwrap();
            for &l in &table.noise_levels {
                match table.row(image, l, filter) {
                    Some(r) => write!(
                        s,
                        " {} | {} |",
                        cell(r.rmse, r.best_rmse, 3),
                        cell(r.ssim, r.best_ssim, 3)
                    )
                    .unwrap(),
                    None => write!(s, " {MISSING} | {MISSING} |").unwrap(),
                }
            }
            s.push('\n');
        }
    }

    let failures: Vec<&Row> = table
        .rows
        .iter()
        .filter(|r| matches!(r.status, Status::Failed { .. }))
        .collect();
    if !failures.is_empty() {
        writeln!(s, "\nFailed cells:\n").unwrap();
        for r in failures {
            if let Status::Failed { kind, message } = &r.status {
                writeln!(
                    s,
                    "- {} / {} / {}: {kind}: {message}",
                    r.image_id,
                    percent(r.noise_level),
                    r.filter_id
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn render(table: &ResultsTable, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(table),
        Format::Markdown => Ok(to_markdown(table)),
    }
}

pub fn write_table(table: &ResultsTable, format: Format, path: &Path) -> Result<()> {
    fs::write(path, render(table, format)?)?;
    Ok(())
}
