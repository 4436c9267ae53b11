//! Grid search for the smoothing factor `c` in `h = c * sigma`.

use nlm_core::noise::sigma_for_level;
use nlm_core::{rmse, Image};
use rayon::prelude::*;

use crate::config::FilterSpec;
use crate::error::{BenchError, Result};
use crate::experiment::run_filter;

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub best: f64,
    pub best_rmse: f64,
    /// `(c, rmse)` for every grid point, in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Filters `noisy` with `h = c * sigma(level)` for every `c` in `grid` and
/// returns the factor with the lowest RMSE against `clean`. Ties go to the
/// smaller `c`.
pub fn calibrate_h(
    clean: &Image,
    noisy: &Image,
    level: f64,
    filter: &FilterSpec,
    grid: &[f64],
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(BenchError::Config("calibration grid is empty".into()));
    }
    if let Some(c) = grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(BenchError::Config(format!(
            "grid value {c} is not positive"
        )));
    }
    let sigma = sigma_for_level(level);
    let table: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&c| {
            let out = run_filter(filter, noisy, c * sigma)?;
            Ok((c, rmse(&out, clean)?))
        })
        .collect::<Result<_>>()?;
    let &(best, best_rmse) = table
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("grid is non-empty");
    Ok(Calibration {
        best,
        best_rmse,
        table,
    })
}
