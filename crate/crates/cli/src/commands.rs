//! Command bodies. Each returns the text written to standard output.

use std::fmt::Write as _;

use serde::Serialize;
use spdgeom::stats::{frechet_mean, interpolate, tangent_pca};
use spdgeom::SpdMatrix;

use crate::config::RunConfig;
use crate::dataset::{rows, DatasetFile};
use crate::error::CliError;

fn pick<'a>(points: &'a [SpdMatrix], i: usize) -> Result<&'a SpdMatrix, CliError> {
    points.get(i).ok_or_else(|| {
        CliError::Usage(format!(
            "index {i} out of range for a dataset of {} matrices",
            points.len()
        ))
    })
}

fn check_dim(config: &RunConfig, file: &DatasetFile) -> Result<(), CliError> {
    config.metric.validate(file.n).map_err(CliError::usage)
}

pub fn cmd_dist(config: &RunConfig, file: &DatasetFile, i: usize, j: usize) -> Result<String, CliError> {
    check_dim(config, file)?;
    let points = file.points()?;
    let d = config.metric.distance(pick(&points, i)?, pick(&points, j)?)?;
    Ok(format!("{}\n", significant(d, 12)))
}

/// Fixed-point rendering of `x` with `digits` significant digits.
fn significant(x: f64, digits: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (digits - 1 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// CSV: `t`, row-major entries `m_<i>_<j>`, `det`, `dist` (distance from matrix `i`).
pub fn cmd_interp(config: &RunConfig, file: &DatasetFile, i: usize, j: usize) -> Result<String, CliError> {
    check_dim(config, file)?;
    let points = file.points()?;
    let (a, b) = (pick(&points, i)?, pick(&points, j)?);
    let path = interpolate(&config.metric, a, b, &config.t_grid)?;
    let n = file.n;

    let mut out = String::from("t");
    for r in 0..n {
        for c in 0..n {
            write!(out, ",m_{r}_{c}").unwrap();
        }
    }
    out.push_str(",det,dist\n");
    for (t, p) in config.t_grid.iter().zip(&path) {
        write!(out, "{t}").unwrap();
        for x in p.to_row_major() {
            write!(out, ",{x}").unwrap();
        }
        let dist = config.metric.distance(a, p)?;
        writeln!(out, ",{},{}", p.det()?, dist).unwrap();
    }
    Ok(out)
}

#[derive(Serialize)]
struct MeanOutput {
    n: usize,
    matrices: Vec<Vec<Vec<f64>>>,
    metric: String,
    iterations: usize,
    grad_norm: f64,
}

/// The mean is written as a one-matrix dataset file, so it re-parses.
pub fn cmd_mean(config: &RunConfig, file: &DatasetFile) -> Result<String, CliError> {
    check_dim(config, file)?;
    let data = file.dataset()?;
    let outcome = frechet_mean(&config.metric, &data, config.tol, config.max_iter)?;
    let out = MeanOutput {
        n: file.n,
        matrices: vec![rows(&outcome.mean)],
        metric: config.metric.id(),
        iterations: outcome.iterations,
        grad_norm: outcome.grad_norm,
    };
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

#[derive(Serialize)]
struct PcaOutput {
    n: usize,
    metric: String,
    mean: Vec<Vec<f64>>,
    variances: Vec<f64>,
    components: Vec<Vec<Vec<f64>>>,
}

pub fn cmd_pca(config: &RunConfig, file: &DatasetFile, k: Option<usize>) -> Result<String, CliError> {
    check_dim(config, file)?;
    let data = file.dataset()?;
    let result = tangent_pca(&config.metric, &data, config.tol, config.max_iter)?;
    let k = k.unwrap_or(result.variances.len());
    let n = file.n;
    let out = PcaOutput {
        n,
        metric: config.metric.id(),
        mean: rows(&result.mean),
        variances: result.variances.iter().take(k).copied().collect(),
        components: result
            .components
            .iter()
            .take(k)
            .map(|c| {
                let m = c.matrix();
                (0..n).map(|r| (0..n).map(|s| m[(r, s)]).collect()).collect()
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}
