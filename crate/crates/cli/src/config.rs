use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spdgeom::{parse_metric, MetricSpec};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "spdgeom", version, about = "Deformed-affine metrics on SPD matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// affine | polar | power:<θ> | logeuclidean | deformed:<deformation-id>, optionally @alpha=<a>,beta=<b>
    #[arg(long, global = true, default_value = "affine")]
    pub metric: String,

    /// Overrides the alpha given in the metric id.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,

    /// Overrides the beta given in the metric id.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,

    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,

    /// Karcher flow tolerance on the metric norm of the tangent mean.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long = "max-iter", global = true, default_value_t = 50)]
    pub max_iter: usize,

    /// Restrict `check` to one suite.
    #[arg(long, global = true)]
    pub only: Option<String>,

    /// Comma-separated interpolation times.
    #[arg(long = "t", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between matrices I and J of a dataset file.
    Dist { file: PathBuf, i: usize, j: usize },
    /// Geodesic interpolation from matrix I to matrix J, as CSV.
    Interp { file: PathBuf, i: usize, j: usize },
    /// Fréchet mean of a dataset, as JSON.
    Mean { file: PathBuf },
    /// Tangent PCA of a dataset, as JSON.
    Pca {
        file: PathBuf,
        /// Number of components to report (default: all).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run the property-verification suites.
    Check {
        /// Matrix dimensions exercised by the suites.
        #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
        dims: Vec<usize>,
    },
}

/// Resolved metric and numeric options for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: MetricSpec,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub only: Option<String>,
    pub t_grid: Vec<f64>,
}

impl RunConfig {
    /// Parses the metric id, applies `--alpha/--beta`, and checks the
    /// scalar-product bounds for every dimension in `dims`.
    pub fn resolve(opts: &GlobalOpts, dims: &[usize]) -> Result<Self, CliError> {
        let parsed = parse_metric(&opts.metric).map_err(CliError::usage)?;
        let alpha = opts.alpha.unwrap_or(parsed.alpha());
        let beta = opts.beta.unwrap_or(parsed.beta());
        let metric = parsed.with_params(alpha, beta);
        for &n in dims {
            metric.validate(n).map_err(CliError::usage)?;
        }
        if opts.trials == 0 {
            return Err(CliError::Usage("--trials must be >= 1".into()));
        }
        if !(opts.tol > 0.0) {
            return Err(CliError::Usage("--tol must be > 0".into()));
        }
        let t_grid = opts.t.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Usage("--t needs a nonempty list of finite times".into()));
        }
        Ok(Self {
            metric,
            seed: opts.seed,
            trials: opts.trials,
            tol: opts.tol,
            max_iter: opts.max_iter,
            only: opts.only.clone(),
            t_grid,
        })
    }
}
