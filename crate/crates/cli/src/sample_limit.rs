use std::path::{Path, PathBuf};

use clap::Args;
use sbo_core::diffusion::{sample_limit_replicas, Estimate};
use serde::Serialize;

use crate::output::{self, float, Csv, Format, SCHEMA_VERSION};
use crate::{CliResult, Outcome, SimArgs};

#[derive(Args, Debug)]
pub struct SampleLimitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Single intercept.
    #[arg(long, conflicts_with = "mu_grid", required_unless_present = "mu_grid")]
    pub mu: Option<f64>,
    /// Increasing intercepts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    /// Points kept per replica, and the largest k in the summary.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_paths: u64,
    /// Bisection tolerance on point locations.
    #[arg(long, default_value_t = 1e-4)]
    pub tol_mu: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct Config<'a> {
    command: &'static str,
    a: f64,
    mu_grid: &'a [f64],
    k: usize,
    n_paths: u64,
    tol_mu: f64,
    seed: u64,
    dt: f64,
    horizon: f64,
    bridge_corrections: bool,
    format: Format,
}

#[derive(Serialize)]
struct ReplicaOut<'a> {
    replica_id: u64,
    points: &'a [f64],
    profile: &'a [usize],
}

#[derive(Serialize)]
struct SummaryOut {
    k: usize,
    mu: f64,
    value: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: &'static str,
    config: &'a Config<'a>,
    replicas: Vec<ReplicaOut<'a>>,
    summary: &'a [SummaryOut],
}

pub fn run(args: SampleLimitArgs, output_dir: &Path) -> CliResult<Outcome> {
    let grid = match (&args.mu, &args.mu_grid) {
        (Some(mu), _) => vec![*mu],
        (None, Some(g)) => g.clone(),
        (None, None) => unreachable!("clap requires one of --mu and --mu-grid"),
    };
    if args.k < 1 {
        return Err("--k must be at least 1".into());
    }
    let mc = args.sim.mc();
    let horizon = mc.horizon.unwrap_or_else(|| mc.horizon_for(grid.last().copied().unwrap_or(0.0)));
    let config = Config {
        command: "sample-limit",
        a: args.a,
        mu_grid: &grid,
        k: args.k,
        n_paths: args.n_paths,
        tol_mu: args.tol_mu,
        seed: mc.seed,
        dt: mc.dt,
        horizon,
        bridge_corrections: !args.sim.plain,
        format: args.format,
    };
    let replicas = sample_limit_replicas(args.a, &grid, args.tol_mu, Some(args.k), args.n_paths, &mc)?;

    let mut summary = Vec::new();
    for k in 1..=args.k {
        for (j, &mu) in grid.iter().enumerate() {
            let hits = replicas.iter().filter(|r| r.profile[j] >= k).count() as u64;
            let e = Estimate::binomial(hits, args.n_paths);
            summary.push(SummaryOut {
                k,
                mu,
                value: e.value,
                stderr: e.stderr,
            });
        }
    }

    let bytes = match args.format {
        Format::Csv => {
            let mut csv = Csv::new(&config, &["record", "replica_id", "k", "mu", "value", "stderr"])?;
            for (i, r) in replicas.iter().enumerate() {
                for (j, &p) in r.sample.points.iter().enumerate() {
                    csv.row(&["point".into(), i.to_string(), (j + 1).to_string(), String::new(), float(p), String::new()]);
                }
                for (&c, &mu) in r.profile.iter().zip(&grid) {
                    csv.row(&["count".into(), i.to_string(), String::new(), float(mu), c.to_string(), String::new()]);
                }
            }
            for s in &summary {
                csv.row(&[
                    "exceedance".into(),
                    String::new(),
                    s.k.to_string(),
                    float(s.mu),
                    float(s.value),
                    float(s.stderr),
                ]);
            }
            csv.into_bytes()
        }
        Format::Json => output::json_bytes(&Report {
            schema_version: SCHEMA_VERSION,
            config: &config,
            replicas: replicas
                .iter()
                .enumerate()
                .map(|(i, r)| ReplicaOut {
                    replica_id: i as u64,
                    points: &r.sample.points,
                    profile: &r.profile,
                })
                .collect(),
            summary: &summary,
        })?,
    };
    let path = output::resolve_path(args.output, output_dir, &format!("sample-limit.{}", args.format.extension()));
    output::write_atomic(&path, &bytes)?;
    Ok(Outcome::Written(path))
}
