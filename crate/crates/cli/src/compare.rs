use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use sbo_core::analytics::{conjectured_hit_prob, exceedance_exponent, tail_prob_a0, SeriesAccuracy};
use sbo_core::diffusion::{
    estimate_line_crossing, extract_point_samples, simulate_count_profiles, Estimate, McOpts,
};
use sbo_core::finite_beta::{explosion_count_distribution, total_variation, StepScheme, StiffSolverOpts};
use sbo_core::gaps::{sample_hat_process, GapSpec};
use sbo_core::laguerre::{rescale_spectrum, sample_laguerre, smallest_eigenvalues_factored, LaguerreSpec};
use sbo_core::stats::{
    bootstrap_stderr, ks_distance, ks_distance_two_sample, log_prob_weight, poisson_ratio, tail_slope, z_score,
    EmpiricalCDF, PoissonRatio,
};
use sbo_core::stochastic::RandomStream;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{self, SCHEMA_VERSION};
use crate::{CliResult, Outcome, SimArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Largest point from the diffusions against the gap process at a = 0.
    MatchA0,
    /// Explosion counts of the finite-β diffusion against the limit counts.
    FiniteBetaConvergence,
    /// Monte Carlo crossing probabilities against the conjectured formula.
    ConjectureLab,
    /// Log-tail slope of P(count ≥ k) against the exponent k(|a|+k)/2.
    Tails,
    /// P(≥2)/P(≥1)² over an intercept grid.
    PoissonRatio,
    /// Rescaled smallest β-Laguerre eigenvalues against finite-n gaps.
    MatrixVsGaps,
}

impl Experiment {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

/// Parameters shared by the experiments. Unset values take the defaults of
/// the chosen experiment, and the resolved values are echoed in the report.
#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Option<Vec<f64>>,
    /// Line slopes (conjecture-lab).
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Paths, runs or replicas per estimate.
    #[arg(long)]
    pub n_paths: Option<u64>,
    /// Paths for the limit reference (finite-beta-convergence).
    #[arg(long)]
    pub reference_paths: Option<u64>,
    /// Matrix size (matrix-vs-gaps).
    #[arg(long)]
    pub matrix_n: Option<usize>,
    /// Gap truncation J (match-a0).
    #[arg(long)]
    pub truncation_j: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_mu: f64,
    /// Pass/fail tolerance of the main check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Bootstrap resamples for the KS distance (match-a0).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Finite-β solver: base step.
    #[arg(long, default_value_t = 0.1)]
    pub dt_base: f64,
    /// Finite-β solver: explosion threshold offset in units of β·ln(1/β).
    #[arg(long, default_value_t = 10.0)]
    pub q_ceiling: f64,
    /// Finite-β solver: explicit Euler instead of the splitting scheme.
    #[arg(long)]
    pub euler: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Serialize)]
struct Check {
    name: String,
    estimate: f64,
    stderr: Option<f64>,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

struct Outcomes {
    config: Value,
    checks: Vec<Check>,
    data: Value,
}

#[derive(Serialize)]
struct Report {
    schema_version: &'static str,
    command: &'static str,
    experiment: String,
    status: Status,
    config: Value,
    checks: Vec<Check>,
    data: Value,
}

/// Points below this are treated as absent when only the top point is needed.
const MU_FLOOR: f64 = 1e-6;

fn single(list: &Option<Vec<f64>>, default: f64, flag: &str) -> CliResult<f64> {
    match list.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(format!("this experiment takes a single value for --{flag}").into()),
    }
}

fn list(list: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
    list.clone().unwrap_or_else(|| default.to_vec())
}

fn sim_config(mc: &McOpts, horizon: f64) -> Value {
    json!({
        "seed": mc.seed,
        "dt": mc.dt,
        "horizon": horizon,
        "bridge_corrections": mc.sim.bridge_crossing,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn estimate_json(e: &Estimate) -> Value {
    json!({ "value": e.value, "stderr": e.stderr, "hits": e.hits, "n": e.n })
}

fn match_a0(args: &CompareArgs) -> CliResult<Outcomes> {
    let n = args.n_paths.unwrap_or(100_000);
    let tol = args.tolerance.unwrap_or(0.01);
    let mc = args.sim.mc();
    let j = args.truncation_j.unwrap_or(GapSpec::new(0.0).truncation_j);
    let horizon = mc.horizon.unwrap_or_else(|| mc.horizon_for(MU_FLOOR));
    let config = merge(
        json!({
            "experiment": "match-a0", "a": 0.0, "n_paths": n, "tol_mu": args.tol_mu, "truncation_j": j,
            "tolerance": tol, "bootstrap": args.bootstrap,
        }),
        sim_config(&mc, horizon),
    );

    let diff: Vec<f64> = extract_point_samples(0.0, MU_FLOOR, args.tol_mu, Some(1), n, MU_FLOOR, &mc)?
        .into_iter()
        .map(|s| s.points.first().copied().unwrap_or(0.0))
        .collect();
    let spec = GapSpec {
        truncation_j: j,
        ..GapSpec::new(0.0)
    };
    let gaps: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = RandomStream::new(mc.seed, i).child(1);
            sample_hat_process(spec, 1, &mut s).map(|g| g.points[0])
        })
        .collect::<Result<_, _>>()?;

    let (ed, eg) = (EmpiricalCDF::new(diff.clone())?, EmpiricalCDF::new(gaps.clone())?);
    let ks = ks_distance_two_sample(&ed, &eg);
    let exact_cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - tail_prob_a0(x, SeriesAccuracy::default()).map_or(f64::NAN, |v| v.value) };
    let boot = match args.bootstrap {
        Some(nb) => {
            let mut rng = RandomStream::new(mc.seed, 0).child(2);
            Some(bootstrap_stderr(&diff, &gaps, nb, &mut rng, |x, y| {
                let (cx, cy) = (EmpiricalCDF::new(x.to_vec()), EmpiricalCDF::new(y.to_vec()));
                match (cx, cy) {
                    (Ok(cx), Ok(cy)) => ks_distance_two_sample(&cx, &cy),
                    _ => f64::NAN,
                }
            })?)
        }
        None => None,
    };
    let data = json!({
        "ks_two_sample": ks,
        "ks_bootstrap_stderr": boot,
        "diffusion": { "mean": ed.mean(), "mean_stderr": ed.mean_stderr(), "ks_vs_series": ks_distance(&ed, exact_cdf) },
        "gaps": { "mean": eg.mean(), "mean_stderr": eg.mean_stderr(), "ks_vs_series": ks_distance(&eg, exact_cdf) },
        "reference_mean": std::f64::consts::PI.powi(2) / 3.0,
    });
    let checks = vec![Check {
        name: "two-sample KS distance".into(),
        estimate: ks,
        stderr: boot,
        reference: 0.0,
        tolerance: tol,
        pass: ks <= tol,
    }];
    Ok(Outcomes { config, checks, data })
}

fn finite_beta_convergence(args: &CompareArgs) -> CliResult<Outcomes> {
    let a = single(&args.a, 1.0, "a")?;
    let mu = single(&args.mu, 1.0, "mu")?;
    let betas = list(&args.beta, &[0.1, 0.05, 0.025]);
    let n = args.n_paths.unwrap_or(10_000);
    let n_ref = args.reference_paths.unwrap_or(100_000);
    let horizon = args.sim.horizon.unwrap_or(40.0);
    let mc = McOpts {
        horizon: Some(horizon),
        ..args.sim.mc()
    };
    let opts = StiffSolverOpts {
        dt_base: args.dt_base,
        q_ceiling: args.q_ceiling,
        scheme: if args.euler { StepScheme::ClampedEuler } else { StepScheme::Splitting },
        ..StiffSolverOpts::default()
    };
    let config = merge(
        json!({
            "experiment": "finite-beta-convergence", "a": a, "mu": mu, "beta": betas, "n_runs": n,
            "reference_paths": n_ref, "solver": opts,
        }),
        sim_config(&mc, horizon),
    );

    let reference = simulate_count_profiles(a, &[mu], n_ref, None, &mc)?.histograms.remove(0);
    let mut rows = Vec::new();
    let mut tvs = Vec::new();
    for &beta in &betas {
        let h = explosion_count_distribution(beta, a, mu, n, horizon, mc.seed, &opts)?;
        let tv = total_variation(&h.histogram, &reference);
        tvs.push(tv);
        let len = h.histogram.counts.len();
        rows.push(json!({
            "beta": beta,
            "tv": tv,
            "frequencies": h.histogram.frequencies(len),
            "stderr": (0..len).map(|c| h.bin_stderr(c)).collect::<Vec<_>>(),
        }));
    }
    let checks = betas
        .windows(2)
        .zip(tvs.windows(2))
        .map(|(b, t)| Check {
            name: format!("TV at beta {} below TV at beta {}", b[1], b[0]),
            estimate: t[1],
            stderr: None,
            reference: t[0],
            tolerance: 0.0,
            pass: t[1] < t[0],
        })
        .collect();
    let len = reference.counts.len();
    let data = json!({
        "reference": { "frequencies": reference.frequencies(len), "n": reference.total() },
        "finite_beta": rows,
    });
    Ok(Outcomes { config, checks, data })
}

fn conjecture_lab(args: &CompareArgs) -> CliResult<Outcomes> {
    let a_grid = list(&args.a, &[1.0]);
    let b_grid = list(&args.b, &[0.25, 0.5]);
    let mu_grid = list(&args.mu, &[0.5, 1.0, 2.0]);
    let n = args.n_paths.unwrap_or(10_000);
    let mc = args.sim.mc();
    let horizon = mc.horizon.unwrap_or_else(|| mc.horizon_for(mu_grid.iter().copied().fold(0.0, f64::max)));
    let config = merge(
        json!({ "experiment": "conjecture-lab", "a": a_grid, "b": b_grid, "mu": mu_grid, "n_paths": n }),
        sim_config(&mc, horizon),
    );
    let mut rows = Vec::new();
    for &a in &a_grid {
        for &b in &b_grid {
            for &mu in &mu_grid {
                let e = estimate_line_crossing(-a, b, mu, n, &mc)?;
                let c = conjectured_hit_prob(a, b, mu, SeriesAccuracy::default())?;
                rows.push(json!({
                    "a": a, "b": b, "mu": mu,
                    "monte_carlo": estimate_json(&e),
                    "formula": c.value,
                    "formula_error_bound": c.error_bound,
                    "conjecture": c.conjecture,
                    "z": z_score(e.value, e.stderr, c.value, c.error_bound),
                }));
            }
        }
    }
    Ok(Outcomes {
        config,
        checks: Vec::new(),
        data: json!({ "rows": rows }),
    })
}

fn tails(args: &CompareArgs) -> CliResult<Outcomes> {
    let a = single(&args.a, 0.0, "a")?;
    let k = args.k.unwrap_or(1);
    if k < 1 {
        return Err("--k must be at least 1".into());
    }
    let mu_grid = list(&args.mu, if k == 1 { &[2.0, 3.0, 4.0, 5.0, 6.0] } else { &[1.0, 1.5, 2.0, 2.5] });
    let n = args.n_paths.unwrap_or(if k == 1 { 100_000 } else { 1_000_000 });
    let tol = args.tolerance.unwrap_or(if k == 1 { 0.1 } else { 0.5 });
    let mc = args.sim.mc();
    let horizon = mc.horizon.unwrap_or_else(|| mc.horizon_for(mu_grid.iter().copied().fold(0.0, f64::max)));
    let config = merge(
        json!({ "experiment": "tails", "a": a, "k": k, "mu": mu_grid, "n_paths": n, "tolerance": tol }),
        sim_config(&mc, horizon),
    );
    let profile = simulate_count_profiles(a, &mu_grid, n, Some(k), &mc)?;
    let est: Vec<Estimate> = profile.histograms.iter().map(|h| h.exceedance(k)).collect();
    let logs: Vec<f64> = est.iter().map(|e| e.value.ln()).collect();
    let weights: Vec<f64> = est.iter().map(log_prob_weight).collect();
    let fit = tail_slope(&mu_grid, &logs, &weights)?;
    let expected = -exceedance_exponent(a, k)?;
    let checks = vec![Check {
        name: format!("slope of ln P(count >= {k})"),
        estimate: fit.slope,
        stderr: Some(fit.stderr),
        reference: expected,
        tolerance: tol,
        pass: (fit.slope - expected).abs() <= tol,
    }];
    let data = json!({
        "estimates": mu_grid.iter().zip(&est).map(|(mu, e)| json!({ "mu": mu, "estimate": estimate_json(e) })).collect::<Vec<_>>(),
        "fit": fit,
        "monotone_violations": profile.violations,
    });
    Ok(Outcomes { config, checks, data })
}

fn poisson_ratio_experiment(args: &CompareArgs) -> CliResult<Outcomes> {
    let a = single(&args.a, 0.0, "a")?;
    let mu_grid = list(&args.mu, &[1.0, 1.5, 2.0]);
    let n = args.n_paths.unwrap_or(1_000_000);
    let margin = args.tolerance.unwrap_or(3.0);
    let mc = args.sim.mc();
    let horizon = mc.horizon.unwrap_or_else(|| mc.horizon_for(mu_grid.iter().copied().fold(0.0, f64::max)));
    let config = merge(
        json!({ "experiment": "poisson-ratio", "a": a, "mu": mu_grid, "n_paths": n, "margin_stderr": margin }),
        sim_config(&mc, horizon),
    );
    let profile = simulate_count_profiles(a, &mu_grid, n, Some(2), &mc)?;
    let ratios = profile.histograms.iter().map(poisson_ratio).collect::<Result<Vec<_>, _>>()?;
    let mut checks = Vec::new();
    for (w, m) in ratios.windows(2).zip(mu_grid.windows(2)) {
        checks.push(Check {
            name: format!("ratio at mu {} below ratio at mu {}", m[1], m[0]),
            estimate: w[1].value(),
            stderr: None,
            reference: w[0].value(),
            tolerance: 0.0,
            pass: w[1].value() < w[0].value(),
        });
    }
    if let (Some(last), Some(&mu)) = (ratios.last(), mu_grid.last()) {
        let (value, stderr) = match *last {
            PoissonRatio::Estimate { ratio, stderr } => (ratio, stderr),
            PoissonRatio::UpperBound { bound } => (bound, f64::INFINITY),
        };
        checks.push(Check {
            name: format!("ratio at mu {mu} below 1/2 by {margin} stderr"),
            estimate: value,
            stderr: Some(stderr),
            reference: 0.5,
            tolerance: margin,
            pass: (0.5 - value) >= margin * stderr,
        });
    }
    let data = json!({
        "ratios": mu_grid.iter().zip(&ratios).map(|(mu, r)| json!({ "mu": mu, "ratio": r })).collect::<Vec<_>>(),
        "p1": profile.histograms.iter().map(|h| estimate_json(&h.exceedance(1))).collect::<Vec<_>>(),
        "p2": profile.histograms.iter().map(|h| estimate_json(&h.exceedance(2))).collect::<Vec<_>>(),
    });
    Ok(Outcomes { config, checks, data })
}

fn matrix_vs_gaps(args: &CompareArgs) -> CliResult<Outcomes> {
    let a = single(&args.a, 0.0, "a")?;
    let betas = list(&args.beta, &[0.1, 0.05]);
    let n = args.matrix_n.unwrap_or(10);
    let k = args.k.unwrap_or(2);
    let reps = args.n_paths.unwrap_or(10_000);
    if k < 1 || k > n {
        return Err(format!("--k must lie in 1..={n}").into());
    }
    let seed = args.sim.seed;
    let config = json!({
        "experiment": "matrix-vs-gaps", "a": a, "beta": betas, "matrix_n": n, "k": k, "n_paths": reps, "seed": seed,
    });
    let spec = GapSpec {
        a,
        truncation_j: n,
        compensate_tail: false,
    };
    let gaps: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|i| sample_hat_process(spec, k, &mut RandomStream::new(seed, i).child(1)).map(|g| g.points))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &beta in &betas {
        let lspec = LaguerreSpec::new(n, beta, a)?;
        let matrix: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|i| -> sbo_core::Result<Vec<f64>> {
                let mut s = RandomStream::new(seed, i);
                let l = sample_laguerre(lspec, &mut s)?;
                let eigs = smallest_eigenvalues_factored(&l, k, 1e-12)?;
                Ok(rescale_spectrum(&eigs, beta)?.rescaled)
            })
            .collect::<Result<_, _>>()?;
        for j in 0..k {
            let em = EmpiricalCDF::new(matrix.iter().map(|p| p[j]).collect())?;
            let eg = EmpiricalCDF::new(gaps.iter().map(|p| p[j]).collect())?;
            rows.push(json!({
                "beta": beta,
                "k": j + 1,
                "matrix": { "mean": em.mean(), "mean_stderr": em.mean_stderr() },
                "gaps": { "mean": eg.mean(), "mean_stderr": eg.mean_stderr() },
                "ks_two_sample": ks_distance_two_sample(&em, &eg),
            }));
        }
    }
    Ok(Outcomes {
        config,
        checks: Vec::new(),
        data: json!({ "rows": rows }),
    })
}

pub fn run(args: CompareArgs, output_dir: &Path) -> CliResult<Outcome> {
    let outcomes = match args.experiment {
        Experiment::MatchA0 => match_a0(&args)?,
        Experiment::FiniteBetaConvergence => finite_beta_convergence(&args)?,
        Experiment::ConjectureLab => conjecture_lab(&args)?,
        Experiment::Tails => tails(&args)?,
        Experiment::PoissonRatio => poisson_ratio_experiment(&args)?,
        Experiment::MatrixVsGaps => matrix_vs_gaps(&args)?,
    };
    let status = if outcomes.checks.is_empty() {
        Status::Informational
    } else if outcomes.checks.iter().all(|c| c.pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        experiment: args.experiment.name(),
        status,
        config: outcomes.config,
        checks: outcomes.checks,
        data: outcomes.data,
    };
    let path = output::resolve_path(args.output, output_dir, &format!("compare-{}.json", args.experiment.name()));
    output::write_atomic(&path, &output::json_bytes(&report)?)?;
    Ok(match status {
        Status::Fail => Outcome::CheckFailed(path),
        _ => Outcome::Written(path),
    })
}
