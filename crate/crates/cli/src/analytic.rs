use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use sbo_core::analytics::{
    closed_cost, conjectured_hit_prob, cost_sequence, exceedance_exponent, laplace_closed_a0, laplace_hat_mu1,
    largest_density, largest_tail, rate_function, tail_prob_a0, CostParity, RateParams, SeriesAccuracy,
    SeriesValue,
};
use sbo_core::gaps::hat_mu_mean;
use serde::Serialize;

use crate::output::{self, float, opt_float, opt_int, Csv, Format, SCHEMA_VERSION};
use crate::{CliResult, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// P(largest point ≥ x) at a = 0.
    TailA0,
    /// P(largest point ≥ x).
    LargestTail,
    /// Density of the largest point at x.
    LargestDensity,
    /// Conjectured probability that reflected BM with drift −a reaches b·t + x.
    Conjecture,
    /// Laplace transform of the largest gap-process point at θ = x.
    Laplace,
    /// Mean of the k-th gap-process point, k = 1..n-max.
    HatMean,
    /// Cost sequence by recursion and in closed form, n = 1..n-max.
    Cost,
    /// Exceedance exponent k(|a|+k)/2, k = 1..n-max.
    Exponent,
    /// Rate functions of both phases at t = x.
    Rate,
}

impl Formula {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[arg(value_enum)]
    pub formula: Formula,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub a: Vec<f64>,
    /// Line slopes for the conjecture.
    #[arg(long, value_delimiter = ',', default_value = "0.25")]
    pub b: Vec<f64>,
    /// Evaluation points: intercept μ, Laplace argument θ or time t.
    #[arg(long, visible_alias = "mu", value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5,1,2")]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_terms: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct Config<'a> {
    command: &'static str,
    formula: Formula,
    a: &'a [f64],
    b: &'a [f64],
    x: &'a [f64],
    n_max: usize,
    abs_tol: f64,
    max_terms: usize,
    format: Format,
}

#[derive(Serialize)]
struct Row {
    formula: String,
    variant: String,
    a: Option<f64>,
    b: Option<f64>,
    x: Option<f64>,
    n: Option<usize>,
    value: f64,
    error_bound: Option<f64>,
    conjecture_flag: bool,
}

impl Row {
    fn new(formula: Formula, variant: &str, value: f64) -> Self {
        Self {
            formula: formula.name(),
            variant: variant.to_string(),
            a: None,
            b: None,
            x: None,
            n: None,
            value,
            error_bound: None,
            conjecture_flag: false,
        }
    }

    fn series(formula: Formula, s: SeriesValue) -> Self {
        Self {
            error_bound: Some(s.error_bound),
            conjecture_flag: s.conjecture,
            ..Self::new(formula, "series", s.value)
        }
    }

    fn at(mut self, a: Option<f64>, b: Option<f64>, x: Option<f64>, n: Option<usize>) -> Self {
        (self.a, self.b, self.x, self.n) = (a, b, x, n);
        self
    }
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: &'static str,
    config: &'a Config<'a>,
    rows: &'a [Row],
}

fn rows(args: &AnalyticArgs) -> CliResult<Vec<Row>> {
    let acc = SeriesAccuracy {
        abs_tol: args.abs_tol,
        max_terms: args.max_terms,
    };
    let f = args.formula;
    let mut out = Vec::new();
    match f {
        Formula::TailA0 => {
            for &x in &args.x {
                out.push(Row::series(f, tail_prob_a0(x, acc)?).at(Some(0.0), None, Some(x), None));
            }
        }
        Formula::LargestTail | Formula::LargestDensity => {
            for &a in &args.a {
                for &x in &args.x {
                    let s = if f == Formula::LargestTail { largest_tail(a, x, acc)? } else { largest_density(a, x, acc)? };
                    out.push(Row::series(f, s).at(Some(a), None, Some(x), None));
                }
            }
        }
        Formula::Conjecture => {
            for &a in &args.a {
                for &b in &args.b {
                    for &x in &args.x {
                        let s = conjectured_hit_prob(a, b, x, acc)?;
                        out.push(Row::series(f, s).at(Some(a), Some(b), Some(x), None));
                    }
                }
            }
        }
        Formula::Laplace => {
            for &a in &args.a {
                for &x in &args.x {
                    out.push(Row::series(f, laplace_hat_mu1(a, x, acc)?).at(Some(a), None, Some(x), None));
                    if a == 0.0 {
                        out.push(Row::new(f, "closed", laplace_closed_a0(x)?).at(Some(a), None, Some(x), None));
                    }
                }
            }
        }
        Formula::HatMean => {
            for &a in &args.a {
                for k in 1..=args.n_max {
                    let m = hat_mu_mean(a, k, None)?;
                    out.push(Row::new(f, "series", m.value).at(Some(a), None, None, Some(k)));
                }
            }
        }
        Formula::Cost => {
            for &a in &args.a {
                for (parity, label) in [
                    (CostParity::MinusTerminal, "minus-terminal"),
                    (CostParity::PlusTerminal, "plus-terminal"),
                ] {
                    let seq = cost_sequence(a, args.n_max, parity)?;
                    for (n, &c) in seq.iter().enumerate().skip(1) {
                        out.push(Row::new(f, &format!("{label}-recursion"), c).at(Some(a), None, None, Some(n)));
                        let closed = closed_cost(a, n, parity)?;
                        out.push(Row::new(f, &format!("{label}-closed"), closed).at(Some(a), None, None, Some(n)));
                    }
                }
            }
        }
        Formula::Exponent => {
            for &a in &args.a {
                for k in 1..=args.n_max {
                    out.push(Row::new(f, "asymptotic", exceedance_exponent(a, k)?).at(Some(a), None, None, Some(k)));
                }
            }
        }
        Formula::Rate => {
            for &a in &args.a {
                for phase in [1u8, 2] {
                    let p = RateParams::new(a, phase)?;
                    for &x in &args.x {
                        let v = rate_function(p, x)?;
                        out.push(Row::new(f, &format!("phase-{phase}"), v).at(Some(a), None, Some(x), None));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn run(args: AnalyticArgs, output_dir: &Path) -> CliResult<Outcome> {
    let config = Config {
        command: "analytic",
        formula: args.formula,
        a: &args.a,
        b: &args.b,
        x: &args.x,
        n_max: args.n_max,
        abs_tol: args.abs_tol,
        max_terms: args.max_terms,
        format: args.format,
    };
    let rows = rows(&args)?;
    let bytes = match args.format {
        Format::Csv => {
            let mut csv = Csv::new(
                &config,
                &["formula", "variant", "a", "b", "x", "n", "value", "error_bound", "conjecture_flag"],
            )?;
            for r in &rows {
                csv.row(&[
                    r.formula.clone(),
                    r.variant.clone(),
                    opt_float(r.a),
                    opt_float(r.b),
                    opt_float(r.x),
                    opt_int(r.n),
                    float(r.value),
                    opt_float(r.error_bound),
                    r.conjecture_flag.to_string(),
                ]);
            }
            csv.into_bytes()
        }
        Format::Json => output::json_bytes(&Report {
            schema_version: SCHEMA_VERSION,
            config: &config,
            rows: &rows,
        })?,
    };
    let name = format!("analytic-{}.{}", args.formula.name(), args.format.extension());
    let path = output::resolve_path(args.output, output_dir, &name);
    output::write_atomic(&path, &bytes)?;
    Ok(Outcome::Written(path))
}
