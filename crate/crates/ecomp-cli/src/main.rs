//! Command-line front end: every library module surfaced as a subcommand
//! with machine-readable JSON (default) or CSV output on stdout and
//! diagnostics on stderr.
//!
//! Exit codes: 0 success, 1 domain error (the module error name is carried
//! verbatim), 2 usage error.

mod ingest;
mod output;

use clap::{Args, Parser, Subcommand};
use ecomp::birthdeath::{make_rates, simulate, stationary, suggest_truncation, tv_distance};
use ecomp::conditional::{
    conditional_bruteforce, enhg_pmf, reconstruct_marginals, ConditionalTable, EnhgParams,
};
use ecomp::divisibility::{
    classify_concavity, dcp_decompose_logpgf, dcp_decompose_panjer, dcp_reconstruct,
    ConcavityVerdict, DcpParams,
};
use ecomp::inference::{fit_mle, log_likelihood, moment_init, FitModel, FitOptions};
use ecomp::sample::{sample, SampleConfig};
use ecomp::stein::stein_suite;
use ecomp::table::PmfTable;
use ecomp::{Branch, EcompError, EcompParams, DEFAULT_TAIL_TOL};
use ingest::{ingest_counts, InputFormat};
use output::{emit, num, num_vec, OutputFormat};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

/// Fixed default seed so unscripted runs are reproducible.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "ecomp",
    version,
    about = "Extended COM-Poisson (ECOMP) count distribution toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct DistArgs {
    /// Shape parameter nu >= 0.
    #[arg(long)]
    nu: f64,
    /// Rate-like parameter p (in (0,1) when alpha = beta).
    #[arg(long)]
    p: f64,
    /// Denominator exponent alpha.
    #[arg(long)]
    alpha: f64,
    /// Numerator exponent beta (0 <= beta <= alpha).
    #[arg(long)]
    beta: f64,
    /// Certified tail tolerance; defaults to ECOMP_TAIL_TOL or 1e-14.
    #[arg(long)]
    tail_tol: Option<f64>,
}

impl DistArgs {
    fn tail_tol(&self) -> f64 {
        self.tail_tol
            .or_else(|| {
                std::env::var("ECOMP_TAIL_TOL")
                    .ok()
                    .and_then(|s| s.parse().ok())
            })
            .unwrap_or(DEFAULT_TAIL_TOL)
    }

    fn params(&self) -> Result<EcompParams, EcompError> {
        EcompParams::new(self.nu, self.p, self.alpha, self.beta)
    }

    fn table(&self) -> Result<PmfTable, EcompError> {
        PmfTable::build(self.params()?, self.tail_tol())
    }

    fn table_with_support(&self, min_len: usize) -> Result<PmfTable, EcompError> {
        PmfTable::build_with_support(self.params()?, self.tail_tol(), min_len)
    }
}

/// Resolved parameters echoed into every report so results are replayable.
fn params_json(params: &EcompParams, table: Option<&PmfTable>) -> Value {
    let branch = match params.branch() {
        Branch::AlphaGtBeta => "alpha_gt_beta",
        Branch::AlphaEqBeta => "alpha_eq_beta",
    };
    let mut v = json!({
        "nu": num(params.nu()),
        "p": num(params.p()),
        "alpha": num(params.alpha()),
        "beta": num(params.beta()),
        "branch": branch,
    });
    if let Some(t) = table {
        v["tail_tol"] = num(t.tail_tol());
        v["k_max"] = json!(t.max_k());
        v["tail_bound"] = num(t.tail_bound());
        v["log_z"] = num(t.log_z());
    }
    v
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the p.m.f. at one point.
    Pmf {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        k: u64,
    },
    /// Emit the full certified table: k, pmf, log-pmf, cdf.
    Table {
        #[command(flatten)]
        dist: DistArgs,
        /// Truncate the listing (defaults to the certified range).
        #[arg(long)]
        k_max: Option<u64>,
    },
    /// Raw moments 1..4, mean, variance, and the dispersion verdict.
    Moments {
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Draw seeded samples by cdf inversion.
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Conditional law of one component given the sum (closed form), with
    /// an optional brute-force cross-check when --p is supplied.
    Conditional {
        #[arg(long)]
        nu1: f64,
        #[arg(long)]
        nu2: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        s: u64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Reconstruct both marginal weight sequences from the conditional law.
    Reconstruct {
        #[arg(long)]
        nu1: f64,
        #[arg(long)]
        nu2: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        s_max: u64,
        /// Target rate for the recovered marginals.
        #[arg(long)]
        p: f64,
    },
    /// Stein-operator residual suite.
    SteinCheck {
        #[command(flatten)]
        dist: DistArgs,
        /// Indicator range and cap for the suite's test functions.
        #[arg(long, default_value_t = 50)]
        j: u64,
    },
    /// Log-concavity / log-convexity classification.
    Concavity {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 10_000)]
        k_max: u64,
    },
    /// Infinite-divisibility verdict (sufficient condition, convexity,
    /// extracted jump weights).
    IdVerdict {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Extract compound-Poisson parameters (rate and jump weights).
    Decompose {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Forward Panjer recursion from explicit compound-Poisson parameters.
    Panjer {
        #[arg(long)]
        lambda: f64,
        /// Comma-separated jump weights alpha_1,alpha_2,...
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
    /// Stationary law of the characterizing birth-death chain.
    Stationary {
        #[command(flatten)]
        dist: DistArgs,
        /// Service rate scale mu (arrival scale is p * mu).
        #[arg(long)]
        mu: f64,
        /// Reflecting truncation (defaults to 1e-12 stationary mass above).
        #[arg(long)]
        k_cap: Option<u64>,
    },
    /// Continuous-time simulation of the birth-death chain.
    Simulate {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        k_cap: Option<u64>,
    },
    /// Maximum-likelihood fit of a sub-model to count data.
    Fit {
        /// Input file: CSV (count per line or value,frequency) or JSON array.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        input_format: InputFormat,
        #[arg(long, value_enum, default_value = "neg-binomial")]
        model: ModelArg,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModelArg {
    Poisson,
    ComPoisson,
    NegBinomial,
    AlphaEqBeta,
    Full,
}

impl From<ModelArg> for FitModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Poisson => FitModel::Poisson,
            ModelArg::ComPoisson => FitModel::ComPoisson,
            ModelArg::NegBinomial => FitModel::NegBinomial,
            ModelArg::AlphaEqBeta => FitModel::AlphaEqBeta,
            ModelArg::Full => FitModel::Full,
        }
    }
}

enum CliError {
    Domain(EcompError),
    Ingest(ingest::IngestError),
}

impl CliError {
    fn report(&self) {
        match self {
            CliError::Domain(e) => eprintln!("error: {}: {e}", e.name()),
            CliError::Ingest(e) => eprintln!("error: {}: {e}", e.name()),
        }
    }
}

impl From<EcompError> for CliError {
    fn from(e: EcompError) -> Self {
        CliError::Domain(e)
    }
}

impl From<ingest::IngestError> for CliError {
    fn from(e: ingest::IngestError) -> Self {
        CliError::Ingest(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command, cli.format) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, format: OutputFormat) -> Result<(), CliError> {
    match command {
        Command::Pmf { dist, k } => {
            let table = dist.table()?;
            let log_pmf = table.log_pmf(k);
            let report = json!({
                "command": "pmf",
                "params": params_json(table.params(), Some(&table)),
                "k": k,
                "pmf": num(log_pmf.exp()),
                "log_pmf": num(log_pmf),
                "tail_extrapolated": table.tail_extrapolated(k),
            });
            emit(&report, format);
        }
        Command::Table { dist, k_max } => {
            let table = dist.table()?;
            let hi = k_max.unwrap_or_else(|| table.max_k()).min(table.max_k());
            match format {
                OutputFormat::Csv => {
                    println!("k,pmf,log_pmf,cdf");
                    let mut cum = 0.0f64;
                    for k in 0..=hi {
                        let lp = table.log_pmf(k);
                        cum = (cum + lp.exp()).min(1.0);
                        println!("{k},{:e},{:e},{:e}", lp.exp(), lp, cum);
                    }
                }
                OutputFormat::Json => {
                    let mut rows = Vec::with_capacity(hi as usize + 1);
                    let mut cum = 0.0f64;
                    for k in 0..=hi {
                        let lp = table.log_pmf(k);
                        cum = (cum + lp.exp()).min(1.0);
                        rows.push(json!({
                            "k": k,
                            "pmf": num(lp.exp()),
                            "log_pmf": num(lp),
                            "cdf": num(cum),
                        }));
                    }
                    let report = json!({
                        "command": "table",
                        "params": params_json(table.params(), Some(&table)),
                        "rows": rows,
                    });
                    emit(&report, format);
                }
            }
        }
        Command::Moments { dist } => {
            let table = dist.table()?;
            let moments: Vec<Value> = (1..=4u32)
                .map(|m| table.moment(m).map(num))
                .collect::<Result<_, _>>()?;
            let report = json!({
                "command": "moments",
                "params": params_json(table.params(), Some(&table)),
                "moments": moments,
                "mean": num(table.mean()?),
                "variance": num(table.variance()?),
                "dispersion": table.dispersion()?.as_str(),
            });
            emit(&report, format);
        }
        Command::Sample { dist, n, seed } => {
            let table = dist.table()?;
            let config = SampleConfig::new(seed, n)?;
            let draws = sample(&table, config);
            match format {
                OutputFormat::Csv => {
                    println!("value");
                    for d in &draws {
                        println!("{d}");
                    }
                }
                OutputFormat::Json => {
                    let report = json!({
                        "command": "sample",
                        "params": params_json(table.params(), Some(&table)),
                        "seed": seed,
                        "n": n,
                        "values": draws,
                    });
                    emit(&report, format);
                }
            }
        }
        Command::Conditional {
            nu1,
            nu2,
            alpha,
            beta,
            s,
            p,
        } => {
            let ep = EnhgParams::new(s, nu1, nu2, alpha, beta)?;
            let dist = enhg_pmf(&ep);
            let mut report = json!({
                "command": "conditional",
                "enhg": {
                    "s": s,
                    "nu1": num(nu1),
                    "nu2": num(nu2),
                    "alpha": num(alpha),
                    "beta": num(beta),
                },
                "probs": num_vec(dist.probs()),
            });
            if let Some(p) = p {
                let tx = PmfTable::build(EcompParams::new(nu1, p, alpha, beta)?, DEFAULT_TAIL_TOL)?;
                let ty = PmfTable::build(EcompParams::new(nu2, p, alpha, beta)?, DEFAULT_TAIL_TOL)?;
                let brute = conditional_bruteforce(&tx, &ty, s)?;
                report["bruteforce_max_abs_diff"] = num(dist.max_abs_diff(&brute));
                report["p"] = num(p);
            }
            emit(&report, format);
        }
        Command::Reconstruct {
            nu1,
            nu2,
            alpha,
            beta,
            s_max,
            p,
        } => {
            let c = ConditionalTable::from_enhg(nu1, nu2, alpha, beta, s_max)?;
            // pin the free tilt so both recovered marginals carry rate p
            let tilt = p * nu1.powf(beta);
            let (f, g) = reconstruct_marginals(&c, tilt)?;
            let report = json!({
                "command": "reconstruct",
                "enhg": {
                    "s_max": s_max,
                    "nu1": num(nu1),
                    "nu2": num(nu2),
                    "alpha": num(alpha),
                    "beta": num(beta),
                },
                "p": num(p),
                "tilt": num(tilt),
                "f_weights": num_vec(&f),
                "g_weights": num_vec(&g),
                "f_log_weights": num_vec(&f.iter().map(|v| v.ln()).collect::<Vec<_>>()),
                "g_log_weights": num_vec(&g.iter().map(|v| v.ln()).collect::<Vec<_>>()),
            });
            emit(&report, format);
        }
        Command::SteinCheck { dist, j } => {
            let table = dist.table()?;
            let report = stein_suite(&table, j);
            let residuals: Vec<Value> = report
                .residuals
                .iter()
                .map(|(id, r)| json!({"id": id, "residual": num(*r)}))
                .collect();
            let report = json!({
                "command": "stein-check",
                "params": params_json(table.params(), Some(&table)),
                "j": j,
                "max_abs": num(report.max_abs),
                "table_tail_bound": num(report.table_tail_bound),
                "residuals": residuals,
            });
            emit(&report, format);
        }
        Command::Concavity { dist, k_max } => {
            let params = dist.params()?;
            let verdict = classify_concavity(&params, k_max);
            let witness = match verdict {
                ConcavityVerdict::Neither { witness_k } => json!(witness_k),
                _ => Value::Null,
            };
            let exactly_geometric = matches!(
                verdict,
                ConcavityVerdict::LogConvex {
                    exactly_geometric: true
                }
            );
            let report = json!({
                "command": "concavity",
                "params": params_json(&params, None),
                "k_max": k_max,
                "verdict": verdict.as_str(),
                "exactly_geometric": exactly_geometric,
                "witness_k": witness,
            });
            emit(&report, format);
        }
        Command::IdVerdict { dist, n, tol } => {
            let params = dist.params()?;
            let table = dist.table_with_support(n + 1)?;
            let r = ecomp::divisibility::id_verdict(&params, &table, n, tol)?;
            let report = json!({
                "command": "id-verdict",
                "params": params_json(&params, Some(&table)),
                "n": n,
                "tol": num(tol),
                "sufficient_condition": r.sufficient_condition,
                "concavity": r.concavity.as_str(),
                "min_alpha": num(r.min_alpha),
                "verdict": r.verdict.as_str(),
            });
            emit(&report, format);
        }
        Command::Decompose { dist, n } => {
            let table = dist.table_with_support(n + 1)?;
            let d = dcp_decompose_panjer(&table, n)?;
            let check = dcp_decompose_logpgf(&table, n)?;
            let max_route_diff = d
                .alphas
                .iter()
                .zip(&check.alphas)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let report = json!({
                "command": "decompose",
                "params": params_json(table.params(), Some(&table)),
                "n": n,
                "lambda": num(d.lambda),
                "alphas": num_vec(&d.alphas),
                "alpha_sum": num(d.alphas.iter().sum()),
                "min_alpha": num(d.alphas.iter().cloned().fold(f64::INFINITY, f64::min)),
                "max_route_diff": num(max_route_diff),
            });
            emit(&report, format);
        }
        Command::Panjer { lambda, alphas, n } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "lambda must be positive and finite, got {lambda}"
                ))
                .into());
            }
            let d = DcpParams { lambda, alphas };
            let pmf = dcp_reconstruct(&d, n);
            let report = json!({
                "command": "panjer",
                "lambda": num(d.lambda),
                "alphas": num_vec(&d.alphas),
                "n": n,
                "pmf": num_vec(&pmf),
                "total_mass": num(pmf.iter().sum()),
            });
            emit(&report, format);
        }
        Command::Stationary { dist, mu, k_cap } => {
            let table = dist.table()?;
            let cap = k_cap.unwrap_or_else(|| suggest_truncation(&table, 1e-12));
            let rates = make_rates(*table.params(), mu, cap)?;
            let pi = stationary(&rates);
            let z: f64 = (0..=cap).map(|k| table.pmf(k)).sum();
            let max_diff = pi
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - table.pmf(k as u64) / z).abs())
                .fold(0.0, f64::max);
            let report = json!({
                "command": "stationary",
                "params": params_json(table.params(), Some(&table)),
                "mu": num(mu),
                "lambda": num(rates.lambda_scale()),
                "k_cap": cap,
                "pi": num_vec(&pi),
                "max_abs_diff_vs_pmf": num(max_diff),
            });
            emit(&report, format);
        }
        Command::Simulate {
            dist,
            mu,
            horizon,
            seed,
            k_cap,
        } => {
            let table = dist.table()?;
            let cap = k_cap.unwrap_or_else(|| suggest_truncation(&table, 1e-12));
            let rates = make_rates(*table.params(), mu, cap)?;
            let occupancy = simulate(&rates, horizon, seed)?;
            let pi = stationary(&rates);
            let report = json!({
                "command": "simulate",
                "params": params_json(table.params(), Some(&table)),
                "mu": num(mu),
                "horizon": num(horizon),
                "seed": seed,
                "k_cap": cap,
                "occupancy": num_vec(&occupancy),
                "tv_distance_to_stationary": num(tv_distance(&occupancy, &pi)),
            });
            emit(&report, format);
        }
        Command::Fit {
            input,
            input_format,
            model,
            max_iter,
            starts,
            seed,
        } => {
            let data = ingest_counts(&input, input_format)?;
            let model: FitModel = model.into();
            let mut options = FitOptions::new(model);
            options.max_iter = max_iter;
            options.starts = starts;
            options.seed = seed;
            let init = moment_init(&data, model);
            let fit = fit_mle(&data, init, &options)?;
            let report = json!({
                "command": "fit",
                "model": model.as_str(),
                "data": {
                    "n": data.n(),
                    "distinct": data.pairs().len(),
                    "max_value": data.max_value(),
                    "mean": num(data.mean()),
                    "variance": num(data.variance()),
                },
                "init": params_json(&init, None),
                "init_loglik": num(log_likelihood(&init, &data).unwrap_or(f64::NEG_INFINITY)),
                "params": params_json(&fit.params, None),
                "loglik": num(fit.loglik),
                "aic": num(fit.aic),
                "iterations": fit.iterations,
                "converged": fit.converged,
                "seed": seed,
            });
            emit(&report, format);
        }
    }
    Ok(())
}
