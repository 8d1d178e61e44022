//! `expcoll`: reproducible command-line front end for the expiring coupon
//! collector toolkit.
//!
//! Every command is a pure function of its flags: the seed defaults to a
//! fixed constant, never the clock, so identical invocations produce
//! byte-identical output. Floats are emitted with 15 significant digits and
//! exact rationals as `"p/q"` strings.
//!
//! Exit codes: 0 ok, 2 usage, 3 budget/resource, 4 numeric domain.

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use expcoll_core::asymptotics::{
    critical_limits, fixed_alpha_prediction, rate_function, tau_solve, RegimeDescriptor,
};
use expcoll_core::combinatorics::{flux, mass};
use expcoll_core::oracle;
use expcoll_core::sim;
use expcoll_core::stats;
use expcoll_core::ztp;
use expcoll_core::{DualProb, Error, ModelParams};

/// Documented default master seed (an arbitrary fixed constant).
const DEFAULT_SEED: u64 = 0x00C0_FFEE;

const EXIT_BUDGET: i32 = 3;
const EXIT_DOMAIN: i32 = 4;

#[derive(Parser)]
#[command(
    name = "expcoll",
    about = "Expiring coupon collector: exact window combinatorics, asymptotics, and simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary onto-window probability (exact and log)
    Mass(WindowArgs),
    /// Stationary entry flux (exact and log)
    Flux(WindowArgs),
    /// Monte Carlo completion times with an Exp(1) goodness-of-fit report
    Simulate(SimulateArgs),
    /// Stationary entry scan compared against the exact flux
    Scan(ScanArgs),
    /// Conditioned post-entry diagnostics (theta estimate)
    Theta(ThetaArgs),
    /// Small-scale enumeration and exact chain-solve ground truth
    Oracle(OracleArgs),
    /// Zero-truncated Poisson local-limit table
    Ztp(ZtpArgs),
    /// Proportional-window rate table: tau(a), I(a), -(1/n) log flux
    Rate(RateArgs),
    /// Regime diagnostics: lambda, alpha, a, c, and limit values
    Regimes(WindowArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Window selection: exactly one of an explicit length or a regime scale.
#[derive(Args)]
#[command(group(
    ArgGroup::new("window_sel")
        .required(true)
        .args(["window", "alpha", "a", "c"])
))]
struct WindowArgs {
    /// Number of coupon types
    #[arg(long)]
    n: u64,
    /// Explicit window length
    #[arg(long = "M", value_name = "M")]
    window: Option<u64>,
    /// Logarithmic scale: M = floor(alpha n ln n)
    #[arg(long)]
    alpha: Option<f64>,
    /// Linear scale: M = floor(a n)
    #[arg(long)]
    a: Option<f64>,
    /// Critical offset: M = ceil(n ln n + c n)
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

impl WindowArgs {
    fn params(&self) -> Result<ModelParams, Error> {
        let nf = self.n as f64;
        let window = if let Some(m) = self.window {
            m
        } else if let Some(alpha) = self.alpha {
            if !alpha.is_finite() || alpha <= 0.0 {
                return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
            }
            (alpha * nf * nf.ln()).floor() as u64
        } else if let Some(a) = self.a {
            if !a.is_finite() || a < 1.0 {
                return Err(Error::Domain(format!("a must be at least 1, got {a}")));
            }
            (a * nf).floor() as u64
        } else if let Some(c) = self.c {
            let m = (nf * nf.ln() + c * nf).ceil();
            if !m.is_finite() || m < 1.0 {
                return Err(Error::Domain(format!("offset c = {c} empties the window")));
            }
            m as u64
        } else {
            unreachable!("clap enforces the selector group")
        };
        ModelParams::new(self.n, window)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long = "step-cap", default_value_t = sim::DEFAULT_STEP_CAP)]
    step_cap: u64,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct ThetaArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: u64,
    #[arg(long = "M", value_name = "M")]
    window: u64,
    /// Also enumerate the exact entry pair at this offset
    #[arg(long)]
    u: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ZtpArgs {
    /// Number of colors
    #[arg(long = "N", value_name = "N")]
    colors: u64,
    /// Total count carried by the colors
    #[arg(long)]
    m: u64,
    /// Also evaluate the split-conditioning probability at this split point
    #[arg(long)]
    u: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RateArgs {
    /// Linear window ratio (> 1)
    #[arg(long)]
    a: f64,
    /// Type counts to tabulate (repeatable)
    #[arg(long, required = true)]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Mass(args) => run_mass(args),
        Command::Flux(args) => run_flux(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Scan(args) => run_scan(args),
        Command::Theta(args) => run_theta(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Ztp(args) => run_ztp(args),
        Command::Rate(args) => run_rate(args),
        Command::Regimes(args) => run_regimes(args),
    };
    match outcome {
        Ok(output) => println!("{output}"),
        Err(e) => {
            let (kind, code) = match &e {
                Error::Budget(_) | Error::AllTrialsTruncated { .. } => ("budget", EXIT_BUDGET),
                Error::Domain(_) | Error::EmptySample => ("domain", EXIT_DOMAIN),
                Error::Internal(_) => ("internal", 1),
            };
            let obj = json!({"error": {"kind": kind, "message": e.to_string()}});
            println!("{obj}");
            std::process::exit(code);
        }
    }
}

/// Round to 15 significant digits so output text is stable and readable.
fn sig15(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("round-trip");
    json!(rounded)
}

fn sig15_csv(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    format!("{x:.14e}")
}

fn opt_sig15(x: Option<f64>) -> Value {
    x.map_or(Value::Null, sig15)
}

fn opt_csv(x: Option<f64>) -> String {
    x.map_or_else(String::new, sig15_csv)
}

fn dual_json(p: &DualProb) -> (Value, Value) {
    let exact = p
        .exact_string()
        .map_or(Value::Null, Value::String);
    (exact, sig15(p.log_value()))
}

fn csv(header: &str, rows: &[String]) -> String {
    let mut out = String::from(header);
    for row in rows {
        out.push('\n');
        out.push_str(row);
    }
    out
}

fn run_mass(args: &WindowArgs) -> Result<String, Error> {
    let params = args.params()?;
    let value = mass(params);
    let (exact, log) = dual_json(&value);
    Ok(match args.format {
        Format::Json => json!({
            "command": "mass",
            "n": params.n(),
            "M": params.window(),
            "exact": exact,
            "log": log,
        })
        .to_string(),
        Format::Csv => csv(
            "n,M,exact,log",
            &[format!(
                "{},{},{},{}",
                params.n(),
                params.window(),
                value.exact_string().unwrap_or_default(),
                sig15_csv(value.log_value())
            )],
        ),
    })
}

fn run_flux(args: &WindowArgs) -> Result<String, Error> {
    let params = args.params()?;
    let value = flux(params)?;
    let (exact, log) = dual_json(&value);
    Ok(match args.format {
        Format::Json => json!({
            "command": "flux",
            "n": params.n(),
            "M": params.window(),
            "exact": exact,
            "log": log,
        })
        .to_string(),
        Format::Csv => csv(
            "n,M,exact,log",
            &[format!(
                "{},{},{},{}",
                params.n(),
                params.window(),
                value.exact_string().unwrap_or_default(),
                sig15_csv(value.log_value())
            )],
        ),
    })
}

fn run_simulate(args: &SimulateArgs) -> Result<String, Error> {
    let params = args.window.params()?;
    let batch = sim::sample_completion_times(params, args.trials, args.seed, args.step_cap)?;
    // the flux (and with it the Exp(1) check) is undefined for n = 1;
    // completion times are still reported
    let gof = if params.n() >= 2 {
        let mu_log = flux(params)?.log_value();
        let mu = mu_log.exp();
        let scaled: Vec<f64> = batch.samples.iter().map(|&t| mu * t as f64).collect();
        Some((mu_log, mu, stats::ks_exp1(&scaled)?))
    } else {
        None
    };
    let mean_t = batch.mean();
    let min_t = *batch.samples.iter().min().expect("nonempty");
    let max_t = *batch.samples.iter().max().expect("nonempty");
    Ok(match args.window.format {
        Format::Json => {
            let (mu_log, mu, gof_json) = match &gof {
                Some((mu_log, mu, g)) => (
                    sig15(*mu_log),
                    sig15(*mu),
                    json!({
                        "ks_stat": sig15(g.ks_stat),
                        "dkw_epsilon": sig15(g.dkw_epsilon),
                        "moments": g.moments.iter().map(|&m| sig15(m)).collect::<Vec<_>>(),
                    }),
                ),
                None => (Value::Null, Value::Null, Value::Null),
            };
            json!({
                "command": "simulate",
                "n": params.n(),
                "M": params.window(),
                "trials": args.trials,
                "seed": args.seed,
                "step_cap": args.step_cap,
                "truncated_count": batch.truncated_count,
                "samples": {
                    "count": batch.samples.len(),
                    "mean": sig15(mean_t),
                    "min": min_t,
                    "max": max_t,
                },
                "mu_log": mu_log,
                "mu": mu,
                "gof": gof_json,
            })
            .to_string()
        }
        Format::Csv => {
            let tail = match &gof {
                Some((_, mu, g)) => format!(
                    "{},{},{},{},{},{},{}",
                    sig15_csv(*mu),
                    sig15_csv(g.ks_stat),
                    sig15_csv(g.dkw_epsilon),
                    sig15_csv(g.moments[0]),
                    sig15_csv(g.moments[1]),
                    sig15_csv(g.moments[2]),
                    sig15_csv(g.moments[3]),
                ),
                None => ",,,,,,".into(),
            };
            csv(
                "n,M,trials,seed,step_cap,truncated,count,mean_T,min_T,max_T,mu,ks_stat,dkw_epsilon,m1,m2,m3,m4",
                &[format!(
                    "{},{},{},{},{},{},{},{},{},{},{tail}",
                    params.n(),
                    params.window(),
                    args.trials,
                    args.seed,
                    args.step_cap,
                    batch.truncated_count,
                    batch.samples.len(),
                    sig15_csv(mean_t),
                    min_t,
                    max_t,
                )],
            )
        }
    })
}

fn run_scan(args: &ScanArgs) -> Result<String, Error> {
    let params = args.window.params()?;
    let report = sim::stationary_entry_scan(params, args.horizon, args.seed);
    let exact = flux(params)?;
    let mu = exact.value();
    let abs_error = (report.flux_estimate - mu).abs();
    Ok(match args.window.format {
        Format::Json => json!({
            "command": "scan",
            "n": params.n(),
            "M": params.window(),
            "horizon": args.horizon,
            "seed": args.seed,
            "entries": report.entries,
            "flux_estimate": sig15(report.flux_estimate),
            "stderr": opt_sig15(report.stderr),
            "exact": {
                "value": sig15(mu),
                "log": sig15(exact.log_value()),
                "rational": exact.exact_string().map_or(Value::Null, Value::String),
            },
            "abs_error": sig15(abs_error),
        })
        .to_string(),
        Format::Csv => csv(
            "n,M,horizon,seed,entries,flux_estimate,stderr,exact,abs_error",
            &[format!(
                "{},{},{},{},{},{},{},{},{}",
                params.n(),
                params.window(),
                args.horizon,
                args.seed,
                report.entries,
                sig15_csv(report.flux_estimate),
                opt_csv(report.stderr),
                sig15_csv(mu),
                sig15_csv(abs_error),
            )],
        ),
    })
}

fn run_theta(args: &ThetaArgs) -> Result<String, Error> {
    let params = args.window.params()?;
    let est = sim::theta_estimate(params, args.trials, args.seed)?;
    let descriptor = RegimeDescriptor::new(params)?;
    // the declumping scale that theta is compared against
    let reference = (params.window() as f64).ln() / descriptor.lambda;
    Ok(match args.window.format {
        Format::Json => json!({
            "command": "theta",
            "n": params.n(),
            "M": params.window(),
            "trials": args.trials,
            "seed": args.seed,
            "theta_hat": sig15(est.theta_hat),
            "stderr": opt_sig15(est.stderr),
            "lambda": sig15(descriptor.lambda),
            "log_m_over_lambda": sig15(reference),
        })
        .to_string(),
        Format::Csv => csv(
            "n,M,trials,seed,theta_hat,stderr,lambda,log_m_over_lambda",
            &[format!(
                "{},{},{},{},{},{},{},{}",
                params.n(),
                params.window(),
                args.trials,
                args.seed,
                sig15_csv(est.theta_hat),
                opt_csv(est.stderr),
                sig15_csv(descriptor.lambda),
                sig15_csv(reference),
            )],
        ),
    })
}

fn run_oracle(args: &OracleArgs) -> Result<String, Error> {
    let params = ModelParams::new(args.n, args.window)?;
    let mass_exact = oracle::enumerate_mass(params)?;
    let flux_exact = oracle::enumerate_flux(params)?;
    let chain = oracle::exact_expected_completion(params)?;
    let pair = args
        .u
        .map(|u| -> Result<(u64, String, String), Error> {
            let joint = oracle::exact_entry_pair(params, u)?;
            let conditional = &joint / &flux_exact;
            Ok((u, joint.to_string(), conditional.to_string()))
        })
        .transpose()?;
    Ok(match args.format {
        Format::Json => {
            let pair_json = pair.map_or(Value::Null, |(u, joint, conditional)| {
                json!({"u": u, "joint": joint, "conditional": conditional})
            });
            json!({
                "command": "oracle",
                "n": params.n(),
                "M": params.window(),
                "mass": mass_exact.to_string(),
                "flux": flux_exact.to_string(),
                "expected_T": {
                    "exact": chain.expected.to_string(),
                    "value": sig15(chain.expected_f64),
                    "states": chain.states,
                },
                "entry_pair": pair_json,
            })
            .to_string()
        }
        Format::Csv => {
            let (u, joint, conditional) = pair
                .map(|(u, j, c)| (u.to_string(), j, c))
                .unwrap_or_default();
            csv(
                "n,M,mass,flux,expected_T,expected_T_value,states,u,pair_joint,pair_conditional",
                &[format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    params.n(),
                    params.window(),
                    mass_exact,
                    flux_exact,
                    chain.expected,
                    sig15_csv(chain.expected_f64),
                    chain.states,
                    u,
                    joint,
                    conditional,
                )],
            )
        }
    })
}

fn run_ztp(args: &ZtpArgs) -> Result<String, Error> {
    let model = ztp::ZtpModel::new(args.colors, args.m)?;
    let sum = ztp::ztp_sum_exact(&model)?;
    let local = ztp::gaussian_local(&model);
    let ratio = sum.prob / local;
    let bounded = ztp::bounded_b_construction(&model)?;
    let conditioning = args
        .u
        .map(|u| -> Result<(u64, f64), Error> { Ok((u, ztp::conditioning_prob(args.colors, args.m, u)?)) })
        .transpose()?;
    Ok(match args.format {
        Format::Json => {
            let cond_json = conditioning.map_or(Value::Null, |(u, v)| {
                json!({"u": u, "value": sig15(v)})
            });
            json!({
                "command": "ztp",
                "N": model.colors(),
                "m": model.total(),
                "tau": sig15(model.tau()),
                "mu_tau": sig15(model.mu_tau()),
                "sigma2": sig15(model.sigma2()),
                "B": sig15(model.b()),
                "sum_exact": sig15(sum.prob),
                "truncated_mass": sig15(sum.truncated_mass),
                "gaussian_local": sig15(local),
                "ratio": sig15(ratio),
                "bounded_b": sig15(bounded),
                "conditioning": cond_json,
            })
            .to_string()
        }
        Format::Csv => {
            let (u, cond) = conditioning
                .map(|(u, v)| (u.to_string(), sig15_csv(v)))
                .unwrap_or_default();
            csv(
                "N,m,tau,mu_tau,sigma2,B,sum_exact,truncated_mass,gaussian_local,ratio,bounded_b,u,conditioning",
                &[format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    model.colors(),
                    model.total(),
                    sig15_csv(model.tau()),
                    sig15_csv(model.mu_tau()),
                    sig15_csv(model.sigma2()),
                    sig15_csv(model.b()),
                    sig15_csv(sum.prob),
                    sig15_csv(sum.truncated_mass),
                    sig15_csv(local),
                    sig15_csv(ratio),
                    sig15_csv(bounded),
                    u,
                    cond,
                )],
            )
        }
    })
}

fn run_rate(args: &RateArgs) -> Result<String, Error> {
    let tau = tau_solve(args.a)?;
    let rate = rate_function(args.a)?;
    let mut rows = Vec::with_capacity(args.n.len());
    for &n in &args.n {
        let window = (args.a * n as f64).floor() as u64;
        let params = ModelParams::new(n, window)?;
        let mu_log = flux(params)?.log_value();
        let normalized = -mu_log / n as f64;
        rows.push((n, window, normalized, (normalized - rate).abs() / rate));
    }
    Ok(match args.format {
        Format::Json => json!({
            "command": "rate",
            "a": sig15(args.a),
            "tau": sig15(tau),
            "rate": sig15(rate),
            "rows": rows
                .iter()
                .map(|&(n, window, v, rel)| {
                    json!({
                        "n": n,
                        "M": window,
                        "neg_log_mu_over_n": sig15(v),
                        "rel_gap": sig15(rel),
                    })
                })
                .collect::<Vec<_>>(),
        })
        .to_string(),
        Format::Csv => {
            let body: Vec<String> = rows
                .iter()
                .map(|&(n, window, v, rel)| {
                    format!(
                        "{},{},{},{},{},{}",
                        sig15_csv(args.a),
                        sig15_csv(rate),
                        n,
                        window,
                        sig15_csv(v),
                        sig15_csv(rel)
                    )
                })
                .collect();
            csv("a,rate,n,M,neg_log_mu_over_n,rel_gap", &body)
        }
    })
}

fn run_regimes(args: &WindowArgs) -> Result<String, Error> {
    let params = args.params()?;
    let descriptor = RegimeDescriptor::new(params)?;
    let limits = critical_limits(descriptor.c);
    let fixed_alpha = (descriptor.alpha < 1.0)
        .then(|| fixed_alpha_prediction(params.n(), descriptor.alpha).ok())
        .flatten();
    Ok(match args.format {
        Format::Json => {
            let fixed_json = fixed_alpha.map_or(Value::Null, |p| {
                json!({
                    "leading_log": sig15(p.leading_log),
                    "sharp_flux_log": opt_sig15(p.sharp_flux_log),
                })
            });
            json!({
                "command": "regimes",
                "n": descriptor.n,
                "M": descriptor.window,
                "lambda": sig15(descriptor.lambda),
                "alpha": sig15(descriptor.alpha),
                "a": sig15(descriptor.a),
                "c": sig15(descriptor.c),
                "critical_limits": {
                    "pi_limit": sig15(limits.pi_limit),
                    "n_flux_limit": sig15(limits.n_flux_limit),
                },
                "fixed_alpha": fixed_json,
            })
            .to_string()
        }
        Format::Csv => {
            let (lead, sharp) = fixed_alpha
                .map(|p| (sig15_csv(p.leading_log), opt_csv(p.sharp_flux_log)))
                .unwrap_or_default();
            csv(
                "n,M,lambda,alpha,a,c,pi_limit,n_flux_limit,leading_log,sharp_flux_log",
                &[format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    descriptor.n,
                    descriptor.window,
                    sig15_csv(descriptor.lambda),
                    sig15_csv(descriptor.alpha),
                    sig15_csv(descriptor.a),
                    sig15_csv(descriptor.c),
                    sig15_csv(limits.pi_limit),
                    sig15_csv(limits.n_flux_limit),
                    lead,
                    sharp,
                )],
            )
        }
    })
}
