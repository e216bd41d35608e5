//! `bcfb`: command-line front end for the broadcast-channel feedback tools.
//!
//! Exit codes: 0 success, 1 a converse step failed, 2 usage error,
//! 3 input file could not be read or parsed.

mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcfb_core::{
    boundary, certify, evaluate, phase_map, search, simulate_paths, threshold, verify_scalar_converse,
    verify_vector_converse, Channel, ChannelSpec, Error, LinearScheme, SearchConfig, DEFAULT_TOL,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use output::{document, emit, json_text, sig12};

#[derive(Parser, Debug)]
#[command(name = "bcfb", version, about = "Gaussian broadcast channels with one-sided feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// No-feedback capacity region boundary as CSV.
    Region {
        #[command(flatten)]
        channel: ChannelArg,
        /// Number of equally spaced power splits.
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Feedback-noise threshold report as JSON.
    Threshold {
        #[command(flatten)]
        channel: ChannelArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Phase map over (sigma1_sq, sigma2_sq) with unit feedback noise, as CSV.
    Map {
        #[arg(long, default_value_t = 5.2)]
        xmax: f64,
        #[arg(long, default_value_t = 5.2)]
        ymax: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Information rates and power of a linear scheme, as JSON.
    Rates {
        #[command(flatten)]
        channel: ChannelArg,
        #[command(flatten)]
        scheme: SchemeArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Step-by-step converse check of a linear scheme, as JSON.
    Verify {
        #[command(flatten)]
        channel: ChannelArg,
        #[command(flatten)]
        scheme: SchemeArg,
        /// Pass tolerance in nats.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Randomized search for schemes outside the no-feedback region, as JSON.
    Search {
        #[command(flatten)]
        channel: ChannelArg,
        /// Block length of the schemes.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Weight of R1 in the objective mu*R1 + (1-mu)*R2.
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        /// Number of scheme evaluations.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Monte-Carlo covariance of a scheme against the analytic one, as JSON.
    Simulate {
        #[command(flatten)]
        channel: ChannelArg,
        #[command(flatten)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct ChannelArg {
    /// Channel JSON file.
    #[arg(long = "channel", value_name = "PATH")]
    channel_path: PathBuf,
}

#[derive(Args, Debug)]
struct SchemeArg {
    /// Linear scheme JSON file.
    #[arg(long = "scheme", value_name = "PATH")]
    scheme_path: PathBuf,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file, or `stdout`.
    #[arg(long = "out", value_name = "PATH|stdout")]
    out_path: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("invalid {what} {}: {e}", path.display())))
}

fn load_channel(arg: &ChannelArg) -> Result<Channel, Failure> {
    let spec: ChannelSpec = read_json(&arg.channel_path, "channel")?;
    spec.validate().map_err(|e| Failure::Input(format!("invalid channel {}: {e}", arg.channel_path.display())))
}

fn load_scheme(arg: &SchemeArg) -> Result<LinearScheme, Failure> {
    read_json(&arg.scheme_path, "scheme")
}

fn input_err(e: Error) -> Failure {
    Failure::Input(e.to_string())
}

fn write_out(out: &OutArg, text: &str) -> Result<(), Failure> {
    emit(out.out_path.as_deref(), text).map_err(|e| Failure::Input(format!("cannot write output: {e}")))
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Region { channel, points, out } => {
            let ch = load_channel(&channel)?;
            let pts = boundary(&ch, points).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut csv = String::from("theta,r1_bits,r2_bits\n");
            for p in pts {
                let _ = writeln!(csv, "{},{},{}", sig12(p.theta), sig12(p.rates.r1_bits), sig12(p.rates.r2_bits));
            }
            write_out(&out, &csv)?;
            Ok(true)
        }
        Command::Threshold { channel, out } => {
            let Channel::Scalar(ch) = load_channel(&channel)? else {
                return Err(Failure::Input("the threshold applies to scalar channels only".into()));
            };
            let report = threshold(&ch);
            write_out(&out, &json_text(&document(None, None, json!(report))))?;
            Ok(true)
        }
        Command::Map { xmax, ymax, step, out } => {
            let rows = phase_map(xmax, ymax, step).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut csv = String::from("x,y,useless\n");
            for r in rows {
                let _ = writeln!(csv, "{},{},{}", sig12(r.x), sig12(r.y), u8::from(r.useless));
            }
            write_out(&out, &csv)?;
            Ok(true)
        }
        Command::Rates { channel, scheme, out } => {
            let ch = load_channel(&channel)?;
            let s = load_scheme(&scheme)?;
            let e = evaluate(&s, ch).map_err(input_err)?;
            let cov = e.joint_cov.matrix();
            let rows: Vec<Vec<f64>> = (0..cov.nrows()).map(|i| cov.row(i).iter().copied().collect()).collect();
            let body = json!({
                "rates": e.rates,
                "avg_power": e.avg_power,
                "jittered": e.jittered,
                "n": s.horizon(),
                "scheme": s,
                "joint_cov": rows,
            });
            write_out(&out, &json_text(&document(None, None, body)))?;
            Ok(true)
        }
        Command::Verify { channel, scheme, tol, out } => {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Failure::Usage(format!("--tol must be a non-negative number, got {tol}")));
            }
            let ch = load_channel(&channel)?;
            let s = load_scheme(&scheme)?;
            let report = match ch {
                Channel::Scalar(c) => verify_scalar_converse(&s, &c, tol),
                Channel::Vector(v) => verify_vector_converse(&s, &v, tol),
            }
            .map_err(input_err)?;
            let pass = report.all_pass();
            let body = json!({ "all_pass": pass, "report": report });
            write_out(&out, &json_text(&document(None, Some(tol), body)))?;
            Ok(pass)
        }
        Command::Search { channel, n, mu, budget, seed, tol, out } => {
            let ch = load_channel(&channel)?;
            let cfg = SearchConfig { horizon_n: n, mu, budget, seed, tol, ..Default::default() };
            let raw = search(&ch, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            let res = certify(&raw, &ch).map_err(input_err)?;
            let body = json!({
                "best_rates": res.best_rates,
                "violation_bits": res.violation_bits,
                "uncertified_violation_bits": raw.violation_bits,
                "certified": res.certified,
                "evaluations": res.evaluations_used,
                "mu": res.mu,
                "n": n,
                "scheme": res.best_scheme,
                "config": cfg,
            });
            write_out(&out, &json_text(&document(Some(seed), Some(tol), body)))?;
            Ok(true)
        }
        Command::Simulate { channel, scheme, samples, seed, out } => {
            if samples == 0 {
                return Err(Failure::Usage("--samples must be at least 1".into()));
            }
            let ch = load_channel(&channel)?;
            let s = load_scheme(&scheme)?;
            let e = evaluate(&s, ch).map_err(input_err)?;
            let sim = simulate_paths(&s, &ch, samples, seed);
            let analytic = e.joint_cov.matrix();
            let diff = &sim.empirical - analytic;
            let body = json!({
                "num_samples": sim.num_samples,
                "n": s.horizon(),
                "dim": analytic.nrows(),
                "relative_frobenius": diff.norm() / analytic.norm(),
                "max_abs_error": diff.amax(),
                "avg_power_empirical": sim.avg_power,
                "avg_power_analytic": e.avg_power,
            });
            write_out(&out, &json_text(&document(Some(seed), None, body)))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Input(msg)) = &f;
            eprintln!("bcfb: {msg}");
            ExitCode::from(f.code())
        }
    }
}
