//! `skewprod`: validation, search, pressure, spectrum, transition, measure and
//! itinerary experiments on one parameter bundle.
//!
//! Exit codes: 0 success, 1 failed claim check or numerical failure, 2 usage or config error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewprod::conditions::{search_feasible, validate, SearchBox, DEFAULT_GRID};
use skewprod::ifs::Ifs;
use skewprod::measures::{
    bernoulli_lift_bound, fiber_triviality_sample, horseshoe_pair, maxent_approximant, uniqueness_check, BernoulliSpec,
};
use skewprod::thermo::{locate_transition, pressure_curve, spectrum_scan_rows};
use skewprod::SystemParams;

use config::{UsageError, DEFAULT_PRESET};

#[derive(Debug, Parser)]
#[command(name = "skewprod", version, about = "Pressure, spectrum and phase-transition numerics for a skew product over a horseshoe")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long, global = true, conflicts_with = "preset")]
    params: Option<PathBuf>,
    /// Named parameter preset.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Copy)]
struct TRange {
    #[arg(long, allow_negative_numbers = true)]
    t_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    #[arg(long)]
    t_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every hypothesis clause and print the slack table.
    Validate {
        /// Grid resolution of the derivative scans.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Search the default box for bundles passing every clause.
    Search {
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Pressure envelopes on a t-grid as CSV.
    Pressure {
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        range: TRange,
    },
    /// Periodic central exponents and the spectral-gap certificate.
    Spectrum {
        #[arg(long)]
        max_period: Option<usize>,
    },
    /// Locate the phase transition.
    Transition {
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        range: TRange,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Periodic measure constructions.
    Measures {
        #[arg(value_enum)]
        kind: MeasureKind,
        /// Period m.
        #[arg(long)]
        period: Option<usize>,
        /// Bernoulli weights `p0,p1,p2` for the triviality sample.
        #[arg(long, default_value = "0.333333333333333333,0.333333333333333333,0.333333333333333334")]
        weights: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        word_len: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Expanding itinerary of an interval near 0.
    Itinerary {
        /// Left end of J (default: random inside the admissible window).
        #[arg(long, requires = "j_hi")]
        j_lo: Option<f64>,
        #[arg(long, requires = "j_lo")]
        j_hi: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureKind {
    Maxent,
    HorseshoePair,
    Triviality,
    Uniqueness,
}

/// Resolved inputs shared by all commands.
struct RunContext {
    params: SystemParams,
    source: String,
    knobs: std::collections::BTreeMap<String, f64>,
    seed: u64,
    workers: usize,
}

impl RunContext {
    fn knob(&self, flag: Option<f64>, key: &str, default: f64) -> f64 {
        flag.or_else(|| self.knobs.get(key).copied()).unwrap_or(default)
    }

    fn count(&self, flag: Option<usize>, key: &str, default: usize) -> Result<usize> {
        let v = self.knob(flag.map(|v| v as f64), key, default as f64);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(UsageError::Invalid(format!("`{key}` must be a non-negative integer, got {v}")).into());
        }
        Ok(v as usize)
    }

    fn t_grid(&self, r: TRange) -> Result<Vec<f64>> {
        let lo = self.knob(r.t_min, "t_min", -20.0);
        let hi = self.knob(r.t_max, "t_max", 20.0);
        let step = self.knob(r.t_step, "t_step", 0.05);
        if !(step > 0.0) || !(hi > lo) {
            return Err(UsageError::Invalid(format!("t-range [{lo}, {hi}] with step {step} is empty")).into());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(UsageError::Invalid(format!("t-grid of {n} points is too large")).into());
        }
        Ok((0..=n).map(|k| lo + step * k as f64).collect())
    }

    fn header(&self, command: &str, extra: &[(&str, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# skewprod {} {command}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# source = {}", self.source);
        for line in config::render(&self.params).lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# workers = {}", self.workers);
        for (k, v) in extra {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    ClaimFailed(String),
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve(common: &Common) -> Result<RunContext> {
    let (params, source, knobs) = match (&common.params, &common.preset) {
        (Some(path), _) => {
            let c = config::load(path)?;
            (c.params, path.display().to_string(), c.knobs)
        }
        (None, name) => {
            let name = name.as_deref().unwrap_or(DEFAULT_PRESET);
            (config::preset(name)?, format!("preset {name}"), Default::default())
        }
    };
    let seed = match common.seed {
        Some(s) => s,
        None => {
            let v = knobs.get("seed").copied().unwrap_or(0.0);
            if v < 0.0 || v.fract() != 0.0 {
                return Err(UsageError::Invalid(format!("seed must be a non-negative integer, got {v}")).into());
            }
            v as u64
        }
    };
    let workers = match common.workers.or_else(|| knobs.get("workers").map(|&v| v as usize)) {
        Some(0) => return Err(UsageError::Invalid("workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(RunContext { params, source, knobs, seed, workers })
}

fn usage<E: std::fmt::Display>(e: E) -> anyhow::Error {
    UsageError::Invalid(e.to_string()).into()
}

fn run(cli: &Cli) -> Result<Status> {
    let ctx = resolve(&cli.common)?;
    rayon::ThreadPoolBuilder::new().num_threads(ctx.workers).build_global().context("starting worker pool")?;
    let p = ctx.params;
    match &cli.command {
        Command::Validate { grid } => {
            let report = validate(&p, *grid).map_err(usage)?;
            let mut out = ctx.header("validate", &[("grid", grid.to_string())]);
            out.push_str(&report.to_text());
            emit(&cli.common, &out)?;
            if report.all_pass() {
                Ok(Status::Ok)
            } else {
                let names: Vec<String> = report.failures().map(|c| format!("{} {}", c.group, c.name)).collect();
                Ok(Status::ClaimFailed(format!("failing clauses: {}", names.join(", "))))
            }
        }
        Command::Search { budget } => {
            let budget = ctx.count(*budget, "budget", 16)?;
            let found = search_feasible(&SearchBox::default_box(), budget, ctx.seed);
            let mut best: Option<(f64, SystemParams)> = None;
            for q in &found {
                let s = validate(q, DEFAULT_GRID)?.worst_strict_slack();
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, *q));
                }
            }
            let mut out = ctx.header("search", &[("budget", budget.to_string()), ("found", found.len().to_string())]);
            match best {
                Some((slack, q)) => {
                    let _ = writeln!(out, "# worst strict slack = {slack:e}");
                    out.push_str(&config::render(&q));
                    emit(&cli.common, &out)?;
                    Ok(Status::Ok)
                }
                None => {
                    emit(&cli.common, &out)?;
                    Ok(Status::ClaimFailed("no feasible bundle found".into()))
                }
            }
        }
        Command::Pressure { depth, range } => {
            let depth = ctx.count(*depth, "depth", 12)?;
            let t = ctx.t_grid(*range)?;
            let curve = pressure_curve(&p, t, depth).map_err(usage)?;
            let mut out = ctx.header("pressure", &[("depth", depth.to_string())]);
            out.push_str(&curve.to_csv());
            emit(&cli.common, &out)?;
            let failures = curve.stats().failures.len();
            if failures > 0 {
                return Ok(Status::ClaimFailed(format!("{failures} unresolved fixed-point brackets")));
            }
            Ok(Status::Ok)
        }
        Command::Spectrum { max_period } => {
            let m = ctx.count(*max_period, "max_period", 10)?;
            let (cert, scan) = spectrum_scan_rows(&p, m, true).map_err(usage)?;
            let mut out = ctx.header("spectrum", &[("max_period", m.to_string())]);
            for line in cert.to_text().lines() {
                let _ = writeln!(out, "# {line}");
            }
            out.push_str(&scan.rows_csv());
            emit(&cli.common, &out)?;
            if cert.valid() {
                Ok(Status::Ok)
            } else {
                Ok(Status::ClaimFailed(format!("gap certificate invalid: gap width {}", cert.gap_width)))
            }
        }
        Command::Transition { depth, range, tol } => {
            let depth = ctx.count(*depth, "depth", 12)?;
            let tol = ctx.knob(*tol, "tol", 1e-3);
            let t = ctx.t_grid(*range)?;
            let curve = pressure_curve(&p, t, depth).map_err(usage)?;
            let r = locate_transition(&curve, &p, tol).map_err(usage)?;
            let mut out = ctx.header("transition", &[("depth", depth.to_string()), ("tol", tol.to_string())]);
            out.push_str(&r.to_text());
            emit(&cli.common, &out)?;
            if r.conclusive && r.t_c_estimate < 0.0 {
                Ok(Status::Ok)
            } else {
                Ok(Status::ClaimFailed(format!("transition not confirmed: {}", r.note)))
            }
        }
        Command::Measures { kind, period, weights, samples, word_len, tol } => {
            measures(&cli.common, &ctx, *kind, *period, weights, *samples, *word_len, *tol)
        }
        Command::Itinerary { j_lo, j_hi } => {
            let ifs = Ifs::new(&p)?;
            let b = ifs.choose_b(100)?;
            let f0 = ifs.map(0);
            let lo = f0.invert(f0.invert(b)?)?;
            let j = match (j_lo, j_hi) {
                (Some(a), Some(c)) => (*a, *c),
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
                    let (x, y): (f64, f64) = (rng.gen_range(lo..b), rng.gen_range(lo..b));
                    (x.min(y), x.max(y))
                }
            };
            let it = ifs.expanding_itinerary(j, b).map_err(usage)?;
            let mut out = ctx.header("itinerary", &[("b", b.to_string()), ("window", format!("[{lo}, {b}]"))]);
            let _ = writeln!(out, "j = [{:.15e}, {:.15e}]", j.0, j.1);
            let _ =
                writeln!(out, "returns = {}", it.returns.iter().map(|r| format!("0^{} 1 0^{}", r.n, r.m)).collect::<Vec<_>>().join(" | "));
            let _ = writeln!(out, "length = {}", it.word.len());
            let _ = writeln!(out, "word = {}", it.word);
            let _ = writeln!(out, "domain = [{:.15e}, {:.15e}]", it.domain.0, it.domain.1);
            let _ = writeln!(out, "image = [{:.15e}, {:.15e}]", it.image.0, it.image.1);
            let _ = writeln!(out, "kappa_est = {:.15e}", it.kappa_est);
            let _ = writeln!(out, "fixed_point = {:.15e}", it.fixed_point);
            let _ = writeln!(out, "residual = {:.3e}", it.residual);
            let _ = writeln!(out, "log_deriv_at_fixed_point = {:.15e}", it.log_deriv_at_fixed_point);
            emit(&cli.common, &out)?;
            if it.kappa_est > 1.0 && it.log_deriv_at_fixed_point > 0.0 {
                Ok(Status::Ok)
            } else {
                Ok(Status::ClaimFailed("itinerary is not expanding".into()))
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn measures(
    common: &Common,
    ctx: &RunContext,
    kind: MeasureKind,
    period: Option<usize>,
    weights: &str,
    samples: usize,
    word_len: usize,
    tol: Option<f64>,
) -> Result<Status> {
    let p = ctx.params;
    let mut out = String::new();
    let status = match kind {
        MeasureKind::Maxent => {
            let m = period.unwrap_or(6);
            let a = maxent_approximant(&p, m).map_err(usage)?;
            out.push_str(&ctx.header("measures maxent", &[("period", m.to_string())]));
            let _ = writeln!(out, "# words = {}", a.words);
            let _ = writeln!(out, "# exponent_avg = {:.15e}", a.exponent_avg);
            let _ = writeln!(out, "# base_entropy = {:.15e}", a.base_entropy);
            out.push_str(&a.measure.to_csv());
            if a.exponent_avg <= 1e-9 {
                Status::Ok
            } else {
                Status::ClaimFailed(format!("positive exponent {}", a.exponent_avg))
            }
        }
        MeasureKind::HorseshoePair => {
            let m = period.unwrap_or(10);
            let h = horseshoe_pair(&p, m).map_err(usage)?;
            out.push_str(&ctx.header("measures horseshoe-pair", &[("period", m.to_string())]));
            let _ = writeln!(out, "period = {m}");
            let _ = writeln!(out, "base_entropy = {:.15e}", h.base_entropy);
            let _ = writeln!(out, "exponent_mu1 = {:.15e}", h.exponent1);
            let _ = writeln!(out, "exponent_mu2 = {:.15e}", h.exponent2);
            let _ = writeln!(out, "limit_exponent_mu2 = {:.15e}", h.limit2);
            if h.exponent1 <= 0.0 && h.exponent2 > 0.0 {
                Status::Ok
            } else {
                Status::ClaimFailed("exponent signs do not separate the pair".into())
            }
        }
        MeasureKind::Triviality => {
            let w: Vec<f64> = weights.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(usage)?;
            let [p0, p1, p2] = w[..] else {
                return Err(UsageError::Invalid(format!("expected three weights, got `{weights}`")).into());
            };
            let spec = BernoulliSpec::new(p0, p1, p2).map_err(usage)?;
            let tol = ctx.knob(tol, "tol", 1e-9);
            let s = fiber_triviality_sample(&spec, &p, samples, word_len, tol, ctx.seed).map_err(usage)?;
            let bound = bernoulli_lift_bound(&spec, &p);
            out.push_str(&ctx.header(
                "measures triviality",
                &[
                    ("weights", format!("{p0},{p1},{p2}")),
                    ("samples", samples.to_string()),
                    ("word_len", word_len.to_string()),
                    ("tol", tol.to_string()),
                ],
            ));
            let _ = writeln!(out, "lift_bound = {bound:.15e}");
            let _ = writeln!(out, "fraction_trivial = {}", s.fraction_trivial);
            if bound < 0.0 && s.fraction_trivial < 0.99 {
                Status::ClaimFailed(format!("negative bound but only {} trivial", s.fraction_trivial))
            } else {
                Status::Ok
            }
        }
        MeasureKind::Uniqueness => {
            let periods: Vec<usize> = match period {
                Some(m) => vec![m],
                None => vec![6, 9],
            };
            let r = uniqueness_check(&p, &periods).map_err(usage)?;
            out.push_str(&ctx.header("measures uniqueness", &[]));
            out.push_str(&r.to_text());
            if !r.applicable || r.holds() {
                Status::Ok
            } else {
                Status::ClaimFailed("an approximant exponent is not negative".into())
            }
        }
    };
    emit(common, &out)?;
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ClaimFailed(msg)) => {
            eprintln!("claim check failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
