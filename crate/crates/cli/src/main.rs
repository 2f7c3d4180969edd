mod cache;
mod render;

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use linewald_core::{
    bound_report, chudnovsky_verify, default_scan_cap, expected_value, l_answer, run_l_with, run_t,
    small_alphahat, thm1_bound, thm2_bound, thm4_holds, Answer, BoundReport, Error, LConfig,
    Rational, ReportConfig, TInput, Thm4Method,
};
use rayon::prelude::*;

use cache::{Cache, CacheKey};

#[derive(Parser)]
#[command(
    name = "linewald",
    version,
    about = "Certified lower bounds for Waldschmidt constants of very general lines in P3"
)]
struct Cli {
    /// Minimum step for subtracting a quadric, and the normalization threshold.
    #[arg(long, global = true, default_value = "1/1000", value_parser = positive)]
    tau: Rational,
    /// Spacing of the downward scan over δ.
    #[arg(long, global = true, default_value = "1/1000", value_parser = positive)]
    grid: Rational,
    /// Width of the bracket around each e_s.
    #[arg(long, global = true, default_value = "1/1000000", value_parser = positive)]
    precision: Rational,
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Skip the algorithm L scan.
    #[arg(long, global = true)]
    no_l: bool,
    /// JSON file holding previously computed reports.
    #[arg(long, global = true, env = "LINEWALD_CACHE")]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Subcommand)]
enum Cmd {
    /// All bounds for one configuration of s lines.
    Bound {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        s: u64,
    },
    /// Bounds for several s, one column per s.
    Table {
        #[arg(value_delimiter = ',', num_args = 1.., required = true,
              value_parser = clap::value_parser!(u64).range(1..))]
        s: Vec<u64>,
    },
    /// Plane reduction of "delta;q1,...,qs;p".
    TraceT {
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Space reduction of "delta;s".
    TraceL {
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Run a verification sweep; exits nonzero on any unflagged violation.
    Verify {
        #[command(subcommand)]
        target: Target,
    },
}

#[derive(Subcommand)]
enum Target {
    /// The chud bound and its square-root estimate for every s up to max-s.
    Chudnovsky {
        #[arg(long, default_value_t = 1000)]
        max_s: u64,
    },
    /// Algorithm L at ⌊√(2.5s)⌋ for every s in the range.
    Thm4 {
        #[arg(long, default_value = "11..60", value_parser = parse_range)]
        range: RangeInclusive<u64>,
    },
    /// Ordering of all bounds against each other and against e_s.
    Invariants {
        #[arg(long, default_value_t = 200)]
        max_s: u64,
    },
}

fn positive(s: &str) -> std::result::Result<Rational, String> {
    let r: Rational = s.parse().map_err(|e: Error| e.to_string())?;
    if !r.is_positive() {
        return Err("must be positive".into());
    }
    Ok(r)
}

/// `a..b`, both ends included.
fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad start {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad end {b:?}"))?;
    if a == 0 || a > b {
        return Err("need 1 <= a <= b".into());
    }
    Ok(a..=b)
}

/// `delta;s` for the space reduction.
fn parse_l_input(s: &str) -> linewald_core::Result<(Rational, u64)> {
    let Some((delta, count)) = s.split_once(';') else {
        return Err(Error::Parse {
            pos: s.len(),
            msg: "expected 'delta;s'".into(),
        });
    };
    let delta: Rational = delta.parse()?;
    let count = count.trim().parse().map_err(|_| Error::Parse {
        pos: delta_len(s),
        msg: "expected a line count".into(),
    })?;
    Ok((delta, count))
}

fn delta_len(s: &str) -> usize {
    s.find(';').map_or(0, |i| i + 1)
}

impl Cli {
    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            tau: self.tau.clone(),
            grid: self.grid.clone(),
            precision: self.precision.clone(),
            with_l: !self.no_l,
        }
    }

    /// Reports for `ss`, from the cache when possible. New results are
    /// computed in parallel and written back by this thread alone.
    fn reports(&self, ss: &[u64]) -> Result<Vec<BoundReport>> {
        let cfg = self.report_config();
        let mut cache = self.cache.as_deref().map(Cache::open).transpose()?;
        let cached: Vec<Option<BoundReport>> = ss
            .iter()
            .map(|&s| {
                cache
                    .as_ref()
                    .and_then(|c| c.get(&CacheKey::new(s, &cfg)).cloned())
            })
            .collect();
        let reports = ss
            .par_iter()
            .zip(cached)
            .map(|(&s, hit)| match hit {
                Some(r) => Ok((r, false)),
                None => bound_report(s, &cfg).map(|r| (r, true)),
            })
            .collect::<linewald_core::Result<Vec<_>>>()?;
        if let Some(cache) = cache.as_mut() {
            for (r, fresh) in &reports {
                if *fresh {
                    cache.insert(CacheKey::new(r.s, &cfg), r.clone());
                }
            }
            if reports.iter().any(|(_, fresh)| *fresh) {
                cache.save()?;
            }
        }
        Ok(reports.into_iter().map(|(r, _)| r).collect())
    }

    fn render(&self, reports: &[BoundReport]) -> Result<String> {
        match self.format {
            Format::Csv => {
                for r in reports {
                    for flag in &r.flags {
                        eprintln!("s={}: {flag}", r.s);
                    }
                }
                render::csv(reports)
            }
            Format::Json => render::json(reports),
            Format::Md => Ok(render::markdown(reports)),
        }
    }
}

fn trace_t(cli: &Cli, input: &str, json: bool) -> Result<String> {
    let input: TInput = input.parse().context("bad plane input")?;
    let out = run_t(&input, &cli.tau)?;
    if json {
        return Ok(serde_json::to_string_pretty(&out)? + "\n");
    }
    let mut text = String::new();
    for step in &out.trace.steps {
        text.push_str(&format!("{step}\n"));
    }
    text.push_str(&format!("t0 = {}\n", out.t0));
    Ok(text)
}

fn trace_l(cli: &Cli, input: &str, json: bool) -> Result<String> {
    let (delta, s) = parse_l_input(input).context("bad space input")?;
    let out = run_l_with(&delta, s, &LConfig::new(cli.tau.clone()))?;
    if json {
        return Ok(serde_json::to_string_pretty(&out)? + "\n");
    }
    let mut text = String::new();
    for step in &out.trace {
        text.push_str(&format!("{step}\n"));
    }
    text.push_str(match out.answer {
        Answer::Yes => "yes\n",
        Answer::No => "no\n",
    });
    Ok(text)
}

/// Summary text and whether the sweep passed.
fn verify(cli: &Cli, target: &Target) -> Result<(String, bool)> {
    match target {
        Target::Chudnovsky { max_s } => {
            let violations = chudnovsky_verify(*max_s);
            let mut text = format!(
                "chudnovsky: s = 1..={max_s}, {} violations\n",
                violations.len()
            );
            for v in &violations {
                text.push_str(&format!("  {v:?}\n"));
            }
            Ok((text, violations.is_empty()))
        }
        Target::Thm4 { range } => {
            let outcomes = range
                .clone()
                .into_par_iter()
                .map(|s| thm4_holds(s, &cli.tau))
                .collect::<linewald_core::Result<Vec<_>>>()?;
            let mut known = Vec::new();
            let mut uncertified = Vec::new();
            let mut unknown = Vec::new();
            for o in outcomes.iter().filter(|o| !o.holds) {
                if o.method == Thm4Method::KnownException {
                    known.push(o.s);
                } else if small_alphahat(o.s).is_ok_and(|a| a >= Rational::from(o.delta)) {
                    // True, but on the boundary where L cannot certify it.
                    uncertified.push(o.s);
                } else {
                    unknown.push(o.s);
                }
            }
            let text = format!(
                "thm4: s = {}..={}, exceptions: {known:?}, uncertified: {uncertified:?}, violations: {unknown:?}\n",
                range.start(),
                range.end()
            );
            Ok((text, unknown.is_empty()))
        }
        Target::Invariants { max_s } => {
            let with_l = !cli.no_l;
            let problems = (1..=*max_s)
                .into_par_iter()
                .map(|s| invariants(cli, s, with_l))
                .collect::<Result<Vec<_>>>()?;
            let problems: Vec<String> = problems.into_iter().flatten().collect();
            let mut text = format!(
                "invariants: s = 1..={max_s}{}, {} violations\n",
                if with_l { "" } else { " (no L)" },
                problems.len()
            );
            for p in &problems {
                text.push_str(&format!("  {p}\n"));
            }
            Ok((text, problems.is_empty()))
        }
    }
}

fn invariants(cli: &Cli, s: u64, with_l: bool) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let cfg = ReportConfig {
        with_l: false,
        ..cli.report_config()
    };
    let report = bound_report(s, &cfg)?;
    if !report.lower_bounds_within_upper() {
        out.push(format!("s={s}: a closed-form bound exceeds e_s"));
    }
    if thm1_bound(s) < thm2_bound(s) {
        out.push(format!("s={s}: approach1alg below approach1"));
    }
    if let Ok(known) = small_alphahat(s) {
        let closed = [report.thm1_q, report.thm2_q, report.thm3_q].map(Rational::from);
        if closed
            .iter()
            .chain([&report.chud_bound])
            .any(|b| b > &known)
        {
            out.push(format!("s={s}: a bound exceeds the known value {known}"));
        }
    }
    if with_l {
        // The scan's first point must already answer no once it clears e_s.
        let e_s = expected_value(s, &cli.precision)?;
        let cap = default_scan_cap(s, &cli.grid)?;
        let lcfg = LConfig::new(cli.tau.clone());
        if cap > &e_s.hi + &cli.precision && l_answer(&cap, s, &lcfg)? == Answer::Yes {
            out.push(format!("s={s}: algorithm L certifies {cap} above e_s"));
        }
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<(String, bool)> {
    let text = match &cli.cmd {
        Cmd::Bound { s } => cli.render(&cli.reports(&[*s])?)?,
        Cmd::Table { s } => cli.render(&cli.reports(s)?)?,
        Cmd::TraceT { input, json } => trace_t(cli, input, *json)?,
        Cmd::TraceL { input, json } => trace_l(cli, input, *json)?,
        Cmd::Verify { target } => return verify(cli, target),
    };
    Ok((text, true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
