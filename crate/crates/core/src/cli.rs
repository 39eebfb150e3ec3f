//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a domain or validation failure, 2 a usage error.
//! Every random choice derives from `--seed`, which defaults to
//! [`DEFAULT_SEED`](crate::optimizer::DEFAULT_SEED). Output files are written
//! to a temporary sibling and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::born::{sample_outcomes, three_outcome_stats};
use crate::error::{Error, Result};
use crate::graded::{ObjectState, C64};
use crate::nogo::{infeasibility_certificate, rotated_basis_residual};
use crate::optimizer::{fit_scaling, optimize_scheme_detailed, sweep, OptimizerOptions, DEFAULT_SEED};
use crate::scheme::{build_wigner_scheme, scheme_error, validate_scheme, ApproxScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

impl CommandResult {
    fn ok(summary: String, artifacts: Vec<PathBuf>) -> Self {
        Self { exit_code: 0, artifacts, summary }
    }

    fn failed(summary: String, artifacts: Vec<PathBuf>) -> Self {
        Self { exit_code: 1, artifacts, summary }
    }
}

#[derive(Parser, Debug)]
#[command(name = "waylab", version, about = "Measurement schemes under an additive conservation law")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Per-sector apparatus dimension.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// L-BFGS iterations per penalty stage.
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
}

impl SearchArgs {
    fn options(&self) -> OptimizerOptions {
        let base = OptimizerOptions::default();
        OptimizerOptions {
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            starts: self.starts.unwrap_or(base.starts),
            seed: self.seed,
            ..base
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the canonical scheme of size N as JSON.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scheme file against its defining relations.
    Validate {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Search for a scheme with a smaller undetermined weight.
    Optimize {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize over a range of sizes and fit the power law.
    Sweep {
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        /// Use n_min, 2 n_min, 4 n_min, ... instead of every size.
        #[arg(long)]
        geometric: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the three-outcome readout of a scheme.
    Sample {
        #[arg(long)]
        scheme: PathBuf,
        /// plus, minus, or real amplitudes "a,b".
        #[arg(long, value_parser = parse_state)]
        state: ObjectState,
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Least-squares violation of the exact-measurement system.
    Nogo {
        #[arg(long)]
        n: usize,
        /// Amplitude of the first basis state, "re,im".
        #[arg(long, value_parser = parse_complex, requires = "beta")]
        alpha: Option<C64>,
        #[arg(long, value_parser = parse_complex, requires = "alpha")]
        beta: Option<C64>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_state(s: &str) -> std::result::Result<ObjectState, String> {
    match s {
        "plus" => Ok(ObjectState::plus()),
        "minus" => Ok(ObjectState::minus()),
        _ => parse_pair(s).map(|(a, b)| ObjectState::real(a, b)),
    }
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    parse_pair(s).map(|(re, im)| C64::new(re, im))
}

/// Writes `contents` to a temporary file beside `path`, then renames it.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::domain(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn load_scheme(path: &Path) -> Result<ApproxScheme> {
    ApproxScheme::from_json(&fs::read_to_string(path)?)
}

fn scheme_json(s: &ApproxScheme) -> Result<Vec<u8>> {
    let mut text = serde_json::to_vec_pretty(s)?;
    text.push(b'\n');
    Ok(text)
}

/// Shortest decimal that agrees with `x` to 15 significant digits, so
/// `0.19999999999999998` prints as `0.2`.
fn short(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn sizes(n_min: usize, n_max: usize, geometric: bool) -> Result<Vec<usize>> {
    if n_min < 2 || n_max < n_min {
        return Err(Error::domain(format!("need 2 <= n-min <= n-max, got {n_min} and {n_max}")));
    }
    if !geometric {
        return Ok((n_min..=n_max).collect());
    }
    Ok(std::iter::successors(Some(n_min), |&n| n.checked_mul(2)).take_while(|&n| n <= n_max).collect())
}

fn execute(cmd: Command) -> Result<CommandResult> {
    match cmd {
        Command::Build { n, d, out } => {
            let s = build_wigner_scheme(n, d)?;
            write_atomic(&out, &scheme_json(&s)?)?;
            Ok(CommandResult::ok(format!("error = {}", short(scheme_error(&s))), vec![out]))
        }
        Command::Validate { scheme, tol } => {
            let s = load_scheme(&scheme)?;
            let report = validate_scheme(&s);
            let verdict = if report.max_residual < tol { "passed" } else { "FAILED" };
            let summary = format!("{report}\nmax residual {:e}: {verdict} at tolerance {tol:e}", report.max_residual);
            Ok(if report.max_residual < tol {
                CommandResult::ok(summary, vec![])
            } else {
                CommandResult::failed(summary, vec![])
            })
        }
        Command::Optimize { n, search, out } => {
            let o = optimize_scheme_detailed(n, search.d, &search.options())?;
            write_atomic(&out, &scheme_json(&o.scheme)?)?;
            Ok(CommandResult::ok(
                format!(
                    "error = {}\nbaseline = {}\nconstraint residual = {:e}\nstart = {}",
                    short(o.objective),
                    short(1.0 / (2.0 * n as f64 - 1.0)),
                    o.constraint_residual,
                    o.start
                ),
                vec![out],
            ))
        }
        Command::Sweep { n_min, n_max, geometric, search, out } => {
            let table = sweep(&sizes(n_min, n_max, geometric)?, search.d, &search.options())?;
            write_atomic(&out, table.to_csv_string().as_bytes())?;
            let failed: Vec<String> = table
                .rows
                .iter()
                .filter_map(|r| r.note.as_ref().map(|note| format!("n = {}: {note}", r.n)))
                .collect();
            let mut lines = vec![format!("rows = {}", table.rows.len())];
            match fit_scaling(&table) {
                Ok(fit) => lines.push(format!("slope = {}\nintercept = {}\nr2 = {}", fit.slope, fit.intercept, fit.r2)),
                Err(e) => lines.push(format!("slope unavailable: {e}")),
            }
            lines.extend(failed.iter().cloned());
            let summary = lines.join("\n");
            Ok(if failed.is_empty() {
                CommandResult::ok(summary, vec![out])
            } else {
                CommandResult::failed(summary, vec![out])
            })
        }
        Command::Sample { scheme, state, shots, seed } => {
            let s = load_scheme(&scheme)?;
            let dist = three_outcome_stats(&s, state)?;
            let counts = sample_outcomes(&dist, shots, seed);
            Ok(CommandResult::ok(counts.to_csv_string().trim_end().to_string(), vec![]))
        }
        Command::Nogo { n, alpha, beta } => {
            let cert = match (alpha, beta) {
                (Some(a), Some(b)) => rotated_basis_residual(n, ObjectState::new(a, b))?,
                _ => infeasibility_certificate(n)?,
            };
            Ok(CommandResult::ok(serde_json::to_string_pretty(&cert)?, vec![]))
        }
    }
}

/// Parses `argv` (program name first) and runs one subcommand.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            return CommandResult { exit_code: code, artifacts: vec![], summary: e.render().to_string() };
        }
    };
    match execute(cli.command) {
        Ok(r) => r,
        Err(e) => CommandResult::failed(e.to_string(), vec![]),
    }
}
