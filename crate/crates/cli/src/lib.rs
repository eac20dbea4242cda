//! Command-line front end: subcommands that load channel specs and rate vectors, call
//! into `cf_layering`, and print reports as text or JSON.
//!
//! Exit codes: 0 member or success, 1 non-member (or a failed consistency check),
//! 2 input error, 3 solver did not converge.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cf_layering::geometry::{export_atlas, sig12};
use cf_layering::layering::enumerate_layerings;
use cf_layering::probability::{demo_channel, validate_spec};
use cf_layering::region::{
    boundary_rhs, check_layered, check_outer, compression_floor, window_chain_gaps, mi_gap, MiVariant,
};
use cf_layering::solver::{default_max_iter, solve, IterationRecord, SolveError, SolveTrace};
use cf_layering::{ChannelSpec, ConstraintReport64, JointPmf64, Layering, NodeSet, RateVector64, DEFAULT_EPSILON};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Tolerance for the floors window consistency check.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "cf-layering", version, about = "Compression-rate regions and layerings for relay networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every layering of `count` relays.
    Layerings {
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a rate vector against one layering's region, or the outer region.
    Check {
        #[command(flatten)]
        input: RatesInput,
        /// Layering such as `2,4|3`; the outer region is used when absent.
        #[arg(long)]
        layering: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a layering whose region contains the rate vector.
    Solve {
        #[command(flatten)]
        input: RatesInput,
        /// Starting layering; defaults to a single layer holding every relay.
        #[arg(long)]
        layering: Option<String>,
        /// Shift budget; defaults to 16·2^|R|.
        #[arg(long)]
        max_iter: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the region atlas (outer region plus every layering) as JSON.
    Export {
        #[arg(long)]
        channel: PathBuf,
        /// Include vertex lists (at most 3 relays).
        #[arg(long)]
        vertices: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random binary channel spec.
    Demo {
        #[arg(long)]
        relays: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compression floors and the per-subset window between floors and outer bound.
    Floors {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct RatesInput {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub rates: PathBuf,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: cf_layering::Error },
    #[error(transparent)]
    Core(#[from] cf_layering::Error),
    #[error("{0}")]
    Usage(String),
}

/// Output produced by a command, plus its exit code.
struct Outcome {
    text: String,
    /// Written to stderr, so stdout stays machine-readable.
    note: Option<String>,
    code: i32,
}

impl Outcome {
    fn new(text: String, code: i32) -> Self {
        Outcome { text, note: None, code }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            let _ = stdout.write_all(out.text.as_bytes());
            if let Some(note) = out.note {
                let _ = writeln!(stderr, "{note}");
            }
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Layerings { count, format } => cmd_layerings(count, format),
        Command::Check { input, layering, common } => {
            let out = cmd_check(&input, layering.as_deref(), &common)?;
            emit(out, common.out.as_deref())
        }
        Command::Solve { input, layering, max_iter, common } => {
            let out = cmd_solve(&input, layering.as_deref(), max_iter, &common)?;
            emit(out, common.out.as_deref())
        }
        Command::Export { channel, vertices, out } => {
            let joint = load_joint(&channel)?;
            let mut text = export_atlas(&joint, vertices)?.to_json();
            text.push('\n');
            emit(Outcome::new(text, EXIT_OK), out.as_deref())
        }
        Command::Demo { relays, seed, out } => {
            if relays == 0 {
                return Err(CliError::Usage("--relays must be at least 1".into()));
            }
            let spec = demo_channel(relays, seed);
            let mut text = serde_json::to_string_pretty(&spec).expect("spec serializes");
            text.push('\n');
            emit(Outcome::new(text, EXIT_OK), out.as_deref())
        }
        Command::Floors { channel, common } => {
            let out = cmd_floors(&channel, &common)?;
            emit(out, common.out.as_deref())
        }
    }
}

/// Writes to `path` when given, leaving stdout empty.
fn emit(out: Outcome, path: Option<&Path>) -> Result<Outcome, CliError> {
    match path {
        None => Ok(out),
        Some(p) => {
            fs::write(p, &out.text).map_err(|source| CliError::Write { path: p.into(), source })?;
            Ok(Outcome { text: String::new(), ..out })
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })
}

pub fn load_spec(path: &Path) -> Result<ChannelSpec, CliError> {
    let text = read(path)?;
    let spec: ChannelSpec = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = validate_spec(&spec);
    if !violations.is_empty() {
        return Err(CliError::Input { path: path.into(), source: cf_layering::Error::InvalidSpec(violations) });
    }
    Ok(spec)
}

pub fn load_joint(path: &Path) -> Result<JointPmf64, CliError> {
    let spec = load_spec(path)?;
    JointPmf64::build(&spec).map_err(|source| CliError::Input { path: path.into(), source })
}

fn load_rates(path: &Path, relays: usize) -> Result<RateVector64, CliError> {
    let text = read(path)?;
    RateVector64::from_json(&text, relays).map_err(|source| CliError::Input { path: path.into(), source })
}

fn parse_layering(text: &str, joint: &JointPmf64) -> Result<Layering, CliError> {
    let layering: Layering = text.parse()?;
    let violations = layering.validate(joint.relays());
    if !violations.is_empty() {
        let msg = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        return Err(CliError::Usage(format!("layering {layering} is invalid for relays {}: {msg}", joint.relays())));
    }
    Ok(layering)
}

fn check_epsilon(eps: f64) -> Result<(), CliError> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--epsilon must be finite and nonnegative, got {eps}")))
    }
}

/// Stable number formatting: 12 significant digits, shortest round-trip text.
pub fn fmt_num(x: f64) -> String {
    format!("{}", sig12(x))
}

fn num(x: f64) -> Value {
    json!(sig12(x))
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn cmd_layerings(count: usize, format: Format) -> Result<Outcome, CliError> {
    if count == 0 {
        return Err(CliError::Usage("relay count must be at least 1".into()));
    }
    if count > cf_layering::layering::DEFAULT_ENUMERATION_CAP {
        return Err(CliError::Usage(format!(
            "relay count {count} exceeds the enumeration cap of {}",
            cf_layering::layering::DEFAULT_ENUMERATION_CAP
        )));
    }
    let all = enumerate_layerings(NodeSet::relays(count))?;
    match format {
        Format::Text => Ok(Outcome {
            text: all.iter().map(|l| format!("{l}\n")).collect(),
            note: Some(format!("total: {}", all.len())),
            code: EXIT_OK,
        }),
        Format::Json => {
            let v = json!({ "relays": count, "total": all.len(), "layerings": all });
            Ok(Outcome::new(to_json_text(&v), EXIT_OK))
        }
    }
}

fn report_json(report: &ConstraintReport64) -> Value {
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|e| {
            json!({
                "subset": e.subset,
                "rhs": num(e.rhs),
                "rate_sum": num(e.rate_sum),
                "slack": num(e.slack),
                "satisfied": e.satisfied,
            })
        })
        .collect();
    json!({
        "epsilon": report.epsilon,
        "member": report.is_member(),
        "violators": report.violators(),
        "entries": entries,
    })
}

fn report_text(header: &str, report: &ConstraintReport64) -> String {
    let mut s = format!("{header}\n");
    s.push_str(&format!("{:<12} {:>16} {:>16} {:>16}  status\n", "subset", "rhs", "rate_sum", "slack"));
    for e in &report.entries {
        s.push_str(&format!(
            "{:<12} {:>16} {:>16} {:>16}  {}\n",
            e.subset.to_string(),
            fmt_num(e.rhs),
            fmt_num(e.rate_sum),
            fmt_num(e.slack),
            if e.satisfied { "ok" } else { "violated" }
        ));
    }
    let member = report.is_member();
    s.push_str(&format!("member: {}\n", if member { "yes" } else { "no" }));
    if !member {
        let v: Vec<String> = report.violators().iter().map(|s| s.to_string()).collect();
        s.push_str(&format!("violators: {}\n", v.join(" ")));
    }
    s
}

fn cmd_check(input: &RatesInput, layering: Option<&str>, common: &Common) -> Result<Outcome, CliError> {
    check_epsilon(common.epsilon)?;
    let joint = load_joint(&input.channel)?;
    let rates = load_rates(&input.rates, joint.relay_count())?;
    let layering = layering.map(|t| parse_layering(t, &joint)).transpose()?;
    let report = match &layering {
        Some(l) => check_layered(&joint, l, &rates, common.epsilon)?,
        None => check_outer(&joint, &rates, common.epsilon)?,
    };
    let code = if report.is_member() { EXIT_OK } else { EXIT_REJECTED };
    let text = match common.format {
        Format::Json => {
            let mut v = report_json(&report);
            v["region"] = json!(if layering.is_some() { "layered" } else { "outer" });
            if let Some(l) = &layering {
                v["layering"] = json!(l);
            }
            to_json_text(&v)
        }
        Format::Text => {
            let header = match &layering {
                Some(l) => format!("region: layering {l}"),
                None => "region: outer".to_string(),
            };
            report_text(&header, &report)
        }
    };
    Ok(Outcome::new(text, code))
}

fn record_json(r: &IterationRecord<f64>) -> Value {
    let slacks: Vec<Value> = r.slacks.iter().map(|(s, v)| json!({ "subset": s, "slack": num(*v) })).collect();
    let mut v = json!({
        "iteration": r.iteration,
        "layering": r.layering,
        "pre_canonical": r.pre_canonical,
        "violators": r.violators,
        "U": r.chosen,
        "degenerate": r.degenerate,
        "Z": r.core,
        "core_certified": r.core_certified,
        "min_slack": num(r.min_slack),
        "slacks": slacks,
    });
    if let Some(status) = r.status {
        v["status"] = json!(status);
    }
    v
}

fn trace_text(trace: &SolveTrace<f64>) -> String {
    let mut s = String::new();
    for r in &trace.records {
        let violators: Vec<String> = r.violators.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!(
            "iter {:>3}  layering {:<16} min_slack {:>16}  violators [{}]  U {}  Z {}{}{}\n",
            r.iteration,
            r.layering.to_string(),
            fmt_num(r.min_slack),
            violators.join(" "),
            r.chosen.map_or("-".to_string(), |u| u.to_string()),
            r.core,
            if r.degenerate { "  degenerate" } else { "" },
            if r.core_certified { "" } else { "  core-uncertified" },
        ));
    }
    s
}

fn cmd_solve(
    input: &RatesInput,
    start: Option<&str>,
    max_iter: Option<usize>,
    common: &Common,
) -> Result<Outcome, CliError> {
    check_epsilon(common.epsilon)?;
    let joint = load_joint(&input.channel)?;
    let rates = load_rates(&input.rates, joint.relay_count())?;
    let start = match start {
        Some(t) => parse_layering(t, &joint)?,
        None => Layering::single(joint.relays()),
    };
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(joint.relay_count()));
    if max_iter == 0 {
        return Err(CliError::Usage("--max-iter must be at least 1".into()));
    }

    let outer = check_outer(&joint, &rates, common.epsilon)?;
    if !outer.is_member() {
        let text = match common.format {
            Format::Json => {
                let v = json!({ "status": "outside_outer_region", "outer": report_json(&outer) });
                to_json_text(&v)
            }
            Format::Text => {
                let mut s = String::from("status: outside_outer_region\n");
                s.push_str(&report_text("region: outer", &outer));
                s
            }
        };
        return Ok(Outcome::new(text, EXIT_REJECTED));
    }

    let (layering, trace, code) = match solve(&joint, &rates, &start, common.epsilon, max_iter) {
        Ok(sol) => (Some(sol.layering), sol.trace, EXIT_OK),
        Err(SolveError::NotConverged(trace)) => (None, trace, EXIT_NOT_CONVERGED),
        Err(SolveError::Input(e)) => return Err(e.into()),
    };
    let text = match common.format {
        Format::Json => {
            let records: Vec<Value> = trace.records.iter().map(record_json).collect();
            to_json_text(&json!({
                "status": trace.status,
                "layering": layering,
                "shifts": trace.shifts(),
                "trace": records,
            }))
        }
        Format::Text => {
            let mut s = format!("status: {}\n", serde_json::to_value(trace.status).unwrap().as_str().unwrap());
            match &layering {
                Some(l) => s.push_str(&format!("layering: {l}\n")),
                None => s.push_str("layering: none\n"),
            }
            s.push_str(&format!("shifts: {}\n", trace.shifts()));
            s.push_str(&trace_text(&trace));
            s
        }
    };
    Ok(Outcome::new(text, code))
}

fn cmd_floors(channel: &Path, common: &Common) -> Result<Outcome, CliError> {
    check_epsilon(common.epsilon)?;
    let joint = load_joint(channel)?;
    let floors = compression_floor(&joint)?;
    let mut rows = Vec::new();
    let mut consistent = true;
    for s in joint.relays().nonempty_subsets() {
        let gaps = window_chain_gaps(&joint, s)?;
        let gap_1 = gaps[0];
        let mi_joint = mi_gap(&joint, s, MiVariant::Joint)?;
        let mi_cond = mi_gap(&joint, s, MiVariant::Conditioned)?;
        let spread = gaps.iter().map(|g| (g - gap_1).abs()).fold(0.0, f64::max);
        let ok = spread <= CONSISTENCY_TOL && (mi_joint - gap_1).abs() <= CONSISTENCY_TOL;
        consistent &= ok;
        rows.push((s, floors.subset_sum(s), boundary_rhs(&joint, s)?, gap_1, mi_joint, mi_cond, ok));
    }
    let code = if consistent { EXIT_OK } else { EXIT_REJECTED };
    let eps = common.epsilon;
    let text = match common.format {
        Format::Json => {
            let per_relay: Vec<Value> =
                floors.per_relay.iter().map(|&(n, f)| json!({ "node": n, "floor": num(f) })).collect();
            let subsets: Vec<Value> = rows
                .iter()
                .map(|&(s, fsum, outer, gap_1, mi_joint, mi_cond, ok)| {
                    json!({
                        "subset": s,
                        "floor_sum": num(fsum),
                        "boundary_rhs": num(outer),
                        "gap_1": num(gap_1),
                        "gap_joint": num(mi_joint),
                        "gap_conditioned": num(mi_cond),
                        "window_nonempty": gap_1 > eps,
                        "consistent": ok,
                    })
                })
                .collect();
            to_json_text(&json!({ "floors": per_relay, "subsets": subsets, "consistent": consistent }))
        }
        Format::Text => {
            let mut s = String::new();
            for &(n, f) in &floors.per_relay {
                s.push_str(&format!("floor {n}: {}\n", fmt_num(f)));
            }
            s.push_str(&format!(
                "{:<12} {:>16} {:>16} {:>16} {:>16} {:>16}  window\n",
                "subset", "floor_sum", "boundary_rhs", "gap_1", "gap_joint", "gap_conditioned"
            ));
            for &(sub, fsum, outer, gap_1, mi_joint, mi_cond, ok) in &rows {
                s.push_str(&format!(
                    "{:<12} {:>16} {:>16} {:>16} {:>16} {:>16}  {}{}\n",
                    sub.to_string(),
                    fmt_num(fsum),
                    fmt_num(outer),
                    fmt_num(gap_1),
                    fmt_num(mi_joint),
                    fmt_num(mi_cond),
                    if gap_1 > eps { "nonempty" } else { "empty" },
                    if ok { "" } else { "  INCONSISTENT" },
                ));
            }
            s.push_str(&format!("consistent: {}\n", if consistent { "yes" } else { "no" }));
            s
        }
    };
    Ok(Outcome::new(text, code))
}
