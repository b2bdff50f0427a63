//! Command-line front end. Every subcommand returns an exit code:
//! 0 success, 1 negative result, 2 usage or runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::constructions::{d_plus_1_set, grouped_phase_set, product_set, solve_phase_table, weyl_set, PhaseSolution};
use crate::error::Error;
use crate::io::{self, IoError, OutputDigest, RunManifest, ThresholdRow};
use crate::protocol::simulate;
use crate::qstate::{gram_matrix, is_orthogonal_set, OperatorSet, SchmidtVector};
use crate::search::{self, FeasibilityStatus, SearchConfig};

const DEFAULT_SEED: u64 = 0x5eed_dc0d;

#[derive(Debug, Parser)]
#[command(name = "densecode", version, about = "Deterministic dense coding with partially entangled qudit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an analytic operator set and write it as JSON.
    Construct(ConstructArgs),
    /// Check a stored operator set and print its weighted Gram matrix.
    Verify(VerifyArgs),
    /// Numerical feasibility search for a given alphabet size, or N_max.
    Search(SearchArgs),
    /// Compute N_max over the d = 3 region of ordered Schmidt vectors.
    Map(MapArgs),
    /// Minimal λ0 and entropy needed for alphabets of size N > d.
    Minent(MinentArgs),
    /// Encode, measure and decode a message.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Weyl,
    Phases,
    #[value(name = "d-plus-1")]
    DPlus1,
    Grouped,
}

/// Inputs shared by `construct` and `simulate --construct`.
#[derive(Debug, Args, Clone)]
pub struct SetRecipe {
    /// Local dimension (weyl, d-plus-1).
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated Schmidt weights; fractions such as 2/3 are accepted.
    #[arg(long)]
    pub state: Option<String>,
    /// Number of phase operators (phases).
    #[arg(long)]
    pub n: Option<usize>,
    /// Groups of Schmidt indices, e.g. "0;1,2" (grouped).
    #[arg(long)]
    pub groups: Option<String>,
    /// Rescale the state to unit sum instead of rejecting it.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[command(flatten)]
    pub recipe: SetRecipe,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "DENSECODE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Clone)]
pub struct SearchFlags {
    #[arg(long, env = "DENSECODE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Feasibility threshold on the Gram residual.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl SearchFlags {
    pub fn config(&self) -> SearchConfig {
        let base = SearchConfig::default();
        SearchConfig {
            seed: self.seed,
            restarts: self.restarts.unwrap_or(base.restarts),
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            ortho_tol: self.tol,
            parallelism: self.jobs.max(1),
            ..base
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["n", "max"])))]
pub struct SearchArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Ascend to the largest alphabet found.
    #[arg(long)]
    pub max: bool,
    #[arg(long)]
    pub normalize: bool,
    /// Write the set found to this JSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SearchFlags,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long, default_value_t = 24)]
    pub resolution: usize,
    /// Output prefix; writes `<prefix>.csv`, `<prefix>.svg` and `<prefix>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: SearchFlags,
}

#[derive(Debug, Args)]
pub struct MinentArgs {
    #[arg(long)]
    pub d: usize,
    /// Inclusive range such as "4..6" or "4-6"; defaults to d+1..2d.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Output prefix; writes `<prefix>.csv` (table) and `<prefix>.entropy.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: SearchFlags,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["set", "construct"])))]
pub struct SimulateArgs {
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub construct: Option<Kind>,
    #[command(flatten)]
    pub recipe: SetRecipe,
    /// Comma-separated letters.
    #[arg(long)]
    pub message: String,
    /// Also sample this many measurement outcomes per letter.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, env = "DENSECODE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// The set must be orthogonal within this residual before it is used.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

/// A failure reported as `{"error": {...}}` with exit code 2.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub reason: String,
    pub detail: Value,
}

impl Failure {
    fn new(kind: &'static str, reason: impl Into<String>) -> Self {
        Self { kind, reason: reason.into(), detail: Value::Null }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "reason": self.reason, "detail": self.detail } }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Dimension(_) => "dimension",
            Error::Normalization { .. } => "normalization",
            Error::NegativeCoefficient { .. } => "negative_coefficient",
            Error::EmptySet => "empty_set",
            Error::BadArguments(_) => "bad_arguments",
            Error::PolygonImpossible { .. } => "polygon_impossible",
            Error::BadPartition(_) => "bad_partition",
            Error::NotUnitary { .. } => "not_unitary",
            Error::LetterOutOfRange { .. } => "letter_out_of_range",
            Error::DegenerateBasis(_) => "degenerate_basis",
            Error::NonMonotone(_) => "non_monotone",
            Error::InvalidSet(_) => "invalid_set",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid(inner) => inner.into(),
            IoError::Parse(_) => Self::new("parse", e.to_string()),
            IoError::Io { .. } => Self::new("io", e.to_string()),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            eprintln!("{}", Failure::new("usage", e.kind().to_string()).to_json());
            return 2;
        }
    };
    let invocation = raw.iter().skip(1).cloned().collect::<Vec<_>>();
    let result = match cli.command {
        Command::Construct(a) => construct(a, invocation),
        Command::Verify(a) => verify(a),
        Command::Search(a) => search_cmd(a, invocation),
        Command::Map(a) => map(a, invocation),
        Command::Minent(a) => minent(a, invocation),
        Command::Simulate(a) => simulate_cmd(a),
    };
    result.unwrap_or_else(|f| {
        eprintln!("{}", f.to_json());
        2
    })
}

/// Comma-separated weights; each entry is a decimal or a fraction `p/q`.
pub fn parse_state(text: &str, normalize: bool) -> Result<SchmidtVector, Failure> {
    let values = text
        .split(',')
        .map(|t| parse_number(t.trim()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Failure::new("parse", format!("cannot parse state {text:?}")))?;
    let d = values.len();
    let state = if normalize {
        SchmidtVector::normalized(&values, d)
    } else {
        SchmidtVector::new(&values, d)
    };
    Ok(state?)
}

fn parse_number(t: &str) -> Option<f64> {
    match t.split_once('/') {
        Some((p, q)) => {
            let q: f64 = q.trim().parse().ok()?;
            (q != 0.0).then_some(p.trim().parse::<f64>().ok()? / q)
        }
        None => t.parse().ok(),
    }
}

pub fn parse_message(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::new("parse", format!("cannot parse message {text:?}")))
}

/// `"0;1,2"` becomes `[[0], [1, 2]]`.
pub fn parse_groups(text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(';')
        .map(|g| {
            g.split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::new("parse", format!("cannot parse groups {text:?}")))
}

/// Inclusive range `a..b`, `a..=b`, `a-b` or a single value.
pub fn parse_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::new("parse", format!("cannot parse range {text:?}"));
    let (a, b) = if let Some((a, b)) = text.split_once("..") {
        (a, b.trim_start_matches('='))
    } else if let Some((a, b)) = text.split_once('-') {
        (a, b)
    } else {
        (text, text)
    };
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn required<T: Clone>(value: &Option<T>, flag: &str, kind: Kind) -> Result<T, Failure> {
    value
        .clone()
        .ok_or_else(|| Failure::new("usage", format!("{kind:?} construction needs --{flag}")))
}

/// Builds the set described by `kind` and `recipe`.
pub fn build_set(kind: Kind, recipe: &SetRecipe, seed: u64) -> Result<OperatorSet, Failure> {
    match kind {
        Kind::Weyl => {
            let d = required(&recipe.d, "d", kind)?;
            Ok(weyl_set(d)?)
        }
        Kind::DPlus1 => {
            let d = required(&recipe.d, "d", kind)?;
            Ok(d_plus_1_set(d)?.1)
        }
        Kind::Phases => {
            let state = parse_state(&required(&recipe.state, "state", kind)?, recipe.normalize)?;
            let n = required(&recipe.n, "n", kind)?;
            let config = SearchConfig::with_seed(seed);
            match solve_phase_table(&state, n, &config)? {
                PhaseSolution::Found(table) => Ok(product_set(&state, &table)?),
                PhaseSolution::Infeasible { best_residual } => {
                    let reason = if state.lambda0() > 1.0 / n as f64 + 1e-12 {
                        "lambda0 exceeds 1/N"
                    } else {
                        "no phase table found"
                    };
                    Err(Failure {
                        kind: "infeasible",
                        reason: reason.into(),
                        detail: json!({ "lambda0": state.lambda0(), "n": n, "best_residual": best_residual }),
                    })
                }
            }
        }
        Kind::Grouped => {
            let state = parse_state(&required(&recipe.state, "state", kind)?, recipe.normalize)?;
            let groups = parse_groups(&required(&recipe.groups, "groups", kind)?)?;
            match grouped_phase_set(&state, &groups)? {
                Some(table) => Ok(product_set(&state, &table)?),
                None => Err(Failure {
                    kind: "infeasible",
                    reason: "groups do not all weigh 1/N".into(),
                    detail: json!({ "groups": groups }),
                }),
            }
        }
    }
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Weyl => "weyl",
        Kind::Phases => "phases",
        Kind::DPlus1 => "d-plus-1",
        Kind::Grouped => "grouped",
    }
}

fn manifest(
    command: &str,
    args: Vec<String>,
    config: Value,
    state: Option<&SchmidtVector>,
    started: Instant,
    outputs: &[(&Path, &str)],
) -> RunManifest {
    RunManifest {
        command: command.into(),
        args,
        config,
        input_state: state.map(|s| s.lambda().to_vec()),
        version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs
            .iter()
            .map(|(p, text)| OutputDigest { path: p.display().to_string(), sha256: io::sha256_hex(text.as_bytes()) })
            .collect(),
    }
}

fn construct(a: ConstructArgs, invocation: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let set = build_set(a.kind, &a.recipe, a.seed)?;
    let mut meta = Map::new();
    meta.insert("construction".into(), json!(kind_name(a.kind)));
    let text = io::operator_set_to_json(&set, meta);
    io::write_file(&a.out, &text)?;
    let config = json!({ "kind": kind_name(a.kind), "seed": a.seed });
    manifest("construct", invocation, config, Some(set.state()), started, &[(&a.out, &text)])
        .write_beside(&a.out)?;
    println!("{}", json!({ "n": set.len(), "d": set.state().dim(), "residual": set.gram_residual(), "out": a.out }));
    Ok(0)
}

fn verify(a: VerifyArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|source| IoError::Io { path: a.file.clone(), source })?;
    let set = io::operator_set_from_json(&text)?;
    if !(a.tol > 0.0) {
        return Err(Failure::new("usage", "--tol must be positive"));
    }
    let gram = gram_matrix(set.state(), set.unitaries())?;
    let ok = is_orthogonal_set(set.state(), set.unitaries(), a.tol)?;
    let max_dev = set.unitaries().iter().map(|u| u.deviation()).fold(0.0, f64::max);
    println!("d {}", set.state().dim());
    println!("N {}", set.len());
    println!("lambda {}", set.state().lambda().iter().map(|x| format!("{x:.14e}")).collect::<Vec<_>>().join(" "));
    println!("gram");
    for r in 0..gram.nrows() {
        let row: Vec<String> = (0..gram.ncols())
            .map(|c| format!("{:+.14e}{:+.14e}i", gram[(r, c)].re, gram[(r, c)].im))
            .collect();
        println!("{}", row.join(" "));
    }
    println!("residual {:.14e}", set.gram_residual());
    println!("unitarity_deviation {max_dev:.14e}");
    println!("tolerance {:.14e}", a.tol);
    println!("orthogonal {}", if ok { "yes" } else { "no" });
    Ok(if ok { 0 } else { 1 })
}

fn search_cmd(a: SearchArgs, invocation: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let state = parse_state(&a.state, a.normalize)?;
    let config = a.flags.config();
    let (report, set, code) = if let Some(n) = a.n {
        let result = search::feasible(&state, n, &config)?;
        let code = if result.status == FeasibilityStatus::Feasible { 0 } else { 1 };
        let report = json!({
            "status": format!("{:?}", result.status),
            "n": n,
            "best_residual": result.best_residual,
            "restarts_used": result.restarts_used,
            "analytic": result.analytic,
        });
        (report, result.set, code)
    } else {
        let result = search::n_max(&state, &config)?;
        let report = json!({
            "n_max": result.n_max,
            "residual": result.set.gram_residual(),
            "evidence": result.evidence,
        });
        (report, Some(result.set), 0)
    };
    if let (Some(out), Some(set)) = (&a.out, &set) {
        let text = io::operator_set_to_json(set, Map::new());
        io::write_file(out, &text)?;
        let cfg = serde_json::to_value(&config).expect("serializable");
        manifest("search", invocation, cfg, Some(&state), started, &[(out, &text)]).write_beside(out)?;
    }
    println!("{report}");
    Ok(code)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn map(a: MapArgs, invocation: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let config = a.flags.config();
    let region = search::region_map(a.resolution, &config)?;
    let csv = io::region_csv(&region);
    let svg = io::region_svg(&region);
    let csv_path = with_suffix(&a.out, ".csv");
    let svg_path = with_suffix(&a.out, ".svg");
    io::write_file(&csv_path, &csv)?;
    io::write_file(&svg_path, &svg)?;
    let mut cfg = serde_json::to_value(&config).expect("serializable");
    cfg["resolution"] = json!(a.resolution);
    manifest("map", invocation, cfg, None, started, &[(&csv_path, &csv), (&svg_path, &svg)])
        .write_beside(&csv_path)?;
    let mut counts = std::collections::BTreeMap::new();
    for c in &region.cells {
        *counts.entry(c.n_max).or_insert(0usize) += 1;
    }
    println!("{}", json!({ "cells": region.cells.len(), "counts": counts, "csv": csv_path, "svg": svg_path }));
    Ok(0)
}

fn minent(a: MinentArgs, invocation: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let d = a.d;
    if d < 2 {
        return Err(Failure::new("usage", "--d must be at least 2"));
    }
    let (lo, hi) = match &a.n_range {
        Some(r) => parse_range(r)?,
        None => (d + 1, 2 * d),
    };
    if lo <= d || hi > 2 * d {
        return Err(Failure::new("usage", format!("N range {lo}..{hi} must lie within {}..{}", d + 1, 2 * d)));
    }
    let config = a.flags.config();
    let mut rows = Vec::new();
    for n in lo..=hi {
        let lambda0 = search::min_lambda0(n, d, &config.derived(n as u64))?;
        rows.push(ThresholdRow {
            n,
            d,
            lambda0_min: lambda0,
            entropy_min: search::threshold::two_coefficient_entropy(lambda0, d),
            capacity_bound: search::capacity_lower_bound(n, d),
        });
    }
    let table = io::threshold_csv(&rows);
    let curve = io::entropy_curve_csv(&rows);
    let table_path = with_suffix(&a.out, ".csv");
    let curve_path = with_suffix(&a.out, ".entropy.csv");
    io::write_file(&table_path, &table)?;
    io::write_file(&curve_path, &curve)?;
    let mut cfg = serde_json::to_value(&config).expect("serializable");
    cfg["d"] = json!(d);
    cfg["n_range"] = json!([lo, hi]);
    manifest("minent", invocation, cfg, None, started, &[(&table_path, &table), (&curve_path, &curve)])
        .write_beside(&table_path)?;
    print!("{table}");
    Ok(0)
}

fn simulate_cmd(a: SimulateArgs) -> CmdResult {
    // phases and grouped consume --state themselves; otherwise it rebases the set
    let (set, rebase) = match (&a.set, a.construct) {
        (Some(path), _) => (io::read_operator_set(path)?, true),
        (None, Some(kind)) => (build_set(kind, &a.recipe, a.seed)?, matches!(kind, Kind::Weyl | Kind::DPlus1)),
        (None, None) => return Err(Failure::new("usage", "either --set or --construct is required")),
    };
    let set = match (&a.recipe.state, rebase) {
        (Some(text), true) => OperatorSet::new(parse_state(text, a.recipe.normalize)?, set.unitaries().to_vec())?,
        _ => set,
    };
    finish_simulation(&a, set)
}

fn finish_simulation(a: &SimulateArgs, set: OperatorSet) -> CmdResult {
    if !(a.tol > 0.0) {
        return Err(Failure::new("usage", "--tol must be positive"));
    }
    if !is_orthogonal_set(set.state(), set.unitaries(), a.tol)? {
        return Err(Failure {
            kind: "invalid_set",
            reason: "set is not orthogonal within --tol".into(),
            detail: json!({ "residual": set.gram_residual(), "tol": a.tol }),
        });
    }
    let message = parse_message(&a.message)?;
    let report = simulate(set.state(), &set, &message, a.shots, a.seed)?;
    let perfect = report.is_perfect();
    let mut value = serde_json::to_value(&report).expect("serializable");
    value["d"] = json!(set.state().dim());
    value["n"] = json!(set.len());
    value["residual"] = json!(set.gram_residual());
    value["perfect"] = json!(perfect);
    println!("{value}");
    Ok(if perfect { 0 } else { 1 })
}
