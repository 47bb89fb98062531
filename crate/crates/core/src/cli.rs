//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::barrier::{build_nonpenetrable, interior_spectrum, norm_on_loop};
use crate::elastic::{classify_trapping, elastic_spectrum, trace_trajectory, ClosedOrbit, TraceOutcome};
use crate::error::Error;
use crate::lattice::{Chirality, CoinField, Site, WalkOperator, WalkState};
use crate::presets::{build, Model, Preset, PresetParams};
use crate::shape::{migration_scan, ScanFamily, ScanRow, Weave};
use crate::spectral::{locate_roots_in_strip, RootSet};

pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_JSON: i32 = 3;
pub const EXIT_RANGE: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Evolve,
    Trace,
    ElasticSpec,
    Resonances,
    BarrierSpec,
    BarrierNorms,
    CornerScan,
    ShapeScan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "qwres", version, about = "Eigenvalues and resonances of 2D quantum walks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evolve a delta state under the walk
    Evolve(Flags),
    /// Trace one elastic trajectory, or list every closed orbit
    Trace(Flags),
    /// Elastic spectrum from closed orbits
    ElasticSpec(Flags),
    /// Locate zeros of D(κ) in the strip
    Resonances(Flags),
    /// Interior spectrum of a non-penetrable barrier
    BarrierSpec(Flags),
    /// Interior resolvent norms on shrinking loops
    BarrierNorms(Flags),
    /// Root migration for the corner family
    CornerScan(Flags),
    /// Root counting for the shape-resonance family
    ShapeScan(Flags),
}

/// Flags shared by every command; unset values fall back to the config file,
/// then to defaults.
#[derive(Args, Debug, Default, Clone)]
struct Flags {
    /// JSON config file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// free | corner | one-corner | open-corner | phase-corner | barrier-trivial | barrier-random | shape-trivial
    #[arg(long)]
    preset: Option<String>,
    /// Coin field JSON file (instead of a preset)
    #[arg(long)]
    coin: Option<PathBuf>,
    /// Corner rectangle width [default: 2]
    #[arg(long)]
    m0: Option<i64>,
    /// Corner rectangle height [default: 2]
    #[arg(long)]
    n0: Option<i64>,
    /// Barrier box half-width [default: 1]
    #[arg(long = "M0")]
    big_m0: Option<i64>,
    /// Perturbation strength [default: 0]
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated ε values for scans
    #[arg(long)]
    eps_grid: Option<String>,
    /// Loop exponent s [default: 1 for corner-scan, 1/2 otherwise]
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated loop centers (default: unperturbed eigen-phases)
    #[arg(long)]
    mu0: Option<String>,
    /// RNG seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of steps for evolve [default: 100]
    #[arg(long)]
    t: Option<u64>,
    /// Search depth Λ: Im κ ≥ −Λ [default: 2]
    #[arg(long)]
    strip_depth: Option<f64>,
    /// Root-location tolerance [default: 1e-9]
    #[arg(long)]
    tol: Option<f64>,
    /// Output format
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    /// Output path (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (falls back to QWRES_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    /// Start site "x,y" for evolve and trace
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Start chirality: left | right | down | up
    #[arg(long)]
    chirality: Option<String>,
    /// Include wall-clock timing in the envelope
    #[arg(long)]
    timing: bool,
    /// Include the full final state in evolve output
    #[arg(long)]
    full_state: bool,
}

/// Contents of a --config file; every key optional, unknown keys rejected.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    coin: Option<PathBuf>,
    m0: Option<i64>,
    n0: Option<i64>,
    #[serde(rename = "M0")]
    big_m0: Option<i64>,
    eps: Option<f64>,
    eps_grid: Option<Vec<f64>>,
    s: Option<f64>,
    mu0: Option<Vec<f64>>,
    seed: Option<u64>,
    t: Option<u64>,
    strip_depth: Option<f64>,
    tol: Option<f64>,
    emit: Option<Emit>,
    output: Option<PathBuf>,
    threads: Option<usize>,
    start: Option<[i64; 2]>,
    chirality: Option<String>,
}

/// Fully resolved configuration, echoed in every envelope.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub preset: Option<String>,
    pub coin: Option<PathBuf>,
    pub m0: i64,
    pub n0: i64,
    #[serde(rename = "M0")]
    pub big_m0: i64,
    pub eps: f64,
    pub eps_grid: Vec<f64>,
    pub s: f64,
    pub mu0: Option<Vec<f64>>,
    pub seed: u64,
    pub t: u64,
    pub strip_depth: f64,
    pub tol: f64,
    pub emit: Emit,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub start: Option<[i64; 2]>,
    pub chirality: Chirality,
    #[serde(skip)]
    pub timing: bool,
    #[serde(skip)]
    pub full_state: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn range(msg: impl Into<String>) -> CliError {
        CliError { code: EXIT_RANGE, kind: "out_of_range".into(), message: msg.into() }
    }

    fn json(msg: impl Into<String>) -> CliError {
        CliError { code: EXIT_JSON, kind: "malformed_json".into(), message: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match e {
            Error::Malformed(_) => EXIT_JSON,
            ref e if e.is_input_error() => EXIT_RANGE,
            _ => EXIT_NUMERICAL,
        };
        CliError { code, kind: e.kind().into(), message: e.to_string() }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::range(format!("bad {what} value '{p}'"))))
        .collect()
}

fn parse_start(s: &str) -> Result<[i64; 2], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::range(format!("start must be 'x,y', got '{s}'")));
    }
    let p = |t: &str| t.trim().parse::<i64>().map_err(|_| CliError::range(format!("bad start '{s}'")));
    Ok([p(parts[0])?, p(parts[1])?])
}

/// Outcome of argument parsing: either a config or an early exit (help,
/// version, usage error) with text to print.
pub enum Parsed {
    Run(Box<RunConfig>),
    Exit { code: i32, text: String },
}

pub fn parse_config<I, T>(args: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return Ok(Parsed::Exit { code, text: e.render().to_string() });
        }
    };
    let (command, flags) = match cli.command {
        Cmd::Evolve(f) => (CommandKind::Evolve, f),
        Cmd::Trace(f) => (CommandKind::Trace, f),
        Cmd::ElasticSpec(f) => (CommandKind::ElasticSpec, f),
        Cmd::Resonances(f) => (CommandKind::Resonances, f),
        Cmd::BarrierSpec(f) => (CommandKind::BarrierSpec, f),
        Cmd::BarrierNorms(f) => (CommandKind::BarrierNorms, f),
        Cmd::CornerScan(f) => (CommandKind::CornerScan, f),
        Cmd::ShapeScan(f) => (CommandKind::ShapeScan, f),
    };
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::json(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| CliError::json(e.to_string()))?
        }
        None => FileConfig::default(),
    };
    resolve(command, flags, file).map(|c| Parsed::Run(Box::new(c)))
}

fn resolve(command: CommandKind, f: Flags, file: FileConfig) -> Result<RunConfig, CliError> {
    let eps_grid = match (&f.eps_grid, file.eps_grid) {
        (Some(s), _) => Some(parse_list(s, "eps-grid")?),
        (None, g) => g,
    };
    let mu0 = match (&f.mu0, file.mu0) {
        (Some(s), _) => Some(parse_list(s, "mu0")?),
        (None, g) => g,
    };
    let start = match (&f.start, file.start) {
        (Some(s), _) => Some(parse_start(s)?),
        (None, s) => s,
    };
    let chir_name = f.chirality.or(file.chirality).unwrap_or_else(|| "left".into());
    let chirality =
        Chirality::parse(&chir_name).ok_or_else(|| CliError::range(format!("unknown chirality '{chir_name}'")))?;
    let default_emit = match command {
        CommandKind::BarrierNorms | CommandKind::CornerScan | CommandKind::ShapeScan => Emit::Csv,
        _ => Emit::Json,
    };
    let default_grid = match command {
        CommandKind::BarrierNorms => vec![0.1, 0.05, 0.025, 0.0125],
        CommandKind::CornerScan => vec![0.05, 0.1, 0.2],
        CommandKind::ShapeScan => vec![0.4, 0.2, 0.1],
        _ => vec![],
    };
    let default_preset = match command {
        CommandKind::CornerScan => Some("one-corner".to_string()),
        CommandKind::ShapeScan => Some("shape-trivial".to_string()),
        CommandKind::BarrierSpec | CommandKind::BarrierNorms => Some("barrier-trivial".to_string()),
        _ => None,
    };
    let coin = f.coin.or(file.coin);
    let preset = f.preset.or(file.preset).or(if coin.is_none() { default_preset } else { None });
    let cfg = RunConfig {
        command,
        preset,
        coin,
        m0: f.m0.or(file.m0).unwrap_or(2),
        n0: f.n0.or(file.n0).unwrap_or(2),
        big_m0: f.big_m0.or(file.big_m0).unwrap_or(1),
        eps: f.eps.or(file.eps).unwrap_or(0.0),
        eps_grid: eps_grid.unwrap_or(default_grid),
        s: f.s.or(file.s).unwrap_or(if command == CommandKind::CornerScan { 1.0 } else { 0.5 }),
        mu0,
        seed: f.seed.or(file.seed).unwrap_or(1),
        t: f.t.or(file.t).unwrap_or(100),
        strip_depth: f.strip_depth.or(file.strip_depth).unwrap_or(2.0),
        tol: f.tol.or(file.tol).unwrap_or(1e-9),
        emit: f.emit.or(file.emit).unwrap_or(default_emit),
        output: f.output.or(file.output),
        threads: f.threads.or(file.threads),
        start,
        chirality,
        timing: f.timing,
        full_state: f.full_state,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.m0 < 1 || c.n0 < 1 || c.m0 > 50 || c.n0 > 50 {
        return Err(CliError::range(format!("m0, n0 must lie in [1, 50] (got {}, {})", c.m0, c.n0)));
    }
    if c.big_m0 < 1 || c.big_m0 > 8 {
        return Err(CliError::range(format!("M0 must lie in [1, 8], got {}", c.big_m0)));
    }
    if !(0.0..=1.0).contains(&c.eps) {
        return Err(CliError::range(format!("eps must lie in [0, 1], got {}", c.eps)));
    }
    if let Some(bad) = c.eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(CliError::range(format!("eps-grid values must lie in (0, 1], got {bad}")));
    }
    if !(c.s > 0.0 && c.s <= 1.0) {
        return Err(CliError::range(format!("s must lie in (0, 1], got {}", c.s)));
    }
    if !(c.tol > 0.0 && c.tol < 1e-2) {
        return Err(CliError::range(format!("tol must lie in (0, 1e-2), got {}", c.tol)));
    }
    if !(c.strip_depth > 0.0 && c.strip_depth <= 20.0) {
        return Err(CliError::range(format!("strip-depth must lie in (0, 20], got {}", c.strip_depth)));
    }
    if c.t > 10_000_000 {
        return Err(CliError::range(format!("t must be at most 1e7, got {}", c.t)));
    }
    if c.threads == Some(0) {
        return Err(CliError::range("threads must be positive"));
    }
    if c.preset.is_some() && c.coin.is_some() {
        return Err(CliError::range("give either --preset or --coin, not both"));
    }
    if let Some(p) = &c.preset {
        let preset: Preset = p.parse().map_err(|e: Error| CliError::range(e.to_string()))?;
        if !preset.uses_eps() && c.eps != 0.0 {
            return Err(CliError::range(format!("preset '{p}' takes no eps; use one-corner or shape-trivial")));
        }
    }
    let csv_ok = matches!(
        c.command,
        CommandKind::Resonances | CommandKind::BarrierNorms | CommandKind::CornerScan | CommandKind::ShapeScan
    );
    if c.emit == Emit::Csv && !csv_ok {
        return Err(CliError::range("csv output is only available for tables"));
    }
    Ok(())
}

/// Warnings printed to stderr before dispatch.
pub fn warnings(c: &RunConfig) -> Vec<String> {
    let mut w = Vec::new();
    if c.command == CommandKind::ShapeScan && c.s > 0.5 {
        w.push(format!("s = {} exceeds 1/2; loops beyond the proven regime (experiment)", c.s));
    }
    w
}

fn load_model(c: &RunConfig) -> Result<Model, CliError> {
    if let Some(path) = &c.coin {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::json(format!("cannot read {}: {e}", path.display())))?;
        let coin = CoinField::from_json(&text)?;
        return Ok(Model { preset: Preset::Free, coin, corner: None, barrier: None, shape: None });
    }
    let preset: Preset = c.preset.as_deref().unwrap_or("free").parse()?;
    let params = PresetParams { m0: c.m0, n0: c.n0, big_m0: c.big_m0, eps: c.eps, seed: c.seed };
    Ok(build(preset, &params)?)
}

/// CSV numbers: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn orbit_json(id: usize, o: &ClosedOrbit) -> Value {
    json!({
        "id": id,
        "period": o.period(),
        "phase_sum": o.phase_sum(),
        "sites": o.states.iter().map(|(s, _)| [s.x, s.y]).collect::<Vec<_>>(),
        "chiralities": o.states.iter().map(|(_, j)| j.name()).collect::<Vec<_>>(),
    })
}

fn roots_json(set: &RootSet) -> Value {
    let roots: Vec<Value> = set
        .roots
        .iter()
        .map(|r| {
            let w = r.w();
            json!({
                "kappa": {"re": r.kappa.re, "im": r.kappa.im},
                "w": {"re": w.re, "im": w.im},
                "multiplicity": r.multiplicity,
                "kind": r.kind,
                "residual": r.residual,
            })
        })
        .collect();
    json!({"roots": roots, "winding_total": set.winding_total})
}

fn roots_csv(set: &RootSet) -> String {
    let mut out = String::from("kappa_re,kappa_im,w_re,w_im,multiplicity,kind,residual\n");
    for r in &set.roots {
        let w = r.w();
        let kind = match r.kind {
            crate::spectral::RootKind::Eigenvalue => "eigenvalue",
            crate::spectral::RootKind::Resonance => "resonance",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.kappa.re),
            num(r.kappa.im),
            num(w.re),
            num(w.im),
            r.multiplicity,
            kind,
            num(r.residual)
        );
    }
    out
}

fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("eps,mu0,count,root_re,root_im,w_abs,dist_to_mu0\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.eps),
            num(r.mu0),
            r.count,
            opt(r.root.map(|z| z.re)),
            opt(r.root.map(|z| z.im)),
            opt(r.w_abs),
            opt(r.dist_to_mu0)
        );
    }
    out
}

/// Command output: JSON payload or a CSV table.
pub enum Output {
    Json(Value),
    Csv(String),
}

pub fn run(c: &RunConfig) -> Result<Output, CliError> {
    let model = load_model(c)?;
    match c.command {
        CommandKind::Evolve => {
            let op = WalkOperator::new(model.coin.clone());
            let start = c.start.unwrap_or([0, 0]);
            let u0 = WalkState::delta(Site::new(start[0], start[1]), c.chirality);
            let u = op.evolve(&u0, c.t);
            let mut payload = json!({
                "t": c.t,
                "start": start,
                "chirality": c.chirality.name(),
                "norm_initial": u0.norm(),
                "norm_final": u.norm(),
                "norm_drift": (u.norm() - u0.norm()).abs(),
                "support_size": u.support().len(),
            });
            if c.full_state {
                let state: Vec<Value> = u
                    .iter()
                    .map(|(s, a)| json!({"x": [s.x, s.y], "amps": a.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()}))
                    .collect();
                payload["state"] = Value::Array(state);
            }
            Ok(Output::Json(payload))
        }
        CommandKind::Trace | CommandKind::ElasticSpec => {
            let pc = model
                .elastic()
                .ok_or_else(|| CliError::range("the coin field is not elastic (phased permutations only)"))?;
            if c.command == CommandKind::Trace {
                if let Some(s) = c.start {
                    let payload = match trace_trajectory(&pc, Site::new(s[0], s[1]), c.chirality) {
                        TraceOutcome::Closed(o) => json!({"outcome": "closed", "orbit": orbit_json(0, &o)}),
                        TraceOutcome::Escaped(t) => json!({
                            "outcome": "escaped",
                            "steps": t.phases.len(),
                            "sites": t.samples.iter().map(|(s, _)| [s.x, s.y]).collect::<Vec<_>>(),
                        }),
                    };
                    return Ok(Output::Json(payload));
                }
            }
            let rep = classify_trapping(&pc);
            let orbits: Vec<Value> = rep.orbits.iter().enumerate().map(|(i, o)| orbit_json(i, o)).collect();
            let mut payload = json!({"orbits": orbits, "non_trapping": rep.non_trapping});
            if c.command == CommandKind::ElasticSpec {
                let lines = elastic_spectrum(&rep.orbits, 1e-10);
                payload["spectrum"] = serde_json::to_value(lines).expect("serializable");
            }
            Ok(Output::Json(payload))
        }
        CommandKind::Resonances => {
            let set = locate_roots_in_strip(&model.coin, c.strip_depth, c.tol)?;
            Ok(match c.emit {
                Emit::Json => Output::Json(roots_json(&set)),
                Emit::Csv => Output::Csv(roots_csv(&set)),
            })
        }
        CommandKind::BarrierSpec | CommandKind::BarrierNorms => {
            let spec = model.barrier.clone().ok_or_else(|| CliError::range("command needs a barrier preset"))?;
            let np = build_nonpenetrable(&spec)?;
            let iu = interior_spectrum(&np)?;
            if c.command == CommandKind::BarrierSpec {
                let mut phases = iu.phases.clone();
                phases.sort_by(f64::total_cmp);
                let clusters: Vec<Value> = iu
                    .phase_clusters(1e-8)
                    .iter()
                    .map(|(p, m)| json!({"phase": p, "multiplicity": m}))
                    .collect();
                return Ok(Output::Json(json!({
                    "N": iu.graph.len(),
                    "eigenphases": phases,
                    "leakage": np.exterior.leakage,
                    "clusters": clusters,
                    "interior": spec.interior_label(),
                    "exterior_closed_orbits": np.exterior.closed_orbits,
                })));
            }
            let mu0 = match &c.mu0 {
                Some(v) if v.len() == 1 => v[0],
                Some(_) => return Err(CliError::range("barrier-norms takes a single mu0")),
                None => {
                    let cl = iu.phase_clusters(1e-8);
                    let min_mult = cl.iter().map(|(_, m)| *m).min().unwrap_or(1);
                    cl.iter().find(|(_, m)| *m == min_mult).map(|(p, _)| *p).unwrap_or(0.0)
                }
            };
            let mut out = String::from("eps,s,max_norm\n");
            for &eps in &c.eps_grid {
                let ln = norm_on_loop(&iu, mu0, eps, c.s)?;
                let _ = writeln!(out, "{},{},{}", num(eps), num(c.s), num(ln.max_norm));
            }
            Ok(Output::Csv(out))
        }
        CommandKind::CornerScan | CommandKind::ShapeScan => {
            let family = if c.command == CommandKind::CornerScan {
                let preset = model
                    .preset
                    .corner_preset()
                    .filter(|_| model.corner.is_some())
                    .ok_or_else(|| CliError::range("corner-scan needs a corner preset"))?;
                ScanFamily::Corner { m0: c.m0, n0: c.n0, preset }
            } else {
                let spec = model.barrier.clone().ok_or_else(|| CliError::range("shape-scan needs a barrier preset"))?;
                ScanFamily::Shape { spec, weave: Weave::Full }
            };
            let mu0s: Vec<f64> = match &c.mu0 {
                Some(v) => v.clone(),
                None => family.default_centers()?.into_iter().map(|(p, _)| p).collect(),
            };
            let rows = migration_scan(&family, &c.eps_grid, &mu0s, c.s, c.tol)?;
            Ok(match c.emit {
                Emit::Csv => Output::Csv(scan_csv(&rows)),
                Emit::Json => Output::Json(serde_json::to_value(&rows).expect("serializable")),
            })
        }
    }
}

fn configure_threads(c: &RunConfig) {
    let n = c.threads.or_else(|| std::env::var("QWRES_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n.filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError { code: EXIT_NUMERICAL, kind: "io".into(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses, runs and writes output; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(Parsed::Run(c)) => c,
        Ok(Parsed::Exit { code, text }) => {
            if code == 0 {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
            return code;
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    for w in warnings(&cfg) {
        eprintln!("warning: {w}");
    }
    configure_threads(&cfg);
    let started = Instant::now();
    let result = run(&cfg);
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(Output::Csv(text)) => match write_out(cfg.output.as_ref(), &text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message);
                e.code
            }
        },
        Ok(Output::Json(payload)) => {
            let timing = if cfg.timing { json!({"elapsed_ms": elapsed_ms}) } else { Value::Null };
            let env = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config": &*cfg,
                "timing": timing,
                "payload": payload,
            });
            let text = serde_json::to_string_pretty(&env).expect("serializable") + "\n";
            match write_out(cfg.output.as_ref(), &text) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {}", e.message);
                    e.code
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            let diag = json!({"error": {"kind": e.kind, "message": e.message, "exit_code": e.code}});
            println!("{}", serde_json::to_string_pretty(&diag).expect("serializable"));
            e.code
        }
    }
}
