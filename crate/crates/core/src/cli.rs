//! Experiment driver behind the `cdperc` binary.
//!
//! Every subcommand resolves its flags (optionally layered over a TOML file
//! with the same keys) into a complete parameter set, embeds that set as a
//! `# config:` JSON line at the top of its CSV and writes one row per
//! measurement. Feeding the CSV back to `replay` regenerates it byte for byte.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds;
use crate::dynamics::LocalEvent;
use crate::environment::{coupled_event_grid, ConstraintLaw, GridCell};
use crate::influence::{decoupling_estimate, locality_batch, radius_tail};
use crate::lattice::{Edge, Point, VertexSet, Window};
use crate::oracle::{builtin_cases, OracleCase, TinyConstraints, TinyInstance};
use crate::rare::{splitting_estimate, AnnulusReach, CrossingSpan, SplittingParams};
use crate::renorm::{
    crossing_curve, crossing_times, default_pad, estimate_pstar, induction_rhs, scale_plan,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        };
        json!({ "error": kind, "reason": self.to_string() }).to_string()
    }
}

impl From<crate::error::Error> for CliError {
    // Library errors are precondition failures on the requested parameters.
    fn from(e: crate::error::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "cdperc",
    version,
    about = "Constrained-degree percolation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunOptions,
}

/// Options that affect where and how output is written, never its content.
#[derive(Args, Debug, Clone, Default)]
pub struct RunOptions {
    /// TOML file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the generation-time header line.
    #[arg(long, global = true)]
    pub no_header_timestamp: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derived constants as JSON.
    Constants(Params),
    /// Exact oracle against Monte Carlo on tiny graphs.
    Oracle(Params),
    /// Left–right crossing probabilities of L×L boxes.
    Crossing(Params),
    /// Closed dual annulus crossing probability P*(N).
    Dualscan(Params),
    /// Survival of the influence radius of a vertex.
    Influence(Params),
    /// Exterior-resampling locality check.
    Locality(Params),
    /// Covariance of distant edge events.
    Decouple(Params),
    /// One coupled draw per replicate across a (ρ, t) grid.
    Continuity(Params),
    /// Multiscale ladder, its conditions and the induction step.
    Scales(Params),
    /// Regenerate a CSV from its embedded config.
    Replay {
        file: PathBuf,
        /// Compare with the file instead of writing; exit 3 on any difference.
        #[arg(long)]
        check: bool,
    },
}

/// Experiment parameters. Which keys a subcommand reads is listed in
/// [`allowed_keys`]; unset keys take per-subcommand defaults.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Constraint law ρ0,…,ρ(2d−1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    /// Far end of a linear ρ path (continuity).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_end: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Box sizes: L for crossing, N for dualscan.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<u32>>,
    /// Replicates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pad: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<u32>,
    /// Locality radius.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    /// Side of the square Λ at the origin (locality).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separations: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long = "l0")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Fixed c5 instead of the calibrated value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c5: Option<f64>,
    /// Tiny graph file (oracle); adds an "edge i open" row per edge.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    /// Estimate by fixed-level splitting instead of direct sampling.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moves: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::Oracle(_) => "oracle",
            Command::Crossing(_) => "crossing",
            Command::Dualscan(_) => "dualscan",
            Command::Influence(_) => "influence",
            Command::Locality(_) => "locality",
            Command::Decouple(_) => "decouple",
            Command::Continuity(_) => "continuity",
            Command::Scales(_) => "scales",
            Command::Replay { .. } => "replay",
        }
    }
}

const SPLITTING_KEYS: [&str; 5] = ["splitting", "particles", "moves", "block", "runs"];

/// Parameter keys read by each subcommand.
pub fn allowed_keys(command: &str) -> CliResult<Vec<&'static str>> {
    let mut keys: Vec<&'static str> = match command {
        "constants" => vec!["d", "c5"],
        "oracle" => vec!["seed", "t-grid", "n", "graph"],
        "crossing" => vec!["seed", "rho", "t", "t-grid", "sizes", "n"],
        "dualscan" => vec!["seed", "rho", "t", "sizes", "n", "pad"],
        "influence" => vec!["seed", "r-max", "n"],
        "locality" => vec!["seed", "rho", "t", "r", "lambda", "n"],
        "decouple" => vec!["seed", "rho", "t", "separations", "n", "pad"],
        "continuity" => vec!["seed", "rho", "rho-end", "t-grid", "n", "pad"],
        "scales" => vec!["l0", "count", "c5"],
        other => return Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    };
    if matches!(command, "crossing" | "dualscan") {
        keys.extend(SPLITTING_KEYS);
    }
    Ok(keys)
}

fn to_object(p: &Params) -> serde_json::Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m,
        _ => unreachable!("params is a struct"),
    }
}

/// Flags override file values key by key.
pub fn merge(file: &Params, flags: &Params) -> Params {
    let mut m = to_object(file);
    m.extend(to_object(flags));
    serde_json::from_value(Value::Object(m)).expect("merged params deserialize")
}

pub fn load_config_file(path: &Path) -> CliResult<Params> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Checks that only keys the subcommand reads are set, then fills defaults.
pub fn resolve(command: &str, p: &Params) -> CliResult<Params> {
    let allowed = allowed_keys(command)?;
    for key in to_object(p).keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "'{key}' is not a parameter of {command}"
            )));
        }
    }
    let mut r = p.clone();
    let fill = |slot: &mut Option<_>, v| {
        if slot.is_none() {
            *slot = Some(v);
        }
    };
    if allowed.contains(&"seed") {
        fill(&mut r.seed, 1);
    }
    match command {
        "constants" => {
            r.d.get_or_insert(2);
        }
        "oracle" => {
            r.t_grid.get_or_insert_with(|| vec![0.25, 0.5, 0.9]);
            r.n.get_or_insert(100_000);
        }
        "crossing" => {
            if r.splitting == Some(true) {
                r.rho.get_or_insert_with(|| vec![0.0, 0.0, 1.0, 0.0]);
                r.t.get_or_insert(1.0);
                r.sizes.get_or_insert_with(|| vec![16, 24, 32, 48, 64]);
                fill_splitting(&mut r);
            } else {
                r.rho.get_or_insert_with(|| vec![0.0, 0.0, 0.5, 0.5]);
                r.t_grid
                    .get_or_insert_with(|| (0..=40).map(|i| 0.6 + 0.005 * f64::from(i)).collect());
                r.sizes.get_or_insert_with(|| vec![32, 64, 128]);
                r.n.get_or_insert(2000);
            }
        }
        "dualscan" => {
            r.rho.get_or_insert_with(|| vec![0.0, 0.0, 0.0, 1.0]);
            r.t.get_or_insert(1.0);
            r.sizes.get_or_insert_with(|| vec![8, 16, 32]);
            if r.splitting == Some(true) {
                fill_splitting(&mut r);
            } else {
                r.n.get_or_insert(2000);
            }
        }
        "influence" => {
            r.r_max.get_or_insert(40);
            r.n.get_or_insert(100_000);
        }
        "locality" => {
            r.rho.get_or_insert_with(|| vec![0.0, 0.0, 0.5, 0.5]);
            r.t.get_or_insert(0.8);
            r.r.get_or_insert(6);
            r.lambda.get_or_insert(1);
            r.n.get_or_insert(1000);
        }
        "decouple" => {
            r.rho.get_or_insert_with(|| vec![0.0, 0.0, 0.5, 0.5]);
            r.t.get_or_insert(0.8);
            r.separations.get_or_insert_with(|| vec![5, 10, 20]);
            r.n.get_or_insert(100_000);
            r.pad.get_or_insert(30);
        }
        "continuity" => {
            r.rho.get_or_insert_with(|| vec![0.0, 0.0, 0.5, 0.5]);
            r.t_grid
                .get_or_insert_with(|| (0..=10).map(|i| 0.1 * f64::from(i)).collect());
            r.n.get_or_insert(10_000);
            r.pad.get_or_insert(30);
        }
        "scales" => {
            r.l0.get_or_insert(25);
            r.count.get_or_insert(4);
        }
        _ => {}
    }
    if r.splitting == Some(false) {
        for key in SPLITTING_KEYS.iter().skip(1) {
            if to_object(&r).contains_key(*key) {
                return Err(CliError::Config(format!("'{key}' needs --splitting")));
            }
        }
        r.splitting = None;
    }
    Ok(r)
}

fn fill_splitting(r: &mut Params) {
    let d = SplittingParams::default();
    r.particles.get_or_insert(d.particles);
    r.moves.get_or_insert(d.moves);
    r.block.get_or_insert(d.block);
    r.runs.get_or_insert(d.runs);
}

/// Result of a subcommand before serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(String),
    Csv {
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    },
}

/// The embedded config: subcommand plus fully resolved parameters.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct EmbeddedConfig {
    pub command: String,
    #[serde(flatten)]
    pub params: Params,
}

impl EmbeddedConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Full-precision float as written to CSV.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn law_of(rho: &[f64]) -> CliResult<ConstraintLaw> {
    Ok(ConstraintLaw::new(rho)?)
}

fn rho_columns(rho: &[f64]) -> Vec<String> {
    (0..rho.len()).map(|i| format!("rho{i}")).collect()
}

struct Table {
    seed: String,
    config: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(seed: Option<u64>, config: &EmbeddedConfig, columns: Vec<String>) -> Self {
        let mut all = vec!["seed".to_string(), "config".to_string()];
        all.extend(columns);
        Table {
            seed: seed.map(|s| s.to_string()).unwrap_or_default(),
            config: config.to_json(),
            columns: all,
            rows: vec![],
        }
    }

    fn push(&mut self, cells: Vec<String>) {
        let mut row = vec![self.seed.clone(), self.config.clone()];
        row.extend(cells);
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn finish(self) -> Output {
        Output::Csv {
            columns: self.columns,
            rows: self.rows,
        }
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn need<T>(o: Option<T>, what: &str) -> CliResult<T> {
    o.ok_or_else(|| CliError::Config(format!("missing {what}")))
}

/// Runs a resolved configuration.
pub fn execute(cfg: &EmbeddedConfig) -> CliResult<Output> {
    let p = &cfg.params;
    let seed = p.seed;
    match cfg.command.as_str() {
        "constants" => {
            let table = bounds::constants(need(p.d, "d")?, p.c5)?;
            Ok(Output::Json(
                serde_json::to_string_pretty(&table).expect("constants serialize"),
            ))
        }
        "oracle" => {
            let mut cases: Vec<OracleCase> = builtin_cases();
            if let Some(path) = &p.graph {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                let inst = TinyInstance::parse(&text)?;
                for i in 0..inst.graph.edge_count() {
                    cases.push(OracleCase {
                        name: "user-graph".to_string(),
                        event_label: format!("edge {i} open"),
                        graph: inst.graph.clone(),
                        constraints: TinyConstraints::Fixed(inst.kappa.clone()),
                        event: std::sync::Arc::new(move |s: &[bool]| s[i]),
                    });
                }
            }
            let n = need(p.n, "n")?;
            let master = need(seed, "seed")?;
            let mut table = Table::new(
                seed,
                cfg,
                cols(&[
                    "case",
                    "event",
                    "t",
                    "exact",
                    "n",
                    "successes",
                    "p_hat",
                    "se",
                    "z",
                    "within_3se",
                ]),
            );
            for case in &cases {
                for &t in need(p.t_grid.as_ref(), "t-grid")? {
                    let exact = case.exact(t)?;
                    let mc = case.monte_carlo(t, master, n)?;
                    let z = mc.z_score(exact);
                    table.push(vec![
                        case.name.clone(),
                        case.event_label.clone(),
                        fmt_f(t),
                        fmt_f(exact),
                        n.to_string(),
                        mc.successes.to_string(),
                        fmt_f(mc.p_hat),
                        fmt_f(mc.se),
                        z.map(fmt_f).unwrap_or_default(),
                        mc.agrees_with(exact, 3.0).to_string(),
                    ]);
                }
            }
            Ok(table.finish())
        }
        "crossing" | "dualscan" if p.splitting == Some(true) => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let law = law_of(rho)?;
            let t = need(p.t, "t")?;
            let params = SplittingParams {
                particles: need(p.particles, "particles")?,
                moves: need(p.moves, "moves")?,
                block: need(p.block, "block")?,
                runs: need(p.runs, "runs")?,
                ..SplittingParams::default()
            };
            let mut columns = rho_columns(rho);
            columns.extend(cols(&[
                "t",
                "size",
                "pad",
                "particles",
                "moves",
                "block",
                "runs",
                "levels",
                "p_hat",
                "se",
                "acceptance",
            ]));
            let mut table = Table::new(seed, cfg, columns);
            for &size in need(p.sizes.as_ref(), "sizes")? {
                let (pad, est) = if cfg.command == "crossing" {
                    let prob = CrossingSpan::new(&law, t, size)?;
                    (
                        String::new(),
                        splitting_estimate(need(seed, "seed")?, &prob, &params)?,
                    )
                } else {
                    let pad = p.pad.unwrap_or_else(|| default_pad(size));
                    let prob = AnnulusReach::new(&law, t, size, pad)?;
                    (
                        pad.to_string(),
                        splitting_estimate(need(seed, "seed")?, &prob, &params)?,
                    )
                };
                let mut row: Vec<String> = rho.iter().map(|x| fmt_f(*x)).collect();
                row.extend([
                    fmt_f(t),
                    size.to_string(),
                    pad,
                    params.particles.to_string(),
                    params.moves.to_string(),
                    params.block.to_string(),
                    params.runs.to_string(),
                    est.levels
                        .iter()
                        .map(u32::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                    fmt_f(est.mean),
                    fmt_f(est.se),
                    fmt_f(est.acceptance),
                ]);
                table.push(row);
            }
            Ok(table.finish())
        }
        "crossing" => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let law = law_of(rho)?;
            let n = need(p.n, "n")?;
            let grid: Vec<f64> = match (p.t, &p.t_grid) {
                (Some(t), None) => vec![t],
                (None, Some(g)) => g.clone(),
                (Some(_), Some(_)) => {
                    return Err(CliError::Config("give either t or t-grid".into()))
                }
                (None, None) => return Err(CliError::Config("missing t-grid".into())),
            };
            if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(CliError::Config("times must lie in [0, 1]".into()));
            }
            let mut columns = rho_columns(rho);
            columns.extend(cols(&["t", "L", "n", "successes", "p_hat", "se"]));
            let mut table = Table::new(seed, cfg, columns);
            for &l in need(p.sizes.as_ref(), "sizes")? {
                let times = crossing_times(need(seed, "seed")?, &law, l, n)?;
                for (t, est) in grid.iter().zip(crossing_curve(&times, &grid)) {
                    let mut row: Vec<String> = rho.iter().map(|x| fmt_f(*x)).collect();
                    row.extend([
                        fmt_f(*t),
                        l.to_string(),
                        n.to_string(),
                        est.successes.to_string(),
                        fmt_f(est.p_hat),
                        fmt_f(est.se),
                    ]);
                    table.push(row);
                }
            }
            Ok(table.finish())
        }
        "dualscan" => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let law = law_of(rho)?;
            let (t, n) = (need(p.t, "t")?, need(p.n, "n")?);
            let mut columns = rho_columns(rho);
            columns.extend(cols(&[
                "t",
                "N",
                "pad",
                "n",
                "successes",
                "p_hat",
                "se",
                "check_pad",
                "check_n",
                "pad_shift",
                "pad_shift_se",
            ]));
            let mut table = Table::new(seed, cfg, columns);
            for &nb in need(p.sizes.as_ref(), "sizes")? {
                let est = estimate_pstar(need(seed, "seed")?, &law, t, nb, p.pad, n)?;
                let mut row: Vec<String> = rho.iter().map(|x| fmt_f(*x)).collect();
                row.extend([
                    fmt_f(t),
                    nb.to_string(),
                    est.pad.to_string(),
                    n.to_string(),
                    est.estimate.successes.to_string(),
                    fmt_f(est.estimate.p_hat),
                    fmt_f(est.estimate.se),
                    est.pad_check.pad.to_string(),
                    est.pad_check.replicates.to_string(),
                    fmt_f(est.pad_check.shift),
                    fmt_f(est.pad_check.se),
                ]);
                table.push(row);
            }
            Ok(table.finish())
        }
        "influence" => {
            let tail = radius_tail(
                need(seed, "seed")?,
                Point::xy(0, 0),
                need(p.r_max, "r-max")?,
                need(p.n, "n")?,
            )?;
            let mut table = Table::new(
                seed,
                cfg,
                cols(&[
                    "r",
                    "n",
                    "survivors",
                    "survival",
                    "bound",
                    "fit_slope",
                    "fit_intercept",
                    "mean_size",
                    "clipped",
                ]),
            );
            let (icpt, slope) = tail.fit.map_or((String::new(), String::new()), |(a, b)| {
                (fmt_f(a), fmt_f(b))
            });
            for row in &tail.rows {
                table.push(vec![
                    row.r.to_string(),
                    tail.n.to_string(),
                    row.survivors.to_string(),
                    fmt_f(row.survival),
                    fmt_f(row.bound),
                    slope.clone(),
                    icpt.clone(),
                    fmt_f(tail.mean_size),
                    tail.clipped.to_string(),
                ]);
            }
            Ok(table.finish())
        }
        "locality" => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let law = law_of(rho)?;
            let side = need(p.lambda, "lambda")?;
            if side == 0 {
                return Err(CliError::Config("lambda must be positive".into()));
            }
            let base: VertexSet = (0..side as i32)
                .flat_map(|x| (0..side as i32).map(move |y| Point::xy(x, y)))
                .collect();
            let (t, r, n) = (need(p.t, "t")?, need(p.r, "r")?, need(p.n, "n")?);
            let batch = locality_batch(need(seed, "seed")?, &law, &base, t, r, n)?;
            let mut columns = rho_columns(rho);
            columns.extend(cols(&[
                "t",
                "r",
                "lambda",
                "n",
                "not_applicable",
                "passes",
                "fails",
            ]));
            let mut table = Table::new(seed, cfg, columns);
            let mut row: Vec<String> = rho.iter().map(|x| fmt_f(*x)).collect();
            row.extend([
                fmt_f(t),
                r.to_string(),
                side.to_string(),
                n.to_string(),
                batch.not_applicable.to_string(),
                batch.passes.to_string(),
                batch.fails.to_string(),
            ]);
            table.push(row);
            Ok(table.finish())
        }
        "decouple" => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let law = law_of(rho)?;
            let (t, n, pad) = (need(p.t, "t")?, need(p.n, "n")?, need(p.pad, "pad")?);
            let mut columns = rho_columns(rho);
            columns.extend(cols(&[
                "t", "delta", "n", "p1", "p2", "p12", "cov_hat", "se", "bound",
            ]));
            let mut table = Table::new(seed, cfg, columns);
            for &delta in need(p.separations.as_ref(), "separations")? {
                let (r1, r2, e1, e2) = edge_pair(delta)?;
                let rep =
                    decoupling_estimate(need(seed, "seed")?, &law, t, &r1, &r2, &e1, &e2, n, pad)?;
                let mut row: Vec<String> = rho.iter().map(|x| fmt_f(*x)).collect();
                row.extend([
                    fmt_f(t),
                    rep.separation.to_string(),
                    n.to_string(),
                    fmt_f(rep.p1.p_hat),
                    fmt_f(rep.p2.p_hat),
                    fmt_f(rep.p12.p_hat),
                    fmt_f(rep.cov_hat),
                    fmt_f(rep.se),
                    fmt_f(rep.bound),
                ]);
                table.push(row);
            }
            Ok(table.finish())
        }
        "continuity" => {
            let rho = need(p.rho.as_ref(), "rho")?;
            let end = p.rho_end.clone().unwrap_or_else(|| rho.clone());
            if end.len() != rho.len() {
                return Err(CliError::Config(
                    "rho-end must have as many entries as rho".into(),
                ));
            }
            let grid = need(p.t_grid.as_ref(), "t-grid")?;
            let steps = grid.len().saturating_sub(1).max(1) as f64;
            let cells: Vec<GridCell> = grid
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let lam = i as f64 / steps;
                    let mix: Vec<f64> = rho
                        .iter()
                        .zip(&end)
                        .map(|(a, b)| (1.0 - lam) * a + lam * b)
                        .collect();
                    Ok(GridCell {
                        law: law_of(&mix)?,
                        t,
                    })
                })
                .collect::<CliResult<_>>()?;
            let pad = need(p.pad, "pad")?;
            let e = Edge::new(Point::xy(0, 0), 0);
            let window = Window::cube(Point::xy(0, 0), pad + 1);
            let n = need(p.n, "n")?;
            let grid_out = coupled_event_grid(
                need(seed, "seed")?,
                &window,
                &cells,
                &LocalEvent::edge_open(e),
                n as usize,
                pad,
            )?;
            let mut columns = vec!["cell".to_string()];
            columns.extend(rho_columns(rho));
            columns.extend(cols(&["t", "n", "mean", "flip_rate_next"]));
            let mut table = Table::new(seed, cfg, columns);
            for (i, cell) in cells.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(cell.law.rho().iter().map(|x| fmt_f(*x)));
                row.extend([
                    fmt_f(cell.t),
                    n.to_string(),
                    fmt_f(grid_out.means[i]),
                    grid_out
                        .flip_rates
                        .get(i)
                        .map(|f| fmt_f(*f))
                        .unwrap_or_default(),
                ]);
                table.push(row);
            }
            Ok(table.finish())
        }
        "scales" => {
            let plan = scale_plan(need(p.l0, "l0")?, need(p.count, "count")?, p.c5)?;
            let c = &plan.constants;
            let mut table = Table::new(
                None,
                cfg,
                cols(&[
                    "k",
                    "L",
                    "c1_holds",
                    "c2_holds",
                    "c3_holds",
                    "L_next",
                    "delta",
                    "ln_rhs",
                    "ln_target",
                    "induction_met",
                    "min_L_c1",
                    "min_L_c2",
                    "min_L_c3",
                ]),
            );
            for (k, row) in plan.conditions.iter().enumerate() {
                // induction hypothesis at scale k: P*(L_k) ≤ L_k^{-4}
                let step = induction_rhs(row.l, (row.l as f64).powi(-4), c.c3, c.psi)?;
                table.push(vec![
                    k.to_string(),
                    row.l.to_string(),
                    row.c1.to_string(),
                    row.c2.to_string(),
                    row.c3.to_string(),
                    step.l_next.to_string(),
                    fmt_f(step.delta),
                    fmt_f(step.ln_rhs),
                    fmt_f(step.target.ln()),
                    step.met.to_string(),
                    plan.minimal.c1.to_string(),
                    plan.minimal.c2.to_string(),
                    plan.minimal.c3.to_string(),
                ]);
            }
            Ok(table.finish())
        }
        other => Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    }
}

/// Horizontal edges `{(0,0),(1,0)}` and `{(1+δ,0),(2+δ,0)}`, at ℓ¹ distance `δ`.
fn edge_pair(delta: u64) -> CliResult<(VertexSet, VertexSet, LocalEvent, LocalEvent)> {
    let d = i32::try_from(delta)
        .map_err(|_| CliError::Config(format!("separation {delta} too large")))?;
    if d < 1 {
        return Err(CliError::Config("separations must be positive".into()));
    }
    let (a, b) = (
        Edge::new(Point::xy(0, 0), 0),
        Edge::new(Point::xy(1 + d, 0), 0),
    );
    let set = |e: &Edge| -> VertexSet {
        let (u, v) = e.endpoints();
        BTreeSet::from([u, v])
    };
    Ok((
        set(&a),
        set(&b),
        LocalEvent::edge_open(a),
        LocalEvent::edge_open(b),
    ))
}

/// Serializes an output. `timestamp` adds a `# generated-unix-time:` line.
pub fn render(
    output: &Output,
    config: &EmbeddedConfig,
    timestamp: Option<u64>,
) -> CliResult<String> {
    match output {
        Output::Json(s) => Ok(format!("{s}\n")),
        Output::Csv { columns, rows } => {
            let mut head = format!("# config: {}\n", config.to_json());
            if let Some(ts) = timestamp {
                head.push_str(&format!("# generated-unix-time: {ts}\n"));
            }
            let mut w = csv::WriterBuilder::new().from_writer(head.into_bytes());
            w.write_record(columns)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            for row in rows {
                w.write_record(row)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

/// Reads the embedded config from a CSV produced by this tool.
pub fn read_embedded_config(text: &str) -> CliResult<EmbeddedConfig> {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .ok_or_else(|| CliError::Config("no '# config:' line".into()))?;
    serde_json::from_str(line).map_err(|e| CliError::Config(format!("bad embedded config: {e}")))
}

/// Drops the generation-time line, the only part allowed to differ on rerun.
pub fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated-unix-time:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Resolve, run and render a subcommand with the given options.
pub fn run_to_string(command: &str, flags: &Params, opts: &RunOptions) -> CliResult<String> {
    let file = match &opts.config {
        Some(path) => load_config_file(path)?,
        None => Params::default(),
    };
    let cfg = EmbeddedConfig {
        command: command.to_string(),
        params: resolve(command, &merge(&file, flags))?,
    };
    run_embedded(&cfg, opts)
}

fn run_embedded(cfg: &EmbeddedConfig, opts: &RunOptions) -> CliResult<String> {
    let output = with_workers(opts.workers, || execute(cfg))?;
    let ts = (!opts.no_header_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    render(&output, cfg, ts)
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match workers {
        None => f(),
        Some(0) => Err(CliError::Config("workers must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(f),
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let opts = cli.run;
    match cli.command {
        Command::Replay { file, check } => {
            let original = std::fs::read_to_string(&file)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
            let cfg = read_embedded_config(&original)?;
            resolve(&cfg.command, &cfg.params)?;
            if check {
                let regenerated = run_embedded(
                    &cfg,
                    &RunOptions {
                        no_header_timestamp: true,
                        ..opts
                    },
                )?;
                if regenerated != strip_timestamp(&original) {
                    return Err(CliError::Runtime(format!(
                        "{} does not reproduce",
                        file.display()
                    )));
                }
                Ok(())
            } else {
                let text = run_embedded(&cfg, &opts)?;
                emit(&text, opts.out.as_deref())
            }
        }
        ref c @ (Command::Constants(ref p)
        | Command::Oracle(ref p)
        | Command::Crossing(ref p)
        | Command::Dualscan(ref p)
        | Command::Influence(ref p)
        | Command::Locality(ref p)
        | Command::Decouple(ref p)
        | Command::Continuity(ref p)
        | Command::Scales(ref p)) => {
            let text = run_to_string(c.name(), p, &opts)?;
            emit(&text, opts.out.as_deref())
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            eprintln!(
                "{}",
                CliError::Config(e.to_string().trim().to_string()).to_json()
            );
            return EXIT_CONFIG;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
