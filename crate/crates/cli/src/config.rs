//! Flat `key = value` experiment configs.
//!
//! ```text
//! # comment
//! [gc]
//! scheme = brs
//! n = 8
//! k = 4
//! s = 2
//! seed = 1
//! ```
//!
//! Exactly one `[command]` section. Every key must be understood by the
//! chosen command and scheme; all problems are reported together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gc,
    Cmm,
    Sketch,
    Descend,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Gc => "gc",
            Command::Cmm => "cmm",
            Command::Sketch => "sketch",
            Command::Descend => "descend",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "gc" => Command::Gc,
            "cmm" => Command::Cmm,
            "sketch" => Command::Sketch,
            "descend" => Command::Descend,
            "report" => Command::Report,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based source line, when the problem has one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GcScheme {
    Frc,
    Brs { k: usize },
    Expander { graph: Graph },
    Bernoulli { k: usize },
    Bibd { design: Design },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Graph {
    Petersen,
    Complete { n: usize },
    Random { n: usize, degree: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Fano,
    Complete { v: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GcSpec {
    pub scheme: GcScheme,
    /// Servers; fixed by the graph or design for those schemes.
    pub n: usize,
    pub s: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CmmScheme {
    Matdot { k: usize },
    Polynomial { k: usize },
    Entangled,
    Independent { k: usize, r: usize },
    Setwise { k: usize, r: usize },
    Weighted { k: usize, r: usize },
    Oversketch { q: usize, block: usize, e: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Points {
    Unity,
    Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CmmSpec {
    pub scheme: CmmScheme,
    pub n: usize,
    pub points: Points,
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    /// Straggler count enumerated by the exhaustive sweep.
    pub s: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DelaySpec {
    ShiftedExponential { shift: f64, rate: f64 },
    Deterministic { delays: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicySpec {
    Delay,
    Fixed { stragglers: Vec<usize> },
    Adversarial { s: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSpec {
    pub delay: DelaySpec,
    pub heterogeneity: Option<Vec<f64>>,
    pub policy: PolicySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Every straggler set of the configured size.
    All,
    /// Simulated rounds.
    Rounds { rounds: usize, sim: SimSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchMethod {
    Cr,
    Uniform,
    Gaussian,
    Countsketch,
    Srht,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SketchSpec {
    pub method: SketchMethod,
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    pub q: Vec<usize>,
    pub trials: usize,
    /// Threshold on the normalized spectral error for a success-rate column.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DescendScheme {
    Centralized,
    Coded(GcSpec),
    Sketching { k: usize, n: usize, s: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescendSpec {
    pub scheme: DescendScheme,
    pub rows: usize,
    pub cols: usize,
    pub noise: f64,
    pub iterations: usize,
    /// Step size as a fraction of `1 / ||A^T A||`.
    pub step_scale: f64,
    pub sim: SimSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Gc { code: GcSpec, sweep: Sweep, dim: usize },
    Cmm { code: CmmSpec, sweep: Sweep },
    Sketch(SketchSpec),
    Descend(DescendSpec),
    Report(GcSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub experiment: Experiment,
    /// Every experiment setting after defaults, in key order, for provenance
    /// headers. The output path is left out so moving a run does not change
    /// its bytes.
    pub resolved: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved.insert("seed".into(), seed.to_string());
        self
    }

    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.out = Some(out);
        self
    }

    pub fn with_format(mut self, format: Format) -> Self {
        let name = match format {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        };
        self.resolved.insert("format".into(), name.into());
        self.format = format;
        self
    }
}

struct Entry {
    line: usize,
    value: String,
}

/// Typed access to the raw entries, collecting every problem.
struct Fields {
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
    errors: Vec<ConfigError>,
}

trait Value: Sized {
    const KIND: &'static str;
    fn parse(raw: &str) -> Option<Self>;
    fn show(&self) -> String;
}

impl Value for usize {
    const KIND: &'static str = "a nonnegative integer";
    fn parse(raw: &str) -> Option<Self> {
        raw.parse().ok()
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for u64 {
    const KIND: &'static str = "a nonnegative integer";
    fn parse(raw: &str) -> Option<Self> {
        raw.parse().ok()
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for f64 {
    const KIND: &'static str = "a finite number";
    fn parse(raw: &str) -> Option<Self> {
        raw.parse().ok().filter(|x: &f64| x.is_finite())
    }
    fn show(&self) -> String {
        format!("{self:?}")
    }
}

impl Value for String {
    const KIND: &'static str = "a word";
    fn parse(raw: &str) -> Option<Self> {
        (!raw.is_empty() && !raw.contains(char::is_whitespace)).then(|| raw.to_string())
    }
    fn show(&self) -> String {
        self.clone()
    }
}

impl<T: Value> Value for Vec<T> {
    const KIND: &'static str = "a comma-separated list";
    fn parse(raw: &str) -> Option<Self> {
        if raw.trim().is_empty() {
            return Some(Vec::new());
        }
        raw.split(',').map(|p| T::parse(p.trim())).collect()
    }
    fn show(&self) -> String {
        self.iter().map(Value::show).collect::<Vec<_>>().join(",")
    }
}

impl Fields {
    fn error(&mut self, line: Option<usize>, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn get<T: Value>(&mut self, key: &str) -> Option<T> {
        let entry = self.entries.get(key)?;
        self.used.insert(key.to_string());
        match T::parse(entry.value.trim()) {
            Some(v) => {
                self.resolved.insert(key.to_string(), v.show());
                Some(v)
            }
            None => {
                let (line, value) = (entry.line, entry.value.clone());
                self.error(Some(line), format!("`{key}` must be {}, got `{value}`", T::KIND));
                None
            }
        }
    }

    fn or<T: Value>(&mut self, key: &str, default: T) -> Option<T> {
        if self.entries.contains_key(key) {
            self.get(key)
        } else {
            self.resolved.insert(key.to_string(), default.show());
            Some(default)
        }
    }

    fn require<T: Value>(&mut self, key: &str, context: &str) -> Option<T> {
        if !self.entries.contains_key(key) {
            self.error(None, format!("missing required key `{key}` for {context}"));
            return None;
        }
        self.get(key)
    }

    fn choice<'a>(&mut self, key: &str, options: &[&'a str], default: Option<&'a str>) -> Option<&'a str> {
        let raw: String = match default {
            Some(d) => self.or(key, d.to_string())?,
            None => self.require(key, "this command")?,
        };
        match options.iter().find(|&&o| o == raw) {
            Some(&o) => Some(o),
            None => {
                let line = self.line(key);
                self.error(line, format!("`{key}` must be one of {}, got `{raw}`", options.join(", ")));
                None
            }
        }
    }

    fn check(&mut self, ok: bool, key: &str, message: String) {
        if !ok {
            let line = self.line(key);
            self.error(line, message);
        }
    }

    fn finish(&mut self, command: Command, built: bool) {
        let allowed = allowed_keys(command);
        let unused: Vec<(String, usize)> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, e)| (k.clone(), e.line))
            .collect();
        for (key, line) in unused {
            if !allowed.contains(&key.as_str()) {
                self.error(Some(line), format!("unknown key `{key}` for [{command}]"));
            } else if built {
                self.error(Some(line), format!("key `{key}` does not apply to this scheme or mode"));
            }
        }
    }
}

const SIM_KEYS: &[&str] = &["delay", "delays", "shift", "rate", "heterogeneity", "policy", "stragglers", "adversaries"];
const GC_KEYS: &[&str] = &["scheme", "n", "k", "s", "graph", "degree", "design", "points"];

fn allowed_keys(command: Command) -> Vec<&'static str> {
    let mut keys = vec!["seed", "out", "format"];
    match command {
        Command::Gc => {
            keys.extend(GC_KEYS);
            keys.extend(["dim", "sweep", "rounds"]);
            keys.extend(SIM_KEYS);
        }
        Command::Report => keys.extend(GC_KEYS),
        Command::Cmm => {
            keys.extend(["scheme", "n", "rows", "inner", "cols", "k", "r", "q", "block", "e", "points", "s"]);
            keys.extend(["sweep", "rounds"]);
            keys.extend(SIM_KEYS);
        }
        Command::Sketch => keys.extend(["method", "rows", "inner", "cols", "q", "trials", "epsilon"]),
        Command::Descend => {
            keys.extend(GC_KEYS);
            keys.extend(["rows", "cols", "noise", "iterations", "step_scale"]);
            keys.extend(SIM_KEYS);
        }
    }
    keys
}

/// Parse and validate a config; on failure every problem found is returned,
/// ordered by line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut command: Option<(Command, usize)> = None;
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            let name = name.trim();
            match (name.parse::<Command>(), &command) {
                (Err(()), _) => errors.push(ConfigError {
                    line: Some(line),
                    message: format!("unknown section `[{name}]`"),
                }),
                (Ok(_), Some((_, first))) => errors.push(ConfigError {
                    line: Some(line),
                    message: format!("second section header; the config already opened one on line {first}"),
                }),
                (Ok(c), None) => command = Some((c, line)),
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let key = key.trim().to_string();
        if command.is_none() {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("key `{key}` appears before any [command] section"),
            });
            continue;
        }
        if let Some(prev) = entries.get(&key) {
            errors.push(ConfigError {
                line: Some(line),
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
            continue;
        }
        entries.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    let Some((command, _)) = command else {
        errors.push(ConfigError {
            line: None,
            message: "config has no [command] section".into(),
        });
        return Err(errors);
    };

    let mut f = Fields {
        entries,
        used: BTreeSet::new(),
        resolved: BTreeMap::new(),
        errors,
    };
    let seed = f.or("seed", 0u64);
    let out = f.get::<String>("out").map(PathBuf::from);
    f.resolved.remove("out");
    let format = match f.choice("format", &["csv", "jsonl"], Some("csv")) {
        Some("jsonl") => Some(Format::Jsonl),
        Some(_) => Some(Format::Csv),
        None => None,
    };
    let experiment = match command {
        Command::Gc => gc_experiment(&mut f),
        Command::Cmm => cmm_experiment(&mut f),
        Command::Sketch => sketch_experiment(&mut f),
        Command::Descend => descend_experiment(&mut f),
        Command::Report => gc_spec(&mut f),
    };
    f.finish(command, experiment.is_some() && seed.is_some() && format.is_some());
    let mut errors = f.errors;
    if errors.is_empty() {
        if let (Some(seed), Some(format), Some(experiment)) = (seed, format, experiment) {
            return Ok(ExperimentConfig {
                command,
                seed,
                out,
                format,
                experiment: match (command, experiment) {
                    (Command::Report, Experiment::Gc { code, .. }) => Experiment::Report(code),
                    (_, e) => e,
                },
                resolved: f.resolved,
            });
        }
    }
    errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
    Err(errors)
}

fn gc_spec(f: &mut Fields) -> Option<Experiment> {
    let code = gc_code(f)?;
    Some(Experiment::Gc {
        code,
        sweep: Sweep::All,
        dim: 1,
    })
}

fn gc_code(f: &mut Fields) -> Option<GcSpec> {
    let scheme = f.choice("scheme", &["frc", "brs", "expander", "bernoulli", "bibd"], None)?;
    let s: Option<usize> = f.require("s", "gradient codes");
    let spec = match scheme {
        "frc" => {
            let n: usize = f.require("n", "scheme frc")?;
            let s = s?;
            f.check(s < n && n.is_multiple_of(s + 1), "s", format!("frc needs s < n and s + 1 dividing n = {n}, got s = {s}"));
            GcSpec { scheme: GcScheme::Frc, n, s }
        }
        "brs" | "bernoulli" => {
            let n: usize = f.require("n", "this scheme")?;
            let k: usize = f.require("k", "this scheme")?;
            let s = s?;
            f.check(s < n, "s", format!("s = {s} must be below n = {n}"));
            f.check(k >= 1, "k", "k must be positive".into());
            let scheme = if scheme == "brs" { GcScheme::Brs { k } } else { GcScheme::Bernoulli { k } };
            GcSpec { scheme, n, s }
        }
        "expander" => {
            let graph = match f.choice("graph", &["petersen", "complete", "random"], Some("petersen"))? {
                "petersen" => Graph::Petersen,
                "complete" => Graph::Complete { n: f.require("n", "graph complete")? },
                _ => Graph::Random {
                    n: f.require("n", "graph random")?,
                    degree: f.or("degree", 3usize)?,
                },
            };
            let n = match &graph {
                Graph::Petersen => 10,
                Graph::Complete { n } | Graph::Random { n, .. } => *n,
            };
            let s = s?;
            f.check(s < n, "s", format!("s = {s} must be below n = {n}"));
            GcSpec {
                scheme: GcScheme::Expander { graph },
                n,
                s,
            }
        }
        _ => {
            let design = match f.choice("design", &["fano", "complete"], Some("fano"))? {
                "fano" => Design::Fano,
                _ => {
                    let v: usize = f.require("points", "design complete")?;
                    if v < 3 {
                        f.check(false, "points", format!("a complete design needs at least 3 points, got {v}"));
                        return None;
                    }
                    Design::Complete { v }
                }
            };
            let n = match &design {
                Design::Fano => 7,
                Design::Complete { v } => *v,
            };
            let s = s?;
            f.check(s < n, "s", format!("s = {s} must be below n = {n}"));
            GcSpec {
                scheme: GcScheme::Bibd { design },
                n,
                s,
            }
        }
    };
    Some(spec)
}

fn sim_spec(f: &mut Fields, n: usize) -> Option<SimSpec> {
    let delay = match f.choice("delay", &["shifted-exponential", "deterministic"], Some("shifted-exponential"))? {
        "deterministic" => {
            let delays: Vec<f64> = f.require("delays", "deterministic delays")?;
            f.check(
                delays.len() == n && delays.iter().all(|&d| d >= 0.0),
                "delays",
                format!("need {n} nonnegative delays"),
            );
            DelaySpec::Deterministic { delays }
        }
        _ => {
            let shift = f.or("shift", 1.0)?;
            let rate = f.or("rate", 1.0)?;
            f.check(shift >= 0.0, "shift", format!("shift must be nonnegative, got {shift}"));
            f.check(rate > 0.0, "rate", format!("rate must be positive, got {rate}"));
            DelaySpec::ShiftedExponential { shift, rate }
        }
    };
    let heterogeneity: Option<Vec<f64>> = f.get("heterogeneity");
    if let Some(h) = &heterogeneity {
        f.check(
            h.len() == n && h.iter().all(|&x| x > 0.0),
            "heterogeneity",
            format!("need {n} positive heterogeneity factors"),
        );
    }
    let policy = match f.choice("policy", &["delay", "fixed", "adversarial"], Some("delay"))? {
        "fixed" => {
            let stragglers: Vec<usize> = f.require("stragglers", "policy fixed")?;
            f.check(
                stragglers.iter().all(|&i| i < n),
                "stragglers",
                format!("straggler ids must be below n = {n}"),
            );
            PolicySpec::Fixed { stragglers }
        }
        "adversarial" => PolicySpec::Adversarial {
            s: f.require("adversaries", "policy adversarial")?,
        },
        _ => PolicySpec::Delay,
    };
    Some(SimSpec {
        delay,
        heterogeneity,
        policy,
    })
}

fn sweep(f: &mut Fields, n: usize) -> Option<Sweep> {
    match f.choice("sweep", &["all", "rounds"], Some("all"))? {
        "all" => Some(Sweep::All),
        _ => {
            let rounds = f.or("rounds", 100usize)?;
            f.check(rounds >= 1, "rounds", "rounds must be positive".into());
            Some(Sweep::Rounds {
                rounds,
                sim: sim_spec(f, n)?,
            })
        }
    }
}

fn gc_experiment(f: &mut Fields) -> Option<Experiment> {
    let code = gc_code(f);
    let dim = f.or("dim", 4usize);
    let sweep = sweep(f, code.as_ref()?.n)?;
    Some(Experiment::Gc {
        code: code?,
        sweep,
        dim: dim?,
    })
}

fn cmm_experiment(f: &mut Fields) -> Option<Experiment> {
    let scheme = f.choice(
        "scheme",
        &["matdot", "polynomial", "entangled", "independent", "setwise", "weighted", "oversketch"],
        None,
    )?;
    let n: usize = f.require("n", "coded matrix multiplication")?;
    let rows = f.or("rows", 8usize)?;
    let inner = f.or("inner", 16usize)?;
    let cols = f.or("cols", 8usize)?;
    let scheme = match scheme {
        "matdot" | "polynomial" => {
            let k: usize = f.require("k", "this scheme")?;
            if k == 0 {
                f.check(false, "k", "k must be positive".into());
                return None;
            }
            let (threshold, split) = if scheme == "matdot" {
                (2 * k - 1, inner)
            } else {
                (k * k, rows.min(cols))
            };
            f.check(threshold <= n, "n", format!("n = {n} is below the recovery threshold {threshold}"));
            f.check(
                split % k == 0,
                "k",
                format!("k = {k} must divide the split dimension {split}"),
            );
            if scheme == "matdot" {
                CmmScheme::Matdot { k }
            } else {
                f.check(rows % k == 0 && cols % k == 0, "k", format!("k = {k} must divide rows and cols"));
                CmmScheme::Polynomial { k }
            }
        }
        "entangled" => {
            f.check(n >= 3, "n", format!("the entangled code needs n >= 3, got {n}"));
            f.check(inner % 2 == 0, "inner", "the entangled code needs an even inner dimension".into());
            CmmScheme::Entangled
        }
        "independent" | "setwise" | "weighted" => {
            let k: usize = f.require("k", "sampling schemes")?;
            let r: usize = f.require("r", "sampling schemes")?;
            f.check(r >= 1 && r <= k, "r", format!("need 1 <= r <= k = {k}, got {r}"));
            f.check(2 * r <= n + 1, "n", format!("n = {n} is below the recovery threshold {}", (2 * r).saturating_sub(1)));
            f.check(k >= 1 && inner % k.max(1) == 0, "k", format!("k = {k} must divide inner = {inner}"));
            match scheme {
                "independent" => CmmScheme::Independent { k, r },
                "setwise" => CmmScheme::Setwise { k, r },
                _ => CmmScheme::Weighted { k, r },
            }
        }
        _ => {
            let q: usize = f.require("q", "oversketch")?;
            let block: usize = f.require("block", "oversketch")?;
            let e: usize = f.or("e", 1usize)?;
            f.check(block >= 1 && q.is_multiple_of(block.max(1)), "block", format!("block = {block} must divide q = {q}"));
            f.check(
                rows % block.max(1) == 0 && cols % block.max(1) == 0,
                "block",
                format!("block = {block} must divide rows and cols"),
            );
            CmmScheme::Oversketch { q, block, e }
        }
    };
    let points = match f.choice("points", &["unity", "real"], Some("unity"))? {
        "real" => Points::Real,
        _ => Points::Unity,
    };
    let s: Option<usize> = f.get("s");
    if let Some(s) = s {
        f.check(s < n, "s", format!("s = {s} must be below n = {n}"));
    }
    let sweep = sweep(f, n)?;
    Some(Experiment::Cmm {
        code: CmmSpec {
            scheme,
            n,
            points,
            rows,
            inner,
            cols,
            s,
        },
        sweep,
    })
}

fn sketch_experiment(f: &mut Fields) -> Option<Experiment> {
    let method = match f.choice("method", &["cr", "uniform", "gaussian", "countsketch", "srht"], Some("cr"))? {
        "uniform" => SketchMethod::Uniform,
        "gaussian" => SketchMethod::Gaussian,
        "countsketch" => SketchMethod::Countsketch,
        "srht" => SketchMethod::Srht,
        _ => SketchMethod::Cr,
    };
    let rows = f.or("rows", 32usize)?;
    let inner = f.or("inner", 256usize)?;
    let cols = f.or("cols", 32usize)?;
    let q: Vec<usize> = f.require("q", "sketch")?;
    f.check(!q.is_empty() && q.iter().all(|&x| x >= 1), "q", "q must list positive sketch sizes".into());
    let trials = f.or("trials", 200usize)?;
    f.check(trials >= 1, "trials", "trials must be positive".into());
    let epsilon: Option<f64> = f.get("epsilon");
    if let Some(eps) = epsilon {
        f.check(eps > 0.0, "epsilon", format!("epsilon must be positive, got {eps}"));
    }
    f.check(rows >= 1 && inner >= 1 && cols >= 1, "inner", "dimensions must be positive".into());
    Some(Experiment::Sketch(SketchSpec {
        method,
        rows,
        inner,
        cols,
        q,
        trials,
        epsilon,
    }))
}

fn descend_experiment(f: &mut Fields) -> Option<Experiment> {
    let scheme = f.choice(
        "scheme",
        &["centralized", "frc", "brs", "expander", "bernoulli", "bibd", "sketching"],
        None,
    )?;
    let (scheme, n) = match scheme {
        "centralized" => (DescendScheme::Centralized, 1),
        "sketching" => {
            let k: usize = f.require("k", "scheme sketching")?;
            let n: usize = f.require("n", "scheme sketching")?;
            let s: usize = f.require("s", "scheme sketching")?;
            f.check(n >= k, "n", format!("n = {n} servers cannot cover k = {k} blocks"));
            f.check(s < n, "s", format!("s = {s} must be below n = {n}"));
            (DescendScheme::Sketching { k, n, s }, n)
        }
        _ => {
            f.used.remove("scheme");
            let code = gc_code(f)?;
            let n = code.n;
            (DescendScheme::Coded(code), n)
        }
    };
    let rows = f.or("rows", 256usize)?;
    let cols = f.or("cols", 4usize)?;
    let noise = f.or("noise", 0.5)?;
    let iterations = f.or("iterations", 200usize)?;
    let step_scale = f.or("step_scale", 0.5)?;
    f.check(iterations >= 1, "iterations", "iterations must be positive".into());
    f.check(step_scale > 0.0, "step_scale", format!("step_scale must be positive, got {step_scale}"));
    f.check(rows >= cols, "rows", format!("need rows >= cols, got {rows} x {cols}"));
    let sim = sim_spec(f, n)?;
    Some(Experiment::Descend(DescendSpec {
        scheme,
        rows,
        cols,
        noise,
        iterations,
        step_scale,
        sim,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_gc_config() {
        let cfg = parse_config("[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\nseed = 1\n").unwrap();
        assert_eq!(cfg.command, Command::Gc);
        assert_eq!(cfg.seed, 1);
        let Experiment::Gc { code, sweep, .. } = cfg.experiment else { panic!() };
        assert_eq!(code, GcSpec { scheme: GcScheme::Brs { k: 4 }, n: 8, s: 2 });
        assert_eq!(sweep, Sweep::All);
        assert_eq!(cfg.resolved["dim"], "4");
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let errs = parse_config("# header\n[gc]\nscheme = frc\nn = 4\ns = 1\nfoo = 1\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].line, Some(6));
        assert!(errs[0].message.contains("`foo`"));
    }

    #[test]
    fn all_errors_reported() {
        let errs = parse_config("[gc]\nscheme = brs\nn = eight\nk = 4\ns = 2\nbar = 3\nbaz\n").unwrap_err();
        let lines: Vec<Option<usize>> = errs.iter().map(|e| e.line).collect();
        assert!(lines.contains(&Some(3)));
        assert!(lines.contains(&Some(6)));
        assert!(lines.contains(&Some(7)));
        assert!(errs.iter().any(|e| e.message.contains("integer")));
    }

    #[test]
    fn semantic_validation() {
        let errs = parse_config("[gc]\nscheme = brs\nn = 8\nk = 4\ns = 8\n").unwrap_err();
        assert!(errs.iter().any(|e| e.line == Some(5) && e.message.contains("below")));
        let errs = parse_config("[gc]\nscheme = brs\nn = 8\ns = 2\n").unwrap_err();
        assert!(errs.iter().any(|e| e.line.is_none() && e.message.contains("`k`")));
        assert!(parse_config("[cmm]\nscheme = matdot\nn = 6\nk = 4\n").is_err());
        assert!(parse_config("[gc]\nscheme = frc\nn = 4\ns = 1\n[cmm]\n").is_err());
        assert!(parse_config("n = 4\n").is_err());
        assert!(parse_config("[gc]\nscheme = frc\nn = 4\ns = 1\nn = 4\n").is_err());
    }

    #[test]
    fn scheme_irrelevant_keys_rejected() {
        let errs = parse_config("[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\ngraph = petersen\n").unwrap_err();
        assert!(errs[0].message.contains("`graph`"));
    }

    #[test]
    fn other_commands_parse() {
        let cfg = parse_config("[sketch]\nq = 16, 64, 256\nepsilon = 0.5\n").unwrap();
        let Experiment::Sketch(spec) = cfg.experiment else { panic!() };
        assert_eq!(spec.q, vec![16, 64, 256]);
        let cfg = parse_config("[descend]\nscheme = brs\nn = 8\nk = 4\ns = 2\niterations = 10\n").unwrap();
        assert!(matches!(cfg.experiment, Experiment::Descend(_)));
        let cfg = parse_config("[cmm]\nscheme = matdot\nn = 9\nk = 4\nsweep = rounds\npolicy = fixed\nstragglers = 0,1\n").unwrap();
        let Experiment::Cmm { sweep: Sweep::Rounds { sim, .. }, .. } = cfg.experiment else { panic!() };
        assert_eq!(sim.policy, PolicySpec::Fixed { stragglers: vec![0, 1] });
        let cfg = parse_config("[report]\nscheme = expander\ns = 1\n").unwrap();
        assert!(matches!(cfg.experiment, Experiment::Report(_)));
    }
}
