//! Run configuration: a JSON document, dotted-key overrides and validation.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use voterlab_core::dynamics::{AcceptanceMatrix, OpinionState, Schedule};
use voterlab_core::Graph;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "VOTERLAB_SEED";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Config(String),
    /// Failure while running; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<voterlab_core::Error> for CliError {
    fn from(e: voterlab_core::Error) -> Self {
        use voterlab_core::Error::*;
        match e {
            InvalidParameter(_) | Parse { .. } | Disconnected | Frozen => CliError::Config(e.to_string()),
            Divergent(_) | Resource(_) | Singular => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Clique,
    Cycle,
    Star,
    File,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Clique => "clique",
            GraphKind::Cycle => "cycle",
            GraphKind::Star => "star",
            GraphKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    #[serde(default = "one")]
    pub alpha01: f64,
    #[serde(default = "one")]
    pub alpha10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default = "default_kind")]
    pub kind: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Cliques only. Defaults to true under synchronous schedules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_loops: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub per_trial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default = "default_graph")]
    pub graph: GraphConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default = "default_run")]
    pub run: RunSection,
    #[serde(default = "default_output")]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn default_schedule() -> Schedule {
    Schedule::Async
}
fn default_kind() -> GraphKind {
    GraphKind::Clique
}
fn default_trials() -> u64 {
    1000
}
fn default_format() -> Format {
    Format::Json
}
fn default_model() -> ModelConfig {
    ModelConfig { schedule: default_schedule(), alpha01: 1.0, alpha10: 1.0 }
}
fn default_graph() -> GraphConfig {
    GraphConfig { kind: default_kind(), n: None, with_loops: None, path: None }
}
fn default_run() -> RunSection {
    RunSection { trials: default_trials(), max_steps: None, seed: None }
}
fn default_output() -> OutputConfig {
    OutputConfig { format: default_format(), path: None, per_trial: false }
}

/// Reads the config document from `path` (`-` for standard input). With no
/// path, standard input is read unless it is a terminal; empty input is an
/// empty document.
pub fn load_document(path: Option<&Path>) -> CliResult<Value> {
    let text = match path {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p)
            .map_err(|e| CliError::config(format!("--config {}: {e}", p.display())))?,
        _ => {
            use std::io::IsTerminal;
            let stdin = std::io::stdin();
            if path.is_none() && stdin.is_terminal() {
                String::new()
            } else {
                let mut s = String::new();
                stdin.lock().read_to_string(&mut s)?;
                s
            }
        }
    };
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::config(format!("config is not valid JSON: {e}")))?;
    if !doc.is_object() {
        return Err(CliError::config("config document must be a JSON object"));
    }
    Ok(doc)
}

/// Sets `key` (dotted path such as `run.seed`) to `value`, creating
/// intermediate objects. A `null` value removes the key.
pub fn set_path(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("malformed key '{key}'")));
    }
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        let obj = cur.as_object_mut().ok_or_else(|| CliError::config(format!("{key}: parent is not an object")))?;
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = cur.as_object_mut().ok_or_else(|| CliError::config(format!("{key}: parent is not an object")))?;
    let last = parts[parts.len() - 1].to_string();
    if value.is_null() {
        obj.remove(&last);
    } else {
        obj.insert(last, value);
    }
    Ok(())
}

/// Applies `key=value`; the value is parsed as JSON, falling back to a
/// plain string.
pub fn apply_override(doc: &mut Value, spec: &str) -> CliResult<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::config(format!("--set expects key=value, got '{spec}'")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(doc, key.trim(), value)
}

/// Applies `VOTERLAB_SEED` to `run.seed` when set.
pub fn apply_seed_env(doc: &mut Value) -> CliResult<()> {
    match std::env::var(SEED_ENV) {
        Ok(s) => {
            let seed: u64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("{SEED_ENV}='{s}' is not a decimal 64-bit integer")))?;
            set_path(doc, "run.seed", Value::from(seed))
        }
        Err(_) => Ok(()),
    }
}

pub fn parse_config(doc: &Value) -> CliResult<RunConfig> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::config(inner.to_string())
        } else {
            CliError::config(format!("{path}: {inner}"))
        }
    })
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Echo of the effective configuration (seed filled in).
    pub config: RunConfig,
    pub graph: Graph,
    pub acc: AcceptanceMatrix,
    pub schedule: Schedule,
    pub initial: OpinionState,
    pub seed: u64,
}

impl Resolved {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn is_clique(&self) -> bool {
        self.config.graph.kind == GraphKind::Clique
    }
}

pub fn resolve(mut cfg: RunConfig) -> CliResult<Resolved> {
    let m = &cfg.model;
    for (key, v) in [("model.alpha01", m.alpha01), ("model.alpha10", m.alpha10)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::config(format!("{key}: {v} is not a probability in [0, 1]")));
        }
    }
    if m.schedule == Schedule::SyncM2 && m.alpha01 != m.alpha10 {
        return Err(CliError::config(
            "model.schedule: sync-m2 requires an unbiased acceptance matrix (alpha01 = alpha10)",
        ));
    }
    let acc = AcceptanceMatrix::new(m.alpha01, m.alpha10)?;
    let schedule = m.schedule;

    let gc = cfg.graph.clone();
    let need_n = || gc.n.ok_or_else(|| CliError::config("graph.n: required for this graph kind"));
    if gc.kind != GraphKind::Clique && gc.with_loops == Some(true) {
        return Err(CliError::config("graph.with_loops: only clique graphs take self-loops"));
    }
    if gc.kind != GraphKind::File && gc.path.is_some() {
        return Err(CliError::config("graph.path: only used with kind = file"));
    }
    let graph = match gc.kind {
        GraphKind::Clique => {
            let loops = gc.with_loops.unwrap_or(schedule.is_sync());
            cfg.graph.with_loops = Some(loops);
            Graph::clique(need_n()?, loops).map_err(|e| CliError::config(format!("graph.n: {e}")))?
        }
        GraphKind::Cycle => Graph::cycle(need_n()?).map_err(|e| CliError::config(format!("graph.n: {e}")))?,
        GraphKind::Star => Graph::star(need_n()?).map_err(|e| CliError::config(format!("graph.n: {e}")))?,
        GraphKind::File => {
            let path = gc.path.as_ref().ok_or_else(|| CliError::config("graph.path: required for kind = file"))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("graph.path: {}: {e}", path.display())))?;
            let g = Graph::from_edge_list(&text).map_err(|e| CliError::config(format!("graph.path: {e}")))?;
            if let Some(n) = gc.n {
                if n != g.n() {
                    return Err(CliError::config(format!("graph.n: {n} disagrees with the file's {} nodes", g.n())));
                }
            }
            g
        }
    };
    let n = graph.n();
    cfg.graph.n = Some(n);
    if !graph.is_connected() {
        return Err(CliError::config("graph: the graph is disconnected"));
    }

    let init = &cfg.init;
    let given = [init.k.is_some(), init.nodes.is_some(), init.bits.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(CliError::config("init: give exactly one of k, nodes, bits"));
    }
    let initial = if let Some(k) = init.k {
        OpinionState::with_ones_prefix(n, k).map_err(|e| CliError::config(format!("init.k: {e}")))?
    } else if let Some(nodes) = &init.nodes {
        OpinionState::with_ones_at(n, nodes).map_err(|e| CliError::config(format!("init.nodes: {e}")))?
    } else {
        let bits = init.bits.as_deref().unwrap_or_default();
        let s = OpinionState::parse_bits(bits).map_err(|e| CliError::config(format!("init.bits: {e}")))?;
        if s.n() != n {
            return Err(CliError::config(format!("init.bits: length {} does not match n = {n}", s.n())));
        }
        s
    };

    if cfg.run.trials == 0 {
        return Err(CliError::config("run.trials: must be at least 1"));
    }
    if cfg.output.per_trial && cfg.output.path.is_none() {
        return Err(CliError::config("output.per_trial: needs output.path"));
    }
    let seed = *cfg.run.seed.get_or_insert(DEFAULT_SEED);
    Ok(Resolved { config: cfg, graph, acc, schedule, initial, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn resolve_doc(doc: Value) -> CliResult<Resolved> {
        resolve(parse_config(&doc)?)
    }

    #[test]
    fn defaults_and_echo() {
        let r = resolve_doc(json!({"graph": {"n": 6}, "init": {"k": 2}})).unwrap();
        assert_eq!(r.seed, DEFAULT_SEED);
        assert_eq!(r.config.run.seed, Some(42));
        assert_eq!(r.config.graph.with_loops, Some(false));
        assert_eq!(r.initial.ones_count(), 2);
        let r = resolve_doc(json!({"model": {"schedule": "sync-m1"}, "graph": {"n": 6}, "init": {"k": 2}})).unwrap();
        assert!(r.graph.allows_self_loops());
    }

    #[test]
    fn overrides() {
        let mut doc = json!({"run": {"seed": 1}});
        apply_override(&mut doc, "run.seed=7").unwrap();
        apply_override(&mut doc, "graph.kind=cycle").unwrap();
        apply_override(&mut doc, "init.nodes=[0,3]").unwrap();
        assert_eq!(doc, json!({"run": {"seed": 7}, "graph": {"kind": "cycle"}, "init": {"nodes": [0, 3]}}));
        assert!(apply_override(&mut doc, "novalue").is_err());
        assert!(apply_override(&mut doc, "run..x=1").is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let msg = |doc: Value| match resolve_doc(doc) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        };
        assert!(msg(json!({"model": {"alpha01": 2.0}, "graph": {"n": 4}, "init": {"k": 1}})).contains("model.alpha01"));
        assert!(msg(json!({"model": {"bogus": 1}})).contains("bogus"));
        assert!(msg(json!({"run": {"trials": "many"}})).contains("run.trials"));
        assert!(msg(json!({"graph": {"n": 4}, "init": {"k": 1, "bits": "0101"}})).contains("init"));
        assert!(msg(json!({"graph": {"n": 4}, "init": {"k": 9}})).contains("init.k"));
        assert!(msg(json!({"graph": {"n": 4}, "init": {"bits": "01"}})).contains("init.bits"));
        let m2 = msg(json!({"model": {"schedule": "sync-m2", "alpha01": 0.5, "alpha10": 0.7}, "graph": {"n": 4}, "init": {"k": 1}}));
        assert!(m2.contains("sync-m2") && m2.contains("unbiased"));
        assert!(msg(json!({"graph": {"kind": "cycle", "n": 5, "with_loops": true}, "init": {"k": 1}})).contains("with_loops"));
    }
}
