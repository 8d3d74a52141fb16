//! `check` suites: exact and statistical verification at desk-scale sizes.

use serde::Serialize;
use serde_json::{json, Value};
use voterlab_core::chain::{
    absorption_time_birth_death, clique_async_chain, configuration_kernel, fitness_cut_invariance_check,
    fixation_birth_death, solve_oracle,
};
use voterlab_core::dynamics::{AcceptanceMatrix, OpinionState, RngStream, Schedule};
use voterlab_core::montecarlo::{
    check_consensus_hitting_bound, check_drift_bound, check_lazy_scaling, check_meeting_vs_hitting,
};
use voterlab_core::Graph;

use crate::config::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Equivalence,
    Drift,
    LazyScaling,
    Meeting,
    CutRatio,
    OracleAgreement,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Equivalence => "equivalence",
            Suite::Drift => "drift",
            Suite::LazyScaling => "lazy-scaling",
            Suite::Meeting => "meeting",
            Suite::CutRatio => "cut-ratio",
            Suite::OracleAgreement => "oracle-agreement",
        }
    }

    fn default_trials(self) -> u64 {
        match self {
            Suite::Drift | Suite::LazyScaling => 10_000,
            Suite::Meeting => 2_000,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub trials: Option<u64>,
    pub seed: u64,
    pub eps: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub suite: &'static str,
    pub pass: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub items: Vec<Value>,
}

fn item<T: Serialize>(name: impl Into<String>, pass: bool, detail: &T) -> Value {
    let mut v = serde_json::to_value(detail).expect("serializable report");
    if let Value::Object(m) = &mut v {
        m.insert("name".into(), Value::from(name.into()));
        m.insert("pass".into(), Value::from(pass));
    }
    v
}

const GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

fn equivalence() -> CliResult<Vec<Value>> {
    let graphs = [("clique(4)", Graph::clique(4, true)?), ("cycle(5)", Graph::cycle(5)?), ("star(4)", Graph::star(4)?)];
    let mut items = Vec::new();
    for (name, g) in &graphs {
        for alpha in [0.25, 0.5, 1.0] {
            let acc = AcceptanceMatrix::unbiased(alpha)?;
            let m1 = configuration_kernel(g, &acc, Schedule::SyncM1)?;
            let m2 = configuration_kernel(g, &acc, Schedule::SyncM2)?;
            let diff = m1.max_abs_diff(&m2);
            items.push(item(format!("{name} alpha={alpha}"), diff <= 1e-12, &json!({ "max_abs_diff": diff, "tolerance": 1e-12 })));
        }
    }
    Ok(items)
}

fn oracle_agreement() -> CliResult<Vec<Value>> {
    let mut items = Vec::new();
    for n in 2..=7 {
        let g = Graph::clique(n, false)?;
        let (mut fix_err, mut time_err) = (0.0f64, 0.0f64);
        for &a01 in &GRID {
            for &a10 in &GRID {
                let acc = AcceptanceMatrix::new(a01, a10)?;
                let oracle = solve_oracle(&g, &acc, Schedule::Async)?;
                let chain = clique_async_chain(n, &acc)?;
                for k in 0..=n {
                    let at = oracle.at(OpinionState::with_ones_prefix(n, k)?.to_config());
                    fix_err = fix_err.max((at.fixation1 - fixation_birth_death(&chain, k)?).abs());
                    let t = absorption_time_birth_death(&chain, k)?;
                    time_err = time_err.max((at.expected_time - t).abs() / t.max(1.0));
                }
            }
        }
        let pass = fix_err <= 1e-9 && time_err <= 1e-9;
        items.push(item(
            format!("clique({n})"),
            pass,
            &json!({ "max_fixation_abs_err": fix_err, "max_time_rel_err": time_err, "tolerance": 1e-9 }),
        ));
    }
    Ok(items)
}

fn cut_ratio(seed: u64) -> CliResult<Vec<Value>> {
    let graphs = [("cycle(8)", Graph::cycle(8)?), ("cycle(9)", Graph::cycle(9)?), ("clique(6)", Graph::clique(6, false)?)];
    let mut items = Vec::new();
    for (i, (name, g)) in graphs.iter().enumerate() {
        let mut rng = RngStream::new(seed, i as u64).rng();
        let mut all = true;
        for &a01 in &GRID {
            for &a10 in &GRID {
                all &= fitness_cut_invariance_check(g, &AcceptanceMatrix::new(a01, a10)?, 200, &mut rng)?;
            }
        }
        items.push(item(*name, all, &json!({ "subsets_per_matrix": 200, "tolerance": 1e-12 })));
    }
    Ok(items)
}

fn drift(trials: u64, seed: u64, eps: Option<f64>) -> CliResult<Vec<Value>> {
    let cases: Vec<(usize, usize, f64)> = match eps {
        Some(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(CliError::config(format!("--eps: {e} must lie in (0, 1]")));
            }
            vec![(100, 10, e), (50, 25, e), (200, 100, e)]
        }
        None => vec![(100, 10, 0.2), (50, 25, 0.5), (200, 100, 0.1)],
    };
    cases
        .into_iter()
        .map(|(n, k, e)| {
            let r = check_drift_bound(n, k, e, trials, None, seed)?;
            Ok(item(format!("n={n} k={k} eps={e}"), r.pass, &r))
        })
        .collect()
}

fn lazy_scaling(trials: u64, seed: u64) -> CliResult<Vec<Value>> {
    let cases = [("clique(10)", Graph::clique(10, false)?, 0.5), ("cycle(10)", Graph::cycle(10)?, 0.25)];
    let init = OpinionState::with_ones_prefix(10, 5)?;
    cases
        .iter()
        .map(|(name, g, alpha)| {
            let r = check_lazy_scaling(g, *alpha, &init, trials, seed, None)?;
            Ok(item(format!("{name} alpha={alpha}"), r.pass, &r))
        })
        .collect()
}

fn meeting(trials: u64, seed: u64) -> CliResult<Vec<Value>> {
    let graphs = [("clique(8)", Graph::clique(8, false)?), ("cycle(8)", Graph::cycle(8)?), ("star(8)", Graph::star(8)?)];
    let init = OpinionState::with_ones_prefix(8, 4)?;
    let mut items = Vec::new();
    for (name, g) in &graphs {
        let m = check_meeting_vs_hitting(g, 0.5, trials, seed, None)?;
        items.push(item(format!("{name} meeting"), m.pass, &m));
        let h = check_consensus_hitting_bound(g, 0.5, &init, trials * 5, seed, None)?;
        items.push(item(format!("{name} consensus"), h.pass, &h));
    }
    Ok(items)
}

pub fn run(suite: Suite, opts: CheckOptions) -> CliResult<CheckReport> {
    if opts.eps.is_some() && suite != Suite::Drift {
        return Err(CliError::config("--eps only applies to the drift suite"));
    }
    let trials = opts.trials.unwrap_or(suite.default_trials());
    let stochastic = suite.default_trials() > 0;
    if stochastic && trials < 2 {
        return Err(CliError::config("--trials: need at least 2"));
    }
    let items = match suite {
        Suite::Equivalence => equivalence()?,
        Suite::OracleAgreement => oracle_agreement()?,
        Suite::CutRatio => cut_ratio(opts.seed)?,
        Suite::Drift => drift(trials, opts.seed, opts.eps)?,
        Suite::LazyScaling => lazy_scaling(trials, opts.seed)?,
        Suite::Meeting => meeting(trials, opts.seed)?,
    };
    let pass = items.iter().all(|i| i["pass"] == Value::Bool(true));
    Ok(CheckReport { suite: suite.as_str(), pass, seed: opts.seed, trials: stochastic.then_some(trials), items })
}
