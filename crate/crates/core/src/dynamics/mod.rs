//! Opinion states, acceptance probabilities and the update dynamics.

mod step;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use step::{
    next_one_probability, run_clique_kernel_to_consensus, run_to_consensus, step, step_async,
    step_sync_clique_kernel, step_sync_m1, step_sync_m2, update_node, RunResult, SyncRule, UpdateResult,
};
pub(crate) use step::{run_unchecked, validate_run};

/// Off-diagonal acceptance probabilities for two opinions.
///
/// `alpha01` is the probability that a node holding 0 adopts a sampled 1;
/// `alpha10` the probability that a node holding 1 adopts a sampled 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceMatrix {
    alpha01: f64,
    alpha10: f64,
}

impl AcceptanceMatrix {
    pub fn new(alpha01: f64, alpha10: f64) -> Result<Self> {
        for (name, a) in [("alpha01", alpha01), ("alpha10", alpha10)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid(format!("{name} = {a} is not a probability")));
            }
        }
        Ok(AcceptanceMatrix { alpha01, alpha10 })
    }

    pub fn unbiased(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn alpha01(&self) -> f64 {
        self.alpha01
    }

    pub fn alpha10(&self) -> f64 {
        self.alpha10
    }

    /// Probability that a node holding `own` adopts `sampled`. Equal opinions
    /// never change anything, so the diagonal is reported as 1.
    #[inline]
    pub fn accept(&self, own: u8, sampled: u8) -> f64 {
        match (own, sampled) {
            (0, 1) => self.alpha01,
            (1, 0) => self.alpha10,
            _ => 1.0,
        }
    }

    pub fn is_unbiased(&self) -> bool {
        self.alpha01 == self.alpha10
    }

    /// The common acceptance probability of an unbiased matrix.
    pub fn alpha(&self) -> Option<f64> {
        self.is_unbiased().then_some(self.alpha01)
    }

    /// Relative fitness `alpha01 / alpha10`; undefined when `alpha10 = 0`.
    pub fn r(&self) -> Option<f64> {
        (self.alpha10 > 0.0).then(|| self.alpha01 / self.alpha10)
    }

    /// `alpha10 - alpha01`.
    pub fn eps(&self) -> f64 {
        self.alpha10 - self.alpha01
    }

    pub fn is_frozen(&self) -> bool {
        self.alpha01 == 0.0 && self.alpha10 == 0.0
    }

    /// Same dynamics with the opinion labels exchanged.
    pub fn swapped(&self) -> Self {
        AcceptanceMatrix { alpha01: self.alpha10, alpha10: self.alpha01 }
    }
}

/// Binary opinion vector with a maintained count of 1-holders.
///
/// Carries a second buffer so synchronous steps can read the time-`t`
/// snapshot while writing time `t + 1`.
#[derive(Debug, Clone)]
pub struct OpinionState {
    x: Vec<u8>,
    next: Vec<u8>,
    ones: usize,
}

impl PartialEq for OpinionState {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x
    }
}

impl Eq for OpinionState {}

impl OpinionState {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::invalid("opinion vector is empty"));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("opinion {b} is not binary")));
        }
        let ones = bits.iter().filter(|&&b| b == 1).count();
        Ok(OpinionState { x: bits.to_vec(), next: vec![0; bits.len()], ones })
    }

    /// Parses a `0`/`1` string such as `"0110"`.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(format!("invalid opinion character `{other}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bits(&bits)
    }

    /// Nodes `0..k` hold opinion 1, the rest opinion 0.
    pub fn with_ones_prefix(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::invalid(format!("k = {k} exceeds n = {n}")));
        }
        let bits: Vec<u8> = (0..n).map(|u| u8::from(u < k)).collect();
        Self::from_bits(&bits)
    }

    /// Exactly the listed nodes hold opinion 1.
    pub fn with_ones_at(n: usize, nodes: &[usize]) -> Result<Self> {
        let mut bits = vec![0u8; n];
        for &u in nodes {
            if u >= n {
                return Err(Error::invalid(format!("node {u} out of range for n = {n}")));
            }
            bits[u] = 1;
        }
        Self::from_bits(&bits)
    }

    /// Configuration encoded as an integer, bit `u` holding node `u`.
    pub fn from_config(n: usize, config: u64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::invalid(format!("n = {n} cannot be encoded in 64 bits")));
        }
        let bits: Vec<u8> = (0..n).map(|u| (config >> u & 1) as u8).collect();
        Self::from_bits(&bits)
    }

    pub fn to_config(&self) -> u64 {
        assert!(self.n() <= 64, "configuration too large for a u64");
        self.x.iter().enumerate().fold(0, |acc, (u, &b)| acc | u64::from(b) << u)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn get(&self, u: usize) -> u8 {
        self.x[u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, value: u8) {
        debug_assert!(value <= 1);
        let old = self.x[u];
        if old != value {
            self.x[u] = value;
            if value == 1 {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.x
    }

    pub fn ones_count(&self) -> usize {
        self.ones
    }

    pub fn fraction(&self) -> f64 {
        self.ones as f64 / self.n() as f64
    }

    /// The shared opinion when every node agrees.
    pub fn consensus(&self) -> Option<u8> {
        if self.ones == 0 {
            Some(0)
        } else if self.ones == self.n() {
            Some(1)
        } else {
            None
        }
    }

    /// Swaps in the buffered next state and recounts.
    fn commit_next(&mut self) {
        std::mem::swap(&mut self.x, &mut self.next);
        self.ones = self.x.iter().filter(|&&b| b == 1).count();
    }
}

impl fmt::Display for OpinionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.x {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// The generator behind every random stream.
pub type StreamRng = ChaCha8Rng;

/// Identifies one reproducible random stream: a master seed plus a stream
/// index (the trial number in Monte Carlo runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Async,
    SyncM1,
    SyncM2,
}

impl Schedule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Schedule::Async => "async",
            Schedule::SyncM1 => "sync-m1",
            Schedule::SyncM2 => "sync-m2",
        }
    }

    pub fn is_sync(&self) -> bool {
        !matches!(self, Schedule::Async)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "async" => Ok(Schedule::Async),
            "sync-m1" | "sync" => Ok(Schedule::SyncM1),
            "sync-m2" => Ok(Schedule::SyncM2),
            other => Err(Error::invalid(format!("unknown schedule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Fixed0,
    Fixed1,
    Censored,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Fixed0 => "fixed0",
            Outcome::Fixed1 => "fixed1",
            Outcome::Censored => "censored",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
