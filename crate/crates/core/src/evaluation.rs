//! Regret and safety measurement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::click_models::{BanditInstance, ItemId, Ranking};
use crate::error::{Error, Result};

/// True attractiveness order of all items; equal attractions are unordered.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueOrder {
    attraction: Vec<f64>,
    // number of items strictly more attractive than each item
    above: Vec<usize>,
}

impl TrueOrder {
    pub fn new(attraction: Vec<f64>) -> Self {
        let above = attraction
            .iter()
            .map(|&a| attraction.iter().filter(|&&b| b > a).count())
            .collect();
        TrueOrder { attraction, above }
    }

    pub fn from_instance(instance: &BanditInstance) -> Self {
        TrueOrder::new(instance.attraction().to_vec())
    }

    pub fn num_items(&self) -> usize {
        self.attraction.len()
    }

    /// Whether `a` is strictly more attractive than `b`.
    #[inline]
    pub fn better(&self, a: ItemId, b: ItemId) -> bool {
        self.attraction[a] > self.attraction[b]
    }
}

/// Number of incorrectly ordered pairs with at least one displayed item.
///
/// A pair `(i, j)` counts when `i` is strictly more attractive than `j`, `j`
/// is displayed, and `i` is either displayed below `j` or not displayed.
pub fn count_inversions(displayed: &Ranking, order: &TrueOrder) -> usize {
    let items = displayed.items();
    let mut count = 0;
    for (p, &j) in items.iter().enumerate() {
        let placed_above = items[..p].iter().filter(|&&i| order.better(i, j)).count();
        count += order.above[j] - placed_above;
    }
    count
}

/// Threshold rule for the safety constraint `V(shown) <= V(original) + slack`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyRule {
    /// slack = L - K/2
    #[default]
    AsWritten,
    /// slack = (L - K)/2
    HalfGap,
}

impl SafetyRule {
    pub fn slack(self, num_items: usize, display_size: usize) -> f64 {
        let (l, k) = (num_items as f64, display_size as f64);
        match self {
            SafetyRule::AsWritten => l - k / 2.0,
            SafetyRule::HalfGap => (l - k) / 2.0,
        }
    }

    pub fn is_safe(self, v_t: usize, v_0: usize, num_items: usize, display_size: usize) -> bool {
        v_t as f64 <= v_0 as f64 + self.slack(num_items, display_size)
    }
}

impl FromStr for SafetyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_written" => Ok(SafetyRule::AsWritten),
            "half_gap" => Ok(SafetyRule::HalfGap),
            other => Err(Error::input(format!("unknown safety rule `{other}`"))),
        }
    }
}

impl fmt::Display for SafetyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SafetyRule::AsWritten => "as_written",
            SafetyRule::HalfGap => "half_gap",
        })
    }
}

/// `v_t <= v_0 + L - K/2`, in real arithmetic.
pub fn is_safe(v_t: usize, v_0: usize, num_items: usize, display_size: usize) -> bool {
    SafetyRule::AsWritten.is_safe(v_t, v_0, num_items, display_size)
}

/// Expected-reward gap between the optimal ranking and `displayed`.
pub fn per_round_regret(instance: &BanditInstance, displayed: &Ranking) -> Result<f64> {
    let r = instance.expected_reward(displayed)?;
    Ok((instance.optimal_reward() - r).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cum_regret: f64,
    pub cum_violations: u64,
}

/// Checkpointed time series of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: String,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
}

impl RunResult {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Accumulates per-round regret and violations into a [`RunResult`].
#[derive(Debug, Clone)]
pub struct RunRecorder {
    result: RunResult,
    horizon: u64,
    stride: u64,
    last_t: u64,
    cum_regret: f64,
    cum_violations: u64,
}

impl RunRecorder {
    pub fn new(algorithm: impl Into<String>, seed: u64, horizon: u64, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::config("checkpoint_stride", "must be at least 1"));
        }
        let expected = (horizon / stride + 1) as usize;
        Ok(RunRecorder {
            result: RunResult {
                algorithm: algorithm.into(),
                seed,
                checkpoints: Vec::with_capacity(expected),
            },
            horizon,
            stride,
            last_t: 0,
            cum_regret: 0.0,
            cum_violations: 0,
        })
    }

    /// Adds round `t`; rounds must arrive as 1, 2, 3, ...
    pub fn record_round(&mut self, t: u64, regret: f64, violated: bool) -> Result<()> {
        if t != self.last_t + 1 {
            return Err(Error::Protocol(format!(
                "round {t} recorded after round {}",
                self.last_t
            )));
        }
        if t > self.horizon {
            return Err(Error::Protocol(format!(
                "round {t} beyond horizon {}",
                self.horizon
            )));
        }
        self.last_t = t;
        self.cum_regret += regret;
        self.cum_violations += violated as u64;
        if t.is_multiple_of(self.stride) || t == self.horizon {
            self.result.checkpoints.push(Checkpoint {
                t,
                cum_regret: self.cum_regret,
                cum_violations: self.cum_violations,
            });
        }
        Ok(())
    }

    pub fn cum_regret(&self) -> f64 {
        self.cum_regret
    }

    pub fn cum_violations(&self) -> u64 {
        self.cum_violations
    }

    pub fn finish(self) -> RunResult {
        self.result
    }
}
