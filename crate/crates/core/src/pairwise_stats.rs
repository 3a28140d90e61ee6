//! Pairwise click-difference statistics and the KL-UCB numerics built on them.
//!
//! For an ordered pair of items `(i, j)` shown at adjacent positions, a round
//! is informative when exactly one of the two is clicked. `s(i, j)` sums the
//! click differences over informative rounds and `n(i, j)` counts them.

use std::collections::HashMap;

use crate::click_models::{ClickVector, ItemId, Ranking};
use crate::error::{Error, Result};

/// Adjacent position pairs compared in a round of parity `parity`.
///
/// Positions are 0-based. With `parity = 0` the pairs start at the top
/// position, with `parity = 1` one position lower. The last pair may reach
/// position `k` (the hidden slot of a working ranking).
pub fn candidate_pairs(parity: usize, k: usize) -> impl Iterator<Item = (usize, usize)> {
    debug_assert!(parity < 2);
    let count = (k + 1).saturating_sub(parity) / 2;
    (0..count).map(move |m| (2 * m + parity, 2 * m + parity + 1))
}

/// Dense `L x L` matrices of click differences `s` and observation counts `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairStats {
    num_items: usize,
    s: Vec<i64>,
    n: Vec<u64>,
}

impl PairStats {
    pub fn new(num_items: usize) -> Self {
        PairStats {
            num_items,
            s: vec![0; num_items * num_items],
            n: vec![0; num_items * num_items],
        }
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn s(&self, i: ItemId, j: ItemId) -> i64 {
        self.s[i * self.num_items + j]
    }

    #[inline]
    pub fn n(&self, i: ItemId, j: ItemId) -> u64 {
        self.n[i * self.num_items + j]
    }

    /// Records one informative observation where `winner` was clicked and `loser` was not.
    pub fn record(&mut self, winner: ItemId, loser: ItemId) {
        let l = self.num_items;
        self.s[winner * l + loser] += 1;
        self.s[loser * l + winner] -= 1;
        self.n[winner * l + loser] += 1;
        self.n[loser * l + winner] += 1;
    }

    /// Folds one round of clicks on `working` into the statistics.
    ///
    /// `working` is the `K + 1` ranking whose first `K` items were displayed;
    /// clicks at the hidden position read as 0.
    pub fn update(&mut self, working: &Ranking, clicks: &ClickVector, parity: usize) -> Result<()> {
        let k = clicks.len();
        if working.len() != k + 1 {
            return Err(Error::input(format!(
                "working ranking has {} items but {} clicks were given (expected K+1 = {})",
                working.len(),
                k,
                k + 1
            )));
        }
        if let Some(&bad) = working.items().iter().find(|&&i| i >= self.num_items) {
            return Err(Error::input(format!(
                "item {} outside 1..={}",
                bad + 1,
                self.num_items
            )));
        }
        for (p, q) in candidate_pairs(parity, k) {
            let (cp, cq) = (clicks.get(p), clicks.get(q));
            match cp - cq {
                1 => self.record(working.at(p), working.at(q)),
                -1 => self.record(working.at(q), working.at(p)),
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks antisymmetry of `s`, symmetry of `n`, zero diagonals and `|s| <= n`.
    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.num_items {
            if self.s(i, i) != 0 || self.n(i, i) != 0 {
                return Err(Error::input(format!("nonzero diagonal at item {}", i + 1)));
            }
            for j in 0..self.num_items {
                if self.s(i, j) != -self.s(j, i) || self.n(i, j) != self.n(j, i) {
                    return Err(Error::input(format!(
                        "pair ({}, {}) breaks (anti)symmetry",
                        i + 1,
                        j + 1
                    )));
                }
                if self.s(i, j).unsigned_abs() > self.n(i, j) {
                    return Err(Error::input(format!(
                        "pair ({}, {}) has |s| > n",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Confidence test `s(i, j) > 2 sqrt(n(i, j) ln(1/delta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence {
    delta: f64,
    log_inv_delta: f64,
}

impl Confidence {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("delta", format!("{delta} is not in (0,1)")));
        }
        Ok(Confidence {
            delta,
            log_inv_delta: (1.0 / delta).ln(),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn radius(&self, n: u64) -> f64 {
        2.0 * (n as f64 * self.log_inv_delta).sqrt()
    }

    /// Whether `i` has been shown to beat `j` with high probability.
    #[inline]
    pub fn is_confidently_better(&self, stats: &PairStats, i: ItemId, j: ItemId) -> bool {
        stats.s(i, j) as f64 > self.radius(stats.n(i, j))
    }
}

/// Bernoulli KL divergence `kl(p, q)`, `+inf` when `q` is 0 or 1 and `p != q`.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::input(format!(
            "kl({p}, {q}) needs arguments in [0,1]"
        )));
    }
    Ok(kl_unchecked(p, q))
}

#[inline]
fn kl_unchecked(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        return f64::INFINITY;
    }
    let mut d = 0.0;
    if p > 0.0 {
        d += p * (p / q).ln();
    }
    if p < 1.0 {
        d += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    d
}

/// Exploration budget `ln t + 3 ln ln t`, clamped at 0 (and 0 for `t <= 1`).
pub fn exploration_budget(t: u64) -> f64 {
    if t <= 1 {
        return 0.0;
    }
    let lt = (t as f64).ln();
    (lt + 3.0 * lt.ln()).max(0.0)
}

const ROOT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 64;

/// KL-UCB index: the largest `mu` in `[mu_hat, 1]` with `n kl(mu_hat, mu) <= budget(t)`.
///
/// Equals 1 when `t = 0`, `n = 0` or `mu_hat = 1`. The result is a feasible
/// point within `1e-9` of the supremum.
pub fn klucb_index(mu_hat: f64, n: u64, t: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu_hat) {
        return Err(Error::input(format!("mu_hat = {mu_hat} outside [0,1]")));
    }
    Ok(klucb_unchecked(mu_hat, n, t))
}

fn klucb_unchecked(mu_hat: f64, n: u64, t: u64) -> f64 {
    if t == 0 || n == 0 || mu_hat >= 1.0 {
        return 1.0;
    }
    klucb_at_level(mu_hat, exploration_budget(t) / n as f64)
}

fn klucb_at_level(mu_hat: f64, level: f64) -> f64 {
    if level <= 0.0 {
        return mu_hat;
    }
    let hi = pinsker_bound(mu_hat, level);
    if kl_unchecked(mu_hat, hi) <= level {
        return hi;
    }
    solve_kl_level(mu_hat, level, hi)
}

/// Upper bound on the KL-UCB index from `kl(p, q) >= 2 (q - p)^2`.
#[inline]
fn pinsker_bound(mu_hat: f64, level: f64) -> f64 {
    (mu_hat + (level / 2.0).sqrt()).min(1.0)
}

/// Largest feasible `q` in `[p, hi]` with `kl(p, q) <= level`, given `kl(p, hi) > level`.
///
/// `q -> kl(p, q)` is convex and increasing on `[p, 1)`, so a Newton step
/// from the infeasible end never undershoots the root and a secant step
/// never overshoots it. Every probe only ever narrows the bracket
/// `[lo, hi]`; a bisection step is added whenever a round fails to halve it.
fn solve_kl_level(p: f64, level: f64, mut hi: f64) -> f64 {
    let g = |q: f64| kl_unchecked(p, q) - level;
    let mut lo = p;
    let mut g_lo = -level;
    let mut g_hi = g(hi);
    for _ in 0..MAX_ITERS {
        let width = hi - lo;
        if width <= ROOT_TOL {
            break;
        }
        if g_hi.is_finite() {
            let slope = (hi - p) / (hi * (1.0 - hi));
            let newton = hi - g_hi / slope;
            let secant = lo - g_lo * width / (g_hi - g_lo);
            for q in [newton, secant] {
                if q > lo && q < hi {
                    let v = g(q);
                    if v <= 0.0 {
                        lo = q;
                        g_lo = v;
                    } else {
                        hi = q;
                        g_hi = v;
                    }
                }
            }
        }
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            let v = g(mid);
            if v <= 0.0 {
                lo = mid;
                g_lo = v;
            } else {
                hi = mid;
                g_hi = v;
            }
        }
    }
    lo
}

/// Precomputed exploration level for one leader count.
///
/// Used to compare optimistic indices of many pairs in the same round
/// without solving for every one of them.
#[derive(Debug, Clone, Copy)]
pub struct KlUcbRound {
    leader_count: u64,
    budget: f64,
}

impl KlUcbRound {
    pub fn new(leader_count: u64) -> Self {
        KlUcbRound {
            leader_count,
            budget: exploration_budget(leader_count),
        }
    }

    /// KL-UCB index of the rescaled statistic of `(s, n)`; same as [`klucb_index`].
    pub fn upper(&self, s: i64, n: u64) -> f64 {
        let mu = rescaled_mean(s, n);
        if n == 0 || self.leader_count == 0 || mu >= 1.0 {
            return 1.0;
        }
        klucb_at_level(mu, self.budget / n as f64)
    }

    /// Cheap upper bound on [`upper`](Self::upper) that never falls below the computed value.
    pub fn upper_bound(&self, s: i64, n: u64) -> f64 {
        if n == 0 || self.leader_count == 0 {
            return 1.0;
        }
        let mu = rescaled_mean(s, n);
        if mu >= 1.0 {
            return 1.0;
        }
        let level = self.budget / n as f64;
        if level <= 0.0 {
            return mu;
        }
        pinsker_bound(mu, level)
    }

    /// Whether the index of `(s, n)` is at least `x`, decided with one KL evaluation.
    pub fn reaches(&self, s: i64, n: u64, x: f64) -> bool {
        if n == 0 || self.leader_count == 0 {
            return true;
        }
        let mu = rescaled_mean(s, n);
        if mu >= x || mu >= 1.0 {
            return true;
        }
        if x >= 1.0 {
            return false;
        }
        n as f64 * kl_unchecked(mu, x) <= self.budget
    }
}

#[inline]
fn rescaled_mean(s: i64, n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    ((1.0 + s as f64 / n as f64) / 2.0).clamp(0.0, 1.0)
}

/// Optimistic estimate in `[-1, 1]` of how much `i` out-clicks `j`.
///
/// Maps the empirical click difference `s/n` to `[0, 1]`, applies the KL-UCB
/// index with `leader_count` as the time argument, and maps back.
pub fn optimistic_pair_index(stats: &PairStats, i: ItemId, j: ItemId, leader_count: u64) -> f64 {
    2.0 * KlUcbRound::new(leader_count).upper(stats.s(i, j), stats.n(i, j)) - 1.0
}

/// Number of rounds each K-item ranking has served as leader.
#[derive(Debug, Clone, Default)]
pub struct LeaderCounts {
    counts: HashMap<Vec<ItemId>, u64>,
    total: u64,
}

impl LeaderCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one more round led by `leader` and returns its updated count.
    pub fn enter(&mut self, leader: &Ranking) -> u64 {
        self.total += 1;
        if let Some(c) = self.counts.get_mut(leader.items()) {
            *c += 1;
            return *c;
        }
        self.counts.insert(leader.items().to_vec(), 1);
        1
    }

    pub fn get(&self, leader: &Ranking) -> u64 {
        self.counts.get(leader.items()).copied().unwrap_or(0)
    }

    /// Rounds counted so far; equals the sum over all leaders.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct_leaders(&self) -> usize {
        self.counts.len()
    }
}
