//! Online re-ranking algorithms behind one propose/feedback interface.
//!
//! [`SafeRanker`] implements the bubble-style safe re-ranker that keeps a
//! leader ranking, fills a hidden `K + 1`-th slot with one unranked item, and
//! only changes the leader once a pairwise comparison is statistically
//! settled. The two unranked-item selectors give KL-UCB-BR and the
//! BubbleRank extension with random exploration.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::click_models::{ClickVector, ItemId, Ranking};
use crate::error::{Error, Result};
use crate::pairwise_stats::{candidate_pairs, Confidence, KlUcbRound, LeaderCounts, PairStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankerId {
    #[serde(rename = "klucb-br")]
    KlUcbBr,
    #[serde(rename = "bubblerank-random")]
    BubbleRankRandom,
    #[serde(rename = "original")]
    Original,
    #[serde(rename = "uniform-random")]
    UniformRandom,
}

impl RankerId {
    pub const ALL: [RankerId; 4] = [
        RankerId::KlUcbBr,
        RankerId::BubbleRankRandom,
        RankerId::Original,
        RankerId::UniformRandom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankerId::KlUcbBr => "klucb-br",
            RankerId::BubbleRankRandom => "bubblerank-random",
            RankerId::Original => "original",
            RankerId::UniformRandom => "uniform-random",
        }
    }

    /// Whether the ranker is designed to respect the safety constraint.
    pub fn is_safe(self) -> bool {
        matches!(
            self,
            RankerId::KlUcbBr | RankerId::BubbleRankRandom | RankerId::Original
        )
    }
}

impl fmt::Display for RankerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankerId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::config("algorithms", format!("unknown ranker id `{s}`")))
    }
}

/// Problem description handed to a ranker at reset.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerSetup {
    pub num_items: usize,
    pub display_size: usize,
    pub original: Ranking,
    pub delta: f64,
}

impl RankerSetup {
    fn validate(&self) -> Result<()> {
        if self.display_size == 0 || self.display_size > self.num_items {
            return Err(Error::input(format!(
                "need 0 < K <= L, got K={}, L={}",
                self.display_size, self.num_items
            )));
        }
        if self.original.len() != self.display_size {
            return Err(Error::input("original ranking must have K items"));
        }
        if self.original.items().iter().any(|&i| i >= self.num_items) {
            return Err(Error::input("original ranking refers to unknown items"));
        }
        Ok(())
    }
}

/// A ranking policy driven round by round.
///
/// Each round calls [`propose`](Ranker::propose) exactly once and then
/// [`feedback`](Ranker::feedback) with the clicks on the proposed list.
pub trait Ranker: Send {
    fn id(&self) -> RankerId;

    /// Clears all learned state and reseeds the internal random stream.
    fn reset(&mut self, setup: &RankerSetup, seed: u64) -> Result<()>;

    /// The `K` items to display in round `t`.
    fn propose(&mut self, t: u64) -> Result<Ranking>;

    fn feedback(&mut self, t: u64, clicks: &ClickVector) -> Result<()>;
}

pub fn build_ranker(id: RankerId, setup: &RankerSetup, seed: u64) -> Result<Box<dyn Ranker>> {
    Ok(match id {
        RankerId::KlUcbBr => Box::new(SafeRanker::new(setup, UnrankedSelector::KlUcb, seed)?),
        RankerId::BubbleRankRandom => Box::new(SafeRanker::new(
            setup,
            UnrankedSelector::RandomUnproven,
            seed,
        )?),
        RankerId::Original => Box::new(OriginalRanker::new(setup)?),
        RankerId::UniformRandom => Box::new(UniformRandomRanker::new(setup, seed)?),
    })
}

/// Tracks the propose/feedback alternation.
#[derive(Debug, Clone, Default)]
struct RoundGuard {
    pending: Option<u64>,
}

impl RoundGuard {
    fn open(&mut self, t: u64) -> Result<()> {
        if let Some(p) = self.pending {
            return Err(Error::Protocol(format!(
                "propose({t}) called while round {p} awaits feedback"
            )));
        }
        self.pending = Some(t);
        Ok(())
    }

    fn close(&mut self, t: u64) -> Result<()> {
        match self.pending {
            Some(p) if p == t => {
                self.pending = None;
                Ok(())
            }
            Some(p) => Err(Error::Protocol(format!(
                "feedback for round {t} but round {p} was proposed"
            ))),
            None => Err(Error::Protocol(format!("feedback({t}) without propose"))),
        }
    }
}

fn check_clicks(clicks: &ClickVector, k: usize) -> Result<()> {
    if clicks.len() != k {
        return Err(Error::input(format!(
            "got {} clicks for a display of {k} items",
            clicks.len()
        )));
    }
    Ok(())
}

/// Uniform choice that draws nothing from `rng` when there is one option.
/// How the hidden `K + 1`-th slot is filled each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnrankedSelector {
    /// Largest optimistic index against the leader's bottom item.
    KlUcb,
    /// Uniform among items not yet proven worse than the leader's bottom item.
    RandomUnproven,
}

fn unranked_items(leader: &Ranking, num_items: usize) -> impl Iterator<Item = ItemId> + '_ {
    (0..num_items).filter(move |&i| !leader.contains(i))
}

/// Uniform pick among the items yielded by `items`, which holds `count` of them.
fn pick_nth_uniform<R: Rng + ?Sized>(
    mut items: impl Iterator<Item = ItemId>,
    count: usize,
    rng: &mut R,
) -> ItemId {
    let idx = match count {
        0 => panic!("uniform pick from an empty set"),
        1 => 0,
        n => rng.random_range(0..n),
    };
    items.nth(idx).expect("count matches the iterator")
}

/// Unranked item with the largest optimistic index against `leader`'s bottom item.
/// Ties are broken uniformly at random.
///
/// Items sharing the same `(s, n)` against the bottom item share an index and
/// are scored once. Groups are visited by decreasing cheap upper bound, and a
/// group is only solved for exactly when it can still reach the best index
/// found so far.
pub fn select_unranked_klucb<R: Rng + ?Sized>(
    stats: &PairStats,
    leader: &Ranking,
    leader_count: u64,
    rng: &mut R,
) -> ItemId {
    let bottom = leader.at(leader.len() - 1);
    let round = KlUcbRound::new(leader_count);

    struct Group {
        s: i64,
        n: u64,
        bound: f64,
        size: usize,
        winning: bool,
    }
    let mut groups: Vec<Group> = Vec::with_capacity(8);
    for j in unranked_items(leader, stats.num_items()) {
        let (s, n) = (stats.s(j, bottom), stats.n(j, bottom));
        match groups.iter_mut().find(|g| g.s == s && g.n == n) {
            Some(g) => g.size += 1,
            None => groups.push(Group {
                s,
                n,
                bound: round.upper_bound(s, n),
                size: 1,
                winning: false,
            }),
        }
    }
    groups.sort_by(|a, b| b.bound.total_cmp(&a.bound));

    let mut best = f64::NEG_INFINITY;
    let mut tied = 0;
    for idx in 0..groups.len() {
        let g = &groups[idx];
        if g.bound < best || (tied > 0 && !round.reaches(g.s, g.n, best)) {
            continue;
        }
        let value = round.upper(g.s, g.n);
        if value > best {
            best = value;
            tied = 0;
            for h in &mut groups[..idx] {
                h.winning = false;
            }
        }
        if value == best {
            tied += groups[idx].size;
            groups[idx].winning = true;
        }
    }
    let winners = unranked_items(leader, stats.num_items()).filter(|&j| {
        let (s, n) = (stats.s(j, bottom), stats.n(j, bottom));
        groups.iter().any(|g| g.winning && g.s == s && g.n == n)
    });
    pick_nth_uniform(winners, tied, rng)
}

/// Uniform unranked item among those not yet proven inferior to `leader`'s
/// bottom item, or among all unranked items when every one has been.
pub fn select_unranked_random<R: Rng + ?Sized>(
    stats: &PairStats,
    leader: &Ranking,
    confidence: &Confidence,
    rng: &mut R,
) -> ItemId {
    let bottom = leader.at(leader.len() - 1);
    let open = |j: &ItemId| !confidence.is_confidently_better(stats, bottom, *j);
    let num_open = unranked_items(leader, stats.num_items())
        .filter(open)
        .count();
    if num_open == 0 {
        let all = stats.num_items() - leader.len();
        pick_nth_uniform(unranked_items(leader, stats.num_items()), all, rng)
    } else {
        pick_nth_uniform(
            unranked_items(leader, stats.num_items()).filter(open),
            num_open,
            rng,
        )
    }
}

/// Safe re-ranker with a pluggable unranked-item selector.
#[derive(Debug, Clone)]
pub struct SafeRanker {
    selector: UnrankedSelector,
    display_size: usize,
    confidence: Confidence,
    leader: Ranking,
    // temporary ranking: leader plus the explored item
    working: Ranking,
    // working ranking after the randomized exchanges; first K are shown
    displayed: Ranking,
    parity: usize,
    stats: PairStats,
    leader_counts: LeaderCounts,
    rng: ChaCha8Rng,
    guard: RoundGuard,
}

impl SafeRanker {
    pub fn new(setup: &RankerSetup, selector: UnrankedSelector, seed: u64) -> Result<Self> {
        setup.validate()?;
        if setup.display_size >= setup.num_items {
            return Err(Error::input(
                "safe rankers need at least one unranked item (K < L)",
            ));
        }
        Ok(SafeRanker {
            selector,
            display_size: setup.display_size,
            confidence: Confidence::new(setup.delta)?,
            leader: setup.original.clone(),
            working: setup.original.clone(),
            displayed: setup.original.clone(),
            parity: 0,
            stats: PairStats::new(setup.num_items),
            leader_counts: LeaderCounts::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            guard: RoundGuard::default(),
        })
    }

    pub fn selector(&self) -> UnrankedSelector {
        self.selector
    }

    pub fn leader(&self) -> &Ranking {
        &self.leader
    }

    /// Leader plus the explored item, after this round's settled exchanges.
    pub fn working(&self) -> &Ranking {
        &self.working
    }

    /// The `K + 1` list of the last proposal; its first `K` items were shown.
    pub fn displayed_working(&self) -> &Ranking {
        &self.displayed
    }

    pub fn stats(&self) -> &PairStats {
        &self.stats
    }

    pub fn leader_counts(&self) -> &LeaderCounts {
        &self.leader_counts
    }

    #[cfg(test)]
    pub(crate) fn stats_mut(&mut self) -> &mut PairStats {
        &mut self.stats
    }

    fn select(&mut self, leader_count: u64) -> ItemId {
        match self.selector {
            UnrankedSelector::KlUcb => {
                select_unranked_klucb(&self.stats, &self.leader, leader_count, &mut self.rng)
            }
            UnrankedSelector::RandomUnproven => {
                select_unranked_random(&self.stats, &self.leader, &self.confidence, &mut self.rng)
            }
        }
    }
}

impl Ranker for SafeRanker {
    fn id(&self) -> RankerId {
        match self.selector {
            UnrankedSelector::KlUcb => RankerId::KlUcbBr,
            UnrankedSelector::RandomUnproven => RankerId::BubbleRankRandom,
        }
    }

    fn reset(&mut self, setup: &RankerSetup, seed: u64) -> Result<()> {
        *self = SafeRanker::new(setup, self.selector, seed)?;
        Ok(())
    }

    fn propose(&mut self, t: u64) -> Result<Ranking> {
        self.guard.open(t)?;
        self.parity = (t % 2) as usize;
        let leader_count = self.leader_counts.enter(&self.leader);

        let explored = self.select(leader_count);
        let k = self.display_size;
        self.working.assign_prefix(&self.leader, k);
        self.working.push(explored);

        self.displayed.assign_prefix(&self.working, k + 1);
        for (p, q) in candidate_pairs(self.parity, k) {
            let (i, j) = (self.displayed.at(p), self.displayed.at(q));
            if !self.confidence.is_confidently_better(&self.stats, i, j)
                && self.rng.random_bool(0.5)
            {
                self.displayed.swap(p, q);
            }
        }
        Ok(self.displayed.prefix(k))
    }

    fn feedback(&mut self, t: u64, clicks: &ClickVector) -> Result<()> {
        check_clicks(clicks, self.display_size)?;
        self.guard.close(t)?;
        self.stats.update(&self.displayed, clicks, self.parity)?;

        // One bubble pass: a lower item moves up once it provably beats the one above.
        for k in 0..self.display_size {
            let (i, j) = (self.working.at(k), self.working.at(k + 1));
            if self.confidence.is_confidently_better(&self.stats, j, i) {
                self.working.swap(k, k + 1);
            }
        }
        self.leader.assign_prefix(&self.working, self.display_size);
        debug_assert_eq!(self.leader_counts.total(), t);
        Ok(())
    }
}

/// Always shows the original ranking.
#[derive(Debug, Clone)]
pub struct OriginalRanker {
    original: Ranking,
    guard: RoundGuard,
}

impl OriginalRanker {
    pub fn new(setup: &RankerSetup) -> Result<Self> {
        setup.validate()?;
        Ok(OriginalRanker {
            original: setup.original.clone(),
            guard: RoundGuard::default(),
        })
    }
}

impl Ranker for OriginalRanker {
    fn id(&self) -> RankerId {
        RankerId::Original
    }

    fn reset(&mut self, setup: &RankerSetup, _seed: u64) -> Result<()> {
        *self = OriginalRanker::new(setup)?;
        Ok(())
    }

    fn propose(&mut self, t: u64) -> Result<Ranking> {
        self.guard.open(t)?;
        Ok(self.original.clone())
    }

    fn feedback(&mut self, t: u64, clicks: &ClickVector) -> Result<()> {
        check_clicks(clicks, self.original.len())?;
        self.guard.close(t)
    }
}

/// Shows a fresh uniformly random K-permutation every round, ignoring feedback.
#[derive(Debug, Clone)]
pub struct UniformRandomRanker {
    items: Vec<ItemId>,
    display_size: usize,
    rng: ChaCha8Rng,
    guard: RoundGuard,
}

impl UniformRandomRanker {
    pub fn new(setup: &RankerSetup, seed: u64) -> Result<Self> {
        setup.validate()?;
        Ok(UniformRandomRanker {
            items: (0..setup.num_items).collect(),
            display_size: setup.display_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
            guard: RoundGuard::default(),
        })
    }
}

impl Ranker for UniformRandomRanker {
    fn id(&self) -> RankerId {
        RankerId::UniformRandom
    }

    fn reset(&mut self, setup: &RankerSetup, seed: u64) -> Result<()> {
        *self = UniformRandomRanker::new(setup, seed)?;
        Ok(())
    }

    fn propose(&mut self, t: u64) -> Result<Ranking> {
        self.guard.open(t)?;
        let (chosen, _) = self.items.partial_shuffle(&mut self.rng, self.display_size);
        Ranking::new(chosen.to_vec())
    }

    fn feedback(&mut self, t: u64, clicks: &ClickVector) -> Result<()> {
        check_clicks(clicks, self.display_size)?;
        self.guard.close(t)
    }
}
