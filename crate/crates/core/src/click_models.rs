//! Stochastic click bandit environments.
//!
//! An instance holds the ground truth that a ranker never sees: per-item
//! attraction probabilities, the click model (position-based or cascade),
//! and the production ranking the learner starts from. Item ids are 0-based
//! in memory; instance files use 1-based ids.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 0-based item identifier.
pub type ItemId = usize;

/// Ordered sequence of distinct items.
///
/// Display rankings hold `K` items; the safe rankers keep a working ranking
/// of `K + 1` items whose last slot is never shown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<ItemId>);

impl Ranking {
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        for (a, &x) in items.iter().enumerate() {
            if items[..a].contains(&x) {
                return Err(Error::input(format!("item {x} appears twice in ranking")));
            }
        }
        Ok(Ranking(items))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    /// Item at 0-based position `k`.
    pub fn at(&self, k: usize) -> ItemId {
        self.0[k]
    }

    /// 0-based position of `item`, `None` when the item is not ranked.
    pub fn position(&self, item: ItemId) -> Option<usize> {
        self.0.iter().position(|&x| x == item)
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.contains(&item)
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    /// The first `k` items.
    pub fn prefix(&self, k: usize) -> Ranking {
        Ranking(self.0[..k].to_vec())
    }

    /// Replaces the contents with the first `k` items of `other`, reusing storage.
    pub(crate) fn assign_prefix(&mut self, other: &Ranking, k: usize) {
        self.0.clear();
        self.0.extend_from_slice(&other.0[..k]);
    }

    pub(crate) fn push(&mut self, item: ItemId) {
        debug_assert!(!self.contains(item));
        self.0.push(item);
    }

    pub fn into_inner(self) -> Vec<ItemId> {
        self.0
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, item) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", item + 1)?;
        }
        write!(f, ")")
    }
}

/// Binary clicks on the `K` displayed positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickVector(Vec<bool>);

impl ClickVector {
    pub fn new(clicks: Vec<bool>) -> Self {
        ClickVector(clicks)
    }

    pub fn zeros(k: usize) -> Self {
        ClickVector(vec![false; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Click indicator at 0-based position `k`; positions past the display read as 0.
    pub fn get(&self, k: usize) -> i64 {
        self.0.get(k).map_or(0, |&c| c as i64)
    }

    pub fn total(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pbm,
    Cm,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbm" => Ok(ModelKind::Pbm),
            "cm" => Ok(ModelKind::Cm),
            other => Err(Error::input(format!("unknown click model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Pbm => "pbm",
            ModelKind::Cm => "cm",
        })
    }
}

/// How users examine a displayed list.
#[derive(Debug, Clone, PartialEq)]
pub enum ClickModel {
    /// Position `k` is examined independently with probability `examination[k]`.
    PositionBased { examination: Vec<f64> },
    /// Users scan top-down and leave after the first click.
    Cascade,
}

impl ClickModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClickModel::PositionBased { .. } => ModelKind::Pbm,
            ClickModel::Cascade => ModelKind::Cm,
        }
    }
}

/// Ground truth of one stochastic click bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    attraction: Vec<f64>,
    display_size: usize,
    model: ClickModel,
    original: Ranking,
}

fn check_probability(field: &str, idx: usize, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input(format!(
            "{field}[{idx}] = {p} is not a probability in [0,1]"
        )));
    }
    Ok(())
}

impl BanditInstance {
    pub fn new(
        attraction: Vec<f64>,
        display_size: usize,
        model: ClickModel,
        original: Ranking,
    ) -> Result<Self> {
        let num_items = attraction.len();
        if display_size == 0 {
            return Err(Error::input("display size K must be positive"));
        }
        if display_size >= num_items {
            return Err(Error::input(format!(
                "display size K={display_size} must be smaller than the item count L={num_items}"
            )));
        }
        for (i, &a) in attraction.iter().enumerate() {
            check_probability("alpha", i, a)?;
        }
        if let ClickModel::PositionBased { examination } = &model {
            if examination.len() != display_size {
                return Err(Error::input(format!(
                    "chi has {} entries, expected K={display_size}",
                    examination.len()
                )));
            }
            for (k, &x) in examination.iter().enumerate() {
                check_probability("chi", k, x)?;
            }
            if examination.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::input("chi must be nonincreasing in position"));
            }
        }
        if original.len() != display_size {
            return Err(Error::input(format!(
                "original ranking has {} items, expected K={display_size}",
                original.len()
            )));
        }
        if let Some(&bad) = original.items().iter().find(|&&i| i >= num_items) {
            return Err(Error::input(format!(
                "original ranking item {} outside 1..={num_items}",
                bad + 1
            )));
        }
        Ok(BanditInstance {
            attraction,
            display_size,
            model,
            original,
        })
    }

    pub fn num_items(&self) -> usize {
        self.attraction.len()
    }

    pub fn display_size(&self) -> usize {
        self.display_size
    }

    pub fn attraction(&self) -> &[f64] {
        &self.attraction
    }

    pub fn model(&self) -> &ClickModel {
        &self.model
    }

    pub fn original_ranking(&self) -> &Ranking {
        &self.original
    }

    fn check_display(&self, displayed: &Ranking) -> Result<()> {
        if displayed.len() != self.display_size {
            return Err(Error::input(format!(
                "displayed ranking has {} items, expected K={}",
                displayed.len(),
                self.display_size
            )));
        }
        if let Some(&bad) = displayed.items().iter().find(|&&i| i >= self.num_items()) {
            return Err(Error::input(format!(
                "displayed item {} outside 1..={}",
                bad + 1,
                self.num_items()
            )));
        }
        Ok(())
    }

    /// Draws one user's clicks on `displayed`.
    ///
    /// Every call consumes the same number of draws from `rng` (one attraction
    /// draw per item, plus one examination draw per position under PBM), so two
    /// rankers fed the same environment stream see aligned randomness.
    pub fn sample_clicks<R: Rng + ?Sized>(
        &self,
        displayed: &Ranking,
        rng: &mut R,
    ) -> Result<ClickVector> {
        self.check_display(displayed)?;
        let attractive: Vec<bool> = self
            .attraction
            .iter()
            .map(|&a| rng.random::<f64>() < a)
            .collect();
        let clicks = match &self.model {
            ClickModel::PositionBased { examination } => examination
                .iter()
                .zip(displayed.items())
                .map(|(&x, &item)| {
                    let examined = rng.random::<f64>() < x;
                    examined && attractive[item]
                })
                .collect(),
            ClickModel::Cascade => {
                let mut out = vec![false; self.display_size];
                for (k, &item) in displayed.items().iter().enumerate() {
                    if attractive[item] {
                        out[k] = true;
                        break;
                    }
                }
                out
            }
        };
        Ok(ClickVector(clicks))
    }

    /// Expected number of clicks on `displayed`.
    pub fn expected_reward(&self, displayed: &Ranking) -> Result<f64> {
        self.check_display(displayed)?;
        Ok(self.reward_unchecked(displayed.items()))
    }

    pub(crate) fn reward_unchecked(&self, items: &[ItemId]) -> f64 {
        match &self.model {
            ClickModel::PositionBased { examination } => examination
                .iter()
                .zip(items)
                .map(|(&x, &item)| x * self.attraction[item])
                .sum(),
            ClickModel::Cascade => {
                let mut none_yet = 1.0;
                let mut total = 0.0;
                for &item in items {
                    let a = self.attraction[item];
                    total += a * none_yet;
                    none_yet *= 1.0 - a;
                }
                total
            }
        }
    }

    /// Items sorted by attraction descending, ties broken by smaller id.
    pub fn items_by_attraction(&self) -> Vec<ItemId> {
        let mut order: Vec<ItemId> = (0..self.num_items()).collect();
        order.sort_by(|&a, &b| {
            self.attraction[b]
                .total_cmp(&self.attraction[a])
                .then(a.cmp(&b))
        });
        order
    }

    /// The K most attractive items in descending order.
    pub fn optimal_ranking(&self) -> Ranking {
        let mut order = self.items_by_attraction();
        order.truncate(self.display_size);
        Ranking(order)
    }

    /// Highest achievable expected reward `r*`.
    pub fn optimal_reward(&self) -> f64 {
        self.reward_unchecked(self.optimal_ranking().items())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("instance JSON: {e}")))?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: InstanceFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        file.try_into()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }
}

/// On-disk instance schema. Item ids are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub model: ModelKind,
    #[serde(rename = "L")]
    pub num_items: usize,
    #[serde(rename = "K")]
    pub display_size: usize,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Vec<f64>>,
    pub original_ranking: Vec<usize>,
}

impl TryFrom<InstanceFile> for BanditInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.alpha.len() != file.num_items {
            return Err(Error::input(format!(
                "alpha has {} entries but L={}",
                file.alpha.len(),
                file.num_items
            )));
        }
        let model = match (file.model, file.chi) {
            (ModelKind::Pbm, Some(chi)) => ClickModel::PositionBased { examination: chi },
            (ModelKind::Pbm, None) => return Err(Error::input("pbm instance requires `chi`")),
            (ModelKind::Cm, None) => ClickModel::Cascade,
            (ModelKind::Cm, Some(_)) => {
                return Err(Error::input("cm instance must not carry `chi`"))
            }
        };
        let mut items = Vec::with_capacity(file.original_ranking.len());
        for id in file.original_ranking {
            if id == 0 || id > file.num_items {
                return Err(Error::input(format!(
                    "original ranking item {id} outside 1..={}",
                    file.num_items
                )));
            }
            items.push(id - 1);
        }
        BanditInstance::new(file.alpha, file.display_size, model, Ranking::new(items)?)
    }
}

impl From<&BanditInstance> for InstanceFile {
    fn from(inst: &BanditInstance) -> Self {
        let chi = match &inst.model {
            ClickModel::PositionBased { examination } => Some(examination.clone()),
            ClickModel::Cascade => None,
        };
        InstanceFile {
            model: inst.model.kind(),
            num_items: inst.num_items(),
            display_size: inst.display_size,
            alpha: inst.attraction.clone(),
            chi,
            original_ranking: inst.original.items().iter().map(|i| i + 1).collect(),
        }
    }
}

/// Synthetic instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The original ranking already is the optimal ranking.
    OptimalOriginal,
    /// At least one of the K most attractive items is left out of the original ranking.
    MissingTop,
    /// Random attractions and a random original K-subset.
    Random,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal_original" => Ok(Scenario::OptimalOriginal),
            "missing_top" => Ok(Scenario::MissingTop),
            "random" => Ok(Scenario::Random),
            other => Err(Error::input(format!("unknown scenario `{other}`"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::OptimalOriginal => "optimal_original",
            Scenario::MissingTop => "missing_top",
            Scenario::Random => "random",
        })
    }
}

const ALPHA_RANGE: (f64, f64) = (0.05, 0.9);

/// Builds a synthetic instance; deterministic in all arguments.
///
/// Attractions are drawn uniformly from `[0.05, 0.9]` and redrawn until all
/// values are distinct. PBM examination starts at 1 and decreases through
/// sorted uniform draws from `[0.2, 1]`.
pub fn generate_instance(
    scenario: Scenario,
    model: ModelKind,
    num_items: usize,
    display_size: usize,
    seed: u64,
) -> Result<BanditInstance> {
    if display_size == 0 || display_size >= num_items {
        return Err(Error::input(format!(
            "need 0 < K < L, got K={display_size}, L={num_items}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attraction = loop {
        let alpha: Vec<f64> = (0..num_items)
            .map(|_| rng.random_range(ALPHA_RANGE.0..=ALPHA_RANGE.1))
            .collect();
        let mut sorted = alpha.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] < w[1]) {
            break alpha;
        }
    };
    let click_model = match model {
        ModelKind::Pbm => {
            let mut chi: Vec<f64> = (1..display_size)
                .map(|_| rng.random_range(0.2..=1.0))
                .collect();
            chi.sort_by(|a, b| b.total_cmp(a));
            chi.insert(0, 1.0);
            ClickModel::PositionBased { examination: chi }
        }
        ModelKind::Cm => ClickModel::Cascade,
    };

    let mut by_attraction: Vec<ItemId> = (0..num_items).collect();
    by_attraction.sort_by(|&a, &b| attraction[b].total_cmp(&attraction[a]));
    let (top, rest) = by_attraction.split_at(display_size);

    let original = match scenario {
        Scenario::OptimalOriginal => top.to_vec(),
        Scenario::Random => {
            let mut items: Vec<ItemId> = (0..num_items).collect();
            items.shuffle(&mut rng);
            items.truncate(display_size);
            items
        }
        Scenario::MissingTop => {
            // Drop `missing` of the top items and fill with lower-ranked ones.
            let max_missing = display_size.min(num_items - display_size);
            let missing = rng.random_range(1..=max_missing);
            let mut kept = top.to_vec();
            kept.shuffle(&mut rng);
            kept.truncate(display_size - missing);
            let mut fill = rest.to_vec();
            fill.shuffle(&mut rng);
            kept.extend_from_slice(&fill[..missing]);
            kept.shuffle(&mut rng);
            kept
        }
    };
    BanditInstance::new(attraction, display_size, click_model, Ranking(original))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pbm(alpha: Vec<f64>, chi: Vec<f64>, original: Vec<ItemId>) -> BanditInstance {
        let k = chi.len();
        BanditInstance::new(
            alpha,
            k,
            ClickModel::PositionBased { examination: chi },
            Ranking::new(original).unwrap(),
        )
        .unwrap()
    }

    fn cm(alpha: Vec<f64>, original: Vec<ItemId>) -> BanditInstance {
        let k = original.len();
        BanditInstance::new(
            alpha,
            k,
            ClickModel::Cascade,
            Ranking::new(original).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_click_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let all_ones = pbm(vec![1.0; 4], vec![1.0; 3], vec![0, 1, 2]);
        let c = all_ones
            .sample_clicks(&Ranking::new(vec![2, 0, 3]).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(c.as_slice(), &[true, true, true]);

        let no_attraction = pbm(vec![0.0; 4], vec![1.0; 3], vec![0, 1, 2]);
        let c = no_attraction
            .sample_clicks(&Ranking::new(vec![2, 0, 3]).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(c.total(), 0);
        let c = cm(vec![0.0; 4], vec![0, 1, 2])
            .sample_clicks(&Ranking::new(vec![0, 1, 2]).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(c.total(), 0);

        let cascade = cm(vec![1.0; 4], vec![0, 1, 2]);
        let c = cascade
            .sample_clicks(&Ranking::new(vec![3, 1, 0]).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(c.as_slice(), &[true, false, false]);
    }

    #[test]
    fn clicks_past_display_read_zero() {
        let c = ClickVector::new(vec![true, true]);
        assert_eq!(c.get(1), 1);
        assert_eq!(c.get(2), 0);
        assert_eq!(c.get(100), 0);
    }

    #[test]
    fn rejects_bad_displays() {
        let inst = cm(vec![0.5; 4], vec![0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(inst
            .sample_clicks(&Ranking::new(vec![0]).unwrap(), &mut rng)
            .is_err());
        assert!(inst
            .expected_reward(&Ranking::new(vec![0, 9]).unwrap())
            .is_err());
        assert!(Ranking::new(vec![1, 1]).is_err());
    }

    #[test]
    fn expected_reward_examples() {
        let inst = pbm(vec![0.8, 0.4, 0.1], vec![1.0, 0.5], vec![0, 1]);
        let r = inst
            .expected_reward(&Ranking::new(vec![0, 1]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inst.optimal_reward(), 1.0, epsilon = 1e-12);

        let inst = cm(vec![0.5, 0.5, 0.1], vec![0, 1]);
        let r = inst
            .expected_reward(&Ranking::new(vec![0, 1]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(r, 0.75, epsilon = 1e-12);

        let inst = cm(vec![0.9, 0.2, 0.2], vec![0, 1]);
        assert_abs_diff_eq!(inst.optimal_reward(), 1.0 - 0.1 * 0.8, epsilon = 1e-12);
        assert_eq!(inst.optimal_ranking().items(), &[0, 1]);

        let inst = cm(vec![0.0; 3], vec![0, 1]);
        assert_eq!(
            inst.expected_reward(&Ranking::new(vec![2, 0]).unwrap())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn equal_attraction_is_order_free() {
        let inst = pbm(vec![0.3; 5], vec![0.9, 0.6], vec![0, 1]);
        let r = inst.optimal_reward();
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    let v = inst
                        .expected_reward(&Ranking::new(vec![a, b]).unwrap())
                        .unwrap();
                    assert_abs_diff_eq!(v, r, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_bad_instances() {
        let r = Ranking::new(vec![0, 1]).unwrap();
        assert!(
            BanditInstance::new(vec![0.5, 1.2, 0.1], 2, ClickModel::Cascade, r.clone()).is_err()
        );
        assert!(BanditInstance::new(vec![0.5, 0.2], 2, ClickModel::Cascade, r.clone()).is_err());
        let rising = ClickModel::PositionBased {
            examination: vec![0.5, 0.9],
        };
        assert!(BanditInstance::new(vec![0.5, 0.2, 0.1], 2, rising, r).is_err());
    }

    #[test]
    fn instance_json_schema() {
        let text = r#"{"model":"pbm","L":3,"K":2,"alpha":[0.8,0.4,0.1],"chi":[1.0,0.5],"original_ranking":[2,1]}"#;
        let inst = BanditInstance::from_json_str(text).unwrap();
        assert_eq!(inst.original_ranking().items(), &[1, 0]);
        let back = BanditInstance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(back, inst);

        let unknown = r#"{"model":"cm","L":3,"K":2,"alpha":[0.8,0.4,0.1],"original_ranking":[2,1],"extra":1}"#;
        assert!(BanditInstance::from_json_str(unknown).is_err());
        let cm_with_chi = r#"{"model":"cm","L":3,"K":2,"alpha":[0.8,0.4,0.1],"chi":[1,1],"original_ranking":[2,1]}"#;
        assert!(BanditInstance::from_json_str(cm_with_chi).is_err());
        let zero_id =
            r#"{"model":"cm","L":3,"K":2,"alpha":[0.8,0.4,0.1],"original_ranking":[0,1]}"#;
        assert!(BanditInstance::from_json_str(zero_id).is_err());
        let out_of_range =
            r#"{"model":"cm","L":3,"K":2,"alpha":[0.8,-0.1,0.1],"original_ranking":[1,2]}"#;
        assert!(BanditInstance::from_json_str(out_of_range).is_err());
    }

    #[test]
    fn generated_scenarios() {
        for seed in 0..20 {
            for model in [ModelKind::Pbm, ModelKind::Cm] {
                let opt = generate_instance(Scenario::OptimalOriginal, model, 10, 5, seed).unwrap();
                assert_eq!(opt.original_ranking(), &opt.optimal_ranking());

                let miss = generate_instance(Scenario::MissingTop, model, 10, 5, seed).unwrap();
                let best = miss.optimal_ranking();
                assert!(best
                    .items()
                    .iter()
                    .any(|&i| !miss.original_ranking().contains(i)));

                let a = generate_instance(Scenario::Random, model, 10, 5, seed).unwrap();
                let b = generate_instance(Scenario::Random, model, 10, 5, seed).unwrap();
                assert_eq!(a, b);
                assert!(a.attraction().iter().all(|&x| (0.05..=0.9).contains(&x)));
            }
        }
        assert!(generate_instance(Scenario::Random, ModelKind::Cm, 5, 5, 0).is_err());
        assert!("bogus".parse::<Scenario>().is_err());
    }
}
