//! Independent reference implementations used to check the library.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use safe_rerank::{BanditInstance, ClickModel, ItemId, Ranking};

/// Bernoulli KL divergence with the 0 log 0 = 0 convention.
pub fn kl(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// max(0, ln t + 3 ln ln t), zero for t <= 1.
pub fn budget(t: u64) -> f64 {
    if t <= 1 {
        return 0.0;
    }
    let lt = (t as f64).ln();
    (lt + 3.0 * lt.ln()).max(0.0)
}

/// Largest q in [mu, 1] with n kl(mu, q) <= budget(t), by plain bisection.
pub fn klucb_bisect(mu: f64, n: u64, t: u64) -> f64 {
    if t == 0 || n == 0 || mu >= 1.0 {
        return 1.0;
    }
    let level = budget(t);
    let (mut lo, mut hi) = (mu, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if n as f64 * kl(mu, mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Inversion count by enumerating every ordered pair of items.
pub fn inversions_by_pairs(displayed: &[ItemId], attraction: &[f64]) -> usize {
    let pos = |x: ItemId| displayed.iter().position(|&y| y == x);
    let mut count = 0;
    for i in 0..attraction.len() {
        for j in 0..attraction.len() {
            if attraction[i] <= attraction[j] {
                continue;
            }
            let Some(pj) = pos(j) else { continue };
            match pos(i) {
                None => count += 1,
                Some(pi) if pi > pj => count += 1,
                _ => {}
            }
        }
    }
    count
}

/// One recorded round of feedback: the `K + 1` working list, the `K` clicks and the parity.
pub struct Round {
    pub working: Vec<ItemId>,
    pub clicks: Vec<bool>,
    pub parity: usize,
}

/// Recomputes `(s, n)` for every ordered pair from the full history, using
/// 1-based candidate positions `(2k - 1 + h, 2k + h)` for `k = 1..=ceil((K - h) / 2)`.
pub fn stats_from_history(num_items: usize, history: &[Round]) -> (Vec<Vec<i64>>, Vec<Vec<u64>>) {
    let mut s = vec![vec![0i64; num_items]; num_items];
    let mut n = vec![vec![0u64; num_items]; num_items];
    for round in history {
        let k = round.clicks.len();
        let h = round.parity;
        let click = |pos: usize| -> i64 {
            if pos <= k && round.clicks[pos - 1] {
                1
            } else {
                0
            }
        };
        let pairs = (k - h).div_ceil(2);
        for kk in 1..=pairs {
            let (a, b) = (2 * kk - 1 + h, 2 * kk + h);
            let diff = click(a) - click(b);
            if diff.abs() == 1 {
                let (i, j) = (round.working[a - 1], round.working[b - 1]);
                s[i][j] += diff;
                s[j][i] -= diff;
                n[i][j] += 1;
                n[j][i] += 1;
            }
        }
    }
    (s, n)
}

/// Expected clicks computed straight from the model definitions.
pub fn reward_by_definition(inst: &BanditInstance, ranking: &[ItemId]) -> f64 {
    let alpha = inst.attraction();
    match inst.model() {
        ClickModel::PositionBased { examination } => ranking
            .iter()
            .zip(examination)
            .map(|(&i, &x)| alpha[i] * x)
            .sum(),
        ClickModel::Cascade => {
            let mut none_before = 1.0;
            let mut total = 0.0;
            for &i in ranking {
                total += alpha[i] * none_before;
                none_before *= 1.0 - alpha[i];
            }
            total
        }
    }
}

/// Every ordered selection of `k` items out of `0..l`.
pub fn k_permutations(l: usize, k: usize) -> Vec<Vec<ItemId>> {
    fn extend(l: usize, k: usize, prefix: &mut Vec<ItemId>, out: &mut Vec<Vec<ItemId>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in 0..l {
            if !prefix.contains(&i) {
                prefix.push(i);
                extend(l, k, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(l, k, &mut Vec::new(), &mut out);
    out
}

/// Best expected reward by trying every K-permutation.
pub fn brute_force_optimum(inst: &BanditInstance) -> f64 {
    k_permutations(inst.num_items(), inst.display_size())
        .iter()
        .map(|r| reward_by_definition(inst, r))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random instance with `l` items, `k` shown, attractions on a coarse grid so ties occur.
pub fn random_instance<R: Rng>(rng: &mut R, l: usize, k: usize, cascade: bool) -> BanditInstance {
    let attraction: Vec<f64> = (0..l)
        .map(|_| rng.random_range(1..10) as f64 / 10.0)
        .collect();
    let model = if cascade {
        ClickModel::Cascade
    } else {
        let mut chi: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..=1.0)).collect();
        chi.sort_by(|a, b| b.total_cmp(a));
        ClickModel::PositionBased { examination: chi }
    };
    let mut items: Vec<ItemId> = (0..l).collect();
    items.shuffle(rng);
    items.truncate(k);
    BanditInstance::new(attraction, k, model, Ranking::new(items).unwrap()).unwrap()
}

pub type Check = Result<String, String>;

pub fn check_kl_hand_values() -> Check {
    use safe_rerank::pairwise_stats::bernoulli_kl;
    let cases = [(0.5, 0.75, 0.143841036), (0.0, 0.5, std::f64::consts::LN_2)];
    for (p, q, want) in cases {
        let got = bernoulli_kl(p, q).map_err(|e| e.to_string())?;
        if (got - want).abs() > 1e-6 {
            return Err(format!("kl({p}, {q}) = {got}, want {want}"));
        }
    }
    Ok("kl(0.5,0.75) and kl(0,0.5) within 1e-6".into())
}

/// 10 means x 10 (N, t) pairs.
pub fn klucb_grid() -> Vec<(f64, u64, u64)> {
    let means = [0.0, 0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.97, 0.999];
    let counts = [
        (1, 2),
        (1, 3),
        (2, 10),
        (5, 50),
        (10, 100),
        (37, 1_000),
        (100, 1_000),
        (500, 10_000),
        (1_000, 100_000),
        (10_000, 1_000_000),
    ];
    means
        .iter()
        .flat_map(|&m| counts.iter().map(move |&(n, t)| (m, n, t)))
        .collect()
}

pub fn check_klucb_grid() -> Check {
    use safe_rerank::pairwise_stats::klucb_index;
    let grid = klucb_grid();
    let mut worst = 0.0_f64;
    for &(mu, n, t) in &grid {
        let got = klucb_index(mu, n, t).map_err(|e| e.to_string())?;
        let want = klucb_bisect(mu, n, t);
        let err = (got - want).abs();
        if err > 1e-6 {
            return Err(format!("klucb({mu}, {n}, {t}) = {got}, oracle {want}"));
        }
        worst = worst.max(err);
    }
    Ok(format!(
        "{} grid points, max abs error {worst:.2e}",
        grid.len()
    ))
}

pub fn check_klucb_boundaries() -> Check {
    use safe_rerank::pairwise_stats::klucb_index;
    let cases = [
        (0.3, 0, 50),
        (0.3, 20, 0),
        (1.0, 20, 50),
        (0.0, 0, 0),
        (1.0, 1, 2),
    ];
    for (mu, n, t) in cases {
        let got = klucb_index(mu, n, t).map_err(|e| e.to_string())?;
        if got != 1.0 {
            return Err(format!("klucb({mu}, {n}, {t}) = {got}, want exactly 1"));
        }
    }
    Ok("f = 1 exactly at N=0, t=0, mu=1".into())
}

pub fn check_inversions<R: Rng>(rng: &mut R, trials: usize) -> Check {
    use safe_rerank::evaluation::{count_inversions, TrueOrder};
    for _ in 0..trials {
        let l = rng.random_range(2..=8);
        let k = rng.random_range(1..=l);
        let attraction: Vec<f64> = (0..l)
            .map(|_| rng.random_range(0..6) as f64 / 5.0)
            .collect();
        let mut items: Vec<ItemId> = (0..l).collect();
        items.shuffle(rng);
        items.truncate(k);
        let got = count_inversions(
            &Ranking::new(items.clone()).unwrap(),
            &TrueOrder::new(attraction.clone()),
        );
        let want = inversions_by_pairs(&items, &attraction);
        if got != want {
            return Err(format!(
                "{items:?} under {attraction:?}: got {got}, oracle {want}"
            ));
        }
    }
    Ok(format!("{trials} random rankings with L <= 8"))
}

pub fn check_update_traces<R: Rng>(rng: &mut R, traces: usize, rounds: usize) -> Check {
    use safe_rerank::pairwise_stats::PairStats;
    use safe_rerank::ClickVector;
    for trace in 0..traces {
        let l = rng.random_range(3..=6);
        let k = rng.random_range(1..l);
        let mut stats = PairStats::new(l);
        let mut history = Vec::with_capacity(rounds);
        for t in 1..=rounds {
            let mut items: Vec<ItemId> = (0..l).collect();
            items.shuffle(rng);
            items.truncate(k + 1);
            let clicks: Vec<bool> = (0..k).map(|_| rng.random_bool(0.4)).collect();
            let parity = t % 2;
            stats
                .update(
                    &Ranking::new(items.clone()).unwrap(),
                    &ClickVector::new(clicks.clone()),
                    parity,
                )
                .map_err(|e| e.to_string())?;
            history.push(Round {
                working: items,
                clicks,
                parity,
            });
        }
        let (s, n) = stats_from_history(l, &history);
        for i in 0..l {
            for j in 0..l {
                if stats.s(i, j) != s[i][j] || stats.n(i, j) != n[i][j] {
                    return Err(format!(
                        "trace {trace}: pair ({i}, {j}) has s={}, n={}; oracle s={}, n={}",
                        stats.s(i, j),
                        stats.n(i, j),
                        s[i][j],
                        n[i][j]
                    ));
                }
            }
        }
    }
    Ok(format!("{traces} traces of {rounds} rounds with L <= 6"))
}

/// Monte Carlo mean of total clicks against the expected reward, within 4 standard errors.
pub fn check_reward_monte_carlo<R: Rng>(rng: &mut R, cascade: bool, samples: usize) -> Check {
    let inst = random_instance(rng, 8, 4, cascade);
    let ranking = inst.original_ranking().clone();
    let want = inst.expected_reward(&ranking).map_err(|e| e.to_string())?;
    let exact = reward_by_definition(&inst, ranking.items());
    if (want - exact).abs() > 1e-12 {
        return Err(format!(
            "expected_reward {want} differs from definition {exact}"
        ));
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let c = inst
            .sample_clicks(&ranking, rng)
            .map_err(|e| e.to_string())?
            .total() as f64;
        sum += c;
        sum_sq += c * c;
    }
    let n = samples as f64;
    let mean = sum / n;
    let sd = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0).sqrt();
    let se = sd / n.sqrt();
    let z = (mean - want).abs() / se;
    let name = if cascade { "CM" } else { "PBM" };
    if z > 4.0 {
        return Err(format!(
            "{name}: MC mean {mean:.6} vs expected {want:.6} ({z:.2} se)"
        ));
    }
    Ok(format!("{name}: MC {mean:.5} vs {want:.5}, {z:.2} se"))
}

pub fn check_optimal_reward<R: Rng>(rng: &mut R, trials: usize) -> Check {
    for _ in 0..trials {
        let l = rng.random_range(2..=7);
        let k = rng.random_range(1..l);
        let cascade = rng.random_bool(0.5);
        let inst = random_instance(rng, l, k, cascade);
        let got = inst.optimal_reward();
        let want = brute_force_optimum(&inst);
        if (got - want).abs() > 1e-12 {
            return Err(format!(
                "L={l}, K={k}, cascade={cascade}: optimal_reward {got}, brute force {want}"
            ));
        }
    }
    Ok(format!("{trials} random instances with L <= 7"))
}
