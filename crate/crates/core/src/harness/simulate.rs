use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::click_models::BanditInstance;
use crate::error::{Error, Result};
use crate::evaluation::{count_inversions, RunRecorder, RunResult, SafetyRule, TrueOrder};
use crate::harness::config::ValidatedConfig;
use crate::rankers::{build_ranker, RankerId, RankerSetup};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed of run `r`; shared by every algorithm so their click streams line up.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ run as u64)
}

/// Seed of the ranker's private random stream in run `r`.
pub fn algorithm_seed(run_seed: u64, id: RankerId) -> u64 {
    splitmix64(run_seed ^ fnv1a(id.as_str().as_bytes()))
}

/// Everything a single run needs that is shared across runs.
#[derive(Debug, Clone)]
pub struct SimulationContext<'a> {
    pub instance: &'a BanditInstance,
    pub horizon: u64,
    pub delta: f64,
    pub checkpoint_stride: u64,
    pub safety_rule: SafetyRule,
}

impl<'a> SimulationContext<'a> {
    pub fn from_config(config: &'a ValidatedConfig) -> Self {
        SimulationContext {
            instance: &config.instance,
            horizon: config.horizon,
            delta: config.delta,
            checkpoint_stride: config.checkpoint_stride,
            safety_rule: config.safety_rule,
        }
    }
}

/// Simulates `horizon` rounds of one ranker against the instance.
///
/// The environment stream is seeded from `seed` alone, the ranker stream from
/// `seed` and the ranker id.
pub fn simulate_run(ctx: &SimulationContext<'_>, id: RankerId, seed: u64) -> Result<RunResult> {
    let inst = ctx.instance;
    let (l, k) = (inst.num_items(), inst.display_size());
    let setup = RankerSetup {
        num_items: l,
        display_size: k,
        original: inst.original_ranking().clone(),
        delta: ctx.delta,
    };
    let mut ranker = build_ranker(id, &setup, algorithm_seed(seed, id))?;
    let mut env = ChaCha8Rng::seed_from_u64(seed);

    let order = TrueOrder::from_instance(inst);
    let best = inst.optimal_reward();
    let v0 = count_inversions(inst.original_ranking(), &order);
    let mut recorder = RunRecorder::new(id.as_str(), seed, ctx.horizon, ctx.checkpoint_stride)?;

    for t in 1..=ctx.horizon {
        let shown = ranker.propose(t)?;
        let clicks = inst.sample_clicks(&shown, &mut env)?;
        ranker.feedback(t, &clicks)?;

        let regret = (best - inst.reward_unchecked(shown.items())).max(0.0);
        let safe = ctx
            .safety_rule
            .is_safe(count_inversions(&shown, &order), v0, l, k);
        recorder.record_round(t, regret, !safe)?;
    }
    Ok(recorder.finish())
}

/// Runs every (algorithm, run index) pair. Output order is algorithm-major and
/// does not depend on the number of worker threads.
pub fn run_experiment(config: &ValidatedConfig) -> Result<Vec<RunResult>> {
    let ctx = SimulationContext::from_config(config);
    let jobs: Vec<(RankerId, u64)> = config
        .algorithms
        .iter()
        .flat_map(|&id| (0..config.runs).map(move |r| (id, run_seed(config.master_seed, r))))
        .collect();

    match config.threads {
        Some(1) => jobs
            .iter()
            .map(|&(id, seed)| simulate_run(&ctx, id, seed))
            .collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| {
                jobs.par_iter()
                    .map(|&(id, seed)| simulate_run(&ctx, id, seed))
                    .collect()
            })
        }
        None => jobs
            .par_iter()
            .map(|&(id, seed)| simulate_run(&ctx, id, seed))
            .collect(),
    }
}
