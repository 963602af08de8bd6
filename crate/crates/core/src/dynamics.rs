//! One-step update kernels.
//!
//! All kernels are synchronous: the engine set is read from the current
//! configuration, a subset of it advances, and nothing else moves.
//! Random draws are taken in ascending engine-site order.

use std::ops::{Mul, Sub};

use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::error::{invalid, Error, Result};
use crate::lattice::Configuration;

/// How the blockage acts on the engine sitting at the last site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BlockageSemantics {
    /// The engine attempts a jump with probability `p`; the attempt then
    /// succeeds with probability `1 - ε`, so it advances with `p(1 - ε)`.
    #[default]
    BernoulliAttempt,
    /// Normalised transition weights `ω^n (1 - ε·[crossing])`: the engine
    /// advances with `ω(1 - ε) / (1 + ω(1 - ε))`.
    RenormalizedWeight,
}

/// Jump probability, blockage intensity and blockage semantics.
///
/// `p = ω / (1 + ω)`; `p = 1` is the rule-184 limit `ω → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    p: f64,
    epsilon: f64,
    semantics: BlockageSemantics,
}

impl KernelParams {
    pub fn from_p(p: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("jump probability p must lie in [0, 1], got {p}"));
        }
        check_epsilon(epsilon)?;
        Ok(KernelParams {
            p,
            epsilon,
            semantics: BlockageSemantics::default(),
        })
    }

    pub fn from_omega(omega: f64, epsilon: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return invalid(format!("jump weight ω must be positive, got {omega}"));
        }
        let p = if omega.is_infinite() {
            1.0
        } else {
            omega / (1.0 + omega)
        };
        Self::from_p(p, epsilon)
    }

    /// The `ω → ∞` kernel: every engine moves, except the blocked one.
    pub fn rule184(epsilon: f64) -> Result<Self> {
        Self::from_p(1.0, epsilon)
    }

    pub fn with_semantics(mut self, semantics: BlockageSemantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `ω = p / (1 - p)`, infinite in the limit kernel.
    pub fn omega(&self) -> f64 {
        if self.is_limit() {
            f64::INFINITY
        } else {
            self.p / (1.0 - self.p)
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn semantics(&self) -> BlockageSemantics {
        self.semantics
    }

    pub fn is_limit(&self) -> bool {
        self.p >= 1.0
    }

    /// Probability that an engine at the last site advances.
    pub fn blockage_probability(&self) -> f64 {
        let pass = 1.0 - self.epsilon;
        match self.semantics {
            BlockageSemantics::BernoulliAttempt => self.p * pass,
            BlockageSemantics::RenormalizedWeight => {
                if pass == 0.0 {
                    0.0
                } else if self.is_limit() {
                    1.0
                } else {
                    // ω(1-ε) / (1 + ω(1-ε)) with ω = p / (1-p)
                    self.p * pass / (1.0 - self.p * self.epsilon)
                }
            }
        }
    }

    /// Advance probability of the engine at `site`.
    pub fn engine_probability(&self, site: usize, blockage_site: usize) -> f64 {
        if site == blockage_site {
            self.blockage_probability()
        } else {
            self.p
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!(
            "blockage intensity ε must lie in [0, 1], got {epsilon}"
        ));
    }
    Ok(())
}

/// Seeded random stream.
///
/// The generator is ChaCha8 seeded with `master_seed` through
/// `SeedableRng::seed_from_u64`, with its stream selector set to `stream_id`.
/// Identical `(master_seed, stream_id)` pairs give identical draws.
#[derive(Debug, Clone)]
pub struct RandomSource {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RandomSource {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Number of failures before the first success of Bernoulli(`p`) trials,
    /// given `ln(1 - p)`.
    #[inline]
    fn geometric(&mut self, log_fail: f64) -> u64 {
        let u = 1.0 - self.uniform();
        let g = (u.ln() / log_fail).floor();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Reusable buffers for in-place stepping.
#[derive(Debug, Clone)]
pub(crate) struct StepScratch {
    shifted: Vec<u64>,
    engines: Vec<u64>,
    moves: Vec<u64>,
}

impl StepScratch {
    pub(crate) fn new(words: usize) -> Self {
        StepScratch {
            shifted: vec![0; words],
            engines: vec![0; words],
            moves: vec![0; words],
        }
    }
}

fn load_engines(config: &Configuration, scratch: &mut StepScratch) {
    bits::engine_mask_into(
        config.words(),
        config.site_count(),
        &mut scratch.shifted,
        &mut scratch.engines,
    );
}

fn apply_moves(config: &mut Configuration, scratch: &mut StepScratch) {
    let n = config.site_count();
    bits::shift_toward_higher(&scratch.moves, n, &mut scratch.shifted);
    for ((w, &m), &s) in config
        .words_mut()
        .iter_mut()
        .zip(&scratch.moves)
        .zip(&scratch.shifted)
    {
        *w = (*w & !m) | s;
    }
}

/// Position of the `k`-th (0-based) set bit of `word`.
#[inline]
fn select_bit(mut word: u64, k: u32) -> u32 {
    for _ in 0..k {
        word &= word - 1;
    }
    word.trailing_zeros()
}

#[inline]
fn set_bit(words: &mut [u64], site: usize) {
    words[site / 64] |= 1 << (site % 64);
}

#[inline]
fn clear_bit(words: &mut [u64], site: usize) -> bool {
    let bit = 1u64 << (site % 64);
    let was = words[site / 64] & bit != 0;
    words[site / 64] &= !bit;
    was
}

/// Decides the blocked engine, if present, with one draw.
fn blocked_engine_move(
    config: &Configuration,
    scratch: &mut StepScratch,
    probability: f64,
    rng: &mut RandomSource,
) {
    let block = config.site_count() - 1;
    if clear_bit(&mut scratch.moves, block) && rng.uniform() < probability {
        set_bit(&mut scratch.moves, block);
    }
}

pub(crate) fn step_parallel_in_place(
    config: &mut Configuration,
    params: &KernelParams,
    rng: &mut RandomSource,
    scratch: &mut StepScratch,
) {
    load_engines(config, scratch);
    let block = config.site_count() - 1;
    let p = params.p();
    if params.is_limit() {
        scratch.moves.copy_from_slice(&scratch.engines);
        blocked_engine_move(config, scratch, params.blockage_probability(), rng);
    } else {
        scratch.moves.iter_mut().for_each(|w| *w = 0);
        let q_block = params.blockage_probability();
        for e in bits::set_positions(&scratch.engines) {
            let q = if e == block { q_block } else { p };
            if rng.uniform() < q {
                set_bit(&mut scratch.moves, e);
            }
        }
    }
    apply_moves(config, scratch);
}

/// Same law as [`step_parallel`], drawing geometric gaps between advancing
/// engines instead of one uniform per engine. Cheaper when `p` is small.
pub(crate) fn step_parallel_sparse_in_place(
    config: &mut Configuration,
    params: &KernelParams,
    rng: &mut RandomSource,
    scratch: &mut StepScratch,
) {
    load_engines(config, scratch);
    let block = config.site_count() - 1;
    scratch.moves.iter_mut().for_each(|w| *w = 0);
    let has_blocked = clear_bit(&mut scratch.engines, block);
    let p = params.p();
    let mut any = false;
    if p > 0.0 {
        let log_fail = (-p).ln_1p();
        // rank of the next advancing engine among the unblocked engines
        let mut rank = rng.geometric(log_fail);
        if rank < bits::popcount(&scratch.engines) as u64 {
            any = true;
            let mut seen = 0u64;
            for (w, &word) in scratch.engines.iter().enumerate() {
                let count = word.count_ones() as u64;
                while rank < seen + count {
                    scratch.moves[w] |= 1 << select_bit(word, (rank - seen) as u32);
                    rank = rank
                        .saturating_add(1)
                        .saturating_add(rng.geometric(log_fail));
                }
                seen += count;
            }
        }
    }
    if has_blocked {
        set_bit(&mut scratch.engines, block);
        if rng.uniform() < params.blockage_probability() {
            set_bit(&mut scratch.moves, block);
            any = true;
        }
    }
    if any {
        apply_moves(config, scratch);
    }
}

pub(crate) fn step_rule184_in_place(
    config: &mut Configuration,
    epsilon: f64,
    rng: &mut RandomSource,
    scratch: &mut StepScratch,
) {
    load_engines(config, scratch);
    scratch.moves.copy_from_slice(&scratch.engines);
    blocked_engine_move(config, scratch, 1.0 - epsilon, rng);
    apply_moves(config, scratch);
}

/// One synchronous step of the parallel TASEP with blockage.
///
/// Every engine except the one at the last site advances with probability
/// `p` (no draw when `p = 1`); the engine at the last site, if any, advances
/// with [`KernelParams::blockage_probability`] after one draw.
pub fn step_parallel(
    config: &Configuration,
    params: &KernelParams,
    rng: &mut RandomSource,
) -> Configuration {
    let mut next = config.clone();
    let mut scratch = StepScratch::new(config.words().len());
    step_parallel_in_place(&mut next, params, rng, &mut scratch);
    next
}

/// Rule-184 step with blockage: all engines advance, the engine at the last
/// site only if the blockage coin passes (probability `1 - ε`). One draw per
/// step, taken only when the last site holds an engine.
pub fn step_rule184_blockage(
    config: &Configuration,
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<Configuration> {
    check_epsilon(epsilon)?;
    let mut next = config.clone();
    let mut scratch = StepScratch::new(config.words().len());
    step_rule184_in_place(&mut next, epsilon, rng, &mut scratch);
    Ok(next)
}

/// Rule-184 step with the blockage coin fixed by the caller.
pub fn step_rule184_with_coin(config: &Configuration, pass: bool) -> Configuration {
    let mut moves = config.engine_mask();
    let block = config.site_count() - 1;
    if !pass {
        clear_bit(&mut moves, block);
    }
    config.advanced(&moves)
}

/// Serial TASEP step: one particle chosen uniformly; it advances if free,
/// with probability `1 - ε` when it sits at the last site.
pub fn step_serial(
    config: &Configuration,
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<Configuration> {
    check_epsilon(epsilon)?;
    let m = config.particle_count();
    if m == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let k = rng.gen_range(0..m);
    let site = bits::set_positions(config.words())
        .nth(k)
        .expect("k < particle count");
    let mut next = config.clone();
    if config.is_engine(site) {
        let block = config.site_count() - 1;
        let go = site != block || rng.uniform() < 1.0 - epsilon;
        if go {
            next.set(site, false);
            next.set((site + 1) % config.site_count(), true);
        }
    }
    Ok(next)
}

/// How a reachable target differs from its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveSet {
    /// Number of engines that advanced.
    pub moved: usize,
    /// Whether the engine at the last site crossed the blockage.
    pub crosses_blockage: bool,
}

/// The set of engines whose advance turns `from` into `to`, if there is one.
pub fn move_set(from: &Configuration, to: &Configuration) -> Option<MoveSet> {
    if from.geometry() != to.geometry() {
        return None;
    }
    let moves: Vec<u64> = from
        .words()
        .iter()
        .zip(to.words())
        .map(|(&a, &b)| a & !b)
        .collect();
    let engines = from.engine_mask();
    if moves.iter().zip(&engines).any(|(&m, &e)| m & !e != 0) {
        return None;
    }
    if from.advanced(&moves) != *to {
        return None;
    }
    let block = from.site_count() - 1;
    Some(MoveSet {
        moved: bits::popcount(&moves),
        crosses_blockage: (moves[block / 64] >> (block % 64)) & 1 == 1,
    })
}

/// `w_ε(σ, τ) = ω^n (1 - ε·[blocked engine crossed])` when `τ` is reached by
/// advancing `n` engines of `σ`, zero otherwise.
///
/// Generic so the same rule serves floating point and exact rationals.
pub fn transition_weight<T>(from: &Configuration, to: &Configuration, omega: &T, epsilon: &T) -> T
where
    T: Clone + Zero + One + Sub<Output = T> + Mul<Output = T>,
{
    match move_set(from, to) {
        None => T::zero(),
        Some(ms) => {
            let w = num_traits::pow(omega.clone(), ms.moved);
            if ms.crosses_blockage {
                w * (T::one() - epsilon.clone())
            } else {
                w
            }
        }
    }
}

/// Every configuration reachable in one step, with the number of engines moved.
///
/// Subsets of the engine set are visited in increasing bitmask order over
/// the ascending engine list. There are `2^l(σ)` of them.
pub fn reachable_successors(config: &Configuration) -> Vec<(Configuration, usize)> {
    let engines = config.engines();
    assert!(
        engines.len() < 32,
        "too many engines to enumerate successors"
    );
    let words = config.words().len();
    (0u64..1 << engines.len())
        .map(|subset| {
            let mut moves = vec![0u64; words];
            for (k, &e) in engines.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    set_bit(&mut moves, e);
                }
            }
            (config.advanced(&moves), subset.count_ones() as usize)
        })
        .collect()
}

/// One-step transition probabilities out of `config`, omitting zero entries.
pub fn successor_distribution(
    config: &Configuration,
    params: &KernelParams,
) -> Vec<(Configuration, f64)> {
    let block = config.site_count() - 1;
    let words = config.words().len();
    let mut forced = vec![0u64; words];
    let mut uncertain = Vec::new();
    for e in config.engines() {
        let q = params.engine_probability(e, block);
        if q >= 1.0 {
            set_bit(&mut forced, e);
        } else if q > 0.0 {
            uncertain.push((e, q));
        }
    }
    assert!(
        uncertain.len() < 32,
        "too many engines to enumerate successors"
    );
    (0u64..1 << uncertain.len())
        .map(|subset| {
            let mut moves = forced.clone();
            let mut prob = 1.0;
            for (k, &(e, q)) in uncertain.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    set_bit(&mut moves, e);
                    prob *= q;
                } else {
                    prob *= 1.0 - q;
                }
            }
            (config.advanced(&moves), prob)
        })
        .collect()
}
