//! Simulation of large rings.
//!
//! Every replica owns a [`RandomSource`] whose stream is derived from the
//! master seed and a `(cell, replica)` pair, see [`stream_id`]. Results do not
//! depend on how replicas are scheduled across threads.

use rand::seq::index;
use rayon::prelude::*;

use crate::bits;
use crate::dynamics::{
    step_parallel_in_place, step_parallel_sparse_in_place, KernelParams, RandomSource, StepScratch,
};
use crate::error::{invalid, Result};
use crate::lattice::{Configuration, RingGeometry};

/// Below this jump probability steps draw geometric gaps between moving engines.
const SPARSE_BELOW: f64 = 0.2;

/// Cells of a threshold scan: 0 is the baseline, `1..=20` the coarse grid,
/// and bisection steps start here.
const BISECTION_CELL: u64 = 100;
const COARSE_STEP: f64 = 0.05;
const BISECTION_STEPS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// `1010…10`.
    HalfFilledAlternating,
    /// Empty first half, full second half.
    Queue,
    /// Uniform over configurations with `L` particles.
    #[default]
    RandomHalfFilled,
}

impl InitialState {
    pub fn build(self, geometry: RingGeometry, rng: &mut RandomSource) -> Configuration {
        match self {
            InitialState::HalfFilledAlternating => Configuration::alternating(geometry),
            InitialState::Queue => Configuration::queue(geometry),
            InitialState::RandomHalfFilled => {
                let sites = index::sample(rng, geometry.site_count(), geometry.half_size());
                Configuration::from_occupied(geometry, sites.iter())
                    .expect("sampled sites lie on the ring")
            }
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub geometry: RingGeometry,
    pub params: KernelParams,
    /// Steps before measuring; `None` means [`default_horizon`].
    pub burn_in: Option<u64>,
    pub measure_steps: u64,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial_state: InitialState,
}

impl SimulationSpec {
    /// Defaults: burn-in `T`, 100 measured steps, 100 replicas, seed 0.
    pub fn new(geometry: RingGeometry, params: KernelParams) -> Self {
        SimulationSpec {
            geometry,
            params,
            burn_in: None,
            measure_steps: 100,
            replicas: 100,
            master_seed: 0,
            initial_state: InitialState::default(),
        }
    }

    pub fn with_params(&self, params: KernelParams) -> Self {
        SimulationSpec {
            params,
            ..self.clone()
        }
    }

    pub fn resolved_burn_in(&self) -> Result<u64> {
        match self.burn_in {
            Some(t) => Ok(t),
            None => default_horizon(self.geometry.half_size(), self.params.p()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.measure_steps == 0 {
            return invalid("measure_steps must be at least 1");
        }
        if self.replicas == 0 {
            return invalid("replicas must be at least 1");
        }
        if self.params.p() <= 0.0 {
            return invalid("jump probability p must be positive");
        }
        Ok(())
    }
}

/// `ceil(2 (L / p) ln L)`.
pub fn default_horizon(half_size: usize, p: f64) -> Result<u64> {
    if half_size < 2 {
        return invalid(format!("L must be at least 2, got {half_size}"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("p must lie in (0, 1], got {p}"));
    }
    let l = half_size as f64;
    Ok((2.0 * (l / p) * l.ln()).ceil() as u64)
}

/// Stream of replica `replica` in work cell `cell`: `(cell << 32) | replica`.
pub fn stream_id(cell: u64, replica: usize) -> u64 {
    (cell << 32) | replica as u64
}

/// In-place evolution of one configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: Configuration,
    params: KernelParams,
    rng: RandomSource,
    scratch: StepScratch,
    shifted: Vec<u64>,
    sparse: bool,
    time: u64,
}

impl Simulator {
    pub fn new(config: Configuration, params: KernelParams, rng: RandomSource) -> Self {
        let words = config.words().len();
        Simulator {
            config,
            params,
            rng,
            scratch: StepScratch::new(words),
            shifted: vec![0; words],
            sparse: params.p() < SPARSE_BELOW,
            time: 0,
        }
    }

    pub fn step(&mut self) {
        if self.sparse {
            step_parallel_sparse_in_place(
                &mut self.config,
                &self.params,
                &mut self.rng,
                &mut self.scratch,
            );
        } else {
            step_parallel_in_place(
                &mut self.config,
                &self.params,
                &mut self.rng,
                &mut self.scratch,
            );
        }
        self.time += 1;
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// `l(σ_t)`.
    pub fn engine_count(&mut self) -> usize {
        let words = self.config.words();
        bits::shift_toward_lower(words, self.config.site_count(), &mut self.shifted);
        words
            .iter()
            .zip(&self.shifted)
            .map(|(w, s)| (w & !s).count_ones() as usize)
            .sum()
    }
}

fn replica_simulator(spec: &SimulationSpec, cell: u64, replica: usize) -> Simulator {
    let mut rng = RandomSource::new(spec.master_seed, stream_id(cell, replica));
    let start = spec.initial_state.build(spec.geometry, &mut rng);
    Simulator::new(start, spec.params, rng)
}

/// Time- and replica-averaged engine fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentEstimate {
    pub mean: f64,
    /// Standard error of the mean of the replica averages; 0 for one replica.
    pub std_error: f64,
    pub replica_means: Vec<f64>,
    pub burn_in: u64,
    pub spec: SimulationSpec,
}

/// Estimates the current with replicas drawn from cell 0.
pub fn run_current(spec: &SimulationSpec) -> Result<CurrentEstimate> {
    run_current_cell(spec, 0)
}

/// Like [`run_current`], with replica streams taken from `cell`.
///
/// Each replica runs `burn_in` steps and then averages `l(σ_t) / 2L` over the
/// `measure_steps` states `σ_T, …, σ_{T + measure_steps - 1}`.
pub fn run_current_cell(spec: &SimulationSpec, cell: u64) -> Result<CurrentEstimate> {
    spec.validate()?;
    let burn_in = spec.resolved_burn_in()?;
    let two_l = spec.geometry.site_count() as f64;
    let replica_means: Vec<f64> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let mut sim = replica_simulator(spec, cell, r);
            sim.run(burn_in);
            let mut total = 0usize;
            for t in 0..spec.measure_steps {
                if t > 0 {
                    sim.step();
                }
                total += sim.engine_count();
            }
            total as f64 / (two_l * spec.measure_steps as f64)
        })
        .collect();
    let (mean, std_error) = mean_and_error(&replica_means);
    Ok(CurrentEstimate {
        mean,
        std_error,
        replica_means,
        burn_in,
        spec: spec.clone(),
    })
}

fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    /// Replica 0 at time `T`.
    Snapshot,
    /// All replicas, times `T` to `T + measure_steps - 1`.
    TimeReplicaAverage,
}

impl DensityMode {
    pub fn name(self) -> &'static str {
        match self {
            DensityMode::Snapshot => "snapshot",
            DensityMode::TimeReplicaAverage => "average",
        }
    }
}

/// Occupation density on consecutive blocks of `bin_width` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub bin_width: usize,
    pub values: Vec<f64>,
    pub mode: DensityMode,
    pub burn_in: u64,
    pub spec: SimulationSpec,
}

impl DensityProfile {
    /// Sites covered by bin `i`, as a half-open range.
    pub fn bin_sites(&self, i: usize) -> (usize, usize) {
        (i * self.bin_width, (i + 1) * self.bin_width)
    }

    /// Mean density of the bins covering the first half of the ring.
    pub fn first_half_mean(&self) -> f64 {
        let half = self.values.len() / 2;
        self.values[..half].iter().sum::<f64>() / half as f64
    }

    pub fn second_half_mean(&self) -> f64 {
        let half = self.values.len() / 2;
        self.values[half..].iter().sum::<f64>() / (self.values.len() - half) as f64
    }
}

pub fn density_profile(
    spec: &SimulationSpec,
    bin_width: usize,
    mode: DensityMode,
) -> Result<DensityProfile> {
    spec.validate()?;
    let n = spec.geometry.site_count();
    if bin_width == 0 || n % bin_width != 0 {
        return invalid(format!("bin width {bin_width} does not divide {n} sites"));
    }
    let burn_in = spec.resolved_burn_in()?;
    let bins = n / bin_width;
    let (replicas, samples) = match mode {
        DensityMode::Snapshot => (1, 1),
        DensityMode::TimeReplicaAverage => (spec.replicas, spec.measure_steps),
    };
    let counts: Vec<Vec<u64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut sim = replica_simulator(spec, 0, r);
            sim.run(burn_in);
            let mut counts = vec![0u64; bins];
            for t in 0..samples {
                if t > 0 {
                    sim.step();
                }
                for site in bits::set_positions(sim.configuration().words()) {
                    counts[site / bin_width] += 1;
                }
            }
            counts
        })
        .collect();
    let norm = (replicas as u64 * samples * bin_width as u64) as f64;
    let values = (0..bins)
        .map(|b| counts.iter().map(|c| c[b]).sum::<u64>() as f64 / norm)
        .collect();
    Ok(DensityProfile {
        bin_width,
        values,
        mode,
        burn_in,
        spec: spec.clone(),
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub p: f64,
    pub epsilon: f64,
    pub estimate: CurrentEstimate,
}

/// Current at every `(p, ε)` of the grid, `p` varying slowest.
///
/// Cell `i · |ε grid| + j` uses `p_grid[i]`, `eps_grid[j]` and its own replica
/// streams. The template's burn-in, if set, applies to every cell.
pub fn sweep(
    p_grid: &[f64],
    eps_grid: &[f64],
    template: &SimulationSpec,
) -> Result<Vec<SweepCell>> {
    if p_grid.is_empty() || eps_grid.is_empty() {
        return invalid("sweep grids must be nonempty");
    }
    let semantics = template.params.semantics();
    let cells: Vec<(u64, SimulationSpec)> = p_grid
        .iter()
        .flat_map(|&p| eps_grid.iter().map(move |&e| (p, e)))
        .enumerate()
        .map(|(i, (p, e))| {
            if !(p > 0.0 && p <= 1.0) {
                return invalid(format!("p must lie in (0, 1], got {p}"));
            }
            let params = KernelParams::from_p(p, e)?.with_semantics(semantics);
            Ok((i as u64, template.with_params(params)))
        })
        .collect::<Result<_>>()?;
    cells
        .par_iter()
        .map(|(i, spec)| {
            Ok(SweepCell {
                p: spec.params.p(),
                epsilon: spec.params.epsilon(),
                estimate: run_current_cell(spec, *i)?,
            })
        })
        .collect()
}

/// One evaluated blockage intensity of a threshold scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPoint {
    pub epsilon: f64,
    pub current: f64,
    pub std_error: f64,
    /// `|J(p, ε) - J(p, 0)| / J(p, 0)`.
    pub relative_deviation: f64,
    /// Two standard errors of that relative deviation.
    pub noise: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub p: f64,
    /// Smallest ε found to exceed the tolerance; `None` if none in `[0, 1]` does.
    pub eps_star: Option<f64>,
    pub tolerance: f64,
    /// Largest [`ThresholdPoint::noise`] among evaluations with ε up to `eps_star`.
    pub noise_floor: f64,
    pub baseline: CurrentEstimate,
    /// Evaluations in the order they were made.
    pub points: Vec<ThresholdPoint>,
}

/// Smallest ε whose current deviates from the unblocked one by more than
/// `relative_tolerance`.
///
/// Scans ε = 0.05, 0.10, …, 1, then bisects the first exceeding interval six
/// times. A point counts as exceeding only when its deviation is above both
/// the tolerance and its own noise level, so the threshold is never placed
/// where the deviation cannot be resolved.
pub fn threshold_scan(
    p: f64,
    relative_tolerance: f64,
    template: &SimulationSpec,
) -> Result<ThresholdResult> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("p must lie in (0, 1], got {p}"));
    }
    if !(relative_tolerance > 0.0) {
        return invalid("tolerance must be positive");
    }
    let semantics = template.params.semantics();
    let spec_at = |eps: f64| -> Result<SimulationSpec> {
        Ok(template.with_params(KernelParams::from_p(p, eps)?.with_semantics(semantics)))
    };
    let baseline = run_current_cell(&spec_at(0.0)?, 0)?;
    let j0 = baseline.mean;
    if !(j0 > 0.0) {
        return invalid("unblocked current is zero");
    }
    let evaluate = |eps: f64, cell: u64| -> Result<ThresholdPoint> {
        let est = run_current_cell(&spec_at(eps)?, cell)?;
        let relative_deviation = (est.mean - j0).abs() / j0;
        let noise = 2.0 * baseline.std_error.hypot(est.std_error) / j0;
        Ok(ThresholdPoint {
            epsilon: eps,
            current: est.mean,
            std_error: est.std_error,
            relative_deviation,
            noise,
            exceeds: relative_deviation > relative_tolerance.max(noise),
        })
    };

    let coarse: Vec<f64> = (1..=(1.0 / COARSE_STEP).round() as u64)
        .map(|k| (k as f64 * COARSE_STEP).min(1.0))
        .collect();
    let coarse_points: Vec<ThresholdPoint> = coarse
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| evaluate(eps, k as u64 + 1))
        .collect::<Result<_>>()?;
    let first = coarse_points.iter().position(|pt| pt.exceeds);
    let mut points = coarse_points.clone();
    let eps_star = match first {
        None => None,
        Some(k) => {
            let mut lo = if k == 0 { 0.0 } else { coarse[k - 1] };
            let mut hi = coarse[k];
            for step in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let pt = evaluate(mid, BISECTION_CELL + step as u64)?;
                if pt.exceeds {
                    hi = mid;
                } else {
                    lo = mid;
                }
                points.push(pt);
            }
            Some(hi)
        }
    };
    let onset = eps_star.unwrap_or(1.0);
    let noise_floor = points
        .iter()
        .filter(|pt| pt.epsilon <= onset)
        .map(|pt| pt.noise)
        .fold(0.0, f64::max);
    Ok(ThresholdResult {
        p,
        eps_star,
        tolerance: relative_tolerance,
        noise_floor,
        baseline,
        points,
    })
}

/// First entrance times into Ω∞, one per replica; `None` when censored at the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimes {
    pub samples: Vec<Option<u64>>,
    pub cap: u64,
}

impl HittingTimes {
    pub fn censored(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    /// Mean over uncensored replicas.
    pub fn mean(&self) -> Option<f64> {
        let done: Vec<u64> = self.samples.iter().flatten().copied().collect();
        if done.is_empty() {
            None
        } else {
            Some(done.iter().sum::<u64>() as f64 / done.len() as f64)
        }
    }

    pub fn max(&self) -> Option<u64> {
        self.samples.iter().flatten().copied().max()
    }
}

/// Runs each replica until it enters Ω∞ or `cap` steps have passed.
pub fn hitting_time_omega_inf(spec: &SimulationSpec, cap: u64) -> Result<HittingTimes> {
    spec.validate()?;
    let eps = spec.params.epsilon();
    if !spec.params.is_limit() {
        return invalid("hitting times of Ω∞ need p = 1");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("ε must lie in (0, 1), got {eps}"));
    }
    let samples = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let mut sim = replica_simulator(spec, 0, r);
            while !sim.configuration().is_in_omega_inf() {
                if sim.time() >= cap {
                    return None;
                }
                sim.step();
            }
            Some(sim.time())
        })
        .collect();
    Ok(HittingTimes { samples, cap })
}
