//! Exact analysis of small rings.
//!
//! Builds the full transition matrix over all configurations with a fixed
//! particle number, finds its closed communicating classes, solves for the
//! stationary distribution and checks it against the product weights
//! `(1+ω)^{l(σ)} / W`. Balance checks run in exact rational arithmetic.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::analytic::product_form_weight;
use crate::dynamics::{
    reachable_successors, successor_distribution, transition_weight, KernelParams,
};
use crate::error::{invalid, Error, Result};
use crate::lattice::{enumerate_configurations, Configuration, RingGeometry};

/// Largest ring the oracle will enumerate.
pub const MAX_ENUMERATED_SITES: usize = 24;

/// Largest ring solved by a dense linear system; bigger rings use power iteration.
pub const MAX_DENSE_SITES: usize = 12;

const POWER_TOLERANCE: f64 = 1e-15;
const POWER_MAX_ITERATIONS: usize = 2_000_000;

/// Full transition matrix of the chain restricted to `m` particles.
#[derive(Debug, Clone)]
pub struct ExactChain {
    geometry: RingGeometry,
    particles: usize,
    params: KernelParams,
    states: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ExactChain {
    /// Enumerates the `C(2L, m)` states and their outgoing probabilities.
    pub fn build(geometry: RingGeometry, particles: usize, params: KernelParams) -> Result<Self> {
        check_size(geometry)?;
        let states: Vec<Configuration> = enumerate_configurations(geometry, particles)?.collect();
        let index: HashMap<Configuration, usize> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let rows = states
            .iter()
            .map(|s| {
                let mut row: Vec<(usize, f64)> = successor_distribution(s, &params)
                    .into_iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(t, p)| (index[&t], p))
                    .collect();
                row.sort_by_key(|(j, _)| *j);
                row
            })
            .collect();
        Ok(ExactChain {
            geometry,
            particles,
            params,
            states,
            index,
            rows,
        })
    }

    pub fn geometry(&self) -> RingGeometry {
        self.geometry
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &Configuration) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Nonzero entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .iter()
            .find(|(j, _)| *j == to)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                m[(i, j)] += p;
            }
        }
        m
    }

    /// Largest entrywise difference to a chain over the same states.
    pub fn max_abs_difference(&self, other: &ExactChain) -> Option<f64> {
        if self.states != other.states {
            return None;
        }
        Some(
            (self.dense_matrix() - other.dense_matrix())
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs())),
        )
    }

    /// Closed communicating classes, each sorted, ordered by smallest member.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let mut graph = DiGraph::<(), ()>::with_capacity(self.len(), 0);
        let nodes: Vec<_> = (0..self.len()).map(|_| graph.add_node(())).collect();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
        let mut component = vec![0usize; self.len()];
        let sccs = tarjan_scc(&graph);
        for (c, members) in sccs.iter().enumerate() {
            for v in members {
                component[v.index()] = c;
            }
        }
        let mut closed: Vec<Vec<usize>> = sccs
            .iter()
            .enumerate()
            .filter(|(c, members)| {
                members.iter().all(|v| {
                    self.rows[v.index()]
                        .iter()
                        .all(|&(j, _)| component[j] == *c)
                })
            })
            .map(|(_, members)| {
                let mut m: Vec<usize> = members.iter().map(|v| v.index()).collect();
                m.sort_unstable();
                m
            })
            .collect();
        closed.sort_by_key(|m| m[0]);
        closed
    }
}

fn check_size(geometry: RingGeometry) -> Result<()> {
    if geometry.site_count() > MAX_ENUMERATED_SITES {
        return Err(Error::StateSpaceTooLarge {
            sites: geometry.site_count(),
            limit: MAX_ENUMERATED_SITES,
        });
    }
    Ok(())
}

/// Stationary vector of an [`ExactChain`].
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// Probability of each state, indexed like [`ExactChain::states`].
    pub probabilities: Vec<f64>,
    /// `‖πP - π‖₁`.
    pub residual: f64,
    /// The closed class carrying the mass; every other state is transient.
    pub recurrent: Vec<usize>,
    /// Largest gap between the dense solve and power iteration, when both ran.
    pub cross_check: Option<f64>,
}

/// Solves `πP = π` on the unique closed class; transient states get zero.
///
/// Rings up to [`MAX_DENSE_SITES`] use a dense LU solve with one balance
/// equation replaced by normalisation, cross-checked by power iteration on
/// the lazy chain `(I + P) / 2`. Larger rings use the power iteration alone.
pub fn stationary_distribution(chain: &ExactChain) -> Result<StationaryDistribution> {
    let classes = chain.closed_classes();
    if classes.len() != 1 {
        return Err(Error::ReducibleChain {
            closed_classes: classes,
        });
    }
    let recurrent = classes.into_iter().next().expect("one class");
    let mut local = vec![usize::MAX; chain.len()];
    for (k, &i) in recurrent.iter().enumerate() {
        local[i] = k;
    }

    let power = power_iteration(chain, &recurrent, &local);
    let (class_pi, cross_check) = if chain.geometry().site_count() <= MAX_DENSE_SITES {
        let dense = dense_solve(chain, &recurrent, &local)?;
        let gap = dense
            .iter()
            .zip(&power)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        (dense, Some(gap))
    } else {
        (power, None)
    };

    let mut probabilities = vec![0.0; chain.len()];
    for (k, &i) in recurrent.iter().enumerate() {
        probabilities[i] = class_pi[k];
    }
    let residual = residual(chain, &probabilities);
    Ok(StationaryDistribution {
        probabilities,
        residual,
        recurrent,
        cross_check,
    })
}

fn dense_solve(chain: &ExactChain, recurrent: &[usize], local: &[usize]) -> Result<Vec<f64>> {
    let n = recurrent.len();
    // rows of A are the balance equations Σ_i π_i P_ij - π_j = 0
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in recurrent.iter().enumerate() {
        for &(j, p) in chain.row(i) {
            a[(local[j], k)] += p;
        }
        a[(k, k)] -= 1.0;
    }
    for k in 0..n {
        a[(n - 1, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolveFailed("singular balance system".into()))?;
    Ok(x.iter().copied().collect())
}

fn power_iteration(chain: &ExactChain, recurrent: &[usize], local: &[usize]) -> Vec<f64> {
    let n = recurrent.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERATIONS {
        next.iter_mut().zip(&pi).for_each(|(x, p)| *x = 0.5 * p);
        for (k, &i) in recurrent.iter().enumerate() {
            for &(j, p) in chain.row(i) {
                next[local[j]] += 0.5 * pi[k] * p;
            }
        }
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < POWER_TOLERANCE {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter().map(|x| x / total).collect()
}

fn residual(chain: &ExactChain, pi: &[f64]) -> f64 {
    let mut image = vec![0.0; chain.len()];
    for (i, &mass) in pi.iter().enumerate() {
        if mass != 0.0 {
            for &(j, p) in chain.row(i) {
                image[j] += mass * p;
            }
        }
    }
    image.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Outcome of an exact global-balance check.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// `max_σ |Σ_τ w(σ,τ) - Σ_τ' w(τ',σ)|`.
    pub max_violation: BigRational,
    /// A state attaining the maximum, if it is nonzero.
    pub worst_state: Option<Configuration>,
}

impl BalanceReport {
    pub fn is_balanced(&self) -> bool {
        self.max_violation.is_zero()
    }

    pub fn max_violation_f64(&self) -> f64 {
        self.max_violation.to_f64().unwrap_or(f64::NAN)
    }
}

/// Exact rational from an `f64`, for feeding floating parameters to exact checks.
pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{x} is not finite")))
}

/// Compares total outgoing and incoming weight of every state, exactly.
///
/// Without blockage (`ε = 0`) the two agree for every state.
pub fn check_global_balance(
    geometry: RingGeometry,
    particles: usize,
    omega: &BigRational,
    epsilon: &BigRational,
) -> Result<BalanceReport> {
    check_size(geometry)?;
    if !omega.is_positive() {
        return invalid("ω must be positive");
    }
    let states: Vec<Configuration> = enumerate_configurations(geometry, particles)?.collect();
    let index: HashMap<&Configuration, usize> =
        states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut outgoing = vec![BigRational::zero(); states.len()];
    let mut incoming = vec![BigRational::zero(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for (t, _) in reachable_successors(s) {
            let w = transition_weight(s, &t, omega, epsilon);
            outgoing[i] += w.clone();
            incoming[index[&t]] += w;
        }
    }
    let mut report = BalanceReport {
        max_violation: BigRational::zero(),
        worst_state: None,
    };
    for (i, s) in states.iter().enumerate() {
        let v = (&outgoing[i] - &incoming[i]).abs();
        if v > report.max_violation {
            report.max_violation = v;
            report.worst_state = Some(s.clone());
        }
    }
    Ok(report)
}

/// Checks the pairing behind global balance at one state.
///
/// For every subset `S` of trains, advancing the engines of `S` gives a
/// successor with weight `ω^|S|`, and detaching the cabooses of `S` gives a
/// predecessor that reaches `σ` with the same weight. Returns true when the
/// caboose images are distinct, are exactly the predecessors of `σ`, and
/// every pair carries equal weight.
pub fn caboose_bijection_check(config: &Configuration, omega: &BigRational) -> bool {
    let trains = config.trains().trains;
    if trains.len() >= 32 {
        return false;
    }
    let n = config.site_count();
    let zero = BigRational::zero();
    let mut images = HashMap::new();
    for subset in 0u64..1 << trains.len() {
        let mut advanced = config.clone();
        let mut detached = config.clone();
        for (k, t) in trains.iter().enumerate() {
            if subset >> k & 1 == 1 {
                advanced.set(t.engine, false);
                advanced.set((t.engine + 1) % n, true);
                detached.set(t.caboose, false);
                detached.set((t.caboose + n - 1) % n, true);
            }
        }
        let forward = transition_weight(config, &advanced, omega, &zero);
        let backward = transition_weight(&detached, config, omega, &zero);
        let expected = num_traits::pow(omega.clone(), subset.count_ones() as usize);
        if forward != expected || backward != expected {
            return false;
        }
        if images.insert(detached, ()).is_some() {
            return false;
        }
    }
    // every predecessor of σ must be one of the caboose images
    let geometry = config.geometry();
    let all = match enumerate_configurations(geometry, config.particle_count()) {
        Ok(it) => it,
        Err(_) => return false,
    };
    let one = BigRational::one();
    let predecessors = all
        .filter(|t| !transition_weight(t, config, &one, &zero).is_zero())
        .count();
    predecessors == images.len()
}

/// Largest `|π(σ) - (1+ω)^{l(σ)} / W|` over all states, with `π` from the solver.
pub fn verify_weight_stationarity(
    geometry: RingGeometry,
    particles: usize,
    omega: f64,
) -> Result<f64> {
    let params = KernelParams::from_omega(omega, 0.0)?;
    let chain = ExactChain::build(geometry, particles, params)?;
    let pi = stationary_distribution(&chain)?;
    let weights: Vec<f64> = chain
        .states()
        .iter()
        .map(|s| (1.0 + omega).powi(s.engine_count() as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(pi
        .probabilities
        .iter()
        .zip(&weights)
        .fold(0.0f64, |acc, (p, w)| acc.max((p - w / total).abs())))
}

/// Recurrent class of the half-filled rule-184 chain with blockage `ε`.
pub fn recurrent_support_rule184(
    geometry: RingGeometry,
    epsilon: f64,
) -> Result<Vec<Configuration>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("ε must lie in (0, 1), got {epsilon}"));
    }
    let chain = ExactChain::build(
        geometry,
        geometry.half_size(),
        KernelParams::rule184(epsilon)?,
    )?;
    let classes = chain.closed_classes();
    if classes.len() != 1 {
        return Err(Error::ReducibleChain {
            closed_classes: classes,
        });
    }
    Ok(classes[0]
        .iter()
        .map(|&i| chain.states()[i].clone())
        .collect())
}

/// Stationary expectations behind the current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCurrent {
    /// `E_π[l(σ)] / 2L`.
    pub engine_fraction: f64,
    /// `E_π[r(σ)] / L`, with `r` the particle count of the first half.
    pub first_half_fraction: f64,
    /// Expected engines in the second half, over `L`. Equals the first-half
    /// fraction except for a boundary term when the last site holds an engine.
    pub second_half_engine_fraction: f64,
}

pub fn exact_current(chain: &ExactChain, pi: &StationaryDistribution) -> ExactCurrent {
    let two_l = chain.geometry().site_count() as f64;
    let l = chain.geometry().half_size() as f64;
    let mut acc = ExactCurrent {
        engine_fraction: 0.0,
        first_half_fraction: 0.0,
        second_half_engine_fraction: 0.0,
    };
    for (s, &p) in chain.states().iter().zip(&pi.probabilities) {
        if p == 0.0 {
            continue;
        }
        acc.engine_fraction += p * s.engine_count() as f64 / two_l;
        acc.first_half_fraction += p * s.first_half_count() as f64 / l;
        acc.second_half_engine_fraction += p * s.second_half_engine_count() as f64 / l;
    }
    acc
}

/// Comparison of the rule-184 stationary law with the product weights
/// `(1-ε)^r ε^{L-2r}` on recurrent states whose first site is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFormReport {
    pub states_compared: usize,
    /// Largest gap after normalising both over the compared states.
    pub max_abs_discrepancy: f64,
}

pub fn product_form_discrepancy(geometry: RingGeometry, epsilon: f64) -> Result<ProductFormReport> {
    let chain = ExactChain::build(
        geometry,
        geometry.half_size(),
        KernelParams::rule184(epsilon)?,
    )?;
    let pi = stationary_distribution(&chain)?;
    let l = geometry.half_size();
    let compared: Vec<(f64, f64)> = pi
        .recurrent
        .iter()
        .filter(|&&i| !chain.states()[i].get(0))
        .map(|&i| {
            let s = &chain.states()[i];
            product_form_weight(s.first_half_count(), l, epsilon).map(|w| (pi.probabilities[i], w))
        })
        .collect::<Result<_>>()?;
    let (mass, weight): (f64, f64) = compared
        .iter()
        .fold((0.0, 0.0), |(a, b), (p, w)| (a + p, b + w));
    let max_abs_discrepancy = compared
        .iter()
        .map(|(p, w)| (p / mass - w / weight).abs())
        .fold(0.0, f64::max);
    Ok(ProductFormReport {
        states_compared: compared.len(),
        max_abs_discrepancy,
    })
}

/// `ω` as an exact fraction `num / den`.
pub fn rational_omega(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BlockageSemantics;

    fn g(half: usize) -> RingGeometry {
        RingGeometry::new(half).unwrap()
    }

    fn cfg(s: &str) -> Configuration {
        Configuration::parse(s).unwrap()
    }

    #[test]
    fn small_chain_is_stochastic() {
        let chain =
            ExactChain::build(g(2), 2, KernelParams::from_omega(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(chain.len(), 6);
        for i in 0..6 {
            let s: f64 = chain.row(i).iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rule184_row_has_blockage_coin() {
        let eps = 0.3;
        let chain = ExactChain::build(g(2), 2, KernelParams::rule184(eps).unwrap()).unwrap();
        let i = chain.index_of(&cfg("0101")).unwrap();
        let pass = chain.index_of(&cfg("1010")).unwrap();
        let block = chain.index_of(&cfg("0011")).unwrap();
        assert_eq!(chain.row(i).len(), 2);
        assert!((chain.probability(i, pass) - (1.0 - eps)).abs() < 1e-15);
        assert!((chain.probability(i, block) - eps).abs() < 1e-15);
        for k in 0..chain.len() {
            assert!(chain.row(k).len() <= 2);
        }
    }

    #[test]
    fn full_ring_is_identity() {
        let chain =
            ExactChain::build(g(2), 4, KernelParams::from_omega(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.dense_matrix(), DMatrix::identity(1, 1));
        let pi = stationary_distribution(&chain).unwrap();
        assert_eq!(pi.probabilities, vec![1.0]);
        assert_eq!(pi.recurrent, vec![0]);
    }

    #[test]
    fn size_guard() {
        let err = ExactChain::build(g(15), 15, KernelParams::from_omega(1.0, 0.0).unwrap());
        assert!(matches!(
            err,
            Err(Error::StateSpaceTooLarge { sites: 30, .. })
        ));
    }

    #[test]
    fn global_balance_exact() {
        let zero = BigRational::zero();
        let r = check_global_balance(g(3), 3, &rational_omega(1, 1), &zero).unwrap();
        assert!(r.is_balanced());
        let r = check_global_balance(g(2), 2, &rational_omega(2, 1), &zero).unwrap();
        assert!(r.is_balanced());
        let half = rational_omega(1, 2);
        let r = check_global_balance(g(2), 2, &rational_omega(1, 1), &half).unwrap();
        assert!(!r.is_balanced());
        assert!(r.max_violation_f64() > 0.0);
        assert!(r.worst_state.is_some());
    }

    #[test]
    fn caboose_pairing() {
        let w = rational_omega(3, 2);
        assert!(caboose_bijection_check(&cfg("1100"), &w));
        assert!(caboose_bijection_check(&cfg("1010"), &w));
        assert!(caboose_bijection_check(&cfg("1111"), &w));
        for half in 2..=5 {
            for m in 0..=2 * half {
                for c in enumerate_configurations(g(half), m).unwrap() {
                    assert!(caboose_bijection_check(&c, &w), "{c}");
                }
            }
        }
    }

    #[test]
    fn stationary_matches_weights_example() {
        let chain =
            ExactChain::build(g(3), 3, KernelParams::from_omega(1.0, 0.0).unwrap()).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        let single = chain.index_of(&cfg("111000")).unwrap();
        assert!((pi.probabilities[single] - 2.0 / 76.0).abs() < 1e-12);
        assert!(pi.residual < 1e-10);
        assert!(pi.cross_check.unwrap() < 1e-10);
        let cur = exact_current(&chain, &pi);
        assert!((cur.engine_fraction - 13.0 / 38.0).abs() < 1e-12);
    }

    #[test]
    fn rule184_three_state_solve() {
        let eps = 0.3;
        let chain = ExactChain::build(g(2), 2, KernelParams::rule184(eps).unwrap()).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        let a = (1.0 - eps) / (2.0 - eps);
        let c = eps / (2.0 - eps);
        for (s, expect) in [("1010", a), ("0101", a), ("0011", c)] {
            let i = chain.index_of(&cfg(s)).unwrap();
            assert!((pi.probabilities[i] - expect).abs() < 1e-12, "{s}");
        }
        let rest: f64 = ["1100", "1001", "0110"]
            .iter()
            .map(|s| pi.probabilities[chain.index_of(&cfg(s)).unwrap()])
            .sum();
        assert_eq!(rest, 0.0);
        let cur = exact_current(&chain, &pi);
        assert!((cur.first_half_fraction - a).abs() < 1e-12);

        let chain = ExactChain::build(g(2), 2, KernelParams::rule184(0.5).unwrap()).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        for s in ["1010", "0101", "0011"] {
            let i = chain.index_of(&cfg(s)).unwrap();
            assert!((pi.probabilities[i] - 1.0 / 3.0).abs() < 1e-12, "{s}");
        }
        let cur = exact_current(&chain, &pi);
        assert!((cur.first_half_fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn first_half_fraction_is_exact_on_small_rings() {
        for half in 2..=4 {
            for k in 1..=9 {
                let eps = k as f64 / 10.0;
                let chain =
                    ExactChain::build(g(half), half, KernelParams::rule184(eps).unwrap()).unwrap();
                let pi = stationary_distribution(&chain).unwrap();
                let cur = exact_current(&chain, &pi);
                let expect = (1.0 - eps) / (2.0 - eps);
                assert!(
                    (cur.first_half_fraction - expect).abs() <= 1e-10,
                    "L={half} ε={eps}"
                );
                assert!((cur.second_half_engine_fraction - expect).abs() <= 1.0 / half as f64);
            }
        }
    }

    #[test]
    fn rule184_without_blockage_runs_free() {
        let chain = ExactChain::build(g(2), 2, KernelParams::rule184(0.0).unwrap()).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        assert_eq!(pi.recurrent.len(), 2);
        assert!((exact_current(&chain, &pi).engine_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_chain_reports_classes() {
        // two particles on six sites under rule 184: the gap pattern is conserved
        let chain = ExactChain::build(g(3), 2, KernelParams::rule184(0.0).unwrap()).unwrap();
        match stationary_distribution(&chain) {
            Err(Error::ReducibleChain { closed_classes }) => assert!(closed_classes.len() > 1),
            other => panic!("expected reducible chain, got {other:?}"),
        }
    }

    #[test]
    fn weight_stationarity_examples() {
        assert!(verify_weight_stationarity(g(3), 3, 1.0).unwrap() <= 1e-10);
        assert!(verify_weight_stationarity(g(4), 4, 3.0).unwrap() <= 1e-10);
        assert!(verify_weight_stationarity(g(3), 2, 1.0).unwrap() <= 1e-10);
    }

    #[test]
    fn weights_and_balance_exhaustive() {
        for half in 2..=6 {
            for m in 0..=half {
                for (num, den) in [(1, 2), (1, 1), (2, 1)] {
                    let omega = num as f64 / den as f64;
                    assert!(verify_weight_stationarity(g(half), m, omega).unwrap() <= 1e-10);
                    let r = check_global_balance(
                        g(half),
                        m,
                        &rational_omega(num, den),
                        &BigRational::zero(),
                    )
                    .unwrap();
                    assert!(r.is_balanced(), "L={half} m={m} ω={omega}");
                }
            }
        }
    }

    #[test]
    fn power_iteration_path_for_larger_rings() {
        let chain =
            ExactChain::build(g(7), 7, KernelParams::from_omega(2.0, 0.0).unwrap()).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        assert!(pi.cross_check.is_none());
        assert!(pi.residual < 1e-10);
        let exact = crate::analytic::current_finite_l(7, 2.0).unwrap();
        assert!((exact_current(&chain, &pi).engine_fraction - exact).abs() < 1e-10);
    }

    #[test]
    fn recurrent_support_small() {
        let support = recurrent_support_rule184(g(2), 0.5).unwrap();
        let mut names: Vec<String> = support.iter().map(|c| c.to_string()).collect();
        names.sort();
        assert_eq!(names, ["0011", "0101", "1010"]);
        for half in 2..=4 {
            let s = recurrent_support_rule184(g(half), 0.3).unwrap();
            assert!(s.iter().all(|c| c.is_in_omega_inf()));
            assert!(s.contains(&Configuration::queue(g(half))));
        }
        assert!(recurrent_support_rule184(g(2), 0.0).is_err());
    }

    #[test]
    fn semantics_coincide_without_blockage() {
        let b = KernelParams::from_omega(10.0, 0.0).unwrap();
        let r = b.with_semantics(BlockageSemantics::RenormalizedWeight);
        let cb = ExactChain::build(g(3), 3, b).unwrap();
        let cr = ExactChain::build(g(3), 3, r).unwrap();
        assert!(cb.max_abs_difference(&cr).unwrap() <= 1e-12);
    }

    #[test]
    fn product_form_is_reported() {
        let r = product_form_discrepancy(g(2), 0.5).unwrap();
        assert_eq!(r.states_compared, 2);
        // π(0101) : π(0011) = 1 : 1 against (1-ε) : ε² = 2 : 1
        assert!((r.max_abs_discrepancy - 1.0 / 6.0).abs() < 1e-12);
        for half in 3..=5 {
            let r = product_form_discrepancy(g(half), 0.3).unwrap();
            assert!(r.states_compared > 0);
            assert!(r.max_abs_discrepancy.is_finite());
        }
    }
}
