//! Closed-form currents, finite-L sums and their saddle-point maximisers.
//!
//! Finite sums are evaluated in log space: `(1 + ω)^l` and the binomials
//! overflow `f64` long before `L = 500`.

use num_traits::ToPrimitive;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::lattice::{binomial, train_count_table};

/// Binomials up to this `n` are computed exactly; above it through `ln Γ`.
const EXACT_BINOMIAL_MAX: usize = 30;

/// Argument tolerance of the golden-section search.
pub const SEARCH_TOLERANCE: f64 = 1e-9;

/// Maximiser of a one-dimensional objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleResult {
    pub argmax: f64,
    pub value: f64,
    /// Width of the final bracket around `argmax`.
    pub tolerance: f64,
}

/// Stable `ln Σ exp(x_i)`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln C(n, k)`; `-∞` when the binomial vanishes.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n <= EXACT_BINOMIAL_MAX {
        return binomial(n as i64, k as i64)
            .to_f64()
            .expect("small binomial fits in f64")
            .ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln n(l)` for a half-filled ring of `2L` sites.
///
/// Small rings use the exact train count. Larger ones use the equivalent
/// product `n(l) = 2 C(L, l) C(L-1, l-1)`, which follows from summing the
/// train-placement series with the hockey-stick identity.
pub fn ln_train_count(half_size: usize, trains: usize) -> f64 {
    if half_size <= EXACT_BINOMIAL_MAX {
        let n = train_count_table(half_size, trains).expect("arguments in range");
        return n.to_f64().expect("fits in f64").ln();
    }
    std::f64::consts::LN_2 + ln_binomial(half_size, trains) + ln_binomial(half_size - 1, trains - 1)
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || omega.is_infinite() {
        return invalid(format!("ω must be positive and finite, got {omega}"));
    }
    Ok(())
}

fn check_open_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("ε must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// Stationary current of the parallel TASEP without blockage,
/// `J(ω) = ½ √(1+ω) / (1 + √(1+ω))`.
pub fn current_closed_form(omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return invalid(format!("ω must be positive, got {omega}"));
    }
    if omega.is_infinite() {
        return Ok(0.5);
    }
    let s = (1.0 + omega).sqrt();
    Ok(0.5 * s / (1.0 + s))
}

/// Rule-184 current with a blockage of intensity `ε`: `(1 - ε) / (2 - ε)`.
pub fn blockage_current_closed_form(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("ε must lie in [0, 1], got {epsilon}"));
    }
    Ok((1.0 - epsilon) / (2.0 - epsilon))
}

/// Expected engine fraction `E[l] / 2L` under `π ∝ (1+ω)^l` on the half-filled ring.
pub fn current_finite_l(half_size: usize, omega: f64) -> Result<f64> {
    if half_size < 2 {
        return invalid(format!("L must be at least 2, got {half_size}"));
    }
    check_omega(omega)?;
    let log_growth = omega.ln_1p();
    let log_terms: Vec<f64> = (1..=half_size)
        .map(|l| ln_train_count(half_size, l) + l as f64 * log_growth)
        .collect();
    let log_weighted: Vec<f64> = log_terms
        .iter()
        .enumerate()
        .map(|(i, t)| t + ((i + 1) as f64).ln())
        .collect();
    let mean_trains = (log_sum_exp(&log_weighted) - log_sum_exp(&log_terms)).exp();
    Ok(mean_trains / (2 * half_size) as f64)
}

/// `x ln x` with the continuous extension `0 ln 0 = 0`.
fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy `I(α) = -α ln α - (1-α) ln(1-α)`.
pub fn entropy(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("α must lie in [0, 1], got {alpha}"));
    }
    Ok(-x_ln_x(alpha) - x_ln_x(1.0 - alpha))
}

/// Exponent of the train-count sum:
/// `f(α, α1) = (1-α1) I(α / (1-α1)) + I(α) + α ln(1+ω)`.
pub fn saddle_objective_f(alpha: f64, alpha1: f64, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0 - alpha).contains(&alpha1) {
        return invalid(format!(
            "need 0 <= α <= 1 and 0 <= α1 <= 1 - α, got α = {alpha}, α1 = {alpha1}"
        ));
    }
    let rest = 1.0 - alpha1;
    let first = if rest == 0.0 {
        0.0
    } else {
        rest * entropy((alpha / rest).min(1.0))?
    };
    Ok(first + entropy(alpha)? + alpha * omega.ln_1p())
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> SaddleResult {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let argmax = 0.5 * (lo + hi);
    SaddleResult {
        argmax,
        value: f(argmax),
        tolerance: hi - lo,
    }
}

/// Maximiser of `f(α, 0)` over `α ∈ [0, 1]`; `f` decreases in `α1`, so `α1 = 0`.
/// The argmax is `√(1+ω) / (1 + √(1+ω))` and the current is half of it.
pub fn maximize_saddle_f(omega: f64) -> Result<SaddleResult> {
    check_omega(omega)?;
    let f = |a: f64| saddle_objective_f(a, 0.0, omega).expect("α in [0, 1]");
    Ok(golden_section_max(f, 0.0, 1.0, SEARCH_TOLERANCE))
}

/// Exponent of the blockage sum in `x = r / L`:
/// `(1-2x) ln ε + x ln(1-ε) - x ln(x/(1-x)) - (1-2x) ln((1-2x)/(1-x))`.
pub fn blockage_saddle_objective(x: f64, epsilon: f64) -> Result<f64> {
    check_open_epsilon(epsilon)?;
    if !(0.0..=0.5).contains(&x) {
        return invalid(format!("x must lie in [0, 1/2], got {x}"));
    }
    let hole = 1.0 - x;
    let free = (1.0 - 2.0 * x).max(0.0);
    Ok(free * epsilon.ln() + x * (-epsilon).ln_1p()
        - (x_ln_x(x) - x * hole.ln())
        - (x_ln_x(free) - free * hole.ln()))
}

/// Maximiser of [`blockage_saddle_objective`] on `[0, 1/2]`, equal to `(1-ε)/(2-ε)`.
pub fn maximize_blockage_saddle(epsilon: f64) -> Result<SaddleResult> {
    check_open_epsilon(epsilon)?;
    let f = |x: f64| blockage_saddle_objective(x, epsilon).expect("x in [0, 1/2]");
    Ok(golden_section_max(f, 0.0, 0.5, SEARCH_TOLERANCE))
}

/// `R / L` with `R = Σ r C(L-r, r)(1-ε)^r ε^{L-2r} / Σ C(L-r, r)(1-ε)^r ε^{L-2r}`,
/// summed over `1 <= r <= ⌊L/2⌋`.
pub fn blockage_r_finite_l(half_size: usize, epsilon: f64) -> Result<f64> {
    if half_size < 2 {
        return invalid(format!("L must be at least 2, got {half_size}"));
    }
    check_open_epsilon(epsilon)?;
    let (ln_pass, ln_eps) = ((-epsilon).ln_1p(), epsilon.ln());
    let rs: Vec<usize> = (1..=half_size / 2).collect();
    let log_terms: Vec<f64> = rs
        .iter()
        .map(|&r| {
            ln_binomial(half_size - r, r) + r as f64 * ln_pass + (half_size - 2 * r) as f64 * ln_eps
        })
        .collect();
    let log_weighted: Vec<f64> = rs
        .iter()
        .zip(&log_terms)
        .map(|(&r, t)| t + (r as f64).ln())
        .collect();
    let mean_r = (log_sum_exp(&log_weighted) - log_sum_exp(&log_terms)).exp();
    Ok(mean_r / half_size as f64)
}

/// Unnormalised product-form weight `(1-ε)^r ε^{L-2r}` of a recurrent
/// rule-184 state with `r` particles in the first half and an empty first site.
pub fn product_form_weight(r: usize, half_size: usize, epsilon: f64) -> Result<f64> {
    check_open_epsilon(epsilon)?;
    if 2 * r > half_size {
        return invalid(format!("need 2r <= L, got r = {r}, L = {half_size}"));
    }
    Ok((1.0 - epsilon).powi(r as i32) * epsilon.powi((half_size - 2 * r) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn current_limits() {
        assert!(close(current_closed_form(1e-12).unwrap(), 0.25, 1e-12));
        assert!(close(current_closed_form(3.0).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(current_closed_form(1e12).unwrap(), 0.5, 1e-6));
        assert!(current_closed_form(0.0).is_err());
        assert!(current_closed_form(-1.0).is_err());
    }

    #[test]
    fn blockage_current_values() {
        assert_eq!(blockage_current_closed_form(0.0).unwrap(), 0.5);
        assert!(close(
            blockage_current_closed_form(0.5).unwrap(),
            1.0 / 3.0,
            1e-15
        ));
        assert_eq!(blockage_current_closed_form(1.0).unwrap(), 0.0);
        assert!(blockage_current_closed_form(1.5).is_err());
    }

    #[test]
    fn monotonicity_of_closed_forms() {
        let omegas = [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0];
        for w in omegas.windows(2) {
            assert!(current_closed_form(w[0]).unwrap() < current_closed_form(w[1]).unwrap());
        }
        for k in 0..20 {
            let (a, b) = (k as f64 / 20.0, (k + 1) as f64 / 20.0);
            assert!(
                blockage_current_closed_form(a).unwrap() > blockage_current_closed_form(b).unwrap()
            );
        }
    }

    #[test]
    fn finite_l_small_rings() {
        // n(1) = 6, n(2) = 12, n(3) = 2 at ω = 1: (6·2 + 2·12·4 + 3·2·8) / (6·(6·2 + 12·4 + 2·8))
        assert!(close(current_finite_l(3, 1.0).unwrap(), 13.0 / 38.0, 1e-14));
        // uniform measure over the 6 configurations of 2L = 4
        assert!(close(current_finite_l(2, 1e-12).unwrap(), 1.0 / 3.0, 1e-10));
        assert!(close(current_finite_l(500, 3.0).unwrap(), 1.0 / 3.0, 0.01));
        assert!(current_finite_l(1, 1.0).is_err());
        assert!(current_finite_l(3, 0.0).is_err());
    }

    #[test]
    fn product_train_count_matches_series() {
        // The log-gamma path uses 2 C(L, l) C(L-1, l-1); check it against the series exactly.
        for half in 1..=60usize {
            for l in 1..=half {
                let series = train_count_table(half, l).unwrap();
                let product = BigUint::from(2u32)
                    * binomial(half as i64, l as i64)
                    * binomial(half as i64 - 1, l as i64 - 1);
                assert_eq!(series, product, "L={half} l={l}");
            }
        }
        // the two evaluation paths agree across the switch-over
        for l in [1, 2, 10, 31] {
            let exact = train_count_table(31, l).unwrap().to_f64().unwrap().ln();
            assert!(close(ln_train_count(31, l), exact, 1e-9));
        }
    }

    #[test]
    fn finite_l_converges_with_decreasing_gap() {
        for omega in [0.5, 1.0, 3.0, 10.0] {
            let target = current_closed_form(omega).unwrap();
            let gaps: Vec<f64> = [50, 100, 200, 400]
                .iter()
                .map(|&l| (current_finite_l(l, omega).unwrap() - target).abs())
                .collect();
            assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
            assert!(gaps[3] < 0.01);
        }
    }

    #[test]
    fn entropy_values() {
        assert!(close(entropy(0.5).unwrap(), std::f64::consts::LN_2, 1e-15));
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        assert!(entropy(1.1).is_err());
        // (1/n) ln C(n, n/4) approaches I(1/4) with an O(ln n / n) gap
        let n = 10_000;
        let approx = ln_binomial(n, n / 4) / n as f64;
        let i = entropy(0.25).unwrap();
        assert!(close(i, 0.562_335_144_618_808_6, 1e-12));
        assert!(close(approx, i, 1e-3));
        for k in 0..=100 {
            let a = k as f64 / 100.0;
            assert!(close(entropy(a).unwrap(), entropy(1.0 - a).unwrap(), 1e-15));
            assert!(entropy(a).unwrap() <= std::f64::consts::LN_2);
        }
    }

    #[test]
    fn saddle_argmax() {
        for omega in [1e-9f64, 0.1, 1.0, 3.0, 10.0, 100.0] {
            let s = (1.0 + omega).sqrt();
            let r = maximize_saddle_f(omega).unwrap();
            assert!(close(r.argmax, s / (1.0 + s), 1e-6), "ω={omega}: {r:?}");
        }
        assert!(close(
            maximize_saddle_f(3.0).unwrap().argmax,
            2.0 / 3.0,
            1e-6
        ));
    }

    #[test]
    fn saddle_decreases_in_alpha1() {
        assert!(
            saddle_objective_f(0.3, 0.2, 1.0).unwrap() < saddle_objective_f(0.3, 0.1, 1.0).unwrap()
        );
        assert!(saddle_objective_f(0.6, 0.5, 1.0).is_err());
        assert!(saddle_objective_f(0.3, 0.1, 0.0).is_err());
    }

    #[test]
    fn blockage_saddle_argmax() {
        assert!(close(
            maximize_blockage_saddle(0.5).unwrap().argmax,
            1.0 / 3.0,
            1e-6
        ));
        assert!(close(
            maximize_blockage_saddle(0.9).unwrap().argmax,
            1.0 / 11.0,
            1e-6
        ));
        for k in 1..=9 {
            let eps = k as f64 / 10.0;
            let r = maximize_blockage_saddle(eps).unwrap();
            assert!(close(r.argmax, (1.0 - eps) / (2.0 - eps), 1e-6), "ε={eps}");
        }
        assert!(maximize_blockage_saddle(0.0).is_err());
        assert!(blockage_saddle_objective(0.6, 0.5).is_err());
    }

    #[test]
    fn blockage_objective_single_interior_maximum() {
        let eps = 0.3;
        let values: Vec<f64> = (1..500)
            .map(|k| blockage_saddle_objective(k as f64 / 1000.0, eps).unwrap())
            .collect();
        assert!(values.iter().all(|v| v.is_finite()));
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(peak > 0 && peak < values.len() - 1);
        assert!(values[..=peak].windows(2).all(|w| w[1] > w[0]));
        assert!(values[peak..].windows(2).all(|w| w[1] < w[0]));
        // second differences are negative on the grid
        assert!(values.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] < 0.0));
    }

    #[test]
    fn blockage_r_values() {
        assert!(close(
            blockage_r_finite_l(500, 0.5).unwrap(),
            1.0 / 3.0,
            0.01
        ));
        assert!(close(blockage_r_finite_l(2, 0.5).unwrap(), 0.5, 1e-15));
        assert!(blockage_r_finite_l(100, 0.2).unwrap() > blockage_r_finite_l(100, 0.8).unwrap());
        assert!(blockage_r_finite_l(1, 0.5).is_err());
        assert!(blockage_r_finite_l(10, 1.0).is_err());
    }

    #[test]
    fn blockage_r_converges_with_decreasing_gap() {
        for eps in [0.1, 0.3, 0.5, 0.8] {
            let target = blockage_current_closed_form(eps).unwrap();
            let gaps: Vec<f64> = [50, 100, 200, 400]
                .iter()
                .map(|&l| (blockage_r_finite_l(l, eps).unwrap() - target).abs())
                .collect();
            assert!(gaps.windows(2).all(|g| g[1] < g[0]), "ε={eps}: {gaps:?}");
            assert!(gaps[3] < 0.01);
        }
    }

    #[test]
    fn product_form_values() {
        assert!(close(
            product_form_weight(0, 4, 0.5).unwrap(),
            0.0625,
            1e-15
        ));
        assert!(close(product_form_weight(2, 4, 0.5).unwrap(), 0.25, 1e-15));
        assert!(close(product_form_weight(1, 3, 0.2).unwrap(), 0.16, 1e-15));
        assert!(product_form_weight(3, 4, 0.5).is_err());
        assert!(product_form_weight(1, 4, 0.0).is_err());
    }

    #[test]
    fn log_sum_exp_handles_large_and_empty() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!(close(
            log_sum_exp(&[1000.0, 1000.0]),
            1000.0 + std::f64::consts::LN_2,
            1e-12
        ));
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
    }
}
