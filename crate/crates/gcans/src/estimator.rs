//! Shot allocation across Pauli terms and the parameter-shift stochastic
//! gradient estimator.
//!
//! Estimating `⟨A⟩ = Σ_k c_k ⟨P_k⟩` with a finite shot budget requires
//! distributing shots over the terms. Three strategies are provided:
//!
//! * uniform deterministic: an even split;
//! * weighted deterministic (WDS): `s_k = ⌊s_tot·|c_k|/Σ|c_i|⌋` with
//!   leftover shots assigned one each in decreasing-`|c_k|` order;
//! * weighted random (WRS): term assignments drawn per shot with
//!   probability `|c_k|/Σ|c_i|`, so counts are multinomial and the
//!   estimator is unbiased for any shot count, including a single shot.
//!
//! WRS is the default everywhere; the optimizers rely on its unbiasedness.
//!
//! [`ievaluate`] estimates the gradient through the parameter-shift rule:
//! component `i` is sampled as the paired difference
//! `X_ij = (A⁺_ij − A⁻_ij)/2` of single-shot estimates at `θ ± (π/2)·e_i`,
//! the `j`-th plus shot pairing with the `j`-th minus shot. It reports the
//! quantities the adaptive optimizers consume: the sample mean, the
//! unbiased sample standard deviation of the single-shot values, and the
//! shots spent.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::pauli::Observable;
use crate::sim::{self, AnsatzCircuit, StateVector};

/// How shots are distributed over the Pauli terms of an observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllocationStrategy {
    UniformDeterministic,
    WeightedDeterministic,
    #[default]
    WeightedRandom,
}

/// Result of one stochastic gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate<T> {
    /// Estimated partial derivatives.
    pub g: Vec<T>,
    /// Unbiased sample standard deviation of the single-shot values `X_i`.
    pub sigma_hat: Vec<T>,
    /// Shots spent per component (per side of the parameter shift).
    pub shots: Vec<u64>,
}

impl<T: Float> GradientEstimate<T> {
    /// Total shots consumed: both shifted expectations cost `s_i` each.
    /// Saturates rather than overflowing for absurd ledgers.
    pub fn total_shots(&self) -> u64 {
        self.shots
            .iter()
            .fold(0u64, |acc, &s| acc.saturating_add(s))
            .saturating_mul(2)
    }

    pub fn grad_norm(&self) -> T {
        self.g.iter().map(|&x| x * x).sum::<T>().sqrt()
    }
}

fn weights_of<T: Float>(coefficients: &[T]) -> Result<Vec<f64>> {
    if coefficients.is_empty() {
        return Err(Error::ZeroWeights);
    }
    let weights: Vec<f64> = coefficients
        .iter()
        .map(|c| c.abs().to_f64().unwrap_or(0.0))
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    Ok(weights)
}

/// Even deterministic split of `s_tot` over `terms` categories; leftover
/// shots go one each to the lowest indices.
pub fn allocate_uniform(terms: usize, s_tot: u64) -> Result<Vec<u64>> {
    if terms == 0 {
        return Err(Error::ZeroWeights);
    }
    let base = s_tot / terms as u64;
    let extra = (s_tot % terms as u64) as usize;
    Ok((0..terms).map(|k| base + u64::from(k < extra)).collect())
}

/// Weighted deterministic sampling: `s_k = ⌊s_tot·|c_k|/Σ|c_i|⌋`, with the
/// shots lost to flooring reassigned one each by decreasing `|c_k|` (ties
/// broken toward the lower index).
pub fn allocate_wds<T: Float>(coefficients: &[T], s_tot: u64) -> Result<Vec<u64>> {
    let weights = weights_of(coefficients)?;
    let total: f64 = weights.iter().sum();
    // Ratios that are exact in ℝ must not lose a shot to f64 rounding, so
    // the floor is taken with a few-ulp relative headroom.
    let bump = 1.0 + 8.0 * f64::EPSILON;
    let mut shots: Vec<u64> = weights
        .iter()
        .map(|w| (s_tot as f64 * (w / total) * bump).floor() as u64)
        .collect();
    let assigned: u64 = shots.iter().sum();
    debug_assert!(assigned <= s_tot);
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    // The flooring deficit is strictly less than the term count.
    for k in 0..(s_tot - assigned) as usize {
        shots[order[k]] += 1;
    }
    Ok(shots)
}

/// Weighted random sampling: multinomial counts with
/// `p_k = |c_k|/Σ|c_i|`, summing to `s_tot`.
pub fn allocate_wrs<T: Float, R: Rng + ?Sized>(
    coefficients: &[T],
    s_tot: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let weights = weights_of(coefficients)?;
    let total: f64 = weights.iter().sum();
    let last_positive = weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("weight sum is positive");
    // Conditional-binomial decomposition of the multinomial; whatever is
    // left at the final positive weight goes there outright, so zero-weight
    // terms can never receive a shot.
    let mut shots = vec![0u64; weights.len()];
    let mut remaining = s_tot;
    let mut weight_left = total;
    for (k, &w) in weights.iter().enumerate().take(last_positive + 1) {
        if remaining == 0 {
            break;
        }
        if k == last_positive {
            shots[k] = remaining;
            break;
        }
        let p = (w / weight_left).min(1.0);
        let draw = Binomial::new(remaining, p)
            .expect("probability in [0, 1]")
            .sample(rng);
        shots[k] = draw;
        remaining -= draw;
        weight_left -= w;
    }
    Ok(shots)
}

/// Per-shot values whose mean estimates `⟨A⟩` on `state`.
///
/// WRS shots carry `v_j = one_norm·sgn(c_k(j))·m_j` for a term `k(j)` drawn
/// with probability `|c_k|/Σ|c_i|` and outcome `m_j = ±1`; the mean is
/// unbiased for any `s_tot ≥ 1`. Deterministic strategies return per-shot
/// contributions scaled so the mean equals `Σ_k c_k·(sample mean of term
/// k)`, and reject allocations that leave a term with no shots.
pub fn estimate_expectation<T: Float, R: Rng + ?Sized>(
    state: &StateVector<T>,
    obs: &Observable<T>,
    s_tot: u64,
    strategy: AllocationStrategy,
    rng: &mut R,
) -> Result<(T, Vec<T>)> {
    if s_tot == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let expectations: Vec<T> = obs
        .terms()
        .iter()
        .map(|(_, p)| sim::exact_pauli_expectation(state, p))
        .collect::<Result<_>>()?;
    let values = match strategy {
        AllocationStrategy::WeightedRandom => {
            let weights = weights_of(&obs.terms().iter().map(|(c, _)| *c).collect::<Vec<_>>())?;
            let index = WeightedIndex::new(&weights).map_err(|_| Error::ZeroWeights)?;
            let one_norm = obs.one_norm();
            let mut values = Vec::with_capacity(s_tot as usize);
            for _ in 0..s_tot {
                let k = index.sample(rng);
                let sign = if obs.terms()[k].0 >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let m = sim::sample_outcomes(expectations[k], 1, rng)[0];
                values.push(one_norm * sign * T::cast(m as f64));
            }
            values
        }
        AllocationStrategy::WeightedDeterministic | AllocationStrategy::UniformDeterministic => {
            let coeffs: Vec<T> = obs.terms().iter().map(|(c, _)| *c).collect();
            let shots = match strategy {
                AllocationStrategy::WeightedDeterministic => allocate_wds(&coeffs, s_tot)?,
                _ => allocate_uniform(coeffs.len(), s_tot)?,
            };
            if let Some(term) = shots.iter().position(|&s| s == 0) {
                return Err(Error::StarvedTerm {
                    term,
                    shots: s_tot,
                    terms: coeffs.len(),
                });
            }
            let mut values = Vec::with_capacity(s_tot as usize);
            for (k, &s_k) in shots.iter().enumerate() {
                let scale = coeffs[k] * T::from_u64(s_tot).unwrap() / T::from_u64(s_k).unwrap();
                for m in sim::sample_outcomes(expectations[k], s_k, rng) {
                    values.push(scale * T::cast(m as f64));
                }
            }
            values
        }
    };
    let mean = values.iter().copied().sum::<T>() / T::from_u64(s_tot).unwrap();
    Ok((mean, values))
}

/// Stochastic parameter-shift gradient: for each component `i`, draws `s[i]`
/// paired single-shot estimates at `θ ± (π/2)·e_i` and aggregates them into
/// `g_i`, `σ̂_i`, and the shot ledger. Requires `s[i] ≥ 2` so the sample
/// standard deviation is defined.
///
/// Each component consumes an independent, deterministically derived RNG
/// sub-stream, so results are identical whether components are evaluated
/// sequentially or concurrently.
pub fn ievaluate<T: Float, R: Rng + ?Sized>(
    circuit: &AnsatzCircuit,
    obs: &Observable<T>,
    theta: &[T],
    shots: &[u64],
    strategy: AllocationStrategy,
    rng: &mut R,
) -> Result<GradientEstimate<T>> {
    let d = circuit.parameter_count();
    if theta.len() != d {
        return Err(Error::ParameterMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    if shots.len() != d {
        return Err(Error::ParameterMismatch {
            expected: d,
            got: shots.len(),
        });
    }
    if let Some(i) = shots.iter().position(|&s| s < 2) {
        return Err(Error::InvalidArgument(format!(
            "component {i} has {} shots; the sample std needs at least 2",
            shots[i]
        )));
    }
    let mut base_seed = [0u8; 32];
    rng.fill(&mut base_seed);

    let mut g = Vec::with_capacity(d);
    let mut sigma_hat = Vec::with_capacity(d);
    let shift = T::FRAC_PI_2();
    for i in 0..d {
        let mut component_rng = ChaCha8Rng::from_seed(base_seed);
        component_rng.set_stream(i as u64);

        let mut shifted = theta.to_vec();
        shifted[i] += shift;
        let plus_state = circuit.prepare_state(&shifted)?;
        shifted[i] = theta[i] - shift;
        let minus_state = circuit.prepare_state(&shifted)?;

        let (_, plus) =
            estimate_expectation(&plus_state, obs, shots[i], strategy, &mut component_rng)?;
        let (_, minus) =
            estimate_expectation(&minus_state, obs, shots[i], strategy, &mut component_rng)?;
        let samples: Vec<T> = plus
            .iter()
            .zip(&minus)
            .map(|(&a, &b)| (a - b) / T::cast(2.0))
            .collect();
        let count = T::from_u64(shots[i]).unwrap();
        let mean = samples.iter().copied().sum::<T>() / count;
        let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (count - T::one());
        g.push(mean);
        sigma_hat.push(var.sqrt());
    }
    Ok(GradientEstimate {
        g,
        sigma_hat,
        shots: shots.to_vec(),
    })
}

/// Exact gradient through the parameter-shift rule,
/// `∂_i f = [f(θ + (π/2)e_i) − f(θ − (π/2)e_i)]/2`, with exact expectations.
pub fn exact_gradient<T: Float>(
    circuit: &AnsatzCircuit,
    obs: &Observable<T>,
    theta: &[T],
) -> Result<Vec<T>> {
    let d = circuit.parameter_count();
    if theta.len() != d {
        return Err(Error::ParameterMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    let shift = T::FRAC_PI_2();
    let half = T::cast(0.5);
    let mut grad = Vec::with_capacity(d);
    for i in 0..d {
        let mut shifted = theta.to_vec();
        shifted[i] += shift;
        let plus = sim::exact_expectation(&circuit.prepare_state(&shifted)?, obs)?;
        shifted[i] = theta[i] - shift;
        let minus = sim::exact_expectation(&circuit.prepare_state(&shifted)?, obs)?;
        grad.push(half * (plus - minus));
    }
    Ok(grad)
}

/// Exact cost `f(θ) = ⟨0|U†(θ) A U(θ)|0⟩`.
pub fn exact_cost<T: Float>(
    circuit: &AnsatzCircuit,
    obs: &Observable<T>,
    theta: &[T],
) -> Result<T> {
    sim::exact_expectation(&circuit.prepare_state(theta)?, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Boundary;
    use crate::sim::build_ansatz;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wds_examples() {
        assert_eq!(allocate_wds(&[0.5, 0.3, 0.2], 10).unwrap(), vec![5, 3, 2]);
        assert_eq!(allocate_wds(&[0.5, 0.5], 3).unwrap(), vec![2, 1]);
        assert_eq!(allocate_wds(&[1.0], 17).unwrap(), vec![17]);
        assert!(matches!(
            allocate_wds(&[0.0, 0.0], 5).unwrap_err(),
            Error::ZeroWeights
        ));
    }

    #[test]
    fn wds_residual_prefers_large_coefficients() {
        assert_eq!(allocate_wds(&[0.2, 0.5, 0.3], 1).unwrap(), vec![0, 1, 0]);
        // floors (1, 0, 0) for s_tot = 2, the residual tops up the largest.
        assert_eq!(allocate_wds(&[0.2, 0.5, 0.3], 2).unwrap(), vec![0, 2, 0]);
        // floors all zero: residuals go one each in decreasing-weight order.
        assert_eq!(allocate_wds(&[0.4, 0.35, 0.25], 2).unwrap(), vec![1, 1, 0]);
        // tie broken toward the lower index.
        assert_eq!(allocate_wds(&[0.3, 0.3, 0.4], 2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn uniform_split() {
        assert_eq!(allocate_uniform(3, 8).unwrap(), vec![3, 3, 2]);
        assert_eq!(allocate_uniform(2, 1).unwrap(), vec![1, 0]);
    }

    #[test]
    fn wrs_counts_sum_and_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = allocate_wrs(&[0.5, 0.3, 0.2], 1000, &mut rng).unwrap();
        assert_eq!(s.iter().sum::<u64>(), 1000);

        assert_eq!(allocate_wrs(&[2.0], 37, &mut rng).unwrap(), vec![37]);

        let one = allocate_wrs(&[0.4, 0.6], 1, &mut rng).unwrap();
        assert_eq!(one.iter().sum::<u64>(), 1);
        assert!(one.iter().filter(|&&s| s > 0).count() == 1);

        // Zero-weight terms never receive shots, wherever they sit.
        for _ in 0..100 {
            let s = allocate_wrs(&[0.0, 0.5, 0.0, 0.5, 0.0], 50, &mut rng).unwrap();
            assert_eq!(s.iter().sum::<u64>(), 50);
            assert_eq!(s[0] + s[2] + s[4], 0);
        }
    }

    #[test]
    fn wrs_mean_matches_multinomial() {
        let coeffs = [0.5f64, -0.3, 0.2];
        let s_tot = 100u64;
        let draws = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut totals = [0u64; 3];
        for _ in 0..draws {
            let s = allocate_wrs(&coeffs, s_tot, &mut rng).unwrap();
            for (t, v) in totals.iter_mut().zip(&s) {
                *t += v;
            }
        }
        for (k, &w) in [0.5, 0.3, 0.2].iter().enumerate() {
            let mean = totals[k] as f64 / draws as f64;
            let expected = s_tot as f64 * w;
            let sigma = (s_tot as f64 * w * (1.0 - w) / draws as f64).sqrt();
            assert!(
                (mean - expected).abs() < 3.0 * sigma,
                "term {k}: mean {mean}, expected {expected}"
            );
        }
    }

    proptest! {
        #[test]
        fn prop_wds_conserves_shots(
            weights in proptest::collection::vec(0.01f64..10.0, 1..8),
            s_tot in 1u64..10_000,
        ) {
            let shots = allocate_wds(&weights, s_tot).unwrap();
            prop_assert_eq!(shots.iter().sum::<u64>(), s_tot);
        }

        #[test]
        fn prop_wrs_conserves_shots(
            weights in proptest::collection::vec(0.01f64..10.0, 1..8),
            s_tot in 1u64..10_000,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shots = allocate_wrs(&weights, s_tot, &mut rng).unwrap();
            prop_assert_eq!(shots.iter().sum::<u64>(), s_tot);
        }
    }

    #[test]
    fn estimate_single_term_is_exact() {
        let obs = Observable::<f64>::parse("1.0 Z").unwrap();
        let state = StateVector::zero_state(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mean, values) = estimate_expectation(
            &state,
            &obs,
            64,
            AllocationStrategy::WeightedRandom,
            &mut rng,
        )
        .unwrap();
        assert_relative_eq!(mean, 1.0);
        assert!(values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn estimate_concentrates_on_tfim() {
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let state = StateVector::zero_state(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mean, _) = estimate_expectation(
            &state,
            &obs,
            1_000_000,
            AllocationStrategy::WeightedRandom,
            &mut rng,
        )
        .unwrap();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn deterministic_strategies_reject_starvation() {
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let state = StateVector::zero_state(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = estimate_expectation(
            &state,
            &obs,
            2,
            AllocationStrategy::WeightedDeterministic,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StarvedTerm { .. }));
    }

    #[test]
    fn deterministic_estimator_is_coefficient_weighted() {
        // On an eigenstate every outcome is fixed, so the WDS estimate is
        // exactly Σ_k c_k⟨P_k⟩.
        let obs = Observable::<f64>::parse("0.75 ZI\n-0.25 IZ").unwrap();
        let state = StateVector::zero_state(2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for strategy in [
            AllocationStrategy::WeightedDeterministic,
            AllocationStrategy::UniformDeterministic,
        ] {
            let (mean, values) =
                estimate_expectation(&state, &obs, 100, strategy, &mut rng).unwrap();
            assert_relative_eq!(mean, 0.5, epsilon = 1e-12);
            assert_eq!(values.len(), 100);
        }
    }

    #[test]
    fn wrs_estimator_unbiased_over_strategy_randomness() {
        let circ = build_ansatz(2, 1);
        let theta = [0.7f64, 0.3, 1.9, 2.5];
        let state = circ.prepare_state(&theta).unwrap();
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let exact = sim::exact_expectation(&state, &obs).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reps = 40_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..reps {
            let (mean, _) = estimate_expectation(
                &state,
                &obs,
                3,
                AllocationStrategy::WeightedRandom,
                &mut rng,
            )
            .unwrap();
            sum += mean;
            sum_sq += mean * mean;
        }
        let avg = sum / reps as f64;
        let var = sum_sq / reps as f64 - avg * avg;
        let stderr = (var / reps as f64).sqrt();
        assert!(
            (avg - exact).abs() < 4.0 * stderr,
            "avg {avg} vs exact {exact} (stderr {stderr})"
        );
    }

    #[test]
    fn wrs_variance_matches_enumeration_oracle() {
        // Brute-force oracle: the per-shot value takes one of the values
        // ±one_norm with probabilities enumerable over (term, outcome).
        let circ = build_ansatz(2, 1);
        let theta = [1.1f64, 0.2, 0.4, 2.0];
        let state = circ.prepare_state(&theta).unwrap();
        let obs = Observable::<f64>::parse("0.6 ZZ\n-0.4 XI\n0.2 IY").unwrap();
        let one_norm = obs.one_norm();

        let mut mean_oracle = 0.0;
        let mut second_moment = 0.0;
        for (c, p) in obs.terms() {
            let prob_term = c.abs() / one_norm;
            let expectation = sim::exact_pauli_expectation(&state, p).unwrap();
            for (outcome, prob_outcome) in [
                (1.0, (1.0 + expectation) / 2.0),
                (-1.0, (1.0 - expectation) / 2.0),
            ] {
                let value = one_norm * c.signum() * outcome;
                mean_oracle += prob_term * prob_outcome * value;
                second_moment += prob_term * prob_outcome * value * value;
            }
        }
        let var_oracle = second_moment - mean_oracle * mean_oracle;
        // Closed form: per-shot variance is one_norm² − ⟨A⟩².
        let exact = sim::exact_expectation(&state, &obs).unwrap();
        assert_relative_eq!(
            var_oracle,
            one_norm * one_norm - exact * exact,
            epsilon = 1e-12
        );

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, values) = estimate_expectation(
            &state,
            &obs,
            200_000,
            AllocationStrategy::WeightedRandom,
            &mut rng,
        )
        .unwrap();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        // Var of the sample variance for a bounded variable, generous band.
        assert!(
            (var - var_oracle).abs() < 0.05 * var_oracle,
            "var {var} vs oracle {var_oracle}"
        );
    }

    #[test]
    fn ievaluate_requires_two_shots() {
        let circ = build_ansatz(1, 1);
        let obs = Observable::<f64>::parse("1.0 Z").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let err = ievaluate(
            &circ,
            &obs,
            &[0.3, 0.4],
            &[2, 1],
            AllocationStrategy::WeightedRandom,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn ievaluate_is_seed_deterministic() {
        let circ = build_ansatz(2, 2);
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let theta = vec![0.3f64; 8];
        let shots = vec![4u64; 8];
        let a = ievaluate(
            &circ,
            &obs,
            &theta,
            &shots,
            AllocationStrategy::WeightedRandom,
            &mut ChaCha8Rng::seed_from_u64(10),
        )
        .unwrap();
        let b = ievaluate(
            &circ,
            &obs,
            &theta,
            &shots,
            AllocationStrategy::WeightedRandom,
            &mut ChaCha8Rng::seed_from_u64(10),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_shots(), 2 * 8 * 4);
    }

    #[test]
    fn ievaluate_components_bounded_by_one_norm() {
        let circ = build_ansatz(2, 2);
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let bound = obs.one_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let theta: Vec<f64> = (0..8)
                .map(|i| (trial * 8 + i) as f64 * 0.37 % std::f64::consts::TAU)
                .collect();
            let est = ievaluate(
                &circ,
                &obs,
                &theta,
                &[3; 8],
                AllocationStrategy::WeightedRandom,
                &mut rng,
            )
            .unwrap();
            assert!(est.g.iter().all(|g| g.abs() <= bound));
            assert!(est.sigma_hat.iter().all(|s| *s >= 0.0));
        }
    }

    #[test]
    fn single_qubit_gradient_is_minus_sine() {
        // f(θ_y, θ_z) = cos θ_y for A = Z.
        let circ = build_ansatz(1, 1);
        let obs = Observable::<f64>::parse("1.0 Z").unwrap();
        for theta_y in [0.0, 0.4, 1.3, 2.9, -0.7] {
            let grad = exact_gradient(&circ, &obs, &[theta_y, 0.0]).unwrap();
            assert_relative_eq!(grad[0], -theta_y.sin(), epsilon = 1e-12);
            assert_relative_eq!(grad[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        let circ = build_ansatz(3, 2);
        let obs = Observable::<f64>::tfim(3, 1.5, Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let theta: Vec<f64> = (0..circ.parameter_count())
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            let grad = exact_gradient(&circ, &obs, &theta).unwrap();
            let h = 1e-5;
            for i in 0..theta.len() {
                let mut shifted = theta.clone();
                shifted[i] += h;
                let plus = exact_cost(&circ, &obs, &shifted).unwrap();
                shifted[i] = theta[i] - h;
                let minus = exact_cost(&circ, &obs, &shifted).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                assert!(
                    (grad[i] - fd).abs() < 1e-6,
                    "component {i}: shift {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn gradient_bounded_at_origin() {
        let circ = build_ansatz(4, 6);
        let obs = Observable::<f64>::tfim(4, 1.5, Boundary::Open).unwrap();
        let grad = exact_gradient(&circ, &obs, &vec![0.0; 48]).unwrap();
        let bound = obs.one_norm();
        assert!(grad.iter().all(|g| g.is_finite() && g.abs() <= bound));
    }

    #[test]
    fn ievaluate_mean_tracks_exact_gradient() {
        let circ = build_ansatz(1, 1);
        let obs = Observable::<f64>::parse("1.0 Z").unwrap();
        let theta = [0.9f64, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let reps = 4000;
        let mut sums = [0.0f64; 2];
        for _ in 0..reps {
            let est = ievaluate(
                &circ,
                &obs,
                &theta,
                &[8, 8],
                AllocationStrategy::WeightedRandom,
                &mut rng,
            )
            .unwrap();
            sums[0] += est.g[0];
            sums[1] += est.g[1];
        }
        let exact = exact_gradient(&circ, &obs, &theta).unwrap();
        // Single-shot |X| ≤ 1, so the std of the mean is below
        // 1/sqrt(8·reps) ≈ 0.0056.
        for i in 0..2 {
            assert!(
                (sums[i] / reps as f64 - exact[i]).abs() < 4.0 * 0.0056,
                "component {i}"
            );
        }
    }

    #[test]
    fn ievaluate_is_centered_at_critical_points() {
        // θ = 0 is a critical point of f = cos θ_y; the estimator mean must
        // vanish componentwise.
        let circ = build_ansatz(1, 1);
        let obs = Observable::<f64>::parse("1.0 Z").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let reps = 4000;
        let mut sums = [0.0f64; 2];
        for _ in 0..reps {
            let est = ievaluate(
                &circ,
                &obs,
                &[0.0, 0.0],
                &[4, 4],
                AllocationStrategy::WeightedRandom,
                &mut rng,
            )
            .unwrap();
            sums[0] += est.g[0];
            sums[1] += est.g[1];
        }
        // |X| ≤ 1, so the SE of each averaged mean is below 1/√(4·reps).
        let band = 4.0 / (4.0 * reps as f64).sqrt();
        assert!(sums[0].abs() / (reps as f64) < band);
        assert!(sums[1].abs() / (reps as f64) < band);
    }

    #[test]
    fn ievaluate_variance_scales_with_shots() {
        let circ = build_ansatz(2, 2);
        let obs = Observable::<f64>::tfim(2, 1.5, Boundary::Open).unwrap();
        let theta: Vec<f64> = (0..8).map(|i| 0.25 + 0.4 * i as f64).collect();
        let s = 8u64;
        let reps = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut samples: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(reps)).collect();
        let mut single_shot_vars: Vec<f64> = vec![0.0; 8];
        for _ in 0..reps {
            let est = ievaluate(
                &circ,
                &obs,
                &theta,
                &[s; 8],
                AllocationStrategy::WeightedRandom,
                &mut rng,
            )
            .unwrap();
            for i in 0..8 {
                samples[i].push(est.g[i]);
                single_shot_vars[i] += est.sigma_hat[i] * est.sigma_hat[i];
            }
        }
        for i in 0..8 {
            let n = reps as f64;
            let mean = samples[i].iter().sum::<f64>() / n;
            let var = samples[i]
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .sum::<f64>()
                / (n - 1.0);
            let predicted = single_shot_vars[i] / n / s as f64;
            // 3σ band for the sample variance of n samples, using the
            // normal-theory approximation Var[s²] ≈ 2σ⁴/(n−1).
            let band = 3.0 * predicted * (2.0 / (n - 1.0)).sqrt() * 2.0;
            assert!(
                (var - predicted).abs() < band.max(1e-4),
                "component {i}: var {var} vs predicted {predicted}"
            );
        }
    }
}
