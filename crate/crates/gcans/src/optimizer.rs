//! Shot-adaptive stochastic gradient descent.
//!
//! Four optimizers share one loop skeleton, one shot ledger, and the
//! [`ShotGradientOracle`] interface:
//!
//! * **gCANS**: per-component shot counts coupled through the whole
//!   gradient: `s_i = ⌈ 2Lα/(2−Lα) · ξ_i Σ_j ξ_j / ‖χ‖² ⌉`, where `χ` and
//!   `ξ` are bias-corrected running averages of the gradient estimate and
//!   of the single-shot standard deviations;
//! * **iCANS**: the per-component rule
//!   `s_i = ⌈ 2Lα/(2−Lα) · (ξ_i² + b·μ^k) / χ_i² ⌉`, clipped to the count
//!   of the component with the best expected gain per shot;
//! * **Adam**: first/second-moment updates with bias correction and a
//!   constant number of shots per gradient component;
//! * **SGD-DS**: plain gradient descent with the geometric shot schedule
//!   `⌊s₀·r^k⌋`.
//!
//! All loops draw `θ₀` uniformly from `[0, 2π)^d` unless the configuration
//! pins a starting point, stop once the cumulative shot count reaches the
//! budget (the final iteration may overshoot), and log the exact cost per
//! iteration. The cost log is monitoring only; those evaluations never
//! touch the shot ledger.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimator::{self, AllocationStrategy, GradientEstimate};
use crate::float::Float;
use crate::pauli::Observable;
use crate::sim::AnsatzCircuit;

/// Source of stochastic gradient estimates with a per-component shot cost.
pub trait ShotGradientOracle<T: Float> {
    fn dimension(&self) -> usize;

    /// Estimate the gradient at `theta` spending `shots[i]` per component
    /// and side; the estimate's ledger reports what was actually spent.
    fn evaluate<R: Rng + ?Sized>(
        &self,
        theta: &[T],
        shots: &[u64],
        rng: &mut R,
    ) -> Result<GradientEstimate<T>>;

    /// Exact cost at `theta`, used for monitoring traces only.
    fn exact_value(&self, theta: &[T]) -> Result<T>;
}

/// A VQE instance: ansatz circuit plus observable, sampled with the given
/// term-allocation strategy (weighted random unless stated otherwise).
#[derive(Debug, Clone)]
pub struct VqeProblem<T> {
    pub circuit: AnsatzCircuit,
    pub observable: Observable<T>,
    pub strategy: AllocationStrategy,
}

impl<T: Float> VqeProblem<T> {
    pub fn new(circuit: AnsatzCircuit, observable: Observable<T>) -> Result<Self> {
        if circuit.n() != observable.n() {
            return Err(Error::QubitMismatch {
                expected: circuit.n(),
                got: observable.n(),
            });
        }
        Ok(Self {
            circuit,
            observable,
            strategy: AllocationStrategy::WeightedRandom,
        })
    }

    /// Lipschitz bound `d·Σ|c_k|` for this instance.
    pub fn lipschitz_bound(&self) -> T {
        self.observable
            .lipschitz_bound(self.circuit.parameter_count())
    }
}

impl<T: Float> ShotGradientOracle<T> for VqeProblem<T> {
    fn dimension(&self) -> usize {
        self.circuit.parameter_count()
    }

    fn evaluate<R: Rng + ?Sized>(
        &self,
        theta: &[T],
        shots: &[u64],
        rng: &mut R,
    ) -> Result<GradientEstimate<T>> {
        estimator::ievaluate(
            &self.circuit,
            &self.observable,
            theta,
            shots,
            self.strategy,
            rng,
        )
    }

    fn exact_value(&self, theta: &[T]) -> Result<T> {
        estimator::exact_cost(&self.circuit, &self.observable, theta)
    }
}

/// Which update rule drives the loop, with the rule-specific knobs.
#[derive(Debug, Clone, PartialEq)]
pub enum Method<T> {
    Gcans,
    Icans {
        bias: T,
    },
    Adam {
        beta1: T,
        beta2: T,
        epsilon: T,
        shots_per_component: u64,
    },
    SgdDs {
        s0: u64,
        ratio: T,
    },
}

/// Shared optimizer configuration. Build through the per-method
/// constructors, which validate the stability constraints (notably
/// `Lα < 2` for the CANS rules).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub alpha: T,
    pub lipschitz: T,
    /// Running-average constant for the CANS estimates.
    pub mu: T,
    pub s_min: u64,
    /// Total shot budget `N`.
    pub budget: u64,
    /// Record the parameter vector in every trace record.
    pub record_theta: bool,
    /// Fixed starting point; drawn uniformly from `[0, 2π)^d` when absent.
    pub initial_theta: Option<Vec<T>>,
    pub method: Method<T>,
}

impl<T: Float> OptimizerConfig<T> {
    fn base(alpha: T, lipschitz: T, budget: u64, method: Method<T>) -> Self {
        Self {
            alpha,
            lipschitz,
            mu: T::cast(0.99),
            s_min: 2,
            budget,
            record_theta: false,
            initial_theta: None,
            method,
        }
    }

    pub fn gcans(alpha: T, lipschitz: T, budget: u64) -> Result<Self> {
        Self::base(alpha, lipschitz, budget, Method::Gcans).validated()
    }

    pub fn icans(alpha: T, lipschitz: T, budget: u64) -> Result<Self> {
        Self::base(
            alpha,
            lipschitz,
            budget,
            Method::Icans {
                bias: T::cast(1e-6),
            },
        )
        .validated()
    }

    pub fn adam(alpha: T, lipschitz: T, shots_per_component: u64, budget: u64) -> Result<Self> {
        Self::base(
            alpha,
            lipschitz,
            budget,
            Method::Adam {
                beta1: T::cast(0.9),
                beta2: T::cast(0.99),
                epsilon: T::cast(1e-8),
                shots_per_component,
            },
        )
        .validated()
    }

    pub fn sgd_ds(alpha: T, lipschitz: T, s0: u64, ratio: T, budget: u64) -> Result<Self> {
        Self::base(alpha, lipschitz, budget, Method::SgdDs { s0, ratio }).validated()
    }

    pub fn with_mu(mut self, mu: T) -> Result<Self> {
        self.mu = mu;
        self.validated()
    }

    pub fn with_s_min(mut self, s_min: u64) -> Result<Self> {
        self.s_min = s_min;
        self.validated()
    }

    pub fn with_bias(mut self, bias: T) -> Result<Self> {
        match &mut self.method {
            Method::Icans { bias: b } => *b = bias,
            _ => return Err(Error::InvalidConfig("bias applies only to iCANS".into())),
        }
        self.validated()
    }

    pub fn with_initial_theta(mut self, theta: Vec<T>) -> Self {
        self.initial_theta = Some(theta);
        self
    }

    pub fn with_record_theta(mut self, record: bool) -> Self {
        self.record_theta = record;
        self
    }

    fn validated(self) -> Result<Self> {
        let ok = |cond: bool, msg: &str| {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.into()))
            }
        };
        ok(
            self.alpha > T::zero() && self.alpha.is_finite(),
            "learning rate must be positive and finite",
        )?;
        ok(
            self.lipschitz > T::zero() && self.lipschitz.is_finite(),
            "Lipschitz bound must be positive and finite",
        )?;
        ok(self.budget > 0, "shot budget must be positive")?;
        ok(
            self.mu >= T::zero() && self.mu < T::one(),
            "running-average constant must lie in [0, 1)",
        )?;
        ok(self.s_min >= 2, "s_min must be at least 2")?;
        match &self.method {
            Method::Gcans | Method::Icans { .. } => {
                ok(
                    self.lipschitz * self.alpha < T::cast(2.0),
                    "CANS rules require Lα < 2",
                )?;
                if let Method::Icans { bias } = &self.method {
                    ok(*bias >= T::zero(), "iCANS bias must be non-negative")?;
                }
            }
            Method::Adam {
                beta1,
                beta2,
                epsilon,
                shots_per_component,
            } => {
                ok(
                    *beta1 >= T::zero() && *beta1 < T::one(),
                    "Adam beta1 must lie in [0, 1)",
                )?;
                ok(
                    *beta2 >= T::zero() && *beta2 < T::one(),
                    "Adam beta2 must lie in [0, 1)",
                )?;
                ok(*epsilon > T::zero(), "Adam epsilon must be positive")?;
                ok(
                    *shots_per_component >= 2,
                    "Adam needs at least 2 shots per component",
                )?;
            }
            Method::SgdDs { s0, ratio } => {
                ok(*s0 >= 2, "SGD-DS needs s0 ≥ 2")?;
                ok(*ratio >= T::one(), "SGD-DS common ratio must be ≥ 1")?;
            }
        }
        Ok(self)
    }
}

/// Running optimizer state: parameters, raw and bias-corrected averages,
/// the shot prescription for the next evaluation, and the ledger.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    pub theta: Vec<T>,
    pub chi_raw: Vec<T>,
    pub xi_raw: Vec<T>,
    /// Bias-corrected gradient average, `chi_raw/(1−μ^{k+1})`.
    pub chi: Vec<T>,
    /// Bias-corrected standard-deviation average.
    pub xi: Vec<T>,
    pub shots: Vec<u64>,
    /// Completed iterations.
    pub k: usize,
    /// Cumulative shots spent.
    pub s_tot: u64,
}

impl<T: Float> OptimizerState<T> {
    pub fn new(theta: Vec<T>, initial_shots: Vec<u64>) -> Self {
        let d = theta.len();
        Self {
            theta,
            chi_raw: vec![T::zero(); d],
            xi_raw: vec![T::zero(); d],
            chi: vec![T::zero(); d],
            xi: vec![T::zero(); d],
            shots: initial_shots,
            k: 0,
            s_tot: 0,
        }
    }

    /// Fold a fresh estimate into the raw averages and refresh the
    /// bias-corrected views; `self.k` must still hold the index of the
    /// iteration being folded in.
    pub fn update_averages(&mut self, g: &[T], sigma_hat: &[T], mu: T) {
        let one = T::one();
        let correction = one - mu.powi(self.k as i32 + 1);
        for i in 0..self.theta.len() {
            self.chi_raw[i] = mu * self.chi_raw[i] + (one - mu) * g[i];
            self.xi_raw[i] = mu * self.xi_raw[i] + (one - mu) * sigma_hat[i];
            self.chi[i] = self.chi_raw[i] / correction;
            self.xi[i] = self.xi_raw[i] / correction;
        }
    }
}

/// Pre-rounding gCANS allocation, `s_i = 2Lα/(2−Lα) · ξ_i Σξ / ‖χ‖²`.
///
/// Exposes the real-valued rule so the allocation-ratio law
/// `s_i/s_j = ξ_i/ξ_j` can be checked without ceiling noise. Requires
/// `Lα < 2`; returns `None` when `‖χ‖ = 0`.
pub fn shots_rule_gcans_real<T: Float>(
    xi: &[T],
    chi: &[T],
    lipschitz: T,
    alpha: T,
) -> Option<Vec<T>> {
    assert!(
        lipschitz * alpha < T::cast(2.0),
        "gCANS rule requires Lα < 2"
    );
    let chi_norm_sq: T = chi.iter().map(|&c| c * c).sum();
    if chi_norm_sq <= T::zero() {
        return None;
    }
    let factor = T::cast(2.0) * lipschitz * alpha / (T::cast(2.0) - lipschitz * alpha);
    let xi_sum: T = xi.iter().copied().sum();
    Some(
        xi.iter()
            .map(|&x| factor * x * xi_sum / chi_norm_sq)
            .collect(),
    )
}

fn ceil_to_shots<T: Float>(value: T, s_min: u64) -> u64 {
    if !value.is_finite() {
        return u64::MAX;
    }
    value.ceil().to_u64().unwrap_or(u64::MAX).max(s_min)
}

/// Integer gCANS prescription: the pre-rounding rule, ceiled, floored at
/// `s_min`. A zero gradient average degenerates to `s_min` everywhere.
pub fn shots_rule_gcans<T: Float>(
    xi: &[T],
    chi: &[T],
    lipschitz: T,
    alpha: T,
    s_min: u64,
) -> Vec<u64> {
    match shots_rule_gcans_real(xi, chi, lipschitz, alpha) {
        Some(real) => real.into_iter().map(|s| ceil_to_shots(s, s_min)).collect(),
        None => vec![s_min; xi.len()],
    }
}

/// Expected one-step gain lower bound,
/// `(α − Lα²/2)·‖∇f‖² − (Lα²/2)·Σ_i σ_i²/s_i`.
pub fn expected_gain<T: Float>(
    alpha: T,
    lipschitz: T,
    grad_norm_sq: T,
    sigma_sq: &[T],
    shots: &[T],
) -> T {
    let half = T::cast(0.5);
    let quad = half * lipschitz * alpha * alpha;
    let noise: T = sigma_sq.iter().zip(shots).map(|(&v, &s)| v / s).sum();
    (alpha - quad) * grad_norm_sq - quad * noise
}

/// Integer iCANS prescription: per-component
/// `s_i = ⌈ 2Lα/(2−Lα) · (ξ_i² + b·μ^k) / χ_i² ⌉`, floored at `s_min`, then
/// clipped to the count of the component with the highest expected gain per
/// shot. `χ_i = 0` degenerates that component to `s_min`.
#[allow(clippy::too_many_arguments)] // the rule's inputs, verbatim
pub fn shots_rule_icans<T: Float>(
    xi: &[T],
    chi: &[T],
    lipschitz: T,
    alpha: T,
    bias: T,
    mu: T,
    k: usize,
    s_min: u64,
) -> Vec<u64> {
    assert!(
        lipschitz * alpha < T::cast(2.0),
        "iCANS rule requires Lα < 2"
    );
    let two = T::cast(2.0);
    let factor = two * lipschitz * alpha / (two - lipschitz * alpha);
    let regularizer = bias * mu.powi(k as i32);
    let mut shots: Vec<u64> = xi
        .iter()
        .zip(chi)
        .map(|(&x, &c)| {
            if c == T::zero() {
                s_min
            } else {
                ceil_to_shots(factor * (x * x + regularizer) / (c * c), s_min)
            }
        })
        .collect();

    // Clip to the shot count of the most shot-efficient component,
    // γ_i = E[G_i]/s_i with the running estimates substituted.
    let half = T::cast(0.5);
    let quad = half * lipschitz * alpha * alpha;
    let mut best: Option<(usize, T)> = None;
    for i in 0..shots.len() {
        let s = T::from_u64(shots[i]).unwrap();
        let gain = (alpha - quad) * chi[i] * chi[i] - quad * xi[i] * xi[i] / s;
        let efficiency = gain / s;
        if best.is_none_or(|(_, g)| efficiency > g) {
            best = Some((i, efficiency));
        }
    }
    if let Some((i_star, _)) = best {
        let cap = shots[i_star];
        for s in &mut shots {
            *s = (*s).min(cap);
        }
    }
    shots
}

/// Geometric shot schedule `⌊s₀·r^k⌋`, evaluated by exponentiation by
/// squaring so the result is reproducible across platforms.
pub fn geometric_shots<T: Float>(s0: u64, ratio: T, k: u64) -> u64 {
    let mut power = T::one();
    let mut base = ratio;
    let mut n = k;
    while n > 0 {
        if n & 1 == 1 {
            power *= base;
        }
        base = base * base;
        n >>= 1;
    }
    let value = T::from_u64(s0).unwrap() * power;
    if !value.is_finite() {
        return u64::MAX;
    }
    value.floor().to_u64().unwrap_or(u64::MAX)
}

/// One per-iteration trace entry. The energy is the exact cost after the
/// iteration's parameter update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub theta: Option<Vec<T>>,
    pub energy: T,
    pub grad_norm_est: T,
    pub shots_per_component: Vec<u64>,
    pub shots_this_iter: u64,
    pub cumulative_shots: u64,
}

/// Full optimization trace: the shot ledger behind every benchmark number.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace<T> {
    pub initial_energy: T,
    pub records: Vec<IterationRecord<T>>,
}

impl<T: Float> OptimizationTrace<T> {
    /// Number of iterations `K`.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Total shots `S`.
    pub fn total_shots(&self) -> u64 {
        self.records.last().map_or(0, |r| r.cumulative_shots)
    }

    pub fn final_energy(&self) -> T {
        self.records
            .last()
            .map_or(self.initial_energy, |r| r.energy)
    }

    /// First cumulative shot count at which the monitored energy drops to
    /// `threshold` or below; `None` if it never does.
    pub fn shots_to_threshold(&self, threshold: T) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.energy <= threshold)
            .map(|r| r.cumulative_shots)
    }
}

struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
}

/// Run any configured optimizer. The per-method entry points below are
/// thin wrappers that check the configuration kind.
pub fn run<T, P, R>(
    problem: &P,
    config: &OptimizerConfig<T>,
    rng: &mut R,
) -> Result<OptimizationTrace<T>>
where
    T: Float,
    P: ShotGradientOracle<T>,
    R: Rng + ?Sized,
{
    let config = config.clone().validated()?;
    let d = problem.dimension();
    let theta = match &config.initial_theta {
        Some(theta) => {
            if theta.len() != d {
                return Err(Error::ParameterMismatch {
                    expected: d,
                    got: theta.len(),
                });
            }
            theta.clone()
        }
        None => {
            let tau = T::TAU();
            (0..d).map(|_| rng.gen_range(T::zero()..tau)).collect()
        }
    };

    let initial_shots = match &config.method {
        Method::Adam {
            shots_per_component,
            ..
        } => vec![*shots_per_component; d],
        Method::SgdDs { s0, ratio } => vec![geometric_shots(*s0, *ratio, 0); d],
        _ => vec![config.s_min; d],
    };
    let first_cost = 2 * initial_shots.iter().sum::<u64>();
    if config.budget < first_cost {
        return Err(Error::BudgetTooSmall {
            budget: config.budget,
            required: first_cost,
        });
    }

    // Demands beyond the whole budget are meaningless and can explode the
    // final iteration; cap per component at the budget itself.
    let shot_cap = config.budget.max(config.s_min);

    let initial_energy = problem.exact_value(&theta)?;
    let mut state = OptimizerState::new(theta, initial_shots);
    let mut adam = match &config.method {
        Method::Adam { .. } => Some(AdamState {
            m: vec![T::zero(); d],
            v: vec![T::zero(); d],
        }),
        _ => None,
    };
    let mut records = Vec::new();

    while state.s_tot < config.budget {
        let est = problem.evaluate(&state.theta, &state.shots, rng)?;
        state.s_tot = state.s_tot.saturating_add(est.total_shots());

        match &config.method {
            Method::Gcans => {
                state.update_averages(&est.g, &est.sigma_hat, config.mu);
                for i in 0..d {
                    state.theta[i] -= config.alpha * est.g[i];
                }
                state.shots = shots_rule_gcans(
                    &state.xi,
                    &state.chi,
                    config.lipschitz,
                    config.alpha,
                    config.s_min,
                );
            }
            Method::Icans { bias } => {
                state.update_averages(&est.g, &est.sigma_hat, config.mu);
                for i in 0..d {
                    state.theta[i] -= config.alpha * est.g[i];
                }
                state.shots = shots_rule_icans(
                    &state.xi,
                    &state.chi,
                    config.lipschitz,
                    config.alpha,
                    *bias,
                    config.mu,
                    state.k,
                    config.s_min,
                );
            }
            Method::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => {
                let adam = adam.as_mut().expect("Adam state initialized");
                let one = T::one();
                let t = state.k as i32 + 1;
                let bc1 = one - beta1.powi(t);
                let bc2 = one - beta2.powi(t);
                for i in 0..d {
                    adam.m[i] = *beta1 * adam.m[i] + (one - *beta1) * est.g[i];
                    adam.v[i] = *beta2 * adam.v[i] + (one - *beta2) * est.g[i] * est.g[i];
                    let m_hat = adam.m[i] / bc1;
                    let v_hat = adam.v[i] / bc2;
                    state.theta[i] -= config.alpha * m_hat / (v_hat.sqrt() + *epsilon);
                }
            }
            Method::SgdDs { s0, ratio } => {
                for i in 0..d {
                    state.theta[i] -= config.alpha * est.g[i];
                }
                let next = geometric_shots(*s0, *ratio, state.k as u64 + 1);
                state.shots = vec![next; d];
            }
        }

        for s in &mut state.shots {
            *s = (*s).min(shot_cap);
        }

        let energy = problem.exact_value(&state.theta)?;
        records.push(IterationRecord {
            k: state.k,
            theta: config.record_theta.then(|| state.theta.clone()),
            energy,
            grad_norm_est: est.grad_norm(),
            shots_per_component: est.shots.clone(),
            shots_this_iter: est.total_shots(),
            cumulative_shots: state.s_tot,
        });
        state.k += 1;
    }

    Ok(OptimizationTrace {
        initial_energy,
        records,
    })
}

fn expect_method<T: Float>(config: &OptimizerConfig<T>, matches: bool, name: &str) -> Result<()> {
    if matches {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "configuration does not describe {name} (got {:?})",
            std::mem::discriminant(&config.method)
        )))
    }
}

pub fn run_gcans<T, P, R>(
    problem: &P,
    config: &OptimizerConfig<T>,
    rng: &mut R,
) -> Result<OptimizationTrace<T>>
where
    T: Float,
    P: ShotGradientOracle<T>,
    R: Rng + ?Sized,
{
    expect_method(config, matches!(config.method, Method::Gcans), "gCANS")?;
    run(problem, config, rng)
}

pub fn run_icans<T, P, R>(
    problem: &P,
    config: &OptimizerConfig<T>,
    rng: &mut R,
) -> Result<OptimizationTrace<T>>
where
    T: Float,
    P: ShotGradientOracle<T>,
    R: Rng + ?Sized,
{
    expect_method(
        config,
        matches!(config.method, Method::Icans { .. }),
        "iCANS",
    )?;
    run(problem, config, rng)
}

pub fn run_adam<T, P, R>(
    problem: &P,
    config: &OptimizerConfig<T>,
    rng: &mut R,
) -> Result<OptimizationTrace<T>>
where
    T: Float,
    P: ShotGradientOracle<T>,
    R: Rng + ?Sized,
{
    expect_method(config, matches!(config.method, Method::Adam { .. }), "Adam")?;
    run(problem, config, rng)
}

pub fn run_sgd_ds<T, P, R>(
    problem: &P,
    config: &OptimizerConfig<T>,
    rng: &mut R,
) -> Result<OptimizationTrace<T>>
where
    T: Float,
    P: ShotGradientOracle<T>,
    R: Rng + ?Sized,
{
    expect_method(
        config,
        matches!(config.method, Method::SgdDs { .. }),
        "SGD-DS",
    )?;
    run(problem, config, rng)
}
