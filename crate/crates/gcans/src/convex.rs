//! Strongly convex testbed with controllable gradient noise.
//!
//! The testbed runs the *idealized* shot rule, the real-valued allocation
//! computed from the true gradient and true per-component noise levels,
//! on quadratic problems `f(θ) = ½(θ−θ*)ᵀA(θ−θ*)`, where everything the
//! convergence theory needs is known exactly: `μ = λ_min(A)` (strong
//! convexity), `L = λ_max(A)` (gradient Lipschitz constant), and the
//! optimal value `f* = 0`.
//!
//! The gradient oracle adds independent Gaussian noise with per-component
//! variance `σ_i²/s_i` for real-valued `s_i`, realizing exactly the
//! unbiasedness and variance assumptions of the convergence analysis. On
//! top of it sit empirical checks for the Polyak-Łojasiewicz inequality,
//! the per-step expected-descent bound, and the geometric decay of the
//! optimality gap at rate `1 − αμ/2`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::float::Float;

/// `f(θ) = ½(θ−θ*)ᵀA(θ−θ*)` with a symmetric positive-definite `A` of
/// known extremal eigenvalues, plus per-component single-sample noise
/// levels for the gradient oracle.
#[derive(Debug, Clone)]
pub struct QuadraticProblem<T> {
    dim: usize,
    /// Row-major `d×d` symmetric matrix.
    matrix: Vec<T>,
    optimum: Vec<T>,
    noise_std: Vec<T>,
    mu: T,
    lipschitz: T,
}

impl<T: Float> QuadraticProblem<T> {
    /// Isotropic problem `A = I` (so `μ = L = 1`) with uniform noise level.
    pub fn isotropic(dim: usize, noise_std: T) -> Self {
        assert!(dim >= 1);
        let mut matrix = vec![T::zero(); dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = T::one();
        }
        Self {
            dim,
            matrix,
            optimum: vec![T::zero(); dim],
            noise_std: vec![noise_std; dim],
            mu: T::one(),
            lipschitz: T::one(),
        }
    }

    /// Random SPD problem with spectrum pinned to `[mu, lipschitz]`: both
    /// endpoints are eigenvalues, interior eigenvalues are uniform in
    /// between, and the eigenbasis is a random orthogonal matrix.
    pub fn random_spd<R: Rng + ?Sized>(
        dim: usize,
        mu: T,
        lipschitz: T,
        noise_std: Vec<T>,
        rng: &mut R,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(
                "random SPD problems need dimension at least 2".into(),
            ));
        }
        if !(mu > T::zero() && lipschitz >= mu) {
            return Err(Error::InvalidArgument(
                "spectrum requires 0 < mu <= lipschitz".into(),
            ));
        }
        if noise_std.len() != dim {
            return Err(Error::ParameterMismatch {
                expected: dim,
                got: noise_std.len(),
            });
        }
        let mu_f = mu.to_f64().unwrap();
        let l_f = lipschitz.to_f64().unwrap();
        let mut eigenvalues = vec![0.0f64; dim];
        eigenvalues[0] = mu_f;
        eigenvalues[dim - 1] = l_f;
        for e in eigenvalues.iter_mut().take(dim - 1).skip(1) {
            *e = rng.gen_range(mu_f..=l_f);
        }
        let gaussian =
            nalgebra::DMatrix::<f64>::from_fn(dim, dim, |_, _| f64::standard_normal(rng));
        let q = gaussian.qr().q();
        let lambda =
            nalgebra::DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues));
        let a = &q * lambda * q.transpose();
        let mut matrix = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                // Symmetrize away the last-ulp asymmetry of Q·Λ·Qᵀ.
                matrix[i * dim + j] = T::cast(0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        let optimum = (0..dim)
            .map(|_| T::cast(rng.gen_range(-1.0..1.0)))
            .collect();
        Ok(Self {
            dim,
            matrix,
            optimum,
            noise_std,
            mu,
            lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn noise_std(&self) -> &[T] {
        &self.noise_std
    }

    pub fn optimum(&self) -> &[T] {
        &self.optimum
    }

    /// `A·(θ−θ*)`.
    pub fn gradient(&self, theta: &[T]) -> Vec<T> {
        let e: Vec<T> = theta
            .iter()
            .zip(&self.optimum)
            .map(|(&t, &o)| t - o)
            .collect();
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.matrix[i * self.dim + j] * e[j])
                    .sum()
            })
            .collect()
    }

    /// `f(θ)`; the optimal value is zero, so this is also the gap.
    pub fn value(&self, theta: &[T]) -> T {
        let e: Vec<T> = theta
            .iter()
            .zip(&self.optimum)
            .map(|(&t, &o)| t - o)
            .collect();
        let g = self.gradient(theta);
        T::cast(0.5) * e.iter().zip(&g).map(|(&a, &b)| a * b).sum()
    }

    pub fn gap(&self, theta: &[T]) -> T {
        self.value(theta)
    }
}

/// Unbiased gradient oracle with per-component variance `σ_i²/s_i` for
/// real-valued shot counts.
#[derive(Debug, Clone, Copy)]
pub struct NoisyGradientOracle<'a, T> {
    problem: &'a QuadraticProblem<T>,
}

impl<'a, T: Float> NoisyGradientOracle<'a, T> {
    pub fn new(problem: &'a QuadraticProblem<T>) -> Self {
        Self { problem }
    }

    pub fn sample<R: Rng + ?Sized>(&self, theta: &[T], shots: &[T], rng: &mut R) -> Vec<T> {
        let grad = self.problem.gradient(theta);
        grad.iter()
            .zip(self.problem.noise_std())
            .zip(shots)
            .map(|((&g, &sigma), &s)| {
                if sigma == T::zero() {
                    g
                } else {
                    g + sigma / s.sqrt() * T::standard_normal(rng)
                }
            })
            .collect()
    }
}

/// Real-valued idealized allocation,
/// `s_i = 2Lα/(2−Lα) · σ_i Σ_j σ_j / ‖∇f(θ)‖²`, from the *true* gradient
/// and noise levels. Errors at a zero gradient.
pub fn idealized_gcans_shots<T: Float>(
    problem: &QuadraticProblem<T>,
    theta: &[T],
    alpha: T,
) -> Result<Vec<T>> {
    let grad = problem.gradient(theta);
    let grad_norm_sq: T = grad.iter().map(|&g| g * g).sum();
    if grad_norm_sq <= T::zero() {
        return Err(Error::ZeroGradient);
    }
    let two = T::cast(2.0);
    let la = problem.lipschitz() * alpha;
    let factor = two * la / (two - la);
    let sigma_sum: T = problem.noise_std().iter().copied().sum();
    Ok(problem
        .noise_std()
        .iter()
        .map(|&sigma| factor * sigma * sigma_sum / grad_norm_sq)
        .collect())
}

/// Optimality-gap trajectories of independent idealized-gCANS trials.
#[derive(Debug, Clone)]
pub struct GapEnsemble<T> {
    /// `gaps[trial][k]`, `k = 0..=iterations`.
    pub gaps: Vec<Vec<T>>,
}

impl<T: Float> GapEnsemble<T> {
    pub fn trials(&self) -> usize {
        self.gaps.len()
    }

    pub fn mean_gaps(&self) -> Vec<T> {
        let trials = T::from_usize(self.trials()).unwrap();
        let len = self.gaps.first().map_or(0, Vec::len);
        (0..len)
            .map(|k| self.gaps.iter().map(|t| t[k]).sum::<T>() / trials)
            .collect()
    }
}

/// Run SGD with the idealized gCANS allocation. Starting points are drawn
/// per trial as `θ* + standard normal`. Requires the learning-rate window
/// `0 < α < min(1/L, 2/μ)` of the convergence analysis.
pub fn run_idealized_gcans<T: Float, R: Rng + ?Sized>(
    problem: &QuadraticProblem<T>,
    alpha: T,
    iterations: usize,
    trials: usize,
    rng: &mut R,
) -> Result<GapEnsemble<T>> {
    let limit = (T::one() / problem.lipschitz()).min(T::cast(2.0) / problem.mu());
    if !(alpha > T::zero() && alpha < limit) {
        return Err(Error::InvalidConfig(format!(
            "idealized rule needs 0 < alpha < min(1/L, 2/mu) = {limit}"
        )));
    }
    let oracle = NoisyGradientOracle::new(problem);
    let mut gaps = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut theta: Vec<T> = problem
            .optimum()
            .iter()
            .map(|&o| o + T::standard_normal(rng))
            .collect();
        let mut trajectory = Vec::with_capacity(iterations + 1);
        trajectory.push(problem.gap(&theta));
        for _ in 0..iterations {
            match idealized_gcans_shots(problem, &theta, alpha) {
                Ok(shots) => {
                    let g = oracle.sample(&theta, &shots, rng);
                    for (t, gi) in theta.iter_mut().zip(&g) {
                        *t -= alpha * *gi;
                    }
                }
                // Exact optimum: infinite shots, exact (zero) gradient.
                Err(Error::ZeroGradient) => {}
                Err(e) => return Err(e),
            }
            trajectory.push(problem.gap(&theta));
        }
        gaps.push(trajectory);
    }
    Ok(GapEnsemble { gaps })
}

/// Geometric decay rate fitted by least squares on `log(mean gap)` versus
/// iteration. Trailing non-positive means (machine-precision convergence)
/// are truncated first; an interior non-positive mean is an error.
pub fn fit_geometric_rate<T: Float>(ensemble: &GapEnsemble<T>) -> Result<T> {
    let mut means = ensemble.mean_gaps();
    while matches!(means.last(), Some(&m) if m <= T::zero()) {
        means.pop();
    }
    if means.len() < 2 {
        return Err(Error::DegenerateGaps);
    }
    if means.iter().any(|&m| m <= T::zero()) {
        return Err(Error::DegenerateGaps);
    }
    let n = T::from_usize(means.len()).unwrap();
    let xs = |k: usize| T::from_usize(k).unwrap();
    let x_mean = (0..means.len()).map(xs).sum::<T>() / n;
    let y: Vec<T> = means.iter().map(|&m| m.ln()).collect();
    let y_mean = y.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (k, &yk) in y.iter().enumerate() {
        let dx = xs(k) - x_mean;
        num += dx * (yk - y_mean);
        den += dx * dx;
    }
    Ok((num / den).exp())
}

/// Verify `2μ(f(θ) − f*) ≤ ‖∇f(θ)‖²` at every sampled point, with a
/// relative tolerance of 1e−9.
pub fn check_pl_inequality<T: Float>(problem: &QuadraticProblem<T>, points: &[Vec<T>]) -> bool {
    let tol = T::cast(1e-9);
    points.iter().all(|theta| {
        let lhs = T::cast(2.0) * problem.mu() * problem.gap(theta);
        let rhs: T = problem.gradient(theta).iter().map(|&g| g * g).sum();
        lhs <= rhs + tol * rhs.abs().max(T::one())
    })
}

/// Outcome of the Monte Carlo descent check at one point.
#[derive(Debug, Clone, Copy)]
pub struct DescentCheck<T> {
    /// Monte Carlo estimate of `E[f(θ⁺)] − f(θ)`.
    pub mean_improvement: T,
    /// The bound `−¼α‖∇f(θ)‖²` it must not exceed.
    pub bound: T,
    /// Standard error of the Monte Carlo mean.
    pub std_error: T,
    pub pass: bool,
}

/// Monte Carlo check of the expected one-step descent
/// `E[f(θ⁺)] − f(θ) ≤ −¼α‖∇f(θ)‖²` under idealized shots, within a 3σ
/// statistical band.
pub fn check_descent_step<T: Float, R: Rng + ?Sized>(
    problem: &QuadraticProblem<T>,
    theta: &[T],
    alpha: T,
    trials: usize,
    rng: &mut R,
) -> Result<DescentCheck<T>> {
    assert!(trials >= 2);
    let grad = problem.gradient(theta);
    let grad_norm_sq: T = grad.iter().map(|&g| g * g).sum();
    if grad_norm_sq <= T::zero() {
        return Ok(DescentCheck {
            mean_improvement: T::zero(),
            bound: T::zero(),
            std_error: T::zero(),
            pass: true,
        });
    }
    let shots = idealized_gcans_shots(problem, theta, alpha)?;
    let oracle = NoisyGradientOracle::new(problem);
    let before = problem.value(theta);
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    for _ in 0..trials {
        let g = oracle.sample(theta, &shots, rng);
        let next: Vec<T> = theta
            .iter()
            .zip(&g)
            .map(|(&t, &gi)| t - alpha * gi)
            .collect();
        let delta = problem.value(&next) - before;
        sum += delta;
        sum_sq += delta * delta;
    }
    let n = T::from_usize(trials).unwrap();
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(T::zero());
    let std_error = (var / n).sqrt();
    let bound = -T::cast(0.25) * alpha * grad_norm_sq;
    Ok(DescentCheck {
        mean_improvement: mean,
        bound,
        std_error,
        pass: mean <= bound + T::cast(3.0) * std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn idealized_shots_examples() {
        // d = 1, σ = 1, ‖∇f‖² = 1, L = 1, α = 1 → s = 2.
        let mut p = QuadraticProblem::<f64>::isotropic(1, 1.0);
        p.noise_std = vec![1.0];
        let s = idealized_gcans_shots(&p, &[1.0], 1.0 - 1e-12).unwrap();
        assert_relative_eq!(s[0], 2.0, epsilon = 1e-9);

        // Scaling all σ by t scales all s by t².
        let p = QuadraticProblem::<f64>::isotropic(3, 1.0);
        let mut scaled = p.clone();
        scaled.noise_std = vec![2.5; 3];
        let theta = [0.3, -0.8, 1.1];
        let base = idealized_gcans_shots(&p, &theta, 0.5).unwrap();
        let boosted = idealized_gcans_shots(&scaled, &theta, 0.5).unwrap();
        for (b, s) in base.iter().zip(&boosted) {
            assert_relative_eq!(s / b, 2.5 * 2.5, epsilon = 1e-12);
        }

        // Uniform σ gives uniform s.
        assert!(base.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));

        // Zero gradient errors.
        assert!(matches!(
            idealized_gcans_shots(&p, &[0.0, 0.0, 0.0], 0.5).unwrap_err(),
            Error::ZeroGradient
        ));
    }

    #[test]
    fn noise_contribution_identity() {
        // Σ σ_i²/s_i = (2−Lα)/(2Lα)·‖∇f‖² by substitution.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..6).map(|i| 0.2 + 0.3 * i as f64).collect();
        let problem = QuadraticProblem::random_spd(6, 0.5, 2.0, noise, &mut rng).unwrap();
        for _ in 0..50 {
            let theta: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let alpha = rng.gen_range(0.01..0.49);
            let grad_norm_sq: f64 = problem.gradient(&theta).iter().map(|g| g * g).sum();
            if grad_norm_sq < 1e-12 {
                continue;
            }
            let shots = idealized_gcans_shots(&problem, &theta, alpha).unwrap();
            let actual: f64 = problem
                .noise_std()
                .iter()
                .zip(&shots)
                .map(|(s, n)| s * s / n)
                .sum();
            let la = problem.lipschitz() * alpha;
            let expected = (2.0 - la) / (2.0 * la) * grad_norm_sq;
            assert_relative_eq!(actual, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn noiseless_isotropic_decays_at_gd_rate() {
        let problem = QuadraticProblem::<f64>::isotropic(4, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ensemble = run_idealized_gcans(&problem, 0.5, 20, 3, &mut rng).unwrap();
        for trajectory in &ensemble.gaps {
            for w in trajectory.windows(2) {
                if w[0] > 1e-250 {
                    assert_relative_eq!(w[1] / w[0], 0.25, epsilon = 1e-10);
                }
            }
        }
        let rate = fit_geometric_rate(&ensemble).unwrap();
        assert_relative_eq!(rate, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn gaps_are_nonnegative() {
        let problem = QuadraticProblem::<f64>::isotropic(5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ensemble = run_idealized_gcans(&problem, 0.5, 30, 20, &mut rng).unwrap();
        assert!(ensemble.gaps.iter().flatten().all(|&g| g >= 0.0));
    }

    #[test]
    fn alpha_window_is_enforced() {
        let problem = QuadraticProblem::<f64>::isotropic(3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(run_idealized_gcans(&problem, 1.0, 5, 2, &mut rng).is_err());
        assert!(run_idealized_gcans(&problem, 0.0, 5, 2, &mut rng).is_err());
        assert!(run_idealized_gcans(&problem, 0.99, 5, 2, &mut rng).is_ok());
    }

    #[test]
    fn fit_rate_handles_edge_sequences() {
        // Constant gaps fit rate 1.
        let constant = GapEnsemble {
            gaps: vec![vec![2.0f64; 10]],
        };
        assert_relative_eq!(fit_geometric_rate(&constant).unwrap(), 1.0, epsilon = 1e-12);

        // Trailing zeros are truncated.
        let truncated = GapEnsemble {
            gaps: vec![vec![4.0, 1.0, 0.25, 0.0, 0.0]],
        };
        assert_relative_eq!(
            fit_geometric_rate(&truncated).unwrap(),
            0.25,
            epsilon = 1e-9
        );

        // All-zero sequences cannot be fitted.
        let degenerate = GapEnsemble {
            gaps: vec![vec![0.0, 0.0]],
        };
        assert!(matches!(
            fit_geometric_rate(&degenerate).unwrap_err(),
            Error::DegenerateGaps
        ));
    }

    #[test]
    fn pl_inequality_checks() {
        // Isotropic case saturates the inequality.
        let iso = QuadraticProblem::<f64>::isotropic(4, 0.0);
        let points: Vec<Vec<f64>> = vec![vec![1.0, -2.0, 0.3, 0.9], vec![0.0; 4]];
        assert!(check_pl_inequality(&iso, &points));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let problem = QuadraticProblem::random_spd(5, 0.3, 3.0, vec![1.0; 5], &mut rng).unwrap();
        let points: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..5).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        assert!(check_pl_inequality(&problem, &points));
    }

    #[test]
    fn descent_step_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);

        // At the optimum both sides are zero.
        let iso = QuadraticProblem::<f64>::isotropic(3, 1.0);
        let at_opt = check_descent_step(&iso, &[0.0; 3], 0.5, 10, &mut rng).unwrap();
        assert!(at_opt.pass);
        assert_eq!(at_opt.mean_improvement, 0.0);

        // Isotropic Monte Carlo case.
        let check = check_descent_step(&iso, &[1.0, -0.5, 2.0], 0.5, 10_000, &mut rng).unwrap();
        assert!(check.pass, "{check:?}");

        // Noiseless case: decrease equals α(1−α/2)‖∇f‖² exactly, which is
        // stronger than the ¼α bound for α ≤ 1/L.
        let clean = QuadraticProblem::<f64>::isotropic(3, 0.0);
        let theta = [1.0, 2.0, -1.0];
        let check = check_descent_step(&clean, &theta, 0.9, 10, &mut rng).unwrap();
        let grad_norm_sq: f64 = clean.gradient(&theta).iter().map(|g| g * g).sum();
        assert!(check.pass);
        assert_relative_eq!(
            check.mean_improvement,
            -0.9 * (1.0 - 0.45) * grad_norm_sq,
            epsilon = 1e-9
        );
    }

    #[test]
    fn fitted_rates_stay_below_theory_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(mu, lipschitz, alpha) in &[(1.0, 1.0, 0.5), (0.5, 2.0, 0.4), (0.25, 1.0, 0.9)] {
            let problem =
                QuadraticProblem::random_spd(6, mu, lipschitz, vec![1.0; 6], &mut rng).unwrap();
            let ensemble = run_idealized_gcans(&problem, alpha, 40, 400, &mut rng).unwrap();
            let rate = fit_geometric_rate(&ensemble).unwrap();
            let bound = 1.0 - alpha * mu / 2.0;
            assert!(rate < 1.0, "rate {rate} not contracting");
            assert!(
                rate <= bound + 0.05,
                "rate {rate} above bound {bound} (mu={mu}, L={lipschitz}, alpha={alpha})"
            );
        }
    }
}
