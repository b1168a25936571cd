//! Exact statevector simulation of the hardware-efficient SU(2) 2-local
//! ansatz, exact expectation values, and single-shot Pauli sampling.
//!
//! Conventions, fixed so that seeded runs and the parameter-shift rule are
//! reproducible and exact:
//!
//! * qubit `q` is bit `q` of the basis-state index (qubit 0 least
//!   significant);
//! * `R_Y(θ) = exp(−iθY/2)`, `R_Z(θ) = exp(−iθZ/2)`;
//! * ansatz parameters are consumed block-major, qubit-minor, Y before Z:
//!   parameter `2·(block·n + qubit)` feeds the `R_Y` and the next one the
//!   `R_Z` of that qubit in that block;
//! * each of the `depth` rotation blocks except the last is followed by a
//!   CNOT ladder with control `i`, target `i+1` for `i = 0..n−2`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::pauli::{Observable, Pauli, PauliString};

/// Largest register accepted by [`ground_energy_dense`].
pub const DENSE_DIAG_MAX_QUBITS: usize = 12;

/// Normalized pure state on `n` qubits as `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Float> StateVector<T> {
    /// The computational-basis state `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        assert!(n >= 1, "state needs at least one qubit");
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[0] = Complex::new(T::one(), T::zero());
        Self { n, amps }
    }

    /// Wrap an explicit amplitude vector; must have length `2^n` for some
    /// `n ≥ 1` and unit norm within 1e−10.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {dim} is not a power of two ≥ 2"
            )));
        }
        let state = Self {
            n: dim.trailing_zeros() as usize,
            amps,
        };
        if (state.norm_sqr() - T::one()).abs() > T::cast(1e-10) {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (‖ψ‖² = {})",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply `R_Y(angle)` to `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, angle: T) {
        let (sin, cos) = (angle / T::cast(2.0)).sin_cos();
        self.map_pairs(qubit, |a0, a1| (a0 * cos - a1 * sin, a0 * sin + a1 * cos));
    }

    /// Apply `R_Z(angle)` to `qubit`.
    pub fn apply_rz(&mut self, qubit: usize, angle: T) {
        let (sin, cos) = (angle / T::cast(2.0)).sin_cos();
        let lower = Complex::new(cos, -sin);
        let upper = Complex::new(cos, sin);
        self.map_pairs(qubit, |a0, a1| (a0 * lower, a1 * upper));
    }

    /// Apply a CNOT with the given control and target qubits.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control != target, "control and target must differ");
        assert!(control < self.n && target < self.n);
        let c_bit = 1usize << control;
        let t_bit = 1usize << target;
        for idx in 0..self.amps.len() {
            if idx & c_bit != 0 && idx & t_bit == 0 {
                self.amps.swap(idx, idx | t_bit);
            }
        }
    }

    fn map_pairs(
        &mut self,
        qubit: usize,
        f: impl Fn(Complex<T>, Complex<T>) -> (Complex<T>, Complex<T>),
    ) {
        assert!(qubit < self.n, "qubit {qubit} out of range");
        let bit = 1usize << qubit;
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = f(self.amps[idx], self.amps[idx | bit]);
                self.amps[idx] = a0;
                self.amps[idx | bit] = a1;
            }
        }
    }
}

/// The hardware-efficient SU(2) 2-local circuit layout: `depth` blocks of
/// per-qubit `R_Y`·`R_Z` rotations, with a CNOT ladder between consecutive
/// blocks (none after the final block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzCircuit {
    n: usize,
    depth: usize,
}

/// Alias for [`AnsatzCircuit::new`].
pub fn build_ansatz(n: usize, depth: usize) -> AnsatzCircuit {
    AnsatzCircuit::new(n, depth)
}

impl AnsatzCircuit {
    pub fn new(n: usize, depth: usize) -> Self {
        assert!(n >= 1 && depth >= 1, "need n ≥ 1 and depth ≥ 1");
        Self { n, depth }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of rotation parameters, `2·n·depth`.
    pub fn parameter_count(&self) -> usize {
        2 * self.n * self.depth
    }

    /// Prepare `U(θ)|0…0⟩`.
    pub fn prepare_state<T: Float>(&self, theta: &[T]) -> Result<StateVector<T>> {
        if theta.len() != self.parameter_count() {
            return Err(Error::ParameterMismatch {
                expected: self.parameter_count(),
                got: theta.len(),
            });
        }
        let mut state = StateVector::zero_state(self.n);
        let mut next = 0;
        for block in 0..self.depth {
            for qubit in 0..self.n {
                state.apply_ry(qubit, theta[next]);
                state.apply_rz(qubit, theta[next + 1]);
                next += 2;
            }
            if block + 1 < self.depth {
                for i in 0..self.n - 1 {
                    state.apply_cnot(i, i + 1);
                }
            }
        }
        Ok(state)
    }
}

/// Phase and bit-flip action of a Pauli string on basis states:
/// `P|b⟩ = phase(b)·|b ⊕ flip_mask⟩`.
struct PauliAction {
    flip_mask: usize,
    parity_mask: usize,
    y_count: usize,
}

impl PauliAction {
    fn new(p: &PauliString) -> Self {
        let mut flip_mask = 0usize;
        let mut parity_mask = 0usize;
        let mut y_count = 0usize;
        for (q, &letter) in p.letters().iter().enumerate() {
            match letter {
                Pauli::I => {}
                Pauli::X => flip_mask |= 1 << q,
                Pauli::Y => {
                    flip_mask |= 1 << q;
                    parity_mask |= 1 << q;
                    y_count += 1;
                }
                Pauli::Z => parity_mask |= 1 << q,
            }
        }
        Self {
            flip_mask,
            parity_mask,
            y_count,
        }
    }

    fn phase<T: Float>(&self, basis: usize) -> Complex<T> {
        let sign = if (basis & self.parity_mask).count_ones().is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        // i^y_count
        match self.y_count % 4 {
            0 => Complex::new(sign, T::zero()),
            1 => Complex::new(T::zero(), sign),
            2 => Complex::new(-sign, T::zero()),
            _ => Complex::new(T::zero(), -sign),
        }
    }
}

/// `⟨ψ|P|ψ⟩` for a single Pauli string, a real number in `[−1, 1]`.
pub fn exact_pauli_expectation<T: Float>(state: &StateVector<T>, p: &PauliString) -> Result<T> {
    if p.n() != state.n() {
        return Err(Error::QubitMismatch {
            expected: state.n(),
            got: p.n(),
        });
    }
    let action = PauliAction::new(p);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (basis, &amp) in state.amplitudes().iter().enumerate() {
        let phase: Complex<T> = action.phase(basis);
        acc += state.amplitudes()[basis ^ action.flip_mask].conj() * phase * amp;
    }
    Ok(acc.re)
}

/// `⟨ψ|A|ψ⟩ = Σ_k c_k ⟨ψ|P_k|ψ⟩`; bounded by `±one_norm(A)`.
pub fn exact_expectation<T: Float>(state: &StateVector<T>, obs: &Observable<T>) -> Result<T> {
    if obs.n() != state.n() {
        return Err(Error::QubitMismatch {
            expected: state.n(),
            got: obs.n(),
        });
    }
    let mut total = T::zero();
    for (coeff, string) in obs.terms() {
        total += *coeff * exact_pauli_expectation(state, string)?;
    }
    Ok(total)
}

/// Draw `shots` independent single-shot measurements of `p` on `ψ`,
/// returning ±1 outcomes with `P(+1) = (1 + ⟨p⟩)/2`.
///
/// Outcomes are a pure function of `(ψ, p, shots, rng state)`.
pub fn sample_pauli<T: Float, R: Rng + ?Sized>(
    state: &StateVector<T>,
    p: &PauliString,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<i8>> {
    let expectation = exact_pauli_expectation(state, p)?;
    Ok(sample_outcomes(expectation, shots, rng))
}

/// ±1 Bernoulli stream with mean `expectation` (clamped to `[−1, 1]`).
pub(crate) fn sample_outcomes<T: Float, R: Rng + ?Sized>(
    expectation: T,
    shots: u64,
    rng: &mut R,
) -> Vec<i8> {
    let half = T::cast(0.5);
    let p_plus = (half * (T::one() + expectation)).clamp(T::zero(), T::one());
    (0..shots)
        .map(|_| {
            if rng.gen_range(T::zero()..T::one()) < p_plus {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Minimum eigenvalue of the observable's dense `2^n × 2^n` matrix.
///
/// Feasible only for small registers; errors above
/// [`DENSE_DIAG_MAX_QUBITS`]. Serves as the exact-diagonalization oracle for
/// optimizer benchmarks.
pub fn ground_energy_dense<T: Float>(obs: &Observable<T>) -> Result<T> {
    if obs.n() > DENSE_DIAG_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            got: obs.n(),
            max: DENSE_DIAG_MAX_QUBITS,
        });
    }
    let dim = 1usize << obs.n();
    let mut matrix = nalgebra::DMatrix::<Complex<f64>>::zeros(dim, dim);
    for (coeff, string) in obs.terms() {
        let c = coeff.to_f64().expect("coefficients are finite");
        let action = PauliAction::new(string);
        for basis in 0..dim {
            let phase: Complex<f64> = action.phase(basis);
            matrix[(basis ^ action.flip_mask, basis)] += phase * c;
        }
    }
    let eigenvalues = matrix.symmetric_eigen().eigenvalues;
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    T::from_f64(min).ok_or_else(|| Error::InvalidArgument("eigenvalue overflows scalar".into()))
}
