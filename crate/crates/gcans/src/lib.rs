//! Shot-frugal stochastic gradient descent for variational quantum
//! eigensolvers.
//!
//! The crate bundles everything needed to study adaptive shot allocation on
//! desk-scale VQE problems:
//!
//! * [`pauli`]: weighted Pauli-string observables, a transverse-field Ising
//!   model generator, and a plain-text Hamiltonian file format;
//! * [`sim`]: an exact statevector simulator for the hardware-efficient
//!   SU(2) 2-local ansatz, including single-shot Pauli sampling and a dense
//!   diagonalization oracle;
//! * [`estimator`]: shot allocation across Pauli terms (uniform / weighted
//!   deterministic / weighted random) and the parameter-shift stochastic
//!   gradient estimator;
//! * [`optimizer`]: the gCANS optimizer together with iCANS, Adam, and SGD
//!   with geometric dynamic sampling, all sharing one shot ledger;
//! * [`convex`]: a strongly convex testbed with controllable gradient noise
//!   for verifying the geometric-convergence guarantee of the idealized
//!   gCANS rule.
//!
//! All numerics are generic over the scalar type through [`Float`]; the
//! `*64` aliases at the crate root pin the common `f64` instantiations.

pub mod convex;
pub mod error;
pub mod estimator;
mod float;
pub mod optimizer;
pub mod pauli;
pub mod sim;

pub use error::{Error, Result};
pub use float::Float;

pub type Observable64 = pauli::Observable<f64>;
pub type StateVector64 = sim::StateVector<f64>;
pub type GradientEstimate64 = estimator::GradientEstimate<f64>;
pub type OptimizationTrace64 = optimizer::OptimizationTrace<f64>;
pub type QuadraticProblem64 = convex::QuadraticProblem<f64>;
