//! Cloud cost and wall-clock models for a benchmark run.
//!
//! Pricing follows the Braket-style model of charging per task (circuit
//! compilation) and per shot; the time model assumes 5 kHz sampling and a
//! 0.1 s circuit-change overhead:
//!
//! ```text
//!   C = 0.30·P·K + 0.00035·S   dollars
//!   T = 0.10·P·K + 0.0002·S    seconds
//! ```
//!
//! with `K` iterations, `P` Pauli terms, and `S` total shots.

use serde::{Deserialize, Serialize};

/// Ledger totals of one optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModelInput {
    pub iterations: u64,
    pub shots: u64,
    pub pauli_terms: u64,
}

/// `0.3·P·K + 0.00035·S` dollars.
pub fn cost_usd(iterations: u64, shots: u64, pauli_terms: u64) -> f64 {
    0.3 * (pauli_terms * iterations) as f64 + 0.00035 * shots as f64
}

/// `0.1·P·K + 0.0002·S` seconds.
pub fn time_seconds(iterations: u64, shots: u64, pauli_terms: u64) -> f64 {
    0.1 * (pauli_terms * iterations) as f64 + 0.0002 * shots as f64
}

impl CostModelInput {
    pub fn cost_usd(&self) -> f64 {
        cost_usd(self.iterations, self.shots, self.pauli_terms)
    }

    pub fn time_seconds(&self) -> f64 {
        time_seconds(self.iterations, self.shots, self.pauli_terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_cases() {
        assert_relative_eq!(cost_usd(1, 0, 1), 0.3);
        assert_relative_eq!(cost_usd(0, 1_000_000, 7), 350.0);
        assert_relative_eq!(time_seconds(1, 0, 1), 0.1);
        assert_relative_eq!(time_seconds(0, 5000, 3), 1.0);
    }

    #[test]
    fn dihelium_row() {
        // K = 353, S = 1.4e7, P = 123: $17,925.70 and 1.98 hours.
        let c = cost_usd(353, 14_000_000, 123);
        assert_relative_eq!(c, 17_925.70, epsilon = 1e-9);
        assert_eq!((c / 1000.0).round() as i64, 18);
        let t = time_seconds(353, 14_000_000, 123);
        assert_relative_eq!(t, 7141.9, epsilon = 1e-9);
        assert_relative_eq!((t / 3600.0 * 100.0).round() / 100.0, 1.98);
    }
}
