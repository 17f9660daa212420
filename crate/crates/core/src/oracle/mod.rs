//! Brute-force references: exact failure probabilities, minimum-weight
//! corrections, self-avoiding-walk counts, and Bell-pair error propagation.

use thiserror::Error;

pub mod certify;
pub mod exact;
pub mod pauli;
pub mod saw;

pub use certify::{
    certification_matrix, certify, CaseReport, CertificationCase, CertificationReport, WalkReport,
};
pub use exact::{
    brute_force_min_weight, exact_failure_probability, failure_probability_by_patterns,
    failure_probability_by_syndromes, MinWeight, MinWeightTable,
};
pub use pauli::{pauli_propagation_table, PropagationEntry};
pub use saw::{classify_walk, enumerate_saws, SeamGeometry, StartConstraint, WalkClassification};

/// Largest number of states or patterns any enumeration may visit.
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration needs {needed} states, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("malformed walk: {0}")]
    MalformedWalk(String),
}

/// Compensated floating-point sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.total(), 2.0);
    }
}
