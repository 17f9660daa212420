//! Logical failure judgement for one shot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::Correction;
use crate::lattice::MatchingGraph;
use crate::noise::{syndrome_of, ErrorPattern};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JudgeError {
    #[error("correction leaves {0} unmatched defects")]
    SyndromeMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub failed: bool,
    /// Number of edges in `{E} Δ {R}`.
    pub residual_weight: usize,
    pub seed: u64,
    pub shot: u64,
}

/// Symmetric difference of two sorted edge lists.
pub fn residual(errors: &[usize], correction: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(errors.len() + correction.len());
    let (mut i, mut j) = (0, 0);
    while i < errors.len() && j < correction.len() {
        match errors[i].cmp(&correction[j]) {
            std::cmp::Ordering::Less => {
                out.push(errors[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(correction[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&errors[i..]);
    out.extend_from_slice(&correction[j..]);
    out
}

/// Decides whether error plus correction implements the logical operator.
pub fn judge(
    graph: &MatchingGraph,
    errors: &ErrorPattern,
    correction: &Correction,
) -> Result<ShotOutcome, JudgeError> {
    let res = residual(&errors.flipped, &correction.edges);
    let leftover = syndrome_of(graph, &res);
    if !leftover.is_empty() {
        return Err(JudgeError::SyndromeMismatch(leftover.len()));
    }
    Ok(ShotOutcome {
        failed: graph.logical_cut_parity(res.iter().copied()),
        residual_weight: res.len(),
        seed: errors.seed,
        shot: errors.shot,
    })
}
