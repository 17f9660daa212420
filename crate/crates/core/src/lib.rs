//! Memory experiments for a distance-`L` surface code split across two modules
//! and joined along one or two noisy seams.
//!
//! The pipeline is: build the [`lattice::MatchingGraph`], assign phenomenological
//! noise with [`noise::assign_probabilities`], sample errors, decode with the
//! exact matching decoder in [`decoder`], and judge logical failure with
//! [`logical::judge`]. [`experiments`] runs Monte Carlo campaigns and threshold
//! fits on top of that, [`bounds`] evaluates the walk-counting estimates, and
//! [`oracle`] provides exhaustive references for small instances.

pub mod bounds;
pub mod cli;
pub mod decoder;
pub mod experiments;
pub mod lattice;
pub mod logical;
pub mod noise;
pub mod oracle;

pub use decoder::{decode, Correction, Decoder};
pub use lattice::{build_graph, LatticeSpec, MatchingGraph};
pub use logical::{judge, ShotOutcome};
pub use noise::{
    assign_probabilities, sample_errors, syndrome_of, DefectSet, ErrorPattern, NoiseParams,
    WeightedGraph,
};
