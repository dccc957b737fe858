//! Similarity hierarchies and positive-pair samplers for graph contrastive
//! pre-training corpora, plus the numerical side of the objective itself:
//! expected-loss evaluation, analytic gradients, and threshold bias/risk
//! integrals.
//!
//! The crate is organised around a small pipeline:
//!
//! - [`graph`]: attributed-graph data model, dataset IO, basic algorithms.
//! - [`similarity`]: Weisfeiler-Lehman kernel and Morgan fingerprints.
//! - [`hier`]: candidate selection and similarity-hierarchy construction.
//! - [`sampler`]: first-order and walk-based positive sampling, negatives,
//!   and neighbourhood statistics.
//! - [`augment`]: perturbation baselines (node/edge dropping, attribute
//!   masking, subgraph extraction) with chemical legality checks and sweeps.
//! - [`masking`]: stepwise adaptive mask schedules driven by a node-level
//!   predictor probe.
//! - [`analysis`]: expected contrastive loss, its analytic gradients, and
//!   the positive/negative density model with its bias decomposition.
//!
//! Everything randomised draws from tagged substreams of a single master
//! seed ([`rng`]), and every bulk loop funnels through [`par`], so outputs
//! are byte-identical across thread counts and across the parallel and
//! sequential builds.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod augment;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod hier;
mod masses;
pub mod masking;
pub mod par;
pub mod rng;
pub mod sampler;
pub mod similarity;

pub use error::{Error, Result};
