//! Numerical analysis suite behind the sampler's design arguments.
//!
//! [`contrast`] evaluates the expected contrastive loss under a positive
//! sampling distribution and its analytic gradients; [`density`] models
//! similarity scores of true and false positives as truncated normals and
//! quantifies the threshold sampler's bias/risk trade-off; [`oracle`] runs
//! a synthetic labeled-class experiment measuring false-positive rates of
//! threshold sampling directly; [`quad`] supplies the adaptive quadrature
//! the density calculations are built on.

pub mod contrast;
pub mod density;
pub mod oracle;
pub mod quad;
