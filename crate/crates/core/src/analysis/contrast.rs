//! Expected contrastive (InfoNCE) loss under a positive-sampling
//! distribution, and its analytic gradients.
//!
//! Instances are raw embedding vectors `w`; the loss reads their unit
//! normalisations `z = w / |w|`. For an anchor `i` with positive
//! distribution `P` and a negative pool, the expected loss is
//!
//! ```text
//! E[L_i] = - sum_p P(p) ln( A_p / (A_p + B) )
//! A_p = exp(z_i . z_p / t),   B = N * mean_k exp(z_i . z_k / t)
//! ```
//!
//! with temperature `t` and negative count `N`. Gradients with respect to
//! the raw vectors pass through the normalisation, so every gradient lives
//! in the tangent space of the unit sphere at `z_i` (orthogonal to `z_i`).

use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// Raw embedding vectors with cached unit normalisations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    raw: Vec<Vec<f64>>,
    unit: Vec<Vec<f64>>,
    norms: Vec<f64>,
    dim: usize,
}

impl EmbeddingSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument("no embedding vectors".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional embeddings".into()));
        }
        let mut unit = Vec::with_capacity(vectors.len());
        let mut norms = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "embedding {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "embedding {i} has a non-finite entry"
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "embedding {i} has zero norm"
                )));
            }
            unit.push(v.iter().map(|x| x / norm).collect());
            norms.push(norm);
        }
        Ok(Self {
            raw: vectors,
            unit,
            norms,
            dim,
        })
    }

    /// Seeded Gaussian embeddings for harnesses and gradient checks.
    pub fn random(count: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::substream(seed, &[stream::EMBED]);
        let vectors = (0..count)
            .map(|_| (0..dim).map(|_| rng::standard_normal(&mut rng)).collect())
            .collect();
        Self::new(vectors)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self, i: usize) -> &[f64] {
        &self.raw[i]
    }

    pub fn unit(&self, i: usize) -> &[f64] {
        &self.unit[i]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }
}

/// Temperature and negative count of the contrastive objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConfig {
    pub temperature: f64,
    pub neg_count: usize,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            temperature: 0.07,
            neg_count: 255,
        }
    }
}

impl ContrastConfig {
    fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_index(es: &EmbeddingSet, i: usize, role: &str) -> Result<()> {
    if i >= es.len() {
        return Err(Error::InvalidArgument(format!(
            "{role} index {i} out of range for {} embeddings",
            es.len()
        )));
    }
    Ok(())
}

fn check_positives(es: &EmbeddingSet, positives: &[(usize, f64)]) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::InvalidArgument("empty positive distribution".into()));
    }
    let mut total = 0.0;
    for &(p, w) in positives {
        check_index(es, p, "positive")?;
        if !(w >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "positive weight {w} must be nonnegative"
            )));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "positive weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// `B`: the expected negative term, `N * mean_k exp(z_i . z_k / t)`.
fn negative_mass(es: &EmbeddingSet, i: usize, pool: &[usize], cfg: &ContrastConfig) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty negative pool".into()));
    }
    let zi = es.unit(i);
    let mut total = 0.0;
    for &k in pool {
        check_index(es, k, "pool")?;
        total += (dot(zi, es.unit(k)) / cfg.temperature).exp();
    }
    Ok(cfg.neg_count as f64 * total / pool.len() as f64)
}

/// Expected contrastive loss of anchor `i` under positive distribution
/// `positives` (pairs `(index, probability)`) and the given negative pool.
pub fn infonce_expected_loss(
    es: &EmbeddingSet,
    i: usize,
    positives: &[(usize, f64)],
    pool: &[usize],
    cfg: &ContrastConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_index(es, i, "anchor")?;
    check_positives(es, positives)?;
    let b = negative_mass(es, i, pool, cfg)?;
    let zi = es.unit(i);
    let mut loss = 0.0;
    for &(p, w) in positives {
        let a = (dot(zi, es.unit(p)) / cfg.temperature).exp();
        loss -= w * (a / (a + b)).ln();
    }
    Ok(loss)
}

/// Gradient of `E[L_i]` with respect to the raw vector `w_i`.
///
/// The free gradient in `z_i` combines a pull toward each positive,
/// weighted by `P(p) * Q_p` with `Q_p = B / (A_p + B)`, and a push from
/// each pool member `k` weighted by
/// `M_k = (N / |pool|) exp(z_i . z_k / t) * sum_p P(p) / (A_p + B)`;
/// the result is projected onto the tangent space at `z_i` and scaled by
/// `1 / (t * |w_i|)`.
pub fn self_gradient(
    es: &EmbeddingSet,
    i: usize,
    positives: &[(usize, f64)],
    pool: &[usize],
    cfg: &ContrastConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_index(es, i, "anchor")?;
    check_positives(es, positives)?;
    let b = negative_mass(es, i, pool, cfg)?;
    let zi = es.unit(i);
    let mut free = vec![0.0; es.dim()];
    let mut pool_coef = 0.0;
    for &(p, w) in positives {
        let a = (dot(zi, es.unit(p)) / cfg.temperature).exp();
        let q = b / (a + b);
        for (slot, x) in free.iter_mut().zip(es.unit(p)) {
            *slot -= w * q * x;
        }
        pool_coef += w / (a + b);
    }
    for &k in pool {
        let m = cfg.neg_count as f64 / pool.len() as f64
            * (dot(zi, es.unit(k)) / cfg.temperature).exp()
            * pool_coef;
        for (slot, x) in free.iter_mut().zip(es.unit(k)) {
            *slot += m * x;
        }
    }
    let radial = dot(&free, zi);
    let scale = 1.0 / (cfg.temperature * es.norm(i));
    Ok(free
        .iter()
        .zip(zi)
        .map(|(g, z)| scale * (g - radial * z))
        .collect())
}

/// Gradient of `E[L_j]` with respect to another instance's raw vector
/// `w_i`, where `i` carries probability `p_weight` in `j`'s positive
/// distribution:
///
/// ```text
/// - p_weight * Q / (t * |w_i|) * (z_j - (z_i . z_j) z_i)
/// Q = B_j / (exp(z_j . z_i / t) + B_j)
/// ```
///
/// This is the exact derivative when `j`'s positive distribution is a
/// point mass on `i` and `i` is not in `j`'s pool; in mixtures it is the
/// contribution of the `i` term.
pub fn cross_gradient(
    es: &EmbeddingSet,
    i: usize,
    j: usize,
    p_weight: f64,
    pool_j: &[usize],
    cfg: &ContrastConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_index(es, i, "source")?;
    check_index(es, j, "anchor")?;
    if !(0.0..=1.0).contains(&p_weight) {
        return Err(Error::InvalidArgument(format!(
            "positive probability {p_weight} must lie in [0, 1]"
        )));
    }
    let b = negative_mass(es, j, pool_j, cfg)?;
    let (zi, zj) = (es.unit(i), es.unit(j));
    let a = (dot(zj, zi) / cfg.temperature).exp();
    let q = b / (a + b);
    let radial = dot(zi, zj);
    let scale = -p_weight * q / (cfg.temperature * es.norm(i));
    Ok(zj
        .iter()
        .zip(zi)
        .map(|(x, z)| scale * (x - radial * z))
        .collect())
}

/// The two tangent-space quantities the gradient expressions reduce to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentIdentities {
    /// `|z_j - (z_i . z_j) z_i|`, which equals `sqrt(1 - (z_i . z_j)^2)`
    /// for unit vectors.
    pub norm: f64,
    /// `z_j' . z_j - (z_j' . z_i)(z_j . z_i)`: the inner product of `z_j'`
    /// with the tangent component of `z_j` at `z_i`.
    pub alignment: f64,
}

/// Evaluate both identities for unit vectors `z_i`, `z_j`, `z_j'`.
pub fn tangent_identities(zi: &[f64], zj: &[f64], zjp: &[f64]) -> Result<TangentIdentities> {
    for (name, z) in [("z_i", zi), ("z_j", zj), ("z_j'", zjp)] {
        let norm = dot(z, z).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "{name} must be a unit vector, got norm {norm}"
            )));
        }
    }
    let d = dot(zi, zj);
    let tangent: Vec<f64> = zj.iter().zip(zi).map(|(x, z)| x - d * z).collect();
    Ok(TangentIdentities {
        norm: dot(&tangent, &tangent).sqrt(),
        alignment: dot(zjp, zj) - dot(zjp, zi) * d,
    })
}

/// Central finite difference of [`infonce_expected_loss`] with respect to
/// `w_i`, the numerical oracle for [`self_gradient`].
pub fn fd_self_gradient(
    es: &EmbeddingSet,
    i: usize,
    positives: &[(usize, f64)],
    pool: &[usize],
    cfg: &ContrastConfig,
    step: f64,
) -> Result<Vec<f64>> {
    fd_gradient(es, i, step, |shifted| {
        infonce_expected_loss(shifted, i, positives, pool, cfg)
    })
}

/// Central finite difference of anchor `j`'s loss with respect to `w_i`
/// under a point-mass positive distribution on `i`, the numerical oracle
/// for [`cross_gradient`].
pub fn fd_cross_gradient(
    es: &EmbeddingSet,
    i: usize,
    j: usize,
    pool_j: &[usize],
    cfg: &ContrastConfig,
    step: f64,
) -> Result<Vec<f64>> {
    fd_gradient(es, i, step, |shifted| {
        infonce_expected_loss(shifted, j, &[(i, 1.0)], pool_j, cfg)
    })
}

fn fd_gradient(
    es: &EmbeddingSet,
    i: usize,
    step: f64,
    loss: impl Fn(&EmbeddingSet) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    check_index(es, i, "source")?;
    let mut grad = Vec::with_capacity(es.dim());
    for d in 0..es.dim() {
        let eval = |delta: f64| -> Result<f64> {
            let mut raw = es.raw.clone();
            raw[i][d] += delta;
            loss(&EmbeddingSet::new(raw)?)
        };
        grad.push((eval(step)? - eval(-step)?) / (2.0 * step));
    }
    Ok(grad)
}
