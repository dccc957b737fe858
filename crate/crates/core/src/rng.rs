//! Deterministic random streams.
//!
//! Every randomised operation derives an isolated ChaCha substream from a
//! master seed plus a short tag path: an operation label followed by the
//! indices that identify the unit of work (graph index, seed index, walk
//! index, ...). Substreams never share state, so units of work can run on
//! any thread in any order without changing a single draw. The derivation
//! uses only fixed-width integer mixing and is identical on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Operation labels for substream derivation. Each randomised entry point
/// owns one label so streams for different operations never collide even
/// under equal index tags.
pub mod stream {
    pub const FIRST_ORDER: u64 = 0x01;
    pub const HIGH_ORDER: u64 = 0x02;
    pub const NEGATIVES: u64 = 0x03;
    pub const AUGMENT: u64 = 0x04;
    pub const SWEEP: u64 = 0x05;
    pub const MASK: u64 = 0x06;
    pub const PREDICTOR: u64 = 0x07;
    pub const CORPUS: u64 = 0x08;
    pub const ORACLE: u64 = 0x09;
    pub const EMBED: u64 = 0x0a;
    pub const STATS: u64 = 0x0b;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the substream identified by `tags` under `seed`.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed;
    splitmix64(&mut state);
    for &tag in tags {
        state ^= tag.wrapping_mul(0x2545_f491_4f6c_dd1d);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Standard normal draw via Box-Muller; the first uniform is shifted into
/// `(0, 1]` so the logarithm is always finite.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fisher-Yates shuffle of `0..n`. Prefixes of the result are uniform
/// without-replacement draws, so callers that need nested subsets across
/// growing counts re-derive the same substream and take longer prefixes.
pub fn shuffled_indices<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// Draw one index with probability proportional to `weights`.
///
/// Requires at least one strictly positive weight; negative weights are a
/// caller bug and yield unspecified (but deterministic) choices.
pub fn weighted_index<R: Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    // Rounding can push `u` past the final accumulated total.
    last_positive
}

/// Draw up to `count` distinct indices without replacement, removing each
/// chosen weight and renormalising. Once all remaining weight is zero the
/// rest of the draws fall back to uniform over the leftover indices.
pub fn weighted_without_replacement<R: Rng>(
    rng: &mut R,
    weights: &[f64],
    count: usize,
) -> Vec<usize> {
    let mut remaining = weights.to_vec();
    let mut chosen = Vec::with_capacity(count.min(weights.len()));
    while chosen.len() < count && chosen.len() < weights.len() {
        match weighted_index(rng, &remaining) {
            Some(i) => {
                remaining[i] = 0.0;
                chosen.push(i);
            }
            None => break,
        }
    }
    if chosen.len() < count.min(weights.len()) {
        let leftover: Vec<usize> = (0..weights.len()).filter(|i| !chosen.contains(i)).collect();
        let order = shuffled_indices(rng, leftover.len());
        for &slot in order.iter().take(count - chosen.len()) {
            chosen.push(leftover[slot]);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_isolated_and_reproducible() {
        let mut a1 = substream(7, &[stream::FIRST_ORDER, 3]);
        let mut a2 = substream(7, &[stream::FIRST_ORDER, 3]);
        let mut b = substream(7, &[stream::FIRST_ORDER, 4]);
        let xs1: Vec<u64> = (0..8).map(|_| a1.gen()).collect();
        let xs2: Vec<u64> = (0..8).map(|_| a2.gen()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.gen()).collect();
        assert_eq!(xs1, xs2);
        assert_ne!(xs1, ys);
    }

    #[test]
    fn shuffle_prefixes_nest() {
        let mut r1 = substream(1, &[stream::AUGMENT, 0]);
        let mut r2 = substream(1, &[stream::AUGMENT, 0]);
        let full = shuffled_indices(&mut r1, 10);
        let again = shuffled_indices(&mut r2, 10);
        assert_eq!(full, again);
        assert_eq!(full[..3], again[..3]);
    }

    #[test]
    fn weighted_index_respects_zero_weights() {
        let mut rng = substream(5, &[0]);
        for _ in 0..200 {
            let i = weighted_index(&mut rng, &[0.0, 2.0, 0.0, 1.0]).unwrap();
            assert!(i == 1 || i == 3);
        }
        assert_eq!(weighted_index(&mut rng, &[0.0, 0.0]), None);
    }

    #[test]
    fn without_replacement_is_exhaustive_and_distinct() {
        let mut rng = substream(9, &[0]);
        let picks = weighted_without_replacement(&mut rng, &[0.5, 0.3, 0.2], 3);
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn without_replacement_falls_back_to_uniform_on_exhausted_weight() {
        let mut rng = substream(11, &[0]);
        let picks = weighted_without_replacement(&mut rng, &[1.0, 0.0, 0.0], 2);
        assert_eq!(picks.len(), 2);
        assert_eq!(picks[0], 0);
        assert!(picks[1] == 1 || picks[1] == 2);
    }
}
