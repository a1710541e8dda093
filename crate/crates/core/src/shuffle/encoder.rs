use rayon::prelude::*;

use crate::encoding::{ld, st, Region};
use crate::error::{contract, Result};
use crate::rng::{stream, CounterRng};

/// Disjoint index pairs, each transposed independently with probability 1/2.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EncoderSpec {
    pairs: Vec<(usize, usize)>,
}

impl EncoderSpec {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return contract("encoder pairs overlap");
        }
        Ok(EncoderSpec { pairs })
    }

    /// Adjacent pairs `(i, i+1)` covering `[start, end)`.
    pub fn contiguous(start: usize, end: usize) -> Result<Self> {
        if !(end - start).is_multiple_of(2) {
            return contract("contiguous encoder range must have even length");
        }
        Ok(EncoderSpec { pairs: (start..end).step_by(2).map(|i| (i, i + 1)).collect() })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

pub fn uniform_encoder_apply<T>(data: &mut [T], spec: &EncoderSpec, seed: u64) -> Result<()> {
    if let Some(&(a, b)) = spec.pairs.iter().find(|&&(a, b)| a.max(b) >= data.len()) {
        return contract(format!("pair ({a}, {b}) outside array of {}", data.len()));
    }
    let rng = CounterRng::new(seed);
    for (p, &(a, b)) in spec.pairs.iter().enumerate() {
        if rng.bit(stream::ENCODER, p as u64, 0) {
            data.swap(a, b);
        }
    }
    Ok(())
}

/// Encoder over adjacent pairs of `[start, end)`, keyed by pair start.
pub(crate) fn encode_range(region: &Region, start: usize, end: usize, rng: &CounterRng, salt: u64) {
    let pairs = (end - start) / 2;
    (0..pairs).into_par_iter().with_min_len(1024).for_each(|q| {
        let i = start + 2 * q;
        if rng.bit(stream::ENCODER, i as u64, salt) {
            let a = ld(region, i);
            st(region, i, ld(region, i + 1));
            st(region, i + 1, a);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_identity() {
        let mut v = [1, 2, 3];
        uniform_encoder_apply(&mut v, &EncoderSpec::default(), 4).unwrap();
        assert_eq!(v, [1, 2, 3]);
    }

    #[test]
    fn overlapping_pairs_rejected() {
        assert!(EncoderSpec::new(vec![(0, 1), (1, 2)]).is_err());
        assert!(EncoderSpec::new(vec![(0, 1), (2, 3)]).is_ok());
        let spec = EncoderSpec::new(vec![(0, 5)]).unwrap();
        assert!(uniform_encoder_apply(&mut [0u8; 3], &spec, 0).is_err());
    }

    #[test]
    fn single_pair_transposes_half_the_time() {
        let spec = EncoderSpec::new(vec![(0, 1)]).unwrap();
        let runs = 100_000;
        let mut flipped = 0;
        for seed in 0..runs {
            let mut v = [0, 1];
            uniform_encoder_apply(&mut v, &spec, seed).unwrap();
            flipped += (v[0] == 1) as u64;
        }
        let frac = flipped as f64 / runs as f64;
        assert!((frac - 0.5).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn composing_two_encoders_matches_one() {
        use crate::stats::chi_square_homogeneity;
        let spec = EncoderSpec::contiguous(0, 8).unwrap();
        let runs = 100_000u64;
        let mut once = vec![0u64; 16];
        let mut twice = vec![0u64; 16];
        let code = |v: &[u8; 8]| (0..4).fold(0usize, |acc, p| acc << 1 | (v[2 * p] > v[2 * p + 1]) as usize);
        for seed in 0..runs {
            let mut v: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
            uniform_encoder_apply(&mut v, &spec, seed).unwrap();
            once[code(&v)] += 1;
            let mut w: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
            uniform_encoder_apply(&mut w, &spec, seed ^ 0x5555_0000_0000).unwrap();
            uniform_encoder_apply(&mut w, &spec, seed.wrapping_mul(0x9e37) + 17).unwrap();
            twice[code(&w)] += 1;
        }
        let (_, p) = chi_square_homogeneity(&once, &twice);
        assert!(p > 1e-3, "p = {p}");
    }
}
