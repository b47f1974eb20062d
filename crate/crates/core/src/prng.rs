//! Deterministic pseudorandom permutations.
//!
//! The generator is a 64-bit LCG (Knuth's MMIX constants). Its output is the
//! top 31 bits of the state *after* the update, so seed 0 does not emit 0.
//! None of this is cryptographically strong; it only has to be exactly
//! reproducible in any language.

use thiserror::Error;

pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrngError {
    #[error("rand_below called with a zero bound")]
    ZeroBound,
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Advances the state, then returns its high 31 bits.
    pub fn next_u31(&mut self) -> u32 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        (self.state >> 33) as u32
    }

    /// `next_u31() % n`. Modulo bias is accepted: the contract is
    /// reproducibility, not uniformity.
    pub fn rand_below(&mut self, n: u32) -> Result<u32, PrngError> {
        if n == 0 {
            return Err(PrngError::ZeroBound);
        }
        Ok(self.next_u31() % n)
    }
}

/// Fisher-Yates over the identity permutation of `0..n`, driven by a fresh
/// generator seeded with `seed`.
pub fn shuffle_indices(seed: u64, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    shuffle_in_place(seed, &mut perm);
    perm
}

/// Same as [`shuffle_indices`] but permutes the caller's slice, which must
/// hold the identity permutation for the result to match.
pub(crate) fn shuffle_in_place(seed: u64, perm: &mut [usize]) {
    assert!(perm.len() <= u32::MAX as usize, "permutation too large");
    let mut gen = Lcg64::new(seed);
    for i in (1..perm.len()).rev() {
        // i + 1 >= 2, never zero.
        let j = gen.next_u31() % (i as u32 + 1);
        perm.swap(i, j as usize);
    }
}

/// Returns `q` with `q[p[i]] == i`.
pub fn invert_permutation(p: &[usize]) -> Result<Vec<usize>, PrngError> {
    const UNSET: usize = usize::MAX;
    let mut q = vec![UNSET; p.len()];
    for (i, &target) in p.iter().enumerate() {
        match q.get_mut(target) {
            None => {
                return Err(PrngError::NotAPermutation(format!(
                    "entry {target} at position {i} is out of range 0..{}",
                    p.len()
                )))
            }
            Some(slot) if *slot != UNSET => {
                return Err(PrngError::NotAPermutation(format!(
                    "entry {target} repeated at positions {} and {i}",
                    *slot
                )))
            }
            Some(slot) => *slot = i,
        }
    }
    Ok(q)
}
