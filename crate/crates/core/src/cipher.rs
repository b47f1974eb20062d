//! The three-step scrambler.
//!
//! Data is cut into 6-byte chromosomes. Each chromosome has its genes
//! permuted (crossover, seeded by its 1-based position), is XORed with the
//! key (mutation), and finally the whole chromosome list is reordered by a
//! permutation seeded from the key (re-sequencing). Decryption runs the
//! inverse steps in reverse order.
//!
//! Crossover depends only on the vector position, never on the key, and the
//! XOR step is a repeating 6-byte pad. This is a faithful, weak scheme.

use thiserror::Error;

use crate::key::{MacKey, KEY_LEN};
use crate::prng::{invert_permutation, shuffle_in_place, shuffle_indices};

/// Genes per chromosome, equal to the key width.
pub const GENES: usize = KEY_LEN;

pub const ENVELOPE_MAGIC: [u8; 4] = *b"MGE1";
pub const ENVELOPE_VERSION: u8 = 1;
pub const ENVELOPE_HEADER_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CipherError {
    #[error("bad envelope magic {0:02X?}")]
    BadMagic([u8; 4]),
    #[error("unsupported envelope version {0}")]
    UnsupportedVersion(u8),
    #[error("envelope truncated: {0} bytes, need at least 16")]
    TruncatedEnvelope(usize),
    #[error("ciphertext length {ciphertext} inconsistent with original length {original}")]
    LengthMismatch { original: u64, ciphertext: usize },
}

/// Whether ciphertext is framed (and padded) or length-preserving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CipherMode {
    /// `MGE1` envelope, zero padding up to a multiple of 6.
    #[default]
    Container,
    /// No header; the `len % 6` trailing bytes are only XORed with the key.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Chromosome(pub [u8; GENES]);

impl Chromosome {
    pub fn genes(&self) -> &[u8; GENES] {
        &self.0
    }
}

/// Splits into whole chromosomes plus the `len % 6` remainder.
pub fn split_vectors(data: &[u8]) -> (Vec<Chromosome>, Vec<u8>) {
    let chunks = data.chunks_exact(GENES);
    let tail = chunks.remainder().to_vec();
    let vectors = chunks
        .map(|c| Chromosome(c.try_into().expect("chunks_exact yields 6 bytes")))
        .collect();
    (vectors, tail)
}

fn gene_order(vector_number: u64) -> [usize; GENES] {
    let mut order = [0, 1, 2, 3, 4, 5];
    shuffle_in_place(vector_number, &mut order);
    order
}

/// `out[k] = v[p[k]]` where `p` is the 6-element shuffle seeded with the
/// vector's 1-based position.
pub fn crossover_vector(v: &Chromosome, vector_number: u64) -> Chromosome {
    let order = gene_order(vector_number);
    Chromosome(order.map(|src| v.0[src]))
}

/// Inverse of [`crossover_vector`] for the same `vector_number`.
pub fn uncrossover_vector(v: &Chromosome, vector_number: u64) -> Chromosome {
    let order = gene_order(vector_number);
    let mut out = [0u8; GENES];
    for (k, &src) in order.iter().enumerate() {
        out[src] = v.0[k];
    }
    Chromosome(out)
}

/// Gene-wise XOR with the key. Self-inverse.
pub fn mutate_vector(v: &Chromosome, key: &MacKey) -> Chromosome {
    let k = key.bytes();
    Chromosome(std::array::from_fn(|j| v.0[j] ^ k[j]))
}

/// Permutation used to reorder `count` vectors under `key`.
pub fn resequence_permutation(key: &MacKey, count: usize) -> Vec<usize> {
    shuffle_indices(key.as_u64(), count)
}

/// `out[p] = vectors[π[p]]` with π seeded from the key's 48-bit value.
pub fn resequence(vectors: &[Chromosome], key: &MacKey) -> Vec<Chromosome> {
    resequence_permutation(key, vectors.len())
        .into_iter()
        .map(|src| vectors[src])
        .collect()
}

/// Undoes [`resequence`] under the same key.
pub fn unresequence(vectors: &[Chromosome], key: &MacKey) -> Vec<Chromosome> {
    let inverse = invert_permutation(&resequence_permutation(key, vectors.len()))
        .expect("shuffle output is a permutation");
    inverse.into_iter().map(|src| vectors[src]).collect()
}

/// Runs crossover + mutation + re-sequencing over a buffer whose length is
/// a multiple of 6.
fn scramble_blocks(data: &[u8], key: &MacKey, out: &mut Vec<u8>) {
    debug_assert_eq!(data.len() % GENES, 0);
    let transformed: Vec<Chromosome> = data
        .chunks_exact(GENES)
        .enumerate()
        .map(|(i, c)| {
            let v = Chromosome(c.try_into().unwrap());
            mutate_vector(&crossover_vector(&v, i as u64 + 1), key)
        })
        .collect();
    let perm = resequence_permutation(key, transformed.len());
    out.reserve(data.len());
    for src in perm {
        out.extend_from_slice(&transformed[src].0);
    }
}

fn unscramble_blocks(data: &[u8], key: &MacKey, out: &mut Vec<u8>) {
    debug_assert_eq!(data.len() % GENES, 0);
    let count = data.len() / GENES;
    let perm = resequence_permutation(key, count);
    let inverse = invert_permutation(&perm).expect("shuffle output is a permutation");
    out.reserve(data.len());
    for (i, &src) in inverse.iter().enumerate() {
        let start = src * GENES;
        let v = Chromosome(data[start..start + GENES].try_into().unwrap());
        let plain = uncrossover_vector(&mutate_vector(&v, key), i as u64 + 1);
        out.extend_from_slice(&plain.0);
    }
}

fn xor_tail(tail: &[u8], key: &MacKey, out: &mut Vec<u8>) {
    out.extend(tail.iter().zip(key.bytes()).map(|(b, k)| b ^ k));
}

pub fn encrypt(plaintext: &[u8], key: &MacKey, mode: CipherMode) -> Vec<u8> {
    match mode {
        CipherMode::Container => {
            let padded_len = plaintext.len().div_ceil(GENES) * GENES;
            let mut padded = plaintext.to_vec();
            padded.resize(padded_len, 0);
            let mut out = Vec::with_capacity(ENVELOPE_HEADER_LEN + padded_len);
            out.extend_from_slice(&envelope_header(plaintext.len() as u64));
            scramble_blocks(&padded, key, &mut out);
            out
        }
        CipherMode::Raw => {
            let body_len = plaintext.len() - plaintext.len() % GENES;
            let (body, tail) = plaintext.split_at(body_len);
            let mut out = Vec::with_capacity(plaintext.len());
            scramble_blocks(body, key, &mut out);
            xor_tail(tail, key, &mut out);
            out
        }
    }
}

pub fn decrypt(data: &[u8], key: &MacKey, mode: CipherMode) -> Result<Vec<u8>, CipherError> {
    match mode {
        CipherMode::Container => {
            let envelope = CipherEnvelope::parse(data)?;
            let mut out = Vec::with_capacity(envelope.ciphertext.len());
            unscramble_blocks(envelope.ciphertext, key, &mut out);
            out.truncate(envelope.original_length as usize);
            Ok(out)
        }
        CipherMode::Raw => {
            let body_len = data.len() - data.len() % GENES;
            let (body, tail) = data.split_at(body_len);
            let mut out = Vec::with_capacity(data.len());
            unscramble_blocks(body, key, &mut out);
            xor_tail(tail, key, &mut out);
            Ok(out)
        }
    }
}

fn envelope_header(original_length: u64) -> [u8; ENVELOPE_HEADER_LEN] {
    let mut header = [0u8; ENVELOPE_HEADER_LEN];
    header[..4].copy_from_slice(&ENVELOPE_MAGIC);
    header[4] = ENVELOPE_VERSION;
    header[8..].copy_from_slice(&original_length.to_be_bytes());
    header
}

/// Borrowed view of a container-mode ciphertext.
///
/// Layout: `MGE1`, version `0x01`, three zero bytes, original length as
/// u64 big-endian, then the ciphertext (a multiple of 6 bytes, less than 6
/// bytes longer than the original).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CipherEnvelope<'a> {
    pub original_length: u64,
    pub ciphertext: &'a [u8],
}

impl<'a> CipherEnvelope<'a> {
    pub fn parse(data: &'a [u8]) -> Result<Self, CipherError> {
        if data.len() < ENVELOPE_HEADER_LEN {
            return Err(CipherError::TruncatedEnvelope(data.len()));
        }
        let magic: [u8; 4] = data[..4].try_into().unwrap();
        if magic != ENVELOPE_MAGIC {
            return Err(CipherError::BadMagic(magic));
        }
        if data[4] != ENVELOPE_VERSION {
            return Err(CipherError::UnsupportedVersion(data[4]));
        }
        let original_length = u64::from_be_bytes(data[8..16].try_into().unwrap());
        let ciphertext = &data[ENVELOPE_HEADER_LEN..];
        let expected = original_length
            .div_ceil(GENES as u64)
            .checked_mul(GENES as u64);
        if expected != Some(ciphertext.len() as u64) {
            return Err(CipherError::LengthMismatch {
                original: original_length,
                ciphertext: ciphertext.len(),
            });
        }
        Ok(CipherEnvelope {
            original_length,
            ciphertext,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ENVELOPE_HEADER_LEN + self.ciphertext.len());
        out.extend_from_slice(&envelope_header(self.original_length));
        out.extend_from_slice(self.ciphertext);
        out
    }
}
