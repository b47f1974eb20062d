//! MAC-address-keyed data scrambling.
//!
//! A 6-byte hardware address is the whole key. Data is cut into 6-byte
//! chromosomes which are gene-shuffled, XORed with the key, and then
//! reordered as a whole. The [`analysis`] module carries the metrics used to
//! judge the result on images, and [`wire`] a toy transfer protocol keyed by
//! the receiver's address.
//!
//! The scheme is weak: crossover ignores the key, mutation is a repeating
//! 6-byte XOR pad, and the key space is 48 bits. Do not use it to protect
//! anything.

pub mod analysis;
pub mod bmp;
pub mod cipher;
pub mod key;
pub mod prng;
pub mod wire;

pub use analysis::{AnalysisError, AnalysisReport, Direction, GrayImage};
pub use bmp::{parse_bmp, write_bmp, BmpError, BmpImage};
pub use cipher::{decrypt, encrypt, Chromosome, CipherEnvelope, CipherError, CipherMode};
pub use key::{KeyError, KeySource, MacKey, MacStyle, KEYSPACE_BITS};
pub use prng::{invert_permutation, shuffle_indices, Lcg64, PrngError};
pub use wire::{Receiver, WireConfig, WireError};
