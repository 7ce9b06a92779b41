//! Privacy amplification with a seeded binary Toeplitz matrix.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::par::Execution;

/// An `m × n` Toeplitz matrix `T[i][j] = s[i − j + n − 1]` given by its
/// `n + m − 1` diagonal bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    diagonal: Vec<u64>,
}

impl ToeplitzHash {
    pub fn random(input_len: usize, output_len: usize, seed: u64) -> Result<Self> {
        if output_len > input_len {
            return Err(domain("a hash cannot lengthen the key"));
        }
        let bits = (input_len + output_len).saturating_sub(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut diagonal: Vec<u64> = (0..bits.div_ceil(64) + 1).map(|_| rng.next_u64()).collect();
        mask_tail(&mut diagonal, bits);
        Ok(Self { input_len, output_len, diagonal })
    }

    /// The first `output_len` rows of the identity.
    pub fn identity(input_len: usize, output_len: usize) -> Result<Self> {
        if output_len > input_len || input_len == 0 {
            return Err(domain("identity hash needs 0 < output_len <= input_len"));
        }
        let bits = input_len + output_len - 1;
        let mut diagonal = vec![0u64; bits.div_ceil(64) + 1];
        diagonal[(input_len - 1) / 64] |= 1 << ((input_len - 1) % 64);
        Ok(Self { input_len, output_len, diagonal })
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Multiplies the key by the matrix over GF(2), one row per output bit.
    pub fn apply(&self, key: &[bool], execution: Execution) -> Result<Vec<bool>> {
        if key.len() != self.input_len {
            return Err(Error::Shape { expected: self.input_len, actual: key.len() });
        }
        let n = self.input_len;
        // row i is s[i .. i + n] against the key reversed
        let mut reversed = vec![0u64; n.div_ceil(64)];
        for (j, &b) in key.iter().enumerate() {
            if b {
                let k = n - 1 - j;
                reversed[k / 64] |= 1 << (k % 64);
            }
        }
        const ROWS_PER_TASK: usize = 256;
        let tasks = self.output_len.div_ceil(ROWS_PER_TASK);
        let rows = execution.map_range(tasks, |t| {
            let lo = t * ROWS_PER_TASK;
            let hi = (lo + ROWS_PER_TASK).min(self.output_len);
            (lo..hi).map(|i| self.row_parity(i, &reversed)).collect::<Vec<_>>()
        });
        Ok(rows.into_iter().flatten().collect())
    }

    fn row_parity(&self, offset: usize, reversed: &[u64]) -> bool {
        let (w0, shift) = (offset / 64, offset % 64);
        let mut acc = 0u64;
        for (k, &x) in reversed.iter().enumerate() {
            let lo = self.diagonal[w0 + k] >> shift;
            let hi = if shift == 0 { 0 } else { self.diagonal.get(w0 + k + 1).map_or(0, |w| w << (64 - shift)) };
            acc ^= (lo | hi) & x;
        }
        acc.count_ones() % 2 == 1
    }
}

fn mask_tail(words: &mut [u64], bits: usize) {
    for (w, word) in words.iter_mut().enumerate() {
        let start = w * 64;
        if start >= bits {
            *word = 0;
        } else if bits - start < 64 {
            *word &= (1u64 << (bits - start)) - 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplificationStatus {
    Complete,
    /// `floor(n·r)` was zero.
    ZeroLength,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalKey {
    pub bits: Vec<bool>,
    pub status: AmplificationStatus,
}

/// Compresses an error-free key to `floor(n·r)` bits.
pub fn privacy_amplification(key: &[bool], fraction: f64, seed: u64) -> Result<FinalKey> {
    privacy_amplification_with(key, fraction, seed, Execution::default())
}

pub fn privacy_amplification_with(key: &[bool], fraction: f64, seed: u64, execution: Execution) -> Result<FinalKey> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(domain(format!("secure fraction must lie in [0, 1], got {fraction}")));
    }
    let m = (key.len() as f64 * fraction).floor() as usize;
    if m == 0 {
        return Ok(FinalKey { bits: Vec::new(), status: AmplificationStatus::ZeroLength });
    }
    let hash = ToeplitzHash::random(key.len(), m, seed)?;
    Ok(FinalKey { bits: hash.apply(key, execution)?, status: AmplificationStatus::Complete })
}
