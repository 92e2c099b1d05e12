//! Single-parity MDS index codebook over `Z_Q`.
//!
//! The codebook holds every length-`N` tuple whose digits sum to zero
//! modulo `Q`: the first `N - 1` digits are free and the last one is the
//! negated sum. That is `Q^(N-1)` codewords at minimum Hamming distance 2,
//! which meets the Singleton bound for `d = 2`.
//!
//! Codewords are ranked lexicographically by their free digits (read as a
//! base-`Q` number, first digit most significant). The first `2^f1` ranks,
//! `f1 = floor(log2 Q^(N-1))`, are addressed by index bits; the rest are
//! valid codewords that are never transmitted.

use std::fmt;

use crate::bits::{bits_to_u64, u64_to_bits};
use crate::{Error, Result};

/// Largest codebook that [`generate_codebook`] materializes.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

/// Mode indices `(I_1, ..., I_N)` of one block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexCodeword(pub Vec<usize>);

impl IndexCodeword {
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for IndexCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone)]
pub struct IndexCodebook {
    q: usize,
    n: usize,
    size: u64,
    f1: u32,
    /// Flattened codewords in rank order, when materialized.
    table: Option<Vec<u16>>,
}

/// Enumerates the codebook for `(Q, N)` with the default budget.
pub fn generate_codebook(q: usize, n: usize) -> Result<IndexCodebook> {
    IndexCodebook::generate_with_budget(q, n, DEFAULT_ENUMERATION_BUDGET)
}

impl IndexCodebook {
    /// Enumerates all `Q^(N-1)` codewords, failing if there are more than
    /// `budget`.
    pub fn generate_with_budget(q: usize, n: usize, budget: u64) -> Result<Self> {
        let mut cb = Self::implicit(q, n)?;
        if cb.size > budget {
            return Err(Error::CapacityExceeded {
                size: cb.size.to_string(),
                budget,
            });
        }
        if q > u16::MAX as usize + 1 {
            return Err(Error::CapacityExceeded {
                size: format!("alphabet {q}"),
                budget,
            });
        }
        let mut table = Vec::with_capacity(cb.size as usize * n);
        let mut free = vec![0usize; n - 1];
        for _ in 0..cb.size {
            let sum: usize = free.iter().sum();
            table.extend(free.iter().map(|&d| d as u16));
            table.push(((q - sum % q) % q) as u16);
            advance_odometer(&mut free, q);
        }
        cb.table = Some(table);
        Ok(cb)
    }

    /// A codebook that ranks and unranks algebraically without storing
    /// the codeword list.
    pub fn implicit(q: usize, n: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParams("Q must be at least 1".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParams("N must be at least 2".into()));
        }
        let size = u32::try_from(n - 1)
            .ok()
            .and_then(|e| (q as u64).checked_pow(e))
            .ok_or_else(|| Error::CapacityExceeded {
                size: format!("{q}^{}", n - 1),
                budget: u64::MAX,
            })?;
        let f1 = 63 - size.leading_zeros();
        Ok(IndexCodebook {
            q,
            n,
            size,
            f1,
            table: None,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Index bits per block, `floor((N-1) log2 Q)`.
    pub fn f1(&self) -> u32 {
        self.f1
    }

    /// Total number of codewords, `Q^(N-1)`.
    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of codewords addressed by index bits, `2^f1`.
    pub fn used_count(&self) -> u64 {
        1u64 << self.f1
    }

    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    /// Writes the codeword of rank `rank` into `out` (length `N`).
    pub fn write_codeword(&self, rank: u64, out: &mut [usize]) {
        debug_assert!(rank < self.size && out.len() == self.n);
        if let Some(table) = &self.table {
            let start = rank as usize * self.n;
            for (o, &d) in out.iter_mut().zip(&table[start..start + self.n]) {
                *o = d as usize;
            }
            return;
        }
        let q = self.q as u64;
        let mut rest = rank;
        let mut sum = 0;
        for slot in out[..self.n - 1].iter_mut().rev() {
            *slot = (rest % q) as usize;
            sum += *slot;
            rest /= q;
        }
        out[self.n - 1] = (self.q - sum % self.q) % self.q;
    }

    pub fn codeword(&self, rank: u64) -> Result<IndexCodeword> {
        if rank >= self.size {
            return Err(Error::InvalidParams(format!(
                "rank {rank} out of range for {} codewords",
                self.size
            )));
        }
        let mut out = vec![0; self.n];
        self.write_codeword(rank, &mut out);
        Ok(IndexCodeword(out))
    }

    /// Rank of a tuple, checking that it is a codeword.
    pub fn rank_of(&self, symbols: &[usize]) -> Result<u64> {
        if symbols.len() != self.n {
            return Err(Error::NotInCodebook(format!(
                "length {} differs from N = {}",
                symbols.len(),
                self.n
            )));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= self.q) {
            return Err(Error::NotInCodebook(format!(
                "symbol {bad} outside Z_{}",
                self.q
            )));
        }
        if symbols.iter().sum::<usize>() % self.q != 0 {
            return Err(Error::NotInCodebook(format!(
                "digit sum is not 0 mod {}",
                self.q
            )));
        }
        Ok(self.rank_unchecked(symbols))
    }

    /// Base-`Q` value of the first `N - 1` digits.
    pub fn rank_unchecked(&self, symbols: &[usize]) -> u64 {
        symbols[..self.n - 1]
            .iter()
            .fold(0u64, |acc, &d| acc * self.q as u64 + d as u64)
    }

    /// All codewords in rank order.
    pub fn codewords(&self) -> impl Iterator<Item = IndexCodeword> + '_ {
        (0..self.size).map(move |r| {
            let mut out = vec![0; self.n];
            self.write_codeword(r, &mut out);
            IndexCodeword(out)
        })
    }
}

/// Increments the free digits as a base-`q` counter, last digit fastest.
pub(crate) fn advance_odometer(digits: &mut [usize], q: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < q {
            return;
        }
        *d = 0;
    }
}

/// Codeword addressed by `f1` index bits (most significant bit first).
pub fn bits_to_codeword(bits: &[u8], cb: &IndexCodebook) -> Result<IndexCodeword> {
    if bits.len() != cb.f1 as usize {
        return Err(Error::LengthMismatch {
            expected: cb.f1 as usize,
            actual: bits.len(),
        });
    }
    cb.codeword(bits_to_u64(bits)?)
}

/// Index bits of a used codeword.
pub fn codeword_to_bits(cw: &IndexCodeword, cb: &IndexCodebook) -> Result<Vec<u8>> {
    let rank = cb.rank_of(cw.symbols())?;
    if rank >= cb.used_count() {
        return Err(Error::UnusedCodeword);
    }
    Ok(u64_to_bits(rank, cb.f1))
}

pub fn hamming_distance(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Exact minimum pairwise Hamming distance by exhaustive scan.
pub fn min_hamming_distance(cb: &IndexCodebook) -> Result<usize> {
    if cb.len() < 2 {
        return Err(Error::TooFewCodewords);
    }
    let words: Vec<Vec<usize>> = cb.codewords().map(|c| c.0).collect();
    let mut best = usize::MAX;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            best = best.min(hamming_distance(a, b));
            if best == 1 {
                return Ok(1);
            }
        }
    }
    Ok(best)
}
