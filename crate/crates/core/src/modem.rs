//! Block mapper and detectors.
//!
//! A block of `f = f1 + f2` bits is split into the index part (`f1` bits,
//! most significant first) which selects a codeword of the index codebook,
//! and `N` groups of `log2 M` bits which select one point inside the mode
//! assigned to each subcarrier.
//!
//! Two detectors are provided:
//!
//! * [`ml_detect`] minimizes `‖y − √Es·S·h‖²` over every transmittable block.
//!   For a fixed codeword the metric is a sum of per-subcarrier terms, so the
//!   best symbol of each (subcarrier, mode) pair is found once and the
//!   codeword search only adds `N` precomputed values per candidate. The
//!   result is the exhaustive argmin, including its tie-breaking order.
//! * [`lcml_detect`] decides the `N − 1` strongest subcarriers independently
//!   over the union constellation, infers the weakest subcarrier's mode from
//!   the zero-sum constraint and then picks its symbol inside that mode.

use num_complex::Complex64;

use crate::bits::{bits_to_u64, low_mask, u64_to_bits};
use crate::constellation::{
    build_psk_modes, build_qam_modes, check_qam_size, ComplexPoint, Family, ModeSet,
};
use crate::index_code::{
    advance_odometer, generate_codebook, hamming_distance, IndexCodebook, IndexCodeword,
    DEFAULT_ENUMERATION_BUDGET,
};
use crate::{Error, Result};

/// Largest `f1 + f2` the exhaustive ML detector accepts.
pub const ML_SEARCH_LIMIT_BITS: u32 = 24;

/// Largest block size in bits (blocks are carried in a `u64`).
pub const MAX_BLOCK_BITS: u32 = 63;

/// One Q-MM-OFDM-IM configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeParams {
    pub q: usize,
    pub n: usize,
    pub m: usize,
    pub family: Family,
}

impl SchemeParams {
    pub fn new(q: usize, n: usize, m: usize, family: Family) -> Result<Self> {
        let p = SchemeParams { q, n, m, family };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParams("Q must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParams("N must be at least 2".into()));
        }
        if self.m == 0 || !self.m.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "M = {} is not a power of two",
                self.m
            )));
        }
        if self.family == Family::Qam {
            check_qam_size(self.q, self.m)?;
        }
        let f = IndexCodebook::implicit(self.q, self.n)?.f1() as u64
            + self.n as u64 * self.m.trailing_zeros() as u64;
        if f > MAX_BLOCK_BITS as u64 {
            return Err(Error::InvalidParams(format!(
                "{f} bits per block exceed the {MAX_BLOCK_BITS}-bit limit"
            )));
        }
        Ok(())
    }

    /// Index bits, `floor((N-1) log2 Q)`.
    pub fn f1(&self) -> u32 {
        let size = (self.q as u128).pow(self.n as u32 - 1);
        127 - size.leading_zeros()
    }

    /// Modulation bits, `N log2 M`.
    pub fn f2(&self) -> u32 {
        self.n as u32 * self.m.trailing_zeros()
    }

    pub fn f(&self) -> u32 {
        self.f1() + self.f2()
    }

    pub fn build_modes(&self) -> Result<ModeSet> {
        match self.family {
            Family::Psk => build_psk_modes(self.q, self.m),
            Family::Qam => build_qam_modes(self.q, self.m),
        }
    }
}

/// Transmit vector of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymbols {
    pub symbols: Vec<ComplexPoint>,
    pub modes: IndexCodeword,
    /// Position of each symbol inside its mode.
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub modes: IndexCodeword,
    pub symbols: Vec<ComplexPoint>,
    pub bits: Vec<u8>,
    /// `‖y − √Es·S·h‖²` of the decided block.
    pub metric: f64,
}

fn check_consistent(p: &SchemeParams, ms: &ModeSet, cb: &IndexCodebook) -> Result<()> {
    if ms.q() != p.q || ms.m() != p.m || cb.q() != p.q || cb.n() != p.n {
        return Err(Error::InvalidParams(
            "mode set or codebook does not match the scheme parameters".into(),
        ));
    }
    Ok(())
}

fn check_lengths(p: &SchemeParams, y: &[Complex64], h: &[Complex64]) -> Result<()> {
    for len in [y.len(), h.len()] {
        if len != p.n {
            return Err(Error::LengthMismatch {
                expected: p.n,
                actual: len,
            });
        }
    }
    Ok(())
}

/// Maps an `f`-bit block word to its symbols.
fn encode_word(word: u64, p: &SchemeParams, ms: &ModeSet, cb: &IndexCodebook) -> BlockSymbols {
    let bps = ms.bits_per_symbol();
    let f2 = p.f2();
    let rank = word >> f2;
    let mut modes = vec![0; p.n];
    cb.write_codeword(rank, &mut modes);
    let points: Vec<usize> = (0..p.n)
        .map(|n| {
            let shift = bps * (p.n - 1 - n) as u32;
            ms.index_of_label(((word >> shift) & low_mask(bps)) as usize)
        })
        .collect();
    let symbols = modes
        .iter()
        .zip(&points)
        .map(|(&q, &k)| ms.mode(q)[k])
        .collect();
    BlockSymbols {
        symbols,
        modes: IndexCodeword(modes),
        points,
    }
}

/// Packs a decided (rank, points) pair back into a block word.
fn decision_word(rank: u64, points: &[usize], ms: &ModeSet, f2: u32) -> u64 {
    let bps = ms.bits_per_symbol();
    let labels = points
        .iter()
        .fold(0u64, |acc, &k| (acc << bps) | ms.label_of_index(k) as u64);
    (rank << f2) | labels
}

/// Maps `f` bits to one block.
pub fn encode_block(
    bits: &[u8],
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> Result<BlockSymbols> {
    check_consistent(p, ms, cb)?;
    if bits.len() != p.f() as usize {
        return Err(Error::LengthMismatch {
            expected: p.f() as usize,
            actual: bits.len(),
        });
    }
    Ok(encode_word(bits_to_u64(bits)?, p, ms, cb))
}

#[inline]
fn distance(y: Complex64, gain: Complex64, s: Complex64) -> f64 {
    (y - gain * s).norm_sqr()
}

/// Best point and its metric for every (subcarrier, mode) pair, mode-major
/// within each subcarrier. Ties keep the lower point index.
fn per_mode_decisions(
    y: &[Complex64],
    h: &[Complex64],
    sqrt_es: f64,
    ms: &ModeSet,
) -> (Vec<f64>, Vec<usize>) {
    let q = ms.q();
    let mut metric = vec![f64::INFINITY; y.len() * q];
    let mut point = vec![0; y.len() * q];
    for (n, (&yn, &hn)) in y.iter().zip(h).enumerate() {
        let gain = hn * sqrt_es;
        for mode in 0..q {
            let slot = n * q + mode;
            for (k, &s) in ms.mode(mode).iter().enumerate() {
                let d = distance(yn, gain, s);
                if d < metric[slot] {
                    metric[slot] = d;
                    point[slot] = k;
                }
            }
        }
    }
    (metric, point)
}

/// Exhaustive search over used codewords. Returns (rank, points, metric).
fn ml_search(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> (u64, Vec<usize>, f64) {
    let (q, n) = (ms.q(), y.len());
    let (metric, point) = per_mode_decisions(y, h, es.sqrt(), ms);
    let mut free = vec![0usize; n - 1];
    let mut best = (0u64, f64::INFINITY);
    for rank in 0..cb.used_count() {
        let mut sum = 0;
        let mut total = 0.0;
        for (k, &d) in free.iter().enumerate() {
            total += metric[k * q + d];
            sum += d;
        }
        total += metric[(n - 1) * q + (q - sum % q) % q];
        if total < best.1 {
            best = (rank, total);
        }
        advance_odometer(&mut free, q);
    }
    let mut modes = vec![0; n];
    cb.write_codeword(best.0, &mut modes);
    let points = modes
        .iter()
        .enumerate()
        .map(|(k, &mode)| point[k * q + mode])
        .collect();
    (best.0, points, best.1)
}

fn block_metric(y: &[Complex64], h: &[Complex64], es: f64, symbols: &[ComplexPoint]) -> f64 {
    let sqrt_es = es.sqrt();
    y.iter()
        .zip(h)
        .zip(symbols)
        .map(|((&yn, &hn), &s)| distance(yn, hn * sqrt_es, s))
        .sum()
}

fn result_from_decision(
    rank: u64,
    points: Vec<usize>,
    metric: f64,
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> DetectionResult {
    let mut modes = vec![0; p.n];
    cb.write_codeword(rank, &mut modes);
    let symbols = modes
        .iter()
        .zip(&points)
        .map(|(&q, &k)| ms.mode(q)[k])
        .collect();
    let word = decision_word(rank, &points, ms, p.f2());
    DetectionResult {
        modes: IndexCodeword(modes),
        symbols,
        bits: u64_to_bits(word, p.f()),
        metric,
    }
}

/// Optimal ML detection of one block under perfect channel knowledge.
///
/// `es` is the symbol energy of the `y = √Es·S·h + n` model.
pub fn ml_detect(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> Result<DetectionResult> {
    check_consistent(p, ms, cb)?;
    check_lengths(p, y, h)?;
    if p.f() > ML_SEARCH_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits: p.f(),
            limit: ML_SEARCH_LIMIT_BITS,
        });
    }
    let (rank, points, metric) = ml_search(y, h, es, ms, cb);
    Ok(result_from_decision(rank, points, metric, p, ms, cb))
}

/// Decision of the low-complexity detector before bit demapping.
struct LcmlDecision {
    modes: Vec<usize>,
    points: Vec<usize>,
    comparisons: u64,
}

fn lcml_search(y: &[Complex64], h: &[Complex64], es: f64, ms: &ModeSet) -> LcmlDecision {
    let (q, n) = (ms.q(), y.len());
    let sqrt_es = es.sqrt();
    // Stable sort: equal gains keep natural subcarrier order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[b].norm_sqr().total_cmp(&h[a].norm_sqr()));

    let mut modes = vec![0; n];
    let mut points = vec![0; n];
    let mut comparisons = 0u64;
    let mut mode_sum = 0;
    for &sc in &order[..n - 1] {
        let gain = h[sc] * sqrt_es;
        let mut best = f64::INFINITY;
        for mode in 0..q {
            for (k, &s) in ms.mode(mode).iter().enumerate() {
                comparisons += 1;
                let d = distance(y[sc], gain, s);
                if d < best {
                    best = d;
                    modes[sc] = mode;
                    points[sc] = k;
                }
            }
        }
        mode_sum += modes[sc];
    }

    let weakest = order[n - 1];
    let mode = (q - mode_sum % q) % q;
    modes[weakest] = mode;
    points[weakest] = best_point(y[weakest], h[weakest] * sqrt_es, ms.mode(mode));
    comparisons += ms.m() as u64;
    LcmlDecision {
        modes,
        points,
        comparisons,
    }
}

fn best_point(y: Complex64, gain: Complex64, mode: &[ComplexPoint]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, &s) in mode.iter().enumerate() {
        let d = distance(y, gain, s);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// Used codeword nearest in Hamming distance to `modes`, lowest rank first.
fn nearest_used_codeword(modes: &[usize], cb: &IndexCodebook) -> u64 {
    let n = modes.len();
    let q = cb.q();
    let mut free = vec![0usize; n - 1];
    let mut candidate = vec![0usize; n];
    let mut best = (0u64, usize::MAX);
    for rank in 0..cb.used_count() {
        candidate[..n - 1].copy_from_slice(&free);
        candidate[n - 1] = (q - free.iter().sum::<usize>() % q) % q;
        let d = hamming_distance(&candidate, modes);
        if d < best.1 {
            best = (rank, d);
            // Distinct codewords differ in at least two places.
            if d <= 2 {
                break;
            }
        }
        advance_odometer(&mut free, q);
    }
    best.0
}

/// Turns a low-complexity decision into a transmittable block. Unused
/// codewords are replaced by the nearest used codeword; subcarriers whose
/// mode changes get their symbol re-decided inside the new mode.
fn finalize_lcml(
    mut decision: LcmlDecision,
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> (u64, Vec<usize>, Vec<usize>, u64) {
    let mut rank = cb.rank_unchecked(&decision.modes);
    if rank >= cb.used_count() {
        rank = nearest_used_codeword(&decision.modes, cb);
        let mut remapped = vec![0; decision.modes.len()];
        cb.write_codeword(rank, &mut remapped);
        let sqrt_es = es.sqrt();
        for (sc, (&old, &new)) in decision.modes.iter().zip(&remapped).enumerate() {
            if old != new {
                decision.points[sc] = best_point(y[sc], h[sc] * sqrt_es, ms.mode(new));
            }
        }
        decision.modes = remapped;
    }
    (rank, decision.modes, decision.points, decision.comparisons)
}

/// Low-complexity subcarrier-wise ML detection.
pub fn lcml_detect(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> Result<DetectionResult> {
    lcml_detect_counted(y, h, es, p, ms, cb).map(|(r, _)| r)
}

/// [`lcml_detect`] that also reports how many squared Euclidean distances
/// the four detection steps evaluated.
pub fn lcml_detect_counted(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
) -> Result<(DetectionResult, u64)> {
    check_consistent(p, ms, cb)?;
    check_lengths(p, y, h)?;
    let decision = lcml_search(y, h, es, ms);
    let (rank, _, points, comparisons) = finalize_lcml(decision, y, h, es, ms, cb);
    let mut result = result_from_decision(rank, points, 0.0, p, ms, cb);
    result.metric = block_metric(y, h, es, &result.symbols);
    Ok((result, comparisons))
}

/// Bundles the parameters, modes and codebook of one scheme.
#[derive(Debug, Clone)]
pub struct QmmScheme {
    params: SchemeParams,
    modes: ModeSet,
    codebook: IndexCodebook,
}

impl QmmScheme {
    pub fn new(params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let modes = params.build_modes()?;
        let size = IndexCodebook::implicit(params.q, params.n)?.len();
        let codebook = if size <= DEFAULT_ENUMERATION_BUDGET {
            generate_codebook(params.q, params.n)?
        } else {
            IndexCodebook::implicit(params.q, params.n)?
        };
        Ok(QmmScheme {
            params,
            modes,
            codebook,
        })
    }

    /// Bundles prebuilt parts, checking that they agree with `params`.
    pub fn from_parts(
        params: SchemeParams,
        modes: ModeSet,
        codebook: IndexCodebook,
    ) -> Result<Self> {
        params.validate()?;
        check_consistent(&params, &modes, &codebook)?;
        Ok(QmmScheme {
            params,
            modes,
            codebook,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn codebook(&self) -> &IndexCodebook {
        &self.codebook
    }

    pub fn encode(&self, bits: &[u8]) -> Result<BlockSymbols> {
        encode_block(bits, &self.params, &self.modes, &self.codebook)
    }

    pub fn encode_word(&self, word: u64) -> BlockSymbols {
        encode_word(word, &self.params, &self.modes, &self.codebook)
    }

    pub fn ml_detect(&self, y: &[Complex64], h: &[Complex64], es: f64) -> Result<DetectionResult> {
        ml_detect(y, h, es, &self.params, &self.modes, &self.codebook)
    }

    pub fn lcml_detect(
        &self,
        y: &[Complex64],
        h: &[Complex64],
        es: f64,
    ) -> Result<DetectionResult> {
        lcml_detect(y, h, es, &self.params, &self.modes, &self.codebook)
    }

    /// ML decision as a block word. Lengths and the search limit are the
    /// caller's responsibility.
    pub(crate) fn ml_word(&self, y: &[Complex64], h: &[Complex64], es: f64) -> u64 {
        let (rank, points, _) = ml_search(y, h, es, &self.modes, &self.codebook);
        decision_word(rank, &points, &self.modes, self.params.f2())
    }

    pub(crate) fn lcml_word(&self, y: &[Complex64], h: &[Complex64], es: f64) -> u64 {
        let decision = lcml_search(y, h, es, &self.modes);
        let (rank, _, points, _) = finalize_lcml(decision, y, h, es, &self.modes, &self.codebook);
        decision_word(rank, &points, &self.modes, self.params.f2())
    }
}

/// Concatenates blocks into the frame vector `[s^1, ..., s^B]`.
pub fn assemble_frame(blocks: &[BlockSymbols]) -> Result<Vec<ComplexPoint>> {
    let first = blocks.first().ok_or(Error::EmptyFrame)?;
    let n = first.symbols.len();
    let mut frame = Vec::with_capacity(n * blocks.len());
    for b in blocks {
        if b.symbols.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: b.symbols.len(),
            });
        }
        frame.extend_from_slice(&b.symbols);
    }
    Ok(frame)
}

/// Splits received samples and channel gains into per-block views.
pub fn disassemble_frame<'a>(
    y: &'a [Complex64],
    h: &'a [Complex64],
    n: usize,
) -> Result<Vec<(&'a [Complex64], &'a [Complex64])>> {
    if y.is_empty() || n == 0 {
        return Err(Error::EmptyFrame);
    }
    if h.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: h.len(),
        });
    }
    if !y.len().is_multiple_of(n) {
        return Err(Error::LengthMismatch {
            expected: y.len().div_ceil(n) * n,
            actual: y.len(),
        });
    }
    Ok(y.chunks(n).zip(h.chunks(n)).collect())
}
