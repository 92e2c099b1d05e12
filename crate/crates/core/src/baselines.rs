//! Reference schemes: conventional OFDM, classical OFDM-IM (subcarrier
//! activation) and permutation-based MM-OFDM-IM. All use exhaustive ML
//! detection.
//!
//! Bit layout follows the proposed scheme: index bits first (selecting the
//! `rank`-th subset or permutation, combinadic and Lehmer order
//! respectively), then `log2 M` bits per data-carrying subcarrier in
//! ascending subcarrier order, Gray labeled.

use num_complex::Complex64;

use crate::analysis::SeReport;
use crate::bits::low_mask;
use crate::constellation::{build_psk_modes, Family, ModeSet};
use crate::modem::{QmmScheme, SchemeParams, MAX_BLOCK_BITS};
use crate::scheme::{check_ml_size, BlockScheme, Detector};
use crate::{Error, Result};

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

pub fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(mut rank: u64, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        loop {
            let with_next = binomial(n - next - 1, k - slot - 1);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Inverse of [`unrank_combination`]; `subset` must be strictly ascending.
pub fn rank_combination(subset: &[usize], n: usize) -> u64 {
    let k = subset.len();
    let mut rank = 0;
    let mut next = 0;
    for (slot, &c) in subset.iter().enumerate() {
        for skipped in next..c {
            rank += binomial(n - skipped - 1, k - slot - 1);
        }
        next = c + 1;
    }
    rank
}

/// The `rank`-th permutation of `0..n` in lexicographic (Lehmer code) order.
pub fn unrank_permutation(mut rank: u64, n: usize) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let block = factorial(n - 1 - i).unwrap_or(u64::MAX);
        let digit = (rank / block) as usize;
        rank %= block;
        out.push(remaining.remove(digit));
    }
    out
}

pub fn rank_permutation(perm: &[usize]) -> u64 {
    let n = perm.len();
    let mut rank = 0;
    for (i, &p) in perm.iter().enumerate() {
        let smaller_later = perm[i + 1..].iter().filter(|&&x| x < p).count() as u64;
        rank += smaller_later * factorial(n - 1 - i).unwrap_or(u64::MAX);
    }
    rank
}

fn floor_log2(v: u64) -> u32 {
    63 - v.leading_zeros()
}

fn check_modulation_order(m: usize) -> Result<()> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "M = {m} is not a power of two"
        )));
    }
    Ok(())
}

fn check_block_bits(f: u32) -> Result<()> {
    if f > MAX_BLOCK_BITS {
        return Err(Error::InvalidParams(format!(
            "{f} bits per block exceed the {MAX_BLOCK_BITS}-bit limit"
        )));
    }
    Ok(())
}

/// Best point index and metric of `y ≈ gain·s` over `points`.
fn best_point(y: Complex64, gain: Complex64, points: &[Complex64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, &s) in points.iter().enumerate() {
        let d = (y - gain * s).norm_sqr();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Conventional OFDM: the proposed scheme with a single mode.
pub fn ofdm_scheme(n: usize, m: usize) -> Result<QmmScheme> {
    QmmScheme::new(SchemeParams::new(1, n, m, Family::Psk)?)
}

pub fn ofdm_encode(bits: &[u8], scheme: &QmmScheme) -> Result<Vec<Complex64>> {
    Ok(scheme.encode(bits)?.symbols)
}

pub fn ofdm_detect(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    scheme: &QmmScheme,
) -> Result<Vec<u8>> {
    Ok(scheme.ml_detect(y, h, es)?.bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OfdmImParams {
    pub n: usize,
    /// Active subcarriers per block.
    pub ka: usize,
    pub m: usize,
}

impl OfdmImParams {
    pub fn new(n: usize, ka: usize, m: usize) -> Result<Self> {
        if ka == 0 || ka > n {
            return Err(Error::InvalidParams(format!(
                "need 1 <= Ka <= N, got Ka={ka}, N={n}"
            )));
        }
        check_modulation_order(m)?;
        let p = OfdmImParams { n, ka, m };
        check_block_bits(p.f1() + p.f2())?;
        Ok(p)
    }

    pub fn f1(&self) -> u32 {
        floor_log2(binomial(self.n, self.ka))
    }

    pub fn f2(&self) -> u32 {
        self.ka as u32 * self.m.trailing_zeros()
    }

    pub fn spectral_efficiency(&self) -> SeReport {
        SeReport::new(self.f1(), self.f2(), self.n)
    }
}

/// Classical OFDM-IM. Active subcarriers carry `M`-PSK scaled by `√(N/Ka)`
/// so every block has energy `N`.
#[derive(Debug, Clone)]
pub struct OfdmImScheme {
    params: OfdmImParams,
    constellation: ModeSet,
    scale: f64,
    /// Active-subcarrier bitmask of each used subset, in rank order.
    masks: Vec<u64>,
}

impl OfdmImScheme {
    pub fn new(params: OfdmImParams) -> Result<Self> {
        let params = OfdmImParams::new(params.n, params.ka, params.m)?;
        let used = 1u64 << params.f1();
        let masks = if params.f1() <= crate::modem::ML_SEARCH_LIMIT_BITS {
            (0..used)
                .map(|r| {
                    unrank_combination(r, params.n, params.ka)
                        .iter()
                        .fold(0u64, |acc, &c| acc | 1 << c)
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(OfdmImScheme {
            params,
            constellation: build_psk_modes(1, params.m)?,
            scale: (params.n as f64 / params.ka as f64).sqrt(),
            masks,
        })
    }

    pub fn params(&self) -> &OfdmImParams {
        &self.params
    }

    /// Active subcarriers addressed by index-bit rank `rank`.
    pub fn active_subcarriers(&self, rank: u64) -> Vec<usize> {
        unrank_combination(rank, self.params.n, self.params.ka)
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        self.encode_bits(bits)
    }

    pub fn detect(&self, y: &[Complex64], h: &[Complex64], es: f64) -> Result<Vec<u8>> {
        self.detect_bits(y, h, es, Detector::Ml)
    }
}

impl BlockScheme for OfdmImScheme {
    fn subcarriers(&self) -> usize {
        self.params.n
    }

    fn bits_per_block(&self) -> u32 {
        self.params.f1() + self.params.f2()
    }

    fn check_detector(&self, detector: Detector) -> Result<()> {
        match detector {
            Detector::Ml => check_ml_size(self.bits_per_block()),
            Detector::Lcml => Err(Error::InvalidParams(
                "the low-complexity detector applies to Q-MM-OFDM-IM only".into(),
            )),
        }
    }

    fn modulate_into(&self, word: u64, out: &mut [Complex64]) {
        let bps = self.constellation.bits_per_symbol();
        let f2 = self.params.f2();
        let active = self.active_subcarriers(word >> f2);
        out.fill(Complex64::new(0.0, 0.0));
        for (slot, &sc) in active.iter().enumerate() {
            let shift = bps * (self.params.ka - 1 - slot) as u32;
            let label = ((word >> shift) & low_mask(bps)) as usize;
            let k = self.constellation.index_of_label(label);
            out[sc] = self.constellation.mode(0)[k] * self.scale;
        }
    }

    fn demodulate(&self, y: &[Complex64], h: &[Complex64], es: f64, _detector: Detector) -> u64 {
        let n = self.params.n;
        let points = self.constellation.mode(0);
        let amp = es.sqrt() * self.scale;
        let silent: Vec<f64> = y.iter().map(|v| v.norm_sqr()).collect();
        let active: Vec<(usize, f64)> = y
            .iter()
            .zip(h)
            .map(|(&yn, &hn)| best_point(yn, hn * amp, points))
            .collect();
        let mut best = (0u64, f64::INFINITY);
        for (rank, &mask) in self.masks.iter().enumerate() {
            let mut total = 0.0;
            for sc in 0..n {
                total += if mask >> sc & 1 == 1 {
                    active[sc].1
                } else {
                    silent[sc]
                };
            }
            if total < best.1 {
                best = (rank as u64, total);
            }
        }
        let bps = self.constellation.bits_per_symbol();
        let labels = self
            .active_subcarriers(best.0)
            .iter()
            .fold(0u64, |acc, &sc| {
                (acc << bps) | self.constellation.label_of_index(active[sc].0) as u64
            });
        (best.0 << self.params.f2()) | labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MmOfdmImParams {
    pub n: usize,
    pub m: usize,
}

impl MmOfdmImParams {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams("N must be at least 2".into()));
        }
        if factorial(n).is_none() {
            return Err(Error::InvalidParams(format!("{n}! does not fit 64 bits")));
        }
        check_modulation_order(m)?;
        let p = MmOfdmImParams { n, m };
        check_block_bits(p.f1() + p.f2())?;
        Ok(p)
    }

    /// `floor(log2 N!)`.
    pub fn f1(&self) -> u32 {
        floor_log2(factorial(self.n).unwrap_or(u64::MAX))
    }

    pub fn f2(&self) -> u32 {
        self.n as u32 * self.m.trailing_zeros()
    }

    pub fn spectral_efficiency(&self) -> SeReport {
        SeReport::new(self.f1(), self.f2(), self.n)
    }
}

/// Permutation-based multi-mode OFDM-IM: `N` disjoint `M`-PSK modes, each
/// used on exactly one subcarrier per block.
#[derive(Debug, Clone)]
pub struct MmOfdmImScheme {
    params: MmOfdmImParams,
    modes: ModeSet,
    perms: Vec<Vec<usize>>,
}

impl MmOfdmImScheme {
    pub fn new(params: MmOfdmImParams) -> Result<Self> {
        let params = MmOfdmImParams::new(params.n, params.m)?;
        let perms = if params.f1() <= crate::modem::ML_SEARCH_LIMIT_BITS {
            (0..1u64 << params.f1())
                .map(|r| unrank_permutation(r, params.n))
                .collect()
        } else {
            Vec::new()
        };
        Ok(MmOfdmImScheme {
            params,
            modes: build_psk_modes(params.n, params.m)?,
            perms,
        })
    }

    pub fn params(&self) -> &MmOfdmImParams {
        &self.params
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        self.encode_bits(bits)
    }

    pub fn detect(&self, y: &[Complex64], h: &[Complex64], es: f64) -> Result<Vec<u8>> {
        self.detect_bits(y, h, es, Detector::Ml)
    }
}

impl BlockScheme for MmOfdmImScheme {
    fn subcarriers(&self) -> usize {
        self.params.n
    }

    fn bits_per_block(&self) -> u32 {
        self.params.f1() + self.params.f2()
    }

    fn check_detector(&self, detector: Detector) -> Result<()> {
        match detector {
            Detector::Ml => check_ml_size(self.bits_per_block()),
            Detector::Lcml => Err(Error::InvalidParams(
                "the low-complexity detector applies to Q-MM-OFDM-IM only".into(),
            )),
        }
    }

    fn modulate_into(&self, word: u64, out: &mut [Complex64]) {
        let n = self.params.n;
        let bps = self.modes.bits_per_symbol();
        let perm = unrank_permutation(word >> self.params.f2(), n);
        for (sc, &mode) in perm.iter().enumerate() {
            let shift = bps * (n - 1 - sc) as u32;
            let label = ((word >> shift) & low_mask(bps)) as usize;
            out[sc] = self.modes.mode(mode)[self.modes.index_of_label(label)];
        }
    }

    fn demodulate(&self, y: &[Complex64], h: &[Complex64], es: f64, _detector: Detector) -> u64 {
        let n = self.params.n;
        let sqrt_es = es.sqrt();
        // decisions[sc * n + mode]
        let decisions: Vec<(usize, f64)> = y
            .iter()
            .zip(h)
            .flat_map(|(&yn, &hn)| {
                (0..n).map(move |mode| best_point(yn, hn * sqrt_es, self.modes.mode(mode)))
            })
            .collect();
        let mut best = (0usize, f64::INFINITY);
        for (rank, perm) in self.perms.iter().enumerate() {
            let mut total = 0.0;
            for (sc, &mode) in perm.iter().enumerate() {
                total += decisions[sc * n + mode].1;
            }
            if total < best.1 {
                best = (rank, total);
            }
        }
        let bps = self.modes.bits_per_symbol();
        let labels = self.perms[best.0]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (sc, &mode)| {
                (acc << bps) | self.modes.label_of_index(decisions[sc * n + mode].0) as u64
            });
        ((best.0 as u64) << self.params.f2()) | labels
    }
}

pub fn ofdmim_encode(bits: &[u8], scheme: &OfdmImScheme) -> Result<Vec<Complex64>> {
    scheme.encode(bits)
}

pub fn ofdmim_detect(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    scheme: &OfdmImScheme,
) -> Result<Vec<u8>> {
    scheme.detect(y, h, es)
}

pub fn mmofdmim_encode(bits: &[u8], scheme: &MmOfdmImScheme) -> Result<Vec<Complex64>> {
    scheme.encode(bits)
}

pub fn mmofdmim_detect(
    y: &[Complex64],
    h: &[Complex64],
    es: f64,
    scheme: &MmOfdmImScheme,
) -> Result<Vec<u8>> {
    scheme.detect(y, h, es)
}
