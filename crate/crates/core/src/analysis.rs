//! Closed-form performance measures: spectral efficiency, detector
//! complexity, pairwise error probabilities over Rayleigh fading and the
//! union bound on the bit error rate.

use std::f64::consts::{E, LN_2, PI};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::constellation::ModeSet;
use crate::index_code::IndexCodebook;
use crate::modem::{QmmScheme, SchemeParams};
use crate::scheme::BlockScheme;
use crate::{Error, Result};

/// Largest block size, in bits, the union bound enumerates (`4^f` pairs).
pub const UNION_BOUND_LIMIT_BITS: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeReport {
    pub f1: u32,
    pub f2: u32,
    pub n: usize,
    /// Bits per subcarrier, `(f1 + f2) / N`.
    pub eta: f64,
}

impl SeReport {
    pub fn new(f1: u32, f2: u32, n: usize) -> Self {
        SeReport {
            f1,
            f2,
            n,
            eta: (f1 + f2) as f64 / n as f64,
        }
    }
}

pub fn spectral_efficiency(p: &SchemeParams) -> SeReport {
    SeReport::new(p.f1(), p.f2(), p.n)
}

/// Number of modes at which index-only modulation asymptotically matches
/// the rate of MM-OFDM-IM and of OFDM-OFSPM: `(NM/e, NM/(e ln 2))`.
pub fn equivalent_q_for_benchmarks(n: usize, m: usize) -> (f64, f64) {
    let nm = (n * m) as f64;
    (nm / E, nm / (E * LN_2))
}

/// Low-complexity detector cost per subcarrier, `QM − QM/N + M/N`
/// squared-distance evaluations.
pub fn lcml_complexity(p: &SchemeParams) -> f64 {
    let (q, n, m) = (p.q as f64, p.n as f64, p.m as f64);
    q * m - q * m / n + m / n
}

/// Low-complexity detector cost per block, `QM(N−1) + M`.
pub fn lcml_comparisons_per_block(p: &SchemeParams) -> u64 {
    (p.q * p.m * (p.n - 1) + p.m) as u64
}

/// One ordered block pair of the union bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseEvent {
    /// `|s_n^i − s_n^j|²` per subcarrier.
    pub d: Vec<f64>,
    /// Bits in which the two blocks' labels differ.
    pub bit_errors: u32,
}

/// How the pairwise error probability is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PepMethod {
    /// Exponential approximation of the Gaussian Q-function.
    #[default]
    Approx,
    /// Numerical integration of Craig's form.
    Exact,
}

impl PepMethod {
    pub fn eval(self, d: &[f64], es_over_n0: f64) -> f64 {
        match self {
            PepMethod::Approx => pep_approx(d, es_over_n0),
            PepMethod::Exact => pep_exact(d, es_over_n0),
        }
    }
}

/// Pairwise error probability over i.i.d. Rayleigh fading, from
/// `Q(x) ≈ e^{−x²/2}/12 + e^{−2x²/3}/4`.
pub fn pairwise_error_probability(e: &PairwiseEvent, es_over_n0: f64) -> f64 {
    pep_approx(&e.d, es_over_n0)
}

pub fn pep_approx(d: &[f64], es_over_n0: f64) -> f64 {
    let mut a = 1.0;
    let mut b = 1.0;
    for &dn in d {
        a /= 1.0 + es_over_n0 * dn / 4.0;
        b /= 1.0 + es_over_n0 * dn / 3.0;
    }
    a / 12.0 + b / 4.0
}

/// `(1/π) ∫_0^{π/2} Π_n 1/(1 + γ d_n / (4 sin²θ)) dθ` by 64-point
/// Gauss–Legendre quadrature.
pub fn pep_exact(d: &[f64], es_over_n0: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_64();
    let half = PI / 4.0;
    let mut total = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        let theta = half * (x + 1.0);
        let s2 = theta.sin().powi(2);
        let mut prod = 1.0;
        for &dn in d {
            prod /= 1.0 + es_over_n0 * dn / (4.0 * s2);
        }
        total += w * prod;
    }
    total * half / PI
}

fn gauss_legendre_64() -> (&'static [f64], &'static [f64]) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = RULE.get_or_init(|| gauss_legendre(64));
    (x, w)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Sum by recursive halving, so the rounding pattern depends only on the
/// length of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Union bound on the BER of the proposed scheme at one `Es/N0` (linear).
pub fn union_bound_ber(
    p: &SchemeParams,
    ms: &ModeSet,
    cb: &IndexCodebook,
    es_over_n0: f64,
) -> Result<f64> {
    let scheme = QmmScheme::from_parts(*p, ms.clone(), cb.clone())?;
    Ok(union_bound_curve(&scheme, &[es_over_n0], PepMethod::Approx)?[0])
}

/// Union bound `(1/(f 2^f)) Σ_{i≠j} PEP(i→j) D(i→j)` of any block scheme,
/// for each linear `Es/N0` in `es_over_n0`. All `2^f` transmittable blocks
/// are enumerated.
pub fn union_bound_curve(
    scheme: &dyn BlockScheme,
    es_over_n0: &[f64],
    method: PepMethod,
) -> Result<Vec<f64>> {
    let f = scheme.bits_per_block();
    if f > UNION_BOUND_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits: f,
            limit: UNION_BOUND_LIMIT_BITS,
        });
    }
    if f == 0 {
        return Err(Error::DegenerateInput("blocks carry no bits".into()));
    }
    if let Some(&g) = es_over_n0.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParams(format!(
            "Es/N0 = {g} must be positive"
        )));
    }
    let n = scheme.subcarriers();
    let words = 1usize << f;
    let blocks: Vec<_> = (0..words as u64).map(|w| scheme.modulate(w)).collect();

    // Row i sums the pairs (i, j > i). Every pair term is symmetric, so the
    // full double sum is twice the upper triangle.
    let rows: Vec<Vec<f64>> = (0..words)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; es_over_n0.len()];
            let mut d = vec![0.0; n];
            for j in i + 1..words {
                for (dn, (a, b)) in d.iter_mut().zip(blocks[i].iter().zip(&blocks[j])) {
                    *dn = (a - b).norm_sqr();
                }
                let weight = (i ^ j).count_ones() as f64;
                for (slot, &g) in acc.iter_mut().zip(es_over_n0) {
                    *slot += weight * method.eval(&d, g);
                }
            }
            acc
        })
        .collect();

    let scale = 2.0 / (f as f64 * words as f64);
    Ok((0..es_over_n0.len())
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            scale * pairwise_sum(&column)
        })
        .collect())
}

/// Smallest number of subcarriers on which two distinct transmittable
/// blocks differ; the diversity order of ML detection over Rayleigh fading.
pub fn min_block_distance(scheme: &dyn BlockScheme) -> Result<usize> {
    let f = scheme.bits_per_block();
    if f > UNION_BOUND_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits: f,
            limit: UNION_BOUND_LIMIT_BITS,
        });
    }
    let blocks: Vec<_> = (0..1u64 << f).map(|w| scheme.modulate(w)).collect();
    let mut best = usize::MAX;
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            let differing = a
                .iter()
                .zip(b)
                .filter(|(x, y)| (*x - *y).norm() > 1e-9)
                .count();
            best = best.min(differing);
        }
    }
    if best == usize::MAX {
        return Err(Error::TooFewCodewords);
    }
    Ok(best)
}

/// Empirical diversity order: the negated least-squares slope of
/// `log10(ber)` against `snr_db / 10`.
pub fn diversity_slope(ber_points: &[(f64, f64)]) -> Result<f64> {
    if ber_points.len() < 2 {
        return Err(Error::DegenerateInput("need at least two points".into()));
    }
    if let Some(&(snr, ber)) = ber_points.iter().find(|(_, b)| b.is_nan() || *b <= 0.0) {
        return Err(Error::DegenerateInput(format!(
            "BER {ber} at {snr} dB is not positive"
        )));
    }
    let lo = ber_points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = ber_points
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 10.0 {
        return Err(Error::DegenerateInput(format!(
            "SNR span {} dB is below 10 dB",
            hi - lo
        )));
    }
    let k = ber_points.len() as f64;
    let xs: Vec<f64> = ber_points.iter().map(|p| p.0 / 10.0).collect();
    let ys: Vec<f64> = ber_points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}
