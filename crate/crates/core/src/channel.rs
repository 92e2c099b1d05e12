//! Frequency-domain Rayleigh fading with additive white Gaussian noise:
//! `y(t) = √Es·s(t)·h(t) + n(t)`, `h ~ CN(0, 1)`, `n ~ CN(0, N0)`, all i.i.d.
//! across subcarriers.
//!
//! Randomness comes from ChaCha8 streams. Every Monte Carlo batch draws from
//! its own stream, keyed by the master seed, the SNR point and the batch
//! number, with separate streams for payload bits, fading and noise. Results
//! therefore depend only on the seed, never on how batches are spread across
//! threads.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Payload = 0,
    Fading = 1,
    Noise = 2,
}

/// Stream for one (seed, point, batch, purpose) tuple.
///
/// The ChaCha key is the little-endian seed followed by the little-endian
/// point tag; the stream id is `4 * batch + purpose`.
pub fn substream(seed: u64, point: u64, batch: u64, purpose: StreamPurpose) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((batch << 2) | purpose as u64);
    rng
}

/// Uniform variate in `(0, 1]` with 53 bits of resolution.
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Circularly symmetric complex Gaussian with the given variance, from one
/// Box–Muller pair.
pub fn complex_gaussian<R: RngCore>(rng: &mut R, variance: f64) -> Complex64 {
    let radius = (-variance * open_unit(rng).ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * open_unit(rng);
    Complex64::from_polar(radius, angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    es: f64,
    n0: f64,
}

impl NoiseParams {
    pub fn new(es: f64, n0: f64) -> Result<Self> {
        if !(es > 0.0 && n0 > 0.0 && es.is_finite() && n0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "Es = {es} and N0 = {n0} must be positive"
            )));
        }
        Ok(NoiseParams { es, n0 })
    }

    /// Noise variance for a given `Es` and `10 log10(Es/N0)`.
    pub fn from_snr_db(es: f64, snr_db: f64) -> Result<Self> {
        NoiseParams::new(es, es / 10f64.powf(snr_db / 10.0))
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn es_over_n0(&self) -> f64 {
        self.es / self.n0
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.es_over_n0().log10()
    }
}

pub fn draw_channel<R: RngCore>(n_subcarriers: usize, rng: &mut R) -> ChannelRealization {
    ChannelRealization {
        h: (0..n_subcarriers)
            .map(|_| complex_gaussian(rng, 1.0))
            .collect(),
    }
}

pub fn apply_channel<R: RngCore>(
    s: &[Complex64],
    h: &ChannelRealization,
    np: &NoiseParams,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut y = vec![Complex64::new(0.0, 0.0); s.len()];
    apply_channel_into(s, &h.h, np, rng, &mut y)?;
    Ok(y)
}

/// [`apply_channel`] writing into a caller-provided buffer.
pub fn apply_channel_into<R: RngCore>(
    s: &[Complex64],
    h: &[Complex64],
    np: &NoiseParams,
    rng: &mut R,
    y: &mut [Complex64],
) -> Result<()> {
    if h.len() != s.len() || y.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            actual: if h.len() != s.len() { h.len() } else { y.len() },
        });
    }
    let sqrt_es = np.es.sqrt();
    for ((out, &sym), &gain) in y.iter_mut().zip(s).zip(h) {
        *out = sqrt_es * sym * gain + complex_gaussian(rng, np.n0);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRAWS: usize = 1_000_000;

    #[test]
    fn fading_has_unit_power_and_circular_symmetry() {
        let mut rng = substream(0, 0, 0, StreamPurpose::Fading);
        let h = draw_channel(DRAWS, &mut rng).h;
        let power = h.iter().map(|g| g.norm_sqr()).sum::<f64>() / DRAWS as f64;
        let var_re = h.iter().map(|g| g.re * g.re).sum::<f64>() / DRAWS as f64;
        let var_im = h.iter().map(|g| g.im * g.im).sum::<f64>() / DRAWS as f64;
        assert!((power - 1.0).abs() < 0.01, "{power}");
        assert!((var_re - 0.5).abs() < 0.01, "{var_re}");
        assert!((var_im - 0.5).abs() < 0.01, "{var_im}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = draw_channel(16, &mut substream(42, 1, 7, StreamPurpose::Fading));
        let b = draw_channel(16, &mut substream(42, 1, 7, StreamPurpose::Fading));
        assert_eq!(a, b);
        for other in [
            substream(43, 1, 7, StreamPurpose::Fading),
            substream(42, 2, 7, StreamPurpose::Fading),
            substream(42, 1, 8, StreamPurpose::Fading),
            substream(42, 1, 7, StreamPurpose::Noise),
        ] {
            let mut other = other;
            assert_ne!(a, draw_channel(16, &mut other));
        }
    }

    #[test]
    fn fading_power_is_unit_exponential() {
        // Kolmogorov–Smirnov against Exp(1) at significance 0.01.
        let n = 100_000;
        let mut rng = substream(5, 0, 0, StreamPurpose::Fading);
        let mut power: Vec<f64> = draw_channel(n, &mut rng)
            .h
            .iter()
            .map(|g| g.norm_sqr())
            .collect();
        power.sort_by(f64::total_cmp);
        let d = power
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-x).exp();
                (cdf - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - cdf)
            })
            .fold(0.0, f64::max);
        let critical = 1.6276 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn vanishing_noise_leaves_the_faded_signal() {
        let mut rng = substream(1, 1, 1, StreamPurpose::Noise);
        let h = draw_channel(64, &mut rng);
        let s: Vec<_> = (0..64)
            .map(|k| Complex64::from_polar(1.0, k as f64))
            .collect();
        let np = NoiseParams::new(2.0, 1e-300).unwrap();
        let y = apply_channel(&s, &h, &np, &mut rng).unwrap();
        for ((yv, sv), hv) in y.iter().zip(&s).zip(&h.h) {
            assert!((yv - 2f64.sqrt() * sv * hv).norm() < 1e-12);
        }
    }

    #[test]
    fn received_power_is_signal_plus_noise() {
        let n0 = 0.25;
        let mut fading = substream(2, 0, 0, StreamPurpose::Fading);
        let mut noise = substream(2, 0, 0, StreamPurpose::Noise);
        let h = draw_channel(DRAWS, &mut fading);
        let s = vec![Complex64::new(1.0, 0.0); DRAWS];
        let np = NoiseParams::new(1.0, n0).unwrap();
        let y = apply_channel(&s, &h, &np, &mut noise).unwrap();
        let power = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / DRAWS as f64;
        assert!((power / (1.0 + n0) - 1.0).abs() < 0.01, "{power}");
    }

    #[test]
    fn snr_bookkeeping() {
        let np = NoiseParams::from_snr_db(1.0, 20.0).unwrap();
        assert!((np.n0() - 0.01).abs() < 1e-15);
        assert!((np.snr_db() - 20.0).abs() < 1e-12);
        assert!(NoiseParams::new(1.0, 0.0).is_err());
        let h = draw_channel(3, &mut substream(0, 0, 0, StreamPurpose::Fading));
        let mut rng = substream(0, 0, 0, StreamPurpose::Noise);
        assert!(matches!(
            apply_channel(&[Complex64::new(1.0, 0.0); 2], &h, &np, &mut rng),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
