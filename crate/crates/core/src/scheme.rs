//! Common interface over the proposed scheme and the baselines, used by the
//! Monte Carlo harness and the union bound.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::analysis::SeReport;
use crate::baselines::{ofdm_scheme, MmOfdmImParams, MmOfdmImScheme, OfdmImParams, OfdmImScheme};
use crate::bits::{bits_to_u64, u64_to_bits};
use crate::constellation::Family;
use crate::modem::{QmmScheme, SchemeParams, ML_SEARCH_LIMIT_BITS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Ml,
    Lcml,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Ml => "ml",
            Detector::Lcml => "lcml",
        })
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(Detector::Ml),
            "lcml" | "lc-ml" => Ok(Detector::Lcml),
            other => Err(Error::InvalidParams(format!("unknown detector '{other}'"))),
        }
    }
}

/// A block modulation scheme with word-level mapping and detection.
///
/// Words carry `bits_per_block()` bits, first bit in the most significant
/// position.
pub trait BlockScheme: Send + Sync {
    fn subcarriers(&self) -> usize;

    fn bits_per_block(&self) -> u32;

    /// Checks that `detector` can run on this scheme.
    fn check_detector(&self, detector: Detector) -> Result<()>;

    fn modulate_into(&self, word: u64, out: &mut [Complex64]);

    /// Decides a block word. `y` and `h` have `subcarriers()` entries and
    /// `detector` has passed [`BlockScheme::check_detector`].
    fn demodulate(&self, y: &[Complex64], h: &[Complex64], es: f64, detector: Detector) -> u64;

    fn modulate(&self, word: u64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.subcarriers()];
        self.modulate_into(word, &mut out);
        out
    }

    fn encode_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() != self.bits_per_block() as usize {
            return Err(Error::LengthMismatch {
                expected: self.bits_per_block() as usize,
                actual: bits.len(),
            });
        }
        Ok(self.modulate(bits_to_u64(bits)?))
    }

    fn detect_bits(
        &self,
        y: &[Complex64],
        h: &[Complex64],
        es: f64,
        detector: Detector,
    ) -> Result<Vec<u8>> {
        self.check_detector(detector)?;
        for len in [y.len(), h.len()] {
            if len != self.subcarriers() {
                return Err(Error::LengthMismatch {
                    expected: self.subcarriers(),
                    actual: len,
                });
            }
        }
        Ok(u64_to_bits(
            self.demodulate(y, h, es, detector),
            self.bits_per_block(),
        ))
    }
}

/// Rejects exhaustive ML on blocks larger than the search limit.
pub(crate) fn check_ml_size(bits: u32) -> Result<()> {
    if bits > ML_SEARCH_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits,
            limit: ML_SEARCH_LIMIT_BITS,
        });
    }
    Ok(())
}

impl BlockScheme for QmmScheme {
    fn subcarriers(&self) -> usize {
        self.params().n
    }

    fn bits_per_block(&self) -> u32 {
        self.params().f()
    }

    fn check_detector(&self, detector: Detector) -> Result<()> {
        match detector {
            Detector::Ml => check_ml_size(self.params().f()),
            Detector::Lcml => Ok(()),
        }
    }

    fn modulate_into(&self, word: u64, out: &mut [Complex64]) {
        out.copy_from_slice(&self.encode_word(word).symbols);
    }

    fn demodulate(&self, y: &[Complex64], h: &[Complex64], es: f64, detector: Detector) -> u64 {
        match detector {
            Detector::Ml => self.ml_word(y, h, es),
            Detector::Lcml => self.lcml_word(y, h, es),
        }
    }
}

/// Scheme family as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Qmm,
    Ofdm,
    OfdmIm,
    MmOfdmIm,
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qmm" => Ok(SchemeKind::Qmm),
            "ofdm" => Ok(SchemeKind::Ofdm),
            "ofdmim" | "ofdm-im" => Ok(SchemeKind::OfdmIm),
            "mmofdmim" | "mm-ofdm-im" => Ok(SchemeKind::MmOfdmIm),
            other => Err(Error::InvalidParams(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Which scheme to build, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSpec {
    Qmm(SchemeParams),
    /// Conventional OFDM with `M`-PSK on `n` subcarriers per block.
    Ofdm {
        n: usize,
        m: usize,
    },
    OfdmIm(OfdmImParams),
    MmOfdmIm(MmOfdmImParams),
}

impl SchemeSpec {
    /// Assembles a spec from command-line style fields. `q` and `ka` are
    /// ignored where they do not apply; `ka` defaults to `n − 1`.
    pub fn from_fields(
        kind: SchemeKind,
        q: usize,
        n: usize,
        m: usize,
        ka: Option<usize>,
        family: Family,
    ) -> Result<Self> {
        if kind != SchemeKind::Qmm && family != Family::Psk {
            return Err(Error::InvalidParams("baseline schemes use PSK only".into()));
        }
        Ok(match kind {
            SchemeKind::Qmm => SchemeSpec::Qmm(SchemeParams::new(q, n, m, family)?),
            SchemeKind::Ofdm => {
                SchemeParams::new(1, n, m, Family::Psk)?;
                SchemeSpec::Ofdm { n, m }
            }
            SchemeKind::OfdmIm => {
                SchemeSpec::OfdmIm(OfdmImParams::new(n, ka.unwrap_or(n.saturating_sub(1)), m)?)
            }
            SchemeKind::MmOfdmIm => SchemeSpec::MmOfdmIm(MmOfdmImParams::new(n, m)?),
        })
    }

    pub fn build(&self) -> Result<Box<dyn BlockScheme>> {
        Ok(match *self {
            SchemeSpec::Qmm(p) => Box::new(QmmScheme::new(p)?),
            SchemeSpec::Ofdm { n, m } => Box::new(ofdm_scheme(n, m)?),
            SchemeSpec::OfdmIm(p) => Box::new(OfdmImScheme::new(p)?),
            SchemeSpec::MmOfdmIm(p) => Box::new(MmOfdmImScheme::new(p)?),
        })
    }

    /// Short CSV-safe name, e.g. `qmm-psk-q4-n4-m2`.
    pub fn label(&self) -> String {
        match *self {
            SchemeSpec::Qmm(p) => format!("qmm-{}-q{}-n{}-m{}", p.family, p.q, p.n, p.m),
            SchemeSpec::Ofdm { n, m } => format!("ofdm-psk-n{n}-m{m}"),
            SchemeSpec::OfdmIm(p) => format!("ofdmim-n{}-k{}-m{}", p.n, p.ka, p.m),
            SchemeSpec::MmOfdmIm(p) => format!("mmofdmim-n{}-m{}", p.n, p.m),
        }
    }

    pub fn spectral_efficiency(&self) -> Result<SeReport> {
        Ok(match *self {
            SchemeSpec::Qmm(p) => crate::analysis::spectral_efficiency(&p),
            SchemeSpec::Ofdm { n, m } => {
                crate::analysis::spectral_efficiency(&SchemeParams::new(1, n, m, Family::Psk)?)
            }
            SchemeSpec::OfdmIm(p) => p.spectral_efficiency(),
            SchemeSpec::MmOfdmIm(p) => p.spectral_efficiency(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_csv_safe() {
        let specs = [
            SchemeSpec::Qmm(SchemeParams::new(4, 4, 2, Family::Psk).unwrap()),
            SchemeSpec::Ofdm { n: 4, m: 4 },
            SchemeSpec::OfdmIm(OfdmImParams::new(4, 3, 4).unwrap()),
            SchemeSpec::MmOfdmIm(MmOfdmImParams::new(4, 2).unwrap()),
        ];
        let labels: Vec<_> = specs.iter().map(SchemeSpec::label).collect();
        assert_eq!(
            labels,
            [
                "qmm-psk-q4-n4-m2",
                "ofdm-psk-n4-m4",
                "ofdmim-n4-k3-m4",
                "mmofdmim-n4-m2"
            ]
        );
    }

    #[test]
    fn specs_from_fields() {
        let spec = SchemeSpec::from_fields("ofdm-im".parse().unwrap(), 0, 4, 4, None, Family::Psk);
        assert_eq!(spec.unwrap().label(), "ofdmim-n4-k3-m4");
        let spec = SchemeSpec::from_fields(SchemeKind::Qmm, 8, 4, 2, None, Family::Qam).unwrap();
        assert_eq!(spec.label(), "qmm-qam-q8-n4-m2");
        assert!(SchemeSpec::from_fields(SchemeKind::Ofdm, 1, 4, 4, None, Family::Qam).is_err());
        assert!("fsk".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn detector_support() {
        let ofdmim = SchemeSpec::OfdmIm(OfdmImParams::new(4, 3, 4).unwrap())
            .build()
            .unwrap();
        assert!(ofdmim.check_detector(Detector::Ml).is_ok());
        assert!(ofdmim.check_detector(Detector::Lcml).is_err());
        assert_eq!("LC-ML".parse::<Detector>().unwrap(), Detector::Lcml);
    }

    #[test]
    fn bit_level_wrappers_check_lengths() {
        let s = SchemeSpec::Qmm(SchemeParams::new(2, 2, 2, Family::Psk).unwrap())
            .build()
            .unwrap();
        assert!(s.encode_bits(&[0, 1]).is_err());
        let x = s.encode_bits(&[1, 0, 1]).unwrap();
        let h = [Complex64::new(1.0, 0.0); 2];
        assert_eq!(
            s.detect_bits(&x, &h, 1.0, Detector::Ml).unwrap(),
            vec![1, 0, 1]
        );
        assert!(s.detect_bits(&x[..1], &h, 1.0, Detector::Ml).is_err());
    }
}
