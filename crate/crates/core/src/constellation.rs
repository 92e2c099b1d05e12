//! Disjoint constellations ("modes").
//!
//! A [`ModeSet`] holds `Q` pairwise disjoint `M`-point constellations whose
//! union has unit average energy. PSK modes are rotated copies of `M`-PSK;
//! QAM modes are the leaves of a binary Ungerboeck partition of a
//! rectangular `QM`-point grid.
//!
//! Point order within a mode fixes the bit labeling used by the modem:
//! PSK points are ordered by angle and Gray labeled, QAM points are ordered
//! by the remaining partition-path bits and labeled by that path.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bits::{gray_decode, gray_encode};
use crate::{Error, Result};

/// A single constellation symbol.
pub type ComplexPoint = Complex64;

/// Two points closer than this are considered the same point.
pub const DISJOINT_TOL: f64 = 1e-9;
/// Allowed deviation of the union average energy from one.
pub const ENERGY_TOL: f64 = 1e-9;

/// Sizes `Q * M` the QAM partitioner accepts.
pub const QAM_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Psk,
    Qam,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Psk => "psk",
            Family::Qam => "qam",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psk" => Ok(Family::Psk),
            "qam" => Ok(Family::Qam),
            other => Err(Error::InvalidParams(format!(
                "unknown constellation family '{other}'"
            ))),
        }
    }
}

/// `Q` disjoint constellations of `M` points each.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    family: Family,
    m: usize,
    modes: Vec<Vec<ComplexPoint>>,
}

impl ModeSet {
    /// Wraps explicit mode point lists, checking every mode-set invariant.
    pub fn new(family: Family, modes: Vec<Vec<ComplexPoint>>) -> Result<Self> {
        let m = modes.first().map_or(0, Vec::len);
        if modes.is_empty() || m == 0 {
            return Err(Error::InvalidParams(
                "a mode set needs at least one point".into(),
            ));
        }
        if !m.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "mode size {m} is not a power of two"
            )));
        }
        if let Some(bad) = modes.iter().position(|mode| mode.len() != m) {
            return Err(Error::InvalidParams(format!(
                "mode {bad} has {} points, expected {m}",
                modes[bad].len()
            )));
        }
        if modes
            .iter()
            .flatten()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(Error::InvalidParams(
                "non-finite constellation point".into(),
            ));
        }
        let set = ModeSet { family, m, modes };
        let energy = set.average_energy();
        if (energy - 1.0).abs() > ENERGY_TOL {
            return Err(Error::InvalidParams(format!(
                "union average energy is {energy}, expected 1"
            )));
        }
        if set.min_intermode_distance() <= DISJOINT_TOL {
            return Err(Error::InvalidParams("modes are not disjoint".into()));
        }
        Ok(set)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of modes `Q`.
    pub fn q(&self) -> usize {
        self.modes.len()
    }

    /// Points per mode `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m.trailing_zeros()
    }

    pub fn mode(&self, q: usize) -> &[ComplexPoint] {
        &self.modes[q]
    }

    pub fn modes(&self) -> &[Vec<ComplexPoint>] {
        &self.modes
    }

    /// Position within a mode of the point that carries bit label `label`.
    pub fn index_of_label(&self, label: usize) -> usize {
        match self.family {
            Family::Psk => gray_decode(label),
            Family::Qam => label,
        }
    }

    /// Bit label carried by the point at position `index` of a mode.
    pub fn label_of_index(&self, index: usize) -> usize {
        match self.family {
            Family::Psk => gray_encode(index),
            Family::Qam => index,
        }
    }

    pub fn average_energy(&self) -> f64 {
        let total: f64 = self.modes.iter().flatten().map(|p| p.norm_sqr()).sum();
        total / (self.q() * self.m) as f64
    }

    /// Smallest distance between points of different modes, or infinity
    /// for a single mode.
    pub fn min_intermode_distance(&self) -> f64 {
        min_intermode_distance(self)
    }
}

/// Rotated `M`-PSK modes: mode `q` holds `exp(j(2πk/M + 2πq/(MQ)))`.
pub fn build_psk_modes(q: usize, m: usize) -> Result<ModeSet> {
    if q == 0 || m == 0 {
        return Err(Error::InvalidParams("Q and M must be at least 1".into()));
    }
    let modes = (0..q)
        .map(|mode| {
            let offset = 2.0 * PI * mode as f64 / (m * q) as f64;
            (0..m)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64 + offset))
                .collect()
        })
        .collect();
    ModeSet::new(Family::Psk, modes)
}

/// Rejects (Q, M) pairs the QAM partitioning cannot produce.
pub fn check_qam_size(q: usize, m: usize) -> Result<()> {
    let size = q.checked_mul(m).unwrap_or(0);
    if !q.is_power_of_two() || !m.is_power_of_two() || !QAM_SIZES.contains(&size) {
        return Err(Error::UnsupportedSize(format!(
            "QAM partitioning needs Q a power of two and QM in {QAM_SIZES:?}, got Q={q}, M={m}"
        )));
    }
    Ok(())
}

/// Set-partitioned QAM modes.
///
/// The `QM`-point rectangular grid (`2^ceil(k/2)` columns by `2^floor(k/2)`
/// rows, `k = log2 QM`) is normalized to unit average energy and split
/// `log2 QM` times. Odd splits separate the two checkerboard cosets, even
/// splits separate the two cosets of the doubled lattice, so every split
/// grows the minimum intra-subset distance by √2. Mode `q` is the subset
/// whose first `log2 Q` split decisions, read most significant first, equal
/// `q`; the remaining decisions order the points within the mode.
pub fn build_qam_modes(q: usize, m: usize) -> Result<ModeSet> {
    check_qam_size(q, m)?;
    let size = q * m;
    let levels = size.trailing_zeros();
    let cols = 1usize << levels.div_ceil(2);
    let rows = 1usize << (levels / 2);
    let coord = |i: usize, len: usize| 2.0 * i as f64 - (len as f64 - 1.0);

    let mut energy = 0.0;
    for i in 0..cols {
        for j in 0..rows {
            energy += coord(i, cols).powi(2) + coord(j, rows).powi(2);
        }
    }
    let scale = (size as f64 / energy).sqrt();

    let mut modes = vec![vec![Complex64::new(0.0, 0.0); m]; q];
    let point_bits = m.trailing_zeros();
    for i in 0..cols {
        for j in 0..rows {
            let label = partition_label(i, j, levels);
            let point = Complex64::new(coord(i, cols) * scale, coord(j, rows) * scale);
            modes[label >> point_bits][label & (m - 1)] = point;
        }
    }
    ModeSet::new(Family::Qam, modes)
}

/// Ungerboeck partition path of grid point `(i, j)`, first split in the most
/// significant bit.
fn partition_label(mut i: usize, mut j: usize, levels: u32) -> usize {
    let mut label = 0;
    let mut level = 0;
    while level < levels {
        label = (label << 1) | ((i + j) & 1);
        level += 1;
        if level == levels {
            break;
        }
        label = (label << 1) | (i & 1);
        level += 1;
        i >>= 1;
        j >>= 1;
    }
    label
}

/// Minimum Euclidean distance between points of different modes;
/// `f64::INFINITY` when there is only one mode.
pub fn min_intermode_distance(ms: &ModeSet) -> f64 {
    let mut best = f64::INFINITY;
    for (a, mode_a) in ms.modes.iter().enumerate() {
        for mode_b in &ms.modes[a + 1..] {
            for p in mode_a {
                for r in mode_b {
                    best = best.min((p - r).norm());
                }
            }
        }
    }
    best
}

/// Minimum distance between distinct points of one list; infinity for
/// fewer than two points.
pub fn min_intra_distance(points: &[ComplexPoint]) -> f64 {
    let mut best = f64::INFINITY;
    for (k, p) in points.iter().enumerate() {
        for r in &points[k + 1..] {
            best = best.min((p - r).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn psk_single_mode_is_qpsk() {
        let ms = build_psk_modes(1, 4).unwrap();
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        assert_eq!(ms.q(), 1);
        for (p, e) in ms.mode(0).iter().zip(expected) {
            assert!(close(*p, e), "{p} vs {e}");
        }
        assert_eq!(ms.min_intermode_distance(), f64::INFINITY);
    }

    #[test]
    fn psk_two_binary_modes_are_rotated_by_quarter_turn() {
        let ms = build_psk_modes(2, 2).unwrap();
        assert!(close(ms.mode(0)[0], Complex64::new(1.0, 0.0)));
        assert!(close(ms.mode(0)[1], Complex64::new(-1.0, 0.0)));
        assert!(close(ms.mode(1)[0], Complex64::new(0.0, 1.0)));
        assert!(close(ms.mode(1)[1], Complex64::new(0.0, -1.0)));
        assert!((ms.min_intermode_distance() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn psk_singletons_form_8psk() {
        let ms = build_psk_modes(8, 1).unwrap();
        for q in 0..8 {
            let e = Complex64::from_polar(1.0, 2.0 * PI * q as f64 / 8.0);
            assert!(close(ms.mode(q)[0], e));
        }
    }

    #[test]
    fn qam_four_singletons() {
        let ms = build_qam_modes(4, 1).unwrap();
        let a = 1.0 / 2f64.sqrt();
        let mut pts: Vec<_> = ms.modes().iter().map(|m| m[0]).collect();
        pts.sort_by(|x, y| {
            x.re.partial_cmp(&y.re)
                .unwrap()
                .then(x.im.partial_cmp(&y.im).unwrap())
        });
        let expected = [(-a, -a), (-a, a), (a, -a), (a, a)];
        for (p, (re, im)) in pts.iter().zip(expected) {
            assert!(close(*p, Complex64::new(re, im)));
        }
        assert!((ms.min_intermode_distance() - 2.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn qam_one_split_gives_antipodal_pairs() {
        let ms = build_qam_modes(2, 2).unwrap();
        for mode in ms.modes() {
            assert!(close(mode[0], -mode[1]));
            assert!((min_intra_distance(mode) - 2.0).abs() < 1e-12);
        }
        let diag = |p: Complex64| (p.re * p.im).signum();
        assert_ne!(diag(ms.mode(0)[0]), diag(ms.mode(1)[0]));
    }

    #[test]
    fn qam_sixteen_singletons() {
        let ms = build_qam_modes(16, 1).unwrap();
        assert_eq!(ms.q(), 16);
        assert!((ms.average_energy() - 1.0).abs() < 1e-12);
        assert!((ms.min_intermode_distance() - 2.0 / 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn qam_rejects_unsupported_sizes() {
        assert!(matches!(
            build_qam_modes(3, 1),
            Err(Error::UnsupportedSize(_))
        ));
        assert!(matches!(
            build_qam_modes(8, 16),
            Err(Error::UnsupportedSize(_))
        ));
        assert!(matches!(
            build_qam_modes(1, 1),
            Err(Error::UnsupportedSize(_))
        ));
    }

    #[test]
    fn explicit_sets_are_validated() {
        let overlapping = vec![
            vec![Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
        ];
        assert!(ModeSet::new(Family::Psk, overlapping).is_err());
        let loud = vec![vec![Complex64::new(2.0, 0.0)]];
        assert!(ModeSet::new(Family::Psk, loud).is_err());
        let ragged = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![Complex64::new(0.0, 1.0)],
        ];
        assert!(ModeSet::new(Family::Psk, ragged).is_err());
    }

    #[test]
    fn family_parses_case_insensitively() {
        assert_eq!("PSK".parse::<Family>().unwrap(), Family::Psk);
        assert_eq!("qam".parse::<Family>().unwrap(), Family::Qam);
        assert!("ask".parse::<Family>().is_err());
    }
}
