//! Monte Carlo BER sweeps and their CSV outputs.
//!
//! Each SNR point is simulated in fixed-size batches of blocks. Batch `b`
//! draws payload, fading and noise from its own substreams, so a batch's
//! outcome depends only on the seed, the SNR point and `b`. Batches are run
//! `workers` at a time and accumulated in batch order; the point stops at
//! the first batch after which the error target or the bit budget is met.
//! Results are therefore identical for any worker count.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;

use crate::bits::low_mask;
use crate::channel::{complex_gaussian, substream, NoiseParams, StreamPurpose};
use crate::constellation::Family;
use crate::scheme::{BlockScheme, Detector, SchemeKind, SchemeSpec};
use crate::{Error, Result};

pub const DEFAULT_MIN_BIT_ERRORS: u64 = 500;
pub const DEFAULT_MAX_BITS: u64 = 1_000_000_000;
pub const DEFAULT_BATCH_BLOCKS: usize = 2000;

pub const BER_HEADER: [&str; 7] = [
    "scheme",
    "detector",
    "snr_db",
    "bits_simulated",
    "bit_errors",
    "ber",
    "unconverged",
];
pub const PLOT_HEADER: [&str; 4] = ["scheme", "detector", "snr_db", "ber"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scheme: SchemeSpec,
    pub detector: Detector,
    /// Es/N0 points in dB, strictly increasing.
    pub snr_db_grid: Vec<f64>,
    pub seed: u64,
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub workers: usize,
    /// Blocks per batch; part of the reproducibility contract.
    pub batch_blocks: usize,
}

impl SweepConfig {
    pub fn new(scheme: SchemeSpec, detector: Detector, snr_db_grid: Vec<f64>) -> Self {
        SweepConfig {
            scheme,
            detector,
            snr_db_grid,
            seed: 0,
            min_bit_errors: DEFAULT_MIN_BIT_ERRORS,
            max_bits: DEFAULT_MAX_BITS,
            workers: 1,
            batch_blocks: DEFAULT_BATCH_BLOCKS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.snr_db_grid)?;
        if self.min_bit_errors == 0 {
            return Err(Error::InvalidParams(
                "min_bit_errors must be at least 1".into(),
            ));
        }
        if self.max_bits == 0 || self.workers == 0 || self.batch_blocks == 0 {
            return Err(Error::InvalidParams(
                "max_bits, workers and batch_blocks must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: String,
    pub detector: String,
    pub snr_db: f64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub wall_seconds: f64,
    /// The bit budget ran out before the error target was reached.
    pub unconverged: bool,
}

/// One row of the plot-ready CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub scheme: String,
    pub detector: String,
    pub snr_db: f64,
    pub ber: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("SNR grid is empty".into()));
    }
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParams(
            "SNR grid has non-finite points".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "SNR grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParams(format!("bad SNR grid '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let v = start + k as f64 * step;
                (v * 1e9).round() / 1e9
            })
            .collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    check_grid(&grid)?;
    Ok(grid)
}

/// Parses a run description such as `scheme=qmm q=8 n=4 m=2 detector=lcml`.
/// Missing fields default to the (4, 4, 2) PSK scheme with ML detection.
pub fn parse_run(text: &str) -> Result<(SchemeSpec, Detector)> {
    let (mut kind, mut family, mut detector) = (SchemeKind::Qmm, Family::Psk, Detector::Ml);
    let (mut q, mut n, mut m, mut ka) = (4, 4, 2, None);
    for field in text.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("run field '{field}' is not key=value")))?;
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::InvalidParams(format!("bad value in '{field}'")))
        };
        match key {
            "scheme" => kind = value.parse()?,
            "family" => family = value.parse()?,
            "detector" => detector = value.parse()?,
            "q" => q = count()?,
            "n" => n = count()?,
            "m" => m = count()?,
            "ka" => ka = Some(count()?),
            other => return Err(Error::InvalidParams(format!("unknown run field '{other}'"))),
        }
    }
    Ok((
        SchemeSpec::from_fields(kind, q, n, m, ka, family)?,
        detector,
    ))
}

/// Named run sets: `fig1` compares schemes near 2 bits per subcarrier,
/// `fig2` pits ML against LC-ML, `fig3` compares schemes near 3 bits.
pub fn roster(name: &str) -> Result<Vec<(SchemeSpec, Detector)>> {
    let runs: &[&str] = match name {
        "fig1" => &[
            "scheme=qmm q=4 n=4 m=2",
            "scheme=qmm q=8 n=4 m=1",
            "scheme=mmofdmim n=4 m=2",
            "scheme=ofdmim n=4 ka=3 m=4",
            "scheme=ofdm n=4 m=4",
        ],
        "fig2" => &[
            "scheme=qmm q=8 n=4 m=2 detector=ml",
            "scheme=qmm q=8 n=4 m=2 detector=lcml",
            "scheme=qmm q=4 n=4 m=2 detector=ml",
            "scheme=qmm q=4 n=4 m=2 detector=lcml",
            "scheme=qmm q=8 n=4 m=1 detector=ml",
            "scheme=qmm q=8 n=4 m=1 detector=lcml",
        ],
        "fig3" => &[
            "scheme=qmm q=8 n=4 m=2 family=qam detector=lcml",
            "scheme=qmm q=8 n=4 m=2 detector=lcml",
            "scheme=qmm q=16 n=4 m=1 family=qam detector=lcml",
            "scheme=mmofdmim n=4 m=4",
            "scheme=ofdmim n=4 ka=3 m=8",
            "scheme=ofdm n=4 m=8",
        ],
        other => return Err(Error::InvalidParams(format!("unknown roster '{other}'"))),
    };
    runs.iter().map(|r| parse_run(r)).collect()
}

struct BatchOutcome {
    bits: u64,
    errors: u64,
}

fn run_batch(
    scheme: &dyn BlockScheme,
    detector: Detector,
    noise: &NoiseParams,
    seed: u64,
    point: u64,
    batch: u64,
    blocks: u64,
) -> BatchOutcome {
    let n = scheme.subcarriers();
    let f = scheme.bits_per_block();
    let mask = low_mask(f);
    let mut payload = substream(seed, point, batch, StreamPurpose::Payload);
    let mut fading = substream(seed, point, batch, StreamPurpose::Fading);
    let mut awgn = substream(seed, point, batch, StreamPurpose::Noise);
    let sqrt_es = noise.es().sqrt();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut errors = 0;
    for _ in 0..blocks {
        let word = payload.next_u64() & mask;
        scheme.modulate_into(word, &mut x);
        for g in h.iter_mut() {
            *g = complex_gaussian(&mut fading, 1.0);
        }
        for ((out, &s), &g) in y.iter_mut().zip(&x).zip(&h) {
            *out = sqrt_es * s * g + complex_gaussian(&mut awgn, noise.n0());
        }
        let decided = scheme.demodulate(&y, &h, noise.es(), detector);
        errors += u64::from((word ^ decided).count_ones());
    }
    BatchOutcome {
        bits: blocks * u64::from(f),
        errors,
    }
}

fn run_point(cfg: &SweepConfig, scheme: &dyn BlockScheme, snr_db: f64) -> Result<BerRecord> {
    let start = Instant::now();
    let noise = NoiseParams::from_snr_db(1.0, snr_db)?;
    let f = u64::from(scheme.bits_per_block());
    let max_blocks = (cfg.max_bits / f).max(1);
    let batch_blocks = cfg.batch_blocks as u64;
    let total_batches = max_blocks.div_ceil(batch_blocks);
    let point = snr_db.to_bits();

    let (mut bits, mut errors) = (0u64, 0u64);
    let mut next = 0u64;
    'outer: while next < total_batches {
        let round: Vec<u64> = (next..total_batches.min(next + cfg.workers as u64)).collect();
        let outcomes: Vec<BatchOutcome> = round
            .par_iter()
            .map(|&b| {
                let blocks = batch_blocks.min(max_blocks - b * batch_blocks);
                run_batch(scheme, cfg.detector, &noise, cfg.seed, point, b, blocks)
            })
            .collect();
        for o in outcomes {
            bits += o.bits;
            errors += o.errors;
            next += 1;
            if errors >= cfg.min_bit_errors {
                break 'outer;
            }
        }
    }
    Ok(BerRecord {
        scheme: cfg.scheme.label(),
        detector: cfg.detector.to_string(),
        snr_db,
        bits_simulated: bits,
        bit_errors: errors,
        ber: errors as f64 / bits as f64,
        wall_seconds: start.elapsed().as_secs_f64(),
        unconverged: errors < cfg.min_bit_errors,
    })
}

/// Simulates every grid point of `cfg`, in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let scheme = cfg.scheme.build()?;
    scheme.check_detector(cfg.detector)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    pool.install(|| {
        cfg.snr_db_grid
            .iter()
            .map(|&snr| run_point(cfg, scheme.as_ref(), snr))
            .collect()
    })
}

/// Runs several sweeps and merges their records keyed by
/// (scheme, detector, snr_db); a later record replaces an earlier one.
pub fn run_compare(cfgs: &[SweepConfig]) -> Result<Vec<BerRecord>> {
    let mut merged: Vec<BerRecord> = Vec::new();
    let mut slot: HashMap<(String, String, u64), usize> = HashMap::new();
    for cfg in cfgs {
        for rec in run_sweep(cfg)? {
            let key = (
                rec.scheme.clone(),
                rec.detector.clone(),
                rec.snr_db.to_bits(),
            );
            match slot.get(&key) {
                Some(&i) => merged[i] = rec,
                None => {
                    slot.insert(key, merged.len());
                    merged.push(rec);
                }
            }
        }
    }
    Ok(merged)
}

pub fn write_records<W: Write>(records: &[BerRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BER_HEADER)?;
    for r in records {
        w.write_record([
            r.scheme.clone(),
            r.detector.clone(),
            r.snr_db.to_string(),
            r.bits_simulated.to_string(),
            r.bit_errors.to_string(),
            r.ber.to_string(),
            r.unconverged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `scheme,detector,snr_db,ber` sorted by scheme then SNR, BER with
/// six significant digits.
pub fn write_plot_data<W: Write>(records: &[BerRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to plot".into()));
    }
    let mut sorted: Vec<&BerRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.snr_db.total_cmp(&b.snr_db)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for r in sorted {
        w.write_record([
            r.scheme.clone(),
            r.detector.clone(),
            r.snr_db.to_string(),
            format!("{:.5e}", r.ber),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plot_data(records: &[BerRecord], path: &Path) -> Result<()> {
    write_plot_data(records, File::create(path)?)
}

pub fn read_plot_data<R: Read>(input: R) -> Result<Vec<PlotPoint>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(PLOT_HEADER) {
        return Err(Error::InvalidParams("unexpected plot data header".into()));
    }
    let mut points = Vec::new();
    for row in r.records() {
        let row = row?;
        let num = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("bad number '{}'", &row[i])))
        };
        points.push(PlotPoint {
            scheme: row[0].to_string(),
            detector: row[1].to_string(),
            snr_db: num(2)?,
            ber: num(3)?,
        });
    }
    Ok(points)
}
