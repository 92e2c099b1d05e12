//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use qmm_ofdm_im::analysis::{
    diversity_slope, lcml_comparisons_per_block, spectral_efficiency, union_bound_curve, PepMethod,
};
use qmm_ofdm_im::baselines::{MmOfdmImParams, OfdmImParams};
use qmm_ofdm_im::channel::{complex_gaussian, substream, StreamPurpose};
use qmm_ofdm_im::constellation::Family;
use qmm_ofdm_im::index_code::{generate_codebook, min_hamming_distance};
use qmm_ofdm_im::modem::{lcml_detect_counted, QmmScheme, SchemeParams};
use qmm_ofdm_im::scheme::{BlockScheme, Detector, SchemeSpec};
use qmm_ofdm_im::sweep::{run_sweep, BerRecord, SweepConfig};
use qmm_ofdm_im::Complex64;
use rand_chacha::rand_core::RngCore;

type Outcome = Result<String, String>;

fn psk(q: usize, n: usize, m: usize) -> SchemeParams {
    SchemeParams::new(q, n, m, Family::Psk).unwrap()
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sweep(spec: SchemeSpec, detector: Detector, grid: &[f64], min_errors: u64) -> Vec<BerRecord> {
    let cfg = SweepConfig {
        seed: 2024,
        min_bit_errors: min_errors,
        workers: workers(),
        ..SweepConfig::new(spec, detector, grid.to_vec())
    };
    run_sweep(&cfg).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn spectral_efficiency_table() -> Outcome {
    let qmm = [
        ((4, 4, 2), 2.5),
        ((8, 4, 1), 2.25),
        ((8, 4, 2), 3.25),
        ((16, 4, 1), 3.0),
    ];
    for ((q, n, m), eta) in qmm {
        let got = spectral_efficiency(&psk(q, n, m)).eta;
        ensure(got == eta, format!("Q-MM ({q},{n},{m}): {got} != {eta}"))?;
    }
    let others = [
        (SchemeSpec::OfdmIm(OfdmImParams::new(4, 3, 4).unwrap()), 2.0),
        (
            SchemeSpec::OfdmIm(OfdmImParams::new(4, 3, 8).unwrap()),
            2.75,
        ),
        (
            SchemeSpec::MmOfdmIm(MmOfdmImParams::new(4, 2).unwrap()),
            2.0,
        ),
        (
            SchemeSpec::MmOfdmIm(MmOfdmImParams::new(4, 4).unwrap()),
            3.0,
        ),
        (SchemeSpec::Ofdm { n: 4, m: 4 }, 2.0),
        (SchemeSpec::Ofdm { n: 4, m: 8 }, 3.0),
    ];
    for (spec, eta) in others {
        let got = spec.spectral_efficiency().unwrap().eta;
        ensure(got == eta, format!("{}: {got} != {eta}", spec.label()))?;
    }
    Ok("10 configurations exact".into())
}

fn codebook_properties() -> Outcome {
    for q in 2..=8usize {
        for n in 2..=5usize {
            let cb = generate_codebook(q, n).unwrap();
            ensure(
                cb.len() == (q as u64).pow(n as u32 - 1),
                format!("size of ({q},{n})"),
            )?;
            for cw in cb.codewords() {
                ensure(
                    cw.symbols().iter().sum::<usize>() % q == 0,
                    format!("{cw} sum"),
                )?;
            }
            let d = min_hamming_distance(&cb).unwrap();
            ensure(d == 2, format!("({q},{n}) min distance {d}"))?;
        }
    }
    Ok("Q in 2..8, N in 2..5".into())
}

const TABLE_I: &str = "\
rank,bits,codeword,used
0,000,0 0 0,true
1,001,0 1 2,true
2,010,0 2 1,true
3,011,1 0 2,true
4,100,1 1 1,true
5,101,1 2 0,true
6,110,2 0 1,true
7,111,2 1 0,true
8,,2 2 2,false
";

fn table_reproduction() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_qmm"))
        .args(["table", "--q", "3", "--n", "3"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("exit status {}", out.status))?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(text == TABLE_I, format!("unexpected table:\n{text}"))?;
    Ok("9 rows bit-exact".into())
}

/// Independent exhaustive minimizer over every transmittable block.
fn brute_force(s: &QmmScheme, y: &[Complex64], h: &[Complex64], es: f64) -> (u64, f64) {
    let mut best = (0, f64::INFINITY);
    for word in 0..1u64 << s.params().f() {
        let x = s.modulate(word);
        let metric: f64 = (0..y.len())
            .map(|k| (y[k] - es.sqrt() * h[k] * x[k]).norm_sqr())
            .sum();
        if metric < best.1 {
            best = (word, metric);
        }
    }
    best
}

fn oracle_equivalence() -> Outcome {
    let draws = 10_000;
    for (q, n, m) in [(2, 2, 2), (3, 3, 1), (4, 3, 2)] {
        let s = QmmScheme::new(psk(q, n, m)).unwrap();
        let f = s.params().f();
        let mut payload = substream(7, q as u64, 0, StreamPurpose::Payload);
        let mut fading = substream(7, q as u64, 0, StreamPurpose::Fading);
        let mut noise = substream(7, q as u64, 0, StreamPurpose::Noise);
        for trial in 0..draws {
            let es = 10f64.powf((trial % 25) as f64 / 10.0);
            let word = payload.next_u64() & ((1u64 << f) - 1);
            let h: Vec<_> = (0..n).map(|_| complex_gaussian(&mut fading, 1.0)).collect();
            let y: Vec<_> = s
                .modulate(word)
                .iter()
                .zip(&h)
                .map(|(x, g)| es.sqrt() * x * g + complex_gaussian(&mut noise, 1.0))
                .collect();
            let det = s.ml_detect(&y, &h, es).unwrap();
            let (oracle_word, oracle_metric) = brute_force(&s, &y, &h, es);
            let bits = qmm_ofdm_im::bits::u64_to_bits(oracle_word, f);
            ensure(
                det.bits == bits && det.metric == oracle_metric,
                format!("({q},{n},{m}) trial {trial}: detector and oracle disagree"),
            )?;
        }
    }
    Ok(format!(
        "{draws} noisy blocks per configuration, 100% agreement"
    ))
}

fn round_trip_schemes() -> Vec<SchemeSpec> {
    let mut specs = Vec::new();
    for q in [1, 2, 3, 4, 8] {
        for n in [2, 3, 4] {
            for m in [1, 2, 4] {
                if let Ok(p) = SchemeParams::new(q, n, m, Family::Psk) {
                    if p.f() > 0 && p.f() <= 12 {
                        specs.push(SchemeSpec::Qmm(p));
                    }
                }
                if let Ok(p) = SchemeParams::new(q, n, m, Family::Qam) {
                    if p.f() > 0 && p.f() <= 12 {
                        specs.push(SchemeSpec::Qmm(p));
                    }
                }
            }
        }
    }
    for (n, ka, m) in [(4, 3, 4), (4, 2, 2), (4, 3, 8), (4, 1, 4)] {
        specs.push(SchemeSpec::OfdmIm(OfdmImParams::new(n, ka, m).unwrap()));
    }
    for (n, m) in [(4, 2), (3, 4), (4, 4)] {
        specs.push(SchemeSpec::MmOfdmIm(MmOfdmImParams::new(n, m).unwrap()));
    }
    for (n, m) in [(4, 4), (4, 8), (2, 2)] {
        specs.push(SchemeSpec::Ofdm { n, m });
    }
    specs
}

fn noiseless_round_trips() -> Outcome {
    let specs = round_trip_schemes();
    let mut fading = substream(8, 0, 0, StreamPurpose::Fading);
    let mut runs = 0;
    for spec in &specs {
        let s = spec.build().unwrap();
        for det in [Detector::Ml, Detector::Lcml] {
            if s.check_detector(det).is_err() {
                continue;
            }
            runs += 1;
            for word in 0..1u64 << s.bits_per_block() {
                let h: Vec<_> = (0..s.subcarriers())
                    .map(|_| complex_gaussian(&mut fading, 1.0))
                    .collect();
                let y: Vec<_> = s
                    .modulate(word)
                    .iter()
                    .zip(&h)
                    .map(|(x, g)| x * g)
                    .collect();
                let got = s.demodulate(&y, &h, 1.0, det);
                ensure(
                    got == word,
                    format!("{} {det}: word {word:b} decoded as {got:b}", spec.label()),
                )?;
            }
        }
    }
    Ok(format!(
        "{} schemes, {runs} scheme/detector pairs, zero bit errors",
        specs.len()
    ))
}

/// SNR at which the BER crosses 1e-3, scanning upward in 1 dB steps and
/// interpolating log-linearly between the bracketing points.
fn crossing_snr(spec: SchemeSpec, detector: Detector, start_db: f64) -> f64 {
    let target: f64 = 1e-3;
    let ber_at = |snr: f64| sweep(spec, detector, &[snr], 3000)[0].ber;
    let mut lo = start_db;
    let mut ber_lo = ber_at(lo);
    while ber_lo < target {
        lo -= 1.0;
        ber_lo = ber_at(lo);
    }
    loop {
        let hi = lo + 1.0;
        let ber_hi = ber_at(hi);
        if ber_hi < target {
            let t = (ber_lo.log10() - target.log10()) / (ber_lo.log10() - ber_hi.log10());
            return lo + t;
        }
        lo = hi;
        ber_lo = ber_hi;
    }
}

fn detector_gap() -> Outcome {
    let mut report = Vec::new();
    let mut ok = true;
    for ((q, n, m), stated, start) in [
        ((8, 4, 2), 1.4, 26.0),
        ((4, 4, 2), 1.0, 22.0),
        ((8, 4, 1), 1.4, 21.0),
    ] {
        let spec = SchemeSpec::Qmm(psk(q, n, m));
        let ml = crossing_snr(spec, Detector::Ml, start);
        let lc = crossing_snr(spec, Detector::Lcml, start);
        let gap = lc - ml;
        ok &= (gap - stated).abs() <= 0.5;
        report.push(format!("({q},{n},{m}) {gap:.2} dB vs {stated}"));
    }
    let text = report.join(", ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

struct HighSnrRuns {
    grid: Vec<f64>,
    qmm_index_only: Vec<BerRecord>,
    qmm_symbols: Vec<BerRecord>,
}

fn high_snr_runs() -> HighSnrRuns {
    let grid = vec![20.0, 25.0, 27.5, 30.0, 32.5, 35.0];
    HighSnrRuns {
        qmm_index_only: sweep(SchemeSpec::Qmm(psk(8, 4, 1)), Detector::Ml, &grid, 1000),
        qmm_symbols: sweep(SchemeSpec::Qmm(psk(4, 4, 2)), Detector::Ml, &grid, 1000),
        grid,
    }
}

fn bound_consistency(runs: &HighSnrRuns) -> Outcome {
    let linear: Vec<f64> = runs.grid.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let mut worst_ratio: f64 = 0.0;
    for (params, records) in [
        (psk(4, 4, 2), &runs.qmm_symbols),
        (psk(8, 4, 1), &runs.qmm_index_only),
    ] {
        let s = QmmScheme::new(params).unwrap();
        let bound = union_bound_curve(&s, &linear, PepMethod::Approx).unwrap();
        for (rec, ub) in records.iter().zip(bound) {
            ensure(
                ub >= rec.ber,
                format!(
                    "({},{},{}) at {} dB: bound {ub:.3e} < BER {:.3e}",
                    params.q, params.n, params.m, rec.snr_db, rec.ber
                ),
            )?;
            if rec.ber <= 1e-3 {
                ensure(
                    ub <= 3.0 * rec.ber,
                    format!(
                        "({},{},{}) at {} dB: bound {ub:.3e} > 3 x BER {:.3e}",
                        params.q, params.n, params.m, rec.snr_db, rec.ber
                    ),
                )?;
                worst_ratio = worst_ratio.max(ub / rec.ber);
            }
        }
    }
    Ok(format!(
        "bound above simulation from 20 to 35 dB, at most {worst_ratio:.2}x where BER <= 1e-3"
    ))
}

fn diversity_orders(runs: &HighSnrRuns) -> Outcome {
    let fit = |records: &[BerRecord]| {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.snr_db >= 25.0)
            .map(|r| (r.snr_db, r.ber))
            .collect();
        diversity_slope(&pts).unwrap()
    };
    let index_only = fit(&runs.qmm_index_only);
    let symbols = fit(&runs.qmm_symbols);
    let text = format!("(8,4,1) {index_only:.2}, (4,4,2) {symbols:.2}");
    ensure(
        (index_only - 2.0).abs() <= 0.3 && (symbols - 1.0).abs() <= 0.3,
        text.clone(),
    )?;
    Ok(text)
}

fn high_snr_ordering(runs: &HighSnrRuns) -> Outcome {
    let at30 = |records: &[BerRecord]| records.iter().find(|r| r.snr_db == 30.0).unwrap().ber;
    let other = |spec: SchemeSpec| sweep(spec, Detector::Ml, &[30.0], 1000)[0].ber;
    let index_only = at30(&runs.qmm_index_only);
    let symbols = at30(&runs.qmm_symbols);
    let mm = other(SchemeSpec::MmOfdmIm(MmOfdmImParams::new(4, 2).unwrap()));
    let ofdm = other(SchemeSpec::Ofdm { n: 4, m: 4 });
    let ofdmim = other(SchemeSpec::OfdmIm(OfdmImParams::new(4, 3, 4).unwrap()));
    let text = format!(
        "Q-MM(8,4,1) {index_only:.2e} < MM-OFDM-IM {mm:.2e} < OFDM {ofdm:.2e}; Q-MM(4,4,2) {symbols:.2e} < OFDM-IM {ofdmim:.2e}"
    );
    ensure(
        index_only < mm && mm < ofdm && symbols < ofdmim,
        text.clone(),
    )?;
    Ok(text)
}

fn complexity_accounting() -> Outcome {
    let configs = [
        (2, 2, 2),
        (3, 3, 1),
        (4, 4, 2),
        (8, 4, 1),
        (8, 4, 2),
        (16, 4, 1),
        (1, 4, 4),
        (4, 3, 4),
    ];
    let mut rng = substream(10, 0, 0, StreamPurpose::Noise);
    for (q, n, m) in configs {
        let s = QmmScheme::new(psk(q, n, m)).unwrap();
        let expected = lcml_comparisons_per_block(s.params());
        ensure(expected == (q * m * (n - 1) + m) as u64, "formula".into())?;
        for _ in 0..500 {
            let h: Vec<_> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let y: Vec<_> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let (_, count) =
                lcml_detect_counted(&y, &h, 1.0, s.params(), s.modes(), s.codebook()).unwrap();
            ensure(
                count == expected,
                format!("({q},{n},{m}): {count} != {expected}"),
            )?;
        }
    }
    Ok(format!(
        "{} configurations, QM(N-1)+M per block",
        configs.len()
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, run: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    };
    report(1, "spectral-efficiency table", &spectral_efficiency_table);
    report(2, "codebook properties", &codebook_properties);
    report(3, "look-up table reproduction", &table_reproduction);
    report(4, "ML oracle equivalence", &oracle_equivalence);
    report(5, "noiseless round trips", &noiseless_round_trips);
    report(6, "LC-ML detector gap at BER 1e-3", &detector_gap);
    let runs = high_snr_runs();
    report(7, "union-bound consistency", &|| bound_consistency(&runs));
    report(8, "diversity orders", &|| diversity_orders(&runs));
    report(9, "high-SNR ordering at 30 dB", &|| {
        high_snr_ordering(&runs)
    });
    report(10, "LC-ML complexity accounting", &complexity_accounting);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
