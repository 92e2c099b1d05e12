use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmm_ofdm_im::analysis::{union_bound_curve, PepMethod};
use qmm_ofdm_im::config::{config_flags, load_config};
use qmm_ofdm_im::constellation::{build_psk_modes, build_qam_modes, Family};
use qmm_ofdm_im::index_code::generate_codebook;
use qmm_ofdm_im::scheme::{Detector, SchemeKind, SchemeSpec};
use qmm_ofdm_im::sweep::{
    emit_plot_data, parse_run, parse_snr_grid, roster, run_compare, run_sweep, write_records,
    SweepConfig, DEFAULT_BATCH_BLOCKS, DEFAULT_MAX_BITS, DEFAULT_MIN_BIT_ERRORS,
};
use qmm_ofdm_im::{Error, Result};

/// Link-level simulator for multi-mode OFDM with MDS-coded mode indices.
#[derive(Parser)]
#[command(name = "qmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep of one scheme and detector.
    Simulate(SimulateArgs),
    /// Several sweeps merged into one CSV.
    Compare(CompareArgs),
    /// Union-bound BER over an SNR grid.
    Bound(BoundArgs),
    /// Index codebook look-up table.
    Table(TableArgs),
    /// Points of every mode.
    Constellation(ConstellationArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value file of flag defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, default_value = "qmm")]
    scheme: String,
    #[arg(long, default_value_t = 4)]
    q: usize,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Active subcarriers (OFDM-IM); defaults to N − 1.
    #[arg(long)]
    ka: Option<usize>,
    #[arg(long, default_value = "psk")]
    family: String,
}

impl SchemeArgs {
    fn spec(&self) -> Result<SchemeSpec> {
        let kind: SchemeKind = self.scheme.parse()?;
        SchemeSpec::from_fields(kind, self.q, self.n, self.m, self.ka, self.family.parse()?)
    }
}

#[derive(Args)]
struct SweepArgs {
    /// `start:stop:step` in dB, or a comma-separated list.
    #[arg(long, default_value = "0:40:5")]
    snr_db: String,
    #[arg(long, default_value_t = DEFAULT_MIN_BIT_ERRORS)]
    min_bit_errors: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_BITS)]
    max_bits: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH_BLOCKS)]
    batch_blocks: usize,
    /// Also write `scheme,detector,snr_db,ber` plot data here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "ml")]
    detector: String,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Run description, e.g. "scheme=qmm q=8 n=4 m=2 detector=lcml".
    #[arg(long)]
    run: Vec<String>,
    /// Predefined run set: fig1, fig2 or fig3.
    #[arg(long)]
    roster: Option<String>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "0:40:5")]
    snr_db: String,
    /// Integrate the pairwise error probability instead of approximating it.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 3)]
    q: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
}

#[derive(Args)]
struct ConstellationArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "psk")]
    family: String,
    #[arg(long, default_value_t = 4)]
    q: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
}

const SWITCHES: [&str; 1] = ["exact"];

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn workers(common: &Common) -> usize {
    common
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn sweep_config(
    scheme: SchemeSpec,
    detector: Detector,
    common: &Common,
    args: &SweepArgs,
) -> Result<SweepConfig> {
    Ok(SweepConfig {
        seed: common.seed,
        min_bit_errors: args.min_bit_errors,
        max_bits: args.max_bits,
        workers: workers(common),
        batch_blocks: args.batch_blocks,
        ..SweepConfig::new(scheme, detector, parse_snr_grid(&args.snr_db)?)
    })
}

fn finish_sweep(
    records: &[qmm_ofdm_im::sweep::BerRecord],
    common: &Common,
    plot: &Option<PathBuf>,
) -> Result<()> {
    write_records(records, open_output(&common.out)?)?;
    if let Some(path) = plot {
        emit_plot_data(records, path)?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = sweep_config(
        args.scheme.spec()?,
        args.detector.parse()?,
        &args.common,
        &args.sweep,
    )?;
    let records = run_sweep(&cfg)?;
    for r in &records {
        eprintln!(
            "{} {} {:>6} dB: {} errors in {} bits ({:.1} s)",
            r.scheme, r.detector, r.snr_db, r.bit_errors, r.bits_simulated, r.wall_seconds
        );
    }
    finish_sweep(&records, &args.common, &args.sweep.plot)
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut runs = match &args.roster {
        Some(name) => roster(name)?,
        None => Vec::new(),
    };
    for text in &args.run {
        runs.push(parse_run(text)?);
    }
    let cfgs = runs
        .into_iter()
        .map(|(spec, det)| sweep_config(spec, det, &args.common, &args.sweep))
        .collect::<Result<Vec<_>>>()?;
    let records = run_compare(&cfgs)?;
    if records.is_empty() {
        return write_records(&records, open_output(&args.common.out)?);
    }
    finish_sweep(&records, &args.common, &args.sweep.plot)
}

fn bound(args: BoundArgs) -> Result<()> {
    let scheme = args.scheme.spec()?.build()?;
    let grid = parse_snr_grid(&args.snr_db)?;
    let linear: Vec<f64> = grid.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let method = if args.exact {
        PepMethod::Exact
    } else {
        PepMethod::Approx
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(&args.common))
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let curve = pool.install(|| union_bound_curve(scheme.as_ref(), &linear, method))?;
    let mut w = csv::Writer::from_writer(open_output(&args.common.out)?);
    w.write_record(["snr_db", "union_bound"])?;
    for (snr, ub) in grid.iter().zip(curve) {
        w.write_record([snr.to_string(), format!("{ub:.6e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    let cb = generate_codebook(args.q, args.n)?;
    let f1 = cb.f1();
    let mut w = csv::Writer::from_writer(open_output(&args.common.out)?);
    w.write_record(["rank", "bits", "codeword", "used"])?;
    for (rank, cw) in cb.codewords().enumerate() {
        let used = (rank as u64) < cb.used_count();
        let bits = if used {
            format!("{:0width$b}", rank, width = f1 as usize)
        } else {
            String::new()
        };
        let digits: Vec<String> = cw.symbols().iter().map(usize::to_string).collect();
        w.write_record([rank.to_string(), bits, digits.join(" "), used.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn constellation(args: ConstellationArgs) -> Result<()> {
    let ms = match args.family.parse()? {
        Family::Psk => build_psk_modes(args.q, args.m)?,
        Family::Qam => build_qam_modes(args.q, args.m)?,
    };
    let mut w = csv::Writer::from_writer(open_output(&args.common.out)?);
    w.write_record(["mode", "index", "re", "im"])?;
    for (q, mode) in ms.modes().iter().enumerate() {
        for (k, p) in mode.iter().enumerate() {
            w.write_record([
                q.to_string(),
                k.to_string(),
                p.re.to_string(),
                p.im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inserts flags from `--config FILE` right after the subcommand name, so
/// flags on the command line are seen first and win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let pos = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => match args.get(pos + 1) {
            Some(p) => p.clone(),
            None => return Ok(args),
        },
    };
    let entries = load_config(Path::new(&path))?;
    let extra = config_flags(&entries, &args, &SWITCHES);
    let mut out = args[..2.min(args.len())].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2.min(args.len())..]);
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_guard_rail() => 3,
        Error::Io(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::Bound(a) => bound(a),
        Command::Table(a) => table(a),
        Command::Constellation(a) => constellation(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
