use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde_json::{Map, Value};

use bicm::constellation::Constellation;
use bicm::demapper::{AwgnBlock, LlrKind};
use bicm::fiber::{self, FiberParams};
use bicm::harness::{
    emit_report, ingest_reference_table, read_sweep_csv, run_sweep, write_threshold_csv,
    SweepSpec, ThresholdReport,
};
use bicm::math::db_to_linear;
use bicm::rates::{estimate_gmi, estimate_mi_awgn, symmetrized_pdf, write_rate_csv, RateRow, DEFAULT_PDF_BINS};
use bicm::seed::{rng_for, Role, StreamKey};
use bicm::TARGET_POST_FEC_BER;

const REFERENCE_TABLE: &str = include_str!("../../core/data/reference/table2.csv");

#[derive(Parser)]
#[command(name = "bicm", version, about = "Coded-modulation rate estimation, FEC sweeps and fiber simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MI and GMI of a constellation over the AWGN channel.
    Rates(RatesArgs),
    /// Full channel, demapper and decoder sweep.
    BerSweep(SweepArgs),
    /// Fiber channel only; reports the effective SNR and optionally dumps the waveform.
    FiberSim(FiberArgs),
    /// Threshold crossings of a sweep CSV.
    Threshold(ThresholdArgs),
    /// CSV and SVG report from a sweep CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, default_value = "16qam")]
    constellation: String,
    /// SNR points in dB (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,3,6,10")]
    rho_db: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value = "exact")]
    llr: LlrKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Rate CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for symmetrized L-value PDFs, one CSV per SNR point.
    #[arg(long)]
    pdf_dir: Option<PathBuf>,
}

/// Every [`SweepSpec`] field, overriding the config file.
#[derive(Args)]
struct SweepArgs {
    /// JSON file with SweepSpec fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    constellation: Option<String>,
    #[arg(long)]
    llr: Option<String>,
    #[arg(long)]
    codec: Option<String>,
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    block_len: Option<usize>,
    #[arg(long)]
    puncture_file: Option<String>,
    #[arg(long)]
    sweep_var: Option<String>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    target_post_ber: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    pad: Option<bool>,
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file with FiberParams fields.
    #[arg(long)]
    fiber: Option<PathBuf>,
    #[arg(long)]
    llr_dump_dir: Option<PathBuf>,
    /// Output directory for CSV and plots.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Label of the constellation and rate in threshold.csv.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct FiberArgs {
    /// JSON file with FiberParams fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    launch_power_dbm: Option<f64>,
    #[arg(long)]
    span_length_km: Option<f64>,
    #[arg(long)]
    n_spans: Option<usize>,
    #[arg(long)]
    n_channels: Option<usize>,
    #[arg(long)]
    n_symbols: Option<usize>,
    #[arg(long)]
    step_size_m: Option<f64>,
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long)]
    ase_noise: Option<bool>,
    #[arg(long, default_value = "16qam")]
    constellation: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Dump of the received optical field before the receiver DSP.
    #[arg(long)]
    waveform_out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Sweep CSV.
    input: PathBuf,
    #[arg(long, default_value_t = TARGET_POST_FEC_BER)]
    target: f64,
    #[arg(long, default_value = "unknown")]
    constellation: String,
    #[arg(long, default_value = "unknown")]
    rate: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep CSV.
    input: PathBuf,
    #[arg(long, default_value_t = TARGET_POST_FEC_BER)]
    target: f64,
    #[arg(long, default_value = "unknown")]
    constellation: String,
    #[arg(long, default_value = "unknown")]
    rate: String,
    /// Reference table CSV; the shipped table when absent.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Rates(a) => rates(a),
        Command::BerSweep(a) => ber_sweep(a),
        Command::FiberSim(a) => fiber_sim(a),
        Command::Threshold(a) => threshold(a),
        Command::Report(a) => report(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn read_json_object(path: Option<&Path>) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
        Value::Object(m) => Ok(m),
        _ => bail!("{} must hold a JSON object", path.display()),
    }
}

fn set(map: &mut Map<String, Value>, key: &str, v: Option<impl serde::Serialize>) -> Result<()> {
    if let Some(v) = v {
        map.insert(key.to_string(), serde_json::to_value(v)?);
    }
    Ok(())
}

fn rates(a: RatesArgs) -> Result<()> {
    let c = Constellation::resolve(&a.constellation)?;
    let mut rows = Vec::new();
    for (i, &db) in a.rho_db.iter().enumerate() {
        let rho = db_to_linear(db);
        let mi = estimate_mi_awgn(&c, rho, a.n, &mut StreamKey::new(a.seed, i as u64, 0, Role::Estimator).rng())?;
        rows.push(RateRow::new("mi", c.name(), rho, &mi));
        let block = AwgnBlock::random(&c, a.n, rho, &mut StreamKey::new(a.seed, i as u64, 0, Role::Noise).rng())?;
        let frame = block.frame(&c, a.llr)?;
        let gmi = estimate_gmi(&frame)?;
        rows.push(RateRow::new(format!("gmi_{}", a.llr), c.name(), rho, &gmi));
        if let Some(dir) = &a.pdf_dir {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("pdf_{}_{db}dB.csv", c.name()));
            let mut w = output(Some(&path))?;
            symmetrized_pdf(&frame, DEFAULT_PDF_BINS)?.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    let mut w = output(a.out.as_deref())?;
    write_rate_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn sweep_spec(a: &SweepArgs) -> Result<SweepSpec> {
    let mut m = read_json_object(a.config.as_deref())?;
    set(&mut m, "channel", a.channel.as_ref())?;
    set(&mut m, "constellation", a.constellation.as_ref())?;
    set(&mut m, "llr", a.llr.as_ref())?;
    set(&mut m, "codec", a.codec.as_ref())?;
    set(&mut m, "code", a.code.as_ref())?;
    set(&mut m, "rate", a.rate.as_ref())?;
    set(&mut m, "block_len", a.block_len)?;
    set(&mut m, "puncture_file", a.puncture_file.as_ref())?;
    set(&mut m, "sweep_var", a.sweep_var.as_ref())?;
    set(&mut m, "values", a.values.as_ref())?;
    set(&mut m, "start", a.start)?;
    set(&mut m, "stop", a.stop)?;
    set(&mut m, "step", a.step)?;
    set(&mut m, "frames", a.frames)?;
    set(&mut m, "min_errors", a.min_errors)?;
    set(&mut m, "target_post_ber", a.target_post_ber)?;
    set(&mut m, "seed", a.seed)?;
    set(&mut m, "max_iter", a.max_iter)?;
    set(&mut m, "pad", a.pad)?;
    set(&mut m, "workers", a.workers)?;
    set(&mut m, "llr_dump_dir", a.llr_dump_dir.as_ref())?;
    if let Some(path) = &a.fiber {
        m.insert("fiber".into(), Value::Object(read_json_object(Some(path))?));
    }
    let spec: SweepSpec = serde_json::from_value(Value::Object(m)).context("incomplete or invalid sweep configuration")?;
    spec.validate()?;
    Ok(spec)
}

fn ber_sweep(a: SweepArgs) -> Result<()> {
    let spec = sweep_spec(&a)?;
    let rows = run_sweep(&spec)?;
    let label = a.label.clone().unwrap_or_else(|| format!("{}-{}", spec.constellation, spec.llr));
    let rate = spec.rate.clone().or(spec.code.clone()).unwrap_or_default();
    let reports = vec![ThresholdReport::from_rows(&label, &rate, &rows, spec.target_post_ber)];
    let files = emit_report(&rows, &reports, &[], &a.out)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn fiber_sim(a: FiberArgs) -> Result<()> {
    let mut m = read_json_object(a.config.as_deref())?;
    set(&mut m, "launch_power_dbm", a.launch_power_dbm)?;
    set(&mut m, "span_length_km", a.span_length_km)?;
    set(&mut m, "n_spans", a.n_spans)?;
    set(&mut m, "n_channels", a.n_channels)?;
    set(&mut m, "n_symbols", a.n_symbols)?;
    set(&mut m, "step_size_m", a.step_size_m)?;
    set(&mut m, "nonlinearity", a.nonlinearity.as_ref())?;
    set(&mut m, "ase_noise", a.ase_noise)?;
    let p: FiberParams = serde_json::from_value(Value::Object(m)).context("invalid fiber parameters")?;
    p.validate()?;
    let c = Constellation::resolve(&a.constellation)?;
    let channels: Vec<[Vec<_>; 2]> = (0..p.n_channels)
        .map(|ch| {
            let mut rng = StreamKey::new(a.seed, ch as u64, 0, Role::Neighbors).rng();
            [0, 1].map(|_| {
                (0..p.n_symbols)
                    .map(|_| c.point(rng.random_range(0..c.order())))
                    .collect()
            })
        })
        .collect();
    let mut w = fiber::rrc_shape(&channels, &p)?;
    let mut ase = rng_for(a.seed, Role::Ase);
    for _ in 0..p.n_spans {
        w = fiber::ssfm_propagate(&w, &p)?;
        w = fiber::edfa(&w, &p, &mut ase);
    }
    if let Some(path) = &a.waveform_out {
        w.dump(path)?;
    }
    let tx = &channels[p.central_channel()];
    let rx = fiber::receiver_dsp(&w, &p, tx)?;
    let rho = fiber::effective_snr(&rx, tx)?;
    println!("effective_snr_db,{}", 10.0 * rho.log10());
    Ok(())
}

fn load_rows(path: &Path) -> Result<Vec<bicm::harness::SweepRow>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_sweep_csv(BufReader::new(f))?)
}

fn threshold(a: ThresholdArgs) -> Result<()> {
    let rows = load_rows(&a.input)?;
    let report = ThresholdReport::from_rows(&a.constellation, &a.rate, &rows, a.target);
    let mut w = output(a.out.as_deref())?;
    write_threshold_csv(&[report], &mut w)?;
    w.flush()?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let rows = load_rows(&a.input)?;
    let reference = match &a.reference {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            ingest_reference_table(BufReader::new(f))?
        }
        None => ingest_reference_table(REFERENCE_TABLE.as_bytes())?,
    };
    let reports = vec![ThresholdReport::from_rows(&a.constellation, &a.rate, &rows, a.target)];
    let files = emit_report(&rows, &reports, &reference, &a.out)?;
    let mut out = std::io::stdout().lock();
    for f in files {
        writeln!(out, "{}", f.display())?;
    }
    log::info!("{} sweep rows, crossing {:?}", rows.len(), reports[0].crossing);
    Ok(())
}
