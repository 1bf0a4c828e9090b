//! End-to-end sweeps: channel, demapper, decoder. Each sweep point reports
//! pre-FEC BER, normalized MI and GMI, and the post-FEC BER, all measured on
//! the same realizations.
//!
//! Frames are processed in fixed-size batches. Every random draw comes from a
//! stream keyed by `(seed, point, frame, role)`, and batch results are merged
//! in frame order, so the output does not depend on the worker count.

mod report;
mod threshold;

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::demapper::{awgn_sample, bit_errors, demap, LlrFrame, LlrKind};
use crate::fec::{Codec, CodeSpec, CodecKind, Permutation, PostFecBer};
use crate::fiber::{self, FiberParams};
use crate::math::{db_to_linear, linear_to_db};
use crate::rates::{estimate_gmi, mi_from_observations};
use crate::seed::{Role, StreamKey};
use crate::{Error, Result, TARGET_POST_FEC_BER};

pub use report::{
    emit_report, ingest_reference_table, read_sweep_csv, write_reference_table, write_sweep_csv,
    write_threshold_csv, ReferenceRow, REFERENCE_CSV_HEADER, SWEEP_CSV_HEADER, THRESHOLD_CSV_HEADER,
};
pub use threshold::{find_threshold, prediction_spread, Crossing, Predictor, Spread, ThresholdReport};

/// Frames per AWGN work batch. Stopping is checked between batches.
pub const AWGN_BATCH: usize = 16;
pub const DEFAULT_MIN_ERRORS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Fiber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    RhoDb,
    DistanceKm,
    LaunchPowerDbm,
}

fn default_target() -> f64 {
    TARGET_POST_FEC_BER
}
fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}
fn default_block_len() -> usize {
    crate::fec::DEFAULT_BLOCK_LEN
}

/// A sweep configuration. Serializes to flat JSON except for the optional
/// `fiber` parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub channel: ChannelKind,
    pub constellation: String,
    pub llr: LlrKind,
    pub codec: CodecKind,
    #[serde(default)]
    pub code: Option<String>,
    #[serde(default)]
    pub rate: Option<String>,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
    #[serde(default)]
    pub puncture_file: Option<String>,
    pub sweep_var: SweepVar,
    /// Explicit sweep values; when empty, `start..=stop` in steps of `step`.
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub stop: f64,
    #[serde(default)]
    pub step: f64,
    /// Frame budget per point (codewords).
    pub frames: usize,
    /// Stop a point once this many post-FEC bit errors are collected.
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_target")]
    pub target_post_ber: f64,
    pub seed: u64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Fill symbols with random bits when the frame length is not a multiple of `m`.
    #[serde(default)]
    pub pad: bool,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub fiber: Option<FiberParams>,
    /// Directory receiving each point's LLR frame as `point_<i>.csv`.
    #[serde(default)]
    pub llr_dump_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        if !self.values.is_empty() {
            if self.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::SweepSpec("non-finite sweep value".into()));
            }
            return Ok(self.values.clone());
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::SweepSpec(format!("empty range {}..{}", self.start, self.stop)));
        }
        if self.start == self.stop {
            return Ok(vec![self.start]);
        }
        if !(self.step > 0.0) {
            return Err(Error::SweepSpec(format!("step must be positive, got {}", self.step)));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }

    pub fn code_spec(&self) -> CodeSpec {
        CodeSpec {
            codec: self.codec,
            code: self.code.clone(),
            rate: self.rate.clone(),
            block_len: self.block_len,
            puncture_file: self.puncture_file.clone(),
            interleaver_seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::SweepSpec("frames must be at least 1".into()));
        }
        if !(self.target_post_ber > 0.0 && self.target_post_ber < 1.0) {
            return Err(Error::SweepSpec(format!("target BER {} outside (0, 1)", self.target_post_ber)));
        }
        self.sweep_values()?;
        match (self.channel, self.sweep_var) {
            (ChannelKind::Awgn, SweepVar::RhoDb) => {}
            (ChannelKind::Fiber, SweepVar::DistanceKm | SweepVar::LaunchPowerDbm) => {}
            (ch, var) => {
                return Err(Error::SweepSpec(format!("sweep variable {var:?} does not apply to {ch:?}")));
            }
        }
        Ok(())
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: f64,
    pub pre_ber: f64,
    pub mi_norm: f64,
    pub gmi_norm: f64,
    pub s_star: f64,
    pub post_ber: f64,
    pub post_ber_ci_lo: f64,
    pub post_ber_ci_hi: f64,
    pub frames: u64,
}

impl SweepRow {
    pub fn value(&self, p: Predictor) -> f64 {
        match p {
            Predictor::PreBer => self.pre_ber,
            Predictor::Mi => self.mi_norm,
            Predictor::Gmi => self.gmi_norm,
        }
    }
}

/// Everything one transmitted block yields, before merging.
struct BlockResult {
    frame: LlrFrame,
    tx: Vec<usize>,
    ys: Vec<Complex64>,
    rho: f64,
    errors: u64,
    info_bits: u64,
    codewords: u64,
}

struct Setup {
    c: Constellation,
    codec: Codec,
    kind: LlrKind,
    max_iter: usize,
    seed: u64,
    pad: bool,
}

impl Setup {
    /// Encodes and interleaves codeword `frame`, returning info and interleaved code bits.
    fn codeword(&self, point: u64, frame: u64) -> Result<(Vec<u8>, Vec<u8>)> {
        let mut rng = StreamKey::new(self.seed, point, frame, Role::InfoBits).rng();
        let info: Vec<u8> = (0..self.codec.k_info()).map(|_| rng.random::<bool>() as u8).collect();
        let code = self.codec.encode(&info)?;
        let perm = self.permutation(point, frame);
        Ok((info, perm.apply(&code)))
    }

    fn permutation(&self, point: u64, frame: u64) -> Permutation {
        Permutation::random(
            self.codec.n_code(),
            &mut StreamKey::new(self.seed, point, frame, Role::Interleaver).rng(),
        )
    }

    fn padding(&self, point: u64, frame: u64, n: usize) -> Vec<u8> {
        let mut rng = StreamKey::new(self.seed, point, frame, Role::Padding).rng();
        (0..n).map(|_| rng.random::<bool>() as u8).collect()
    }

    /// Deinterleaves and decodes the code-bit L-values of one codeword.
    fn decode(&self, point: u64, frame: u64, llrs: &[f64], info: &[u8]) -> Result<u64> {
        let llrs = self.permutation(point, frame).invert(llrs);
        let r = self.codec.decode(&llrs, self.max_iter, false)?;
        Ok(r.bit_errors(info))
    }

    fn awgn_frame(&self, point: u64, frame: u64, rho: f64) -> Result<BlockResult> {
        let m = self.c.bits_per_symbol();
        let n = self.codec.n_code();
        let (info, mut bits) = self.codeword(point, frame)?;
        let pad = (m - n % m) % m;
        if pad > 0 {
            if !self.pad {
                return Err(Error::CodecMismatch { n_code: n, m });
            }
            bits.extend(self.padding(point, frame, pad));
        }
        let tx = self.c.map_to_indices(&bits)?;
        let mut rng = StreamKey::new(self.seed, point, frame, Role::Noise).rng();
        let ys: Vec<Complex64> = tx.iter().map(|&i| self.c.point(i) + awgn_sample(&mut rng, rho)).collect();
        let frame_llrs = demap(&ys, rho, &self.c, self.kind, bits)?;
        let errors = self.decode(point, frame, &frame_llrs.llrs()[..n], &info)?;
        Ok(BlockResult {
            frame: frame_llrs,
            tx,
            ys,
            rho,
            errors,
            info_bits: info.len() as u64,
            codewords: 1,
        })
    }

    fn codewords_per_block(&self, p: &FiberParams) -> Result<usize> {
        let capacity = 2 * p.n_symbols * self.c.bits_per_symbol();
        let per = capacity / self.codec.n_code();
        if per == 0 {
            return Err(Error::SweepSpec(format!(
                "fiber block of {capacity} bits cannot hold a {}-bit codeword",
                self.codec.n_code()
            )));
        }
        if capacity % self.codec.n_code() != 0 && !self.pad {
            return Err(Error::CodecMismatch {
                n_code: self.codec.n_code(),
                m: capacity,
            });
        }
        Ok(per)
    }

    fn fiber_block(&self, point: u64, block: u64, p: &FiberParams) -> Result<BlockResult> {
        let m = self.c.bits_per_symbol();
        let n = self.codec.n_code();
        let per = self.codewords_per_block(p)?;
        let mut infos = Vec::with_capacity(per);
        let mut bits = Vec::with_capacity(2 * p.n_symbols * m);
        for j in 0..per {
            let (info, code) = self.codeword(point, block * per as u64 + j as u64)?;
            infos.push(info);
            bits.extend(code);
        }
        let fill = 2 * p.n_symbols * m - bits.len();
        bits.extend(self.padding(point, block, fill));
        let tx = self.c.map_to_indices(&bits)?;
        let points: Vec<Complex64> = tx.iter().map(|&i| self.c.point(i)).collect();
        let central = [points[..p.n_symbols].to_vec(), points[p.n_symbols..].to_vec()];
        let out = fiber::transmit(
            p,
            &self.c,
            &central,
            &mut StreamKey::new(self.seed, point, block, Role::Neighbors).rng(),
            &mut StreamKey::new(self.seed, point, block, Role::Ase).rng(),
        )?;
        let [x, y] = out.rx;
        let ys: Vec<Complex64> = x.into_iter().chain(y).collect();
        let frame = demap(&ys, out.rho, &self.c, self.kind, bits)?;
        let mut errors = 0;
        for (j, info) in infos.iter().enumerate() {
            let llrs = &frame.llrs()[j * n..(j + 1) * n];
            errors += self.decode(point, block * per as u64 + j as u64, llrs, info)?;
        }
        Ok(BlockResult {
            frame,
            tx,
            ys,
            rho: out.rho,
            errors,
            info_bits: (per * self.codec.k_info()) as u64,
            codewords: per as u64,
        })
    }
}

/// Runs every point of the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let setup = Setup {
        c: Constellation::resolve(&spec.constellation)?,
        codec: Codec::from_spec(&spec.code_spec())?,
        kind: spec.llr,
        max_iter: spec.max_iter.unwrap_or(0),
        seed: spec.seed,
        pad: spec.pad,
    };
    let setup = Setup {
        max_iter: spec.max_iter.unwrap_or_else(|| setup.codec.default_iterations()),
        ..setup
    };
    let m = setup.c.bits_per_symbol();
    if setup.codec.n_code() % m != 0 && !spec.pad && spec.channel == ChannelKind::Awgn {
        return Err(Error::CodecMismatch {
            n_code: setup.codec.n_code(),
            m,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::SweepSpec(format!("thread pool: {e}")))?;

    let mut rows = Vec::new();
    for (point, value) in spec.sweep_values()?.into_iter().enumerate() {
        let point = point as u64;
        let (batch, params, budget) = match spec.channel {
            ChannelKind::Awgn => (AWGN_BATCH, None, spec.frames),
            ChannelKind::Fiber => {
                let mut p = spec.fiber.clone().unwrap_or_default();
                match spec.sweep_var {
                    SweepVar::DistanceKm => p.span_length_km = value,
                    SweepVar::LaunchPowerDbm => p.launch_power_dbm = value,
                    SweepVar::RhoDb => unreachable!("rejected by validate"),
                }
                p.validate()?;
                let per = setup.codewords_per_block(&p)?;
                (1, Some(p), spec.frames.div_ceil(per))
            }
        };
        let mut results: Vec<BlockResult> = Vec::new();
        let mut errors = 0u64;
        let mut next = 0usize;
        while next < budget && (errors < spec.min_errors || results.is_empty()) {
            let end = (next + batch).min(budget);
            let done: Vec<Result<BlockResult>> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|f| match &params {
                        None => setup.awgn_frame(point, f as u64, db_to_linear(value)),
                        Some(p) => setup.fiber_block(point, f as u64, p),
                    })
                    .collect()
            });
            for r in done {
                let r = r?;
                errors += r.errors;
                results.push(r);
            }
            next = end;
        }
        let row = summarize(value, &setup.c, results, spec.llr_dump_dir.as_ref().map(|d| d.join(format!("point_{point}.csv"))))?;
        log::info!(
            "point {point} ({value}): pre {:.4e} gmi/m {:.4} post {:.3e} frames {}",
            row.pre_ber,
            row.gmi_norm,
            row.post_ber,
            row.frames
        );
        rows.push(row);
    }
    Ok(rows)
}

fn summarize(value: f64, c: &Constellation, results: Vec<BlockResult>, dump: Option<PathBuf>) -> Result<SweepRow> {
    let m = c.bits_per_symbol() as f64;
    let mut frames = results.iter();
    let first = frames.next().ok_or(Error::EmptyFrame)?;
    let mut all = first.frame.clone();
    for r in frames {
        all.extend(&r.frame)?;
    }
    // per-block MI estimates weighted by symbol count; fiber blocks differ in ρ
    let mut mi_sum = 0.0;
    let mut n_sym = 0usize;
    for r in &results {
        let mi = mi_from_observations(c, &r.tx, &r.ys, r.rho)?;
        mi_sum += mi.value * r.tx.len() as f64;
        n_sym += r.tx.len();
    }
    let gmi = estimate_gmi(&all)?;
    let errors: u64 = results.iter().map(|r| r.errors).sum();
    let bits: u64 = results.iter().map(|r| r.info_bits).sum();
    let codewords: u64 = results.iter().map(|r| r.codewords).sum();
    let post = PostFecBer::from_counts(errors, bits, codewords);
    if let Some(path) = dump {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        all.save_csv(&path)?;
    }
    Ok(SweepRow {
        sweep_var: value,
        pre_ber: bit_errors(&all) as f64 / all.len() as f64,
        mi_norm: mi_sum / n_sym as f64 / m,
        gmi_norm: gmi.value / m,
        s_star: gmi.s_star,
        post_ber: post.ber,
        post_ber_ci_lo: post.ci_lo,
        post_ber_ci_hi: post.ci_hi,
        frames: codewords,
    })
}

/// Effective SNR in dB measured by one fiber transmission of random symbols.
pub fn fiber_snr_db(p: &FiberParams, c: &Constellation, seed: u64) -> Result<f64> {
    let mut rng = StreamKey::new(seed, 0, 0, Role::InfoBits).rng();
    let central = [0, 1].map(|_| (0..p.n_symbols).map(|_| c.point(rng.random_range(0..c.order()))).collect());
    let out = fiber::transmit(
        p,
        c,
        &central,
        &mut StreamKey::new(seed, 0, 0, Role::Neighbors).rng(),
        &mut StreamKey::new(seed, 0, 0, Role::Ase).rng(),
    )?;
    Ok(linear_to_db(out.rho))
}
