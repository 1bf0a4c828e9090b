//! Soft demapping for the AWGN channel model, hard decisions and pre-FEC BER.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::{Error, Result, LLR_CLAMP};

/// How the L-values of a frame were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlrKind {
    Exact,
    #[serde(alias = "max-log")]
    Maxlog,
}

impl std::str::FromStr for LlrKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "maxlog" | "max-log" => Ok(Self::Maxlog),
            _ => Err(Error::SweepSpec(format!("unknown LLR kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for LlrKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Maxlog => "maxlog",
        })
    }
}

/// One received sample together with the SNR the demapper assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelObservation {
    pub y: Complex64,
    pub rho: f64,
}

impl ChannelObservation {
    pub fn new(y: Complex64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { y, rho })
    }
}

/// `m × n` L-values with the code bits they belong to.
///
/// Entries are stored symbol by symbol: bit `k` of symbol `l` sits at `l * m + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    m: usize,
    llrs: Vec<f64>,
    bits: Vec<u8>,
    kind: LlrKind,
}

impl LlrFrame {
    pub fn new(m: usize, llrs: Vec<f64>, bits: Vec<u8>, kind: LlrKind) -> Result<Self> {
        if m == 0 || llrs.len() % m != 0 {
            return Err(Error::LengthMismatch { len: llrs.len(), m });
        }
        if bits.len() != llrs.len() {
            return Err(Error::InputLength {
                expected: llrs.len(),
                got: bits.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::NonBinaryBit(b));
        }
        if llrs.iter().any(|l| !l.is_finite()) {
            return Err(Error::Constellation("non-finite L-value in frame".into()));
        }
        Ok(Self { m, llrs, bits, kind })
    }

    pub fn kind(&self) -> LlrKind {
        self.kind
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn n_symbols(&self) -> usize {
        self.llrs.len() / self.m
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }

    pub fn llrs(&self) -> &[f64] {
        &self.llrs
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn llr(&self, k: usize, l: usize) -> f64 {
        self.llrs[l * self.m + k]
    }

    pub fn bit(&self, k: usize, l: usize) -> u8 {
        self.bits[l * self.m + k]
    }

    /// Copy with every L-value multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            llrs: self.llrs.iter().map(|l| l * a).collect(),
            ..self.clone()
        }
    }

    /// Appends another frame of the same shape and kind.
    pub fn extend(&mut self, other: &LlrFrame) -> Result<()> {
        if other.m != self.m {
            return Err(Error::LengthMismatch {
                len: other.len(),
                m: self.m,
            });
        }
        self.llrs.extend_from_slice(&other.llrs);
        self.bits.extend_from_slice(&other.bits);
        Ok(())
    }

    /// Writes the frame as CSV with columns `k,l,bit,llr` (1-based indices).
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,l,bit,llr")?;
        for l in 0..self.n_symbols() {
            for k in 0..self.m {
                writeln!(w, "{},{},{},{}", k + 1, l + 1, self.bit(k, l), self.llr(k, l))?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a frame written by [`LlrFrame::write_csv`].
    pub fn read_csv(r: impl BufRead, kind: LlrKind) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io("<llr csv>", e))?;
        if header.as_deref().map(str::trim) != Some("k,l,bit,llr") {
            return Err(Error::Schema(format!("expected header k,l,bit,llr, got {header:?}")));
        }
        for line in lines {
            let line = line.map_err(|e| Error::io("<llr csv>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Schema(format!("malformed row {line:?}"));
            if f.len() != 4 {
                return Err(bad());
            }
            let k: usize = f[0].parse().map_err(|_| bad())?;
            let l: usize = f[1].parse().map_err(|_| bad())?;
            let bit: u8 = f[2].parse().map_err(|_| bad())?;
            let llr: f64 = f[3].parse().map_err(|_| bad())?;
            if k == 0 || l == 0 {
                return Err(bad());
            }
            rows.push((k - 1, l - 1, bit, llr));
        }
        let m = rows.iter().map(|r| r.0 + 1).max().ok_or(Error::EmptyFrame)?;
        let n = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if rows.len() != m * n {
            return Err(Error::Schema(format!("{} rows for a {m}x{n} frame", rows.len())));
        }
        let mut llrs = vec![f64::NAN; m * n];
        let mut bits = vec![0u8; m * n];
        for (k, l, bit, llr) in rows {
            llrs[l * m + k] = llr;
            bits[l * m + k] = bit;
        }
        Self::new(m, llrs, bits, kind)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSnr(rho))
    }
}

/// Exact L-values of one observation, clamped to `±LLR_CLAMP`.
pub fn llr_exact(y: Complex64, rho: f64, c: &Constellation) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let mut out = vec![0.0; c.bits_per_symbol()];
    let mut scratch = Vec::new();
    exact_into(y, rho, c, &mut out, &mut scratch);
    Ok(out)
}

/// Max-log L-values of one observation: `ρ (min_{X_k^0} |y-x|² - min_{X_k^1} |y-x|²)`.
pub fn llr_maxlog(y: Complex64, rho: f64, c: &Constellation) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let mut out = vec![0.0; c.bits_per_symbol()];
    maxlog_into(y, rho, c, &mut out);
    Ok(out)
}

fn exact_into(y: Complex64, rho: f64, c: &Constellation, out: &mut [f64], weights: &mut Vec<f64>) {
    let m = c.bits_per_symbol();
    weights.clear();
    weights.extend(c.points().iter().map(|x| (y - x).norm_sqr()));
    let dmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
    for w in weights.iter_mut() {
        *w = (-rho * (*w - dmin)).exp();
    }
    let mut sums = [[0.0f64; 2]; 16];
    for (i, &w) in weights.iter().enumerate() {
        let label = c.label(i).bits();
        for k in 0..m {
            sums[k][label[k] as usize] += w;
        }
    }
    for k in 0..m {
        let l = sums[k][1].ln() - sums[k][0].ln();
        out[k] = if l.is_nan() { 0.0 } else { l.clamp(-LLR_CLAMP, LLR_CLAMP) };
    }
}

fn maxlog_into(y: Complex64, rho: f64, c: &Constellation, out: &mut [f64]) {
    let m = c.bits_per_symbol();
    let mut mins = [[f64::INFINITY; 2]; 16];
    for (i, x) in c.points().iter().enumerate() {
        let d = (y - x).norm_sqr();
        let label = c.label(i).bits();
        for k in 0..m {
            let slot = &mut mins[k][label[k] as usize];
            if d < *slot {
                *slot = d;
            }
        }
    }
    for k in 0..m {
        out[k] = rho * (mins[k][0] - mins[k][1]);
    }
}

/// Demaps a block of observations into an [`LlrFrame`].
pub fn demap(
    ys: &[Complex64],
    rho: f64,
    c: &Constellation,
    kind: LlrKind,
    bits: Vec<u8>,
) -> Result<LlrFrame> {
    check_rho(rho)?;
    let m = c.bits_per_symbol();
    if bits.len() != ys.len() * m {
        return Err(Error::InputLength {
            expected: ys.len() * m,
            got: bits.len(),
        });
    }
    let mut llrs = vec![0.0; ys.len() * m];
    let mut scratch = Vec::with_capacity(c.order());
    for (y, out) in ys.iter().zip(llrs.chunks_exact_mut(m)) {
        match kind {
            LlrKind::Exact => exact_into(*y, rho, c, out, &mut scratch),
            LlrKind::Maxlog => maxlog_into(*y, rho, c, out),
        }
    }
    LlrFrame::new(m, llrs, bits, kind)
}

/// MAP hard decision on an a-posteriori L-value; ties decide 1.
#[inline]
pub fn hard_decide(llr_apo: f64) -> u8 {
    u8::from(llr_apo >= 0.0)
}

/// Number of hard-decision errors in a frame.
pub fn bit_errors(frame: &LlrFrame) -> u64 {
    frame
        .llrs
        .iter()
        .zip(&frame.bits)
        .filter(|(&l, &b)| hard_decide(l) != b)
        .count() as u64
}

/// Fraction of code bits whose hard decision differs from the transmitted bit.
pub fn pre_fec_ber(frame: &LlrFrame) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    Ok(bit_errors(frame) as f64 / frame.len() as f64)
}

/// Circularly-symmetric complex Gaussian sample with `E|z|² = 1/ρ`.
pub fn awgn_sample(rng: &mut impl Rng, rho: f64) -> Complex64 {
    let sigma = (0.5 / rho).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sigma, im * sigma)
}

/// One realization of bits sent through the memoryless AWGN channel.
#[derive(Debug, Clone)]
pub struct AwgnBlock {
    pub bits: Vec<u8>,
    pub tx: Vec<usize>,
    pub y: Vec<Complex64>,
    pub rho: f64,
}

impl AwgnBlock {
    /// Sends the given code bits.
    pub fn transmit(c: &Constellation, bits: Vec<u8>, rho: f64, rng: &mut impl Rng) -> Result<Self> {
        check_rho(rho)?;
        let tx = c.map_to_indices(&bits)?;
        let y = tx.iter().map(|&i| c.point(i) + awgn_sample(rng, rho)).collect();
        Ok(Self { bits, tx, y, rho })
    }

    /// Sends `n_symbols` symbols of uniformly random bits.
    pub fn random(c: &Constellation, n_symbols: usize, rho: f64, rng: &mut impl Rng) -> Result<Self> {
        let bits = (0..n_symbols * c.bits_per_symbol())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        Self::transmit(c, bits, rho, rng)
    }

    pub fn frame(&self, c: &Constellation, kind: LlrKind) -> Result<LlrFrame> {
        demap(&self.y, self.rho, c, kind, self.bits.clone())
    }
}
