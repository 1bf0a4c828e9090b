//! Soft-decision forward error correction: LDPC and turbo codes, bit
//! interleaving and post-FEC error counting.

pub mod alist;
pub mod construct;
pub mod interleaver;
pub mod ldpc;
pub mod turbo;

use serde::{Deserialize, Serialize};

use crate::math::wilson_interval;
use crate::{Error, Result};
pub use alist::SparseMatrix;
pub use interleaver::{deinterleave, interleave, Permutation};
pub use ldpc::{LdpcCode, DEFAULT_LDPC_ITERATIONS};
pub use turbo::{PuncturePattern, TurboCode, TurboRate, DEFAULT_BLOCK_LEN, DEFAULT_TURBO_ITERATIONS};

/// Parity-check matrices shipped with the crate, by name.
pub const SHIPPED_CODES: [(&str, &str); 4] = [
    ("toy12", include_str!("../../data/codes/toy12.alist")),
    ("ira648-r1_2", include_str!("../../data/codes/ira648-r1_2.alist")),
    ("ira4096-r1_2", include_str!("../../data/codes/ira4096-r1_2.alist")),
    ("ira4096-r3_4", include_str!("../../data/codes/ira4096-r3_4.alist")),
];

/// Outcome of decoding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub info_bits: Vec<u8>,
    /// Decided code bits; empty for decoders that only decide information bits.
    pub codeword: Vec<u8>,
    /// A-posteriori L-values of the decided bits.
    pub apo_llrs: Vec<f64>,
    pub iterations: usize,
    /// Zero syndrome (LDPC) or agreement of both component decoders (turbo).
    pub converged: bool,
}

impl DecodeResult {
    pub fn bit_errors(&self, reference: &[u8]) -> u64 {
        self.info_bits
            .iter()
            .zip(reference)
            .filter(|(a, b)| a != b)
            .count() as u64
    }

    pub fn ber(&self, reference: &[u8]) -> f64 {
        if self.info_bits.is_empty() {
            0.0
        } else {
            self.bit_errors(reference) as f64 / self.info_bits.len() as f64
        }
    }
}

/// Aggregated post-FEC bit error rate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostFecBer {
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl PostFecBer {
    pub fn from_counts(errors: u64, bits: u64, frames: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, bits);
        Self {
            ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
            errors,
            bits,
            frames,
            ci_lo,
            ci_hi,
        }
    }
}

pub fn post_fec_ber(results: &[DecodeResult], reference: &[Vec<u8>]) -> Result<PostFecBer> {
    if results.is_empty() {
        return Err(Error::EmptyFrame);
    }
    if results.len() != reference.len() {
        return Err(Error::InputLength {
            expected: results.len(),
            got: reference.len(),
        });
    }
    let errors = results.iter().zip(reference).map(|(r, b)| r.bit_errors(b)).sum();
    let bits = results.iter().map(|r| r.info_bits.len() as u64).sum();
    Ok(PostFecBer::from_counts(errors, bits, results.len() as u64))
}

/// Which code family a [`CodeSpec`] names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecKind {
    Ldpc,
    Turbo,
    Uncoded,
}

impl std::str::FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldpc" => Ok(Self::Ldpc),
            "turbo" => Ok(Self::Turbo),
            "uncoded" | "none" => Ok(Self::Uncoded),
            _ => Err(Error::SweepSpec(format!("unknown codec {s:?}"))),
        }
    }
}

/// Code description as found in a sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub codec: CodecKind,
    /// Shipped LDPC code name or alist path; for LDPC, picks the code.
    pub code: Option<String>,
    /// Target rate such as `1/2`; for turbo codes, picks the puncturing.
    pub rate: Option<String>,
    /// Information bits per turbo block, or frame length for uncoded transmission.
    pub block_len: usize,
    /// Optional puncture pattern file overriding the default for the rate.
    pub puncture_file: Option<String>,
    pub interleaver_seed: u64,
}

/// A constructed, immutable codec.
#[derive(Debug, Clone)]
pub enum Codec {
    Ldpc(LdpcCode),
    Turbo(TurboCode),
    Uncoded(usize),
}

impl Codec {
    pub fn from_spec(spec: &CodeSpec) -> Result<Self> {
        match spec.codec {
            CodecKind::Ldpc => {
                let name = spec
                    .code
                    .as_deref()
                    .ok_or_else(|| Error::SweepSpec("LDPC codec needs `code`".into()))?;
                Ok(Self::Ldpc(shipped_ldpc(name).or_else(|_| LdpcCode::load_alist(name))?))
            }
            CodecKind::Turbo => {
                let rate: TurboRate = spec.rate.as_deref().unwrap_or("1/3").parse()?;
                let pattern = match &spec.puncture_file {
                    Some(path) => PuncturePattern::load(path)?,
                    None => rate.default_pattern(),
                };
                Ok(Self::Turbo(TurboCode::with_pattern(
                    spec.block_len,
                    pattern,
                    spec.interleaver_seed,
                )?))
            }
            CodecKind::Uncoded => Ok(Self::Uncoded(spec.block_len)),
        }
    }

    pub fn k_info(&self) -> usize {
        match self {
            Self::Ldpc(c) => c.k_info(),
            Self::Turbo(c) => c.k_info(),
            Self::Uncoded(n) => *n,
        }
    }

    pub fn n_code(&self) -> usize {
        match self {
            Self::Ldpc(c) => c.n_code(),
            Self::Turbo(c) => c.n_code(),
            Self::Uncoded(n) => *n,
        }
    }

    pub fn rate(&self) -> f64 {
        self.k_info() as f64 / self.n_code() as f64
    }

    pub fn default_iterations(&self) -> usize {
        match self {
            Self::Ldpc(_) => DEFAULT_LDPC_ITERATIONS,
            Self::Turbo(_) => DEFAULT_TURBO_ITERATIONS,
            Self::Uncoded(_) => 0,
        }
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        match self {
            Self::Ldpc(c) => c.encode(info),
            Self::Turbo(c) => c.encode(info),
            Self::Uncoded(n) => {
                if info.len() != *n {
                    return Err(Error::InputLength {
                        expected: *n,
                        got: info.len(),
                    });
                }
                Ok(info.to_vec())
            }
        }
    }

    pub fn decode(&self, llrs: &[f64], max_iter: usize, strict: bool) -> Result<DecodeResult> {
        match self {
            Self::Ldpc(c) => c.decode(llrs, max_iter, strict),
            Self::Turbo(c) => c.decode(llrs, max_iter, strict),
            Self::Uncoded(n) => {
                if llrs.len() != *n {
                    return Err(Error::InputLength {
                        expected: *n,
                        got: llrs.len(),
                    });
                }
                let bits: Vec<u8> = llrs.iter().map(|&l| crate::demapper::hard_decide(l)).collect();
                Ok(DecodeResult {
                    info_bits: bits.clone(),
                    codeword: bits,
                    apo_llrs: llrs.to_vec(),
                    iterations: 0,
                    converged: true,
                })
            }
        }
    }
}

/// One of the [`SHIPPED_CODES`] by name.
pub fn shipped_ldpc(name: &str) -> Result<LdpcCode> {
    let (_, text) = SHIPPED_CODES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Alist(format!("no shipped code named {name:?}")))?;
    LdpcCode::new(name, SparseMatrix::parse_alist(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(bits: Vec<u8>) -> DecodeResult {
        DecodeResult {
            info_bits: bits,
            codeword: Vec::new(),
            apo_llrs: Vec::new(),
            iterations: 1,
            converged: true,
        }
    }

    #[test]
    fn perfect_frames_give_zero() {
        let r = vec![result(vec![0, 1, 1]), result(vec![1, 1, 0])];
        let refs = vec![vec![0, 1, 1], vec![1, 1, 0]];
        let b = post_fec_ber(&r, &refs).unwrap();
        assert_eq!(b.ber, 0.0);
        assert_eq!(b.frames, 2);
    }

    #[test]
    fn threshold_arithmetic() {
        let b = PostFecBer::from_counts(47, 10_000, 5);
        assert!((b.ber - 4.7e-3).abs() < 1e-15);
        assert!(b.ci_lo < b.ber && b.ber < b.ci_hi);
    }

    #[test]
    fn aggregate_matches_per_frame_sum() {
        let r = vec![result(vec![0, 0, 0, 0]), result(vec![1, 1, 1, 1])];
        let refs = vec![vec![0, 1, 0, 0], vec![1, 1, 0, 0]];
        let per_frame: u64 = r.iter().zip(&refs).map(|(x, b)| x.bit_errors(b)).sum();
        let b = post_fec_ber(&r, &refs).unwrap();
        assert_eq!(b.errors, per_frame);
        assert!((b.ber - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn shipped_codes_load() {
        for (name, _) in SHIPPED_CODES {
            let code = shipped_ldpc(name).unwrap();
            assert_eq!(code.n_code(), code.parity_check().n_cols());
        }
    }
}
