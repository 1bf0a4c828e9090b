//! Punctured parallel-concatenated turbo code built from two (1, 11/15)_8
//! recursive systematic convolutional encoders, decoded with max-log BCJR.

use std::path::Path;
use std::str::FromStr;

use super::interleaver::Permutation;
use super::DecodeResult;
use crate::demapper::hard_decide;
use crate::{Error, Result};

pub const DEFAULT_TURBO_ITERATIONS: usize = 10;
pub const DEFAULT_BLOCK_LEN: usize = 20_000;
/// Scaling applied to extrinsic L-values before they are used as a-priori input.
pub const EXTRINSIC_SCALE: f64 = 0.7;

const MEMORY: usize = 3;
const STATES: usize = 1 << MEMORY;
/// Tail bits of the terminated encoder: systematic and parity for each of three steps.
pub const TAIL_BITS: usize = 2 * MEMORY;

/// Encoder state packs `(s_{t-1}, s_{t-2}, s_{t-3})` into bits 0..3.
///
/// Feedback `1 + D + D³` (octal 15), feedforward `1 + D³` (octal 11).
#[inline]
fn rsc_step(state: usize, u: u8) -> (usize, u8) {
    let s1 = state & 1;
    let s3 = (state >> 2) & 1;
    let s = (u as usize) ^ s1 ^ s3;
    let p = (s ^ s3) as u8;
    let next = (s | (state << 1)) & (STATES - 1);
    (next, p)
}

/// Input that drives the feedback register to zero.
#[inline]
fn termination_input(state: usize) -> u8 {
    ((state & 1) ^ ((state >> 2) & 1)) as u8
}

/// Parity stream of one RSC encoder. With `terminate`, three tail steps are
/// appended and their inputs returned alongside the parity.
pub fn rsc_encode(input: &[u8], terminate: bool) -> (Vec<u8>, Vec<u8>) {
    let mut state = 0;
    let mut parity = Vec::with_capacity(input.len() + MEMORY);
    for &u in input {
        let (next, p) = rsc_step(state, u);
        parity.push(p);
        state = next;
    }
    let mut tail = Vec::new();
    if terminate {
        for _ in 0..MEMORY {
            let u = termination_input(state);
            let (next, p) = rsc_step(state, u);
            tail.push(u);
            parity.push(p);
            state = next;
        }
        debug_assert_eq!(state, 0);
    }
    (parity, tail)
}

/// A-posteriori L-values of the inputs of one RSC code by max-log BCJR.
///
/// All slices have one entry per trellis step. A terminated trellis ends in
/// the zero state; otherwise every final state is equally likely.
pub fn rsc_maxlog_apo(sys: &[f64], par: &[f64], apriori: &[f64], terminated: bool) -> Vec<f64> {
    let steps = sys.len();
    assert!(par.len() == steps && apriori.len() == steps, "stream length mismatch");
    let mut alpha = vec![[f64::NEG_INFINITY; STATES]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let lu = sys[t] + apriori[t];
        let mut next_alpha = [f64::NEG_INFINITY; STATES];
        for s in 0..STATES {
            let a = alpha[t][s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for u in 0..2u8 {
                let (ns, p) = rsc_step(s, u);
                let metric = a + u as f64 * lu + p as f64 * par[t];
                if metric > next_alpha[ns] {
                    next_alpha[ns] = metric;
                }
            }
        }
        let max = next_alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        next_alpha.iter_mut().for_each(|a| *a -= max);
        alpha[t + 1] = next_alpha;
    }

    let mut beta = if terminated {
        let mut b = [f64::NEG_INFINITY; STATES];
        b[0] = 0.0;
        b
    } else {
        [0.0; STATES]
    };
    let mut apo = vec![0.0; steps];
    for t in (0..steps).rev() {
        let lu = sys[t] + apriori[t];
        let mut best = [f64::NEG_INFINITY; 2];
        let mut prev_beta = [f64::NEG_INFINITY; STATES];
        for s in 0..STATES {
            for u in 0..2u8 {
                let (ns, p) = rsc_step(s, u);
                let gamma = u as f64 * lu + p as f64 * par[t];
                let through = gamma + beta[ns];
                if through > prev_beta[s] {
                    prev_beta[s] = through;
                }
                let path = alpha[t][s] + through;
                if path > best[u as usize] {
                    best[u as usize] = path;
                }
            }
        }
        apo[t] = best[1] - best[0];
        let max = prev_beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prev_beta.iter_mut().for_each(|b| *b -= max);
        beta = prev_beta;
    }
    apo
}

/// Supported overall code rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurboRate {
    R1_3,
    R2_5,
    R1_2,
    R3_5,
    R2_3,
    R3_4,
    R5_6,
}

impl TurboRate {
    pub const ALL: [TurboRate; 7] = [
        Self::R1_3,
        Self::R2_5,
        Self::R1_2,
        Self::R3_5,
        Self::R2_3,
        Self::R3_4,
        Self::R5_6,
    ];

    pub fn value(self) -> f64 {
        let (a, b) = self.fraction();
        a as f64 / b as f64
    }

    pub fn fraction(self) -> (usize, usize) {
        match self {
            Self::R1_3 => (1, 3),
            Self::R2_5 => (2, 5),
            Self::R1_2 => (1, 2),
            Self::R3_5 => (3, 5),
            Self::R2_3 => (2, 3),
            Self::R3_4 => (3, 4),
            Self::R5_6 => (5, 6),
        }
    }

    /// Cyclic pattern keeping every systematic bit and spreading the kept
    /// parity bits evenly between the two encoders.
    pub fn default_pattern(self) -> PuncturePattern {
        let (p1, p2): (&[u8], &[u8]) = match self {
            Self::R1_3 => (&[1], &[1]),
            Self::R2_5 => (&[1, 1], &[1, 0]),
            Self::R1_2 => (&[1, 0], &[0, 1]),
            Self::R3_5 => (&[1, 0, 0], &[0, 1, 0]),
            Self::R2_3 => (&[1, 0, 0, 0], &[0, 0, 1, 0]),
            Self::R3_4 => (&[1, 0, 0, 0, 0, 0], &[0, 0, 0, 1, 0, 0]),
            Self::R5_6 => (&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0], &[0, 0, 0, 0, 0, 1, 0, 0, 0, 0]),
        };
        PuncturePattern {
            parity1: p1.iter().map(|&b| b == 1).collect(),
            parity2: p2.iter().map(|&b| b == 1).collect(),
        }
    }
}

impl FromStr for TurboRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.to_string() == s.trim())
            .ok_or_else(|| Error::UnsupportedRate(s.to_string()))
    }
}

impl std::fmt::Display for TurboRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = self.fraction();
        write!(f, "{a}/{b}")
    }
}

/// Periodic keep-masks for the two parity streams. Systematic bits are never punctured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    parity1: Vec<bool>,
    parity2: Vec<bool>,
}

impl PuncturePattern {
    pub fn new(parity1: Vec<bool>, parity2: Vec<bool>) -> Result<Self> {
        if parity1.is_empty() || parity1.len() != parity2.len() {
            return Err(Error::PuncturePattern(
                "parity masks must be non-empty and of equal period".into(),
            ));
        }
        Ok(Self { parity1, parity2 })
    }

    pub fn period(&self) -> usize {
        self.parity1.len()
    }

    /// Parses three lines of 0/1 masks (systematic, parity 1, parity 2); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let masks: Vec<Vec<bool>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::PuncturePattern(format!("unexpected character {c:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let [sys, p1, p2] = <[Vec<bool>; 3]>::try_from(masks)
            .map_err(|m| Error::PuncturePattern(format!("expected 3 masks, got {}", m.len())))?;
        if sys.len() != p1.len() || !sys.iter().all(|&b| b) {
            return Err(Error::PuncturePattern(
                "systematic mask must keep every bit and match the parity period".into(),
            ));
        }
        Self::new(p1, p2)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let line = |m: &[bool]| m.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        format!(
            "{}\n{}\n{}\n",
            "1".repeat(self.period()),
            line(&self.parity1),
            line(&self.parity2)
        )
    }

    fn keep1(&self, t: usize) -> bool {
        self.parity1[t % self.period()]
    }

    fn keep2(&self, t: usize) -> bool {
        self.parity2[t % self.period()]
    }
}

/// Unpunctured streams of one turbo codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct TurboStreams<T> {
    pub sys: Vec<T>,
    pub parity1: Vec<T>,
    pub parity2: Vec<T>,
    /// Alternating tail input and parity of encoder 1.
    pub tail: Vec<T>,
}

/// Per-half-iteration record of the extrinsic exchange, in the index order of
/// the receiving decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub receiver: usize,
    pub extrinsic_out: Vec<f64>,
    pub apriori_used: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TurboCode {
    k: usize,
    pattern: PuncturePattern,
    perm: Permutation,
}

impl TurboCode {
    pub fn new(k: usize, rate: TurboRate, interleaver_seed: u64) -> Result<Self> {
        Self::with_pattern(k, rate.default_pattern(), interleaver_seed)
    }

    pub fn with_pattern(k: usize, pattern: PuncturePattern, interleaver_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InputLength { expected: 1, got: 0 });
        }
        Ok(Self {
            k,
            pattern,
            perm: Permutation::from_seed(k, interleaver_seed),
        })
    }

    pub fn k_info(&self) -> usize {
        self.k
    }

    pub fn n_code(&self) -> usize {
        let kept = (0..self.k)
            .map(|t| self.pattern.keep1(t) as usize + self.pattern.keep2(t) as usize)
            .sum::<usize>();
        self.k + kept + TAIL_BITS
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n_code() as f64
    }

    pub fn pattern(&self) -> &PuncturePattern {
        &self.pattern
    }

    pub fn streams(&self, info: &[u8]) -> Result<TurboStreams<u8>> {
        if info.len() != self.k {
            return Err(Error::InputLength {
                expected: self.k,
                got: info.len(),
            });
        }
        if let Some(&b) = info.iter().find(|&&b| b > 1) {
            return Err(Error::NonBinaryBit(b));
        }
        let (mut p1, tail_in) = rsc_encode(info, true);
        let tail_par = p1.split_off(self.k);
        let (p2, _) = rsc_encode(&self.perm.apply(info), false);
        let tail = tail_in.iter().zip(&tail_par).flat_map(|(&u, &p)| [u, p]).collect();
        Ok(TurboStreams {
            sys: info.to_vec(),
            parity1: p1,
            parity2: p2,
            tail,
        })
    }

    /// Serializes streams in transmission order: per step `[sys, p1?, p2?]`, then the tail.
    pub fn puncture<T: Copy>(&self, s: &TurboStreams<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_code());
        for t in 0..self.k {
            out.push(s.sys[t]);
            if self.pattern.keep1(t) {
                out.push(s.parity1[t]);
            }
            if self.pattern.keep2(t) {
                out.push(s.parity2[t]);
            }
        }
        out.extend_from_slice(&s.tail);
        out
    }

    /// Inverse of [`TurboCode::puncture`], filling removed positions with `fill`.
    pub fn depuncture<T: Copy>(&self, data: &[T], fill: T) -> Result<TurboStreams<T>> {
        if data.len() != self.n_code() {
            return Err(Error::InputLength {
                expected: self.n_code(),
                got: data.len(),
            });
        }
        let mut it = data.iter().copied();
        let mut s = TurboStreams {
            sys: Vec::with_capacity(self.k),
            parity1: Vec::with_capacity(self.k),
            parity2: Vec::with_capacity(self.k),
            tail: Vec::with_capacity(TAIL_BITS),
        };
        for t in 0..self.k {
            s.sys.push(it.next().unwrap());
            s.parity1.push(if self.pattern.keep1(t) { it.next().unwrap() } else { fill });
            s.parity2.push(if self.pattern.keep2(t) { it.next().unwrap() } else { fill });
        }
        s.tail.extend(it);
        Ok(s)
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        Ok(self.puncture(&self.streams(info)?))
    }

    pub fn decode(&self, llrs: &[f64], max_iter: usize, strict: bool) -> Result<DecodeResult> {
        self.decode_inner(llrs, max_iter, strict, None)
    }

    /// Like [`TurboCode::decode`] but also records every extrinsic exchange.
    pub fn decode_traced(
        &self,
        llrs: &[f64],
        max_iter: usize,
        strict: bool,
    ) -> Result<(DecodeResult, Vec<TraceEntry>)> {
        let mut trace = Vec::new();
        let r = self.decode_inner(llrs, max_iter, strict, Some(&mut trace))?;
        Ok((r, trace))
    }

    fn decode_inner(
        &self,
        llrs: &[f64],
        max_iter: usize,
        strict: bool,
        mut trace: Option<&mut Vec<TraceEntry>>,
    ) -> Result<DecodeResult> {
        let s = self.depuncture(llrs, 0.0)?;
        let k = self.k;
        let mut sys1 = s.sys.clone();
        let mut par1 = s.parity1.clone();
        for pair in s.tail.chunks_exact(2) {
            sys1.push(pair[0]);
            par1.push(pair[1]);
        }
        let sys2 = self.perm.apply(&s.sys);
        let mut apriori1 = vec![0.0; k + MEMORY];
        let mut decisions = vec![0u8; k];
        let mut apo_out = vec![0.0; k];
        let mut iterations = 0;
        let mut converged = false;

        for it in 0..max_iter {
            iterations += 1;
            let apo1 = rsc_maxlog_apo(&sys1, &par1, &apriori1, true);
            let ext1: Vec<f64> = (0..k).map(|t| apo1[t] - s.sys[t] - apriori1[t]).collect();
            let ext1_perm = self.perm.apply(&ext1);
            let apriori2: Vec<f64> = ext1_perm.iter().map(|e| EXTRINSIC_SCALE * e).collect();
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TraceEntry {
                    iteration: it + 1,
                    receiver: 2,
                    extrinsic_out: ext1_perm,
                    apriori_used: apriori2.clone(),
                });
            }

            let apo2 = rsc_maxlog_apo(&sys2, &s.parity2, &apriori2, false);
            let ext2: Vec<f64> = (0..k).map(|t| apo2[t] - sys2[t] - apriori2[t]).collect();
            let ext2_deperm = self.perm.invert(&ext2);
            for t in 0..k {
                apriori1[t] = EXTRINSIC_SCALE * ext2_deperm[t];
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TraceEntry {
                    iteration: it + 1,
                    receiver: 1,
                    extrinsic_out: ext2_deperm,
                    apriori_used: apriori1[..k].to_vec(),
                });
            }

            apo_out = self.perm.invert(&apo2);
            decisions = apo_out.iter().map(|&l| hard_decide(l)).collect();
            converged = (0..k).all(|t| hard_decide(apo1[t]) == decisions[t]);
            if converged && !strict {
                break;
            }
        }

        Ok(DecodeResult {
            info_bits: decisions,
            codeword: Vec::new(),
            apo_llrs: apo_out,
            iterations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_for, Role};
    use rand::Rng;

    #[test]
    fn impulse_response() {
        let mut input = vec![0u8; 8];
        input[0] = 1;
        let (parity, _) = rsc_encode(&input, false);
        assert_eq!(parity, vec![1, 1, 1, 1, 0, 1, 0, 0]);
    }

    #[test]
    fn termination_returns_to_zero_state() {
        let mut rng = rng_for(1, Role::InfoBits);
        for _ in 0..20 {
            let input: Vec<u8> = (0..17).map(|_| rng.random::<bool>() as u8).collect();
            let (_, tail) = rsc_encode(&input, true);
            let mut state = 0;
            for &u in input.iter().chain(&tail) {
                state = rsc_step(state, u).0;
            }
            assert_eq!(state, 0);
        }
    }

    #[test]
    fn rates_and_lengths() {
        for rate in TurboRate::ALL {
            let code = TurboCode::new(20_000, rate, 1).unwrap();
            let (a, b) = rate.fraction();
            let exact = 20_000.0 * b as f64 / a as f64;
            assert!(((code.n_code() - TAIL_BITS) as f64 - exact).abs() <= 1.0, "{rate}");
            assert!((code.rate() - rate.value()).abs() < 1e-3);
        }
        let third = TurboCode::new(20_000, TurboRate::R1_3, 1).unwrap();
        assert_eq!(third.n_code(), 60_000 + TAIL_BITS);
        assert!(matches!("7/8".parse::<TurboRate>(), Err(Error::UnsupportedRate(_))));
    }

    #[test]
    fn puncture_round_trip() {
        let code = TurboCode::new(30, TurboRate::R3_5, 2).unwrap();
        let info: Vec<u8> = (0..30).map(|i| (i % 3 == 1) as u8).collect();
        let streams = code.streams(&info).unwrap();
        let tx = code.puncture(&streams);
        let back = code.depuncture(&tx, 9).unwrap();
        assert_eq!(back.sys, streams.sys);
        assert_eq!(back.tail, streams.tail);
        for t in 0..30 {
            if code.pattern().keep1(t) {
                assert_eq!(back.parity1[t], streams.parity1[t]);
            } else {
                assert_eq!(back.parity1[t], 9);
            }
        }
        assert_eq!(code.puncture(&back), tx);
    }

    #[test]
    fn pattern_file_round_trip() {
        let p = TurboRate::R2_3.default_pattern();
        assert_eq!(PuncturePattern::parse(&p.to_text()).unwrap(), p);
        assert!(PuncturePattern::parse("1 0\n10\n01\n").is_err());
        assert!(PuncturePattern::parse("11\n10\n").is_err());
        let commented = "# rate 1/2\n11\n10 # parity 1\n01\n";
        assert_eq!(PuncturePattern::parse(commented).unwrap(), TurboRate::R1_2.default_pattern());
    }

    #[test]
    fn noiseless_decode_is_exact_in_one_iteration() {
        let code = TurboCode::new(500, TurboRate::R1_2, 3).unwrap();
        let mut rng = rng_for(3, Role::InfoBits);
        let info: Vec<u8> = (0..500).map(|_| rng.random::<bool>() as u8).collect();
        let llrs: Vec<f64> = code
            .encode(&info)
            .unwrap()
            .iter()
            .map(|&b| if b == 1 { 50.0 } else { -50.0 })
            .collect();
        let r = code.decode(&llrs, 10, false).unwrap();
        assert_eq!(r.info_bits, info);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn extrinsic_scaling_is_applied() {
        let code = TurboCode::new(200, TurboRate::R1_3, 4).unwrap();
        let mut rng = rng_for(4, Role::Noise);
        let llrs: Vec<f64> = (0..code.n_code()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, trace) = code.decode_traced(&llrs, 3, true).unwrap();
        assert_eq!(trace.len(), 6);
        for e in &trace {
            for (o, u) in e.extrinsic_out.iter().zip(&e.apriori_used) {
                assert_eq!(*u, EXTRINSIC_SCALE * o);
            }
        }
    }
}
