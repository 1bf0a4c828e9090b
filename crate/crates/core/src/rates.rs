//! Monte-Carlo estimators of MI and GMI and the symmetrized L-value PDF.
//!
//! Rates are reported in bits per symbol; L-values are natural-log ratios.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::constellation::Constellation;
use crate::demapper::{awgn_sample, LlrFrame, LlrKind};
use crate::math::{golden_section_max, linear_to_db, log2_1p_exp, RunningStats};
use crate::{Error, Result, LLR_CLAMP};

/// Smallest sample count accepted by [`estimate_mi_awgn`].
pub const MIN_MI_SAMPLES: usize = 1000;

pub const S_BRACKET: (f64, f64) = (1e-3, 20.0);
pub const S_TOLERANCE: f64 = 1e-4;

/// Terms with exponent below `-PRUNE_EXPONENT` are dropped from the MI inner sum.
const PRUNE_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mi,
    Gmi,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Mi => "mi",
            Metric::Gmi => "gmi",
        })
    }
}

/// An achievable-rate estimate in bits per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub metric: Metric,
    pub value: f64,
    /// Bit-wise contributions (GMI only); they sum to `value`.
    pub per_bit_terms: Vec<f64>,
    /// Optimized `s` (1 for exact L-values, NaN for MI).
    pub s_star: f64,
    /// Set when the `s` search ended at a bracket endpoint.
    pub s_at_boundary: bool,
    pub n_samples: usize,
    pub std_err: f64,
}

/// MI of a constellation over AWGN, averaging every transmitted point over
/// the same `n` noise draws.
pub fn estimate_mi_awgn(c: &Constellation, rho: f64, n: usize, rng: &mut impl Rng) -> Result<RateEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveSnr(rho));
    }
    if n < MIN_MI_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            min: MIN_MI_SAMPLES,
        });
    }
    let table = NeighborTable::new(c);
    let size = c.order();
    let mut stats = RunningStats::default();
    for _ in 0..n {
        let z = awgn_sample(rng, rho);
        let mean_log: f64 = (0..size).map(|i| table.log2_f(i, z, rho)).sum::<f64>() / size as f64;
        stats.push(mean_log);
    }
    let m = c.bits_per_symbol() as f64;
    Ok(RateEstimate {
        metric: Metric::Mi,
        value: m - stats.mean(),
        per_bit_terms: Vec::new(),
        s_star: f64::NAN,
        s_at_boundary: false,
        n_samples: n,
        std_err: stats.std_err(),
    })
}

/// MI from given transmitted points and observations under the AWGN law with SNR `rho`.
pub fn mi_from_observations(
    c: &Constellation,
    tx: &[usize],
    ys: &[Complex64],
    rho: f64,
) -> Result<RateEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveSnr(rho));
    }
    if tx.len() != ys.len() {
        return Err(Error::InputLength {
            expected: tx.len(),
            got: ys.len(),
        });
    }
    if tx.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let table = NeighborTable::new(c);
    let mut stats = RunningStats::default();
    for (&i, &y) in tx.iter().zip(ys) {
        stats.push(table.log2_f(i, y - c.point(i), rho));
    }
    Ok(RateEstimate {
        metric: Metric::Mi,
        value: c.bits_per_symbol() as f64 - stats.mean(),
        per_bit_terms: Vec::new(),
        s_star: f64::NAN,
        s_at_boundary: false,
        n_samples: tx.len(),
        std_err: stats.std_err(),
    })
}

/// Differences `x_i - x_j` for each `i`, sorted by magnitude.
struct NeighborTable {
    diffs: Vec<Vec<(f64, Complex64)>>,
}

impl NeighborTable {
    fn new(c: &Constellation) -> Self {
        let diffs = c
            .points()
            .iter()
            .map(|&xi| {
                let mut row: Vec<(f64, Complex64)> =
                    c.points().iter().map(|&xj| ((xi - xj).norm(), xi - xj)).collect();
                row.sort_by(|a, b| a.0.total_cmp(&b.0));
                row
            })
            .collect();
        Self { diffs }
    }

    /// `log2 Σ_j exp(-ρ(|d_ij|² + 2 Re{d_ij* z}))` with `d_ij = x_i - x_j`.
    fn log2_f(&self, i: usize, z: Complex64, rho: f64) -> f64 {
        let zn = z.norm();
        let mut sum = 0.0;
        for &(dn, d) in &self.diffs[i] {
            if dn > zn && rho * dn * (dn - 2.0 * zn) > PRUNE_EXPONENT {
                break;
            }
            let e = -rho * (dn * dn + 2.0 * (d.conj() * z).re);
            sum += e.exp();
        }
        sum.log2()
    }
}

/// GMI of a frame. Exact frames use `s = 1`; max-log frames are optimized over `s`.
pub fn estimate_gmi(frame: &LlrFrame) -> Result<RateEstimate> {
    check_frame(frame)?;
    match frame.kind() {
        LlrKind::Exact => Ok(gmi_at_s(frame, 1.0)?),
        LlrKind::Maxlog => {
            let (s, at_boundary) = optimize_s(frame)?;
            let mut est = gmi_at_s(frame, s)?;
            est.s_at_boundary = at_boundary;
            Ok(est)
        }
    }
}

/// GMI of a frame evaluated at a fixed `s`.
pub fn gmi_at_s(frame: &LlrFrame, s: f64) -> Result<RateEstimate> {
    check_frame(frame)?;
    let m = frame.bits_per_symbol();
    let n = frame.n_symbols();
    let mut per_bit = vec![0.0; m];
    let mut stats = RunningStats::default();
    for (llrs, bits) in frame.llrs().chunks_exact(m).zip(frame.bits().chunks_exact(m)) {
        let mut symbol_term = 0.0;
        for k in 0..m {
            let t = log2_1p_exp(s * signed(llrs[k], bits[k]));
            per_bit[k] += t;
            symbol_term += t;
        }
        stats.push(m as f64 - symbol_term);
    }
    let per_bit_terms: Vec<f64> = per_bit.iter().map(|t| 1.0 - t / n as f64).collect();
    Ok(RateEstimate {
        metric: Metric::Gmi,
        value: per_bit_terms.iter().sum(),
        per_bit_terms,
        s_star: s,
        s_at_boundary: false,
        n_samples: n,
        std_err: stats.std_err(),
    })
}

/// `(-1)^c λ`: negative when the L-value points to the transmitted bit.
#[inline]
fn signed(llr: f64, bit: u8) -> f64 {
    if bit == 1 {
        -llr
    } else {
        llr
    }
}

fn check_frame(frame: &LlrFrame) -> Result<()> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    Ok(())
}

/// Maximizes the GMI over `s` by golden-section search.
///
/// Returns `(s_star, at_boundary)`.
pub fn optimize_s(frame: &LlrFrame) -> Result<(f64, bool)> {
    check_frame(frame)?;
    let samples: Vec<f64> = frame
        .llrs()
        .iter()
        .zip(frame.bits())
        .map(|(&l, &b)| signed(l, b))
        .collect();
    let objective = |s: f64| -> f64 { -samples.iter().map(|&v| log2_1p_exp(s * v)).sum::<f64>() };
    let (lo, hi) = S_BRACKET;
    let (s, _) = golden_section_max(objective, lo, hi, S_TOLERANCE);
    let at_boundary = s - lo < 2.0 * S_TOLERANCE || hi - s < 2.0 * S_TOLERANCE;
    if at_boundary {
        log::warn!("s search ended at the bracket edge (s = {s})");
    }
    Ok((s, at_boundary))
}

pub const DEFAULT_PDF_BINS: usize = 2001;

/// Histogram of the symmetrized, mixed L-values conditioned on bit 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedPdf {
    edges: Vec<f64>,
    density: Vec<f64>,
    n_samples: usize,
}

impl SymmetrizedPdf {
    pub fn bin_edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn n_bins(&self) -> usize {
        self.density.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Probability mass of each bin.
    pub fn masses(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.density.iter().map(|d| d * w).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    /// `∫_{-∞}^0 f(l|1) dl`; a bin straddling zero contributes half its mass.
    pub fn mass_below_zero(&self) -> f64 {
        let masses = self.masses();
        self.edges
            .windows(2)
            .zip(&masses)
            .map(|(e, &p)| {
                if e[1] <= 0.0 {
                    p
                } else if e[0] < 0.0 {
                    0.5 * p
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Largest single-bin mass.
    pub fn max_bin_mass(&self) -> f64 {
        self.masses().into_iter().fold(0.0, f64::max)
    }

    /// Mass of the bin containing zero (or the larger of the two adjoining it).
    pub fn zero_bin_mass(&self) -> f64 {
        let masses = self.masses();
        let n = masses.len();
        if n % 2 == 1 {
            masses[n / 2]
        } else {
            masses[n / 2 - 1].max(masses[n / 2])
        }
    }

    /// Writes `bin_center,density` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "bin_center,density")?;
        for (c, d) in self.bin_centers().iter().zip(&self.density) {
            writeln!(w, "{c},{d}")?;
        }
        Ok(())
    }
}

/// Pools `λ` for `c = 1` and `-λ` for `c = 0` over all bit positions into a
/// histogram of `n_bins` uniform bins over `[-LLR_CLAMP, LLR_CLAMP]`.
///
/// Values outside the range land in the edge bins. With an even bin count a
/// sample exactly at zero is split between the two bins that meet there.
pub fn symmetrized_pdf(frame: &LlrFrame, n_bins: usize) -> Result<SymmetrizedPdf> {
    if n_bins < 2 {
        return Err(Error::TooFewBins(n_bins));
    }
    check_frame(frame)?;
    let width = 2.0 * LLR_CLAMP / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| -LLR_CLAMP + i as f64 * width).collect();
    let mut counts = vec![0.0f64; n_bins];
    let even = n_bins % 2 == 0;
    for (&l, &b) in frame.llrs().iter().zip(frame.bits()) {
        let a = -signed(l, b);
        if even && a == 0.0 {
            counts[n_bins / 2 - 1] += 0.5;
            counts[n_bins / 2] += 0.5;
            continue;
        }
        let idx = ((a + LLR_CLAMP) / width).floor();
        let idx = (idx.max(0.0) as usize).min(n_bins - 1);
        counts[idx] += 1.0;
    }
    let total = frame.len() as f64;
    let density = counts.iter().map(|c| c / (total * width)).collect();
    Ok(SymmetrizedPdf {
        edges,
        density,
        n_samples: frame.len(),
    })
}

/// `m · I(B;L)` from a symmetrized PDF, using `f(l|0) = f(-l|1)`.
///
/// Only meaningful for PDFs built from exact L-values.
pub fn gmi_from_pdf(pdf: &SymmetrizedPdf, m: usize) -> Result<RateEstimate> {
    let masses = pdf.masses();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegeneratePdf(format!("total mass {total}")));
    }
    let n = masses.len();
    let mut mean = 0.0;
    let mut second = 0.0;
    for (i, &p) in masses.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let p = p / total;
        let mirror = masses[n - 1 - i] / total;
        let t = (2.0 * p / (p + mirror)).log2();
        mean += p * t;
        second += p * t * t;
    }
    let var = (second - mean * mean).max(0.0);
    let bitwise_err = (var / pdf.n_samples.max(1) as f64).sqrt();
    Ok(RateEstimate {
        metric: Metric::Gmi,
        value: m as f64 * mean,
        per_bit_terms: vec![mean; m],
        s_star: 1.0,
        s_at_boundary: false,
        n_samples: pdf.n_samples,
        std_err: m as f64 * bitwise_err,
    })
}

/// One row of the rate CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub metric: String,
    pub constellation: String,
    pub rho_db: f64,
    pub value: f64,
    pub s_star: f64,
    pub n: usize,
    pub std_err: f64,
}

pub const RATE_CSV_HEADER: &str = "metric,constellation,rho_db,value,s_star,n,std_err";

impl RateRow {
    pub fn new(metric: impl Into<String>, constellation: &str, rho: f64, est: &RateEstimate) -> Self {
        Self {
            metric: metric.into(),
            constellation: constellation.to_string(),
            rho_db: linear_to_db(rho),
            value: est.value,
            s_star: est.s_star,
            n: est.n_samples,
            std_err: est.std_err,
        }
    }
}

pub fn write_rate_csv(rows: &[RateRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{RATE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.metric, r.constellation, r.rho_db, r.value, r.s_star, r.n, r.std_err
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demapper::{pre_fec_ber, AwgnBlock};
    use crate::seed::{rng_for, Role};

    fn frame(c: &Constellation, rho: f64, n: usize, kind: LlrKind, seed: u64) -> LlrFrame {
        let mut rng = rng_for(seed, Role::Noise);
        AwgnBlock::random(c, n, rho, &mut rng).unwrap().frame(c, kind).unwrap()
    }

    #[test]
    fn mi_limits() {
        let qpsk = Constellation::square_qam(4).unwrap();
        let mut rng = rng_for(1, Role::Estimator);
        let low = estimate_mi_awgn(&qpsk, 1e-6, 20_000, &mut rng).unwrap();
        assert!(low.value.abs() < 3.0 * low.std_err + 1e-5, "{low:?}");
        let qam16 = Constellation::square_qam(16).unwrap();
        let high = estimate_mi_awgn(&qam16, 1e6, 5_000, &mut rng).unwrap();
        assert!((high.value - 4.0).abs() < 3.0 * high.std_err + 1e-9, "{high:?}");
    }

    #[test]
    fn mi_rejects_bad_inputs() {
        let c = Constellation::square_qam(4).unwrap();
        let mut rng = rng_for(1, Role::Estimator);
        assert!(matches!(
            estimate_mi_awgn(&c, 0.0, 5000, &mut rng),
            Err(Error::NonPositiveSnr(_))
        ));
        assert!(matches!(
            estimate_mi_awgn(&c, 1.0, 10, &mut rng),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn gmi_edge_frames() {
        let bits: Vec<u8> = (0..400).map(|i| (i % 3 == 0) as u8).collect();
        let zeros = LlrFrame::new(4, vec![0.0; 400], bits.clone(), LlrKind::Exact).unwrap();
        assert!(estimate_gmi(&zeros).unwrap().value.abs() < 1e-12);
        let saturated: Vec<f64> = bits.iter().map(|&b| if b == 1 { 50.0 } else { -50.0 }).collect();
        let sat = LlrFrame::new(4, saturated, bits.clone(), LlrKind::Exact).unwrap();
        assert!((estimate_gmi(&sat).unwrap().value - 4.0).abs() < 1e-3);
        let zeros_maxlog = LlrFrame::new(4, vec![0.0; 400], bits, LlrKind::Maxlog).unwrap();
        assert!(estimate_gmi(&zeros_maxlog).unwrap().value.abs() < 1e-12);
        let empty = LlrFrame::new(4, vec![], vec![], LlrKind::Exact).unwrap();
        assert!(estimate_gmi(&empty).is_err());
    }

    #[test]
    fn per_bit_terms_sum_to_value() {
        let c = Constellation::square_qam(16).unwrap();
        let f = frame(&c, 8.0, 5000, LlrKind::Exact, 2);
        let est = estimate_gmi(&f).unwrap();
        assert_eq!(est.per_bit_terms.len(), 4);
        assert!((est.per_bit_terms.iter().sum::<f64>() - est.value).abs() < 1e-12);
    }

    #[test]
    fn exact_frame_optimum_is_one_and_scaling_moves_it() {
        let c = Constellation::square_qam(16).unwrap();
        let f = frame(&c, 6.0, 50_000, LlrKind::Exact, 3);
        let (s, edge) = optimize_s(&f).unwrap();
        assert!(!edge);
        assert!((s - 1.0).abs() < 0.02, "s = {s}");
        let f4 = f.scaled(4.0);
        let (s4, _) = optimize_s(&f4).unwrap();
        assert!((s4 - s / 4.0).abs() < 0.02);
        let g = gmi_at_s(&f, s).unwrap().value;
        let g4 = gmi_at_s(&f4, s4).unwrap().value;
        assert!((g - g4).abs() < 1e-4);
    }

    #[test]
    fn s_optimization_helps_maxlog() {
        let c = Constellation::square_qam(64).unwrap();
        let f = frame(&c, 30.0, 20_000, LlrKind::Maxlog, 4);
        let plain = gmi_at_s(&f, 1.0).unwrap().value;
        let opt = estimate_gmi(&f).unwrap();
        assert!(opt.value >= plain);
    }

    #[test]
    fn pdf_integrates_to_one_and_matches_ber() {
        let c = Constellation::square_qam(16).unwrap();
        for kind in [LlrKind::Exact, LlrKind::Maxlog] {
            let f = frame(&c, 5.0, 20_000, kind, 5);
            let pdf = symmetrized_pdf(&f, DEFAULT_PDF_BINS).unwrap();
            assert!((pdf.total_mass() - 1.0).abs() < 1e-6);
            let ber = pre_fec_ber(&f).unwrap();
            assert!((pdf.mass_below_zero() - ber).abs() <= pdf.zero_bin_mass());
        }
    }

    #[test]
    fn zero_frame_pdf_has_one_bin() {
        let bits: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let f = LlrFrame::new(2, vec![0.0; 100], bits, LlrKind::Exact).unwrap();
        let pdf = symmetrized_pdf(&f, 11).unwrap();
        let occupied: Vec<usize> = (0..11).filter(|&i| pdf.density()[i] > 0.0).collect();
        assert_eq!(occupied, vec![5]);
        assert!((pdf.bin_centers()[5]).abs() < 1e-12);
        assert!(gmi_from_pdf(&pdf, 2).unwrap().value.abs() < 1e-12);
        let even = symmetrized_pdf(&f, 10).unwrap();
        assert!((even.mass_below_zero() - 0.5).abs() < 1e-12);
        assert!(matches!(symmetrized_pdf(&f, 1), Err(Error::TooFewBins(1))));
    }

    #[test]
    fn saturated_pdf_gives_full_gmi() {
        let bits: Vec<u8> = (0..300).map(|i| (i % 2) as u8).collect();
        let llrs = bits.iter().map(|&b| if b == 1 { 50.0 } else { -50.0 }).collect();
        let f = LlrFrame::new(3, llrs, bits, LlrKind::Exact).unwrap();
        let pdf = symmetrized_pdf(&f, DEFAULT_PDF_BINS).unwrap();
        assert!((gmi_from_pdf(&pdf, 3).unwrap().value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_pdf_is_rejected() {
        let pdf = SymmetrizedPdf {
            edges: vec![-1.0, 0.0, 1.0],
            density: vec![0.0, 0.0],
            n_samples: 0,
        };
        assert!(matches!(gmi_from_pdf(&pdf, 2), Err(Error::DegeneratePdf(_))));
    }

    #[test]
    fn rate_csv_layout() {
        let mut buf = Vec::new();
        write_rate_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{RATE_CSV_HEADER}\n"));
    }
}
