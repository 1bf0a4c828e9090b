use std::collections::HashMap;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::pulse::{bin_frequencies, rrc_response, tx_gain};
use super::ssfm::linear_operator;
use super::{FiberParams, Waveform};
use crate::{Error, Result};

/// Electronic dispersion compensation, central-channel selection, matched
/// RRC filtering and downsampling, followed by [`phase_compensate`] against
/// the transmitted symbols. Output symbols are scaled back to the
/// constellation's units.
pub fn receiver_dsp(w: &Waveform, p: &FiberParams, tx: &[Vec<Complex64>; 2]) -> Result<[Vec<Complex64>; 2]> {
    let mut rx = matched_filter(w, p)?;
    for (r, t) in rx.iter().zip(tx) {
        if r.len() != t.len() {
            return Err(Error::InputLength {
                expected: r.len(),
                got: t.len(),
            });
        }
    }
    phase_compensate(&mut rx, tx);
    Ok(rx)
}

/// Receiver front end without phase compensation.
pub(crate) fn matched_filter(w: &Waveform, p: &FiberParams) -> Result<[Vec<Complex64>; 2]> {
    p.validate()?;
    let n = w.len();
    if n != p.n_samples() {
        return Err(Error::InputLength {
            expected: p.n_samples(),
            got: n,
        });
    }
    let sps = p.samples_per_symbol();
    let freqs = bin_frequencies(n, w.sample_rate);
    let total = p.n_spans as f64 * p.span_length_m();
    let edc = linear_operator(&freqs, -p.beta2(), 0.0, total);
    let shift = p.channel_bins()[p.central_channel()].rem_euclid(n as i64) as usize;
    let scale = sps as f64 / (tx_gain(p) * n as f64);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = [Vec::new(), Vec::new()];
    for (pol, o) in w.pols.iter().zip(out.iter_mut()) {
        let mut spec = pol.clone();
        fwd.process(&mut spec);
        let mut base: Vec<Complex64> = (0..n)
            .map(|b| {
                let src = (b + shift) % n;
                spec[src] * edc[src] * rrc_response(freqs[b], p.symbol_rate(), p.rolloff)
            })
            .collect();
        inv.process(&mut base);
        *o = base.iter().step_by(sps).map(|s| s * scale).collect();
    }
    Ok(out)
}

/// Removes, for each transmitted point `x_i`, the mean phase rotation
/// `θ_i = arg Σ Y conj(x_i)` over all received `Y` whose transmitted symbol is
/// `x_i`, pooled over both polarizations.
pub fn phase_compensate(rx: &mut [Vec<Complex64>; 2], tx: &[Vec<Complex64>; 2]) {
    let key = |x: &Complex64| (x.re.to_bits(), x.im.to_bits());
    let mut sums: HashMap<(u64, u64), Complex64> = HashMap::new();
    for (r, t) in rx.iter().zip(tx) {
        for (y, x) in r.iter().zip(t) {
            *sums.entry(key(x)).or_default() += y * x.conj();
        }
    }
    let rot: HashMap<(u64, u64), Complex64> = sums
        .into_iter()
        .map(|(k, s)| {
            let r = if s.norm() > 0.0 { (s / s.norm()).conj() } else { Complex64::new(1.0, 0.0) };
            (k, r)
        })
        .collect();
    for (r, t) in rx.iter_mut().zip(tx) {
        for (y, x) in r.iter_mut().zip(t) {
            *y *= rot[&key(x)];
        }
    }
}

/// Effective SNR `E|X|² / E|Y - X|²` over both polarizations.
pub fn effective_snr(rx: &[Vec<Complex64>; 2], tx: &[Vec<Complex64>; 2]) -> Result<f64> {
    let mut signal = 0.0;
    let mut error = 0.0;
    let mut count = 0usize;
    for (r, t) in rx.iter().zip(tx) {
        if r.len() != t.len() {
            return Err(Error::InputLength {
                expected: t.len(),
                got: r.len(),
            });
        }
        for (y, x) in r.iter().zip(t) {
            signal += x.norm_sqr();
            error += (y - x).norm_sqr();
        }
        count += r.len();
    }
    if count == 0 {
        return Err(Error::EmptyFrame);
    }
    if error == 0.0 {
        return Err(Error::DegenerateSnr);
    }
    Ok(signal / error)
}
