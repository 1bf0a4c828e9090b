use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{FiberParams, Waveform};
use crate::{Error, Result};

/// Root-raised-cosine amplitude response, 1 in the flat band.
pub fn rrc_response(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let lo = 0.5 * (1.0 - rolloff) * symbol_rate;
    let hi = 0.5 * (1.0 + rolloff) * symbol_rate;
    if f <= lo {
        1.0
    } else if f >= hi {
        0.0
    } else {
        let rc = 0.5 * (1.0 + (PI / (rolloff * symbol_rate) * (f - lo)).cos());
        rc.sqrt()
    }
}

/// Signed frequency of each FFT bin.
pub(crate) fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|b| if b < n.div_ceil(2) { b as f64 * df } else { (b as f64 - n as f64) * df })
        .collect()
}

/// Amplitude scale that gives `P/2` per polarization for unit-energy symbols.
pub(crate) fn tx_gain(p: &FiberParams) -> f64 {
    p.samples_per_symbol() as f64 * (0.5 * p.launch_power_w()).sqrt()
}

/// Shapes each channel's symbols with an RRC pulse and places it on the WDM grid.
///
/// `channels[c][pol]` holds the symbols of channel `c` (low to high frequency).
/// Each channel carries `P/2` per polarization when its symbols have unit energy.
pub fn rrc_shape(channels: &[[Vec<Complex64>; 2]], p: &FiberParams) -> Result<Waveform> {
    p.validate()?;
    if channels.len() != p.n_channels {
        return Err(Error::InputLength {
            expected: p.n_channels,
            got: channels.len(),
        });
    }
    let sps = p.samples_per_symbol();
    let n = p.n_samples();
    let freqs = bin_frequencies(n, p.sample_rate());
    let h: Vec<f64> = freqs
        .iter()
        .map(|&f| rrc_response(f, p.symbol_rate(), p.rolloff))
        .collect();
    let bins = p.channel_bins();
    let gain = tx_gain(p);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut pols = [vec![Complex64::default(); n], vec![Complex64::default(); n]];
    let mut buf = vec![Complex64::default(); n];
    for (ch, symbols) in channels.iter().enumerate() {
        for (pol, out) in symbols.iter().zip(pols.iter_mut()) {
            if pol.len() != p.n_symbols {
                return Err(Error::InputLength {
                    expected: p.n_symbols,
                    got: pol.len(),
                });
            }
            buf.fill(Complex64::default());
            for (k, &s) in pol.iter().enumerate() {
                buf[k * sps] = s * gain;
            }
            fwd.process(&mut buf);
            let shift = bins[ch].rem_euclid(n as i64) as usize;
            for b in 0..n {
                out[(b + shift) % n] += buf[b] * h[b];
            }
        }
    }
    let scale = 1.0 / n as f64;
    for out in pols.iter_mut() {
        inv.process(out);
        out.iter_mut().for_each(|s| *s *= scale);
    }
    let [x, y] = pols;
    Waveform::new(x, y, p.sample_rate())
}
