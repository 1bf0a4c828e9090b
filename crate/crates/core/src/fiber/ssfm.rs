use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::pulse::bin_frequencies;
use super::{FiberParams, Nonlinearity, Waveform};
use crate::{Error, Result};

/// Linear propagation operator `exp((i β₂ ω²/2 - α/2) h)` per FFT bin.
pub(crate) fn linear_operator(freqs: &[f64], beta2: f64, alpha: f64, h: f64) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            Complex64::new(-0.5 * alpha * h, 0.5 * beta2 * w * w * h).exp()
        })
        .collect()
}

/// Exact solution of the nonlinear part over a step `h` (with `γ` in 1/(W m)).
///
/// In the coupled model the circular components `A± = (Ax ± i Ay)/√2` each
/// rotate by `(2γ/3)(|A±|² + 2|A∓|²) h` with constant moduli. The Manakov
/// model rotates both polarizations by `(8/9) γ (|Ax|² + |Ay|²) h`.
pub fn nonlinear_step(x: &mut [Complex64], y: &mut [Complex64], gamma: f64, h: f64, model: Nonlinearity) {
    let i = Complex64::i();
    match model {
        Nonlinearity::Coupled => {
            let k = 2.0 * gamma * h / 3.0;
            for (ax, ay) in x.iter_mut().zip(y.iter_mut()) {
                let ap = (*ax + i * *ay) * FRAC_1_SQRT_2;
                let am = (*ax - i * *ay) * FRAC_1_SQRT_2;
                let (pp, pm) = (ap.norm_sqr(), am.norm_sqr());
                let ap = ap * Complex64::cis(k * (pp + 2.0 * pm));
                let am = am * Complex64::cis(k * (pm + 2.0 * pp));
                *ax = (ap + am) * FRAC_1_SQRT_2;
                *ay = (ap - am) * (-i * FRAC_1_SQRT_2);
            }
        }
        Nonlinearity::Manakov => {
            let k = 8.0 * gamma * h / 9.0;
            for (ax, ay) in x.iter_mut().zip(y.iter_mut()) {
                let rot = Complex64::cis(k * (ax.norm_sqr() + ay.norm_sqr()));
                *ax *= rot;
                *ay *= rot;
            }
        }
    }
}

/// Propagates over one span with the symmetric split-step Fourier method.
pub fn ssfm_propagate(w: &Waveform, p: &FiberParams) -> Result<Waveform> {
    p.validate()?;
    let n = w.len();
    let steps = p.n_steps();
    let h = p.step_size_m;
    let freqs = bin_frequencies(n, w.sample_rate);
    let full = linear_operator(&freqs, p.beta2(), p.alpha(), h);
    let half = linear_operator(&freqs, p.beta2(), p.alpha(), 0.5 * h);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let scale = 1.0 / n as f64;

    let [mut x, mut y] = w.pols.clone();
    for pol in [&mut x, &mut y] {
        fwd.process_with_scratch(pol, &mut scratch);
        pol.iter_mut().zip(&half).for_each(|(s, d)| *s *= d);
    }
    for step in 0..steps {
        for pol in [&mut x, &mut y] {
            inv.process_with_scratch(pol, &mut scratch);
            pol.iter_mut().for_each(|s| *s *= scale);
        }
        nonlinear_step(&mut x, &mut y, p.gamma(), h, p.nonlinearity);
        let op = if step + 1 == steps { &half } else { &full };
        for pol in [&mut x, &mut y] {
            fwd.process_with_scratch(pol, &mut scratch);
            pol.iter_mut().zip(op).for_each(|(s, d)| *s *= d);
        }
        if step % 100 == 99 && !x[0].is_finite() {
            return Err(Error::Unstable(step));
        }
    }
    for pol in [&mut x, &mut y] {
        inv.process_with_scratch(pol, &mut scratch);
        pol.iter_mut().for_each(|s| *s *= scale);
    }
    if x.iter().chain(&y).any(|s| !s.is_finite()) {
        return Err(Error::Unstable(steps));
    }
    Waveform::new(x, y, w.sample_rate)
}

/// Amplifies by the span loss and adds ASE noise when enabled.
pub fn edfa(w: &Waveform, p: &FiberParams, rng: &mut impl Rng) -> Waveform {
    let amp = p.gain().sqrt();
    let sigma = (0.5 * p.ase_variance()).sqrt();
    let mut out = w.clone();
    for pol in out.pols.iter_mut() {
        for s in pol.iter_mut() {
            *s *= amp;
            if p.ase_noise {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *s += Complex64::new(re, im) * sigma;
            }
        }
    }
    out
}
