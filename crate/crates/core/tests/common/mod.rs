//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use bicm::fec::turbo::{rsc_encode, rsc_maxlog_apo};
use bicm::fec::{shipped_ldpc, LdpcCode};
use bicm::seed::{rng_for, Role};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

/// Gaussian tail probability `Q(x)`.
pub fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Mutual information of equiprobable PAM levels in real Gaussian noise of variance `var`.
pub fn pam_mi(levels: &[f64], var: f64) -> f64 {
    let sigma = var.sqrt();
    let count = levels.len() as f64;
    let mut penalty = 0.0;
    for &ai in levels {
        let integrand = |n: f64| {
            let density = (-n * n / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            let inner: f64 = levels
                .iter()
                .map(|&aj| {
                    let d = ai - aj;
                    (-(d * d + 2.0 * d * n) / (2.0 * var)).exp()
                })
                .sum();
            density * inner.log2()
        };
        // split at the origin so the peak is always sampled
        penalty += adaptive_simpson(&integrand, -14.0 * sigma, 0.0, 1e-11)
            + adaptive_simpson(&integrand, 0.0, 14.0 * sigma, 1e-11);
    }
    count.log2() - penalty / count
}

/// MI of unit-energy square `order`-QAM at SNR `rho`, as twice the MI of its PAM quadrature.
pub fn square_qam_mi(order: usize, rho: f64) -> f64 {
    let side = (order as f64).sqrt().round() as usize;
    let energy = 2.0 * (order as f64 - 1.0) / 3.0;
    let scale = energy.sqrt().recip();
    let levels: Vec<f64> = (0..side)
        .map(|i| (2.0 * i as f64 - (side as f64 - 1.0)) * scale)
        .collect();
    2.0 * pam_mi(&levels, 0.5 / rho)
}

/// Every codeword of a short LDPC code, by exhaustive syndrome check.
pub fn ldpc_codebook(code: &LdpcCode) -> Vec<Vec<u8>> {
    let n = code.n_code();
    let h = code.parity_check();
    (0u32..1 << n)
        .map(|v| (0..n).map(|i| ((v >> i) & 1) as u8).collect::<Vec<u8>>())
        .filter(|c| h.is_codeword(c))
        .collect()
}

/// Bit-wise MAP decisions over an explicit codebook.
pub fn bitwise_map(book: &[Vec<u8>], llrs: &[f64]) -> Vec<u8> {
    (0..llrs.len())
        .map(|i| {
            let score = |bit: u8| {
                let terms: Vec<f64> = book
                    .iter()
                    .filter(|w| w[i] == bit)
                    .map(|w| w.iter().zip(llrs).map(|(&b, &l)| b as f64 * l).sum())
                    .collect();
                bicm::math::log_sum_exp(&terms)
            };
            u8::from(score(1) - score(0) >= 0.0)
        })
        .collect()
}

/// BP on the toy code versus bit-wise MAP with consistent Gaussian L-values.
/// Returns `(agreeing, converged)` trial counts.
pub fn toy_bp_map_agreement(trials: usize, seed: u64) -> (usize, usize) {
    let code = shipped_ldpc("toy12").unwrap();
    let book = ldpc_codebook(&code);
    let mut rng = rng_for(seed, Role::Noise);
    // raw crossover probability Q(sqrt(mu / 2)) is about 8%
    let mu: f64 = 4.0;
    let noise = Normal::new(0.0, (2.0 * mu).sqrt()).unwrap();
    let (mut converged, mut agree) = (0, 0);
    for _ in 0..trials {
        let c = &book[rng.random_range(0..book.len())];
        let llrs: Vec<f64> = c
            .iter()
            .map(|&b| if b == 1 { mu } else { -mu } + noise.sample(&mut rng))
            .collect();
        let bp = code.decode(&llrs, 50, false).unwrap();
        if !bp.converged {
            continue;
        }
        converged += 1;
        agree += (bitwise_map(&book, &llrs) == bp.codeword) as usize;
    }
    (agree, converged)
}

/// Largest deviation of max-log BCJR from exhaustive max-metric search over
/// all terminated 6-bit input blocks, across `blocks` random channel draws.
pub fn bcjr_exhaustive_max_error(blocks: usize, seed: u64) -> f64 {
    let mut rng = rng_for(seed, Role::Noise);
    let mut worst = 0.0f64;
    for _ in 0..blocks {
        let steps = 6 + 3;
        let sys: Vec<f64> = (0..steps).map(|_| rng.random_range(-3.0..3.0)).collect();
        let par: Vec<f64> = (0..steps).map(|_| rng.random_range(-3.0..3.0)).collect();
        let apr: Vec<f64> = (0..steps).map(|t| if t < 6 { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let apo = rsc_maxlog_apo(&sys, &par, &apr, true);
        let mut best = [[f64::NEG_INFINITY; 2]; 6];
        for v in 0u32..64 {
            let info: Vec<u8> = (0..6).map(|i| ((v >> i) & 1) as u8).collect();
            let (parity, tail) = rsc_encode(&info, true);
            let inputs: Vec<u8> = info.iter().chain(&tail).copied().collect();
            let metric: f64 = (0..steps)
                .map(|t| inputs[t] as f64 * (sys[t] + apr[t]) + parity[t] as f64 * par[t])
                .sum();
            for t in 0..6 {
                let slot = &mut best[t][info[t] as usize];
                *slot = slot.max(metric);
            }
        }
        for t in 0..6 {
            worst = worst.max((apo[t] - (best[t][1] - best[t][0])).abs());
        }
    }
    worst
}
