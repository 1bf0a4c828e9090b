//! Dual-polarization WDM transmission over a nonlinear fiber span.
//!
//! The chain is: RRC pulse shaping onto a WDM grid, split-step Fourier
//! propagation of the coupled nonlinear Schrödinger equation, EDFA gain with
//! ASE noise, then the receiver DSP (dispersion compensation, channel
//! selection, matched filter, data-aided phase compensation).
//!
//! Dispersion enters through `β₂ = -D λ² / (2π c)` with `λ = c / f_carrier`.
//! Signals are periodic over the simulated block.

mod dsp;
mod pulse;
mod ssfm;
mod waveform;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::math::db_to_linear;
use crate::{Error, Result};

pub use dsp::{effective_snr, phase_compensate, receiver_dsp};
pub use pulse::{rrc_response, rrc_shape};
pub use ssfm::{edfa, nonlinear_step, ssfm_propagate};
pub use waveform::Waveform;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Nonlinear coupling model of the propagation equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// Coupled equations for two linearly polarized fields, including the
    /// four-wave term between polarizations.
    Coupled,
    /// Manakov averaging with the 8/9 factor.
    Manakov,
}

/// Physical parameters of the WDM link, in the units named by each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberParams {
    pub attenuation_db_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub gamma_w_km: f64,
    pub span_length_km: f64,
    pub n_spans: usize,
    pub pmd_ps_sqrt_km: f64,
    pub symbol_rate_gbaud: f64,
    pub nf_db: f64,
    pub n_channels: usize,
    pub spacing_ghz: f64,
    pub rolloff: f64,
    pub step_size_m: f64,
    /// Samples per symbol per WDM channel; the simulation runs at
    /// `oversampling * n_channels` samples per symbol.
    pub oversampling: usize,
    /// Launch power per channel (both polarizations).
    pub launch_power_dbm: f64,
    /// Symbols per polarization and channel in one simulated block.
    pub n_symbols: usize,
    pub carrier_thz: f64,
    pub nonlinearity: Nonlinearity,
    pub ase_noise: bool,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            attenuation_db_km: 0.2,
            dispersion_ps_nm_km: 17.0,
            gamma_w_km: 1.2,
            span_length_km: 100.0,
            n_spans: 1,
            pmd_ps_sqrt_km: 0.0,
            symbol_rate_gbaud: 32.0,
            nf_db: 3.0,
            n_channels: 3,
            spacing_ghz: 50.0,
            rolloff: 0.01,
            step_size_m: 100.0,
            oversampling: 4,
            launch_power_dbm: 0.0,
            n_symbols: 1 << 14,
            carrier_thz: 193.4,
            nonlinearity: Nonlinearity::Coupled,
            ase_noise: true,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::FiberParams(msg));
        let positive = [
            ("attenuation_db_km", self.attenuation_db_km),
            ("dispersion_ps_nm_km", self.dispersion_ps_nm_km),
            ("gamma_w_km", self.gamma_w_km),
            ("span_length_km", self.span_length_km),
            ("symbol_rate_gbaud", self.symbol_rate_gbaud),
            ("nf_db", self.nf_db),
            ("spacing_ghz", self.spacing_ghz),
            ("rolloff", self.rolloff),
            ("step_size_m", self.step_size_m),
            ("carrier_thz", self.carrier_thz),
        ];
        // zero is allowed where it switches an effect off
        for (name, v) in positive {
            let allow_zero = matches!(name, "attenuation_db_km" | "dispersion_ps_nm_km" | "gamma_w_km");
            if !v.is_finite() || v < 0.0 || (v == 0.0 && !allow_zero) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.pmd_ps_sqrt_km != 0.0 {
            return bad("only zero PMD is supported".into());
        }
        if self.rolloff > 1.0 {
            return bad(format!("rolloff {} exceeds 1", self.rolloff));
        }
        if self.oversampling < 2 {
            return bad(format!("oversampling {} is below 2", self.oversampling));
        }
        if self.n_channels == 0 || self.n_spans == 0 || self.n_symbols == 0 {
            return bad("channel, span and symbol counts must be positive".into());
        }
        if self.step_size_m > 1000.0 {
            return bad(format!("step size {} m exceeds 1 km", self.step_size_m));
        }
        let steps = self.span_length_km * 1000.0 / self.step_size_m;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad(format!(
                "step size {} m does not divide the {} km span",
                self.step_size_m, self.span_length_km
            ));
        }
        if !self.launch_power_dbm.is_finite() {
            return bad("launch power must be finite".into());
        }
        let grid = self.grid_half_width_hz();
        let nyquist = 0.5 * self.sample_rate();
        if grid > nyquist {
            return Err(Error::GridTooWide {
                grid_hz: grid,
                nyquist_hz: nyquist,
            });
        }
        Ok(())
    }

    pub fn symbol_rate(&self) -> f64 {
        self.symbol_rate_gbaud * 1e9
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.oversampling * self.n_channels
    }

    pub fn sample_rate(&self) -> f64 {
        self.samples_per_symbol() as f64 * self.symbol_rate()
    }

    pub fn n_samples(&self) -> usize {
        self.n_symbols * self.samples_per_symbol()
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_thz * 1e12
    }

    /// Group-velocity dispersion in s²/m.
    pub fn beta2(&self) -> f64 {
        let lambda = SPEED_OF_LIGHT / self.carrier_hz();
        // ps/(nm km) -> s/m²
        let d = self.dispersion_ps_nm_km * 1e-6;
        -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// Power attenuation coefficient in 1/m.
    pub fn alpha(&self) -> f64 {
        self.attenuation_db_km * std::f64::consts::LN_10 / 10.0 / 1000.0
    }

    /// Nonlinear coefficient in 1/(W m).
    pub fn gamma(&self) -> f64 {
        self.gamma_w_km / 1000.0
    }

    pub fn span_length_m(&self) -> f64 {
        self.span_length_km * 1000.0
    }

    pub fn n_steps(&self) -> usize {
        (self.span_length_m() / self.step_size_m).round() as usize
    }

    /// EDFA power gain that restores one span's loss.
    pub fn gain(&self) -> f64 {
        (self.alpha() * self.span_length_m()).exp()
    }

    /// Spontaneous-emission factor from `NF = 2 n_sp (G - 1) / G`.
    pub fn n_sp(&self) -> f64 {
        let g = self.gain();
        if g <= 1.0 {
            return 0.0;
        }
        db_to_linear(self.nf_db) * g / (2.0 * (g - 1.0))
    }

    /// ASE variance `E|n|²` per complex sample and polarization after one amplifier.
    pub fn ase_variance(&self) -> f64 {
        let g = self.gain();
        self.n_sp() * (g - 1.0) * PLANCK * self.carrier_hz() * self.sample_rate()
    }

    /// Launch power per channel in watts.
    pub fn launch_power_w(&self) -> f64 {
        1e-3 * db_to_linear(self.launch_power_dbm)
    }

    /// Channel center frequencies relative to the carrier, low to high.
    pub fn channel_offsets_hz(&self) -> Vec<f64> {
        let mid = (self.n_channels as f64 - 1.0) / 2.0;
        (0..self.n_channels)
            .map(|c| (c as f64 - mid) * self.spacing_ghz * 1e9)
            .collect()
    }

    /// Index of the channel nearest the carrier (the one received).
    pub fn central_channel(&self) -> usize {
        self.n_channels / 2
    }

    /// One-sided extent of the occupied WDM spectrum.
    pub fn grid_half_width_hz(&self) -> f64 {
        let edge = self
            .channel_offsets_hz()
            .iter()
            .fold(0.0f64, |m, f| m.max(f.abs()));
        edge + 0.5 * (1.0 + self.rolloff) * self.symbol_rate()
    }

    /// Offset of each channel in FFT bins of a block of `n_samples`.
    pub(crate) fn channel_bins(&self) -> Vec<i64> {
        let bin_hz = self.sample_rate() / self.n_samples() as f64;
        self.channel_offsets_hz()
            .iter()
            .map(|f| {
                let exact = f / bin_hz;
                let rounded = exact.round();
                if (exact - rounded).abs() > 1e-6 {
                    log::warn!("channel offset {f} Hz rounded to {} Hz", rounded * bin_hz);
                }
                rounded as i64
            })
            .collect()
    }
}

/// Received symbols of the central channel and the SNR measured on them.
#[derive(Debug, Clone)]
pub struct FiberOutput {
    pub rx: [Vec<Complex64>; 2],
    pub rho: f64,
}

/// Sends the central channel's symbols (per polarization) through the link.
/// Neighbor channels carry independent uniform symbols from the same constellation.
pub fn transmit(
    p: &FiberParams,
    c: &Constellation,
    central: &[Vec<Complex64>; 2],
    neighbor_rng: &mut impl Rng,
    ase_rng: &mut impl Rng,
) -> Result<FiberOutput> {
    p.validate()?;
    if central[0].len() != p.n_symbols || central[1].len() != p.n_symbols {
        return Err(Error::InputLength {
            expected: p.n_symbols,
            got: central[0].len().min(central[1].len()),
        });
    }
    let channels: Vec<[Vec<Complex64>; 2]> = (0..p.n_channels)
        .map(|ch| {
            if ch == p.central_channel() {
                central.clone()
            } else {
                [0, 1].map(|_| {
                    (0..p.n_symbols)
                        .map(|_| c.point(neighbor_rng.random_range(0..c.order())))
                        .collect()
                })
            }
        })
        .collect();
    let mut w = rrc_shape(&channels, p)?;
    for _ in 0..p.n_spans {
        w = ssfm_propagate(&w, p)?;
        w = edfa(&w, p, ase_rng);
    }
    let rx = receiver_dsp(&w, p, central)?;
    let rho = effective_snr(&rx, central)?;
    Ok(FiberOutput { rx, rho })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        FiberParams::default().validate().unwrap();
    }

    #[test]
    fn beta2_matches_standard_fiber() {
        let b2 = FiberParams::default().beta2();
        // about -21.7 ps²/km
        let ps2_per_km = b2 * 1e24 * 1e3;
        assert!((ps2_per_km + 21.68).abs() < 0.05, "{ps2_per_km}");
    }

    #[test]
    fn eleven_channel_grid_extent() {
        let p = FiberParams {
            n_channels: 11,
            ..Default::default()
        };
        let offsets = p.channel_offsets_hz();
        assert_eq!(offsets.len(), 11);
        assert!((offsets[0] + 250e9).abs() < 1e-3 && (offsets[10] - 250e9).abs() < 1e-3);
        // outer channel edges plus half the 50 GHz slot
        assert!((offsets[10] + 25e9 - 275e9).abs() < 1e-3);
        p.validate().unwrap();
    }

    #[test]
    fn grid_wider_than_bandwidth_is_rejected() {
        let p = FiberParams {
            spacing_ghz: 400.0,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::GridTooWide { .. })));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let cases = [
            FiberParams { oversampling: 1, ..Default::default() },
            FiberParams { pmd_ps_sqrt_km: 0.1, ..Default::default() },
            FiberParams { step_size_m: 130.0, ..Default::default() },
            FiberParams { symbol_rate_gbaud: -1.0, ..Default::default() },
        ];
        for p in cases {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn noise_figure_relation() {
        let p = FiberParams {
            span_length_km: 200.0,
            ..Default::default()
        };
        let g = p.gain();
        assert!((10.0 * g.log10() - 40.0).abs() < 1e-9);
        let nf = 2.0 * p.n_sp() * (g - 1.0) / g;
        assert!((10.0 * nf.log10() - 3.0).abs() < 1e-12);
        assert!((p.n_sp() - 1.0).abs() < 3e-3);
    }

    #[test]
    fn params_round_trip_through_json() {
        let p = FiberParams {
            nonlinearity: Nonlinearity::Manakov,
            ..Default::default()
        };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<FiberParams>(&text).unwrap(), p);
        let partial: FiberParams = serde_json::from_str(r#"{"span_length_km": 80}"#).unwrap();
        assert_eq!(partial.span_length_km, 80.0);
        assert!(serde_json::from_str::<FiberParams>(r#"{"spam": 1}"#).is_err());
    }
}
