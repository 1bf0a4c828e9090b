use std::fmt;

use serde::{Deserialize, Serialize};

use super::SweepRow;
use crate::{Error, Result};

/// A quantity used to predict post-FEC performance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    PreBer,
    Mi,
    Gmi,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [Predictor::PreBer, Predictor::Mi, Predictor::Gmi];

    pub fn column(self) -> &'static str {
        match self {
            Predictor::PreBer => "pre_ber",
            Predictor::Mi => "mi_norm",
            Predictor::Gmi => "gmi_norm",
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl std::str::FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Predictor::ALL
            .into_iter()
            .find(|p| p.column() == s)
            .ok_or_else(|| Error::Schema(format!("unknown metric {s:?}")))
    }
}

/// Predictor values where the post-FEC BER crosses the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    Crossed {
        sweep_var: f64,
        pre_ber: f64,
        mi_norm: f64,
        gmi_norm: f64,
    },
    NotCrossed,
}

impl Crossing {
    pub fn value(&self, p: Predictor) -> Option<f64> {
        match *self {
            Crossing::Crossed {
                pre_ber,
                mi_norm,
                gmi_norm,
                ..
            } => Some(match p {
                Predictor::PreBer => pre_ber,
                Predictor::Mi => mi_norm,
                Predictor::Gmi => gmi_norm,
            }),
            Crossing::NotCrossed => None,
        }
    }

    pub fn is_crossed(&self) -> bool {
        matches!(self, Crossing::Crossed { .. })
    }
}

/// Post-FEC BER for interpolation; an error-free point uses its upper confidence bound.
fn log_ber(row: &SweepRow) -> f64 {
    if row.post_ber > 0.0 {
        row.post_ber.ln()
    } else {
        row.post_ber_ci_hi.ln()
    }
}

/// First crossing of `target` between adjacent rows, in row order, with
/// every predictor interpolated linearly against log post-FEC BER.
pub fn find_threshold(rows: &[SweepRow], target: f64) -> Crossing {
    let lt = target.ln();
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (la, lb) = (log_ber(a), log_ber(b));
        let brackets = (la >= lt && lb < lt) || (la < lt && lb >= lt);
        if !brackets || la == lb {
            continue;
        }
        let t = (lt - la) / (lb - la);
        let lerp = |x: f64, y: f64| x + t * (y - x);
        return Crossing::Crossed {
            sweep_var: lerp(a.sweep_var, b.sweep_var),
            pre_ber: lerp(a.pre_ber, b.pre_ber),
            mi_norm: lerp(a.mi_norm, b.mi_norm),
            gmi_norm: lerp(a.gmi_norm, b.gmi_norm),
        };
    }
    Crossing::NotCrossed
}

/// Required predictor values of one (constellation, code rate) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub constellation: String,
    pub rate: String,
    pub crossing: Crossing,
}

impl ThresholdReport {
    pub fn from_rows(constellation: &str, rate: &str, rows: &[SweepRow], target: f64) -> Self {
        Self {
            constellation: constellation.to_string(),
            rate: rate.to_string(),
            crossing: find_threshold(rows, target),
        }
    }
}

/// Spread of one predictor's required value across constellations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub metric: Predictor,
    /// `max - min`.
    pub absolute: f64,
    /// `(max - min) / mean`.
    pub relative: f64,
}

/// Per-predictor spread over reports that crossed the target.
pub fn prediction_spread(reports: &[ThresholdReport]) -> Result<Vec<Spread>> {
    let crossed: Vec<&Crossing> = reports
        .iter()
        .map(|r| &r.crossing)
        .filter(|c| c.is_crossed())
        .collect();
    if crossed.len() < 2 {
        return Err(Error::SweepSpec(format!(
            "spread needs at least 2 crossed reports, got {}",
            crossed.len()
        )));
    }
    Ok(Predictor::ALL
        .into_iter()
        .map(|metric| {
            let values: Vec<f64> = crossed.iter().filter_map(|c| c.value(metric)).collect();
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            Spread {
                metric,
                absolute: max - min,
                relative: if mean != 0.0 { (max - min) / mean.abs() } else { 0.0 },
            }
        })
        .collect())
}
