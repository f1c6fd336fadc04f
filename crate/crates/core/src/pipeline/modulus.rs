//! Young's modulus estimators.
//!
//! All estimators use only the compression phase. Window bounds are
//! inclusive with a small tolerance so that sample strains produced by
//! decimal arithmetic land on the intended side of a boundary.

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::model::{ModulusEstimate, ModulusMethod, StressStrainCurve};
use crate::regression::fit_line;

pub const WINDOW_EPS: f64 = 1e-9;
pub const MIN_WINDOW_SAMPLES: usize = 4;
/// Smallest compression strain span accepted by [`linear_modulus`].
pub const MIN_LINEAR_SPAN: f64 = 0.01;

fn window_points(curve: &StressStrainCurve, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    curve
        .compression_indices()
        .filter(|&i| curve.strain[i] >= lo - WINDOW_EPS && curve.strain[i] <= hi + WINDOW_EPS)
        .map(|i| (curve.strain[i], curve.stress_kpa[i]))
        .unzip()
}

fn estimate(curve: &StressStrainCurve, method: ModulusMethod, point: Option<f64>, hw: Option<f64>, x: &[f64], y: &[f64]) -> Result<ModulusEstimate, PipelineError> {
    let fit = fit_line(x, y).ok_or_else(|| {
        PipelineError::InsufficientDeformation("strain does not vary inside the window".into())
    })?;
    Ok(ModulusEstimate {
        method,
        strain_point: point,
        window_halfwidth: hw,
        e_kpa: fit.slope,
        r2: fit.r2,
        samples: x.len(),
        sample: curve.provenance.sample.clone(),
        cycle_index: curve.provenance.cycle_index,
        speed_mm_s: curve.provenance.speed_mm_s,
    })
}

/// Least-squares slope of compression stress over
/// `[strain_point - halfwidth, strain_point + halfwidth]`.
pub fn local_modulus(curve: &StressStrainCurve, strain_point: f64, halfwidth: f64) -> Result<ModulusEstimate, PipelineError> {
    if !(halfwidth > 0.0) {
        return Err(PipelineError::Parameter(format!("halfwidth must be > 0, got {halfwidth}")));
    }
    let (x, y) = window_points(curve, strain_point - halfwidth, strain_point + halfwidth);
    if x.len() < MIN_WINDOW_SAMPLES {
        return Err(PipelineError::InsufficientData(format!(
            "{} compression samples in window {strain_point}±{halfwidth}, need {MIN_WINDOW_SAMPLES}",
            x.len()
        )));
    }
    estimate(curve, ModulusMethod::Local, Some(strain_point), Some(halfwidth), &x, &y)
}

/// Why a local window cannot be used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasible {
    BelowZeroStrain { lower: f64 },
    BeyondMaxStrain { upper: f64, max_strain: f64 },
    TooFewSamples { found: usize },
}

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasible::BelowZeroStrain { lower } => write!(f, "window starts below zero strain ({lower})"),
            Infeasible::BeyondMaxStrain { upper, max_strain } => {
                write!(f, "window end {upper} beyond max compression strain {max_strain}")
            }
            Infeasible::TooFewSamples { found } => {
                write!(f, "{found} samples in window, need {MIN_WINDOW_SAMPLES}")
            }
        }
    }
}

/// A window is feasible when it lies inside the measured compression range
/// and holds at least [`MIN_WINDOW_SAMPLES`] samples.
pub fn window_feasibility(curve: &StressStrainCurve, strain_point: f64, halfwidth: f64) -> Result<(), Infeasible> {
    let (lo, hi) = (strain_point - halfwidth, strain_point + halfwidth);
    if lo < -WINDOW_EPS {
        return Err(Infeasible::BelowZeroStrain { lower: lo });
    }
    let max_strain = curve.max_compression_strain().unwrap_or(0.0);
    if hi > max_strain + WINDOW_EPS {
        return Err(Infeasible::BeyondMaxStrain { upper: hi, max_strain });
    }
    let found = window_points(curve, lo, hi).0.len();
    if found < MIN_WINDOW_SAMPLES {
        return Err(Infeasible::TooFewSamples { found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub halfwidth: f64,
    pub r2: Option<f64>,
    #[serde(rename = "E_kpa")]
    pub e_kpa: Option<f64>,
    pub infeasible: Option<Infeasible>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweep {
    pub strain_point: f64,
    pub entries: Vec<SweepEntry>,
    /// Index into `entries` of the highest-R² feasible window.
    pub best: usize,
}

impl WindowSweep {
    pub fn best_entry(&self) -> &SweepEntry {
        &self.entries[self.best]
    }
}

/// Evaluates R² for each half-width; the best is the highest R², ties going
/// to the smaller window.
pub fn window_sweep(curve: &StressStrainCurve, strain_point: f64, halfwidths: &[f64]) -> Result<WindowSweep, PipelineError> {
    let entries: Vec<SweepEntry> = halfwidths
        .iter()
        .map(|&hw| match window_feasibility(curve, strain_point, hw) {
            Err(why) => SweepEntry { halfwidth: hw, r2: None, e_kpa: None, infeasible: Some(why) },
            Ok(()) => match local_modulus(curve, strain_point, hw) {
                Ok(e) => SweepEntry { halfwidth: hw, r2: Some(e.r2), e_kpa: Some(e.e_kpa), infeasible: None },
                Err(_) => SweepEntry {
                    halfwidth: hw,
                    r2: None,
                    e_kpa: None,
                    infeasible: Some(Infeasible::TooFewSamples { found: 0 }),
                },
            },
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        let Some(r2) = e.r2 else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let (br2, bhw) = (entries[b].r2.unwrap(), entries[b].halfwidth);
                let tie = (r2 - br2).abs() <= 1e-12;
                if (!tie && r2 > br2) || (tie && e.halfwidth < bhw) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.ok_or_else(|| {
        PipelineError::InsufficientData(format!("no feasible window around strain {strain_point}"))
    })?;
    Ok(WindowSweep { strain_point, entries, best })
}

/// One least-squares line (with intercept) over the whole compression phase.
pub fn linear_modulus(curve: &StressStrainCurve) -> Result<ModulusEstimate, PipelineError> {
    let (x, y) = curve.compression();
    if x.len() < MIN_WINDOW_SAMPLES {
        return Err(PipelineError::InsufficientData(format!(
            "compression phase has {} samples, need {MIN_WINDOW_SAMPLES}",
            x.len()
        )));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < MIN_LINEAR_SPAN {
        return Err(PipelineError::InsufficientDeformation(format!(
            "compression strain span {} below {MIN_LINEAR_SPAN}",
            hi - lo
        )));
    }
    estimate(curve, ModulusMethod::Linear, None, None, &x, &y)
}

/// Compression stress (kPa) at `strain`, linearly interpolated between the
/// first bracketing pair of samples.
pub fn stress_at_strain(curve: &StressStrainCurve, strain: f64) -> Result<f64, PipelineError> {
    let (x, y) = curve.compression();
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if x.is_empty() || max < strain {
        return Err(PipelineError::InsufficientCompression { required: strain, reached: max.max(0.0) });
    }
    for i in 0..x.len() {
        if x[i] == strain {
            return Ok(y[i]);
        }
        if i + 1 < x.len() && x[i] < strain && strain < x[i + 1] {
            let f = (strain - x[i]) / (x[i + 1] - x[i]);
            return Ok(y[i] + f * (y[i + 1] - y[i]));
        }
    }
    Err(PipelineError::InsufficientCompression { required: strain, reached: max })
}

/// Compression stress at 40% strain in kPa.
pub fn cv40(curve: &StressStrainCurve) -> Result<f64, PipelineError> {
    stress_at_strain(curve, 0.4)
}
