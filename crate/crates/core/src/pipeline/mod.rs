//! From force cycles to stress/strain curves and elasticity estimates.

mod contact;
mod modulus;
mod savgol;
mod stats;
mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contact::{detect_contact, ContactEvent, ContactParams, MIN_BASELINE};
pub use modulus::{
    cv40, linear_modulus, local_modulus, stress_at_strain, window_feasibility, window_sweep, Infeasible, SweepEntry,
    WindowSweep, MIN_LINEAR_SPAN, MIN_WINDOW_SAMPLES, WINDOW_EPS,
};
pub use savgol::{savgol_smooth, smooth_curve, SmoothingParams};
pub use stats::{aggregate_estimates, welch_t_test, AggregateReport, GroupKey, GroupLabel, WelchResult};
pub use transform::{centered_rate, to_stress_strain, L0_WARN_FRACTION, STRAIN_CEILING};

use crate::ingest::{ForceCycle, RawCycle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no contact: force never exceeded {threshold} N")]
    NoContact { threshold: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient deformation: {0}")]
    InsufficientDeformation(String),
    #[error("insufficient compression: reached strain {reached}, need {required}")]
    InsufficientCompression { required: f64, reached: f64 },
}

/// Settings for turning a raw cycle into a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub contact: ContactParams,
    pub smoothing: SmoothingParams,
    /// Default half-width of local modulus windows.
    pub halfwidth: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            contact: ContactParams::default(),
            smoothing: SmoothingParams::default(),
            halfwidth: 0.10,
        }
    }
}

/// Output of [`process_cycle`].
#[derive(Debug, Clone)]
pub struct ProcessedCycle {
    pub force: ForceCycle,
    pub contact: ContactEvent,
    pub curve: crate::model::StressStrainCurve,
}

/// Calibrates, detects contact, transforms and smooths one raw cycle.
pub fn process_cycle(raw: &RawCycle, cfg: &PipelineConfig) -> Result<ProcessedCycle, PipelineError> {
    let mut force = ForceCycle::from_raw(raw);
    let contact = detect_contact(&force, &cfg.contact)?;
    force.mark_contact(contact.index);
    let curve = to_stress_strain(&force, &contact, &raw.sample, &raw.device)?;
    let mut curve = smooth_curve(&curve, &cfg.smoothing)?;
    if !force.out_of_range.is_empty() {
        curve.diagnostics.warnings.push(format!(
            "{} effort samples outside the device range were extrapolated",
            force.out_of_range.len()
        ));
    }
    curve.provenance.manifest = raw.manifest.as_ref().map(|p| p.display().to_string());
    curve.provenance.cycle_index = raw.cycle_index;
    curve.provenance.speed_mm_s = raw.speed_mm_s().ok().map(|s| s.mm_per_s);
    Ok(ProcessedCycle { force, contact, curve })
}
