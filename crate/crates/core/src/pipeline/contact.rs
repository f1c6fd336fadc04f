use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::ingest::ForceCycle;
use crate::regression::{mean, population_std};

/// Thresholds for locating the first sustained rise of force above the
/// pre-contact baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Multiplier on the baseline standard deviation.
    pub sigma_k: f64,
    /// Absolute force floor in N.
    pub floor_n: f64,
    /// Consecutive samples that must exceed the threshold.
    pub sustain: usize,
    /// Leading samples used to estimate the baseline.
    pub baseline_samples: usize,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            sigma_k: 5.0,
            floor_n: 1.0,
            sustain: 3,
            baseline_samples: MIN_BASELINE,
        }
    }
}

pub const MIN_BASELINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub index: usize,
    pub l0_mm: f64,
    pub baseline_force_mean: f64,
    pub baseline_force_std: f64,
    pub threshold_used: f64,
}

pub fn detect_contact(cycle: &ForceCycle, params: &ContactParams) -> Result<ContactEvent, PipelineError> {
    let baseline_len = params.baseline_samples.max(MIN_BASELINE);
    if cycle.len() < baseline_len {
        return Err(PipelineError::InsufficientData(format!(
            "contact detection needs a baseline of {baseline_len} samples, cycle has {}",
            cycle.len()
        )));
    }
    let sustain = params.sustain.max(1);
    let base = &cycle.force[..baseline_len];
    let (bm, bs) = (mean(base), population_std(base));
    let threshold = (bm + params.sigma_k * bs).max(params.floor_n);

    let mut run = 0;
    for (i, &f) in cycle.force.iter().enumerate() {
        if f > threshold {
            run += 1;
            if run == sustain {
                let index = i + 1 - sustain;
                return Ok(ContactEvent {
                    index,
                    l0_mm: cycle.position[index],
                    baseline_force_mean: bm,
                    baseline_force_std: bs,
                    threshold_used: threshold,
                });
            }
        } else {
            run = 0;
        }
    }
    Err(PipelineError::NoContact { threshold })
}
