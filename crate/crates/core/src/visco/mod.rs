//! Viscoelastic parameter identification: hysteresis energy, Kelvin-Voigt
//! regression and Hunt-Crossley fitting in log space.

mod hunt_crossley;
mod hysteresis;
mod kelvin_voigt;

use thiserror::Error;

pub use hunt_crossley::{fit_hunt_crossley, fit_hunt_crossley_traced, HcOptions, HcTrace};
pub use hysteresis::{eta_from_speeds, hysteresis_area, loop_point, mean_strain_rate, LoopPoint};
pub use kelvin_voigt::{fit_kelvin_voigt, fit_kelvin_voigt_with};

use crate::model::{StressStrainCurve, ViscoelasticFit};

/// Samples at or below this strain are not fitted.
pub const EPS_MIN: f64 = 0.02;

/// Minimum coefficient of variation of the strain rate for `eta` to count as
/// identifiable.
pub const RATE_COV_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VisError {
    #[error("phase error: {0}")]
    Phase(String),
    #[error("anomalous loop: {0}")]
    Anomaly(String),
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unsupported sampling mode: {0}")]
    UnsupportedMode(String),
    #[error("no convergence after {iterations} iterations")]
    Convergence { best: Box<ViscoelasticFit>, iterations: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Curve samples used by the fitters: strain above `eps_min`, stress in Pa.
pub(crate) struct FitSamples {
    pub strain: Vec<f64>,
    pub rate: Vec<f64>,
    pub stress_pa: Vec<f64>,
}

pub(crate) fn select(curve: &StressStrainCurve, eps_min: f64, positive_stress: bool) -> FitSamples {
    let mut s = FitSamples { strain: vec![], rate: vec![], stress_pa: vec![] };
    for i in 0..curve.len() {
        let (e, sig) = (curve.strain[i], curve.stress_kpa[i] * 1000.0);
        if e > eps_min && (!positive_stress || sig > 0.0) {
            s.strain.push(e);
            s.rate.push(curve.strain_rate[i]);
            s.stress_pa.push(sig);
        }
    }
    s
}
