//! Constitutive models and the value types passed between stages.
//!
//! All models work in stress/strain space: stress in Pa, strain
//! dimensionless, strain rate in 1/s. Stiffness `K` therefore carries Pa and
//! damping `eta` carries Pa·s regardless of the device that produced the
//! data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::SamplingMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("strain must be non-negative, got {0}")]
    NegativeStrain(f64),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("model stress is negative ({stress} Pa) at sample {index} (strain {strain}, rate {rate})")]
    NegativeStress {
        index: usize,
        strain: f64,
        rate: f64,
        stress: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    KelvinVoigt,
    HuntCrossley,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::KelvinVoigt => "kelvin_voigt",
            ModelKind::HuntCrossley => "hunt_crossley",
        }
    }
}

/// A parameterised viscoelastic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constitutive {
    /// `sigma = K * eps + eta * eps_dot`
    KelvinVoigt { k: f64, eta: f64 },
    /// `sigma = K * eps^n + eta * eps^n * eps_dot`
    HuntCrossley { k: f64, eta: f64, n: f64 },
}

impl Constitutive {
    pub fn kind(&self) -> ModelKind {
        match self {
            Constitutive::KelvinVoigt { .. } => ModelKind::KelvinVoigt,
            Constitutive::HuntCrossley { .. } => ModelKind::HuntCrossley,
        }
    }

    pub fn k(&self) -> f64 {
        match *self {
            Constitutive::KelvinVoigt { k, .. } | Constitutive::HuntCrossley { k, .. } => k,
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            Constitutive::KelvinVoigt { eta, .. } | Constitutive::HuntCrossley { eta, .. } => eta,
        }
    }

    /// Exponent; 1 for Kelvin-Voigt.
    pub fn n(&self) -> f64 {
        match *self {
            Constitutive::KelvinVoigt { .. } => 1.0,
            Constitutive::HuntCrossley { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (k, eta, n) = (self.k(), self.eta(), self.n());
        if !(k.is_finite() && eta.is_finite() && n.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "non-finite parameters K={k}, eta={eta}, n={n}"
            )));
        }
        if let Constitutive::HuntCrossley { .. } = self {
            if k <= 0.0 {
                return Err(ModelError::InvalidParameter(format!("K must be > 0, got {k}")));
            }
            if n <= 0.0 {
                return Err(ModelError::InvalidParameter(format!("n must be > 0, got {n}")));
            }
        }
        Ok(())
    }

    /// Stress in Pa at the given strain and strain rate.
    pub fn stress(&self, strain: f64, strain_rate: f64) -> Result<f64, ModelError> {
        eval_model(self, strain, strain_rate)
    }
}

/// Evaluates the model stress (Pa). Negative Hunt-Crossley stresses from a
/// large negative damping term are returned as computed.
pub fn eval_model(model: &Constitutive, strain: f64, strain_rate: f64) -> Result<f64, ModelError> {
    if strain < 0.0 || strain.is_nan() {
        return Err(ModelError::NegativeStrain(strain));
    }
    model.validate()?;
    Ok(match *model {
        Constitutive::KelvinVoigt { k, eta } => k * strain + eta * strain_rate,
        Constitutive::HuntCrossley { k, eta, n } => {
            let p = strain.powf(n);
            k * p + eta * p * strain_rate
        }
    })
}

/// Phase label of a processed curve sample (`c` / `d` on disk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurvePhase {
    #[serde(rename = "c")]
    Compression,
    #[serde(rename = "d")]
    Decompression,
}

impl CurvePhase {
    pub fn code(&self) -> &'static str {
        match self {
            CurvePhase::Compression => "c",
            CurvePhase::Decompression => "d",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "c" => Some(CurvePhase::Compression),
            "d" => Some(CurvePhase::Decompression),
            _ => None,
        }
    }
}

/// Where a curve came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub manifest: Option<String>,
    pub sample: String,
    pub device: String,
    pub cycle_index: u32,
    pub speed_mm_s: Option<f64>,
}

/// Bookkeeping produced while building or smoothing a curve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveDiagnostics {
    /// Samples dropped because strain exceeded the jaw-collision ceiling.
    pub dropped_beyond_ceiling: usize,
    /// Compression samples that changed position when sorted by strain.
    pub reordered: usize,
    /// Samples after loss of contact on release that were discarded.
    pub dropped_after_release: usize,
    pub smoothed: bool,
    pub warnings: Vec<String>,
}

/// Stress/strain response anchored at the detected contact.
#[derive(Debug, Clone, PartialEq)]
pub struct StressStrainCurve {
    pub strain: Vec<f64>,
    pub stress_kpa: Vec<f64>,
    pub strain_rate: Vec<f64>,
    pub phase: Vec<CurvePhase>,
    pub l0_mm: f64,
    pub area_mm2: f64,
    pub sampling_mode: SamplingMode,
    pub provenance: Provenance,
    pub diagnostics: CurveDiagnostics,
}

impl StressStrainCurve {
    /// Builds a curve from columns with default metadata.
    pub fn from_columns(
        strain: Vec<f64>,
        stress_kpa: Vec<f64>,
        strain_rate: Vec<f64>,
        phase: Vec<CurvePhase>,
    ) -> Self {
        Self {
            strain,
            stress_kpa,
            strain_rate,
            phase,
            l0_mm: 1.0,
            area_mm2: 1.0,
            sampling_mode: SamplingMode::Continuous,
            provenance: Provenance::default(),
            diagnostics: CurveDiagnostics::default(),
        }
    }

    /// Compression-only curve with zero strain rate.
    pub fn compression_only(strain: Vec<f64>, stress_kpa: Vec<f64>) -> Self {
        let n = strain.len();
        Self::from_columns(strain, stress_kpa, vec![0.0; n], vec![CurvePhase::Compression; n])
    }

    pub fn len(&self) -> usize {
        self.strain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strain.is_empty()
    }

    /// Column lengths agree and phases run compression then decompression.
    pub fn check_shape(&self) -> Result<(), String> {
        let n = self.strain.len();
        if self.stress_kpa.len() != n || self.strain_rate.len() != n || self.phase.len() != n {
            return Err(format!(
                "column lengths differ: strain {}, stress {}, rate {}, phase {}",
                n,
                self.stress_kpa.len(),
                self.strain_rate.len(),
                self.phase.len()
            ));
        }
        if let Some(pos) = self
            .phase
            .windows(2)
            .position(|w| w[0] == CurvePhase::Decompression && w[1] == CurvePhase::Compression)
        {
            return Err(format!("compression sample after decompression at row {}", pos + 1));
        }
        Ok(())
    }

    pub fn compression_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.phase[i] == CurvePhase::Compression)
    }

    pub fn decompression_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.phase[i] == CurvePhase::Decompression)
    }

    /// (strain, stress kPa) pairs of the compression phase, in curve order.
    pub fn compression(&self) -> (Vec<f64>, Vec<f64>) {
        self.compression_indices()
            .map(|i| (self.strain[i], self.stress_kpa[i]))
            .unzip()
    }

    pub fn max_compression_strain(&self) -> Option<f64> {
        self.compression_indices()
            .map(|i| self.strain[i])
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
    }

    /// Returns a copy with every stress multiplied by `c`.
    pub fn scaled_stress(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.stress_kpa.iter_mut().for_each(|s| *s *= c);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMethod {
    Local,
    Linear,
}

/// An elasticity estimate in kPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub method: ModulusMethod,
    pub strain_point: Option<f64>,
    pub window_halfwidth: Option<f64>,
    #[serde(rename = "E_kpa")]
    pub e_kpa: f64,
    pub r2: f64,
    pub samples: usize,
    pub sample: String,
    pub cycle_index: u32,
    pub speed_mm_s: Option<f64>,
}

/// Result of a Kelvin-Voigt or Hunt-Crossley identification.
///
/// `residual` is the RMS residual: Pa for Kelvin-Voigt, natural-log units
/// for Hunt-Crossley.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscoelasticFit {
    pub model: ModelKind,
    #[serde(rename = "K_pa")]
    pub k_pa: f64,
    pub eta_pa_s: f64,
    pub n: f64,
    pub r2: f64,
    pub residual: f64,
    pub identifiable: bool,
    pub excluded_samples: usize,
    pub iterations: usize,
}

impl ViscoelasticFit {
    pub fn params(&self) -> Constitutive {
        match self.model {
            ModelKind::KelvinVoigt => Constitutive::KelvinVoigt {
                k: self.k_pa,
                eta: self.eta_pa_s,
            },
            ModelKind::HuntCrossley => Constitutive::HuntCrossley {
                k: self.k_pa,
                eta: self.eta_pa_s,
                n: self.n,
            },
        }
    }

    /// A fit record carrying only (K, eta, n), e.g. for published values.
    pub fn from_params(model: Constitutive) -> Self {
        Self {
            model: model.kind(),
            k_pa: model.k(),
            eta_pa_s: model.eta(),
            n: model.n(),
            r2: 1.0,
            residual: 0.0,
            identifiable: true,
            excluded_samples: 0,
            iterations: 0,
        }
    }
}

/// Loop energy versus mean strain rate, and its least-squares slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLossSeries {
    pub speeds_mm_s: Vec<Option<f64>>,
    pub mean_strain_rates: Vec<f64>,
    pub loop_energies_pa: Vec<f64>,
    pub eta_loss_pa_s: f64,
    pub intercept_pa: f64,
    pub r2: f64,
}
