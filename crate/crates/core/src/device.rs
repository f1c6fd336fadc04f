//! Measurement devices and sample geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("device profile {name}: {msg}")]
    Device { name: String, msg: String },
    #[error("sample {label}: {msg}")]
    Sample { label: String, msg: String },
    #[error("unknown built-in profile {0:?}")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortUnit {
    Ampere,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Continuous,
    /// Samples are recorded only when an incrementally raised force
    /// threshold is reached; strain rates are meaningless.
    ForceThreshold,
}

/// Effort-to-force mapping (output in N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    /// `F = c0 + c1*e + c2*e^2 + ...`
    Poly { coeffs: Vec<f64> },
}

impl Calibration {
    pub fn identity() -> Self {
        Calibration::Poly {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn eval(&self, effort: f64) -> f64 {
        match self {
            Calibration::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * effort + c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub jaw_area_mm2: f64,
    pub stroke_mm: f64,
    pub effort_unit: EffortUnit,
    /// Declared effort range `[lo, hi]` in device units.
    pub effort_range: [f64; 2],
    pub sampling_mode: SamplingMode,
    pub calibration: Calibration,
    /// `(percent, mm/s)` knots; empty for devices commanded in mm/s.
    #[serde(default)]
    pub speed_map: Vec<[f64; 2]>,
}

const BUILTIN_PROFILES: &[(&str, &str)] = &[
    ("robotiq_2f85", include_str!("../data/profiles/robotiq_2f85.json")),
    ("onrobot_rg6", include_str!("../data/profiles/onrobot_rg6.json")),
    ("ft300", include_str!("../data/profiles/ft300.json")),
    ("zwick_roell", include_str!("../data/profiles/zwick_roell.json")),
];

impl DeviceProfile {
    /// One of the shipped profiles: `robotiq_2f85`, `onrobot_rg6`, `ft300`,
    /// `zwick_roell`.
    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        let (_, text) = BUILTIN_PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ProfileError::UnknownBuiltin(name.to_string()))?;
        let p: DeviceProfile = serde_json::from_str(text).expect("shipped profile parses");
        p.validate()?;
        Ok(p)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN_PROFILES.iter().map(|(n, _)| *n)
    }

    /// A newton-reading device with identity calibration.
    pub fn identity(name: &str, jaw_area_mm2: f64, stroke_mm: f64) -> Self {
        Self {
            name: name.to_string(),
            jaw_area_mm2,
            stroke_mm,
            effort_unit: EffortUnit::Newton,
            effort_range: [-1e6, 1e6],
            sampling_mode: SamplingMode::Continuous,
            calibration: Calibration::identity(),
            speed_map: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |msg: String| ProfileError::Device {
            name: self.name.clone(),
            msg,
        };
        if !(self.jaw_area_mm2 > 0.0 && self.jaw_area_mm2.is_finite()) {
            return Err(bad(format!("jaw_area_mm2 must be > 0, got {}", self.jaw_area_mm2)));
        }
        if !(self.stroke_mm > 0.0 && self.stroke_mm.is_finite()) {
            return Err(bad(format!("stroke_mm must be > 0, got {}", self.stroke_mm)));
        }
        let [lo, hi] = self.effort_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(bad(format!("effort_range must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        for w in self.speed_map.windows(2) {
            if !(w[1][0] > w[0][0] && w[1][1] > w[0][1]) {
                return Err(bad(format!(
                    "speed_map must be strictly increasing in both coordinates: {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        let Calibration::Poly { coeffs } = &self.calibration;
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(bad("calibration needs finite coefficients".into()));
        }
        if let Some(e) = self.calibration_monotonicity_violation(1000) {
            return Err(bad(format!(
                "calibration is not strictly increasing over the effort range near {e}"
            )));
        }
        Ok(())
    }

    /// First effort (of `steps + 1` evenly spaced points over the declared
    /// range) where the calibrated force fails to increase.
    pub fn calibration_monotonicity_violation(&self, steps: usize) -> Option<f64> {
        let [lo, hi] = self.effort_range;
        let mut prev = self.calibration.eval(lo);
        for i in 1..=steps {
            let e = lo + (hi - lo) * i as f64 / steps as f64;
            let f = self.calibration.eval(e);
            if f <= prev {
                return Some(e);
            }
            prev = f;
        }
        None
    }

    pub fn effort_in_range(&self, effort: f64) -> bool {
        effort >= self.effort_range[0] && effort <= self.effort_range[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub label: String,
    pub dimensions_mm: [f64; 3],
    pub contact_face_area_mm2: f64,
    pub nominal_width_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_density_kg_m3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cv40_kpa: Option<f64>,
}

const SAMPLE_CATALOG: &str = include_str!("../data/samples/catalog.json");

impl SampleSpec {
    /// A rectangular block compressed along its third dimension.
    pub fn block(label: &str, a: f64, b: f64, width: f64) -> Self {
        Self {
            label: label.to_string(),
            dimensions_mm: [a, b, width],
            contact_face_area_mm2: a * b,
            nominal_width_mm: width,
            reference_density_kg_m3: None,
            reference_cv40_kpa: None,
        }
    }

    /// The shipped catalog of reference cubes, dice and foams.
    pub fn catalog() -> Vec<SampleSpec> {
        serde_json::from_str(SAMPLE_CATALOG).expect("shipped catalog parses")
    }

    pub fn from_catalog(label: &str) -> Option<SampleSpec> {
        Self::catalog().into_iter().find(|s| s.label == label)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |msg: String| ProfileError::Sample {
            label: self.label.clone(),
            msg,
        };
        if self.dimensions_mm.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(bad(format!("dimensions must be > 0, got {:?}", self.dimensions_mm)));
        }
        if !(self.contact_face_area_mm2 > 0.0) {
            return Err(bad("contact_face_area_mm2 must be > 0".into()));
        }
        if !(self.nominal_width_mm > 0.0) {
            return Err(bad("nominal_width_mm must be > 0".into()));
        }
        let [a, b, c] = self.dimensions_mm;
        let max_face = (a * b).max(a * c).max(b * c);
        if self.contact_face_area_mm2 > max_face * (1.0 + 1e-9) {
            return Err(bad(format!(
                "contact_face_area_mm2 {} exceeds the largest face {}",
                self.contact_face_area_mm2, max_face
            )));
        }
        Ok(())
    }
}

/// Stress-bearing area: the smaller of the jaw and the object face.
pub fn effective_area_mm2(device: &DeviceProfile, sample: &SampleSpec) -> f64 {
    device.jaw_area_mm2.min(sample.contact_face_area_mm2)
}
