//! Synthetic compression cycles from a known constitutive model.
//!
//! Every fitter in [`crate::visco`] is checked against cycles produced here,
//! so this module depends only on [`crate::model::eval_model`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::device::SamplingMode;
use crate::model::{
    eval_model, Constitutive, CurveDiagnostics, CurvePhase, ModelError, Provenance,
    StressStrainCurve,
};

/// Constant-rate compression to `strain_max` followed by constant-rate
/// release back to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularProfile {
    pub strain_max: f64,
    /// Strain rate magnitude in 1/s.
    pub strain_rate: f64,
    pub samples_per_phase: usize,
}

impl TriangularProfile {
    pub fn new(strain_max: f64, strain_rate: f64, samples_per_phase: usize) -> Self {
        Self {
            strain_max,
            strain_rate,
            samples_per_phase,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.strain_max > 0.0 && self.strain_max < 1.0) {
            return Err(ModelError::InvalidProfile(format!(
                "strain_max must lie in (0, 1), got {}",
                self.strain_max
            )));
        }
        if !(self.strain_rate > 0.0 && self.strain_rate.is_finite()) {
            return Err(ModelError::InvalidProfile(format!(
                "strain_rate must be > 0, got {}",
                self.strain_rate
            )));
        }
        if self.samples_per_phase < 4 {
            return Err(ModelError::InvalidProfile(format!(
                "samples_per_phase must be >= 4, got {}",
                self.samples_per_phase
            )));
        }
        Ok(())
    }

    /// Sample times, strains, analytic strain rates and phases.
    ///
    /// Compression covers `0..=strain_max` in `samples_per_phase` equal
    /// steps; release takes `samples_per_phase` further steps ending at zero.
    pub fn samples(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<CurvePhase>) {
        let n = self.samples_per_phase;
        let (emax, rate) = (self.strain_max, self.strain_rate);
        let mut t = Vec::with_capacity(2 * n);
        let mut strain = Vec::with_capacity(2 * n);
        let mut strain_rate = Vec::with_capacity(2 * n);
        let mut phase = Vec::with_capacity(2 * n);
        for i in 0..n {
            let e = emax * i as f64 / (n - 1) as f64;
            t.push(e / rate);
            strain.push(e);
            strain_rate.push(rate);
            phase.push(CurvePhase::Compression);
        }
        let t_peak = emax / rate;
        for k in 1..=n {
            let e = emax * (1.0 - k as f64 / n as f64);
            t.push(t_peak + (emax - e) / rate);
            strain.push(e.max(0.0));
            strain_rate.push(-rate);
            phase.push(CurvePhase::Decompression);
        }
        (t, strain, strain_rate, phase)
    }
}

/// A generated cycle in stress/strain space.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCycle {
    pub model: Constitutive,
    pub profile: TriangularProfile,
    pub t: Vec<f64>,
    pub strain: Vec<f64>,
    pub strain_rate: Vec<f64>,
    pub stress_pa: Vec<f64>,
    pub phase: Vec<CurvePhase>,
}

impl SyntheticCycle {
    /// Converts to a processed curve (stress in kPa) with analytic strain
    /// rates.
    pub fn to_curve(&self) -> StressStrainCurve {
        StressStrainCurve {
            strain: self.strain.clone(),
            stress_kpa: self.stress_pa.iter().map(|s| s / 1000.0).collect(),
            strain_rate: self.strain_rate.clone(),
            phase: self.phase.clone(),
            l0_mm: 1.0,
            area_mm2: 1.0,
            sampling_mode: SamplingMode::Continuous,
            provenance: Provenance {
                sample: "synthetic".into(),
                device: "synthetic".into(),
                cycle_index: 1,
                ..Provenance::default()
            },
            diagnostics: CurveDiagnostics::default(),
        }
    }

    /// Keeps only the compression phase.
    pub fn compression_only(&self) -> SyntheticCycle {
        let keep: Vec<usize> = (0..self.phase.len())
            .filter(|&i| self.phase[i] == CurvePhase::Compression)
            .collect();
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        SyntheticCycle {
            model: self.model,
            profile: self.profile,
            t: pick(&self.t),
            strain: pick(&self.strain),
            strain_rate: pick(&self.strain_rate),
            stress_pa: pick(&self.stress_pa),
            phase: vec![CurvePhase::Compression; keep.len()],
        }
    }
}

/// Generates a triangular cycle with multiplicative Gaussian stress noise of
/// relative standard deviation `noise_rel`.
///
/// Hunt-Crossley parameters whose damping factor drives the noiseless stress
/// negative on release are rejected. Kelvin-Voigt cycles keep their negative
/// release tail, which is intrinsic to the linear damper near zero strain.
pub fn synthesize_cycle(
    model: &Constitutive,
    profile: &TriangularProfile,
    noise_rel: f64,
    seed: u64,
) -> Result<SyntheticCycle, ModelError> {
    model.validate()?;
    profile.validate()?;
    if !(noise_rel >= 0.0 && noise_rel.is_finite()) {
        return Err(ModelError::InvalidParameter(format!(
            "noise_rel must be >= 0, got {noise_rel}"
        )));
    }
    let (t, strain, strain_rate, phase) = profile.samples();
    let mut stress_pa = Vec::with_capacity(t.len());
    for (i, (&e, &r)) in strain.iter().zip(&strain_rate).enumerate() {
        let s = eval_model(model, e, r)?;
        if matches!(model, Constitutive::HuntCrossley { .. }) && s < 0.0 {
            return Err(ModelError::NegativeStress {
                index: i,
                strain: e,
                rate: r,
                stress: s,
            });
        }
        stress_pa.push(s);
    }
    if noise_rel > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_rel).expect("finite, non-negative sigma");
        for s in stress_pa.iter_mut() {
            *s *= 1.0 + normal.sample(&mut rng);
        }
    }
    Ok(SyntheticCycle {
        model: *model,
        profile: *profile,
        t,
        strain,
        strain_rate,
        stress_pa,
        phase,
    })
}
