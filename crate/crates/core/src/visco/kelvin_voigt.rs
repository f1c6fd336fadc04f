use nalgebra::{DMatrix, DVector};

use super::{select, VisError, EPS_MIN, RATE_COV_THRESHOLD};
use crate::device::SamplingMode;
use crate::model::{ModelKind, StressStrainCurve, ViscoelasticFit};
use crate::regression::{r_squared, varies_enough};

const MIN_SAMPLES: usize = 6;

pub fn fit_kelvin_voigt(curve: &StressStrainCurve) -> Result<ViscoelasticFit, VisError> {
    fit_kelvin_voigt_with(curve, EPS_MIN)
}

/// Regresses stress on `(strain, strain_rate)` without intercept.
///
/// A negative damping estimate is clamped to zero and `K` refitted alone.
pub fn fit_kelvin_voigt_with(curve: &StressStrainCurve, eps_min: f64) -> Result<ViscoelasticFit, VisError> {
    if curve.sampling_mode == SamplingMode::ForceThreshold {
        return Err(VisError::UnsupportedMode(
            "force-threshold sampling carries no usable strain rate".into(),
        ));
    }
    let s = select(curve, eps_min, false);
    let m = s.strain.len();
    if m < MIN_SAMPLES {
        return Err(VisError::InsufficientData(format!(
            "{m} samples with strain above {eps_min}, need {MIN_SAMPLES}"
        )));
    }
    let x = DMatrix::from_fn(m, 2, |r, c| if c == 0 { s.strain[r] } else { s.rate[r] });
    let y = DVector::from_column_slice(&s.stress_pa);
    let svd = x.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let sol = svd
        .solve(&y, tol)
        .map_err(|e| VisError::RankDeficient(e.to_string()))?;
    let (mut k, mut eta) = (sol[0], sol[1]);
    if eta < 0.0 || !eta.is_finite() {
        eta = 0.0;
        let sxx: f64 = s.strain.iter().map(|e| e * e).sum();
        let sxy: f64 = s.strain.iter().zip(&s.stress_pa).map(|(e, y)| e * y).sum();
        k = sxy / sxx;
    }
    if !(k > 0.0) {
        return Err(VisError::Domain(format!("fitted stiffness {k} Pa is not positive")));
    }
    let fitted: Vec<f64> = (0..m).map(|i| k * s.strain[i] + eta * s.rate[i]).collect();
    let rms = ((0..m).map(|i| (s.stress_pa[i] - fitted[i]).powi(2)).sum::<f64>() / m as f64).sqrt();
    Ok(ViscoelasticFit {
        model: ModelKind::KelvinVoigt,
        k_pa: k,
        eta_pa_s: eta,
        n: 1.0,
        r2: r_squared(&s.stress_pa, &fitted),
        residual: rms,
        identifiable: varies_enough(&s.rate, RATE_COV_THRESHOLD),
        excluded_samples: 0,
        iterations: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constitutive;
    use crate::synth::{synthesize_cycle, TriangularProfile};

    fn kv(k: f64, eta: f64) -> StressStrainCurve {
        synthesize_cycle(&Constitutive::KelvinVoigt { k, eta }, &TriangularProfile::new(0.5, 0.1, 200), 0.0, 1)
            .unwrap()
            .to_curve()
    }

    #[test]
    fn exact_recovery() {
        let f = fit_kelvin_voigt(&kv(5000.0, 2000.0)).unwrap();
        assert!((f.k_pa - 5000.0).abs() / 5000.0 < 1e-9);
        assert!((f.eta_pa_s - 2000.0).abs() / 2000.0 < 1e-9);
        assert!(f.identifiable);
    }

    #[test]
    fn no_damping() {
        let f = fit_kelvin_voigt(&kv(5000.0, 0.0)).unwrap();
        assert!(f.eta_pa_s.abs() < 1e-9);
    }

    #[test]
    fn compression_only_not_identifiable() {
        let c = synthesize_cycle(&Constitutive::KelvinVoigt { k: 5000.0, eta: 2000.0 }, &TriangularProfile::new(0.5, 0.1, 200), 0.0, 1)
            .unwrap()
            .compression_only()
            .to_curve();
        let f = fit_kelvin_voigt(&c).unwrap();
        assert!(!f.identifiable);
    }

    #[test]
    fn force_threshold_unsupported() {
        let mut c = kv(5000.0, 100.0);
        c.sampling_mode = SamplingMode::ForceThreshold;
        assert!(matches!(fit_kelvin_voigt(&c), Err(VisError::UnsupportedMode(_))));
    }

    #[test]
    fn too_few_samples() {
        let c = StressStrainCurve::compression_only(vec![0.0, 0.03, 0.04], vec![0.0, 1.0, 2.0]);
        assert!(matches!(fit_kelvin_voigt(&c), Err(VisError::InsufficientData(_))));
    }
}
