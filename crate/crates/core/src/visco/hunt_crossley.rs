//! Hunt-Crossley identification by Levenberg-Marquardt in log space.
//!
//! The residual of sample `i` is
//! `log s_i - (log K + n log e_i + log(1 + eta * r_i / K))`
//! and the parameters are `(log K, n, eta)`. Samples where
//! `1 + eta * r_i / K <= 0` have no model value and are excluded. A trial
//! step is accepted only when it lowers the objective and keeps every sample
//! that was valid at the current iterate valid, so the excluded set can only
//! shrink and the objective sequence is monotone.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{select, FitSamples, VisError, EPS_MIN, RATE_COV_THRESHOLD};
use crate::device::SamplingMode;
use crate::model::{ModelKind, StressStrainCurve, ViscoelasticFit};
use crate::regression::{fit_line, r_squared, varies_enough};

const MIN_SAMPLES: usize = 8;
pub const N_MAX: f64 = 10.0;
const N_FLOOR: f64 = 1e-6;
const LAMBDA0: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
const REL_DECREASE_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HcOptions {
    pub eps_min: f64,
    pub max_iter: usize,
    /// Starting `(K, n, eta)`; the log-log line fit with `eta = 0` when unset.
    pub initial: Option<(f64, f64, f64)>,
}

impl Default for HcOptions {
    fn default() -> Self {
        Self { eps_min: EPS_MIN, max_iter: 200, initial: None }
    }
}

/// Objective value after each accepted step, starting with the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HcTrace {
    pub objective: Vec<f64>,
    pub excluded: Vec<usize>,
    pub lambda: Vec<f64>,
}

struct Problem {
    log_e: Vec<f64>,
    rate: Vec<f64>,
    log_s: Vec<f64>,
    free_eta: bool,
}

#[derive(Clone, Copy)]
struct Params {
    log_k: f64,
    n: f64,
    eta: f64,
}

impl Params {
    fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.log_k, self.n, self.eta)
    }

    fn project(v: Vector3<f64>, free_eta: bool) -> Self {
        Self {
            log_k: v[0],
            n: v[1].clamp(N_FLOOR, N_MAX),
            eta: if free_eta { v[2].max(0.0) } else { 0.0 },
        }
    }
}

struct Eval {
    objective: f64,
    valid: Vec<bool>,
    excluded: usize,
}

impl Problem {
    fn damping_arg(&self, p: &Params, i: usize) -> f64 {
        1.0 + p.eta * self.rate[i] / p.log_k.exp()
    }

    fn model(&self, p: &Params, i: usize) -> Option<f64> {
        let u = self.damping_arg(p, i);
        (u > 0.0).then(|| p.log_k + p.n * self.log_e[i] + u.ln())
    }

    fn eval(&self, p: &Params) -> Eval {
        let mut objective = 0.0;
        let mut valid = vec![false; self.log_s.len()];
        for (i, v) in valid.iter_mut().enumerate() {
            if let Some(m) = self.model(p, i) {
                objective += (self.log_s[i] - m).powi(2);
                *v = true;
            }
        }
        let excluded = valid.iter().filter(|v| !**v).count();
        Eval { objective, valid, excluded }
    }

    /// Normal equations `J^T J` and `J^T r` over the valid samples.
    fn normal_equations(&self, p: &Params, valid: &[bool]) -> (Matrix3<f64>, Vector3<f64>) {
        let k = p.log_k.exp();
        let mut a = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for i in (0..self.log_s.len()).filter(|&i| valid[i]) {
            let u = self.damping_arg(p, i);
            let r = self.log_s[i] - self.model(p, i).unwrap();
            let j = Vector3::new(
                1.0 / u,
                self.log_e[i],
                if self.free_eta { self.rate[i] / k / u } else { 0.0 },
            );
            a += j * j.transpose();
            g += j * r;
        }
        (a, g)
    }
}

fn initial_guess(s: &FitSamples) -> Result<Params, VisError> {
    let lx: Vec<f64> = s.strain.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = s.stress_pa.iter().map(|v| v.ln()).collect();
    let line = fit_line(&lx, &ly)
        .ok_or_else(|| VisError::InsufficientData("strain does not vary over the fitted samples".into()))?;
    Ok(Params { log_k: line.intercept, n: line.slope.clamp(N_FLOOR, N_MAX), eta: 0.0 })
}

pub fn fit_hunt_crossley(curve: &StressStrainCurve) -> Result<ViscoelasticFit, VisError> {
    fit_hunt_crossley_traced(curve, &HcOptions::default()).map(|(f, _)| f)
}

/// Fits the Hunt-Crossley model and returns the per-iteration trace.
///
/// Force-threshold curves are fitted with `eta` held at zero and flagged as
/// not identifiable.
pub fn fit_hunt_crossley_traced(curve: &StressStrainCurve, opts: &HcOptions) -> Result<(ViscoelasticFit, HcTrace), VisError> {
    let s = select(curve, opts.eps_min, true);
    if s.strain.len() < MIN_SAMPLES {
        return Err(VisError::InsufficientData(format!(
            "{} samples with strain above {} and positive stress, need {MIN_SAMPLES}",
            s.strain.len(),
            opts.eps_min
        )));
    }
    let free_eta = curve.sampling_mode != SamplingMode::ForceThreshold;
    let identifiable = free_eta && varies_enough(&s.rate, RATE_COV_THRESHOLD);
    let mut p = match opts.initial {
        Some((k, n, eta)) => {
            if !(k > 0.0 && n > 0.0 && eta >= 0.0) {
                return Err(VisError::Domain(format!("invalid initial guess K={k}, n={n}, eta={eta}")));
            }
            Params::project(Vector3::new(k.ln(), n, eta), free_eta)
        }
        None => initial_guess(&s)?,
    };
    let prob = Problem {
        log_e: s.strain.iter().map(|e| e.ln()).collect(),
        rate: s.rate.clone(),
        log_s: s.stress_pa.iter().map(|v| v.ln()).collect(),
        free_eta,
    };

    let mut cur = prob.eval(&p);
    if cur.excluded == prob.log_s.len() {
        return Err(VisError::Domain("every sample has a non-positive damping term".into()));
    }
    let mut trace = HcTrace::default();
    let mut lambda = LAMBDA0;
    trace.objective.push(cur.objective);
    trace.excluded.push(cur.excluded);
    trace.lambda.push(lambda);

    let mut converged = cur.objective == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let (a, g) = prob.normal_equations(&p, &cur.valid);
        let max_diag = a.diagonal().max().max(f64::MIN_POSITIVE);
        let grad_scale = (0..3).map(|i| g[i].abs() / a[(i, i)].max(1e-300).sqrt()).fold(0.0, f64::max);
        if grad_scale <= 1e-15 * (1.0 + cur.objective.sqrt()) {
            converged = true;
            break;
        }
        let mut scaled = a;
        for i in 0..3 {
            let d = a[(i, i)].max(1e-12 * max_diag);
            scaled[(i, i)] += lambda * d;
        }
        if !free_eta {
            scaled[(2, 2)] = 1.0;
        }
        let step = match scaled.cholesky() {
            Some(c) => c.solve(&g),
            None => {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    converged = true;
                }
                continue;
            }
        };
        let cand = Params::project(p.vector() + step, free_eta);
        let ev = prob.eval(&cand);
        let keeps_valid = cur.valid.iter().zip(&ev.valid).all(|(&was, &is)| !was || is);
        if keeps_valid && ev.objective < cur.objective {
            let decrease = (cur.objective - ev.objective) / cur.objective.max(f64::MIN_POSITIVE);
            let moved = (cand.vector() - p.vector()).norm();
            p = cand;
            cur = ev;
            lambda = (lambda * 0.1).max(1e-300);
            trace.objective.push(cur.objective);
            trace.excluded.push(cur.excluded);
            trace.lambda.push(lambda);
            if decrease < REL_DECREASE_TOL || moved < STEP_TOL * (1.0 + p.vector().norm()) {
                converged = true;
            }
        } else {
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                converged = true;
            }
        }
    }

    let m = prob.log_s.len();
    let valid_idx: Vec<usize> = (0..m).filter(|&i| cur.valid[i]).collect();
    let observed: Vec<f64> = valid_idx.iter().map(|&i| prob.log_s[i]).collect();
    let fitted: Vec<f64> = valid_idx.iter().map(|&i| prob.model(&p, i).unwrap()).collect();
    let fit = ViscoelasticFit {
        model: ModelKind::HuntCrossley,
        k_pa: p.log_k.exp(),
        eta_pa_s: p.eta,
        n: p.n,
        r2: r_squared(&observed, &fitted),
        residual: (cur.objective / valid_idx.len() as f64).sqrt(),
        identifiable,
        excluded_samples: cur.excluded,
        iterations,
    };
    if !converged {
        return Err(VisError::Convergence { best: Box::new(fit), iterations });
    }
    Ok((fit, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constitutive;
    use crate::synth::{synthesize_cycle, TriangularProfile};

    #[test]
    fn pure_power_law_exact() {
        let x: Vec<f64> = (1..=60).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|e| 1000.0 * e.powf(1.5) / 1000.0).collect();
        let f = fit_hunt_crossley(&StressStrainCurve::compression_only(x, y)).unwrap();
        assert!((f.k_pa - 1000.0).abs() / 1000.0 < 1e-9, "{}", f.k_pa);
        assert!((f.n - 1.5).abs() < 1e-9);
        assert_eq!(f.eta_pa_s, 0.0);
        assert!(!f.identifiable);
    }

    #[test]
    fn noiseless_recovery() {
        let m = Constitutive::HuntCrossley { k: 20000.0, eta: 500.0, n: 1.5 };
        let c = synthesize_cycle(&m, &TriangularProfile::new(0.6, 0.1, 300), 0.0, 0).unwrap().to_curve();
        let f = fit_hunt_crossley(&c).unwrap();
        assert!((f.k_pa / 20000.0 - 1.0).abs() < 1e-6, "{f:?}");
        assert!((f.n - 1.5).abs() < 1e-6);
        assert!((f.eta_pa_s / 500.0 - 1.0).abs() < 1e-5);
        assert!(f.identifiable);
        assert_eq!(f.excluded_samples, 0);
    }

    #[test]
    fn objective_monotone() {
        let m = Constitutive::HuntCrossley { k: 5000.0, eta: 3000.0, n: 0.7 };
        let c = synthesize_cycle(&m, &TriangularProfile::new(0.6, 0.1, 200), 0.02, 9).unwrap().to_curve();
        let (_, t) = fit_hunt_crossley_traced(&c, &HcOptions::default()).unwrap();
        assert!(t.objective.len() > 1);
        assert!(t.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn initial_guess_exclusions_reported() {
        let m = Constitutive::HuntCrossley { k: 5000.0, eta: 1000.0, n: 1.0 };
        let c = synthesize_cycle(&m, &TriangularProfile::new(0.6, 0.1, 200), 0.0, 0).unwrap().to_curve();
        let opts = HcOptions { initial: Some((100.0, 1.0, 5000.0)), ..HcOptions::default() };
        let (f, t) = fit_hunt_crossley_traced(&c, &opts).unwrap();
        assert!(t.excluded[0] > 0);
        assert!(t.excluded.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(f.excluded_samples, *t.excluded.last().unwrap());
    }

    #[test]
    fn all_excluded_is_domain_error() {
        let m = Constitutive::HuntCrossley { k: 5000.0, eta: 0.0, n: 1.0 };
        let mut c = synthesize_cycle(&m, &TriangularProfile::new(0.6, 0.1, 50), 0.0, 0).unwrap().to_curve();
        c.strain_rate.iter_mut().for_each(|r| *r = -1.0);
        let opts = HcOptions { initial: Some((10.0, 1.0, 100.0)), ..HcOptions::default() };
        assert!(matches!(fit_hunt_crossley_traced(&c, &opts), Err(VisError::Domain(_))));
    }

    #[test]
    fn force_threshold_fixes_eta() {
        let m = Constitutive::HuntCrossley { k: 5000.0, eta: 0.0, n: 2.0 };
        let mut c = synthesize_cycle(&m, &TriangularProfile::new(0.6, 0.1, 50), 0.0, 0).unwrap().to_curve();
        c.sampling_mode = SamplingMode::ForceThreshold;
        let f = fit_hunt_crossley(&c).unwrap();
        assert_eq!(f.eta_pa_s, 0.0);
        assert!(!f.identifiable);
        assert!((f.n - 2.0).abs() < 1e-9);
    }
}
