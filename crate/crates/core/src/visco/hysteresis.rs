use serde::{Deserialize, Serialize};

use super::VisError;
use crate::model::{EnergyLossSeries, StressStrainCurve};
use crate::regression::fit_line;

/// Integral of stress over strain along a path, restricted to `[lo, hi]`.
/// Direction matters: a path of decreasing strain integrates negatively.
fn clipped_path_integral(strain: &[f64], stress: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..strain.len() {
        let (e0, e1, s0, s1) = (strain[k - 1], strain[k], stress[k - 1], stress[k]);
        if e0 == e1 {
            continue;
        }
        let (a, b) = (e0.min(e1).max(lo), e0.max(e1).min(hi));
        if b <= a {
            continue;
        }
        let at = |e: f64| s0 + (s1 - s0) * (e - e0) / (e1 - e0);
        let area = 0.5 * (at(a) + at(b)) * (b - a);
        total += if e1 > e0 { area } else { -area };
    }
    total
}

/// Energy density dissipated over one loop in Pa (J/m³): the compression
/// integral minus the decompression integral over their common strain range.
pub fn hysteresis_area(curve: &StressStrainCurve) -> Result<f64, VisError> {
    let comp: Vec<usize> = curve.compression_indices().collect();
    let mut dec: Vec<usize> = curve.decompression_indices().collect();
    if comp.len() < 2 {
        return Err(VisError::Phase("compression phase has fewer than 2 samples".into()));
    }
    if dec.is_empty() {
        return Err(VisError::Phase("curve has no decompression phase".into()));
    }
    // the release path starts where compression ended
    dec.insert(0, *comp.last().unwrap());

    let pick = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
        idx.iter()
            .map(|&i| (curve.strain[i], curve.stress_kpa[i] * 1000.0))
            .unzip()
    };
    let (ce, cs) = pick(&comp);
    let (de, ds) = pick(&dec);
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let ((c_lo, c_hi), (d_lo, d_hi)) = (range(&ce), range(&de));
    let (lo, hi) = (c_lo.max(d_lo), c_hi.min(d_hi));
    if hi <= lo {
        return Err(VisError::Phase(format!(
            "compression [{c_lo}, {c_hi}] and decompression [{d_lo}, {d_hi}] share no strain range"
        )));
    }
    let up = clipped_path_integral(&ce, &cs, lo, hi);
    let down = clipped_path_integral(&de, &ds, lo, hi);
    let area = up + down;
    if area < -0.01 * up.abs() {
        return Err(VisError::Anomaly(format!(
            "loop area {area} Pa is negative beyond 1% of the compression work {up} Pa"
        )));
    }
    Ok(area)
}

/// Mean absolute strain rate over the curve in 1/s.
pub fn mean_strain_rate(curve: &StressStrainCurve) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    curve.strain_rate.iter().map(|r| r.abs()).sum::<f64>() / curve.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPoint {
    pub mean_strain_rate: f64,
    pub loop_energy_pa: f64,
    pub speed_mm_s: Option<f64>,
}

pub fn loop_point(curve: &StressStrainCurve) -> Result<LoopPoint, VisError> {
    Ok(LoopPoint {
        mean_strain_rate: mean_strain_rate(curve),
        loop_energy_pa: hysteresis_area(curve)?,
        speed_mm_s: curve.provenance.speed_mm_s,
    })
}

/// Least-squares line of loop energy against mean strain rate; its slope is
/// the energy-loss damping coefficient in Pa·s.
pub fn eta_from_speeds(loops: &[LoopPoint]) -> Result<EnergyLossSeries, VisError> {
    if loops.len() < 2 {
        return Err(VisError::RankDeficient(format!("need at least 2 loops, got {}", loops.len())));
    }
    let rates: Vec<f64> = loops.iter().map(|l| l.mean_strain_rate).collect();
    let energies: Vec<f64> = loops.iter().map(|l| l.loop_energy_pa).collect();
    let distinct = rates.iter().any(|&r| (r - rates[0]).abs() > 1e-12 * rates[0].abs().max(1e-300));
    if !distinct {
        return Err(VisError::RankDeficient(format!(
            "all {} loops share one strain rate",
            loops.len()
        )));
    }
    let fit = fit_line(&rates, &energies)
        .ok_or_else(|| VisError::RankDeficient("strain rates do not vary".into()))?;
    Ok(EnergyLossSeries {
        speeds_mm_s: loops.iter().map(|l| l.speed_mm_s).collect(),
        mean_strain_rates: rates,
        loop_energies_pa: energies,
        eta_loss_pa_s: fit.slope,
        intercept_pa: fit.intercept,
        r2: fit.r2,
    })
}
