use super::{ContactEvent, PipelineError};
use crate::device::{effective_area_mm2, DeviceProfile, SampleSpec};
use crate::ingest::ForceCycle;
use crate::model::{CurveDiagnostics, CurvePhase, Provenance, StressStrainCurve};

/// Strains above this are treated as jaw collision and dropped.
pub const STRAIN_CEILING: f64 = 0.95;

/// Relative deviation of the detected L0 from the nominal width that
/// triggers a warning.
pub const L0_WARN_FRACTION: f64 = 0.10;

/// Converts a force cycle into a stress/strain curve starting at `contact`.
///
/// Strain is `(L0 - position) / L0`, clipped at zero; stress is
/// `force / area` in kPa with `area = min(jaw, object face)`. The curve is
/// split into compression and decompression at the strain maximum and ends at
/// the first release sample whose strain returns to zero. Compression samples
/// that are out of order in strain (threshold-sampled devices) are sorted.
pub fn to_stress_strain(
    cycle: &ForceCycle,
    contact: &ContactEvent,
    sample: &SampleSpec,
    device: &DeviceProfile,
) -> Result<StressStrainCurve, PipelineError> {
    let l0 = contact.l0_mm;
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(PipelineError::Geometry(format!("L0 must be > 0, got {l0} mm")));
    }
    if l0 > device.stroke_mm {
        return Err(PipelineError::Geometry(format!(
            "L0 {l0} mm exceeds the {} stroke of {} mm",
            device.name, device.stroke_mm
        )));
    }
    if contact.index >= cycle.len() {
        return Err(PipelineError::Geometry(format!(
            "contact index {} outside cycle of {} samples",
            contact.index,
            cycle.len()
        )));
    }
    let area = effective_area_mm2(device, sample);
    if !(area > 0.0) {
        return Err(PipelineError::Geometry(format!("effective area must be > 0, got {area}")));
    }

    let mut diag = CurveDiagnostics::default();
    let start = contact.index;
    let mut t: Vec<f64> = cycle.t[start..].to_vec();
    let mut strain: Vec<f64> = cycle.position[start..]
        .iter()
        .map(|p| ((l0 - p) / l0).max(0.0))
        .collect();
    let mut stress: Vec<f64> = cycle.force[start..].iter().map(|f| f / area * 1000.0).collect();

    // Loss of contact on release.
    let peak = argmax(&strain);
    if let Some(off) = strain[peak + 1..].iter().position(|&s| s == 0.0) {
        let keep = peak + 1 + off + 1;
        diag.dropped_after_release = strain.len() - keep;
        t.truncate(keep);
        strain.truncate(keep);
        stress.truncate(keep);
    }

    let mut rate = centered_rate(&strain, &t);

    let before = strain.len();
    let keep: Vec<usize> = (0..before).filter(|&i| strain[i] <= STRAIN_CEILING).collect();
    if keep.len() < before {
        diag.dropped_beyond_ceiling = before - keep.len();
        diag.warnings.push(format!(
            "dropped {} samples with strain above {STRAIN_CEILING}",
            diag.dropped_beyond_ceiling
        ));
        strain = keep.iter().map(|&i| strain[i]).collect();
        stress = keep.iter().map(|&i| stress[i]).collect();
        rate = keep.iter().map(|&i| rate[i]).collect();
    }
    if strain.is_empty() {
        return Err(PipelineError::InsufficientData("no samples left after contact".into()));
    }

    let peak = argmax(&strain);
    let phase: Vec<CurvePhase> = (0..strain.len())
        .map(|i| if i <= peak { CurvePhase::Compression } else { CurvePhase::Decompression })
        .collect();

    if strain[..=peak].windows(2).any(|w| w[1] < w[0]) {
        let mut order: Vec<usize> = (0..=peak).collect();
        order.sort_by(|&a, &b| strain[a].total_cmp(&strain[b]));
        diag.reordered = order.iter().enumerate().filter(|(k, &i)| *k != i).count();
        let permute = |v: &mut Vec<f64>| {
            let sorted: Vec<f64> = order.iter().map(|&i| v[i]).collect();
            v[..=peak].copy_from_slice(&sorted);
        };
        permute(&mut strain);
        permute(&mut stress);
        permute(&mut rate);
        diag.warnings.push(format!("sorted compression phase by strain ({} samples moved)", diag.reordered));
    }

    let dev = (l0 - sample.nominal_width_mm).abs() / sample.nominal_width_mm;
    if dev > L0_WARN_FRACTION {
        diag.warnings.push(format!(
            "measured L0 {l0:.3} mm deviates {:.1}% from nominal width {} mm",
            dev * 100.0,
            sample.nominal_width_mm
        ));
    }

    Ok(StressStrainCurve {
        strain,
        stress_kpa: stress,
        strain_rate: rate,
        phase,
        l0_mm: l0,
        area_mm2: area,
        sampling_mode: device.sampling_mode,
        provenance: Provenance {
            sample: sample.label.clone(),
            device: device.name.clone(),
            ..Provenance::default()
        },
        diagnostics: diag,
    })
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Centered finite differences; one-sided at the ends.
pub fn centered_rate(x: &[f64], t: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect()
}
