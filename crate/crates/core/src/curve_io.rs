//! On-disk form of processed curves: a `*.curve.csv` data file and a
//! `*.curve.json` sidecar with geometry, provenance and diagnostics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::device::SamplingMode;
use crate::ingest::IngestError;
use crate::model::{CurveDiagnostics, CurvePhase, Provenance, StressStrainCurve};
use crate::pipeline::ContactEvent;

pub const CURVE_CSV_HEADER: &str = "strain,stress_kpa,strain_rate_per_s,phase";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub l0_mm: f64,
    pub area_mm2: f64,
    #[serde(default)]
    pub sampling_mode: SamplingMode,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactEvent>,
    #[serde(default)]
    pub diagnostics: CurveDiagnostics,
}

/// `foo.curve.csv` -> `foo.curve.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let name = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    csv.with_file_name(format!("{stem}.json"))
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

pub fn write_curve(csv_path: &Path, curve: &StressStrainCurve, contact: Option<&ContactEvent>) -> Result<(), IngestError> {
    let mut out = String::with_capacity(curve.len() * 48);
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for i in 0..curve.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            curve.strain[i],
            curve.stress_kpa[i],
            curve.strain_rate[i],
            curve.phase[i].code()
        ));
    }
    std::fs::write(csv_path, out).map_err(io(csv_path))?;
    let meta = CurveMeta {
        l0_mm: curve.l0_mm,
        area_mm2: curve.area_mm2,
        sampling_mode: curve.sampling_mode,
        provenance: curve.provenance.clone(),
        contact: contact.copied(),
        diagnostics: curve.diagnostics.clone(),
    };
    let side = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&meta).expect("serializable") + "\n";
    std::fs::write(&side, json).map_err(io(&side))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> IngestError {
    IngestError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Reads a curve CSV and, when present, its sidecar. Without a sidecar the
/// curve gets default metadata with the file stem as sample label.
pub fn read_curve(csv_path: &Path) -> Result<(StressStrainCurve, Option<CurveMeta>), IngestError> {
    let text = std::fs::read_to_string(csv_path).map_err(io(csv_path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == CURVE_CSV_HEADER => {}
        other => {
            return Err(parse_err(
                csv_path,
                1,
                format!("expected header '{CURVE_CSV_HEADER}', found '{}'", other.unwrap_or("")),
            ))
        }
    }
    let (mut strain, mut stress, mut rate, mut phase) = (vec![], vec![], vec![], vec![]);
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(csv_path, lineno, format!("expected 4 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, IngestError> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(csv_path, lineno, format!("invalid {what} '{s}'")))
        };
        strain.push(num(f[0], "strain")?);
        stress.push(num(f[1], "stress")?);
        rate.push(num(f[2], "strain rate")?);
        phase.push(
            CurvePhase::from_code(f[3].trim())
                .ok_or_else(|| parse_err(csv_path, lineno, format!("invalid phase '{}'", f[3])))?,
        );
    }
    let mut curve = StressStrainCurve::from_columns(strain, stress, rate, phase);
    curve
        .check_shape()
        .map_err(|msg| IngestError::Validation { path: csv_path.to_path_buf(), line: 0, msg })?;
    let side = sidecar_path(csv_path);
    let meta = if side.exists() {
        let m: CurveMeta = crate::ingest::read_json(&side)?;
        curve.l0_mm = m.l0_mm;
        curve.area_mm2 = m.area_mm2;
        curve.sampling_mode = m.sampling_mode;
        curve.provenance = m.provenance.clone();
        curve.diagnostics = m.diagnostics.clone();
        Some(m)
    } else {
        let name = csv_path.file_name().unwrap_or_default().to_string_lossy();
        curve.provenance.sample = name.strip_suffix(".curve.csv").unwrap_or(&name).to_string();
        curve.provenance.cycle_index = 1;
        None
    };
    Ok((curve, meta))
}
