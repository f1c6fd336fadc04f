//! Reading raw cycles from disk and converting effort into force.
//!
//! A cycle on disk is a JSON manifest pointing at a device profile, a sample
//! spec and a CSV trace with the exact header `t_s,position_mm,effort`.
//! Relative paths in a manifest resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceProfile, ProfileError, SampleSpec};

pub const RAW_CSV_HEADER: &str = "t_s,position_mm,effort";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: invalid JSON: {msg}")]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}:{line}: {msg}")]
    Validation { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Profile {
        path: PathBuf,
        #[source]
        source: ProfileError,
    },
    #[error("speed conversion: {0}")]
    Speed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedUnit {
    Percent,
    MmPerS,
}

/// Commanded closing speed with its unit tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSetting {
    pub value: f64,
    pub unit: SpeedUnit,
}

impl SpeedSetting {
    pub fn mm_per_s(value: f64) -> Self {
        Self {
            value,
            unit: SpeedUnit::MmPerS,
        }
    }

    pub fn percent(value: f64) -> Self {
        Self {
            value,
            unit: SpeedUnit::Percent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleManifest {
    pub device_profile_path: PathBuf,
    pub sample_spec_path: PathBuf,
    pub speed_setting: SpeedSetting,
    pub cycle_index: u32,
    pub csv_path: PathBuf,
    /// Location the manifest was read from.
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl CycleManifest {
    /// Reads a manifest and resolves its relative paths.
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let mut m: CycleManifest = read_json(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for p in [&mut m.device_profile_path, &mut m.sample_spec_path, &mut m.csv_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        m.source = Some(path.to_path_buf());
        Ok(m)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub fn load_device_profile(path: &Path) -> Result<DeviceProfile, IngestError> {
    let p: DeviceProfile = read_json(path)?;
    p.validate().map_err(|source| IngestError::Profile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(p)
}

pub fn load_sample_spec(path: &Path) -> Result<SampleSpec, IngestError> {
    let s: SampleSpec = read_json(path)?;
    s.validate().map_err(|source| IngestError::Profile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(s)
}

/// One recorded cycle in device units.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCycle {
    pub device: DeviceProfile,
    pub sample: SampleSpec,
    pub t: Vec<f64>,
    pub position: Vec<f64>,
    pub effort: Vec<f64>,
    pub speed_setting: SpeedSetting,
    pub cycle_index: u32,
    pub manifest: Option<PathBuf>,
}

impl RawCycle {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Commanded speed in mm/s, converting percentages through the device's
    /// speed map. The flag is set when the percentage had to be clamped.
    pub fn speed_mm_s(&self) -> Result<SpeedConversion, IngestError> {
        match self.speed_setting.unit {
            SpeedUnit::MmPerS => Ok(SpeedConversion {
                mm_per_s: self.speed_setting.value,
                clamped: false,
            }),
            SpeedUnit::Percent => speed_to_mm_s(&self.device, self.speed_setting.value),
        }
    }
}

/// Loads the device, sample and CSV referenced by `manifest`.
pub fn load_raw_cycle(manifest: &CycleManifest) -> Result<RawCycle, IngestError> {
    if manifest.cycle_index < 1 {
        return Err(IngestError::Validation {
            path: manifest.source.clone().unwrap_or_default(),
            line: 0,
            msg: "cycle_index must be >= 1".into(),
        });
    }
    let device = load_device_profile(&manifest.device_profile_path)?;
    let sample = load_sample_spec(&manifest.sample_spec_path)?;
    let (t, position, effort) = read_cycle_csv(&manifest.csv_path)?;
    Ok(RawCycle {
        device,
        sample,
        t,
        position,
        effort,
        speed_setting: manifest.speed_setting,
        cycle_index: manifest.cycle_index,
        manifest: manifest.source.clone(),
    })
}

/// Parses a raw cycle CSV, returning `(t, position, effort)`.
pub fn read_cycle_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cycle_csv(&text, path)
}

fn parse_cycle_csv(text: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), IngestError> {
    let parse_err = |line: usize, msg: String| IngestError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    match records.next() {
        Some(Ok(h)) if h.iter().collect::<Vec<_>>().join(",") == RAW_CSV_HEADER => {}
        Some(Ok(h)) => {
            return Err(parse_err(
                1,
                format!("expected header `{RAW_CSV_HEADER}`, found `{}`", h.iter().collect::<Vec<_>>().join(",")),
            ))
        }
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let (mut t, mut pos, mut eff) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let mut vals = [0.0; 3];
        for (slot, (field, name)) in vals.iter_mut().zip(rec.iter().zip(["t_s", "position_mm", "effort"])) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("{name}: cannot parse `{field}` as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("{name}: non-finite value `{field}`")));
            }
            *slot = v;
        }
        if let Some(&prev) = t.last() {
            if vals[0] <= prev {
                return Err(IngestError::Validation {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("time not strictly increasing: {} after {}", vals[0], prev),
                });
            }
        }
        t.push(vals[0]);
        pos.push(vals[1]);
        eff.push(vals[2]);
    }
    if t.is_empty() {
        return Err(IngestError::Validation {
            path: path.to_path_buf(),
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok((t, pos, eff))
}

/// Writes a raw cycle CSV. Values use the shortest round-tripping decimal
/// form.
pub fn write_cycle_csv(path: &Path, t: &[f64], position: &[f64], effort: &[f64]) -> Result<(), IngestError> {
    let mut out = String::with_capacity(32 * t.len() + 32);
    out.push_str(RAW_CSV_HEADER);
    out.push('\n');
    for i in 0..t.len() {
        out.push_str(&format!("{},{},{}\n", t[i], position[i], effort[i]));
    }
    fs::write(path, out).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Calibrated force and the indices whose effort fell outside the device's
/// declared range (still converted by extrapolation).
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated {
    pub force: Vec<f64>,
    pub out_of_range: Vec<usize>,
}

pub fn calibrate_force(profile: &DeviceProfile, effort: &[f64]) -> Calibrated {
    let force = effort.iter().map(|&e| profile.calibration.eval(e)).collect();
    let out_of_range = effort
        .iter()
        .enumerate()
        .filter(|(_, &e)| !profile.effort_in_range(e))
        .map(|(i, _)| i)
        .collect();
    Calibrated { force, out_of_range }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedConversion {
    pub mm_per_s: f64,
    /// The percentage lay outside the first/last knot and was clamped.
    pub clamped: bool,
}

/// Piecewise-linear map from commanded percent to mm/s.
pub fn speed_to_mm_s(profile: &DeviceProfile, percent: f64) -> Result<SpeedConversion, IngestError> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(IngestError::Speed(format!("percent must lie in [0, 100], got {percent}")));
    }
    let map = &profile.speed_map;
    let (first, last) = match (map.first(), map.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => {
            return Err(IngestError::Speed(format!(
                "device {} has no speed map",
                profile.name
            )))
        }
    };
    if percent <= first[0] {
        return Ok(SpeedConversion {
            mm_per_s: first[1],
            clamped: percent < first[0],
        });
    }
    if percent >= last[0] {
        return Ok(SpeedConversion {
            mm_per_s: last[1],
            clamped: percent > last[0],
        });
    }
    let seg = map
        .windows(2)
        .find(|w| percent >= w[0][0] && percent <= w[1][0])
        .expect("percent lies between first and last knot");
    let ([p0, v0], [p1, v1]) = (seg[0], seg[1]);
    let mm_per_s = if percent == p1 {
        v1
    } else {
        v0 + (v1 - v0) * (percent - p0) / (p1 - p0)
    };
    Ok(SpeedConversion {
        mm_per_s,
        clamped: false,
    })
}

/// Per-sample phase of a force cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreContact,
    Compression,
    Decompression,
}

/// A cycle with force in N.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceCycle {
    pub t: Vec<f64>,
    pub position: Vec<f64>,
    pub force: Vec<f64>,
    pub phase: Vec<Phase>,
    pub out_of_range: Vec<usize>,
}

impl ForceCycle {
    /// Labels samples up to the closest approach as compression and the rest
    /// as decompression.
    pub fn new(t: Vec<f64>, position: Vec<f64>, force: Vec<f64>) -> Self {
        assert!(
            t.len() == position.len() && t.len() == force.len(),
            "ForceCycle columns must have equal length"
        );
        let turn = position
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &p)| match best {
                Some((_, bp)) if bp <= p => best,
                _ => Some((i, p)),
            })
            .map_or(0, |(i, _)| i);
        let phase = (0..t.len())
            .map(|i| if i <= turn { Phase::Compression } else { Phase::Decompression })
            .collect();
        Self {
            t,
            position,
            force,
            phase,
            out_of_range: Vec::new(),
        }
    }

    pub fn from_raw(raw: &RawCycle) -> Self {
        let cal = calibrate_force(&raw.device, &raw.effort);
        let mut fc = Self::new(raw.t.clone(), raw.position.clone(), cal.force);
        fc.out_of_range = cal.out_of_range;
        fc
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Relabels every sample before `index` as pre-contact.
    pub fn mark_contact(&mut self, index: usize) {
        for p in self.phase.iter_mut().take(index) {
            *p = Phase::PreContact;
        }
        for p in self.phase.iter_mut().skip(index) {
            if *p == Phase::PreContact {
                *p = Phase::Compression;
            }
        }
    }
}
