use std::path::PathBuf;

use gripstiff::curve_io::read_curve;
use gripstiff::model::{ModulusEstimate, Provenance, StressStrainCurve};
use gripstiff::pipeline::{cv40, linear_modulus, local_modulus, window_feasibility, window_sweep};
use serde::{Deserialize, Serialize};

use super::{require_inputs, Context};
use crate::output::{display, write_json};
use crate::{usage, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Processed curve CSV files
    pub curves: Vec<PathBuf>,
    /// Estimator: `local@P[,P...]`, `linear` or `cv40`; repeatable
    #[arg(long = "method", default_values_t = ["local@0.4".to_string(), "linear".to_string()])]
    pub methods: Vec<String>,
    /// Half-width of local windows (strain); defaults to the configured value
    #[arg(long)]
    pub halfwidth: Option<f64>,
    /// Candidate half-widths; the best-R² feasible window is used per point
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Local(Vec<f64>),
    Linear,
    Cv40,
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    let s = s.trim();
    match s {
        "linear" => return Ok(Method::Linear),
        "cv40" => return Ok(Method::Cv40),
        _ => {}
    }
    let points = s.strip_prefix("local@").ok_or_else(|| format!("unknown method '{s}'"))?;
    let pts: Result<Vec<f64>, _> = points.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let pts = pts.map_err(|e| format!("bad strain point in '{s}': {e}"))?;
    if pts.is_empty() || pts.iter().any(|p| !(0.0..1.0).contains(p)) {
        return Err(format!("strain points in '{s}' must lie in [0, 1)"));
    }
    Ok(Method::Local(pts))
}

/// One estimate, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub curve: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strain_point: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_halfwidth: Option<f64>,
    #[serde(rename = "E_kpa", default, skip_serializing_if = "Option::is_none")]
    pub e_kpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv40_kpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl EstimateRecord {
    fn new(curve: &str, method: &str, c: &StressStrainCurve) -> Self {
        Self {
            curve: curve.to_string(),
            method: method.to_string(),
            strain_point: None,
            window_halfwidth: None,
            e_kpa: None,
            cv40_kpa: None,
            r2: None,
            samples: None,
            provenance: c.provenance.clone(),
            skipped: None,
        }
    }

    fn with_estimate(mut self, e: &ModulusEstimate) -> Self {
        self.strain_point = e.strain_point;
        self.window_halfwidth = e.window_halfwidth;
        self.e_kpa = Some(e.e_kpa);
        self.r2 = Some(e.r2);
        self.samples = Some(e.samples);
        self
    }

    /// The record as a modulus estimate, if it holds one.
    pub fn to_estimate(&self) -> Option<ModulusEstimate> {
        let method = match self.method.as_str() {
            "local" => gripstiff::ModulusMethod::Local,
            "linear" => gripstiff::ModulusMethod::Linear,
            _ => return None,
        };
        Some(ModulusEstimate {
            method,
            strain_point: self.strain_point,
            window_halfwidth: self.window_halfwidth,
            e_kpa: self.e_kpa?,
            r2: self.r2.unwrap_or(f64::NAN),
            samples: self.samples.unwrap_or(0),
            sample: self.provenance.sample.clone(),
            cycle_index: self.provenance.cycle_index,
            speed_mm_s: self.provenance.speed_mm_s,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EstimatesFile {
    pub kind: String,
    pub records: Vec<EstimateRecord>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub input: String,
    pub error: String,
}

fn estimate_curve(name: &str, c: &StressStrainCurve, methods: &[Method], hw: f64, sweep: &[f64]) -> Vec<EstimateRecord> {
    let mut out = vec![];
    for m in methods {
        match m {
            Method::Local(points) => {
                for &p in points {
                    let mut rec = EstimateRecord::new(name, "local", c);
                    rec.strain_point = Some(p);
                    let chosen = if sweep.is_empty() {
                        window_feasibility(c, p, hw).map(|_| hw).map_err(|why| why.to_string())
                    } else {
                        window_sweep(c, p, sweep)
                            .map(|s| s.best_entry().halfwidth)
                            .map_err(|e| e.to_string())
                    };
                    let rec = match chosen.and_then(|h| local_modulus(c, p, h).map_err(|e| e.to_string())) {
                        Ok(e) => rec.with_estimate(&e),
                        Err(why) => {
                            rec.window_halfwidth = sweep.is_empty().then_some(hw);
                            EstimateRecord { skipped: Some(why), ..rec }
                        }
                    };
                    out.push(rec);
                }
            }
            Method::Linear => {
                let rec = EstimateRecord::new(name, "linear", c);
                out.push(match linear_modulus(c) {
                    Ok(e) => rec.with_estimate(&e),
                    Err(e) => EstimateRecord { skipped: Some(e.to_string()), ..rec },
                });
            }
            Method::Cv40 => {
                let mut rec = EstimateRecord::new(name, "cv40", c);
                match cv40(c) {
                    Ok(v) => {
                        rec.strain_point = Some(0.4);
                        rec.cv40_kpa = Some(v);
                    }
                    Err(e) => rec.skipped = Some(e.to_string()),
                }
                out.push(rec);
            }
        }
    }
    out
}

pub fn run(ctx: &Context, args: &Args) -> anyhow::Result<Outcome> {
    require_inputs(&args.curves, "curve files")?;
    let methods: Vec<Method> = args.methods.iter().map(|m| parse_method(m)).collect::<Result<_, _>>().map_err(usage)?;
    let hw = args.halfwidth.unwrap_or(ctx.settings.pipeline.halfwidth);
    if !(hw > 0.0) || args.sweep.iter().any(|h| !(*h > 0.0)) {
        return Err(usage("half-widths must be > 0"));
    }
    let results = ctx.par_map(&args.curves, |path| {
        let name = display(path);
        read_curve(path)
            .map(|(c, _)| estimate_curve(&name, &c, &methods, hw, &args.sweep))
            .map_err(|e| Failure { input: name, error: e.to_string() })
    });
    let mut records = vec![];
    let mut failures = vec![];
    for r in results {
        match r {
            Ok(v) => records.extend(v),
            Err(f) => {
                eprintln!("failed {}: {}", f.input, f.error);
                failures.push(f);
            }
        }
    }
    for r in &records {
        match (&r.skipped, r.e_kpa, r.cv40_kpa) {
            (Some(why), _, _) => println!("{:<32} {:<7} skipped: {why}", r.curve, r.method),
            (None, Some(e), _) => println!(
                "{:<32} {:<7} {:>6} E = {e:.3} kPa (r2 {:.4})",
                r.curve,
                r.method,
                r.strain_point.map(|p| format!("@{p}")).unwrap_or_default(),
                r.r2.unwrap_or(f64::NAN)
            ),
            (None, None, Some(v)) => println!("{:<32} cv40    {v:.3} kPa", r.curve),
            _ => {}
        }
    }
    let failed = failures.len();
    write_json(&ctx.out("estimates.json"), &EstimatesFile { kind: "estimates".into(), records, failures })?;
    Ok(Outcome { failures: failed })
}
