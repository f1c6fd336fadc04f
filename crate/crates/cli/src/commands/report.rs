use std::path::PathBuf;

use gripstiff::model::ModulusEstimate;
use gripstiff::pipeline::{aggregate_estimates, AggregateReport, GroupKey};
use gripstiff::regression::{mean, population_std};
use serde::Serialize;

use super::estimate::{EstimatesFile, Failure};
use super::fit::{FitRecord, FitsFile, SeriesRecord};
use super::{require_inputs, Context};
use crate::output::{display, write_json, write_text};
use crate::{usage, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// estimates.json and/or fits.json files
    pub inputs: Vec<PathBuf>,
    /// Grouping keys for modulus tables: sample, cycle, speed
    #[arg(long, value_delimiter = ',', default_values_t = ["sample".to_string(), "cycle".to_string(), "speed".to_string()])]
    pub group_by: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ModulusSection {
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    strain_point: Option<f64>,
    groups: Vec<AggregateReport>,
}

#[derive(Debug, Serialize)]
struct SampleSummary {
    sample: String,
    count: usize,
    #[serde(rename = "K_pa_mean")]
    k_mean: f64,
    #[serde(rename = "K_error_ratio")]
    k_error_ratio: f64,
    eta_pa_s_mean: f64,
    eta_error_ratio: f64,
    n_mean: f64,
}

#[derive(Debug, Serialize)]
struct FitSection {
    model: String,
    samples: Vec<SampleSummary>,
}

#[derive(Debug, Serialize)]
struct Report {
    kind: &'static str,
    group_by: Vec<GroupKey>,
    modulus: Vec<ModulusSection>,
    fits: Vec<FitSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    energy_loss: Vec<SeriesRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<Failure>,
}

fn ratio(v: &[f64]) -> f64 {
    let s = population_std(v);
    if s == 0.0 {
        0.0
    } else {
        s / mean(v).abs()
    }
}

fn modulus_sections(estimates: &[ModulusEstimate], keys: &[GroupKey]) -> Vec<ModulusSection> {
    let mut buckets: Vec<((String, Option<f64>), Vec<ModulusEstimate>)> = vec![];
    for e in estimates {
        let method = format!("{:?}", e.method).to_lowercase();
        let key = (method, e.strain_point);
        match buckets.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(e.clone()),
            None => buckets.push((key, vec![e.clone()])),
        }
    }
    buckets
        .into_iter()
        .map(|((method, strain_point), v)| ModulusSection {
            method,
            strain_point,
            groups: aggregate_estimates(&v, keys).expect("bucket is non-empty"),
        })
        .collect()
}

fn fit_sections(records: &[(String, FitRecord)]) -> Vec<FitSection> {
    let mut models: Vec<(String, Vec<(String, Vec<[f64; 3]>)>)> = vec![];
    for (model, r) in records {
        let Some(f) = &r.fit else { continue };
        if r.error.is_some() {
            continue;
        }
        let idx = match models.iter().position(|(m, _)| m == model) {
            Some(i) => i,
            None => {
                models.push((model.clone(), vec![]));
                models.len() - 1
            }
        };
        let samples = &mut models[idx].1;
        let row = [f.k_pa, f.eta_pa_s, f.n];
        match samples.iter_mut().find(|(s, _)| *s == r.provenance.sample) {
            Some((_, v)) => v.push(row),
            None => samples.push((r.provenance.sample.clone(), vec![row])),
        }
    }
    models
        .into_iter()
        .map(|(model, samples)| FitSection {
            model,
            samples: samples
                .into_iter()
                .map(|(sample, rows)| {
                    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
                    let (k, eta, n) = (col(0), col(1), col(2));
                    SampleSummary {
                        sample,
                        count: rows.len(),
                        k_mean: mean(&k),
                        k_error_ratio: ratio(&k),
                        eta_pa_s_mean: mean(&eta),
                        eta_error_ratio: ratio(&eta),
                        n_mean: mean(&n),
                    }
                })
                .collect(),
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(ctx: &Context, args: &Args) -> anyhow::Result<Outcome> {
    require_inputs(&args.inputs, "input files")?;
    let keys: Vec<GroupKey> = args
        .group_by
        .iter()
        .map(|k| k.parse::<GroupKey>())
        .collect::<Result<_, _>>()
        .map_err(usage)?;

    let mut estimates = vec![];
    let mut fit_records: Vec<(String, FitRecord)> = vec![];
    let mut energy_loss = vec![];
    let mut failures = vec![];
    for path in &args.inputs {
        let name = display(path);
        let value: serde_json::Value = match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
        {
            Ok(v) => v,
            Err(error) => {
                failures.push(Failure { input: name, error });
                continue;
            }
        };
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("estimates") => match serde_json::from_value::<EstimatesFile>(value) {
                Ok(f) => estimates.extend(f.records.iter().filter_map(|r| r.to_estimate())),
                Err(e) => failures.push(Failure { input: name, error: e.to_string() }),
            },
            Some("fits") => match serde_json::from_value::<FitsFile>(value) {
                Ok(f) => {
                    energy_loss.extend(f.series.clone());
                    fit_records.extend(f.records.into_iter().map(|r| (f.model.clone(), r)));
                }
                Err(e) => failures.push(Failure { input: name, error: e.to_string() }),
            },
            other => failures.push(Failure {
                input: name,
                error: format!("unsupported input kind {other:?}; expected estimates or fits"),
            }),
        }
    }
    for f in &failures {
        eprintln!("failed {}: {}", f.input, f.error);
    }

    let modulus = if estimates.is_empty() { vec![] } else { modulus_sections(&estimates, &keys) };
    let fits = fit_sections(&fit_records);

    let mut mcsv = String::from("method,strain_point,sample,cycle_index,speed_mm_s,mean_E_kpa,std_E_kpa,error_ratio,count\n");
    for s in &modulus {
        println!("{} {}", s.method, s.strain_point.map(|p| format!("@{p}")).unwrap_or_default());
        for g in &s.groups {
            mcsv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.method,
                opt(s.strain_point),
                g.group.sample.clone().unwrap_or_default(),
                g.group.cycle_index.map(|c| c.to_string()).unwrap_or_default(),
                opt(g.group.speed_mm_s),
                g.mean_e_kpa,
                g.std_e_kpa,
                g.error_ratio,
                g.count
            ));
            println!(
                "  {:<24} cycle {:>3} speed {:>8}  E = {:>10.3} kPa ({:.1}%)  n={}",
                g.group.sample.as_deref().unwrap_or("-"),
                g.group.cycle_index.map(|c| c.to_string()).unwrap_or("-".into()),
                g.group.speed_mm_s.map(|v| format!("{v:.2}")).unwrap_or("-".into()),
                g.mean_e_kpa,
                g.error_ratio * 100.0,
                g.count
            );
        }
    }
    let mut scatter = String::from("model,sample,curve,K_pa,eta_pa_s,n,identifiable\n");
    for (model, r) in &fit_records {
        if let (Some(f), None) = (&r.fit, &r.error) {
            scatter.push_str(&format!(
                "{model},{},{},{},{},{},{}\n",
                r.provenance.sample, r.curve, f.k_pa, f.eta_pa_s, f.n, f.identifiable
            ));
        }
    }
    for s in &fits {
        println!("{}", s.model);
        for x in &s.samples {
            println!(
                "  {:<24} K = {:>12.1} Pa ({:.1}%)  eta = {:>12.1} Pa·s ({:.1}%)  n = {:.3}",
                x.sample,
                x.k_mean,
                x.k_error_ratio * 100.0,
                x.eta_pa_s_mean,
                x.eta_error_ratio * 100.0,
                x.n_mean
            );
        }
    }
    write_text(&ctx.out("modulus.csv"), &mcsv)?;
    write_text(&ctx.out("scatter.csv"), &scatter)?;
    let failed = failures.len();
    write_json(
        &ctx.out("report.json"),
        &Report { kind: "report", group_by: keys, modulus, fits, energy_loss, failures },
    )?;
    Ok(Outcome { failures: failed })
}
