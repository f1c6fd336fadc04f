use std::path::PathBuf;

use gripstiff::curve_io::read_curve;
use gripstiff::model::{EnergyLossSeries, Provenance, ViscoelasticFit};
use gripstiff::visco::{eta_from_speeds, fit_hunt_crossley_traced, fit_kelvin_voigt_with, loop_point, LoopPoint, VisError};
use serde::{Deserialize, Serialize};

use super::{require_inputs, Context};
use crate::output::{display, write_json};
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitModel {
    Kv,
    Hc,
    Loop,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Processed curve CSV files
    pub curves: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub model: FitModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    pub curve: String,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<ViscoelasticFit>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_point: Option<LoopPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub sample: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<EnergyLossSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitSummary {
    pub total: usize,
    pub fitted: usize,
    pub identifiable: usize,
    pub not_identifiable: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitsFile {
    pub kind: String,
    pub model: String,
    pub records: Vec<FitRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesRecord>,
    #[serde(default)]
    pub summary: FitSummary,
}

fn fit_one(ctx: &Context, model: FitModel, path: &PathBuf) -> FitRecord {
    let curve_name = display(path);
    let mut rec = FitRecord { curve: curve_name, provenance: Provenance::default(), fit: None, loop_point: None, error: None };
    let curve = match read_curve(path) {
        Ok((c, _)) => c,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.provenance = curve.provenance.clone();
    match model {
        FitModel::Kv => match fit_kelvin_voigt_with(&curve, ctx.settings.kv_eps_min) {
            Ok(f) => rec.fit = Some(f),
            Err(e) => rec.error = Some(e.to_string()),
        },
        FitModel::Hc => match fit_hunt_crossley_traced(&curve, &ctx.settings.hunt_crossley) {
            Ok((f, _)) => rec.fit = Some(f),
            Err(VisError::Convergence { best, iterations }) => {
                rec.error = Some(format!("no convergence after {iterations} iterations"));
                rec.fit = Some(*best);
            }
            Err(e) => rec.error = Some(e.to_string()),
        },
        FitModel::Loop => match loop_point(&curve) {
            Ok(p) => rec.loop_point = Some(p),
            Err(e) => rec.error = Some(e.to_string()),
        },
    }
    rec
}

fn loop_series(records: &[FitRecord]) -> Vec<SeriesRecord> {
    let mut by_sample: Vec<(String, Vec<LoopPoint>)> = vec![];
    for r in records {
        let Some(p) = r.loop_point else { continue };
        match by_sample.iter_mut().find(|(s, _)| *s == r.provenance.sample) {
            Some((_, v)) => v.push(p),
            None => by_sample.push((r.provenance.sample.clone(), vec![p])),
        }
    }
    by_sample
        .into_iter()
        .map(|(sample, pts)| match eta_from_speeds(&pts) {
            Ok(s) => SeriesRecord { sample, series: Some(s), error: None },
            Err(e) => SeriesRecord { sample, series: None, error: Some(e.to_string()) },
        })
        .collect()
}

pub fn run(ctx: &Context, args: &Args) -> anyhow::Result<Outcome> {
    require_inputs(&args.curves, "curve files")?;
    let records = ctx.par_map(&args.curves, |p| fit_one(ctx, args.model, p));
    let series = if args.model == FitModel::Loop { loop_series(&records) } else { vec![] };

    let mut summary = FitSummary { total: records.len(), ..FitSummary::default() };
    for r in &records {
        if r.error.is_some() {
            summary.failed += 1;
            eprintln!("failed {}: {}", r.curve, r.error.as_deref().unwrap_or(""));
            continue;
        }
        summary.fitted += 1;
        if let Some(f) = &r.fit {
            if f.identifiable {
                summary.identifiable += 1;
            } else {
                summary.not_identifiable += 1;
            }
            println!(
                "{:<32} K = {:>12.1} Pa  eta = {:>12.1} Pa·s  n = {:>6.3}  r2 = {:.4}{}",
                r.curve,
                f.k_pa,
                f.eta_pa_s,
                f.n,
                f.r2,
                if f.identifiable { "" } else { "  (eta not identifiable)" }
            );
        }
        if let Some(p) = &r.loop_point {
            println!("{:<32} loop = {:.3} Pa at mean rate {:.4} 1/s", r.curve, p.loop_energy_pa, p.mean_strain_rate);
        }
    }
    let series_failed = series.iter().filter(|s| s.error.is_some()).count();
    for s in &series {
        match (&s.series, &s.error) {
            (Some(e), _) => println!("{:<32} eta_loss = {:.1} Pa·s (r2 {:.4})", s.sample, e.eta_loss_pa_s, e.r2),
            (None, Some(err)) => eprintln!("failed series {}: {err}", s.sample),
            _ => {}
        }
    }
    println!(
        "{} fitted, {} failed, {} identifiable, {} not identifiable",
        summary.fitted, summary.failed, summary.identifiable, summary.not_identifiable
    );
    let model = match args.model {
        FitModel::Kv => "kelvin_voigt",
        FitModel::Hc => "hunt_crossley",
        FitModel::Loop => "loop",
    };
    let failures = summary.failed + series_failed;
    write_json(
        &ctx.out("fits.json"),
        &FitsFile { kind: "fits".into(), model: model.into(), records, series, summary },
    )?;
    Ok(Outcome { failures })
}
