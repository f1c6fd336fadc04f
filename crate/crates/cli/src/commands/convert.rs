use std::collections::HashMap;
use std::path::PathBuf;

use gripstiff::curve_io::write_curve;
use gripstiff::ingest::{load_raw_cycle, CycleManifest};
use gripstiff::pipeline::process_cycle;
use serde::Serialize;

use super::{require_inputs, stem_of, Context};
use crate::output::{display, write_json, RunLog};
use crate::{usage, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cycle manifest JSON files
    pub manifests: Vec<PathBuf>,
    /// Absolute contact force floor in N
    #[arg(long)]
    pub contact_floor: Option<f64>,
    /// Baseline standard deviations above the mean for contact
    #[arg(long)]
    pub contact_sigma: Option<f64>,
    /// Consecutive samples above threshold for contact
    #[arg(long)]
    pub contact_sustain: Option<usize>,
    /// Skip Savitzky-Golay smoothing
    #[arg(long)]
    pub no_smooth: bool,
}

#[derive(Debug, Serialize)]
struct Item {
    manifest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Summary {
    kind: &'static str,
    converted: usize,
    failed: usize,
    items: Vec<Item>,
}

pub fn run(ctx: &Context, args: &Args) -> anyhow::Result<Outcome> {
    require_inputs(&args.manifests, "manifests")?;
    let stems: Vec<String> = args.manifests.iter().map(|p| stem_of(p, &[".manifest.json", ".json"])).collect();
    let mut seen: HashMap<&str, &PathBuf> = HashMap::new();
    for (s, p) in stems.iter().zip(&args.manifests) {
        if let Some(prev) = seen.insert(s, p) {
            return Err(usage(format!(
                "{} and {} would both write {s}.curve.csv",
                prev.display(),
                p.display()
            )));
        }
    }
    let mut cfg = ctx.settings.pipeline;
    if let Some(v) = args.contact_floor {
        cfg.contact.floor_n = v;
    }
    if let Some(v) = args.contact_sigma {
        cfg.contact.sigma_k = v;
    }
    if let Some(v) = args.contact_sustain {
        cfg.contact.sustain = v;
    }
    if args.no_smooth {
        cfg.smoothing.enabled = false;
    }

    let jobs: Vec<(PathBuf, String)> = args.manifests.iter().cloned().zip(stems).collect();
    let items = ctx.par_map(&jobs, |(path, stem)| {
        let result = (|| -> anyhow::Result<(String, Vec<String>, usize)> {
            let manifest = CycleManifest::from_path(path)?;
            let raw = load_raw_cycle(&manifest)?;
            let processed = process_cycle(&raw, &cfg)?;
            let out = ctx.out(&format!("{stem}.curve.csv"));
            write_curve(&out, &processed.curve, Some(&processed.contact))?;
            Ok((display(&out), processed.curve.diagnostics.warnings.clone(), processed.curve.len()))
        })();
        match result {
            Ok((curve, warnings, n)) => Item {
                manifest: display(path),
                curve: Some(curve),
                error: None,
                warnings,
                samples: Some(n),
            },
            Err(e) => Item {
                manifest: display(path),
                curve: None,
                error: Some(format!("{e:#}")),
                warnings: vec![],
                samples: None,
            },
        }
    });

    let mut log = RunLog::new(ctx.out("convert.log"));
    for it in &items {
        match (&it.curve, &it.error) {
            (Some(c), _) => {
                log.line(format!("ok {} -> {c}", it.manifest));
                for w in &it.warnings {
                    log.line(format!("warning {}: {w}", it.manifest));
                    log::warn!("{}: {w}", it.manifest);
                }
                println!("converted {} -> {c}", it.manifest);
            }
            (None, Some(e)) => {
                log.line(format!("failed {}: {e}", it.manifest));
                eprintln!("failed {}: {e}", it.manifest);
            }
            _ => {}
        }
    }
    log.flush()?;
    let failed = items.iter().filter(|i| i.error.is_some()).count();
    let summary = Summary { kind: "convert", converted: items.len() - failed, failed, items };
    write_json(&ctx.out("convert_summary.json"), &summary)?;
    Ok(Outcome { failures: failed })
}
