use std::path::PathBuf;

use anyhow::Context as _;
use gripstiff::classify::{classify, ClassConfig, SortDecision};
use serde::{Deserialize, Serialize};

use super::fit::FitsFile;
use super::{require_inputs, Context};
use crate::output::{display, write_json};
use crate::{usage, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// fits.json files produced by `fit`
    pub fits: Vec<PathBuf>,
    /// Class configuration JSON; the shipped waste-sorting classes when omitted
    #[arg(long)]
    pub classes: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub curve: String,
    pub sample: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<SortDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refused: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionsFile {
    pub kind: String,
    pub decisions: Vec<DecisionRecord>,
    pub counts: Vec<ClassCount>,
    pub refused: usize,
}

pub fn run(ctx: &Context, args: &Args) -> anyhow::Result<Outcome> {
    require_inputs(&args.fits, "fits files")?;
    let config = match &args.classes {
        None => ClassConfig::default_waste_sorting(),
        Some(p) if !p.exists() => return Err(usage(format!("class config {} not found", p.display()))),
        Some(p) => ClassConfig::from_path(p).map_err(|e| usage(e.to_string()))?,
    };
    let mut decisions = vec![];
    for path in &args.fits {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", display(path)))?;
        let file: FitsFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not a fits file", display(path)))?;
        for r in file.records {
            let sample = r.provenance.sample.clone();
            let mut rec = DecisionRecord { curve: r.curve.clone(), sample: sample.clone(), decision: None, refused: None };
            match (&r.fit, &r.error) {
                (Some(f), None) => match classify(f, &config) {
                    Ok(mut d) => {
                        d.sample = Some(sample);
                        rec.decision = Some(d);
                    }
                    Err(e) => {
                        log::warn!("{}: refused: {e}", rec.curve);
                        rec.refused = Some(e.to_string());
                    }
                },
                (_, Some(e)) => rec.refused = Some(format!("fit failed: {e}")),
                (None, None) => rec.refused = Some("record carries no viscoelastic fit".into()),
            }
            decisions.push(rec);
        }
    }
    let counts: Vec<ClassCount> = config
        .classes()
        .iter()
        .map(|c| ClassCount {
            class: c.label.clone(),
            count: decisions
                .iter()
                .filter(|d| d.decision.as_ref().is_some_and(|x| x.class == c.label))
                .count(),
        })
        .collect();
    for d in &decisions {
        match (&d.decision, &d.refused) {
            (Some(x), _) => println!("{:<32} {:<24} {}", d.curve, x.class, x.matched_by.join("+")),
            (None, Some(why)) => eprintln!("refused {}: {why}", d.curve),
            _ => {}
        }
    }
    for c in &counts {
        println!("{:>4}  {}", c.count, c.class);
    }
    let refused = decisions.iter().filter(|d| d.refused.is_some()).count();
    write_json(
        &ctx.out("decisions.json"),
        &DecisionsFile { kind: "decisions".into(), decisions, counts, refused },
    )?;
    Ok(Outcome { failures: refused })
}
