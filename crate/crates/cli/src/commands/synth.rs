use std::path::PathBuf;

use gripstiff::device::{DeviceProfile, SampleSpec};
use gripstiff::ingest::{write_cycle_csv, CycleManifest, SpeedSetting};
use gripstiff::model::Constitutive;
use gripstiff::synth::{synthesize_cycle, TriangularProfile};
use serde::Serialize;

use super::Context;
use crate::output::write_json;
use crate::{usage, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthModel {
    Kv,
    Hc,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    pub model: SynthModel,
    /// Stiffness K in Pa
    #[arg(long)]
    pub k: f64,
    /// Damping eta in Pa·s
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Hunt-Crossley exponent
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    #[arg(long, default_value_t = 0.5)]
    pub strain_max: f64,
    /// Strain rate magnitude in 1/s
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Relative Gaussian stress noise
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Base name of the generated files
    #[arg(long, default_value = "synthetic")]
    pub name: String,
    /// Object width across the jaws in mm
    #[arg(long, default_value_t = 50.0)]
    pub width_mm: f64,
    /// Side of the square contact face in mm
    #[arg(long, default_value_t = 100.0)]
    pub face_mm: f64,
    /// Zero-force samples recorded before contact
    #[arg(long, default_value_t = 20)]
    pub baseline: usize,
    #[arg(long, default_value_t = 1)]
    pub cycle_index: u32,
}

#[derive(Debug, Serialize)]
struct Truth {
    model: &'static str,
    #[serde(rename = "K_pa")]
    k_pa: f64,
    eta_pa_s: f64,
    n: f64,
    strain_max: f64,
    strain_rate: f64,
    samples_per_phase: usize,
    noise_rel: f64,
    seed: u64,
    contact_index: usize,
}

pub fn run(ctx: &Context, a: &Args) -> anyhow::Result<Outcome> {
    let profile = TriangularProfile::new(a.strain_max, a.rate, a.samples);
    profile.validate().map_err(|e| usage(e.to_string()))?;
    if !(a.noise >= 0.0 && a.width_mm > 0.0 && a.face_mm > 0.0) {
        return Err(usage("noise must be >= 0 and geometry > 0"));
    }
    if a.baseline < gripstiff::pipeline::MIN_BASELINE {
        return Err(usage(format!("baseline must be at least {} samples", gripstiff::pipeline::MIN_BASELINE)));
    }
    if a.name.is_empty() || a.name.contains(['/', '\\']) {
        return Err(usage("name must be a plain file name"));
    }
    let model = match a.model {
        SynthModel::Kv => Constitutive::KelvinVoigt { k: a.k, eta: a.eta },
        SynthModel::Hc => Constitutive::HuntCrossley { k: a.k, eta: a.eta, n: a.n },
    };
    model.validate().map_err(|e| usage(e.to_string()))?;
    let cycle = synthesize_cycle(&model, &profile, a.noise, ctx.seed).map_err(|e| usage(e.to_string()))?;

    let w = a.width_mm;
    let area = a.face_mm * a.face_mm;
    let dt = cycle.t[1] - cycle.t[0];
    let dpos = w * (cycle.strain[1] - cycle.strain[0]);
    let (mut t, mut pos, mut force) = (vec![], vec![], vec![]);
    for j in 0..a.baseline {
        t.push(j as f64 * dt);
        pos.push(w + (a.baseline - j) as f64 * dpos);
        force.push(0.0);
    }
    let t0 = a.baseline as f64 * dt;
    for i in 0..cycle.t.len() {
        t.push(t0 + cycle.t[i]);
        pos.push(w * (1.0 - cycle.strain[i]));
        force.push(cycle.stress_pa[i] * area * 1e-6);
    }
    let t_end = *t.last().unwrap();
    for j in 1..=a.baseline / 2 {
        t.push(t_end + j as f64 * dt);
        pos.push(w + j as f64 * dpos);
        force.push(0.0);
    }

    let base = &a.name;
    let csv = format!("{base}.csv");
    let device_file = format!("{base}.device.json");
    let sample_file = format!("{base}.sample.json");
    let device = DeviceProfile::identity("synthetic", area, 2.0 * w + a.baseline as f64 * dpos);
    let sample = SampleSpec::block(base, a.face_mm, a.face_mm, w);
    write_cycle_csv(&ctx.out(&csv), &t, &pos, &force)?;
    write_json(&ctx.out(&device_file), &device)?;
    write_json(&ctx.out(&sample_file), &sample)?;
    let manifest = CycleManifest {
        device_profile_path: PathBuf::from(&device_file),
        sample_spec_path: PathBuf::from(&sample_file),
        speed_setting: SpeedSetting::mm_per_s(a.rate * w),
        cycle_index: a.cycle_index,
        csv_path: PathBuf::from(&csv),
        source: None,
    };
    write_json(&ctx.out(&format!("{base}.manifest.json")), &manifest)?;
    write_json(
        &ctx.out(&format!("{base}.truth.json")),
        &Truth {
            model: model.kind().as_str(),
            k_pa: a.k,
            eta_pa_s: a.eta,
            n: model.n(),
            strain_max: a.strain_max,
            strain_rate: a.rate,
            samples_per_phase: a.samples,
            noise_rel: a.noise,
            seed: ctx.seed,
            contact_index: a.baseline,
        },
    )?;
    println!("wrote {} ({} samples)", ctx.out(&format!("{base}.manifest.json")).display(), t.len());
    Ok(Outcome { failures: 0 })
}
