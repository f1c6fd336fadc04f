use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use rayon::prelude::*;

use crate::settings::Settings;
use crate::{usage, Cli};

pub mod classify;
pub mod convert;
pub mod estimate;
pub mod fit;
pub mod report;
pub mod synth;

pub struct Context {
    pub out_dir: PathBuf,
    pub settings: Settings,
    pub seed: u64,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(cli: &Cli, settings: Settings) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&cli.out_dir)
            .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
        log::debug!("batch pool with {} threads", pool.current_num_threads());
        Ok(Self {
            out_dir: cli.out_dir.clone(),
            settings,
            seed: cli.seed,
            pool,
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Maps `f` over `items` on the batch pool, keeping input order.
    pub fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

pub fn require_inputs(paths: &[PathBuf], what: &str) -> anyhow::Result<()> {
    if paths.is_empty() {
        return Err(usage(format!("no {what} given")));
    }
    let mut seen = HashSet::new();
    for p in paths {
        if !seen.insert(p) {
            return Err(usage(format!("{} given twice", p.display())));
        }
    }
    Ok(())
}

/// File name with any of `suffixes` (tried in order) removed.
pub fn stem_of(path: &Path, suffixes: &[&str]) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for s in suffixes {
        if let Some(stem) = name.strip_suffix(s) {
            return stem.to_string();
        }
    }
    name
}
