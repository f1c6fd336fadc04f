//! Aggregation of modulus estimates and Welch's t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::PipelineError;
use crate::model::{ModulusEstimate, ModulusMethod};
use crate::regression::{mean, population_std, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Sample,
    Cycle,
    Speed,
    Method,
    StrainPoint,
}

impl std::str::FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sample" => Ok(GroupKey::Sample),
            "cycle" | "cycle_index" => Ok(GroupKey::Cycle),
            "speed" => Ok(GroupKey::Speed),
            "method" => Ok(GroupKey::Method),
            "strain_point" | "point" => Ok(GroupKey::StrainPoint),
            other => Err(format!("unknown group key '{other}'")),
        }
    }
}

/// Values of the grouping keys for one group; unset keys are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupLabel {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_index: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_mm_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<ModulusMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strain_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub group: GroupLabel,
    pub mean_e_kpa: f64,
    pub std_e_kpa: f64,
    /// Population standard deviation over the absolute mean.
    pub error_ratio: f64,
    pub count: usize,
}

fn label_of(e: &ModulusEstimate, keys: &[GroupKey]) -> GroupLabel {
    let mut g = GroupLabel::default();
    for k in keys {
        match k {
            GroupKey::Sample => g.sample = Some(e.sample.clone()),
            GroupKey::Cycle => g.cycle_index = Some(e.cycle_index),
            GroupKey::Speed => g.speed_mm_s = e.speed_mm_s,
            GroupKey::Method => g.method = Some(e.method),
            GroupKey::StrainPoint => g.strain_point = e.strain_point,
        }
    }
    g
}

/// Groups estimates by the given keys (first-appearance order) and reports
/// mean, population std and error ratio per group.
pub fn aggregate_estimates(estimates: &[ModulusEstimate], group_by: &[GroupKey]) -> Result<Vec<AggregateReport>, PipelineError> {
    if estimates.is_empty() {
        return Err(PipelineError::InsufficientData("no estimates to aggregate".into()));
    }
    let mut groups: Vec<(GroupLabel, Vec<f64>)> = Vec::new();
    for e in estimates {
        let label = label_of(e, group_by);
        match groups.iter_mut().find(|(g, _)| *g == label) {
            Some((_, v)) => v.push(e.e_kpa),
            None => groups.push((label, vec![e.e_kpa])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, v)| {
            let m = mean(&v);
            let s = population_std(&v);
            let error_ratio = if s == 0.0 { 0.0 } else { s / m.abs() };
            AggregateReport { group, mean_e_kpa: m, std_e_kpa: s, error_ratio, count: v.len() }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// Two-sided Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, PipelineError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(PipelineError::InsufficientData(format!(
            "each group needs 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            WelchResult { t: 0.0, p: 1.0, df: f64::NAN }
        } else {
            WelchResult { t: (ma - mb).signum() * f64::INFINITY, p: 0.0, df: f64::NAN }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| PipelineError::Parameter(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(WelchResult { t, p, df })
}
