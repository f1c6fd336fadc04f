//! Material classes over (K, eta, n) and threshold derivation from labelled
//! fits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ViscoelasticFit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("class configuration: {0}")]
    Config(String),
    #[error("classes are not separable in K: {}", .0.iter().map(|(a, b)| format!("{a} / {b}")).collect::<Vec<_>>().join(", "))]
    Separability(Vec<(String, String)>),
    #[error("fit is not identifiable but the configuration has eta rules")]
    NotIdentifiable,
    #[error("{0}")]
    Input(String),
}

/// A material class. Ranges are half-open `[min, max)`; a missing bound is
/// unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialClass {
    pub label: String,
    pub k_min_pa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max_pa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_min_pa_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_max_pa_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<f64>,
    pub priority: i32,
    /// Assigned when no class matches.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

fn in_range(v: f64, lo: Option<f64>, hi: Option<f64>) -> bool {
    lo.map_or(true, |l| v >= l) && hi.map_or(true, |h| v < h)
}

fn ranges_overlap(a: (Option<f64>, Option<f64>), b: (Option<f64>, Option<f64>)) -> bool {
    let lo = match (a.0, b.0) {
        (Some(x), Some(y)) => x.max(y),
        (x, y) => x.or(y).unwrap_or(f64::NEG_INFINITY),
    };
    let hi = match (a.1, b.1) {
        (Some(x), Some(y)) => x.min(y),
        (x, y) => x.or(y).unwrap_or(f64::INFINITY),
    };
    lo < hi
}

impl MaterialClass {
    pub fn has_eta_rule(&self) -> bool {
        self.eta_min_pa_s.is_some() || self.eta_max_pa_s.is_some()
    }

    fn has_n_rule(&self) -> bool {
        self.n_min.is_some() || self.n_max.is_some()
    }

    /// Names of the rules that pass, or `None` if any rule fails.
    fn matches(&self, fit: &ViscoelasticFit) -> Option<Vec<String>> {
        let mut fired = vec![];
        if !in_range(fit.k_pa, Some(self.k_min_pa), self.k_max_pa) {
            return None;
        }
        fired.push("k_range".to_string());
        if self.has_eta_rule() {
            if !in_range(fit.eta_pa_s, self.eta_min_pa_s, self.eta_max_pa_s) {
                return None;
            }
            fired.push("eta_rule".into());
        }
        if self.has_n_rule() {
            if !in_range(fit.n, self.n_min, self.n_max) {
                return None;
            }
            fired.push("n_rule".into());
        }
        Some(fired)
    }

    fn overlaps(&self, other: &MaterialClass) -> bool {
        ranges_overlap((Some(self.k_min_pa), self.k_max_pa), (Some(other.k_min_pa), other.k_max_pa))
            && ranges_overlap((self.eta_min_pa_s, self.eta_max_pa_s), (other.eta_min_pa_s, other.eta_max_pa_s))
            && ranges_overlap((self.n_min, self.n_max), (other.n_min, other.n_max))
    }
}

/// A validated list of classes with exactly one fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MaterialClass>", into = "Vec<MaterialClass>")]
pub struct ClassConfig {
    classes: Vec<MaterialClass>,
}

impl TryFrom<Vec<MaterialClass>> for ClassConfig {
    type Error = ClassifyError;

    fn try_from(classes: Vec<MaterialClass>) -> Result<Self, Self::Error> {
        ClassConfig::new(classes)
    }
}

impl From<ClassConfig> for Vec<MaterialClass> {
    fn from(c: ClassConfig) -> Self {
        c.classes
    }
}

const DEFAULT_WASTE_SORTING: &str = include_str!("../data/classes/waste_sorting.json");

impl ClassConfig {
    pub fn new(classes: Vec<MaterialClass>) -> Result<Self, ClassifyError> {
        if classes.is_empty() {
            return Err(ClassifyError::Config("no classes configured".into()));
        }
        let fallbacks = classes.iter().filter(|c| c.fallback).count();
        if fallbacks != 1 {
            return Err(ClassifyError::Config(format!("exactly one fallback class required, found {fallbacks}")));
        }
        for c in &classes {
            if c.label.trim().is_empty() {
                return Err(ClassifyError::Config("class with empty label".into()));
            }
            if let Some(hi) = c.k_max_pa {
                if !(c.k_min_pa < hi) {
                    return Err(ClassifyError::Config(format!(
                        "{}: k_min_pa {} must be below k_max_pa {hi}",
                        c.label, c.k_min_pa
                    )));
                }
            }
            for (name, lo, hi) in [("eta", c.eta_min_pa_s, c.eta_max_pa_s), ("n", c.n_min, c.n_max)] {
                if let (Some(l), Some(h)) = (lo, hi) {
                    if !(l < h) {
                        return Err(ClassifyError::Config(format!("{}: empty {name} range [{l}, {h})", c.label)));
                    }
                }
            }
        }
        for (i, a) in classes.iter().enumerate() {
            for b in &classes[i + 1..] {
                if a.label == b.label {
                    return Err(ClassifyError::Config(format!("duplicate class label '{}'", a.label)));
                }
                if a.priority == b.priority && a.overlaps(b) {
                    return Err(ClassifyError::Config(format!(
                        "'{}' and '{}' overlap at equal priority {}",
                        a.label, b.label, a.priority
                    )));
                }
            }
        }
        let mut classes = classes;
        classes.sort_by_key(|c| c.priority);
        Ok(Self { classes })
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let classes: Vec<MaterialClass> =
            serde_json::from_str(text).map_err(|e| ClassifyError::Config(format!("invalid class JSON: {e}")))?;
        Self::new(classes)
    }

    pub fn from_path(path: &Path) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClassifyError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            ClassifyError::Config(m) => ClassifyError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The shipped waste-sorting configuration.
    pub fn default_waste_sorting() -> Self {
        Self::from_json(DEFAULT_WASTE_SORTING).expect("shipped class config is valid")
    }

    /// Classes in evaluation order.
    pub fn classes(&self) -> &[MaterialClass] {
        &self.classes
    }

    pub fn fallback(&self) -> &MaterialClass {
        self.classes.iter().find(|c| c.fallback).expect("validated")
    }

    pub fn has_eta_rules(&self) -> bool {
        self.classes.iter().any(MaterialClass::has_eta_rule)
    }

    /// Multiplies every K bound by `c`.
    pub fn scaled_k(&self, c: f64) -> Self {
        let mut out = self.clone();
        for cl in &mut out.classes {
            cl.k_min_pa *= c;
            cl.k_max_pa = cl.k_max_pa.map(|v| v * c);
        }
        out
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.classes).expect("serializable")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortDecision {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<String>,
    pub class: String,
    pub matched_by: Vec<String>,
    #[serde(rename = "K_pa")]
    pub k_pa: f64,
    pub eta_pa_s: f64,
    pub n: f64,
    pub identifiable: bool,
}

/// Assigns the first class, in priority order, whose rules all pass; the
/// fallback class otherwise.
pub fn classify(fit: &ViscoelasticFit, config: &ClassConfig) -> Result<SortDecision, ClassifyError> {
    if !fit.identifiable && config.has_eta_rules() {
        return Err(ClassifyError::NotIdentifiable);
    }
    let (class, matched_by) = config
        .classes
        .iter()
        .find_map(|c| c.matches(fit).map(|m| (c, m)))
        .unwrap_or_else(|| (config.fallback(), vec!["fallback".into()]));
    Ok(SortDecision {
        sample: None,
        class: class.label.clone(),
        matched_by,
        k_pa: fit.k_pa,
        eta_pa_s: fit.eta_pa_s,
        n: fit.n,
        identifiable: fit.identifiable,
    })
}

struct Group {
    label: String,
    k_lo: f64,
    k_hi: f64,
    eta_lo: f64,
    eta_hi: f64,
}

fn geometric_mid(a: f64, b: f64) -> f64 {
    (a * b).sqrt()
}

const ETA_SPLIT_FACTOR: f64 = 0.2;

/// Builds K intervals from labelled fits: boundaries sit at the geometric
/// midpoint between the stiffest fit of one class and the softest of the
/// next. The top class extends above its stiffest fit by the same ratio its
/// softest fit sits above the lower boundary; beyond that lies the fallback
/// class `fallback_label`.
pub fn derive_thresholds(labeled: &[(String, ViscoelasticFit)], fallback_label: &str) -> Result<ClassConfig, ClassifyError> {
    let mut groups: Vec<Group> = Vec::new();
    for (label, fit) in labeled {
        if !(fit.k_pa > 0.0) {
            return Err(ClassifyError::Input(format!("{label}: K must be > 0, got {}", fit.k_pa)));
        }
        match groups.iter_mut().find(|g| &g.label == label) {
            Some(g) => {
                g.k_lo = g.k_lo.min(fit.k_pa);
                g.k_hi = g.k_hi.max(fit.k_pa);
                g.eta_lo = g.eta_lo.min(fit.eta_pa_s);
                g.eta_hi = g.eta_hi.max(fit.eta_pa_s);
            }
            None => groups.push(Group {
                label: label.clone(),
                k_lo: fit.k_pa,
                k_hi: fit.k_pa,
                eta_lo: fit.eta_pa_s,
                eta_hi: fit.eta_pa_s,
            }),
        }
    }
    if groups.len() < 2 {
        return Err(ClassifyError::Input(format!("need at least 2 classes, got {}", groups.len())));
    }
    if groups.iter().any(|g| g.label == fallback_label) {
        return Err(ClassifyError::Input(format!("fallback label '{fallback_label}' is also a class label")));
    }
    let mut overlapping = vec![];
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if a.k_lo <= b.k_hi && b.k_lo <= a.k_hi {
                overlapping.push((a.label.clone(), b.label.clone()));
            }
        }
    }
    if !overlapping.is_empty() {
        return Err(ClassifyError::Separability(overlapping));
    }
    groups.sort_by(|a, b| a.k_lo.total_cmp(&b.k_lo));

    let bounds: Vec<f64> = groups.windows(2).map(|w| geometric_mid(w[0].k_hi, w[1].k_lo)).collect();
    let top = groups.last().unwrap();
    let top_upper = top.k_hi * (top.k_lo / bounds[bounds.len() - 1]);

    let mut classes = Vec::with_capacity(groups.len() + 1);
    for (i, g) in groups.iter().enumerate() {
        let others_min_eta = groups
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| o.eta_lo)
            .fold(f64::INFINITY, f64::min);
        let eta_max = (g.eta_hi < ETA_SPLIT_FACTOR * others_min_eta)
            .then(|| geometric_mid(g.eta_hi.max(f64::MIN_POSITIVE), others_min_eta));
        classes.push(MaterialClass {
            label: g.label.clone(),
            k_min_pa: if i == 0 { 0.0 } else { bounds[i - 1] },
            k_max_pa: Some(if i + 1 < groups.len() { bounds[i] } else { top_upper }),
            eta_min_pa_s: None,
            eta_max_pa_s: eta_max,
            n_min: None,
            n_max: None,
            priority: i as i32,
            fallback: false,
        });
    }
    classes.push(MaterialClass {
        label: fallback_label.to_string(),
        k_min_pa: top_upper,
        k_max_pa: None,
        eta_min_pa_s: None,
        eta_max_pa_s: None,
        n_min: None,
        n_max: None,
        priority: groups.len() as i32,
        fallback: true,
    });
    ClassConfig::new(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constitutive;

    fn fit(k: f64, eta: f64, n: f64) -> ViscoelasticFit {
        ViscoelasticFit::from_params(Constitutive::HuntCrossley { k, eta, n })
    }

    #[test]
    fn default_config_examples() {
        let cfg = ClassConfig::default_waste_sorting();
        assert_eq!(classify(&fit(15569.0, 26466.0, 0.46), &cfg).unwrap().class, "Paper and Cardboard");
        assert_eq!(classify(&fit(19898.0, 1979.0, 5.4), &cfg).unwrap().class, "PET and Plastic");
        let d = classify(&fit(1e12, 5.0, 1.0), &cfg).unwrap();
        assert_eq!(d.class, "Too Stiff");
    }

    #[test]
    fn fallback_when_nothing_matches() {
        let classes = vec![
            MaterialClass { label: "a".into(), k_min_pa: 10.0, k_max_pa: Some(20.0), eta_min_pa_s: None, eta_max_pa_s: None, n_min: None, n_max: None, priority: 0, fallback: false },
            MaterialClass { label: "unknown".into(), k_min_pa: 1e9, k_max_pa: None, eta_min_pa_s: None, eta_max_pa_s: None, n_min: None, n_max: None, priority: 1, fallback: true },
        ];
        let cfg = ClassConfig::new(classes).unwrap();
        let d = classify(&fit(5.0, 0.0, 1.0), &cfg).unwrap();
        assert_eq!(d.class, "unknown");
        assert_eq!(d.matched_by, vec!["fallback"]);
    }

    #[test]
    fn config_requires_fallback() {
        let text = r#"[{"label":"a","k_min_pa":0,"k_max_pa":10,"priority":0}]"#;
        assert!(matches!(ClassConfig::from_json(text), Err(ClassifyError::Config(_))));
    }

    #[test]
    fn equal_priority_overlap_rejected() {
        let text = r#"[{"label":"a","k_min_pa":0,"k_max_pa":10,"priority":0},
                       {"label":"b","k_min_pa":5,"k_max_pa":20,"priority":0},
                       {"label":"z","k_min_pa":20,"priority":1,"fallback":true}]"#;
        assert!(ClassConfig::from_json(text).is_err());
        let ok = text.replace(r#""k_min_pa":5"#, r#""k_min_pa":10"#);
        assert!(ClassConfig::from_json(&ok).is_ok());
    }

    #[test]
    fn eta_rules_need_identifiable_fit() {
        let text = r#"[{"label":"plastic","k_min_pa":0,"k_max_pa":10,"eta_max_pa_s":100,"priority":0},
                       {"label":"z","k_min_pa":10,"priority":1,"fallback":true}]"#;
        let cfg = ClassConfig::from_json(text).unwrap();
        let mut f = fit(5.0, 50.0, 1.0);
        assert_eq!(classify(&f, &cfg).unwrap().matched_by, vec!["k_range", "eta_rule"]);
        f.identifiable = false;
        assert_eq!(classify(&f, &cfg), Err(ClassifyError::NotIdentifiable));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ClassConfig::default_waste_sorting();
        assert_eq!(ClassConfig::from_json(&cfg.to_json_pretty()).unwrap(), cfg);
    }

    #[test]
    fn derive_needs_two_classes() {
        let l = vec![("a".to_string(), fit(1.0, 1.0, 1.0))];
        assert!(matches!(derive_thresholds(&l, "other"), Err(ClassifyError::Input(_))));
    }

    #[test]
    fn derive_rejects_interleaved() {
        let l = vec![
            ("a".to_string(), fit(10.0, 1.0, 1.0)),
            ("b".to_string(), fit(15.0, 1.0, 1.0)),
            ("a".to_string(), fit(20.0, 1.0, 1.0)),
        ];
        match derive_thresholds(&l, "other") {
            Err(ClassifyError::Separability(p)) => assert_eq!(p, vec![("a".to_string(), "b".to_string())]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derive_eta_split() {
        let l = vec![
            ("soft".to_string(), fit(10.0, 5000.0, 1.0)),
            ("plastic".to_string(), fit(40.0, 100.0, 1.0)),
            ("metal".to_string(), fit(90.0, 8000.0, 1.0)),
        ];
        let cfg = derive_thresholds(&l, "other").unwrap();
        let plastic = cfg.classes().iter().find(|c| c.label == "plastic").unwrap();
        assert!((plastic.eta_max_pa_s.unwrap() - (100.0f64 * 5000.0).sqrt()).abs() < 1e-9);
        assert!(cfg.classes().iter().filter(|c| c.label != "plastic").all(|c| c.eta_max_pa_s.is_none()));
        assert!((cfg.classes()[1].k_min_pa - 20.0).abs() < 1e-12);
    }
}
