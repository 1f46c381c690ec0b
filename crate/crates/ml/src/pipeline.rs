//! Training protocol: group-aware train/validation split, stability →
//! discriminative → redundancy filters, class balancing, then a grid over
//! (selector, subset size, classifier) scored on the validation split with
//! a frozen ROC-optimal threshold.

use std::collections::BTreeMap;
use std::path::Path;

use dosesim_core::rng::RngStream;
use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::balance_dataset;
use crate::classifier::{fit_classifier, Classifier, ClassifierKind, Hyperparams};
use crate::data::FeatureMatrix;
use crate::error::{MlError, Result};
use crate::filters::{discriminative_filter, feature_pvalues, redundancy_filter, stability_filter};
use crate::roc::{binary_metrics, optimal_threshold, roc_curve, BinaryMetrics};
use crate::scaler::Standardizer;
use crate::select::{lambda_path, lasso_select, mrmr_select, rf_importance_select, rfe_select, FittedSelector, Pca, SelectorKind};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub icc_threshold: f64,
    pub p_threshold: f64,
    pub rho_threshold: f64,
    pub subset_sizes: Vec<usize>,
    pub selectors: Vec<SelectorKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub hyperparams: Hyperparams,
    /// Fraction of subjects held out for model selection.
    pub validation_fraction: f64,
    pub cv_folds: usize,
    pub lasso_lambdas: Option<Vec<f64>>,
    /// Balance the fitting split with perturbed re-extractions.
    pub balance: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            icc_threshold: 0.75,
            p_threshold: 0.05,
            rho_threshold: 0.9,
            subset_sizes: vec![5, 10, 15, 20],
            selectors: SelectorKind::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            hyperparams: Hyperparams::default(),
            validation_fraction: 0.3,
            cv_folds: 5,
            lasso_lambdas: None,
            balance: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.icc_threshold) {
            return Err(MlError::Param("icc_threshold outside [0, 1]".into()));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold <= 1.0) {
            return Err(MlError::Param("p_threshold outside (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.rho_threshold) {
            return Err(MlError::Param("rho_threshold outside [0, 1]".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(MlError::Param("validation_fraction outside (0, 1)".into()));
        }
        if self.selectors.is_empty() || self.classifiers.is_empty() {
            return Err(MlError::Param("empty selector or classifier grid".into()));
        }
        if self.subset_sizes.iter().any(|&k| k == 0) {
            return Err(MlError::Param("subset sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub selector: SelectorKind,
    pub classifier: ClassifierKind,
    /// Requested subset size (LASSO: the size it chose).
    pub k: usize,
    pub threshold: f64,
    pub validation: BinaryMetrics,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorOutput {
    pub selector: SelectorKind,
    pub k: usize,
    /// Selected input features (for PCA: the features it projects).
    pub features: Vec<String>,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub stable: Vec<String>,
    pub discriminative: Vec<String>,
    pub non_redundant: Vec<String>,
    pub notes: Vec<String>,
    pub selector_outputs: Vec<SelectorOutput>,
    pub candidates: Vec<CandidateResult>,
    pub chosen: CandidateResult,
    pub n_fit: usize,
    pub n_validation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub selector: SelectorKind,
    pub classifier_kind: ClassifierKind,
    pub k: usize,
    /// Columns read from incoming feature tables, in this order.
    pub input_features: Vec<String>,
    /// Input columns kept by a column selector (all inputs for PCA).
    pub selected_features: Vec<String>,
    pub scaler: Standardizer,
    pub transform: FittedSelector,
    pub classifier: Classifier,
    pub threshold: f64,
}

impl TrainedModel {
    pub fn predict_proba(&self, fm: &FeatureMatrix) -> Result<Vec<f64>> {
        let x = fm.select_named(&self.input_features)?.x;
        let z = self.transform.transform(&self.scaler.transform(&x));
        Ok(self.classifier.predict_proba(&z))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string(self)?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.schema_version != MODEL_SCHEMA_VERSION {
            return Err(MlError::Param(format!("unsupported model schema {}", m.schema_version)));
        }
        Ok(m)
    }
}

/// Index of the best candidate: highest mean of the four metrics, then
/// higher AUC, then smaller k, then earlier position.
pub fn model_selection(results: &[CandidateResult]) -> Result<usize> {
    if results.is_empty() {
        return Err(MlError::Insufficient("empty model-selection grid".into()));
    }
    let better = |a: &CandidateResult, b: &CandidateResult| {
        const EPS: f64 = 1e-12;
        if (a.score - b.score).abs() > EPS {
            return a.score > b.score;
        }
        if (a.validation.auc - b.validation.auc).abs() > EPS {
            return a.validation.auc > b.validation.auc;
        }
        a.k < b.k
    };
    let mut best = 0;
    for i in 1..results.len() {
        if better(&results[i], &results[best]) {
            best = i;
        }
    }
    Ok(best)
}

/// Splits subjects (not rows) into (fit, validation) row indices,
/// stratified by whether a subject has any positive row.
pub fn split_by_group(fm: &FeatureMatrix, validation_fraction: f64, stream: RngStream) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut groups: BTreeMap<&str, u8> = BTreeMap::new();
    for (g, &l) in fm.groups.iter().zip(&fm.labels) {
        let e = groups.entry(g.as_str()).or_insert(0);
        *e = (*e).max(l);
    }
    let mut rng = stream.rng();
    let mut val_groups = Vec::new();
    for class in [0u8, 1] {
        let mut gs: Vec<&str> = groups.iter().filter(|(_, &l)| l == class).map(|(g, _)| *g).collect();
        if gs.len() < 2 {
            return Err(MlError::Insufficient(format!("need at least 2 subjects of class {class} to split")));
        }
        gs.shuffle(&mut rng);
        let n_val = ((gs.len() as f64 * validation_fraction).round() as usize).clamp(1, gs.len() - 1);
        val_groups.extend_from_slice(&gs[..n_val]);
    }
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for (i, g) in fm.groups.iter().enumerate() {
        if val_groups.contains(&g.as_str()) { val.push(i) } else { fit.push(i) }
    }
    Ok((fit, val))
}

struct Filtered {
    stable: Vec<String>,
    discriminative: Vec<String>,
    non_redundant: Vec<String>,
    notes: Vec<String>,
}

const MIN_FALLBACK_FEATURES: usize = 5;

fn run_filters(fit: &FeatureMatrix, perturbed: &[FeatureMatrix], cfg: &TrainConfig) -> Result<Filtered> {
    let mut notes = Vec::new();
    let mut stable = if perturbed.is_empty() {
        notes.push("no perturbed extractions: stability filter skipped".into());
        fit.names.clone()
    } else {
        stability_filter(fit, perturbed, cfg.icc_threshold)?
    };
    if stable.is_empty() {
        notes.push("no feature passed the stability filter: all features kept".into());
        stable = fit.names.clone();
    }
    let sfm = fit.select_named(&stable)?;
    let mut disc = discriminative_filter(&sfm, cfg.p_threshold)?;
    if disc.len() < MIN_FALLBACK_FEATURES.min(stable.len()) {
        notes.push(format!(
            "{} features passed the discriminative filter: using the {} lowest p-values",
            disc.len(),
            MIN_FALLBACK_FEATURES.min(stable.len())
        ));
        let p = feature_pvalues(&sfm)?;
        let mut order: Vec<usize> = (0..stable.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
        order.truncate(MIN_FALLBACK_FEATURES.min(stable.len()));
        order.sort_unstable();
        disc = order.into_iter().map(|j| (stable[j].clone(), p[j])).collect();
    }
    let discriminative: Vec<String> = disc.iter().map(|(n, _)| n.clone()).collect();
    let non_redundant = redundancy_filter(&sfm, &disc, cfg.rho_threshold)?;
    Ok(Filtered { stable, discriminative, non_redundant, notes })
}

fn fit_selector(kind: SelectorKind, k: usize, x: &nalgebra::DMatrix<f64>, y: &[u8], cfg: &TrainConfig, stream: RngStream) -> Result<FittedSelector> {
    Ok(match kind {
        SelectorKind::Lasso => {
            let lambdas = cfg.lasso_lambdas.clone().unwrap_or_else(|| lambda_path(x, y));
            let sel = lasso_select(x, y, &lambdas, cfg.cv_folds, stream)?;
            if sel.indices.is_empty() {
                return Err(MlError::Insufficient("LASSO selected no feature".into()));
            }
            FittedSelector::Columns { indices: sel.indices }
        }
        SelectorKind::Mrmr => FittedSelector::Columns { indices: mrmr_select(x, y, k)? },
        SelectorKind::Pca => FittedSelector::Pca(Pca::fit(x, k)?),
        SelectorKind::Rfe => FittedSelector::Columns { indices: rfe_select(x, y, k)? },
        SelectorKind::RfImportance => FittedSelector::Columns { indices: rf_importance_select(x, y, k, stream)?.0 },
    })
}

fn selected_names(sel: &FittedSelector, names: &[String]) -> Vec<String> {
    match sel {
        FittedSelector::Columns { indices } => indices.iter().map(|&j| names[j].clone()).collect(),
        FittedSelector::Pca(_) => names.to_vec(),
    }
}

fn clamp_threshold(t: f64) -> f64 {
    t.clamp(1e-9, 1.0 - 1e-9)
}

/// Runs the full protocol on `train` (with matching perturbed
/// re-extractions for stability and balancing).
pub fn train_model(train: &FeatureMatrix, perturbed: &[FeatureMatrix], cfg: &TrainConfig, seed: u64) -> Result<(TrainedModel, SelectionReport)> {
    cfg.validate()?;
    train.require_both_classes("training")?;
    let root = RngStream::new(seed);
    let (fit_idx, val_idx) = split_by_group(train, cfg.validation_fraction, root.substream("split", 0))?;
    let fit = train.select_rows(&fit_idx);
    let pert_fit: Vec<FeatureMatrix> = perturbed.iter().map(|p| p.select_rows(&fit_idx)).collect();
    let val = train.select_rows(&val_idx);
    val.require_both_classes("validation split")?;

    let filtered = run_filters(&fit, &pert_fit, cfg)?;
    let names = filtered.non_redundant.clone();
    info!(
        "filters: {} stable, {} discriminative, {} non-redundant of {}",
        filtered.stable.len(),
        filtered.discriminative.len(),
        names.len(),
        fit.n_features()
    );
    let fit_n = fit.select_named(&names)?;
    let balanced = if cfg.balance && !pert_fit.is_empty() {
        let aug: Vec<FeatureMatrix> = pert_fit.iter().map(|p| p.select_named(&names)).collect::<Result<_>>()?;
        balance_dataset(&fit_n, &aug, None, root.substream("balance", 0))?
    } else {
        fit_n
    };
    let scaler = Standardizer::fit(&balanced.x);
    let xs = scaler.transform(&balanced.x);
    let y = balanced.labels.clone();
    let xv = scaler.transform(&val.select_named(&names)?.x);

    let p = names.len();
    let mut jobs: Vec<(SelectorKind, usize)> = Vec::new();
    for &s in &cfg.selectors {
        if s.uses_k() {
            jobs.extend(cfg.subset_sizes.iter().filter(|&&k| k <= p).map(|&k| (s, k)));
        } else {
            jobs.push((s, 0));
        }
    }
    if jobs.is_empty() {
        return Err(MlError::Insufficient(format!("{p} features left: no subset size fits")));
    }
    type Fitted = (CandidateResult, FittedSelector, Classifier);
    let outcomes: Vec<(Option<SelectorOutput>, Vec<Fitted>)> = jobs
        .par_iter()
        .map(|&(sel, k)| {
            let key = format!("{}-{k}", sel.slug());
            let selector = match fit_selector(sel, k, &xs, &y, cfg, root.substream(&key, 0)) {
                Ok(s) => s,
                Err(e) => {
                    warn!("selector {key} skipped: {e}");
                    return (None, Vec::new());
                }
            };
            let output = SelectorOutput {
                selector: sel,
                k,
                features: selected_names(&selector, &names),
                output_dim: selector.output_dim(),
            };
            let zt = selector.transform(&xs);
            let zv = selector.transform(&xv);
            let k_eff = if sel.uses_k() { k } else { selector.output_dim() };
            let fitted = cfg.classifiers
                .iter()
                .filter_map(|&c| {
                    let stream = root.substream(&format!("{key}-{}", c.slug()), 0);
                    let model = fit_classifier(&zt, &y, c, &cfg.hyperparams, stream)
                        .map_err(|e| warn!("{key}/{} skipped: {e}", c.slug()))
                        .ok()?;
                    let scores = model.predict_proba(&zv);
                    let roc = roc_curve(&scores, &val.labels).ok()?;
                    let (t, _) = optimal_threshold(&roc).ok()?;
                    let threshold = clamp_threshold(t);
                    let m = binary_metrics(&scores, &val.labels, threshold).ok()?;
                    let r = CandidateResult { selector: sel, classifier: c, k: k_eff, threshold, validation: m, score: m.mean() };
                    Some((r, selector.clone(), model))
                })
                .collect();
            (Some(output), fitted)
        })
        .collect();
    let mut selector_outputs = Vec::new();
    let mut flat: Vec<Fitted> = Vec::new();
    for (o, f) in outcomes {
        selector_outputs.extend(o);
        flat.extend(f);
    }
    let results: Vec<CandidateResult> = flat.iter().map(|f| f.0.clone()).collect();
    let best = model_selection(&results)?;
    let (chosen, transform, classifier) = flat.swap_remove(best);
    let selected_features = selected_names(&transform, &names);
    let model = TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        selector: chosen.selector,
        classifier_kind: chosen.classifier,
        k: chosen.k,
        input_features: names,
        selected_features,
        scaler,
        transform,
        classifier,
        threshold: chosen.threshold,
    };
    let report = SelectionReport {
        schema_version: MODEL_SCHEMA_VERSION,
        stable: filtered.stable,
        discriminative: filtered.discriminative,
        non_redundant: filtered.non_redundant,
        notes: filtered.notes,
        selector_outputs,
        candidates: results,
        chosen,
        n_fit: balanced.n_samples(),
        n_validation: val.n_samples(),
    };
    Ok((model, report))
}
