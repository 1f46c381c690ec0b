//! Test-set scoring with the frozen model and threshold, with bootstrap CIs.

use std::path::Path;

use dosesim_ml::{bootstrap_metrics, BootstrapConfig, BootstrapResult, ClassifierKind, SelectorKind, TrainedModel};
use log::info;
use serde::{Deserialize, Serialize};

use super::train::load_features;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, run_id, sha256_file, write_json, Sidecar, REPORT_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub selector: SelectorKind,
    pub classifier: ClassifierKind,
    pub k: usize,
    pub threshold: f64,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub run_id: String,
    pub name: String,
    pub model: ModelSummary,
    pub n_samples: usize,
    pub n_positive: usize,
    pub bootstrap: BootstrapResult,
}

pub fn run(model_path: &Path, features: &Path, name: &str, cfg: &BootstrapConfig, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let sidecar = Sidecar::start(out, "evaluate");
    let model = TrainedModel::load(model_path)?;
    let fm = load_features(features)?;
    let scores = model.predict_proba(&fm)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CliError::Numerical("non-finite predicted probability".into()));
    }
    let id = run_id("evaluate", &(cfg, name), &[sha256_file(model_path)?, sha256_file(features)?])?;
    let bootstrap = bootstrap_metrics(&scores, &fm.labels, model.threshold, cfg)?;

    let mut w = csv::Writer::from_path(out.join("predictions.csv")).map_err(|e| CliError::Data(e.to_string()))?;
    w.write_record(["subject_id", "nodule_id", "label", "score", "predicted"]).map_err(|e| CliError::Data(e.to_string()))?;
    for i in 0..fm.n_samples() {
        let pred = u8::from(scores[i] >= model.threshold);
        w.write_record([fm.groups[i].clone(), fm.ids[i].clone(), fm.labels[i].to_string(), format!("{:?}", scores[i]), pred.to_string()])
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(&out.join("predictions.csv"), e))?;

    let report = EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: id.clone(),
        name: name.to_string(),
        model: ModelSummary {
            selector: model.selector,
            classifier: model.classifier_kind,
            k: model.k,
            threshold: model.threshold,
            n_features: model.selected_features.len(),
        },
        n_samples: fm.n_samples(),
        n_positive: fm.labels.iter().filter(|&&l| l == 1).count(),
        bootstrap,
    };
    write_json(&out.join("evaluation.json"), &report)?;
    let m = &report.bootstrap.metrics;
    info!(
        "evaluate {name}: AUC {:.3} [{:.3}, {:.3}], sensitivity {:.3}",
        m["auc"].mean, m["auc"].ci_lo, m["auc"].ci_hi, m["sensitivity"].mean
    );
    sidecar.finish(&id, serde_json::Value::Null)
}
