//! Friedman / Wilcoxon comparison of evaluation reports, with violin-plot
//! data and SVG renderings per metric.

use std::path::{Path, PathBuf};

use dosesim_ml::{compare_methods, ComparisonReport};
use log::info;

use super::evaluate::EvaluationReport;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, read_json, run_id, sha256_file, write_json, Sidecar};
use crate::plot::violin_svg;

pub fn run(inputs: &[PathBuf], alpha: f64, out: &Path) -> Result<()> {
    if inputs.len() < 2 {
        return Err(CliError::Config("compare needs at least two evaluation reports".into()));
    }
    ensure_dir(out)?;
    let sidecar = Sidecar::start(out, "compare");
    let reports: Vec<EvaluationReport> = inputs.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
    let hashes = inputs.iter().map(|p| sha256_file(p)).collect::<Result<Vec<_>>>()?;
    let results: Vec<(String, _)> = reports.iter().map(|r| (r.name.clone(), r.bootstrap.clone())).collect();
    let cmp: ComparisonReport = compare_methods(&results, alpha).map_err(|e| match e {
        dosesim_ml::MlError::Param(m) => CliError::Data(m),
        other => other.into(),
    })?;
    let id = run_id("compare", &alpha, &hashes)?;
    let mut doc = serde_json::to_value(&cmp).map_err(|e| CliError::Data(e.to_string()))?;
    doc["run_id"] = serde_json::Value::String(id.clone());
    write_json(&out.join("comparison.json"), &doc)?;

    for metric in reports[0].bootstrap.metrics.keys() {
        let series: Vec<(&str, &[f64])> = reports
            .iter()
            .map(|r| (r.name.as_str(), r.bootstrap.metrics[metric].values.as_slice()))
            .collect();
        let csv_path = out.join(format!("violin_{metric}.csv"));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Data(e.to_string()))?;
        w.write_record(["method", "iteration", "value"]).map_err(|e| CliError::Data(e.to_string()))?;
        for (name, values) in &series {
            for (i, v) in values.iter().enumerate() {
                w.write_record([name.to_string(), i.to_string(), format!("{v:?}")]).map_err(|e| CliError::Data(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| CliError::io(&csv_path, e))?;
        let svg_path = out.join(format!("violin_{metric}.svg"));
        std::fs::write(&svg_path, violin_svg(metric, &series)).map_err(|e| CliError::io(&svg_path, e))?;
    }
    for (metric, t) in &cmp.tests {
        info!("compare {metric}: Friedman p = {:.4}{}", t.friedman.p_value, if t.significant { " (pairwise run)" } else { "" });
    }
    sidecar.finish(&id, serde_json::Value::Null)
}
