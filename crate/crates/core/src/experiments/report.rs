use std::path::Path;

use serde::Serialize;

use crate::error::{AugError, Result};
use crate::linalg;

/// One long-format observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub rep: usize,
    pub grid_key: String,
    pub metric: String,
    pub value: f64,
}

/// Mean and `sd / √n` of one metric at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStat {
    pub grid_key: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// A statistic of the whole run that is not a per-replicate mean, such as a
/// ratio of means or a closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedStat {
    pub grid_key: String,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryStat>,
    pub derived: Vec<DerivedStat>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self { experiment: experiment.to_string(), config, rows: Vec::new(), summary: Vec::new(), derived: Vec::new() }
    }

    pub fn push(&mut self, rep: usize, grid_key: &str, metric: &str, value: f64) {
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            rep,
            grid_key: grid_key.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    pub fn push_derived(&mut self, grid_key: &str, name: &str, value: f64) {
        self.derived.push(DerivedStat { grid_key: grid_key.to_string(), name: name.to_string(), value });
    }

    /// Rebuilds the summary block, keyed in first-appearance order, and
    /// rejects non-finite values.
    pub fn finalize(mut self) -> Result<Self> {
        if let Some(bad) = self.rows.iter().find(|r| !r.value.is_finite()) {
            return Err(AugError::Numerical(format!(
                "{} rep {} {} {} is not finite",
                bad.experiment, bad.rep, bad.grid_key, bad.metric
            )));
        }
        if let Some(bad) = self.derived.iter().find(|d| !d.value.is_finite()) {
            return Err(AugError::Numerical(format!("{} {} is not finite", bad.grid_key, bad.name)));
        }
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let k = (r.grid_key.clone(), r.metric.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        self.summary = keys
            .into_iter()
            .map(|(grid_key, metric)| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.grid_key == grid_key && r.metric == metric)
                    .map(|r| r.value)
                    .collect();
                let (mean, stderr) = linalg::mean_stderr(&vals);
                SummaryStat { grid_key, metric, mean, stderr, n: vals.len() }
            })
            .collect();
        Ok(self)
    }

    pub fn summary_stat(&self, grid_key: &str, metric: &str) -> Option<&SummaryStat> {
        self.summary.iter().find(|s| s.grid_key == grid_key && s.metric == metric)
    }

    pub fn derived_value(&self, grid_key: &str, name: &str) -> Option<f64> {
        self.derived.iter().find(|d| d.grid_key == grid_key && d.name == name).map(|d| d.value)
    }

    /// Values of one metric in replicate order.
    pub fn metric_values(&self, grid_key: &str, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.grid_key == grid_key && r.metric == metric).map(|r| r.value).collect()
    }

    /// Header `experiment,rep,grid_key,metric,value`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| AugError::Numerical(format!("csv: {e}")))?;
        }
        if self.rows.is_empty() {
            w.write_record(["experiment", "rep", "grid_key", "metric", "value"])
                .map_err(|e| AugError::Numerical(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| AugError::Numerical(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| AugError::Numerical(format!("csv: {e}")))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| AugError::Numerical(format!("json: {e}")))
    }

    /// Writes CSV to `path`, and with `json` also `path` with a `.json`
    /// extension.
    pub fn write(&self, path: &Path, json: bool) -> std::io::Result<()> {
        let to_io = |e: AugError| std::io::Error::other(e.to_string());
        std::fs::write(path, self.to_csv_string().map_err(to_io)?)?;
        if json {
            std::fs::write(path.with_extension("json"), self.to_json_string().map_err(to_io)?)?;
        }
        Ok(())
    }
}
