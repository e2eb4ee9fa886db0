//! Dataset ingestion and result serialization.
//!
//! Numbers are written with Rust's shortest-round-trip formatting, so every
//! CSV and JSON artifact reloads to bit-identical floats. Each output file
//! embeds the seed and a configuration hash (CSV files in a leading `#`
//! comment line, JSON in fields), making any artifact reproducible from its
//! header.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    cpo, cure_rate_estimate, hpd_interval, posterior_mean, posterior_sd, SurvivalCurve,
};
use crate::inference::ObservedData;
use crate::sampler::ChainResult;
use crate::simgen::StudyResult;

/// Seed and configuration hash stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance { config_hash: config_hash.into(), seed }
    }

    fn comment_line(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }
}

/// Column mapping for [`load_dataset`]: which columns hold time and event
/// status, which covariates to keep (`None` keeps all others), and which
/// numeric columns to treat as categorical. Non-numeric columns are always
/// categorical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub time: String,
    pub event: String,
    pub covariates: Option<Vec<String>>,
    pub categorical: Vec<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            time: "time".into(),
            event: "event".into(),
            covariates: None,
            categorical: Vec::new(),
        }
    }
}

fn numeric_or_lexical_sort(levels: &mut Vec<String>) {
    let all_numeric = levels.iter().all(|l| l.parse::<f64>().is_ok());
    if all_numeric {
        levels.sort_by(|a, b| {
            a.parse::<f64>().unwrap().partial_cmp(&b.parse::<f64>().unwrap()).unwrap()
        });
    } else {
        levels.sort();
    }
}

/// Load a right-censored dataset from a headered CSV file.
///
/// Validation failures name the offending data row (1-based, excluding the
/// header). Categorical covariates expand into dummy columns `<col>_D2` ...
/// `<col>_DL` against the lowest level as baseline; the intercept column is
/// prepended.
pub fn load_dataset(path: &Path, schema: &ColumnSchema) -> Result<ObservedData<f64>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("column '{name}' not found in {headers:?}")))
    };
    let time_idx = col_index(&schema.time)?;
    let event_idx = col_index(&schema.event)?;
    let covariate_names: Vec<String> = match &schema.covariates {
        Some(names) => {
            for n in names {
                col_index(n)?;
            }
            names.clone()
        }
        None => headers
            .iter()
            .filter(|h| **h != schema.time && **h != schema.event)
            .cloned()
            .collect(),
    };
    for c in &schema.categorical {
        if !covariate_names.contains(c) {
            return Err(Error::Validation(format!(
                "categorical column '{c}' is not among the covariates"
            )));
        }
    }

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }
    if records.is_empty() {
        return Err(Error::Validation(format!("{} contains no data rows", path.display())));
    }

    let mut times = Vec::with_capacity(records.len());
    let mut events = Vec::with_capacity(records.len());
    let field = |record: &csv::StringRecord, idx: usize, row: usize| -> Result<String> {
        let raw = record
            .get(idx)
            .ok_or_else(|| Error::Validation(format!("data row {row} is too short")))?;
        if raw.trim().is_empty() {
            return Err(Error::Validation(format!(
                "missing value for '{}' in data row {row}",
                headers[idx]
            )));
        }
        Ok(raw.trim().to_string())
    };
    for (k, record) in records.iter().enumerate() {
        let row = k + 1;
        let t: f64 = field(record, time_idx, row)?.parse().map_err(|_| {
            Error::Validation(format!("time in data row {row} is not a number"))
        })?;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Validation(format!(
                "time in data row {row} must be a positive real, got {t}"
            )));
        }
        times.push(t);
        let e = field(record, event_idx, row)?;
        events.push(match e.as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Validation(format!(
                    "event in data row {row} must be 0 or 1, got '{other}'"
                )))
            }
        });
    }

    // assemble covariate columns, expanding categoricals into dummies
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for name in &covariate_names {
        let idx = col_index(name)?;
        let raw: Vec<String> = records
            .iter()
            .enumerate()
            .map(|(k, r)| field(r, idx, k + 1))
            .collect::<Result<_>>()?;
        let numeric: Option<Vec<f64>> = raw
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        let treat_categorical = schema.categorical.contains(name) || numeric.is_none();
        if treat_categorical {
            let mut levels: Vec<String> =
                raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            numeric_or_lexical_sort(&mut levels);
            if levels.len() < 2 {
                return Err(Error::Validation(format!(
                    "categorical column '{name}' has a single level"
                )));
            }
            // lowest level is baseline; dummies D2..DL
            for (l, level) in levels.iter().enumerate().skip(1) {
                let col: Vec<f64> =
                    raw.iter().map(|v| if v == level { 1.0 } else { 0.0 }).collect();
                columns.push((format!("{name}_D{}", l + 1), col));
            }
        } else {
            columns.push((name.clone(), numeric.expect("checked numeric")));
        }
    }

    ObservedData::from_covariate_columns(times, events, &columns)
}

/// Write a dataset as CSV (time, event, covariate columns minus intercept).
/// Reloading with the default schema reproduces the dataset exactly.
pub fn write_dataset(d: &ObservedData<f64>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string(), "event".to_string()];
    header.extend(d.column_names().iter().skip(1).cloned());
    w.write_record(&header)?;
    for i in 0..d.m() {
        let mut record = vec![
            format!("{}", d.times()[i]),
            if d.events()[i] { "1".into() } else { "0".into() },
        ];
        record.extend(d.row(i).iter().skip(1).map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Thinned chain dump: `iter,<param names...>,log_post`.
pub fn write_chain(chain: &ChainResult, provenance: &Provenance, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", provenance.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["iter".to_string()];
    header.extend(chain.param_names.iter().cloned());
    header.push("log_post".into());
    w.write_record(&header)?;
    for ((draw, iter), lp) in
        chain.draws.iter().zip(&chain.iterations).zip(&chain.log_posterior_trace)
    {
        let mut record = vec![iter.to_string()];
        record.extend(draw.flat_coordinates().iter().map(|v| format!("{v}")));
        record.push(format!("{lp}"));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Survival curve export: `profile_id,t,S`.
pub fn write_curves(curves: &[SurvivalCurve], provenance: &Provenance, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", provenance.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["profile_id", "t", "S"])?;
    for (id, curve) in curves.iter().enumerate() {
        for (t, s) in curve.time_grid.iter().zip(&curve.values) {
            w.write_record(&[id.to_string(), format!("{t}"), format!("{s}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row of the parameter table: posterior mean, sd, and HPD bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// Cure rate summary for one covariate profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureRateSummary {
    pub profile_id: usize,
    pub covariates: Vec<f64>,
    pub mean: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// Full fit summary written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub m: usize,
    pub n_events: usize,
    pub censoring_fraction: f64,
    pub n_draws: usize,
    pub acceptance_rate: f64,
    pub geweke_z: f64,
    pub convergence_warning: bool,
    pub parameters: Vec<ParameterSummary>,
    pub cure_rates: Vec<CureRateSummary>,
    pub cpo_total: f64,
    pub cpo_flagged: Vec<usize>,
}

/// HPD level used in all summaries.
pub const SUMMARY_HPD_LEVEL: f64 = 0.95;

/// Assemble the summary document for one fitted chain.
pub fn build_fit_summary(
    chain: &ChainResult,
    data: &ObservedData<f64>,
    profiles: &[Vec<f64>],
    provenance: &Provenance,
) -> Result<FitSummary> {
    let mean = posterior_mean(chain)?.flat_coordinates();
    let sd = posterior_sd(chain)?;
    let mut parameters = Vec::with_capacity(mean.len());
    for (j, name) in chain.param_names.iter().enumerate() {
        let coords: Vec<f64> = chain.draws.iter().map(|v| v.flat_coordinates()[j]).collect();
        let (hpd_lower, hpd_upper) = if coords.len() >= 2 {
            hpd_interval(&coords, SUMMARY_HPD_LEVEL)?
        } else {
            (coords[0], coords[0])
        };
        parameters.push(ParameterSummary {
            name: name.clone(),
            mean: mean[j],
            sd: sd[j],
            hpd_lower,
            hpd_upper,
        });
    }
    let mut cure_rates = Vec::with_capacity(profiles.len());
    for (profile_id, x) in profiles.iter().enumerate() {
        let est = cure_rate_estimate(chain, x, SUMMARY_HPD_LEVEL)?;
        cure_rates.push(CureRateSummary {
            profile_id,
            covariates: x.clone(),
            mean: est.mean,
            hpd_lower: est.hpd_lower,
            hpd_upper: est.hpd_upper,
        });
    }
    let cpo_report = cpo(chain, data)?;
    Ok(FitSummary {
        model: chain.kind.label().to_string(),
        config_hash: provenance.config_hash.clone(),
        seed: provenance.seed,
        m: data.m(),
        n_events: data.n_events(),
        censoring_fraction: data.censoring_fraction(),
        n_draws: chain.n_draws(),
        acceptance_rate: chain.acceptance_rate,
        geweke_z: chain.geweke_z,
        convergence_warning: chain.convergence_warning(),
        parameters,
        cure_rates,
        cpo_total: cpo_report.total_log,
        cpo_flagged: cpo_report.flagged,
    })
}

pub fn write_summary(summary: &FitSummary, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, summary)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<FitSummary> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(file)?)
}

/// Aggregated study table: `scenario_id,gamma,sigma2,m,B,model,parameter,AE,RMSE`.
pub fn write_study_aggregate(
    results: &[StudyResult],
    provenance: &Provenance,
    path: &Path,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", provenance.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["scenario_id", "gamma", "sigma2", "m", "B", "model", "parameter", "AE", "RMSE"])?;
    for (id, result) in results.iter().enumerate() {
        let s = &result.scenario;
        for row in &result.rows {
            w.write_record(&[
                id.to_string(),
                format!("{}", s.gamma),
                format!("{}", s.sigma2),
                s.m.to_string(),
                s.replicates.to_string(),
                row.model.label().to_string(),
                row.parameter.clone(),
                format!("{}", row.ae),
                format!("{}", row.rmse),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CPO difference table: `scenario_id,cpo_diff_mean,cpo_diff_sd`.
pub fn write_study_cpo(
    results: &[StudyResult],
    provenance: &Provenance,
    path: &Path,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", provenance.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["scenario_id", "cpo_diff_mean", "cpo_diff_sd"])?;
    for (id, result) in results.iter().enumerate() {
        w.write_record(&[
            id.to_string(),
            format!("{}", result.cpo_diff_mean),
            format!("{}", result.cpo_diff_sd),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-replicate audit table:
/// `scenario_id,replicate,censoring_fraction,model,parameter,estimate` plus
/// `cpo_total` rows per model.
pub fn write_study_replicates(
    results: &[StudyResult],
    provenance: &Provenance,
    path: &Path,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", provenance.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["scenario_id", "replicate", "censoring_fraction", "model", "parameter", "estimate"])?;
    for (id, result) in results.iter().enumerate() {
        for rec in &result.replicates {
            for (model, name, value) in &rec.estimates {
                w.write_record(&[
                    id.to_string(),
                    rec.replicate.to_string(),
                    format!("{}", rec.censoring_fraction),
                    model.label().to_string(),
                    name.clone(),
                    format!("{value}"),
                ])?;
            }
            for (model, total) in
                [("PVFCR", rec.cpo_pvfcr), ("CR", rec.cpo_cr)]
            {
                w.write_record(&[
                    id.to_string(),
                    rec.replicate.to_string(),
                    format!("{}", rec.censoring_fraction),
                    model.to_string(),
                    "cpo_total".to_string(),
                    format!("{total}"),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
