use std::fs;
use std::path::Path;

use log::{error, info};
use serde::Serialize;
use tpcm_core::{Estimator, FitReport, ModelSpec, PosteriorSpec, Prior};

use crate::config::{stem, CliError, Emit, RunConfig};
use crate::render;

/// p-values above this mark the best-fitting set in the goodness-of-fit table.
pub const BEST_FIT_P: f64 = 0.15;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Fits every combination, handing each finished report to `sink`. A failed
/// combination does not stop the others; the first failure is returned at the end.
fn fit_all<F>(cfg: &RunConfig, estimators: &[Estimator], mut sink: F) -> Result<Option<CliError>, CliError>
where
    F: FnMut(&PosteriorSpec, FitReport) -> Result<(), CliError>,
{
    let mut failure = None;
    for spec in &cfg.specs {
        info!("fitting {}", stem(spec));
        match tpcm_core::fit(&cfg.data, spec, estimators) {
            Ok(report) => {
                for w in &report.warnings {
                    eprintln!("warning ({}): {w}", stem(spec));
                }
                sink(spec, report)?;
            }
            Err(e) => {
                error!("{}: {e}", stem(spec));
                eprintln!("{}: {e}", stem(spec));
                failure.get_or_insert(CliError::Estimation(format!("{}: {e}", stem(spec))));
            }
        }
    }
    Ok(failure)
}

fn finish(failure: Option<CliError>) -> Result<(), CliError> {
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let mut reports = Vec::new();
    let failure = fit_all(cfg, &cfg.estimators, |spec, report| {
        let name = stem(spec);
        if cfg.emits(Emit::Json) {
            write(&cfg.out, &format!("{name}.json"), &to_json(&report))?;
        }
        if cfg.emits(Emit::Table) {
            write(&cfg.out, &format!("{name}.txt"), &render::report_table(&report))?;
        }
        if cfg.emits(Emit::Csv) {
            write(&cfg.out, &format!("{name}.csv"), &render::estimates_csv(&report))?;
        }
        reports.push(report);
        Ok(())
    })?;
    let refs: Vec<&FitReport> = reports.iter().collect();
    let summary = render::estimates_table(&refs);
    if cfg.emits(Emit::Table) && !reports.is_empty() {
        write(&cfg.out, "estimates.txt", &summary)?;
    }
    print!("{summary}");
    finish(failure)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.specs.iter().any(|s| !matches!(s.model, ModelSpec::TPcm { .. })) {
        return Err(CliError::Config("sweep varies nu and needs --model t".into()));
    }
    let mut rows: Vec<(Prior, Estimator, f64, Vec<f64>)> = Vec::new();
    let failure = fit_all(cfg, &cfg.estimators, |spec, report| {
        let nu = spec.model.nu().expect("t model");
        for e in &report.estimates {
            rows.push((spec.prior, e.estimator, nu, e.worths.values().to_vec()));
        }
        Ok(())
    })?;
    let n = cfg.data.len();
    for prior in [Prior::Uniform, Prior::Jeffreys] {
        for &estimator in &cfg.estimators {
            let series: Vec<(f64, Vec<f64>)> = rows
                .iter()
                .filter(|r| r.0 == prior && r.1 == estimator)
                .map(|r| (r.2, r.3.clone()))
                .collect();
            if series.is_empty() {
                continue;
            }
            let name = format!("sweep_{prior}_{estimator}.csv");
            write(&cfg.out, &name, &render::sweep_csv(&series, n))?;
            println!("{name}: {} rows", series.len());
        }
    }
    finish(failure)
}

#[derive(Debug, Clone, Serialize)]
pub struct GofRow {
    pub model: ModelSpec,
    pub prior: Prior,
    pub estimator: Estimator,
    pub chi_square: f64,
    pub df: u32,
    pub p_value: f64,
    pub best: bool,
}

fn model_cell(model: ModelSpec) -> String {
    match model {
        ModelSpec::TPcm { nu } => nu.to_string(),
        other => other.to_string(),
    }
}

pub fn gof_table(rows: &[GofRow]) -> String {
    let mut out = format!(
        "{:<14}{:<10}{:<11}{:>12}{:>5}{:>10}\n",
        "nu", "prior", "estimator", "chi-square", "df", "p"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<14}{:<10}{:<11}{:>12}{:>5}{:>10}{}\n",
            model_cell(r.model),
            r.prior.to_string(),
            r.estimator.to_string(),
            render::fmt5(r.chi_square),
            r.df,
            render::fmt5(r.p_value),
            if r.best { "  *" } else { "" }
        ));
    }
    out.push_str(&format!("* p > {BEST_FIT_P}: best-fitting set\n"));
    out
}

pub fn cmd_gof(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let failure = fit_all(cfg, &cfg.estimators, |spec, report| {
        for e in &report.estimates {
            match &e.gof {
                Some(g) => rows.push(GofRow {
                    model: spec.model,
                    prior: spec.prior,
                    estimator: e.estimator,
                    chi_square: g.chi_square,
                    df: g.df,
                    p_value: g.p_value,
                    best: g.p_value > BEST_FIT_P,
                }),
                None => skipped.push(format!(
                    "{} {}: {}",
                    stem(spec),
                    e.estimator,
                    e.gof_error.as_deref().unwrap_or("no statistic")
                )),
            }
        }
        Ok(())
    })?;
    rows.sort_by(|a, b| b.p_value.total_cmp(&a.p_value));
    for s in &skipped {
        eprintln!("goodness of fit skipped for {s}");
    }
    let table = gof_table(&rows);
    if cfg.emits(Emit::Table) {
        write(&cfg.out, "gof.txt", &table)?;
    }
    if cfg.emits(Emit::Json) {
        write(&cfg.out, "gof.json", &to_json(&rows))?;
    }
    if cfg.emits(Emit::Csv) {
        let mut csv = String::from("model,prior,estimator,chi_square,df,p_value,best\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                model_cell(r.model),
                r.prior,
                r.estimator,
                r.chi_square,
                r.df,
                r.p_value,
                r.best
            ));
        }
        write(&cfg.out, "gof.csv", &csv)?;
    }
    print!("{table}");
    finish(failure)
}
