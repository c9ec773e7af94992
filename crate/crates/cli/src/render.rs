//! Plain-text tables (five decimals) and CSV output.

use std::fmt::Write;

use tpcm_core::{Estimator, FitReport, ModelSpec, PairMatrix, Prior};

pub fn fmt5(x: f64) -> String {
    format!("{x:.5}")
}

fn model_label(model: ModelSpec) -> String {
    match model {
        ModelSpec::TPcm { nu } => format!("t-PCM, nu = {nu}"),
        other => other.to_string(),
    }
}

fn legend(out: &mut String, labels: &[String]) {
    for (k, label) in labels.iter().enumerate() {
        let _ = writeln!(out, "  {} = {label}", k + 1);
    }
}

/// Row/column layout of the appendix tables: objects numbered from 1, `-` on the diagonal.
pub fn matrix_table(out: &mut String, title: &str, m: &PairMatrix) {
    let n = m.size();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>4}", "");
    for j in 0..n {
        let _ = write!(out, "{:>10}", j + 1);
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "{:>4}", i + 1);
        for j in 0..n {
            match m.get(i, j) {
                Some(v) => {
                    let _ = write!(out, "{:>10}", fmt5(v));
                }
                None => {
                    let _ = write!(out, "{:>10}", "-");
                }
            }
        }
        out.push('\n');
    }
    out.push('\n');
}

/// Everything in one report, one table per quantity.
pub fn report_table(report: &FitReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}, {} prior, grid {} points x {} sd",
        model_label(report.model),
        report.prior,
        report.grid.points_per_dim,
        report.grid.halfwidth
    );
    legend(&mut out, report.data.labels());
    out.push('\n');

    let n = report.data.len();
    let _ = write!(out, "{:<10}", "estimate");
    for k in 0..n {
        let _ = write!(out, "{:>10}", format!("theta_{}", k + 1));
    }
    out.push('\n');
    for e in &report.estimates {
        let _ = write!(out, "{:<10}", e.estimator.to_string());
        for &v in e.worths.values() {
            let _ = write!(out, "{:>10}", fmt5(v));
        }
        out.push('\n');
    }
    out.push('\n');

    matrix_table(&mut out, "Observed preference probabilities", &report.observed_preferences);
    for e in &report.estimates {
        matrix_table(
            &mut out,
            &format!("Preference probabilities (posterior {})", e.estimator),
            &e.preference_matrix,
        );
    }
    matrix_table(&mut out, "Predictive probabilities", &report.predictive_matrix);
    for e in &report.estimates {
        matrix_table(
            &mut out,
            &format!("Expected frequencies (posterior {})", e.estimator),
            &e.expected_frequencies,
        );
        match (&e.gof, &e.gof_error) {
            (Some(g), _) => {
                let _ = writeln!(
                    out,
                    "Chi-square (posterior {}): {} on {} df, p = {}",
                    e.estimator,
                    fmt5(g.chi_square),
                    g.df,
                    fmt5(g.p_value)
                );
            }
            (None, Some(err)) => {
                let _ = writeln!(out, "Chi-square (posterior {}): not available, {err}", e.estimator);
            }
            (None, None) => {}
        }
        let tie = if e.ranking.tied { " (ties broken by input order)" } else { "" };
        let _ = writeln!(out, "Ranking (posterior {}): {}{tie}", e.estimator, e.ranking.order.join(" > "));
    }
    let _ = writeln!(out, "log normalizer: {}", fmt5(report.log_normalizer));
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

/// Posterior means beside posterior modes, one row per model, grouped by prior.
pub fn estimates_table(reports: &[&FitReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let n = first.data.len();
    legend(&mut out, first.data.labels());
    out.push('\n');
    let _ = write!(out, "{:<22}", "model");
    for estimator in [Estimator::Mean, Estimator::Mode] {
        for k in 0..n {
            let _ = write!(out, "{:>10}", format!("{estimator}_{}", k + 1));
        }
    }
    out.push('\n');
    for prior in [Prior::Uniform, Prior::Jeffreys] {
        let block: Vec<&&FitReport> = reports.iter().filter(|r| r.prior == prior).collect();
        if block.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{prior} prior");
        for report in block {
            let _ = write!(out, "{:<22}", model_label(report.model));
            for estimator in [Estimator::Mean, Estimator::Mode] {
                match report.estimate(estimator) {
                    Some(e) => {
                        for &v in e.worths.values() {
                            let _ = write!(out, "{:>10}", fmt5(v));
                        }
                    }
                    None => {
                        for _ in 0..n {
                            let _ = write!(out, "{:>10}", "-");
                        }
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Estimates as CSV rows: model, prior, estimator, label, theta.
pub fn estimates_csv(report: &FitReport) -> String {
    let mut out = String::from("model,prior,estimator,index,label,theta\n");
    for e in &report.estimates {
        for (k, (label, v)) in e.worths.labels().iter().zip(e.worths.values()).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{v}",
                report.model,
                report.prior,
                e.estimator,
                k + 1,
                csv_field(label)
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per ν: `nu,theta_1,...,theta_n`.
pub fn sweep_csv(rows: &[(f64, Vec<f64>)], n: usize) -> String {
    let mut out = String::from("nu");
    for k in 0..n {
        let _ = write!(out, ",theta_{}", k + 1);
    }
    out.push('\n');
    for (nu, theta) in rows {
        let _ = write!(out, "{nu}");
        for v in theta {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
