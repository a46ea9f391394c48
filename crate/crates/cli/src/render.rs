//! Text, CSV and JSON renderings of command results.

use std::fmt::Write as _;

use anyhow::{anyhow, Result};
use eewps::gof::GofReport;
use eewps::inference::FitResult;
use eewps::properties::{raw_moment_quadrature, raw_moment_series, SeriesTruncation};
use eewps::reproduce::{Comparison, SeriesCell, Table1Row, Table2Column};
use eewps::{EewpsModel, Error, Family};
use serde::Serialize;

#[derive(Serialize)]
pub struct FamilyInfo {
    pub generator: String,
    pub compounder: String,
    pub parameters: Vec<&'static str>,
    pub fixed: Vec<Option<f64>>,
}

impl FamilyInfo {
    pub fn new(f: &Family) -> Self {
        Self {
            generator: f.generator.to_string(),
            compounder: f.compounder.to_string(),
            parameters: f.param_names(),
            fixed: f.fixed.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct Disagreement {
    pub log_likelihood_difference: f64,
    pub flagged: bool,
}

#[derive(Serialize)]
pub struct FitEntry<'a> {
    #[serde(flatten)]
    pub fit: &'a FitResult,
    pub gof: Option<&'a GofReport>,
}

#[derive(Serialize)]
pub struct FitDocument<'a> {
    pub family: FamilyInfo,
    pub n: usize,
    pub fits: Vec<FitEntry<'a>>,
    pub disagreement: Option<Disagreement>,
    pub failures: Vec<String>,
}

fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "-".into())
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}

pub fn fit_text(doc: &FitDocument<'_>) -> String {
    let mut s = String::new();
    let fam = &doc.family;
    let _ = writeln!(s, "family     {}/{} ({})", fam.generator, fam.compounder, fam.parameters.join(", "));
    let _ = writeln!(s, "sample     n = {}", doc.n);
    for entry in &doc.fits {
        let f = entry.fit;
        let _ = writeln!(s);
        let _ = writeln!(s, "method     {}", f.method);
        let _ = writeln!(
            s,
            "converged  {} ({} iterations)",
            if f.converged { "yes" } else { "no" },
            f.iterations
        );
        let _ = writeln!(s, "log L      {}", num(f.log_likelihood));
        if !f.boundary.is_empty() {
            let flags: Vec<String> = f
                .boundary
                .iter()
                .map(|b| serde_json::to_value(b).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                .collect();
            let _ = writeln!(s, "boundary   {}", flags.join(", "));
        }
        let _ = writeln!(s, "{:<10} {:>16} {:>16}", "parameter", "estimate", "std. error");
        for p in &f.parameters {
            let se = if p.fixed { "fixed".to_string() } else { opt(p.standard_error) };
            let _ = writeln!(s, "{:<10} {:>16} {:>16}", p.name, num(p.value), se);
        }
        if let Some(g) = entry.gof {
            let rows = [
                ("K-S", g.ks_stat),
                ("p-value", g.ks_pvalue),
                ("CM", g.cm_stat),
                ("AD", g.ad_stat),
                ("AIC", g.aic),
                ("AICC", g.aicc),
                ("BIC", g.bic),
            ];
            for (name, v) in rows {
                let _ = writeln!(s, "{name:<10} {:>16}", num(v));
            }
        }
    }
    if let Some(d) = &doc.disagreement {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "em vs direct: log L differs by {}{}",
            num(d.log_likelihood_difference),
            if d.flagged { " (DISAGREE)" } else { "" }
        );
    }
    s
}

pub fn fit_csv(doc: &FitDocument<'_>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "quantity", "value", "std_error"])?;
    for entry in &doc.fits {
        let f = entry.fit;
        let m = f.method.to_string();
        for p in &f.parameters {
            let se = p.standard_error.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([m.as_str(), p.name.as_str(), &p.value.to_string(), &se])?;
        }
        w.write_record([m.as_str(), "log_likelihood", &f.log_likelihood.to_string(), ""])?;
        w.write_record([m.as_str(), "iterations", &f.iterations.to_string(), ""])?;
        w.write_record([m.as_str(), "converged", &f.converged.to_string(), ""])?;
        if let Some(g) = entry.gof {
            for (name, v) in [
                ("ks_stat", g.ks_stat),
                ("ks_pvalue", g.ks_pvalue),
                ("cm_stat", g.cm_stat),
                ("ad_stat", g.ad_stat),
                ("aic", g.aic),
                ("aicc", g.aicc),
                ("bic", g.bic),
            ] {
                w.write_record([m.as_str(), name, &v.to_string(), ""])?;
            }
        }
    }
    csv_string(w)
}

#[derive(Serialize)]
pub struct MomentRow {
    pub order: u32,
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub series: Option<f64>,
    pub series_status: String,
    pub truncation: SeriesTruncation,
}

impl MomentRow {
    pub fn compute(m: &EewpsModel, r: u32, tol: f64) -> Result<Self> {
        let q = raw_moment_quadrature(m, r)?;
        let (series, series_status, truncation) = match raw_moment_series(m, r, tol) {
            Ok(s) => (Some(s.value), "converged".to_string(), s.truncation.unwrap_or_default()),
            Err(Error::SeriesNonConvergent { reason, report }) => (None, format!("non-convergent: {reason}"), report),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            order: r,
            quadrature: q.value,
            quadrature_error: q.error,
            series,
            series_status,
            truncation,
        })
    }
}

pub fn moments_text(m: &EewpsModel, rows: &[MomentRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{m}");
    let _ = writeln!(
        s,
        "{:>5} {:>16} {:>16} {:>8} {:>8} {:>12}  status",
        "order", "quadrature", "series", "n_max", "j_max", "tail bound"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5} {:>16} {:>16} {:>8} {:>8} {:>12.3e}  {}",
            r.order,
            num(r.quadrature),
            opt(r.series),
            r.truncation.n_max,
            r.truncation.j_max,
            r.truncation.tail_bound,
            r.series_status
        );
    }
    s
}

pub fn moments_csv(rows: &[MomentRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["order", "quadrature", "series", "n_max", "j_max", "tail_bound", "status"])?;
    for r in rows {
        w.write_record([
            r.order.to_string(),
            r.quadrature.to_string(),
            r.series.map(|v| v.to_string()).unwrap_or_default(),
            r.truncation.n_max.to_string(),
            r.truncation.j_max.to_string(),
            r.truncation.tail_bound.to_string(),
            r.series_status.clone(),
        ])?;
    }
    csv_string(w)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn series_summary(c: &SeriesCell) -> (String, &'static str) {
    match c {
        SeriesCell::Converged { value, agrees, .. } => (format!("{value:.6}"), if *agrees { "agrees" } else { "DISAGREES" }),
        SeriesCell::NonConvergent { .. } => ("-".into(), "non-convergent"),
    }
}

pub fn table1_text(rows: &[Table1Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>5} {:>5} {:>5} {:>2} {:>8} {:>10} {:>12} {:>15} {:>5}",
        "alpha", "beta", "lamb", "gamma", "r", "printed", "quadrature", "series", "series check", ""
    );
    for row in rows {
        for c in &row.cells {
            let (sv, status) = series_summary(&c.series);
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>5} {:>5} {:>2} {:>8.3} {:>10.5} {:>12} {:>15} {:>5}",
                row.alpha,
                row.beta,
                row.lambda,
                row.gamma,
                c.order,
                c.printed,
                c.quadrature,
                sv,
                status,
                verdict(c.pass)
            );
        }
    }
    let passed = rows.iter().filter(|r| r.pass()).count();
    let _ = writeln!(s, "{passed}/{} rows pass", rows.len());
    s
}

pub fn table1_csv(rows: &[Table1Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "beta", "lambda", "gamma", "order", "printed", "quadrature", "series", "series_status", "pass"])?;
    for row in rows {
        for c in &row.cells {
            let (sv, status) = series_summary(&c.series);
            w.write_record([
                row.alpha.to_string(),
                row.beta.to_string(),
                row.lambda.to_string(),
                row.gamma.to_string(),
                c.order.to_string(),
                c.printed.to_string(),
                c.quadrature.to_string(),
                if sv == "-" { String::new() } else { sv },
                status.to_string(),
                c.pass.to_string(),
            ])?;
        }
    }
    csv_string(w)
}

fn rule(c: &Comparison, tol: f64) -> String {
    match c {
        Comparison::AtLeast => format!(">= -{tol}"),
        Comparison::Within => format!("+/- {tol}"),
        Comparison::Factor => format!("x{tol}"),
    }
}

pub fn table2_text(cols: &[Table2Column]) -> String {
    let mut s = String::new();
    for col in cols {
        let _ = writeln!(
            s,
            "{}{}: refit log L {} (global {}), estimates [{}]",
            col.preset,
            if col.advisory { " (advisory)" } else { "" },
            num(col.refit.log_likelihood),
            num(col.global.log_likelihood),
            col.refit.estimates().iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(s, "  {:<12} {:>14} {:>14} {:>14} {:>10}", "cell", "printed", "achieved", "target", "rule");
        for c in &col.cells {
            let mark = if c.advisory { format!("{} (advisory)", verdict(c.pass)) } else { verdict(c.pass).into() };
            let _ = writeln!(
                s,
                "  {:<12} {:>14} {:>14} {:>14} {:>10}  {}",
                c.name,
                num(c.printed),
                opt(c.achieved),
                num(c.target),
                rule(&c.comparison, c.tolerance),
                mark
            );
        }
        let _ = writeln!(s, "  column: {}", verdict(col.pass()));
    }
    s
}

pub fn table2_csv(cols: &[Table2Column]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["column", "cell", "printed", "achieved", "target", "tolerance", "advisory", "pass"])?;
    for col in cols {
        for c in &col.cells {
            w.write_record([
                col.preset.clone(),
                c.name.clone(),
                c.printed.to_string(),
                c.achieved.map(|v| v.to_string()).unwrap_or_default(),
                c.target.to_string(),
                c.tolerance.to_string(),
                (c.advisory || col.advisory).to_string(),
                c.pass.to_string(),
            ])?;
        }
    }
    csv_string(w)
}
