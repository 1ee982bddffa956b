use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{write_atomic, Provenance};
use crate::diagnostics::{BoundaryReport, FitReport, RocCurve, Summary};
use crate::error::{Error, Result};
use crate::model::w_prior_density_curve;
use crate::sim::{MetricSummary, StudyResult, Truth};

/// `edge_i,edge_k,mean_w,p_ik,flag75,flag99`.
pub fn write_boundary_csv(path: &Path, r: &BoundaryReport, prov: &Provenance) -> Result<()> {
    let mut out = prov.comment_line();
    out.push_str("edge_i,edge_k,mean_w,p_ik,flag75,flag99\n");
    for e in 0..r.len() {
        let (i, k) = r.edges[e];
        let p = r.p_step[e];
        writeln!(out, "{i},{k},{},{p},{},{}", r.mean_w[e], (p > 0.75) as u8, (p > 0.99) as u8).unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// `threshold,sensitivity,specificity`.
pub fn write_roc_csv(path: &Path, c: &RocCurve, prov: &Provenance) -> Result<()> {
    let mut out = prov.comment_line();
    out.push_str("threshold,sensitivity,specificity\n");
    for p in &c.points {
        writeln!(out, "{},{},{}", p.threshold, p.sensitivity, p.specificity).unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Per-cell risk summaries, `area,time,median,lower,upper`.
pub fn write_risk_csv(path: &Path, n_areas: usize, risk: &[Summary], prov: &Provenance) -> Result<()> {
    let mut out = prov.comment_line();
    out.push_str("area,time,median,lower,upper\n");
    for (c, s) in risk.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", c % n_areas, c / n_areas, s.median, s.lower, s.upper).unwrap();
    }
    write_atomic(path, out.as_bytes())
}

/// Scaled prior densities of a border weight, `zeta,w,density`, one curve
/// per entry of `zetas`.
pub fn write_prior_curve_csv(
    path: &Path,
    mu: f64,
    zetas: &[f64],
    resolution: usize,
    prov: &Provenance,
) -> Result<()> {
    if resolution == 0 {
        return Err(Error::domain("resolution", "must be positive"));
    }
    let mut out = prov.comment_line();
    out.push_str("zeta,w,density\n");
    for &zeta in zetas {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::domain("zeta", format!("{zeta} must be positive")));
        }
        for (w, d) in w_prior_density_curve(mu, zeta, resolution) {
            writeln!(out, "{zeta},{w},{d}").unwrap();
        }
    }
    write_atomic(path, out.as_bytes())
}

/// `true_risk.csv` (`area,time,risk`) and `true_boundaries.csv`
/// (`edge_i,edge_k`, one row per true step change) inside `dir`.
pub fn write_truth(dir: &Path, t: &Truth, prov: &Provenance) -> Result<()> {
    let mut risk = prov.comment_line();
    risk.push_str("area,time,risk\n");
    let n = t.risk.n_areas();
    for (c, r) in t.risk.as_slice().iter().enumerate() {
        writeln!(risk, "{},{},{r}", c % n, c / n).unwrap();
    }
    write_atomic(&dir.join("true_risk.csv"), risk.as_bytes())?;
    let mut b = prov.comment_line();
    b.push_str("edge_i,edge_k\n");
    for (&(i, k), _) in t.edges.iter().zip(&t.boundaries).filter(|(_, &f)| f) {
        writeln!(b, "{i},{k}").unwrap();
    }
    write_atomic(&dir.join("true_boundaries.csv"), b.as_bytes())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("JSON encoding: {e}")))
}

/// Fit summary document; the provenance sits in a top-level field.
pub fn write_fit_report(path: &Path, r: &FitReport, prov: &Provenance) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: &'a Provenance,
        #[serde(flatten)]
        report: &'a FitReport,
    }
    write_atomic(path, to_json(&Doc { provenance: prov, report: r })?.as_bytes())
}

fn cells(m: Option<MetricSummary>) -> String {
    m.map_or_else(|| ",".to_string(), |m| format!("{},{}", m.median, m.q10))
}

/// Two study tables: `rmse_dic.csv` (RMSE, DIC, pD and coverage) and
/// `boundaries.csv` (AUC, or specificity when there are no true step
/// changes), one row per scenario × model; plus `replicates.csv` with every
/// scored replicate.
pub fn write_study_csv(dir: &Path, s: &StudyResult, prov: &Provenance) -> Result<()> {
    let mut fit = prov.comment_line();
    fit.push_str("scenario,model,completed,failed,rmse_median,rmse_q10,dic_median,dic_q10,pd_median,pd_q10,coverage_median,coverage_q10\n");
    let mut roc = prov.comment_line();
    roc.push_str("scenario,model,completed,metric,median,q10\n");
    for row in &s.rows {
        writeln!(
            fit,
            "{},{},{},{},{},{},{},{}",
            row.scenario,
            row.model.name(),
            row.completed,
            row.failed,
            cells(row.rmse),
            cells(row.dic),
            cells(row.pd),
            cells(row.coverage)
        )
        .unwrap();
        if !row.model.is_adaptive() {
            continue;
        }
        let (metric, value) = match (row.auc, row.specificity) {
            (_, Some(spf)) => ("specificity", Some(spf)),
            (auc, None) => ("auc", auc),
        };
        writeln!(roc, "{},{},{},{metric},{}", row.scenario, row.model.name(), row.completed, cells(value)).unwrap();
    }
    write_atomic(&dir.join("rmse_dic.csv"), fit.as_bytes())?;
    write_atomic(&dir.join("boundaries.csv"), roc.as_bytes())?;

    let mut reps = prov.comment_line();
    reps.push_str("scenario,replicate,model,data_seed,chain_seed,rmse,dic,pd,coverage,auc,specificity\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in &s.replicates {
        writeln!(
            reps,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.replicate,
            r.model.name(),
            r.data_seed,
            r.chain_seed,
            r.rmse,
            r.dic,
            r.pd,
            r.coverage,
            opt(r.auc),
            opt(r.specificity)
        )
        .unwrap();
    }
    write_atomic(&dir.join("replicates.csv"), reps.as_bytes())
}
