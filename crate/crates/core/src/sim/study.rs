use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_dataset, Truth};
use super::scenario::Scenario;
use crate::diagnostics::{
    coverage95, dic_pd, quantile, risk_summaries, rmse, roc_auc, specificity, step_change_probs,
};
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::model::{Dataset, ModelSpec, ModelVariant};
use crate::sampler::{mix_seed, Chain, ChainConfig, McmcSamples};

/// Threshold on `E[w_ik | Y]` used for specificity when there are no true
/// step changes.
pub const SPECIFICITY_THRESHOLD: f64 = 0.5;

/// Seed of replicate `replicate`'s dataset.
pub fn data_seed(sc: &Scenario, replicate: usize) -> u64 {
    mix_seed(sc.seed, replicate as u64)
}

/// Seed of the chain fitting `variant` to that dataset.
pub fn chain_seed(sc: &Scenario, replicate: usize, variant: ModelVariant) -> u64 {
    let k = match variant {
        ModelVariant::GlobalAR => 1,
        ModelVariant::AdaptiveIndependent => 2,
        ModelVariant::AdaptiveClustered => 3,
    };
    mix_seed(data_seed(sc, replicate), k)
}

/// Scores of one fitted replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub scenario: String,
    pub replicate: usize,
    pub model: ModelVariant,
    pub data_seed: u64,
    pub chain_seed: u64,
    pub rmse: f64,
    pub dic: f64,
    pub pd: f64,
    pub coverage: f64,
    /// Present for adaptive models when true step changes exist.
    pub auc: Option<f64>,
    /// Present for adaptive models when there are no true step changes.
    pub specificity: Option<f64>,
}

/// Fit quality of one model on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rmse: f64,
    pub dic: f64,
    pub pd: f64,
    pub coverage: f64,
    pub auc: Option<f64>,
    pub specificity: Option<f64>,
}

/// Scores a fit against the generating truth.
pub fn score(samples: &McmcSamples, d: &Dataset, truth: &Truth) -> Result<Scores> {
    let summaries = risk_summaries(samples, d)?;
    let fitted = SpaceTimeField::from_vec(d.n_areas(), d.n_times(), summaries.iter().map(|s| s.median).collect())?;
    let r = rmse(&fitted, &truth.risk)?;
    let cov = coverage95(&summaries, &truth.risk)?;
    let dic = dic_pd(samples, d)?;
    let (mut auc, mut spf) = (None, None);
    if samples.variant.is_adaptive() {
        let report = step_change_probs(samples)?;
        if truth.n_boundaries() == 0 {
            spf = Some(specificity(&report.mean_w, SPECIFICITY_THRESHOLD));
        } else {
            auc = Some(roc_auc(&report.mean_w, &truth.boundaries)?.auc);
        }
    }
    Ok(Scores { rmse: r, dic: dic.dic, pd: dic.pd, coverage: cov, auc, specificity: spf })
}

/// Generates replicate `replicate` of `sc`, fits `spec` and scores it.
pub fn fit_replicate(
    sc: &Scenario,
    replicate: usize,
    spec: &ModelSpec,
    cfg: &ChainConfig,
) -> Result<(ReplicateResult, McmcSamples)> {
    let ds = data_seed(sc, replicate);
    let (d, truth) = generate_dataset(sc, ds)?;
    let mut cfg = cfg.clone();
    cfg.seed = chain_seed(sc, replicate, spec.variant);
    let samples = Chain::with_edge_graph(d.clone(), spec.clone(), cfg.clone(), sc.edge_graph()?)?.run()?;
    let Scores { rmse, dic, pd, coverage, auc, specificity } = score(&samples, &d, &truth)?;
    Ok((
        ReplicateResult {
            scenario: sc.name.clone(),
            replicate,
            model: spec.variant,
            data_seed: ds,
            chain_seed: cfg.seed,
            rmse,
            dic,
            pd,
            coverage,
            auc,
            specificity,
        },
        samples,
    ))
}

/// Median and 10% quantile over completed replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub median: f64,
    pub q10: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| MetricSummary { median: quantile(values, 0.5), q10: quantile(values, 0.1) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scenario: String,
    pub model: ModelVariant,
    pub completed: usize,
    pub failed: usize,
    pub rmse: Option<MetricSummary>,
    pub dic: Option<MetricSummary>,
    pub pd: Option<MetricSummary>,
    pub coverage: Option<MetricSummary>,
    pub auc: Option<MetricSummary>,
    pub specificity: Option<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub scenario: String,
    pub replicate: usize,
    pub model: ModelVariant,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    /// One row per scenario × model, scenarios outermost.
    pub rows: Vec<StudyRow>,
    pub replicates: Vec<ReplicateResult>,
    pub failures: Vec<ReplicateFailure>,
}

/// Runs every scenario × replicate × model in parallel. Failed replicates
/// are logged, recorded and left out of the summaries.
pub fn run_study(scenarios: &[Scenario], n_replicates: usize, models: &[ModelSpec], cfg: &ChainConfig) -> StudyResult {
    let tasks: Vec<(usize, usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..n_replicates).flat_map(move |r| (0..models.len()).map(move |m| (s, r, m))))
        .collect();
    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|&(s, r, m)| fit_replicate(&scenarios[s], r, &models[m], cfg).map(|(res, _)| res))
        .collect();
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (&(s, r, m), outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(res) => replicates.push(res),
            Err(e) => {
                log::warn!("scenario {} replicate {r} model {}: {e}", scenarios[s].name, models[m].variant.name());
                failures.push(ReplicateFailure {
                    scenario: scenarios[s].name.clone(),
                    replicate: r,
                    model: models[m].variant,
                    message: e.to_string(),
                });
            }
        }
    }
    let mut rows = Vec::with_capacity(scenarios.len() * models.len());
    for sc in scenarios {
        for spec in models {
            let done: Vec<&ReplicateResult> =
                replicates.iter().filter(|x| x.scenario == sc.name && x.model == spec.variant).collect();
            let collect = |f: &dyn Fn(&ReplicateResult) -> Option<f64>| -> Option<MetricSummary> {
                MetricSummary::of(&done.iter().filter_map(|x| f(x)).collect::<Vec<_>>())
            };
            rows.push(StudyRow {
                scenario: sc.name.clone(),
                model: spec.variant,
                completed: done.len(),
                failed: failures.iter().filter(|x| x.scenario == sc.name && x.model == spec.variant).count(),
                rmse: collect(&|x| Some(x.rmse)),
                dic: collect(&|x| Some(x.dic)),
                pd: collect(&|x| Some(x.pd)),
                coverage: collect(&|x| Some(x.coverage)),
                auc: collect(&|x| x.auc),
                specificity: collect(&|x| x.specificity),
            });
        }
    }
    StudyResult { rows, replicates, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_metric_summary() {
        let s = MetricSummary::of(&[0.7; 9]).unwrap();
        assert_eq!((s.median, s.q10), (0.7, 0.7));
        assert!(MetricSummary::of(&[]).is_none());
    }

    #[test]
    fn seeds_differ_by_model_and_replicate() {
        let sc = Scenario::baseline();
        assert_ne!(data_seed(&sc, 0), data_seed(&sc, 1));
        assert_ne!(
            chain_seed(&sc, 0, ModelVariant::GlobalAR),
            chain_seed(&sc, 0, ModelVariant::AdaptiveIndependent)
        );
    }
}
