use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stcar::diagnostics::{roc_auc, specificity, step_change_probs, FitReport};
use stcar::graph::{EdgeGraph, EdgeSet};
use stcar::io::{
    prepare_output_dir, read_adjacency, read_dataset, read_edge_adjacency, read_edge_flags, read_samples_with_meta,
    reports::to_json, write_adjacency, write_atomic, write_boundary_csv, write_dataset, write_fit_report,
    write_prior_curve_csv, write_risk_csv, write_roc_csv, write_samples_bin, write_samples_csv, write_study_csv,
    write_truth, OutputFormat, Provenance, RunConfig, TOOL_VERSION,
};
use stcar::model::{Dataset, ModelSpec};
use stcar::sampler::{mix_seed, Chain, McmcSamples};
use stcar::sim::{data_seed, generate_dataset, run_study, LatticeShape, Scenario, ScenarioSet, SPECIFICITY_THRESHOLD};
use stcar::{Error, Result};

/// Adaptive spatio-temporal CAR models for areal count panels.
#[derive(Parser)]
#[command(name = "stcar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a count panel and write samples and summaries.
    Fit(Opts),
    /// Generate a synthetic panel and its truth bundle from a scenario file.
    Simulate(Opts),
    /// Run the replicated simulation study and write the summary tables.
    Study(Opts),
    /// Recompute summaries from a saved sample directory without refitting.
    Summarize(Opts),
}

/// Every option can also be set in the `--config` file under the same name.
#[derive(Args, Default)]
struct Opts {
    /// INI settings file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    adjacency: Option<String>,
    #[arg(long)]
    edge_adjacency: Option<String>,
    /// Scenario file for simulate and study.
    #[arg(long)]
    scenario: Option<String>,
    /// Sample directory for summarize.
    #[arg(long)]
    samples: Option<String>,
    /// Directory holding `true_boundaries.csv`, for summarize.
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv or bin.
    #[arg(long)]
    format: Option<String>,
    /// Replace the contents of a non-empty output directory.
    #[arg(long)]
    overwrite: bool,
    /// global, adaptive or adaptive-clustered; study accepts a comma list.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    prior_var_beta: Option<String>,
    /// Inverse-gamma shape and scale, `a,b`.
    #[arg(long)]
    prior_tau2: Option<String>,
    /// Inverse-gamma shape and scale, `a,b`.
    #[arg(long)]
    prior_zeta2: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    v_bound: Option<String>,
    #[arg(long)]
    n_sample: Option<String>,
    #[arg(long)]
    burnin: Option<String>,
    #[arg(long)]
    thin: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    chains: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    v_block_size: Option<String>,
    /// Replicates per scenario (study), overriding the scenario file.
    #[arg(long)]
    replicates: Option<String>,
    /// Points per prior-density curve (summarize).
    #[arg(long)]
    resolution: Option<String>,
    /// Replicate index whose data seed simulate uses.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
}

impl Opts {
    fn settings(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::new(),
        };
        let flags = [
            ("data", &self.data),
            ("adjacency", &self.adjacency),
            ("edge-adjacency", &self.edge_adjacency),
            ("scenario", &self.scenario),
            ("samples", &self.samples),
            ("truth", &self.truth),
            ("out", &self.out),
            ("format", &self.format),
            ("model", &self.model),
            ("prior-var-beta", &self.prior_var_beta),
            ("prior-tau2", &self.prior_tau2),
            ("prior-zeta2", &self.prior_zeta2),
            ("mu", &self.mu),
            ("epsilon", &self.epsilon),
            ("v-bound", &self.v_bound),
            ("n-sample", &self.n_sample),
            ("burnin", &self.burnin),
            ("thin", &self.thin),
            ("seed", &self.seed),
            ("chains", &self.chains),
            ("workers", &self.workers),
            ("v-block-size", &self.v_block_size),
            ("replicates", &self.replicates),
            ("resolution", &self.resolution),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v.as_str())?;
            }
        }
        if self.overwrite {
            cfg.set("overwrite", "true")?;
        }
        if let Some(n) = cfg.workers()? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::domain("workers", e.to_string()))?;
        }
        Ok(cfg)
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    prepare_output_dir(&cfg.require_path("out")?, cfg.flag("overwrite")?)
}

struct Inputs {
    data: Dataset,
    edge_graph: EdgeGraph,
    prov_inputs: Vec<(String, String)>,
}

fn read_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let data_path = cfg.require_path("data")?;
    let adj_path = cfg.require_path("adjacency")?;
    let graph = read_adjacency(&adj_path, None)?;
    let data = read_dataset(&data_path, graph)?;
    let es = EdgeSet::from_graph(data.graph());
    let mut prov = Provenance::new(0).with_file(&data_path)?.with_file(&adj_path)?;
    let edge_graph = match cfg.path("edge-adjacency") {
        Some(p) => {
            prov = prov.with_file(&p)?;
            read_edge_adjacency(&p, &es)?
        }
        None => EdgeGraph::shared_endpoint(&es),
    };
    Ok(Inputs { data, edge_graph, prov_inputs: prov.inputs })
}

fn write_samples(dir: &Path, s: &McmcSamples, format: OutputFormat, prov: &Provenance) -> Result<()> {
    match format {
        OutputFormat::Csv => write_samples_csv(dir, s, prov),
        OutputFormat::Bin => write_samples_bin(&dir.join("samples.bin"), s, prov),
    }
}

/// Fit report, risk table and (adaptive models) boundary table for one
/// sample set.
fn write_summaries(dir: &Path, s: &McmcSamples, d: &Dataset, prov: &Provenance) -> Result<FitReport> {
    let report = FitReport::new(s, d)?;
    write_fit_report(&dir.join("fit_report.json"), &report, prov)?;
    write_risk_csv(&dir.join("risk.csv"), d.n_areas(), &report.risk, prov)?;
    if s.variant.is_adaptive() {
        write_boundary_csv(&dir.join("boundaries.csv"), &step_change_probs(s)?, prov)?;
    }
    Ok(report)
}

fn print_summary(label: &str, report: &FitReport, s: &McmcSamples) -> Result<()> {
    println!("{label}model {}  draws {}", report.model, report.n_draws);
    println!("  DIC {:.2}  pD {:.2}", report.dic.dic, report.dic.pd);
    let rates: Vec<String> = report.acceptance.iter().map(|(f, r)| format!("{f} {r:.3}")).collect();
    println!("  acceptance: {}", rates.join(", "));
    if s.variant.is_adaptive() {
        let b = step_change_probs(s)?;
        println!(
            "  step changes: {} of {} borders at p > 0.75, {} at p > 0.99",
            b.count_above(0.75),
            b.len(),
            b.count_above(0.99)
        );
    }
    Ok(())
}

fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.model_spec()?;
    let chain_cfg = cfg.chain_config()?;
    let n_chains = cfg.chains()?;
    let format = cfg.format()?;
    let inputs = read_inputs(cfg)?;
    let out = output_dir(cfg)?;

    let fits: Vec<Result<McmcSamples>> = {
        use rayon::prelude::*;
        (0..n_chains)
            .into_par_iter()
            .map(|c| {
                let mut cc = chain_cfg.clone();
                if c > 0 {
                    cc.seed = mix_seed(cc.seed, c as u64);
                }
                Chain::with_edge_graph(inputs.data.clone(), spec.clone(), cc, inputs.edge_graph.clone())?.run()
            })
            .collect()
    };
    for (c, fit) in fits.into_iter().enumerate() {
        let s = fit?;
        let dir = if n_chains == 1 { out.clone() } else { out.join(format!("chain_{c}")) };
        if n_chains > 1 {
            prepare_output_dir(&dir, cfg.flag("overwrite")?)?;
        }
        let prov = Provenance { seed: s.seed, inputs: inputs.prov_inputs.clone() };
        write_samples(&dir, &s, format, &prov)?;
        let report = write_summaries(&dir, &s, &inputs.data, &prov)?;
        let label = if n_chains == 1 { String::new() } else { format!("chain {c}: ") };
        print_summary(&label, &report, &s)?;
    }
    Ok(())
}

/// Scenarios from `--scenario`, or `default` when no file is given.
fn load_scenarios(cfg: &RunConfig, default: Vec<Scenario>) -> Result<(ScenarioSet, Vec<(String, String)>)> {
    match cfg.path("scenario") {
        Some(p) => {
            let text = stcar::io::read_text(&p)?;
            let set = ScenarioSet::from_ini_str(&text, &p.display().to_string())?;
            let prov = Provenance::new(0).with_file(&p)?;
            Ok((set, prov.inputs))
        }
        None => Ok((ScenarioSet { scenarios: default, replicates: 1 }, Vec::new())),
    }
}

fn simulate_one(dir: &Path, sc: &Scenario, replicate: usize, inputs: &[(String, String)]) -> Result<()> {
    let seed = data_seed(sc, replicate);
    let (d, truth) = generate_dataset(sc, seed)?;
    let prov = Provenance { seed, inputs: inputs.to_vec() };
    write_dataset(&dir.join("data.csv"), &d, &prov)?;
    write_adjacency(&dir.join("adjacency.csv"), d.graph(), &prov)?;
    write_truth(dir, &truth, &prov)?;
    println!(
        "{}: {} areas × {} periods, {} true step changes (seed {seed})",
        sc.name,
        d.n_areas(),
        d.n_times(),
        truth.n_boundaries()
    );
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, replicate: usize) -> Result<()> {
    let (set, inputs) = load_scenarios(cfg, vec![Scenario::baseline()])?;
    let out = output_dir(cfg)?;
    if set.scenarios.len() == 1 {
        return simulate_one(&out, &set.scenarios[0], replicate, &inputs);
    }
    for sc in &set.scenarios {
        let dir = prepare_output_dir(&out.join(&sc.name), cfg.flag("overwrite")?)?;
        simulate_one(&dir, sc, replicate, &inputs)?;
    }
    Ok(())
}

fn study_models(cfg: &RunConfig) -> Result<Vec<ModelSpec>> {
    let list = cfg.get("model").unwrap_or("global,adaptive,adaptive-clustered").to_string();
    let mut specs = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mut one = cfg.clone();
        one.set("model", name)?;
        specs.push(one.model_spec()?);
    }
    if specs.is_empty() {
        return Err(Error::domain("model", "no models listed"));
    }
    Ok(specs)
}

fn cmd_study(cfg: &RunConfig) -> Result<()> {
    let models = study_models(cfg)?;
    let chain_cfg = cfg.chain_config()?;
    let (set, inputs) = load_scenarios(cfg, Scenario::grid(LatticeShape { nrow: 10, ncol: 10 })?)?;
    let mut names: Vec<&str> = set.scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::schema("scenario", format!("duplicate scenario name '{}'", w[0])));
    }
    let replicates = cfg.usize_or("replicates", set.replicates)?;
    if replicates == 0 {
        return Err(Error::domain("replicates", "must be at least 1"));
    }
    let out = output_dir(cfg)?;
    let result = run_study(&set.scenarios, replicates, &models, &chain_cfg);
    let prov = Provenance { seed: chain_cfg.seed, inputs };
    write_study_csv(&out, &result, &prov)?;

    #[derive(serde::Serialize)]
    struct Manifest<'a> {
        tool_version: &'a str,
        provenance: &'a Provenance,
        replicates: usize,
        n_sample: usize,
        burnin: usize,
        thin: usize,
        models: Vec<&'static str>,
        scenarios: Vec<(&'a str, u64)>,
        failures: &'a [stcar::sim::ReplicateFailure],
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION,
        provenance: &prov,
        replicates,
        n_sample: chain_cfg.n_sample,
        burnin: chain_cfg.burnin,
        thin: chain_cfg.thin,
        models: models.iter().map(|m| m.variant.name()).collect(),
        scenarios: set.scenarios.iter().map(|s| (s.name.as_str(), s.seed)).collect(),
        failures: &result.failures,
    };
    write_atomic(&out.join("manifest.json"), to_json(&manifest)?.as_bytes())?;
    for row in &result.rows {
        println!("{} {}: {} completed, {} failed", row.scenario, row.model.name(), row.completed, row.failed);
    }
    if !result.failures.is_empty() {
        log::warn!("{} replicate fits failed; see manifest.json", result.failures.len());
    }
    Ok(())
}

const PRIOR_CURVE_ZETAS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

fn cmd_summarize(cfg: &RunConfig) -> Result<()> {
    let samples_dir = cfg.require_path("samples")?;
    let (s, meta) = read_samples_with_meta(&samples_dir)?;
    let graph = read_adjacency(&cfg.require_path("adjacency")?, Some(s.n_areas))?;
    let d = read_dataset(&cfg.require_path("data")?, graph)?;
    let truth = match cfg.path("truth") {
        Some(dir) => {
            let es = EdgeSet::from_graph(d.graph());
            Some(read_edge_flags(&dir.join("true_boundaries.csv"), &es)?)
        }
        None => None,
    };
    let prov = meta.provenance;
    let boundaries = s.variant.is_adaptive().then(|| step_change_probs(&s)).transpose()?;
    let roc = match (&truth, &boundaries) {
        (Some(t), Some(b)) if t.iter().any(|&x| x) && !t.iter().all(|&x| x) => Some(roc_auc(&b.mean_w, t)?),
        _ => None,
    };
    let spec = cfg.model_spec()?;
    let resolution = cfg.usize_or("resolution", 200)?;

    let out = output_dir(cfg)?;
    let report = write_summaries(&out, &s, &d, &prov)?;
    if let Some(c) = &roc {
        write_roc_csv(&out.join("roc.csv"), c, &prov)?;
    }
    write_prior_curve_csv(&out.join("prior_curve.csv"), spec.mu, &PRIOR_CURVE_ZETAS, resolution, &prov)?;
    print_summary("", &report, &s)?;
    match (&truth, &boundaries, &roc) {
        (_, _, Some(c)) => println!("  AUC {:.4}", c.auc),
        (Some(t), Some(b), None) if !t.iter().any(|&x| x) => {
            println!("  specificity {:.4} (no true step changes)", specificity(&b.mean_w, SPECIFICITY_THRESHOLD))
        }
        _ => {}
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(o) => cmd_fit(&o.settings()?),
        Command::Simulate(o) => cmd_simulate(&o.settings()?, o.replicate),
        Command::Study(o) => cmd_study(&o.settings()?),
        Command::Summarize(o) => cmd_summarize(&o.settings()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            eprintln!("error[{}] code={}: {e}", kind.as_str(), kind.exit_code());
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
