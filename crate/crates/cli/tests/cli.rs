use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stcar::io::{read_adjacency, read_dataset};
use stcar::model::w_prior_density_curve;
use stcar::sim::{data_seed, generate_dataset, ScenarioSet};

const SHORT_RUN: [&str; 8] = ["--n-sample", "300", "--burnin", "100", "--thin", "2", "--seed", "11"];

fn stcar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stcar")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = stcar(args);
    assert!(out.status.success(), "stcar {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scenario_file(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.ini");
    fs::write(&path, text).unwrap();
    path
}

fn simulate(dir: &Path, scenario: &str) -> PathBuf {
    let sc = scenario_file(dir, scenario);
    let out = dir.join("sim");
    ok(&["simulate", "--scenario", p(&sc), "--out", p(&out)]);
    out
}

fn fit(sim: &Path, out: &Path, extra: &[&str]) -> Output {
    let data = sim.join("data.csv");
    let adj = sim.join("adjacency.csv");
    let mut args = vec!["fit", "--data", p(&data), "--adjacency", p(&adj), "--out", p(out)];
    args.extend_from_slice(&SHORT_RUN);
    args.extend_from_slice(extra);
    ok(&args)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

const SMALL: &str = "nrow = 5\nncol = 5\nA = 2\nseed = 3\n";

#[test]
fn missing_expected_column_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let text = fs::read_to_string(sim.join("data.csv")).unwrap().replace("expected", "exposure");
    fs::write(sim.join("data.csv"), text).unwrap();
    let out_dir = tmp.path().join("fit");
    let out = stcar(&[
        "fit",
        "--data",
        p(&sim.join("data.csv")),
        "--adjacency",
        p(&sim.join("adjacency.csv")),
        "--out",
        p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[schema] code=3:"), "{err}");
    assert!(err.contains("'expected'"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn global_fit_has_no_boundary_report() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let out = tmp.path().join("fit");
    let stdout = fit(&sim, &out, &["--model", "global"]);
    assert!(out.join("fit_report.json").exists());
    assert!(out.join("risk.csv").exists());
    assert!(!out.join("boundaries.csv").exists());
    assert!(!out.join("w.csv").exists());
    let text = String::from_utf8_lossy(&stdout.stdout);
    assert!(text.contains("DIC") && !text.contains("step changes"));
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    for format in ["csv", "bin"] {
        let a = tmp.path().join(format!("a_{format}"));
        let b = tmp.path().join(format!("b_{format}"));
        fit(&sim, &a, &["--format", format]);
        fit(&sim, &b, &["--format", format]);
        assert_eq!(dir_bytes(&a), dir_bytes(&b));
    }
}

#[test]
fn simulate_defaults_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["simulate", "--out", p(&a)]);
    ok(&["simulate", "--out", p(&b)]);
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let g = read_adjacency(&a.join("adjacency.csv"), None).unwrap();
    let d = read_dataset(&a.join("data.csv"), g).unwrap();
    assert_eq!(d.n_times(), 5);
    assert_eq!(d.n_areas(), 100);
    assert!(d.expected().iter().all(|&e| e == 75.0));
}

#[test]
fn simulated_dataset_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let set = ScenarioSet::from_ini_str(SMALL, "scenario.ini").unwrap();
    let sc = &set.scenarios[0];
    let (expected, _) = generate_dataset(sc, data_seed(sc, 0)).unwrap();
    let g = read_adjacency(&sim.join("adjacency.csv"), None).unwrap();
    assert_eq!(read_dataset(&sim.join("data.csv"), g).unwrap(), expected);
}

#[test]
fn no_step_change_scenario_has_empty_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "nrow = 4\nncol = 4\nA = 1\n");
    let text = fs::read_to_string(sim.join("true_boundaries.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, ["edge_i,edge_k"]);
}

#[test]
fn invalid_scenario_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_file(tmp.path(), "nrow = 4\ncolour = red\n");
    let out = stcar(&["simulate", "--scenario", p(&sc), "--out", p(&tmp.path().join("sim"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn study_rows_per_scenario_and_model() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_file(tmp.path(), "nrow = 4\nncol = 4\nreplicates = 2\n[step]\nA = 2\n[flat]\nA = 1\n");
    let out = tmp.path().join("study");
    let start = std::time::Instant::now();
    ok(&["study", "--scenario", p(&sc), "--out", p(&out), "--n-sample", "300", "--burnin", "100", "--thin", "2"]);
    assert!(start.elapsed().as_secs() < 60);

    let table = |name: &str| -> Vec<Vec<String>> {
        fs::read_to_string(out.join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    };
    let fit = table("rmse_dic.csv");
    assert_eq!(fit.len(), 2 * 3);
    let models: Vec<&str> = fit.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(models, ["global", "adaptive", "adaptive-clustered", "global", "adaptive", "adaptive-clustered"]);
    let roc = table("boundaries.csv");
    for row in &roc {
        let metric = if row[0] == "flat" { "specificity" } else { "auc" };
        assert_eq!(row[3], metric, "{row:?}");
    }
    assert_eq!(roc.len(), 2 * 2);
    assert_eq!(table("replicates.csv").len(), 2 * 2 * 3);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn summarize_reproduces_the_fit_report() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    for format in ["csv", "bin"] {
        let fit_dir = tmp.path().join(format!("fit_{format}"));
        fit(&sim, &fit_dir, &["--format", format]);
        let sum_dir = tmp.path().join(format!("sum_{format}"));
        ok(&[
            "summarize",
            "--samples",
            p(&fit_dir),
            "--data",
            p(&sim.join("data.csv")),
            "--adjacency",
            p(&sim.join("adjacency.csv")),
            "--truth",
            p(&sim),
            "--out",
            p(&sum_dir),
        ]);
        for name in ["fit_report.json", "risk.csv", "boundaries.csv"] {
            assert_eq!(fs::read(fit_dir.join(name)).unwrap(), fs::read(sum_dir.join(name)).unwrap(), "{name}");
        }
        assert!(sum_dir.join("roc.csv").exists());
    }
}

#[test]
fn prior_curve_matches_direct_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let fit_dir = tmp.path().join("fit");
    fit(&sim, &fit_dir, &[]);
    let sum_dir = tmp.path().join("sum");
    ok(&[
        "summarize",
        "--samples",
        p(&fit_dir),
        "--data",
        p(&sim.join("data.csv")),
        "--adjacency",
        p(&sim.join("adjacency.csv")),
        "--resolution",
        "50",
        "--out",
        p(&sum_dir),
    ]);
    let text = fs::read_to_string(sum_dir.join("prior_curve.csv")).unwrap();
    let rows: Vec<(f64, f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect();
    for zeta in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let file: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 == zeta).map(|r| (r.1, r.2)).collect();
        assert_eq!(file, w_prior_density_curve(15.0, zeta, 50));
    }
    let at = |zeta: f64| -> Vec<f64> { rows.iter().filter(|r| r.0 == zeta).map(|r| r.2).collect() };
    let wide = at(20.0);
    let mid = wide[wide.len() / 2];
    assert!(wide[0] > mid && wide[wide.len() - 1] > mid);
}

#[test]
fn truncated_samples_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let fit_dir = tmp.path().join("fit");
    fit(&sim, &fit_dir, &["--format", "bin"]);
    let bin = fit_dir.join("samples.bin");
    let bytes = fs::read(&bin).unwrap();
    fs::write(&bin, &bytes[..bytes.len() / 2]).unwrap();
    let sum_dir = tmp.path().join("sum");
    let out = stcar(&[
        "summarize",
        "--samples",
        p(&fit_dir),
        "--data",
        p(&sim.join("data.csv")),
        "--adjacency",
        p(&sim.join("adjacency.csv")),
        "--out",
        p(&sum_dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
    assert!(!sum_dir.exists());
}

#[test]
fn every_text_output_carries_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let fit_dir = tmp.path().join("fit");
    fit(&sim, &fit_dir, &[]);
    for dir in [&sim, &fit_dir] {
        for (name, bytes) in dir_bytes(dir) {
            if name.ends_with(".csv") {
                let text = String::from_utf8(bytes).unwrap();
                assert!(text.starts_with("# stcar "), "{name}");
            }
        }
    }
    let first = fs::read_to_string(fit_dir.join("w.csv")).unwrap();
    let first = first.lines().next().unwrap();
    assert!(first.contains("seed=11") && first.contains("data.csv:sha256:") && first.contains("adjacency.csv:sha256:"));
    let report = fs::read_to_string(fit_dir.join("fit_report.json")).unwrap();
    assert!(report.contains("\"provenance\""));
}

#[test]
fn config_file_and_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let cfg = tmp.path().join("run.ini");
    fs::write(
        &cfg,
        format!(
            "[io]\ndata = {}\nadjacency = {}\n[model]\nmodel = global\n[sampler]\nn-sample = 300\nburnin = 100\nthin = 2\n",
            p(&sim.join("data.csv")),
            p(&sim.join("adjacency.csv"))
        ),
    )
    .unwrap();
    let out = tmp.path().join("fit");
    ok(&["fit", "--config", p(&cfg), "--model", "adaptive", "--out", p(&out)]);
    assert!(out.join("boundaries.csv").exists());

    fs::write(&cfg, "[sampler]\ncolour = 1\n").unwrap();
    assert_eq!(stcar(&["fit", "--config", p(&cfg), "--out", p(&out)]).status.code(), Some(3));
}

#[test]
fn exit_codes_for_usage_and_domain_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(stcar(&["fit", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(stcar(&[]).status.code(), Some(2));
    let sim = simulate(tmp.path(), SMALL);
    let out = stcar(&[
        "fit",
        "--data",
        p(&sim.join("data.csv")),
        "--adjacency",
        p(&sim.join("adjacency.csv")),
        "--prior-tau2",
        "0,1",
        "--out",
        p(&tmp.path().join("fit")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let occupied = stcar(&["simulate", "--out", p(&sim)]);
    assert_eq!(occupied.status.code(), Some(4));
    ok(&["simulate", "--out", p(&sim), "--overwrite"]);
    let missing = stcar(&["fit", "--data", "/nonexistent/data.csv", "--adjacency", "/nonexistent/adj.csv", "--out", p(&tmp.path().join("f2"))]);
    assert_eq!(missing.status.code(), Some(6));
}

#[test]
fn multiple_chains_write_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), SMALL);
    let out = tmp.path().join("fit");
    fit(&sim, &out, &["--chains", "2"]);
    let a = fs::read(out.join("chain_0/phi.csv")).unwrap();
    let b = fs::read(out.join("chain_1/phi.csv")).unwrap();
    assert_ne!(a, b);
}
