//! End-to-end pipeline checks against the shipped stand-in traces.

use emlfit_cli::config::{parse_bench_config, parse_search_config, Overrides};
use emlfit_cli::pipeline::{run_cascade_bench, run_search};
use std::path::PathBuf;

fn workspace_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn dose_ode_search_on_standin_runs_jointly_over_both_doses() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "[input]\npath = \"{}\"\n\n\
         [grammar]\nkind = \"eml\"\nmax_depth = 1\nmax_nodes = 4\n\n\
         [embedding]\nkind = \"dose-ode\"\n\n\
         [fit]\nn_starts = 8\nseed = 2\n\n\
         [bounds]\ntau = [0.5, 100.0]\n\n\
         [output]\ndir = \"{}\"\n",
        workspace_dir().join("data/standin_lacroix.csv").display(),
        tmp.path().join("out").display(),
    );
    let plan = parse_search_config(&text)
        .unwrap()
        .plan(&Overrides::default())
        .unwrap();
    let out = run_search(&plan, &text).unwrap();

    let ranked = std::fs::read_to_string(out.join("ranked.csv")).unwrap();
    // Candidates with depth <= 1 and <= 4 nodes: R, G(R), R+R, G(R)+R,
    // G(R+R). All rows share one joint fit across the two doses.
    assert_eq!(ranked.lines().count(), 6, "{ranked}");
    assert!(out.join("plot_2.csv").exists());
    assert!(out.join("plot_20.csv").exists());
    assert!(out.join("best_model.txt").exists());
    assert!(out.join("manifest.txt").exists());

    // Every fitted trajectory starts at the normalized baseline.
    for plot in ["plot_2.csv", "plot_20.csv"] {
        let body = std::fs::read_to_string(out.join(plot)).unwrap();
        let first = body.lines().nth(1).unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        for model_value in &fields[3..] {
            let v: f64 = model_value.parse().unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{plot}: {first}");
        }
    }
}

#[test]
fn relaxation_embedding_search_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "[input]\npath = \"{}\"\n\n\
         [grammar]\nkind = \"eml\"\nmax_depth = 1\nmax_nodes = 2\n\n\
         [embedding]\nkind = \"relax\"\n\n\
         [fit]\nn_starts = 6\nseed = 4\n\n\
         [bounds]\ntau = [0.5, 50.0]\n\n\
         [output]\ndir = \"{}\"\n",
        workspace_dir().join("data/standin_nanda_a.csv").display(),
        tmp.path().join("out").display(),
    );
    let plan = parse_search_config(&text)
        .unwrap()
        .plan(&Overrides::default())
        .unwrap();
    let out = run_search(&plan, &text).unwrap();
    let ranked = std::fs::read_to_string(out.join("ranked.csv")).unwrap();
    // Candidates R and G(R); the relaxation embedding adds tau, so the
    // one-gate row carries 7 parameters.
    assert_eq!(ranked.lines().count(), 3, "{ranked}");
    assert!(ranked.contains("G(R),7,"), "{ranked}");
    assert!(ranked.lines().nth(1).unwrap().starts_with("1,"), "{ranked}");
    let params = std::fs::read_to_string(out.join("params.csv")).unwrap();
    assert!(params.contains("G(R),tau,"), "{params}");
}

#[test]
fn cascade_bench_accepts_an_external_trace() {
    let tmp = tempfile::tempdir().unwrap();
    // A benchmark trace generated first, then consumed as input.
    let toy_out = tmp.path().join("toy");
    let toy_cfg = emlfit_cli::config::parse_toy_config("[toybench]\nt_max = 40.0\nn_points = 81\n")
        .unwrap();
    let overrides = Overrides {
        out: Some(toy_out.clone()),
        ..Overrides::default()
    };
    emlfit_cli::pipeline::run_toybench(&toy_cfg, &overrides, "").unwrap();

    // The export carries extra columns; reduce to the trace schema.
    let body = std::fs::read_to_string(toy_out.join("benchmark.csv")).unwrap();
    let mut csv = String::from("t,y,sem\n");
    for line in body.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        csv.push_str(&format!("{},{},0.015\n", f[0], f[5]));
    }
    let trace_path = tmp.path().join("observed.csv");
    std::fs::write(&trace_path, csv).unwrap();

    let text = format!(
        "[cascade]\nk_max = 2\n\n[input]\npath = \"{}\"\n\n\
         [fit]\nn_starts = 8\nseed = 1\n\n[output]\ndir = \"{}\"\n",
        trace_path.display(),
        tmp.path().join("bench").display(),
    );
    let cfg = parse_bench_config(&text).unwrap();
    let out = run_cascade_bench(&cfg, &Overrides::default(), &text).unwrap();

    let report = std::fs::read_to_string(out.join("cascade_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 4, "{report}");
    assert!(lines[1].starts_with("0,5,"));
    assert!(lines[2].starts_with("1,4,"));
    assert!(lines[3].starts_with("2,5,"));
    // No benchmark.csv: the trace came from outside.
    assert!(!out.join("benchmark.csv").exists());
    assert!(out.join("states.csv").exists());
    let states = std::fs::read_to_string(out.join("states.csv")).unwrap();
    assert!(states.starts_with("t,z_1,z_2\n"));
}
