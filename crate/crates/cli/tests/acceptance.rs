//! CLI-level acceptance criteria: reproduction of the published fits when
//! the processed traces are supplied, and end-to-end determinism of the
//! subcommands.

use emlfit::expr::{BlockKind, Expr, GrammarConfig};
use emlfit::fit::{fit_model, BoundsMap};
use emlfit::opt::Multistart;
use emlfit::response::{Embedding, GrammarModel, LinkerModel};
use emlfit::search::{run_grammar_search, SearchConfig};
use emlfit::select::ScoreConfig;
use emlfit::ResponseModel;
use emlfit_cli::ingest::{attach_doses, read_traces};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn workspace_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Published processed traces drop into `data/real/` with the documented
/// schema; the suite reproduces the published results when they are there
/// and otherwise defers to the synthetic-recovery criterion.
#[test]
fn criterion_09_published_trace_reproduction() {
    let dir = workspace_dir().join("data/real");
    let panels = ["a", "b", "c", "d"];
    let mut missing = Vec::new();
    for p in panels {
        let f = dir.join(format!("nanda_{p}.csv"));
        if !f.exists() {
            missing.push(format!("nanda_{p}.csv"));
        }
    }
    if !dir.join("lacroix.csv").exists() {
        missing.push("lacroix.csv".into());
    }
    if !missing.is_empty() {
        println!(
            "acceptance 9 (published-trace reproduction): SKIP \
             (missing {} under data/real/; criterion 8 substitutes)",
            missing.join(", ")
        );
        return;
    }

    let published_hold = [0.128, 0.0698, 0.161, 0.234];
    let multistart = Multistart {
        n_starts: 32,
        seed: 1,
    };

    for (idx, panel) in panels.iter().enumerate() {
        let traces = read_traces(&dir.join(format!("nanda_{panel}.csv")), 3).unwrap();
        assert_eq!(traces.len(), 1, "panel {panel} should be a single trace");

        let eml = SearchConfig {
            grammar: GrammarConfig::new(BlockKind::Eml, 3, 5),
            embedding: Embedding::Static,
            score: ScoreConfig::default(),
            multistart,
            bounds: BoundsMap::new(),
        };
        let ranked = run_grammar_search(&traces, &eml);
        assert_eq!(
            ranked[0].row.expression, "G(G(R)+R)",
            "panel {panel} winner"
        );
        let hold = ranked[0].row.wmse_hold;
        let want = published_hold[idx];
        assert!(
            (hold - want).abs() <= 0.2 * want,
            "panel {panel}: hold wMSE {hold:.4} vs published {want}"
        );

        let hill = SearchConfig {
            grammar: GrammarConfig::new(BlockKind::Hill, 3, 5),
            ..eml.clone()
        };
        let ranked = run_grammar_search(&traces, &hill);
        assert_eq!(
            ranked[0].row.expression, "H(R)+H(R)",
            "panel {panel} saturating-grammar winner"
        );
    }

    // Two-dose relaxation comparison.
    let traces = read_traces(&dir.join("lacroix.csv"), 3).unwrap();
    let traces = attach_doses(traces, &BTreeMap::new()).unwrap();
    assert_eq!(traces.len(), 2, "two doses expected");

    let eml_ode = SearchConfig {
        grammar: GrammarConfig::new(BlockKind::Eml, 2, 5),
        embedding: Embedding::DoseOde,
        score: ScoreConfig::default(),
        multistart,
        bounds: BoundsMap::new(),
    };
    let ranked = run_grammar_search(&traces, &eml_ode);
    assert_eq!(ranked.len(), 11);
    let hold = ranked[0].row.wmse_hold;
    assert!(
        (hold - 0.201).abs() <= 0.2 * 0.201,
        "grammar-ODE hold wMSE {hold:.4} vs published 0.201"
    );

    // Re-score the published grammar-ODE parameter row directly on the
    // supplied traces: train/hold wMSE within 10% of 0.131 / 0.201.
    let published_model = GrammarModel::new(
        Expr::parse("G(R)+G(R)").unwrap(),
        BlockKind::Eml,
        Embedding::DoseOde,
    );
    let published_theta = [10.0, 1.365, 16.6, 1.02, 0.517, 0.0611, 0.808, 1.005, 10.5];
    let mut chi2_train = 0.0;
    let mut chi2_hold = 0.0;
    let (mut n_train, mut n_hold) = (0usize, 0usize);
    for trace in &traces {
        let pred = published_model.predict(&published_theta, trace).unwrap();
        for &i in &trace.split.train {
            let r = (trace.values[i] - pred[i]) / trace.weights[i];
            chi2_train += r * r;
        }
        for &i in &trace.split.hold {
            let r = (trace.values[i] - pred[i]) / trace.weights[i];
            chi2_hold += r * r;
        }
        n_train += trace.split.train.len();
        n_hold += trace.split.hold.len();
    }
    let rescored_train = chi2_train / n_train as f64;
    let rescored_hold = chi2_hold / n_hold as f64;
    assert!(
        (rescored_train - 0.131).abs() <= 0.1 * 0.131,
        "re-scored train wMSE {rescored_train:.4} vs published 0.131"
    );
    assert!(
        (rescored_hold - 0.201).abs() <= 0.1 * 0.201,
        "re-scored hold wMSE {rescored_hold:.4} vs published 0.201"
    );

    let linker = LinkerModel::new(4);
    let linker_fit = fit_model(&linker, &traces, &BoundsMap::new(), &multistart);
    assert!(
        (linker_fit.wmse_hold - 0.210).abs() <= 0.1 * 0.210,
        "linker hold wMSE {:.4} vs published 0.210",
        linker_fit.wmse_hold
    );

    let hill_ode = GrammarModel::new(
        Expr::parse("H(R)").unwrap(),
        BlockKind::Hill,
        Embedding::DoseOde,
    );
    let hill_fit = fit_model(&hill_ode, &traces, &BoundsMap::new(), &multistart);
    assert!(
        hill_fit.wmse_hold > 1.0,
        "saturating ODE should fail structurally, got {:.3}",
        hill_fit.wmse_hold
    );
    println!("acceptance 9 (published-trace reproduction): PASS");
}

fn run_binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_emlfit"))
        .current_dir(workspace_dir())
        .args(args)
        .output()
        .expect("binary runs")
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        out.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    out
}

fn assert_identical_runs(args: &[&str], out_a: &Path, out_b: &Path, what: &str) {
    let run_a = run_binary(&[args, &["--out", out_a.to_str().unwrap()]].concat());
    assert!(
        run_a.status.success(),
        "{what} run A failed: {}",
        String::from_utf8_lossy(&run_a.stderr)
    );
    let run_b = run_binary(&[args, &["--out", out_b.to_str().unwrap()]].concat());
    assert!(run_b.status.success(), "{what} run B failed");
    let a = dir_contents(out_a);
    let b = dir_contents(out_b);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "{what}: file sets differ"
    );
    for (name, bytes) in &a {
        assert_eq!(bytes, &b[name], "{what}: {name} differs between runs");
    }
}

#[test]
fn criterion_12_end_to_end_determinism() {
    let tmp = tempfile::tempdir().unwrap();

    assert_identical_runs(
        &["toybench"],
        &tmp.path().join("toy_a"),
        &tmp.path().join("toy_b"),
        "toybench",
    );

    let bench_cfg = tmp.path().join("bench.toml");
    std::fs::write(&bench_cfg, "[cascade]\nk_max = 3\n").unwrap();
    assert_identical_runs(
        &["cascade-bench", "--config", bench_cfg.to_str().unwrap()],
        &tmp.path().join("bench_a"),
        &tmp.path().join("bench_b"),
        "cascade-bench",
    );

    let search_cfg = tmp.path().join("search.toml");
    std::fs::write(
        &search_cfg,
        "[input]\npath = \"data/standin_nanda_a.csv\"\n\n\
         [grammar]\nkind = \"eml\"\nmax_depth = 2\nmax_nodes = 4\n\n\
         [fit]\nn_starts = 6\nseed = 5\n",
    )
    .unwrap();
    assert_identical_runs(
        &["search", "--config", search_cfg.to_str().unwrap()],
        &tmp.path().join("search_a"),
        &tmp.path().join("search_b"),
        "search",
    );

    println!("acceptance 12 (end-to-end determinism): PASS");
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();

    // Unknown config key: exit 2.
    let bad_cfg = tmp.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[input]\npath = \"x.csv\"\nbogus = 1\n").unwrap();
    let out = run_binary(&["search", "--config", bad_cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed data: exit 3.
    let bad_csv = tmp.path().join("bad.csv");
    std::fs::write(&bad_csv, "t,y,sem\n0,1,0.1\nnope,2,0.1\n").unwrap();
    let cfg = tmp.path().join("data.toml");
    std::fs::write(
        &cfg,
        format!("[input]\npath = \"{}\"\n", bad_csv.display()),
    )
    .unwrap();
    let out = run_binary(&["search", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    // Every candidate infeasible: exit 4. A relaxation time bounded far
    // below the step-underflow threshold fails every start of every
    // candidate.
    let cfg = tmp.path().join("infeasible.toml");
    std::fs::write(
        &cfg,
        "[input]\npath = \"data/standin_lacroix.csv\"\n\n\
         [grammar]\nmax_depth = 1\nmax_nodes = 2\n\n\
         [embedding]\nkind = \"dose-ode\"\n\n\
         [fit]\nn_starts = 2\nseed = 1\n\n\
         [bounds]\ntau = [1e-12, 1e-11]\n",
    )
    .unwrap();
    let out = run_binary(&[
        "search",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("inf_out").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
