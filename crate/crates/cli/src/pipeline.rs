//! The three subcommand pipelines.

use crate::config::{BenchConfigFile, Overrides, SearchPlan, ToyConfigFile};
use crate::report::{self, Manifest};
use crate::{ingest, AppError};
use emlfit::cascade::{reservoir_grid_search, simulate, CascadeSpec};
use emlfit::expr::Expr;
use emlfit::fit::{fit_model, BoundsMap};
use emlfit::opt::Multistart;
use emlfit::response::{Embedding, GrammarModel};
use emlfit::search::{all_infeasible, run_grammar_search, CandidateFit, SearchConfig};
use emlfit::select::{ModelReportRow, ScoreConfig};
use emlfit::toybench::{add_noise, benchmark_trace, time_grid};
use emlfit::trace::Trace;
use emlfit::{BlockKind, ResponseModel};
use std::path::{Path, PathBuf};

fn read_input_bytes(path: &Path) -> Result<Vec<u8>, AppError> {
    std::fs::read(path).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
}

fn sanitize_label(label: &str) -> String {
    let cleaned: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        "trace".into()
    } else {
        cleaned
    }
}

/// Fit one comparator model outside the candidate set and return its
/// trajectory on each trace grid.
fn comparator_trajectories(
    model: &GrammarModel,
    traces: &[Trace],
    bounds: &BoundsMap,
    multistart: &Multistart,
) -> (ModelReportRow, Vec<Vec<f64>>) {
    let fit = fit_model(model, traces, bounds, multistart);
    let theta: Vec<f64> = fit.params.iter().map(|p| p.value).collect();
    let trajectories = traces
        .iter()
        .map(|trace| {
            model
                .predict(&theta, trace)
                .unwrap_or_else(|_| vec![f64::NAN; trace.len()])
        })
        .collect();
    let row = ModelReportRow::from_fit(&model.expr, model.kind, &fit, &ScoreConfig::default());
    (row, trajectories)
}

/// `emlfit search`: enumerate, fit, rank, and emit reports.
pub fn run_search(plan: &SearchPlan, config_text: &str) -> Result<PathBuf, AppError> {
    let input_bytes = read_input_bytes(&plan.input)?;
    let mut traces = ingest::read_traces(&plan.input, plan.split_offset)?;
    if plan.embedding == Embedding::DoseOde {
        traces = ingest::attach_doses(traces, &plan.doses)?;
    }

    let cfg = SearchConfig {
        grammar: plan.grammar,
        embedding: plan.embedding,
        score: plan.score,
        multistart: plan.multistart,
        bounds: plan.bounds.clone(),
    };
    let ranked = run_grammar_search(&traces, &cfg);
    if all_infeasible(&ranked) {
        return Err(AppError::AllInfeasible);
    }

    let mut outputs = vec![
        "ranked.csv".to_string(),
        "params.csv".to_string(),
        "best_model.txt".to_string(),
    ];

    // Plot comparators: a single saturating block, the one-gate expression
    // of the searched grammar, and the winner.
    let hill_block = GrammarModel::new(
        Expr::parse("H(R)").unwrap(),
        BlockKind::Hill,
        plan.embedding,
    );
    let (_, hill_curves) =
        comparator_trajectories(&hill_block, &traces, &plan.bounds, &plan.multistart);

    let depth_one = Expr::parse("G(R)").unwrap();
    let depth_one_label = depth_one.display_with(plan.grammar.kind);
    let depth_one_curves: Option<Vec<Vec<f64>>> = ranked
        .iter()
        .find(|c| c.row.expression == depth_one_label)
        .map(|cand| predict_candidate(cand, plan, &traces));

    let best = &ranked[0];
    let best_curves = predict_candidate(best, plan, &traces);

    let out_dir = &plan.out_dir;
    report::write_file(&out_dir.join("ranked.csv"), &report::ranked_csv(
        &ranked.iter().map(|c| c.row.clone()).collect::<Vec<_>>(),
    ))?;
    report::write_file(&out_dir.join("params.csv"), &report::params_csv(&ranked))?;
    report::write_file(
        &out_dir.join("best_model.txt"),
        &report::best_model_summary(best),
    )?;

    for (idx, trace) in traces.iter().enumerate() {
        let mut models: Vec<(String, Vec<f64>)> =
            vec![("H(R)".to_string(), hill_curves[idx].clone())];
        if let Some(curves) = &depth_one_curves {
            models.push((depth_one_label.clone(), curves[idx].clone()));
        }
        models.push((best.row.expression.clone(), best_curves[idx].clone()));
        // One column per distinct comparator; the candidate fit wins when a
        // comparator coincides with it.
        let mut seen = std::collections::BTreeSet::new();
        models.reverse();
        models.retain(|(name, _)| seen.insert(name.clone()));
        models.reverse();
        let name = format!("plot_{}.csv", sanitize_label(&trace.label));
        report::write_file(&out_dir.join(&name), &report::plot_csv(trace, &models))?;
        outputs.push(name);
    }

    outputs.push("manifest.txt".into());
    let manifest = Manifest {
        subcommand: "search".into(),
        seed: plan.multistart.seed,
        config_text: config_text.to_string(),
        inputs: vec![(plan.input.clone(), report::sha256_hex(&input_bytes))],
        outputs,
    };
    report::write_file(&out_dir.join("manifest.txt"), &manifest.render())?;
    Ok(out_dir.clone())
}

fn predict_candidate(cand: &CandidateFit, plan: &SearchPlan, traces: &[Trace]) -> Vec<Vec<f64>> {
    let model = GrammarModel::new(cand.expr.clone(), plan.grammar.kind, plan.embedding);
    let theta: Vec<f64> = cand.fit.params.iter().map(|p| p.value).collect();
    traces
        .iter()
        .map(|trace| {
            model
                .predict(&theta, trace)
                .unwrap_or_else(|_| vec![f64::NAN; trace.len()])
        })
        .collect()
}

/// `emlfit cascade-bench`: depth sweep with grid-searched reservoir
/// hyperparameters against an observed or generated benchmark trace.
pub fn run_cascade_bench(
    cfg: &BenchConfigFile,
    overrides: &Overrides,
    config_text: &str,
) -> Result<PathBuf, AppError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = overrides.seed {
        cfg.toybench.seed = seed;
        cfg.fit.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output.dir = out.clone();
    }
    cfg.toybench.validate()?;
    if cfg.split.offset >= 4 {
        return Err(AppError::Config("split offset must be in 0..4".into()));
    }
    if cfg.cascade.k_max < 1 || cfg.cascade.k_max > 16 {
        return Err(AppError::Config("k_max must be in 1..=16".into()));
    }

    let mut inputs = Vec::new();
    let mut outputs = vec!["cascade_report.csv".to_string(), "manifest.txt".to_string()];
    let out_dir = cfg.output.dir.clone();

    let trace = match &cfg.input {
        Some(section) => {
            let bytes = read_input_bytes(&section.path)?;
            inputs.push((section.path.clone(), report::sha256_hex(&bytes)));
            let traces = ingest::read_traces(&section.path, cfg.split.offset)?;
            if traces.len() != 1 {
                return Err(AppError::Data(
                    "cascade-bench expects a single unlabeled trace".into(),
                ));
            }
            traces.into_iter().next().unwrap()
        }
        None => {
            let params = cfg.toybench.network_params();
            let (run, trace) =
                benchmark_trace(&params, cfg.toybench.t_max, cfg.toybench.n_points, cfg.split.offset);
            report::write_file(
                &out_dir.join("benchmark.csv"),
                &report::benchmark_csv(&run, &trace.values),
            )?;
            outputs.push("benchmark.csv".into());
            trace
        }
    };

    // Depth-zero comparator: one saturating block fit directly to the trace.
    let hill = GrammarModel::new(
        Expr::parse("H(R)").unwrap(),
        BlockKind::Hill,
        Embedding::Static,
    );
    let multistart = Multistart {
        n_starts: cfg.fit.n_starts,
        seed: cfg.fit.seed,
    };
    let hill_fit = fit_model(&hill, std::slice::from_ref(&trace), &BoundsMap::new(), &multistart);
    let hill_row =
        ModelReportRow::from_fit(&hill.expr, BlockKind::Hill, &hill_fit, &ScoreConfig::default());

    let per_depth =
        reservoir_grid_search(&trace, cfg.cascade.k_max).map_err(|e| AppError::Data(e.to_string()))?;

    report::write_file(
        &out_dir.join("cascade_report.csv"),
        &report::cascade_csv(Some(&hill_row), &per_depth),
    )?;

    // Hidden states of the deepest selected reservoir.
    let deepest = per_depth.last().expect("at least one depth");
    let spec = CascadeSpec::new(cfg.cascade.k_max, deepest.input_rate, deepest.base_tau);
    let states = simulate(&spec, &trace.times).map_err(|e| AppError::Data(e.to_string()))?;
    report::write_file(&out_dir.join("states.csv"), &report::states_csv(&states))?;
    outputs.push("states.csv".into());

    let manifest = Manifest {
        subcommand: "cascade-bench".into(),
        seed: cfg.fit.seed,
        config_text: config_text.to_string(),
        inputs,
        outputs,
    };
    report::write_file(&out_dir.join("manifest.txt"), &manifest.render())?;
    Ok(out_dir)
}

/// `emlfit toybench`: generate the ground-truth network trace.
pub fn run_toybench(
    cfg: &ToyConfigFile,
    overrides: &Overrides,
    config_text: &str,
) -> Result<PathBuf, AppError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = overrides.seed {
        cfg.toybench.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output.dir = out.clone();
    }
    cfg.toybench.validate()?;

    let params = cfg.toybench.network_params();
    let times = time_grid(cfg.toybench.t_max, cfg.toybench.n_points);
    let run = emlfit::toybench::simulate_network(&params, &times);
    let observed = add_noise(&run.output, params.noise_sd, params.seed);

    let out_dir = cfg.output.dir.clone();
    report::write_file(
        &out_dir.join("benchmark.csv"),
        &report::benchmark_csv(&run, &observed),
    )?;
    let manifest = Manifest {
        subcommand: "toybench".into(),
        seed: params.seed,
        config_text: config_text.to_string(),
        inputs: vec![],
        outputs: vec!["benchmark.csv".into(), "manifest.txt".into()],
    };
    report::write_file(&out_dir.join("manifest.txt"), &manifest.render())?;
    Ok(out_dir)
}
