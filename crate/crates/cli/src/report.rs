//! Report files: ranked models, parameter dumps, plot data, cascade tables,
//! benchmark exports, and the run manifest. All emission is deterministic;
//! nothing here reads the clock.

use crate::AppError;
use emlfit::cascade::{CascadeStates, DepthResult};
use emlfit::search::CandidateFit;
use emlfit::select::ModelReportRow;
use emlfit::toybench::NetworkTrajectory;
use emlfit::trace::Trace;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Round to `sig` significant figures for display; comparisons elsewhere
/// always use full precision.
pub fn fmt_sig(x: f64, sig: i32) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(sig - 1 - mag);
    let rounded = (x * scale).round() / scale;
    if mag >= sig - 1 {
        format!("{rounded:.0}")
    } else {
        format!("{:.*}", (sig - 1 - mag) as usize, rounded)
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn write_file(path: &Path, content: &str) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| AppError::io(path, e))
}

/// Ranked candidate table.
pub fn ranked_csv(rows: &[ModelReportRow]) -> String {
    let mut out = String::from(
        "rank,expression,p,chi2_train,wmse_train,wmse_hold,score,AIC,BIC,dAIC,dBIC,bound_flags\n",
    );
    for (i, row) in rows.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            row.expression,
            row.n_params,
            fmt(row.chi2_train),
            fmt(row.wmse_train),
            fmt(row.wmse_hold),
            fmt(row.score),
            fmt_sig(row.aic, 3),
            fmt_sig(row.bic, 3),
            fmt_sig(row.delta_aic, 3),
            fmt_sig(row.delta_bic, 3),
            row.bound_flags.join(";"),
        )
        .unwrap();
    }
    out
}

/// Long-format parameter dump for every candidate.
pub fn params_csv(candidates: &[CandidateFit]) -> String {
    let mut out = String::from("expression,param,value,at_bound\n");
    for cand in candidates {
        for p in &cand.fit.params {
            let flag = if p.at_lower {
                "lo"
            } else if p.at_upper {
                "hi"
            } else {
                ""
            };
            writeln!(
                out,
                "{},{},{},{flag}",
                cand.row.expression,
                p.name,
                fmt(p.value)
            )
            .unwrap();
        }
    }
    out
}

/// Human summary of the winning candidate.
pub fn best_model_summary(best: &CandidateFit) -> String {
    let mut out = String::new();
    writeln!(out, "expression: {}", best.row.expression).unwrap();
    writeln!(out, "parameters: {}", best.fit.n_params).unwrap();
    writeln!(out, "chi2_train: {}", fmt(best.fit.chi2_train)).unwrap();
    writeln!(out, "wmse_train: {}", fmt(best.fit.wmse_train)).unwrap();
    writeln!(out, "wmse_hold:  {}", fmt(best.fit.wmse_hold)).unwrap();
    writeln!(out, "score:      {}", fmt(best.row.score)).unwrap();
    writeln!(
        out,
        "starts:     {} tried, best index {}",
        best.fit.starts_tried, best.fit.best_start
    )
    .unwrap();
    writeln!(out, "converged:  {}", best.fit.converged).unwrap();
    writeln!(out).unwrap();
    for p in &best.fit.params {
        let mut flag = String::new();
        if p.at_lower {
            flag = " (at lower bound)".into();
        }
        if p.at_upper {
            flag = " (at upper bound)".into();
        }
        writeln!(out, "{} = {}{flag}", p.name, fmt(p.value)).unwrap();
    }
    out
}

/// Data-plus-model columns for one trace; model columns are keyed by
/// expression serialization.
pub fn plot_csv(trace: &Trace, models: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("t,y,sem");
    for (name, _) in models {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..trace.len() {
        write!(
            out,
            "{},{},{}",
            fmt(trace.times[i]),
            fmt(trace.values[i]),
            fmt(trace.sems[i])
        )
        .unwrap();
        for (_, pred) in models {
            out.push(',');
            out.push_str(&fmt(pred[i]));
        }
        out.push('\n');
    }
    out
}

/// Per-depth cascade report; depth zero is the saturating comparator fit.
pub fn cascade_csv(comparator: Option<&ModelReportRow>, rows: &[DepthResult]) -> String {
    let mut out = String::from("K,p,best_k_fit,best_tau0,chi2_train,wmse_hold,AIC,BIC\n");
    if let Some(row) = comparator {
        writeln!(
            out,
            "0,{},,,{},{},{},{}",
            row.n_params,
            fmt(row.chi2_train),
            fmt(row.wmse_hold),
            fmt_sig(row.aic, 3),
            fmt_sig(row.bic, 3),
        )
        .unwrap();
    }
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.depth,
            row.n_params,
            fmt(row.input_rate),
            fmt(row.base_tau),
            fmt(row.chi2_train),
            fmt(row.wmse_hold),
            fmt_sig(row.info.aic, 3),
            fmt_sig(row.info.bic, 3),
        )
        .unwrap();
    }
    out
}

/// Hidden-state export `t, z_1..z_K`.
pub fn states_csv(states: &CascadeStates) -> String {
    let mut out = String::from("t");
    for k in 1..=states.depth() {
        write!(out, ",z_{k}").unwrap();
    }
    out.push('\n');
    for i in 0..states.times.len() {
        out.push_str(&fmt(states.times[i]));
        for layer in &states.layers {
            out.push(',');
            out.push_str(&fmt(layer[i]));
        }
        out.push('\n');
    }
    out
}

/// Benchmark export with the terminal branch states.
pub fn benchmark_csv(run: &NetworkTrajectory, observed: &[f64]) -> String {
    let mut out = String::from("t,R,A_terminal,I_terminal,y_true,y_obs\n");
    let a = run.terminal_fast();
    let i_state = run.terminal_slow();
    for i in 0..run.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(run.times[i]),
            fmt(run.input[i]),
            fmt(a[i]),
            fmt(i_state[i]),
            fmt(run.output[i]),
            fmt(observed[i]),
        )
        .unwrap();
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run manifest: subcommand, full config text, seed, input hashes, and the
/// emitted files. Contains no timestamps so reruns are byte-identical.
pub struct Manifest {
    pub subcommand: String,
    pub seed: u64,
    pub config_text: String,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "subcommand: {}", self.subcommand).unwrap();
        writeln!(out, "seed: {}", self.seed).unwrap();
        for (path, hash) in &self.inputs {
            writeln!(out, "input: {} sha256={hash}", path.display()).unwrap();
        }
        let mut outputs = self.outputs.clone();
        outputs.sort();
        for name in outputs {
            writeln!(out, "output: {name}").unwrap();
        }
        writeln!(out, "config-sha256: {}", sha256_hex(self.config_text.as_bytes())).unwrap();
        writeln!(out, "--- config ---").unwrap();
        out.push_str(&self.config_text);
        if !self.config_text.ends_with('\n') {
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_figures_match_reporting_convention() {
        assert_eq!(fmt_sig(-216.73, 3), "-217");
        assert_eq!(fmt_sig(-194.13, 3), "-194");
        assert_eq!(fmt_sig(1032.3, 3), "1030");
        assert_eq!(fmt_sig(0.069812, 3), "0.0698");
        assert_eq!(fmt_sig(0.0, 3), "0");
        assert_eq!(fmt_sig(f64::INFINITY, 3), "inf");
    }

    #[test]
    fn manifest_is_deterministic() {
        let m = Manifest {
            subcommand: "toybench".into(),
            seed: 1,
            config_text: "[toybench]\nseed = 1\n".into(),
            inputs: vec![],
            outputs: vec!["benchmark.csv".into(), "manifest.txt".into()],
        };
        assert_eq!(m.render(), m.render());
        assert!(m.render().contains("config-sha256"));
    }
}
