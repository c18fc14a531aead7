//! Candidate scoring, information criteria, and ranking.

use crate::expr::{BlockKind, Expr};
use crate::fit::FitResult;
use crate::response::Embedding;

/// Structural penalty weights for the validation score. The published
/// setting is zero for both, leaving the held-out weighted MSE as the
/// selection criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub lambda_depth: f64,
    pub lambda_nodes: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            lambda_depth: 0.0,
            lambda_nodes: 0.0,
        }
    }
}

/// Validation score: held-out wMSE plus optional depth and node penalties.
/// Infeasible fits score infinity.
pub fn validation_score(fit: &FitResult, expr: &Expr, cfg: &ScoreConfig) -> f64 {
    if !fit.feasible {
        return f64::INFINITY;
    }
    fit.wmse_hold + cfg.lambda_depth * expr.depth() as f64 + cfg.lambda_nodes * expr.node_count() as f64
}

/// Information criteria from training residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
    /// True when chi-squared is exactly zero and both criteria are -inf.
    pub degenerate: bool,
}

/// `AIC = N ln(chi2 / N) + 2p`, `BIC = N ln(chi2 / N) + p ln N`.
pub fn aic_bic(chi2_train: f64, n_train: usize, n_params: usize) -> InfoCriteria {
    assert!(n_train >= 1, "need at least one training point");
    assert!(chi2_train >= 0.0, "chi-squared must be nonnegative");
    let n = n_train as f64;
    let p = n_params as f64;
    let ll = n * (chi2_train / n).ln();
    InfoCriteria {
        aic: ll + 2.0 * p,
        bic: ll + p * n.ln(),
        degenerate: chi2_train == 0.0,
    }
}

/// Fitted parameter count of a grammar expression in a given embedding.
///
/// The gate grammar carries globals `y0, B, k` plus three parameters per
/// gate; the Hill grammar carries `y0, k` plus three per block (amplitudes
/// live inside the blocks). Relaxation adds `tau`; the dose embedding adds
/// `tau` but pins the baseline, leaving the count unchanged.
pub fn count_params(expr: &Expr, kind: BlockKind, embedding: Embedding) -> usize {
    let base = match kind {
        BlockKind::Eml => 3,
        BlockKind::Hill => 2,
    };
    let embed = match embedding {
        Embedding::Static => 0,
        Embedding::Relaxation => 1,
        Embedding::DoseOde => 0,
    };
    base + embed + 3 * expr.gate_count()
}

/// Parameter count of a depth-`K` cascade readout: `K + 1` coefficients
/// plus the two grid-searched reservoir hyperparameters.
pub fn cascade_param_count(depth: usize) -> usize {
    depth + 3
}

/// One row of the ranked model report.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReportRow {
    pub expression: String,
    pub n_params: usize,
    pub nodes: usize,
    pub chi2_train: f64,
    pub wmse_train: f64,
    pub wmse_hold: f64,
    pub score: f64,
    pub aic: f64,
    pub bic: f64,
    pub delta_aic: f64,
    pub delta_bic: f64,
    pub bound_flags: Vec<String>,
    pub feasible: bool,
}

impl ModelReportRow {
    pub fn from_fit(expr: &Expr, kind: BlockKind, fit: &FitResult, cfg: &ScoreConfig) -> Self {
        let info = aic_bic(fit.chi2_train, fit.n_train.max(1), fit.n_params);
        ModelReportRow {
            expression: expr.display_with(kind),
            n_params: fit.n_params,
            nodes: expr.node_count(),
            chi2_train: fit.chi2_train,
            wmse_train: fit.wmse_train,
            wmse_hold: fit.wmse_hold,
            score: validation_score(fit, expr, cfg),
            aic: info.aic,
            bic: info.bic,
            delta_aic: f64::NAN,
            delta_bic: f64::NAN,
            bound_flags: fit.bound_flags(),
            feasible: fit.feasible,
        }
    }
}

/// Rank rows ascending by score with deterministic tie-breaks
/// (parameter count, then node count, then expression text), and fill
/// delta-AIC/BIC relative to the AIC-minimal row.
pub fn rank_models(mut rows: Vec<ModelReportRow>) -> Vec<ModelReportRow> {
    assert!(!rows.is_empty(), "need at least one row to rank");
    rows.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.n_params.cmp(&b.n_params))
            .then(a.nodes.cmp(&b.nodes))
            .then(a.expression.cmp(&b.expression))
    });
    let reference = rows
        .iter()
        .min_by(|a, b| a.aic.total_cmp(&b.aic))
        .map(|r| (r.aic, r.bic))
        .unwrap();
    for row in rows.iter_mut() {
        row.delta_aic = row.aic - reference.0;
        row.delta_bic = row.bic - reference.1;
    }
    rows
}
