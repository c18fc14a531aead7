//! Exhaustive grammar search: enumerate, fit in parallel, score, rank.

use crate::expr::{enumerate_expressions, Expr, GrammarConfig};
use crate::fit::{fit_model, BoundsMap, FitResult};
use crate::opt::Multistart;
use crate::response::{Embedding, GrammarModel};
use crate::select::{rank_models, ModelReportRow, ScoreConfig};
use crate::trace::Trace;
use rayon::prelude::*;

/// Everything a search run needs beyond the traces.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub grammar: GrammarConfig,
    pub embedding: Embedding,
    pub score: ScoreConfig,
    pub multistart: Multistart,
    pub bounds: BoundsMap,
}

/// One fitted candidate with its report row.
#[derive(Debug, Clone)]
pub struct CandidateFit {
    pub expr: Expr,
    pub fit: FitResult,
    pub row: ModelReportRow,
}

/// Fit every expression in the grammar to the traces and return candidates
/// ranked by validation score. Candidates are fitted in parallel; each
/// carries a seed derived from its serialization, so results do not depend
/// on scheduling order.
pub fn run_grammar_search(traces: &[Trace], cfg: &SearchConfig) -> Vec<CandidateFit> {
    let exprs = enumerate_expressions(&cfg.grammar);
    let mut candidates: Vec<CandidateFit> = exprs
        .par_iter()
        .map(|expr| {
            let model = GrammarModel::new(expr.clone(), cfg.grammar.kind, cfg.embedding);
            let fit = fit_model(&model, traces, &cfg.bounds, &cfg.multistart);
            let row = ModelReportRow::from_fit(expr, cfg.grammar.kind, &fit, &cfg.score);
            CandidateFit {
                expr: expr.clone(),
                fit,
                row,
            }
        })
        .collect();

    let ranked_rows = rank_models(candidates.iter().map(|c| c.row.clone()).collect());
    // Reorder candidates to match the ranked rows and adopt the filled
    // delta columns.
    let mut ordered = Vec::with_capacity(candidates.len());
    for row in ranked_rows {
        let idx = candidates
            .iter()
            .position(|c| c.row.expression == row.expression)
            .expect("ranked row corresponds to a candidate");
        let mut cand = candidates.swap_remove(idx);
        cand.row = row;
        ordered.push(cand);
    }
    ordered
}

/// True when no candidate produced a feasible fit.
pub fn all_infeasible(candidates: &[CandidateFit]) -> bool {
    candidates.iter().all(|c| !c.row.feasible)
}
