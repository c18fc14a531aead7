//! Evaluation errors shared across the model layers.

use thiserror::Error;

/// Value-level failures raised while evaluating blocks, drives, or solvers.
///
/// During fitting these mark a parameter point as infeasible; they are not
/// programming errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("gate base is negative: offset {offset} + input {input} = {base}")]
    GateBase { offset: f64, input: f64, base: f64 },
    #[error("hill block input is negative: {input}")]
    HillInput { input: f64 },
    #[error("linker variable is negative: {value}")]
    LinkerInput { value: f64 },
    #[error("module optimum undefined for alpha {alpha}, beta {beta}")]
    ModuleOptimum { alpha: f64, beta: f64 },
    #[error("relaxation time {tau} is below 1e-8 of the horizon {horizon}")]
    StepUnderflow { tau: f64, horizon: f64 },
    #[error("transfer function pole at s = {s} (layer {layer})")]
    TransferPole { s: f64, layer: usize },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
}
