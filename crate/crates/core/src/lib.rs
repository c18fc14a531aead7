//! Discovery of reduced response models over a restricted expression grammar.
//!
//! The library enumerates expression trees built from a non-monotone
//! activation-suppression gate (or a Hill block), embeds them in static or
//! first-order relaxation response models, fits them to weighted time-series
//! traces, and ranks the candidates by held-out error and information
//! criteria. A deterministic gate cascade with a fitted linear readout is
//! provided for coarse-graining benchmarks, together with the 50-state
//! ground-truth network it is scored against.

pub mod cascade;
pub mod error;
pub mod expr;
pub mod fit;
pub mod opt;
pub mod response;
pub mod rng;
pub mod search;
pub mod select;
pub mod solve;
pub mod toybench;
pub mod trace;

pub use error::DomainError;
pub use expr::{BlockKind, Expr, GrammarConfig};
pub use fit::{FitResult, ResponseModel};
pub use response::Embedding;
pub use trace::Trace;
