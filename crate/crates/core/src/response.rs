//! Input signals and response-model families.
//!
//! Grammar expressions are embedded in three ways: a static algebraic map
//! `y = y0 + B E(R(t; k))`, a first-order relaxation model
//! `tau y' = -y + y0 + B E(R(t; k))`, and a dose-response relaxation model
//! `tau y' = -y + 1 + B E(R_D(t; k))` with `R_D(t) = D (1 - e^{-k t})` and
//! `y(0) = 1`. Hill-grammar embeddings carry no global amplitude; each
//! block owns its own. The saturating-linker comparator
//! `tau y' = -y + 1 + A [Phi_N(S_D(t)) - Phi_N(S0)]` lives here as well.

use crate::error::DomainError;
use crate::expr::{eval_expr, BlockKind, Expr};
use crate::fit::ResponseModel;
use crate::opt::{ParamSpec, Scale};
use crate::solve::relax_solve;
use crate::trace::Trace;

/// Saturating recruitment input `R(t) = amplitude (1 - e^{-k t})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecruitmentInput {
    pub rate: f64,
    pub amplitude: f64,
}

impl RecruitmentInput {
    pub fn new(rate: f64, amplitude: f64) -> RecruitmentInput {
        assert!(rate > 0.0, "recruitment rate must be positive");
        assert!(amplitude >= 0.0, "recruitment amplitude must be nonnegative");
        RecruitmentInput { rate, amplitude }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (1.0 - (-self.rate * t).exp())
    }
}

/// Value of the activation-suppression module `R^alpha - beta R`.
pub fn m1_value(alpha: f64, beta: f64, r: f64) -> f64 {
    r.powf(alpha) - beta * r
}

/// Unique maximizer `(alpha / beta)^{1 / (1 - alpha)}` of the module, valid
/// for `0 < alpha < 1`, `beta > 0`.
pub fn m1_optimum(alpha: f64, beta: f64) -> Result<f64, DomainError> {
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0) {
        return Err(DomainError::ModuleOptimum { alpha, beta });
    }
    Ok((alpha / beta).powf(1.0 / (1.0 - alpha)))
}

/// Fully-occupied-linker fraction `Phi_N(S) = S / (S^N + sum_n n S^{N-n})`.
pub fn linker_phi(sites: u32, s: f64) -> Result<f64, DomainError> {
    assert!(sites >= 1, "need at least one binding site");
    if s < 0.0 {
        return Err(DomainError::LinkerInput { value: s });
    }
    let n = sites as i32;
    let mut denom = s.powi(n);
    for j in 1..=n {
        denom += j as f64 * s.powi(n - j);
    }
    Ok(s / denom)
}

/// How a grammar expression is wrapped into a trajectory model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// Instantaneous algebraic response, no intrinsic relaxation.
    Static,
    /// First-order relaxation toward the static response.
    Relaxation,
    /// Dose-driven relaxation normalized to a unit baseline.
    DoseOde,
}

impl Embedding {
    pub fn name(self) -> &'static str {
        match self {
            Embedding::Static => "static",
            Embedding::Relaxation => "relax",
            Embedding::DoseOde => "dose-ode",
        }
    }
}

fn spec_y0() -> ParamSpec {
    ParamSpec::new("y0", -100.0, 100.0, Scale::Asinh { scale: 0.1 })
}

fn spec_amplitude() -> ParamSpec {
    ParamSpec::new("B", -1e3, 1e3, Scale::Asinh { scale: 1.0 })
}

fn spec_rate() -> ParamSpec {
    ParamSpec::new("k", 1e-3, 10.0, Scale::Log)
}

fn spec_tau() -> ParamSpec {
    ParamSpec::new("tau", 1e-2, 1e3, Scale::Log)
}

fn block_specs(kind: BlockKind, count: usize) -> Vec<ParamSpec> {
    let mut out = Vec::with_capacity(3 * count);
    for i in 1..=count {
        let names = kind.param_names(i);
        match kind {
            BlockKind::Eml => {
                out.push(ParamSpec::new(names[0].clone(), 1e-3, 100.0, Scale::Log));
                out.push(ParamSpec::new(
                    names[1].clone(),
                    0.0,
                    10.0,
                    Scale::Asinh { scale: 0.01 },
                ));
                out.push(ParamSpec::new(
                    names[2].clone(),
                    0.0,
                    100.0,
                    Scale::Asinh { scale: 1e-4 },
                ));
            }
            BlockKind::Hill => {
                out.push(ParamSpec::new(
                    names[0].clone(),
                    -1e3,
                    1e3,
                    Scale::Asinh { scale: 0.01 },
                ));
                out.push(ParamSpec::new(names[1].clone(), 1e-4, 10.0, Scale::Log));
                out.push(ParamSpec::new(names[2].clone(), 0.5, 30.0, Scale::Log));
            }
        }
    }
    out
}

/// A grammar expression embedded as a trajectory model.
#[derive(Debug, Clone)]
pub struct GrammarModel {
    pub expr: Expr,
    pub kind: BlockKind,
    pub embedding: Embedding,
}

impl GrammarModel {
    pub fn new(expr: Expr, kind: BlockKind, embedding: Embedding) -> GrammarModel {
        GrammarModel {
            expr,
            kind,
            embedding,
        }
    }

    /// Global (non-block) parameter count for this kind and embedding.
    fn global_count(&self) -> usize {
        let base = match self.kind {
            BlockKind::Eml => 3,  // y0, B, k
            BlockKind::Hill => 2, // y0, k
        };
        match self.embedding {
            Embedding::Static => base,
            Embedding::Relaxation => base + 1,
            // The baseline is pinned at 1, the relaxation time is fitted.
            Embedding::DoseOde => base,
        }
    }

    fn split_theta<'a>(&self, theta: &'a [f64]) -> (Globals, &'a [f64]) {
        let g = match (self.kind, self.embedding) {
            (BlockKind::Eml, Embedding::Static) => Globals {
                y0: theta[0],
                amp: theta[1],
                rate: theta[2],
                tau: None,
            },
            (BlockKind::Eml, Embedding::Relaxation) => Globals {
                y0: theta[0],
                amp: theta[1],
                rate: theta[2],
                tau: Some(theta[3]),
            },
            (BlockKind::Eml, Embedding::DoseOde) => Globals {
                y0: 1.0,
                amp: theta[0],
                rate: theta[1],
                tau: Some(theta[2]),
            },
            (BlockKind::Hill, Embedding::Static) => Globals {
                y0: theta[0],
                amp: 1.0,
                rate: theta[1],
                tau: None,
            },
            (BlockKind::Hill, Embedding::Relaxation) => Globals {
                y0: theta[0],
                amp: 1.0,
                rate: theta[1],
                tau: Some(theta[2]),
            },
            (BlockKind::Hill, Embedding::DoseOde) => Globals {
                y0: 1.0,
                amp: 1.0,
                rate: theta[0],
                tau: Some(theta[1]),
            },
        };
        (g, &theta[self.global_count()..])
    }
}

struct Globals {
    y0: f64,
    amp: f64,
    rate: f64,
    tau: Option<f64>,
}

impl ResponseModel for GrammarModel {
    fn label(&self) -> String {
        self.expr.display_with(self.kind)
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        match (self.kind, self.embedding) {
            (BlockKind::Eml, Embedding::Static) => {
                specs.extend([spec_y0(), spec_amplitude(), spec_rate()]);
            }
            (BlockKind::Eml, Embedding::Relaxation) => {
                specs.extend([spec_y0(), spec_amplitude(), spec_rate(), spec_tau()]);
            }
            (BlockKind::Eml, Embedding::DoseOde) => {
                specs.extend([spec_amplitude(), spec_rate(), spec_tau()]);
            }
            (BlockKind::Hill, Embedding::Static) => {
                specs.extend([spec_y0(), spec_rate()]);
            }
            (BlockKind::Hill, Embedding::Relaxation) => {
                specs.extend([spec_y0(), spec_rate(), spec_tau()]);
            }
            (BlockKind::Hill, Embedding::DoseOde) => {
                specs.extend([spec_rate(), spec_tau()]);
            }
        }
        specs.extend(block_specs(self.kind, self.expr.gate_count()));
        specs
    }

    fn predict(&self, theta: &[f64], trace: &Trace) -> Result<Vec<f64>, DomainError> {
        let (globals, blocks) = self.split_theta(theta);
        let amplitude = match self.embedding {
            Embedding::DoseOde => trace
                .dose
                .expect("dose-ode embedding requires traces with doses"),
            _ => 1.0,
        };
        let input = RecruitmentInput::new(globals.rate, amplitude);
        let drive = |t: f64| -> Result<f64, DomainError> {
            let e = eval_expr(&self.expr, self.kind, blocks, input.value(t))?;
            let v = globals.y0 + globals.amp * e;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DomainError::NonFinite { context: "drive" })
            }
        };
        match globals.tau {
            None => trace.times.iter().map(|&t| drive(t)).collect(),
            Some(tau) => relax_solve(drive, tau, globals.y0, &trace.times),
        }
    }
}

/// Saturating-linker comparator with `N` binding sites. Parameters:
/// `A, S0, q, k, tau`; the trajectory starts at the normalized baseline 1.
#[derive(Debug, Clone, Copy)]
pub struct LinkerModel {
    pub sites: u32,
}

impl LinkerModel {
    pub fn new(sites: u32) -> LinkerModel {
        assert!(sites >= 1);
        LinkerModel { sites }
    }

    /// Trajectory for an explicit parameter set, also used by tests.
    #[allow(clippy::too_many_arguments)]
    pub fn trajectory(
        &self,
        amp: f64,
        s0: f64,
        conversion: f64,
        rate: f64,
        tau: f64,
        dose: f64,
        times: &[f64],
    ) -> Result<Vec<f64>, DomainError> {
        let phi0 = linker_phi(self.sites, s0)?;
        let drive = |t: f64| -> Result<f64, DomainError> {
            let s = s0 + conversion * dose * (1.0 - (-rate * t).exp());
            Ok(1.0 + amp * (linker_phi(self.sites, s)? - phi0))
        };
        relax_solve(drive, tau, 1.0, times)
    }
}

impl ResponseModel for LinkerModel {
    fn label(&self) -> String {
        format!("linker-N{}", self.sites)
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("A", 1e-2, 1e8, Scale::Log),
            ParamSpec::new("S0", 1e-2, 10.0, Scale::Log),
            ParamSpec::new("q", 1e-8, 1.0, Scale::Log),
            spec_rate(),
            spec_tau(),
        ]
    }

    fn predict(&self, theta: &[f64], trace: &Trace) -> Result<Vec<f64>, DomainError> {
        let dose = trace
            .dose
            .expect("linker model requires traces with doses");
        self.trajectory(
            theta[0], theta[1], theta[2], theta[3], theta[4], dose, &trace.times,
        )
    }
}
