//! Deterministic gate cascade used as a fixed temporal basis.
//!
//! Hidden states obey `tau_k z_k' = -z_k + G_k(z_{k-1})` with `z_0 = R(t)`
//! and a fixed parameter schedule per layer, so the system is triangular
//! and the states form progressively delayed pulses. Only a linear readout
//! `y = beta_0 + sum_j beta_j z_j` is fitted, by weighted least squares on
//! training points; the two reservoir hyperparameters (input rate and base
//! timescale) are chosen by an explicit grid search on held-out error.

use crate::error::DomainError;
use crate::expr::gate_eval;
use crate::select::{aic_bic, cascade_param_count, InfoCriteria};
use crate::solve::rk4_system;
use crate::trace::Trace;
use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

/// Fixed gate and timescale schedule for layer `k` (1-based):
/// `a_k = 0.45 + 0.035 (k-1)`, `b_1 = 1`, `b_k = 0.42 - 0.015 min(k-1, 10)`
/// for `k >= 2`, `c_1 = 1e-6`, `c_k = 0.08` for `k >= 2`, and
/// `tau_k = tau0 (1 + 0.55 (k-1))`.
pub fn gate_schedule(layer: usize, base_tau: f64) -> (f64, f64, f64, f64) {
    assert!(layer >= 1, "layers are 1-based");
    let km1 = (layer - 1) as f64;
    let a = 0.45 + 0.035 * km1;
    let b = if layer == 1 {
        1.00
    } else {
        0.42 - 0.015 * ((layer - 1).min(10) as f64)
    };
    let c = if layer == 1 { 1e-6 } else { 0.08 };
    let tau = base_tau * (1.0 + 0.55 * km1);
    (a, b, c, tau)
}

/// A cascade configuration: depth plus the two reservoir hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeSpec {
    pub depth: usize,
    /// Input rate `k_fit` of `R(t) = 1 - e^{-k_fit t}`.
    pub input_rate: f64,
    /// Base timescale `tau0` of the layer schedule.
    pub base_tau: f64,
}

impl CascadeSpec {
    pub fn new(depth: usize, input_rate: f64, base_tau: f64) -> CascadeSpec {
        assert!(depth >= 1);
        assert!(input_rate > 0.0 && base_tau > 0.0);
        CascadeSpec {
            depth,
            input_rate,
            base_tau,
        }
    }

    pub fn layer(&self, k: usize) -> (f64, f64, f64, f64) {
        gate_schedule(k, self.base_tau)
    }
}

/// Hidden states on a time grid; `layers[k-1]` is the trajectory of `z_k`.
#[derive(Debug, Clone)]
pub struct CascadeStates {
    pub times: Vec<f64>,
    pub layers: Vec<Vec<f64>>,
}

impl CascadeStates {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Simulate the cascade against its own recruitment input.
pub fn simulate(spec: &CascadeSpec, times: &[f64]) -> Result<CascadeStates, DomainError> {
    let rate = spec.input_rate;
    simulate_with_input(spec, |t| 1.0 - (-rate * t).exp(), times)
}

/// Simulate the cascade with an arbitrary input `z_0(t)`.
pub fn simulate_with_input<F>(
    spec: &CascadeSpec,
    input: F,
    times: &[f64],
) -> Result<CascadeStates, DomainError>
where
    F: Fn(f64) -> f64,
{
    let layers: Vec<(f64, f64, f64, f64)> = (1..=spec.depth).map(|k| spec.layer(k)).collect();
    simulate_layers(&layers, input, times)
}

/// Simulate an explicit stack of `(a, b, c, tau)` layers. All states start
/// at zero. The triangular system is integrated jointly with one RK4 step
/// size `h = min(min_k tau_k / 20, dt_grid / 4)`; since the derivative of
/// each state only reads states above it, the joint solve is identical to a
/// sequential per-layer solve and is prefix-stable in depth.
pub fn simulate_layers<F>(
    layers: &[(f64, f64, f64, f64)],
    input: F,
    times: &[f64],
) -> Result<CascadeStates, DomainError>
where
    F: Fn(f64) -> f64,
{
    let depth = layers.len();
    assert!(depth >= 1);
    let min_tau = layers.iter().map(|l| l.3).fold(f64::INFINITY, f64::min);
    let mut min_gap = f64::INFINITY;
    if times[0] > 0.0 {
        min_gap = times[0];
    }
    for w in times.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    let h = (min_tau / 20.0).min(min_gap / 4.0);

    let deriv = |t: f64, z: &[f64], dz: &mut [f64]| -> Result<(), DomainError> {
        for (idx, &(a, b, c, tau)) in layers.iter().enumerate() {
            let upstream = if idx == 0 { input(t) } else { z[idx - 1] };
            let gated = gate_eval(a, b, c, upstream)?;
            dz[idx] = (gated - z[idx]) / tau;
        }
        Ok(())
    };

    let rows = rk4_system(deriv, &vec![0.0; depth], times, h)?;
    let mut layers_out = vec![Vec::with_capacity(times.len()); depth];
    for row in rows {
        for (k, v) in row.into_iter().enumerate() {
            layers_out[k].push(v);
        }
    }
    Ok(CascadeStates {
        times: times.to_vec(),
        layers: layers_out,
    })
}

/// Linear readout coefficients `beta_0 .. beta_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub coeffs: Vec<f64>,
}

impl Readout {
    pub fn depth(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn predict(&self, states: &CascadeStates, depth: usize) -> Vec<f64> {
        let n = states.times.len();
        (0..n)
            .map(|i| {
                let mut y = self.coeffs[0];
                for k in 0..depth {
                    y += self.coeffs[k + 1] * states.layers[k][i];
                }
                y
            })
            .collect()
    }
}

/// A fitted readout and its scores.
#[derive(Debug, Clone)]
pub struct ReadoutFit {
    pub readout: Readout,
    pub chi2_train: f64,
    pub wmse_train: f64,
    pub wmse_hold: f64,
    pub rank_deficient: bool,
}

/// Weighted least-squares readout over the first `depth` states (plus an
/// intercept), solved by normal equations with a 1e-10 Tikhonov jitter on
/// the diagonal. Rank deficiency beyond the jitter is flagged and the
/// jittered (small-norm) solution is returned.
pub fn fit_readout(states: &CascadeStates, trace: &Trace, depth: usize) -> ReadoutFit {
    assert!(depth <= states.depth());
    assert_eq!(states.times.len(), trace.len(), "states must share the trace grid");
    let cols = depth + 1;
    let train = &trace.split.train;

    let mut xtwx = DMatrix::zeros(cols, cols);
    let mut xtwy = DVector::zeros(cols);
    let mut row = vec![0.0; cols];
    for &i in train {
        row[0] = 1.0;
        for k in 0..depth {
            row[k + 1] = states.layers[k][i];
        }
        let w = 1.0 / (trace.weights[i] * trace.weights[i]);
        for a in 0..cols {
            for b in 0..cols {
                xtwx[(a, b)] += w * row[a] * row[b];
            }
            xtwy[a] += w * row[a] * trace.values[i];
        }
    }

    let rank_deficient = Cholesky::new(xtwx.clone()).is_none();
    let mut jittered = xtwx;
    for a in 0..cols {
        jittered[(a, a)] += 1e-10;
    }
    let beta = Cholesky::new(jittered)
        .expect("jittered normal matrix is positive definite")
        .solve(&xtwy);

    let readout = Readout {
        coeffs: beta.iter().copied().collect(),
    };
    let pred = readout.predict(states, depth);
    let chi2 = |idx: &[usize]| -> f64 {
        idx.iter()
            .map(|&i| {
                let r = (trace.values[i] - pred[i]) / trace.weights[i];
                r * r
            })
            .sum()
    };
    let chi2_train = chi2(train);
    let chi2_hold = chi2(&trace.split.hold);
    ReadoutFit {
        readout,
        chi2_train,
        wmse_train: chi2_train / train.len() as f64,
        wmse_hold: chi2_hold / trace.split.hold.len() as f64,
        rank_deficient,
    }
}

/// The 18-point input-rate grid on [0.15, 0.80], endpoints included.
pub fn input_rate_grid() -> Vec<f64> {
    linspace(0.15, 0.80, 18)
}

/// The 20-point base-timescale grid on [0.5, 5.5], endpoints included.
pub fn base_tau_grid() -> Vec<f64> {
    linspace(0.5, 5.5, 20)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
        .collect()
}

/// Best reservoir per depth, after an exhaustive hyperparameter grid search.
#[derive(Debug, Clone)]
pub struct DepthResult {
    pub depth: usize,
    pub n_params: usize,
    pub input_rate: f64,
    pub base_tau: f64,
    pub chi2_train: f64,
    pub wmse_train: f64,
    pub wmse_hold: f64,
    pub info: InfoCriteria,
    pub readout: Readout,
}

/// For each depth `1..=max_depth`, minimize held-out wMSE over the full
/// hyperparameter grid. One cascade simulation at `max_depth` serves every
/// smaller depth at the same grid point (states are prefix-stable). Grid
/// points are independent work items; the reduction breaks ties toward the
/// lowest input rate, then the lowest base timescale.
pub fn reservoir_grid_search(
    trace: &Trace,
    max_depth: usize,
) -> Result<Vec<DepthResult>, DomainError> {
    let rates = input_rate_grid();
    let taus = base_tau_grid();
    let pairs: Vec<(f64, f64)> = rates
        .iter()
        .flat_map(|&r| taus.iter().map(move |&t| (r, t)))
        .collect();

    type GridPointFits = Vec<(f64, f64, ReadoutFit)>;
    let evaluated: Vec<Result<GridPointFits, DomainError>> = pairs
        .par_iter()
        .map(|&(rate, tau0)| {
            let spec = CascadeSpec::new(max_depth, rate, tau0);
            let states = simulate(&spec, &trace.times)?;
            Ok((1..=max_depth)
                .map(|depth| (rate, tau0, fit_readout(&states, trace, depth)))
                .collect())
        })
        .collect();

    let mut best: Vec<Option<(f64, f64, ReadoutFit)>> = vec![None; max_depth];
    for point in evaluated {
        let point = point?;
        for (depth_idx, (rate, tau0, fit)) in point.into_iter().enumerate() {
            let better = match &best[depth_idx] {
                None => true,
                Some((br, bt, bf)) => {
                    match fit.wmse_hold.total_cmp(&bf.wmse_hold) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => (rate, tau0) < (*br, *bt),
                    }
                }
            };
            if better {
                best[depth_idx] = Some((rate, tau0, fit));
            }
        }
    }

    Ok(best
        .into_iter()
        .enumerate()
        .map(|(idx, entry)| {
            let depth = idx + 1;
            let (rate, tau0, fit) = entry.expect("grid search covered every depth");
            let n_params = cascade_param_count(depth);
            let info = aic_bic(fit.chi2_train, trace.split.train.len(), n_params);
            DepthResult {
                depth,
                n_params,
                input_rate: rate,
                base_tau: tau0,
                chi2_train: fit.chi2_train,
                wmse_train: fit.wmse_train,
                wmse_hold: fit.wmse_hold,
                info,
                readout: fit.readout,
            }
        })
        .collect())
}

/// Linearization of the cascade around a working point: per-layer gains
/// `g_k = a_k (c_k + z*_{k-1})^{a_k - 1} - b_k` and timescales.
#[derive(Debug, Clone)]
pub struct LinearResponse {
    /// Working-point values `z*_0 .. z*_{K-1}` (layer 0 is the input).
    pub working_point: Vec<f64>,
    pub gains: Vec<f64>,
    pub taus: Vec<f64>,
}

/// Linear response at one sampled time of a simulated cascade.
pub fn linear_response(
    spec: &CascadeSpec,
    states: &CascadeStates,
    at_index: usize,
) -> LinearResponse {
    let input = 1.0 - (-spec.input_rate * states.times[at_index]).exp();
    let mut working_point = vec![input];
    for k in 1..spec.depth {
        working_point.push(states.layers[k - 1][at_index]);
    }
    let mut gains = Vec::with_capacity(spec.depth);
    let mut taus = Vec::with_capacity(spec.depth);
    for k in 1..=spec.depth {
        let (a, b, c, tau) = spec.layer(k);
        let z_star = working_point[k - 1];
        gains.push(a * (c + z_star).powf(a - 1.0) - b);
        taus.push(tau);
    }
    LinearResponse {
        working_point,
        gains,
        taus,
    }
}

/// Transfer function `H_K(s) = prod_k g_k / (1 + s tau_k)` of the
/// linearized cascade at a real frequency. Poles are reported as errors.
pub fn transfer_function(lr: &LinearResponse, s: f64) -> Result<f64, DomainError> {
    let mut h = 1.0;
    for (k, (&g, &tau)) in lr.gains.iter().zip(&lr.taus).enumerate() {
        let denom = 1.0 + s * tau;
        if denom.abs() < 1e-12 {
            return Err(DomainError::TransferPole { s, layer: k + 1 });
        }
        h *= g / denom;
    }
    Ok(h)
}
