//! Ground-truth activation/adaptation network for the coarse-graining
//! benchmark.
//!
//! A fast activation branch of first-order stages and a slower inhibitory
//! branch are both driven by the same recruitment input; the observed
//! output is a saturating positive function of the terminal fast state
//! minus a saturating negative function of the terminal slow state, plus
//! seeded Gaussian observation noise.

use crate::rng::CounterRng;
use crate::solve::rk4_system;
use crate::trace::Trace;

/// Network parameters. Defaults are the published benchmark set.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub n_fast: usize,
    pub n_slow: usize,
    pub input_rate: f64,
    pub on_fast: f64,
    pub off_fast: f64,
    pub tau_fast: f64,
    pub on_slow: f64,
    pub off_slow: f64,
    pub tau_slow: f64,
    pub amp_fast: f64,
    pub amp_slow: f64,
    pub half_fast: f64,
    pub half_slow: f64,
    pub baseline: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            n_fast: 20,
            n_slow: 30,
            input_rate: 0.45,
            on_fast: 2.4,
            off_fast: 0.55,
            tau_fast: 0.28,
            on_slow: 0.75,
            off_slow: 0.08,
            tau_slow: 0.75,
            amp_fast: 1.6,
            amp_slow: 1.25,
            half_fast: 0.18,
            half_slow: 0.22,
            baseline: 0.0,
            noise_sd: 0.015,
            seed: 1,
        }
    }
}

/// All simulated states on the output grid.
#[derive(Debug, Clone)]
pub struct NetworkTrajectory {
    pub times: Vec<f64>,
    pub input: Vec<f64>,
    /// `fast[j]` is the trajectory of fast stage `j + 1`.
    pub fast: Vec<Vec<f64>>,
    pub slow: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl NetworkTrajectory {
    pub fn terminal_fast(&self) -> &[f64] {
        self.fast.last().expect("at least one fast stage")
    }

    pub fn terminal_slow(&self) -> &[f64] {
        self.slow.last().expect("at least one slow stage")
    }
}

/// Integrate the full network from an all-zero initial state.
///
/// The first stage of each branch obeys
/// `x' = k_on R(t) (1 - x) - k_off x`; later stages are linear delay chains
/// `x_j' = (x_{j-1} - x_j) / tau`.
pub fn simulate_network(p: &NetworkParams, times: &[f64]) -> NetworkTrajectory {
    assert!(p.n_fast >= 1 && p.n_slow >= 1);
    let dim = p.n_fast + p.n_slow;
    let input = |t: f64| 1.0 - (-p.input_rate * t).exp();

    let fastest = [
        p.tau_fast,
        p.tau_slow,
        1.0 / (p.on_fast + p.off_fast),
        1.0 / (p.on_slow + p.off_slow),
        1.0 / p.input_rate,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    let mut min_gap = f64::INFINITY;
    if times[0] > 0.0 {
        min_gap = times[0];
    }
    for w in times.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    let h = (fastest / 20.0).min(min_gap / 4.0);

    let deriv = |t: f64, x: &[f64], dx: &mut [f64]| {
        let r = input(t);
        dx[0] = p.on_fast * r * (1.0 - x[0]) - p.off_fast * x[0];
        for j in 1..p.n_fast {
            dx[j] = (x[j - 1] - x[j]) / p.tau_fast;
        }
        let s = p.n_fast;
        dx[s] = p.on_slow * r * (1.0 - x[s]) - p.off_slow * x[s];
        for j in 1..p.n_slow {
            dx[s + j] = (x[s + j - 1] - x[s + j]) / p.tau_slow;
        }
        Ok(())
    };

    let rows = rk4_system(deriv, &vec![0.0; dim], times, h).expect("network dynamics are total");

    let mut fast = vec![Vec::with_capacity(times.len()); p.n_fast];
    let mut slow = vec![Vec::with_capacity(times.len()); p.n_slow];
    let mut output = Vec::with_capacity(times.len());
    for row in &rows {
        for j in 0..p.n_fast {
            fast[j].push(row[j]);
        }
        for j in 0..p.n_slow {
            slow[j].push(row[p.n_fast + j]);
        }
        let a = row[p.n_fast - 1];
        let i = row[dim - 1];
        output.push(
            p.baseline + p.amp_fast * a / (p.half_fast + a) - p.amp_slow * i / (p.half_slow + i),
        );
    }
    NetworkTrajectory {
        times: times.to_vec(),
        input: times.iter().map(|&t| input(t)).collect(),
        fast,
        slow,
        output,
    }
}

/// Add independent Gaussian observation noise from the portable
/// counter-based stream; `sigma = 0` returns the input unchanged.
pub fn add_noise(y_true: &[f64], noise_sd: f64, seed: u64) -> Vec<f64> {
    assert!(noise_sd >= 0.0);
    if noise_sd == 0.0 {
        return y_true.to_vec();
    }
    let rng = CounterRng::new(seed);
    y_true
        .iter()
        .enumerate()
        .map(|(i, &y)| y + noise_sd * rng.normal_at(i as u64))
        .collect()
}

/// Evenly spaced grid with exact endpoints.
pub fn time_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    assert!(n_points >= 2 && t_max > 0.0);
    let step = t_max / (n_points - 1) as f64;
    (0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                t_max
            } else {
                i as f64 * step
            }
        })
        .collect()
}

/// Simulate the benchmark and package the noisy observation as a trace
/// whose SEM column is the known noise level.
pub fn benchmark_trace(
    p: &NetworkParams,
    t_max: f64,
    n_points: usize,
    split_offset: usize,
) -> (NetworkTrajectory, Trace) {
    let times = time_grid(t_max, n_points);
    let trajectory = simulate_network(p, &times);
    let observed = add_noise(&trajectory.output, p.noise_sd, p.seed);
    let trace = Trace::new(
        "benchmark",
        times,
        observed,
        vec![p.noise_sd; n_points],
        split_offset,
    )
    .expect("benchmark grid is valid");
    (trajectory, trace)
}
