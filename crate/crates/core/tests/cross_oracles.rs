//! Cross-checks between independent computational routes.

mod common;

use common::{brute_force_expressions, linspace};
use emlfit::cascade::{
    fit_readout, linear_response, simulate, simulate_with_input, transfer_function, CascadeSpec,
};
use emlfit::expr::{enumerate_expressions, BlockKind, GrammarConfig};
use emlfit::rng::CounterRng;
use emlfit::solve::{convolution_solve, relax_solve};
use emlfit::trace::Trace;
use std::collections::BTreeSet;

#[test]
fn enumerator_matches_brute_force_everywhere_small() {
    for max_depth in 0..=3 {
        for max_nodes in 1..=7 {
            let cfg = GrammarConfig::new(BlockKind::Eml, max_depth, max_nodes);
            let fast: BTreeSet<_> = enumerate_expressions(&cfg).into_iter().collect();
            let brute = brute_force_expressions(max_depth, max_nodes);
            assert_eq!(
                fast, brute,
                "mismatch at depth<={max_depth}, nodes<={max_nodes}"
            );
        }
    }
}

#[test]
fn solver_agrees_with_convolution_on_random_smooth_drives() {
    // 20 random damped-oscillation drives, tau log-uniform in [0.1, 100].
    let rng = CounterRng::new(2024);
    let times = linspace(0.0, 10.0, 41);
    for case in 0..20 {
        let base = 10 * case;
        let tau = 0.1 * 10f64.powf(3.0 * rng.uniform_at(base));
        let amp1 = 2.0 * rng.uniform_at(base + 1) - 1.0;
        let amp2 = 2.0 * rng.uniform_at(base + 2) - 1.0;
        let decay = 0.5 * rng.uniform_at(base + 3);
        let omega = 2.0 * rng.uniform_at(base + 4);
        let phase = std::f64::consts::TAU * rng.uniform_at(base + 5);
        let y0 = 2.0 * rng.uniform_at(base + 6) - 1.0;
        let drive = |s: f64| Ok(amp1 * (-decay * s).exp() + amp2 * (omega * s + phase).cos());

        let a = relax_solve(drive, tau, y0, &times).unwrap();
        let b = convolution_solve(drive, tau, y0, &times).unwrap();
        let scale = b.iter().fold(0f64, |m, v| m.max(v.abs())).max(1e-12);
        for i in 0..times.len() {
            assert!(
                (a[i] - b[i]).abs() <= 1e-6 * scale,
                "case {case} (tau={tau:.3}) diverges at t={}: {} vs {}",
                times[i],
                a[i],
                b[i]
            );
        }
    }
}

#[test]
fn cascade_layers_match_nested_convolution() {
    // Layer one's drive is an analytic function of time, so its convolution
    // solution is direct; layer two's drive nests the layer-one convolution
    // inside the quadrature. Cubic cost, kept small. Gate offsets are O(0.1)
    // so the drives are smooth at zero input; the oracle contract covers
    // smooth drives only (offsets near zero cusp at t = 0).
    let (a1, b1, c1, tau1) = (0.45, 0.3, 0.1, 1.0);
    let (a2, b2, c2, tau2) = (0.485, 0.405, 0.08, 1.55);
    let rate = 0.45;
    let times = linspace(0.0, 10.0, 21);
    let states = emlfit::cascade::simulate_layers(
        &[(a1, b1, c1, tau1), (a2, b2, c2, tau2)],
        move |t| 1.0 - (-rate * t).exp(),
        &times,
    )
    .unwrap();

    let input = move |t: f64| 1.0 - (-rate * t).exp();

    let drive1 = |s: f64| emlfit::expr::gate_eval(a1, b1, c1, input(s));
    let z1_conv = convolution_solve(drive1, tau1, 0.0, &times).unwrap();
    let scale1 = z1_conv.iter().fold(0f64, |m, v| m.max(v.abs()));
    for i in 0..times.len() {
        assert!(
            (states.layers[0][i] - z1_conv[i]).abs() <= 1e-6 * scale1.max(1e-9),
            "layer 1 at t={}",
            times[i]
        );
    }

    // z1 evaluated at arbitrary quadrature nodes via its own convolution.
    let z1_at = |s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        convolution_solve(drive1, tau1, 0.0, &[s]).unwrap()[0]
    };
    let drive2 = |s: f64| emlfit::expr::gate_eval(a2, b2, c2, z1_at(s));
    let z2_conv = convolution_solve(drive2, tau2, 0.0, &times).unwrap();
    let scale2 = z2_conv.iter().fold(0f64, |m, v| m.max(v.abs()));
    for i in 0..times.len() {
        assert!(
            (states.layers[1][i] - z2_conv[i]).abs() <= 1e-6 * scale2.max(1e-9),
            "layer 2 at t={}: {} vs {}",
            times[i],
            states.layers[1][i],
            z2_conv[i]
        );
    }
}

#[test]
fn readout_training_chi2_beats_random_alternatives() {
    let times = linspace(0.0, 30.0, 121);
    let spec = CascadeSpec::new(3, 0.45, 1.5);
    let states = simulate(&spec, &times).unwrap();
    let rng = CounterRng::new(9);
    let values: Vec<f64> = (0..times.len())
        .map(|i| {
            0.2 + 1.5 * states.layers[0][i] - 0.8 * states.layers[2][i]
                + 0.01 * rng.normal_at(i as u64)
        })
        .collect();
    let trace = Trace::new("t", times, values, vec![0.05; 121], 3).unwrap();
    let fit = fit_readout(&states, &trace, 3);

    let chi2_of = |coeffs: &[f64]| {
        trace
            .split
            .train
            .iter()
            .map(|&i| {
                let mut y = coeffs[0];
                for k in 0..3 {
                    y += coeffs[k + 1] * states.layers[k][i];
                }
                let r = (trace.values[i] - y) / trace.weights[i];
                r * r
            })
            .sum::<f64>()
    };
    for probe in 0..50 {
        let base = 4 * probe as u64;
        let alt: Vec<f64> = (0..4)
            .map(|j| fit.readout.coeffs[j] + 0.1 * rng.normal_at(base + j as u64))
            .collect();
        assert!(fit.chi2_train <= chi2_of(&alt) + 1e-9, "probe {probe}");
    }
}

#[test]
fn readout_training_chi2_is_monotone_in_depth() {
    let times = linspace(0.0, 30.0, 121);
    let spec = CascadeSpec::new(6, 0.45, 1.5);
    let states = simulate(&spec, &times).unwrap();
    let rng = CounterRng::new(3);
    let values: Vec<f64> = (0..times.len())
        .map(|i| 0.4 * states.layers[1][i] + 0.05 * rng.normal_at(i as u64))
        .collect();
    let trace = Trace::new("t", times, values, vec![0.05; 121], 3).unwrap();
    let mut prev = f64::INFINITY;
    for depth in 0..=6 {
        let fit = fit_readout(&states, &trace, depth);
        assert!(
            fit.chi2_train <= prev + 1e-9,
            "depth {depth}: {} > {prev}",
            fit.chi2_train
        );
        prev = fit.chi2_train;
    }
}

#[test]
fn linearized_prediction_error_scales_quadratically() {
    // Steady-state response to a constant-input perturbation. The DC gain
    // of the linearized cascade predicts the shift to first order, so the
    // residual shrinks like delta^2 (slope ~2 on log-log).
    let spec = CascadeSpec::new(3, 0.45, 1.0);
    let times = linspace(0.0, 400.0, 41);
    let r_base = 0.35;
    let settle = |r: f64| {
        let states = simulate_with_input(&spec, move |_| r, &times).unwrap();
        (0..spec.depth)
            .map(|k| *states.layers[k].last().unwrap())
            .collect::<Vec<f64>>()
    };
    let base = settle(r_base);

    // Linear response at the steady working point.
    let lr = {
        let mut working = vec![r_base];
        working.extend(base[..spec.depth - 1].iter());
        emlfit::cascade::LinearResponse {
            gains: (1..=spec.depth)
                .map(|k| {
                    let (a, b, c, _) = spec.layer(k);
                    a * (c + working[k - 1]).powf(a - 1.0) - b
                })
                .collect(),
            taus: (1..=spec.depth).map(|k| spec.layer(k).3).collect(),
            working_point: working,
        }
    };
    let dc_gain = transfer_function(&lr, 0.0).unwrap();

    let mut errors = Vec::new();
    let deltas = [1e-2, 1e-3];
    for &delta in &deltas {
        let shifted = settle(r_base + delta);
        let observed = shifted[spec.depth - 1] - base[spec.depth - 1];
        errors.push((observed - dc_gain * delta).abs());
    }
    let slope = (errors[0] / errors[1]).log10();
    assert!(
        (1.6..=2.4).contains(&slope),
        "expected quadratic error decay, slope {slope} from {errors:?}"
    );
}

#[test]
fn linear_response_working_point_matches_simulation() {
    let spec = CascadeSpec::new(4, 0.5, 1.2);
    let times = linspace(0.0, 20.0, 81);
    let states = simulate(&spec, &times).unwrap();
    let lr = linear_response(&spec, &states, 40);
    assert_eq!(lr.working_point.len(), 4);
    assert_eq!(lr.gains.len(), 4);
    let input = 1.0 - (-spec.input_rate * times[40]).exp();
    assert!((lr.working_point[0] - input).abs() < 1e-12);
    for k in 1..4 {
        assert_eq!(lr.working_point[k], states.layers[k - 1][40]);
    }
}
