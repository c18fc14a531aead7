//! Fixed-step integrators for first-order relaxation dynamics.
//!
//! The production path is classical RK4 with the step rule
//! `h = min(tau / 20, dt_grid / 4)`, chosen for bitwise determinism across
//! runs. The convolution solution of the same equation, evaluated by
//! composite Simpson quadrature, is kept as an independent oracle.

use crate::error::DomainError;

fn min_grid_gap(times: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    if times[0] > 0.0 {
        gap = times[0];
    }
    for w in times.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

fn validate_grid(times: &[f64]) {
    assert!(!times.is_empty(), "time grid must be nonempty");
    assert!(times[0] >= 0.0, "time grid must start at or after zero");
    for w in times.windows(2) {
        assert!(w[1] > w[0], "time grid must be strictly increasing");
    }
}

/// Solve `tau * y' = -y + F(t)` with `y(0) = y_init`, returning the solution
/// on the output grid. Integration starts at `t = 0` even when the grid does
/// not include it.
pub fn relax_solve<F>(
    mut drive: F,
    tau: f64,
    y_init: f64,
    times: &[f64],
) -> Result<Vec<f64>, DomainError>
where
    F: FnMut(f64) -> Result<f64, DomainError>,
{
    validate_grid(times);
    assert!(tau > 0.0, "relaxation time must be positive");
    let horizon = *times.last().unwrap();
    if horizon > 0.0 && tau < 1e-8 * horizon {
        return Err(DomainError::StepUnderflow { tau, horizon });
    }
    let h_target = (tau / 20.0).min(min_grid_gap(times) / 4.0);

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = y_init;
    // Drive value at the current time, shared between the last stage of one
    // step and the first stage of the next.
    let mut f_t = drive(t)?;
    for &t_out in times {
        if t_out > t {
            let span = t_out - t;
            let steps = (span / h_target).ceil() as usize;
            let h = span / steps as f64;
            for i in 0..steps {
                let t0 = t + i as f64 * h;
                let f_mid = drive(t0 + 0.5 * h)?;
                let f_end = drive(t0 + h)?;
                let k1 = (f_t - y) / tau;
                let k2 = (f_mid - (y + 0.5 * h * k1)) / tau;
                let k3 = (f_mid - (y + 0.5 * h * k2)) / tau;
                let k4 = (f_end - (y + h * k3)) / tau;
                y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                f_t = f_end;
            }
            t = t_out;
        }
        out.push(y);
    }
    Ok(out)
}

/// Convolution solution of the same equation,
/// `y(t) = y_init e^{-t/tau} + (1/tau) \int_0^t e^{-(t-s)/tau} F(s) ds`,
/// with composite Simpson panels no wider than `tau / 20`. Quadratic cost in
/// the grid length; used as a test oracle, not in production fitting.
pub fn convolution_solve<F>(
    mut drive: F,
    tau: f64,
    y_init: f64,
    times: &[f64],
) -> Result<Vec<f64>, DomainError>
where
    F: FnMut(f64) -> Result<f64, DomainError>,
{
    validate_grid(times);
    assert!(tau > 0.0, "relaxation time must be positive");
    let horizon = *times.last().unwrap();
    if horizon > 0.0 && tau < 1e-8 * horizon {
        return Err(DomainError::StepUnderflow { tau, horizon });
    }
    let width = (tau / 20.0).min(min_grid_gap(times) / 4.0);

    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            out.push(y_init);
            continue;
        }
        // Even number of subintervals for composite Simpson.
        let half_panels = (t / (2.0 * width)).ceil() as usize;
        let m = 2 * half_panels.max(1);
        let h = t / m as f64;
        let mut integral = 0.0;
        for i in 0..=m {
            let s = if i == m { t } else { i as f64 * h };
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += w * (-(t - s) / tau).exp() * drive(s)?;
        }
        integral *= h / 3.0;
        out.push(y_init * (-t / tau).exp() + integral / tau);
    }
    Ok(out)
}

/// Fixed-step RK4 for a first-order system `y' = f(t, y)`, sampling the
/// state at each output time. The derivative callback writes into `dy` and
/// may reject the state with a domain error.
pub fn rk4_system<D>(
    mut deriv: D,
    y_init: &[f64],
    times: &[f64],
    h_target: f64,
) -> Result<Vec<Vec<f64>>, DomainError>
where
    D: FnMut(f64, &[f64], &mut [f64]) -> Result<(), DomainError>,
{
    validate_grid(times);
    assert!(h_target > 0.0, "step target must be positive");
    let dim = y_init.len();
    let mut y = y_init.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &t_out in times {
        if t_out > t {
            let span = t_out - t;
            let steps = (span / h_target).ceil() as usize;
            let h = span / steps as f64;
            for i in 0..steps {
                let t0 = t + i as f64 * h;
                deriv(t0, &y, &mut k1)?;
                for j in 0..dim {
                    stage[j] = y[j] + 0.5 * h * k1[j];
                }
                deriv(t0 + 0.5 * h, &stage, &mut k2)?;
                for j in 0..dim {
                    stage[j] = y[j] + 0.5 * h * k2[j];
                }
                deriv(t0 + 0.5 * h, &stage, &mut k3)?;
                for j in 0..dim {
                    stage[j] = y[j] + h * k3[j];
                }
                deriv(t0 + h, &stage, &mut k4)?;
                for j in 0..dim {
                    y[j] += h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
                }
            }
            t = t_out;
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        let step = (b - a) / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
            .collect()
    }

    #[test]
    fn constant_drive_matches_closed_form() {
        let times = linspace(0.0, 10.0, 101);
        let f = 3.7;
        let y = relax_solve(|_| Ok(f), 1.0, 0.0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = f * (1.0 - (-t).exp());
            assert!(
                (y[i] - exact).abs() < 1e-8 * f.abs(),
                "t={t}: {} vs {exact}",
                y[i]
            );
        }
        let yc = convolution_solve(|_| Ok(f), 1.0, 0.0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = f * (1.0 - (-t).exp());
            assert!((yc[i] - exact).abs() < 1e-7 * f.abs(), "t={t}");
        }
    }

    #[test]
    fn zero_drive_decays_exponentially() {
        let times = linspace(0.0, 5.0, 51);
        let y = relax_solve(|_| Ok(0.0), 0.5, 2.0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = 2.0 * (-t / 0.5).exp();
            assert!((y[i] - exact).abs() < 1e-7);
        }
    }

    #[test]
    fn resonant_drive_matches_analytic_integral() {
        // tau = 1, F(s) = e^{-s}: y(t) = y0 e^{-t} + t e^{-t}.
        let times = linspace(0.0, 8.0, 81);
        let y0 = 0.4;
        let y = convolution_solve(|s| Ok((-s).exp()), 1.0, y0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = y0 * (-t).exp() + t * (-t).exp();
            assert!((y[i] - exact).abs() < 1e-6, "t={t}: {} vs {exact}", y[i]);
        }
    }

    #[test]
    fn tiny_tau_is_rejected() {
        let times = linspace(0.0, 10.0, 11);
        let err = relax_solve(|_| Ok(1.0), 1e-9 * 10.0 * 0.09, 0.0, &times);
        assert!(matches!(err, Err(DomainError::StepUnderflow { .. })));
    }

    #[test]
    fn rk4_system_solves_harmonic_oscillator() {
        let times = linspace(0.0, 6.0, 61);
        let states = rk4_system(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            &[1.0, 0.0],
            &times,
            0.01,
        )
        .unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((states[i][0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }
}
