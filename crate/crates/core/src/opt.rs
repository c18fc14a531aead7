//! Bounded local optimization with deterministic multistart.
//!
//! Parameters are optimized in a unit-cube coordinate per dimension; each
//! dimension carries its own map to the raw bounded interval (linear, log,
//! or asinh for sign-changing scales). Start points come from a Halton
//! sequence with a seeded Cranley-Patterson rotation, so the sequence is a
//! deterministic function of the seed with the prefix property.

use crate::rng::CounterRng;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Map from the unit interval to the raw parameter range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Linear,
    /// Log-uniform; requires a positive lower bound.
    Log,
    /// asinh-warped, resolving `scale`-sized values near zero while still
    /// reaching the bounds; usable with bounds of either sign.
    Asinh { scale: f64 },
}

/// One fitted parameter: name, box bounds, and coordinate map.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, scale: Scale) -> ParamSpec {
        assert!(lo < hi, "bounds must satisfy lo < hi");
        if let Scale::Log = scale {
            assert!(lo > 0.0, "log scale requires a positive lower bound");
        }
        ParamSpec {
            name: name.into(),
            lo,
            hi,
            scale,
        }
    }

    /// Raw value at unit coordinate `u` in [0, 1].
    pub fn to_raw(&self, u: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => self.lo + u * (self.hi - self.lo),
            Scale::Log => (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp(),
            Scale::Asinh { scale } => {
                let a = (self.lo / scale).asinh();
                let b = (self.hi / scale).asinh();
                scale * (a + u * (b - a)).sinh()
            }
        };
        v.clamp(self.lo, self.hi)
    }
}

/// Multistart policy: number of deterministic start points and the seed for
/// the sequence rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multistart {
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for Multistart {
    fn default() -> Self {
        Multistart {
            n_starts: 32,
            seed: 1,
        }
    }
}

/// Radical-inverse (Halton) value of `index` in the given base.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while out.len() < n {
        if out.iter().all(|&p| !candidate.is_multiple_of(p)) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Start point `index` (0-based) in the unit cube: Halton point plus a
/// seeded rotation, taken modulo 1 per coordinate.
pub fn start_point(dim: usize, index: usize, seed: u64) -> Vec<f64> {
    let bases = primes(dim);
    let rng = CounterRng::new(seed);
    (0..dim)
        .map(|j| {
            let shift = rng.uniform_at(j as u64);
            (halton(index as u64 + 1, bases[j]) + shift).fract()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead on the unit cube with clamped candidate points. Infinite
/// objective values mark infeasible points; a simplex that never finds a
/// finite value gives up early.
pub fn nelder_mead(
    obj: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    max_iters: usize,
    f_tol: f64,
) -> NmResult {
    let dim = start.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let f = obj(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };

    let clamp = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    };

    // Initial simplex: the start plus one perturbed vertex per dimension.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), f0));
    for j in 0..dim {
        let mut v = start.to_vec();
        if v[j] + 0.08 <= 1.0 {
            v[j] += 0.08;
        } else {
            v[j] -= 0.08;
        }
        let f = eval(&v, &mut evals);
        simplex.push((v, f));
    }

    let mut converged = false;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[dim].1;
        if f_best.is_finite()
            && 2.0 * (f_worst - f_best).abs() <= f_tol * (f_best.abs() + f_worst.abs() + 1e-30)
        {
            converged = true;
            break;
        }
        if f_best.is_infinite() && iters > 5 * dim + 5 {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].0.clone();
        let f_second = simplex[dim - 1].1;

        let mut reflected: Vec<f64> = (0..dim)
            .map(|j| centroid[j] + (centroid[j] - worst[j]))
            .collect();
        clamp(&mut reflected);
        let f_r = eval(&reflected, &mut evals);

        if f_r < f_best {
            let mut expanded: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - worst[j]))
                .collect();
            clamp(&mut expanded);
            let f_e = eval(&expanded, &mut evals);
            simplex[dim] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < f_second {
            simplex[dim] = (reflected, f_r);
        } else {
            let (mut contracted, toward): (Vec<f64>, f64) = if f_r < f_worst {
                (
                    (0..dim)
                        .map(|j| centroid[j] + 0.5 * (reflected[j] - centroid[j]))
                        .collect(),
                    f_r,
                )
            } else {
                (
                    (0..dim)
                        .map(|j| centroid[j] - 0.5 * (centroid[j] - worst[j]))
                        .collect(),
                    f_worst,
                )
            };
            clamp(&mut contracted);
            let f_c = eval(&contracted, &mut evals);
            if f_c < toward {
                simplex[dim] = (contracted, f_c);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = (0..dim)
                        .map(|j| best[j] + 0.5 * (vertex.0[j] - best[j]))
                        .collect();
                    clamp(&mut v);
                    let f = eval(&v, &mut evals);
                    *vertex = (v, f);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmResult {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        iters,
        evals,
        converged,
    }
}

/// Levenberg-Marquardt refinement in the unit cube with forward-difference
/// Jacobians. The residual callback returns `None` on infeasible points;
/// only strictly improving steps are accepted, so the polished objective is
/// never worse than the input point.
pub fn lm_polish(
    resid: &mut dyn FnMut(&[f64]) -> Option<Vec<f64>>,
    start: &[f64],
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut x = start.to_vec();
    let mut r = match resid(&x) {
        Some(r) => DVector::from_vec(r),
        None => return (x, f64::INFINITY),
    };
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let fd = 1e-6;

    for _ in 0..max_iters {
        let m = r.len();
        let mut jac = DMatrix::zeros(m, dim);
        for j in 0..dim {
            let mut xh = x.clone();
            let (step, sign) = if xh[j] + fd <= 1.0 {
                (fd, 1.0)
            } else {
                (fd, -1.0)
            };
            xh[j] += sign * step;
            match resid(&xh) {
                Some(rh) => {
                    for i in 0..m {
                        jac[(i, j)] = sign * (rh[i] - r[i]) / step;
                    }
                }
                None => {
                    // Domain cliff along this coordinate; leave the column zero.
                }
            }
        }
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * &r;

        let mut accepted = false;
        for _attempt in 0..12 {
            let mut m_damped = a.clone();
            for j in 0..dim {
                m_damped[(j, j)] += lambda * a[(j, j)] + 1e-12;
            }
            let delta = match Cholesky::new(m_damped) {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let x_new: Vec<f64> = (0..dim).map(|j| (x[j] + delta[j]).clamp(0.0, 1.0)).collect();
            if let Some(r_new) = resid(&x_new) {
                let r_new = DVector::from_vec(r_new);
                let chi2_new = r_new.norm_squared();
                if chi2_new < chi2 {
                    x = x_new;
                    r = r_new;
                    let rel = (chi2 - chi2_new) / chi2.max(1e-300);
                    chi2 = chi2_new;
                    lambda = (lambda / 4.0).max(1e-12);
                    accepted = true;
                    if rel < 1e-12 {
                        return (x, chi2);
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e10 {
                return (x, chi2);
            }
        }
        if !accepted {
            break;
        }
    }
    (x, chi2)
}
