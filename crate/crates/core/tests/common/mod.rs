//! Shared oracle helpers for integration tests. These deliberately avoid
//! the library's own enumeration and optimization paths.

use emlfit::expr::{canonicalize, Expr};
use std::collections::BTreeSet;

/// Brute-force expression generator: unrestricted recursive expansion of
/// the grammar into raw binary trees, canonicalized and deduplicated by a
/// hash set. Independent of the production enumerator.
#[allow(dead_code)]
pub fn brute_force_expressions(max_depth: usize, max_nodes: usize) -> BTreeSet<Expr> {
    let mut raw_by_nodes: Vec<Vec<Expr>> = vec![Vec::new(); max_nodes + 1];
    for n in 1..=max_nodes {
        let mut level = Vec::new();
        if n == 1 {
            level.push(Expr::Var);
        }
        if n >= 2 {
            for child in raw_by_nodes[n - 1].clone() {
                level.push(Expr::gate(child));
            }
        }
        for left_n in 1..n.saturating_sub(1) {
            let right_n = n - 1 - left_n;
            for l in raw_by_nodes[left_n].clone() {
                for r in raw_by_nodes[right_n].clone() {
                    level.push(Expr::sum(l.clone(), r.clone()));
                }
            }
        }
        raw_by_nodes[n] = level;
    }

    raw_by_nodes
        .into_iter()
        .flatten()
        .filter(|e| e.depth() <= max_depth)
        .map(|e| canonicalize(&e))
        .collect()
}

/// Golden-section argmax of a unimodal function on [lo, hi].
#[allow(dead_code)]
pub fn golden_section_argmax(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Evenly spaced grid with exact endpoints.
#[allow(dead_code)]
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
        .collect()
}
