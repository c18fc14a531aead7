//! Expression trees over the restricted response grammar.
//!
//! A candidate expression is the input variable `R`, a gate applied to an
//! expression, or a sum of two expressions. Two block families share the
//! same tree shape: the centered activation-suppression gate
//! `G(x) = (c + x)^a - b x - c^a`, which is non-monotone for `0 < a < 1`,
//! `b > 0`, and the saturating Hill block `H(x) = A x^h / (K_d^h + x^h)`.
//!
//! Canonical form: sums are flattened, their terms sorted by a total order
//! on subtrees (`R` before gates before sums), and re-bracketed to the
//! right, so `G(R)+R` and `R+G(R)` are the same expression. Gate parameter
//! slots are implicit: the k-th gate in a depth-first, left-to-right walk
//! owns entries `3k..3k+3` of the flat parameter vector.

use crate::error::DomainError;
use std::fmt;

/// Which block family a grammar instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Eml,
    Hill,
}

impl BlockKind {
    pub fn letter(self) -> char {
        match self {
            BlockKind::Eml => 'G',
            BlockKind::Hill => 'H',
        }
    }

    /// Parameter names of block number `index` (1-based) in report order.
    pub fn param_names(self, index: usize) -> [String; 3] {
        match self {
            BlockKind::Eml => [
                format!("a{index}"),
                format!("b{index}"),
                format!("c{index}"),
            ],
            BlockKind::Hill => [
                format!("A{index}"),
                format!("Kd{index}"),
                format!("h{index}"),
            ],
        }
    }
}

/// An expression tree. Derived `Ord` gives the canonical subtree order:
/// `Var < Gate < Sum`, recursing structurally.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    /// The input variable `R`.
    Var,
    /// A block applied to a child expression.
    Gate(Box<Expr>),
    /// A binary sum.
    Sum(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn gate(child: Expr) -> Expr {
        Expr::Gate(Box::new(child))
    }

    pub fn sum(left: Expr, right: Expr) -> Expr {
        Expr::Sum(Box::new(left), Box::new(right))
    }

    /// Maximum nesting count of gate nodes along any root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Var => 0,
            Expr::Gate(c) => 1 + c.depth(),
            Expr::Sum(l, r) => l.depth().max(r.depth()),
        }
    }

    /// Total node count; terminals, gates, and sum nodes all count as one.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Var => 1,
            Expr::Gate(c) => 1 + c.node_count(),
            Expr::Sum(l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    pub fn gate_count(&self) -> usize {
        match self {
            Expr::Var => 0,
            Expr::Gate(c) => 1 + c.gate_count(),
            Expr::Sum(l, r) => l.gate_count() + r.gate_count(),
        }
    }

    /// `(depth, nodes)` in one call.
    pub fn measure(&self) -> (usize, usize) {
        (self.depth(), self.node_count())
    }

    /// Serialization with the block letter of `kind`, e.g. `G(G(R)+R)` or
    /// `H(R)+H(R)`. Bijective with canonical trees.
    pub fn display_with(&self, kind: BlockKind) -> String {
        let mut s = String::new();
        self.write(kind.letter(), &mut s);
        s
    }

    fn write(&self, letter: char, out: &mut String) {
        match self {
            Expr::Var => out.push('R'),
            Expr::Gate(c) => {
                out.push(letter);
                out.push('(');
                c.write(letter, out);
                out.push(')');
            }
            Expr::Sum(l, r) => {
                l.write(letter, out);
                out.push('+');
                r.write(letter, out);
            }
        }
    }

    /// Parse the text form produced by [`Expr::display_with`]. Both block
    /// letters are accepted; the result is not canonicalized.
    pub fn parse(text: &str) -> Result<Expr, ExprParseError> {
        let bytes: Vec<u8> = text.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut pos = 0;
        let e = parse_sum(&bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(ExprParseError::Trailing { at: pos });
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(BlockKind::Eml))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprParseError {
    #[error("unexpected byte at offset {at}")]
    Unexpected { at: usize },
    #[error("unbalanced parentheses at offset {at}")]
    Unbalanced { at: usize },
    #[error("trailing input at offset {at}")]
    Trailing { at: usize },
}

fn parse_sum(b: &[u8], pos: &mut usize) -> Result<Expr, ExprParseError> {
    let mut acc = parse_term(b, pos)?;
    while *pos < b.len() && b[*pos] == b'+' {
        *pos += 1;
        let rhs = parse_term(b, pos)?;
        acc = Expr::sum(acc, rhs);
    }
    Ok(acc)
}

fn parse_term(b: &[u8], pos: &mut usize) -> Result<Expr, ExprParseError> {
    match b.get(*pos) {
        Some(b'R') => {
            *pos += 1;
            Ok(Expr::Var)
        }
        Some(b'G') | Some(b'H') => {
            *pos += 1;
            if b.get(*pos) != Some(&b'(') {
                return Err(ExprParseError::Unbalanced { at: *pos });
            }
            *pos += 1;
            let child = parse_sum(b, pos)?;
            if b.get(*pos) != Some(&b')') {
                return Err(ExprParseError::Unbalanced { at: *pos });
            }
            *pos += 1;
            Ok(Expr::gate(child))
        }
        _ => Err(ExprParseError::Unexpected { at: *pos }),
    }
}

/// Centered gate value `(c + x)^a - b x - c^a`.
///
/// The subtraction of `c^a` pins `G(0) = 0` exactly: both powers are the
/// same floating-point computation at `x = 0`.
pub fn gate_eval(exponent: f64, slope: f64, offset: f64, x: f64) -> Result<f64, DomainError> {
    let base = offset + x;
    if base < 0.0 {
        return Err(DomainError::GateBase {
            offset,
            input: x,
            base,
        });
    }
    let v = base.powf(exponent) - slope * x - offset.powf(exponent);
    if v.is_nan() {
        return Err(DomainError::NonFinite { context: "gate" });
    }
    Ok(v)
}

/// Hill block value `A x^h / (K_d^h + x^h)`, defined for `x >= 0`.
pub fn hill_eval(amplitude: f64, half_sat: f64, coeff: f64, x: f64) -> Result<f64, DomainError> {
    if x < 0.0 {
        return Err(DomainError::HillInput { input: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let xh = x.powf(coeff);
    let v = amplitude * xh / (half_sat.powf(coeff) + xh);
    if v.is_nan() {
        return Err(DomainError::NonFinite { context: "hill" });
    }
    Ok(v)
}

/// Parameters of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockParams {
    Eml { exponent: f64, slope: f64, offset: f64 },
    Hill { amplitude: f64, half_sat: f64, coeff: f64 },
}

impl BlockParams {
    pub fn from_slice(kind: BlockKind, p: &[f64]) -> BlockParams {
        match kind {
            BlockKind::Eml => BlockParams::Eml {
                exponent: p[0],
                slope: p[1],
                offset: p[2],
            },
            BlockKind::Hill => BlockParams::Hill {
                amplitude: p[0],
                half_sat: p[1],
                coeff: p[2],
            },
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, DomainError> {
        match *self {
            BlockParams::Eml {
                exponent,
                slope,
                offset,
            } => gate_eval(exponent, slope, offset, x),
            BlockParams::Hill {
                amplitude,
                half_sat,
                coeff,
            } => hill_eval(amplitude, half_sat, coeff, x),
        }
    }
}

/// Evaluate `e` at input `x` with a flat parameter vector laid out three
/// entries per gate in depth-first, left-to-right slot order.
pub fn eval_expr(e: &Expr, kind: BlockKind, params: &[f64], x: f64) -> Result<f64, DomainError> {
    assert_eq!(
        params.len(),
        3 * e.gate_count(),
        "parameter vector length must be 3 x gate count"
    );
    let mut slot = 0;
    eval_inner(e, kind, params, x, &mut slot)
}

fn eval_inner(
    e: &Expr,
    kind: BlockKind,
    params: &[f64],
    x: f64,
    slot: &mut usize,
) -> Result<f64, DomainError> {
    match e {
        Expr::Var => Ok(x),
        Expr::Gate(child) => {
            let s = *slot;
            *slot += 1;
            let block = BlockParams::from_slice(kind, &params[3 * s..3 * s + 3]);
            let inner = eval_inner(child, kind, params, x, slot)?;
            block.eval(inner)
        }
        Expr::Sum(l, r) => {
            Ok(eval_inner(l, kind, params, x, slot)? + eval_inner(r, kind, params, x, slot)?)
        }
    }
}

fn collect_terms(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Sum(l, r) => {
            collect_terms(l, out);
            collect_terms(r, out);
        }
        other => out.push(other.clone()),
    }
}

fn rebracket(terms: Vec<Expr>) -> Expr {
    terms
        .into_iter()
        .rev()
        .reduce(|acc, t| Expr::sum(t, acc))
        .expect("at least one term")
}

/// Canonical representative: nested sums flattened to a sorted term list
/// and re-bracketed to the right. Idempotent.
///
/// Terms sort in descending structural order, which puts gated terms ahead
/// of the bare terminal and makes the serialized forms read like the usual
/// labels: `G(R)+R`, not `R+G(R)`.
pub fn canonicalize(e: &Expr) -> Expr {
    match e {
        Expr::Var => Expr::Var,
        Expr::Gate(c) => Expr::gate(canonicalize(c)),
        Expr::Sum(_, _) => {
            let mut raw = Vec::new();
            collect_terms(e, &mut raw);
            let mut terms: Vec<Expr> = raw.iter().map(canonicalize).collect();
            terms.sort_by(|a, b| b.cmp(a));
            rebracket(terms)
        }
    }
}

enum Tagged {
    Var,
    Gate(usize, Box<Tagged>),
    Sum(Box<Tagged>, Box<Tagged>),
}

fn tag(e: &Expr, next: &mut usize) -> Tagged {
    match e {
        Expr::Var => Tagged::Var,
        Expr::Gate(c) => {
            let s = *next;
            *next += 1;
            Tagged::Gate(s, Box::new(tag(c, next)))
        }
        Expr::Sum(l, r) => {
            let lt = tag(l, next);
            let rt = tag(r, next);
            Tagged::Sum(Box::new(lt), Box::new(rt))
        }
    }
}

fn untag(t: &Tagged) -> Expr {
    match t {
        Tagged::Var => Expr::Var,
        Tagged::Gate(_, c) => Expr::gate(untag(c)),
        Tagged::Sum(l, r) => Expr::sum(untag(l), untag(r)),
    }
}

fn canon_tagged(t: Tagged) -> Tagged {
    match t {
        Tagged::Var => Tagged::Var,
        Tagged::Gate(s, c) => Tagged::Gate(s, Box::new(canon_tagged(*c))),
        Tagged::Sum(_, _) => {
            let mut raw = Vec::new();
            collect_tagged_terms(t, &mut raw);
            let mut terms: Vec<Tagged> = raw.into_iter().map(canon_tagged).collect();
            terms.sort_by_key(|t| std::cmp::Reverse(untag(t)));
            terms
                .into_iter()
                .rev()
                .reduce(|acc, t| Tagged::Sum(Box::new(t), Box::new(acc)))
                .expect("at least one term")
        }
    }
}

fn collect_tagged_terms(t: Tagged, out: &mut Vec<Tagged>) {
    match t {
        Tagged::Sum(l, r) => {
            collect_tagged_terms(*l, out);
            collect_tagged_terms(*r, out);
        }
        other => out.push(other),
    }
}

fn tagged_slots(t: &Tagged, out: &mut Vec<usize>) {
    match t {
        Tagged::Var => {}
        Tagged::Gate(s, c) => {
            out.push(*s);
            tagged_slots(c, out);
        }
        Tagged::Sum(l, r) => {
            tagged_slots(l, out);
            tagged_slots(r, out);
        }
    }
}

/// Canonicalize and report where each new gate slot came from:
/// `map[new_slot] = old_slot` in the original tree's slot order.
pub fn canonicalize_with_slots(e: &Expr) -> (Expr, Vec<usize>) {
    let mut next = 0;
    let tagged = tag(e, &mut next);
    let canon = canon_tagged(tagged);
    let mut slots = Vec::new();
    tagged_slots(&canon, &mut slots);
    (untag(&canon), slots)
}

/// Enumeration limits for one grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrammarConfig {
    pub kind: BlockKind,
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl GrammarConfig {
    pub fn new(kind: BlockKind, max_depth: usize, max_nodes: usize) -> GrammarConfig {
        assert!(max_nodes >= 1, "max_nodes must be at least 1");
        GrammarConfig {
            kind,
            max_depth,
            max_nodes,
        }
    }
}

/// Every canonical expression with `depth <= max_depth` and
/// `nodes <= max_nodes`, sorted by `(nodes, depth, subtree order)`.
///
/// Expressions are generated directly in canonical form: non-sum atoms by
/// node budget, sums as non-decreasing multisets of smaller atoms.
pub fn enumerate_expressions(cfg: &GrammarConfig) -> Vec<Expr> {
    let max_n = cfg.max_nodes;
    let mut atoms_by_n: Vec<Vec<Expr>> = vec![Vec::new(); max_n + 1];
    let mut all_by_n: Vec<Vec<Expr>> = vec![Vec::new(); max_n + 1];

    for n in 1..=max_n {
        let mut atoms = Vec::new();
        if n == 1 {
            atoms.push(Expr::Var);
        } else {
            for child in &all_by_n[n - 1] {
                if child.depth() < cfg.max_depth {
                    atoms.push(Expr::gate(child.clone()));
                }
            }
        }
        let sums = enumerate_sums(n, &atoms_by_n);
        atoms_by_n[n] = atoms.clone();
        let mut all = atoms;
        all.extend(sums);
        all_by_n[n] = all;
    }

    let mut out: Vec<Expr> = all_by_n.into_iter().flatten().collect();
    out.sort_by(|a, b| {
        (a.node_count(), a.depth())
            .cmp(&(b.node_count(), b.depth()))
            .then_with(|| a.cmp(b))
    });
    out
}

/// Sums with exactly `target_nodes` total nodes. Terms are atoms (never
/// sums), chosen as a non-decreasing sequence in canonical order so each
/// multiset appears once. An m-term sum costs m - 1 sum nodes.
fn enumerate_sums(target_nodes: usize, atoms_by_n: &[Vec<Expr>]) -> Vec<Expr> {
    let mut pool: Vec<Expr> = atoms_by_n
        .iter()
        .take(target_nodes)
        .flatten()
        .cloned()
        .collect();
    pool.sort();
    let mut out = Vec::new();
    let mut current = Vec::new();
    sum_rec(&pool, 0, 0, target_nodes, &mut current, &mut out);
    out
}

fn sum_rec(
    pool: &[Expr],
    start: usize,
    used: usize,
    target: usize,
    current: &mut Vec<Expr>,
    out: &mut Vec<Expr>,
) {
    if current.len() >= 2 && used == target {
        // `current` is non-decreasing; canonical term order is descending.
        let descending: Vec<Expr> = current.iter().rev().cloned().collect();
        out.push(rebracket(descending));
    }
    for idx in start..pool.len() {
        let cost = pool[idx].node_count() + usize::from(!current.is_empty());
        if used + cost > target {
            continue;
        }
        current.push(pool[idx].clone());
        sum_rec(pool, idx, used + cost, target, current, out);
        current.pop();
    }
}
