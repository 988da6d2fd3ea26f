//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsParams {
    pub memory: usize,
    /// Converged when `‖∇E‖ ≤ grad_tol·(1 + |E|)`.
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    /// Restarts with a halved initial step before giving up.
    pub max_retries: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-6,
            max_iterations: 500,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
            max_retries: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// No further decrease is representable in floating point.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded to the interior of the bracket.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mid = 0.5 * (a + b);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

enum Search {
    Found(Point),
    Failed,
}

/// Strong-Wolfe line search (bracketing then zoom).
fn line_search<F>(f: &mut F, p: &Point, d: &[f64], step0: f64, params: &LbfgsParams, evals: &mut usize) -> Search
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let d0 = dot(&p.g, d);
    if !(d0 < 0.0) {
        return Search::Failed;
    }
    let eval = |a: f64, f: &mut F, evals: &mut usize| {
        let x = axpy(&p.x, a, d);
        let (v, g) = f(&x);
        *evals += 1;
        let dd = dot(&g, d);
        (Point { x, f: v, g }, dd)
    };
    let armijo = |a: f64, v: f64| v <= p.f + params.c1 * a * d0;
    let curvature = |dd: f64| dd.abs() <= -params.c2 * d0;

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, p.f, d0);
    let mut a = step0;
    let mut budget = params.max_line_search;
    let (mut lo, mut hi);
    let mut first = true;
    loop {
        if budget == 0 {
            return Search::Failed;
        }
        budget -= 1;
        let (pt, dd) = eval(a, f, evals);
        if !pt.f.is_finite() {
            // Step left the domain of finite values: shrink.
            a = 0.5 * (a_prev + a);
            continue;
        }
        if !armijo(a, pt.f) || (!first && pt.f >= f_prev) {
            lo = (a_prev, f_prev, d_prev);
            hi = (a, pt.f, dd);
            break;
        }
        if curvature(dd) {
            return Search::Found(pt);
        }
        if dd >= 0.0 {
            lo = (a, pt.f, dd);
            hi = (a_prev, f_prev, d_prev);
            break;
        }
        a_prev = a;
        f_prev = pt.f;
        d_prev = dd;
        a *= 2.0;
        first = false;
    }
    // Zoom: `lo` satisfies sufficient decrease with the lowest value so far.
    while budget > 0 {
        budget -= 1;
        let t = cubic_step(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        if (hi.0 - lo.0).abs() <= f64::EPSILON * lo.0.abs().max(1e-300) {
            break;
        }
        let (pt, dd) = eval(t, f, evals);
        if !pt.f.is_finite() || !armijo(t, pt.f) || pt.f >= lo.1 {
            hi = (t, pt.f, dd);
        } else {
            if curvature(dd) {
                return Search::Found(pt);
            }
            if dd * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (t, pt.f, dd);
        }
    }
    // Accept the best sufficient-decrease point if one exists.
    if lo.0 > 0.0 {
        let (pt, _) = eval(lo.0, f, evals);
        if pt.f < p.f {
            return Search::Found(pt);
        }
    }
    Search::Failed
}

/// Minimize `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (v0, g0) = f(&x0);
    if !v0.is_finite() || g0.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("objective not finite at the starting point".into()));
    }
    let mut evals = 1;
    let mut p = Point { x: x0, f: v0, g: g0 };
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.memory);
    let mut retries = 0usize;
    let mut scale = 1.0;
    for it in 0..params.max_iterations {
        let gn = norm(&p.g);
        if gn <= params.grad_tol * (1.0 + p.f.abs()) {
            return Ok(LbfgsResult { grad_norm: gn, x: p.x, value: p.f, iterations: it, evaluations: evals, termination: Termination::GradientTolerance });
        }
        // Two-loop recursion.
        let mut q = p.g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / gn, |(s, y, _)| dot(s, y) / dot(y, y));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&d, &p.g) >= 0.0 {
            hist.clear();
            d = p.g.iter().map(|v| -v / gn).collect();
        }
        match line_search(&mut f, &p, &d, scale, params, &mut evals) {
            Search::Found(next) => {
                let s: Vec<f64> = next.x.iter().zip(&p.x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = next.g.iter().zip(&p.g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * norm(&s) * norm(&y) && sy > 0.0 {
                    if hist.len() == params.memory {
                        hist.pop_front();
                    }
                    hist.push_back((s, y, 1.0 / sy));
                }
                p = next;
                retries = 0;
                scale = 1.0;
            }
            Search::Failed => {
                let stalled = hist.is_empty() && scale < 1e-6;
                if stalled || retries >= params.max_retries {
                    // Nothing left to gain at working precision.
                    let probe = axpy(&p.x, 1e-10 * (1.0 + norm(&p.x)) / gn, &p.g.iter().map(|v| -v).collect::<Vec<_>>());
                    let (fp, _) = f(&probe);
                    evals += 1;
                    if p.f - fp <= 1e-12 * (1.0 + p.f.abs()) {
                        return Ok(LbfgsResult { grad_norm: gn, x: p.x, value: p.f, iterations: it, evaluations: evals, termination: Termination::Stalled });
                    }
                    return Err(Error::LineSearch(format!(
                        "no strong-Wolfe step after {retries} retries at iteration {it}: E = {:e}, |g| = {gn:e}, evaluations = {evals}",
                        p.f
                    )));
                }
                retries += 1;
                hist.clear();
                scale *= 0.5;
            }
        }
    }
    let gn = norm(&p.g);
    Ok(LbfgsResult { grad_norm: gn, x: p.x, value: p.f, iterations: params.max_iterations, evaluations: evals, termination: Termination::MaxIterations })
}
