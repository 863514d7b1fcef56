//! Quasi-Newton minimization with finite-difference derivatives.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

/// Settings for [`bfgs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsOptions {
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change stays below this for two
    /// consecutive iterations.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Relative step of the central-difference gradient.
    pub fd_step: f64,
    /// Largest coordinate change allowed in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { grad_tol: 1e-5, rel_tol: 1e-10, max_iter: 500, fd_step: 1e-6, max_step: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub message: &'static str,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient with step `rel * max(|x_i|, 1)`; falls back
/// to a one-sided difference when one side is not finite.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64, rel: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel * x[i].abs().max(1.0);
            xs[i] = x[i] + h;
            let fp = f(&xs);
            xs[i] = x[i] - h;
            let fm = f(&xs);
            xs[i] = x[i];
            match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - fx) / h,
                (false, true) => (fx - fm) / h,
                (false, false) => f64::NAN,
            }
        })
        .collect()
}

/// Hessian by central second differences with step `rel * max(|x_i|, 1)`.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|v| rel * v.abs().max(1.0)).collect();
    let mut xs = x.to_vec();
    let eval = |xs: &mut Vec<f64>, moves: &[(usize, f64)]| {
        for &(i, d) in moves {
            xs[i] += d;
        }
        let v = f(xs);
        for &(i, d) in moves {
            xs[i] -= d;
        }
        v
    };
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let fp = eval(&mut xs, &[(i, h[i])]);
        let fm = eval(&mut xs, &[(i, -h[i])]);
        out[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = eval(&mut xs, &[(i, h[i]), (j, h[j])]);
            let fpm = eval(&mut xs, &[(i, h[i]), (j, -h[j])]);
            let fmp = eval(&mut xs, &[(i, -h[i]), (j, h[j])]);
            let fmm = eval(&mut xs, &[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Minimizes `f` from `x0` by BFGS with an Armijo backtracking line search.
/// Non-finite objective values are treated as `+∞`.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &BfgsOptions) -> Minimum {
    bfgs_with_metric(f, x0, None, opts)
}

/// [`bfgs`] started from the inverse-Hessian approximation `h0`, typically
/// the covariance of an earlier fit of a similar problem.
pub fn bfgs_with_metric<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], h0: Option<&[Vec<f64>]>, opts: &BfgsOptions) -> Minimum {
    let count = Cell::new(0usize);
    let obj = |x: &[f64]| {
        count.set(count.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    let finish = |x: Vec<f64>, fx: f64, g: &[f64], it: usize, ok: bool, msg: &'static str| Minimum {
        grad_norm: max_norm(g),
        x,
        fx,
        iterations: it,
        evaluations: count.get(),
        converged: ok,
        message: msg,
    };
    if !fx.is_finite() {
        return finish(x, fx, &[f64::NAN], 0, false, "objective not finite at the starting point");
    }
    let mut g = fd_gradient(&obj, &x, fx, opts.fd_step);
    let identity = |h: &mut Vec<Vec<f64>>, scale: f64| {
        for (i, row) in h.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[i] = scale;
        }
    };
    let mut hinv = vec![vec![0.0; n]; n];
    identity(&mut hinv, 1.0);
    let mut fresh = true;
    if let Some(h0) = h0.filter(|h| h.len() == n && h.iter().flatten().all(|v| v.is_finite())) {
        hinv = h0.to_vec();
        fresh = false;
    }
    let mut small_changes = 0;
    for it in 1..=opts.max_iter {
        if g.iter().any(|v| !v.is_finite()) {
            return finish(x, fx, &g, it, false, "gradient not finite");
        }
        if max_norm(&g) < opts.grad_tol {
            return finish(x, fx, &g, it, true, "gradient tolerance reached");
        }
        let mut d: Vec<f64> = hinv.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 || !slope.is_finite() {
            identity(&mut hinv, 1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let dmax = max_norm(&d);
        let mut step = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let ft = obj(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((xt, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if !fresh {
                identity(&mut hinv, 1.0);
                fresh = true;
                continue;
            }
            let ok = max_norm(&g) < 1e3 * opts.grad_tol;
            return finish(x, fx, &g, it, ok, "line search failed");
        };
        let gn = fd_gradient(&obj, &xn, fnew, opts.fd_step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy.is_finite() {
            if fresh {
                identity(&mut hinv, sy / dot(&y, &y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = hinv.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let rel = (fx - fnew).abs() / fx.abs().max(1e-300);
        x = xn;
        fx = fnew;
        g = gn;
        if rel < opts.rel_tol {
            small_changes += 1;
            if small_changes >= 2 {
                return finish(x, fx, &g, it, true, "relative change tolerance reached");
            }
        } else {
            small_changes = 0;
        }
    }
    let ok = max_norm(&g) < opts.grad_tol;
    finish(x, fx, &g, opts.max_iter, ok, "iteration limit reached")
}
