//! Special functions and quadrature used by the dependence measures and
//! the test oracles.

use statrs::distribution::{ContinuousCDF, Normal};

/// Digamma function for `x > 0` (reflection is applied for negative non-integer `x`).
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || (x <= 0.0 && x == x.floor()) {
        return f64::NAN;
    }
    if x < 0.0 {
        // psi(1 - x) - psi(x) = pi cot(pi x)
        return digamma(1.0 - x) - std::f64::consts::PI / (std::f64::consts::PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 * inv - series
}

/// Trigamma function for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + series
}

/// First-order Debye function `D_1(x) = x^{-1} \int_0^x a / (e^a - 1) da`,
/// evaluated by adaptive Gauss-Kronrod quadrature. Valid for any real `x`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() < 1e-4 {
        // D_1(x) = 1 - x/4 + x^2/36 - x^4/3600 + ...
        return 1.0 - x / 4.0 + x * x / 36.0 - x.powi(4) / 3600.0;
    }
    let integrand = |a: f64| if a == 0.0 { 1.0 } else { a / a.exp_m1() };
    integrate(integrand, 0.0, x, 1e-14, 1e-13) / x
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WEIGHTS_K[7];
    let mut gauss = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kron += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            gauss += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, err) = gk15(&f, a, b);
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let tol = abs_tol.max(rel_tol * val.abs());
        if err <= tol || depth >= 40 || (hi - lo).abs() < 1e-15 * (lo.abs() + hi.abs()) {
            total += val;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    total
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Upper tail of the chi-square distribution, `P(X > stat)`.
pub fn chi_square_upper_tail(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * df, 0.5 * stat)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Sample Kendall tau-b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len(), "kendall_tau_b: length mismatch");
    if n < 2 {
        return f64::NAN;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |counts: &mut dyn Iterator<Item = usize>| -> u64 {
        counts.map(|c| (c as u64) * (c as u64 - 1) / 2).sum()
    };
    let runs = |key: &dyn Fn(usize) -> (f64, f64), use_both: bool| -> Vec<usize> {
        let mut out = Vec::new();
        let mut run = 1;
        for w in idx.windows(2) {
            let (a1, a2) = key(w[0]);
            let (b1, b2) = key(w[1]);
            let same = if use_both { a1 == b1 && a2 == b2 } else { a1 == b1 };
            if same {
                run += 1;
            } else {
                out.push(run);
                run = 1;
            }
        }
        out.push(run);
        out
    };
    let key = |i: usize| (x[i], y[i]);
    let tied_x = pairs(&mut runs(&key, false).into_iter());
    let tied_xy = pairs(&mut runs(&key, true).into_iter());

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run = 1usize;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            tied_y += (run as u64) * (run as u64 - 1) / 2;
            run = 1;
        }
    }
    tied_y += (run as u64) * (run as u64 - 1) / 2;

    let total = (n as u64) * (n as u64 - 1) / 2;
    let concordant_minus_discordant =
        total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let denom = ((total - tied_x) as f64 * (total - tied_y) as f64).sqrt();
    concordant_minus_discordant / denom
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = v[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = v[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn digamma_known_values() {
        let euler = 0.577_215_664_901_532_9;
        assert_relative_eq!(digamma(1.0), -euler, epsilon = 1e-14);
        assert_relative_eq!(digamma(2.0), 1.0 - euler, epsilon = 1e-14);
        assert_relative_eq!(digamma(0.5), -euler - 2.0 * 2f64.ln(), epsilon = 1e-13);
        // recurrence
        for &x in &[0.3, 1.7, 4.2, 11.0] {
            assert_relative_eq!(digamma(x + 1.0) - digamma(x), 1.0 / x, epsilon = 1e-13);
        }
    }

    #[test]
    fn trigamma_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(trigamma(1.0), pi2 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(trigamma(2.0), pi2 / 6.0 - 1.0, epsilon = 1e-13);
        assert_relative_eq!(trigamma(0.5), pi2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn debye_against_series_and_symmetry() {
        // D_1(-x) = D_1(x) + x/2
        for &x in &[0.5, 2.0, 5.0, 12.0] {
            assert_relative_eq!(debye1(-x), debye1(x) + x / 2.0, epsilon = 1e-12);
        }
        // D_1(x) -> pi^2 / (6x) for large x
        let x = 60.0;
        assert_relative_eq!(debye1(x), std::f64::consts::PI.powi(2) / (6.0 * x), epsilon = 1e-12);
        assert_relative_eq!(debye1(1e-3), 1.0 - 1e-3 / 4.0 + 1e-6 / 36.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        assert_relative_eq!(s, 1.0 / 20.0, epsilon = 1e-14);
        let (x, w) = gauss_legendre_unit(200);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert_relative_eq!(s, 3f64.sin() / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_integration() {
        let v = integrate(|t| (-t).exp(), 0.0, 30.0, 1e-14, 1e-14);
        assert_relative_eq!(v, 1.0 - (-30f64).exp(), epsilon = 1e-13);
        let v = integrate(|t| t.sqrt(), 0.0, 1.0, 1e-13, 1e-13);
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn chi_square_critical_value() {
        assert!((chi_square_upper_tail(9.4877, 4.0) - 0.05).abs() < 1e-4);
        assert_eq!(chi_square_upper_tail(0.0, 4.0), 1.0);
    }

    #[test]
    fn kendall_matches_brute_force() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 2.0, 7.0];
        let y = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        let n = x.len();
        let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let s = (x[i] - x[j]) * (y[i] - y[j]);
                if s > 0.0 {
                    c += 1.0
                } else if s < 0.0 {
                    d += 1.0
                }
                if x[i] == x[j] && y[i] != y[j] {
                    tx += 1.0
                }
                if y[i] == y[j] && x[i] != x[j] {
                    ty += 1.0
                }
            }
        }
        let brute = (c - d) / ((c + d + tx) * (c + d + ty) as f64).sqrt();
        assert_relative_eq!(kendall_tau_b(&x, &y), brute, epsilon = 1e-14);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_relative_eq!(quantile_sorted(&v, 0.5), 2.5);
    }
}
