//! Gauss-Legendre rules and adaptive one-dimensional quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut q0, mut q1) = (1.0, z);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    n as f64 * (z * q1 - q0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(10))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl10();
    let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
    x.iter().zip(w).map(|(xi, wi)| wi * f(m + h * xi)).sum::<f64>() * h
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> (f64, bool) {
    let m = (a + b) / 2.0;
    let (l, r) = (panel(f, a, m), panel(f, m, b));
    if (l + r - whole).abs() <= tol || depth == 0 {
        return (l + r, (l + r - whole).abs() <= tol);
    }
    let (x, ok1) = refine(f, a, m, l, tol / 2.0, depth - 1);
    let (y, ok2) = refine(f, m, b, r, tol / 2.0, depth - 1);
    (x + y, ok1 && ok2)
}

/// Adaptive 10-point Gauss-Legendre over `panels` equal initial panels,
/// bisecting until halves agree to `tol`. The flag reports convergence.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, tol: f64) -> (f64, bool) {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut ok = true;
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let whole = panel(f, lo, hi);
        let (v, c) = refine(f, lo, hi, whole, tol / panels as f64, 40);
        total += v;
        ok &= c;
    }
    (total, ok)
}
