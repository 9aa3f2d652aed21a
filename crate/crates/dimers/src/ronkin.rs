//! Ronkin function, free energy, the Lobachevsky function and the
//! honeycomb surface tension.
//!
//! The inner average over `arg w` is done in closed form by Jensen's
//! formula, so only the outer `arg z` integral is numerical. Its integrand
//! has kinks where a root crosses `|w| = e^Y` and log singularities where
//! the top coefficient vanishes; adaptive Gauss-Legendre handles both.

use crate::amoeba::{curve_member, Curve};
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::quad::adaptive;
use num_complex::Complex64;
use std::f64::consts::PI;

const RONKIN_TOL: f64 = 1e-11;

/// `(2 pi)^-2` times the integral of `log|P|` over the torus of radii
/// `(e^x, e^y)`.
pub fn ronkin(p: &LaurentPoly2, x: f64, y: f64) -> Result<f64> {
    curve_ronkin(&Curve::new(p), x, y)
}

pub fn curve_ronkin(c: &Curve, x: f64, y: f64) -> Result<f64> {
    if c.terms.is_empty() {
        return Err(Error::Malformed("zero polynomial".into()));
    }
    if c.is_degenerate() {
        let ((i, j), v) = c.terms[0];
        return Ok(v.abs().ln() + i as f64 * x + j as f64 * y);
    }
    if c.wdeg == 0 {
        return curve_ronkin(&c.transpose(), y, x);
    }
    let f = |theta: f64| {
        let z = Complex64::from_polar(x.exp(), theta);
        let (_, coeffs) = LaurentPoly2::w_coeffs(&c.terms, z);
        let top = coeffs[c.wdeg].norm();
        if top == 0.0 {
            return 0.0;
        }
        let roots = crate::linalg::poly_roots(&coeffs);
        top.ln() + roots.iter().map(|r| r.norm().ln().max(y)).sum::<f64>()
    };
    let (v, ok) = adaptive(&f, 0.0, 2.0 * PI, 64, RONKIN_TOL * 2.0 * PI);
    if !ok {
        return Err(Error::Tolerance(format!("Ronkin quadrature at ({x}, {y})")));
    }
    Ok(v / (2.0 * PI) + c.jmin as f64 * y)
}

pub fn free_energy(p: &LaurentPoly2) -> Result<f64> {
    ronkin(p, 0.0, 0.0)
}

fn zeta_even(k: usize) -> f64 {
    match k {
        1 => PI.powi(2) / 6.0,
        2 => PI.powi(4) / 90.0,
        3 => PI.powi(6) / 945.0,
        4 => PI.powi(8) / 9450.0,
        _ => {
            static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
            let t = TABLE.get_or_init(|| (0..64).map(|k| (1..200).map(|n| (n as f64).powi(-2 * k as i32)).sum()).collect());
            t.get(k).copied().unwrap_or(1.0)
        }
    }
}

/// Clausen function `Cl_2(x) = sum sin(kx)/k^2`, from the Bernoulli
/// expansion about 0 after reducing `x` to `(-pi, pi]`.
pub fn clausen2(x: f64) -> f64 {
    let mut t = x.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t == 0.0 {
        return 0.0;
    }
    let (sgn, t) = if t < 0.0 { (-1.0, -t) } else { (1.0, t) };
    let r = t / (2.0 * PI);
    let mut s = t - t * t.ln();
    let mut pw = r * r;
    for k in 1..60 {
        let term = t * zeta_even(k) * pw / (k as f64 * (2 * k + 1) as f64);
        s += term;
        if term.abs() < 1e-18 {
            break;
        }
        pw *= r * r;
    }
    sgn * s
}

/// `L(theta) = -int_0^theta log(2 sin t) dt`, equal to `Cl_2(2 theta) / 2`.
pub fn lobachevsky(theta: f64) -> f64 {
    clausen2(2.0 * theta) / 2.0
}

/// Partial Fourier sum `1/2 sum_{k <= n} sin(2 k theta) / k^2`.
pub fn lobachevsky_series(theta: f64, n: usize) -> f64 {
    (1..=n).map(|k| (2.0 * k as f64 * theta).sin() / (k * k) as f64).sum::<f64>() / 2.0
}

/// The defining integral by adaptive quadrature.
pub fn lobachevsky_quad(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    // split off log t so the remaining integrand is smooth at 0
    let a = theta.abs();
    let smooth = adaptive(&|t: f64| if t == 0.0 { 0.0 } else { (t.sin() / t).abs().ln() }, 0.0, a, 8, 1e-13).0;
    let v = -(a * 2f64.ln() + a * (a.ln() - 1.0) + smooth);
    v * theta.signum()
}

/// Whether `(s, t)` is in the closed slope triangle, with slack.
pub fn in_slope_triangle(s: f64, t: f64, slack: f64) -> bool {
    s >= -slack && t >= -slack && s + t <= 1.0 + slack
}

/// `sigma(s, t) = -(L(pi s) + L(pi t) + L(pi (1 - s - t))) / pi`.
pub fn surface_tension_honeycomb(s: f64, t: f64) -> Result<f64> {
    if !s.is_finite() || !t.is_finite() || !in_slope_triangle(s, t, 1e-12) {
        return Err(Error::SlopeInfeasible);
    }
    let u = 1.0 - s - t;
    Ok(-(lobachevsky(PI * s) + lobachevsky(PI * t) + lobachevsky(PI * u)) / PI)
}

/// Gradient of the honeycomb surface tension; infinite on the walls.
pub fn surface_tension_gradient(s: f64, t: f64) -> (f64, f64) {
    let u = (PI * (1.0 - s - t)).sin().ln();
    ((PI * s).sin().ln() - u, (PI * t).sin().ln() - u)
}

/// Hessian of the honeycomb surface tension.
pub fn surface_tension_hessian(s: f64, t: f64) -> [[f64; 2]; 2] {
    let cot = |x: f64| x.cos() / x.sin();
    let (a, b, c) = (cot(PI * s), cot(PI * t), cot(PI * (1.0 - s - t)));
    [[PI * (a + c), PI * c], [PI * c, PI * (b + c)]]
}

/// Slope `(theta_b / pi, theta_c / pi)` of the triangle with sides
/// `a, b, c`, where `theta_x` is the angle opposite side `x`. `None` when
/// the triangle inequality fails (a frozen point).
pub fn honeycomb_slope(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a >= b + c || b >= a + c || c >= a + b {
        return None;
    }
    let ang = |opp: f64, p: f64, q: f64| ((p * p + q * q - opp * opp) / (2.0 * p * q)).clamp(-1.0, 1.0).acos();
    Some((ang(b, a, c) / PI, ang(c, a, b) / PI))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LegendrePair {
    pub s: f64,
    pub t: f64,
    pub sigma: f64,
    /// Whether the slope came from an exact lattice count off the amoeba.
    pub exact: bool,
}

/// `d R / d Y` as the average over `arg z` of the lowest exponent plus the
/// number of roots inside `|w| = e^y`; each root contributes the measure of
/// the angle set where it is inside, found from bracketed crossings.
fn ronkin_dy(c: &Curve, x: f64, y: f64) -> f64 {
    let n = 1024;
    let h = 2.0 * PI / n as f64;
    let logs: Vec<Vec<f64>> = (0..n).map(|k| c.fiber_logs(x, k as f64 * h)).collect();
    let d = logs.iter().map(|l| l.len()).min().unwrap_or(0);
    let mut total = 0.0;
    for k in 0..d {
        let f = |t: f64| c.fiber_logs(x, t).get(k).copied().unwrap_or(f64::INFINITY) - y;
        let mut inside = 0.0;
        for i in 0..n {
            let (a, b) = (logs[i][k] - y, logs[(i + 1) % n][k] - y);
            let (t0, t1) = (i as f64 * h, (i + 1) as f64 * h);
            if (a < 0.0) == (b < 0.0) {
                if a < 0.0 {
                    inside += h;
                }
                continue;
            }
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..60 {
                let mid = (lo + hi) / 2.0;
                if (f(mid) < 0.0) == (a < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cross = (lo + hi) / 2.0;
            inside += if a < 0.0 { cross - t0 } else { t1 - cross };
        }
        total += inside / (2.0 * PI);
    }
    c.jmin as f64 + total
}

/// Gradient of the Ronkin function, exact up to root-finding precision.
pub fn ronkin_gradient(p: &LaurentPoly2, x: f64, y: f64) -> (f64, f64) {
    let c = Curve::new(p);
    (ronkin_dy(&c.transpose(), y, x), ronkin_dy(&c, x, y))
}

/// Slope `grad R` and `sigma = sX + tY - R` at `(x, y)`. Off the amoeba the
/// slope is the exact lattice point of the component. On it the gradient
/// comes from root counts; `h > 0` selects central differences instead.
pub fn legendre_pair(p: &LaurentPoly2, x: f64, y: f64, h: f64) -> Result<LegendrePair> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Malformed("non-finite point".into()));
    }
    let c = Curve::new(p);
    let r = curve_ronkin(&c, x, y)?;
    if !c.is_degenerate() && !curve_member(&c, x, y, 1e-7) {
        let (s, t) = c.complement_slope(x, y);
        let (s, t) = (s as f64, t as f64);
        return Ok(LegendrePair { s, t, sigma: s * x + t * y - r, exact: true });
    }
    let (s, t) = if h > 0.0 {
        (
            (curve_ronkin(&c, x + h, y)? - curve_ronkin(&c, x - h, y)?) / (2.0 * h),
            (curve_ronkin(&c, x, y + h)? - curve_ronkin(&c, x, y - h)?) / (2.0 * h),
        )
    } else {
        ronkin_gradient(p, x, y)
    };
    Ok(LegendrePair { s, t, sigma: s * x + t * y - r, exact: false })
}

/// Point `(X, Y)` where `grad R = (s, t)`: the minimizer of the convex
/// `R(X, Y) - sX - tY`, by regularized Newton steps (finite-difference
/// Hessian of the exact gradient) with backtracking on that objective.
/// Off the amoeba the Hessian vanishes and the steps fall back to the
/// gradient direction.
pub fn dual_point(p: &LaurentPoly2, s: f64, t: f64, start: (f64, f64)) -> Result<(f64, f64)> {
    let c = Curve::new(p);
    let h = 1e-5;
    let resid = |x: f64, y: f64| {
        let g = ronkin_gradient(p, x, y);
        (g.0 - s, g.1 - t)
    };
    let obj = |x: f64, y: f64| curve_ronkin(&c, x, y).map(|r| r - s * x - t * y);
    let (mut x, mut y) = start;
    let mut r = resid(x, y);
    let mut f = obj(x, y)?;
    for _ in 0..200 {
        let norm = r.0.hypot(r.1);
        if norm < 1e-8 {
            return Ok((x, y));
        }
        let (ax, ay) = resid(x + h, y);
        let (bx, by) = resid(x, y + h);
        let off = ((ay - r.1) + (bx - r.0)) / (2.0 * h);
        let mu = 1e-6 + norm * 1e-3;
        let (hxx, hxy, hyy) = ((ax - r.0) / h + mu, off, (by - r.1) / h + mu);
        let det = hxx * hyy - hxy * hxy;
        let (dx, dy) = if hxx > 0.0 && det > 1e-12 {
            (-(hyy * r.0 - hxy * r.1) / det, -(hxx * r.1 - hxy * r.0) / det)
        } else {
            (-r.0, -r.1)
        };
        let mut step = 1.0;
        loop {
            let (nx, ny) = (x + step * dx, y + step * dy);
            let nf = obj(nx, ny)?;
            if nf < f - 1e-4 * step * (dx * r.0 + dy * r.1).abs() || step < 1e-10 {
                x = nx;
                y = ny;
                f = nf;
                r = resid(x, y);
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 && r.0.hypot(r.1) >= norm {
            // stalled at the precision of the gradient
            if norm < 1e-6 {
                return Ok((x, y));
            }
            break;
        }
    }
    Err(Error::Tolerance(format!("no dual point for slope ({s}, {t})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> LaurentPoly2 {
        LaurentPoly2::from_ints(&[(1, 0, 0), (1, 1, 0), (1, 0, 1)])
    }

    #[test]
    fn lobachevsky_three_ways() {
        for &th in &[0.1, 0.5, PI / 3.0, 1.3, 2.5] {
            let a = lobachevsky(th);
            assert!((a - lobachevsky_quad(th)).abs() < 1e-9, "{th}");
            assert!((a - lobachevsky_series(th, 20000)).abs() < 1e-6, "{th}");
        }
        assert!((lobachevsky(PI / 3.0) - 0.338_313_8).abs() < 1e-7);
        assert!(lobachevsky(PI).abs() < 1e-14);
    }

    #[test]
    fn free_energies() {
        let f = free_energy(&line()).unwrap();
        assert!((f - 0.323_065_9).abs() < 1e-7, "{f}");
        let sq = LaurentPoly2::from_ints(&[(1, 0, 0), (1, 1, 0), (1, 0, 1), (-1, 1, 1)]);
        let catalan = 0.915_965_594_177_219;
        let f = free_energy(&sq).unwrap();
        assert!((f - 2.0 * catalan / PI).abs() < 1e-8, "{f}");
        // a >= b + c gives log a
        let frozen = LaurentPoly2::from_ints(&[(5, 0, 0), (2, 1, 0), (1, 0, 1)]);
        assert!((free_energy(&frozen).unwrap() - 5f64.ln()).abs() < 1e-9);
        assert!((free_energy(&LaurentPoly2::from_ints(&[(7, 0, 0)])).unwrap() - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tension_values() {
        assert!(surface_tension_honeycomb(0.0, 0.0).unwrap().abs() < 1e-14);
        let m = surface_tension_honeycomb(1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert!((m + 0.323_065_9).abs() < 1e-7);
        assert_eq!(surface_tension_honeycomb(0.8, 0.3), Err(Error::SlopeInfeasible));
        for i in 1..30 {
            for j in 1..30 - i {
                let v = surface_tension_honeycomb(i as f64 / 30.0, j as f64 / 30.0).unwrap();
                assert!(v >= m - 1e-12);
            }
        }
    }

    #[test]
    fn legendre_examples() {
        let lp = legendre_pair(&line(), 0.0, 0.0, 0.0).unwrap();
        assert!((lp.s - 1.0 / 3.0).abs() < 1e-6 && (lp.t - 1.0 / 3.0).abs() < 1e-6);
        let (b, c) = (1.3f64, 0.8f64);
        let (s, t) = honeycomb_slope(1.0, b, c).unwrap();
        let lp = legendre_pair(&line(), b.ln(), c.ln(), 1e-5).unwrap();
        assert!((lp.s - s).abs() < 1e-6 && (lp.t - t).abs() < 1e-6);
        let lp = legendre_pair(&line(), b.ln(), c.ln(), 0.0).unwrap();
        assert!((lp.s - s).abs() < 1e-9 && (lp.t - t).abs() < 1e-9);
        assert!((lp.sigma - surface_tension_honeycomb(s, t).unwrap()).abs() < 1e-6);
        let far = legendre_pair(&line(), 8.0, 0.0, 0.0).unwrap();
        assert!(far.exact && far.s == 1.0 && far.t == 0.0);
    }

    #[test]
    fn dual_point_inverts_gradient() {
        let (x, y) = dual_point(&line(), 0.2, 0.5, (0.0, 0.0)).unwrap();
        let lp = legendre_pair(&line(), x, y, 0.0).unwrap();
        assert!((lp.s - 0.2).abs() < 1e-5 && (lp.t - 0.5).abs() < 1e-5);
    }
}
