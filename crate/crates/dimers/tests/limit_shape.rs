use dimers::graph::honeycomb_hexagon;
use dimers::limit_shape::*;
use dimers::sampler::{collect_stats, glauber_batch, ChainConfig, StatsQuery};
use dimers::Error;
use num_complex::Complex64;

fn hexagon_eq() -> Burgers {
    Burgers::Plain(PlaneCurveQ::hexagon())
}

#[test]
fn hexagon_frozen_boundary_is_inscribed_circle() {
    let poly = Polygon::hexagon(1.0);
    let per_unit = 100;
    let field = slope_field(&hexagon_eq(), &poly, per_unit).unwrap();
    assert_eq!((field.nx, field.ny), (201, 201));
    let pts: Vec<(f64, f64)> = frozen_boundary(&hexagon_eq(), &field).into_iter().map(to_euclid).collect();
    assert!(pts.len() > 400);
    let (c, r) = fit_circle(&pts).unwrap();
    assert!(c.0.abs() < 1e-9 && c.1.abs() < 1e-9);
    assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-9);
    let resid = tangency_residual(&poly, c, r) * per_unit as f64;
    assert!(resid <= 1e-3, "tangency residual {resid} mesh units");
}

#[test]
fn burgers_heights_match_the_minimizer() {
    let poly = Polygon::hexagon(1.0);
    let per_unit = 16;
    let bh = poly.boundary_height().unwrap();
    let m = minimize_surface_tension(&poly, &bh, per_unit, 5000, 1e-10).unwrap();
    assert!(m.history.windows(2).all(|w| w[1] <= w[0] + 1e-13), "objective must not increase");
    assert!(m.residual < 1e-4);

    let field = slope_field(&hexagon_eq(), &poly, per_unit).unwrap();
    let base = ((per_unit as i64 - field.origin.0) as usize, (-field.origin.1) as usize);
    let hs = height_from_slopefield(&field, base, bh(1.0, 0.0), 0.1).unwrap();
    let mut linf: f64 = 0.0;
    for (k, &(i, j)) in m.mesh.nodes.iter().enumerate() {
        linf = linf.max((hs.at_node(i, j).unwrap() - m.h[k]).abs());
    }
    assert!(linf * per_unit as f64 <= 2.0, "heights differ by {} cells", linf * per_unit as f64);

    // the center height is -1/2 by symmetry
    let center = m.mesh.nodes.iter().position(|&p| p == (0, 0)).unwrap();
    assert!((m.h[center] + 0.5).abs() < 1e-6);
}

#[test]
fn minimizer_objective_converges_to_burgers() {
    let poly = Polygon::hexagon(1.0);
    let bh = poly.boundary_height().unwrap();
    let m = minimize_surface_tension(&poly, &bh, 16, 5000, 1e-10).unwrap();
    let burgers = burgers_objective(&hexagon_eq(), &poly, 400).unwrap();
    // plain objectives approach from above with shrinking gaps
    let gaps: Vec<f64> = m.levels.iter().map(|l| l.1 - burgers).collect();
    assert!(gaps.iter().all(|&g| g > 0.0));
    assert!(gaps.windows(2).all(|w| w[1] < w[0] / 2.0));
    let rel = (m.extrapolated_objective() - burgers).abs() / burgers.abs();
    assert!(rel < 5e-3, "extrapolated objective off by {rel}");
}

#[test]
fn curl_in_a_slope_field_is_reported() {
    let poly = Polygon::hexagon(1.0);
    let mut field = slope_field(&hexagon_eq(), &poly, 8).unwrap();
    for iy in 0..field.ny {
        for ix in 0..field.nx {
            let (_, y) = field.coords(ix, iy);
            let k = iy * field.nx + ix;
            if field.points[k].is_some() {
                let s = 0.4 + 0.3 * y;
                field.points[k] = Some(BurgersPoint::Liquid { z: (0.0, 1.0), w: (-1.0, -1.0), s, t: 0.2 });
            }
        }
    }
    let base = (field.nx / 2, field.ny / 2);
    match height_from_slopefield(&field, base, 0.0, 1e-6) {
        Err(Error::Tolerance(msg)) => assert!(msg.contains("loop residual")),
        other => panic!("expected a tolerance failure, got {other:?}"),
    }
}

#[test]
fn heart_fit_is_tangent_to_all_nine_sides() {
    let heart = Polygon::heart(1.0);
    let fit = fit_tangency_curve(&heart).unwrap();
    assert_eq!(fit.q.degree, 3);
    assert!(fit.residual < 1e-10);
    let eq = Burgers::Plain(fit.q.clone());
    let field = slope_field(&eq, &heart, 40).unwrap();
    let liquid = field.points.iter().flatten().filter(|p| p.is_liquid()).count();
    let total = field.points.iter().flatten().count();
    assert!(liquid > total / 2 && liquid < total);
    let pts = frozen_boundary(&eq, &field);
    for (a, b) in heart.edges() {
        let (a, b) = (to_euclid(a), to_euclid(b));
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let len = (ex * ex + ey * ey).sqrt();
        let d = pts
            .iter()
            .map(|&p| {
                let p = to_euclid(p);
                ((ex * (p.1 - a.1) - ey * (p.0 - a.0)) / len).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-3, "side {a:?}-{b:?} missed by {d}");
    }
}

#[test]
fn asymmetric_heart_needs_a_rational_shift() {
    let poly = Polygon::new(vec![(0.0, 0.0), (0.0, 1.0), (-1.0, 1.0), (-2.0, 0.0), (-2.0, -3.0), (2.0, -3.0), (5.0, 0.0), (5.0, 2.0), (2.0, 2.0)]);
    let fit = fit_tangency_curve(&poly).unwrap();
    assert!(fit.shift.is_some());
    assert!(fit.residual < 1e-10);
}

#[test]
fn degenerate_hexagon_drops_degree() {
    // a hexagon whose third side has length zero: a pentagon
    let poly = Polygon::new(vec![(0.0, 0.0), (0.0, 1.0), (-2.0, 1.0), (-2.0, 1.0), (-2.0, -1.0), (-1.0, -1.0)]);
    let fit = fit_tangency_curve(&poly).unwrap();
    assert!(fit.residual < 1e-10);
    assert!(fit.q.degree <= 2);
    let eq = Burgers::Plain(fit.q.clone());
    assert!(eq.solve(-1.0, 0.0).unwrap().is_liquid());
}

#[test]
fn out_of_order_edges_are_rejected() {
    let square = Polygon::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.5), (0.0, 0.25)]);
    assert!(matches!(fit_tangency_curve(&square), Err(Error::Malformed(_))));
}

#[test]
fn volume_constrained_solution_satisfies_its_equation() {
    let c = 0.7;
    let eq = Burgers::Volume(PlaneCurveQ::volume_example(3.0), c);
    let zw = |x: f64, y: f64| match eq.solve(x, y).unwrap() {
        BurgersPoint::Liquid { z, w, .. } => (Complex64::new(z.0, z.1), Complex64::new(w.0, w.1)),
        _ => panic!("expected liquid at ({x}, {y})"),
    };
    let h = 1e-6;
    for &(x, y) in &[(0.1, -0.2), (-0.9, 0.1), (0.3, 0.5), (1.2, 1.3)] {
        let (z, w) = zw(x, y);
        let zx = (zw(x + h, y).0 - zw(x - h, y).0) / (2.0 * h);
        let wy = (zw(x, y + h).1 - zw(x, y - h).1) / (2.0 * h);
        assert!((zx / z + wy / w - c).norm() < 1e-6);
    }
}

#[test]
fn sampled_hexagon_follows_the_burgers_densities() {
    let n = 20;
    let g = honeycomb_hexagon(n, n, n).unwrap();
    let cfg = ChainConfig { chains: 4, burn_in: None, thin: 0, per_chain: 25 };
    let batch = glauber_batch(&g, cfg, 11).unwrap();
    let st = collect_stats(&g, &batch, &StatsQuery::default()).unwrap();
    let cmp = compare_hexagon_density(&g, n, &st.edge_freq, &hexagon_eq(), 4, 2.0).unwrap();
    assert!(cmp.liquid_bins > 20);
    assert!(cmp.l1 < 0.05, "density L1 {}", cmp.l1);
    assert_eq!(cmp.frozen_mismatch, 0);
}
