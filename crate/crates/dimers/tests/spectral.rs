use dimers::amoeba::{amoeba_raster, auto_window, sample_amoeba, Curve};
use dimers::laurent::LaurentPoly2;
use dimers::phase::{classify_point, classify_slope, harnack_check, Phase};
use dimers::ronkin::{dual_point, free_energy, legendre_pair, lobachevsky, ronkin, surface_tension_honeycomb};
use dimers::torus::{characteristic_polynomial, FundamentalDomain};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn honeycomb() -> LaurentPoly2 {
    LaurentPoly2::from_ints(&[(1, 0, 0), (1, 1, 0), (1, 0, 1)])
}

fn three_by_two() -> LaurentPoly2 {
    characteristic_polynomial(&FundamentalDomain::square_three_by_two(&q(1), &q(2), &q(1), &q(1), &q(1))).unwrap()
}

#[test]
fn free_energy_anchors() {
    let f = free_energy(&honeycomb()).unwrap();
    assert!((f - 0.323066).abs() < 1e-4);
    assert!((f + surface_tension_honeycomb(1.0 / 3.0, 1.0 / 3.0).unwrap()).abs() < 1e-9);
    assert!((f - 3.0 * lobachevsky(PI / 3.0) / PI).abs() < 1e-9);
    // two vertices per fundamental domain of the square grid
    let sq = characteristic_polynomial(&FundamentalDomain::square_two_vertex()).unwrap();
    let per_vertex = free_energy(&sq).unwrap() / 2.0;
    assert!((per_vertex - 0.291561).abs() < 1e-4, "{per_vertex}");
}

#[test]
fn legendre_round_trip() {
    let p = honeycomb();
    let c = Curve::new(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pts = sample_amoeba(&c, 50, ((-1.5, 1.5), (-1.5, 1.5)), &mut rng);
    assert_eq!(pts.len(), 50);
    let mut worst: f64 = 0.0;
    for (i, &(x, y)) in pts.iter().enumerate() {
        // nudge off the sampled boundary point into the interior
        let (x, y) = (x * 0.9, y * 0.9);
        let lp = legendre_pair(&p, x, y, 0.0).unwrap();
        if lp.exact {
            continue;
        }
        let sigma = surface_tension_honeycomb(lp.s, lp.t).unwrap();
        worst = worst.max((lp.sigma - sigma).abs());
        // sigma(s, t) + R(x, y) = s x + t y
        worst = worst.max((sigma + ronkin(&p, x, y).unwrap() - lp.s * x - lp.t * y).abs());
        if i % 5 == 0 {
            let (bx, by) = dual_point(&p, lp.s, lp.t, (0.0, 0.0)).unwrap();
            worst = worst.max((bx - x).abs()).max((by - y).abs());
        }
    }
    assert!(worst <= 1e-4, "round trip residual {worst}");
}

#[test]
fn three_by_two_phases() {
    let p = three_by_two();
    let r = amoeba_raster(&p, (-6.0, 6.0), (-6.0, 6.0), 400, 400);
    let mut gas: Vec<(i64, i64)> = r.bounded().iter().map(|c| c.slope).collect();
    gas.sort();
    assert_eq!(gas, vec![(0, -1), (0, 0)]);
    let mut frozen: Vec<(i64, i64)> = r.unbounded().iter().map(|c| c.slope).collect();
    frozen.sort();
    assert_eq!(frozen, vec![(-1, 0), (0, -2), (0, 1), (1, -1)]);
    for s in gas {
        let lab = classify_slope(&p, s.0 as f64, s.1 as f64, &r).unwrap();
        assert_eq!(lab.phase, Phase::Gas);
        let back = classify_point(&p, lab.dual.0, lab.dual.1).unwrap();
        assert_eq!((back.phase, back.slope), (Phase::Gas, (s.0 as f64, s.1 as f64)));
    }
    for s in frozen {
        assert_eq!(classify_slope(&p, s.0 as f64, s.1 as f64, &r).unwrap().phase, Phase::Frozen);
    }
}

#[test]
fn harnack_curves_are_two_to_one() {
    let weighted = LaurentPoly2::from_ints(&[(2, 0, 0), (3, 1, 0), (4, 0, 1)]);
    let sq = characteristic_polynomial(&FundamentalDomain::square_two_vertex()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [weighted, sq, three_by_two()] {
        let c = Curve::new(&p);
        let pts = sample_amoeba(&c, 500, auto_window(&p, 1.0), &mut rng);
        assert_eq!(pts.len(), 500);
        let rep = harnack_check(&p, &pts);
        assert!(rep.passed(), "violations {:?}", &rep.violations[..rep.violations.len().min(5)]);
    }
    // planted control: some fiber has more than two points
    let control = LaurentPoly2::from_ints(&[(1, 0, 0), (1, 1, 0), (1, 0, 1), (1, 1, 2), (1, 2, 1)]);
    let c = Curve::new(&control);
    let pts: Vec<(f64, f64)> = (0..200)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .filter(|&(x, y)| dimers::amoeba::curve_member(&c, x, y, 1e-9))
        .collect();
    assert!(!harnack_check(&control, &pts).passed());
}
