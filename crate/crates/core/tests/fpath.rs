use std::f64::consts::PI;
use std::sync::Arc;

use singfol::catalog;
use singfol::flowengine::{CoeffCurve, UPoly};
use singfol::foliation::FoliationPresentation;
use singfol::fpath::{
    complement, concatenate, interpolate_paths, is_homotopy, make_fpath, ComplementBackend, Grid, MembershipBackend,
    Variation,
};
use singfol::linalg::dist;
use singfol::symcore::parse_poly;

fn poly_t(coeffs: &[f64]) -> UPoly {
    UPoly(coeffs.to_vec())
}

fn curve(rows: Vec<UPoly>) -> CoeffCurve {
    CoeffCurve::new(vec![0.0, 1.0], vec![rows]).unwrap()
}

fn rot() -> Arc<FoliationPresentation> {
    Arc::new(catalog::rot2())
}

#[test]
fn speed_reprofiled_loops_are_homotopic() {
    // 2π versus 4πt: both wind once around the unit circle
    let v = Variation::linear(
        rot(),
        CoeffCurve::constant(&[2.0 * PI]),
        curve(vec![poly_t(&[0.0, 4.0 * PI])]),
        vec![1.0, 0.0],
        1e-11,
    )
    .unwrap();
    let y = complement(&v, &Grid { nt: 9, ns: 5 }, ComplementBackend::Auto).unwrap();
    assert_eq!(y.backend, ComplementBackend::Coefficients);
    for row in y.coeffs.as_ref().unwrap() {
        assert!(row.last().unwrap()[0].abs() < 1e-10);
    }
    let rep = is_homotopy(&v, 1e-6).unwrap();
    assert!(rep.ok, "{rep:?}");
}

#[test]
fn constant_variation_has_zero_complement() {
    let p = make_fpath(Arc::new(catalog::sl2_1d()), CoeffCurve::constant(&[0.3, -0.2, 0.1]), &[0.4], 1e-10).unwrap();
    let v = Variation::constant(&p);
    for backend in [ComplementBackend::Coefficients, ComplementBackend::Sampled] {
        let y = complement(&v, &Grid { nt: 5, ns: 3 }, backend).unwrap();
        assert!(y.at_base.iter().flatten().flatten().all(|&c| c == 0.0));
    }
}

#[test]
fn linear_self_variation() {
    // X(t, s) = s·R gives Y(t, s) = t·R
    let v = Variation::new(rot(), vec![(UPoly::linear(0.0, 1.0), CoeffCurve::constant(&[1.0]))], vec![0.6, -0.3], 1e-12)
        .unwrap();
    let grid = Grid { nt: 5, ns: 4 };
    let lin = complement(&v, &grid, ComplementBackend::Linear).unwrap();
    let sam = complement(&v, &grid, ComplementBackend::Sampled).unwrap();
    for (is, _) in lin.ss.iter().enumerate() {
        for (it, &t) in lin.ts.iter().enumerate() {
            let m = &lin.matrices.as_ref().unwrap()[is][it];
            assert!((m[(0, 1)] - t).abs() < 1e-12 && (m[(1, 0)] + t).abs() < 1e-12);
            assert!(dist(&lin.at_base[is][it], &sam.at_base[is][it]) < 1e-7);
        }
    }
}

#[test]
fn coefficient_and_sampled_backends_agree() {
    let f = Arc::new(catalog::sl2_1d());
    let c0 = curve(vec![poly_t(&[0.2, 0.3]), poly_t(&[-0.4]), poly_t(&[0.1, 0.0, 0.2])]);
    let c1 = curve(vec![poly_t(&[-0.1]), poly_t(&[0.5, -0.5]), poly_t(&[0.0, 0.3])]);
    let v = Variation::linear(f, c0, c1, vec![0.25], 1e-12).unwrap();
    let grid = Grid { nt: 5, ns: 3 };
    let a = complement(&v, &grid, ComplementBackend::Coefficients).unwrap();
    let b = complement(&v, &grid, ComplementBackend::Sampled).unwrap();
    for is in 0..grid.ns {
        for it in 0..grid.nt {
            assert!(dist(&a.at_base[is][it], &b.at_base[is][it]) < 1e-8, "s {is} t {it}");
        }
    }
}

#[test]
fn endpoint_kinematics() {
    let f = Arc::new(catalog::linear_sl2());
    let c0 = curve(vec![poly_t(&[0.5]), poly_t(&[0.2, 0.4]), poly_t(&[-0.3])]);
    let c1 = curve(vec![poly_t(&[-0.2, 0.1]), poly_t(&[0.1]), poly_t(&[0.6])]);
    let v = Variation::linear(f, c0, c1, vec![0.7, 0.4], 1e-13).unwrap();
    let y = complement(&v, &Grid { nt: 3, ns: 3 }, ComplementBackend::Sampled).unwrap();
    let h = 1e-5;
    for (is, &s) in y.ss.iter().enumerate() {
        if s == 0.0 || s == 1.0 {
            continue;
        }
        for (it, &t) in y.ts.iter().enumerate() {
            let plus = v.base_point(t, s + h).unwrap();
            let minus = v.base_point(t, s - h).unwrap();
            let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            assert!(dist(&fd, &y.at_base[is][it]) < 1e-5, "t {t}");
        }
    }
}

#[test]
fn moving_endpoint_is_not_a_homotopy() {
    let f = Arc::new(catalog::full2());
    let v = Variation::new(f, vec![(UPoly::linear(0.0, 1.0), CoeffCurve::constant(&[1.0, 0.0]))], vec![0.0, 0.0], 1e-10)
        .unwrap();
    let rep = is_homotopy(&v, 1e-6).unwrap();
    assert!(!rep.ok);
    assert!(rep.endpoint_defects.iter().all(|&d| (d - 1.0).abs() < 1e-9));
}

#[test]
fn claim_two_interpolation_with_vanishing_coefficient() {
    // ROT2 extended by (x² + y² − 1)·R; the extra generator vanishes on the unit circle
    let d = 2;
    let g = parse_poly("x^2 + y^2 - 1", d).unwrap();
    let f = Arc::new(catalog::rot2().extend(&[vec![g]]).unwrap());
    let p0 = make_fpath(f.clone(), CoeffCurve::constant(&[2.0 * PI, 0.0]), &[1.0, 0.0], 1e-11).unwrap();
    let p1 = make_fpath(f, curve(vec![poly_t(&[2.0 * PI]), poly_t(&[0.0, 3.0, -1.0])]), &[1.0, 0.0], 1e-11).unwrap();
    let v = interpolate_paths(&p0, &p1).unwrap();
    let rep = is_homotopy(&v, 1e-6).unwrap();
    assert!(rep.ok, "{rep:?}");
    assert!(rep.backends.iter().all(|b| *b == MembershipBackend::Exact));
}

#[test]
fn loops_at_the_fixed_point() {
    let a0 = CoeffCurve::constant(&[2.0 * PI]);
    let same = curve(vec![poly_t(&[0.0, 4.0 * PI])]);
    let less = curve(vec![poly_t(&[0.0, 2.0 * PI])]);
    let p0 = make_fpath(rot(), a0, &[0.0, 0.0], 1e-11).unwrap();
    let p1 = make_fpath(rot(), same, &[0.0, 0.0], 1e-11).unwrap();
    let p2 = make_fpath(rot(), less, &[0.0, 0.0], 1e-11).unwrap();
    assert!(is_homotopy(&interpolate_paths(&p0, &p1).unwrap(), 1e-6).unwrap().ok);
    let bad = is_homotopy(&interpolate_paths(&p0, &p2).unwrap(), 1e-6).unwrap();
    assert!(!bad.ok);
    // endpoint condition holds; the failure is the nonzero class of R at the origin
    assert!(bad.endpoint_defects.iter().all(|&d| d < 1e-12));
}

#[test]
fn full2_two_profiles_on_a_segment() {
    let f = FoliationPresentation::with_brackets(
        singfol::foliation::Chart::All,
        vec![
            singfol::symcore::PolyVectorField::parse("[1, 0]").unwrap(),
            singfol::symcore::PolyVectorField::parse("[0, 1]").unwrap(),
            singfol::symcore::PolyVectorField::parse("[y, 0]").unwrap(),
        ],
        &[(1, 2, vec![parse_poly("1", 2).unwrap(), parse_poly("0", 2).unwrap(), parse_poly("0", 2).unwrap()])],
    )
    .unwrap();
    let f = Arc::new(f);
    let p0 = make_fpath(f.clone(), CoeffCurve::constant(&[1.0, 0.0, 0.0]), &[0.0, 0.0], 1e-11).unwrap();
    let p1 = make_fpath(f, curve(vec![poly_t(&[1.0]), poly_t(&[0.0]), poly_t(&[0.5, -2.0])]), &[0.0, 0.0], 1e-11).unwrap();
    let v = interpolate_paths(&p0, &p1).unwrap();
    let rep = is_homotopy(&v, 1e-6).unwrap();
    assert!(rep.ok, "{rep:?}");
}

#[test]
fn interpolation_requires_a_common_base() {
    let p0 = make_fpath(rot(), CoeffCurve::constant(&[2.0 * PI]), &[1.0, 0.0], 1e-10).unwrap();
    let p1 = make_fpath(rot(), curve(vec![poly_t(&[0.0, 4.0 * PI])]), &[1.0, 0.0], 1e-10).unwrap();
    assert!(interpolate_paths(&p0, &p1).is_err());
}

#[test]
fn concatenation_is_compatible_with_flow() {
    for (f, c1, c2, x0) in [
        (catalog::rot2(), vec![1.3], vec![-0.4], vec![0.8, 0.1]),
        (catalog::full2(), vec![0.5, -1.0], vec![0.2, 0.7], vec![0.0, 0.0]),
    ] {
        let f = Arc::new(f);
        let p = make_fpath(f.clone(), CoeffCurve::constant(&c1), &x0, 1e-11).unwrap();
        let q = make_fpath(f.clone(), CoeffCurve::constant(&c2), p.target(), 1e-11).unwrap();
        let qp = concatenate(&q, &p).unwrap();
        for i in -1..=1 {
            for j in -1..=1 {
                let x = vec![x0[0] + 0.1 * i as f64, x0[1] + 0.1 * j as f64];
                let lhs = qp.flow(&x).unwrap();
                let rhs = q.flow(&p.flow(&x).unwrap()).unwrap();
                assert!(dist(&lhs, &rhs) < 1e-9);
            }
        }
    }
}

#[test]
fn least_squares_backend_at_irrational_endpoints() {
    let x0 = vec![std::f64::consts::FRAC_1_SQRT_2, 0.3 * PI];
    let good = Variation::linear(
        rot(),
        CoeffCurve::constant(&[2.0 * PI]),
        curve(vec![poly_t(&[0.0, 4.0 * PI])]),
        x0.clone(),
        1e-11,
    )
    .unwrap();
    let rep = singfol::fpath::variation::is_homotopy_on(&good, &Grid { nt: 9, ns: 3 }, 1e-6).unwrap();
    assert!(rep.ok, "{rep:?}");
    assert!(rep.backends.iter().all(|b| *b == MembershipBackend::LeastSquares));

    let bad = Variation::linear(rot(), CoeffCurve::constant(&[2.0 * PI]), CoeffCurve::constant(&[PI]), x0, 1e-11).unwrap();
    let rep = singfol::fpath::variation::is_homotopy_on(&bad, &Grid { nt: 9, ns: 3 }, 1e-6).unwrap();
    assert!(!rep.ok);
}
