use std::f64::consts::PI;
use std::sync::Arc;

use singfol::catalog;
use singfol::foliation::{Chart, FoliationPresentation};
use singfol::flowengine::{CoeffCurve, UPoly};
use singfol::fpath::{concatenate, is_homotopy, make_fpath, Variation};
use singfol::holonomy::{
    compose_jets, default_slice, default_slices, holonomy_jet, holonomy_report, linearized_holonomy,
    trivial_holonomy_check, EquivalenceStatus, GermJet, Triviality,
};
use singfol::symcore::{parse_poly, PolyVectorField};

fn curve(rows: Vec<Vec<f64>>) -> CoeffCurve {
    CoeffCurve::new(vec![0.0, 1.0], vec![rows.into_iter().map(UPoly).collect()]).unwrap()
}

#[test]
fn rotation_loop_has_identity_jet() {
    let p = make_fpath(Arc::new(catalog::rot2()), CoeffCurve::constant(&[2.0 * PI]), &[1.0, 0.0], 1e-12).unwrap();
    let (s0, s1) = default_slices(&p, 0.5).unwrap();
    let rep = holonomy_report(&p, &s0, &s1, 2, 1e-10).unwrap();
    assert!(rep.jet.is_identity(1e-7), "{:?}", rep.jet.taylor);
    assert_eq!(rep.equivalence_status, EquivalenceStatus::Decidable);
    assert!(rep.correction.is_zero());
}

#[test]
fn rotz3_loop_linearization() {
    let p = make_fpath(Arc::new(catalog::rotz3()), CoeffCurve::constant(&[2.0 * PI]), &[0.0, 0.0, 0.0], 1e-12).unwrap();
    let (s0, s1) = default_slices(&p, 0.5).unwrap();
    assert_eq!(s0.dim(), 3);
    let l = linearized_holonomy(&p, &s0, &s1, 1e-10).unwrap();
    let expected = (-2.0 * PI).exp();
    assert!((expected - 1.86744e-3).abs() < 1e-8);
    for r in 0..3 {
        for c in 0..3 {
            let want = if r != c {
                0.0
            } else if r == 2 {
                expected
            } else {
                1.0
            };
            // the frame may permute or flip axes; compare in ambient coordinates
            let amb = &s1.frame * &l * s0.frame.transpose();
            assert!((amb[(r, c)] - want).abs() <= 1e-7, "({r},{c}) = {}", amb[(r, c)]);
        }
    }
}

#[test]
fn zero_path_has_identity_jet() {
    let p = make_fpath(Arc::new(catalog::linear_sl2()), CoeffCurve::zero(3), &[0.3, 0.2], 1e-12).unwrap();
    let (s0, s1) = default_slices(&p, 0.5).unwrap();
    assert!(holonomy_jet(&p, &s0, &s1, 3, 1e-10).unwrap().is_identity(1e-9));
}

#[test]
fn vanishing_element_has_trivial_holonomy() {
    let f = catalog::rot2().extend(&[vec![parse_poly("x - 1", 2).unwrap()]]).unwrap();
    let p = make_fpath(Arc::new(f), CoeffCurve::constant(&[0.0, 1.0]), &[1.0, 0.0], 1e-12).unwrap();
    assert!(p.target().iter().zip([1.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12));
    let s0 = default_slice(p.foliation(), p.source(), 0.5).unwrap();
    let rep = trivial_holonomy_check(&p, &s0, 1, 1e-8).unwrap();
    assert_eq!(rep.status, Triviality::Trivial);
    assert!(rep.deviation <= 1e-6);
}

#[test]
fn trivial_check_guards() {
    // element not vanishing at the source
    let p = make_fpath(Arc::new(catalog::rot2()), CoeffCurve::constant(&[2.0 * PI]), &[1.0, 0.0], 1e-10).unwrap();
    let s0 = default_slice(p.foliation(), p.source(), 0.5).unwrap();
    assert!(trivial_holonomy_check(&p, &s0, 1, 1e-8).is_err());

    // zero element
    let z = make_fpath(Arc::new(catalog::rot2()), CoeffCurve::zero(1), &[1.0, 0.0], 1e-10).unwrap();
    assert_eq!(trivial_holonomy_check(&z, &s0, 2, 1e-8).unwrap().status, Triviality::Trivial);

    // rank-0 leaf with a nontrivial slice foliation
    let f = catalog::rotz3().extend(&[vec![parse_poly("x", 3).unwrap()]]).unwrap();
    let p = make_fpath(Arc::new(f), CoeffCurve::constant(&[0.0, 1.0]), &[0.0, 0.0, 0.0], 1e-10).unwrap();
    let s0 = default_slice(p.foliation(), p.source(), 0.5).unwrap();
    assert_eq!(trivial_holonomy_check(&p, &s0, 1, 1e-8).unwrap().status, Triviality::Inconclusive);
}

#[test]
fn holonomy_is_functorial() {
    let rot = Arc::new(catalog::rot2());
    let p = make_fpath(rot.clone(), CoeffCurve::constant(&[0.7]), &[1.2, 0.0], 1e-12).unwrap();
    let q = make_fpath(rot, curve(vec![vec![0.4, 0.6]]), p.target(), 1e-12).unwrap();
    let qp = concatenate(&q, &p).unwrap();
    let s0 = default_slice(p.foliation(), p.source(), 0.5).unwrap();
    let s1 = default_slice(p.foliation(), p.target(), 0.5).unwrap();
    let s2 = default_slice(p.foliation(), q.target(), 0.5).unwrap();
    let jp = holonomy_jet(&p, &s0, &s1, 2, 1e-10).unwrap();
    let jq = holonomy_jet(&q, &s1, &s2, 2, 1e-10).unwrap();
    let jqp = holonomy_jet(&qp, &s0, &s2, 2, 1e-10).unwrap();
    assert!(compose_jets(&jq, &jp).unwrap().max_difference(&jqp) <= 1e-5);

    // FULL2 has zero-dimensional slices; the jets are empty maps
    let full = Arc::new(catalog::full2());
    let p = make_fpath(full.clone(), CoeffCurve::constant(&[0.3, -0.2]), &[0.0, 0.0], 1e-12).unwrap();
    let (a, b) = default_slices(&p, 0.5).unwrap();
    let j = holonomy_jet(&p, &a, &b, 2, 1e-10).unwrap();
    assert_eq!(j.source_dim(), 0);
    assert!(compose_jets(&GermJet::identity(&b, 2), &j).is_ok());
}

#[test]
fn functoriality_with_correction() {
    // leaves y = C·eˣ; orthogonal slices are not carried to orthogonal slices.
    // The map has sizeable quartic terms, so a small stencil keeps the fit honest.
    const EXTENT: f64 = 0.02;
    let f = FoliationPresentation::with_brackets(Chart::All, vec![PolyVectorField::parse("[1, y]").unwrap()], &[]).unwrap();
    let f = Arc::new(f);
    let p = make_fpath(f.clone(), CoeffCurve::constant(&[0.4]), &[0.0, 0.5], 1e-12).unwrap();
    let q = make_fpath(f, curve(vec![vec![0.1, 0.5]]), p.target(), 1e-12).unwrap();
    let s0 = default_slice(p.foliation(), p.source(), EXTENT).unwrap();
    let s1 = default_slice(p.foliation(), p.target(), EXTENT).unwrap();
    let s2 = default_slice(p.foliation(), q.target(), EXTENT).unwrap();
    assert_eq!(s0.dim(), 1);
    let rp = holonomy_report(&p, &s0, &s1, 2, 1e-10).unwrap();
    assert!(!rp.correction.is_zero());
    let qp = concatenate(&q, &p).unwrap();
    let jqp = holonomy_jet(&qp, &s0, &s2, 2, 1e-10).unwrap();
    let jq = holonomy_jet(&q, &s1, &s2, 2, 1e-10).unwrap();
    assert!(compose_jets(&jq, &rp.jet).unwrap().max_difference(&jqp) <= 1e-5);
}

#[test]
fn homotopic_paths_have_equal_holonomy() {
    let rot = Arc::new(catalog::rot2());
    let x0 = [0.0, 0.9];
    let p0 = make_fpath(rot.clone(), CoeffCurve::constant(&[2.0 * PI]), &x0, 1e-12).unwrap();
    let p1 = make_fpath(rot, curve(vec![vec![0.0, 4.0 * PI]]), &x0, 1e-12).unwrap();
    assert!(is_homotopy(&Variation::linear(
        p0.foliation().clone(),
        p0.coeffs().clone(),
        p1.coeffs().clone(),
        x0.to_vec(),
        1e-11
    )
    .unwrap(), 1e-6)
    .unwrap()
    .ok);
    let (s0, s1) = default_slices(&p0, 0.5).unwrap();
    let j0 = holonomy_jet(&p0, &s0, &s1, 2, 1e-10).unwrap();
    let j1 = holonomy_jet(&p1, &s0, &s1, 2, 1e-10).unwrap();
    assert!(j0.max_difference(&j1) <= 1e-6);
}

#[test]
fn slice_base_must_match_path() {
    let p = make_fpath(Arc::new(catalog::rot2()), CoeffCurve::constant(&[0.5]), &[1.0, 0.0], 1e-10).unwrap();
    let s0 = default_slice(p.foliation(), p.source(), 0.5).unwrap();
    assert!(holonomy_jet(&p, &s0, &s0, 1, 1e-10).is_err());
}
