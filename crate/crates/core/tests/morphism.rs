use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use singfol::algebroid::{is_ahomotopy, project_to_apath, APath};
use singfol::catalog;
use singfol::fiber::{anchor, evaluate, minimal_generators};
use singfol::flowengine::{CoeffCurve, UPoly};
use singfol::foliation::{Chart, FoliationPresentation};
use singfol::fpath::{make_fpath, Grid, Variation};
use singfol::holonomy::{default_slices, linearized_holonomy};
use singfol::linalg::dist;
use singfol::morphism::{
    compose_morphisms, factor_morphism, fiber_map, holonomy_commutation, pullback_foliation, pushforward_apath,
    pushforward_projectable_fpath, verify_morphism, FoliatedMorphism, Pullback,
};
use singfol::symcore::{parse_poly, rat, PolyVectorField, Polynomial, Rational};
use singfol::Error;

fn polys(src: &[&str], n: usize) -> Vec<Polynomial> {
    src.iter().map(|s| parse_poly(s, n).unwrap()).collect()
}

fn field(src: &str, n: usize) -> PolyVectorField {
    PolyVectorField::parse_in(src, n).unwrap()
}

fn presentation(gens: &[&str], n: usize) -> Arc<FoliationPresentation> {
    Arc::new(FoliationPresentation::with_brackets(Chart::All, gens.iter().map(|g| field(g, n)).collect(), &[]).unwrap())
}

fn rats(row: &[i64]) -> Vec<Rational> {
    row.iter().map(|&v| rat(v)).collect()
}

fn curve(rows: Vec<Vec<f64>>) -> CoeffCurve {
    CoeffCurve::new(vec![0.0, 1.0], vec![rows.into_iter().map(UPoly).collect()]).unwrap()
}

fn projection() -> FoliatedMorphism {
    FoliatedMorphism::with_constant_coeffs(
        Arc::new(catalog::rot2_cylinder()),
        Arc::new(catalog::rot2()),
        polys(&["x", "y"], 3),
        &[rats(&[1]), rats(&[0])],
    )
    .unwrap()
}

fn inclusion() -> FoliatedMorphism {
    FoliatedMorphism::with_constant_coeffs(Arc::new(catalog::rot2()), Arc::new(catalog::rotz3()), polys(&["x", "y", "0"], 2), &[rats(&[1])])
        .unwrap()
}

fn f_c(c: i64) -> FoliatedMorphism {
    FoliatedMorphism::with_constant_coeffs(presentation(&["[1]"], 1), Arc::new(catalog::rot2()), polys(&["0", "0"], 1), &[rats(&[c])])
        .unwrap()
}

fn cylinder_pullback() -> Pullback {
    pullback_foliation(
        polys(&["x", "y"], 3),
        Arc::new(catalog::rot2()),
        vec![field("[0, 0, 1]", 3)],
        vec![field("[y, -x, 0]", 3)],
        &[],
        Chart::All,
    )
    .unwrap()
}

#[test]
fn the_three_certificates_pass() {
    let rep = verify_morphism(&projection()).unwrap();
    assert!(rep.ok && rep.anchor_ok && rep.bracket_ok, "{rep:?}");
    for c in [0, 1, 5] {
        assert!(verify_morphism(&f_c(c)).unwrap().ok, "C = {c}");
    }
    assert!(verify_morphism(&inclusion()).unwrap().ok);
}

#[test]
fn perturbed_coefficients_fail() {
    let mut bad = inclusion();
    bad.coeffs[0][0] = Polynomial::constant(2, rat(2));
    let rep = verify_morphism(&bad).unwrap();
    assert!(!rep.ok && !rep.anchor_ok);
    assert_eq!(rep.anchor_failures, vec![0]);

    let mut bad = projection();
    bad.coeffs[1][0] = parse_poly("z", 3).unwrap();
    assert_eq!(verify_morphism(&bad).unwrap().anchor_failures, vec![1]);

    // F^C over a nonconstant map is no longer anchored
    let mut moved = f_c(1);
    moved.map = polys(&["1", "0"], 1);
    assert!(!verify_morphism(&moved).unwrap().anchor_ok);
}

#[test]
fn bracket_failure_with_a_valid_anchor() {
    // f ≡ 0 kills every anchor; the bracket identity still constrains u
    let full = Arc::new(catalog::full2());
    let rot = Arc::new(catalog::rot2());
    let ok = FoliatedMorphism::new(full.clone(), rot.clone(), polys(&["0", "0"], 2), vec![polys(&["x"], 2), polys(&["0"], 2)]).unwrap();
    assert!(verify_morphism(&ok).unwrap().ok);
    let bad = FoliatedMorphism::new(full, rot, polys(&["0", "0"], 2), vec![polys(&["y"], 2), polys(&["0"], 2)]).unwrap();
    let rep = verify_morphism(&bad).unwrap();
    assert!(rep.anchor_ok && !rep.bracket_ok);
    assert_eq!(rep.bracket_failures, vec![(0, 1)]);
}

#[test]
fn bracket_identity_sign() {
    // ⟨x∂x, ∂x⟩ → ⟨∂t⟩ over the identity: [x∂x, ∂x] = −∂x, u = (x, 1).
    // The derivative terms must enter as X_a(v) − X_b(u).
    let src = Arc::new(
        FoliationPresentation::with_brackets(Chart::All, vec![field("[x]", 1), field("[1]", 1)], &[(0, 1, polys(&["0", "-1"], 1))])
            .unwrap(),
    );
    let phi = FoliatedMorphism::new(src, presentation(&["[1]"], 1), polys(&["x"], 1), vec![polys(&["x"], 1), polys(&["1"], 1)]).unwrap();
    let rep = verify_morphism(&phi).unwrap();
    assert!(rep.ok, "{rep:?}");
}

#[test]
fn composition() {
    let proj = projection();
    let id = FoliatedMorphism::identity(proj.target.clone());
    let same = compose_morphisms(&id, &proj).unwrap();
    assert_eq!(same.map, proj.map);
    assert_eq!(same.coeffs, proj.coeffs);
    let same = compose_morphisms(&proj, &FoliatedMorphism::identity(proj.source.clone())).unwrap();
    assert_eq!(same.coeffs, proj.coeffs);

    let chain = compose_morphisms(&inclusion(), &proj).unwrap();
    assert_eq!(chain.map, polys(&["x", "y", "0"], 3));
    assert_eq!(chain.coeffs, vec![polys(&["1"], 3), polys(&["0"], 3)]);
    assert!(verify_morphism(&chain).unwrap().ok);

    let zero = FoliatedMorphism::zero(proj.target.clone(), Arc::new(catalog::rotz3()), &rats(&[0, 0, 0])).unwrap();
    assert!(verify_morphism(&zero).unwrap().ok);
    let z = compose_morphisms(&zero, &proj).unwrap();
    assert!(z.coeffs.iter().flatten().all(Polynomial::is_zero));

    assert!(compose_morphisms(&proj, &inclusion()).is_err());
}

#[test]
fn fiber_maps() {
    let inc = inclusion();
    let v = evaluate(&inc.source, &rats(&[1]), &rats(&[1, 0])).unwrap();
    let w = fiber_map(&inc, &v).unwrap();
    assert_eq!(w.base, rats(&[1, 0, 0]));
    assert_eq!(w.coeffs, rats(&[1]));

    let zero = evaluate(&inc.source, &rats(&[0]), &rats(&[1, 0])).unwrap();
    assert!(fiber_map(&inc, &zero).unwrap().coeffs.iter().all(|c| *c == rat(0)));

    let phi = f_c(5);
    let dt = evaluate(&phi.source, &rats(&[1]), &rats(&[0])).unwrap();
    let img = fiber_map(&phi, &dt).unwrap();
    assert_eq!(img.coeffs, rats(&[5]));
    let rep = minimal_generators(&phi.target, &img.base).unwrap();
    assert_eq!(rep.dimension, 1);
    assert!(!img.is_zero(&rep));
    assert!(anchor(&phi.target, &img).unwrap().iter().all(|c| *c == rat(0)));
}

#[test]
fn fiber_map_is_functorial() {
    let (proj, inc) = (projection(), inclusion());
    let chain = compose_morphisms(&inc, &proj).unwrap();
    for (c, x) in [([1, 0], [1, 0, 3]), ([2, -3], [0, 0, 0]), ([0, 7], [-2, 5, 1])] {
        let v = evaluate(&proj.source, &rats(&c), &rats(&x)).unwrap();
        let direct = fiber_map(&chain, &v).unwrap();
        let stepwise = fiber_map(&inc, &fiber_map(&proj, &v).unwrap()).unwrap();
        assert_eq!(direct.base, stepwise.base);
        assert_eq!(direct.coeffs, stepwise.coeffs);
    }
}

#[test]
fn apath_pushforwards() {
    let inc = inclusion();
    let loop_path = make_fpath(inc.source.clone(), CoeffCurve::constant(&[2.0 * PI]), &[1.0, 0.0], 1e-12).unwrap();
    let pushed = pushforward_apath(&inc, &project_to_apath(&loop_path).unwrap()).unwrap();
    assert_eq!(pushed.coeffs, CoeffCurve::constant(&[2.0 * PI]));
    assert!(dist(pushed.target(), &[1.0, 0.0, 0.0]) < 1e-9);

    let z = make_fpath(inc.source.clone(), CoeffCurve::zero(1), &[0.3, 0.4], 1e-12).unwrap();
    let pz = pushforward_apath(&inc, &project_to_apath(&z).unwrap()).unwrap();
    assert!(pz.is_zero() && dist(pz.target(), &[0.3, 0.4, 0.0]) == 0.0);

    // helix on the cylinder: the ∂z coefficient disappears
    let proj = projection();
    let helix = make_fpath(proj.source.clone(), curve(vec![vec![0.5, 1.0], vec![2.0, -1.0]]), &[1.0, 0.0, 3.0], 1e-12).unwrap();
    let a = project_to_apath(&helix).unwrap();
    let b = pushforward_apath(&proj, &a).unwrap();
    assert_eq!(b.coeffs, curve(vec![vec![0.5, 1.0]]));
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let x = a.base.eval(t);
        assert!(dist(&b.base.eval(t), &x[..2]) < 1e-8);
    }
}

#[test]
fn pushforward_with_nonconstant_coefficients() {
    // ⟨x∂x⟩ → ⟨∂x⟩ over the identity, u = x: b(t) = a·γ(t) is not polynomial
    let phi = FoliatedMorphism::new(Arc::new(catalog::scale1()), presentation(&["[1]"], 1), polys(&["x"], 1), vec![polys(&["x"], 1)]).unwrap();
    assert!(verify_morphism(&phi).unwrap().ok);
    let p = make_fpath(phi.source.clone(), CoeffCurve::constant(&[1.0]), &[1.0], 1e-12).unwrap();
    let b = pushforward_apath(&phi, &project_to_apath(&p).unwrap()).unwrap();
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        assert!((b.coeffs.eval(t)[0] - t.exp()).abs() < 1e-8);
        assert!((b.base.eval(t)[0] - t.exp()).abs() < 1e-8);
    }
}

#[test]
fn broken_anchor_blocks_pushforward() {
    let mut bad = inclusion();
    bad.coeffs[0][0] = Polynomial::constant(2, rat(3));
    let p = make_fpath(bad.source.clone(), CoeffCurve::constant(&[1.0]), &[1.0, 0.0], 1e-12).unwrap();
    let a: APath = project_to_apath(&p).unwrap();
    assert!(matches!(pushforward_apath(&bad, &a), Err(Error::Verification(_))));
}

#[test]
fn ahomotopies_push_forward() {
    let proj = projection();
    let grid = Grid { nt: 9, ns: 5 };
    let x0 = vec![1.0, 0.0, 3.0];
    let up = Variation::linear(
        proj.source.clone(),
        curve(vec![vec![2.0 * PI], vec![1.0, -2.0]]),
        curve(vec![vec![0.0, 4.0 * PI], vec![0.5, -1.0]]),
        x0.clone(),
        1e-12,
    )
    .unwrap();
    assert!(is_ahomotopy(&up, &grid, 1e-6).unwrap().ok);
    let down = Variation::linear(
        proj.target.clone(),
        curve(vec![vec![2.0 * PI]]),
        curve(vec![vec![0.0, 4.0 * PI]]),
        vec![1.0, 0.0],
        1e-12,
    )
    .unwrap();
    assert!(is_ahomotopy(&down, &grid, 1e-6).unwrap().ok);
    // every s-slice of the lower variation is the pushforward of the upper one
    for s in [0.0, 0.3, 1.0] {
        let a = project_to_apath(&up.slice(s).unwrap()).unwrap();
        let b = pushforward_apath(&proj, &a).unwrap();
        let direct = project_to_apath(&down.slice(s).unwrap()).unwrap();
        assert_eq!(b.coeffs, direct.coeffs);
        assert!(b.base.max_distance(&direct.base, 20) < 1e-8);
    }
    // a vertical drift that moves the endpoint is not an A-homotopy upstairs
    let drift = Variation::linear(
        proj.source.clone(),
        curve(vec![vec![2.0 * PI], vec![0.0]]),
        curve(vec![vec![2.0 * PI], vec![1.0]]),
        x0,
        1e-12,
    )
    .unwrap();
    assert!(!is_ahomotopy(&drift, &grid, 1e-6).unwrap().ok);
}

#[test]
fn pullbacks() {
    let pb = cylinder_pullback();
    assert_eq!(*pb.foliation, catalog::rot2_cylinder());
    assert_eq!(pb.n_lifts, 1);
    assert!(verify_morphism(&pb.projection).unwrap().ok);

    let full = pullback_foliation(
        polys(&["x", "y"], 3),
        Arc::new(catalog::full2()),
        vec![field("[0, 0, 1]", 3)],
        vec![field("[1, 0, 0]", 3), field("[0, 1, 0]", 3)],
        &[],
        Chart::All,
    )
    .unwrap();
    assert_eq!(*full.foliation, catalog::full3());

    let bad_lift = pullback_foliation(
        polys(&["x", "y"], 3),
        Arc::new(catalog::rot2()),
        vec![field("[0, 0, 1]", 3)],
        vec![field("[y, x, 0]", 3)],
        &[],
        Chart::All,
    );
    assert!(matches!(bad_lift, Err(Error::Verification(_))));
    let bad_vertical = pullback_foliation(
        polys(&["x", "y"], 3),
        Arc::new(catalog::rot2()),
        vec![field("[0, 1, 1]", 3)],
        vec![field("[y, -x, 0]", 3)],
        &[],
        Chart::All,
    );
    assert!(matches!(bad_vertical, Err(Error::Verification(_))));
}

#[test]
fn factorizations() {
    let pb = cylinder_pullback();
    let whole = factor_morphism(&pb.projection, &pb).unwrap();
    assert!(whole.exact);
    assert_eq!(whole.inclusion.coeffs, FoliatedMorphism::identity(pb.foliation.clone()).coeffs);

    let rot_only = FoliatedMorphism::with_constant_coeffs(presentation(&["[y, -x, 0]"], 3), pb.projection.target.clone(), polys(&["x", "y"], 3), &[rats(&[1])])
        .unwrap();
    assert!(verify_morphism(&rot_only).unwrap().ok);
    let fac = factor_morphism(&rot_only, &pb).unwrap();
    assert!(fac.exact);
    assert_eq!(fac.inclusion.coeffs, vec![polys(&["1", "0"], 3)]);
    assert!(verify_morphism(&fac.inclusion).unwrap().ok);
    let back = compose_morphisms(&fac.projection, &fac.inclusion).unwrap();
    assert_eq!(back.coeffs, rot_only.coeffs);
    assert_eq!(back.map, rot_only.map);

    // z-dependent rotation still lies in the pullback module
    let twisted = FoliatedMorphism::new(presentation(&["[z*y, -z*x, 1]"], 3), pb.projection.target.clone(), polys(&["x", "y"], 3), vec![polys(&["z"], 3)])
        .unwrap();
    let fac = factor_morphism(&twisted, &pb).unwrap();
    assert!(fac.exact);
    assert_eq!(fac.inclusion.coeffs, vec![polys(&["z", "1"], 3)]);

    // ∂x is not tangent to the circles at (1, 0, 0)
    let dx = FoliatedMorphism::new(presentation(&["[1, 0, 0]"], 3), pb.projection.target.clone(), polys(&["x", "y"], 3), vec![polys(&["0"], 3)])
        .unwrap();
    assert!(matches!(factor_morphism(&dx, &pb), Err(Error::Membership(_))));
}

#[test]
fn projectable_paths() {
    let proj = projection();
    let lifted = make_fpath(proj.source.clone(), curve(vec![vec![2.0 * PI], vec![0.0]]), &[1.0, 0.0, 3.0], 1e-12).unwrap();
    let down = pushforward_projectable_fpath(&proj, &lifted, false).unwrap();
    assert_eq!(down.coeffs(), &CoeffCurve::constant(&[2.0 * PI]));
    assert!(dist(down.target(), &[1.0, 0.0]) < 1e-9);

    let vertical = make_fpath(proj.source.clone(), curve(vec![vec![0.0], vec![1.5]]), &[1.0, 0.0, 3.0], 1e-12).unwrap();
    assert!(matches!(pushforward_projectable_fpath(&proj, &vertical, false), Err(Error::Invalid(_))));
    let flat = pushforward_projectable_fpath(&proj, &vertical, true).unwrap();
    assert!(flat.is_constant_path());
    assert_eq!(flat.source(), &[1.0, 0.0]);

    let mixed = make_fpath(proj.source.clone(), curve(vec![vec![1.0, 0.5], vec![-2.0]]), &[0.0, 2.0, 3.0], 1e-12).unwrap();
    let horiz = pushforward_projectable_fpath(&proj, &mixed, true).unwrap();
    let direct = make_fpath(proj.target.clone(), curve(vec![vec![1.0, 0.5]]), &[0.0, 2.0], 1e-12).unwrap();
    assert!(dist(horiz.target(), direct.target()) < 1e-10);
    assert!(dist(horiz.target(), &mixed.target()[..2]) < 1e-9);
}

#[test]
fn projection_commutes_with_linearized_holonomy() {
    let proj = projection();
    let p = make_fpath(proj.source.clone(), curve(vec![vec![1.3, 0.4], vec![0.0]]), &[1.2, 0.0, 3.0], 1e-12).unwrap();
    let cmp = holonomy_commutation(&proj, &p, 0.5, 1e-10).unwrap();
    assert_eq!(cmp.source.shape(), (1, 1));
    assert!(cmp.defect <= 1e-6, "{cmp:?}");
}

#[test]
fn spiral_pullback_in_four_dimensions() {
    // (x1, x2, x3, x4) ↦ (x1, x2, x3) over ROTZ3: slices are 2-dimensional
    // and the loop contracts the x3 direction by e^{−2π}
    let pb = pullback_foliation(
        polys(&["x1", "x2", "x3"], 4),
        Arc::new(catalog::rotz3()),
        vec![field("[0, 0, 0, 1]", 4)],
        vec![field("[x2, -x1, -x3, 0]", 4)],
        &[],
        Chart::All,
    )
    .unwrap();
    assert!(verify_morphism(&pb.projection).unwrap().ok);
    let p = make_fpath(pb.foliation.clone(), curve(vec![vec![2.0 * PI], vec![0.0]]), &[1.0, 0.0, 0.0, -2.0], 1e-12).unwrap();
    let cmp = holonomy_commutation(&pb.projection, &p, 0.5, 1e-10).unwrap();
    assert_eq!(cmp.source.shape(), (2, 2));
    assert!(cmp.defect <= 1e-6, "{cmp:?}");
    let mut eig: Vec<f64> = cmp.target.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    assert!((eig[0] - (-2.0 * PI).exp()).abs() < 1e-7 && (eig[1] - 1.0).abs() < 1e-7, "{eig:?}");
}

#[test]
fn inclusion_counterexample_witness() {
    // The constant loop at the origin with coefficient 2π: trivial in ROT2,
    // a contraction in ROTZ3.
    let inc = inclusion();
    let p = make_fpath(inc.source.clone(), CoeffCurve::constant(&[2.0 * PI]), &[0.0, 0.0], 1e-12).unwrap();
    let (s0, s1) = default_slices(&p, 0.5).unwrap();
    let l_m = linearized_holonomy(&p, &s0, &s1, 1e-10).unwrap();
    let amb_m = &s1.frame * l_m * s0.frame.transpose();
    assert!((amb_m - nalgebra::DMatrix::<f64>::identity(2, 2)).amax() <= 1e-7);

    let a = pushforward_apath(&inc, &project_to_apath(&p).unwrap()).unwrap();
    let q = singfol::algebroid::lift_apath(&a).unwrap();
    let (t0, t1) = default_slices(&q, 0.5).unwrap();
    let l_n = &t1.frame * linearized_holonomy(&q, &t0, &t1, 1e-10).unwrap() * t0.frame.transpose();
    let want = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, (-2.0 * PI).exp()]));
    assert!((l_n - want).amax() <= 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fc_family_always_verifies(c in -50i64..50) {
        prop_assert!(verify_morphism(&f_c(c)).unwrap().ok);
    }

    #[test]
    fn scaled_inclusions_fail_unless_unit(c in -6i64..6) {
        let phi = FoliatedMorphism::with_constant_coeffs(
            Arc::new(catalog::rot2()),
            Arc::new(catalog::rotz3()),
            polys(&["x", "y", "0"], 2),
            &[rats(&[c])],
        ).unwrap();
        prop_assert_eq!(verify_morphism(&phi).unwrap().anchor_ok, c == 1);
    }

    #[test]
    fn projected_fiber_vectors(a in -20i64..20, b in -20i64..20, x in -5i64..5, y in -5i64..5, z in -5i64..5) {
        let proj = projection();
        let v = evaluate(&proj.source, &rats(&[a, b]), &rats(&[x, y, z])).unwrap();
        let w = fiber_map(&proj, &v).unwrap();
        prop_assert_eq!(&w.coeffs, &rats(&[a]));
        // anchors commute with df
        let down = anchor(&proj.target, &w).unwrap();
        let up = anchor(&proj.source, &v).unwrap();
        prop_assert_eq!(&down[..], &up[..2]);
    }
}
