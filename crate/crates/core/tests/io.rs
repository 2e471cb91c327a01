use std::sync::Arc;

use proptest::prelude::*;
use serde_json::json;
use singfol::catalog;
use singfol::flowengine::{CoeffCurve, UPoly};
use singfol::foliation::{Chart, FoliationPresentation};
use singfol::fpath::Variation;
use singfol::io::{
    coeffs_from_json, coeffs_to_json, foliation_from_json, foliation_to_json, morphism_to_json, variation_to_json, Loader,
    PathSpec,
};
use singfol::morphism::FoliatedMorphism;
use singfol::symcore::{parse_poly, rat, PolyVectorField};

fn upoly() -> impl Strategy<Value = UPoly> {
    prop::collection::vec(-1e3f64..1e3, 1..5).prop_map(|c| UPoly(c).trimmed())
}

/// Sorted interior breakpoints and `q` coefficient rows per piece.
fn coeff_curve(q: usize) -> impl Strategy<Value = CoeffCurve> {
    prop::collection::btree_set(1u32..999, 0..4).prop_flat_map(move |inner| {
        let mut bps = vec![0.0];
        bps.extend(inner.iter().map(|&k| k as f64 / 1000.0));
        bps.push(1.0);
        let pieces = bps.len() - 1;
        prop::collection::vec(prop::collection::vec(upoly(), q), pieces)
            .prop_map(move |rows| CoeffCurve::new(bps.clone(), rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficient_curves_round_trip(c in (1usize..4).prop_flat_map(coeff_curve)) {
        let text = serde_json::to_string(&coeffs_to_json(&c)).unwrap();
        let back = coeffs_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn linear_foliations_round_trip(a in -9i64..9, b in -9i64..9, c in -9i64..9, d in -9i64..9) {
        let g = PolyVectorField::parse(&format!("[{a}*x + {b}*y, {c}*x + {d}*y]")).unwrap();
        let f = single(vec![g]).unwrap();
        let back = foliation_from_json(&foliation_to_json(&f)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn paths_round_trip(c in coeff_curve(1), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let spec = PathSpec { foliation: Arc::new(catalog::rot2()), coeffs: c, start: vec![x, y] };
        let text = serde_json::to_string_pretty(&spec.to_json()).unwrap();
        let back = Loader::default().path(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn variations_round_trip(w in upoly(), c0 in coeff_curve(2), c1 in coeff_curve(2)) {
        let v = Variation::new(
            Arc::new(catalog::full2()),
            vec![(UPoly::constant(1.0), c0), (w, c1)],
            vec![0.25, -0.5],
            1e-10,
        )
        .unwrap();
        let back = Loader::default().variation(&variation_to_json(&v), 1e-10).unwrap();
        prop_assert_eq!(&back.terms, &v.terms);
        prop_assert_eq!(&back.start, &v.start);
        prop_assert_eq!(&*back.foliation, &*v.foliation);
    }

    #[test]
    fn morphisms_round_trip(k in -20i64..20, m in -5i64..5) {
        let map = vec![parse_poly(&format!("{m}*x^2"), 1).unwrap(), parse_poly("0", 1).unwrap()];
        let src = Arc::new(single(vec![PolyVectorField::parse("[1]").unwrap()]).unwrap());
        let phi = FoliatedMorphism::with_constant_coeffs(src, Arc::new(catalog::rot2()), map, &[vec![rat(k)]]).unwrap();
        let back = Loader::default().morphism(&morphism_to_json(&phi)).unwrap();
        prop_assert_eq!(&back.map, &phi.map);
        prop_assert_eq!(&back.coeffs, &phi.coeffs);
        prop_assert_eq!(&*back.source, &*phi.source);
        prop_assert_eq!(&*back.target, &*phi.target);
    }
}

#[test]
fn files_and_catalog_names_resolve_alike() {
    let dir = tempdir();
    std::fs::write(dir.join("rot.json"), serde_json::to_string(&foliation_to_json(&catalog::rot2())).unwrap()).unwrap();
    let loader = Loader::new(&dir);
    let from_file = loader.foliation(&json!("rot.json")).unwrap();
    let from_name = loader.foliation(&json!("ROT2")).unwrap();
    assert_eq!(from_file, from_name);

    // a path file without a foliation takes the one supplied by the caller
    let bare = json!({ "coeffs": { "breakpoints": [0, 1], "pieces": [["1"]] }, "start": [1, 0] });
    assert!(loader.path(&bare).is_err());
    assert_eq!(loader.path_over(&bare, Some(&from_name)).unwrap().foliation, from_name);
    let clash = json!({ "foliation": "FULL2", "coeffs": { "breakpoints": [0, 1], "pieces": [["1", "0"]] }, "start": [1, 0] });
    assert!(loader.path_over(&clash, Some(&from_name)).is_err());
    std::fs::remove_dir_all(dir).unwrap();
}

fn single(gens: Vec<PolyVectorField>) -> singfol::Result<FoliationPresentation> {
    FoliationPresentation::with_brackets(Chart::All, gens, &[])
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("singfol-io-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
