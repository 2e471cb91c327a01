//! Small foliations used throughout the tests, benches and documentation.

use crate::foliation::{Chart, FoliationPresentation};
use crate::symcore::{parse_poly, PolyVectorField, Polynomial};

fn gens(src: &[&str]) -> Vec<PolyVectorField> {
    src.iter().map(|s| PolyVectorField::parse(s).expect("catalog field")).collect()
}

fn polys(dim: usize, src: &[&str]) -> Vec<Polynomial> {
    src.iter().map(|s| parse_poly(s, dim).expect("catalog polynomial")).collect()
}

fn build(g: &[&str], brackets: &[(usize, usize, &[&str])]) -> FoliationPresentation {
    let fields = gens(g);
    let dim = fields[0].dim();
    let b: Vec<(usize, usize, Vec<Polynomial>)> = brackets.iter().map(|(i, j, c)| (*i, *j, polys(dim, c))).collect();
    FoliationPresentation::with_brackets(Chart::All, fields, &b).expect("catalog presentation")
}

/// `⟨∂x, ∂y⟩` on the plane.
pub fn full2() -> FoliationPresentation {
    build(&["[1, 0]", "[0, 1]"], &[])
}

/// `⟨y∂x − x∂y⟩`: circles around the origin plus the fixed point.
pub fn rot2() -> FoliationPresentation {
    build(&["[y, -x]"], &[])
}

/// `⟨∂x, x∂x, x²∂x⟩` on the line.
pub fn sl2_1d() -> FoliationPresentation {
    build(&["[1]", "[x]", "[x^2]"], &[(0, 1, &["1", "0", "0"]), (0, 2, &["0", "2", "0"]), (1, 2, &["0", "0", "1"])])
}

/// `⟨y∂x − x∂y − z∂z⟩` on space.
pub fn rotz3() -> FoliationPresentation {
    build(&["[y, -x, -z]"], &[])
}

/// `⟨x∂x⟩` on the line.
pub fn scale1() -> FoliationPresentation {
    build(&["[x]"], &[])
}

/// `⟨∂x, ∂y, ∂z⟩` on space.
pub fn full3() -> FoliationPresentation {
    build(&["[1, 0, 0]", "[0, 1, 0]", "[0, 0, 1]"], &[])
}

/// `⟨x∂x − y∂y, y∂x, x∂y⟩`: the linear action of sl(2) on the plane.
pub fn linear_sl2() -> FoliationPresentation {
    build(&["[x, -y]", "[y, 0]", "[0, x]"], &[(0, 1, &["0", "-2", "0"]), (0, 2, &["0", "0", "2"]), (1, 2, &["-1", "0", "0"])])
}

/// `⟨y∂x − x∂y, ∂z⟩`: the rotation foliation pulled back along `(x,y,z) ↦ (x,y)`.
pub fn rot2_cylinder() -> FoliationPresentation {
    build(&["[y, -x, 0]", "[0, 0, 1]"], &[])
}

/// `⟨∂x, x∂y⟩` with a zero certificate. Not involutive: `[∂x, x∂y] = ∂y`.
pub fn not_involutive() -> FoliationPresentation {
    build(&["[1, 0]", "[0, x]"], &[])
}

/// Every involutive catalog entry with its name.
pub fn named() -> Vec<(&'static str, FoliationPresentation)> {
    vec![
        ("FULL2", full2()),
        ("ROT2", rot2()),
        ("SL2_1D", sl2_1d()),
        ("ROTZ3", rotz3()),
        ("SCALE1", scale1()),
        ("FULL3", full3()),
        ("LINEAR_SL2", linear_sl2()),
        ("ROT2_CYLINDER", rot2_cylinder()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::verify_involutivity;

    #[test]
    fn catalog_certificates_verify() {
        for (name, f) in named() {
            assert!(verify_involutivity(&f).ok, "{name}");
        }
        let bad = verify_involutivity(&not_involutive());
        assert!(!bad.ok);
        assert_eq!(bad.failures, vec![(0, 1)]);
    }
}
