use nalgebra::DMatrix;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return id;
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a / 2f64.powi(s);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * inner_u;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `e^{tA}`.
pub fn expm_t(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    expm(&(a * t))
}

/// Exponential and its Fréchet derivative in direction `e`:
/// `L(A, E) = d/dh e^{A + hE}` at `h = 0`, read off the block exponential
/// of `[[A, E], [0, A]]`.
pub fn expm_frechet(a: &DMatrix<f64>, e: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(e);
    big.view_mut((n, n), (n, n)).copy_from(a);
    let x = expm(&big);
    (x.view((0, 0), (n, n)).into_owned(), x.view((0, n), (n, n)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn half_turn() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let r = expm_t(&a, PI);
        assert!((r + DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn scalar_decay() {
        let r = expm_t(&DMatrix::from_element(1, 1, -1.0), 2.0 * PI);
        let exact = (-2.0 * PI).exp();
        assert!((r[(0, 0)] - exact).abs() < 1e-12);
        assert!((exact - 1.86744e-3).abs() < 1e-8);
    }

    #[test]
    fn large_norm_relative_accuracy() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 3.0]);
        let r = expm_t(&a, 4.0);
        let e = 12f64.exp();
        assert!(((r[(0, 0)] - e) / e).abs() < 1e-13);
        assert!(((r[(0, 1)] - 4.0 * e) / (4.0 * e)).abs() < 1e-13);
    }

    #[test]
    fn frechet_matches_difference_quotient() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 1.0, -0.7, 0.2]);
        let e = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 1.0, -0.4]);
        let (_, l) = expm_frechet(&a, &e);
        let h = 1e-6;
        let fd = (expm(&(&a + &e * h)) - expm(&(&a - &e * h))) / (2.0 * h);
        assert!((l - fd).abs().max() < 1e-8);
    }
}
