//! Deterministic point sets: Halton sequences and Chebyshev grids.

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = b as u64;
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// The `i`-th Halton point in `[0, 1)^dim` (indices start at 1 to skip the origin).
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sequences are tabulated up to dimension {}", PRIMES.len());
    PRIMES[..dim].iter().map(|&p| radical_inverse(i + 1, p)).collect()
}

/// `n` quasi-random points in the closed ball of radius `radius` around `center`.
pub fn ball_points(center: &[f64], radius: f64, n: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while out.len() < n {
        let h = halton(i, d);
        i += 1;
        let v: Vec<f64> = h.iter().map(|x| 2.0 * x - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(center.iter().zip(&v).map(|(c, x)| c + radius * x).collect());
        }
    }
    out
}

/// Chebyshev points of the first kind on `[-1, 1]`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()).collect()
}

/// Tensor grid of `n^dim` Chebyshev points scaled by `scale` around `center`.
pub fn chebyshev_grid(center: &[f64], scale: f64, n: usize) -> Vec<Vec<f64>> {
    let nodes = chebyshev_nodes(n);
    let d = center.len();
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|axis| {
                    let k = idx % n;
                    idx /= n;
                    center[axis] + scale * nodes[k]
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        let xs: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(xs, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn ball_points_stay_inside() {
        let pts = ball_points(&[1.0, -2.0], 0.05, 60);
        assert_eq!(pts.len(), 60);
        assert!(pts.iter().all(|p| crate::linalg::dist(p, &[1.0, -2.0]) <= 0.05 + 1e-15));
    }

    #[test]
    fn chebyshev_grid_size() {
        assert_eq!(chebyshev_grid(&[0.0, 0.0, 0.0], 0.1, 4).len(), 64);
        let n = chebyshev_nodes(3);
        assert!(n[1].abs() < 1e-15 && (n[0] + n[2]).abs() < 1e-15);
    }
}
