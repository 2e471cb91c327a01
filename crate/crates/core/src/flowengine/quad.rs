//! Composite Gauss–Legendre quadrature on `[a, b]`.

const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Nodes and weights of the 8-point rule on panels of `[a, b]` no longer
/// than `max_panel`, split at every breakpoint strictly inside the interval.
pub fn gauss_legendre(a: f64, b: f64, breaks: &[f64], max_panel: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&t| t > a + 1e-14 && t < b - 1e-14));
    cuts.push(b);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let n = (len / max_panel).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for p in 0..n {
            let mid = w[0] + (p as f64 + 0.5) * h;
            for (x, wt) in NODES.iter().zip(WEIGHTS) {
                out.push((mid - 0.5 * h * x, 0.5 * h * wt));
                out.push((mid + 0.5 * h * x, 0.5 * h * wt));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = gauss_legendre(0.0, 0.7, &[0.3], 1.0 / 16.0);
        let val: f64 = rule.iter().map(|(t, w)| w * t.powi(15)).sum();
        assert!((val - 0.7f64.powi(16) / 16.0).abs() < 1e-15);
        let smooth: f64 = gauss_legendre(0.0, 1.0, &[], 0.25).iter().map(|(t, w)| w * t.exp()).sum();
        assert!((smooth - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
