use crate::error::{Error, Result};
use crate::symcore::parse::parse_univariate_f64;
use crate::symcore::{Monomial, Polynomial};

/// Dense univariate polynomial with `f64` coefficients in ascending order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct UPoly(pub Vec<f64>);

impl UPoly {
    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        UPoly(vec![c]).trimmed()
    }

    /// `a + b u`
    pub fn linear(a: f64, b: f64) -> Self {
        UPoly(vec![a, b]).trimmed()
    }

    pub fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&0.0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn deriv(&self) -> Self {
        UPoly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn antideriv(&self) -> Self {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        UPoly(out).trimmed()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        UPoly((0..n).map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0)).collect()).trimmed()
    }

    pub fn scale(&self, s: f64) -> Self {
        UPoly(self.0.iter().map(|c| c * s).collect()).trimmed()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return UPoly::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly(out).trimmed()
    }

    /// `self(inner(u))`
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = UPoly::zero();
        for &c in self.0.iter().rev() {
            acc = acc.mul(inner).add(&UPoly::constant(c));
        }
        acc
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn to_polynomial(&self) -> Polynomial<f64> {
        let mut p = Polynomial::zero(1);
        for (k, &c) in self.0.iter().enumerate() {
            p.add_term(Monomial(vec![k as u32]), c);
        }
        p
    }

    pub fn from_polynomial(p: &Polynomial<f64>) -> Result<Self> {
        if p.nvars() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: p.nvars() });
        }
        let deg = p.degree().unwrap_or(0) as usize;
        let mut c = vec![0.0; deg + 1];
        for (m, v) in p.terms() {
            c[m.0[0] as usize] = *v;
        }
        Ok(UPoly(c).trimmed())
    }

    pub fn render(&self, var: &str) -> String {
        self.to_polynomial().render(&[var])
    }

    pub fn parse(src: &str, var: &str) -> Result<Self> {
        Self::from_polynomial(&parse_univariate_f64(src, var)?)
    }
}

/// Piecewise-polynomial coefficient curves `c^1(t)..c^q(t)` on `[0, 1]`.
///
/// Each piece is stored as a polynomial in the piece-local parameter
/// `u = (t - t_a) / (t_b - t_a)`, which keeps repeated reparameterization
/// well conditioned.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffCurve {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<UPoly>>,
}

impl CoeffCurve {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<UPoly>>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() != breakpoints.len() - 1 {
            return Err(Error::Invalid(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                pieces.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Invalid("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        let q = pieces[0].len();
        if pieces.iter().any(|p| p.len() != q) {
            return Err(Error::Invalid("every piece needs one polynomial per generator".into()));
        }
        if q == 0 {
            return Err(Error::Invalid("at least one generator coefficient is required".into()));
        }
        Ok(CoeffCurve { breakpoints, pieces })
    }

    /// Pieces given as polynomials in absolute time `t`.
    pub fn from_absolute(breakpoints: Vec<f64>, pieces: &[Vec<Polynomial<f64>>]) -> Result<Self> {
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::Invalid("piece count does not match breakpoints".into()));
        }
        let local = pieces
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let (a, b) = (breakpoints[k], breakpoints[k + 1]);
                let t_of_u = UPoly::linear(a, b - a);
                row.iter().map(|p| Ok(UPoly::from_polynomial(p)?.compose(&t_of_u))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(breakpoints, local)
    }

    pub fn constant(c: &[f64]) -> Self {
        CoeffCurve { breakpoints: vec![0.0, 1.0], pieces: vec![c.iter().map(|&v| UPoly::constant(v)).collect()] }
    }

    pub fn zero(q: usize) -> Self {
        Self::constant(&vec![0.0; q])
    }

    pub fn q(&self) -> usize {
        self.pieces[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<UPoly>] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn interval(&self, piece: usize) -> (f64, f64) {
        (self.breakpoints[piece], self.breakpoints[piece + 1])
    }

    pub fn piece_at(&self, t: f64) -> usize {
        let k = self.breakpoints[1..].partition_point(|&b| b <= t);
        k.min(self.pieces.len() - 1)
    }

    /// Values on a given piece (valid slightly outside it, by polynomial extension).
    #[inline]
    pub fn eval_piece_into(&self, piece: usize, t: f64, out: &mut [f64]) {
        let (a, b) = self.interval(piece);
        let u = (t - a) / (b - a);
        for (o, p) in out.iter_mut().zip(&self.pieces[piece]) {
            *o = p.eval(u);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.q()];
        self.eval_piece_into(self.piece_at(t), t, &mut out);
        out
    }

    /// Time derivative, piecewise.
    pub fn derivative(&self) -> CoeffCurve {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let (a, b) = self.interval(k);
                row.iter().map(|p| p.deriv().scale(1.0 / (b - a))).collect()
            })
            .collect();
        CoeffCurve { breakpoints: self.breakpoints.clone(), pieces }
    }

    /// `∫_0^1 c^i(t) dt` for each generator.
    pub fn integral(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.q()];
        for (k, row) in self.pieces.iter().enumerate() {
            let (a, b) = self.interval(k);
            for (o, p) in out.iter_mut().zip(row) {
                *o += (b - a) * p.antideriv().eval(1.0);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().flatten().all(UPoly::is_zero)
    }

    /// True when every generator coefficient is a single constant on `[0, 1]`.
    pub fn constant_value(&self) -> Option<Vec<f64>> {
        let first: Vec<f64> = self.pieces[0].iter().map(|p| p.0.first().copied().unwrap_or(0.0)).collect();
        let all_const = self.pieces.iter().all(|row| {
            row.iter().zip(&first).all(|(p, &c)| p.degree() == 0 && p.0.first().copied().unwrap_or(0.0) == c)
        });
        all_const.then_some(first)
    }

    /// Constant value on each piece, when every piece is constant.
    pub fn piecewise_constant(&self) -> Option<Vec<Vec<f64>>> {
        self.pieces
            .iter()
            .map(|row| row.iter().map(|p| (p.degree() == 0).then(|| p.0.first().copied().unwrap_or(0.0))).collect())
            .collect()
    }

    /// Largest jump of any coefficient across an interior breakpoint.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.pieces.len().saturating_sub(1) {
            for (l, r) in self.pieces[k].iter().zip(&self.pieces[k + 1]) {
                worst = worst.max((l.eval(1.0) - r.eval(0.0)).abs());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> CoeffCurve {
        CoeffCurve {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|row| row.iter().map(|p| p.scale(s)).collect()).collect(),
        }
    }

    /// `X̄(t) = -X(1 - t)`.
    pub fn reversed(&self) -> CoeffCurve {
        let breakpoints: Vec<f64> = self.breakpoints.iter().rev().map(|b| 1.0 - b).collect();
        let flip = UPoly::linear(1.0, -1.0);
        let pieces = self.pieces.iter().rev().map(|row| row.iter().map(|p| p.compose(&flip).scale(-1.0)).collect()).collect();
        CoeffCurve { breakpoints: fix_ends(breakpoints), pieces }
    }

    /// Same curve on a finer set of breakpoints (must contain the current ones).
    pub fn refined(&self, breakpoints: &[f64]) -> CoeffCurve {
        let mut pieces = Vec::with_capacity(breakpoints.len() - 1);
        for w in breakpoints.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let k = self.piece_at(mid);
            let (a, b) = self.interval(k);
            let u0 = (w[0] - a) / (b - a);
            let u1 = (w[1] - a) / (b - a);
            let sub = UPoly::linear(u0, u1 - u0);
            pieces.push(self.pieces[k].iter().map(|p| p.compose(&sub)).collect());
        }
        CoeffCurve { breakpoints: breakpoints.to_vec(), pieces }
    }

    /// `Σ_m w_m · curve_m` on the union of breakpoints.
    pub fn linear_combination(weights: &[f64], curves: &[&CoeffCurve]) -> Result<CoeffCurve> {
        let q = curves.first().map(|c| c.q()).ok_or_else(|| Error::Invalid("empty combination".into()))?;
        if curves.iter().any(|c| c.q() != q) {
            return Err(Error::Invalid("curves have different generator counts".into()));
        }
        let bps = union_breakpoints(curves.iter().map(|c| c.breakpoints()));
        let refined: Vec<CoeffCurve> = curves.iter().map(|c| c.refined(&bps)).collect();
        let pieces = (0..bps.len() - 1)
            .map(|k| {
                (0..q)
                    .map(|i| {
                        refined.iter().zip(weights).fold(UPoly::zero(), |acc, (c, &w)| acc.add(&c.pieces[k][i].scale(w)))
                    })
                    .collect()
            })
            .collect();
        Ok(CoeffCurve { breakpoints: bps, pieces })
    }

    /// Embed into a presentation with more generators: coefficient `i` moves to `map[i]`.
    pub fn reindexed(&self, q_new: usize, map: &[usize]) -> CoeffCurve {
        let pieces = self
            .pieces
            .iter()
            .map(|row| {
                let mut out = vec![UPoly::zero(); q_new];
                for (i, p) in row.iter().enumerate() {
                    out[map[i]] = p.clone();
                }
                out
            })
            .collect();
        CoeffCurve { breakpoints: self.breakpoints.clone(), pieces }
    }

    pub fn max_abs_difference(&self, other: &CoeffCurve, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..=samples {
            let t = j as f64 / samples as f64;
            let a = self.eval(t);
            let b = other.eval(t);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }
}

fn fix_ends(mut b: Vec<f64>) -> Vec<f64> {
    if let Some(f) = b.first_mut() {
        *f = 0.0;
    }
    if let Some(l) = b.last_mut() {
        *l = 1.0;
    }
    b
}

/// Sorted union of breakpoint lists, merging values closer than 1e-13.
pub fn union_breakpoints<'a>(lists: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut all: Vec<f64> = lists.flat_map(|l| l.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for b in all {
        if out.last().is_none_or(|&l| b - l > 1e-13) {
            out.push(b);
        }
    }
    fix_ends(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_curve() -> CoeffCurve {
        let p = |s: &str| crate::symcore::parse::parse_univariate_f64(s, "t").unwrap();
        CoeffCurve::from_absolute(vec![0.0, 0.25, 1.0], &[vec![p("2*t"), p("1")], vec![p("0.5 + 0*t"), p("4*t^2")]]).unwrap()
    }

    #[test]
    fn absolute_and_local_agree() {
        let c = abs_curve();
        assert!((c.eval(0.1)[0] - 0.2).abs() < 1e-15);
        assert!((c.eval(0.5)[1] - 1.0).abs() < 1e-15);
        assert_eq!(c.eval(1.0), vec![0.5, 4.0]);
        let d = c.derivative();
        assert!((d.eval(0.5)[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn integral_and_reverse() {
        let c = abs_curve();
        let i = c.integral();
        assert!((i[0] - (0.0625 + 0.375)).abs() < 1e-15);
        let r = c.reversed();
        for &t in &[0.0, 0.3, 0.8, 1.0] {
            let a = r.eval(t);
            let b = c.eval(1.0 - t);
            assert!((a[1] + b[1]).abs() < 1e-14);
        }
        assert!(r.reversed().max_abs_difference(&c, 50) < 1e-14);
    }

    #[test]
    fn combination_refines() {
        let a = abs_curve();
        let b = CoeffCurve::constant(&[1.0, 1.0]);
        let m = CoeffCurve::linear_combination(&[0.5, 0.5], &[&a, &b]).unwrap();
        assert_eq!(m.breakpoints(), &[0.0, 0.25, 1.0]);
        assert!((m.eval(0.6)[1] - 0.5 * (4.0 * 0.36 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn render_round_trip_is_exact() {
        let p = UPoly(vec![0.1, -2.0 / 3.0, 0.0, 1e-17, std::f64::consts::PI]);
        let back = UPoly::parse(&p.render("u"), "u").unwrap();
        assert_eq!(back, p);
    }
}
