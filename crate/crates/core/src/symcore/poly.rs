use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use super::coeff::{Coeff, Rational};
use crate::error::{Error, Result};

/// Exponent vector ordered graded-lexicographically (total degree first,
/// then lexicographic with `x1 > x2 > ...`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, axis: usize) -> Self {
        let mut e = vec![0; nvars];
        e[axis] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn quotient(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial. Terms with zero coefficient are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<C: Coeff = Rational> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(nvars, Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, axis: usize) -> Self {
        Self::monomial(nvars, Monomial::var(nvars, axis), C::one())
    }

    pub fn monomial(nvars: usize, m: Monomial, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, C)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: e.len() });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Leading term under graded-lex order.
    pub fn leading(&self) -> Option<(&Monomial, &C)> {
        self.terms.iter().next_back()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Monomial::one(self.nvars))
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: other.nvars });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
        }
    }

    /// Multiply by a single term `c * x^m`.
    pub fn mul_term(&self, m: &Monomial, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative along `axis`.
    pub fn partial_derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        if axis >= self.nvars {
            return out;
        }
        for (m, c) in &self.terms {
            let e = m.0[axis];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[axis] -= 1;
            out.add_term(dm, c.clone() * C::from_i64(e as i64));
        }
        out
    }

    pub fn eval(&self, x: &[C]) -> Result<C> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: x.len() });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.0) {
                for _ in 0..e {
                    t = t * xi.clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Floating evaluation.
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: x.len() });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                m.0.iter().zip(x).fold(c.to_f64(), |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum())
    }

    /// Substitute `subs[j]` for variable `j`. All substitutes share one variable count.
    pub fn compose(&self, subs: &[Polynomial<C>]) -> Result<Polynomial<C>> {
        if subs.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: subs.len() });
        }
        let target_vars = subs.first().map(|p| p.nvars).unwrap_or(0);
        if let Some(bad) = subs.iter().find(|p| p.nvars != target_vars) {
            return Err(Error::DimensionMismatch { expected: target_vars, got: bad.nvars });
        }
        // Cache powers of each substitute.
        let mut powers: Vec<Vec<Polynomial<C>>> = subs.iter().map(|s| vec![Polynomial::one(s.nvars.max(target_vars))]).collect();
        let mut out = Polynomial::zero(target_vars);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target_vars, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[j].len() <= e as usize {
                    let next = &powers[j][powers[j].len() - 1] * &subs[j];
                    powers[j].push(next);
                }
                term = &term * &powers[j][e as usize];
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Reinterpret in a space with more variables (new variables appended).
    pub fn embed(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        Polynomial {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut e = m.0.clone();
                    e.resize(nvars, 0);
                    (Monomial(e), c.clone())
                })
                .collect(),
        }
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Render with the given variable names.
    pub fn render(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            let is_unit = abs == C::one();
            if !is_unit || m.degree() == 0 {
                factors.push(abs.render());
            }
            for (j, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[j].to_string()),
                    _ => factors.push(format!("{}^{}", names[j], e)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

/// Default variable names: `x, y, z` for up to three variables, `x1..xn` otherwise.
pub fn default_var_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = default_var_names(self.nvars);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.render(&refs))
    }
}

impl<C: Coeff> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl<C: Coeff> std::ops::Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        self.try_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl<C: Coeff> std::ops::Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        self.try_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl<C: Coeff> std::ops::Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        self.try_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl<C: Coeff> std::ops::Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&-C::one())
    }
}

/// Equality of normalized term maps.
pub fn poly_equal<C: Coeff>(p: &Polynomial<C>, q: &Polynomial<C>) -> bool {
    p == q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::coeff::rat;
    use crate::symcore::parse::parse_poly;

    fn p(s: &str) -> Polynomial {
        parse_poly(s, 2).unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = p("x^2 + y");
        assert_eq!(q.eval(&[rat(0), rat(0)]).unwrap(), rat(0));
        assert_eq!(q.eval(&[rat(1), rat(2)]).unwrap(), rat(3));
        assert_eq!(p("x*y - 1").eval(&[rat(2), rat(3)]).unwrap(), rat(5));
        assert!(q.eval(&[rat(1)]).is_err());
        assert_eq!(q.eval_f64(&[1.5, 0.25]).unwrap(), 2.5);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("x^2*y").partial_derivative(0), p("2*x*y"));
        assert!(p("x^2").partial_derivative(1).is_zero());
        assert_eq!(p("x + y").partial_derivative(0), p("1"));
    }

    #[test]
    fn equality_examples() {
        assert!(poly_equal(&p("x + y"), &p("y + x")));
        assert!(poly_equal(&p("x"), &p("x + 0*y")));
        assert!(!poly_equal(&p("x"), &p("x^2")));
    }

    #[test]
    fn grlex_leading_term() {
        let q = p("x + y^2 + x*y");
        // degree 2 ties broken lexicographically: x*y > y^2
        assert_eq!(q.leading().unwrap().0, &Monomial(vec![1, 1]));
    }

    #[test]
    fn render_round_trip() {
        for s in ["x^2*y - 3/2*x + 1", "-x", "0", "2*y^3 - x*y + 7/3"] {
            let q = p(s);
            assert_eq!(p(&q.to_string()), q, "{s}");
        }
    }

    #[test]
    fn composition() {
        let q = p("x*y + x");
        let subs = [p("x + 1"), p("x - y")];
        assert_eq!(q.compose(&subs).unwrap(), p("(x + 1)*(x - y) + x + 1"));
    }
}
