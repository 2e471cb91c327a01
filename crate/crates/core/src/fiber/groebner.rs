//! Buchberger's algorithm for submodules of a free module `ℚ[x]^r`.
//!
//! Terms are ordered position-over-term: a term in an earlier component is
//! larger than any term in a later one, and terms within a component compare
//! graded-lexicographically. Every basis element remembers how it is built
//! from the input generators, so membership proofs come with cofactors.

use std::collections::VecDeque;

use num_traits::One;

use crate::symcore::{Monomial, Polynomial, Rational};

/// Element of the free module: one polynomial per component.
pub type ModVec = Vec<Polynomial>;

fn leading(v: &ModVec) -> Option<(usize, Monomial, Rational)> {
    v.iter().enumerate().find_map(|(p, poly)| poly.leading().map(|(m, c)| (p, m.clone(), c.clone())))
}

fn sub_scaled(v: &mut ModVec, g: &ModVec, m: &Monomial, c: &Rational) {
    for (vp, gp) in v.iter_mut().zip(g) {
        if !gp.is_zero() {
            *vp = &*vp - &gp.mul_term(m, c);
        }
    }
}

fn add_scaled(v: &mut [Polynomial], g: &[Polynomial], m: &Monomial, c: &Rational) {
    for (vp, gp) in v.iter_mut().zip(g) {
        if !gp.is_zero() {
            *vp = &*vp + &gp.mul_term(m, c);
        }
    }
}

fn is_zero(v: &ModVec) -> bool {
    v.iter().all(Polynomial::is_zero)
}

#[derive(Clone, Debug)]
struct Elem {
    v: ModVec,
    lead: (usize, Monomial, Rational),
    // v = Σ_a cof[a] · gens[a]
    cof: Vec<Polynomial>,
}

/// A Gröbner basis of the submodule generated by `gens`.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    nvars: usize,
    rank: usize,
    ngens: usize,
    elems: Vec<Elem>,
}

impl GroebnerBasis {
    /// `rank` is the number of components, `nvars` the number of ring variables.
    pub fn new(gens: &[ModVec], rank: usize, nvars: usize) -> Self {
        let ngens = gens.len();
        let mut gb = GroebnerBasis { nvars, rank, ngens, elems: Vec::new() };
        let mut pending: Vec<(ModVec, Vec<Polynomial>)> = gens
            .iter()
            .enumerate()
            .map(|(a, g)| {
                let mut cof = vec![Polynomial::zero(nvars); ngens];
                cof[a] = Polynomial::one(nvars);
                (g.clone(), cof)
            })
            .collect();
        let mut pairs: VecDeque<(usize, usize)> = VecDeque::new();
        // Seed the basis with the (reduced) generators.
        for (v, cof) in pending.drain(..) {
            gb.insert(v, cof, &mut pairs);
        }
        while let Some((i, j)) = pairs.pop_front() {
            let (v, cof) = gb.spoly(i, j);
            gb.insert(v, cof, &mut pairs);
        }
        gb
    }

    fn insert(&mut self, v: ModVec, cof: Vec<Polynomial>, pairs: &mut VecDeque<(usize, usize)>) {
        let (r, q) = self.reduce_full(&v);
        if is_zero(&r) {
            return;
        }
        // cofactors of the remainder: r = v - Σ_b q_b e_b
        let mut rc = cof;
        for (b, qb) in q.iter().enumerate() {
            if qb.is_zero() {
                continue;
            }
            for (a, cb) in self.elems[b].cof.iter().enumerate() {
                if !cb.is_zero() {
                    rc[a] = &rc[a] - &(qb * cb);
                }
            }
        }
        let lead = leading(&r).expect("nonzero remainder");
        let inv = Rational::one() / lead.2.clone();
        let r: ModVec = r.iter().map(|p| p.scale(&inv)).collect();
        let rc: Vec<Polynomial> = rc.iter().map(|p| p.scale(&inv)).collect();
        let lead = (lead.0, lead.1, Rational::one());
        let idx = self.elems.len();
        for (k, e) in self.elems.iter().enumerate() {
            if e.lead.0 == lead.0 {
                pairs.push_back((k, idx));
            }
        }
        self.elems.push(Elem { v: r, lead, cof: rc });
    }

    fn spoly(&self, i: usize, j: usize) -> (ModVec, Vec<Polynomial>) {
        let (ei, ej) = (&self.elems[i], &self.elems[j]);
        let l = ei.lead.1.lcm(&ej.lead.1);
        let mi = ei.lead.1.quotient(&l);
        let mj = ej.lead.1.quotient(&l);
        let one = Rational::one();
        let mut v = vec![Polynomial::zero(self.nvars); self.rank];
        add_scaled(&mut v, &ei.v, &mi, &one);
        sub_scaled(&mut v, &ej.v, &mj, &one);
        let mut cof = vec![Polynomial::zero(self.nvars); self.ngens];
        add_scaled(&mut cof, &ei.cof, &mi, &one);
        for (c, e) in cof.iter_mut().zip(&ej.cof) {
            if !e.is_zero() {
                *c = &*c - &e.mul_term(&mj, &one);
            }
        }
        (v, cof)
    }

    /// Full reduction: returns the remainder and the quotient for each basis element.
    fn reduce_full(&self, v: &ModVec) -> (ModVec, Vec<Polynomial>) {
        let mut p = v.clone();
        let mut rem = vec![Polynomial::zero(self.nvars); self.rank];
        let mut quot = vec![Polynomial::zero(self.nvars); self.elems.len()];
        while let Some((pos, m, c)) = leading(&p) {
            let hit = self.elems.iter().position(|e| e.lead.0 == pos && e.lead.1.divides(&m));
            match hit {
                Some(b) => {
                    let e = &self.elems[b];
                    let factor_m = e.lead.1.quotient(&m);
                    let factor_c = c / e.lead.2.clone();
                    sub_scaled(&mut p, &e.v, &factor_m, &factor_c);
                    quot[b].add_term(factor_m, factor_c);
                }
                None => {
                    p[pos].add_term(m.clone(), -c.clone());
                    rem[pos].add_term(m, c);
                }
            }
        }
        (rem, quot)
    }

    /// Unique normal form of `v` modulo the submodule.
    pub fn normal_form(&self, v: &ModVec) -> ModVec {
        self.reduce_full(v).0
    }

    pub fn contains(&self, v: &ModVec) -> bool {
        is_zero(&self.normal_form(v))
    }

    /// Polynomial cofactors `f_a` with `v = Σ_a f_a · gens[a]`, if `v` is a member.
    pub fn express(&self, v: &ModVec) -> Option<Vec<Polynomial>> {
        let (r, q) = self.reduce_full(v);
        if !is_zero(&r) {
            return None;
        }
        let mut out = vec![Polynomial::zero(self.nvars); self.ngens];
        for (b, qb) in q.iter().enumerate() {
            if qb.is_zero() {
                continue;
            }
            for (a, cb) in self.elems[b].cof.iter().enumerate() {
                if !cb.is_zero() {
                    out[a] = &out[a] + &(qb * cb);
                }
            }
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Largest total degree among basis elements.
    pub fn max_degree(&self) -> u32 {
        self.elems.iter().flat_map(|e| e.v.iter().filter_map(Polynomial::degree)).max().unwrap_or(0)
    }

    pub fn is_unit_module(&self) -> bool {
        self.elems.iter().any(|e| e.lead.1.degree() == 0) && self.rank == 1
    }
}

/// Convenience: is `v` in the module generated by `gens`?
pub fn contains(gens: &[ModVec], v: &ModVec, nvars: usize) -> bool {
    GroebnerBasis::new(gens, v.len(), nvars).contains(v)
}
