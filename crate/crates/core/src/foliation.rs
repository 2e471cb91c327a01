//! Generator presentations of singular foliations.

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flowengine::flow::{flow_point, ConstantField};
use crate::flowengine::ode::OdeOptions;
use crate::linalg;
use crate::symcore::{CompiledFamily, PolyVectorField, Polynomial, Rational};

/// Relative singular-value cutoff used for pointwise ranks.
pub const TAU_RANK: f64 = 1e-9;
/// Largest singular values below this count as an exactly vanishing frame.
pub const RANK_FLOOR: f64 = 1e-12;

/// The coordinate domain of a presentation.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart {
    All,
    Box { min: Vec<f64>, max: Vec<f64> },
}

impl Chart {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Chart::All => x.iter().all(|v| v.is_finite()),
            Chart::Box { min, max } => x.iter().zip(min.iter().zip(max)).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi),
        }
    }
}

/// Structure functions `c^k_{ij}` with `[X_i, X_j] = Σ_k c^k_{ij} X_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvolutivityCertificate {
    // coeffs[i][j][k]
    coeffs: Vec<Vec<Vec<Polynomial>>>,
}

impl InvolutivityCertificate {
    pub fn zero(q: usize, dim: usize) -> Self {
        InvolutivityCertificate { coeffs: vec![vec![vec![Polynomial::zero(dim); q]; q]; q] }
    }

    /// Build from a full `q × q × q` array, keeping the strict upper triangle
    /// and filling the rest by antisymmetry.
    pub fn from_array(q: usize, dim: usize, raw: Vec<Vec<Vec<Polynomial>>>) -> Result<Self> {
        if raw.len() != q || raw.iter().any(|r| r.len() != q || r.iter().any(|c| c.len() != q)) {
            return Err(Error::Invalid(format!("structure coefficients must be a {q}×{q}×{q} array")));
        }
        if raw.iter().flatten().flatten().any(|p| p.nvars() != dim) {
            return Err(Error::Invalid("structure coefficient in the wrong number of variables".into()));
        }
        let mut cert = Self::zero(q, dim);
        for i in 0..q {
            for j in i + 1..q {
                cert.set(i, j, raw[i][j].clone());
            }
        }
        Ok(cert)
    }

    /// Set `c_{ij}` (and `c_{ji} = -c_{ij}`), `i ≠ j`.
    pub fn set(&mut self, i: usize, j: usize, c: Vec<Polynomial>) {
        assert_ne!(i, j, "diagonal structure coefficients vanish");
        self.coeffs[j][i] = c.iter().map(|p| -p).collect();
        self.coeffs[i][j] = c;
    }

    pub fn q(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Polynomial {
        &self.coeffs[i][j][k]
    }

    pub fn pair(&self, i: usize, j: usize) -> &[Polynomial] {
        &self.coeffs[i][j]
    }

    pub fn as_array(&self) -> &Vec<Vec<Vec<Polynomial>>> {
        &self.coeffs
    }

    /// The tensor as floats when every entry is constant.
    pub fn constant_tensor(&self) -> Option<StructureConstants> {
        let q = self.q();
        let mut c = vec![0.0; q * q * q];
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let p = &self.coeffs[i][j][k];
                    if !p.is_constant() {
                        return None;
                    }
                    c[(i * q + j) * q + k] = crate::symcore::Coeff::to_f64(&p.constant_term());
                }
            }
        }
        Some(StructureConstants { q, c })
    }
}

/// Constant structure coefficients in a flat array.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub q: usize,
    c: Vec<f64>,
}

impl StructureConstants {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.q + j) * self.q + k]
    }

    /// `M_{lk} = Σ_i a^i c^k_{il}`: matrix of `ad` of `Σ a^i X_i` acting on row vectors.
    pub fn ad_matrix(&self, a: &[f64]) -> DMatrix<f64> {
        let q = self.q;
        DMatrix::from_fn(q, q, |l, k| (0..q).map(|i| a[i] * self.get(i, l, k)).sum())
    }
}

/// A singular foliation given by polynomial generators and a certificate.
#[derive(Clone, Debug)]
pub struct FoliationPresentation {
    dim: usize,
    chart: Chart,
    generators: Vec<PolyVectorField>,
    certificate: InvolutivityCertificate,
    compiled: CompiledFamily,
}

impl PartialEq for FoliationPresentation {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.chart == other.chart
            && self.generators == other.generators
            && self.certificate == other.certificate
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolutivityReport {
    pub ok: bool,
    /// Zero-based generator pairs `(i, j)`, `i < j`, whose bracket identity fails.
    pub failures: Vec<(usize, usize)>,
}

/// Pointwise span of the generators.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFiber {
    pub base: Vec<f64>,
    pub spanning_vectors: Vec<Vec<f64>>,
    pub rank: usize,
}

impl DistributionFiber {
    /// `d × q` matrix of generator values.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.base.len();
        DMatrix::from_fn(d, self.spanning_vectors.len(), |r, c| self.spanning_vectors[c][r])
    }

    /// Orthonormal basis of the distribution as columns.
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        linalg::orthonormal_span(&self.matrix(), TAU_RANK, RANK_FLOOR)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafSample {
    pub points: Vec<Vec<f64>>,
    pub est_dim: usize,
    /// Set when a flow left the chart and the trace stopped early.
    pub truncated: Option<String>,
}

impl FoliationPresentation {
    pub fn new(
        dim: usize,
        chart: Chart,
        generators: Vec<PolyVectorField>,
        certificate: InvolutivityCertificate,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Invalid("a presentation needs at least one generator".into()));
        }
        if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
        }
        if certificate.q() != generators.len() {
            return Err(Error::Invalid(format!(
                "certificate is for {} generators, presentation has {}",
                certificate.q(),
                generators.len()
            )));
        }
        if let Chart::Box { min, max } = &chart {
            if min.len() != dim || max.len() != dim || min.iter().zip(max).any(|(a, b)| a >= b) {
                return Err(Error::Invalid("chart box must have dim entries with min < max".into()));
            }
        }
        let compiled = CompiledFamily::new(&generators);
        Ok(FoliationPresentation { dim, chart, generators, certificate, compiled })
    }

    /// Presentation with structure coefficients given for the pairs `i < j` listed;
    /// all other pairs get zero coefficients.
    pub fn with_brackets(
        chart: Chart,
        generators: Vec<PolyVectorField>,
        brackets: &[(usize, usize, Vec<Polynomial>)],
    ) -> Result<Self> {
        let dim = generators.first().map(PolyVectorField::dim).unwrap_or(0);
        let mut cert = InvolutivityCertificate::zero(generators.len(), dim);
        for (i, j, c) in brackets {
            cert.set(*i, *j, c.clone());
        }
        Self::new(dim, chart, generators, cert)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> usize {
        self.generators.len()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn generators(&self) -> &[PolyVectorField] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &PolyVectorField {
        &self.generators[i]
    }

    pub fn certificate(&self) -> &InvolutivityCertificate {
        &self.certificate
    }

    pub fn compiled(&self) -> &CompiledFamily {
        &self.compiled
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !self.chart.contains(x) {
            return Err(Error::OutOfChart { point: x.to_vec() });
        }
        Ok(())
    }

    /// `Σ_i c_i X_i` with constant coefficients, as a symbolic field.
    pub fn combination(&self, c: &[Rational]) -> PolyVectorField {
        let polys: Vec<Polynomial> = c.iter().map(|v| Polynomial::constant(self.dim, v.clone())).collect();
        PolyVectorField::combination(&polys, &self.generators).expect("generators share the chart")
    }

    /// `Σ_i f_i X_i` with polynomial coefficients.
    pub fn poly_combination(&self, f: &[Polynomial]) -> Result<PolyVectorField> {
        if f.len() != self.q() {
            return Err(Error::DimensionMismatch { expected: self.q(), got: f.len() });
        }
        PolyVectorField::combination(f, &self.generators)
    }

    /// Constant structure coefficients, when the certificate has them.
    pub fn structure_constants(&self) -> Option<StructureConstants> {
        self.certificate.constant_tensor()
    }

    /// Generator matrices when every generator is linear (`X_i(x) = A_i x`).
    pub fn linear_matrices(&self) -> Option<Vec<DMatrix<f64>>> {
        self.generators.iter().map(|g| crate::flowengine::linear::LinearField::from_field(g).map(|l| l.to_f64())).collect()
    }

    /// New presentation with extra generators `E_a = Σ_b g_{ab} X_b`; the
    /// certificate for the enlarged list is derived by the Leibniz rule.
    pub fn extend(&self, extras: &[Vec<Polynomial>]) -> Result<Self> {
        let q = self.q();
        let d = self.dim;
        for e in extras {
            if e.len() != q {
                return Err(Error::DimensionMismatch { expected: q, got: e.len() });
            }
        }
        // Every generator of the new list as coefficients over the old list.
        let mut expr: Vec<Vec<Polynomial>> = (0..q)
            .map(|i| (0..q).map(|b| if b == i { Polynomial::one(d) } else { Polynomial::zero(d) }).collect())
            .collect();
        expr.extend(extras.iter().cloned());
        let mut gens = self.generators.clone();
        for e in extras {
            gens.push(self.poly_combination(e)?);
        }
        let qn = gens.len();
        let mut cert = InvolutivityCertificate::zero(qn, d);
        for i in 0..qn {
            for j in i + 1..qn {
                let mut out = vec![Polynomial::zero(d); qn];
                // [Σ_a f_a X_a, Σ_b g_b X_b] = Σ f_a g_b [X_a, X_b] + f_a X_a(g_b) X_b - g_b X_b(f_a) X_a
                for (a, fa) in expr[i].iter().enumerate() {
                    if fa.is_zero() {
                        continue;
                    }
                    for (b, gb) in expr[j].iter().enumerate() {
                        if gb.is_zero() {
                            continue;
                        }
                        let fg = fa * gb;
                        for (k, c) in self.certificate.pair(a, b).iter().enumerate() {
                            if !c.is_zero() {
                                out[k] = &out[k] + &(&fg * c);
                            }
                        }
                        let xa_gb = self.generators[a].apply(gb)?;
                        out[b] = &out[b] + &(fa * &xa_gb);
                        let xb_fa = self.generators[b].apply(fa)?;
                        out[a] = &out[a] - &(gb * &xb_fa);
                    }
                }
                cert.set(i, j, out);
            }
        }
        let f = Self::new(d, self.chart.clone(), gens, cert)?;
        debug_assert!(verify_involutivity(&f).ok || !verify_involutivity(self).ok);
        Ok(f)
    }
}

/// Check `[X_i, X_j] = Σ_k c^k_{ij} X_k` symbolically for all `i < j`.
pub fn verify_involutivity(f: &FoliationPresentation) -> InvolutivityReport {
    let q = f.q();
    let mut failures = Vec::new();
    for i in 0..q {
        for j in i + 1..q {
            let lhs = match f.generators[i].lie_bracket(&f.generators[j]) {
                Ok(b) => b,
                Err(_) => {
                    failures.push((i, j));
                    continue;
                }
            };
            let rhs = f.poly_combination(f.certificate.pair(i, j));
            match rhs {
                Ok(r) if r == lhs => {}
                _ => failures.push((i, j)),
            }
        }
    }
    InvolutivityReport { ok: failures.is_empty(), failures }
}

/// Generator values and their numerical rank at `x`.
pub fn distribution_at(f: &FoliationPresentation, x: &[f64]) -> Result<DistributionFiber> {
    f.check_point(x)?;
    let spanning_vectors: Vec<Vec<f64>> = (0..f.q()).map(|i| f.compiled.field(i).eval(x)).collect();
    let fiber = DistributionFiber { base: x.to_vec(), spanning_vectors, rank: 0 };
    let rank = linalg::numerical_rank(&fiber.matrix(), TAU_RANK, RANK_FLOOR);
    Ok(DistributionFiber { rank, ..fiber })
}

/// Sample a leaf by chaining short flows of random constant combinations.
pub fn trace_leaf(f: &FoliationPresentation, seed: &[f64], budget: usize, h: f64, rng_seed: u64) -> Result<LeafSample> {
    let start = distribution_at(f, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = vec![seed.to_vec()];
    let mut est_dim = start.rank;
    let mut x = seed.to_vec();
    let opts = OdeOptions::with_tol(1e-12).dense(false);
    let mut truncated = None;
    if start.rank == 0 {
        return Ok(LeafSample { points, est_dim, truncated });
    }
    for _ in 0..budget {
        let c: Vec<f64> = (0..f.q()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let field = ConstantField::new(f, c.iter().map(|v| v * h).collect());
        match flow_point(&field, &x, 0.0, 1.0, &opts, f.chart()) {
            Ok(y) => {
                let rank = distribution_at(f, &y)?.rank;
                est_dim = est_dim.max(rank);
                points.push(y.clone());
                x = y;
            }
            Err(e @ Error::ChartEscape { .. }) => {
                truncated = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LeafSample { points, est_dim, truncated })
}

impl InvolutivityCertificate {
    /// Residual `[X_i,X_j](x) - Σ_k c^k_{ij}(x) X_k(x)` at a floating point, max norm.
    pub fn numeric_residual(&self, f: &FoliationPresentation, x: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..f.q() {
            for j in i + 1..f.q() {
                let b = f.generators[i].lie_bracket(&f.generators[j])?.eval_f64(x)?;
                let mut r = b;
                for k in 0..f.q() {
                    let c = self.coeffs[i][j][k].eval_f64(x)?;
                    if c.is_zero() {
                        continue;
                    }
                    let xk = f.compiled.field(k).eval(x);
                    for (rv, xv) in r.iter_mut().zip(&xk) {
                        *rv -= c * xv;
                    }
                }
                worst = worst.max(r.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
        Ok(worst)
    }
}
