use nalgebra::{DMatrix, DVector};

use super::coeffs::CoeffCurve;
use super::ode::{integrate, OdeOptions, OdeSolution};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::foliation::{Chart, FoliationPresentation};
use crate::symcore::{CompiledFamily, CompiledField};

/// A time-dependent vector field that is smooth between its breakpoints.
pub trait TimeField: Sync {
    fn dim(&self) -> usize;

    /// Sorted breakpoints, starting at 0 and ending at 1.
    fn breakpoints(&self) -> &[f64];

    /// Field value at `(t, x)` using the formula of the given piece.
    fn eval(&self, piece: usize, t: f64, x: &[f64], out: &mut [f64]);

    /// Row-major spatial Jacobian at `(t, x)`.
    fn jac(&self, piece: usize, t: f64, x: &[f64], out: &mut [f64]);
}

const SMALL_Q: usize = 16;

/// `X(t) = Σ c^i(t) X_i` for a coefficient curve.
#[derive(Clone, Copy, Debug)]
pub struct ElementField<'a> {
    fam: &'a CompiledFamily,
    curve: &'a CoeffCurve,
}

impl<'a> ElementField<'a> {
    pub fn new(f: &'a FoliationPresentation, curve: &'a CoeffCurve) -> Self {
        assert_eq!(f.q(), curve.q(), "coefficient count must match the generators");
        ElementField { fam: f.compiled(), curve }
    }

    pub fn from_family(fam: &'a CompiledFamily, curve: &'a CoeffCurve) -> Self {
        ElementField { fam, curve }
    }

    pub fn curve(&self) -> &CoeffCurve {
        self.curve
    }

    fn with_coeffs<R>(&self, piece: usize, t: f64, body: impl FnOnce(&[f64]) -> R) -> R {
        let q = self.curve.q();
        if q <= SMALL_Q {
            let mut buf = [0.0; SMALL_Q];
            self.curve.eval_piece_into(piece, t, &mut buf[..q]);
            body(&buf[..q])
        } else {
            let mut buf = vec![0.0; q];
            self.curve.eval_piece_into(piece, t, &mut buf);
            body(&buf)
        }
    }
}

impl TimeField for ElementField<'_> {
    fn dim(&self) -> usize {
        self.fam.dim()
    }

    fn breakpoints(&self) -> &[f64] {
        self.curve.breakpoints()
    }

    fn eval(&self, piece: usize, t: f64, x: &[f64], out: &mut [f64]) {
        self.with_coeffs(piece, t, |c| self.fam.combine_into(c, x, out));
    }

    fn jac(&self, piece: usize, t: f64, x: &[f64], out: &mut [f64]) {
        self.with_coeffs(piece, t, |c| self.fam.combine_jac_into(c, x, out));
    }
}

/// `Σ c_i X_i` with constant coefficients.
#[derive(Clone, Debug)]
pub struct ConstantField<'a> {
    fam: &'a CompiledFamily,
    c: Vec<f64>,
}

const UNIT: [f64; 2] = [0.0, 1.0];

impl<'a> ConstantField<'a> {
    pub fn new(f: &'a FoliationPresentation, c: Vec<f64>) -> Self {
        assert_eq!(f.q(), c.len(), "coefficient count must match the generators");
        ConstantField { fam: f.compiled(), c }
    }

    pub fn from_family(fam: &'a CompiledFamily, c: Vec<f64>) -> Self {
        ConstantField { fam, c }
    }
}

impl TimeField for ConstantField<'_> {
    fn dim(&self) -> usize {
        self.fam.dim()
    }

    fn breakpoints(&self) -> &[f64] {
        &UNIT
    }

    fn eval(&self, _: usize, _: f64, x: &[f64], out: &mut [f64]) {
        self.fam.combine_into(&self.c, x, out);
    }

    fn jac(&self, _: usize, _: f64, x: &[f64], out: &mut [f64]) {
        self.fam.combine_jac_into(&self.c, x, out);
    }
}

/// Stops for integrating from `from` to `to`, with the field piece for each interval.
pub fn stops_between(bps: &[f64], from: f64, to: f64) -> (Vec<f64>, Vec<usize>) {
    let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
    let mut inner: Vec<f64> = bps.iter().copied().filter(|&b| b > lo && b < hi).collect();
    if from > to {
        inner.reverse();
    }
    let mut stops = vec![from];
    stops.extend(inner);
    stops.push(to);
    let pieces = stops
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let k = bps[1..].partition_point(|&b| b <= mid);
            k.min(bps.len().saturating_sub(2))
        })
        .collect();
    (stops, pieces)
}

fn chart_guard<'c>(chart: &'c Chart, d: usize) -> impl FnMut(f64, &[f64]) -> Result<()> + 'c {
    move |t, y| {
        let x = &y[..d];
        if y.iter().all(|v| v.is_finite()) && chart.contains(x) {
            Ok(())
        } else {
            Err(Error::ChartEscape { t, point: x.to_vec() })
        }
    }
}

/// Dense integral curve `p(t)` of a time-dependent field.
#[derive(Clone, Debug)]
pub struct IntegralCurve {
    sol: OdeSolution,
}

impl IntegralCurve {
    pub fn start(&self) -> &[f64] {
        &self.sol.y0
    }

    pub fn end(&self) -> &[f64] {
        &self.sol.y1
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.sol.eval(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.sol.deriv(t)
    }

    pub fn dim(&self) -> usize {
        self.sol.dim()
    }

    pub fn step_times(&self) -> Vec<f64> {
        self.sol.step_times()
    }

    /// Constant curve at `x`.
    pub fn constant(x: &[f64]) -> Self {
        let sol = integrate(|_, _, _, out: &mut [f64]| out.fill(0.0), &[0.0, 1.0], x, &OdeOptions::default(), |_, _| Ok(()))
            .expect("zero field integrates");
        IntegralCurve { sol }
    }

    /// Largest distance between the two curves over `n + 1` uniform samples.
    pub fn max_distance(&self, other: &IntegralCurve, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                crate::linalg::dist(&self.eval(t), &other.eval(t))
            })
            .fold(0.0, f64::max)
    }
}

/// Integrate the base curve `p' = X(t, p)`, `p(0) = x0`, on `[0, 1]` with dense output.
pub fn integrate_curve<F: TimeField + ?Sized>(field: &F, x0: &[f64], tol: f64, chart: &Chart) -> Result<IntegralCurve> {
    let d = field.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let (stops, pieces) = stops_between(field.breakpoints(), 0.0, 1.0);
    let sol = integrate(
        |seg, t, y, out| field.eval(pieces[seg], t, y, out),
        &stops,
        x0,
        &OdeOptions::with_tol(tol),
        chart_guard(chart, d),
    )?;
    Ok(IntegralCurve { sol })
}

/// Image of `x0` under the flow from time `from` to time `to`.
pub fn flow_point<F: TimeField + ?Sized>(
    field: &F,
    x0: &[f64],
    from: f64,
    to: f64,
    opts: &OdeOptions,
    chart: &Chart,
) -> Result<Vec<f64>> {
    let d = field.dim();
    let (stops, pieces) = stops_between(field.breakpoints(), from, to);
    let opts = opts.dense(false);
    let sol = integrate(|seg, t, y, out| field.eval(pieces[seg], t, y, out), &stops, x0, &opts, chart_guard(chart, d))?;
    Ok(sol.y1)
}

/// Joint integration of the flow and its variational equation `J' = DX·J`.
/// Returns the raw solution whose state is `[x, J (row-major)]`.
pub fn flow_variational<F: TimeField + ?Sized>(
    field: &F,
    x0: &[f64],
    from: f64,
    to: f64,
    opts: &OdeOptions,
    chart: &Chart,
) -> Result<OdeSolution> {
    let d = field.dim();
    let (stops, pieces) = stops_between(field.breakpoints(), from, to);
    let mut y0 = x0.to_vec();
    for i in 0..d {
        for j in 0..d {
            y0.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    let mut dx = vec![0.0; d * d];
    integrate(
        |seg, t, y, out| {
            let (x, jm) = y.split_at(d);
            field.eval(pieces[seg], t, x, &mut out[..d]);
            field.jac(pieces[seg], t, x, &mut dx);
            let o = &mut out[d..];
            for r in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += dx[r * d + k] * jm[k * d + c];
                    }
                    o[r * d + c] = s;
                }
            }
        },
        &stops,
        &y0,
        opts,
        chart_guard(chart, d),
    )
}

/// Split a variational state into point and Jacobian.
pub fn split_state(y: &[f64], d: usize) -> (Vec<f64>, DMatrix<f64>) {
    (y[..d].to_vec(), DMatrix::from_row_slice(d, d, &y[d..d + d * d]))
}

/// Image and Jacobian of the flow from `from` to `to`.
pub fn flow_with_jacobian<F: TimeField + ?Sized>(
    field: &F,
    x0: &[f64],
    from: f64,
    to: f64,
    opts: &OdeOptions,
    chart: &Chart,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let sol = flow_variational(field, x0, from, to, &opts.dense(false), chart)?;
    Ok(split_state(&sol.y1, field.dim()))
}

/// Flow images with Jacobians on a stencil.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub points: Vec<Vec<f64>>,
    pub images: Vec<Vec<f64>>,
    pub jacobians: Vec<DMatrix<f64>>,
    pub t_final: f64,
}

/// `Φ^t` and its Jacobian at each stencil point.
pub fn flow_map<F: TimeField + ?Sized>(
    field: &F,
    t: f64,
    stencil: &[Vec<f64>],
    tol: f64,
    chart: &Chart,
    exec: Exec,
) -> Result<FlowResult> {
    let opts = OdeOptions::with_tol(tol);
    let res = exec.try_map(stencil, |x| flow_with_jacobian(field, x, 0.0, t, &opts, chart))?;
    let (images, jacobians) = res.into_iter().unzip();
    Ok(FlowResult { points: stencil.to_vec(), images, jacobians, t_final: t })
}

/// `(Φ^t_* Y)(x) = DΦ^t(Φ^{-t}x) · Y(Φ^{-t}x)` at each sample point. The
/// preimage is found by integrating the field backward in time; its Jacobian
/// is inverted to obtain the forward Jacobian.
pub fn pushforward<F: TimeField + ?Sized>(
    field: &F,
    t: f64,
    y: &CompiledField,
    sample: &[Vec<f64>],
    tol: f64,
    chart: &Chart,
    exec: Exec,
) -> Result<Vec<Vec<f64>>> {
    let opts = OdeOptions::with_tol(tol);
    exec.try_map(sample, |x| {
        let (x0, jb) = flow_with_jacobian(field, x, t, 0.0, &opts, chart)?;
        let yv = DVector::from_vec(y.eval(&x0));
        let v = jb.lu().solve(&yv).ok_or_else(|| Error::Invalid("singular flow Jacobian".into()))?;
        Ok(v.iter().copied().collect())
    })
}
