//! Dormand–Prince 5(4) with PI step control and continuous (dense) output.
//!
//! Integration runs over a list of stop times. The stepper restarts at every
//! stop, so right-hand sides only need to be smooth between consecutive stops.
//! Stops may be decreasing, which integrates backward in time.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Keep the per-step interpolation data.
    pub dense: bool,
    /// Upper bound on |h|; `0` means no bound.
    pub h_max: f64,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, ..Default::default() }
    }

    pub fn dense(mut self, dense: bool) -> Self {
        self.dense = dense;
        self
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_steps: 200_000, dense: true, h_max: 0.0 }
    }
}

/// One accepted step's interpolation data.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl Segment {
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }

    fn deriv_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [_, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            let inner = r3[i] + th * (r4[i] + th1 * r5[i]);
            let dinner = r4[i] + (1.0 - 2.0 * th) * r5[i];
            let mid = r2[i] + th1 * inner;
            let dmid = -inner + th1 * dinner;
            out[i] = (mid + th * dmid) / self.h;
        }
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Result of an integration: the final state plus optional dense output.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    segments: Vec<Segment>,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn has_dense(&self) -> bool {
        !self.segments.is_empty() || self.t0 == self.t1
    }

    fn find(&self, t: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.t1 >= self.t0;
        // Segments are ordered in integration direction.
        let idx = self.segments.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        Some(&self.segments[idx.min(self.segments.len() - 1)])
    }

    /// Dense-output value at `t` (must lie between `t0` and `t1`).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if t == self.t1 {
            out.copy_from_slice(&self.y1);
            return;
        }
        if t == self.t0 {
            out.copy_from_slice(&self.y0);
            return;
        }
        match self.find(t) {
            Some(seg) => seg.eval_into(t, out),
            None => out.copy_from_slice(&self.y1),
        }
    }

    /// Time derivative of the dense output at `t`.
    pub fn deriv(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        if let Some(seg) = self.find(t) {
            seg.deriv_into(t, &mut out);
        }
        out
    }

    /// Times of accepted step boundaries (including both ends).
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts = vec![self.t0];
        ts.extend(self.segments.iter().map(Segment::t1));
        ts
    }
}

/// Integrate `y' = f(seg, t, y)` through `stops[0] → stops[1] → …`. The first
/// argument of `f` is the index of the current interval between stops.
/// `check` is called on every accepted state and may abort the integration.
pub fn integrate<F, G>(mut f: F, stops: &[f64], y0: &[f64], opts: &OdeOptions, mut check: G) -> Result<OdeSolution>
where
    F: FnMut(usize, f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    assert!(!stops.is_empty(), "integration needs at least one stop");
    let n = y0.len();
    let mut sol = OdeSolution {
        t0: stops[0],
        t1: *stops.last().unwrap(),
        y0: y0.to_vec(),
        y1: y0.to_vec(),
        steps: 0,
        rejected: 0,
        segments: Vec::new(),
    };
    check(stops[0], y0)?;
    let mut y = y0.to_vec();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut yerr = vec![0.0; n];
    let mut h_guess: Option<f64> = None;

    for (seg, w) in stops.windows(2).enumerate() {
        let (ta, tb) = (w[0], w[1]);
        if ta == tb {
            continue;
        }
        let dir = (tb - ta).signum();
        let mut t = ta;
        let mut rhs = |t: f64, y: &[f64], out: &mut [f64]| f(seg, t, y, out);
        rhs(t, &y, &mut k[0]);
        let span = (tb - ta).abs();
        let mut h = match h_guess {
            Some(hg) => hg.min(span),
            None => {
                let (k0, rest) = k.split_at_mut(1);
                initial_step(&mut rhs, t, &y, &k0[0], dir, span, opts, &mut ytmp, &mut rest[0])
            }
        };
        if opts.h_max > 0.0 {
            h = h.min(opts.h_max);
        }
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;
        loop {
            if sol.steps + sol.rejected >= opts.max_steps {
                return Err(Error::TooManySteps { t });
            }
            let remaining = (tb - t).abs();
            if remaining <= 1e-13 * t.abs().max(1.0) {
                break;
            }
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            let hs = dir * h;
            step(&mut rhs, t, &y, hs, &mut k, &mut ytmp, &mut ynew, &mut yerr);
            let mut err = 0.0;
            for i in 0..n {
                let sk = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                let r = yerr[i] / sk;
                err += r * r;
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h *= 0.1;
                sol.rejected += 1;
                last_rejected = true;
                continue;
            }
            let fac11 = err.powf(0.2 - 0.04 * 0.75);
            if err <= 1.0 {
                let mut fac = fac11 / facold.powf(0.04);
                fac = (fac / 0.9).clamp(0.1, 5.0);
                let mut hnew = h / fac;
                if opts.h_max > 0.0 {
                    hnew = hnew.min(opts.h_max);
                }
                if last_rejected {
                    hnew = hnew.min(h);
                }
                facold = err.max(1e-4);
                // k[6] holds f(t + h, ynew) (first same as last).
                if opts.dense {
                    let mut r = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                    for i in 0..n {
                        let ydiff = ynew[i] - y[i];
                        let bspl = hs * k[0][i] - ydiff;
                        r[0][i] = y[i];
                        r[1][i] = ydiff;
                        r[2][i] = bspl;
                        r[3][i] = ydiff - hs * k[6][i] - bspl;
                        r[4][i] = hs
                            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                    }
                    sol.segments.push(Segment { t0: t, h: hs, rcont: r });
                }
                t = if last { tb } else { t + hs };
                y.copy_from_slice(&ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                sol.steps += 1;
                check(t, &y)?;
                last_rejected = false;
                h = hnew;
                if last {
                    h_guess = Some(h);
                    break;
                }
            } else {
                h /= (fac11 / 0.9).min(10.0);
                sol.rejected += 1;
                last_rejected = true;
            }
        }
    }
    sol.y1 = y;
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn step<R: FnMut(f64, &[f64], &mut [f64])>(
    rhs: &mut R,
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>; 7],
    ytmp: &mut [f64],
    ynew: &mut [f64],
    yerr: &mut [f64],
) {
    let n = y.len();
    for i in 0..n {
        ytmp[i] = y[i] + h * A21 * k[0][i];
    }
    rhs(t + C2 * h, ytmp, &mut k[1]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    rhs(t + C3 * h, ytmp, &mut k[2]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    rhs(t + C4 * h, ytmp, &mut k[3]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    rhs(t + C5 * h, ytmp, &mut k[4]);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    rhs(t + h, ytmp, &mut k[5]);
    for i in 0..n {
        ynew[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    rhs(t + h, ynew, &mut k[6]);
    for i in 0..n {
        yerr[i] = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<R: FnMut(f64, &[f64], &mut [f64])>(
    rhs: &mut R,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    span: f64,
    opts: &OdeOptions,
    ytmp: &mut [f64],
    f1: &mut [f64],
) -> f64 {
    let n = y.len().max(1) as f64;
    let sk = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let dnf = (0..y.len()).map(|i| (f0[i] / sk(i)).powi(2)).sum::<f64>() / n;
    let dny = (0..y.len()).map(|i| (y[i] / sk(i)).powi(2)).sum::<f64>() / n;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(span);
    for i in 0..y.len() {
        ytmp[i] = y[i] + dir * h * f0[i];
    }
    rhs(t + dir * h, ytmp, f1);
    let der2 = ((0..y.len()).map(|i| ((f1[i] - f0[i]) / sk(i)).powi(2)).sum::<f64>() / n).sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(span)
}

/// Classical fixed-step fourth-order Runge–Kutta, used as an independent check.
pub fn rk4_fixed<F: FnMut(f64, &[f64], &mut [f64])>(mut f: F, t0: f64, t1: f64, y0: &[f64], steps: usize) -> Vec<f64> {
    let n = y0.len();
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(_: usize, _: f64, y: &[f64], out: &mut [f64]) {
        out[0] = y[1];
        out[1] = -y[0];
    }

    #[test]
    fn full_turn_returns() {
        let tau = 2.0 * std::f64::consts::PI;
        let sol = integrate(rotation, &[0.0, tau], &[1.0, 0.0], &OdeOptions::with_tol(1e-10), |_, _| Ok(())).unwrap();
        assert!((sol.y1[0] - 1.0).abs() < 1e-8 && sol.y1[1].abs() < 1e-8);
    }

    #[test]
    fn dense_output_and_derivative() {
        let sol = integrate(rotation, &[0.0, 0.5, 2.0], &[1.0, 0.0], &OdeOptions::with_tol(1e-11), |_, _| Ok(())).unwrap();
        for &t in &[0.1, 0.5, 0.77, 1.3, 1.99] {
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-8, "t={t}");
            let d = sol.deriv(t);
            assert!((d[0] + t.sin()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn backward_integration_inverts() {
        let opts = OdeOptions::with_tol(1e-12);
        let fwd = integrate(|_, _, y: &[f64], o: &mut [f64]| o[0] = y[0] * y[0], &[0.0, 0.5], &[1.0], &opts, |_, _| Ok(())).unwrap();
        assert!((fwd.y1[0] - 2.0).abs() < 1e-9);
        let back = integrate(|_, _, y: &[f64], o: &mut [f64]| o[0] = y[0] * y[0], &[0.5, 0.0], &fwd.y1, &opts, |_, _| Ok(())).unwrap();
        assert!((back.y1[0] - 1.0).abs() < 1e-10);
        assert!((back.eval(0.25)[0] - 1.0 / 0.75).abs() < 1e-8);
    }

    #[test]
    fn check_aborts() {
        let r = integrate(|_, _, _: &[f64], o: &mut [f64]| o[0] = 1.0, &[0.0, 1.0], &[0.0], &OdeOptions::default(), |t, y| {
            if y[0] > 0.5 {
                Err(Error::ChartEscape { t, point: y.to_vec() })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::ChartEscape { .. })));
    }

    #[test]
    fn rk4_reference() {
        let y = rk4_fixed(|_, y, o| o[0] = -y[0], 0.0, 1.0, &[1.0], 200);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-10);
    }
}
