//! Scalar Herglotz and Stieltjes functions: representations, coefficient
//! extraction, branch-cut aware compositions and sum-rule integrals.
//!
//! Both `sqrt` and `log` use the cut on `R+` with `arg` in `[0, 2 pi)`, so
//! values on `R+` are the limits from the upper half-plane.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Result, C64};

/// Finite sample of an absolutely continuous density on `[a, b]`,
/// integrated by the trapezoid rule.
#[derive(Debug, Clone, Serialize)]
pub struct Density {
    pub a: f64,
    pub b: f64,
    pub values: Vec<f64>,
}

impl Density {
    fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.values.len();
        let h = if n > 1 { (self.b - self.a) / (n - 1) as f64 } else { 0.0 };
        self.values.iter().enumerate().map(move |(k, &v)| {
            let w = if k == 0 || k + 1 == n { 0.5 * h } else { h };
            (self.a + k as f64 * h, v * w)
        })
    }
}

/// `h(z) = alpha z + beta + int (1/(xi - z) - xi/(1 + xi^2)) dm(xi)`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct HerglotzRepresentation {
    pub alpha: f64,
    pub beta: f64,
    /// `(location, weight)` atoms.
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Density>,
}

impl HerglotzRepresentation {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.atoms.iter().any(|a| a.1 < 0.0) {
            return Err(Error::Input("Herglotz representation needs alpha >= 0 and nonnegative weights".into()));
        }
        if let Some(d) = &self.density {
            if d.values.iter().any(|v| *v < 0.0) || !(d.a < d.b) {
                return Err(Error::Input("density must be nonnegative on a proper interval".into()));
            }
        }
        Ok(())
    }

    fn measure(&self) -> Vec<(f64, f64)> {
        let mut m = self.atoms.clone();
        if let Some(d) = &self.density {
            m.extend(d.nodes());
        }
        m
    }
}

pub fn eval_herglotz(rep: &HerglotzRepresentation, z: C64) -> Result<C64> {
    if z.im < 0.0 {
        return Err(Error::Input(format!("Herglotz evaluation needs Im z >= 0, got {z}")));
    }
    let mut s = rep.alpha * z + rep.beta;
    for (xi, w) in rep.measure() {
        if w == 0.0 {
            continue;
        }
        let d = C64::new(xi, 0.0) - z;
        if d.norm() == 0.0 {
            return Err(Error::Input(format!("evaluation point {z} sits on an atom")));
        }
        s += w * (1.0 / d - xi / (1.0 + xi * xi));
    }
    Ok(s)
}

/// `s(z) = alpha + int_{R+} dm(xi) / (xi + z)`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StieltjesRepresentation {
    pub alpha: f64,
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Density>,
}

impl StieltjesRepresentation {
    pub fn validate(&self) -> Result<()> {
        let neg_support = self.atoms.iter().any(|a| a.0 < 0.0) || self.density.as_ref().is_some_and(|d| d.a < 0.0);
        if self.alpha < 0.0 || neg_support || self.atoms.iter().any(|a| a.1 < 0.0) {
            return Err(Error::Input("Stieltjes representation needs alpha >= 0 and a measure on R+".into()));
        }
        Ok(())
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let mut s = C64::new(self.alpha, 0.0);
        let mut m = self.atoms.clone();
        if let Some(d) = &self.density {
            m.extend(d.nodes());
        }
        for (xi, w) in m {
            let d = z + xi;
            if d.norm() == 0.0 {
                return Err(Error::Input(format!("evaluation point {z} sits on an atom")));
            }
            s += w / d;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Domain {
    UpperHalfPlane,
    /// `C \ R+`.
    CutPositive,
    /// `C \ R-`.
    CutNegative,
    Interval,
}

type Evaluator = dyn Fn(C64) -> Result<C64> + Send + Sync;

/// Handle to a complex function known only through evaluation.
#[derive(Clone)]
pub struct SampledFunction {
    f: Arc<Evaluator>,
    pub domain: Domain,
}

impl std::fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledFunction").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl SampledFunction {
    pub fn new(domain: Domain, f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static) -> Self {
        SampledFunction { f: Arc::new(f), domain }
    }

    pub fn from_fn(domain: Domain, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self::new(domain, move |z| Ok(f(z)))
    }

    pub fn from_herglotz(rep: HerglotzRepresentation) -> Self {
        Self::new(Domain::UpperHalfPlane, move |z| eval_herglotz(&rep, z))
    }

    pub fn from_stieltjes(rep: StieltjesRepresentation) -> Self {
        Self::new(Domain::CutNegative, move |z| rep.eval(z))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        (self.f)(z)
    }
}

/// Geometric sequence `start, start*ratio, ...` of `n` terms.
pub fn geometric(start: f64, ratio: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start * ratio.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub error: f64,
    pub raw: Vec<f64>,
}

/// Richardson table on values ordered towards the limit, step shrinking by
/// `ratio` each term, error expansion in powers `p0, p0 + dp, ...`.
pub fn richardson(values: &[f64], ratio: f64, p0: f64, dp: f64, depth: usize) -> Extrapolation {
    let n = values.len();
    if n == 0 {
        return Extrapolation { value: f64::NAN, error: f64::INFINITY, raw: vec![] };
    }
    let depth = depth.min(n - 1);
    let mut prev = values.to_vec();
    let mut last_two = (values[n - 1], values[n - 1]);
    let mut err = if n > 1 { (values[n - 1] - values[n - 2]).abs() } else { f64::INFINITY };
    for k in 1..=depth {
        let p = p0 + (k - 1) as f64 * dp;
        let f = ratio.powf(p) - 1.0;
        let next: Vec<f64> = (1..prev.len()).map(|i| prev[i] + (prev[i] - prev[i - 1]) / f).collect();
        last_two = (*prev.last().unwrap(), *next.last().unwrap());
        err = (last_two.1 - last_two.0).abs();
        prev = next;
    }
    Extrapolation { value: last_two.1, error: err, raw: values.to_vec() }
}

pub const RICHARDSON_DEPTH: usize = 4;

/// `lim_{y -> inf} Re h(iy) / (iy)` along an increasing `ys`.
pub fn extract_alpha(f: &SampledFunction, ys: &[f64]) -> Result<Extrapolation> {
    check_geometric(ys, true)?;
    let mut vals = Vec::with_capacity(ys.len());
    for &y in ys {
        let z = C64::new(0.0, y);
        vals.push((f.eval(z)? / z).re);
    }
    Ok(richardson(&vals, ys[1] / ys[0], 1.0, 1.0, RICHARDSON_DEPTH))
}

/// `lim_{y -> 0} y Im h(a + iy)` along a decreasing `ys`.
pub fn atom_mass(f: &SampledFunction, a: f64, ys: &[f64]) -> Result<Extrapolation> {
    check_geometric(ys, false)?;
    let mut vals = Vec::with_capacity(ys.len());
    for &y in ys {
        vals.push(y * f.eval(C64::new(a, y))?.im);
    }
    Ok(richardson(&vals, ys[0] / ys[1], 1.0, 1.0, RICHARDSON_DEPTH))
}

fn check_geometric(ys: &[f64], increasing: bool) -> Result<()> {
    if ys.len() < 2 || ys.iter().any(|y| !(*y > 0.0)) {
        return Err(Error::Input("need at least two positive y values".into()));
    }
    let ok = ys.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !ok {
        return Err(Error::Input(format!(
            "y sequence must be strictly {}",
            if increasing { "increasing" } else { "decreasing" }
        )));
    }
    let r = ys[1] / ys[0];
    if ys.windows(2).any(|w| ((w[1] / w[0]) / r - 1.0).abs() > 1e-9) {
        return Err(Error::Input("y sequence must be geometric".into()));
    }
    Ok(())
}

/// `H(z) = z s(-z)`.
pub fn stieltjes_to_herglotz(s: &SampledFunction) -> SampledFunction {
    let s = s.clone();
    SampledFunction::new(Domain::CutPositive, move |z| Ok(z * s.eval(-z)?))
}

/// Argument in `[0, 2 pi)`.
pub fn arg_cut_positive(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + 2.0 * PI
    } else if z.im == 0.0 && z.re > 0.0 {
        0.0
    } else {
        a
    }
}

/// `|z|^{1/2} e^{i arg(z)/2}` with the cut on `R+`.
pub fn principal_sqrt_cut_positive(z: C64) -> C64 {
    C64::from_polar(z.norm().sqrt(), 0.5 * arg_cut_positive(z))
}

/// `ln|z| + i arg(z)` with the cut on `R+`.
pub fn log_cut_positive(z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::Input("log of zero".into()));
    }
    Ok(C64::new(z.norm().ln(), arg_cut_positive(z)))
}

/// `(1/2 delta) log((h - delta) / (h + delta))` for a value `h = H(z)`.
pub fn compose_uniform_value(h: C64, delta: f64) -> Result<C64> {
    if !(delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    let (num, den) = (h - delta, h + delta);
    if num.norm() == 0.0 || den.norm() == 0.0 {
        return Err(Error::Input(format!("H = {h} sits on a log singularity at +-{delta}")));
    }
    Ok(log_cut_positive(num / den)? / (2.0 * delta))
}

pub fn compose_uniform(h: &SampledFunction, delta: f64, z: C64) -> Result<C64> {
    compose_uniform_value(h.eval(z)?, delta)
}

/// `z -> H_mu(z)` for the uniform measure on `[-delta, delta]`.
pub fn uniform_composition(h: &SampledFunction, delta: f64) -> SampledFunction {
    let h = h.clone();
    SampledFunction::new(Domain::UpperHalfPlane, move |z| compose_uniform(&h, delta, z))
}

/// `z -> 1/(xi - H(z))`, the Dirac-measure composition.
pub fn dirac_composition(h: &SampledFunction, xi: f64) -> SampledFunction {
    let h = h.clone();
    SampledFunction::new(Domain::UpperHalfPlane, move |z| {
        let d = C64::new(xi, 0.0) - h.eval(z)?;
        if d.norm() == 0.0 {
            return Err(Error::Input(format!("H(z) = {xi} at z = {z}")));
        }
        Ok(1.0 / d)
    })
}

/// Adaptive Simpson on a real integrand.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<f64> {
    fn rec(
        f: &dyn Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb) = (f(a)?, f(b)?);
    // Seed on a uniform partition so narrow peaks are not skipped.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    let mut left_val = fa;
    for k in 0..pieces {
        let (x0, x1) = (a + k as f64 * h, if k + 1 == pieces { b } else { a + (k + 1) as f64 * h });
        let right_val = if k + 1 == pieces { fb } else { f(x1)? };
        let fm = f(0.5 * (x0 + x1))?;
        let whole = (x1 - x0) / 6.0 * (left_val + 4.0 * fm + right_val);
        total += rec(f, x0, x1, left_val, fm, right_val, whole, tol / pieces as f64, max_depth)?;
        left_val = right_val;
    }
    Ok(total)
}

pub const QUAD_TOL: f64 = 1e-11;
pub const QUAD_DEPTH: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct SumRule {
    pub ys: Vec<f64>,
    pub value: f64,
    pub error: f64,
    pub raw: Vec<f64>,
}

/// `lim_{y -> 0} (1/pi) int_{x-}^{x+} Im h(x + iy) dx` along a decreasing `ys`.
pub fn sumrule_integral(h: &SampledFunction, x_range: (f64, f64), ys: &[f64]) -> Result<SumRule> {
    check_geometric(ys, false)?;
    let (a, b) = x_range;
    if !(a < b) {
        return Err(Error::Input(format!("empty integration range [{a}, {b}]")));
    }
    let mut vals = Vec::with_capacity(ys.len());
    for &y in ys {
        let g = |x: f64| -> Result<f64> { Ok(h.eval(C64::new(x, y))?.im) };
        vals.push(adaptive_simpson(&g, a, b, QUAD_TOL, QUAD_DEPTH)? / PI);
    }
    let ex = richardson(&vals, ys[0] / ys[1], 1.0, 1.0, RICHARDSON_DEPTH);
    Ok(SumRule { ys: ys.to_vec(), value: ex.value, error: ex.error, raw: vals })
}

/// `(1/pi) int Im H_mu(x) dx` from boundary values `H(x)` on a real grid,
/// for the uniform measure. `Im H_mu(x) = arg(...) / (2 delta)` is piecewise
/// smooth with jumps at `|H| = delta`, so each cell is split at the
/// interpolated crossings.
pub fn uniform_sumrule_on_axis(xs: &[f64], h: &[C64], delta: f64) -> Result<f64> {
    if xs.len() != h.len() || xs.len() < 2 {
        return Err(Error::Dimension("grid and values must match and have two points".into()));
    }
    let im = |v: C64| compose_uniform_value(v, delta).map(|w| w.im);
    let mut total = 0.0;
    for k in 0..xs.len() - 1 {
        let (x0, x1) = (xs[k], xs[k + 1]);
        let (g0, g1) = (delta - h[k].norm(), delta - h[k + 1].norm());
        // A node with |H| = delta sits on the jump; it takes the value of the other node of its cell.
        let (i0, i1) = match (g0 == 0.0, g1 == 0.0) {
            (false, false) => (im(h[k])?, im(h[k + 1])?),
            (true, false) => (im(h[k + 1])?, im(h[k + 1])?),
            (false, true) => (im(h[k])?, im(h[k])?),
            (true, true) => (PI / (4.0 * delta), PI / (4.0 * delta)),
        };
        if g0 == 0.0 || g1 == 0.0 || (g0 > 0.0) == (g1 > 0.0) {
            total += 0.5 * (i0 + i1) * (x1 - x0);
        } else {
            let t = g0 / (g0 - g1);
            let xc = x0 + t * (x1 - x0);
            total += i0 * (xc - x0) + i1 * (x1 - xc);
        }
    }
    Ok(total / PI)
}

/// Length of `{x : |H(x)| <= delta}` with linear interpolation of
/// `delta - |H|` at crossings.
pub fn heaviside_length(xs: &[f64], h: &[C64], delta: f64) -> Result<f64> {
    if xs.len() != h.len() || xs.len() < 2 {
        return Err(Error::Dimension("grid and values must match and have two points".into()));
    }
    let mut len = 0.0;
    for k in 0..xs.len() - 1 {
        let (x0, x1) = (xs[k], xs[k + 1]);
        let (g0, g1) = (delta - h[k].norm(), delta - h[k + 1].norm());
        len += match (g0 >= 0.0, g1 >= 0.0) {
            (true, true) => x1 - x0,
            (false, false) => 0.0,
            (true, false) => (x1 - x0) * g0 / (g0 - g1),
            (false, true) => (x1 - x0) * g1 / (g1 - g0),
        };
    }
    Ok(len)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracScan {
    pub xi: f64,
    pub value: f64,
    pub values: Vec<f64>,
}

/// Maximizes the sum-rule integral of `1/(xi - H)` over `xi_grid`.
pub fn dirac_scan(h: &SampledFunction, xi_grid: &[f64], x_range: (f64, f64), ys: &[f64]) -> Result<DiracScan> {
    let mut values = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        values.push(sumrule_integral(&dirac_composition(h, xi), x_range, ys)?.value);
    }
    let (k, v) = values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    Ok(DiracScan { xi: xi_grid.get(k).cloned().unwrap_or(f64::NAN), value: v, values })
}

/// `z H_mu(z)` at `z = iy`; tends to `-1/alpha` of `H` as `y -> inf`.
pub fn high_frequency_slope(h: &SampledFunction, delta: f64, y: f64) -> Result<C64> {
    let z = C64::new(0.0, y);
    Ok(z * compose_uniform(h, delta, z)?)
}

/// Smallest `Im h(z)` over the sample points.
pub fn min_imag(h: &SampledFunction, zs: &[C64]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for &z in zs {
        m = m.min(h.eval(z)?.im);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn representation_examples() {
        let id = HerglotzRepresentation { alpha: 1.0, ..Default::default() };
        assert!((eval_herglotz(&id, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        let atom = HerglotzRepresentation { atoms: vec![(0.0, 1.0)], ..Default::default() };
        assert!((eval_herglotz(&atom, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(eval_herglotz(&atom, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn alpha_and_atoms() {
        let h = SampledFunction::from_fn(Domain::UpperHalfPlane, |z| 2.0 * z + 1.0 / (1.0 - z));
        let ys = geometric(1e6 / 2f64.powi(11), 2.0, 12);
        assert!((extract_alpha(&h, &ys).unwrap().value - 2.0).abs() < 1e-8);
        let a = SampledFunction::from_herglotz(HerglotzRepresentation { atoms: vec![(1.0, 2.0)], ..Default::default() });
        let small = geometric(0.1, 0.5, 12);
        assert!((atom_mass(&a, 1.0, &small).unwrap().value - 2.0).abs() < 1e-6);
        assert!(atom_mass(&a, 0.0, &small).unwrap().value.abs() < 1e-6);
    }

    #[test]
    fn branches() {
        assert!((principal_sqrt_cut_positive(c(4.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-15);
        assert!((principal_sqrt_cut_positive(c(-1.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
        let d = 0.3;
        let v = compose_uniform_value(c(0.0, d), d).unwrap();
        assert!((v - c(0.0, PI / (4.0 * d))).norm() < 1e-12);
    }

    #[test]
    fn poisson_atom_mass() {
        let h = SampledFunction::from_fn(Domain::UpperHalfPlane, |z| 1.0 / (0.7 - z));
        let ys = geometric(0.05, 0.5, 12);
        let inside = sumrule_integral(&h, (0.25, 4.0), &ys).unwrap();
        assert!((inside.value - 1.0).abs() < 1e-4, "{inside:?}");
        let outside = sumrule_integral(&h, (2.0, 4.0), &ys).unwrap();
        assert!(outside.value.abs() < 1e-4);
    }

    #[test]
    fn heaviside_affine() {
        let xs: Vec<f64> = (0..=375).map(|k| 0.25 + 0.01 * k as f64).collect();
        let h: Vec<C64> = xs.iter().map(|x| c(x - 1.0, 0.0)).collect();
        assert!((heaviside_length(&xs, &h, 0.2).unwrap() - 0.4).abs() < 1e-12);
        assert!((heaviside_length(&xs, &h, 10.0).unwrap() - 3.75).abs() < 1e-12);
    }
}
