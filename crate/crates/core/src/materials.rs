//! Piecewise dispersive permittivity models and sampled hypothesis checks.
//!
//! Material laws sit behind [`MaterialLaw`] and are built by name from a
//! [`LawSpec`] through [`law_registry`].

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::geometry::ObstacleMask;
use crate::linalg::{eig_herm2, imag_part2, min_eig_herm2, scalar_tensor, spectral_norm2, Tensor2};
use crate::{Error, Result, C64};

pub const COERCIVITY_ANGLES: usize = 1024;
pub const LOSSLESS_THRESHOLD: f64 = 1e-14;

pub trait MaterialLaw: Send + Sync + std::fmt::Debug {
    fn kind(&self) -> &'static str;
    fn eval(&self, omega: C64) -> Result<Tensor2>;
    /// Limit of `eval(i y)` as `y -> +inf`.
    fn high_frequency_limit(&self) -> Tensor2;
    fn is_dispersive(&self) -> bool;
    fn is_symmetric(&self) -> bool;
    /// Frequency derivative on the real axis.
    fn d_domega(&self, omega: f64) -> Result<Tensor2>;
    fn spec(&self) -> LawSpec;
}

/// Serialized law: `type` selects the registered constructor, the remaining
/// keys are its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

type LawCtor = fn(&serde_json::Value, f64) -> Result<Box<dyn MaterialLaw>>;

pub fn law_registry() -> &'static [(&'static str, LawCtor)] {
    &[
        ("constant", ConstantLaw::from_params),
        ("lorentz", LorentzLaw::from_params),
        ("anisotropic-lorentz", AnisotropicLorentzLaw::from_params),
    ]
}

pub fn build_law(spec: &LawSpec, eps0: f64) -> Result<Box<dyn MaterialLaw>> {
    let ctor = law_registry()
        .iter()
        .find(|(name, _)| *name == spec.kind)
        .map(|(_, c)| *c)
        .ok_or_else(|| {
            let known: Vec<_> = law_registry().iter().map(|(n, _)| *n).collect();
            Error::Config(format!("unknown material law '{}', known: {known:?}", spec.kind))
        })?;
    ctor(&serde_json::Value::Object(spec.params.clone()), eps0)
}

fn params<T: for<'de> Deserialize<'de>>(v: &serde_json::Value, kind: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("{kind} law: {e}")))
}

#[derive(Debug, Clone)]
pub struct ConstantLaw {
    pub tensor: Tensor2,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    tensor: [[f64; 2]; 2],
    #[serde(default)]
    tensor_im: Option<[[f64; 2]; 2]>,
}

impl ConstantLaw {
    pub fn new(tensor: Tensor2) -> Self {
        ConstantLaw { tensor }
    }

    fn from_params(v: &serde_json::Value, _eps0: f64) -> Result<Box<dyn MaterialLaw>> {
        let p: ConstantParams = params(v, "constant")?;
        let im = p.tensor_im.unwrap_or([[0.0; 2]; 2]);
        let t = Matrix2::from_fn(|i, j| C64::new(p.tensor[i][j], im[i][j]));
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("constant law: non-finite entry".into()));
        }
        Ok(Box::new(ConstantLaw::new(t)))
    }
}

impl MaterialLaw for ConstantLaw {
    fn kind(&self) -> &'static str {
        "constant"
    }
    fn eval(&self, _omega: C64) -> Result<Tensor2> {
        Ok(self.tensor)
    }
    fn high_frequency_limit(&self) -> Tensor2 {
        self.tensor
    }
    fn is_dispersive(&self) -> bool {
        false
    }
    fn is_symmetric(&self) -> bool {
        (self.tensor[(0, 1)] - self.tensor[(1, 0)]).norm() == 0.0
    }
    fn d_domega(&self, _omega: f64) -> Result<Tensor2> {
        Ok(Tensor2::zeros())
    }
    fn spec(&self) -> LawSpec {
        let re = [[self.tensor[(0, 0)].re, self.tensor[(0, 1)].re], [self.tensor[(1, 0)].re, self.tensor[(1, 1)].re]];
        let im = [[self.tensor[(0, 0)].im, self.tensor[(0, 1)].im], [self.tensor[(1, 0)].im, self.tensor[(1, 1)].im]];
        let mut params = serde_json::Map::new();
        params.insert("tensor".into(), serde_json::json!(re));
        if im.iter().flatten().any(|v| *v != 0.0) {
            params.insert("tensor_im".into(), serde_json::json!(im));
        }
        LawSpec { kind: "constant".into(), params }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub wp2: f64,
    pub w0: f64,
    pub gamma: f64,
}

fn validate_poles(poles: &[Pole]) -> Result<()> {
    for p in poles {
        if !(p.wp2 > 0.0 && p.w0 >= 0.0 && p.gamma >= 0.0) || ![p.wp2, p.w0, p.gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!("lorentz pole needs wp2 > 0, w0 >= 0, gamma >= 0, got {p:?}")));
        }
    }
    Ok(())
}

/// `1 + sum_j wp2_j / (w0_j^2 - omega^2 - i gamma_j omega)`.
pub fn lorentz_scalar(poles: &[Pole], omega: C64) -> Result<C64> {
    let mut s = C64::new(1.0, 0.0);
    for p in poles {
        let d = C64::new(p.w0 * p.w0, 0.0) - omega * omega - C64::new(0.0, p.gamma) * omega;
        let scale = (p.w0 * p.w0).max(omega.norm_sqr()).max(1e-300);
        if d.norm() <= 1e-14 * scale {
            return Err(Error::Pole {
                omega: format!("{omega}"),
                detail: format!("undamped resonance w0 = {}", p.w0),
            });
        }
        s += C64::new(p.wp2, 0.0) / d;
    }
    Ok(s)
}

fn lorentz_scalar_derivative(poles: &[Pole], omega: f64) -> Result<C64> {
    let w = C64::new(omega, 0.0);
    lorentz_scalar(poles, w)?;
    let mut s = C64::new(0.0, 0.0);
    for p in poles {
        let d = C64::new(p.w0 * p.w0, 0.0) - w * w - C64::new(0.0, p.gamma) * w;
        s += C64::new(p.wp2, 0.0) * (2.0 * w + C64::new(0.0, p.gamma)) / (d * d);
    }
    Ok(s)
}

/// Isotropic Lorentz sum `eps0 (1 + sum_j wp2_j / (w0_j^2 - w^2 - i gamma_j w))`.
#[derive(Debug, Clone)]
pub struct LorentzLaw {
    pub eps0: f64,
    pub poles: Vec<Pole>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LorentzParams {
    #[serde(default)]
    eps0: Option<f64>,
    poles: Vec<Pole>,
}

impl LorentzLaw {
    pub fn new(eps0: f64, poles: Vec<Pole>) -> Result<Self> {
        validate_poles(&poles)?;
        if !(eps0 > 0.0) {
            return Err(Error::Config(format!("lorentz eps0 must be positive, got {eps0}")));
        }
        Ok(LorentzLaw { eps0, poles })
    }

    fn from_params(v: &serde_json::Value, eps0: f64) -> Result<Box<dyn MaterialLaw>> {
        let p: LorentzParams = params(v, "lorentz")?;
        Ok(Box::new(LorentzLaw::new(p.eps0.unwrap_or(eps0), p.poles)?))
    }
}

impl MaterialLaw for LorentzLaw {
    fn kind(&self) -> &'static str {
        "lorentz"
    }
    fn eval(&self, omega: C64) -> Result<Tensor2> {
        Ok(scalar_tensor(lorentz_scalar(&self.poles, omega)? * self.eps0))
    }
    fn high_frequency_limit(&self) -> Tensor2 {
        scalar_tensor(C64::new(self.eps0, 0.0))
    }
    fn is_dispersive(&self) -> bool {
        true
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn d_domega(&self, omega: f64) -> Result<Tensor2> {
        Ok(scalar_tensor(lorentz_scalar_derivative(&self.poles, omega)? * self.eps0))
    }
    fn spec(&self) -> LawSpec {
        let mut params = serde_json::Map::new();
        params.insert("eps0".into(), serde_json::json!(self.eps0));
        params.insert("poles".into(), serde_json::to_value(&self.poles).expect("poles serialize"));
        LawSpec { kind: "lorentz".into(), params }
    }
}

/// Diagonal law with an independent Lorentz sum on each axis.
#[derive(Debug, Clone)]
pub struct AnisotropicLorentzLaw {
    pub eps0: f64,
    pub poles_x: Vec<Pole>,
    pub poles_y: Vec<Pole>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnisoParams {
    #[serde(default)]
    eps0: Option<f64>,
    poles_x: Vec<Pole>,
    poles_y: Vec<Pole>,
}

impl AnisotropicLorentzLaw {
    pub fn new(eps0: f64, poles_x: Vec<Pole>, poles_y: Vec<Pole>) -> Result<Self> {
        validate_poles(&poles_x)?;
        validate_poles(&poles_y)?;
        if !(eps0 > 0.0) {
            return Err(Error::Config(format!("lorentz eps0 must be positive, got {eps0}")));
        }
        Ok(AnisotropicLorentzLaw { eps0, poles_x, poles_y })
    }

    fn from_params(v: &serde_json::Value, eps0: f64) -> Result<Box<dyn MaterialLaw>> {
        let p: AnisoParams = params(v, "anisotropic-lorentz")?;
        Ok(Box::new(AnisotropicLorentzLaw::new(p.eps0.unwrap_or(eps0), p.poles_x, p.poles_y)?))
    }
}

impl MaterialLaw for AnisotropicLorentzLaw {
    fn kind(&self) -> &'static str {
        "anisotropic-lorentz"
    }
    fn eval(&self, omega: C64) -> Result<Tensor2> {
        let ex = lorentz_scalar(&self.poles_x, omega)? * self.eps0;
        let ey = lorentz_scalar(&self.poles_y, omega)? * self.eps0;
        Ok(Matrix2::new(ex, C64::new(0.0, 0.0), C64::new(0.0, 0.0), ey))
    }
    fn high_frequency_limit(&self) -> Tensor2 {
        scalar_tensor(C64::new(self.eps0, 0.0))
    }
    fn is_dispersive(&self) -> bool {
        true
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn d_domega(&self, omega: f64) -> Result<Tensor2> {
        let dx = lorentz_scalar_derivative(&self.poles_x, omega)? * self.eps0;
        let dy = lorentz_scalar_derivative(&self.poles_y, omega)? * self.eps0;
        Ok(Matrix2::new(dx, C64::new(0.0, 0.0), C64::new(0.0, 0.0), dy))
    }
    fn spec(&self) -> LawSpec {
        let mut params = serde_json::Map::new();
        params.insert("eps0".into(), serde_json::json!(self.eps0));
        params.insert("poles_x".into(), serde_json::to_value(&self.poles_x).expect("poles serialize"));
        params.insert("poles_y".into(), serde_json::to_value(&self.poles_y).expect("poles serialize"));
        LawSpec { kind: "anisotropic-lorentz".into(), params }
    }
}

#[derive(Debug)]
pub struct Region {
    pub label: String,
    pub law: Box<dyn MaterialLaw>,
    pub obstacle: bool,
}

/// Spatially piecewise law: each triangle points at one region.
#[derive(Debug)]
pub struct PermittivityModel {
    pub eps0: f64,
    pub regions: Vec<Region>,
    pub assignment: Vec<usize>,
}

impl PermittivityModel {
    /// Obstacle law on masked triangles, cloak law elsewhere, then each
    /// `(label, member, law)` overlay replaces the cloak law on its triangles.
    pub fn new(
        eps0: f64,
        mask: &ObstacleMask,
        obstacle: Box<dyn MaterialLaw>,
        cloak: Box<dyn MaterialLaw>,
        overlays: Vec<(String, Vec<bool>, Box<dyn MaterialLaw>)>,
    ) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::Config(format!("eps0 must be positive, got {eps0}")));
        }
        let mut regions = vec![
            Region { label: "obstacle".into(), law: obstacle, obstacle: true },
            Region { label: "cloak".into(), law: cloak, obstacle: false },
        ];
        let mut assignment: Vec<usize> = mask.member.iter().map(|&m| if m { 0 } else { 1 }).collect();
        for (label, member, law) in overlays {
            if member.len() != assignment.len() {
                return Err(Error::Dimension(format!("overlay '{label}' has {} entries", member.len())));
            }
            let k = regions.len();
            regions.push(Region { label, law, obstacle: false });
            for (t, &m) in member.iter().enumerate() {
                if m && assignment[t] != 0 {
                    assignment[t] = k;
                }
            }
        }
        let model = PermittivityModel { eps0, regions, assignment };
        model.validate_obstacle()?;
        Ok(model)
    }

    /// Same law everywhere, tagged as cloak.
    pub fn uniform(eps0: f64, n_triangles: usize, law: Box<dyn MaterialLaw>) -> Self {
        PermittivityModel {
            eps0,
            regions: vec![Region { label: "cloak".into(), law, obstacle: false }],
            assignment: vec![0; n_triangles],
        }
    }

    pub fn vacuum(eps0: f64, n_triangles: usize) -> Self {
        Self::uniform(eps0, n_triangles, Box::new(ConstantLaw::new(scalar_tensor(C64::new(eps0, 0.0)))))
    }

    fn validate_obstacle(&self) -> Result<()> {
        for r in self.regions.iter().filter(|r| r.obstacle) {
            if r.law.is_dispersive() {
                continue;
            }
            let t = r.law.high_frequency_limit();
            if t.iter().any(|z| z.im != 0.0) || (t[(0, 1)] - t[(1, 0)]).norm() != 0.0 {
                return Err(Error::Config("non-dispersive obstacle tensor must be real symmetric".into()));
            }
            let lb = eig_herm2(&t)[0];
            if lb < self.eps0 {
                return Err(Error::Config(format!(
                    "obstacle smallest eigenvalue {lb} is below eps0 = {}",
                    self.eps0
                )));
            }
        }
        Ok(())
    }

    pub fn n_triangles(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_obstacle(&self, t: usize) -> bool {
        self.regions[self.assignment[t]].obstacle
    }

    fn used_regions(&self) -> Vec<usize> {
        let mut used = vec![false; self.regions.len()];
        for &r in &self.assignment {
            used[r] = true;
        }
        (0..self.regions.len()).filter(|&r| used[r]).collect()
    }

    pub fn eval_permittivity(&self, triangle: usize, omega: C64) -> Result<Tensor2> {
        let r = *self
            .assignment
            .get(triangle)
            .ok_or_else(|| Error::Input(format!("triangle {triangle} out of range")))?;
        self.regions[r].law.eval(omega)
    }

    /// Per-triangle tensors at `omega`, each region evaluated once.
    pub fn field(&self, omega: C64) -> Result<Vec<Tensor2>> {
        let mut vals = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            vals.push(r.law.eval(omega)?);
        }
        Ok(self.assignment.iter().map(|&r| vals[r]).collect())
    }

    pub fn dispersive_obstacle(&self) -> bool {
        self.regions.iter().any(|r| r.obstacle && r.law.is_dispersive())
    }

    pub fn has_obstacle(&self) -> bool {
        self.used_regions().iter().any(|&r| self.regions[r].obstacle)
    }

    /// Smallest eigenvalue over non-dispersive obstacle tensors.
    pub fn eps_lb(&self) -> Option<f64> {
        let lbs: Vec<f64> = self
            .used_regions()
            .into_iter()
            .filter(|&r| self.regions[r].obstacle && !self.regions[r].law.is_dispersive())
            .map(|r| eig_herm2(&self.regions[r].law.high_frequency_limit())[0])
            .collect();
        if lbs.is_empty() {
            None
        } else {
            Some(lbs.into_iter().fold(f64::INFINITY, f64::min))
        }
    }

    /// Reciprocity flag: every used law yields symmetric tensors.
    pub fn is_reciprocal(&self) -> bool {
        self.used_regions().iter().all(|&r| self.regions[r].law.is_symmetric())
    }

    /// Copy with every obstacle law frozen at its value at `omega0`.
    pub fn frozen_reference(&self, omega0: f64) -> Result<PermittivityModel> {
        let mut regions = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            let law: Box<dyn MaterialLaw> = if r.obstacle {
                Box::new(ConstantLaw::new(r.law.eval(C64::new(omega0, 0.0))?))
            } else {
                clone_law(r.law.as_ref(), self.eps0)?
            };
            regions.push(Region { label: r.label.clone(), law, obstacle: r.obstacle });
        }
        Ok(PermittivityModel { eps0: self.eps0, regions, assignment: self.assignment.clone() })
    }

    pub fn try_clone(&self) -> Result<PermittivityModel> {
        let mut regions = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            regions.push(Region {
                label: r.label.clone(),
                law: clone_law(r.law.as_ref(), self.eps0)?,
                obstacle: r.obstacle,
            });
        }
        Ok(PermittivityModel { eps0: self.eps0, regions, assignment: self.assignment.clone() })
    }

    /// Distinct used region laws with a flag for obstacle membership.
    pub fn used_laws(&self) -> Vec<(&Region, usize)> {
        self.used_regions().into_iter().map(|r| (&self.regions[r], r)).collect()
    }
}

pub fn clone_law(law: &dyn MaterialLaw, eps0: f64) -> Result<Box<dyn MaterialLaw>> {
    build_law(&law.spec(), eps0)
}

/// Log-spaced rectangle of points in the upper half-plane.
pub fn cplus_log_grid(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Vec<C64> {
    let axis = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![a];
        }
        let (la, lb) = (a.ln(), b.ln());
        (0..n).map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp()).collect()
    };
    let xs = axis(re, n_re);
    let ys = axis(im, n_im);
    let mut out = Vec::with_capacity(n_re * n_im);
    for &y in &ys {
        for &x in &xs {
            out.push(C64::new(x, y));
        }
    }
    out
}

/// Minimum over the grid and all used laws of the smallest eigenvalue of
/// `Im[omega eps] - Im(omega) eps0 I`.
pub fn check_passivity(model: &PermittivityModel, grid: &[C64]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for &w in grid {
        if !(w.im > 0.0) {
            return Err(Error::Input(format!("passivity grid point {w} is not in the upper half-plane")));
        }
        for (region, _) in model.used_laws() {
            let e = region.law.eval(w)?;
            let m = imag_part2(&(e * w)) - scalar_tensor(C64::new(w.im * model.eps0, 0.0));
            worst = worst.min(min_eig_herm2(&m));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct LosslessReport {
    pub lossless: bool,
    pub max_imag: f64,
}

/// Spectral norm of `Im[eps]` on cloak laws over a uniform sample of the interval.
pub fn check_lossless(model: &PermittivityModel, interval: (f64, f64), samples: usize) -> Result<LosslessReport> {
    let (a, b) = interval;
    if !(0.0 < a && a < b) {
        return Err(Error::Input(format!("lossless interval needs 0 < a < b, got [{a}, {b}]")));
    }
    let n = samples.max(2);
    let mut max_imag: f64 = 0.0;
    for k in 0..n {
        let w = C64::new(a + (b - a) * k as f64 / (n - 1) as f64, 0.0);
        for (region, _) in model.used_laws() {
            if region.obstacle {
                continue;
            }
            let e = region.law.eval(w)?;
            max_imag = max_imag.max(spectral_norm2(&imag_part2(&e)));
        }
    }
    Ok(LosslessReport { lossless: max_imag <= LOSSLESS_THRESHOLD, max_imag })
}

/// `eps_ob` on the obstacle and `eps0 I` on the cloak.
pub fn epsilon_infinity(model: &PermittivityModel) -> Result<Vec<Tensor2>> {
    if model.dispersive_obstacle() {
        return Err(Error::Input(
            "dispersive obstacle: use the frozen reference model instead of eps_inf".into(),
        ));
    }
    let cloak = scalar_tensor(C64::new(model.eps0, 0.0));
    Ok(model
        .assignment
        .iter()
        .map(|&r| if model.regions[r].obstacle { model.regions[r].law.high_frequency_limit() } else { cloak })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct HighFrequencyReport {
    pub y: Vec<f64>,
    pub deviation: Vec<f64>,
    pub monotone: bool,
    pub passes: bool,
}

pub fn check_high_frequency_limit(model: &PermittivityModel, ys: &[f64]) -> Result<HighFrequencyReport> {
    let cloak_inf = scalar_tensor(C64::new(model.eps0, 0.0));
    let mut deviation = Vec::with_capacity(ys.len());
    for &y in ys {
        let w = C64::new(0.0, y);
        let mut d: f64 = 0.0;
        for (region, _) in model.used_laws() {
            let target = if region.obstacle { region.law.high_frequency_limit() } else { cloak_inf };
            d = d.max(spectral_norm2(&(region.law.eval(w)? - target)));
        }
        deviation.push(d);
    }
    let monotone = deviation.windows(2).all(|p| p[1] <= p[0]);
    let passes = monotone && deviation.last().is_some_and(|&d| d < 1e-6);
    Ok(HighFrequencyReport { y: ys.to_vec(), deviation, monotone, passes })
}

#[derive(Debug, Clone, Serialize)]
pub struct Coercivity {
    pub angle: f64,
    pub c: f64,
    pub certified: bool,
}

/// Best rotation `gamma` on a 1024-point grid for `Im[e^{i gamma} omega eps] >= c I`.
pub fn coercivity_margin(model: &PermittivityModel, omega: C64) -> Result<Coercivity> {
    let tensors: Vec<Tensor2> = model
        .used_laws()
        .iter()
        .map(|(r, _)| r.law.eval(omega).map(|e| e * omega))
        .collect::<Result<_>>()?;
    Ok(coercivity_of(&tensors))
}

pub fn coercivity_of(tensors: &[Tensor2]) -> Coercivity {
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..COERCIVITY_ANGLES {
        let g = 2.0 * PI * k as f64 / COERCIVITY_ANGLES as f64;
        let rot = C64::from_polar(1.0, g);
        let c = tensors
            .iter()
            .map(|t| min_eig_herm2(&imag_part2(&(t * rot))))
            .fold(f64::INFINITY, f64::min);
        if c > best.1 {
            best = (g, c);
        }
    }
    if best.1 > 0.0 {
        Coercivity { angle: best.0, c: best.1, certified: true }
    } else {
        Coercivity { angle: best.0, c: 0.0, certified: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, mark_obstacle, Rect};

    fn lorentz(gamma: f64) -> LorentzLaw {
        LorentzLaw::new(1.0, vec![Pole { wp2: 1.0, w0: 2.0, gamma }]).unwrap()
    }

    #[test]
    fn lorentz_value_below_resonance() {
        let e = lorentz(0.0).eval(C64::new(1.0, 0.0)).unwrap();
        assert!((e[(0, 0)] - C64::new(4.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lorentz_pole_is_rejected() {
        assert!(matches!(lorentz(0.0).eval(C64::new(2.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn registry_builds_all_kinds() {
        let spec: LawSpec = serde_json::from_value(serde_json::json!({
            "type": "lorentz", "poles": [{"wp2": 1.0, "w0": 2.0, "gamma": 0.1}]
        }))
        .unwrap();
        let law = build_law(&spec, 1.0).unwrap();
        assert_eq!(law.kind(), "lorentz");
        let back = build_law(&law.spec(), 1.0).unwrap();
        let w = C64::new(0.7, 0.2);
        assert!((law.eval(w).unwrap() - back.eval(w).unwrap()).norm() == 0.0);
        let bad = LawSpec { kind: "drude-ish".into(), params: Default::default() };
        assert!(build_law(&bad, 1.0).is_err());
    }

    fn two_region_model(cloak: Box<dyn MaterialLaw>) -> PermittivityModel {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let mask = mark_obstacle(&mesh, &[Rect { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 }]).unwrap();
        let ob = Box::new(ConstantLaw::new(scalar_tensor(C64::new(2.0, 0.0))));
        PermittivityModel::new(1.0, &mask, ob, cloak, vec![]).unwrap()
    }

    #[test]
    fn passivity_examples() {
        let grid = cplus_log_grid((0.1, 5.0), (0.1, 5.0), 10, 10);
        let vac = PermittivityModel::vacuum(1.0, 8);
        assert!(check_passivity(&vac, &grid).unwrap().abs() < 1e-15);
        let m = two_region_model(Box::new(lorentz(0.1)));
        assert!(check_passivity(&m, &grid).unwrap() >= -1e-12);
        let neg = PermittivityModel::uniform(1.0, 4, Box::new(ConstantLaw::new(scalar_tensor(C64::new(-4.0, 0.0)))));
        assert!(check_passivity(&neg, &grid).unwrap() < 0.0);
    }

    #[test]
    fn lossless_examples() {
        let m = two_region_model(Box::new(lorentz(0.0)));
        assert!(check_lossless(&m, (0.5, 1.0), 50).unwrap().lossless);
        let lossy = two_region_model(Box::new(lorentz(0.1)));
        let r = check_lossless(&lossy, (0.5, 1.0), 50).unwrap();
        assert!(!r.lossless && r.max_imag > 0.0);
    }

    #[test]
    fn eps_inf_and_high_frequency() {
        let m = two_region_model(Box::new(lorentz(0.1)));
        let inf = epsilon_infinity(&m).unwrap();
        for (t, e) in inf.iter().enumerate() {
            let expect = if m.is_obstacle(t) { 2.0 } else { 1.0 };
            assert_eq!(e[(0, 0)], C64::new(expect, 0.0));
        }
        let r = check_high_frequency_limit(&m, &[10.0, 100.0, 1000.0]).unwrap();
        assert!(r.passes);
        assert!(r.deviation[2] < 2e-6 && r.deviation[2] > 5e-7);
    }

    #[test]
    fn coercivity_examples() {
        let real = two_region_model(Box::new(ConstantLaw::new(scalar_tensor(C64::new(1.5, 0.0)))));
        let c = coercivity_margin(&real, C64::new(1.0, 0.0)).unwrap();
        assert!(c.certified && (c.c - 1.5).abs() < 1e-12);
        assert!((c.angle - PI / 2.0).abs() < 1e-12);
        let vac = PermittivityModel::vacuum(1.0, 3);
        let cv = coercivity_margin(&vac, C64::new(0.0, 1.0)).unwrap();
        assert!((cv.c - 1.0).abs() < 1e-12 && cv.angle == 0.0);
        let neg = two_region_model(Box::new(ConstantLaw::new(scalar_tensor(C64::new(-1.0, 0.0)))));
        assert!(!coercivity_margin(&neg, C64::new(1.0, 0.0)).unwrap().certified);
    }

    #[test]
    fn frozen_reference_matches_at_omega0() {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let mask = mark_obstacle(&mesh, &[Rect { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 }]).unwrap();
        let ob = Box::new(LorentzLaw::new(1.0, vec![Pole { wp2: 2.0, w0: 3.0, gamma: 0.0 }]).unwrap());
        let m = PermittivityModel::new(1.0, &mask, ob, Box::new(lorentz(0.0)), vec![]).unwrap();
        assert!(m.dispersive_obstacle());
        assert!(epsilon_infinity(&m).is_err());
        let r = m.frozen_reference(0.8).unwrap();
        let w = C64::new(0.8, 0.0);
        let (a, b) = (m.field(w).unwrap(), r.field(w).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() == 0.0));
    }

    #[test]
    fn obstacle_below_eps0_is_rejected() {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let mask = mark_obstacle(&mesh, &[Rect { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 }]).unwrap();
        let ob = Box::new(ConstantLaw::new(scalar_tensor(C64::new(0.5, 0.0))));
        let cl = Box::new(ConstantLaw::new(scalar_tensor(C64::new(1.0, 0.0))));
        assert!(PermittivityModel::new(1.0, &mask, ob, cl, vec![]).is_err());
    }
}
