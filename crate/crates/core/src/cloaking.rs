//! The cloaking functional `F(omega) = <(Lambda_eps(omega) - Lambda_eps0) v0, conj v0>`,
//! its high-frequency limit, frequency sweeps and every bound checked on them.
//!
//! Inequalities use an additive tolerance `INEQ_TOL * (|F_inf| + max|F|)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::checks::Status;
use crate::composites::{dtn_route, DtnRoute};
use crate::fem::{BoundaryPotential, DtnOperator};
use crate::geometry::{Mesh, ObstacleMask};
use crate::herglotz::{
    extract_alpha, geometric, heaviside_length, principal_sqrt_cut_positive, uniform_sumrule_on_axis, Domain,
    Extrapolation, SampledFunction,
};
use crate::hodge::{build_hodge_basis, HodgeBasis};
use crate::linalg::{eig_herm2, min_eig_herm2, scalar_tensor, Tensor2};
use crate::materials::{coercivity_margin, epsilon_infinity, PermittivityModel};
use crate::{Error, Result, C64};

pub const INEQ_TOL: f64 = 1e-9;
pub const HERGLOTZ_TOL: f64 = 1e-10;
pub const LOSSLESS_IMAG_TOL: f64 = 1e-12;
pub const TENSOR_TOL: f64 = 1e-12;
/// `y` at which `F(iy)` is compared with `F_inf`.
pub const F_INF_PROBE_Y: f64 = 1e3;
pub const F_INF_PROBE_TOL: f64 = 1e-3;
pub const F_INF_EXTRAPOLATION_TOL: f64 = 1e-4;

pub const NORM_CAVEAT: &str = "operator norms are Euclidean norms of boundary matrices, \
a surrogate for the H^{1/2} -> H^{-1/2} norm; not comparable to eta*";

/// A named boundary potential; `e0` is set for affine potentials `-e0 . x`.
#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub label: String,
    #[serde(skip)]
    pub potential: BoundaryPotential,
    pub e0: Option<[C64; 2]>,
}

impl Probe {
    pub fn affine(mesh: &Mesh, label: &str, e0: [C64; 2]) -> Self {
        Probe { label: label.into(), potential: BoundaryPotential::affine(mesh, e0), e0: Some(e0) }
    }
}

/// Affine `e1`, `e2` probes followed by `n_random` cubic boundary traces.
pub fn default_probes(mesh: &Mesh, n_random: usize, seed: u64, real_only: bool) -> Vec<Probe> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![Probe::affine(mesh, "affine-e1", [one, zero]), Probe::affine(mesh, "affine-e2", [zero, one])];
    let pts = mesh.boundary_points();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n_random {
        let coeffs: Vec<C64> = (0..9)
            .map(|_| {
                let re = rng.gen_range(-1.0..1.0);
                let im = if real_only { 0.0 } else { rng.gen_range(-1.0..1.0) };
                C64::new(re, im)
            })
            .collect();
        let potential = BoundaryPotential::from_fn(mesh, |p| {
            let (x, y) = (p[0] - cx, p[1] - cy);
            let terms = [x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
            terms.iter().zip(&coeffs).map(|(t, c)| c * *t).sum()
        });
        out.push(Probe { label: format!("random-{k}"), potential, e0: None });
    }
    out
}

pub struct CloakProblem {
    pub mesh: Mesh,
    pub mask: Option<ObstacleMask>,
    pub model: PermittivityModel,
    pub interval: (f64, f64),
    pub probes: Vec<Probe>,
    pub eta: Option<f64>,
    pub reciprocal: bool,
    /// Complex probes dropped because the model is not reciprocal.
    pub dropped: Vec<String>,
    route: Box<dyn DtnRoute>,
    basis: Option<HodgeBasis>,
    vacuum: Vec<f64>,
}

impl std::fmt::Debug for CloakProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CloakProblem")
            .field("interval", &self.interval)
            .field("probes", &self.probes.len())
            .field("route", &self.route.name())
            .finish_non_exhaustive()
    }
}

impl CloakProblem {
    pub fn new(
        mesh: Mesh,
        mask: Option<ObstacleMask>,
        model: PermittivityModel,
        interval: (f64, f64),
        probes: Vec<Probe>,
        eta: Option<f64>,
    ) -> Result<Self> {
        let (a, b) = interval;
        if !(0.0 < a && a < b && b.is_finite()) {
            return Err(Error::Config(format!("frequency interval needs 0 < w- < w+, got [{a}, {b}]")));
        }
        if let Some(e) = eta {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("eta must be non-negative, got {e}")));
            }
        }
        if model.n_triangles() != mesh.n_triangles() {
            return Err(Error::Dimension(format!(
                "model covers {} triangles, mesh has {}",
                model.n_triangles(),
                mesh.n_triangles()
            )));
        }
        for p in &probes {
            if p.potential.values.len() != mesh.n_boundary() {
                return Err(Error::Dimension(format!("probe '{}' has the wrong length", p.label)));
            }
        }
        let reciprocal = model.is_reciprocal();
        let (probes, dropped): (Vec<Probe>, Vec<Probe>) =
            probes.into_iter().partition(|p| reciprocal || p.potential.is_real());
        if probes.is_empty() {
            return Err(Error::Config("no admissible boundary potential left".into()));
        }
        let mut problem = CloakProblem {
            mesh,
            mask,
            model,
            interval,
            probes,
            eta,
            reciprocal,
            dropped: dropped.into_iter().map(|p| p.label).collect(),
            route: dtn_route("fem-schur")?,
            basis: None,
            vacuum: vec![],
        };
        problem.vacuum = problem.vacuum_forms()?;
        Ok(problem)
    }

    /// Switches the DtN route, building the Hodge basis when the route needs it.
    pub fn with_route(mut self, name: &str) -> Result<Self> {
        self.route = dtn_route(name)?;
        if name == "effective-lift" && self.basis.is_none() {
            self.basis = Some(build_hodge_basis(&self.mesh)?);
        }
        self.vacuum = self.vacuum_forms()?;
        Ok(self)
    }

    /// `(Lambda_eps(omega), Lambda_eps0)` through the active route.
    pub fn dtn_pair(&self, omega: C64) -> Result<(DtnOperator, DtnOperator)> {
        let vac_field = vec![scalar_tensor(C64::new(self.model.eps0, 0.0)); self.mesh.n_triangles()];
        let basis = self.basis.as_ref();
        let le = self.route.dtn(&self.mesh, basis, &self.model.field(omega)?)?;
        let lv = self.route.dtn(&self.mesh, basis, &vac_field)?;
        Ok((le, lv))
    }

    pub fn route_name(&self) -> &'static str {
        self.route.name()
    }

    fn vacuum_forms(&self) -> Result<Vec<f64>> {
        let field = vec![scalar_tensor(C64::new(self.model.eps0, 0.0)); self.mesh.n_triangles()];
        Ok(self.forms(&field)?.into_iter().map(|z| z.re).collect())
    }

    fn forms(&self, field: &[Tensor2]) -> Result<Vec<C64>> {
        let pots: Vec<&BoundaryPotential> = self.probes.iter().map(|p| &p.potential).collect();
        self.route.forms(&self.mesh, self.basis.as_ref(), field, &pots)
    }

    /// `G_vac = <Lambda_eps0 v0, conj v0>` per probe.
    pub fn g_vac(&self) -> &[f64] {
        &self.vacuum
    }

    /// `F(omega)` for every probe.
    pub fn evaluate(&self, omega: C64) -> Result<Vec<C64>> {
        evaluate_model(self, &self.model, omega)
    }

    pub fn evaluate_f(&self, probe: usize, omega: C64) -> Result<C64> {
        self.evaluate(omega)?
            .get(probe)
            .copied()
            .ok_or_else(|| Error::Input(format!("probe index {probe} out of range")))
    }

    /// `F_inf` per probe from `eps_inf` directly.
    pub fn f_infinity(&self) -> Result<Vec<f64>> {
        f_infinity_of(self, &self.model)
    }

    /// `(|O|, |Omega \ O|)` when an obstacle is marked.
    pub fn volumes(&self) -> Option<(f64, f64)> {
        self.mask.as_ref().map(|m| (m.volume_obstacle, m.volume_cloak))
    }

    /// Lower bound on `F_inf` for an affine probe.
    pub fn f_infinity_bound(&self, probe: usize) -> Option<f64> {
        let e0 = self.probes.get(probe)?.e0?;
        let (vo, vc) = self.volumes()?;
        let lb = self.model.eps_lb()?;
        f_infinity_lower_bound(vo, vc, lb, self.model.eps0, vo + vc, e0).ok()
    }

    pub fn eta_lim(&self) -> Option<f64> {
        let (vo, vc) = self.volumes()?;
        eta_lim(vo, vc, self.model.eps_lb()?, self.model.eps0).ok()
    }
}

fn tag_omega(e: Error, omega: C64) -> Error {
    match e {
        Error::Singular { pivot, n, .. } => Error::Singular { omega: format!("{omega}"), pivot, n },
        other => other,
    }
}

fn evaluate_model(problem: &CloakProblem, model: &PermittivityModel, omega: C64) -> Result<Vec<C64>> {
    if omega.im < 0.0 || omega.norm() == 0.0 {
        return Err(Error::Input(format!("omega = {omega} is outside C+ and the positive axis")));
    }
    if !coercivity_margin(model, omega)?.certified {
        return Err(Error::Input(format!("model is not coercivity-certified at omega = {omega}")));
    }
    let field = model.field(omega)?;
    let forms = problem.forms(&field).map_err(|e| tag_omega(e, omega))?;
    Ok(forms.iter().zip(&problem.vacuum).map(|(f, g)| f - g).collect())
}

fn f_infinity_of(problem: &CloakProblem, model: &PermittivityModel) -> Result<Vec<f64>> {
    let field = epsilon_infinity(model)?;
    let forms = problem.forms(&field)?;
    Ok(forms.iter().zip(&problem.vacuum).map(|(f, g)| f.re - g).collect())
}

/// `|O| (1 - eps0/eps) eps0 |Omega| |e0|^2 / (|O| eps0/eps + |Omega \ O|)`.
pub fn f_infinity_lower_bound(
    vol_obstacle: f64,
    vol_cloak: f64,
    eps_lb: f64,
    eps0: f64,
    vol_total: f64,
    e0: [C64; 2],
) -> Result<f64> {
    if !(vol_obstacle > 0.0 && vol_cloak > 0.0 && vol_total > 0.0) {
        return Err(Error::Input("volumes must be positive".into()));
    }
    if !(eps0 > 0.0 && eps_lb >= eps0) {
        return Err(Error::Input(format!("need eps_lb >= eps0 > 0, got eps_lb = {eps_lb}, eps0 = {eps0}")));
    }
    let r = eps0 / eps_lb;
    let e2 = e0[0].norm_sqr() + e0[1].norm_sqr();
    Ok(vol_obstacle * (1.0 - r) * eps0 * vol_total * e2 / (vol_obstacle * r + vol_cloak))
}

/// `(1 - eps0/eps) |O| / (|O| eps0/eps + |Omega \ O|)`.
pub fn eta_lim(vol_obstacle: f64, vol_cloak: f64, eps_lb: f64, eps0: f64) -> Result<f64> {
    if !(vol_obstacle > 0.0 && vol_cloak > 0.0) {
        return Err(Error::Input("volumes must be positive".into()));
    }
    if !(eps0 > 0.0 && eps_lb >= eps0) {
        return Err(Error::Input(format!("need eps_lb >= eps0 > 0, got eps_lb = {eps_lb}, eps0 = {eps0}")));
    }
    let r = eps0 / eps_lb;
    Ok((1.0 - r) * vol_obstacle / (vol_obstacle * r + vol_cloak))
}

#[derive(Debug, Clone, Serialize)]
pub struct FInfinityCheck {
    pub value: f64,
    pub at_y: f64,
    pub value_at_y: f64,
    pub rel_at_y: f64,
    pub extrapolated: Extrapolation,
    pub rel_extrapolated: f64,
    pub status: Status,
}

/// Compares `F_inf` with `Re F(iy)` at `y = 1e3` and with the Richardson
/// limit of `Re F(iy)` along a geometric sequence of `y`.
pub fn f_infinity_cross_check(problem: &CloakProblem, probe: usize) -> Result<FInfinityCheck> {
    let f_inf = *problem
        .f_infinity()?
        .get(probe)
        .ok_or_else(|| Error::Input(format!("probe index {probe} out of range")))?;
    let floor = 1e-12 * problem.g_vac()[probe].abs().max(f64::MIN_POSITIVE);
    let rel = |v: f64| {
        let d = (v - f_inf).abs();
        if d <= floor {
            0.0
        } else {
            d / f_inf.abs().max(floor)
        }
    };
    let value_at_y = problem.evaluate_f(probe, C64::new(0.0, F_INF_PROBE_Y))?.re;
    let h = omega_f(problem, probe);
    let extrapolated = extract_alpha(&h, &geometric(62.5, 2.0, 5))?;
    let (rel_at_y, rel_extrapolated) = (rel(value_at_y), rel(extrapolated.value));
    Ok(FInfinityCheck {
        value: f_inf,
        at_y: F_INF_PROBE_Y,
        value_at_y,
        rel_at_y,
        rel_extrapolated,
        extrapolated,
        status: Status::from_bool(rel_at_y <= F_INF_PROBE_TOL && rel_extrapolated <= F_INF_EXTRAPOLATION_TOL),
    })
}

/// `omega -> omega F(omega)` for one probe, as an evaluable function.
fn omega_f(problem: &CloakProblem, probe: usize) -> SampledFunction {
    let values = std::sync::Arc::new(ProbeEvaluator::new(problem, probe));
    SampledFunction::new(Domain::UpperHalfPlane, move |z| values.eval(z).map(|f| z * f))
}

/// Owned copy of what a single-probe evaluation needs, so it can live inside
/// a `'static` closure.
struct ProbeEvaluator {
    mesh: Mesh,
    model: PermittivityModel,
    potential: BoundaryPotential,
    vacuum: f64,
}

impl ProbeEvaluator {
    fn new(problem: &CloakProblem, probe: usize) -> Self {
        ProbeEvaluator {
            mesh: problem.mesh.clone(),
            model: problem.model.try_clone().expect("registered laws round-trip through their spec"),
            potential: problem.probes[probe].potential.clone(),
            vacuum: problem.vacuum[probe],
        }
    }

    fn eval(&self, omega: C64) -> Result<C64> {
        let field = self.model.field(omega)?;
        let sys = crate::fem::assemble(&self.mesh, &field)?.with_omega(omega);
        Ok(sys.factor()?.quadratic_form(&self.potential)? - self.vacuum)
    }
}

/// Runs `f` over `items` on a pool of `jobs` threads, keeping input order.
pub fn parallel_map<T: Sync, U: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Inserts `w` into a sorted grid unless a point within `1e-12` already exists.
pub fn with_point(grid: &[f64], w: f64) -> Vec<f64> {
    let mut out = grid.to_vec();
    if !out.iter().any(|x| (x - w).abs() <= 1e-12 * w.abs().max(1.0)) {
        out.push(w);
        out.sort_by(|a, b| a.total_cmp(b));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub omegas: Vec<f64>,
    pub labels: Vec<String>,
    /// `values[probe][k] = F(omegas[k])`.
    pub values: Vec<Vec<C64>>,
    /// `None` when the obstacle is dispersive.
    pub f_inf: Vec<Option<f64>>,
    pub g_vac: Vec<f64>,
    pub interval: (f64, f64),
}

/// `F` on a real grid, one factorization per frequency, frequencies in parallel.
pub fn sweep(problem: &CloakProblem, omegas: &[f64], jobs: usize) -> Result<SweepResult> {
    sweep_model(problem, &problem.model, omegas, jobs)
}

fn sweep_model(problem: &CloakProblem, model: &PermittivityModel, omegas: &[f64], jobs: usize) -> Result<SweepResult> {
    if omegas.is_empty() || omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("sweep grid must be non-empty and strictly increasing".into()));
    }
    let rows = parallel_map(jobs, omegas, |&w| evaluate_model(problem, model, C64::new(w, 0.0)))?;
    let np = problem.probes.len();
    let values = (0..np).map(|p| rows.iter().map(|r| r[p]).collect()).collect();
    let f_inf = if model.dispersive_obstacle() {
        vec![None; np]
    } else {
        f_infinity_of(problem, model)?.into_iter().map(Some).collect()
    };
    Ok(SweepResult {
        omegas: omegas.to_vec(),
        labels: problem.probes.iter().map(|p| p.label.clone()).collect(),
        values,
        f_inf,
        g_vac: problem.g_vac().to_vec(),
        interval: problem.interval,
    })
}

impl SweepResult {
    pub fn series(&self, probe: usize) -> Result<Series> {
        let f_inf = self
            .f_inf
            .get(probe)
            .ok_or_else(|| Error::Input(format!("probe index {probe} out of range")))?
            .ok_or_else(|| Error::Input("dispersive obstacle: F_inf is taken from the frozen reference".into()))?;
        Ok(Series {
            label: self.labels[probe].clone(),
            omegas: self.omegas.clone(),
            values: self.values[probe].clone(),
            f_inf,
            g_vac: self.g_vac[probe],
        })
    }

    /// `(x, H(x))` with `x = omega^2`, `H = x F(sqrt x)`.
    pub fn h_values(&self, probe: usize) -> (Vec<f64>, Vec<C64>) {
        h_of(&self.omegas, &self.values[probe])
    }
}

fn h_of(omegas: &[f64], values: &[C64]) -> (Vec<f64>, Vec<C64>) {
    let xs: Vec<f64> = omegas.iter().map(|w| w * w).collect();
    let hs = xs.iter().zip(values).map(|(x, f)| f * *x).collect();
    (xs, hs)
}

/// `F` for one potential on a real grid, with its limit and vacuum form.
#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub label: String,
    pub omegas: Vec<f64>,
    pub values: Vec<C64>,
    pub f_inf: f64,
    pub g_vac: f64,
}

impl Series {
    /// `F = F_inf - omega0^2 (F_inf - f0) / omega^2`.
    pub fn drude(omegas: &[f64], f_inf: f64, omega0: f64, f0: f64, g_vac: f64) -> Self {
        let values = omegas
            .iter()
            .map(|w| C64::new(f_inf - omega0 * omega0 * (f_inf - f0) / (w * w), 0.0))
            .collect();
        Series { label: "drude".into(), omegas: omegas.to_vec(), values, f_inf, g_vac }
    }

    pub fn scale(&self) -> f64 {
        self.f_inf.abs() + self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn tol(&self) -> f64 {
        INEQ_TOL * self.scale()
    }

    pub fn h_values(&self) -> (Vec<f64>, Vec<C64>) {
        h_of(&self.omegas, &self.values)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    fn index_of(&self, omega0: f64) -> Result<usize> {
        self.omegas
            .iter()
            .position(|w| (w - omega0).abs() <= 1e-12 * omega0.abs().max(1.0))
            .ok_or_else(|| Error::Input(format!("omega0 = {omega0} is not a grid point")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HerglotzMargins {
    pub label: String,
    /// `min Im <Lambda_{omega eps} v0, conj v0>`.
    pub min_im_form: f64,
    /// `min Im[omega F(omega)]`.
    pub min_im_omega_f: f64,
    pub worst_omega: C64,
    /// `max |Im <Lambda_{omega eps0} v0, conj v0> - Im(omega) G_vac|`.
    pub vacuum_identity: f64,
    pub status: Status,
}

/// Samples the quadratic-form Herglotz criterion on a grid in `C+`.
pub fn check_herglotz_structure(problem: &CloakProblem, grid: &[C64], jobs: usize) -> Result<Vec<HerglotzMargins>> {
    if let Some(w) = grid.iter().find(|w| !(w.im > 0.0)) {
        return Err(Error::Input(format!("grid point {w} is not in the upper half-plane")));
    }
    let rows = parallel_map(jobs, grid, |&w| problem.evaluate(w))?;
    let mut out = Vec::with_capacity(problem.probes.len());
    for (p, probe) in problem.probes.iter().enumerate() {
        let g = problem.vacuum[p];
        let (mut min_form, mut min_wf, mut worst, mut vac) = (f64::INFINITY, f64::INFINITY, grid[0], 0.0_f64);
        for (w, row) in grid.iter().zip(&rows) {
            let wf = w * row[p];
            let vacuum_form = w * g;
            min_form = min_form.min((wf + vacuum_form).im);
            if wf.im < min_wf {
                min_wf = wf.im;
                worst = *w;
            }
            vac = vac.max((vacuum_form.im - w.im * g).abs());
        }
        out.push(HerglotzMargins {
            label: probe.label.clone(),
            min_im_form: min_form,
            min_im_omega_f: min_wf,
            worst_omega: worst,
            vacuum_identity: vac,
            status: Status::from_bool(min_form >= -HERGLOTZ_TOL && min_wf >= -HERGLOTZ_TOL),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub label: String,
    /// `min over pairs w0 <= w of w^2 (F(w) - F_inf) - w0^2 (F(w0) - F_inf)`.
    pub pairwise_min: f64,
    pub pairwise_max_abs: f64,
    pub consecutive_min: f64,
    pub worst_pair: (f64, f64),
    pub max_imag: f64,
    pub tol: f64,
    pub status: Status,
}

pub fn check_lossless_monotonicity(series: &Series) -> MonotonicityReport {
    let g: Vec<f64> = series
        .omegas
        .iter()
        .zip(&series.values)
        .map(|(w, f)| w * w * (f.re - series.f_inf))
        .collect();
    let n = g.len();
    let (mut min, mut max_abs, mut worst) = (f64::INFINITY, 0.0_f64, (series.omegas[0], series.omegas[0]));
    for i in 0..n {
        for j in i + 1..n {
            let m = g[j] - g[i];
            max_abs = max_abs.max(m.abs());
            if m < min {
                min = m;
                worst = (series.omegas[i], series.omegas[j]);
            }
        }
    }
    if n < 2 {
        min = 0.0;
    }
    let consecutive_min = g.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let tol = series.tol();
    let max_imag = series.max_imag();
    MonotonicityReport {
        label: series.label.clone(),
        pairwise_min: min,
        pairwise_max_abs: max_abs,
        consecutive_min: if n < 2 { 0.0 } else { consecutive_min },
        worst_pair: worst,
        max_imag,
        tol,
        status: Status::from_bool(min >= -tol && max_imag <= LOSSLESS_IMAG_TOL * series.scale().max(1.0)),
    }
}

/// `[lo, hi)` below `omega0` where `F < 0` is forced, and `(lo, hi]` above where `F > 0` is.
#[derive(Debug, Clone, Serialize)]
pub struct ExclusionWindows {
    /// `eta_lim` for affine probes, `F_inf / G_vac` otherwise.
    pub eta_ref: f64,
    pub source: &'static str,
    pub below: Option<(f64, f64)>,
    pub above: Option<(f64, f64)>,
    pub vacuous: bool,
    /// Grid points in a window whose sign contradicts the forced sign.
    pub sign_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxBoundsReport {
    pub label: String,
    pub omega0: f64,
    pub eta: f64,
    /// `|F(omega0)| / G_vac` for this probe.
    pub own_ratio: f64,
    pub min_margin: f64,
    pub max_margin: f64,
    pub worst_omega: f64,
    pub windows: Option<ExclusionWindows>,
    pub tol: f64,
    pub status: Status,
    pub note: Option<String>,
}

/// Upper envelope below `omega0` and lower envelope above it.
pub fn approx_envelope(f_inf: f64, g: f64, eta: f64, omega0: f64, w: f64) -> f64 {
    let (w2, w02) = (w * w, omega0 * omega0);
    if w <= omega0 {
        (-f_inf + eta * g) * (w02 - w2) / w2 + eta * g
    } else {
        (f_inf + eta * g) * (w2 - w02) / w2 - eta * g
    }
}

pub fn exclusion_windows(interval: (f64, f64), omega0: f64, eta: f64, eta_ref: f64) -> (Option<(f64, f64)>, Option<(f64, f64)>) {
    if !(eta_ref > 0.0) || eta >= eta_ref {
        return (None, None);
    }
    let lo = (1.0 - eta / eta_ref).sqrt() * omega0;
    let hi = (1.0 + eta / eta_ref).sqrt() * omega0;
    let below = (interval.0 < lo).then_some((interval.0, lo));
    let above = (hi < interval.1).then_some((hi, interval.1));
    (below, above)
}

/// Lossless bounds around an approximately cloaked `omega0`. The premise is
/// the probe's own `|F(omega0)| <= eta G_vac`; `eta_lim` feeds the exclusion
/// windows for affine probes.
pub fn check_approximate_cloaking_bounds(
    series: &Series,
    omega0: f64,
    eta: f64,
    eta_lim: Option<f64>,
    interval: (f64, f64),
) -> Result<ApproxBoundsReport> {
    let i0 = series.index_of(omega0)?;
    let g = series.g_vac;
    let tol = series.tol();
    let own_ratio = if g > 0.0 { series.values[i0].norm() / g } else { f64::INFINITY };
    let mut report = ApproxBoundsReport {
        label: series.label.clone(),
        omega0,
        eta,
        own_ratio,
        min_margin: f64::NAN,
        max_margin: f64::NAN,
        worst_omega: omega0,
        windows: None,
        tol,
        status: Status::SkippedPremise,
        note: None,
    };
    if !(g > 0.0) {
        report.note = Some("G_vac = 0 for this potential".into());
        return Ok(report);
    }
    if series.values[i0].norm() > eta * g + tol {
        report.note = Some(format!("premise fails: |F(omega0)| / G_vac = {own_ratio:.6e} > eta = {eta:.6e}"));
        return Ok(report);
    }
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (w, f) in series.omegas.iter().zip(&series.values) {
        let env = approx_envelope(series.f_inf, g, eta, omega0, *w);
        let m = if *w <= omega0 { env - f.re } else { f.re - env };
        if m < min {
            min = m;
            report.worst_omega = *w;
        }
        max = max.max(m);
    }
    report.min_margin = min;
    report.max_margin = max;
    let (eta_ref, source) = match eta_lim {
        Some(e) => (e, "eta_lim"),
        None => (series.f_inf / g, "F_inf/G_vac"),
    };
    let (below, above) = exclusion_windows(interval, omega0, eta, eta_ref);
    let mut sign_violations = 0;
    for (w, f) in series.omegas.iter().zip(&series.values) {
        if below.is_some_and(|(a, b)| *w >= a && *w < b) && f.re >= tol {
            sign_violations += 1;
        }
        if above.is_some_and(|(a, b)| *w > a && *w <= b) && f.re <= -tol {
            sign_violations += 1;
        }
    }
    report.windows = Some(ExclusionWindows {
        eta_ref,
        source,
        below,
        above,
        vacuous: below.is_none() && above.is_none(),
        sign_violations,
    });
    report.status = Status::from_bool(min >= -tol && sign_violations == 0);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LossyReport {
    pub label: String,
    pub range: (f64, f64),
    /// `(1/4) (w+^2 - w-^2) F_inf`.
    pub lhs: f64,
    pub max_w2f: f64,
    pub argmax: f64,
    pub margin: f64,
    /// Same inequality with the `F_inf` lower bound substituted.
    pub lhs_lower_bound: Option<f64>,
    pub tol: f64,
    pub status: Status,
}

/// `(1/4)(w+^2 - w-^2) F_inf <= max |w^2 F|` over grid points in `range`
/// (the whole grid when `None`); endpoints are the extreme grid points used.
pub fn check_lossy_bound(series: &Series, range: Option<(f64, f64)>, f_inf_lb: Option<f64>) -> Result<LossyReport> {
    let (a, b) = range.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, C64)> = series
        .omegas
        .iter()
        .zip(&series.values)
        .filter(|(w, _)| **w >= a - 1e-12 && **w <= b + 1e-12)
        .map(|(w, f)| (*w, *f))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Input(format!("fewer than two grid points in [{a}, {b}]")));
    }
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    let (mut max, mut argmax) = (0.0, lo);
    for (w, f) in &pts {
        let v = (f * (w * w)).norm();
        if v > max {
            max = v;
            argmax = *w;
        }
    }
    let width = 0.25 * (hi * hi - lo * lo);
    let lhs = width * series.f_inf;
    let tol = series.tol();
    let lhs_lower_bound = f_inf_lb.map(|lb| width * lb);
    let margin = max - lhs;
    let ok = margin >= -tol && lhs_lower_bound.is_none_or(|l| max - l >= -tol);
    Ok(LossyReport {
        label: series.label.clone(),
        range: (lo, hi),
        lhs,
        max_w2f: max,
        argmax,
        margin,
        lhs_lower_bound,
        tol,
        status: if series.f_inf > 0.0 { Status::from_bool(ok) } else { Status::SkippedPremise },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub label: String,
    pub omega0: f64,
    pub f0: C64,
    pub premise: bool,
    /// `max |d/dw [w^2 F]|` by finite differences.
    pub max_deriv: f64,
    pub lhs_max: f64,
    /// `2 omega0 |F'(omega0)|`.
    pub point_bound: f64,
    pub margin_max: f64,
    pub margin_point: f64,
    /// Difference between centered and one-sided estimates, a truncation proxy.
    pub fd_error: f64,
    pub status: Status,
    pub note: Option<String>,
}

/// Finite-difference derivative bounds at a zero `omega0` of `F`.
pub fn check_derivative_bound(series: &Series, omega0: f64) -> Result<DerivativeReport> {
    let i0 = series.index_of(omega0)?;
    let (w, f) = (&series.omegas, &series.values);
    let n = w.len();
    if n < 3 {
        return Err(Error::Input("derivative check needs at least three grid points".into()));
    }
    let f0 = f[i0];
    let resolution = [i0.checked_sub(1), (i0 + 1 < n).then_some(i0 + 1)]
        .iter()
        .flatten()
        .map(|&j| (f[j] - f0).norm())
        .fold(0.0, f64::max);
    let mut report = DerivativeReport {
        label: series.label.clone(),
        omega0,
        f0,
        premise: f0.norm() <= resolution,
        max_deriv: f64::NAN,
        lhs_max: f64::NAN,
        point_bound: f64::NAN,
        margin_max: f64::NAN,
        margin_point: f64::NAN,
        fd_error: f64::NAN,
        status: Status::SkippedPremise,
        note: None,
    };
    if !report.premise {
        report.note = Some(format!(
            "premise fails: |F(omega0)| = {:.6e} exceeds the local grid increment {resolution:.6e}",
            f0.norm()
        ));
        return Ok(report);
    }
    let g: Vec<C64> = w.iter().zip(f).map(|(w, f)| f * (w * w)).collect();
    let diff = |v: &[C64], k: usize| -> (C64, C64) {
        if k == 0 {
            let d = (v[1] - v[0]) / (w[1] - w[0]);
            (d, d)
        } else if k == n - 1 {
            let d = (v[n - 1] - v[n - 2]) / (w[n - 1] - w[n - 2]);
            (d, d)
        } else {
            let c = (v[k + 1] - v[k - 1]) / (w[k + 1] - w[k - 1]);
            let fwd = (v[k + 1] - v[k]) / (w[k + 1] - w[k]);
            (c, fwd)
        }
    };
    let mut max_deriv: f64 = 0.0;
    let mut fd_error: f64 = 0.0;
    for k in 0..n {
        let (c, o) = diff(&g, k);
        max_deriv = max_deriv.max(c.norm());
        fd_error = fd_error.max((c - o).norm());
    }
    let (fp, fp_alt) = diff(f, i0);
    let point_bound = 2.0 * omega0 * fp.norm();
    let lhs_max = 0.25 * (w[0] + w[n - 1]) * series.f_inf;
    let tol = series.tol();
    report.max_deriv = max_deriv;
    report.lhs_max = lhs_max;
    report.point_bound = point_bound;
    report.margin_max = max_deriv - lhs_max;
    report.margin_point = point_bound - series.f_inf;
    report.fd_error = fd_error.max(2.0 * omega0 * (fp - fp_alt).norm());
    report.status = Status::from_bool(report.margin_max >= -tol && report.margin_point >= -tol);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SumRuleReport {
    pub label: String,
    pub delta: f64,
    pub x_range: (f64, f64),
    /// `|{x : |H(x)| <= delta}|`.
    pub heaviside_length: f64,
    /// `4 delta / F_inf`.
    pub length_bound: f64,
    pub ratio: f64,
    /// `(1/pi) int Im H_mu` from the boundary values on the axis.
    pub integral: f64,
    /// `1 / F_inf`.
    pub integral_bound: f64,
    pub vacuous: bool,
    pub status: Status,
}

/// `H = x F(sqrt x)` on `[w-^2, w+^2]` against the uniform-measure sum rule.
/// `delta = None` takes `max |H|` on the grid.
pub fn build_h_and_sumrule(series: &Series, delta: Option<f64>) -> Result<SumRuleReport> {
    let (xs, hs) = series.h_values();
    if let Some(d) = delta {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("sum-rule delta must be positive and finite, got {d}")));
        }
    }
    let delta = delta.unwrap_or_else(|| hs.iter().map(|h| h.norm()).fold(0.0, f64::max));
    let x_range = (xs[0], xs[xs.len() - 1]);
    let mut report = SumRuleReport {
        label: series.label.clone(),
        delta,
        x_range,
        heaviside_length: f64::NAN,
        length_bound: f64::INFINITY,
        ratio: f64::NAN,
        integral: f64::NAN,
        integral_bound: f64::INFINITY,
        vacuous: true,
        status: Status::SkippedPremise,
    };
    if !(series.f_inf > 0.0 && delta > 0.0) {
        return Ok(report);
    }
    let length = heaviside_length(&xs, &hs, delta)?;
    let integral = uniform_sumrule_on_axis(&xs, &hs, delta)?;
    report.heaviside_length = length;
    report.length_bound = 4.0 * delta / series.f_inf;
    report.ratio = length / report.length_bound;
    report.integral = integral;
    report.integral_bound = 1.0 / series.f_inf;
    report.vacuous = report.length_bound >= x_range.1 - x_range.0;
    let tol = INEQ_TOL * (1.0 + report.length_bound);
    let ok = length <= report.length_bound + tol
        && integral <= report.integral_bound + INEQ_TOL * (1.0 + report.integral_bound)
        && length <= 4.0 * delta * integral + tol;
    report.status = Status::from_bool(ok);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersiveReport {
    pub omega0: f64,
    /// Smallest eigenvalue of the obstacle tensor over the grid.
    pub eps_min: f64,
    pub hypothesis: bool,
    /// `min eig` of `eps(w0) - eps(w)` below and `eps(w) - eps(w0)` above `omega0`.
    pub tensor_margin: f64,
    /// `min eig d eps / d omega` over the grid.
    pub derivative_margin: f64,
    /// Ordering `F <= F_ref` below and `F >= F_ref` above `omega0`, per probe.
    pub ordering_margins: Vec<f64>,
    pub match_at_omega0: f64,
    pub reference_f_inf: Vec<f64>,
    pub reference_bounds: Vec<ApproxBoundsReport>,
    pub status: Status,
    pub note: Option<String>,
}

/// Compares a lossless dispersive obstacle with its reference frozen at `omega0`.
pub fn dispersive_obstacle_check(
    problem: &CloakProblem,
    omega0: f64,
    omegas: &[f64],
    eta: f64,
    jobs: usize,
) -> Result<DispersiveReport> {
    if !problem.model.dispersive_obstacle() {
        return Err(Error::Input("model has no dispersive obstacle".into()));
    }
    let omegas = with_point(omegas, omega0);
    let obstacle_laws: Vec<_> = problem.model.used_laws().into_iter().filter(|(r, _)| r.obstacle).collect();
    let mut eps_min = f64::INFINITY;
    let mut symmetric_real = true;
    let mut tensor_margin = f64::INFINITY;
    let mut derivative_margin = f64::INFINITY;
    for (region, _) in &obstacle_laws {
        let e0 = region.law.eval(C64::new(omega0, 0.0))?;
        for &w in &omegas {
            let e = region.law.eval(C64::new(w, 0.0))?;
            symmetric_real &= e.iter().all(|z| z.im.abs() <= TENSOR_TOL) && (e[(0, 1)] - e[(1, 0)]).norm() <= TENSOR_TOL;
            eps_min = eps_min.min(eig_herm2(&e)[0]);
            let d = if w <= omega0 { e0 - e } else { e - e0 };
            tensor_margin = tensor_margin.min(min_eig_herm2(&d));
            derivative_margin = derivative_margin.min(min_eig_herm2(&region.law.d_domega(w)?));
        }
    }
    let lossless = crate::materials::check_lossless(&problem.model, problem.interval, omegas.len())?.lossless;
    let hypothesis = symmetric_real && eps_min > problem.model.eps0 && lossless;
    let mut report = DispersiveReport {
        omega0,
        eps_min,
        hypothesis,
        tensor_margin,
        derivative_margin,
        ordering_margins: vec![],
        match_at_omega0: f64::NAN,
        reference_f_inf: vec![],
        reference_bounds: vec![],
        status: Status::SkippedPremise,
        note: None,
    };
    if !hypothesis {
        report.note = Some(format!(
            "obstacle hypothesis fails: real symmetric = {symmetric_real}, eps_min = {eps_min:.6e}, lossless cloak = {lossless}"
        ));
        return Ok(report);
    }
    if tensor_margin < -TENSOR_TOL {
        report.status = Status::Fail;
        report.note = Some("tensor monotonicity fails, bounds skipped".into());
        return Ok(report);
    }
    let reference = problem.model.frozen_reference(omega0)?;
    let actual = sweep_model(problem, &problem.model, &omegas, jobs)?;
    let frozen = sweep_model(problem, &reference, &omegas, jobs)?;
    let mut ok = true;
    let mut match_at = 0.0_f64;
    for p in 0..problem.probes.len() {
        let mut m = f64::INFINITY;
        let mut scale: f64 = 0.0;
        for (k, &w) in omegas.iter().enumerate() {
            let (f, r) = (actual.values[p][k].re, frozen.values[p][k].re);
            scale = scale.max(f.abs()).max(r.abs());
            m = m.min(if w <= omega0 { r - f } else { f - r });
            if (w - omega0).abs() <= 1e-12 * omega0 {
                match_at = match_at.max((actual.values[p][k] - frozen.values[p][k]).norm());
            }
        }
        let series = frozen.series(p)?;
        ok &= m >= -INEQ_TOL * (series.f_inf.abs() + scale);
        report.ordering_margins.push(m);
        report.reference_f_inf.push(series.f_inf);
        let eta_lim = if problem.probes[p].e0.is_some() { problem.eta_lim() } else { None };
        let b = check_approximate_cloaking_bounds(&series, omega0, eta, eta_lim, problem.interval)?;
        ok &= b.status != Status::Fail;
        report.reference_bounds.push(b);
    }
    report.match_at_omega0 = match_at;
    report.status = Status::from_bool(ok);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Certified,
    Unavailable,
    VacuumConsistent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpossibilityEntry {
    pub label: String,
    pub f_inf: f64,
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpossibilityCertificate {
    pub entries: Vec<ImpossibilityEntry>,
    /// `max |F|` over the sampled frequencies.
    pub max_abs_f: f64,
    pub status: CertificateStatus,
    pub message: String,
}

/// `F_inf > 0` for an affine probe rules out `F = 0` on the whole interval.
pub fn impossibility_certificate(problem: &CloakProblem, samples: &[f64]) -> Result<ImpossibilityCertificate> {
    let f_inf = problem.f_infinity()?;
    let mut entries = vec![];
    let mut certified = false;
    for (p, probe) in problem.probes.iter().enumerate() {
        if probe.e0.is_none() {
            continue;
        }
        let lower_bound = problem.f_infinity_bound(p);
        certified |= lower_bound.is_some_and(|lb| lb > 0.0 && f_inf[p] >= lb - INEQ_TOL * lb.max(1.0));
        entries.push(ImpossibilityEntry { label: probe.label.clone(), f_inf: f_inf[p], lower_bound });
    }
    let mut max_abs_f: f64 = 0.0;
    for &w in samples {
        for v in problem.evaluate(C64::new(w, 0.0))? {
            max_abs_f = max_abs_f.max(v.norm());
        }
    }
    let g = problem.g_vac().iter().cloned().fold(0.0, f64::max);
    let (status, message) = if certified {
        (
            CertificateStatus::Certified,
            "identically-zero F would force F_inf = 0, contradicting the certified bound".to_string(),
        )
    } else if max_abs_f <= 1e-12 * g.max(1.0) && f_inf.iter().all(|v| v.abs() <= 1e-12 * g.max(1.0)) {
        (
            CertificateStatus::VacuumConsistent,
            "F = 0 at every sample and F_inf = 0: consistent, no contradiction claimed".to_string(),
        )
    } else {
        (
            CertificateStatus::Unavailable,
            "no affine probe with a positive F_inf lower bound (eps_lb = eps0 or no obstacle)".to_string(),
        )
    };
    Ok(ImpossibilityCertificate { entries, max_abs_f, status, message })
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxCertificate {
    pub omega0: f64,
    pub eta_star: f64,
    pub ratios: Vec<(String, f64)>,
    /// `||Lambda_eps - Lambda_eps0|| / (2 ||Lambda_eps0||)` in the Euclidean surrogate.
    pub surrogate_ratio: f64,
    pub caveat: &'static str,
}

/// Smallest `eta` with `|F(omega0)| <= eta G_vac` over the probes.
pub fn approx_cloaking_certificate(problem: &CloakProblem, omega0: f64) -> Result<ApproxCertificate> {
    let w = C64::new(omega0, 0.0);
    let values = problem.evaluate(w)?;
    let mut ratios = vec![];
    for ((probe, f), g) in problem.probes.iter().zip(&values).zip(problem.g_vac()) {
        if *g > 0.0 {
            ratios.push((probe.label.clone(), f.norm() / g));
        }
    }
    if ratios.is_empty() {
        return Err(Error::Input("every probe has G_vac = 0 (constant potentials)".into()));
    }
    let eta_star = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let (le, lv) = problem.dtn_pair(w)?;
    let (le, lv) = (le.matrix, lv.matrix);
    let norm = |m: &DMatrix<C64>| m.singular_values().iter().cloned().fold(0.0, f64::max);
    let surrogate_ratio = norm(&(le - &lv)) / (2.0 * norm(&lv));
    Ok(ApproxCertificate { omega0, eta_star, ratios, surrogate_ratio, caveat: NORM_CAVEAT })
}

#[derive(Debug, Clone, Serialize)]
pub struct StieltjesReport {
    pub label: String,
    pub xs: Vec<f64>,
    /// `min (S(x) - F_inf)` with `S(x) = F(i sqrt x)`.
    pub min_above_limit: f64,
    pub min_value: f64,
    pub max_imag: f64,
    pub status: Status,
}

/// Sign structure of `S(x) = F(sqrt(-x))` on the positive axis.
pub fn check_stieltjes_sign(problem: &CloakProblem, xs: &[f64], jobs: usize) -> Result<Vec<StieltjesReport>> {
    let omegas: Vec<C64> = xs.iter().map(|x| principal_sqrt_cut_positive(C64::new(-x, 0.0))).collect();
    let rows = parallel_map(jobs, &omegas, |&w| problem.evaluate(w))?;
    let f_inf = problem.f_infinity()?;
    Ok(problem
        .probes
        .iter()
        .enumerate()
        .map(|(p, probe)| {
            let s: Vec<C64> = rows.iter().map(|r| r[p]).collect();
            // F is a difference of forms of size G_vac, so roundoff scales with G_vac too.
            let scale = f_inf[p].abs() + s.iter().map(|v| v.norm()).fold(0.0, f64::max) + problem.g_vac()[p];
            let min_above_limit = s.iter().map(|v| v.re - f_inf[p]).fold(f64::INFINITY, f64::min);
            let min_value = s.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
            let max_imag = s.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            let tol = INEQ_TOL * scale.max(f64::MIN_POSITIVE);
            StieltjesReport {
                label: probe.label.clone(),
                xs: xs.to_vec(),
                min_above_limit,
                min_value,
                max_imag,
                status: Status::from_bool(min_above_limit >= -tol && min_value >= -tol && max_imag <= tol),
            }
        })
        .collect())
}

/// `max |h(-conj w) + conj h(w)| / scale` for `h = omega F` over the points,
/// with `scale = max(|h(w)|, |h(-conj w)|, |w| G_vac)`.
pub fn schwarz_symmetry_defect(problem: &CloakProblem, points: &[C64], jobs: usize) -> Result<f64> {
    let pairs = parallel_map(jobs, points, |&w| {
        let a = problem.evaluate(w)?;
        let b = problem.evaluate(-w.conj())?;
        Ok(a.iter()
            .zip(&b)
            .zip(problem.g_vac())
            .map(|((fa, fb), g)| {
                let (ha, hb) = (w * fa, -w.conj() * fb);
                let scale = ha.norm().max(hb.norm()).max(w.norm() * g);
                (hb + ha.conj()).norm() / scale.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max))
    })?;
    Ok(pairs.into_iter().fold(0.0, f64::max))
}

/// `n` random points in `C+` with real part in `[-re, re]` and imaginary part in `(0, im]`.
pub fn random_cplus(n: usize, re: f64, im: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::new(rng.gen_range(-re..re), im * (1.0 - rng.gen_range(0.0..1.0))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, mark_obstacle, Rect};
    use crate::materials::{ConstantLaw, LorentzLaw, MaterialLaw, Pole};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn problem(n: usize, cloak: Box<dyn MaterialLaw>, obstacle: Box<dyn MaterialLaw>) -> CloakProblem {
        let mesh = build_mesh(n, n, 1.0, 1.0).unwrap();
        let mask = mark_obstacle(&mesh, &[Rect { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 }]).unwrap();
        let model = PermittivityModel::new(1.0, &mask, obstacle, cloak, vec![]).unwrap();
        let probes = default_probes(&mesh, 2, 7, false);
        CloakProblem::new(mesh, Some(mask), model, (0.5, 1.0), probes, None).unwrap()
    }

    fn constant(v: f64) -> Box<dyn MaterialLaw> {
        Box::new(ConstantLaw::new(scalar_tensor(c(v))))
    }

    #[test]
    fn lower_bound_and_eta_lim_examples() {
        let one = c(1.0);
        let b = f_infinity_lower_bound(0.25, 0.75, 2.0, 1.0, 1.0, [one, c(0.0)]).unwrap();
        assert!((b - 1.0 / 7.0).abs() < 1e-15);
        assert!(f_infinity_lower_bound(0.25, 0.75, 1.0, 1.0, 1.0, [one, c(0.0)]).unwrap() == 0.0);
        assert!(f_infinity_lower_bound(0.25, 0.75, 2.0, 1.0, 1.0, [c(0.0), c(0.0)]).unwrap() == 0.0);
        assert!((eta_lim(0.25, 0.75, 2.0, 1.0).unwrap() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_gives_zero_and_static_obstacle_is_positive() {
        let vac = problem(6, constant(1.0), constant(1.0));
        for v in vac.evaluate(C64::new(0.7, 0.3)).unwrap() {
            assert!(v.norm() < 1e-12);
        }
        let p = problem(8, constant(1.0), constant(2.0));
        let f = p.evaluate_f(0, c(0.8)).unwrap();
        assert!(f.im.abs() < 1e-14 && f.re > 0.0);
        let f_inf = p.f_infinity().unwrap()[0];
        assert!(f_inf >= 1.0 / 7.0 - 1e-10);
        assert!((p.g_vac()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_sweep_is_real_and_monotone() {
        let law = Box::new(LorentzLaw::new(1.0, vec![Pole { wp2: 1.0, w0: 2.0, gamma: 0.0 }]).unwrap());
        let p = problem(6, law, constant(2.0));
        let s = sweep(&p, &uniform_grid(0.5, 1.0, 20), 2).unwrap();
        for k in 0..p.probes.len() {
            let r = check_lossless_monotonicity(&s.series(k).unwrap());
            assert_eq!(r.status, Status::Pass, "{r:?}");
        }
    }

    #[test]
    fn drude_closed_forms() {
        let grid = uniform_grid(1.0, 2.0, 101);
        let s = Series::drude(&grid, 1.0, 2f64.sqrt(), 0.0, 1.0);
        let r = check_lossy_bound(&s, None, None).unwrap();
        assert!((r.lhs - 0.75).abs() < 1e-15 && (r.max_w2f - 2.0).abs() < 1e-12);
        let m = check_lossless_monotonicity(&Series::drude(&grid, 1.0, 1.5, 0.3, 1.0));
        assert!(m.pairwise_max_abs < 1e-12);
        let grid = with_point(&grid, 1.5);
        let s = Series::drude(&grid, 1.0, 1.5, 0.0, 1.0);
        let d = check_derivative_bound(&s, 1.5).unwrap();
        assert!(d.premise && (d.point_bound - 4.0).abs() < 1e-3);
        let a = check_approximate_cloaking_bounds(&s, 1.5, 0.0, None, (1.0, 2.0)).unwrap();
        assert!(a.min_margin.abs() < 1e-12 && a.max_margin.abs() < 1e-12);
        let off = Series::drude(&grid, 1.0, 1.5, 0.5, 1.0);
        assert_eq!(check_derivative_bound(&off, 1.5).unwrap().status, Status::SkippedPremise);
    }
}
