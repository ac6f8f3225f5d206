//! Named checks behind a common trait, looked up by name from the config.
//!
//! Each check produces exactly one [`CheckRecord`]; per-potential detail
//! goes into its `details` payload.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::cloaking::{
    approx_cloaking_certificate, check_approximate_cloaking_bounds, check_derivative_bound, check_herglotz_structure,
    check_lossless_monotonicity, check_lossy_bound, check_stieltjes_sign, dispersive_obstacle_check,
    f_infinity_cross_check, impossibility_certificate, random_cplus, schwarz_symmetry_defect, uniform_grid,
    build_h_and_sumrule, CertificateStatus, CloakProblem, SweepResult, INEQ_TOL,
};
use crate::composites::{
    effective_affine, effective_affine_modified, effective_operator, effective_operator_via_inverse, scalar_field,
    variational_bounds, wiener_bounds, MultiplicationOperator, PSD_TOL,
};
use crate::config::RunConfig;
use crate::fem::{assemble, polarization_reconstruct, quadratic_form, sesquilinear, BoundaryPotential};
use crate::geometry::Mesh;
use crate::herglotz::geometric;
use crate::hodge::build_hodge_basis;
use crate::linalg::{c64_rel_diff, max_abs, Tensor2};
use crate::materials::{check_lossless, cplus_log_grid};
use crate::{Error, Result, C64};

pub const CENTRAL_IDENTITY_TOL: f64 = 1e-9;
pub const HODGE_TOL: f64 = 1e-12;
pub const DUAL_ROUTE_TOL: f64 = 1e-10;
pub const ALGEBRA_TOL: f64 = 1e-12;
pub const POLARIZATION_TOL: f64 = 1e-10;
pub const SCHWARZ_TOL: f64 = 1e-10;
pub const STIELTJES_POINTS: usize = 10;
pub const SCHWARZ_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    SkippedPremise,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SkippedPremise => "skipped-premise",
        }
    }

    /// Fail dominates, then pass; all-skipped stays skipped.
    pub fn combine(items: impl IntoIterator<Item = Status>) -> Status {
        let mut any_pass = false;
        for s in items {
            match s {
                Status::Fail => return Status::Fail,
                Status::Pass => any_pass = true,
                Status::SkippedPremise => {}
            }
        }
        if any_pass {
            Status::Pass
        } else {
            Status::SkippedPremise
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub summary: String,
    /// Frequency or potential where a failing check is violated.
    pub violation: Option<String>,
    pub details: serde_json::Value,
}

impl CheckRecord {
    fn skipped(name: &str, reason: impl Into<String>) -> Self {
        CheckRecord {
            name: name.into(),
            status: Status::SkippedPremise,
            summary: reason.into(),
            violation: None,
            details: serde_json::Value::Null,
        }
    }

    pub fn error(name: &str, e: &Error) -> Self {
        CheckRecord {
            name: name.into(),
            status: Status::Fail,
            summary: format!("numerical failure: {e}"),
            violation: Some(e.to_string()),
            details: serde_json::Value::Null,
        }
    }
}

/// Everything a check may read.
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub jobs: usize,
    pub mesh: &'a Mesh,
    pub problem: Option<&'a CloakProblem>,
    pub sweep: Option<&'a SweepResult>,
}

impl Context<'_> {
    fn cloak(&self) -> Result<(&CloakProblem, &SweepResult)> {
        match (self.problem, self.sweep) {
            (Some(p), Some(s)) => Ok((p, s)),
            _ => Err(Error::Input("cloaking checks need a problem and a sweep".into())),
        }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Cloaking,
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn suite(&self) -> Suite;
    fn run(&self, ctx: &Context) -> Result<CheckRecord>;
}

pub fn registry() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(HodgeSplitting),
        Box::new(CentralIdentity),
        Box::new(EffectiveDualRoute),
        Box::new(VariationalSandwich),
        Box::new(Polarization),
        Box::new(FInfinity),
        Box::new(Herglotz),
        Box::new(LosslessMonotonicity),
        Box::new(ApproximateCloaking),
        Box::new(LossyBound),
        Box::new(DerivativeBound),
        Box::new(SumRule),
        Box::new(DispersiveObstacle),
        Box::new(Impossibility),
        Box::new(ApproxCertificate),
        Box::new(Stieltjes),
        Box::new(SchwarzSymmetry),
    ]
}

pub fn known_names() -> Vec<&'static str> {
    registry().iter().map(|c| c.name()).collect()
}

/// Registered checks of `suite`, filtered by the config's `checks.run` list.
pub fn selected(config: &RunConfig, suite: Suite) -> Vec<Box<dyn Check>> {
    registry()
        .into_iter()
        .filter(|c| c.suite() == suite)
        .filter(|c| config.checks.run.as_ref().is_none_or(|names| names.iter().any(|n| n == c.name())))
        .collect()
}

/// `B + i C` per triangle with `C >= 0.5 I`, so `Im a >= 0.5 I`.
pub fn random_coercive_field(n: usize, rng: &mut impl Rng) -> Vec<Tensor2> {
    (0..n)
        .map(|_| {
            let b = Tensor2::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
            let (p, q, r) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let m = nalgebra::Matrix2::new(p, q, 0.0, r);
            let c = m * m.transpose() + nalgebra::Matrix2::identity() * 0.5;
            b + c.map(|v| C64::new(0.0, v))
        })
        .collect()
}

/// `M M^H + 0.5 I` per triangle with complex `M`.
pub fn random_hermitian_field(n: usize, rng: &mut impl Rng) -> Vec<Tensor2> {
    (0..n)
        .map(|_| {
            let m = Tensor2::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            m * m.adjoint() + Tensor2::identity() * C64::new(0.5, 0.0)
        })
        .collect()
}

/// Independent complex values at every boundary node.
pub fn random_potential(mesh: &Mesh, rng: &mut impl Rng) -> BoundaryPotential {
    BoundaryPotential::new(
        (0..mesh.n_boundary())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

struct HodgeSplitting;

impl Check for HodgeSplitting {
    fn name(&self) -> &'static str {
        "hodge-splitting"
    }
    fn suite(&self) -> Suite {
        Suite::Identities
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let b = build_hodge_basis(ctx.mesh)?;
        let (nu, ne, nj) = b.dims();
        let cross = b.max_cross_gram();
        let ortho = b.max_orthonormality_defect();
        let constants = b.constants_residual();
        let ok = nu + ne + nj == b.dim() && cross <= HODGE_TOL && ortho <= HODGE_TOL && constants <= HODGE_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("dims ({nu}, {ne}, {nj}) of {}, cross-Gram {cross:.3e}, constants {constants:.3e}", b.dim()),
            violation: (!ok).then(|| "orthogonality or completeness defect above 1e-12".into()),
            details: json!({ "dims": [nu, ne, nj], "dim": b.dim(), "max_cross_gram": cross,
                             "orthonormality_defect": ortho, "constants_residual": constants }),
        })
    }
}

struct CentralIdentity;

impl Check for CentralIdentity {
    fn name(&self) -> &'static str {
        "dtn-effective-identity"
    }
    fn suite(&self) -> Suite {
        Suite::Identities
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let basis = build_hodge_basis(ctx.mesh)?;
        let mut rng = ctx.rng(1);
        let mut max_rel: f64 = 0.0;
        let mut where_ = String::new();
        for f in 0..ctx.config.identities.fields {
            let field = random_coercive_field(ctx.mesh.n_triangles(), &mut rng);
            let sys = assemble(ctx.mesh, &field)?;
            let solver = sys.factor()?;
            let eff = effective_operator(&basis, &MultiplicationOperator::new(field))?;
            for p in 0..ctx.config.identities.potentials {
                let v0 = random_potential(ctx.mesh, &mut rng);
                let fem = solver.quadratic_form(&v0)?;
                let z = crate::composites::effective_form(&basis, &eff, &v0)?;
                let rel = c64_rel_diff(fem, z);
                if rel > max_rel {
                    max_rel = rel;
                    where_ = format!("field {f}, potential {p}");
                }
            }
        }
        let ok = max_rel <= CENTRAL_IDENTITY_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("FEM form vs (a* Pi v0, Pi v0): max relative difference {max_rel:.3e}"),
            violation: (!ok).then_some(where_),
            details: json!({ "max_rel": max_rel, "tol": CENTRAL_IDENTITY_TOL,
                             "fields": ctx.config.identities.fields, "potentials": ctx.config.identities.potentials }),
        })
    }
}

struct EffectiveDualRoute;

impl Check for EffectiveDualRoute {
    fn name(&self) -> &'static str {
        "effective-dual-route"
    }
    fn suite(&self) -> Suite {
        Suite::Identities
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let basis = build_hodge_basis(ctx.mesh)?;
        let mut rng = ctx.rng(2);
        let n = ctx.mesh.n_triangles();
        let (mut routes, mut scaling, mut adjoint): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..2 * ctx.config.identities.fields {
            let a = MultiplicationOperator::new(random_coercive_field(n, &mut rng));
            let s = effective_operator(&basis, &a)?.matrix;
            let b = effective_operator_via_inverse(&basis, &a)?.matrix;
            routes = routes.max(max_abs(&(&s - &b)) / max_abs(&s).max(1.0));
            let lam = C64::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
            let sl = effective_operator(&basis, &a.scale(lam))?.matrix;
            scaling = scaling.max(max_abs(&(sl - &s * lam)) / max_abs(&s).max(1.0));
            let sa = effective_operator(&basis, &a.adjoint())?.matrix;
            adjoint = adjoint.max(max_abs(&(sa - s.adjoint())) / max_abs(&s).max(1.0));
        }
        let c = C64::new(1.7, 0.4);
        let ci = effective_operator(&basis, &scalar_field(n, c))?.matrix;
        let id = nalgebra::DMatrix::<C64>::identity(ci.nrows(), ci.ncols()) * c;
        let constant = max_abs(&(ci - id));
        let ok = routes <= DUAL_ROUTE_TOL && scaling <= ALGEBRA_TOL && adjoint <= ALGEBRA_TOL && constant <= ALGEBRA_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("Schur vs block-inverse {routes:.3e}; algebra {:.3e}", scaling.max(adjoint).max(constant)),
            violation: (!ok).then(|| "route disagreement or algebra defect".into()),
            details: json!({ "schur_vs_block_inverse": routes, "scaling": scaling, "adjoint": adjoint,
                             "constant": constant, "route_tol": DUAL_ROUTE_TOL, "algebra_tol": ALGEBRA_TOL }),
        })
    }
}

struct VariationalSandwich;

impl Check for VariationalSandwich {
    fn name(&self) -> &'static str {
        "variational-sandwich"
    }
    fn suite(&self) -> Suite {
        Suite::Identities
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let basis = build_hodge_basis(ctx.mesh)?;
        let mut rng = ctx.rng(3);
        let n = ctx.mesh.n_triangles();
        let (mut classical, mut wiener, mut routes) = (f64::INFINITY, f64::INFINITY, 0.0_f64);
        for _ in 0..2 * ctx.config.identities.fields {
            let field = random_hermitian_field(n, &mut rng);
            let a = MultiplicationOperator::new(field.clone());
            classical = classical.min(variational_bounds(&basis, &a)?.margins.worst());
            let ad = effective_affine(&basis, &a)?;
            routes = routes.max(max_abs(&(ad - effective_affine_modified(&basis, &a)?)) / max_abs(&ad).max(1.0));
            wiener = wiener.min(wiener_bounds(ctx.mesh, &field)?.margins(&ad).worst());
        }
        let ok = classical >= -PSD_TOL && wiener >= -PSD_TOL && routes <= DUAL_ROUTE_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("min margins: classical {classical:.3e}, Wiener {wiener:.3e}; a^D routes {routes:.3e}"),
            violation: (!ok).then(|| "sandwich margin below -1e-10".into()),
            details: json!({ "classical_margin": classical, "wiener_margin": wiener, "affine_routes": routes,
                             "tol": PSD_TOL }),
        })
    }
}

struct Polarization;

impl Check for Polarization {
    fn name(&self) -> &'static str {
        "polarization"
    }
    fn suite(&self) -> Suite {
        Suite::Identities
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let mut rng = ctx.rng(4);
        let field = random_coercive_field(ctx.mesh.n_triangles(), &mut rng);
        let dtn = crate::fem::dtn_matrix(&assemble(ctx.mesh, &field)?)?;
        let mut max_rel: f64 = 0.0;
        let mut reality: f64 = 0.0;
        let real_field: Vec<Tensor2> = field.iter().map(|t| t.map(|z| C64::new(z.im, 0.0))).collect();
        let real_dtn = crate::fem::dtn_matrix(&assemble(ctx.mesh, &real_field)?)?;
        for _ in 0..ctx.config.identities.potentials {
            let u = random_potential(ctx.mesh, &mut rng);
            let v = random_potential(ctx.mesh, &mut rng);
            let direct = sesquilinear(&dtn, &u, &v)?;
            max_rel = max_rel.max(c64_rel_diff(direct, polarization_reconstruct(&dtn, &u, &v)?));
            let w = BoundaryPotential::new(u.values.iter().map(|z| C64::new(z.re, 0.0)).collect());
            let q = quadratic_form(&real_dtn, &w)?;
            reality = reality.max(q.im.abs() / q.norm().max(f64::MIN_POSITIVE));
        }
        let ok = max_rel <= POLARIZATION_TOL && reality <= POLARIZATION_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("polarization {max_rel:.3e}, reality {reality:.3e}"),
            violation: (!ok).then(|| "sesquilinear reconstruction defect".into()),
            details: json!({ "polarization": max_rel, "reality": reality, "tol": POLARIZATION_TOL }),
        })
    }
}

struct FInfinity;

impl Check for FInfinity {
    fn name(&self) -> &'static str {
        "f-infinity"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: see dispersive-obstacle"));
        }
        let mut items = vec![];
        let mut statuses = vec![];
        let mut violation = None;
        for (k, probe) in p.probes.iter().enumerate() {
            let cc = f_infinity_cross_check(p, k)?;
            let lb = p.f_infinity_bound(k);
            let lb_ok = lb.is_none_or(|b| cc.value >= b - 1e-10);
            let st = Status::combine([cc.status, Status::from_bool(lb_ok)]);
            if st == Status::Fail && violation.is_none() {
                violation = Some(format!("potential {}", probe.label));
            }
            statuses.push(st);
            items.push(json!({ "probe": probe.label, "cross_check": cc, "lower_bound": lb }));
        }
        let status = Status::combine(statuses);
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: "F_inf from eps_inf vs F(iy) at y = 1e3 and its Richardson limit; affine lower bound".into(),
            violation,
            details: json!(items),
        })
    }
}

struct Herglotz;

impl Check for Herglotz {
    fn name(&self) -> &'static str {
        "herglotz"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        let c = &ctx.config.frequency.cplus;
        let grid = cplus_log_grid((c.re[0], c.re[1]), (c.im[0], c.im[1]), c.n_re, c.n_im);
        let margins = check_herglotz_structure(p, &grid, ctx.jobs)?;
        let status = Status::combine(margins.iter().map(|m| m.status));
        let violation = margins
            .iter()
            .find(|m| m.status == Status::Fail)
            .map(|m| format!("potential {} at omega = {}", m.label, m.worst_omega));
        let min = margins.iter().map(|m| m.min_im_omega_f.min(m.min_im_form)).fold(f64::INFINITY, f64::min);
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: format!("min Im over {} points of C+: {min:.3e}", grid.len()),
            violation,
            details: json!(margins),
        })
    }
}

fn lossless_premise(p: &CloakProblem, points: usize) -> Result<Option<String>> {
    let r = check_lossless(&p.model, p.interval, points)?;
    Ok((!r.lossless).then(|| format!("cloak is lossy on the interval (max |Im eps| = {:.3e})", r.max_imag)))
}

struct LosslessMonotonicity;

impl Check for LosslessMonotonicity {
    fn name(&self) -> &'static str {
        "lossless-monotonicity"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        if let Some(reason) = lossless_premise(p, s.omegas.len())? {
            return Ok(CheckRecord::skipped(self.name(), reason));
        }
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: see dispersive-obstacle"));
        }
        let reports: Vec<_> = (0..p.probes.len())
            .map(|k| s.series(k).map(|se| check_lossless_monotonicity(&se)))
            .collect::<Result<_>>()?;
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports
            .iter()
            .find(|r| r.status == Status::Fail)
            .map(|r| format!("potential {} at (omega0, omega) = {:?}", r.label, r.worst_pair));
        let min = reports.iter().map(|r| r.pairwise_min).fold(f64::INFINITY, f64::min);
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: format!("min pairwise margin {min:.3e}"),
            violation,
            details: json!(reports),
        })
    }
}

struct ApproximateCloaking;

impl Check for ApproximateCloaking {
    fn name(&self) -> &'static str {
        "approximate-cloaking"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        let Some(w0) = ctx.config.frequency.omega0 else {
            return Ok(CheckRecord::skipped(self.name(), "no omega0 configured"));
        };
        if let Some(reason) = lossless_premise(p, s.omegas.len())? {
            return Ok(CheckRecord::skipped(self.name(), reason));
        }
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: see dispersive-obstacle"));
        }
        let eta = match p.eta {
            Some(e) => e,
            None => approx_cloaking_certificate(p, w0)?.eta_star,
        };
        let mut reports = vec![];
        for (k, probe) in p.probes.iter().enumerate() {
            let eta_lim = if probe.e0.is_some() { p.eta_lim() } else { None };
            reports.push(check_approximate_cloaking_bounds(&s.series(k)?, w0, eta, eta_lim, p.interval)?);
        }
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports
            .iter()
            .find(|r| r.status == Status::Fail)
            .map(|r| format!("potential {} at omega = {}", r.label, r.worst_omega));
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: format!("envelopes around omega0 = {w0} with eta = {eta:.6e}"),
            violation,
            details: json!(reports),
        })
    }
}

struct LossyBound;

impl Check for LossyBound {
    fn name(&self) -> &'static str {
        "lossy-bound"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: F_inf not defined"));
        }
        let sub = ctx.config.subinterval();
        let mut reports = vec![];
        for k in 0..p.probes.len() {
            let se = s.series(k)?;
            let lb = p.f_infinity_bound(k);
            reports.push(check_lossy_bound(&se, None, lb)?);
            reports.push(check_lossy_bound(&se, Some(sub), lb)?);
        }
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports
            .iter()
            .find(|r| r.status == Status::Fail)
            .map(|r| format!("potential {} on {:?}", r.label, r.range));
        let min = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: format!("min margin {min:.3e} on the interval and on {sub:?}"),
            violation,
            details: json!(reports),
        })
    }
}

struct DerivativeBound;

impl Check for DerivativeBound {
    fn name(&self) -> &'static str {
        "derivative-bound"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        let Some(w0) = ctx.config.frequency.omega0 else {
            return Ok(CheckRecord::skipped(self.name(), "no omega0 configured"));
        };
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: F_inf not defined"));
        }
        let reports: Vec<_> = (0..p.probes.len())
            .map(|k| check_derivative_bound(&s.series(k)?, w0))
            .collect::<Result<_>>()?;
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports.iter().find(|r| r.status == Status::Fail).map(|r| format!("potential {}", r.label));
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: format!("finite-difference derivative bounds at omega0 = {w0}"),
            violation,
            details: json!(reports),
        })
    }
}

struct SumRule;

impl Check for SumRule {
    fn name(&self) -> &'static str {
        "sumrule"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: F_inf not defined"));
        }
        let reports: Vec<_> = (0..p.probes.len())
            .map(|k| build_h_and_sumrule(&s.series(k)?, ctx.config.tolerances.delta))
            .collect::<Result<_>>()?;
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports.iter().find(|r| r.status == Status::Fail).map(|r| format!("potential {}", r.label));
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: "Heaviside length vs 4 delta / F_inf and on-axis integral vs 1 / F_inf".into(),
            violation,
            details: json!(reports),
        })
    }
}

struct DispersiveObstacle;

impl Check for DispersiveObstacle {
    fn name(&self) -> &'static str {
        "dispersive-obstacle"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, s) = ctx.cloak()?;
        if !p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "obstacle is not dispersive"));
        }
        let Some(w0) = ctx.config.frequency.omega0 else {
            return Ok(CheckRecord::skipped(self.name(), "no omega0 configured"));
        };
        let eta = match p.eta {
            Some(e) => e,
            None => approx_cloaking_certificate(p, w0)?.eta_star,
        };
        let r = dispersive_obstacle_check(p, w0, &s.omegas, eta, ctx.jobs)?;
        let violation = (r.status == Status::Fail).then(|| r.note.clone().unwrap_or_else(|| "ordering margin".into()));
        Ok(CheckRecord {
            name: self.name().into(),
            status: r.status,
            summary: format!(
                "tensor margin {:.3e}, min ordering margin {:.3e}",
                r.tensor_margin,
                r.ordering_margins.iter().cloned().fold(f64::INFINITY, f64::min)
            ),
            violation,
            details: json!(r),
        })
    }
}

struct Impossibility;

impl Check for Impossibility {
    fn name(&self) -> &'static str {
        "impossibility"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: F_inf not defined"));
        }
        let (a, b) = p.interval;
        let cert = impossibility_certificate(p, &uniform_grid(a, b, 5))?;
        let status = match cert.status {
            CertificateStatus::Certified | CertificateStatus::VacuumConsistent => Status::Pass,
            CertificateStatus::Unavailable => Status::SkippedPremise,
        };
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: cert.message.clone(),
            violation: None,
            details: json!(cert),
        })
    }
}

struct ApproxCertificate;

impl Check for ApproxCertificate {
    fn name(&self) -> &'static str {
        "approx-certificate"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        let Some(w0) = ctx.config.frequency.omega0 else {
            return Ok(CheckRecord::skipped(self.name(), "no omega0 configured"));
        };
        let cert = approx_cloaking_certificate(p, w0)?;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::Pass,
            summary: format!(
                "eta* = {:.6e}; surrogate norm ratio {:.6e} ({})",
                cert.eta_star, cert.surrogate_ratio, cert.caveat
            ),
            violation: None,
            details: json!(cert),
        })
    }
}

struct Stieltjes;

impl Check for Stieltjes {
    fn name(&self) -> &'static str {
        "stieltjes"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        if p.model.dispersive_obstacle() {
            return Ok(CheckRecord::skipped(self.name(), "dispersive obstacle: F_inf not defined"));
        }
        let xs = geometric(1e-2, 10f64.powf(6.0 / (STIELTJES_POINTS - 1) as f64), STIELTJES_POINTS);
        let reports = check_stieltjes_sign(p, &xs, ctx.jobs)?;
        let status = Status::combine(reports.iter().map(|r| r.status));
        let violation = reports.iter().find(|r| r.status == Status::Fail).map(|r| format!("potential {}", r.label));
        Ok(CheckRecord {
            name: self.name().into(),
            status,
            summary: "S(x) = F(i sqrt x) real, >= 0 and >= F_inf on [1e-2, 1e4]".into(),
            violation,
            details: json!(reports),
        })
    }
}

struct SchwarzSymmetry;

impl Check for SchwarzSymmetry {
    fn name(&self) -> &'static str {
        "schwarz-symmetry"
    }
    fn suite(&self) -> Suite {
        Suite::Cloaking
    }
    fn run(&self, ctx: &Context) -> Result<CheckRecord> {
        let (p, _) = ctx.cloak()?;
        let c = &ctx.config.frequency.cplus;
        let pts = random_cplus(SCHWARZ_POINTS, c.re[1], c.im[1], ctx.seed);
        let defect = schwarz_symmetry_defect(p, &pts, ctx.jobs)?;
        let ok = defect <= SCHWARZ_TOL;
        Ok(CheckRecord {
            name: self.name().into(),
            status: Status::from_bool(ok),
            summary: format!("max relative defect of h(-conj w) = -conj h(w): {defect:.3e}"),
            violation: (!ok).then(|| "Schwarz symmetry defect".into()),
            details: json!({ "defect": defect, "points": SCHWARZ_POINTS, "tol": SCHWARZ_TOL,
                             "reciprocal": p.reciprocal }),
        })
    }
}

/// Runs `checks`, turning a numerical error inside a check into a failing record.
pub fn run_all(checks: &[Box<dyn Check>], ctx: &Context) -> Vec<(CheckRecord, f64)> {
    checks
        .iter()
        .map(|c| {
            let t = std::time::Instant::now();
            let rec = c.run(ctx).unwrap_or_else(|e| CheckRecord::error(c.name(), &e));
            (rec, t.elapsed().as_secs_f64())
        })
        .collect()
}

/// Tolerance used by inequality checks, for the report provenance.
pub fn inequality_tolerance() -> f64 {
    INEQ_TOL
}
