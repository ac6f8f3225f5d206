//! Z-problems on the Hodge splitting: effective operators, the DtN map as
//! `Pi^T a* Pi`, the affine reduction `a^D` and the classical bounds.
//!
//! Operators on `U` are stored as matrices in the orthonormal `U` basis, so
//! `(a* x, y) = y^H M x` for coefficient vectors `x`, `y`.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;

use crate::fem::{assemble, BoundaryPotential, DtnOperator};
use crate::geometry::Mesh;
use crate::hodge::{HodgeBasis, Subspace};
use crate::linalg::{
    anti_hermitian_norm, imag_part, imag_part2, inverse, min_eig_herm, min_eig_herm2, max_abs,
    real_mul_vec, real_t_mul, real_t_mul_vec, scalar_tensor, to_complex, Tensor2,
};
use crate::{Error, Result, C64};

/// Semidefiniteness tolerance for eigenvalue certificates.
pub const PSD_TOL: f64 = 1e-10;

/// Local multiplication by a per-triangle tensor.
#[derive(Debug, Clone)]
pub struct MultiplicationOperator {
    pub field: Vec<Tensor2>,
}

impl MultiplicationOperator {
    pub fn new(field: Vec<Tensor2>) -> Self {
        MultiplicationOperator { field }
    }

    pub fn n_triangles(&self) -> usize {
        self.field.len()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.field.iter().map(|t| t * s).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.field.iter().map(|t| t.adjoint()).collect())
    }

    pub fn inverse(&self) -> Result<Self> {
        self.field
            .iter()
            .enumerate()
            .map(|(k, t)| t.try_inverse().ok_or_else(|| Error::Input(format!("tensor on triangle {k} is singular"))))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// `Im(e^{i gamma} a)` per triangle.
    pub fn rotated_imag(&self, gamma: f64) -> Self {
        let r = C64::from_polar(1.0, gamma);
        Self::new(self.field.iter().map(|t| imag_part2(&(t * r))).collect())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.field.iter().all(|t| max_abs(&(t - t.adjoint())) <= tol * max_abs(t).max(1.0))
    }

    /// Largest per-triangle spectral norm.
    pub fn bound(&self) -> f64 {
        self.field.iter().map(crate::linalg::spectral_norm2).fold(0.0, f64::max)
    }

    pub fn apply(&self, f: &DVector<C64>) -> DVector<C64> {
        let mut out = f.clone();
        for (t, a) in self.field.iter().enumerate() {
            let (x, y) = (f[2 * t], f[2 * t + 1]);
            out[2 * t] = a[(0, 0)] * x + a[(0, 1)] * y;
            out[2 * t + 1] = a[(1, 0)] * x + a[(1, 1)] * y;
        }
        out
    }

    /// `a B` for a real basis matrix `B`.
    pub fn apply_real(&self, b: &DMatrix<f64>) -> DMatrix<C64> {
        let mut out = DMatrix::<C64>::zeros(b.nrows(), b.ncols());
        for (t, a) in self.field.iter().enumerate() {
            for k in 0..b.ncols() {
                let (x, y) = (b[(2 * t, k)], b[(2 * t + 1, k)]);
                out[(2 * t, k)] = a[(0, 0)] * x + a[(0, 1)] * y;
                out[(2 * t + 1, k)] = a[(1, 0)] * x + a[(1, 1)] * y;
            }
        }
        out
    }

    /// `B_i^T a B_j`.
    pub fn block(&self, bi: &DMatrix<f64>, bj: &DMatrix<f64>) -> DMatrix<C64> {
        real_t_mul(bi, &self.apply_real(bj))
    }

    /// `(a f, f)`.
    pub fn energy(&self, f: &DVector<C64>) -> C64 {
        f.dotc(&self.apply(f))
    }
}

#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    pub matrix: DMatrix<C64>,
    pub route: &'static str,
}

pub trait EffectiveRoute: Send + Sync {
    fn name(&self) -> &'static str;
    fn compute(&self, basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<EffectiveOperator>;
}

pub struct SchurRoute;
pub struct BlockInverseRoute;

impl EffectiveRoute for SchurRoute {
    fn name(&self) -> &'static str {
        "schur"
    }

    fn compute(&self, basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<EffectiveOperator> {
        effective_operator(basis, a)
    }
}

impl EffectiveRoute for BlockInverseRoute {
    fn name(&self) -> &'static str {
        "block-inverse"
    }

    fn compute(&self, basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<EffectiveOperator> {
        effective_operator_via_inverse(basis, a)
    }
}

pub fn effective_routes() -> Vec<Box<dyn EffectiveRoute>> {
    vec![Box::new(SchurRoute), Box::new(BlockInverseRoute)]
}

pub fn effective_route(name: &str) -> Result<Box<dyn EffectiveRoute>> {
    effective_routes().into_iter().find(|r| r.name() == name).ok_or_else(|| {
        let known: Vec<_> = effective_routes().iter().map(|r| r.name()).collect();
        Error::Config(format!("unknown effective route '{name}', known: {known:?}"))
    })
}

fn check_field(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<()> {
    if 2 * a.n_triangles() != basis.dim() {
        return Err(Error::Dimension(format!(
            "operator has {} triangles, field space has dimension {}",
            a.n_triangles(),
            basis.dim()
        )));
    }
    Ok(())
}

/// Schur complement `p00 - p01 p11^{-1} p10` against the given bases.
fn schur(a: &MultiplicationOperator, b0: &DMatrix<f64>, b1: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    let a0 = a.apply_real(b0);
    let a1 = a.apply_real(b1);
    let p00 = real_t_mul(b0, &a0);
    if b1.ncols() == 0 {
        return Ok(p00);
    }
    let p01 = real_t_mul(b0, &a1);
    let p10 = real_t_mul(b1, &a0);
    let p11 = real_t_mul(b1, &a1);
    let x = p11
        .lu()
        .solve(&p10)
        .ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: b1.ncols() })?;
    Ok(p00 - p01 * x)
}

/// `a* = a_00 - a_01 a_11^{-1} a_10` on `U`.
pub fn effective_operator(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<EffectiveOperator> {
    check_field(basis, a)?;
    Ok(EffectiveOperator { matrix: schur(a, &basis.u, &basis.e)?, route: "schur" })
}

/// `a* = ((A^{-1})_00)^{-1}` with `A` the `(U + E)` block of `a`.
pub fn effective_operator_via_inverse(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<EffectiveOperator> {
    check_field(basis, a)?;
    let (nu, ne, _) = basis.dims();
    let n = basis.dim();
    let mut ue = DMatrix::<f64>::zeros(n, nu + ne);
    ue.view_mut((0, 0), (n, nu)).copy_from(&basis.u);
    ue.view_mut((0, nu), (n, ne)).copy_from(&basis.e);
    let block = a.block(&ue, &ue);
    let inv = inverse(&block).ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: nu + ne })?;
    let corner = inv.view((0, 0), (nu, nu)).into_owned();
    let matrix = inverse(&corner).ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: nu })?;
    Ok(EffectiveOperator { matrix, route: "block-inverse" })
}

/// Solution of the Dirichlet Z-problem for a given `E0` in `U` coordinates.
#[derive(Debug, Clone)]
pub struct ZProblemSolution {
    pub j0: DVector<C64>,
    pub e: DVector<C64>,
    pub j: DVector<C64>,
}

pub fn solve_zproblem(
    basis: &HodgeBasis,
    a: &MultiplicationOperator,
    e0: &DVector<C64>,
) -> Result<ZProblemSolution> {
    check_field(basis, a)?;
    if e0.len() != basis.u.ncols() {
        return Err(Error::Dimension(format!("E0 has {} coefficients, U has {}", e0.len(), basis.u.ncols())));
    }
    let a0 = a.apply_real(&basis.u);
    let a1 = a.apply_real(&basis.e);
    let p11 = real_t_mul(&basis.e, &a1);
    let p10 = real_t_mul(&basis.e, &a0);
    let e = p11
        .lu()
        .solve(&(-(&p10 * e0)))
        .ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: basis.e.ncols() })?;
    let ae = &a0 * e0 + &a1 * &e;
    let j0 = real_t_mul_vec(&basis.u, &ae);
    let j = real_t_mul_vec(basis.j_basis(), &ae);
    Ok(ZProblemSolution { j0, e, j })
}

impl ZProblemSolution {
    /// Relative residual of `J0 + J = a (E0 + E)` in the full field space.
    pub fn residual(&self, basis: &HodgeBasis, a: &MultiplicationOperator, e0: &DVector<C64>) -> f64 {
        let rhs = a.apply(&(real_mul_vec(&basis.u, e0) + real_mul_vec(&basis.e, &self.e)));
        let lhs = real_mul_vec(&basis.u, &self.j0) + real_mul_vec(basis.j_basis(), &self.j);
        let scale = rhs.norm().max(1e-300);
        (lhs - rhs).norm() / scale
    }
}

/// `U` coordinates of the lift, `C = U^T Pi`, one column per boundary node.
pub fn lift_coordinates(basis: &HodgeBasis) -> DMatrix<f64> {
    basis.u.tr_mul(&basis.lift)
}

/// `Lambda = C^T a* C`, whose quadratic form is `(a* Pi v0, Pi v0)`.
pub fn dtn_via_effective(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<DtnOperator> {
    let eff = effective_operator(basis, a)?;
    Ok(dtn_from_effective(basis, &eff))
}

pub fn dtn_from_effective(basis: &HodgeBasis, eff: &EffectiveOperator) -> DtnOperator {
    let c = lift_coordinates(basis);
    let matrix = real_t_mul(&c, &(&eff.matrix * to_complex(&c)));
    DtnOperator { matrix, provenance: "effective-lift".into() }
}

/// DtN construction strategy.
pub trait DtnRoute: Send + Sync {
    fn name(&self) -> &'static str;
    fn dtn(&self, mesh: &Mesh, basis: Option<&HodgeBasis>, field: &[Tensor2]) -> Result<DtnOperator>;

    /// `<Lambda v, conj v>` for each potential.
    fn forms(
        &self,
        mesh: &Mesh,
        basis: Option<&HodgeBasis>,
        field: &[Tensor2],
        potentials: &[&BoundaryPotential],
    ) -> Result<Vec<C64>> {
        let dtn = self.dtn(mesh, basis, field)?;
        potentials.iter().map(|v| crate::fem::quadratic_form(&dtn, v)).collect()
    }
}

pub struct FemSchurRoute;
pub struct EffectiveLiftRoute;

impl DtnRoute for FemSchurRoute {
    fn name(&self) -> &'static str {
        "fem-schur"
    }

    fn dtn(&self, mesh: &Mesh, _basis: Option<&HodgeBasis>, field: &[Tensor2]) -> Result<DtnOperator> {
        crate::fem::dtn_matrix(&assemble(mesh, field)?)
    }

    /// One interior solve per potential instead of the full boundary Schur complement.
    fn forms(
        &self,
        mesh: &Mesh,
        _basis: Option<&HodgeBasis>,
        field: &[Tensor2],
        potentials: &[&BoundaryPotential],
    ) -> Result<Vec<C64>> {
        let sys = assemble(mesh, field)?;
        let solver = sys.factor()?;
        potentials.iter().map(|v| solver.quadratic_form(v)).collect()
    }
}

impl DtnRoute for EffectiveLiftRoute {
    fn name(&self) -> &'static str {
        "effective-lift"
    }

    fn dtn(&self, _mesh: &Mesh, basis: Option<&HodgeBasis>, field: &[Tensor2]) -> Result<DtnOperator> {
        let basis = basis.ok_or_else(|| Error::Input("effective-lift route needs a Hodge basis".into()))?;
        dtn_via_effective(basis, &MultiplicationOperator::new(field.to_vec()))
    }
}

pub fn dtn_routes() -> Vec<Box<dyn DtnRoute>> {
    vec![Box::new(FemSchurRoute), Box::new(EffectiveLiftRoute)]
}

pub fn dtn_route(name: &str) -> Result<Box<dyn DtnRoute>> {
    dtn_routes().into_iter().find(|r| r.name() == name).ok_or_else(|| {
        let known: Vec<_> = dtn_routes().iter().map(|r| r.name()).collect();
        Error::Config(format!("unknown DtN route '{name}', known: {known:?}"))
    })
}

/// `a^D` from `a*` restricted to constant fields, normalized so that
/// `(a^D e0, e0) |Omega| = (a* e0, e0)`.
pub fn effective_affine(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<Matrix2<C64>> {
    let eff = effective_operator(basis, a)?;
    Ok(affine_from_effective(basis, &eff))
}

pub fn affine_from_effective(basis: &HodgeBasis, eff: &EffectiveOperator) -> Matrix2<C64> {
    let p = basis.u.tr_mul(&basis.constants);
    let m = real_t_mul(&p, &(&eff.matrix * to_complex(&p)));
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// `a^D` as the effective operator of the Z-problem with `U^D` the constants
/// and `E^D = E`; never touches the `U` basis.
pub fn effective_affine_modified(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<Matrix2<C64>> {
    check_field(basis, a)?;
    let m = schur(a, &basis.constants, &basis.e)?;
    Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichMargins {
    /// Smallest eigenvalue of the lower bound itself.
    pub lower_psd: f64,
    /// `min eig(a* - lower)`.
    pub lower: f64,
    /// `min eig(upper - a*)`.
    pub upper: f64,
}

impl SandwichMargins {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower_psd >= -tol && self.lower >= -tol && self.upper >= -tol
    }

    pub fn worst(&self) -> f64 {
        self.lower_psd.min(self.lower).min(self.upper)
    }
}

#[derive(Debug, Clone)]
pub struct VariationalBounds {
    /// `((a^{-1})_00)^{-1}`.
    pub lower: DMatrix<C64>,
    /// `a_00`.
    pub upper: DMatrix<C64>,
    pub effective: DMatrix<C64>,
    pub margins: SandwichMargins,
}

fn require_hermitian(a: &MultiplicationOperator) -> Result<()> {
    if !a.is_hermitian(1e-12) {
        return Err(Error::Input("bounds need a Hermitian tensor field".into()));
    }
    Ok(())
}

pub fn variational_bounds(basis: &HodgeBasis, a: &MultiplicationOperator) -> Result<VariationalBounds> {
    require_hermitian(a)?;
    let eff = effective_operator(basis, a)?.matrix;
    let upper = a.block(&basis.u, &basis.u);
    let inv00 = a.inverse()?.block(&basis.u, &basis.u);
    let lower = inverse(&inv00).ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: inv00.nrows() })?;
    let margins = SandwichMargins {
        lower_psd: min_eig_herm(&lower),
        lower: min_eig_herm(&(&eff - &lower)),
        upper: min_eig_herm(&(&upper - &eff)),
    };
    Ok(VariationalBounds { lower, upper, effective: eff, margins })
}

#[derive(Debug, Clone)]
pub struct WienerBounds {
    /// `<a^{-1}>^{-1}`.
    pub harmonic: Tensor2,
    /// `<a>`.
    pub arithmetic: Tensor2,
}

/// Area-weighted arithmetic and harmonic means of a Hermitian field.
pub fn wiener_bounds(mesh: &Mesh, field: &[Tensor2]) -> Result<WienerBounds> {
    let a = MultiplicationOperator::new(field.to_vec());
    require_hermitian(&a)?;
    let total = mesh.total_area();
    let mut arith = Tensor2::zeros();
    let mut inv = Tensor2::zeros();
    for (t, m) in field.iter().enumerate() {
        let w = mesh.triangle_area[t] / total;
        arith += m * C64::new(w, 0.0);
        inv += m
            .try_inverse()
            .ok_or_else(|| Error::Input(format!("tensor on triangle {t} is singular")))?
            * C64::new(w, 0.0);
    }
    let harmonic = inv.try_inverse().ok_or_else(|| Error::Input("harmonic mean is singular".into()))?;
    Ok(WienerBounds { harmonic, arithmetic: arith })
}

impl WienerBounds {
    pub fn margins(&self, ad: &Matrix2<C64>) -> SandwichMargins {
        SandwichMargins {
            lower_psd: min_eig_herm2(&self.harmonic),
            lower: min_eig_herm2(&(ad - self.harmonic)),
            upper: min_eig_herm2(&(self.arithmetic - ad)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoerciveChain {
    pub c: f64,
    /// `min eig([Im(e^{ig} a)]* - c I)`.
    pub lower: f64,
    /// `min eig(Im(e^{ig} a*) - [Im(e^{ig} a)]*)`.
    pub upper: f64,
}

/// `c I <= [Im(e^{ig} a)]* <= Im(e^{ig} a*)`; `None` when the pointwise
/// hypothesis `Im(e^{ig} a) >= c I` with `c > 0` fails.
pub fn coercive_imaginary_bound(
    basis: &HodgeBasis,
    a: &MultiplicationOperator,
    gamma: f64,
) -> Result<Option<CoerciveChain>> {
    let im = a.rotated_imag(gamma);
    let c = im.field.iter().map(min_eig_herm2).fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Ok(None);
    }
    let im_eff = effective_operator(basis, &im)?.matrix;
    let eff = effective_operator(basis, a)?.matrix;
    let rot = imag_part(&(eff * C64::from_polar(1.0, gamma)));
    let n = im_eff.nrows();
    let lower = min_eig_herm(&(&im_eff - DMatrix::<C64>::identity(n, n) * C64::new(c, 0.0)));
    let upper = min_eig_herm(&(rot - &im_eff));
    Ok(Some(CoerciveChain { c, lower, upper }))
}

/// `min eig(b* - a*)` for Hermitian fields.
pub fn monotonicity_margin(basis: &HodgeBasis, a: &MultiplicationOperator, b: &MultiplicationOperator) -> Result<f64> {
    require_hermitian(a)?;
    require_hermitian(b)?;
    let ea = effective_operator(basis, a)?.matrix;
    let eb = effective_operator(basis, b)?.matrix;
    Ok(min_eig_herm(&(eb - ea)))
}

/// Hermitian-ness defect of an effective matrix, relative.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    anti_hermitian_norm(m) / m.norm().max(1e-300)
}

/// `(a* Pi v0, Pi v0)` directly from an effective matrix.
pub fn effective_form(basis: &HodgeBasis, eff: &EffectiveOperator, v0: &BoundaryPotential) -> Result<C64> {
    let lifted = basis.lift(v0)?;
    let x = real_t_mul_vec(&basis.u, &lifted);
    Ok(x.dotc(&(&eff.matrix * &x)))
}

/// Weighted field `Pi v0 + e` for `e` given in `E` coordinates.
pub fn admissible_field(basis: &HodgeBasis, v0: &BoundaryPotential, e: &DVector<C64>) -> Result<DVector<C64>> {
    Ok(basis.lift(v0)? + real_mul_vec(&basis.e, e))
}

/// Minimizing `E` coordinates `-a_11^{-1} a_10 E0` for `E0 = Pi v0`.
pub fn dirichlet_minimizer(basis: &HodgeBasis, a: &MultiplicationOperator, v0: &BoundaryPotential) -> Result<DVector<C64>> {
    let e0 = real_t_mul_vec(&basis.u, &basis.lift(v0)?);
    solve_zproblem_e(basis, a, &e0)
}

fn solve_zproblem_e(basis: &HodgeBasis, a: &MultiplicationOperator, e0: &DVector<C64>) -> Result<DVector<C64>> {
    let p11 = a.block(&basis.e, &basis.e);
    let p10 = a.block(&basis.e, &basis.u);
    p11.lu()
        .solve(&(-(&p10 * e0)))
        .ok_or_else(|| Error::Singular { omega: "n/a".into(), pivot: 0, n: basis.e.ncols() })
}

/// Residuals of the Hodge link between an FEM solution and the Z-problem:
/// `grad u - Pi v0` in `E`, and `a grad u` in `U + J`.
pub fn hodge_link_residuals(
    basis: &HodgeBasis,
    a: &MultiplicationOperator,
    grad_u: &DVector<C64>,
    v0: &BoundaryPotential,
) -> Result<(f64, f64)> {
    let diff = grad_u - basis.lift(v0)?;
    let r1 = (&diff - basis.project(Subspace::E, &diff)).norm() / grad_u.norm().max(1e-300);
    let flux = a.apply(grad_u);
    let r2 = basis.project(Subspace::E, &flux).norm() / flux.norm().max(1e-300);
    Ok((r1, r2))
}

pub fn scalar_field(n: usize, c: C64) -> MultiplicationOperator {
    MultiplicationOperator::new(vec![scalar_tensor(c); n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{dtn_matrix, quadratic_form};
    use crate::geometry::build_mesh;
    use crate::hodge::build_hodge_basis;
    use crate::linalg::{rel_diff, tensor_real};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn constant_field_effective() {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let k = C64::new(2.0, 0.5);
        let a = scalar_field(mesh.n_triangles(), k);
        let eff = effective_operator(&h, &a).unwrap();
        let id = DMatrix::<C64>::identity(eff.matrix.nrows(), eff.matrix.nrows()) * k;
        assert!(max_abs(&(eff.matrix - &id)) < 1e-12);
        assert!(max_abs(&(effective_operator_via_inverse(&h, &a).unwrap().matrix - id)) < 1e-12);
        let ad = effective_affine(&h, &a).unwrap();
        assert!(max_abs(&(ad - scalar_tensor(k))) < 1e-12);
    }

    #[test]
    fn layered_affine_two_routes_and_dtn() {
        let mesh = build_mesh(8, 8, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let field: Vec<Tensor2> = (0..mesh.n_triangles())
            .map(|t| scalar_tensor(c(if mesh.centroid(t)[0] < 0.5 { 1.0 } else { 3.0 })))
            .collect();
        let a = MultiplicationOperator::new(field.clone());
        let ad = effective_affine(&h, &a).unwrap();
        let ad2 = effective_affine_modified(&h, &a).unwrap();
        assert!(max_abs(&(ad - ad2)) < 1e-10);
        assert!((ad[(1, 1)] - 2.0).norm() < 1e-10);
        let w = wiener_bounds(&mesh, &field).unwrap();
        assert!(max_abs(&(w.harmonic - scalar_tensor(c(1.5)))) < 1e-12);
        assert!(max_abs(&(w.arithmetic - scalar_tensor(c(2.0)))) < 1e-12);
        assert!(w.margins(&ad).holds(1e-10));
        let fem = dtn_matrix(&assemble(&mesh, &field).unwrap()).unwrap();
        let eff = dtn_via_effective(&h, &a).unwrap();
        assert!(rel_diff(&fem.matrix, &eff.matrix) < 1e-9);
        let v0 = BoundaryPotential::affine(&mesh, [c(1.0), c(0.0)]);
        assert!((quadratic_form(&fem, &v0).unwrap() - ad[(0, 0)]).norm() < 1e-10);
    }

    #[test]
    fn anisotropic_field_sandwich() {
        let mesh = build_mesh(3, 3, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let a = MultiplicationOperator::new(
            (0..mesh.n_triangles())
                .map(|t| tensor_real([[1.0 + t as f64 * 0.1, 0.2], [0.2, 2.0]]))
                .collect(),
        );
        let vb = variational_bounds(&h, &a).unwrap();
        assert!(vb.margins.holds(1e-10));
        let z = solve_zproblem(&h, &a, &DVector::from_element(h.u.ncols(), c(1.0))).unwrap();
        assert!(z.residual(&h, &a, &DVector::from_element(h.u.ncols(), c(1.0))) < 1e-10);
    }
}
