//! Discrete orthogonal splitting `U + E + J` of per-triangle vector fields.
//!
//! Fields are stored in weighted coordinates `w_T = sqrt|T| f_T`, laid out as
//! `[w_0x, w_0y, w_1x, ...]`, so the inner product `sum_T |T| f_T . conj g_T`
//! becomes the plain Euclidean one and every basis below is orthonormal in
//! the ordinary sense.
//!
//! * `E`: gradients of interior hat functions.
//! * `U`: gradients of discrete-harmonic (Laplace) extensions of boundary
//!   data; rank `n_boundary - 1` since constants extend to zero gradient.
//! * `J`: orthogonal complement of `U + E`, built on first use.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::fem::{assemble, BoundaryPotential};
use crate::geometry::Mesh;
use crate::linalg::{real_mul_vec, real_t_mul_vec, scalar_tensor};
use crate::{Error, Result, C64};

pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FieldSpace {
    pub sqrt_area: Vec<f64>,
    pub total_area: f64,
}

impl FieldSpace {
    pub fn new(mesh: &Mesh) -> Self {
        FieldSpace {
            sqrt_area: mesh.triangle_area.iter().map(|a| a.sqrt()).collect(),
            total_area: mesh.total_area(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.sqrt_area.len()
    }

    pub fn weight(&self, f: &[[C64; 2]]) -> DVector<C64> {
        DVector::from_fn(self.dim(), |k, _| f[k / 2][k % 2] * self.sqrt_area[k / 2])
    }

    pub fn unweight(&self, w: &DVector<C64>) -> Vec<[C64; 2]> {
        self.sqrt_area
            .iter()
            .enumerate()
            .map(|(t, s)| [w[2 * t] / *s, w[2 * t + 1] / *s])
            .collect()
    }

    /// `sum_T |T| f_T . conj g_T` on weighted vectors.
    pub fn inner(&self, f: &DVector<C64>, g: &DVector<C64>) -> C64 {
        g.dotc(f)
    }

    /// Weighted representation of the constant field `e0`.
    pub fn constant(&self, e0: [C64; 2]) -> DVector<C64> {
        DVector::from_fn(self.dim(), |k, _| e0[k % 2] * self.sqrt_area[k / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    U,
    E,
    J,
    Avg,
}

#[derive(Debug)]
pub struct HodgeBasis {
    pub space: FieldSpace,
    pub u: DMatrix<f64>,
    pub e: DMatrix<f64>,
    /// Weighted gradients of the harmonic extensions of boundary hats,
    /// one column per boundary node: the lift operator as a matrix.
    pub lift: DMatrix<f64>,
    /// Orthonormal weighted constants, `sqrt|T| e_k / sqrt|Omega|`.
    pub constants: DMatrix<f64>,
    j: OnceLock<DMatrix<f64>>,
}

/// Weighted gradient of a nodal scalar field.
fn weighted_gradient(mesh: &Mesh, sqrt_area: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * mesh.n_triangles()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.hat_gradients(t);
        for k in 0..3 {
            out[2 * t] += u[tri[k]] * g[k][0] * sqrt_area[t];
            out[2 * t + 1] += u[tri[k]] * g[k][1] * sqrt_area[t];
        }
    }
    out
}

pub fn build_hodge_basis(mesh: &Mesh) -> Result<HodgeBasis> {
    let space = FieldSpace::new(mesh);
    let n = space.dim();
    let (ni, nb) = (mesh.n_interior(), mesh.n_boundary());

    let mut gi = DMatrix::<f64>::zeros(n, ni);
    for (k, &node) in mesh.interior.iter().enumerate() {
        let mut u = vec![0.0; mesh.n_nodes()];
        u[node] = 1.0;
        gi.set_column(k, &DVector::from_vec(weighted_gradient(mesh, &space.sqrt_area, &u)));
    }

    let laplace = assemble(mesh, &vec![scalar_tensor(C64::new(1.0, 0.0)); mesh.n_triangles()])?;
    let solver = laplace.factor()?;
    let mut lift = DMatrix::<f64>::zeros(n, nb);
    for b in 0..nb {
        let mut v = vec![C64::new(0.0, 0.0); nb];
        v[b] = C64::new(1.0, 0.0);
        let u: Vec<f64> = solver.solve(&BoundaryPotential::new(v))?.iter().map(|z| z.re).collect();
        lift.set_column(b, &DVector::from_vec(weighted_gradient(mesh, &space.sqrt_area, &u)));
    }

    let qr = gi.clone().qr();
    let r_diag = qr.r().diagonal();
    let rmax = r_diag.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let e_rank = r_diag.iter().filter(|v| v.abs() > RANK_TOL * rmax).count();
    if e_rank != ni {
        return Err(Error::Rank(format!("interior gradients have rank {e_rank}, expected {ni}")));
    }
    let e = qr.q();

    // The lift kills exactly the constants, so the last column is minus the
    // sum of the others and the leading `nb - 1` columns of Q span U.
    let qr = lift.clone().qr();
    let r_diag = qr.r().diagonal();
    let rmax = r_diag.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let u_rank = r_diag.iter().filter(|v| v.abs() > RANK_TOL * rmax).count();
    if u_rank + 1 != nb || r_diag[nb - 1].abs() > RANK_TOL * rmax {
        return Err(Error::Rank(format!("harmonic gradients have rank {u_rank}, expected {}", nb - 1)));
    }
    let u = qr.q().columns(0, nb - 1).into_owned();

    let omega = space.total_area.sqrt();
    let constants = DMatrix::from_fn(n, 2, |i, k| if i % 2 == k { space.sqrt_area[i / 2] / omega } else { 0.0 });

    Ok(HodgeBasis { space, u, e, lift, constants, j: OnceLock::new() })
}

impl HodgeBasis {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `(dim U, dim E, dim J)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let (nu, ne) = (self.u.ncols(), self.e.ncols());
        (nu, ne, self.dim() - nu - ne)
    }

    pub fn n_boundary(&self) -> usize {
        self.lift.ncols()
    }

    /// Orthonormal basis of the complement of `U + E`.
    ///
    /// Householder QR of `[U E]`; the trailing rows of the full `Q^T` span
    /// the complement. Dense `N x N` work, so it is only built on demand.
    pub fn j_basis(&self) -> &DMatrix<f64> {
        self.j.get_or_init(|| {
            let n = self.dim();
            let (nu, ne, nj) = self.dims();
            let mut ue = DMatrix::<f64>::zeros(n, nu + ne);
            ue.view_mut((0, 0), (n, nu)).copy_from(&self.u);
            ue.view_mut((0, nu), (n, ne)).copy_from(&self.e);
            let qr = ue.qr();
            let mut qt = DMatrix::<f64>::identity(n, n);
            qr.q_tr_mul(&mut qt);
            qt.view((nu + ne, 0), (nj, n)).transpose()
        })
    }

    pub fn basis(&self, which: Subspace) -> &DMatrix<f64> {
        match which {
            Subspace::U => &self.u,
            Subspace::E => &self.e,
            Subspace::J => self.j_basis(),
            Subspace::Avg => &self.constants,
        }
    }

    /// Weighted gradient of the Laplace extension of `v0`.
    pub fn lift(&self, v0: &BoundaryPotential) -> Result<DVector<C64>> {
        if v0.values.len() != self.n_boundary() {
            return Err(Error::Dimension(format!(
                "potential has {} values for {} boundary nodes",
                v0.values.len(),
                self.n_boundary()
            )));
        }
        Ok(real_mul_vec(&self.lift, &v0.as_vector()))
    }

    /// Boundary functional `w` with `w . conj(v0) = (f, lift v0)` for all `v0`.
    pub fn lift_adjoint(&self, f: &DVector<C64>) -> Result<BoundaryPotential> {
        if f.len() != self.dim() {
            return Err(Error::Dimension(format!("field has {} entries, space has {}", f.len(), self.dim())));
        }
        let norm = f.norm();
        if norm > 0.0 {
            let off = (f - self.project(Subspace::U, f)).norm();
            if off > 1e-10 * norm {
                return Err(Error::Input(format!("field is not in U: relative residual {:.3e}", off / norm)));
            }
        }
        Ok(BoundaryPotential::new(real_t_mul_vec(&self.lift, f).iter().cloned().collect()))
    }

    /// Orthogonal projection; `J` uses the complement of the other two.
    pub fn project(&self, which: Subspace, f: &DVector<C64>) -> DVector<C64> {
        match which {
            Subspace::J => f - self.project(Subspace::U, f) - self.project(Subspace::E, f),
            _ => {
                let b = self.basis(which);
                real_mul_vec(b, &real_t_mul_vec(b, f))
            }
        }
    }

    /// Largest entry of the cross-Gram blocks `U^T E`, `U^T J`, `E^T J`.
    pub fn max_cross_gram(&self) -> f64 {
        let j = self.j_basis();
        let m = |a: &DMatrix<f64>, b: &DMatrix<f64>| a.tr_mul(b).amax();
        m(&self.u, &self.e).max(m(&self.u, j)).max(m(&self.e, j))
    }

    /// Largest deviation of `B^T B` from the identity over the three bases.
    pub fn max_orthonormality_defect(&self) -> f64 {
        [&self.u, &self.e, self.j_basis()]
            .iter()
            .map(|b| (b.tr_mul(b) - DMatrix::<f64>::identity(b.ncols(), b.ncols())).amax())
            .fold(0.0, f64::max)
    }

    /// `max_k ||(I - Gamma_0) c_k||` over the two unit constant fields.
    pub fn constants_residual(&self) -> f64 {
        (0..2)
            .map(|k| {
                let c = self.constants.column(k).map(|v| C64::new(v, 0.0));
                (&c - self.project(Subspace::U, &c)).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;

    #[test]
    fn dims_small_mesh() {
        let mesh = build_mesh(2, 2, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        assert_eq!(h.dims(), (7, 1, 8));
        assert_eq!(h.j_basis().ncols(), 8);
        assert!(h.max_cross_gram() <= 1e-12);
        assert!(h.max_orthonormality_defect() <= 1e-12);
        let h16 = build_hodge_basis(&build_mesh(16, 16, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(h16.dims(), (63, 225, 736));
        assert!(h16.max_cross_gram() <= 1e-12);
    }

    #[test]
    fn lift_of_affine_and_constant() {
        let mesh = build_mesh(5, 4, 1.0, 0.8).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let f = h.lift(&BoundaryPotential::affine(&mesh, [one, zero])).unwrap();
        let expect = h.space.constant([-one, zero]);
        assert!((f - expect).norm() < 1e-12);
        let c = h.lift(&BoundaryPotential::constant(&mesh, C64::new(2.0, 1.0))).unwrap();
        assert!(c.norm() < 1e-12);
        assert!(h.constants_residual() < 1e-12);
    }

    #[test]
    fn avg_projection_of_layered_gradient() {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let f: Vec<[C64; 2]> = (0..mesh.n_triangles())
            .map(|t| {
                let s = if mesh.centroid(t)[0] < 0.5 { -1.5 } else { -0.5 };
                [C64::new(s, 0.0), C64::new(0.0, 0.0)]
            })
            .collect();
        let avg = h.space.unweight(&h.project(Subspace::Avg, &h.space.weight(&f)));
        for v in avg {
            assert!((v[0] + 1.0).norm() < 1e-12 && v[1].norm() < 1e-12);
        }
    }

    #[test]
    fn lift_adjoint_rejects_fields_outside_u() {
        let mesh = build_mesh(3, 3, 1.0, 1.0).unwrap();
        let h = build_hodge_basis(&mesh).unwrap();
        let e0 = h.e.column(0).map(|v| C64::new(v, 0.0));
        assert!(h.lift_adjoint(&e0).is_err());
        let zero = DVector::from_element(h.dim(), C64::new(0.0, 0.0));
        assert!(h.lift_adjoint(&zero).unwrap().values.iter().all(|v| v.norm() == 0.0));
    }
}
