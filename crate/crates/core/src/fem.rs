//! P1 stiffness assembly, Dirichlet solves and the boundary Schur complement.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::geometry::Mesh;
use crate::linalg::{singular, BandLu, Tensor2};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Sparse node-by-node matrix `K_ij = sum_T |T| (a_T grad phi_j) . grad phi_i`.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    rows: Vec<Vec<(usize, C64)>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    local_index: Vec<usize>,
    is_boundary: Vec<bool>,
    pub omega: Option<C64>,
}

pub fn assemble(mesh: &Mesh, field: &[Tensor2]) -> Result<StiffnessSystem> {
    if field.len() != mesh.n_triangles() {
        return Err(Error::Dimension(format!(
            "field has {} tensors for {} triangles",
            field.len(),
            mesh.n_triangles()
        )));
    }
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::with_capacity(9); mesh.n_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area[t];
        if !(area > 0.0) {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
        let g = mesh.hat_gradients(t);
        let a = &field[t];
        for (bj, &nj) in tri.iter().enumerate() {
            let ag = [
                a[(0, 0)] * g[bj][0] + a[(0, 1)] * g[bj][1],
                a[(1, 0)] * g[bj][0] + a[(1, 1)] * g[bj][1],
            ];
            for (bi, &ni) in tri.iter().enumerate() {
                let v = (ag[0] * g[bi][0] + ag[1] * g[bi][1]) * area;
                add_entry(&mut rows[ni], nj, v);
            }
        }
    }
    for r in rows.iter_mut() {
        r.sort_by_key(|e| e.0);
    }
    Ok(StiffnessSystem {
        rows,
        interior: mesh.interior.clone(),
        boundary: mesh.boundary.clone(),
        local_index: mesh.local_index.clone(),
        is_boundary: (0..mesh.n_nodes()).map(|n| mesh.is_boundary(n)).collect(),
        omega: None,
    })
}

fn add_entry(row: &mut Vec<(usize, C64)>, col: usize, v: C64) {
    match row.iter_mut().find(|e| e.0 == col) {
        Some(e) => e.1 += v,
        None => row.push((col, v)),
    }
}

impl StiffnessSystem {
    pub fn with_omega(mut self, omega: C64) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(ZERO, |e| e.1)
    }

    pub fn row(&self, i: usize) -> &[(usize, C64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n_nodes();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Interior block as an unfactored band matrix.
    pub fn interior_band(&self) -> BandLu<C64> {
        let mut bw = 0;
        for &ni in &self.interior {
            let li = self.local_index[ni];
            for &(nj, _) in &self.rows[ni] {
                if !self.is_boundary[nj] {
                    bw = bw.max(li.abs_diff(self.local_index[nj]));
                }
            }
        }
        let mut band = BandLu::zeros(self.interior.len(), bw);
        for &ni in &self.interior {
            let li = self.local_index[ni];
            for &(nj, v) in &self.rows[ni] {
                if !self.is_boundary[nj] {
                    band.add(li, self.local_index[nj], v);
                }
            }
        }
        band
    }

    /// Factors the interior block once for repeated solves.
    pub fn factor(&self) -> Result<DirichletSolver<'_>> {
        let mut lu = self.interior_band();
        lu.factor().map_err(|k| singular(self.omega, k, self.n_interior()))?;
        Ok(DirichletSolver { sys: self, lu })
    }

    /// `y = K x` for a full nodal vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }
}

pub struct DirichletSolver<'a> {
    sys: &'a StiffnessSystem,
    lu: BandLu<C64>,
}

impl DirichletSolver<'_> {
    /// Full nodal solution with `u|boundary = v0` and interior rows of `K u = 0`.
    pub fn solve(&self, v0: &BoundaryPotential) -> Result<Vec<C64>> {
        let sys = self.sys;
        if v0.values.len() != sys.n_boundary() {
            return Err(Error::Dimension(format!(
                "potential has {} values for {} boundary nodes",
                v0.values.len(),
                sys.n_boundary()
            )));
        }
        let mut u = vec![ZERO; sys.n_nodes()];
        for (k, &n) in sys.boundary.iter().enumerate() {
            u[n] = v0.values[k];
        }
        let mut rhs = vec![ZERO; sys.n_interior()];
        for (li, &ni) in sys.interior.iter().enumerate() {
            let mut s = ZERO;
            for &(nj, v) in &sys.rows[ni] {
                if sys.is_boundary[nj] {
                    s -= v * u[nj];
                }
            }
            rhs[li] = s;
        }
        self.lu.solve_in_place(&mut rhs);
        for (li, &ni) in sys.interior.iter().enumerate() {
            u[ni] = rhs[li];
        }
        Ok(u)
    }

    /// `<Lambda v0, conj v0> = u^H K u` at the Dirichlet solution.
    pub fn quadratic_form(&self, v0: &BoundaryPotential) -> Result<C64> {
        let u = self.solve(v0)?;
        let sys = self.sys;
        let mut s = ZERO;
        for &nb in &sys.boundary {
            let mut ku = ZERO;
            for &(nj, v) in &sys.rows[nb] {
                ku += v * u[nj];
            }
            s += u[nb].conj() * ku;
        }
        Ok(s)
    }

    /// Boundary Schur complement `K_bb - K_bi K_ii^{-1} K_ib`.
    pub fn dtn(&self) -> DtnOperator {
        let sys = self.sys;
        let nb = sys.n_boundary();
        let mut m = DMatrix::<C64>::zeros(nb, nb);
        for k in 0..nb {
            let mut e = vec![ZERO; nb];
            e[k] = C64::new(1.0, 0.0);
            let u = self
                .solve(&BoundaryPotential { values: e })
                .expect("boundary dimension matches by construction");
            for (r, &n) in sys.boundary.iter().enumerate() {
                m[(r, k)] = sys.rows[n].iter().map(|&(j, v)| v * u[j]).sum();
            }
        }
        DtnOperator { matrix: m, provenance: "fem-schur".into() }
    }
}

pub fn solve_dirichlet(sys: &StiffnessSystem, v0: &BoundaryPotential) -> Result<Vec<C64>> {
    sys.factor()?.solve(v0)
}

pub fn dtn_matrix(sys: &StiffnessSystem) -> Result<DtnOperator> {
    Ok(sys.factor()?.dtn())
}

/// `sum_T |T| (a_T grad u) . conj(grad u)`.
pub fn energy(mesh: &Mesh, field: &[Tensor2], u: &[C64]) -> C64 {
    let mut s = ZERO;
    for t in 0..mesh.n_triangles() {
        let g = gradient(mesh, t, u);
        let a = &field[t];
        let ag = [a[(0, 0)] * g[0] + a[(0, 1)] * g[1], a[(1, 0)] * g[0] + a[(1, 1)] * g[1]];
        s += (ag[0] * g[0].conj() + ag[1] * g[1].conj()) * mesh.triangle_area[t];
    }
    s
}

/// Constant gradient of the P1 interpolant of `u` on triangle `t`.
pub fn gradient(mesh: &Mesh, t: usize, u: &[C64]) -> [C64; 2] {
    let g = mesh.hat_gradients(t);
    let tri = mesh.triangles[t];
    let mut out = [ZERO; 2];
    for k in 0..3 {
        out[0] += u[tri[k]] * g[k][0];
        out[1] += u[tri[k]] * g[k][1];
    }
    out
}

/// Complex scalar per boundary node, in mesh boundary order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPotential {
    pub values: Vec<C64>,
}

impl BoundaryPotential {
    pub fn new(values: Vec<C64>) -> Self {
        BoundaryPotential { values }
    }

    /// `-e0 . x` at every boundary node.
    pub fn affine(mesh: &Mesh, e0: [C64; 2]) -> Self {
        let values = mesh.boundary_points().iter().map(|p| -(e0[0] * p[0] + e0[1] * p[1])).collect();
        BoundaryPotential { values }
    }

    pub fn constant(mesh: &Mesh, c: C64) -> Self {
        BoundaryPotential { values: vec![c; mesh.n_boundary()] }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> C64) -> Self {
        BoundaryPotential { values: mesh.boundary_points().into_iter().map(f).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        BoundaryPotential { values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &BoundaryPotential) -> Self {
        BoundaryPotential { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn as_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.values)
    }
}

#[derive(Debug, Clone)]
pub struct DtnOperator {
    pub matrix: DMatrix<C64>,
    /// Route that produced the matrix, `fem-schur` or `effective-lift`.
    pub provenance: String,
}

/// `v0^H M v0`, the pairing `<Lambda v0, conj v0>`.
pub fn quadratic_form(dtn: &DtnOperator, v0: &BoundaryPotential) -> Result<C64> {
    sesquilinear(dtn, v0, v0)
}

/// `v^H M u`, the pairing `<Lambda u, conj v>`.
pub fn sesquilinear(dtn: &DtnOperator, u: &BoundaryPotential, v: &BoundaryPotential) -> Result<C64> {
    let n = dtn.matrix.nrows();
    if u.values.len() != n || v.values.len() != n {
        return Err(Error::Dimension(format!(
            "DtN is {n}x{n}, potentials have {} and {} values",
            u.values.len(),
            v.values.len()
        )));
    }
    let mu = &dtn.matrix * u.as_vector();
    Ok(v.as_vector().dotc(&mu))
}

/// `<Lambda u, conj v>` from four quadratic forms at `u + i^k v`.
pub fn polarization_reconstruct(dtn: &DtnOperator, u: &BoundaryPotential, v: &BoundaryPotential) -> Result<C64> {
    let mut s = ZERO;
    let mut ik = C64::new(1.0, 0.0);
    for _ in 0..4 {
        let w = u.add(&v.scale(ik));
        s += ik * quadratic_form(dtn, &w)?;
        ik *= C64::new(0.0, 1.0);
    }
    Ok(s * 0.25)
}

/// Coordinate-format dump, one `row col re im` line per nonzero (1-based).
pub fn write_matrix_market(m: &DMatrix<C64>, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
    let nnz = m.iter().filter(|v| v.norm() != 0.0).count();
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.norm() != 0.0 {
                writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;
    use crate::linalg::{scalar_tensor, tensor_real};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn field(mesh: &Mesh, f: impl Fn([f64; 2]) -> Tensor2) -> Vec<Tensor2> {
        (0..mesh.n_triangles()).map(|t| f(mesh.centroid(t))).collect()
    }

    #[test]
    fn rows_sum_to_zero_and_scale() {
        let mesh = build_mesh(2, 2, 1.0, 1.0).unwrap();
        let k1 = assemble(&mesh, &field(&mesh, |_| scalar_tensor(c(1.0)))).unwrap().to_dense();
        let k2 = assemble(&mesh, &field(&mesh, |_| scalar_tensor(c(2.0)))).unwrap().to_dense();
        for i in 0..k1.nrows() {
            assert!(k1.row(i).iter().sum::<C64>().norm() < 1e-14);
        }
        assert!((k2 - k1 * c(2.0)).norm() == 0.0);
    }

    #[test]
    fn symmetric_for_symmetric_tensor() {
        let mesh = build_mesh(3, 4, 1.0, 2.0).unwrap();
        let k = assemble(&mesh, &field(&mesh, |p| tensor_real([[1.0 + p[0], 0.3], [0.3, 2.0]]))).unwrap().to_dense();
        assert!((&k - k.transpose()).norm() < 1e-14);
    }

    #[test]
    fn affine_solution_is_exact() {
        let mesh = build_mesh(6, 6, 1.0, 1.0).unwrap();
        let sys = assemble(&mesh, &field(&mesh, |_| scalar_tensor(c(1.0)))).unwrap();
        let v0 = BoundaryPotential::affine(&mesh, [c(1.0), c(0.0)]);
        let u = solve_dirichlet(&sys, &v0).unwrap();
        for (n, p) in mesh.nodes.iter().enumerate() {
            assert!((u[n] + p[0]).norm() < 1e-13);
        }
        let one = solve_dirichlet(&sys, &BoundaryPotential::constant(&mesh, c(1.0))).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).norm() < 1e-13));
        let f = sys.factor().unwrap();
        assert!((f.quadratic_form(&v0).unwrap() - 1.0).norm() < 1e-13);
    }

    #[test]
    fn layered_series_solution() {
        let mesh = build_mesh(8, 8, 1.0, 1.0).unwrap();
        let a = field(&mesh, |p| scalar_tensor(c(if p[0] < 0.5 { 1.0 } else { 3.0 })));
        let sys = assemble(&mesh, &a).unwrap();
        let profile = |x: f64| if x < 0.5 { -1.5 * x } else { -0.75 - 0.5 * (x - 0.5) };
        let v0 = BoundaryPotential::from_fn(&mesh, |p| c(profile(p[0])));
        let u = solve_dirichlet(&sys, &v0).unwrap();
        for t in 0..mesh.n_triangles() {
            let g = gradient(&mesh, t, &u);
            let slope = if mesh.centroid(t)[0] < 0.5 { -1.5 } else { -0.5 };
            assert!((g[0] - slope).norm() < 1e-12 && g[1].norm() < 1e-12);
        }
        let dtn = dtn_matrix(&sys).unwrap();
        assert!((quadratic_form(&dtn, &v0).unwrap() - 1.5).norm() < 1e-12);
        // Affine data on the lateral edges forces extra energy above the harmonic mean.
        let affine = quadratic_form(&dtn, &BoundaryPotential::affine(&mesh, [c(1.0), c(0.0)])).unwrap();
        assert!(affine.re > 1.5 + 1e-6 && affine.re < 2.0 && affine.im.abs() < 1e-12);
        let along = quadratic_form(&dtn, &BoundaryPotential::affine(&mesh, [c(0.0), c(1.0)])).unwrap();
        assert!((along - 2.0).norm() < 1e-12);
        let konst = BoundaryPotential::constant(&mesh, C64::new(0.3, -2.0));
        assert!(quadratic_form(&dtn, &konst).unwrap().norm() < 1e-12);
    }

    #[test]
    fn singular_block_reports_frequency() {
        let mesh = build_mesh(2, 2, 1.0, 1.0).unwrap();
        let sys = assemble(&mesh, &field(&mesh, |_| scalar_tensor(c(0.0)))).unwrap().with_omega(C64::new(1.5, 0.0));
        let err = dtn_matrix(&sys).unwrap_err();
        assert!(format!("{err}").contains("1.5"));
    }

    #[test]
    fn polarization_small_cases() {
        let mesh = build_mesh(3, 3, 1.0, 1.0).unwrap();
        let sys = assemble(&mesh, &field(&mesh, |p| tensor_real([[1.0 + p[1], 0.0], [0.0, 2.0]]))).unwrap();
        let dtn = dtn_matrix(&sys).unwrap();
        let u = BoundaryPotential::from_fn(&mesh, |p| C64::new(p[0], p[1] * p[1]));
        let zero = BoundaryPotential::constant(&mesh, C64::new(0.0, 0.0));
        assert!((polarization_reconstruct(&dtn, &u, &u).unwrap() - quadratic_form(&dtn, &u).unwrap()).norm() < 1e-13);
        assert!(polarization_reconstruct(&dtn, &u, &zero).unwrap().norm() < 1e-13);
        assert!(quadratic_form(&dtn, &BoundaryPotential::new(vec![c(0.0); 3])).is_err());
    }

    #[test]
    fn matrix_market_dump() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), C64::new(0.0, 2.0), c(3.0)]);
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.lines().nth(1).unwrap() == "2 2 3");
    }
}
