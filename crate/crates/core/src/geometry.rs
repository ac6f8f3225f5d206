//! Rectangular domain, criss-cross triangulation and obstacle marking.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
}

/// Structured triangulation of `[0, width] x [0, height]`.
///
/// Cell `(i, j)` is split along the `(i, j)-(i+1, j+1)` diagonal when `i + j`
/// is even and along the other diagonal otherwise. Triangles are stored
/// counter-clockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub node_class: Vec<NodeClass>,
    pub triangle_area: Vec<f64>,
    /// Interior node ids, row-major; position in this list is the interior index.
    pub interior: Vec<usize>,
    /// Boundary node ids, counter-clockwise from the origin corner.
    pub boundary: Vec<usize>,
    /// Global node id -> position in `interior` or `boundary`.
    pub local_index: Vec<usize>,
}

pub fn build_mesh(nx: usize, ny: usize, width: f64, height: f64) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Mesh(format!("need nx, ny >= 2 for an interior node, got {nx}x{ny}")));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::Mesh(format!("width and height must be positive, got {width}x{height}")));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let hx = width / nx as f64;
    let hy = height / ny as f64;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut node_class = Vec::with_capacity(nodes.capacity());
    for j in 0..=ny {
        for i in 0..=nx {
            // Edge coordinates are pinned so boundary traces are exact.
            let x = if i == nx { width } else { i as f64 * hx };
            let y = if j == ny { height } else { j as f64 * hy };
            nodes.push([x, y]);
            let on_edge = i == 0 || j == 0 || i == nx || j == ny;
            node_class.push(if on_edge { NodeClass::Boundary } else { NodeClass::Interior });
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    let triangle_area = triangles
        .iter()
        .map(|t| signed_area(&nodes, t))
        .collect::<Vec<_>>();
    if let Some(k) = triangle_area.iter().position(|&a| a <= 0.0) {
        return Err(Error::Mesh(format!("triangle {k} has non-positive area")));
    }

    let interior: Vec<usize> = (0..nodes.len())
        .filter(|&n| node_class[n] == NodeClass::Interior)
        .collect();
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(id(i, 0));
    }
    for j in 0..ny {
        boundary.push(id(nx, j));
    }
    for i in (1..=nx).rev() {
        boundary.push(id(i, ny));
    }
    for j in (1..=ny).rev() {
        boundary.push(id(0, j));
    }
    let mut local_index = vec![usize::MAX; nodes.len()];
    for (k, &n) in interior.iter().enumerate() {
        local_index[n] = k;
    }
    for (k, &n) in boundary.iter().enumerate() {
        local_index[n] = k;
    }

    Ok(Mesh {
        width,
        height,
        nx,
        ny,
        nodes,
        triangles,
        node_class,
        triangle_area,
        interior,
        boundary,
        local_index,
    })
}

fn signed_area(nodes: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [p, q, r] = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn total_area(&self) -> f64 {
        self.triangle_area.iter().sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let mut c = [0.0; 2];
        for &n in &tri {
            c[0] += self.nodes[n][0] / 3.0;
            c[1] += self.nodes[n][1] / 3.0;
        }
        c
    }

    /// Constant gradients of the three vertex hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        let p: [[f64; 2]; 3] = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
        let two_a = 2.0 * self.triangle_area[t];
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let q = p[(k + 1) % 3];
            let r = p[(k + 2) % 3];
            g[k] = [(q[1] - r[1]) / two_a, (r[0] - q[0]) / two_a];
        }
        g
    }

    pub fn is_boundary(&self, n: usize) -> bool {
        self.node_class[n] == NodeClass::Boundary
    }

    /// Coordinates of the boundary nodes in boundary order.
    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        self.boundary.iter().map(|&n| self.nodes[n]).collect()
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleMask {
    pub member: Vec<bool>,
    pub volume_obstacle: f64,
    pub volume_cloak: f64,
}

impl ObstacleMask {
    pub fn total(&self) -> f64 {
        self.volume_obstacle + self.volume_cloak
    }
}

/// Marks triangles whose centroid lies in any rectangle of `shape`.
pub fn mark_obstacle(mesh: &Mesh, shape: &[Rect]) -> Result<ObstacleMask> {
    let member = mark_region(mesh, shape)?;
    let mut volume_obstacle = 0.0;
    let mut volume_cloak = 0.0;
    for (t, &m) in member.iter().enumerate() {
        if m {
            volume_obstacle += mesh.triangle_area[t];
        } else {
            volume_cloak += mesh.triangle_area[t];
        }
    }
    if volume_obstacle <= 0.0 {
        return Err(Error::Region("obstacle covers no triangle centroid".into()));
    }
    if volume_cloak <= 0.0 {
        return Err(Error::Region("obstacle covers the whole domain, cloak is empty".into()));
    }
    Ok(ObstacleMask { member, volume_obstacle, volume_cloak })
}

/// Per-triangle centroid membership in a union of rectangles.
pub fn mark_region(mesh: &Mesh, shape: &[Rect]) -> Result<Vec<bool>> {
    for r in shape {
        if !(r.x0 < r.x1 && r.y0 < r.y1) || ![r.x0, r.x1, r.y0, r.y1].iter().all(|v| v.is_finite()) {
            return Err(Error::Region(format!("degenerate rectangle {r:?}")));
        }
    }
    Ok((0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.centroid(t);
            shape.iter().any(|r| r.contains(c))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_16() {
        let m = build_mesh(16, 16, 1.0, 1.0).unwrap();
        assert_eq!(m.n_nodes(), 289);
        assert_eq!(m.n_triangles(), 512);
        assert_eq!(m.n_interior(), 225);
        assert_eq!(m.n_boundary(), 64);
        assert!((m.total_area() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn counts_2() {
        let m = build_mesh(2, 2, 1.0, 1.0).unwrap();
        assert_eq!((m.n_nodes(), m.n_triangles(), m.n_interior()), (9, 8, 1));
    }

    #[test]
    fn rejects_small() {
        assert!(build_mesh(1, 4, 1.0, 1.0).is_err());
        assert!(build_mesh(4, 4, 0.0, 1.0).is_err());
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let m = build_mesh(3, 5, 2.0, 1.0).unwrap();
        for t in 0..m.n_triangles() {
            let g = m.hat_gradients(t);
            for c in 0..2 {
                assert!((g[0][c] + g[1][c] + g[2][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_order_is_a_cycle() {
        let m = build_mesh(4, 3, 1.0, 1.0).unwrap();
        assert_eq!(m.boundary.len(), 14);
        let mut seen = m.boundary.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 14);
        assert!(m.boundary.iter().all(|&n| m.is_boundary(n)));
    }

    #[test]
    fn obstacle_volumes() {
        let m = build_mesh(16, 16, 1.0, 1.0).unwrap();
        let sq = Rect { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 };
        let o = mark_obstacle(&m, &[sq]).unwrap();
        assert!((o.volume_obstacle - 0.25).abs() < 1e-12);
        assert!((o.volume_cloak - 0.75).abs() < 1e-12);
        let all = Rect { x0: -1.0, y0: -1.0, x1: 2.0, y1: 2.0 };
        assert!(mark_obstacle(&m, &[all]).is_err());
        let two = [
            Rect { x0: 0.0, y0: 0.0, x1: 0.25, y1: 0.25 },
            Rect { x0: 0.5, y0: 0.5, x1: 0.75, y1: 0.75 },
        ];
        let o2 = mark_obstacle(&m, &two).unwrap();
        assert!((o2.volume_obstacle - 0.125).abs() < 1e-12);
    }
}
