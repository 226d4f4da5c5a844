//! Triangulations of the unit square with full edge topology.
//!
//! Every triangle is stored counterclockwise. Local edge `k` of a triangle is
//! the edge opposite local vertex `k`, running from vertex `k+1` to `k+2`.
//! Each edge records its first adjacent triangle `T_m` (the one with the
//! smaller index) and, for interior edges, the second one `T_n`; the stored
//! unit normal points from `T_m` into `T_n`, or out of the domain on the
//! boundary.

use std::collections::HashMap;
use std::io::BufRead;

use crate::quadrature::QuadRule;
use crate::{Error, Result, Vec2};

/// Reference coordinates of the three vertices of the reference triangle.
pub const REF_VERTICES: [Vec2; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// One triangle adjacent to an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub triangle: usize,
    /// Index of the edge within the triangle (opposite local vertex).
    pub local_edge: usize,
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, ordered counterclockwise with respect to `first`.
    pub vertices: [usize; 2],
    pub length: f64,
    pub normal: Vec2,
    pub first: EdgeSide,
    pub second: Option<EdgeSide>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    pub fn sides(&self) -> impl Iterator<Item = EdgeSide> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

/// Affine map from the reference triangle onto a physical triangle,
/// `x = origin + jac * xi`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Vec2,
    /// Row-major 2x2 Jacobian; its columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(p0: Vec2, p1: Vec2, p2: Vec2) -> Self {
        let jac = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Self {
            origin: p0,
            jac,
            inv,
            det,
        }
    }

    pub fn to_physical(&self, xi: Vec2) -> Vec2 {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Vec2) -> Vec2 {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Maps a reference gradient to the physical gradient (`J^{-T} g`).
    pub fn push_gradient(&self, g: Vec2) -> Vec2 {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Global edge index of each local edge of each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    pub diameters: Vec<f64>,
    pub h_max: f64,
}

fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl TriMesh {
    /// Uniform `n x n` lattice on the unit square, each cell split along
    /// its lower-left to upper-right diagonal.
    pub fn structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("mesh resolution must be at least 1".into()));
        }
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_triangles(vertices, triangles)
    }

    /// Builds the edge topology for an arbitrary conforming triangle list.
    pub fn from_triangles(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let signed = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            if signed <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {t} is not counterclockwise (signed area {signed:e})"
                )));
            }
            areas.push(signed);
            diameters.push(dist(a, b).max(dist(b, c)).max(dist(c, a)));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let side = EdgeSide {
                    triangle: t,
                    local_edge: k,
                };
                match lookup.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let length = dist(pa, pb);
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        lookup.insert(key, edges.len());
                        triangle_edges[t][k] = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            length,
                            normal,
                            first: side,
                            second: None,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.second.is_some() {
                            return Err(Error::Mesh(format!(
                                "edge ({}, {}) is shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        if edge.vertices != [b, a] {
                            return Err(Error::Mesh(format!(
                                "triangles {} and {t} have inconsistent orientation",
                                edge.first.triangle
                            )));
                        }
                        edge.second = Some(side);
                        triangle_edges[t][k] = e;
                    }
                }
            }
        }
        let h_max = diameters.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            areas,
            diameters,
            h_max,
        })
    }

    /// Reads the plain-text format: `V T`, then `V` lines `x y`, then `T`
    /// lines `i j k` with 0-based vertex indices.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| Error::Mesh(format!("unexpected end of input reading {what}")))
        };
        let parse_usize = |s: String| {
            s.parse::<usize>()
                .map_err(|e| Error::Mesh(format!("bad integer {s:?}: {e}")))
        };
        let parse_f64 = |s: String| {
            s.parse::<f64>()
                .map_err(|e| Error::Mesh(format!("bad number {s:?}: {e}")))
        };
        let nv = parse_usize(next("vertex count")?)?;
        let nt = parse_usize(next("triangle count")?)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            vertices.push([parse_f64(next("vertex")?)?, parse_f64(next("vertex")?)?]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            triangles.push([
                parse_usize(next("triangle")?)?,
                parse_usize(next("triangle")?)?,
                parse_usize(next("triangle")?)?,
            ]);
        }
        Self::from_triangles(vertices, triangles)
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn affine(&self, t: usize) -> AffineMap {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        AffineMap::new(a, b, c)
    }

    /// Elements sharing an edge with `t`.
    pub fn neighbors(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.triangle_edges[t].iter().filter_map(move |&e| {
            let edge = &self.edges[e];
            match edge.second {
                Some(s) if edge.first.triangle == t => Some(s.triangle),
                Some(_) => Some(edge.first.triangle),
                None => None,
            }
        })
    }

    /// Reference coordinates, within `side.triangle`, of the point at
    /// parameter `s` in [0, 1] along the edge (from `vertices[0]` to `vertices[1]`).
    pub fn edge_point_on_side(&self, edge: &Edge, side: EdgeSide, s: f64) -> Vec2 {
        let tri = &self.triangles[side.triangle];
        let local = |v: usize| REF_VERTICES[tri.iter().position(|&w| w == v).unwrap()];
        let (a, b) = (local(edge.vertices[0]), local(edge.vertices[1]));
        [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]
    }

    /// Quadrature frame for evaluating traces, jumps and averages on edge `e`.
    pub fn jump_average_frame(&self, e: usize, rule: &QuadRule) -> EdgeFrame {
        let edge = &self.edges[e];
        let [pa, pb] = edge.vertices.map(|v| self.vertices[v]);
        let points = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, &w)| {
                let s = p[0];
                let trace = |side: EdgeSide| TracePoint {
                    triangle: side.triangle,
                    reference: self.edge_point_on_side(edge, side, s),
                };
                EdgeQuadPoint {
                    physical: [(1.0 - s) * pa[0] + s * pb[0], (1.0 - s) * pa[1] + s * pb[1]],
                    weight: w * edge.length,
                    first: trace(edge.first),
                    second: edge.second.map(trace),
                }
            })
            .collect();
        EdgeFrame {
            edge: e,
            normal: edge.normal,
            length: edge.length,
            points,
        }
    }

    /// All triangles containing `x` (up to `tol` in barycentric coordinates),
    /// with the corresponding reference coordinates.
    pub fn locate(&self, x: Vec2, tol: f64) -> Vec<(usize, Vec2)> {
        (0..self.num_triangles())
            .filter_map(|t| {
                let xi = self.affine(t).to_reference(x);
                let inside = xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol;
                inside.then_some((t, xi))
            })
            .collect()
    }
}

/// Location of a trace evaluation: an element and a point in its reference frame.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub triangle: usize,
    pub reference: Vec2,
}

#[derive(Debug, Clone)]
pub struct EdgeQuadPoint {
    pub physical: Vec2,
    /// Quadrature weight including the edge length.
    pub weight: f64,
    /// Trace from `T_m`.
    pub first: TracePoint,
    /// Trace from `T_n`; absent on the boundary.
    pub second: Option<TracePoint>,
}

/// Per-edge quadrature data ordered consistently with the edge normal.
#[derive(Debug, Clone)]
pub struct EdgeFrame {
    pub edge: usize,
    pub normal: Vec2,
    pub length: f64,
    pub points: Vec<EdgeQuadPoint>,
}

impl EdgeFrame {
    pub fn is_boundary(&self) -> bool {
        self.points.first().is_none_or(|p| p.second.is_none())
    }

    /// Weights `(w_m, w_n)` so that `[phi] = w_m phi_m + w_n phi_n`.
    pub fn jump_weights(&self) -> (f64, f64) {
        if self.is_boundary() {
            (1.0, 0.0)
        } else {
            (1.0, -1.0)
        }
    }

    /// Weights `(w_m, w_n)` so that `{phi} = w_m phi_m + w_n phi_n`.
    pub fn average_weights(&self) -> (f64, f64) {
        if self.is_boundary() {
            (1.0, 0.0)
        } else {
            (0.5, 0.5)
        }
    }

    pub fn jump(&self, first: f64, second: Option<f64>) -> f64 {
        first - second.unwrap_or(0.0)
    }

    pub fn average(&self, first: f64, second: Option<f64>) -> f64 {
        match second {
            Some(s) => 0.5 * (first + s),
            None => first,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn smallest_split_square() {
        let m = TriMesh::structured(1).unwrap();
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.edges.len(), 5);
        assert_eq!(m.edges.iter().filter(|e| e.is_boundary()).count(), 4);
        assert!(close(m.h_max, 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn edge_counts_match_counting_formula() {
        for n in 1..=8 {
            let m = TriMesh::structured(n).unwrap();
            let boundary = m.edges.iter().filter(|e| e.is_boundary()).count();
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert_eq!(m.edges.len(), 2 * n * (n + 1) + n * n);
            assert_eq!(boundary, 4 * n);
        }
        let m = TriMesh::structured(4).unwrap();
        assert_eq!(m.edges.len(), 56);
        assert_eq!(m.edges.iter().filter(|e| !e.is_boundary()).count(), 40);
    }

    #[test]
    fn areas_tile_unit_square() {
        for n in [1, 2, 5] {
            let m = TriMesh::structured(n).unwrap();
            assert!(close(m.areas.iter().sum::<f64>(), 1.0, 1e-12));
            assert!(m.areas.iter().all(|&a| a > 0.0));
            let dmin = m.diameters.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(m.h_max / dmin <= 2.0);
        }
    }

    #[test]
    fn refinement_halves_h() {
        for n in [1, 3, 8] {
            let a = TriMesh::structured(n).unwrap().h_max;
            let b = TriMesh::structured(2 * n).unwrap().h_max;
            assert!(close(b, a / 2.0, 1e-15));
        }
    }

    #[test]
    fn normals_point_from_first_to_second() {
        let m = TriMesh::structured(3).unwrap();
        let centroid = |t: usize| {
            let [a, b, c] = m.triangles[t].map(|v| m.vertices[v]);
            [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
        };
        for e in &m.edges {
            let [pa, pb] = e.vertices.map(|v| m.vertices[v]);
            assert!(close(e.length, dist(pa, pb), 1e-15));
            let n = e.normal;
            assert!(close(n[0].hypot(n[1]), 1.0, 1e-14));
            assert!(close(
                n[0] * (pb[0] - pa[0]) + n[1] * (pb[1] - pa[1]),
                0.0,
                1e-14
            ));
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let cm = centroid(e.first.triangle);
            assert!((mid[0] - cm[0]) * n[0] + (mid[1] - cm[1]) * n[1] > 0.0);
            if let Some(s) = e.second {
                assert!(e.first.triangle < s.triangle);
            } else {
                // outward: the midpoint sits on the square's boundary
                let out = [mid[0] + 0.1 * n[0], mid[1] + 0.1 * n[1]];
                assert!(out[0] < 0.0 || out[0] > 1.0 || out[1] < 0.0 || out[1] > 1.0);
            }
        }
    }

    #[test]
    fn triangle_edges_are_consistent() {
        let m = TriMesh::structured(4).unwrap();
        for (t, te) in m.triangle_edges.iter().enumerate() {
            for (k, &e) in te.iter().enumerate() {
                let edge = &m.edges[e];
                assert!(edge.sides().any(|s| s
                    == EdgeSide {
                        triangle: t,
                        local_edge: k
                    }));
                let tri = m.triangles[t];
                let mut ends = [tri[(k + 1) % 3], tri[(k + 2) % 3]];
                let mut stored = edge.vertices;
                ends.sort();
                stored.sort();
                assert_eq!(ends, stored);
            }
        }
    }

    #[test]
    fn frame_traces_agree_physically() {
        let m = TriMesh::structured(3).unwrap();
        let rule = edge_rule(4).unwrap();
        for e in 0..m.edges.len() {
            let frame = m.jump_average_frame(e, &rule);
            for q in &frame.points {
                for tp in std::iter::once(q.first).chain(q.second) {
                    let x = m.affine(tp.triangle).to_physical(tp.reference);
                    assert!(close(x[0], q.physical[0], 1e-14) && close(x[1], q.physical[1], 1e-14));
                }
            }
            assert!(close(
                frame.points.iter().map(|q| q.weight).sum::<f64>(),
                frame.length,
                1e-14
            ));
        }
    }

    #[test]
    fn jump_and_average_definitions() {
        let m = TriMesh::structured(2).unwrap();
        let rule = edge_rule(2).unwrap();
        let boundary = m.edges.iter().position(|e| e.is_boundary()).unwrap();
        let f = m.jump_average_frame(boundary, &rule);
        assert_eq!(f.jump(3.0, None), 3.0);
        assert_eq!(f.average(3.0, None), 3.0);
        let interior = m.edges.iter().position(|e| !e.is_boundary()).unwrap();
        let f = m.jump_average_frame(interior, &rule);
        // indicator of T_m
        assert_eq!(f.jump(1.0, Some(0.0)), 1.0);
        assert_eq!(f.average(1.0, Some(0.0)), 0.5);
        // continuous function
        assert_eq!(f.jump(2.5, Some(2.5)), 0.0);
    }

    #[test]
    fn reads_text_format() {
        let text = "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";
        let m = TriMesh::read(text.as_bytes()).unwrap();
        assert_eq!(m.edges.len(), 5);
        let bad = "3 1\n0 0\n0 1\n1 0\n0 1 2\n";
        assert!(matches!(TriMesh::read(bad.as_bytes()), Err(Error::Mesh(_))));
        assert!(TriMesh::structured(0).is_err());
    }

    #[test]
    fn locate_finds_all_adjacent_elements() {
        let m = TriMesh::structured(2).unwrap();
        assert_eq!(m.locate([0.1, 0.05], 1e-12).len(), 1);
        // on the shared diagonal of the lower-left cell
        assert_eq!(m.locate([0.25, 0.25], 1e-12).len(), 2);
        assert_eq!(m.locate([0.5, 0.5], 1e-12).len(), 6);
    }
}
