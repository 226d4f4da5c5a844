//! Dense reference assemblers for P1 vector velocity on a triangle mesh.
//!
//! Everything here is written from the physical barycentric coordinates of
//! each triangle and shares no code with the library's reference-element
//! machinery, so agreement between the two is a meaningful check.
#![allow(dead_code)]

use kvdg::mesh::TriMesh;
use nalgebra::{DMatrix, DVector};

pub type V2 = [f64; 2];

/// Velocity DOF of local vertex `i`, component `c` on triangle `t`.
pub fn vdof(t: usize, c: usize, i: usize) -> usize {
    6 * t + 3 * c + i
}

pub fn bary(mesh: &TriMesh, t: usize, x: V2) -> [f64; 3] {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

pub fn bary_grad(mesh: &TriMesh, t: usize) -> [V2; 3] {
    let p = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (b, c) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(b[1] - c[1]) / det, (c[0] - b[0]) / det];
    }
    g
}

/// Edge midpoints with weight `area / 3`: exact for quadratics.
pub fn volume_points(mesh: &TriMesh, t: usize) -> Vec<(V2, f64)> {
    let p = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let w = mesh.areas[t] / 3.0;
    (0..3)
        .map(|i| {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            ([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], w)
        })
        .collect()
}

/// Three-point Gauss-Legendre on the segment `a -> b`: exact to degree 5.
pub fn segment_points(a: V2, b: V2) -> Vec<(V2, f64)> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let r = (0.6f64).sqrt() / 2.0;
    [
        (0.5 - r, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + r, 5.0 / 18.0),
    ]
    .iter()
    .map(|&(s, w)| {
        (
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            w * len,
        )
    })
    .collect()
}

/// An edge as seen by the oracle: its endpoints, the triangles on either
/// side and the unit normal pointing out of `m`.
pub struct OEdge {
    pub a: V2,
    pub b: V2,
    pub m: usize,
    pub n: Option<usize>,
    pub normal: V2,
    pub length: f64,
}

pub fn oracle_edges(mesh: &TriMesh) -> Vec<OEdge> {
    mesh.edges
        .iter()
        .map(|e| {
            let [a, b] = e.vertices.map(|v| mesh.vertices[v]);
            let m = e.first.triangle;
            let length = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let mut normal = [(b[1] - a[1]) / length, -(b[0] - a[0]) / length];
            // orient away from the vertex of m opposite the edge
            let c = mesh.triangles[m]
                .iter()
                .map(|&v| mesh.vertices[v])
                .find(|p| *p != a && *p != b)
                .unwrap();
            if (c[0] - a[0]) * normal[0] + (c[1] - a[1]) * normal[1] > 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            OEdge {
                a,
                b,
                m,
                n: e.second.map(|s| s.triangle),
                normal,
                length,
            }
        })
        .collect()
}

pub fn value(mesh: &TriMesh, u: &[f64], t: usize, x: V2) -> V2 {
    let l = bary(mesh, t, x);
    let mut v = [0.0; 2];
    for c in 0..2 {
        for i in 0..3 {
            v[c] += u[vdof(t, c, i)] * l[i];
        }
    }
    v
}

/// `grad[c][d] = d u_c / d x_d`, constant on each triangle.
pub fn gradient(mesh: &TriMesh, u: &[f64], t: usize) -> [V2; 2] {
    let g = bary_grad(mesh, t);
    let mut out = [[0.0; 2]; 2];
    for c in 0..2 {
        for i in 0..3 {
            for d in 0..2 {
                out[c][d] += u[vdof(t, c, i)] * g[i][d];
            }
        }
    }
    out
}

fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(M)_{ij} = int phi_j . phi_i`.
pub fn dense_mass(mesh: &TriMesh) -> DMatrix<f64> {
    let nt = mesh.num_triangles();
    let mut m = DMatrix::zeros(6 * nt, 6 * nt);
    for t in 0..nt {
        for (x, w) in volume_points(mesh, t) {
            let l = bary(mesh, t, x);
            for c in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        m[(vdof(t, c, i), vdof(t, c, j))] += w * l[i] * l[j];
                    }
                }
            }
        }
    }
    m
}

/// `A_{ij} = a(phi_j, phi_i) + J0(phi_j, phi_i)` with symmetry switch `eps`.
pub fn dense_sipg(mesh: &TriMesh, sigma: f64, eps: f64) -> DMatrix<f64> {
    let nt = mesh.num_triangles();
    let mut a = DMatrix::zeros(6 * nt, 6 * nt);
    for t in 0..nt {
        let g = bary_grad(mesh, t);
        for c in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    a[(vdof(t, c, i), vdof(t, c, j))] += mesh.areas[t] * dot(g[i], g[j]);
                }
            }
        }
    }
    for e in oracle_edges(mesh) {
        // (triangle, jump sign, average weight)
        let mut sides = vec![(e.m, 1.0, 1.0)];
        if let Some(n) = e.n {
            sides = vec![(e.m, 1.0, 0.5), (n, -1.0, 0.5)];
        }
        for (x, w) in segment_points(e.a, e.b) {
            for &(tx, sx, ax) in &sides {
                let (lx, gx) = (bary(mesh, tx, x), bary_grad(mesh, tx));
                for &(ty, sy, ay) in &sides {
                    let (ly, gy) = (bary(mesh, ty, x), bary_grad(mesh, ty));
                    for i in 0..3 {
                        for j in 0..3 {
                            // test phi_i on side x, trial phi_j on side y
                            let v = -ay * dot(gy[j], e.normal) * sx * lx[i]
                                + eps * ax * dot(gx[i], e.normal) * sy * ly[j]
                                + sigma / e.length * sx * sy * lx[i] * ly[j];
                            for c in 0..2 {
                                a[(vdof(tx, c, i), vdof(ty, c, j))] += w * v;
                            }
                        }
                    }
                }
            }
        }
    }
    a
}

/// `B_{qj} = b(phi_j, q)` for P0 or P1 scalar pressure.
pub fn dense_divergence(mesh: &TriMesh, pdeg: usize) -> DMatrix<f64> {
    let nt = mesh.num_triangles();
    let np = if pdeg == 0 { 1 } else { 3 };
    let psi = |t: usize, x: V2| -> Vec<f64> {
        if pdeg == 0 {
            vec![1.0]
        } else {
            bary(mesh, t, x).to_vec()
        }
    };
    let mut b = DMatrix::zeros(np * nt, 6 * nt);
    for t in 0..nt {
        let g = bary_grad(mesh, t);
        for (x, w) in volume_points(mesh, t) {
            let q = psi(t, x);
            for (k, qk) in q.iter().enumerate() {
                for c in 0..2 {
                    for j in 0..3 {
                        b[(np * t + k, vdof(t, c, j))] -= w * qk * g[j][c];
                    }
                }
            }
        }
    }
    for e in oracle_edges(mesh) {
        let mut sides = vec![(e.m, 1.0, 1.0)];
        if let Some(n) = e.n {
            sides = vec![(e.m, 1.0, 0.5), (n, -1.0, 0.5)];
        }
        for (x, w) in segment_points(e.a, e.b) {
            for &(tx, _, ax) in &sides {
                let q = psi(tx, x);
                for &(ty, sy, _) in &sides {
                    let l = bary(mesh, ty, x);
                    for (k, qk) in q.iter().enumerate() {
                        for c in 0..2 {
                            for j in 0..3 {
                                b[(np * tx + k, vdof(ty, c, j))] +=
                                    w * ax * qk * sy * l[j] * e.normal[c];
                            }
                        }
                    }
                }
            }
        }
    }
    b
}

/// Direct elementwise evaluation of the upwind trilinear form
/// `c^w(w, z, rho)`: volume transport, inflow jumps over each element
/// boundary, the divergence correction and the normal-jump correction.
pub fn convection_direct(mesh: &TriMesh, w: &[f64], z: &[f64], rho: &[f64]) -> f64 {
    let nt = mesh.num_triangles();
    let edges = oracle_edges(mesh);
    let mut total = 0.0;
    for t in 0..nt {
        let (gw, gz) = (gradient(mesh, w, t), gradient(mesh, z, t));
        let divw = gw[0][0] + gw[1][1];
        for (x, wt) in volume_points(mesh, t) {
            let (wv, zv, rv) = (
                value(mesh, w, t, x),
                value(mesh, z, t, x),
                value(mesh, rho, t, x),
            );
            for c in 0..2 {
                total += wt * (dot(wv, gz[c]) + 0.5 * divw * zv[c]) * rv[c];
            }
        }
    }
    for e in &edges {
        let mut owners = vec![(e.m, e.n, 1.0)];
        if let Some(n) = e.n {
            owners.push((n, Some(e.m), -1.0));
        }
        for (x, wt) in segment_points(e.a, e.b) {
            let wm = value(mesh, w, e.m, x);
            let wavg = match e.n {
                Some(n) => {
                    let wn = value(mesh, w, n, x);
                    [0.5 * (wm[0] + wn[0]), 0.5 * (wm[1] + wn[1])]
                }
                None => wm,
            };
            for &(tin, tout, sgn) in &owners {
                let nt_out = [sgn * e.normal[0], sgn * e.normal[1]];
                let s = dot(wavg, nt_out);
                if s < 0.0 {
                    let zi = value(mesh, z, tin, x);
                    let ze = tout.map_or([0.0; 2], |o| value(mesh, z, o, x));
                    let ri = value(mesh, rho, tin, x);
                    total += wt * s.abs() * ((zi[0] - ze[0]) * ri[0] + (zi[1] - ze[1]) * ri[1]);
                }
            }
            let jump_w = match e.n {
                Some(n) => {
                    let wn = value(mesh, w, n, x);
                    [wm[0] - wn[0], wm[1] - wn[1]]
                }
                None => wm,
            };
            let zr = |t: usize| dot(value(mesh, z, t, x), value(mesh, rho, t, x));
            let avg = match e.n {
                Some(n) => 0.5 * (zr(e.m) + zr(n)),
                None => zr(e.m),
            };
            total -= 0.5 * wt * dot(jump_w, e.normal) * avg;
        }
    }
    total
}

/// The integrated-by-parts form of `c^w(w, z, rho)`, valid when the
/// upwinding field equals the transporting field. The closing boundary term
/// runs over the inflow boundary `w . n < 0`.
pub fn convection_identity(mesh: &TriMesh, w: &[f64], z: &[f64], rho: &[f64]) -> f64 {
    let nt = mesh.num_triangles();
    let mut total = 0.0;
    for t in 0..nt {
        let (gw, gr) = (gradient(mesh, w, t), gradient(mesh, rho, t));
        let divw = gw[0][0] + gw[1][1];
        for (x, wt) in volume_points(mesh, t) {
            let (wv, zv, rv) = (
                value(mesh, w, t, x),
                value(mesh, z, t, x),
                value(mesh, rho, t, x),
            );
            for c in 0..2 {
                total -= wt * (dot(wv, gr[c]) * zv[c] + 0.5 * divw * zv[c] * rv[c]);
            }
        }
    }
    for e in oracle_edges(mesh) {
        for (x, wt) in segment_points(e.a, e.b) {
            let wm = value(mesh, w, e.m, x);
            let zr = |t: usize| dot(value(mesh, z, t, x), value(mesh, rho, t, x));
            match e.n {
                Some(n) => {
                    let wn = value(mesh, w, n, x);
                    let jump = [wm[0] - wn[0], wm[1] - wn[1]];
                    total += 0.5 * wt * dot(jump, e.normal) * 0.5 * (zr(e.m) + zr(n));
                    let s = 0.5 * (dot(wm, e.normal) + dot(wn, e.normal));
                    // the inflow side of the edge sees the other side's z
                    let (tin, tout) = if s < 0.0 { (e.m, n) } else { (n, e.m) };
                    let ze = value(mesh, z, tout, x);
                    let (ri, re) = (value(mesh, rho, tin, x), value(mesh, rho, tout, x));
                    total -= wt * s.abs() * (ze[0] * (ri[0] - re[0]) + ze[1] * (ri[1] - re[1]));
                }
                None => {
                    let s = dot(wm, e.normal);
                    total += 0.5 * wt * s * zr(e.m);
                    if s < 0.0 {
                        total += wt * s.abs() * zr(e.m);
                    }
                }
            }
        }
    }
    total
}

/// Dense convection matrix built column by column from [`convection_direct`].
pub fn dense_convection(mesh: &TriMesh, w: &[f64]) -> DMatrix<f64> {
    let n = 6 * mesh.num_triangles();
    let mut out = DMatrix::zeros(n, n);
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    for j in 0..n {
        z[j] = 1.0;
        // only the element of j and its neighbours can couple
        let t = j / 6;
        let mut near: Vec<usize> = mesh.neighbors(t).collect();
        near.push(t);
        for &s in &near {
            for i in 6 * s..6 * s + 6 {
                r[i] = 1.0;
                out[(i, j)] = convection_direct(mesh, w, &z, &r);
                r[i] = 0.0;
            }
        }
        z[j] = 0.0;
    }
    out
}

pub fn csr_to_dense(a: &kvdg::linalg::CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}

/// Solves `[[K, B^T, 0], [B, 0, m^T], [0, m, 0]]` densely by LU.
pub fn dense_saddle_solve(
    k: &DMatrix<f64>,
    b: &DMatrix<f64>,
    mean: &[f64],
    rhs_v: &[f64],
    rhs_p: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (nv, np) = (k.nrows(), b.nrows());
    let n = nv + np + 1;
    let mut full = DMatrix::zeros(n, n);
    full.view_mut((0, 0), (nv, nv)).copy_from(k);
    full.view_mut((nv, 0), (np, nv)).copy_from(b);
    full.view_mut((0, nv), (nv, np)).copy_from(&b.transpose());
    for (q, &m) in mean.iter().enumerate() {
        full[(nv + q, n - 1)] = m;
        full[(n - 1, nv + q)] = m;
    }
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, nv).copy_from_slice(rhs_v);
    rhs.rows_mut(nv, np).copy_from_slice(rhs_p);
    let x = full
        .lu()
        .solve(&rhs)
        .expect("dense saddle system is singular");
    let u = x.rows(0, nv).iter().copied().collect();
    let mut p: Vec<f64> = x.rows(nv, np).iter().copied().collect();
    let shift = p.iter().zip(mean).map(|(a, b)| a * b).sum::<f64>() / mean.iter().sum::<f64>();
    p.iter_mut().for_each(|v| *v -= shift);
    (u, p)
}
