//! Assembly of the discrete operators.
//!
//! For a broken vector space `V_h` and pressure space `M_h` this module builds
//!
//! * the mass matrix `(u, v)`;
//! * the interior penalty diffusion matrix `a(u, v) + J0(u, v)` with
//!   `a(w, v) = sum_T (grad w, grad v)_T - sum_e ({grad w} n_e, [v])_e
//!            + eps sum_e ({grad v} n_e, [w])_e`
//!   and `J0(v, w) = sum_e sigma_e / |e| ([v], [w])_e`;
//! * the divergence coupling `b(v, q) = -sum_T (q, div v)_T + sum_e ({q}, [v].n_e)_e`;
//! * the upwinded convection matrix `N(w)_ij = c^w(w; phi_j, phi_i)`.
//!
//! Sums over `e` run over all edges, boundary edges included; there the jump
//! and average both reduce to the one-sided trace. All velocity operators are
//! laid out on one DG pattern (each element coupled to itself and its edge
//! neighbours) so that they can be added without re-merging.

use std::sync::Arc;

use crate::linalg::CsrMatrix;
use crate::mesh::{EdgeFrame, TriMesh};
use crate::quadrature::{edge_rule, triangle_rule, QuadRule, MAX_DEGREE};
use crate::space::{BrokenSpace, FemField};
use crate::{Error, Result, Vec2};

/// Sign of the adjoint consistency term in `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Symmetric interior penalty, `eps = -1`.
    Sipg,
    /// Non-symmetric interior penalty, `eps = +1`.
    Nipg,
}

impl Symmetry {
    pub fn epsilon(self) -> f64 {
        match self {
            Symmetry::Sipg => -1.0,
            Symmetry::Nipg => 1.0,
        }
    }

    pub fn from_epsilon(eps: f64) -> Result<Self> {
        if eps == -1.0 {
            Ok(Symmetry::Sipg)
        } else if eps == 1.0 {
            Ok(Symmetry::Nipg)
        } else {
            Err(Error::Config(format!(
                "epsilon must be -1 (SIPG) or +1 (NIPG), got {eps}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Retardation time.
    pub kappa: f64,
    /// Uniform edge penalty.
    pub sigma_e: f64,
    pub symmetry: Symmetry,
}

impl Default for FormParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            kappa: 1e-2,
            sigma_e: 10.0,
            symmetry: Symmetry::Sipg,
        }
    }
}

impl FormParams {
    /// Smallest admissible SIPG penalty for velocity degree `k`.
    pub fn sigma_min(k: usize) -> f64 {
        4.0 * (k * k) as f64
    }

    pub fn validate(&self, velocity_degree: usize) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!(
                "kappa must be nonnegative, got {}",
                self.kappa
            )));
        }
        if !(self.sigma_e > 0.0 && self.sigma_e.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_e must be positive, got {}",
                self.sigma_e
            )));
        }
        let s0 = Self::sigma_min(velocity_degree);
        if self.symmetry == Symmetry::Sipg && self.sigma_e < s0 {
            return Err(Error::Config(format!(
                "sigma_e = {} is below the SIPG threshold {s0} for degree {velocity_degree}",
                self.sigma_e
            )));
        }
        Ok(())
    }
}

/// Volume and edge rules used for assembly: exact to degree `2k + 2`.
pub fn assembly_rules(space: &BrokenSpace) -> (QuadRule, QuadRule) {
    let d = (2 * space.degree() + 2).min(MAX_DEGREE);
    (
        triangle_rule(d).expect("degree in range"),
        edge_rule(d).expect("degree in range"),
    )
}

/// Element-block sparsity: each element coupled to a sorted list of elements.
#[derive(Debug, Clone)]
pub struct DgPattern {
    coupled: Vec<Vec<usize>>,
}

impl DgPattern {
    /// Each element coupled to itself and its edge neighbours.
    pub fn face_neighbors(mesh: &TriMesh) -> Self {
        let coupled = (0..mesh.num_triangles())
            .map(|t| {
                let mut c: Vec<usize> = std::iter::once(t).chain(mesh.neighbors(t)).collect();
                c.sort_unstable();
                c
            })
            .collect();
        Self { coupled }
    }

    pub fn block_diagonal(mesh: &TriMesh) -> Self {
        Self {
            coupled: (0..mesh.num_triangles()).map(|t| vec![t]).collect(),
        }
    }

    /// Zero matrix with `nr` rows and `nc` columns per element block.
    pub fn matrix(&self, nr: usize, nc: usize) -> CsrMatrix {
        let ne = self.coupled.len();
        let mut rows = Vec::with_capacity(ne * nr);
        for list in &self.coupled {
            let cols: Vec<usize> = list.iter().flat_map(|&s| s * nc..(s + 1) * nc).collect();
            for _ in 0..nr {
                rows.push(cols.clone());
            }
        }
        CsrMatrix::from_pattern(ne * nc, rows)
    }

    /// Adds a dense row-major `nr x nc` block coupling row element `t` to column element `s`.
    pub fn add_block(
        &self,
        m: &mut CsrMatrix,
        t: usize,
        s: usize,
        nr: usize,
        nc: usize,
        block: &[f64],
    ) {
        let slot = self.coupled[t]
            .binary_search(&s)
            .expect("elements are not coupled in this pattern");
        let starts: Vec<usize> = (0..nr)
            .map(|a| m.row_ptr()[t * nr + a] + slot * nc)
            .collect();
        let vals = m.values_mut();
        for (a, &start) in starts.iter().enumerate() {
            for (v, b) in vals[start..start + nc]
                .iter_mut()
                .zip(&block[a * nc..(a + 1) * nc])
            {
                *v += b;
            }
        }
    }
}

// Basis values and normal derivatives of the scalar basis on one side of an edge.
struct SideTrace {
    phi: [f64; 6],
    dn: [f64; 6],
}

fn side_trace(space: &BrokenSpace, t: usize, xi: Vec2, normal: Vec2) -> SideTrace {
    let basis = space.basis();
    let map = space.mesh().affine(t);
    let mut phi = [0.0; 6];
    let mut g = [[0.0; 2]; 6];
    basis.eval(xi, &mut phi);
    basis.eval_grad(xi, &mut g);
    let mut dn = [0.0; 6];
    for i in 0..basis.len() {
        let pg = map.push_gradient(g[i]);
        dn[i] = pg[0] * normal[0] + pg[1] * normal[1];
    }
    SideTrace { phi, dn }
}

/// Replicates a scalar `n x n` block onto `components` diagonal blocks.
fn expand_components(scalar: &[f64], n: usize, components: usize, out: &mut [f64]) {
    let nc = n * components;
    out.iter_mut().for_each(|v| *v = 0.0);
    for c in 0..components {
        for i in 0..n {
            for j in 0..n {
                out[(c * n + i) * nc + c * n + j] = scalar[i * n + j];
            }
        }
    }
}

fn add_scalar_block(
    pattern: &DgPattern,
    m: &mut CsrMatrix,
    space: &BrokenSpace,
    t: usize,
    s: usize,
    scalar: &[f64],
) {
    let (n, c) = (space.nloc(), space.components());
    let nd = n * c;
    let mut full = vec![0.0; nd * nd];
    expand_components(scalar, n, c, &mut full);
    pattern.add_block(m, t, s, nd, nd, &full);
}

/// `M_ij = (phi_j, phi_i)`, block diagonal.
pub fn assemble_mass(space: &BrokenSpace) -> CsrMatrix {
    let pattern = DgPattern::block_diagonal(space.mesh());
    let nd = space.dofs_per_element();
    let mut m = pattern.matrix(nd, nd);
    let n = space.nloc();
    let reference = space.basis().reference_mass();
    let mut local = vec![0.0; n * n];
    for t in 0..space.mesh().num_triangles() {
        let det = space.mesh().affine(t).det;
        local
            .iter_mut()
            .zip(&reference)
            .for_each(|(l, r)| *l = det * r);
        add_scalar_block(&pattern, &mut m, space, t, t, &local);
    }
    m
}

/// `A_ij = a(phi_j, phi_i) + J0(phi_j, phi_i)` on the DG pattern.
pub fn assemble_sipg(space: &BrokenSpace, params: &FormParams) -> CsrMatrix {
    let mesh = space.mesh();
    let pattern = DgPattern::face_neighbors(mesh);
    let nd = space.dofs_per_element();
    let mut mat = pattern.matrix(nd, nd);
    let n = space.nloc();
    let (vol, edge) = assembly_rules(space);
    let tab = space.basis().tabulate(&vol);
    let eps = params.symmetry.epsilon();

    let mut local = vec![0.0; n * n];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in vol.weights.iter().enumerate() {
            let g: Vec<Vec2> = tab
                .ref_grads(q)
                .iter()
                .map(|&g| map.push_gradient(g))
                .collect();
            let wq = w * map.det;
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        add_scalar_block(&pattern, &mut mat, space, t, t, &local);
    }

    for e in 0..mesh.edges.len() {
        let frame = mesh.jump_average_frame(e, &edge);
        let penalty = params.sigma_e / frame.length;
        let (jm, jn) = frame.jump_weights();
        let (am, an) = frame.average_weights();
        let sides: Vec<usize> = mesh.edges[e].sides().map(|s| s.triangle).collect();
        let jump = [jm, jn];
        let avg = [am, an];
        let mut blocks = vec![vec![0.0; n * n]; sides.len() * sides.len()];
        for qp in &frame.points {
            let traces: Vec<SideTrace> = std::iter::once(qp.first)
                .chain(qp.second)
                .map(|tp| side_trace(space, tp.triangle, tp.reference, frame.normal))
                .collect();
            for (x, tx) in traces.iter().enumerate() {
                for (y, ty) in traces.iter().enumerate() {
                    let block = &mut blocks[x * sides.len() + y];
                    for i in 0..n {
                        for j in 0..n {
                            let v = -avg[y] * ty.dn[j] * jump[x] * tx.phi[i]
                                + eps * avg[x] * tx.dn[i] * jump[y] * ty.phi[j]
                                + penalty * jump[x] * jump[y] * tx.phi[i] * ty.phi[j];
                            block[i * n + j] += qp.weight * v;
                        }
                    }
                }
            }
        }
        for (x, &tx) in sides.iter().enumerate() {
            for (y, &ty) in sides.iter().enumerate() {
                add_scalar_block(
                    &pattern,
                    &mut mat,
                    space,
                    tx,
                    ty,
                    &blocks[x * sides.len() + y],
                );
            }
        }
    }
    mat
}

/// `B_qv = b(phi_v, psi_q)`; rows are pressure DOFs.
pub fn assemble_divergence(vspace: &BrokenSpace, pspace: &BrokenSpace) -> Result<CsrMatrix> {
    if !vspace.same_mesh(pspace) {
        return Err(Error::Config(
            "velocity and pressure spaces live on different meshes".into(),
        ));
    }
    if vspace.components() != 2 || pspace.components() != 1 {
        return Err(Error::Config(
            "divergence needs a vector velocity and a scalar pressure space".into(),
        ));
    }
    let mesh = vspace.mesh();
    let pattern = DgPattern::face_neighbors(mesh);
    let (nv, np) = (vspace.nloc(), pspace.nloc());
    let (ndv, ndp) = (vspace.dofs_per_element(), pspace.dofs_per_element());
    let mut mat = pattern.matrix(ndp, ndv);
    let (vol, edge) = assembly_rules(vspace);
    let vtab = vspace.basis().tabulate(&vol);
    let ptab = pspace.basis().tabulate(&vol);

    let mut local = vec![0.0; ndp * ndv];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in vol.weights.iter().enumerate() {
            let wq = w * map.det;
            let psi = ptab.values(q);
            for j in 0..nv {
                let g = map.push_gradient(vtab.ref_grads(q)[j]);
                for c in 0..2 {
                    for i in 0..np {
                        local[i * ndv + c * nv + j] -= wq * psi[i] * g[c];
                    }
                }
            }
        }
        pattern.add_block(&mut mat, t, t, ndp, ndv, &local);
    }

    let mut phi = [0.0; 6];
    let mut psi = [0.0; 6];
    for e in 0..mesh.edges.len() {
        let frame = mesh.jump_average_frame(e, &edge);
        let sides: Vec<usize> = mesh.edges[e].sides().map(|s| s.triangle).collect();
        let (jm, jn) = frame.jump_weights();
        let (am, an) = frame.average_weights();
        let (jump, avg) = ([jm, jn], [am, an]);
        for (x, &tx) in sides.iter().enumerate() {
            for (y, &ty) in sides.iter().enumerate() {
                local.iter_mut().for_each(|v| *v = 0.0);
                for qp in &frame.points {
                    let tp = |k: usize| if k == 0 { qp.first } else { qp.second.unwrap() };
                    pspace.basis().eval(tp(x).reference, &mut psi);
                    vspace.basis().eval(tp(y).reference, &mut phi);
                    for i in 0..np {
                        for c in 0..2 {
                            for j in 0..nv {
                                local[i * ndv + c * nv + j] += qp.weight
                                    * avg[x]
                                    * psi[i]
                                    * jump[y]
                                    * phi[j]
                                    * frame.normal[c];
                            }
                        }
                    }
                }
                pattern.add_block(&mut mat, tx, ty, ndp, ndv, &local);
            }
        }
    }
    Ok(mat)
}

fn eval_vector(w: &FemField, t: usize, xi: Vec2) -> Vec2 {
    let v = w.evaluate(t, xi).expect("element index in range");
    [v[0], v[1]]
}

/// `N(w)_ij = c^w(w; phi_j, phi_i)` with the upwind set taken from `{w}`.
pub fn assemble_convection(w: &FemField, space: &BrokenSpace) -> Result<CsrMatrix> {
    if !w.space.same_mesh(space) || w.space.components() != 2 || space.components() != 2 {
        return Err(Error::Config(
            "convecting field must be a vector field on the same mesh".into(),
        ));
    }
    let mesh = space.mesh();
    let pattern = DgPattern::face_neighbors(mesh);
    let nd = space.dofs_per_element();
    let mut mat = pattern.matrix(nd, nd);
    let n = space.nloc();
    let (vol, edge) = assembly_rules(space);
    let tab = space.basis().tabulate(&vol);

    let mut local = vec![0.0; n * n];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &wt) in vol.weights.iter().enumerate() {
            let xi = vol.points[q];
            let wv = eval_vector(w, t, xi);
            let gw = w.evaluate_gradient(t, xi)?;
            let div = gw[0][0] + gw[1][1];
            let wq = wt * map.det;
            let phi = tab.values(q);
            for j in 0..n {
                let g = map.push_gradient(tab.ref_grads(q)[j]);
                let adv = wv[0] * g[0] + wv[1] * g[1];
                for i in 0..n {
                    local[i * n + j] += wq * (adv + 0.5 * div * phi[j]) * phi[i];
                }
            }
        }
        add_scalar_block(&pattern, &mut mat, space, t, t, &local);
    }

    let mut pm = [0.0; 6];
    let mut pn = [0.0; 6];
    for e in 0..mesh.edges.len() {
        let frame = mesh.jump_average_frame(e, &edge);
        let edge_ref = &mesh.edges[e];
        let nrm = frame.normal;
        let dotn = |v: Vec2| v[0] * nrm[0] + v[1] * nrm[1];
        let tm = edge_ref.first.triangle;
        match edge_ref.second {
            None => {
                local.iter_mut().for_each(|v| *v = 0.0);
                for qp in &frame.points {
                    let s = dotn(eval_vector(w, tm, qp.first.reference));
                    space.basis().eval(qp.first.reference, &mut pm);
                    // inflow upwinding with zero exterior trace, minus half the jump term
                    let coeff = qp.weight * ((-s).max(0.0) - 0.5 * s);
                    for i in 0..n {
                        for j in 0..n {
                            local[i * n + j] += coeff * pm[j] * pm[i];
                        }
                    }
                }
                add_scalar_block(&pattern, &mut mat, space, tm, tm, &local);
            }
            Some(second) => {
                let tn = second.triangle;
                let mut blocks = [
                    vec![0.0; n * n],
                    vec![0.0; n * n],
                    vec![0.0; n * n],
                    vec![0.0; n * n],
                ];
                for qp in &frame.points {
                    let snd = qp.second.unwrap();
                    let wm = eval_vector(w, tm, qp.first.reference);
                    let wn = eval_vector(w, tn, snd.reference);
                    let s = 0.5 * (dotn(wm) + dotn(wn));
                    let jump_wn = dotn(wm) - dotn(wn);
                    space.basis().eval(qp.first.reference, &mut pm);
                    space.basis().eval(snd.reference, &mut pn);
                    let wq = qp.weight;
                    // [mm, mn, nm, nn] with row side first
                    let (up_m, up_n) = ((-s).max(0.0), s.max(0.0));
                    for i in 0..n {
                        for j in 0..n {
                            blocks[0][i * n + j] += wq * (up_m - 0.25 * jump_wn) * pm[j] * pm[i];
                            blocks[1][i * n + j] -= wq * up_m * pn[j] * pm[i];
                            blocks[2][i * n + j] -= wq * up_n * pm[j] * pn[i];
                            blocks[3][i * n + j] += wq * (up_n - 0.25 * jump_wn) * pn[j] * pn[i];
                        }
                    }
                }
                add_scalar_block(&pattern, &mut mat, space, tm, tm, &blocks[0]);
                add_scalar_block(&pattern, &mut mat, space, tm, tn, &blocks[1]);
                add_scalar_block(&pattern, &mut mat, space, tn, tm, &blocks[2]);
                add_scalar_block(&pattern, &mut mat, space, tn, tn, &blocks[3]);
            }
        }
    }
    Ok(mat)
}

/// `m_q = integral of psi_q over the domain`.
pub fn pressure_mean_row(pspace: &BrokenSpace) -> Vec<f64> {
    let rule = triangle_rule(pspace.degree().max(1)).expect("degree in range");
    let tab = pspace.basis().tabulate(&rule);
    let mut m = vec![0.0; pspace.total_dofs()];
    for t in 0..pspace.mesh().num_triangles() {
        let det = pspace.mesh().affine(t).det;
        for (q, &w) in rule.weights.iter().enumerate() {
            for (i, phi) in tab.values(q).iter().enumerate() {
                m[pspace.dof(t, 0, i)] += w * det * phi;
            }
        }
    }
    m
}

/// `F_i = (f, phi_i)` for a vector-valued `f`.
pub fn load_vector(space: &BrokenSpace, f: impl Fn(Vec2) -> Vec2) -> Vec<f64> {
    let rule = triangle_rule(MAX_DEGREE).expect("degree in range");
    let tab = space.basis().tabulate(&rule);
    let n = space.nloc();
    let mut out = vec![0.0; space.total_dofs()];
    for t in 0..space.mesh().num_triangles() {
        let map = space.mesh().affine(t);
        for (q, &w) in rule.weights.iter().enumerate() {
            let fx = f(map.to_physical(rule.points[q]));
            for (i, phi) in tab.values(q).iter().enumerate().take(n) {
                for c in 0..space.components() {
                    out[space.dof(t, c, i)] += w * map.det * fx[c] * phi;
                }
            }
        }
    }
    out
}

/// Right-hand side contributions of weakly imposed Dirichlet data `g`.
#[derive(Debug, Clone)]
pub struct BoundaryDataRhs {
    /// `sum_e sigma_e/|e| (g, v)_e + eps ({grad v} n_e, g)_e`; scaled by `nu` in the scheme.
    pub diffusion: Vec<f64>,
    /// Inflow term `sum_{e in Gamma_-} |w.n| (g, v)_e`.
    pub convection: Vec<f64>,
    /// `(g.n, q)_{boundary}` for the continuity row.
    pub pressure: Vec<f64>,
}

pub fn boundary_data_rhs(
    vspace: &BrokenSpace,
    pspace: &BrokenSpace,
    params: &FormParams,
    g: impl Fn(Vec2) -> Vec2,
    w: Option<&FemField>,
) -> BoundaryDataRhs {
    let mesh = vspace.mesh();
    let (_, edge) = assembly_rules(vspace);
    let n = vspace.nloc();
    let eps = params.symmetry.epsilon();
    let mut out = BoundaryDataRhs {
        diffusion: vec![0.0; vspace.total_dofs()],
        convection: vec![0.0; vspace.total_dofs()],
        pressure: vec![0.0; pspace.total_dofs()],
    };
    let mut psi = [0.0; 6];
    for (e, ed) in mesh.edges.iter().enumerate() {
        if !ed.is_boundary() {
            continue;
        }
        let frame = mesh.jump_average_frame(e, &edge);
        let t = ed.first.triangle;
        let penalty = params.sigma_e / frame.length;
        for qp in &frame.points {
            let gv = g(qp.physical);
            if gv == [0.0, 0.0] {
                continue;
            }
            let tr = side_trace(vspace, t, qp.first.reference, frame.normal);
            let inflow = w.map_or(0.0, |w| {
                let wv = eval_vector(w, t, qp.first.reference);
                (-(wv[0] * frame.normal[0] + wv[1] * frame.normal[1])).max(0.0)
            });
            for c in 0..2 {
                for i in 0..n {
                    let k = vspace.dof(t, c, i);
                    out.diffusion[k] += qp.weight * gv[c] * (penalty * tr.phi[i] + eps * tr.dn[i]);
                    out.convection[k] += qp.weight * inflow * gv[c] * tr.phi[i];
                }
            }
            let gn = gv[0] * frame.normal[0] + gv[1] * frame.normal[1];
            pspace.basis().eval(qp.first.reference, &mut psi);
            for i in 0..pspace.nloc() {
                out.pressure[pspace.dof(t, 0, i)] += qp.weight * gn * psi[i];
            }
        }
    }
    out
}

fn edge_frames<'a>(mesh: &'a TriMesh, rule: &QuadRule) -> impl Iterator<Item = EdgeFrame> + 'a {
    let rule = rule.clone();
    (0..mesh.edges.len()).map(move |e| mesh.jump_average_frame(e, &rule))
}

/// `J0(v, w) = sum_e sigma_e/|e| ([v], [w])_e`.
pub fn j0_value(v: &FemField, w: &FemField, sigma_e: f64) -> Result<f64> {
    if !Arc::ptr_eq(&v.space, &w.space)
        && !(v.space.same_mesh(&w.space) && v.space.degree() == w.space.degree())
    {
        return Err(Error::Config(
            "J0 needs both fields in the same space".into(),
        ));
    }
    let space = &v.space;
    let d = (2 * space.degree()).max(1);
    let rule = edge_rule(d)?;
    let mut total = 0.0;
    for frame in edge_frames(space.mesh(), &rule) {
        let mut acc = 0.0;
        for qp in &frame.points {
            let vm = v.evaluate(qp.first.triangle, qp.first.reference)?;
            let wm = w.evaluate(qp.first.triangle, qp.first.reference)?;
            let (vn, wn) = match qp.second {
                Some(s) => (
                    v.evaluate(s.triangle, s.reference)?,
                    w.evaluate(s.triangle, s.reference)?,
                ),
                None => (vec![0.0; vm.len()], vec![0.0; wm.len()]),
            };
            for c in 0..vm.len() {
                acc += qp.weight * (vm[c] - vn[c]) * (wm[c] - wn[c]);
            }
        }
        total += sigma_e / frame.length * acc;
    }
    Ok(total)
}

/// `sum_T ||grad v||_T^2`.
pub fn broken_gradient_sq(v: &FemField) -> Result<f64> {
    let space = &v.space;
    let rule = triangle_rule((2 * space.degree()).max(1))?;
    let mut total = 0.0;
    for t in 0..space.mesh().num_triangles() {
        let det = space.mesh().affine(t).det;
        for (p, w) in rule.iter() {
            let g = v.evaluate_gradient(t, p)?;
            total += w
                * det
                * g.iter()
                    .map(|gc| gc[0] * gc[0] + gc[1] * gc[1])
                    .sum::<f64>();
        }
    }
    Ok(total)
}

/// Broken energy norm `(sum_T ||grad v||_T^2 + J0(v, v))^{1/2}`.
pub fn energy_norm(v: &FemField, sigma_e: f64) -> Result<f64> {
    Ok((broken_gradient_sq(v)? + j0_value(v, v, sigma_e)?).sqrt())
}
