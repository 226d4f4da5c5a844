//! Broken (fully discontinuous) Lagrange spaces and discrete fields.
//!
//! Degrees of freedom are element-contiguous: for element `e`, component
//! `c` and local node `i` the global index is
//! `e * components * nloc + c * nloc + i`.

use std::io::Write;
use std::sync::Arc;

use crate::mesh::TriMesh;
use crate::quadrature::{triangle_rule, QuadRule, MAX_DEGREE};
use crate::{Error, Result, Vec2};

/// Nodal Lagrange basis of degree 0, 1 or 2 on the reference triangle.
///
/// Degree 0 uses the centroid as its node; degree 1 the vertices; degree 2
/// the vertices followed by the midpoints of local edges 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagrangeBasis {
    degree: usize,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > 2 {
            return Err(Error::Config(format!(
                "Lagrange degree {degree} not supported (0..=2)"
            )));
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Vec<Vec2> {
        match self.degree {
            0 => vec![[1.0 / 3.0, 1.0 / 3.0]],
            1 => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            _ => vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.5, 0.5],
                [0.0, 0.5],
                [0.5, 0.0],
            ],
        }
    }

    pub fn eval(&self, xi: Vec2, out: &mut [f64]) {
        let (x, y) = (xi[0], xi[1]);
        let l = [1.0 - x - y, x, y];
        match self.degree {
            0 => out[0] = 1.0,
            1 => out[..3].copy_from_slice(&l),
            _ => {
                for i in 0..3 {
                    out[i] = l[i] * (2.0 * l[i] - 1.0);
                }
                out[3] = 4.0 * l[1] * l[2];
                out[4] = 4.0 * l[2] * l[0];
                out[5] = 4.0 * l[0] * l[1];
            }
        }
    }

    /// Gradients with respect to reference coordinates.
    pub fn eval_grad(&self, xi: Vec2, out: &mut [Vec2]) {
        let (x, y) = (xi[0], xi[1]);
        let l = [1.0 - x - y, x, y];
        let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        match self.degree {
            0 => out[0] = [0.0, 0.0],
            1 => out[..3].copy_from_slice(&dl),
            _ => {
                for i in 0..3 {
                    let s = 4.0 * l[i] - 1.0;
                    out[i] = [s * dl[i][0], s * dl[i][1]];
                }
                let prod = |a: usize, b: usize| {
                    [
                        4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                        4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                    ]
                };
                out[3] = prod(1, 2);
                out[4] = prod(2, 0);
                out[5] = prod(0, 1);
            }
        }
    }

    /// Basis values and reference gradients at every point of `rule`.
    pub fn tabulate(&self, rule: &QuadRule) -> Tabulation {
        let n = self.len();
        let mut values = vec![0.0; rule.len() * n];
        let mut grads = vec![[0.0; 2]; rule.len() * n];
        for (q, p) in rule.points.iter().enumerate() {
            self.eval(*p, &mut values[q * n..(q + 1) * n]);
            self.eval_grad(*p, &mut grads[q * n..(q + 1) * n]);
        }
        Tabulation {
            nloc: n,
            values,
            grads,
        }
    }

    /// Reference mass matrix `int phi_i phi_j` (row-major).
    pub fn reference_mass(&self) -> Vec<f64> {
        let rule = triangle_rule(2 * self.degree.max(1)).expect("rule exists");
        let tab = self.tabulate(&rule);
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for (q, w) in rule.weights.iter().enumerate() {
            let phi = tab.values(q);
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += w * phi[i] * phi[j];
                }
            }
        }
        m
    }
}

/// Basis data on a fixed set of reference points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    nloc: usize,
    values: Vec<f64>,
    grads: Vec<Vec2>,
}

impl Tabulation {
    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.nloc..(q + 1) * self.nloc]
    }

    pub fn ref_grads(&self, q: usize) -> &[Vec2] {
        &self.grads[q * self.nloc..(q + 1) * self.nloc]
    }
}

/// Elementwise polynomial space of `components` copies of a Lagrange basis.
#[derive(Debug, Clone)]
pub struct BrokenSpace {
    mesh: Arc<TriMesh>,
    basis: LagrangeBasis,
    components: usize,
}

impl BrokenSpace {
    pub fn new(mesh: Arc<TriMesh>, degree: usize, components: usize) -> Result<Self> {
        if !(1..=2).contains(&components) {
            return Err(Error::Config(format!(
                "{components} components not supported"
            )));
        }
        Ok(Self {
            mesh,
            basis: LagrangeBasis::new(degree)?,
            components,
        })
    }

    pub fn scalar(mesh: Arc<TriMesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, 1)
    }

    pub fn vector(mesh: Arc<TriMesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, 2)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn nloc(&self) -> usize {
        self.basis.len()
    }

    pub fn dofs_per_element(&self) -> usize {
        self.nloc() * self.components
    }

    pub fn total_dofs(&self) -> usize {
        self.mesh.num_triangles() * self.dofs_per_element()
    }

    pub fn dof(&self, element: usize, component: usize, local: usize) -> usize {
        element * self.dofs_per_element() + component * self.nloc() + local
    }

    pub fn element_dofs(&self, element: usize) -> std::ops::Range<usize> {
        let n = self.dofs_per_element();
        element * n..(element + 1) * n
    }

    pub fn same_mesh(&self, other: &BrokenSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}

/// Coefficient vector in a broken space.
#[derive(Debug, Clone)]
pub struct FemField {
    pub space: Arc<BrokenSpace>,
    pub coeffs: Vec<f64>,
}

impl FemField {
    pub fn zeros(space: Arc<BrokenSpace>) -> Self {
        let n = space.total_dofs();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<BrokenSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.total_dofs() {
            return Err(Error::Config(format!(
                "coefficient length {} does not match space dimension {}",
                coeffs.len(),
                space.total_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    fn check_element(&self, element: usize) -> Result<()> {
        let len = self.space.mesh().num_triangles();
        if element >= len {
            return Err(Error::OutOfRange {
                index: element,
                len,
            });
        }
        Ok(())
    }

    /// Value of every component at a reference point of `element`.
    pub fn evaluate(&self, element: usize, xi: Vec2) -> Result<Vec<f64>> {
        self.check_element(element)?;
        let sp = &self.space;
        let mut phi = [0.0; 6];
        sp.basis().eval(xi, &mut phi);
        let dofs = &self.coeffs[sp.element_dofs(element)];
        Ok((0..sp.components())
            .map(|c| {
                let local = &dofs[c * sp.nloc()..(c + 1) * sp.nloc()];
                local.iter().zip(&phi).map(|(a, b)| a * b).sum()
            })
            .collect())
    }

    /// Physical gradient of every component at a reference point of `element`.
    pub fn evaluate_gradient(&self, element: usize, xi: Vec2) -> Result<Vec<Vec2>> {
        self.check_element(element)?;
        let sp = &self.space;
        let map = sp.mesh().affine(element);
        let mut g = [[0.0; 2]; 6];
        sp.basis().eval_grad(xi, &mut g);
        let dofs = &self.coeffs[sp.element_dofs(element)];
        Ok((0..sp.components())
            .map(|c| {
                let mut acc = [0.0; 2];
                for (a, gi) in dofs[c * sp.nloc()..(c + 1) * sp.nloc()].iter().zip(&g) {
                    acc[0] += a * gi[0];
                    acc[1] += a * gi[1];
                }
                map.push_gradient(acc)
            })
            .collect())
    }

    /// Value at a physical point, averaged over all elements containing it.
    pub fn evaluate_at(&self, x: Vec2) -> Option<Vec<f64>> {
        let hits = self.space.mesh().locate(x, 1e-10);
        if hits.is_empty() {
            return None;
        }
        let mut acc = vec![0.0; self.space.components()];
        for &(t, xi) in &hits {
            for (a, v) in acc.iter_mut().zip(self.evaluate(t, xi).ok()?) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= hits.len() as f64);
        Some(acc)
    }

    pub fn scale(&mut self, alpha: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= alpha);
    }
}

/// Nodal interpolation; `f(x, component)`.
pub fn interpolate(space: &Arc<BrokenSpace>, f: impl Fn(Vec2, usize) -> f64) -> FemField {
    let mut field = FemField::zeros(space.clone());
    let nodes = space.basis().nodes();
    for e in 0..space.mesh().num_triangles() {
        let map = space.mesh().affine(e);
        for (i, node) in nodes.iter().enumerate() {
            let x = map.to_physical(*node);
            for c in 0..space.components() {
                field.coeffs[space.dof(e, c, i)] = f(x, c);
            }
        }
    }
    field
}

fn invert_small(a: &[f64], n: usize) -> Vec<f64> {
    // Gauss-Jordan with partial pivoting on an n x n row-major matrix.
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap();
        assert!(
            m[piv * n + col].abs() > 1e-300,
            "singular local mass matrix"
        );
        for k in 0..n {
            m.swap(col * n + k, piv * n + k);
            inv.swap(col * n + k, piv * n + k);
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    inv
}

/// Elementwise L2 projection of `f(x, component)` onto `space`.
pub fn project_elementwise(space: &Arc<BrokenSpace>, f: impl Fn(Vec2, usize) -> f64) -> FemField {
    let n = space.nloc();
    let minv = invert_small(&space.basis().reference_mass(), n);
    let rule = triangle_rule(MAX_DEGREE).expect("rule exists");
    let tab = space.basis().tabulate(&rule);
    let mut field = FemField::zeros(space.clone());
    let mut rhs = vec![0.0; n];
    for e in 0..space.mesh().num_triangles() {
        let map = space.mesh().affine(e);
        let xs: Vec<Vec2> = rule.points.iter().map(|p| map.to_physical(*p)).collect();
        for c in 0..space.components() {
            rhs.iter_mut().for_each(|r| *r = 0.0);
            for (q, x) in xs.iter().enumerate() {
                // reference-measure integral; the Jacobian cancels against M_T = det * M_ref
                let fx = rule.weights[q] * f(*x, c);
                for (r, phi) in rhs.iter_mut().zip(tab.values(q)) {
                    *r += fx * phi;
                }
            }
            for i in 0..n {
                field.coeffs[space.dof(e, c, i)] = (0..n).map(|j| minv[i * n + j] * rhs[j]).sum();
            }
        }
    }
    field
}

/// Writes `x,y,u1,u2,p` at every velocity node of every element.
pub fn write_field_csv<W: Write>(mut w: W, velocity: &FemField, pressure: &FemField) -> Result<()> {
    writeln!(w, "x,y,u1,u2,p")?;
    let vs = &velocity.space;
    let nodes = vs.basis().nodes();
    for e in 0..vs.mesh().num_triangles() {
        let map = vs.mesh().affine(e);
        for node in &nodes {
            let x = map.to_physical(*node);
            let u = velocity.evaluate(e, *node)?;
            let p = pressure.evaluate(e, *node)?;
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                x[0], x[1], u[0], u[1], p[0]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(TriMesh::structured(n).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(3);
        let v = BrokenSpace::vector(m.clone(), 1).unwrap();
        assert_eq!(v.total_dofs(), 18 * 3 * 2);
        let p = BrokenSpace::scalar(m.clone(), 0).unwrap();
        assert_eq!(p.total_dofs(), 18);
        let q = BrokenSpace::scalar(m, 2).unwrap();
        assert_eq!(q.dofs_per_element(), 6);
        assert!(LagrangeBasis::new(3).is_err());
    }

    #[test]
    fn partition_of_unity_and_nodal_property() {
        for k in 0..=2 {
            let b = LagrangeBasis::new(k).unwrap();
            let mut phi = vec![0.0; b.len()];
            let mut g = vec![[0.0; 2]; b.len()];
            for p in [[0.1, 0.2], [0.7, 0.1], [0.3, 0.3], [0.0, 1.0]] {
                b.eval(p, &mut phi);
                assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                b.eval_grad(p, &mut g);
                assert!(g.iter().map(|v| v[0]).sum::<f64>().abs() < 1e-13);
                assert!(g.iter().map(|v| v[1]).sum::<f64>().abs() < 1e-13);
            }
            for (i, node) in b.nodes().iter().enumerate() {
                b.eval(*node, &mut phi);
                for (j, v) in phi.iter().enumerate() {
                    assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = LagrangeBasis::new(2).unwrap();
        let p = [0.23, 0.41];
        let (mut g, mut fp, mut fm) = (vec![[0.0; 2]; 6], vec![0.0; 6], vec![0.0; 6]);
        b.eval_grad(p, &mut g);
        let h = 1e-6;
        for d in 0..2 {
            let (mut pp, mut pm) = (p, p);
            pp[d] += h;
            pm[d] -= h;
            b.eval(pp, &mut fp);
            b.eval(pm, &mut fm);
            for i in 0..6 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - g[i][d]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let m = mesh(2);
        let sp = Arc::new(BrokenSpace::scalar(m.clone(), 1).unwrap());
        let zero = FemField::zeros(sp.clone());
        assert_eq!(zero.evaluate(3, [0.2, 0.3]).unwrap(), vec![0.0]);
        let three = interpolate(&sp, |_, _| 3.0);
        assert!((three.evaluate(5, [0.1, 0.6]).unwrap()[0] - 3.0).abs() < 1e-14);
        let fx = interpolate(&sp, |x, _| x[0]);
        for e in 0..m.num_triangles() {
            let c = m.affine(e).to_physical([1.0 / 3.0, 1.0 / 3.0]);
            assert!((fx.evaluate(e, [1.0 / 3.0, 1.0 / 3.0]).unwrap()[0] - c[0]).abs() < 1e-14);
        }
        assert!(matches!(
            fx.evaluate(99, [0.0, 0.0]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let m = mesh(3);
        let s1 = Arc::new(BrokenSpace::scalar(m.clone(), 1).unwrap());
        let c = interpolate(&s1, |_, _| 2.0);
        assert_eq!(c.evaluate_gradient(4, [0.3, 0.3]).unwrap()[0], [0.0, 0.0]);
        let fx = interpolate(&s1, |x, _| x[0]);
        let g = fx.evaluate_gradient(7, [0.2, 0.2]).unwrap()[0];
        assert!((g[0] - 1.0).abs() < 1e-13 && g[1].abs() < 1e-13);

        let s2 = Arc::new(BrokenSpace::scalar(m.clone(), 2).unwrap());
        let sq = interpolate(&s2, |x, _| x[0] * x[0]);
        let rule = triangle_rule(4).unwrap();
        for e in 0..m.num_triangles() {
            let map = m.affine(e);
            for p in &rule.points {
                let x = map.to_physical(*p);
                let g = sq.evaluate_gradient(e, *p).unwrap()[0];
                assert!((g[0] - 2.0 * x[0]).abs() < 1e-12 && g[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let m = mesh(3);
        let rule = triangle_rule(6).unwrap();
        for k in 0..=2 {
            let sp = Arc::new(BrokenSpace::vector(m.clone(), k).unwrap());
            let poly = |x: Vec2, c: usize| {
                let v = [1.5 - 0.5 * x[0] + 2.0 * x[1], -0.3 + x[0]][c];
                v + if k == 2 {
                    [x[0] * x[1], x[1] * x[1]][c]
                } else {
                    0.0
                }
            };
            let poly = |x: Vec2, c: usize| if k == 0 { [1.5, -0.3][c] } else { poly(x, c) };
            let proj = project_elementwise(&sp, poly);
            for e in 0..m.num_triangles() {
                let map = m.affine(e);
                for p in &rule.points {
                    let x = map.to_physical(*p);
                    let v = proj.evaluate(e, *p).unwrap();
                    for c in 0..2 {
                        assert!((v[c] - poly(x, c)).abs() < 1e-12);
                    }
                }
            }
        }
        let sp = Arc::new(BrokenSpace::scalar(m, 1).unwrap());
        assert!(project_elementwise(&sp, |_, _| 0.0)
            .coeffs
            .iter()
            .all(|&c| c == 0.0));
    }

    #[test]
    fn projection_is_idempotent() {
        let m = mesh(4);
        let sp = Arc::new(BrokenSpace::scalar(m.clone(), 1).unwrap());
        let first = project_elementwise(&sp, |x, _| (3.0 * x[0]).sin() * x[1].exp());
        let second = project_elementwise(&sp, |x, _| {
            let hit = m.locate(x, 1e-12);
            let (t, xi) = hit[0];
            first.evaluate(t, xi).unwrap()[0]
        });
        // quadrature points are interior, so every lookup resolves to a unique element
        for (a, b) in first.coeffs.iter().zip(&second.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_error_decays_at_order_two() {
        let fine = triangle_rule(6).unwrap();
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let m = mesh(n);
            let sp = Arc::new(BrokenSpace::scalar(m.clone(), 1).unwrap());
            let f = |x: Vec2| (2.0 * std::f64::consts::PI * x[0]).sin();
            let proj = project_elementwise(&sp, |x, _| f(x));
            let mut err = 0.0;
            for e in 0..m.num_triangles() {
                let map = m.affine(e);
                for (p, w) in fine.iter() {
                    let d = proj.evaluate(e, p).unwrap()[0] - f(map.to_physical(p));
                    err += w * map.det * d * d;
                }
            }
            errs.push(err.sqrt());
        }
        for pair in errs.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!((rate - 2.0).abs() < 0.15, "rate {rate}");
        }
    }

    #[test]
    fn field_csv_has_one_row_per_node() {
        let m = mesh(1);
        let v = Arc::new(BrokenSpace::vector(m.clone(), 1).unwrap());
        let p = Arc::new(BrokenSpace::scalar(m, 0).unwrap());
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &FemField::zeros(v), &FemField::zeros(p)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with("x,y,u1,u2,p\n"));
    }
}
