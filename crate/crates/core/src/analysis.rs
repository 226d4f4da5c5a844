//! Manufactured solutions, error norms and observed orders.
//!
//! Both examples derive from a separable stream function
//! `psi = c tau(t) phi(x) phi(y)`, so `u = (psi_y, -psi_x)` is exactly
//! divergence free and vanishes with its normal derivative on the boundary.

use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::forms::{j0_value, FormParams};
use crate::quadrature::{triangle_rule, MAX_DEGREE};
use crate::space::FemField;
use crate::system::{run, Discretization, Problem, SolverConfig};
use crate::{Error, Result, Vec2};

/// Rows are components: `grad[i][j] = d u_i / d x_j`.
pub type Gradient = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Polynomial profile, `cos t` in time.
    One,
    /// Trigonometric profile, `exp t` in time.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManufacturedCase {
    pub example: Example,
}

impl ManufacturedCase {
    pub fn new(example: Example) -> Self {
        Self { example }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Self::new(Example::One)),
            2 => Ok(Self::new(Example::Two)),
            _ => Err(Error::Config(format!(
                "unknown example {id}; expected 1 or 2"
            ))),
        }
    }

    pub fn id(&self) -> u32 {
        match self.example {
            Example::One => 1,
            Example::Two => 2,
        }
    }

    // phi and its first three derivatives
    fn profile(&self, s: f64) -> [f64; 4] {
        match self.example {
            Example::One => [
                s * s * (s - 1.0) * (s - 1.0),
                4.0 * s.powi(3) - 6.0 * s * s + 2.0 * s,
                12.0 * s * s - 12.0 * s + 2.0,
                24.0 * s - 12.0,
            ],
            Example::Two => {
                let w = 2.0 * std::f64::consts::PI;
                let (sn, cs) = (w * s).sin_cos();
                [1.0 - cs, w * sn, w * w * cs, -w * w * w * sn]
            }
        }
    }

    fn scale(&self) -> f64 {
        match self.example {
            Example::One => 1.0,
            Example::Two => 1.0 / (2.0 * std::f64::consts::PI),
        }
    }

    // tau and tau'
    fn time(&self, t: f64) -> (f64, f64) {
        match self.example {
            Example::One => (t.cos(), -t.sin()),
            Example::Two => (t.exp(), t.exp()),
        }
    }

    fn velocity_with(&self, x: Vec2, tau: f64) -> Vec2 {
        let (px, py) = (self.profile(x[0]), self.profile(x[1]));
        let c = self.scale() * tau;
        [c * px[0] * py[1], -c * px[1] * py[0]]
    }

    fn laplacian_with(&self, x: Vec2, tau: f64) -> Vec2 {
        let (px, py) = (self.profile(x[0]), self.profile(x[1]));
        let c = self.scale() * tau;
        [
            c * (px[2] * py[1] + px[0] * py[3]),
            -c * (px[3] * py[0] + px[1] * py[2]),
        ]
    }

    pub fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        self.velocity_with(x, self.time(t).0)
    }

    pub fn velocity_t(&self, x: Vec2, t: f64) -> Vec2 {
        self.velocity_with(x, self.time(t).1)
    }

    pub fn gradient(&self, x: Vec2, t: f64) -> Gradient {
        let (px, py) = (self.profile(x[0]), self.profile(x[1]));
        let c = self.scale() * self.time(t).0;
        [
            [c * px[1] * py[1], c * px[0] * py[2]],
            [-c * px[2] * py[0], -c * px[1] * py[1]],
        ]
    }

    pub fn laplacian(&self, x: Vec2, t: f64) -> Vec2 {
        self.laplacian_with(x, self.time(t).0)
    }

    pub fn laplacian_t(&self, x: Vec2, t: f64) -> Vec2 {
        self.laplacian_with(x, self.time(t).1)
    }

    pub fn pressure(&self, x: Vec2, t: f64) -> f64 {
        match self.example {
            Example::One => 2.0 * (x[0] - x[1]) * t.cos(),
            Example::Two => {
                let w = 2.0 * std::f64::consts::PI;
                w * t.exp() * ((w * x[1]).cos() - (w * x[0]).cos())
            }
        }
    }

    pub fn pressure_gradient(&self, x: Vec2, t: f64) -> Vec2 {
        match self.example {
            Example::One => [2.0 * t.cos(), -2.0 * t.cos()],
            Example::Two => {
                let w = 2.0 * std::f64::consts::PI;
                let a = w * w * t.exp();
                [a * (w * x[0]).sin(), -a * (w * x[1]).sin()]
            }
        }
    }

    /// `f = u_t + (u . grad) u - kappa lap u_t - nu lap u + grad p`.
    pub fn forcing(&self, x: Vec2, t: f64, nu: f64, kappa: f64) -> Vec2 {
        let u = self.velocity(x, t);
        let ut = self.velocity_t(x, t);
        let g = self.gradient(x, t);
        let lap = self.laplacian(x, t);
        let lapt = self.laplacian_t(x, t);
        let gp = self.pressure_gradient(x, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let adv = u[0] * g[i][0] + u[1] * g[i][1];
            f[i] = ut[i] + adv - kappa * lapt[i] - nu * lap[i] + gp[i];
        }
        f
    }
}

/// A manufactured case bound to the physical parameters of one run.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedProblem {
    pub case: ManufacturedCase,
    pub nu: f64,
    pub kappa: f64,
}

impl ManufacturedProblem {
    pub fn new(case: ManufacturedCase, params: &FormParams) -> Self {
        Self {
            case,
            nu: params.nu,
            kappa: params.kappa,
        }
    }
}

impl Problem for ManufacturedProblem {
    fn initial_velocity(&self, x: Vec2) -> Vec2 {
        self.case.velocity(x, 0.0)
    }

    fn forcing(&self, x: Vec2, t: f64) -> Vec2 {
        self.case.forcing(x, t, self.nu, self.kappa)
    }
}

fn integrate_elementwise(
    field: &FemField,
    mut integrand: impl FnMut(&FemField, usize, Vec2, Vec2) -> Result<f64>,
) -> Result<f64> {
    let rule = triangle_rule(MAX_DEGREE)?;
    let mesh = field.space.mesh();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine(t);
        for (xi, w) in rule.iter() {
            total += w * map.det * integrand(field, t, xi, map.to_physical(xi))?;
        }
    }
    Ok(total)
}

/// `||U - u||_{L2}`.
pub fn error_l2(u_h: &FemField, exact: impl Fn(Vec2) -> Vec2) -> Result<f64> {
    let sq = integrate_elementwise(u_h, |f, t, xi, x| {
        let v = f.evaluate(t, xi)?;
        let e = exact(x);
        Ok((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2))
    })?;
    Ok(sq.max(0.0).sqrt())
}

/// `(sum_T ||grad(U - u)||_T^2 + J0(U, U))^{1/2}`; the exact solution is
/// assumed continuous and zero on the boundary, so it has no jumps.
pub fn error_energy(
    u_h: &FemField,
    exact_grad: impl Fn(Vec2) -> Gradient,
    sigma_e: f64,
) -> Result<f64> {
    let sq = integrate_elementwise(u_h, |f, t, xi, x| {
        let g = f.evaluate_gradient(t, xi)?;
        let e = exact_grad(x);
        Ok((0..2)
            .map(|i| (g[i][0] - e[i][0]).powi(2) + (g[i][1] - e[i][1]).powi(2))
            .sum())
    })?;
    Ok((sq + j0_value(u_h, u_h, sigma_e)?).max(0.0).sqrt())
}

/// `||(P - mean P) - (p - mean p)||_{L2}`.
pub fn error_pressure(p_h: &FemField, exact: impl Fn(Vec2) -> f64) -> Result<f64> {
    let area = integrate_elementwise(p_h, |_, _, _, _| Ok(1.0))?;
    let mean_h = integrate_elementwise(p_h, |f, t, xi, _| Ok(f.evaluate(t, xi)?[0]))? / area;
    let mean_e = integrate_elementwise(p_h, |_, _, _, x| Ok(exact(x)))? / area;
    let sq = integrate_elementwise(p_h, |f, t, xi, x| {
        Ok(((f.evaluate(t, xi)?[0] - mean_h) - (exact(x) - mean_e)).powi(2))
    })?;
    Ok(sq.max(0.0).sqrt())
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive pairs.
pub fn observed_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelErrors {
    pub l2: f64,
    pub energy: f64,
    pub pressure: f64,
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub outcome: std::result::Result<LevelErrors, String>,
    pub steps: usize,
    pub max_div_residual: f64,
    pub max_gmres_iters: usize,
    /// Final-state velocity L2 error after every step, when requested.
    pub series: Vec<(f64, f64)>,
    /// Time spent building the mesh, spaces and constant operators.
    pub assembly: Duration,
    pub elapsed: Duration,
}

/// Errors at `t_final` of one manufactured run.
pub fn run_case(
    case: ManufacturedCase,
    config: &SolverConfig,
    track_series: bool,
) -> Result<(LevelErrors, LevelResult)> {
    let start = Instant::now();
    let disc = Discretization::structured(config)?;
    let assembly = start.elapsed();
    let problem = ManufacturedProblem::new(case, &config.params);
    let mut series = Vec::new();
    let mut series_err = None;
    let out = run(&disc, config, &problem, |s| {
        if track_series && series_err.is_none() {
            match error_l2(&s.velocity, |x| case.velocity(x, s.t)) {
                Ok(e) => series.push((s.t, e)),
                Err(e) => series_err = Some(e),
            }
        }
    })?;
    if let Some(e) = series_err {
        return Err(e);
    }
    let s = &out.final_state;
    let errors = LevelErrors {
        l2: error_l2(&s.velocity, |x| case.velocity(x, s.t))?,
        energy: error_energy(
            &s.velocity,
            |x| case.gradient(x, s.t),
            config.params.sigma_e,
        )?,
        pressure: error_pressure(&s.pressure, |x| case.pressure(x, s.t))?,
    };
    let result = LevelResult {
        n: config.n,
        h: config.h(),
        dt: config.dt,
        outcome: Ok(errors),
        steps: s.step,
        max_div_residual: out
            .diagnostics
            .iter()
            .map(|d| d.div_residual)
            .fold(0.0, f64::max),
        max_gmres_iters: out
            .diagnostics
            .iter()
            .map(|d| d.gmres_iters)
            .max()
            .unwrap_or(0),
        series,
        assembly,
        elapsed: start.elapsed(),
    };
    Ok((errors, result))
}

/// One rung of a convergence ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n: usize,
    pub dt: f64,
}

/// Levels `n = 4, 8, ...` with `dt = h^2`.
pub fn h2_ladder(levels: usize) -> Vec<Level> {
    (0..levels)
        .map(|i| {
            let n = 4usize << i;
            Level {
                n,
                dt: 1.0 / (n * n) as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub example: u32,
    pub levels: Vec<LevelResult>,
    pub metadata: Vec<(String, String)>,
}

/// Orders between consecutive solved levels; `None` where either side failed.
fn pair_orders(levels: &[LevelResult], pick: impl Fn(&LevelErrors) -> f64) -> Vec<Option<f64>> {
    levels
        .windows(2)
        .map(|w| match (&w[0].outcome, &w[1].outcome) {
            (Ok(a), Ok(b)) => Some(observed_orders(&[w[0].h, w[1].h], &[pick(a), pick(b)])[0]),
            _ => None,
        })
        .collect()
}

impl ConvergenceReport {
    pub fn orders_l2(&self) -> Vec<Option<f64>> {
        pair_orders(&self.levels, |e| e.l2)
    }

    pub fn orders_energy(&self) -> Vec<Option<f64>> {
        pair_orders(&self.levels, |e| e.energy)
    }

    pub fn orders_pressure(&self) -> Vec<Option<f64>> {
        pair_orders(&self.levels, |e| e.pressure)
    }

    pub fn all_solved(&self) -> bool {
        self.levels.iter().all(|l| l.outcome.is_ok())
    }

    fn rows(&self) -> Vec<(usize, [Option<f64>; 6])> {
        let (ol, oe, op) = (
            self.orders_l2(),
            self.orders_energy(),
            self.orders_pressure(),
        );
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let prev = |o: &[Option<f64>]| if i == 0 { None } else { o[i - 1] };
                let e = l.outcome.as_ref().ok();
                (
                    i,
                    [
                        e.map(|e| e.l2),
                        prev(&ol),
                        e.map(|e| e.energy),
                        prev(&oe),
                        e.map(|e| e.pressure),
                        prev(&op),
                    ],
                )
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,dt,err_l2,rate_l2,err_energy,rate_energy,err_p,rate_p")?;
        for (i, cells) in self.rows() {
            let l = &self.levels[i];
            let mut line = format!("{:.16e},{:.16e}", l.h, l.dt);
            for c in cells {
                line.push(',');
                if let Some(v) = c {
                    let _ = write!(line, "{v:.16e}");
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "| h | dt | L2 error | rate | energy error | rate | pressure error | rate |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for (i, cells) in self.rows() {
            let l = &self.levels[i];
            let _ = write!(s, "| 1/{} | {:.4e} |", l.n, l.dt);
            for (k, c) in cells.iter().enumerate() {
                let txt = match (c, k % 2) {
                    (Some(v), 0) => format!("{v:.4e}"),
                    (Some(v), _) => format!("{v:.2}"),
                    (None, 0) => "failed".to_string(),
                    (None, _) => String::new(),
                };
                let _ = write!(s, " {txt} |");
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every level to `base.t_final` (levels in parallel) and collects errors.
pub fn convergence_study(
    case: ManufacturedCase,
    base: &SolverConfig,
    levels: &[Level],
    track_series: bool,
) -> Result<ConvergenceReport> {
    if levels.is_empty() {
        return Err(Error::Config(
            "a convergence study needs at least one level".into(),
        ));
    }
    let results: Vec<LevelResult> = levels
        .par_iter()
        .map(|lv| {
            let config = SolverConfig {
                n: lv.n,
                dt: lv.dt,
                ..base.clone()
            };
            let start = Instant::now();
            match run_case(case, &config, track_series) {
                Ok((_, r)) => {
                    log::info!(
                        "example {} n={} finished in {:.1?}",
                        case.id(),
                        lv.n,
                        r.elapsed
                    );
                    r
                }
                Err(e) => {
                    log::error!("example {} n={} failed: {e}", case.id(), lv.n);
                    LevelResult {
                        n: lv.n,
                        h: 1.0 / lv.n as f64,
                        dt: lv.dt,
                        outcome: Err(e.to_string()),
                        steps: 0,
                        max_div_residual: f64::NAN,
                        max_gmres_iters: 0,
                        series: Vec::new(),
                        assembly: Duration::ZERO,
                        elapsed: start.elapsed(),
                    }
                }
            }
        })
        .collect();
    let p = &base.params;
    let metadata = vec![
        ("example".into(), case.id().to_string()),
        ("nu".into(), p.nu.to_string()),
        ("kappa".into(), p.kappa.to_string()),
        ("sigma_e".into(), p.sigma_e.to_string()),
        ("epsilon".into(), p.symmetry.epsilon().to_string()),
        ("velocity_degree".into(), base.velocity_degree.to_string()),
        ("pressure_degree".into(), base.pressure_degree.to_string()),
        ("t_final".into(), base.t_final.to_string()),
        ("gmres_tol".into(), base.gmres.tol.to_string()),
        ("gmres_restart".into(), base.gmres.restart.to_string()),
    ];
    Ok(ConvergenceReport {
        example: case.id(),
        levels: results,
        metadata,
    })
}

/// Builds a velocity field from the exact solution for baseline comparisons.
pub fn exact_projection(disc: &Discretization, case: ManufacturedCase, t: f64) -> FemField {
    crate::space::project_elementwise(&disc.vspace, |x, c| case.velocity(x, t)[c])
}

/// Lid-driven cavity: fluid at rest, driven by the tangential velocity
/// `(lid_speed, 0)` on the top edge `y = 1`. The lid data covers the whole top
/// edge, corners included, and every other wall is at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidDrivenCavity {
    pub lid_speed: f64,
}

impl Default for LidDrivenCavity {
    fn default() -> Self {
        Self { lid_speed: 1.0 }
    }
}

impl Problem for LidDrivenCavity {
    fn initial_velocity(&self, _x: Vec2) -> Vec2 {
        [0.0, 0.0]
    }

    fn forcing(&self, _x: Vec2, _t: f64) -> Vec2 {
        [0.0, 0.0]
    }

    fn boundary_velocity(&self, x: Vec2, _t: f64) -> Vec2 {
        if (x[1] - 1.0).abs() < 1e-12 {
            [self.lid_speed, 0.0]
        } else {
            [0.0, 0.0]
        }
    }

    fn has_boundary_data(&self) -> bool {
        self.lid_speed != 0.0
    }
}

/// One sample of the two centerline profiles at parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineSample {
    pub s: f64,
    /// `u1(0.5, s)`.
    pub u1_vertical: f64,
    /// `p(0.5, s)`.
    pub p_vertical: f64,
    /// `u2(s, 0.5)`.
    pub u2_horizontal: f64,
    /// `p(s, 0.5)`.
    pub p_horizontal: f64,
}

/// Samples velocity and pressure along `x = 0.5` and `y = 0.5` at
/// `samples` equispaced points including both ends. Points on element
/// interfaces take the average of the adjacent traces.
pub fn centerlines(
    velocity: &FemField,
    pressure: &FemField,
    samples: usize,
) -> Result<Vec<CenterlineSample>> {
    if samples < 2 {
        return Err(Error::Config(
            "centerline sampling needs at least two points".into(),
        ));
    }
    let at = |f: &FemField, x: Vec2| {
        f.evaluate_at(x)
            .ok_or_else(|| Error::Config(format!("point {x:?} lies outside the mesh")))
    };
    (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            Ok(CenterlineSample {
                s,
                u1_vertical: at(velocity, [0.5, s])?[0],
                p_vertical: at(pressure, [0.5, s])?[0],
                u2_horizontal: at(velocity, [s, 0.5])?[1],
                p_horizontal: at(pressure, [s, 0.5])?[0],
            })
        })
        .collect()
}

pub fn write_centerlines_csv<W: Write>(mut w: W, rows: &[CenterlineSample]) -> Result<()> {
    writeln!(w, "s,u1_x_half,p_x_half,u2_y_half,p_y_half")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.s, r.u1_vertical, r.p_vertical, r.u2_horizontal, r.p_horizontal
        )?;
    }
    Ok(())
}

/// Whether the last `fraction` of `series` is strictly decreasing.
pub fn decreasing_tail(series: &[f64], fraction: f64) -> bool {
    let len = ((series.len() as f64) * fraction).ceil() as usize;
    let start = series.len().saturating_sub(len.max(2));
    series[start..].windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    const FD: f64 = 1e-5;

    fn cases() -> [ManufacturedCase; 2] {
        [
            ManufacturedCase::new(Example::One),
            ManufacturedCase::new(Example::Two),
        ]
    }

    fn samples() -> Vec<Vec2> {
        vec![[0.13, 0.71], [0.5, 0.5], [0.9, 0.27], [0.33, 0.05]]
    }

    fn fd_gradient(f: impl Fn(Vec2) -> Vec2, x: Vec2) -> Gradient {
        let mut g = [[0.0; 2]; 2];
        for j in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[j] += FD;
            xm[j] -= FD;
            let (fp, fm) = (f(xp), f(xm));
            for i in 0..2 {
                g[i][j] = (fp[i] - fm[i]) / (2.0 * FD);
            }
        }
        g
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let t = 0.37;
        for case in cases() {
            for x in samples() {
                let scale = 1.0 + case.velocity(x, t).iter().map(|v| v.abs()).sum::<f64>();
                let g = case.gradient(x, t);
                let gf = fd_gradient(|y| case.velocity(y, t), x);
                let lf = {
                    let gx = fd_gradient(
                        |y| {
                            let g = case.gradient(y, t);
                            [g[0][0], g[1][0]]
                        },
                        x,
                    );
                    let gy = fd_gradient(
                        |y| {
                            let g = case.gradient(y, t);
                            [g[0][1], g[1][1]]
                        },
                        x,
                    );
                    [gx[0][0] + gy[0][1], gx[1][0] + gy[1][1]]
                };
                let lap = case.laplacian(x, t);
                let ut = case.velocity_t(x, t);
                let vp = case.velocity(x, t + FD);
                let vm = case.velocity(x, t - FD);
                let lt = case.laplacian_t(x, t);
                let lp = case.laplacian(x, t + FD);
                let lm = case.laplacian(x, t - FD);
                let pf = {
                    let pp = |d: usize| {
                        let (mut a, mut b) = (x, x);
                        a[d] += FD;
                        b[d] -= FD;
                        (case.pressure(a, t) - case.pressure(b, t)) / (2.0 * FD)
                    };
                    [pp(0), pp(1)]
                };
                let gp = case.pressure_gradient(x, t);
                let tol = 1e-6 * scale.max(lap[0].abs() + lap[1].abs());
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((g[i][j] - gf[i][j]).abs() < 1e-6 * scale, "{case:?} grad");
                    }
                    assert!(
                        (lap[i] - lf[i]).abs() < tol,
                        "{case:?} laplacian {} vs {}",
                        lap[i],
                        lf[i]
                    );
                    assert!((ut[i] - (vp[i] - vm[i]) / (2.0 * FD)).abs() < 1e-6 * scale);
                    assert!((lt[i] - (lp[i] - lm[i]) / (2.0 * FD)).abs() < tol);
                    assert!((gp[i] - pf[i]).abs() < 1e-6 * (1.0 + gp[i].abs()));
                }
                assert!((g[0][0] + g[1][1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn example_one_forcing_at_origin() {
        let c = ManufacturedCase::new(Example::One);
        for t in [0.0, 0.4, 1.0] {
            let f = c.forcing([0.0, 0.0], t, 1.0, 1e-2);
            assert!((f[0] - 2.0 * t.cos()).abs() < 1e-14 && (f[1] + 2.0 * t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn example_one_velocity_formula() {
        let c = ManufacturedCase::new(Example::One);
        let (x, y, t) = (0.3f64, 0.8f64, 0.6f64);
        let u1 = 2.0 * x * x * (x - 1.0).powi(2) * y * (y - 1.0) * (2.0 * y - 1.0) * t.cos();
        assert!((c.velocity([x, y], t)[0] - u1).abs() < 1e-15);
    }

    #[test]
    fn example_two_velocity_formula() {
        let c = ManufacturedCase::new(Example::Two);
        let w = 2.0 * std::f64::consts::PI;
        let (x, y, t) = (0.3f64, 0.8f64, 0.6f64);
        let u1 = t.exp() * (-(w * x).cos() * (w * y).sin() + (w * y).sin());
        let u2 = t.exp() * ((w * x).sin() * (w * y).cos() - (w * x).sin());
        let u = c.velocity([x, y], t);
        assert!((u[0] - u1).abs() < 1e-13 && (u[1] - u2).abs() < 1e-13);
    }

    #[test]
    fn orders_of_exact_power_law() {
        let h = [0.25, 0.125, 0.0625, 0.03125];
        let e: Vec<f64> = h.iter().map(|h| h * h).collect();
        for o in observed_orders(&h, &e) {
            assert!((o - 2.0).abs() < 1e-12);
        }
        let scaled: Vec<f64> = e.iter().map(|v| 7.5 * v).collect();
        assert_eq!(observed_orders(&h, &e), observed_orders(&h, &scaled));
    }

    #[test]
    fn unknown_example_is_rejected() {
        assert!(ManufacturedCase::from_id(9).is_err());
    }

    #[test]
    fn lid_data_lives_on_the_top_edge_only() {
        let lid = LidDrivenCavity::default();
        assert_eq!(lid.boundary_velocity([0.3, 1.0], 0.0), [1.0, 0.0]);
        assert_eq!(lid.boundary_velocity([1.0, 1.0], 0.0), [1.0, 0.0]);
        assert_eq!(lid.boundary_velocity([1.0, 0.99], 0.0), [0.0, 0.0]);
        assert!(!LidDrivenCavity { lid_speed: 0.0 }.has_boundary_data());
    }

    #[test]
    fn tail_monotonicity() {
        assert!(decreasing_tail(&[5.0, 6.0, 4.0, 3.0, 2.0], 0.4));
        assert!(!decreasing_tail(&[5.0, 4.0, 3.0, 3.0, 2.0], 0.6));
        assert!(decreasing_tail(&[3.0, 1.0], 0.01));
    }
}
