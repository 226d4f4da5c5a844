//! Discrete initial data and the backward Euler time loop.
//!
//! Each step solves, for `U^n` and `P^n`,
//!
//! ```text
//! (dU, v) + kappa (a+J0)(dU, v) + nu (a+J0)(U^n, v)
//!     + c(U^{n-1}; U^n, v) + b(v, P^n) = (f^n, v)
//! b(U^n, q) = 0
//! ```
//!
//! with `dU = (U^n - U^{n-1}) / dt`. Convection is lagged in its first
//! argument, so every step is a single linear saddle-point solve.

use std::io::Write;
use std::sync::Arc;

use crate::forms::{
    assemble_convection, assemble_divergence, assemble_mass, assemble_sipg, boundary_data_rhs,
    load_vector, pressure_mean_row, FormParams,
};
use crate::linalg::{norm2, CsrMatrix, GmresConfig, Preconditioning, SaddleMatrix, SaddleSolution};
use crate::mesh::TriMesh;
use crate::space::{project_elementwise, BrokenSpace, FemField};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub params: FormParams,
    /// Mesh resolution, `h = 1/n`.
    pub n: usize,
    pub velocity_degree: usize,
    pub pressure_degree: usize,
    pub dt: f64,
    pub t_final: f64,
    pub gmres: GmresConfig,
    pub preconditioning: Preconditioning,
    /// Freeze the convection matrix at `N(0)`.
    pub stokes: bool,
    /// Stop early once `||U^n - U^{n-1}|| / dt` falls below this value.
    pub steady_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            params: FormParams::default(),
            n: 8,
            velocity_degree: 1,
            pressure_degree: 0,
            dt: 1.0 / 64.0,
            t_final: 1.0,
            gmres: GmresConfig::default(),
            preconditioning: Preconditioning::default(),
            stokes: false,
            steady_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of steps `M` with `M dt = T`; a trailing partial step is rejected.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::Config(format!(
                "t_final = {} is smaller than dt = {}",
                self.t_final, self.dt
            )));
        }
        let m = (self.t_final / self.dt).round();
        if (m * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::Config(format!(
                "t_final = {} is not a whole number of steps of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(m as usize)
    }

    pub fn validate(&self) -> Result<usize> {
        if self.n == 0 {
            return Err(Error::Config("mesh resolution n must be at least 1".into()));
        }
        if self.velocity_degree == 0 || self.velocity_degree > 2 || self.pressure_degree > 2 {
            return Err(Error::Config(format!(
                "unsupported degrees: velocity {} (1..=2), pressure {} (0..=2)",
                self.velocity_degree, self.pressure_degree
            )));
        }
        if !(self.gmres.tol > 0.0) || self.gmres.restart == 0 {
            return Err(Error::Config(
                "GMRES tolerance and restart must be positive".into(),
            ));
        }
        self.params.validate(self.velocity_degree)?;
        self.num_steps()
    }
}

/// Initial data, forcing and Dirichlet data of one simulation.
pub trait Problem: Sync {
    fn initial_velocity(&self, x: Vec2) -> Vec2;
    fn forcing(&self, x: Vec2, t: f64) -> Vec2;
    fn boundary_velocity(&self, _x: Vec2, _t: f64) -> Vec2 {
        [0.0, 0.0]
    }
    /// Whether `boundary_velocity` can be nonzero.
    fn has_boundary_data(&self) -> bool {
        false
    }
}

/// Closure-backed problem with homogeneous boundary data.
pub struct FnProblem<U, F> {
    pub u0: U,
    pub f: F,
}

impl<U, F> Problem for FnProblem<U, F>
where
    U: Fn(Vec2) -> Vec2 + Sync,
    F: Fn(Vec2, f64) -> Vec2 + Sync,
{
    fn initial_velocity(&self, x: Vec2) -> Vec2 {
        (self.u0)(x)
    }
    fn forcing(&self, x: Vec2, t: f64) -> Vec2 {
        (self.f)(x, t)
    }
}

/// Spaces and the mesh-dependent matrices, assembled once.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub vspace: Arc<BrokenSpace>,
    pub pspace: Arc<BrokenSpace>,
    pub mass: CsrMatrix,
    /// `a + J0`.
    pub sipg: CsrMatrix,
    pub div: CsrMatrix,
    pub mean: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Arc<TriMesh>, config: &SolverConfig) -> Result<Self> {
        let vspace = Arc::new(BrokenSpace::vector(mesh.clone(), config.velocity_degree)?);
        let pspace = Arc::new(BrokenSpace::scalar(mesh, config.pressure_degree)?);
        let mass = assemble_mass(&vspace);
        let sipg = assemble_sipg(&vspace, &config.params);
        let div = assemble_divergence(&vspace, &pspace)?;
        let mean = pressure_mean_row(&pspace);
        Ok(Self {
            vspace,
            pspace,
            mass,
            sipg,
            div,
            mean,
        })
    }

    pub fn structured(config: &SolverConfig) -> Result<Self> {
        Self::new(Arc::new(TriMesh::structured(config.n)?), config)
    }

    /// Discrete energy `||U||^2 + kappa (a+J0)(U, U)`.
    pub fn energy(&self, u: &[f64], kappa: f64) -> f64 {
        self.mass.bilinear(u, u) + kappa * self.sipg.bilinear(u, u)
    }

    /// `||B U||`.
    pub fn divergence_residual(&self, u: &[f64]) -> f64 {
        norm2(&self.div.mul_vec(u))
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.mass.bilinear(u, u).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub div_residual: f64,
    pub gmres_iters: usize,
    pub gmres_res: f64,
    /// `||U^n - U^{n-1}||_{L2} / dt`; zero for the initial state.
    pub increment: f64,
}

impl StepDiagnostics {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.energy,
            self.div_residual,
            self.gmres_res,
            self.increment,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct StepState {
    pub velocity: FemField,
    pub pressure: FemField,
    pub t: f64,
    pub step: usize,
    pub diagnostics: StepDiagnostics,
}

/// `U^0 = P_h u0`: L2 projection onto the discretely divergence-free fields.
pub fn ph_project(
    disc: &Discretization,
    u0: impl Fn(Vec2) -> Vec2,
    cfg: &GmresConfig,
) -> Result<(FemField, SaddleSolution)> {
    let local = project_elementwise(&disc.vspace, |x, c| u0(x)[c]);
    ph_project_field(disc, &local, cfg)
}

/// `P_h` applied to a field that already lives in the velocity space.
pub fn ph_project_field(
    disc: &Discretization,
    v: &FemField,
    cfg: &GmresConfig,
) -> Result<(FemField, SaddleSolution)> {
    let rhs_v = disc.mass.mul_vec(&v.coeffs);
    let mut saddle = SaddleMatrix::assemble(&disc.mass, &disc.div, &disc.mean)?;
    let sol = saddle.solve(&rhs_v, &vec![0.0; disc.pspace.total_dofs()], None, cfg)?;
    let u = FemField::from_coeffs(disc.vspace.clone(), sol.u.clone())?;
    Ok((u, sol))
}

/// Backward Euler stepper with the mesh-dependent parts of the step matrix cached.
pub struct TimeStepper<'a> {
    config: SolverConfig,
    disc: &'a Discretization,
    /// `(M + kappa A) / dt + nu A`.
    static_part: CsrMatrix,
    /// `(M + kappa A) / dt`.
    history: CsrMatrix,
    saddle: SaddleMatrix,
    frozen: Option<CsrMatrix>,
}

impl<'a> TimeStepper<'a> {
    pub fn new(disc: &'a Discretization, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let FormParams { nu, kappa, .. } = config.params;
        let history = {
            let mut h = disc.mass.add_scaled(kappa, &disc.sipg)?;
            h.scale(1.0 / config.dt);
            h
        };
        let static_part = history.add_scaled(nu, &disc.sipg)?;
        let n0 = assemble_convection(&FemField::zeros(disc.vspace.clone()), &disc.vspace)?;
        let k0 = static_part.add_scaled(1.0, &n0)?;
        let saddle = SaddleMatrix::assemble(&k0, &disc.div, &disc.mean)?
            .with_preconditioning(config.preconditioning);
        let frozen = config.stokes.then_some(n0);
        Ok(Self {
            config: config.clone(),
            disc,
            static_part,
            history,
            saddle,
            frozen,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `K = (M + kappa A)/dt + nu A + N(w)`.
    pub fn step_matrix(&self, w: &FemField) -> Result<CsrMatrix> {
        let n = match &self.frozen {
            Some(n0) => n0.clone(),
            None => assemble_convection(w, &self.disc.vspace)?,
        };
        self.static_part.add_scaled(1.0, &n)
    }

    /// Velocity and pressure right-hand sides of step `n` at time `t`.
    pub fn step_rhs(&self, problem: &dyn Problem, prev: &FemField, t: f64) -> (Vec<f64>, Vec<f64>) {
        let disc = self.disc;
        let FormParams { nu, kappa, .. } = self.config.params;
        let mut rhs_v = load_vector(&disc.vspace, |x| problem.forcing(x, t));
        let hist = self.history.mul_vec(&prev.coeffs);
        rhs_v.iter_mut().zip(&hist).for_each(|(r, h)| *r += h);
        let mut rhs_p = vec![0.0; disc.pspace.total_dofs()];
        if problem.has_boundary_data() {
            let w = (!self.config.stokes).then_some(prev);
            let now = boundary_data_rhs(
                &disc.vspace,
                &disc.pspace,
                &self.config.params,
                |x| problem.boundary_velocity(x, t),
                w,
            );
            let before = boundary_data_rhs(
                &disc.vspace,
                &disc.pspace,
                &self.config.params,
                |x| problem.boundary_velocity(x, t - self.config.dt),
                None,
            );
            let kdt = kappa / self.config.dt;
            for (i, r) in rhs_v.iter_mut().enumerate() {
                *r += (nu + kdt) * now.diffusion[i] - kdt * before.diffusion[i] + now.convection[i];
            }
            rhs_p = now.pressure;
        }
        (rhs_v, rhs_p)
    }

    pub fn step(&mut self, problem: &dyn Problem, prev: &StepState) -> Result<StepState> {
        let n = prev.step + 1;
        let t = n as f64 * self.config.dt;
        let wrap = |e: Error| Error::StepFailed {
            step: n,
            source: Box::new(e),
        };
        let k = self.step_matrix(&prev.velocity).map_err(wrap)?;
        self.saddle.set_velocity_block(&k).map_err(wrap)?;
        let (rhs_v, rhs_p) = self.step_rhs(problem, &prev.velocity, t);
        let sol = self
            .saddle
            .solve(
                &rhs_v,
                &rhs_p,
                Some((&prev.velocity.coeffs, &prev.pressure.coeffs)),
                &self.config.gmres,
            )
            .map_err(wrap)?;
        if sol.u.iter().chain(&sol.p).any(|v| !v.is_finite()) {
            return Err(Error::NotFinite { step: n });
        }
        let disc = self.disc;
        let diff: Vec<f64> = sol
            .u
            .iter()
            .zip(&prev.velocity.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        let diagnostics = StepDiagnostics {
            step: n,
            t,
            energy: disc.energy(&sol.u, self.config.params.kappa),
            div_residual: disc.divergence_residual(&sol.u),
            gmres_iters: sol.iterations,
            gmres_res: sol.residual,
            increment: disc.l2_norm(&diff) / self.config.dt,
        };
        if !diagnostics.is_finite() {
            return Err(Error::NotFinite { step: n });
        }
        Ok(StepState {
            velocity: FemField::from_coeffs(disc.vspace.clone(), sol.u)?,
            pressure: FemField::from_coeffs(disc.pspace.clone(), sol.p)?,
            t,
            step: n,
            diagnostics,
        })
    }
}

/// Convenience wrapper around [`TimeStepper::step`].
pub fn backward_euler_step(
    disc: &Discretization,
    config: &SolverConfig,
    problem: &dyn Problem,
    prev: &StepState,
) -> Result<StepState> {
    TimeStepper::new(disc, config)?.step(problem, prev)
}

/// State at `t = 0` built from `P_h u0` and a zero pressure.
pub fn initial_state(
    disc: &Discretization,
    config: &SolverConfig,
    problem: &dyn Problem,
) -> Result<StepState> {
    let (u, sol) =
        ph_project(disc, |x| problem.initial_velocity(x), &config.gmres).map_err(|e| {
            Error::StepFailed {
                step: 0,
                source: Box::new(e),
            }
        })?;
    let diagnostics = StepDiagnostics {
        step: 0,
        t: 0.0,
        energy: disc.energy(&u.coeffs, config.params.kappa),
        div_residual: disc.divergence_residual(&u.coeffs),
        gmres_iters: sol.iterations,
        gmres_res: sol.residual,
        increment: 0.0,
    };
    Ok(StepState {
        velocity: u,
        pressure: FemField::zeros(disc.pspace.clone()),
        t: 0.0,
        step: 0,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: StepState,
    /// One entry per step, the initial state included.
    pub diagnostics: Vec<StepDiagnostics>,
    /// Set when the run stopped at the steady-state tolerance before `t_final`.
    pub stopped_steady: bool,
}

/// Runs `config.num_steps()` steps; `observer` sees every state, the initial one included.
pub fn run(
    disc: &Discretization,
    config: &SolverConfig,
    problem: &dyn Problem,
    mut observer: impl FnMut(&StepState),
) -> Result<RunOutput> {
    let steps = config.validate()?;
    let mut stepper = TimeStepper::new(disc, config)?;
    let mut state = initial_state(disc, config, problem)?;
    observer(&state);
    let mut diagnostics = vec![state.diagnostics];
    let mut stopped_steady = false;
    for _ in 0..steps {
        state = stepper.step(problem, &state)?;
        log::debug!(
            "step {} t={:.6} energy={:.6e} gmres={} res={:.2e}",
            state.step,
            state.t,
            state.diagnostics.energy,
            state.diagnostics.gmres_iters,
            state.diagnostics.gmres_res
        );
        observer(&state);
        diagnostics.push(state.diagnostics);
        if config
            .steady_tol
            .is_some_and(|tol| state.diagnostics.increment < tol)
        {
            stopped_steady = true;
            break;
        }
    }
    Ok(RunOutput {
        final_state: state,
        diagnostics,
        stopped_steady,
    })
}

pub fn write_diagnostics_csv<W: Write>(mut w: W, rows: &[StepDiagnostics]) -> Result<()> {
    writeln!(w, "n,t,energy,div_residual,gmres_iters,gmres_res")?;
    for d in rows {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{:.17e},{},{:.17e}",
            d.step, d.t, d.energy, d.div_residual, d.gmres_iters, d.gmres_res
        )?;
    }
    Ok(())
}
