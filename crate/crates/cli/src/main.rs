mod manifest;
mod settings;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kvdg::analysis::{
    centerlines, convergence_study, error_energy, error_l2, error_pressure, h2_ladder,
    write_centerlines_csv, LidDrivenCavity, ManufacturedCase, ManufacturedProblem,
};
use kvdg::linalg::Preconditioning;
use kvdg::space::write_field_csv;
use kvdg::system::{run, Discretization, SolverConfig, StepDiagnostics};

use manifest::{Manifest, Num};
use settings::{Origin, Settings};

const LID_CONVENTION: &str =
    "g = (lid, 0) on the closed top edge y = 1, both top corners included; zero on the other walls";

#[derive(Parser, Debug)]
#[command(
    name = "kvdg",
    version,
    about = "DG solver for the 2D Kelvin-Voigt equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error table over a ladder of meshes for a manufactured solution.
    Convergence(ConvergenceArgs),
    /// Lid-driven cavity run with centerline profiles.
    Cavity(CavityArgs),
    /// Single manufactured-solution run with a field dump.
    Run(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DtRule {
    /// dt = h^2 exactly.
    H2,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    example: u32,
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pressure_degree: u8,
    /// Number of meshes, starting at h = 1/4 and halving.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=7))]
    levels: u8,
    #[arg(long, value_enum, default_value_t = DtRule::H2)]
    dt_rule: DtRule,
    #[arg(long = "T", default_value_t = 1.0)]
    t_final: f64,
    /// Worker threads for the levels; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CavityArgs {
    #[arg(long, default_value_t = 0.01)]
    nu: f64,
    /// `auto` for 0.1 nu, or a number.
    #[arg(long, default_value = "auto")]
    kappa: String,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long = "T", default_value_t = 20.0)]
    t_final: f64,
    /// Defaults to h^2.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 40.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    lid: f64,
    /// Stop once ||U^n - U^(n-1)|| / dt drops below this value.
    #[arg(long)]
    steady_tol: Option<f64>,
    /// Points per centerline.
    #[arg(long, default_value_t = 65)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// File with one `key = value` per line; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// sipg or nipg.
    #[arg(long)]
    symmetry: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    velocity_degree: Option<String>,
    #[arg(long)]
    pressure_degree: Option<String>,
    /// A step size or `h2`.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "T")]
    t_final: Option<String>,
    #[arg(long)]
    stokes: Option<String>,
    #[arg(long)]
    gmres_tol: Option<String>,
    #[arg(long)]
    gmres_restart: Option<String>,
    #[arg(long)]
    gmres_max_iters: Option<String>,
    /// ilu0 or lagged-lu.
    #[arg(long)]
    preconditioner: Option<String>,
    /// A tolerance or `none`.
    #[arg(long)]
    steady_tol: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("example", &self.example),
            ("nu", &self.nu),
            ("kappa", &self.kappa),
            ("sigma", &self.sigma),
            ("symmetry", &self.symmetry),
            ("n", &self.n),
            ("velocity_degree", &self.velocity_degree),
            ("pressure_degree", &self.pressure_degree),
            ("dt", &self.dt),
            ("t_final", &self.t_final),
            ("stokes", &self.stokes),
            ("gmres_tol", &self.gmres_tol),
            ("gmres_restart", &self.gmres_restart),
            ("gmres_max_iters", &self.gmres_max_iters),
            ("preconditioner", &self.preconditioner),
            ("steady_tol", &self.steady_tol),
        ]
    }
}

/// Bad input from the user; maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn solver_inputs(m: &mut Manifest, c: &SolverConfig) {
    m.input("nu", Num(c.params.nu))
        .input("kappa", Num(c.params.kappa))
        .input("sigma_e", Num(c.params.sigma_e))
        .input("epsilon", Num(c.params.symmetry.epsilon()))
        .input("velocity_degree", c.velocity_degree)
        .input("pressure_degree", c.pressure_degree)
        .input("t_final", Num(c.t_final))
        .input("stokes", c.stokes)
        .input("gmres_tol", Num(c.gmres.tol))
        .input("gmres_restart", c.gmres.restart)
        .input("gmres_max_iters", c.gmres.max_iters)
        .input(
            "preconditioner",
            match c.preconditioning {
                Preconditioning::Ilu0 => "ilu0".to_string(),
                Preconditioning::LaggedLu { refresh_iters } => {
                    format!("lagged-lu, refreshed after {refresh_iters} iterations")
                }
            },
        );
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<ExitCode> {
    let case = ManufacturedCase::from_id(a.example).map_err(usage)?;
    let mut base = SolverConfig {
        pressure_degree: a.pressure_degree as usize,
        t_final: a.t_final,
        ..Default::default()
    };
    base.params.nu = a.nu;
    base.params.kappa = a.kappa;
    base.params.sigma_e = a.sigma;
    let levels = match a.dt_rule {
        DtRule::H2 => h2_ladder(a.levels as usize),
    };
    for lv in &levels {
        SolverConfig {
            n: lv.n,
            dt: lv.dt,
            ..base.clone()
        }
        .validate()
        .map_err(usage)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .context("cannot start the worker pool")?;
    prepare_out(&a.out)?;

    let start = Instant::now();
    let report = pool.install(|| convergence_study(case, &base, &levels, false))?;
    let total = start.elapsed();

    let mut m = Manifest::new("convergence");
    m.input("example", a.example);
    solver_inputs(&mut m, &base);
    m.input("levels", a.levels)
        .input("dt_rule", "h2")
        .note("dt_rule", "dt = h^2 exactly at every level")
        .note("jobs", pool.current_num_threads())
        .note("all_solved", report.all_solved());

    report.write_csv(create(&a.out, "table.csv")?)?;
    fs::write(a.out.join("table.md"), report.to_markdown())?;
    m.output("table.csv").output("table.md");

    for l in &report.levels {
        let name = format!("level_n{}.manifest.txt", l.n);
        let mut lm = Manifest::new("convergence-level");
        lm.input("example", a.example)
            .input("n", l.n)
            .input("dt", Num(l.dt));
        solver_inputs(&mut lm, &base);
        lm.note("h", Num(l.h)).note("steps", l.steps);
        lm.note("max_div_residual", Num(l.max_div_residual))
            .note("max_gmres_iters", l.max_gmres_iters);
        match &l.outcome {
            Ok(e) => {
                lm.note("err_l2", Num(e.l2))
                    .note("err_energy", Num(e.energy))
                    .note("err_p", Num(e.pressure));
            }
            Err(e) => {
                lm.note("failure", e);
                eprintln!("level n={} failed: {e}", l.n);
            }
        }
        lm.timing("assembly", l.assembly)
            .timing("solve", l.elapsed.saturating_sub(l.assembly))
            .timing("total", l.elapsed);
        lm.write(&a.out, &name)?;
        m.output(&name);
    }
    m.timing("total", total);
    m.write(&a.out, "manifest.txt")?;
    print!("{}", report.to_markdown());
    Ok(if report.all_solved() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_cavity(a: &CavityArgs) -> Result<ExitCode> {
    let kappa = match a.kappa.as_str() {
        "auto" => 0.1 * a.nu,
        s => s
            .parse::<f64>()
            .map_err(|_| usage(format!("--kappa expects `auto` or a number, got `{s}`")))?,
    };
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    let mut cfg = SolverConfig {
        n: a.n,
        dt: a.dt.unwrap_or(1.0 / (a.n * a.n) as f64),
        t_final: a.t_final,
        steady_tol: a.steady_tol,
        ..Default::default()
    };
    cfg.params.nu = a.nu;
    cfg.params.kappa = kappa;
    cfg.params.sigma_e = a.sigma;
    cfg.validate().map_err(usage)?;
    prepare_out(&a.out)?;

    let start = Instant::now();
    let disc = Discretization::structured(&cfg)?;
    let assembly = start.elapsed();
    let problem = LidDrivenCavity { lid_speed: a.lid };
    let out = run(&disc, &cfg, &problem, |s| {
        log::debug!("t={:.4} increment={:.3e}", s.t, s.diagnostics.increment)
    })?;
    let total = start.elapsed();

    let mut m = Manifest::new("cavity");
    m.input("n", cfg.n)
        .input("dt", Num(cfg.dt))
        .input("lid", Num(a.lid));
    solver_inputs(&mut m, &cfg);
    m.input(
        "steady_tol",
        a.steady_tol.map_or("none".into(), |t| Num(t).to_string()),
    )
    .input("samples", a.samples);
    m.note(
        "kappa_rule",
        if a.kappa == "auto" { "0.1 nu" } else { "given" },
    )
    .note("dt_rule", if a.dt.is_some() { "given" } else { "dt = h^2" })
    .note("lid_convention", LID_CONVENTION)
    .note("steps", out.final_state.step)
    .note("t_end", Num(out.final_state.t))
    .note("stopped_steady", out.stopped_steady);

    let rows = centerlines(
        &out.final_state.velocity,
        &out.final_state.pressure,
        a.samples,
    )?;
    write_centerlines_csv(create(&a.out, "centerlines.csv")?, &rows)?;
    let mut w = create(&a.out, "steadiness.csv")?;
    writeln!(w, "n,t,increment")?;
    for d in &out.diagnostics[1..] {
        writeln!(w, "{},{:.16e},{:.16e}", d.step, d.t, d.increment)?;
    }
    w.flush()?;
    kvdg::system::write_diagnostics_csv(create(&a.out, "diagnostics.csv")?, &out.diagnostics)?;
    write_field_csv(
        create(&a.out, "field.csv")?,
        &out.final_state.velocity,
        &out.final_state.pressure,
    )?;
    m.output("centerlines.csv")
        .output("steadiness.csv")
        .output("diagnostics.csv")
        .output("field.csv");
    m.timing("assembly", assembly)
        .timing("solve", total - assembly)
        .timing("total", total);
    m.write(&a.out, "manifest.txt")?;
    println!(
        "{} steps to t = {}, final increment {:.3e}",
        out.final_state.step,
        out.final_state.t,
        out.diagnostics.last().map_or(0.0, |d| d.increment)
    );
    Ok(ExitCode::SUCCESS)
}

fn resolve_settings(a: &RunArgs) -> Result<Settings> {
    let mut s = Settings::defaults();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        s.apply_file(&text)
            .map_err(|e| usage(format!("{}: {e:#}", path.display())))?;
    }
    for (key, value) in a.flags() {
        if let Some(v) = value {
            s.set(key, v, Origin::Flag).map_err(usage)?;
        }
    }
    Ok(s)
}

fn cmd_run(a: &RunArgs) -> Result<ExitCode> {
    let settings = resolve_settings(a)?;
    let example = settings.example().map_err(usage)?;
    let cfg = settings.solver_config().map_err(usage)?;
    cfg.validate().map_err(usage)?;
    let case = ManufacturedCase::from_id(example).map_err(usage)?;
    prepare_out(&a.out)?;

    let start = Instant::now();
    let disc = Discretization::structured(&cfg)?;
    let assembly = start.elapsed();
    let problem = ManufacturedProblem::new(case, &cfg.params);
    let mut errors = Vec::new();
    let mut eval_err = None;
    let out = run(&disc, &cfg, &problem, |s| {
        let e = error_l2(&s.velocity, |x| case.velocity(x, s.t)).and_then(|l2| {
            let en = error_energy(&s.velocity, |x| case.gradient(x, s.t), cfg.params.sigma_e)?;
            let p = error_pressure(&s.pressure, |x| case.pressure(x, s.t))?;
            Ok([l2, en, p])
        });
        match e {
            Ok(e) => errors.push(e),
            Err(e) => eval_err = eval_err.take().or(Some(e)),
        }
    })?;
    if let Some(e) = eval_err {
        return Err(e.into());
    }
    let total = start.elapsed();

    let mut m = Manifest::new("run");
    for (k, v, o) in settings.entries() {
        m.input(k, v);
        m.source(k, o.label());
    }
    m.note("dt_resolved", Num(cfg.dt))
        .note("steps", out.final_state.step)
        .note("stopped_steady", out.stopped_steady);
    if let Some(path) = &a.config {
        m.note("config_file", path.display());
    }

    write_diagnostics(
        create(&a.out, "diagnostics.csv")?,
        &out.diagnostics,
        &errors,
    )?;
    write_field_csv(
        create(&a.out, "field.csv")?,
        &out.final_state.velocity,
        &out.final_state.pressure,
    )?;
    m.output("diagnostics.csv").output("field.csv");
    m.timing("assembly", assembly)
        .timing("solve", total - assembly)
        .timing("total", total);
    m.write(&a.out, "manifest.txt")?;
    if let Some(e) = errors.last() {
        println!(
            "t = {}: L2 error {:.4e}, energy error {:.4e}, pressure error {:.4e}",
            out.final_state.t, e[0], e[1], e[2]
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn write_diagnostics(
    mut w: impl Write,
    rows: &[StepDiagnostics],
    errors: &[[f64; 3]],
) -> Result<()> {
    if rows.len() != errors.len() {
        return Err(anyhow!("error series does not match the diagnostics"));
    }
    writeln!(
        w,
        "n,t,energy,div_residual,gmres_iters,gmres_res,increment,err_l2,err_energy,err_p"
    )?;
    for (d, e) in rows.iter().zip(errors) {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            d.step,
            d.t,
            d.energy,
            d.div_residual,
            d.gmres_iters,
            d.gmres_res,
            d.increment,
            e[0],
            e[1],
            e[2]
        )?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KVDG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Convergence(a) => cmd_convergence(a),
        Command::Cavity(a) => cmd_cavity(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
