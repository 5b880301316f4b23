//! Command-line front end: profile -> fit -> shoot -> simulate -> compare,
//! with every artifact written as CSV/JSON plus a run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use subnls::asymptotics::{decay_exponent, fit_far_field, lp_integrability_check};
use subnls::diagnostics;
use subnls::error::{Error, Result};
use subnls::io::{self, CompareRow, NormRow, RunManifest};
use subnls::nls::{self, SimulationConfig, StopReason};
use subnls::profile::{integrate_profile, ProfileParams};
use subnls::selfsimilar::SelfSimilarSolution;
use subnls::shooting::{shoot, ShootOptions};

#[derive(Parser)]
#[command(
    name = "subnls",
    version,
    about = "Singular self-similar solutions of the subcritical NLS: profile \
             integration, far-field fits, parameter shooting and direct PDE \
             verification"
)]
struct Cli {
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Flat `key = value` config file; explicit flags win over file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Integrator tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the radial profile and report its far-field fit and decay.
    Profile(ProfileArgs),
    /// Far-field coefficient fit of a freshly integrated profile.
    Fit(ProfileArgs),
    /// Find (a, Q(0)) minimizing the oscillatory far-field coefficient.
    Shoot(ShootArgs),
    /// Run the direct NLS simulation from the profile initial condition.
    Simulate(SimArgs),
    /// Simulate and compare the modulus against the analytic solution.
    Compare(CompareArgs),
    /// Norms, Hamiltonian and interpolation margins of a stored snapshot.
    Diagnose(DiagnoseArgs),
    /// Shoot, then simulate at the found parameters, then compare: the full
    /// reproduction in one command.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    window_lo: Option<f64>,
    #[arg(long)]
    window_hi: Option<f64>,
}

#[derive(Args)]
struct ShootArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Initial guess for the rate a.
    #[arg(long)]
    a0: Option<f64>,
    /// Initial guess for Q(0).
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    window_lo: Option<f64>,
    #[arg(long)]
    window_hi: Option<f64>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    term_tol: Option<f64>,
    #[arg(long)]
    simplex_scale: Option<f64>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    nonlinear_iters: Option<usize>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    diag_every: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    core_radius: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Snapshot CSV (schema: x,re_psi,im_psi,abs_psi).
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    core_radius: Option<f64>,
}

/// A missing required value is a usage error (exit 2, no files written);
/// anything failing after argument resolution is a run error (exit 1, with
/// the manifest recording the failure).
enum AppError {
    Usage(String),
    Run,
}

struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn load(path: &Option<PathBuf>) -> std::result::Result<Self, AppError> {
        let file = match path {
            Some(p) => io::parse_config_file(p)
                .map_err(|e| AppError::Usage(format!("config file {}: {e}", p.display())))?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    fn lookup<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> std::result::Result<Option<T>, AppError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| AppError::Usage(format!("config key {key}: bad value {raw:?}"))),
            None => Ok(None),
        }
    }

    fn get<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> std::result::Result<T, AppError> {
        Ok(self.lookup(flag, key)?.unwrap_or(default))
    }

    fn require<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> std::result::Result<T, AppError> {
        self.lookup(flag, key)?
            .ok_or_else(|| AppError::Usage(format!("missing required --{}", key.replace('_', "-"))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run) => ExitCode::from(1),
    }
}

fn dispatch(cli: Cli) -> std::result::Result<(), AppError> {
    let resolver = Resolver::load(&cli.config)?;
    let tol = resolver.get(cli.tol, "tol", 1e-10)?;
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| AppError::Usage(format!("cannot create {}: {e}", cli.out_dir.display())))?;

    match &cli.command {
        Command::Profile(args) => cmd_profile(&cli.out_dir, &resolver, args, tol, true),
        Command::Fit(args) => cmd_profile(&cli.out_dir, &resolver, args, tol, false),
        Command::Shoot(args) => cmd_shoot(&cli.out_dir, &resolver, args, tol),
        Command::Simulate(args) => cmd_simulate(&cli.out_dir, &resolver, args, tol),
        Command::Compare(args) => cmd_compare(&cli.out_dir, &resolver, args, tol),
        Command::Diagnose(args) => cmd_diagnose(&cli.out_dir, &resolver, args),
        Command::Pipeline(args) => cmd_pipeline(&cli.out_dir, &resolver, args, tol),
    }
}

/// Run `body`, then write the manifest with the outcome; map failures to the
/// run-error exit.
fn with_manifest(
    out_dir: &Path,
    mut manifest: RunManifest,
    body: impl FnOnce(&mut RunManifest) -> Result<()>,
) -> std::result::Result<(), AppError> {
    let started = Instant::now();
    let outcome = body(&mut manifest);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        manifest.status = "error".into();
        manifest.error = Some(e.to_string());
        eprintln!("error: {e}");
    }
    let path = out_dir.join("manifest.json");
    if let Err(e) = io::write_json(&path, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return Err(AppError::Run);
    }
    match outcome {
        Ok(()) => Ok(()),
        Err(_) => Err(AppError::Run),
    }
}

struct ProfileSpec {
    params: ProfileParams,
    rho_max: f64,
    window: (f64, f64),
}

#[allow(clippy::too_many_arguments)]
fn resolve_profile_spec(
    r: &Resolver,
    d: Option<u32>,
    sigma: Option<f64>,
    a: Option<f64>,
    q0: Option<f64>,
    rho_max: Option<f64>,
    window_lo: Option<f64>,
    window_hi: Option<f64>,
) -> std::result::Result<ProfileSpec, AppError> {
    let d = r.get(d, "d", 1)?;
    let sigma = r.require(sigma, "sigma")?;
    let a = r.require(a, "a")?;
    let q0 = r.require(q0, "q0")?;
    let rho_max = r.get(rho_max, "rho_max", 40.0)?;
    let lo = r.get(window_lo, "window_lo", 0.6 * rho_max)?;
    let hi = r.get(window_hi, "window_hi", rho_max)?;
    let params = ProfileParams::new(d, sigma, a, Complex64::new(q0, 0.0))
        .map_err(|e| AppError::Usage(e.to_string()))?;
    Ok(ProfileSpec {
        params,
        rho_max,
        window: (lo, hi),
    })
}

fn cmd_profile(
    out_dir: &Path,
    r: &Resolver,
    args: &ProfileArgs,
    tol: f64,
    full: bool,
) -> std::result::Result<(), AppError> {
    let spec = resolve_profile_spec(
        r,
        args.d,
        args.sigma,
        args.a,
        args.q0,
        args.rho_max,
        args.window_lo,
        args.window_hi,
    )?;
    let mut manifest = RunManifest::new(if full { "profile" } else { "fit" });
    manifest.param("d", spec.params.dim);
    manifest.param("sigma", spec.params.sigma);
    manifest.param("a", spec.params.a);
    manifest.param("q0", spec.params.q0.re);
    manifest.param("rho_max", spec.rho_max);
    manifest.param("window_lo", spec.window.0);
    manifest.param("window_hi", spec.window.1);
    manifest.param("tol", tol);

    with_manifest(out_dir, manifest, |m| {
        let profile = integrate_profile(&spec.params, spec.rho_max, tol)?;
        if full {
            let path = out_dir.join("profile.csv");
            io::write_profile_csv(&path, &profile)?;
            m.output(&path);
        }
        let fit = fit_far_field(&profile, spec.window)?;
        let path = out_dir.join("fit.json");
        io::write_fit_json(&path, &fit)?;
        m.output(&path);
        println!(
            "|c1| = {:.6e}  |c2| = {:.6e}  residual = {:.3e}",
            fit.c1.norm(),
            fit.c2.norm(),
            fit.residual
        );
        if full {
            let slope = decay_exponent(&profile, spec.window)?;
            let d = spec.params.dim as f64;
            let report = io::DecayReport {
                window_lo: spec.window.0,
                window_hi: spec.window.1,
                slope,
                predicted: -(d - 1.0 / spec.params.sigma),
            };
            let path = out_dir.join("decay.json");
            io::write_json(&path, &report)?;
            m.output(&path);
            println!(
                "decay slope = {slope:.5} (predicted {:.5})",
                report.predicted
            );
        }
        Ok(())
    })
}

fn cmd_shoot(
    out_dir: &Path,
    r: &Resolver,
    args: &ShootArgs,
    tol: f64,
) -> std::result::Result<(), AppError> {
    let d = r.get(args.d, "d", 1)?;
    let sigma = r.require(args.sigma, "sigma")?;
    let a0 = r.get(args.a0, "a0", 0.5)?;
    let q00 = r.get(args.q0, "q0", 1.3)?;
    let rho_max = r.get(args.rho_max, "rho_max", 40.0)?;
    let defaults = ShootOptions::default();
    let opts = ShootOptions {
        rho_max,
        window: (
            r.get(args.window_lo, "window_lo", 0.6 * rho_max)?,
            r.get(args.window_hi, "window_hi", rho_max)?,
        ),
        tol,
        simplex_scale: r.get(args.simplex_scale, "simplex_scale", defaults.simplex_scale)?,
        term_tol: r.get(args.term_tol, "term_tol", defaults.term_tol)?,
        max_evals: r.get(args.max_evals, "max_evals", defaults.max_evals)?,
    };
    let mut manifest = RunManifest::new("shoot");
    manifest.param("d", d);
    manifest.param("sigma", sigma);
    manifest.param("a0", a0);
    manifest.param("q0", q00);
    manifest.param("rho_max", opts.rho_max);
    manifest.param("window_lo", opts.window.0);
    manifest.param("window_hi", opts.window.1);
    manifest.param("tol", tol);
    manifest.param("max_evals", opts.max_evals);

    with_manifest(out_dir, manifest, |m| {
        let (res, trace) = shoot(d, sigma, (a0, q00), opts)?;
        let path = out_dir.join("shoot.json");
        io::write_shoot_json(&path, &res)?;
        m.output(&path);
        let path = out_dir.join("shoot_trace.csv");
        io::write_trace_csv(&path, &trace)?;
        m.output(&path);
        println!(
            "a = {:.6}  Q(0) = {:.6}  |c2| = {:.6e}  ({} evaluations, converged = {})",
            res.a_opt, res.q0_opt, res.c2_min, res.evaluations, res.converged
        );
        Ok(())
    })
}

fn resolve_sim_config(
    r: &Resolver,
    args: &SimArgs,
) -> std::result::Result<(ProfileParams, SimulationConfig), AppError> {
    let d = r.get(args.d, "d", 1)?;
    if d != 1 {
        return Err(AppError::Usage(
            "the simulation is one-dimensional (--d 1)".into(),
        ));
    }
    let sigma = r.require(args.sigma, "sigma")?;
    let a = r.require(args.a, "a")?;
    let q0 = r.require(args.q0, "q0")?;
    let params = ProfileParams::new(d, sigma, a, Complex64::new(q0, 0.0))
        .map_err(|e| AppError::Usage(e.to_string()))?;

    let reference = SimulationConfig::reference(sigma);
    let snapshots = match r.lookup(args.snapshots.clone(), "snapshots")? {
        Some(raw) => raw
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| AppError::Usage(format!("bad snapshot time {s:?}")))
            })
            .collect::<std::result::Result<Vec<f64>, AppError>>()?,
        None => reference.snapshot_times.clone(),
    };
    let t_end = r.get(args.t_end, "t_end", reference.t_end)?;
    let config = SimulationConfig {
        half_width: r.get(args.half_width, "half_width", reference.half_width)?,
        dx: r.get(args.dx, "dx", reference.dx)?,
        dt: r.get(args.dt, "dt", reference.dt)?,
        sigma,
        t_end,
        boundary: reference.boundary,
        nonlinear_iters: r.get(args.nonlinear_iters, "nonlinear_iters", 2)?,
        snapshot_times: snapshots.into_iter().filter(|&t| t <= t_end).collect(),
        diag_every: r.get(args.diag_every, "diag_every", 50)?,
    };
    Ok((params, config))
}

fn snapshot_path(out_dir: &Path, t: f64) -> PathBuf {
    out_dir.join(format!("snapshot_t{t:.4}.csv"))
}

fn run_simulation(
    out_dir: &Path,
    m: &mut RunManifest,
    params: &ProfileParams,
    config: &SimulationConfig,
    tol: f64,
) -> Result<(nls::RunOutput, SelfSimilarSolution)> {
    let profile = integrate_profile(params, config.half_width, tol)?;
    let out = nls::run(&profile, config)?;
    for snap in &out.snapshots {
        let path = snapshot_path(out_dir, snap.t);
        io::write_snapshot_csv(&path, snap)?;
        m.output(&path);
    }
    let path = out_dir.join("diagnostics.csv");
    io::write_diagnostics_csv(&path, &out.trace)?;
    m.output(&path);
    if let StopReason::Blowup { t, max_abs } = out.stop {
        m.param("stopped_by_blowup_at", t);
        m.param("max_abs_at_stop", max_abs);
        println!("blowup detected at t = {t:.4} (max|psi| = {max_abs:.3e})");
    }
    Ok((out, SelfSimilarSolution::with_unit_initial_scale(profile)))
}

fn cmd_simulate(
    out_dir: &Path,
    r: &Resolver,
    args: &SimArgs,
    tol: f64,
) -> std::result::Result<(), AppError> {
    let (params, config) = resolve_sim_config(r, args)?;
    let mut manifest = RunManifest::new("simulate");
    sim_params(&mut manifest, &params, &config, tol);
    with_manifest(out_dir, manifest, |m| {
        let (out, _) = run_simulation(out_dir, m, &params, &config, tol)?;
        println!(
            "{} snapshots, {} diagnostics rows",
            out.snapshots.len(),
            out.trace.len()
        );
        Ok(())
    })
}

fn sim_params(m: &mut RunManifest, params: &ProfileParams, config: &SimulationConfig, tol: f64) {
    m.param("d", params.dim);
    m.param("sigma", params.sigma);
    m.param("a", params.a);
    m.param("q0", params.q0.re);
    m.param("half_width", config.half_width);
    m.param("dx", config.dx);
    m.param("dt", config.dt);
    m.param("t_end", config.t_end);
    m.param("nonlinear_iters", config.nonlinear_iters);
    m.param(
        "snapshots",
        config
            .snapshot_times
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.param("tol", tol);
}

fn compare_and_write(
    out_dir: &Path,
    m: &mut RunManifest,
    out: &nls::RunOutput,
    sol: &SelfSimilarSolution,
    core_radius: f64,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for snap in &out.snapshots {
        // analytic overlay on the same grid over the core
        let path = out_dir.join(format!("analytic_t{:.4}.csv", snap.t));
        let mut ana = snap.clone();
        for (j, &xj) in snap.x.iter().enumerate() {
            ana.psi[j] = if xj.abs() <= core_radius {
                sol.evaluate(snap.t, xj.abs())?
            } else {
                Complex64::ZERO
            };
        }
        io::write_snapshot_csv(&path, &ana)?;
        m.output(&path);

        let (rel_linf, rel_l2) = nls::compare_with_analytic(snap, sol, core_radius)?;
        rows.push(CompareRow {
            t: snap.t,
            core_radius,
            rel_linf,
            rel_l2,
        });
    }
    let path = out_dir.join("compare.csv");
    io::write_compare_csv(&path, &rows)?;
    m.output(&path);
    for r in &rows {
        println!(
            "t = {:.4}: rel_linf = {:.4e}  rel_l2 = {:.4e}",
            r.t, r.rel_linf, r.rel_l2
        );
    }
    Ok(rows)
}

fn cmd_compare(
    out_dir: &Path,
    r: &Resolver,
    args: &CompareArgs,
    tol: f64,
) -> std::result::Result<(), AppError> {
    let (params, config) = resolve_sim_config(r, &args.sim)?;
    let core_radius = r.get(args.core_radius, "core_radius", 10.0)?;
    let mut manifest = RunManifest::new("compare");
    sim_params(&mut manifest, &params, &config, tol);
    manifest.param("core_radius", core_radius);
    with_manifest(out_dir, manifest, |m| {
        let (out, sol) = run_simulation(out_dir, m, &params, &config, tol)?;
        compare_and_write(out_dir, m, &out, &sol, core_radius)?;
        Ok(())
    })
}

#[derive(Serialize)]
struct DiagnoseReport {
    mass: f64,
    hamiltonian: f64,
    linf: f64,
    l2: f64,
    l_2sigma_plus_2: f64,
    p_star: Option<f64>,
    interpolation_min_margin: f64,
    interpolation_holds: bool,
}

fn cmd_diagnose(
    out_dir: &Path,
    r: &Resolver,
    args: &DiagnoseArgs,
) -> std::result::Result<(), AppError> {
    let sigma = r.require(args.sigma, "sigma")?;
    let d = r.get(args.d, "d", 1)?;
    let mut manifest = RunManifest::new("diagnose");
    manifest.param("snapshot", args.snapshot.display());
    manifest.param("sigma", sigma);
    manifest.param("d", d);
    with_manifest(out_dir, manifest, |m| {
        let state = io::read_snapshot_csv(&args.snapshot)?;
        let interp = diagnostics::blowup_implication_check(&state, sigma);
        let report = DiagnoseReport {
            mass: diagnostics::mass(&state),
            hamiltonian: diagnostics::hamiltonian(&state, sigma),
            linf: diagnostics::lp_norm(&state, f64::INFINITY),
            l2: diagnostics::lp_norm(&state, 2.0),
            l_2sigma_plus_2: diagnostics::lp_norm(&state, 2.0 * sigma + 2.0),
            p_star: diagnostics::p_star(sigma, d).ok(),
            interpolation_min_margin: interp.min_margin,
            interpolation_holds: interp.holds,
        };
        let path = out_dir.join("diagnose.json");
        io::write_json(&path, &report)?;
        m.output(&path);
        println!(
            "mass = {:.6e}  H = {:.6e}  |psi|_inf = {:.6e}",
            report.mass, report.hamiltonian, report.linf
        );
        Ok(())
    })
}

fn cmd_pipeline(
    out_dir: &Path,
    r: &Resolver,
    args: &PipelineArgs,
    tol: f64,
) -> std::result::Result<(), AppError> {
    let d = r.get(args.d, "d", 1)?;
    if d != 1 {
        return Err(AppError::Usage(
            "the pipeline is one-dimensional (--d 1)".into(),
        ));
    }
    let sigma = r.get(args.sigma, "sigma", 1.9)?;
    let a0 = r.get(args.a0, "a0", 0.5)?;
    let q00 = r.get(args.q0, "q0", 1.3)?;
    let core_radius = r.get(args.core_radius, "core_radius", 10.0)?;
    let reference = SimulationConfig::reference(sigma);
    let t_end = r.get(args.t_end, "t_end", reference.t_end)?;

    let mut manifest = RunManifest::new("pipeline");
    manifest.param("d", d);
    manifest.param("sigma", sigma);
    manifest.param("a0", a0);
    manifest.param("q0", q00);
    manifest.param("t_end", t_end);
    manifest.param("core_radius", core_radius);
    manifest.param("tol", tol);

    with_manifest(out_dir, manifest, |m| {
        // Stage 1: shooting.
        let shoot_opts = ShootOptions {
            tol,
            ..Default::default()
        };
        let (res, trace) = shoot(d, sigma, (a0, q00), shoot_opts).map_err(stage("shoot"))?;
        let path = out_dir.join("shoot.json");
        io::write_shoot_json(&path, &res)?;
        m.output(&path);
        let path = out_dir.join("shoot_trace.csv");
        io::write_trace_csv(&path, &trace)?;
        m.output(&path);
        println!(
            "shoot: a = {:.6}, Q(0) = {:.6}, |c2| = {:.4e}",
            res.a_opt, res.q0_opt, res.c2_min
        );

        // Stage 2: profile at the found parameters, out to the PDE domain.
        let params = ProfileParams::new(d, sigma, res.a_opt, Complex64::new(res.q0_opt, 0.0))
            .map_err(stage("profile"))?;
        let config = SimulationConfig {
            t_end,
            snapshot_times: reference
                .snapshot_times
                .iter()
                .copied()
                .filter(|&t| t <= t_end)
                .collect(),
            ..SimulationConfig::reference(sigma)
        };
        let profile =
            integrate_profile(&params, config.half_width, tol).map_err(stage("profile"))?;
        let path = out_dir.join("profile.csv");
        io::write_profile_csv(&path, &profile)?;
        m.output(&path);
        let fit = fit_far_field(&profile, (0.6 * 40.0, 40.0)).map_err(stage("fit"))?;
        let path = out_dir.join("fit.json");
        io::write_fit_json(&path, &fit)?;
        m.output(&path);
        let (_, verdict) =
            lp_integrability_check(&profile, 2.0 * sigma + 2.0).map_err(stage("fit"))?;
        m.param("lp_verdict_at_2sigma_plus_2", verdict);

        // Stage 3: simulate.
        let out = nls::run(&profile, &config).map_err(stage("simulate"))?;
        for snap in &out.snapshots {
            let path = snapshot_path(out_dir, snap.t);
            io::write_snapshot_csv(&path, snap)?;
            m.output(&path);
        }
        let path = out_dir.join("diagnostics.csv");
        io::write_diagnostics_csv(&path, &out.trace)?;
        m.output(&path);
        if let StopReason::Blowup { t, max_abs } = out.stop {
            m.param("stopped_by_blowup_at", t);
            m.param("max_abs_at_stop", max_abs);
        }

        // Stage 4: compare against the analytic solution.
        let sol = SelfSimilarSolution::with_unit_initial_scale(profile);
        compare_and_write(out_dir, m, &out, &sol, core_radius).map_err(stage("compare"))?;

        // Stage 5: blowup norms along the snapshots, in both forms.
        let mut norm_rows = Vec::new();
        for snap in &out.snapshots {
            if snap.t >= sol.tc {
                continue;
            }
            let l = subnls::selfsimilar::scale_l(sol.a(), sol.tc, snap.t)?;
            for p in [2.0 * sigma + 2.0, f64::INFINITY] {
                let exact = sol.lp_norm(snap.t, p)?;
                let plain = sol.profile_norm(p)? / l.powf(1.0 / sigma);
                norm_rows.push(NormRow {
                    t: snap.t,
                    l,
                    p,
                    norm_exact: exact,
                    norm_plain_form: plain,
                });
            }
        }
        let path = out_dir.join("norms.csv");
        io::write_norms_csv(&path, &norm_rows)?;
        m.output(&path);
        Ok(())
    })
}

/// Prefix an error with the pipeline stage that produced it.
fn stage(name: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Io(io) => Error::Io(io),
        other => Error::Config(format!("stage {name}: {other}")),
    }
}
