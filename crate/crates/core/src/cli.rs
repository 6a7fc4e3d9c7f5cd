//! Command-line front end. Every subcommand reads a scenario (the embedded
//! reference one unless `--config` is given), applies flag overrides and
//! writes CSV tables and plain-text reports into `--out`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, format_float, numbered};
use crate::modal::{check_assumptions, ModalSystem};
use crate::observer::{
    assemble_error_generator, decay_metrics, propagate_error, propagate_plant_observer, ErrorState, ModalState,
    PlantState, Trajectory,
};
use crate::resolvent::{
    build_context, eigenvalue_density, hs_bound, hs_norm, perturbation_sweep, resolvent_apply, resolvent_blocks,
};
use crate::scenario::{Integrator, Scenario};
use crate::spectral;

/// Points per eigenfunction profile in `modes`.
pub const PROFILE_POINTS: usize = 201;

/// Random right-hand sides per shift in `resolvent`.
pub const RANDOM_CHECKS: usize = 10;

/// Exit status when `check` finds a failed assumption.
pub const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "modal-observer", version, about = "Modal observer design and verification for a beam with an attached body")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Scenario file (TOML). Defaults to the built-in reference scenario.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Truncation order N (for `sweep`: a single N instead of the list).
    #[arg(long, global = true)]
    pub n_modes: Option<usize>,
    /// Comma-separated gains: one value or one per output (for `sweep`:
    /// the list of uniform gains to sweep).
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    pub gamma: Option<Vec<f64>>,
    /// Final time in seconds.
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Number of output samples including t = 0.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seed for the randomized checks in `resolvent`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Drop the body-displacement output (curvature sensors only).
    #[arg(long, global = true)]
    pub curvature_only: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency table and eigenfunction samples.
    Modes,
    /// Dump Omega, B1, C1, F and the gains.
    Assemble,
    /// Observer error trajectory and decay report.
    Simulate {
        /// Rebuild the system from an `assemble` output directory.
        #[arg(long)]
        from_dump: Option<PathBuf>,
    },
    /// Resolvent matrix M, blocks and Hilbert–Schmidt report.
    Resolvent,
    /// Structural assumption report.
    Check,
    /// Decay metrics over the gain and truncation lists.
    Sweep,
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: String,
    /// False only when `check` finds a failed assumption.
    pub passed: bool,
}

/// Parses `args` (including the program name), runs, prints and maps the
/// result to an exit status.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            // A closed stdout (e.g. piped into `head`) is not an error here.
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.report.as_bytes());
            for f in &outcome.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                // Context errors already print their source inline.
                if !msg.contains(&s.to_string()) {
                    let _ = write!(msg, "\n  caused by: {s}");
                }
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let scenario = prepare(&cli.command, &cli.options)?;
    let out = &cli.options.out;
    io::ensure_dir(out)?;
    match &cli.command {
        Command::Modes => run_modes(&scenario, out),
        Command::Assemble => run_assemble(&scenario, out),
        Command::Simulate { from_dump } => run_simulate(&scenario, out, from_dump.as_deref()),
        Command::Resolvent => run_resolvent(&scenario, out, cli.options.seed),
        Command::Check => run_check(&scenario, out, cli.options.n_modes),
        Command::Sweep => run_sweep(&scenario, out),
    }
}

/// Loads the scenario and applies flag overrides.
pub fn prepare(command: &Command, opts: &Options) -> Result<Scenario> {
    let mut s = match &opts.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::reference(),
    };
    if opts.curvature_only {
        s = s.curvature_only()?;
    }
    let sweeping = matches!(command, Command::Sweep);
    if let Some(n) = opts.n_modes {
        if sweeping {
            let sweep = s
                .sweep
                .as_mut()
                .ok_or_else(|| Error::Config("sweep: scenario has no [sweep] section".into()))?;
            sweep.n_modes = vec![n];
        } else {
            s.n_modes = n;
        }
    }
    if let Some(g) = &opts.gamma {
        if sweeping {
            let sweep = s
                .sweep
                .as_mut()
                .ok_or_else(|| Error::Config("sweep: scenario has no [sweep] section".into()))?;
            sweep.gains = g.clone();
        } else {
            s.gains = g.clone();
        }
    }
    if let Some(t) = opts.t_end {
        s.t_end = t;
    }
    if let Some(k) = opts.samples {
        s.samples = k;
    }
    s.validate().map_err(|e| e.context("after applying command-line overrides"))?;
    if sweeping && s.sweep.is_none() {
        return Err(Error::Config("sweep: scenario has no [sweep] section".into()));
    }
    Ok(s)
}

fn output_names(s: &Scenario) -> Vec<String> {
    let mut names = Vec::new();
    if s.sensors.body_output {
        names.push("body".to_string());
    }
    names.extend(numbered("curvature_", s.sensors.positions.len()));
    names
}

fn run_modes(s: &Scenario, out: &Path) -> Result<Outcome> {
    let modes = spectral::find_modes(&s.beam, s.n_modes).map_err(|e| e.context("solving the spectral problem"))?;
    let table = out.join("modes.csv");
    let header: Vec<String> = ["index", "mu", "omega", "norm_sq", "a1", "h1", "a2", "h2"]
        .iter()
        .map(|h| h.to_string())
        .collect();
    io::write_csv(
        &table,
        &header,
        modes.iter().map(|m| {
            let c = m.coeffs();
            vec![m.index as f64, m.mu, m.omega, m.norm_sq, c.a1, c.h1, c.a2, c.h2]
        }),
    )?;

    let profile = out.join("eigenfunctions.csv");
    let mut header = vec!["x".to_string()];
    header.extend(numbered("W_", modes.len()));
    let l = s.beam.length;
    let rows = (0..PROFILE_POINTS)
        .map(|k| {
            let x = l * k as f64 / (PROFILE_POINTS - 1) as f64;
            let mut row = vec![x];
            for m in &modes {
                row.push(m.eval(x, 0)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_csv(&profile, &header, rows)?;

    let mut report = String::new();
    writeln!(report, "{} modes", modes.len()).ok();
    writeln!(report, "{:>5} {:>22} {:>22}", "j", "mu_j (1/m)", "omega_j (rad/s)").ok();
    for m in &modes {
        writeln!(report, "{:>5} {:>22} {:>22}", m.index, format_float(m.mu), format_float(m.omega)).ok();
    }
    Ok(Outcome {
        files: vec![table, profile],
        report,
        passed: true,
    })
}

fn run_assemble(s: &Scenario, out: &Path) -> Result<Outcome> {
    let (_, sys) = s.system()?;
    let files = write_dump(&sys, &output_names(s), out)?;
    let report = format!(
        "assembled N = {} modes, r = {} outputs, k + 1 = {} inputs\n",
        sys.n_modes(),
        sys.n_outputs(),
        sys.n_inputs()
    );
    Ok(Outcome {
        files,
        report,
        passed: true,
    })
}

/// Writes `omegas.csv`, `b1.csv`, `c1.csv`, `f.csv`, `gammas.csv`.
pub fn write_dump(sys: &ModalSystem, outputs: &[String], out: &Path) -> Result<Vec<PathBuf>> {
    let n = sys.n_modes();
    let omegas = out.join("omegas.csv");
    io::write_matrix(&omegas, "mode", &["omega".to_string()], &DMatrix::from_column_slice(n, 1, sys.omegas().as_slice()))?;
    let b1 = out.join("b1.csv");
    let mut inputs = vec!["body".to_string()];
    inputs.extend(numbered("actuator_", sys.n_inputs() - 1));
    io::write_matrix(&b1, "mode", &inputs, sys.b1())?;
    let c1 = out.join("c1.csv");
    io::write_matrix(&c1, "output", &numbered("mode_", n), sys.c1())?;
    let f = out.join("f.csv");
    io::write_matrix(&f, "state", outputs, sys.gain())?;
    let gammas = out.join("gammas.csv");
    io::write_matrix(
        &gammas,
        "output",
        &["gamma".to_string()],
        &DMatrix::from_column_slice(sys.n_outputs(), 1, sys.gammas()),
    )?;
    Ok(vec![omegas, b1, c1, f, gammas])
}

/// Rebuilds a system from [`write_dump`] output.
pub fn read_dump(dir: &Path) -> Result<ModalSystem> {
    let ctx = |e: Error| e.context(format!("reading dump in {}", dir.display()));
    let omegas = io::read_matrix(&dir.join("omegas.csv")).map_err(ctx)?;
    let b1 = io::read_matrix(&dir.join("b1.csv")).map_err(ctx)?;
    let c1 = io::read_matrix(&dir.join("c1.csv")).map_err(ctx)?;
    let gammas = io::read_matrix(&dir.join("gammas.csv")).map_err(ctx)?;
    ModalSystem::new(
        DVector::from_column_slice(omegas.column(0).as_slice()),
        b1,
        c1,
        gammas.column(0).iter().copied().collect(),
    )
    .map_err(ctx)
}

fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(numbered("Delta_", n));
    h.extend(numbered("delta_", n));
    h.push("W".to_string());
    h.push("norm_sq".to_string());
    h
}

/// Columns `t, Delta_1..N, delta_1..N, W, norm_sq`.
pub fn write_trajectory(path: &Path, traj: &Trajectory<ErrorState>) -> Result<()> {
    let n = traj.states.first().map_or(0, |e| e.dim());
    io::write_csv(
        path,
        &trajectory_header(n),
        (0..traj.len()).map(|k| {
            let e = &traj.states[k];
            let mut row = Vec::with_capacity(2 * n + 3);
            row.push(traj.times[k]);
            row.extend(e.xi.iter().copied());
            row.extend(e.eta.iter().copied());
            row.push(traj.lyapunov[k]);
            row.push(traj.norm_sq[k]);
            row
        }),
    )
}

/// The observer error trajectory of the scenario on `sys`.
pub fn simulate_error(s: &Scenario, sys: &ModalSystem) -> Result<Trajectory<ErrorState>> {
    let e0 = s.initial_error(sys.omegas())?;
    let grid = s.time_grid();
    match s.integrator {
        Integrator::Exponential => propagate_error(sys, &e0, &grid),
        Integrator::Rk4 => {
            let z0 = PlantState::from_parts(e0.xi.clone(), e0.eta.clone());
            let zbar0 = PlantState::zeros(sys.n_modes());
            let k = sys.n_inputs();
            let u = move |_t: f64| DVector::zeros(k);
            let (plant, observer) = propagate_plant_observer(sys, &z0, &zbar0, &u, &grid)?;
            plant.difference(&observer)
        }
    }
    .map_err(|e| e.context(format!("simulating N = {}", sys.n_modes())))
}

fn run_simulate(s: &Scenario, out: &Path, from_dump: Option<&Path>) -> Result<Outcome> {
    let sys = match from_dump {
        Some(dir) => read_dump(dir)?,
        None => s.system()?.1,
    };
    let traj = simulate_error(s, &sys)?;
    let path = out.join("trajectory.csv");
    write_trajectory(&path, &traj)?;

    let metrics = decay_metrics(&traj, &assemble_error_generator(&sys))?;
    let worst_increase = traj
        .lyapunov
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut report = String::new();
    writeln!(report, "N = {}, r = {}", sys.n_modes(), sys.n_outputs()).ok();
    writeln!(report, "gains = {}", join_floats(sys.gammas())).ok();
    writeln!(
        report,
        "integrator = {}",
        match s.integrator {
            Integrator::Exponential => "exponential",
            Integrator::Rk4 => "rk4",
        }
    )
    .ok();
    writeln!(report, "samples = {}, t_end = {}", traj.len(), format_float(s.t_end)).ok();
    writeln!(report, "W(0) = {}", format_float(traj.lyapunov[0])).ok();
    writeln!(report, "W(t_end) = {}", format_float(*traj.lyapunov.last().expect("non-empty"))).ok();
    writeln!(report, "W(t_end)/W(0) = {}", format_float(metrics.lyapunov_ratio)).ok();
    writeln!(report, "fitted rate (ln|e| slope, last half) = {}", format_float(metrics.fitted_rate)).ok();
    writeln!(report, "max Re eig(A_hat) = {}", format_float(metrics.max_real_eigenvalue)).ok();
    writeln!(report, "largest relative step increase of W = {}", format_float(worst_increase)).ok();
    let report_path = out.join("simulate_report.txt");
    io::write_text(&report_path, &report)?;
    Ok(Outcome {
        files: vec![path, report_path],
        report,
        passed: true,
    })
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(", ")
}

fn run_resolvent(s: &Scenario, out: &Path, seed: u64) -> Result<Outcome> {
    let (_, sys) = s.system()?;
    let n = sys.n_modes();
    let generator = assemble_error_generator(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m_rows = Vec::new();
    let mut block_rows = Vec::new();
    let mut report = String::new();
    writeln!(report, "N = {n}, r = {}, seed = {seed}", sys.n_outputs()).ok();
    for &lambda in &s.lambdas {
        let ctx = build_context(&sys, lambda).map_err(|e| e.context(format!("resolvent at lambda = {lambda:e}")))?;
        for ((row, col), v) in ctx.m.row_iter().enumerate().flat_map(|(s, r)| {
            r.iter().copied().enumerate().map(move |(p, v)| ((s, p), v)).collect::<Vec<_>>()
        }) {
            m_rows.push(vec![lambda, (row + 1) as f64, (col + 1) as f64, v]);
        }
        let blocks = resolvent_blocks(&ctx, &sys);
        for (b, mat) in [&blocks.r1, &blocks.r2, &blocks.r3, &blocks.r4].iter().enumerate() {
            for j in 0..n {
                for i in 0..n {
                    block_rows.push(vec![lambda, (b + 1) as f64, (j + 1) as f64, (i + 1) as f64, mat[(j, i)]]);
                }
            }
        }
        let hs = hs_norm(&blocks);
        let bound = hs_bound(&sys, lambda)?;

        let shifted = &generator - DMatrix::<f64>::identity(2 * n, 2 * n) * lambda;
        let lu = shifted.clone().lu();
        let mut worst_residual: f64 = 0.0;
        let mut worst_oracle: f64 = 0.0;
        for _ in 0..RANDOM_CHECKS {
            let rhs = ErrorState::from_stacked(&DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0)));
            let x = resolvent_apply(&ctx, &sys, &rhs)?.stacked();
            let b = rhs.stacked();
            worst_residual = worst_residual.max((&shifted * &x - &b).norm() / b.norm());
            let dense = lu
                .solve(&b)
                .ok_or_else(|| Error::Dimension("dense oracle: singular shifted generator".into()))?;
            worst_oracle = worst_oracle.max((&x - &dense).norm() / dense.norm());
        }
        writeln!(report, "lambda = {}", format_float(lambda)).ok();
        writeln!(report, "  cond(M) = {}", format_float(ctx.condition)).ok();
        writeln!(report, "  ||R||_HS^2 = {}", format_float(hs * hs)).ok();
        writeln!(report, "  truncated HS bound = {}", format_float(bound)).ok();
        writeln!(report, "  bound holds = {}", hs * hs <= bound).ok();
        writeln!(report, "  worst relative residual ({RANDOM_CHECKS} rhs) = {}", format_float(worst_residual)).ok();
        writeln!(report, "  worst relative deviation from dense solve = {}", format_float(worst_oracle)).ok();
    }
    let pert = perturbation_sweep(&sys, &s.lambdas)?;
    writeln!(report, "perturbation of M:").ok();
    for (lambda, dev, inv) in &pert.entries {
        writeln!(
            report,
            "  lambda = {}: ||M - I|| = {}, ||M^-1|| = {}",
            format_float(*lambda),
            format_float(*dev),
            format_float(*inv)
        )
        .ok();
    }
    writeln!(report, "  max ||M - I||/lambda = {}", format_float(pert.k_deviation)).ok();
    writeln!(report, "  max (||M^-1|| - 1)/lambda = {}", format_float(pert.k_inverse)).ok();
    writeln!(report, "  series constant gamma_max sum c^2/omega^2 = {}", format_float(pert.k_theory)).ok();

    let m_path = out.join("resolvent_m.csv");
    io::write_csv(
        &m_path,
        &["lambda", "s", "p", "value"].map(String::from),
        m_rows,
    )?;
    let blocks_path = out.join("resolvent_blocks.csv");
    io::write_csv(
        &blocks_path,
        &["lambda", "block", "j", "i", "value"].map(String::from),
        block_rows,
    )?;
    let report_path = out.join("resolvent_report.txt");
    io::write_text(&report_path, &report)?;
    Ok(Outcome {
        files: vec![m_path, blocks_path, report_path],
        report,
        passed: true,
    })
}

fn run_check(s: &Scenario, out: &Path, n_override: Option<usize>) -> Result<Outcome> {
    let n = n_override.unwrap_or(s.check_modes);
    let (_, sys) = s.system_with(n, s.resolved_gains())?;
    let a = check_assumptions(&sys, s.tail_probe.min(n));
    let verdict = |b: bool| if b { "pass" } else { "FAIL" };
    let mut report = String::new();
    writeln!(report, "assumption check on N = {n} modes, r = {} outputs", sys.n_outputs()).ok();
    let o = &a.distinct_frequencies;
    writeln!(report, "distinct increasing frequencies: {}", verdict(o.passed)).ok();
    if let Some(j) = o.first_violation {
        writeln!(report, "  omega_{} >= omega_{}", j, j + 1).ok();
    }
    let sc = &a.summable_inverse_squares;
    writeln!(report, "summable 1/omega^2: {}", verdict(sc.passed)).ok();
    writeln!(report, "  partial sum = {}", format_float(*sc.partial_sums.last().unwrap_or(&0.0))).ok();
    writeln!(report, "  block sums ({} terms) = {}", sc.block_len, join_floats(&sc.block_sums)).ok();
    writeln!(
        report,
        "  tail fit omega_j ~ {} j^{}",
        format_float(sc.growth_coefficient),
        format_float(sc.growth_exponent)
    )
    .ok();
    writeln!(report, "  tail estimate = {}", format_float(sc.tail_estimate)).ok();
    let cov = &a.output_coverage;
    writeln!(report, "every mode observed: {}", verdict(cov.passed)).ok();
    writeln!(report, "  rank C1 = {}", cov.rank).ok();
    if !cov.unobserved_modes.is_empty() {
        let idx: Vec<String> = cov.unobserved_modes.iter().map(|j| j.to_string()).collect();
        writeln!(report, "  unobserved modes: {}", idx.join(", ")).ok();
    }
    writeln!(report, "kernel invariance: {}", a.kernel_invariance_note).ok();
    match eigenvalue_density(sys.omegas().as_slice(), sys.omegas().max() / 8.0) {
        Ok(d) => {
            writeln!(report, "eigenvalue density (window {}):", format_float(d.window)).ok();
            for (y, count, density) in &d.windows {
                writeln!(report, "  [{}, ...): {count} ({})", format_float(*y), format_float(*density)).ok();
            }
            writeln!(
                report,
                "  log-log slope = {}, decreasing = {}",
                format_float(d.fitted_exponent),
                d.decreasing
            )
            .ok();
        }
        Err(e) => {
            writeln!(report, "eigenvalue density: skipped ({e})").ok();
        }
    }
    writeln!(report, "overall: {}", verdict(a.all_passed())).ok();
    let path = out.join("check_report.txt");
    io::write_text(&path, &report)?;
    Ok(Outcome {
        files: vec![path],
        report,
        passed: a.all_passed(),
    })
}

/// One `(gamma, N)` sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub gamma: f64,
    pub n_modes: usize,
    pub lyapunov_ratio: f64,
    pub final_lyapunov: f64,
    pub fitted_rate: f64,
    pub max_real_eigenvalue: f64,
    pub file: PathBuf,
}

/// Runs every `(gamma, N)` pair concurrently with the uniform gain `gamma`.
pub fn sweep_entries(s: &Scenario, out: &Path) -> Result<Vec<SweepEntry>> {
    let sweep = s
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: scenario has no [sweep] section".into()))?;
    let n_max = *sweep.n_modes.iter().max().expect("validated non-empty");
    // Truncations nest, so one solve serves every N.
    let modes = spectral::find_modes(&s.beam, n_max).map_err(|e| e.context("solving the spectral problem"))?;
    let r = s.sensors.output_count();
    let jobs: Vec<(f64, usize)> = sweep
        .gains
        .iter()
        .flat_map(|&g| sweep.n_modes.iter().map(move |&n| (g, n)))
        .collect();
    jobs.par_iter()
        .map(|&(gamma, n)| {
            let sys = ModalSystem::from_modes(&modes[..n], &s.sensors, &s.actuators, vec![gamma; r])?;
            let traj = simulate_error(s, &sys)?;
            let file = out.join(format!("trajectory_gamma{}_n{n}.csv", format_float(gamma)));
            write_trajectory(&file, &traj)?;
            let m = decay_metrics(&traj, &assemble_error_generator(&sys))?;
            Ok(SweepEntry {
                gamma,
                n_modes: n,
                lyapunov_ratio: m.lyapunov_ratio,
                final_lyapunov: *traj.lyapunov.last().expect("non-empty"),
                fitted_rate: m.fitted_rate,
                max_real_eigenvalue: m.max_real_eigenvalue,
                file,
            })
        })
        .collect()
}

fn run_sweep(s: &Scenario, out: &Path) -> Result<Outcome> {
    let entries = sweep_entries(s, out)?;
    let table = out.join("sweep.csv");
    io::write_csv(
        &table,
        &["gamma", "n_modes", "w_ratio", "w_final", "fitted_rate", "max_real_eigenvalue"].map(String::from),
        entries.iter().map(|e| {
            vec![
                e.gamma,
                e.n_modes as f64,
                e.lyapunov_ratio,
                e.final_lyapunov,
                e.fitted_rate,
                e.max_real_eigenvalue,
            ]
        }),
    )?;
    let mut report = String::new();
    writeln!(
        report,
        "{:>8} {:>6} {:>24} {:>24} {:>24}",
        "gamma", "N", "W(t_end)/W(0)", "fitted rate", "max Re eig"
    )
    .ok();
    for e in &entries {
        writeln!(
            report,
            "{:>8} {:>6} {:>24} {:>24} {:>24}",
            format_float(e.gamma),
            e.n_modes,
            format_float(e.lyapunov_ratio),
            format_float(e.fitted_rate),
            format_float(e.max_real_eigenvalue)
        )
        .ok();
    }
    let report_path = out.join("sweep_report.txt");
    io::write_text(&report_path, &report)?;
    let mut files = vec![table, report_path];
    files.extend(entries.into_iter().map(|e| e.file));
    Ok(Outcome {
        files,
        report,
        passed: true,
    })
}
