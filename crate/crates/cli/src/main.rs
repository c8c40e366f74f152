//! Command-line driver for the `swapfv` particle engines.
//!
//! Loads a JSON run configuration, simulates one of the engines, and writes
//! plot-ready artifacts: trajectory CSV, marginal histograms, a versioned
//! summary JSON with eigenvalue estimates, plus oracle eigenpairs and
//! implied-potential surfaces for cross-checking. Everything is seeded and
//! single-purpose: one process, one run; replica sweeps fan out over
//! threads with per-replica output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use swapfv::{
    build_generator, eigenvalue_estimate, implied_potential, marginal_histogram,
    principal_eigenpair, principal_eigenpair_dual, read_points_csv, read_trajectory_csv, resample,
    score_matching_loss, simulate_finite_swap, simulate_ins, simulate_standard_fv,
    weighted_empirical, write_eigenpair_csv, write_histogram_csv, write_points_csv,
    write_summary_json, write_surface_csv, write_trajectory_csv, Direction, ProblemConfig,
    ProblemSpec, RunSummary, ScoreField, SimParams,
};
use swapfv_cli::{load_problem_config, load_run_config, DirectionArg, EngineChoice, RunConfig};

/// Event-driven Fleming–Viot and infinite-swapping particle simulations.
#[derive(Debug, Parser)]
#[command(name = "swapfv", version, about)]
struct Cli {
    /// Override the seed in the run configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output artifacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a particle system; write trajectory, histograms, and summary.
    Run {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,

        /// Independent replicas to run concurrently; files gain a `_r{k}`
        /// suffix and replica `k` uses stream `k` of the configured seed.
        #[arg(long, default_value_t = 1)]
        replicas: u64,
    },

    /// Solve the grid eigenproblem and write the eigenpair.
    Oracle {
        /// Run configuration or bare problem block (JSON).
        #[arg(long)]
        config: PathBuf,

        /// Grid nodes per axis.
        #[arg(long)]
        grid: usize,

        /// Which generator to discretize.
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        direction: DirectionArg,

        /// Solve for the function-side (right) eigenvector instead of the
        /// density side.
        #[arg(long)]
        dual: bool,
    },

    /// Tabulate the implied potential W_ε on a product grid (d = 1 only).
    ImpliedPotential {
        /// Run configuration or bare problem block (JSON).
        #[arg(long)]
        config: PathBuf,

        /// Grid nodes per axis.
        #[arg(long)]
        grid: usize,
    },

    /// Draw points from a recorded trajectory's weighted empirical measure.
    Resample {
        /// Run configuration (JSON); supplies the domain and burn-in.
        #[arg(long)]
        config: PathBuf,

        /// Trajectory CSV produced by `run`.
        #[arg(long)]
        trajectory: PathBuf,

        /// Number of points to draw.
        #[arg(long)]
        count: usize,

        /// Which marginal to draw from.
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        side: DirectionArg,
    },

    /// Evaluate the score-matching loss of the problem's Gibbs score,
    /// s(x) = −(2/ε_eff)·∇V(x), over a point cloud.
    ScoreLoss {
        /// Run configuration or bare problem block (JSON).
        #[arg(long)]
        config: PathBuf,

        /// Points CSV (`index,x_1..x_d`), e.g. from `resample`.
        #[arg(long)]
        points: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;

    match &cli.command {
        Command::Run { config, replicas } => {
            let mut cfg = load_run_config(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_run(&cfg, *replicas, &cli.out_dir, cli.quiet)
        }
        Command::Oracle { config, grid, direction, dual } => {
            let problem = load_problem_config(config)?;
            cmd_oracle(&problem, *grid, (*direction).into(), *dual, &cli.out_dir, cli.quiet)
        }
        Command::ImpliedPotential { config, grid } => {
            let problem = load_problem_config(config)?;
            cmd_implied_potential(&problem, *grid, &cli.out_dir, cli.quiet)
        }
        Command::Resample { config, trajectory, count, side } => {
            let mut cfg = load_run_config(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_resample(&cfg, trajectory, *count, (*side).into(), &cli.out_dir, cli.quiet)
        }
        Command::ScoreLoss { config, points } => {
            let problem = load_problem_config(config)?;
            cmd_score_loss(&problem, points)
        }
    }
}

fn cmd_run(cfg: &RunConfig, replicas: u64, out_dir: &Path, quiet: bool) -> Result<()> {
    let spec = ProblemSpec::from_config(&cfg.problem)?;
    if replicas <= 1 {
        execute_run(cfg, &spec, 0, "", out_dir, quiet)?;
        return Ok(());
    }
    // Each replica owns stream `k` of the seed and its own output files, so
    // the threads never contend on a writer.
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(replicas as usize);
        for k in 0..replicas {
            let spec = &spec;
            let suffix = format!("_r{k}");
            handles.push(scope.spawn(move || execute_run(cfg, spec, k, &suffix, out_dir, quiet)));
        }
        for handle in handles {
            handle.join().map_err(|_| anyhow!("replica thread panicked"))??;
        }
        Ok(())
    })
}

fn execute_run(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    replica: u64,
    suffix: &str,
    out_dir: &Path,
    quiet: bool,
) -> Result<RunSummary> {
    let params = SimParams::new(cfg.n_pairs, cfg.t_final, cfg.problem.grid_policy(), cfg.seed)
        .with_stride(cfg.record_stride)
        .with_rebirth(cfg.rebirth.into())
        .with_replica(replica);

    let clock = Instant::now();
    let traj = match cfg.engine {
        EngineChoice::Ins => simulate_ins(spec, &params)?,
        EngineChoice::StandardFv => simulate_standard_fv(spec, cfg.direction.into(), &params)?,
        EngineChoice::FiniteSwap => {
            // validate() guarantees the intensity is present.
            simulate_finite_swap(spec, cfg.swap_intensity.expect("validated"), &params)?
        }
    };
    let wall = clock.elapsed().as_secs_f64();

    let stem = cfg.output_stem.as_deref().map(|s| format!("{s}_")).unwrap_or_default();
    let artifact = |base: &str, ext: &str| out_dir.join(format!("{stem}{base}{suffix}.{ext}"));

    write_trajectory_csv(&traj, &artifact("trajectory", "csv"))?;

    let empirical = weighted_empirical(&traj, spec.domain(), cfg.burn_in)?;
    let hist_fwd = marginal_histogram(&empirical, Direction::Forward, cfg.bins)?;
    let hist_bwd = marginal_histogram(&empirical, Direction::Backward, cfg.bins)?;
    write_histogram_csv(&hist_fwd, &artifact("histogram_forward", "csv"))?;
    write_histogram_csv(&hist_bwd, &artifact("histogram_backward", "csv"))?;

    let mut summary = RunSummary::for_trajectory(&traj, replica);
    summary.wall_time_seconds = wall;
    // A standard run carries only its own role; the pair engines estimate
    // both sides from one trajectory.
    let (want_fwd, want_bwd) = match (cfg.engine, cfg.direction) {
        (EngineChoice::StandardFv, DirectionArg::Forward) => (true, false),
        (EngineChoice::StandardFv, DirectionArg::Backward) => (false, true),
        _ => (true, true),
    };
    if want_fwd {
        summary.lambda_forward =
            Some(eigenvalue_estimate(&traj, spec, Direction::Forward, cfg.burn_in)?);
    }
    if want_bwd {
        summary.lambda_backward =
            Some(eigenvalue_estimate(&traj, spec, Direction::Backward, cfg.burn_in)?);
    }
    summary.config = Some(serde_json::to_value(cfg)?);
    write_summary_json(&summary, &artifact("summary", "json"))?;

    if !quiet {
        let mut lines = format!(
            "[{}{suffix}] {} events, {} records, {:.2} s\n",
            traj.engine.as_str(),
            traj.events.total(),
            traj.records.len(),
            wall,
        );
        for (label, est) in [
            ("lambda_forward", &summary.lambda_forward),
            ("lambda_backward", &summary.lambda_backward),
        ] {
            if let Some(est) = est {
                match est.std_error {
                    Some(se) => lines
                        .push_str(&format!("  {label} = {:+.6e} (se {:.2e})\n", est.lambda, se)),
                    None => lines.push_str(&format!("  {label} = {:+.6e}\n", est.lambda)),
                }
            }
        }
        print!("{lines}");
    }
    Ok(summary)
}

fn cmd_oracle(
    problem: &ProblemConfig,
    grid: usize,
    direction: Direction,
    dual: bool,
    out_dir: &Path,
    quiet: bool,
) -> Result<()> {
    let spec = ProblemSpec::from_config(problem)?;
    let gen = build_generator(&spec, grid, direction)?;
    let pair = if dual { principal_eigenpair_dual(&gen)? } else { principal_eigenpair(&gen)? };
    let side = if dual { "dual" } else { "density" };

    let csv_path = out_dir.join(format!("eigenpair_{}_{side}_n{grid}.csv", direction.as_str()));
    write_eigenpair_csv(&gen, &pair, &csv_path)?;

    let report = serde_json::json!({
        "schema_version": swapfv::io::SUMMARY_SCHEMA_VERSION,
        "direction": direction.as_str(),
        "side": side,
        "grid": grid,
        "nodes": gen.node_count(),
        "lambda": pair.lambda,
        "residual": pair.residual,
        "iterations": pair.iterations,
    });
    let json_path = out_dir.join(format!("oracle_{}_{side}_n{grid}.json", direction.as_str()));
    fs::write(&json_path, format!("{}\n", serde_json::to_string_pretty(&report)?))
        .with_context(|| format!("writing {}", json_path.display()))?;

    if !quiet {
        println!(
            "lambda = {:+.12e} (residual {:.3e}, {} solves)\nwrote {} and {}",
            pair.lambda,
            pair.residual,
            pair.iterations,
            csv_path.display(),
            json_path.display(),
        );
    }
    Ok(())
}

fn cmd_implied_potential(
    problem: &ProblemConfig,
    grid: usize,
    out_dir: &Path,
    quiet: bool,
) -> Result<()> {
    let spec = ProblemSpec::from_config(problem)?;
    if spec.dim() != 1 {
        bail!("implied-potential needs a one-dimensional problem (got d = {})", spec.dim());
    }
    let gen = build_generator(&spec, grid, Direction::Forward)?;
    let density = principal_eigenpair(&gen)?;
    let dual = principal_eigenpair_dual(&gen)?;

    // Ψ = −ε·log ψ and Φ = −ε·log φ, each shifted so its minimum sits at
    // zero; the shift moves W_ε by a constant and nothing else.
    let eps = spec.epsilon();
    let to_potential = |v: &[f64]| {
        let mut out: Vec<f64> = v.iter().map(|&p| -eps * p.ln()).collect();
        let min = out.iter().copied().fold(f64::INFINITY, f64::min);
        for w in &mut out {
            *w -= min;
        }
        out
    };
    let psi = to_potential(&density.vector);
    let phi = to_potential(&dual.vector);

    let nodes = gen.node_coords_flat();
    let lower = spec.domain().lower()[0];
    let h = gen.h();
    let lookup = |table: Vec<f64>| move |x: f64| table[((x - lower) / h).round() as usize];
    let surface = implied_potential(&nodes, &nodes, lookup(psi), lookup(phi), eps)?;

    let path = out_dir.join(format!("implied_potential_n{grid}.csv"));
    write_surface_csv(&surface, &path)?;
    if !quiet {
        let (i, j) = surface.argmin();
        println!(
            "wrote {} ({grid}×{grid} nodes, min {:.6} at ({:.4}, {:.4}))",
            path.display(),
            surface.min_value(),
            surface.xs[i],
            surface.ys[j],
        );
    }
    Ok(())
}

fn cmd_resample(
    cfg: &RunConfig,
    trajectory: &Path,
    count: usize,
    side: Direction,
    out_dir: &Path,
    quiet: bool,
) -> Result<()> {
    let spec = ProblemSpec::from_config(&cfg.problem)?;
    let traj = read_trajectory_csv(trajectory)
        .with_context(|| format!("reading trajectory {}", trajectory.display()))?;
    let empirical = weighted_empirical(&traj, spec.domain(), cfg.burn_in)?;
    let points = resample(&empirical, side, count, cfg.seed)?;

    let path = out_dir.join(format!("resampled_{}.csv", side.as_str()));
    write_points_csv(&points, spec.dim(), &path)?;
    if !quiet {
        println!("wrote {} ({count} points from {} atoms)", path.display(), empirical.len());
    }
    Ok(())
}

fn cmd_score_loss(problem: &ProblemConfig, points_path: &Path) -> Result<()> {
    let spec = ProblemSpec::from_config(problem)?;
    let (points, dim) = read_points_csv(points_path)
        .with_context(|| format!("reading points {}", points_path.display()))?;
    if dim != spec.dim() {
        bail!("points are {dim}-dimensional but the problem has d = {}", spec.dim());
    }

    // Score of the Gibbs density ∝ e^{−2V/ε_eff}.
    let scale = 2.0 / spec.epsilon_eff();
    let field_spec = spec.clone();
    let div_spec = spec.clone();
    let score = ScoreField::new(
        dim,
        move |x, out| {
            field_spec.grad_v(x, out);
            for g in out.iter_mut() {
                *g *= -scale;
            }
        },
        move |x| -scale * div_spec.lap_v(x),
    )?;
    let loss = score_matching_loss(&score, &points)?;
    // The loss is the output; print it regardless of --quiet.
    println!("score_matching_loss = {loss:.12e}");
    Ok(())
}
