use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gcans::convex::{
    check_descent_step, check_pl_inequality, fit_geometric_rate, run_idealized_gcans,
    QuadraticProblem,
};
use gcans::pauli::Boundary;
use gcans::Observable64;

use gcans_cli::spec::ExperimentSpec;
use gcans_cli::sweep::SweepAxis;
use gcans_cli::{cost, runner, sweep};

#[derive(Parser)]
#[command(
    name = "gcans",
    about = "Shot-frugal VQE optimizer benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run {
        /// TOML experiment spec.
        spec: PathBuf,
    },
    /// Sweep one hyperparameter axis of the spec's optimizers.
    Sweep {
        spec: PathBuf,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Grid values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Print the exact ground energy of a problem.
    Ground {
        /// Ising chain as `n,g[,boundary]`, e.g. `4,1.5,open`.
        #[arg(long, conflicts_with = "file")]
        tfim: Option<String>,
        /// Hamiltonian file.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Evaluate the cloud cost and wall-clock models.
    Cost {
        #[arg(long)]
        iters: u64,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        terms: u64,
    },
    /// Verify geometric convergence of the idealized shot rule on the
    /// strongly convex testbed.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 60)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_tfim(text: &str) -> Result<Observable64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 3 {
        bail!("--tfim expects `n,g[,boundary]`, got \"{text}\"");
    }
    let n: usize = parts[0].parse().context("parsing qubit count")?;
    let g: f64 = parts[1].parse().context("parsing field strength")?;
    let boundary: Boundary = parts.get(2).copied().unwrap_or("open").parse()?;
    Ok(Observable64::tfim(n, g, boundary)?)
}

fn ground(tfim: Option<String>, file: Option<PathBuf>) -> Result<()> {
    let observable = match (tfim, file) {
        (Some(text), None) => parse_tfim(&text)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            Observable64::parse(&text)?
        }
        _ => bail!("specify exactly one of --tfim or --file"),
    };
    let energy = gcans::sim::ground_energy_dense(&observable)?;
    println!("{energy}");
    Ok(())
}

fn verify(trials: usize, iters: usize, seed: u64) -> Result<()> {
    let mut failures = 0;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!(
            "{}: {} ({detail})",
            name,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failures += 1;
        }
    };

    // Geometric convergence on the isotropic quadratic (d = 10, μ = L = 1,
    // α = 0.5, σ = 1): fitted rate within tolerance of the 0.75 bound and
    // the per-step contraction inside 3σ bands.
    let problem = QuadraticProblem::<f64>::isotropic(10, 1.0);
    let alpha = 0.5;
    let bound = 1.0 - alpha * problem.mu() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ensemble = run_idealized_gcans(&problem, alpha, iters, trials, &mut rng)?;
    let rate = fit_geometric_rate(&ensemble)?;
    report(
        "geometric rate",
        rate <= bound + 0.03,
        format!("fitted {rate:.4}, bound {bound:.2}"),
    );

    let mut step_ok = true;
    let mut worst = f64::NEG_INFINITY;
    let n_trials = ensemble.trials() as f64;
    for k in 0..iters {
        let residuals: Vec<f64> = ensemble
            .gaps
            .iter()
            .map(|t| t[k + 1] - bound * t[k])
            .collect();
        let mean = residuals.iter().sum::<f64>() / n_trials;
        let var = residuals
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / (n_trials - 1.0);
        let margin = mean - 3.0 * (var / n_trials).sqrt();
        worst = worst.max(margin);
        if margin > 0.0 {
            step_ok = false;
        }
    }
    report(
        "per-step contraction",
        step_ok,
        format!("worst 3σ-adjusted residual {worst:.3e}"),
    );

    // PL inequality and the expected-descent bound on random SPD problems.
    let mut pl_ok = true;
    let mut descent_ok = true;
    for p in 0..5 {
        let dim = 4 + p;
        let noise: Vec<f64> = (0..dim).map(|i| 0.5 + 0.25 * i as f64).collect();
        let problem = QuadraticProblem::random_spd(dim, 0.4, 2.0, noise, &mut rng)?;
        let points: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                (0..dim)
                    .map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0))
                    .collect()
            })
            .collect();
        pl_ok &= check_pl_inequality(&problem, &points);
        let alpha = 0.4 / problem.lipschitz();
        for theta in &points {
            let check = check_descent_step(&problem, theta, alpha, 2000, &mut rng)?;
            descent_ok &= check.pass;
        }
    }
    report("PL inequality", pl_ok, "5 problems × 50 points".into());
    report(
        "expected descent",
        descent_ok,
        "5 problems × 50 points × 2000 trials".into(),
    );

    if failures > 0 {
        bail!("{failures} verification check(s) failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec } => {
            let base_dir = spec
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            let spec = ExperimentSpec::load(&spec)?;
            let outcome = runner::run_experiment(&spec, &base_dir)?;
            println!(
                "{} runs complete; problem {} (P = {} terms)",
                outcome.runs.len(),
                outcome.problem,
                outcome.pauli_terms
            );
            for (name, median) in &outcome.medians {
                println!(
                    "  {name}: median K = {}, median S = {}, median shots-to-threshold = {}",
                    median.iterations,
                    median.total_shots,
                    median
                        .shots_to_threshold
                        .map_or("never".into(), |s| s.to_string()),
                );
            }
        }
        Command::Sweep { spec, axis, values } => {
            let base_dir = spec
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            let spec = ExperimentSpec::load(&spec)?;
            let outcome = sweep::run_sweep(&spec, axis, values, &base_dir)?;
            println!("sweep over {} complete", outcome.axis);
            for point in &outcome.points {
                println!(
                    "  {} @ {} -> median normalized gap {:.4}",
                    point.optimizer, point.axis_value, point.median_normalized_gap
                );
            }
        }
        Command::Ground { tfim, file } => ground(tfim, file)?,
        Command::Cost {
            iters,
            shots,
            terms,
        } => {
            println!("cost_usd: {}", cost::cost_usd(iters, shots, terms));
            println!("time_seconds: {}", cost::time_seconds(iters, shots, terms));
            println!(
                "time_hours: {}",
                cost::time_seconds(iters, shots, terms) / 3600.0
            );
        }
        Command::Verify {
            trials,
            iters,
            seed,
        } => verify(trials, iters, seed)?,
    }
    Ok(())
}
