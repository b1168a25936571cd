//! Hyperparameter sweeps.
//!
//! A sweep re-runs the spec's optimizers over a grid of one hyperparameter
//! axis and reports, per grid point, the final optimality gap normalized by
//! the problem's accuracy threshold ε. A flat profile means the optimizer
//! tolerates mistuning; a steep one means it must be tuned per problem.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gcans::optimizer;
use gcans::sim;

use crate::spec::{ExperimentSpec, OptimizerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    /// Scale every optimizer's learning rate by the grid value.
    #[value(alias = "learning_rate_multiplier")]
    LearningRateMultiplier,
    /// Set the SGD-DS common ratio to the grid value.
    #[value(alias = "common_ratio")]
    CommonRatio,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepAxis::LearningRateMultiplier => write!(f, "learning_rate_multiplier"),
            SweepAxis::CommonRatio => write!(f, "common_ratio"),
        }
    }
}

impl SweepAxis {
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepAxis::LearningRateMultiplier => vec![0.5, 1.0, 2.0],
            SweepAxis::CommonRatio => vec![1.0005, 1.0025, 1.005],
        }
    }
}

/// One (optimizer, grid value, seed) result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRun {
    pub optimizer: String,
    pub axis_value: f64,
    pub seed: u64,
    pub final_energy: f64,
    /// `(final energy − ground) / ε`.
    pub normalized_gap: f64,
}

/// Seed-aggregated view of one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub optimizer: String,
    pub axis_value: f64,
    pub median_normalized_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub problem: String,
    pub axis: String,
    pub runs: Vec<SweepRun>,
    pub points: Vec<SweepPoint>,
}

impl SweepOutcome {
    /// Spread (max − min) of the median normalized gaps across the grid
    /// values of one optimizer.
    pub fn gap_range(&self, optimizer: &str) -> Option<f64> {
        let gaps: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.optimizer == optimizer)
            .map(|p| p.median_normalized_gap)
            .collect();
        if gaps.is_empty() {
            return None;
        }
        let max = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(max - min)
    }
}

fn apply_axis(
    base: &OptimizerSpec,
    axis: SweepAxis,
    value: f64,
    is_tfim: bool,
) -> Result<OptimizerSpec> {
    let mut spec = base.clone();
    match axis {
        SweepAxis::LearningRateMultiplier => {
            if !(value > 0.0 && value.is_finite()) {
                bail!("learning-rate multiplier must be positive, got {value}");
            }
            let default = if spec.name == "gcans" && !is_tfim {
                1.0
            } else {
                0.5
            };
            let base_alpha = spec.alpha_times_l.unwrap_or(default);
            spec.alpha_times_l = Some(base_alpha * value);
        }
        SweepAxis::CommonRatio => {
            if spec.name != "sgd_ds" {
                bail!(
                    "axis common_ratio applies only to sgd_ds, spec contains \"{}\"",
                    spec.name
                );
            }
            spec.ratio = Some(value);
        }
    }
    Ok(spec)
}

pub fn sweep_csv(outcome: &SweepOutcome) -> String {
    let mut out = String::from("optimizer,axis,axis_value,seed,final_energy,normalized_gap\n");
    for r in &outcome.runs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.optimizer, outcome.axis, r.axis_value, r.seed, r.final_energy, r.normalized_gap
        ));
    }
    out
}

/// Run the grid and write `sweep.csv` and `sweep_summary.json`.
pub fn run_sweep(
    spec: &ExperimentSpec,
    axis: SweepAxis,
    values: Option<Vec<f64>>,
    base_dir: &Path,
) -> Result<SweepOutcome> {
    spec.validate()?;
    let values = values.unwrap_or_else(|| axis.default_values());
    if values.is_empty() {
        bail!("sweep needs at least one grid value");
    }
    let problem = spec.problem.vqe_problem(base_dir)?;
    let lipschitz = problem.lipschitz_bound();
    if problem.observable.n() > sim::DENSE_DIAG_MAX_QUBITS {
        bail!("sweeps need the exact ground energy; register too large to diagonalize");
    }
    let ground = sim::ground_energy_dense(&problem.observable)?;
    let is_tfim = spec.problem.is_tfim();

    struct Cell {
        optimizer: String,
        axis_value: f64,
        seed: u64,
        config: gcans::optimizer::OptimizerConfig<f64>,
    }
    let mut cells = Vec::new();
    for opt in &spec.optimizers {
        for &value in &values {
            let swept = apply_axis(opt, axis, value, is_tfim)?;
            let config = swept.build(lipschitz, spec.budget, is_tfim)?;
            for &seed in &spec.seeds {
                cells.push(Cell {
                    optimizer: opt.name.clone(),
                    axis_value: value,
                    seed,
                    config: config.clone(),
                });
            }
        }
    }

    let runs: Vec<SweepRun> = cells
        .par_iter()
        .map(|cell| -> Result<SweepRun> {
            let mut rng = ChaCha8Rng::seed_from_u64(cell.seed);
            let trace = optimizer::run(&problem, &cell.config, &mut rng)?;
            let epsilon = spec.threshold.epsilon(trace.initial_energy, ground);
            let final_energy = trace.final_energy();
            Ok(SweepRun {
                optimizer: cell.optimizer.clone(),
                axis_value: cell.axis_value,
                seed: cell.seed,
                final_energy,
                normalized_gap: (final_energy - ground) / epsilon,
            })
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for opt in &spec.optimizers {
        for &value in &values {
            let mut gaps: Vec<f64> = runs
                .iter()
                .filter(|r| r.optimizer == opt.name && r.axis_value == value)
                .map(|r| r.normalized_gap)
                .collect();
            gaps.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            points.push(SweepPoint {
                optimizer: opt.name.clone(),
                axis_value: value,
                median_normalized_gap: gaps[(gaps.len() - 1) / 2],
            });
        }
    }

    let outcome = SweepOutcome {
        problem: spec.problem.label(),
        axis: axis.to_string(),
        runs,
        points,
    };

    let out_dir = spec.resolved_output_dir();
    let out_dir = if out_dir.is_absolute() {
        out_dir
    } else {
        base_dir.join(out_dir)
    };
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    fs::write(out_dir.join("sweep.csv"), sweep_csv(&outcome))?;
    fs::write(
        out_dir.join("sweep_summary.json"),
        serde_json::to_string_pretty(&outcome)?,
    )?;
    Ok(outcome)
}
