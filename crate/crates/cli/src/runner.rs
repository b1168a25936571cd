//! Seeded multi-start experiment runner.
//!
//! Each (optimizer, seed) cell runs independently on its own ChaCha stream
//! and writes one per-iteration CSV; the summary JSON is assembled after
//! all cells finish, so output content does not depend on scheduling.
//! Re-running an identical spec reproduces every file byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gcans::optimizer::{self, OptimizationTrace, OptimizerConfig};
use gcans::sim;

use crate::cost;
use crate::spec::ExperimentSpec;

/// Per-(optimizer, seed) summary entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub optimizer: String,
    pub seed: u64,
    /// Iterations.
    #[serde(rename = "K")]
    pub iterations: u64,
    /// Total shots.
    #[serde(rename = "S")]
    pub total_shots: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Absolute energy the run must reach for the threshold report.
    pub threshold_energy: Option<f64>,
    /// First cumulative shot count at or below `threshold_energy`.
    pub shots_to_threshold: Option<u64>,
    pub cost_usd: f64,
    pub time_seconds: f64,
}

/// Lower-median aggregate over the seeds of one optimizer. Runs that never
/// reach the threshold count as slower than every run that does.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MedianSummary {
    pub iterations: u64,
    pub total_shots: u64,
    pub shots_to_threshold: Option<u64>,
    pub final_energy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub problem: String,
    pub pauli_terms: u64,
    pub lipschitz_bound: f64,
    pub ground_energy: Option<f64>,
    pub budget: u64,
    pub runs: Vec<RunSummary>,
    pub medians: BTreeMap<String, MedianSummary>,
}

/// Lower median: element `(len−1)/2` of the sorted values.
fn lower_median<T: Ord + Copy>(values: &mut [T]) -> T {
    assert!(!values.is_empty());
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

fn lower_median_f64(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

/// Lower median over `Option<u64>` where `None` sorts above every value.
fn lower_median_reach(values: &[Option<u64>]) -> Option<u64> {
    let mut keyed: Vec<u64> = values.iter().map(|v| v.unwrap_or(u64::MAX)).collect();
    let median = lower_median(&mut keyed);
    (median != u64::MAX).then_some(median)
}

pub fn trace_csv(trace: &OptimizationTrace<f64>) -> String {
    let mut out = String::from(
        "k,cumulative_shots,exact_energy,estimated_grad_norm,shots_this_iteration,min_s,max_s\n",
    );
    for r in &trace.records {
        let min_s = r.shots_per_component.iter().min().copied().unwrap_or(0);
        let max_s = r.shots_per_component.iter().max().copied().unwrap_or(0);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k, r.cumulative_shots, r.energy, r.grad_norm_est, r.shots_this_iter, min_s, max_s
        ));
    }
    out
}

pub fn csv_file_name(optimizer: &str, seed: u64) -> String {
    format!("{optimizer}_seed{seed}.csv")
}

struct Cell {
    optimizer: String,
    config: OptimizerConfig<f64>,
    seed: u64,
}

fn summarize(
    cell: &Cell,
    trace: &OptimizationTrace<f64>,
    ground: Option<f64>,
    spec: &ExperimentSpec,
    pauli_terms: u64,
) -> RunSummary {
    let threshold_energy = ground.map(|g| g + spec.threshold.epsilon(trace.initial_energy, g));
    let shots_to_threshold = threshold_energy.and_then(|t| trace.shots_to_threshold(t));
    let iterations = trace.iterations() as u64;
    let total_shots = trace.total_shots();
    RunSummary {
        optimizer: cell.optimizer.clone(),
        seed: cell.seed,
        iterations,
        total_shots,
        initial_energy: trace.initial_energy,
        final_energy: trace.final_energy(),
        threshold_energy,
        shots_to_threshold,
        cost_usd: cost::cost_usd(iterations, total_shots, pauli_terms),
        time_seconds: cost::time_seconds(iterations, total_shots, pauli_terms),
    }
}

/// Run the whole (optimizer × seed) grid of a spec, writing one CSV per
/// cell and `summary.json` into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, base_dir: &Path) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let problem = spec.problem.vqe_problem(base_dir)?;
    let lipschitz = problem.lipschitz_bound();
    let pauli_terms = problem.observable.len() as u64;
    let ground = (problem.observable.n() <= sim::DENSE_DIAG_MAX_QUBITS)
        .then(|| sim::ground_energy_dense(&problem.observable))
        .transpose()?;

    let mut cells = Vec::new();
    for opt in &spec.optimizers {
        let config = opt.build(lipschitz, spec.budget, spec.problem.is_tfim())?;
        for &seed in &spec.seeds {
            cells.push(Cell {
                optimizer: opt.name.clone(),
                config: config.clone(),
                seed,
            });
        }
    }

    let out_dir = spec.resolved_output_dir();
    let out_dir = if out_dir.is_absolute() {
        out_dir
    } else {
        base_dir.join(out_dir)
    };
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let runs: Vec<RunSummary> = cells
        .par_iter()
        .map(|cell| -> Result<RunSummary> {
            let mut rng = ChaCha8Rng::seed_from_u64(cell.seed);
            let trace = optimizer::run(&problem, &cell.config, &mut rng)?;
            let path = out_dir.join(csv_file_name(&cell.optimizer, cell.seed));
            fs::write(&path, trace_csv(&trace))
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(summarize(cell, &trace, ground, spec, pauli_terms))
        })
        .collect::<Result<_>>()?;

    let mut medians = BTreeMap::new();
    for opt in &spec.optimizers {
        let of_opt: Vec<&RunSummary> = runs.iter().filter(|r| r.optimizer == opt.name).collect();
        medians.insert(
            opt.name.clone(),
            MedianSummary {
                iterations: lower_median(
                    &mut of_opt.iter().map(|r| r.iterations).collect::<Vec<_>>(),
                ),
                total_shots: lower_median(
                    &mut of_opt.iter().map(|r| r.total_shots).collect::<Vec<_>>(),
                ),
                shots_to_threshold: lower_median_reach(
                    &of_opt
                        .iter()
                        .map(|r| r.shots_to_threshold)
                        .collect::<Vec<_>>(),
                ),
                final_energy: lower_median_f64(
                    &mut of_opt.iter().map(|r| r.final_energy).collect::<Vec<_>>(),
                ),
            },
        );
    }

    let outcome = ExperimentOutcome {
        problem: spec.problem.label(),
        pauli_terms,
        lipschitz_bound: lipschitz,
        ground_energy: ground,
        budget: spec.budget,
        runs,
        medians,
    };
    let summary_path = out_dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&outcome)?)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_use_lower_middle() {
        assert_eq!(lower_median(&mut [3u64, 1, 2]), 2);
        assert_eq!(lower_median(&mut [4u64, 1, 2, 3]), 2);
        assert_eq!(lower_median_reach(&[Some(5), None, Some(3)]), Some(5));
        assert_eq!(lower_median_reach(&[None, Some(3)]), Some(3));
        assert_eq!(lower_median_reach(&[None, None, Some(3)]), None);
    }
}
