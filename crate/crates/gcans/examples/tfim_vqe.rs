//! Minimal VQE run: gCANS on the 2-site transverse-field Ising chain.
//!
//! ```console
//! cargo run --release --example tfim_vqe
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gcans::optimizer::{run_gcans, OptimizerConfig, VqeProblem};
use gcans::pauli::Boundary;
use gcans::sim::{build_ansatz, ground_energy_dense};
use gcans::Observable64;

fn main() -> gcans::Result<()> {
    let observable = Observable64::tfim(2, 1.5, Boundary::Open)?;
    let ground = ground_energy_dense(&observable)?;
    let problem = VqeProblem::new(build_ansatz(2, 2), observable)?;
    let lipschitz = problem.lipschitz_bound();

    let config = OptimizerConfig::gcans(0.5 / lipschitz, lipschitz, 200_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trace = run_gcans(&problem, &config, &mut rng)?;

    println!("ground energy        {ground:.6}");
    println!("initial energy       {:.6}", trace.initial_energy);
    for record in trace.records.iter().step_by(trace.records.len() / 8) {
        println!(
            "k = {:4}  shots = {:8}  E = {:+.6}  max s_i = {}",
            record.k,
            record.cumulative_shots,
            record.energy,
            record.shots_per_component.iter().max().unwrap()
        );
    }
    println!(
        "final: K = {}, S = {}, E = {:.6} (gap {:.2e})",
        trace.iterations(),
        trace.total_shots(),
        trace.final_energy(),
        trace.final_energy() - ground
    );
    Ok(())
}
