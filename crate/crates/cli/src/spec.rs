//! Experiment specification files.
//!
//! Specs are TOML with explicit keys; unknown keys are rejected so a typo
//! in a hyperparameter name cannot silently fall back to a default.
//!
//! ```toml
//! budget = 2_000_000
//! seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
//! output_dir = "out/tfim4"
//!
//! [threshold]
//! kind = "initial-gap-fraction"   # or "absolute-gap"
//! value = 0.01
//!
//! [problem]
//! kind = "tfim"                   # or "file" with `path = "..."`
//! n = 4
//! g = 1.5
//! boundary = "open"               # optional, default open
//! depth = 6
//!
//! [[optimizers]]
//! name = "gcans"                  # gcans | icans | adam | sgd_ds
//! # alpha_times_l = 0.5           # optional overrides
//! ```
//!
//! Learning rates are expressed as `alpha_times_l`, the product `α·L`.
//! When absent the defaults are 0.5 for every optimizer on Ising problems,
//! and 1.0 for gCANS / 0.5 for the rest on file Hamiltonians.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gcans::optimizer::{OptimizerConfig, VqeProblem};
use gcans::pauli::Boundary;
use gcans::sim::build_ansatz;
use gcans::Observable64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub budget: u64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threshold: Threshold,
    pub problem: ProblemSpec,
    pub optimizers: Vec<OptimizerSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    rename_all = "kebab-case",
    tag = "kind",
    content = "value"
)]
pub enum Threshold {
    /// `ε = fraction × (initial energy − ground energy)`, per seed.
    InitialGapFraction(f64),
    /// `ε` as an absolute energy gap above the ground energy.
    AbsoluteGap(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::InitialGapFraction(0.01)
    }
}

impl Threshold {
    pub fn epsilon(&self, initial_energy: f64, ground_energy: f64) -> f64 {
        match self {
            Threshold::InitialGapFraction(f) => f * (initial_energy - ground_energy),
            Threshold::AbsoluteGap(e) => *e,
        }
    }

    fn validate(&self) -> Result<()> {
        let value = match self {
            Threshold::InitialGapFraction(v) | Threshold::AbsoluteGap(v) => *v,
        };
        if !(value > 0.0 && value.is_finite()) {
            bail!("threshold value must be positive and finite, got {value}");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase", tag = "kind")]
pub enum ProblemSpec {
    Tfim {
        n: usize,
        g: f64,
        #[serde(default = "default_boundary")]
        boundary: String,
        depth: usize,
    },
    File {
        path: PathBuf,
        depth: usize,
    },
}

fn default_boundary() -> String {
    "open".into()
}

impl ProblemSpec {
    pub fn is_tfim(&self) -> bool {
        matches!(self, ProblemSpec::Tfim { .. })
    }

    /// Human-readable label used in summaries and sweep reports.
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Tfim {
                n,
                g,
                boundary,
                depth,
            } => format!("tfim(n={n}, g={g}, {boundary}, depth={depth})"),
            ProblemSpec::File { path, depth } => {
                format!("file({}, depth={depth})", path.display())
            }
        }
    }

    /// Build the observable, resolving file paths relative to `base_dir`.
    pub fn observable(&self, base_dir: &Path) -> Result<Observable64> {
        match self {
            ProblemSpec::Tfim { n, g, boundary, .. } => {
                let boundary: Boundary = boundary.parse()?;
                Ok(Observable64::tfim(*n, *g, boundary)?)
            }
            ProblemSpec::File { path, .. } => {
                let resolved = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let text = fs::read_to_string(&resolved)
                    .with_context(|| format!("reading Hamiltonian file {}", resolved.display()))?;
                Ok(Observable64::parse(&text)?)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ProblemSpec::Tfim { depth, .. } | ProblemSpec::File { depth, .. } => *depth,
        }
    }

    pub fn vqe_problem(&self, base_dir: &Path) -> Result<VqeProblem<f64>> {
        let observable = self.observable(base_dir)?;
        let circuit = build_ansatz(observable.n(), self.depth());
        Ok(VqeProblem::new(circuit, observable)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    /// One of `gcans`, `icans`, `adam`, `sgd_ds`.
    pub name: String,
    /// `α·L`; optional, with per-optimizer defaults.
    pub alpha_times_l: Option<f64>,
    pub mu: Option<f64>,
    pub s_min: Option<u64>,
    /// iCANS variance regularizer `b`.
    pub bias: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub shots_per_component: Option<u64>,
    /// SGD-DS initial shots `s₀`.
    pub s0: Option<u64>,
    /// SGD-DS common ratio `r`.
    pub ratio: Option<f64>,
}

impl OptimizerSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            alpha_times_l: None,
            mu: None,
            s_min: None,
            bias: None,
            beta1: None,
            beta2: None,
            epsilon: None,
            shots_per_component: None,
            s0: None,
            ratio: None,
        }
    }

    fn default_alpha_times_l(&self, problem_is_tfim: bool) -> f64 {
        if self.name == "gcans" && !problem_is_tfim {
            1.0
        } else {
            0.5
        }
    }

    /// Resolve into a core optimizer configuration for a problem with the
    /// given Lipschitz bound.
    pub fn build(
        &self,
        lipschitz: f64,
        budget: u64,
        problem_is_tfim: bool,
    ) -> Result<OptimizerConfig<f64>> {
        let alpha = self
            .alpha_times_l
            .unwrap_or_else(|| self.default_alpha_times_l(problem_is_tfim))
            / lipschitz;
        let reject = |field: &str, set: bool| {
            if set {
                bail!("`{field}` does not apply to optimizer \"{}\"", self.name);
            }
            Ok(())
        };
        let mut config = match self.name.as_str() {
            "gcans" => {
                reject("bias", self.bias.is_some())?;
                reject("beta1", self.beta1.is_some())?;
                reject("beta2", self.beta2.is_some())?;
                reject("epsilon", self.epsilon.is_some())?;
                reject("shots_per_component", self.shots_per_component.is_some())?;
                reject("s0", self.s0.is_some())?;
                reject("ratio", self.ratio.is_some())?;
                OptimizerConfig::gcans(alpha, lipschitz, budget)?
            }
            "icans" => {
                reject("beta1", self.beta1.is_some())?;
                reject("beta2", self.beta2.is_some())?;
                reject("epsilon", self.epsilon.is_some())?;
                reject("shots_per_component", self.shots_per_component.is_some())?;
                reject("s0", self.s0.is_some())?;
                reject("ratio", self.ratio.is_some())?;
                let mut c = OptimizerConfig::icans(alpha, lipschitz, budget)?;
                if let Some(b) = self.bias {
                    c = c.with_bias(b)?;
                }
                c
            }
            "adam" => {
                reject("bias", self.bias.is_some())?;
                reject("s0", self.s0.is_some())?;
                reject("ratio", self.ratio.is_some())?;
                reject("mu", self.mu.is_some())?;
                let shots = self.shots_per_component.unwrap_or(2500);
                let mut c = OptimizerConfig::adam(alpha, lipschitz, shots, budget)?;
                if let gcans::optimizer::Method::Adam {
                    beta1,
                    beta2,
                    epsilon,
                    ..
                } = &mut c.method
                {
                    if let Some(b) = self.beta1 {
                        *beta1 = b;
                    }
                    if let Some(b) = self.beta2 {
                        *beta2 = b;
                    }
                    if let Some(e) = self.epsilon {
                        *epsilon = e;
                    }
                }
                c
            }
            "sgd_ds" => {
                reject("bias", self.bias.is_some())?;
                reject("beta1", self.beta1.is_some())?;
                reject("beta2", self.beta2.is_some())?;
                reject("epsilon", self.epsilon.is_some())?;
                reject("shots_per_component", self.shots_per_component.is_some())?;
                reject("mu", self.mu.is_some())?;
                let s0 = self.s0.unwrap_or(500);
                let ratio = self.ratio.unwrap_or(1.0025);
                OptimizerConfig::sgd_ds(alpha, lipschitz, s0, ratio, budget)?
            }
            other => {
                bail!("unknown optimizer \"{other}\" (expected gcans, icans, adam, or sgd_ds)")
            }
        };
        if let Some(mu) = self.mu {
            config = config.with_mu(mu)?;
        }
        if let Some(s_min) = self.s_min {
            config = config.with_s_min(s_min)?;
        }
        Ok(config)
    }
}

impl ExperimentSpec {
    /// Parse and validate a spec file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading spec file {}", path.display()))?;
        let spec: ExperimentSpec =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            bail!("budget must be positive");
        }
        if self.seeds.is_empty() {
            bail!("seeds list must not be empty");
        }
        if self.optimizers.is_empty() {
            bail!("at least one optimizer is required");
        }
        self.threshold.validate()?;
        Ok(())
    }

    /// Output directory, honoring the `GCANS_OUT_DIR` override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(crate::OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
budget = 10000
seeds = [1, 2]
output_dir = "out"

[threshold]
kind = "initial-gap-fraction"
value = 0.01

[problem]
kind = "tfim"
n = 2
g = 1.5
depth = 2

[[optimizers]]
name = "gcans"
"#;

    #[test]
    fn parses_valid_spec() {
        let spec: ExperimentSpec = toml::from_str(GOOD).unwrap();
        spec.validate().unwrap();
        assert!(spec.problem.is_tfim());
        assert_eq!(spec.problem.label(), "tfim(n=2, g=1.5, open, depth=2)");
        let problem = spec.problem.vqe_problem(Path::new(".")).unwrap();
        assert_eq!(problem.circuit.parameter_count(), 8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = GOOD.replace("name = \"gcans\"", "name = \"gcans\"\nlerning_rate = 0.5");
        let err = toml::from_str::<ExperimentSpec>(&text).unwrap_err();
        assert!(err.to_string().contains("lerning_rate"), "{err}");
    }

    #[test]
    fn zero_budget_is_rejected() {
        let text = GOOD.replace("budget = 10000", "budget = 0");
        let spec: ExperimentSpec = toml::from_str(&text).unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn alpha_defaults_follow_problem_kind() {
        let spec: ExperimentSpec = toml::from_str(GOOD).unwrap();
        let config = spec.optimizers[0].build(9.0, 1000, true).unwrap();
        approx::assert_relative_eq!(config.alpha * 9.0, 0.5);
        let config = spec.optimizers[0].build(9.0, 1000, false).unwrap();
        approx::assert_relative_eq!(config.alpha * 9.0, 1.0);
    }

    #[test]
    fn misapplied_overrides_are_rejected() {
        let mut spec = OptimizerSpec::named("gcans");
        spec.ratio = Some(1.001);
        assert!(spec.build(9.0, 1000, true).is_err());
        let mut spec = OptimizerSpec::named("adam");
        spec.mu = Some(0.9);
        assert!(spec.build(9.0, 1000, true).is_err());
    }
}
