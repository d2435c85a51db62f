//! Config document schema, defaults and validation.
//!
//! The schema is strict JSON: unknown keys are parse errors, semantic
//! violations are reported with the offending field path before any
//! computation starts.

use serde::{Deserialize, Serialize};

use mvlab_core::{GaussianComponent, InteractionKernel, Scheme};

pub const DEFAULT_DOMAIN_LENGTH: f64 = 5.0;
pub const DEFAULT_N_CELLS: usize = 512;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_STRIDE: usize = 5;
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-8;
pub const DEFAULT_MIN_DURATION: f64 = 0.05;
pub const DEFAULT_PARTICLE_COUNT: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
}

fn default_length() -> f64 {
    DEFAULT_DOMAIN_LENGTH
}

fn default_n_cells() -> usize {
    DEFAULT_N_CELLS
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            length: DEFAULT_DOMAIN_LENGTH,
            n_cells: DEFAULT_N_CELLS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_stationarity")]
    pub stationarity_tol: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_scheme() -> Scheme {
    Scheme::CenteredDiffusionUpwindAdvection
}

fn default_stride() -> usize {
    DEFAULT_RECORD_STRIDE
}

fn default_stationarity() -> f64 {
    DEFAULT_STATIONARITY_TOL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub components: Vec<GaussianComponent>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    /// Explicit dead-band; derived from the mean dissipation rate when null.
    #[serde(default)]
    pub rate_deadband: Option<f64>,
    #[serde(default = "default_min_duration")]
    pub min_duration: f64,
}

fn default_min_duration() -> f64 {
    DEFAULT_MIN_DURATION
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(default = "default_particle_count")]
    pub count: usize,
    #[serde(default = "default_particle_stride")]
    pub record_stride: usize,
}

fn default_particle_count() -> usize {
    DEFAULT_PARTICLE_COUNT
}

fn default_particle_stride() -> usize {
    100
}

impl Default for ParticleSection {
    fn default() -> Self {
        Self {
            count: DEFAULT_PARTICLE_COUNT,
            record_stride: 100,
        }
    }
}

/// A fully described simulation: domain, kernel, noise strength, initial
/// condition, solver and classifier settings, output destinations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub domain: DomainSection,
    pub kernel: InteractionKernel,
    pub sigma: Option<f64>,
    pub solver: SolverSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub particles: ParticleSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parses and validates a config document, reporting schema violations with
/// the offending key and semantic violations with a field path.
pub fn parse_config(text: &str) -> anyhow::Result<SimulationConfig> {
    let config: SimulationConfig =
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("config parse error: {e}"))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &SimulationConfig) -> anyhow::Result<()> {
    let mut problems: Vec<String> = Vec::new();
    macro_rules! check {
        ($ok:expr, $msg:expr $(,)?) => {
            if $ok {
            } else {
                problems.push($msg.to_string());
            }
        };
    }

    check!(
        config.domain.length > 0.0 && config.domain.length.is_finite(),
        "domain.length: must be positive",
    );
    check!(
        config.domain.n_cells >= 2,
        "domain.n_cells: must be at least 2"
    );

    match &config.kernel {
        InteractionKernel::Morse {
            attraction,
            repulsion,
            attraction_length,
            repulsion_length,
        } => {
            check!(*attraction > 0.0, "kernel.attraction: must be positive");
            check!(*repulsion > 0.0, "kernel.repulsion: must be positive");
            check!(
                *attraction_length > 0.0,
                "kernel.attraction_length: must be positive",
            );
            check!(
                *repulsion_length > 0.0,
                "kernel.repulsion_length: must be positive",
            );
        }
        InteractionKernel::HegselmannKrause { radius } => {
            check!(*radius > 0.0, "kernel.radius: must be positive");
            check!(
                *radius <= 0.5 * config.domain.length,
                "kernel.radius: must not exceed half the domain length",
            );
        }
    }

    match config.sigma {
        None => problems.push("sigma: required".to_string()),
        Some(s) => check!(s > 0.0 && s.is_finite(), "sigma: must be positive"),
    }

    check!(config.solver.dt > 0.0, "solver.dt: must be positive");
    check!(
        config.solver.t_final > 0.0,
        "solver.t_final: must be positive"
    );
    check!(
        config.solver.record_stride > 0,
        "solver.record_stride: must be positive",
    );
    check!(
        config.solver.stationarity_tol > 0.0,
        "solver.stationarity_tol: must be positive",
    );

    check!(
        !config.initial.components.is_empty(),
        "initial.components: at least one component required",
    );
    for (i, c) in config.initial.components.iter().enumerate() {
        if c.weight.is_nan() || c.weight <= 0.0 {
            problems.push(format!("initial.components[{i}].weight: must be positive"));
        }
        if c.std.is_nan() || c.std <= 0.0 {
            problems.push(format!("initial.components[{i}].std: must be positive"));
        }
    }
    let total: f64 = config.initial.components.iter().map(|c| c.weight).sum();
    check!(
        (total - 1.0).abs() <= 1e-10,
        "initial.components: weights must sum to 1",
    );

    if let Some(db) = config.classifier.rate_deadband {
        check!(db >= 0.0, "classifier.rate_deadband: must be nonnegative");
    }
    check!(
        config.classifier.min_duration >= 0.0,
        "classifier.min_duration: must be nonnegative",
    );
    check!(
        config.particles.count > 0,
        "particles.count: must be positive"
    );
    check!(
        config.particles.record_stride > 0,
        "particles.record_stride: must be positive",
    );
    for (i, t) in config.output.snapshot_times.iter().enumerate() {
        if t.is_nan() || *t < 0.0 {
            problems.push(format!("output.snapshot_times[{i}]: must be nonnegative"));
        }
    }

    if problems.is_empty() {
        Ok(())
    } else {
        anyhow::bail!("invalid config: {}", problems.join("; "))
    }
}
