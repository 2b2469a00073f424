use std::fs;
use std::path::{Path, PathBuf};

use ega_core::baselines::{EigenBasis, Method};
use ega_core::datagen::{condition_grid, FactorSpec};
use ega_core::ega::CorrelationChoice;
use ega_core::simstudy::MethodSettings;
use ega_core::SimulationCondition;
use serde::{Deserialize, Serialize};

use crate::args::SimulateArgs;
use crate::error::{CliError, Result};

pub const DEFAULT_REPS: usize = 500;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT_DIR: &str = "results";

/// Simulation run as written in a TOML file. Every field is optional; flags
/// override file values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<Method>>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub conditions: ConditionFilter,
    #[serde(default)]
    pub settings: SettingsConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionFilter {
    /// `"paper"` selects the full 64-condition design.
    pub grid: Option<String>,
    pub factors: Option<Vec<usize>>,
    pub items: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub corr: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsConfig {
    pub gamma: Option<f64>,
    pub steps: Option<usize>,
    pub n_lambda: Option<usize>,
    pub kmax: Option<usize>,
    pub pa_iterations: Option<usize>,
    pub factor_correlation: Option<CorrelationChoice>,
    pub eigen_basis: Option<EigenBasis>,
}

/// Fully resolved simulation run.
#[derive(Debug, Clone)]
pub struct Study {
    pub conditions: Vec<SimulationCondition>,
    pub reps: usize,
    pub seed: u64,
    pub settings: MethodSettings,
    pub out_dir: PathBuf,
}

/// Parameters echoed into the run manifest.
#[derive(Debug, Serialize)]
pub struct StudyParameters {
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub n_conditions: usize,
    pub gamma: f64,
    pub steps: usize,
    pub n_lambda: usize,
    pub kmax: usize,
    pub pa_iterations: usize,
    pub factor_correlation: CorrelationChoice,
    pub eigen_basis: EigenBasis,
}

impl Study {
    pub fn parameters(&self) -> StudyParameters {
        let s = &self.settings;
        StudyParameters {
            reps: self.reps,
            seed: self.seed,
            methods: s.methods.clone(),
            n_conditions: self.conditions.len(),
            gamma: s.ega.gamma,
            steps: s.ega.steps,
            n_lambda: s.ega.n_lambda,
            kmax: s.kmax,
            pa_iterations: s.pa_iterations,
            factor_correlation: s.factor_correlation,
            eigen_basis: s.eigen_basis,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let config_err = |field: String, message: String| CliError::Config {
        path: path.to_path_buf(),
        field,
        message,
    };
    let de = toml::Deserializer::parse(&text).map_err(|e| config_err("-".into(), e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        config_err(field, e.into_inner().message().trim().to_string())
    })
}

/// Merges flags over the optional config file and validates the result.
/// Errors name the offending field (config key or flag).
pub fn resolve(a: &SimulateArgs) -> Result<Study> {
    let (file, path) = match &a.config {
        Some(p) => (load(p)?, Some(p.clone())),
        None => (RunConfig::default(), None),
    };
    let invalid = |field: &str, flag: &str, message: String| match &path {
        Some(p) => CliError::Config {
            path: p.clone(),
            field: format!("{field} (or --{flag})"),
            message,
        },
        None => CliError::Input(format!("--{flag}: {message}")),
    };
    let pick_vec = |flag: &[usize], file: &Option<Vec<usize>>| {
        if flag.is_empty() {
            file.clone()
        } else {
            Some(flag.to_vec())
        }
    };

    let c = &file.conditions;
    let grid = a.grid.clone().or_else(|| c.grid.clone());
    let factors = pick_vec(&a.factors, &c.factors);
    let items = pick_vec(&a.items, &c.items);
    let sizes = pick_vec(&a.sample_sizes, &c.n);
    let corrs = if a.corr.is_empty() {
        c.corr.clone()
    } else {
        Some(a.corr.clone())
    };

    let conditions = match grid.as_deref() {
        Some("paper") => condition_grid(),
        Some(other) => {
            return Err(invalid(
                "conditions.grid",
                "grid",
                format!("unknown grid `{other}` (expected `paper`)"),
            ));
        }
        None => {
            let (Some(f), Some(i), Some(n), Some(r)) = (factors, items, sizes, corrs) else {
                return Err(CliError::Input(
                    "choose conditions with --grid paper or all of --factors, --items, --n and --corr".into(),
                ));
            };
            let mut out = Vec::new();
            for &n_factors in &f {
                for &items_per_factor in &i {
                    for &sample_size in &n {
                        for &factor_corr in &r {
                            out.push(SimulationCondition {
                                n_factors,
                                items_per_factor,
                                sample_size,
                                factor_corr,
                            });
                        }
                    }
                }
            }
            out
        }
    };
    if conditions.is_empty() {
        return Err(CliError::Input("no simulation conditions selected".into()));
    }
    for cond in &conditions {
        FactorSpec::new(cond.n_factors, cond.items_per_factor, cond.factor_corr)
            .map_err(|e| invalid("conditions", "factors", e.to_string()))?;
        if cond.sample_size < 3 {
            return Err(invalid(
                "conditions.n",
                "n",
                format!("sample size must be at least 3, got {}", cond.sample_size),
            ));
        }
    }

    let reps = a.reps.or(file.reps).unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(invalid("reps", "reps", "must be at least 1".into()));
    }
    let methods = if a.methods.is_empty() {
        file.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    } else {
        a.methods.clone()
    };
    if methods.is_empty() {
        return Err(invalid("methods", "methods", "at least one method is required".into()));
    }
    let mut methods = methods;
    methods.sort();
    methods.dedup();

    let s = &file.settings;
    let mut settings = MethodSettings {
        methods,
        ..Default::default()
    };
    settings.ega.gamma = a.gamma.or(s.gamma).unwrap_or(settings.ega.gamma);
    settings.ebic_gamma = settings.ega.gamma;
    settings.ega.steps = a.steps.or(s.steps).unwrap_or(settings.ega.steps);
    settings.ega.n_lambda = a.n_lambda.or(s.n_lambda).unwrap_or(settings.ega.n_lambda);
    settings.kmax = a.kmax.or(s.kmax).unwrap_or(settings.kmax);
    settings.pa_iterations = a.pa_iterations.or(s.pa_iterations).unwrap_or(settings.pa_iterations);
    settings.factor_correlation = a
        .factor_correlation
        .map(Into::into)
        .or(s.factor_correlation)
        .unwrap_or(settings.factor_correlation);
    settings.eigen_basis = a
        .eigen_basis
        .map(Into::into)
        .or(s.eigen_basis)
        .unwrap_or(settings.eigen_basis);

    if !(settings.ega.gamma >= 0.0) || !settings.ega.gamma.is_finite() {
        return Err(invalid(
            "settings.gamma",
            "gamma",
            "must be a non-negative number".into(),
        ));
    }
    for (field, flag, v) in [
        ("settings.steps", "steps", settings.ega.steps),
        ("settings.kmax", "kmax", settings.kmax),
        ("settings.pa_iterations", "pa-iterations", settings.pa_iterations),
    ] {
        if v == 0 {
            return Err(invalid(field, flag, "must be at least 1".into()));
        }
    }
    if settings.ega.n_lambda < 2 {
        return Err(invalid("settings.n_lambda", "n-lambda", "must be at least 2".into()));
    }

    Ok(Study {
        conditions,
        reps,
        seed: a.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        settings,
        out_dir: a
            .out_dir
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    })
}
