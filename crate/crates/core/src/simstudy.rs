//! Seeded Monte Carlo replications of the simulation design and their
//! accuracy / bias summaries.
//!
//! Replication `r` of condition `c` uses seed
//! `base_seed + index(c) * 1_000_000 + r`, where `index` is the position in
//! [`condition_grid`](crate::datagen::condition_grid) (0 for conditions outside the grid). Parallel analysis
//! draws its permutations from a second stream derived from the same seed.
//!
//! A method that fails on a replication counts as incorrect for accuracy and
//! is left out of the bias means; the number of failures is reported.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    bic_from_fits, ebic_from_fits, fit_efa_sequence, kaiser_from_eigenvalues, map_select, observed_eigenvalues,
    pa_from_eigenvalues, reference_eigenvalues, vss_from_fits, EigenBasis, Method, DEFAULT_KMAX, DEFAULT_PA_ITERATIONS,
};
use crate::correlation::{correlate, CorrelationMatrix};
use crate::datagen::{build_implied_sigma, dichotomize, sample_dataset, Dataset, SimulationCondition};
use crate::ega::{correlation_for, ega_from_correlation, CorrelationChoice, EgaOptions};
use crate::error::{Error, Result};

const SEED_STRIDE: u64 = 1_000_000;
const PA_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub methods: Vec<Method>,
    pub kmax: usize,
    pub ebic_gamma: f64,
    pub pa_iterations: usize,
    pub eigen_basis: EigenBasis,
    /// Correlations fed to VSS, MAP, BIC and EBIC.
    pub factor_correlation: CorrelationChoice,
    pub ega: EgaOptions,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            kmax: DEFAULT_KMAX,
            ebic_gamma: 0.5,
            pa_iterations: DEFAULT_PA_ITERATIONS,
            eigen_basis: EigenBasis::default(),
            factor_correlation: CorrelationChoice::Pearson,
            ega: EgaOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Estimate(usize),
    Failure(String),
}

impl Outcome {
    pub fn k_hat(&self) -> Option<usize> {
        match self {
            Outcome::Estimate(k) => Some(*k),
            Outcome::Failure(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub condition: SimulationCondition,
    pub rep_index: usize,
    pub seed: u64,
    pub outcomes: BTreeMap<Method, Outcome>,
}

pub fn replication_seed(condition: &SimulationCondition, rep_index: usize, base_seed: u64) -> u64 {
    let index = condition.grid_index().unwrap_or(0) as u64;
    base_seed
        .wrapping_add(index.wrapping_mul(SEED_STRIDE))
        .wrapping_add(rep_index as u64)
}

pub fn run_condition(
    condition: &SimulationCondition,
    settings: &MethodSettings,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<ReplicationRecord>> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    if settings.methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    build_implied_sigma(&condition.factor_spec()?)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| run_replication(condition, rep, replication_seed(condition, rep, base_seed), settings))
        .collect())
}

/// One replication with an explicit seed. Every requested method gets an entry.
pub fn run_replication(
    condition: &SimulationCondition,
    rep_index: usize,
    seed: u64,
    settings: &MethodSettings,
) -> ReplicationRecord {
    let outcomes = match simulate(condition, seed) {
        Ok(data) => estimate_all(&data, seed, settings),
        Err(e) => fail_all(&settings.methods, &e),
    };
    ReplicationRecord {
        condition: *condition,
        rep_index,
        seed,
        outcomes,
    }
}

fn simulate(condition: &SimulationCondition, seed: u64) -> Result<Dataset> {
    let sigma = build_implied_sigma(&condition.factor_spec()?)?;
    let continuous = sample_dataset(&sigma, condition.sample_size, seed)?;
    Ok(Dataset::Binary(dichotomize(&continuous)))
}

fn fail_all(methods: &[Method], e: &Error) -> BTreeMap<Method, Outcome> {
    methods.iter().map(|&m| (m, Outcome::Failure(e.to_string()))).collect()
}

fn estimate_all(data: &Dataset, seed: u64, settings: &MethodSettings) -> BTreeMap<Method, Outcome> {
    let methods = &settings.methods;
    let r = match correlate(data) {
        Ok(r) => r,
        Err(e) => return fail_all(methods, &e),
    };
    let (n, p) = (data.n_obs(), data.n_items());
    let wants = |m: Method| methods.contains(&m);
    let wants_factor = [Method::Vss, Method::Map, Method::Bic, Method::Ebic]
        .into_iter()
        .any(wants);
    let r_factor = if !wants_factor || settings.factor_correlation == CorrelationChoice::Auto {
        Ok(r.clone())
    } else {
        correlation_for(data, settings.factor_correlation)
    };
    let fits = match &r_factor {
        Ok(rf) if wants(Method::Vss) || wants(Method::Bic) || wants(Method::Ebic) => {
            fit_efa_sequence(rf, settings.kmax, n)
        }
        _ => Vec::new(),
    };
    let observed = if wants(Method::Kaiser) || wants(Method::Pa) {
        Some(observed_eigenvalues(&r, settings.eigen_basis))
    } else {
        None
    };
    let mut out = BTreeMap::new();
    for &m in methods {
        let k = match m {
            Method::Ega => ega_from_correlation(r.clone(), n, &settings.ega).map(|e| e.ndim),
            Method::Vss => factor_input(&r_factor)
                .and_then(|rf| vss_from_fits(&fits, rf))
                .map(|e| e.k_hat),
            Method::Map => factor_input(&r_factor)
                .and_then(|rf| map_select(rf, settings.kmax))
                .map(|e| e.k_hat),
            Method::Bic => factor_input(&r_factor)
                .and_then(|_| bic_from_fits(&fits, p, n))
                .map(|e| e.k_hat),
            Method::Ebic => factor_input(&r_factor)
                .and_then(|_| ebic_from_fits(&fits, p, n, settings.ebic_gamma))
                .map(|e| e.k_hat),
            Method::Kaiser => observed
                .clone()
                .expect("eigenvalues computed")
                .map(|ev| kaiser_from_eigenvalues(ev).k_hat),
            Method::Pa => observed.clone().expect("eigenvalues computed").and_then(|ev| {
                let reference =
                    reference_eigenvalues(data, settings.pa_iterations, seed ^ PA_STREAM, settings.eigen_basis)?;
                Ok(pa_from_eigenvalues(ev, reference).k_hat)
            }),
        };
        out.insert(
            m,
            match k {
                Ok(k) => Outcome::Estimate(k),
                Err(e) => Outcome::Failure(e.to_string()),
            },
        );
    }
    out
}

fn factor_input(r: &Result<CorrelationMatrix>) -> Result<&CorrelationMatrix> {
    r.as_ref().map_err(Clone::clone)
}

/// Accuracy and bias of a set of estimates; `None` marks a failed replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Undefined when every replication failed.
    pub mbe: Option<f64>,
    pub mae: Option<f64>,
    pub failures: usize,
}

pub fn compute_metrics(estimates: &[Option<usize>], true_k: usize) -> Result<Metrics> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("no estimates".into()));
    }
    let s = GroupStats::from_estimates(estimates.iter().copied(), true_k);
    Ok(Metrics {
        accuracy: s.accuracy.mean(),
        mbe: s.bias.mean_opt(),
        mae: s.abs_bias.mean_opt(),
        failures: s.failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: SimulationCondition,
    pub method: Method,
    pub n_reps: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub mbe_mean: Option<f64>,
    pub mbe_sd: Option<f64>,
    pub mae_mean: Option<f64>,
    pub mae_sd: Option<f64>,
    pub failure_count: usize,
}

/// Per-(condition, method) summaries, in grid order then method order.
pub fn aggregate(records: &[ReplicationRecord]) -> Vec<ConditionSummary> {
    let mut groups: Vec<(SimulationCondition, Method, GroupStats)> = Vec::new();
    for rec in records {
        for (&method, outcome) in &rec.outcomes {
            let pos = groups
                .iter()
                .position(|(c, m, _)| *c == rec.condition && *m == method)
                .unwrap_or_else(|| {
                    groups.push((rec.condition, method, GroupStats::default()));
                    groups.len() - 1
                });
            groups[pos].2.push(outcome.k_hat(), rec.condition.n_factors);
        }
    }
    groups.sort_by(|a, b| condition_order(&a.0, &b.0).then(a.1.cmp(&b.1)));
    groups
        .into_iter()
        .map(|(condition, method, s)| ConditionSummary {
            condition,
            method,
            n_reps: s.accuracy.n,
            accuracy_mean: s.accuracy.mean(),
            accuracy_sd: s.accuracy.sd(),
            mbe_mean: s.bias.mean_opt(),
            mbe_sd: s.bias.sd_opt(),
            mae_mean: s.abs_bias.mean_opt(),
            mae_sd: s.abs_bias.sd_opt(),
            failure_count: s.failures,
        })
        .collect()
}

fn condition_order(a: &SimulationCondition, b: &SimulationCondition) -> std::cmp::Ordering {
    let key = |c: &SimulationCondition| {
        (
            c.grid_index().unwrap_or(usize::MAX),
            c.n_factors,
            c.items_per_factor,
            c.sample_size,
        )
    };
    key(a).cmp(&key(b)).then(a.factor_corr.total_cmp(&b.factor_corr))
}

/// Which design factors a roll-up keeps; the others are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RollupLevel {
    pub n_factors: bool,
    pub items_per_factor: bool,
    pub sample_size: bool,
    pub factor_corr: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollupKey {
    pub n_factors: Option<usize>,
    pub items_per_factor: Option<usize>,
    pub sample_size: Option<usize>,
    pub factor_corr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollupSummary {
    pub key: RollupKey,
    pub method: Method,
    pub n_reps: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub mbe_mean: Option<f64>,
    pub mbe_sd: Option<f64>,
    pub mae_mean: Option<f64>,
    pub mae_sd: Option<f64>,
    pub failure_count: usize,
}

/// Summaries pooled over every replication sharing the kept design factors.
pub fn rollup(records: &[ReplicationRecord], level: RollupLevel) -> Vec<RollupSummary> {
    let key_of = |c: &SimulationCondition| RollupKey {
        n_factors: level.n_factors.then_some(c.n_factors),
        items_per_factor: level.items_per_factor.then_some(c.items_per_factor),
        sample_size: level.sample_size.then_some(c.sample_size),
        factor_corr: level.factor_corr.then_some(c.factor_corr),
    };
    let mut groups: Vec<(RollupKey, Method, GroupStats)> = Vec::new();
    for rec in records {
        let key = key_of(&rec.condition);
        for (&method, outcome) in &rec.outcomes {
            let pos = groups
                .iter()
                .position(|(k, m, _)| *k == key && *m == method)
                .unwrap_or_else(|| {
                    groups.push((key, method, GroupStats::default()));
                    groups.len() - 1
                });
            groups[pos].2.push(outcome.k_hat(), rec.condition.n_factors);
        }
    }
    groups.sort_by(|a, b| {
        let ka = (a.0.n_factors, a.0.items_per_factor, a.0.sample_size);
        let kb = (b.0.n_factors, b.0.items_per_factor, b.0.sample_size);
        ka.cmp(&kb)
            .then(
                a.0.factor_corr
                    .unwrap_or(-1.0)
                    .total_cmp(&b.0.factor_corr.unwrap_or(-1.0)),
            )
            .then(a.1.cmp(&b.1))
    });
    groups
        .into_iter()
        .map(|(key, method, s)| RollupSummary {
            key,
            method,
            n_reps: s.accuracy.n,
            accuracy_mean: s.accuracy.mean(),
            accuracy_sd: s.accuracy.sd(),
            mbe_mean: s.bias.mean_opt(),
            mbe_sd: s.bias.sd_opt(),
            mae_mean: s.abs_bias.mean_opt(),
            mae_sd: s.abs_bias.sd_opt(),
            failure_count: s.failures,
        })
        .collect()
}

/// Running sums for a sample mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn mean_opt(&self) -> Option<f64> {
        (self.n > 0).then(|| self.mean())
    }

    fn sd(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum_sq - self.n as f64 * m * m) / (self.n - 1) as f64)
            .max(0.0)
            .sqrt()
    }

    fn sd_opt(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sd())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct GroupStats {
    accuracy: Moments,
    bias: Moments,
    abs_bias: Moments,
    failures: usize,
}

impl GroupStats {
    fn from_estimates(estimates: impl Iterator<Item = Option<usize>>, true_k: usize) -> Self {
        let mut s = Self::default();
        for e in estimates {
            s.push(e, true_k);
        }
        s
    }

    fn push(&mut self, estimate: Option<usize>, true_k: usize) {
        match estimate {
            Some(k) => {
                let bias = k as f64 - true_k as f64;
                self.accuracy.push(f64::from(u8::from(k == true_k)));
                self.bias.push(bias);
                self.abs_bias.push(bias.abs());
            }
            None => {
                self.accuracy.push(0.0);
                self.failures += 1;
            }
        }
    }
}
