//! Experiment harness: configuration, seeded replicate runs, sweeps,
//! aggregation, and file outputs.
//!
//! Configurations are flat key-value files (TOML syntax) whose keys are
//! documented on [`RawConfig`]; command-line flags override file values.
//! Replicate runs are scheduled over a worker pool and merged in seed
//! order, so outputs are byte-identical across re-runs of the same
//! configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::accounting::{render_csv, RunContext, RunMetrics};
use crate::design::{support_bound, DecisionSet};
use crate::engine::{run_dpdpe, run_dppe, EngineConfig, RunOutput};
use crate::error::{Error, Result};
use crate::population::PopulationSpec;
use crate::privatizer::{PrivacyModel, PrivacyParams};
use crate::rng::SimRng;
use crate::stats::{mean, sample_std};

/// Which learner a cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Distributed phased elimination with the exponential client schedule.
    DpDpe,
    /// Standard linear bandits with per-action client groups.
    DpPe,
    /// Distributed phased elimination with a fixed client count per phase.
    DpeFixedU,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::DpDpe => "dpdpe",
            Algorithm::DpPe => "dppe",
            Algorithm::DpeFixedU => "dpe-fixedu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dpdpe" | "dpe" => Ok(Algorithm::DpDpe),
            "dppe" | "pe" => Ok(Algorithm::DpPe),
            "dpe-fixedu" | "fixedu" | "dpe_fixedu" => Ok(Algorithm::DpeFixedU),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// A fully resolved experiment cell.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub label: String,
    pub algorithm: Algorithm,
    pub model: PrivacyModel,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub d: usize,
    pub k: usize,
    pub horizon: u64,
    pub sigma: f64,
    pub reward_noise: f64,
    pub reward_bound: f64,
    /// Confidence level; `None` means the default `1/(kT)`.
    pub beta: Option<f64>,
    pub seeds: Vec<u64>,
    pub population_size: u64,
    /// Client count for `DpeFixedU`; computed to match the DPE
    /// communication budget when absent.
    pub fixed_clients: Option<u64>,
    /// Seed of the synthetic instance (actions and global parameter),
    /// shared by every replicate.
    pub instance_seed: u64,
    /// Initial phase budget; defaults to 2 for the distributed algorithm
    /// and to the support bound for the standard one.
    pub h1: Option<u64>,
    pub materialize_bits: bool,
    pub sample_stride: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label: "experiment".into(),
            algorithm: Algorithm::DpDpe,
            model: PrivacyModel::None,
            epsilon: 10.0,
            delta: 0.25,
            alpha: 0.8,
            d: 5,
            k: 50,
            horizon: 100_000,
            sigma: 0.1,
            reward_noise: 0.3,
            reward_bound: 2.0,
            beta: None,
            seeds: (1..=20).collect(),
            population_size: 100_000,
            fixed_clients: None,
            instance_seed: 7_202_206,
            h1: None,
            materialize_bits: false,
            sample_stride: None,
        }
    }
}

impl ExperimentConfig {
    pub fn beta_value(&self) -> f64 {
        self.beta
            .unwrap_or_else(|| 1.0 / (self.k as f64 * self.horizon as f64))
    }

    pub fn h1_value(&self) -> u64 {
        self.h1.unwrap_or(match self.algorithm {
            Algorithm::DpDpe | Algorithm::DpeFixedU => 2,
            Algorithm::DpPe => support_bound(self.d) as u64,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("d and k must be at least 1".into()));
        }
        if self.horizon < self.h1_value() {
            return Err(Error::InvalidConfig(format!(
                "horizon T = {} is below the initial phase budget h1 = {}",
                self.horizon,
                self.h1_value()
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list must be non-empty".into()));
        }
        let beta = self.beta_value();
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig("beta must lie in (0, 1)".into()));
        }
        self.privacy_params()?.validate()?;
        Ok(())
    }

    pub fn privacy_params(&self) -> Result<PrivacyParams> {
        PrivacyParams::new(self.model, self.epsilon, self.delta, self.reward_bound)
    }

    fn engine_config(&self, fixed_clients: Option<u64>) -> EngineConfig {
        EngineConfig {
            horizon: self.horizon,
            alpha: self.alpha,
            beta: self.beta_value(),
            h1: self.h1_value(),
            fixed_clients,
            materialize_bits: self.materialize_bits,
            sample_stride: self.sample_stride,
        }
    }
}

/// Raw key-value configuration file. Every key is optional and falls back
/// to the desk-scale default.
///
/// Recognized keys: `label`, `algorithm` (dpdpe | dppe | dpe-fixedu),
/// `model` (none | central | local | shuffle), `epsilon`, `delta`,
/// `alpha`, `d`, `k`, `T`, `sigma`, `reward_noise`, `B`, `beta`, `seed`,
/// `seeds` (list), `population_size`, `fixed_clients`, `instance_seed`,
/// `h1`, `materialize_bits`, `sample_stride`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub label: Option<String>,
    pub algorithm: Option<String>,
    pub model: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<u64>,
    pub sigma: Option<f64>,
    pub reward_noise: Option<f64>,
    #[serde(rename = "B")]
    pub reward_bound: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub population_size: Option<u64>,
    pub fixed_clients: Option<u64>,
    pub instance_seed: Option<u64>,
    pub h1: Option<u64>,
    pub materialize_bits: Option<bool>,
    pub sample_stride: Option<u64>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Applies the raw values on top of `base`.
    pub fn apply(&self, base: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = &self.label {
            base.label = v.clone();
        }
        if let Some(v) = &self.algorithm {
            base.algorithm = Algorithm::parse(v)?;
        }
        if let Some(v) = &self.model {
            base.model = PrivacyModel::parse(v)?;
        }
        if let Some(v) = self.epsilon {
            base.epsilon = v;
        }
        if let Some(v) = self.delta {
            base.delta = v;
        }
        if let Some(v) = self.alpha {
            base.alpha = v;
        }
        if let Some(v) = self.d {
            base.d = v;
        }
        if let Some(v) = self.k {
            base.k = v;
        }
        if let Some(v) = self.horizon {
            base.horizon = v;
        }
        if let Some(v) = self.sigma {
            base.sigma = v;
        }
        if let Some(v) = self.reward_noise {
            base.reward_noise = v;
        }
        if let Some(v) = self.reward_bound {
            base.reward_bound = v;
        }
        if let Some(v) = self.beta {
            base.beta = Some(v);
        }
        if let Some(v) = &self.seeds {
            base.seeds = v.clone();
        } else if let Some(v) = self.seed {
            base.seeds = vec![v];
        }
        if let Some(v) = self.population_size {
            base.population_size = v;
        }
        if let Some(v) = self.fixed_clients {
            base.fixed_clients = Some(v);
        }
        if let Some(v) = self.instance_seed {
            base.instance_seed = v;
        }
        if let Some(v) = self.h1 {
            base.h1 = Some(v);
        }
        if let Some(v) = self.materialize_bits {
            base.materialize_bits = v;
        }
        if let Some(v) = self.sample_stride {
            base.sample_stride = Some(v);
        }
        Ok(())
    }
}

/// Builds the synthetic instance shared by all replicates of a cell:
/// `k` actions uniform on the unit sphere and a unit-norm global
/// parameter, both derived from the instance seed.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<(DecisionSet, PopulationSpec)> {
    let mut rng = SimRng::seed_from(cfg.instance_seed);
    let theta_star = rng.unit_sphere(cfg.d);
    let actions: Vec<Vec<f64>> = (0..cfg.k).map(|_| rng.unit_sphere(cfg.d)).collect();
    let set = DecisionSet::new(actions)?;
    let pop = PopulationSpec {
        theta_star,
        sigma: cfg.sigma,
        reward_noise_scale: cfg.reward_noise,
        reward_bound: cfg.reward_bound,
        population_size: cfg.population_size,
    };
    pop.validate()?;
    Ok((set, pop))
}

/// One replicate with its identifying context.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub context: RunContext,
    pub output: RunOutput,
}

/// Aggregate statistics of a cell.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_comm_cost: f64,
    pub std_comm_cost: f64,
    pub comm_unit: &'static str,
    pub mean_clip_rate: f64,
}

/// Results of one experiment cell.
#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

impl ExperimentResult {
    pub fn final_regrets(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| r.output.metrics.cumulative_regret())
            .collect()
    }

    pub fn comm_costs(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| r.output.metrics.comm_cost())
            .collect()
    }

    pub fn csv(&self) -> String {
        let rows: Vec<(RunContext, RunMetrics)> = self
            .runs
            .iter()
            .map(|r| (r.context.clone(), r.output.metrics.clone()))
            .collect();
        render_csv(&rows)
    }
}

/// Resolves the worker count: explicit flag, then the `DPBANDIT_WORKERS`
/// environment variable, then machine parallelism.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("DPBANDIT_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .filter(|&w| w > 0)
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn run_one(
    cfg: &ExperimentConfig,
    set: &DecisionSet,
    pop: &PopulationSpec,
    fixed_clients: Option<u64>,
    run_id: u32,
    seed: u64,
) -> Result<RunRecord> {
    let privacy = cfg.privacy_params()?;
    let engine_cfg = cfg.engine_config(fixed_clients);
    let mut rng = SimRng::seed_from(seed);
    let output = match cfg.algorithm {
        Algorithm::DpDpe | Algorithm::DpeFixedU => {
            run_dpdpe(set, pop, &privacy, &engine_cfg, &mut rng)?
        }
        Algorithm::DpPe => run_dppe(set, pop, &privacy, &engine_cfg, &mut rng)?,
    };
    Ok(RunRecord {
        context: RunContext {
            run_id,
            seed,
            model: cfg.model.as_str().to_string(),
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            alpha: cfg.alpha,
            d: cfg.d,
            k: cfg.k,
            horizon: cfg.horizon,
        },
        output,
    })
}

/// Fixed client count matching the DPE communication budget:
/// `U = ceil(sum_l s_l |U_l| / sum_l s_l)` over a dry-run phase schedule.
pub fn match_fixedu_budget(cfg: &ExperimentConfig) -> Result<u64> {
    let mut dpe_cfg = cfg.clone();
    dpe_cfg.algorithm = Algorithm::DpDpe;
    dpe_cfg.fixed_clients = None;
    let (set, pop) = build_instance(&dpe_cfg)?;
    let record = run_one(&dpe_cfg, &set, &pop, None, 0, dpe_cfg.seeds[0])?;
    let mut weighted = 0.0f64;
    let mut total_support = 0.0f64;
    for p in record.output.metrics.phases() {
        if p.clients > 0 {
            weighted += p.support as f64 * p.clients as f64;
            total_support += p.support as f64;
        }
    }
    if total_support == 0.0 {
        return Err(Error::InvalidConfig(
            "dry-run schedule produced no feedback phases".into(),
        ));
    }
    Ok((weighted / total_support).ceil() as u64)
}

/// Runs every seed of one cell over a worker pool of size `workers`,
/// merging results in seed order. Any failing seed aborts the experiment
/// with its identity attached.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (set, pop) = build_instance(cfg)?;
    let fixed_clients = match cfg.algorithm {
        Algorithm::DpeFixedU => Some(match cfg.fixed_clients {
            Some(u) => u,
            None => match_fixedu_budget(cfg)?,
        }),
        _ => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                run_one(cfg, &set, &pop, fixed_clients, i as u32, seed)
                    .map_err(|e| Error::InvalidConfig(format!("seed {seed}: {e}")))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    let regrets: Vec<f64> = runs
        .iter()
        .map(|r| r.output.metrics.cumulative_regret())
        .collect();
    let comms: Vec<f64> = runs.iter().map(|r| r.output.metrics.comm_cost()).collect();
    let clips: Vec<f64> = runs.iter().map(|r| r.output.metrics.clip_rate()).collect();
    let aggregate = Aggregate {
        runs: runs.len(),
        mean_final_regret: mean(&regrets),
        std_final_regret: sample_std(&regrets),
        mean_comm_cost: mean(&comms),
        std_comm_cost: sample_std(&comms),
        comm_unit: runs[0].output.metrics.comm_unit().as_str(),
        mean_clip_rate: mean(&clips),
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        runs,
        aggregate,
    })
}

/// Named preset cells reproducing the desk-scale experiments.
pub fn preset_configs(name: &str) -> Result<Vec<ExperimentConfig>> {
    let base = ExperimentConfig::default();
    match name {
        "fig2a-desk" => {
            let mut cells = Vec::new();
            for model in [PrivacyModel::Central, PrivacyModel::Local, PrivacyModel::Shuffle] {
                for eps in [1.0, 5.0, 10.0] {
                    cells.push(ExperimentConfig {
                        label: format!("fig2a_{}_eps{}", model.as_str(), eps),
                        model,
                        epsilon: eps,
                        ..base.clone()
                    });
                }
            }
            Ok(cells)
        }
        "fig2b-desk" => {
            let mut cells = vec![ExperimentConfig {
                label: "fig2b_dpe".into(),
                model: PrivacyModel::None,
                ..base.clone()
            }];
            for model in [PrivacyModel::Central, PrivacyModel::Local, PrivacyModel::Shuffle] {
                cells.push(ExperimentConfig {
                    label: format!("fig2b_{}", model.as_str()),
                    model,
                    epsilon: 10.0,
                    ..base.clone()
                });
            }
            Ok(cells)
        }
        "fig2c-desk" => Ok(vec![
            ExperimentConfig {
                label: "fig2c_dpe".into(),
                model: PrivacyModel::None,
                ..base.clone()
            },
            ExperimentConfig {
                label: "fig2c_dpe_fixedu".into(),
                algorithm: Algorithm::DpeFixedU,
                model: PrivacyModel::None,
                ..base.clone()
            },
        ]),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset '{other}' (expected fig2a-desk, fig2b-desk, or fig2c-desk)"
        ))),
    }
}

/// Expands a base cell into a sweep grid.
pub fn sweep_configs(
    base: &ExperimentConfig,
    models: &[PrivacyModel],
    epsilons: &[f64],
    alphas: &[f64],
) -> Vec<ExperimentConfig> {
    let models = if models.is_empty() { vec![base.model] } else { models.to_vec() };
    let epsilons = if epsilons.is_empty() { vec![base.epsilon] } else { epsilons.to_vec() };
    let alphas = if alphas.is_empty() { vec![base.alpha] } else { alphas.to_vec() };
    let mut cells = Vec::new();
    for &model in &models {
        for &eps in &epsilons {
            for &alpha in &alphas {
                cells.push(ExperimentConfig {
                    label: format!("{}_{}_eps{}_alpha{}", base.label, model.as_str(), eps, alpha),
                    model,
                    epsilon: eps,
                    alpha,
                    ..base.clone()
                });
            }
        }
    }
    cells
}

/// Header of the aggregate summary CSV.
pub const SUMMARY_HEADER: &str = "label,algorithm,model,epsilon,delta,alpha,d,k,T,runs,mean_final_regret,std_final_regret,mean_comm_cost,std_comm_cost,comm_unit,mean_clip_rate";

pub fn render_summary_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        let c = &r.config;
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.label,
            c.algorithm.as_str(),
            c.model.as_str(),
            c.epsilon,
            c.delta,
            c.alpha,
            c.d,
            c.k,
            c.horizon,
            a.runs,
            a.mean_final_regret,
            a.std_final_regret,
            a.mean_comm_cost,
            a.std_comm_cost,
            a.comm_unit,
            a.mean_clip_rate
        );
    }
    out
}

/// Human-readable block describing each cell's aggregate.
pub fn render_text_summary(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    for r in results {
        let c = &r.config;
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "{}: algorithm={} model={} eps={} alpha={} d={} k={} T={} ({} runs)",
            c.label,
            c.algorithm.as_str(),
            c.model.as_str(),
            c.epsilon,
            c.alpha,
            c.d,
            c.k,
            c.horizon,
            a.runs
        );
        let _ = writeln!(
            out,
            "  final regret {:.3} +/- {:.3}   comm {:.0} {} (+/- {:.0})   clip rate {:.5}",
            a.mean_final_regret,
            a.std_final_regret,
            a.mean_comm_cost,
            a.comm_unit,
            a.std_comm_cost,
            a.mean_clip_rate
        );
    }
    out
}

/// Writes per-cell run CSVs plus the aggregate summary CSV and text
/// summary into `dir`. Returns the list of files written.
pub fn write_outputs(dir: &Path, results: &[ExperimentResult]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in results {
        let path = dir.join(format!("{}_runs.csv", r.config.label));
        std::fs::write(&path, r.csv())?;
        written.push(path);
    }
    let summary = dir.join("summary.csv");
    std::fs::write(&summary, render_summary_csv(results))?;
    written.push(summary);
    let text = dir.join("summary.txt");
    std::fs::write(&text, render_text_summary(results))?;
    written.push(text);
    Ok(written)
}
