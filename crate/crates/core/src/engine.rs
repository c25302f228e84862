//! Phased-elimination learning engines.
//!
//! [`run_dpdpe`] drives the distributed algorithm: per phase it computes a
//! near-G-optimal design over the active actions, plays the rounded
//! allocation, samples `ceil(2^(alpha l))` fresh clients, aggregates their
//! per-action average rewards through the configured privatizer, solves
//! the least-squares estimate, and eliminates actions whose estimated gap
//! exceeds twice the confidence width. Phase budgets double.
//!
//! [`run_dppe`] is the standard-linear-bandit variant: every pull is
//! answered by a fresh client, the privatizer aggregates a private sum per
//! action, and the confidence width drops the client-uncertainty term.

use nalgebra::{DMatrix, DVector};

use crate::accounting::{CommUnit, PhaseRecord, RunMetrics};
use crate::design::{allocate_pulls, compute_near_g_optimal, support_bound, DecisionSet};
use crate::error::{Error, Result};
use crate::population::{
    average_local_reward, observe_reward, sample_clients, Client, PopulationSpec, RewardTally,
};
use crate::privatizer::{
    privatize_average, privatize_sum, AggregatedFeedback, FeedbackMode, PrivacyModel,
    PrivacyParams,
};
use crate::rng::SimRng;

/// Relative eigenvalue cutoff for the pseudo-inverse in the estimator.
const ESTIMATOR_TOL: f64 = 1e-12;

/// Per-run engine knobs shared by both algorithms.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Round budget `T`.
    pub horizon: u64,
    /// Client-sampling exponent; phase `l` samples `ceil(2^(alpha l))`.
    pub alpha: f64,
    /// Confidence level, default `1/(kT)`.
    pub beta: f64,
    /// Initial phase budget `h_1`.
    pub h1: u64,
    /// Overrides the client schedule with a fixed count per phase.
    pub fixed_clients: Option<u64>,
    /// Run the shuffle protocol on literal bit vectors instead of counts.
    pub materialize_bits: bool,
    /// Overrides the trajectory decimation stride.
    pub sample_stride: Option<u64>,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("horizon T must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig("beta must lie in (0, 1)".into()));
        }
        if self.h1 < 1 {
            return Err(Error::InvalidConfig("h1 must be at least 1".into()));
        }
        if self.fixed_clients == Some(0) {
            return Err(Error::InvalidConfig("fixed client count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Phase-level state of a run.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub phase: u32,
    pub budget: u64,
    pub start_round: u64,
    pub active: Vec<usize>,
    pub estimate: Option<Vec<f64>>,
}

/// Elimination threshold of the distributed algorithm:
/// `(sqrt(2d/(|U| h)) + sigma/sqrt(|U|) + sigma_n) sqrt(2 ln(1/beta))`.
pub fn confidence_width(
    d: usize,
    clients: u64,
    h: u64,
    sigma: f64,
    sigma_n: f64,
    beta: f64,
) -> f64 {
    let n = clients as f64;
    let base = (2.0 * d as f64 / (n * h as f64)).sqrt() + sigma / n.sqrt() + sigma_n;
    base * (2.0 * (1.0 / beta).ln()).sqrt()
}

/// Two-term width for the standard-bandit algorithm:
/// `(sqrt(2d/h) + sigma_n) sqrt(2 ln(1/beta))`.
pub fn confidence_width_standard(d: usize, h: u64, sigma_n: f64, beta: f64) -> f64 {
    ((2.0 * d as f64 / h as f64).sqrt() + sigma_n) * (2.0 * (1.0 / beta).ln()).sqrt()
}

/// The normal-equation inputs `V_l` and `G_l`.
#[derive(Debug, Clone)]
pub struct EstimatorInputs {
    pub v: DMatrix<f64>,
    pub g: DVector<f64>,
}

/// Builds `V_l = sum T(x) x x^T` and the matching `G_l`: average-mode
/// feedback is weighted by its pull count, sum-mode feedback is not.
pub fn build_estimator_inputs(
    actions: &[&[f64]],
    counts: &[u64],
    feedback: &AggregatedFeedback,
) -> Result<EstimatorInputs> {
    if actions.len() != counts.len() || actions.len() != feedback.values.len() {
        return Err(Error::InvalidInput(format!(
            "estimator inputs disagree: {} actions, {} counts, {} feedback values",
            actions.len(),
            counts.len(),
            feedback.values.len()
        )));
    }
    let d = actions.first().map_or(0, |a| a.len());
    let mut v = DMatrix::<f64>::zeros(d, d);
    let mut g = DVector::<f64>::zeros(d);
    for ((a, &c), &y) in actions.iter().zip(counts).zip(&feedback.values) {
        let x = DVector::from_column_slice(a);
        v.syger(c as f64, &x, &x, 1.0);
        let w = match feedback.mode {
            FeedbackMode::Average => c as f64 * y,
            FeedbackMode::Sum => y,
        };
        g.axpy(w, &x, 1.0);
    }
    Ok(EstimatorInputs { v, g })
}

/// Minimum-norm solution of `V theta = G`: components inside the span of
/// the pulled actions are solved exactly, orthogonal components are zero.
pub fn least_squares(inputs: &EstimatorInputs) -> Result<Vec<f64>> {
    let eig = inputs.v.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !(max_ev > 0.0) {
        return Err(Error::SingularSystem(
            "information matrix has no positive eigenvalue".into(),
        ));
    }
    let tol = ESTIMATOR_TOL * max_ev;
    let d = inputs.v.nrows();
    let mut theta = DVector::<f64>::zeros(d);
    for j in 0..d {
        let lambda = eig.eigenvalues[j];
        if lambda > tol {
            let u = eig.eigenvectors.column(j);
            theta.axpy(u.dot(&inputs.g) / lambda, &u, 1.0);
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem(
            "estimator produced non-finite coefficients".into(),
        ));
    }
    Ok(theta.as_slice().to_vec())
}

/// Removes active actions whose estimated gap to the empirical best
/// strictly exceeds `2 W`; exact ties survive.
pub fn eliminate(active: &[usize], set: &DecisionSet, theta: &[f64], width: f64) -> Vec<usize> {
    let values: Vec<f64> = active
        .iter()
        .map(|&i| theta.iter().zip(set.action(i)).map(|(t, x)| t * x).sum())
        .collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    active
        .iter()
        .zip(&values)
        .filter(|(_, &v)| best - v <= 2.0 * width)
        .map(|(&i, _)| i)
        .collect()
}

/// Per-phase trace retained alongside the metrics.
#[derive(Debug, Clone)]
pub struct PhaseTrace {
    pub phase: u32,
    pub estimate: Vec<f64>,
    pub width: f64,
    pub active_before: Vec<usize>,
    pub active_after: Vec<usize>,
}

/// A finished run: bookkeeping plus the phase-level trace.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: Vec<PhaseTrace>,
}

fn best_action(set: &DecisionSet, theta_star: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..set.k() {
        let v: f64 = theta_star.iter().zip(set.action(i)).map(|(t, x)| t * x).sum();
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn clients_for_phase(cfg: &EngineConfig, phase: u32) -> u64 {
    match cfg.fixed_clients {
        Some(u) => u,
        None => (2f64.powf(cfg.alpha * phase as f64)).ceil() as u64,
    }
}

/// Plays the surviving action for every remaining round.
fn play_out_singleton(
    set: &DecisionSet,
    survivor: usize,
    gap: f64,
    phase: u32,
    h: u64,
    active_len: u64,
    metrics: &mut RunMetrics,
) -> Result<()> {
    let remaining = metrics.horizon() - metrics.rounds_played();
    metrics.set_phase(phase);
    for _ in 0..remaining {
        metrics.record_gap(gap)?;
    }
    metrics.mark_boundary();
    metrics.push_phase_record(PhaseRecord {
        phase,
        budget: h,
        length: remaining,
        clients: 0,
        support: if remaining > 0 { 1 } else { 0 },
        width: 0.0,
        active: active_len,
    });
    let _ = (set, survivor);
    Ok(())
}

/// Runs the distributed phased-elimination algorithm end to end.
pub fn run_dpdpe(
    set: &DecisionSet,
    pop: &PopulationSpec,
    privacy: &PrivacyParams,
    cfg: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunOutput> {
    cfg.validate()?;
    pop.validate()?;
    privacy.validate()?;
    if pop.dim() != set.dim() {
        return Err(Error::InvalidConfig(
            "population and decision set dimensions disagree".into(),
        ));
    }
    let d = set.dim();
    let s_bound = support_bound(d);
    let unit = if privacy.model == PrivacyModel::Shuffle {
        CommUnit::Bits
    } else {
        CommUnit::Reals
    };
    let mut metrics = RunMetrics::new(cfg.horizon, unit, cfg.sample_stride);
    let mut trace = Vec::new();
    let mut tally = RewardTally::default();

    let (star_idx, star_value) = best_action(set, &pop.theta_star);
    let gaps: Vec<f64> = (0..set.k())
        .map(|i| {
            star_value
                - pop
                    .theta_star
                    .iter()
                    .zip(set.action(i))
                    .map(|(t, x)| t * x)
                    .sum::<f64>()
        })
        .collect();
    let _ = star_idx;

    let mut active: Vec<usize> = (0..set.k()).collect();
    let mut h = cfg.h1;
    let mut phase: u32 = 1;

    while metrics.rounds_played() < cfg.horizon {
        metrics.set_phase(phase);
        if active.len() == 1 {
            play_out_singleton(set, active[0], gaps[active[0]], phase, h, 1, &mut metrics)?;
            break;
        }

        let sub: Vec<Vec<f64>> = active.iter().map(|&i| set.action(i).to_vec()).collect();
        let design = compute_near_g_optimal(&sub)?;
        let alloc = allocate_pulls(&design, h);
        let support_global: Vec<usize> = alloc.counts.iter().map(|&(i, _)| active[i]).collect();
        let counts: Vec<u64> = alloc.counts.iter().map(|&(_, c)| c).collect();
        let s_l = support_global.len();

        // Play each support action its allocated number of times, stopping
        // at the horizon.
        let mut truncated = false;
        let mut played = 0u64;
        'play: for (&gi, &c) in support_global.iter().zip(&counts) {
            let gap = gaps[gi];
            for _ in 0..c {
                if metrics.rounds_played() >= cfg.horizon {
                    truncated = true;
                    break 'play;
                }
                metrics.record_gap(gap)?;
                played += 1;
            }
        }
        metrics.mark_boundary();

        if truncated {
            // Budget exhausted mid-phase: no feedback collection or
            // elimination for the truncated phase.
            metrics.push_phase_record(PhaseRecord {
                phase,
                budget: h,
                length: played,
                clients: 0,
                support: s_l as u64,
                width: 0.0,
                active: active.len() as u64,
            });
            break;
        }

        let n_l = clients_for_phase(cfg, phase);
        let mut phase_rng = rng.split();
        let clients = sample_clients(n_l as usize, pop, &mut phase_rng);
        let reports: Vec<Vec<f64>> = clients
            .iter()
            .map(|client| {
                support_global
                    .iter()
                    .zip(&counts)
                    .map(|(&gi, &c)| {
                        average_local_reward(client, set.action(gi), c, pop, &mut phase_rng, &mut tally)
                    })
                    .collect()
            })
            .collect();

        let aggregate = privatize_average(&reports, privacy, &mut phase_rng, cfg.materialize_bits)?;
        let units = match unit {
            CommUnit::Reals => aggregate.reals_per_client,
            CommUnit::Bits => aggregate.bits_per_client,
        };
        metrics.record_phase_comm(units, n_l);

        let support_refs: Vec<&[f64]> = support_global.iter().map(|&i| set.action(i)).collect();
        let inputs = build_estimator_inputs(&support_refs, &counts, &aggregate.feedback)?;
        let estimate = least_squares(&inputs)?;

        let sigma_n = privacy.sigma_n_distributed(s_l, n_l as usize, d, s_bound);
        let width = confidence_width(d, n_l, h, pop.sigma, sigma_n, cfg.beta);
        let survivors = eliminate(&active, set, &estimate, width);

        metrics.push_phase_record(PhaseRecord {
            phase,
            budget: h,
            length: played,
            clients: n_l,
            support: s_l as u64,
            width,
            active: active.len() as u64,
        });
        trace.push(PhaseTrace {
            phase,
            estimate,
            width,
            active_before: active.clone(),
            active_after: survivors.clone(),
        });

        active = survivors;
        h = double_budget(h);
        phase += 1;
    }

    metrics.merge_tally(tally);
    Ok(RunOutput { metrics, trace })
}

fn double_budget(h: u64) -> u64 {
    h.saturating_mul(2)
}

/// Runs the standard-linear-bandit variant where every pull is answered by
/// a fresh client and per-action private sums replace averages. Client
/// heterogeneity does not apply: every client shares the global parameter.
pub fn run_dppe(
    set: &DecisionSet,
    pop: &PopulationSpec,
    privacy: &PrivacyParams,
    cfg: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunOutput> {
    cfg.validate()?;
    pop.validate()?;
    privacy.validate()?;
    if pop.dim() != set.dim() {
        return Err(Error::InvalidConfig(
            "population and decision set dimensions disagree".into(),
        ));
    }
    let d = set.dim();
    let unit = if privacy.model == PrivacyModel::Shuffle {
        CommUnit::Bits
    } else {
        CommUnit::Reals
    };
    let mut metrics = RunMetrics::new(cfg.horizon, unit, cfg.sample_stride);
    let mut trace = Vec::new();
    let mut tally = RewardTally::default();

    let (_, star_value) = best_action(set, &pop.theta_star);
    let gaps: Vec<f64> = (0..set.k())
        .map(|i| {
            star_value
                - pop
                    .theta_star
                    .iter()
                    .zip(set.action(i))
                    .map(|(t, x)| t * x)
                    .sum::<f64>()
        })
        .collect();
    let shared_client = Client {
        theta: pop.theta_star.clone(),
    };

    let mut active: Vec<usize> = (0..set.k()).collect();
    let mut h = cfg.h1;
    let mut phase: u32 = 1;

    while metrics.rounds_played() < cfg.horizon {
        metrics.set_phase(phase);
        if active.len() == 1 {
            play_out_singleton(set, active[0], gaps[active[0]], phase, h, 1, &mut metrics)?;
            break;
        }

        let sub: Vec<Vec<f64>> = active.iter().map(|&i| set.action(i).to_vec()).collect();
        let design = compute_near_g_optimal(&sub)?;
        let alloc = allocate_pulls(&design, h);
        let support_global: Vec<usize> = alloc.counts.iter().map(|&(i, _)| active[i]).collect();
        let counts: Vec<u64> = alloc.counts.iter().map(|&(_, c)| c).collect();
        let s_l = support_global.len();

        let mut phase_rng = rng.split();
        let mut truncated = false;
        let mut played = 0u64;
        let mut sums = Vec::with_capacity(s_l);
        'actions: for (&gi, &c) in support_global.iter().zip(&counts) {
            let gap = gaps[gi];
            let mut observations = Vec::with_capacity(c as usize);
            for _ in 0..c {
                if metrics.rounds_played() >= cfg.horizon {
                    truncated = true;
                    break 'actions;
                }
                // Each pull is served by a fresh client observing once.
                let y = observe_reward(&shared_client, set.action(gi), pop, &mut phase_rng, &mut tally);
                metrics.record_gap(gap)?;
                played += 1;
                observations.push(y);
            }
            let (private_sum, reals, bits) = privatize_sum(&observations, privacy, &mut phase_rng)?;
            let units = match unit {
                CommUnit::Reals => reals,
                CommUnit::Bits => bits,
            };
            metrics.record_phase_comm(units, c);
            sums.push(private_sum);
        }
        metrics.mark_boundary();

        if truncated {
            metrics.push_phase_record(PhaseRecord {
                phase,
                budget: h,
                length: played,
                clients: played,
                support: s_l as u64,
                width: 0.0,
                active: active.len() as u64,
            });
            break;
        }

        let feedback = AggregatedFeedback {
            values: sums,
            mode: FeedbackMode::Sum,
        };
        let support_refs: Vec<&[f64]> = support_global.iter().map(|&i| set.action(i)).collect();
        let inputs = build_estimator_inputs(&support_refs, &counts, &feedback)?;
        let estimate = least_squares(&inputs)?;

        let sigma_n = privacy.sigma_n_standard(s_l, h, d);
        let width = confidence_width_standard(d, h, sigma_n, cfg.beta);
        let survivors = eliminate(&active, set, &estimate, width);

        metrics.push_phase_record(PhaseRecord {
            phase,
            budget: h,
            length: played,
            clients: played,
            support: s_l as u64,
            width,
            active: active.len() as u64,
        });
        trace.push(PhaseTrace {
            phase,
            estimate,
            width,
            active_before: active.clone(),
            active_after: survivors.clone(),
        });

        active = survivors;
        h = double_budget(h);
        phase += 1;
    }

    metrics.merge_tally(tally);
    Ok(RunOutput { metrics, trace })
}
