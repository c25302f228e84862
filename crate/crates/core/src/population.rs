//! Synthetic client population: heterogeneous local parameters around a
//! global parameter, reward generation, and client sampling.
//!
//! Clients are drawn from an implicit infinite population: each sampled
//! client materializes `theta_u = theta* + xi_u` with `xi_u` truncated
//! Gaussian per coordinate at scale `sigma / sqrt(d)`, so the vector is
//! `sigma`-sub-Gaussian. Reward noise is truncated Gaussian as well, and
//! every emitted reward is clipped into `[-B, B]` with the clip tracked.

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Truncation point for the Gaussian draws, in standard deviations.
const TRUNCATION_SDS: f64 = 4.0;

/// Global model, heterogeneity, and reward-noise description.
#[derive(Debug, Clone)]
pub struct PopulationSpec {
    /// Global parameter with `||theta*||_2 <= 1`.
    pub theta_star: Vec<f64>,
    /// Client heterogeneity scale `sigma >= 0`.
    pub sigma: f64,
    /// Sub-Gaussian scale of the per-observation reward noise, at most 1.
    pub reward_noise_scale: f64,
    /// Hard reward bound `B`.
    pub reward_bound: f64,
    /// Population size, kept for reporting parity; sampling treats the
    /// population as infinite.
    pub population_size: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let norm = self.theta_star.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= 1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "||theta*|| = {norm:.6} must be at most 1"
            )));
        }
        if self.theta_star.is_empty() {
            return Err(Error::InvalidInput("theta* must have dimension >= 1".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidInput("sigma must be non-negative".into()));
        }
        if !(self.reward_noise_scale >= 0.0 && self.reward_noise_scale <= 1.0) {
            return Err(Error::InvalidInput(
                "reward noise scale must lie in [0, 1]".into(),
            ));
        }
        if !(self.reward_bound > 0.0) {
            return Err(Error::InvalidInput("reward bound B must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }
}

/// A sampled client with its local parameter.
#[derive(Debug, Clone)]
pub struct Client {
    pub theta: Vec<f64>,
}

/// Running tally of reward observations and how often clipping bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct RewardTally {
    pub observations: u64,
    pub clipped: u64,
}

impl RewardTally {
    pub fn clip_rate(&self) -> f64 {
        if self.observations == 0 {
            0.0
        } else {
            self.clipped as f64 / self.observations as f64
        }
    }

    pub fn merge(&mut self, other: RewardTally) {
        self.observations += other.observations;
        self.clipped += other.clipped;
    }
}

/// Draws `count` fresh clients i.i.d. around the global parameter.
pub fn sample_clients(count: usize, spec: &PopulationSpec, rng: &mut SimRng) -> Vec<Client> {
    let d = spec.dim();
    let coord_scale = spec.sigma / (d as f64).sqrt();
    (0..count)
        .map(|_| {
            let theta = spec
                .theta_star
                .iter()
                .map(|&t| t + rng.gauss_truncated(coord_scale, TRUNCATION_SDS))
                .collect();
            Client { theta }
        })
        .collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One noisy local reward `y = <theta_u, x> + eta`, clipped into `[-B, B]`.
#[inline]
pub fn observe_reward(
    client: &Client,
    action: &[f64],
    spec: &PopulationSpec,
    rng: &mut SimRng,
    tally: &mut RewardTally,
) -> f64 {
    observe_reward_from_mean(dot(&client.theta, action), spec, rng, tally)
}

#[inline]
fn observe_reward_from_mean(
    mean: f64,
    spec: &PopulationSpec,
    rng: &mut SimRng,
    tally: &mut RewardTally,
) -> f64 {
    let y = mean + rng.gauss_truncated(spec.reward_noise_scale, TRUNCATION_SDS);
    tally.observations += 1;
    if y.abs() > spec.reward_bound {
        tally.clipped += 1;
        y.clamp(-spec.reward_bound, spec.reward_bound)
    } else {
        y
    }
}

/// Mean of `pull_count` independent reward observations of one action.
pub fn average_local_reward(
    client: &Client,
    action: &[f64],
    pull_count: u64,
    spec: &PopulationSpec,
    rng: &mut SimRng,
    tally: &mut RewardTally,
) -> f64 {
    debug_assert!(pull_count >= 1);
    let mean = dot(&client.theta, action);
    let mut sum = 0.0;
    for _ in 0..pull_count {
        sum += observe_reward_from_mean(mean, spec, rng, tally);
    }
    sum / pull_count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, sigma: f64) -> PopulationSpec {
        let mut theta = vec![0.0; d];
        theta[0] = 0.8;
        PopulationSpec {
            theta_star: theta,
            sigma,
            reward_noise_scale: 0.3,
            reward_bound: 2.0,
            population_size: 100_000,
        }
    }

    #[test]
    fn zero_sigma_clients_equal_theta_star() {
        let s = spec(3, 0.0);
        let mut rng = SimRng::seed_from(1);
        for c in sample_clients(20, &s, &mut rng) {
            assert_eq!(c.theta, s.theta_star);
        }
    }

    #[test]
    fn client_mean_concentrates_on_theta_star() {
        let d = 4;
        let s = spec(d, 0.1);
        let mut rng = SimRng::seed_from(2);
        let n = 10_000usize;
        let clients = sample_clients(n, &s, &mut rng);
        for j in 0..d {
            let mean = clients.iter().map(|c| c.theta[j]).sum::<f64>() / n as f64;
            let tol = 3.0 * s.sigma / (d as f64 * n as f64).sqrt();
            assert!(
                (mean - s.theta_star[j]).abs() < tol,
                "coordinate {j}: {mean} vs {} (tol {tol})",
                s.theta_star[j]
            );
        }
    }

    #[test]
    fn distinct_streams_draw_distinct_clients() {
        let s = spec(3, 0.2);
        let mut parent = SimRng::seed_from(3);
        let mut r1 = parent.split();
        let mut r2 = parent.split();
        let a = sample_clients(5, &s, &mut r1);
        let b = sample_clients(5, &s, &mut r2);
        assert!(a.iter().zip(&b).any(|(x, y)| x.theta != y.theta));
    }

    #[test]
    fn zero_noise_reward_is_exact_inner_product() {
        let s = spec(2, 0.5);
        let mut rng = SimRng::zero_noise(4);
        let mut tally = RewardTally::default();
        let client = Client {
            theta: vec![0.6, -0.2],
        };
        let y = observe_reward(&client, &[0.5, 0.5], &s, &mut rng, &mut tally);
        assert_eq!(y, 0.6 * 0.5 - 0.2 * 0.5);
        assert_eq!(tally.clipped, 0);
    }

    #[test]
    fn clipping_binds_and_counts() {
        let mut s = spec(1, 0.0);
        s.reward_bound = 2.0;
        let mut rng = SimRng::zero_noise(5);
        let mut tally = RewardTally::default();
        // Local parameter engineered so the mean exceeds B.
        let client = Client { theta: vec![3.0] };
        let y = observe_reward(&client, &[1.0], &s, &mut rng, &mut tally);
        assert_eq!(y, 2.0);
        assert_eq!(tally.clipped, 1);
        assert_eq!(tally.observations, 1);
    }

    #[test]
    fn rewards_always_within_bound() {
        let s = spec(3, 0.3);
        let mut rng = SimRng::seed_from(6);
        let mut tally = RewardTally::default();
        let clients = sample_clients(50, &s, &mut rng);
        let action = vec![0.57, 0.57, 0.57];
        for c in &clients {
            for _ in 0..20 {
                let y = observe_reward(c, &action, &s, &mut rng, &mut tally);
                assert!(y.abs() <= s.reward_bound);
            }
        }
    }

    #[test]
    fn empirical_mean_tracks_inner_product() {
        let s = spec(2, 0.0);
        let mut rng = SimRng::seed_from(7);
        let mut tally = RewardTally::default();
        let client = Client {
            theta: vec![0.4, 0.3],
        };
        let action = vec![0.8, -0.2];
        let expect = 0.4 * 0.8 - 0.3 * 0.2;
        let n = 10_000u64;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += observe_reward(&client, &action, &s, &mut rng, &mut tally);
        }
        let mean = sum / n as f64;
        assert!((mean - expect).abs() < 3.0 * s.reward_noise_scale / (n as f64).sqrt());
    }

    #[test]
    fn average_variance_shrinks_with_pull_count() {
        let s = spec(2, 0.0);
        let mut rng = SimRng::seed_from(8);
        let mut tally = RewardTally::default();
        let client = Client {
            theta: vec![0.4, 0.3],
        };
        let action = vec![0.8, -0.2];
        let trials = 1000;
        let var_of = |pulls: u64, rng: &mut SimRng, tally: &mut RewardTally| {
            let xs: Vec<f64> = (0..trials)
                .map(|_| average_local_reward(&client, &action, pulls, &s, rng, tally))
                .collect();
            let m = xs.iter().sum::<f64>() / trials as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (trials - 1) as f64
        };
        let v1 = var_of(1, &mut rng, &mut tally);
        let v16 = var_of(16, &mut rng, &mut tally);
        let ratio = v1 / v16;
        assert!(
            (ratio - 16.0).abs() < 6.0,
            "variance ratio {ratio} should be near 16"
        );
    }

    #[test]
    fn single_pull_average_is_one_observation() {
        let s = spec(2, 0.0);
        let mut a = SimRng::seed_from(9);
        let mut b = SimRng::seed_from(9);
        let mut t1 = RewardTally::default();
        let mut t2 = RewardTally::default();
        let client = Client {
            theta: vec![0.4, 0.3],
        };
        let action = vec![0.8, -0.2];
        let avg = average_local_reward(&client, &action, 1, &s, &mut a, &mut t1);
        let one = observe_reward(&client, &action, &s, &mut b, &mut t2);
        assert_eq!(avg, one);
    }
}
