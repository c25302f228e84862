//! The privatizer pipeline `P = (R, S, A)`: a client-side randomizer, a
//! trusted intermediary, and a server-side analyzer.
//!
//! Four instantiations are provided. `None` and `Central` leave the
//! randomizer and intermediary as identity maps; `Central` adds calibrated
//! Gaussian noise at the analyzer. `Local` adds Gaussian noise at each
//! client before averaging. `Shuffle` encodes each coordinate into bits
//! with a binomial privacy blanket, permutes all bits, and debiases at the
//! analyzer. A scalar variant of the shuffle protocol sums single reward
//! observations for the standard-bandit algorithm.
//!
//! Bit multisets are normally simulated by their one-counts; the analyzer
//! depends only on the per-coordinate sum, and communication is still
//! charged at `g + b` bits per coordinate per client. A materialized mode
//! exercises the literal bit-level protocol.

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Trust model selecting the privatizer instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrivacyModel {
    None,
    Central,
    Local,
    Shuffle,
}

impl PrivacyModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrivacyModel::None => "none",
            PrivacyModel::Central => "central",
            PrivacyModel::Local => "local",
            PrivacyModel::Shuffle => "shuffle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "dpe" => Ok(PrivacyModel::None),
            "central" | "cdp" => Ok(PrivacyModel::Central),
            "local" | "ldp" => Ok(PrivacyModel::Local),
            "shuffle" | "sdp" => Ok(PrivacyModel::Shuffle),
            other => Err(Error::InvalidConfig(format!("unknown privacy model '{other}'"))),
        }
    }
}

/// Privacy budget, reward bound, and trust model.
#[derive(Debug, Clone, Copy)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Reward magnitude bound `B`; the l2 sensitivity of every mechanism
    /// is derived from it.
    pub reward_bound: f64,
    pub model: PrivacyModel,
}

impl PrivacyParams {
    pub fn new(model: PrivacyModel, epsilon: f64, delta: f64, reward_bound: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            reward_bound,
            model,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reward_bound > 0.0) {
            return Err(Error::PrivacyDomain("reward bound B must be positive".into()));
        }
        if self.model == PrivacyModel::None {
            return Ok(());
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::PrivacyDomain("epsilon must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::PrivacyDomain("delta must lie in (0, 1)".into()));
        }
        if self.model == PrivacyModel::Shuffle {
            if self.epsilon >= 15.0 {
                return Err(Error::PrivacyDomain(
                    "shuffle model requires epsilon < 15".into(),
                ));
            }
            if self.delta >= 0.5 {
                return Err(Error::PrivacyDomain(
                    "shuffle model requires delta < 1/2".into(),
                ));
            }
        }
        Ok(())
    }
}

/// How an aggregate is to be read by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    /// Coordinate-wise average over clients (distributed feedback).
    Average,
    /// Per-action private sum (standard linear bandits).
    Sum,
}

/// Privately aggregated feedback vector.
#[derive(Debug, Clone)]
pub struct AggregatedFeedback {
    pub values: Vec<f64>,
    pub mode: FeedbackMode,
}

fn check_reports(reports: &[Vec<f64>], bound: f64) -> Result<usize> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("report list must be non-empty".into()));
    }
    let s = reports[0].len();
    for r in reports {
        if r.len() != s {
            return Err(Error::InvalidInput("reports must share one dimension".into()));
        }
        if r.iter().any(|v| !v.is_finite() || v.abs() > bound + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "report coordinate outside [-B, B] with B = {bound}"
            )));
        }
    }
    Ok(s)
}

/// Central-model Gaussian noise scale for averaged vectors:
/// `2 B sqrt(2 s ln(1.25/delta)) / (eps |U|)`.
pub fn sigma_nc(bound: f64, s: usize, delta: f64, epsilon: f64, clients: usize) -> f64 {
    2.0 * bound * (2.0 * s as f64 * (1.25 / delta).ln()).sqrt() / (epsilon * clients as f64)
}

/// Local-model Gaussian noise scale for per-client vectors:
/// `2 B sqrt(2 s ln(1.25/delta)) / eps`.
pub fn sigma_nl(bound: f64, s: usize, delta: f64, epsilon: f64) -> f64 {
    2.0 * bound * (2.0 * s as f64 * (1.25 / delta).ln()).sqrt() / epsilon
}

/// Central model: analyzer averages raw reports and perturbs each
/// coordinate with Gaussian noise at scale [`sigma_nc`].
pub fn central_privatize(
    reports: &[Vec<f64>],
    params: &PrivacyParams,
    rng: &mut SimRng,
) -> Result<AggregatedFeedback> {
    let s = check_reports(reports, params.reward_bound)?;
    let n = reports.len();
    let sigma = sigma_nc(params.reward_bound, s, params.delta, params.epsilon, n);
    let mut values = vec![0.0; s];
    for r in reports {
        for (acc, v) in values.iter_mut().zip(r) {
            *acc += v;
        }
    }
    for acc in values.iter_mut() {
        *acc = *acc / n as f64 + rng.gauss(sigma);
    }
    Ok(AggregatedFeedback {
        values,
        mode: FeedbackMode::Average,
    })
}

/// Local model: every client perturbs its own report at scale [`sigma_nl`]
/// before the analyzer averages.
pub fn local_privatize(
    reports: &[Vec<f64>],
    params: &PrivacyParams,
    rng: &mut SimRng,
) -> Result<AggregatedFeedback> {
    let s = check_reports(reports, params.reward_bound)?;
    let n = reports.len();
    let sigma = sigma_nl(params.reward_bound, s, params.delta, params.epsilon);
    let mut values = vec![0.0; s];
    for r in reports {
        for (acc, v) in values.iter_mut().zip(r) {
            *acc += v + rng.gauss(sigma);
        }
    }
    for acc in values.iter_mut() {
        *acc /= n as f64;
    }
    Ok(AggregatedFeedback {
        values,
        mode: FeedbackMode::Average,
    })
}

/// Plain (non-private) average; the `None` model.
pub fn plain_average(reports: &[Vec<f64>], bound: f64) -> Result<AggregatedFeedback> {
    let s = check_reports(reports, bound)?;
    let n = reports.len();
    let mut values = vec![0.0; s];
    for r in reports {
        for (acc, v) in values.iter_mut().zip(r) {
            *acc += v;
        }
    }
    for acc in values.iter_mut() {
        *acc /= n as f64;
    }
    Ok(AggregatedFeedback {
        values,
        mode: FeedbackMode::Average,
    })
}

/// Parameters of the shuffle-model vector average mechanism.
#[derive(Debug, Clone, Copy)]
pub struct ShuffleParams {
    /// Amplified per-round budget `eps / (18 sqrt(ln(2/delta)))`.
    pub eps_hat: f64,
    /// Fixed-point encoding accuracy.
    pub g: u64,
    /// Number of blanket bits per coordinate.
    pub b: u64,
    /// Blanket bit probability, in (0, 1/2].
    pub p: f64,
    /// Vector dimension.
    pub s: usize,
    /// Client count.
    pub n: usize,
    /// l2 bound on client input vectors.
    pub delta2: f64,
    delta: f64,
}

impl ShuffleParams {
    /// Bits transmitted per client: `(g + b) * s`.
    pub fn bits_per_client(&self) -> u64 {
        (self.g + self.b) * self.s as u64
    }

    /// Upper bound on the per-coordinate output variance,
    /// `360 delta2^2 ln(4s/delta) / (n^2 eps_hat^2)`.
    pub fn variance_bound(&self) -> f64 {
        360.0 * self.delta2 * self.delta2 * (4.0 * self.s as f64 / self.delta).ln()
            / ((self.n as f64 * self.eps_hat).powi(2))
    }
}

/// Derives `(eps_hat, g, b, p)` for the vector mechanism from the privacy
/// budget, dimension `s`, client count `n`, and input bound `delta2`.
pub fn shuffle_params(
    epsilon: f64,
    delta: f64,
    s: usize,
    n: usize,
    delta2: f64,
) -> Result<ShuffleParams> {
    if !(epsilon > 0.0 && epsilon < 15.0) {
        return Err(Error::PrivacyDomain(format!(
            "shuffle model requires epsilon in (0, 15), got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::PrivacyDomain(format!(
            "shuffle model requires delta in (0, 1/2), got {delta}"
        )));
    }
    if s == 0 {
        return Err(Error::PrivacyDomain("vector dimension s must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::PrivacyDomain("client count n must be >= 1".into()));
    }
    if !(delta2 > 0.0) {
        return Err(Error::PrivacyDomain("l2 bound delta2 must be positive".into()));
    }
    let eps_hat = epsilon / (18.0 * (2.0 / delta).ln().sqrt());
    let ln_term = (4.0 * s as f64 / delta).ln();
    let clause1 = (eps_hat * (n as f64).sqrt() / (6.0 * (5.0 * ln_term).sqrt())).ceil();
    let clause2 = (s as f64).sqrt().ceil();
    let g = clause1.max(clause2).max(10.0) as u64;
    let b_raw = 180.0 * (g * g) as f64 * ln_term / (eps_hat * eps_hat * n as f64);
    let b = b_raw.ceil() as u64;
    let p = 90.0 * (g * g) as f64 * ln_term / (b as f64 * eps_hat * eps_hat * n as f64);
    debug_assert!(p > 0.0 && p <= 0.5 + 1e-12);
    Ok(ShuffleParams {
        eps_hat,
        g,
        b,
        p,
        s,
        n,
        delta2,
        delta,
    })
}

/// Per-coordinate one-counts produced by the local randomizer; each
/// coordinate stands for a multiset of `g + b` bits.
pub fn shuffle_randomize_counts(
    vector: &[f64],
    sp: &ShuffleParams,
    rng: &mut SimRng,
) -> Result<Vec<u64>> {
    if vector.len() != sp.s {
        return Err(Error::InvalidInput(format!(
            "input dimension {} does not match shuffle dimension {}",
            vector.len(),
            sp.s
        )));
    }
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > sp.delta2 * (1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!(
            "input norm {norm:.6} exceeds the l2 bound {:.6}",
            sp.delta2
        )));
    }
    let mut counts = Vec::with_capacity(sp.s);
    for &v in vector {
        // Shift to [0, 2*delta2] before fixed-point encoding.
        let w = v + sp.delta2;
        let scaled = (w * sp.g as f64 / (2.0 * sp.delta2)).clamp(0.0, sp.g as f64);
        let w_bar = scaled.floor();
        let rounding = u64::from(rng.bernoulli(scaled - w_bar));
        let blanket = rng.binomial(sp.b, sp.p);
        counts.push(w_bar as u64 + rounding + blanket);
    }
    Ok(counts)
}

/// Materialized form of the local randomizer: explicit bit multisets, one
/// per coordinate, each of length `g + b`.
pub fn shuffle_randomize(
    vector: &[f64],
    sp: &ShuffleParams,
    rng: &mut SimRng,
) -> Result<Vec<Vec<bool>>> {
    let counts = shuffle_randomize_counts(vector, sp, rng)?;
    let len = (sp.g + sp.b) as usize;
    Ok(counts
        .into_iter()
        .map(|ones| {
            let mut bits = vec![false; len];
            for bit in bits.iter_mut().take(ones as usize) {
                *bit = true;
            }
            bits
        })
        .collect())
}

/// Uniformly permutes the concatenated client bits for each coordinate.
pub fn shuffle_permute(clients: &[Vec<Vec<bool>>], rng: &mut SimRng) -> Vec<Vec<bool>> {
    if clients.is_empty() {
        return Vec::new();
    }
    let s = clients[0].len();
    let mut out = Vec::with_capacity(s);
    for j in 0..s {
        let mut flat: Vec<bool> = clients.iter().flat_map(|c| c[j].iter().copied()).collect();
        rng.shuffle(&mut flat);
        out.push(flat);
    }
    out
}

/// Analyzer over materialized bits: debias each coordinate sum and
/// re-center into an average estimate.
pub fn shuffle_analyze(shuffled: &[Vec<bool>], sp: &ShuffleParams) -> Result<AggregatedFeedback> {
    if shuffled.len() != sp.s {
        return Err(Error::InvalidInput(format!(
            "expected {} coordinates, got {}",
            sp.s,
            shuffled.len()
        )));
    }
    let expected = (sp.g + sp.b) * sp.n as u64;
    let mut sums = Vec::with_capacity(sp.s);
    for bits in shuffled {
        if bits.len() as u64 != expected {
            return Err(Error::InvalidInput(format!(
                "coordinate carries {} bits, expected {expected}",
                bits.len()
            )));
        }
        sums.push(bits.iter().filter(|&&b| b).count() as u64);
    }
    Ok(shuffle_analyze_counts(&sums, sp)?)
}

/// Analyzer over per-coordinate one-count sums.
pub fn shuffle_analyze_counts(sums: &[u64], sp: &ShuffleParams) -> Result<AggregatedFeedback> {
    if sums.len() != sp.s {
        return Err(Error::InvalidInput(format!(
            "expected {} coordinates, got {}",
            sp.s,
            sums.len()
        )));
    }
    let max = (sp.g + sp.b) * sp.n as u64;
    let values = sums
        .iter()
        .map(|&sum| {
            if sum > max {
                return Err(Error::InvalidInput(format!(
                    "coordinate one-count {sum} exceeds (g+b)n = {max}"
                )));
            }
            let z = 2.0 * sp.delta2 / (sp.g as f64 * sp.n as f64)
                * (sum as f64 - sp.b as f64 * sp.n as f64 * sp.p);
            Ok(z - sp.delta2)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AggregatedFeedback {
        values,
        mode: FeedbackMode::Average,
    })
}

/// Full shuffle pipeline over client report vectors. With
/// `materialize = false` the bit multisets are carried as one-counts; the
/// analyzer output is identical because it depends only on the sums.
pub fn shuffle_aggregate(
    reports: &[Vec<f64>],
    sp: &ShuffleParams,
    rng: &mut SimRng,
    materialize: bool,
) -> Result<AggregatedFeedback> {
    if reports.len() != sp.n {
        return Err(Error::InvalidInput(format!(
            "got {} reports but shuffle parameters expect n = {}",
            reports.len(),
            sp.n
        )));
    }
    if materialize {
        let clients = reports
            .iter()
            .map(|r| shuffle_randomize(r, sp, rng))
            .collect::<Result<Vec<_>>>()?;
        let shuffled = shuffle_permute(&clients, rng);
        shuffle_analyze(&shuffled, sp)
    } else {
        let mut sums = vec![0u64; sp.s];
        for r in reports {
            let counts = shuffle_randomize_counts(r, sp, rng)?;
            for (acc, c) in sums.iter_mut().zip(counts) {
                *acc += c;
            }
        }
        shuffle_analyze_counts(&sums, sp)
    }
}

/// Parameters of the scalar shuffle sum protocol.
#[derive(Debug, Clone, Copy)]
pub struct ScalarShuffleParams {
    pub g: u64,
    pub b: u64,
    pub p: f64,
    pub n: usize,
    pub bound: f64,
}

impl ScalarShuffleParams {
    pub fn bits_per_client(&self) -> u64 {
        self.g + self.b
    }

    /// Concrete upper bound on the output variance along the same chain as
    /// the vector mechanism: `2 B^2 n / g^2 + 180 B^2 ln(2/delta) / (eps/2)^2`.
    pub fn variance_bound(&self, delta: f64, epsilon: f64) -> f64 {
        let half = epsilon / 2.0;
        2.0 * self.bound * self.bound * self.n as f64 / (self.g * self.g) as f64
            + 180.0 * self.bound * self.bound * (2.0 / delta).ln() / (half * half)
    }
}

/// Derives `(g, b, p)` for summing `n` scalars in `[-B, B]` with the
/// per-protocol budget `eps/2`.
pub fn scalar_shuffle_params(
    bound: f64,
    epsilon: f64,
    delta: f64,
    n: usize,
) -> Result<ScalarShuffleParams> {
    if !(epsilon > 0.0 && epsilon < 30.0) {
        return Err(Error::PrivacyDomain(format!(
            "scalar shuffle protocol requires epsilon in (0, 30), got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::PrivacyDomain(format!(
            "scalar shuffle protocol requires delta in (0, 1/2), got {delta}"
        )));
    }
    if n == 0 {
        return Err(Error::PrivacyDomain("client count n must be >= 1".into()));
    }
    if !(bound > 0.0) {
        return Err(Error::PrivacyDomain("value bound B must be positive".into()));
    }
    let half = epsilon / 2.0;
    let g = (2.0 * bound * (n as f64).sqrt()).ceil().max(1.0) as u64;
    let ln_term = (2.0 / delta).ln();
    let b = (180.0 * (g * g) as f64 * ln_term / (half * half * n as f64)).ceil() as u64;
    let p = 90.0 * (g * g) as f64 * ln_term / (b as f64 * half * half * n as f64);
    debug_assert!(p > 0.0 && p <= 0.5 + 1e-12);
    Ok(ScalarShuffleParams { g, b, p, n, bound })
}

/// Private sum of `n` scalars via the bit-encoding shuffle protocol.
pub fn scalar_shuffle_sum(
    values: &[f64],
    bound: f64,
    epsilon: f64,
    delta: f64,
    rng: &mut SimRng,
) -> Result<f64> {
    let sp = scalar_shuffle_params(bound, epsilon, delta, values.len())?;
    scalar_shuffle_sum_with(values, &sp, rng)
}

/// Same as [`scalar_shuffle_sum`] with precomputed parameters.
pub fn scalar_shuffle_sum_with(
    values: &[f64],
    sp: &ScalarShuffleParams,
    rng: &mut SimRng,
) -> Result<f64> {
    if values.len() != sp.n {
        return Err(Error::InvalidInput(format!(
            "got {} values but protocol parameters expect n = {}",
            values.len(),
            sp.n
        )));
    }
    let mut sum = 0u64;
    for &y in values {
        if !y.is_finite() || y.abs() > sp.bound * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "value {y} outside [-B, B] with B = {}",
                sp.bound
            )));
        }
        let w = y + sp.bound;
        let scaled = (w * sp.g as f64 / (2.0 * sp.bound)).clamp(0.0, sp.g as f64);
        let w_bar = scaled.floor();
        let rounding = u64::from(rng.bernoulli(scaled - w_bar));
        let blanket = rng.binomial(sp.b, sp.p);
        sum += w_bar as u64 + rounding + blanket;
    }
    let z = 2.0 * sp.bound / sp.g as f64 * (sum as f64 - sp.n as f64 * sp.b as f64 * sp.p);
    Ok(z - sp.n as f64 * sp.bound)
}

/// Shuffle-model noise scale entering the distributed confidence width:
/// `sqrt(360) B sqrt(s) sqrt(ln(4s/delta)) / (n eps_hat)`, the square root
/// of the mechanism's variance bound.
pub fn sigma_ns(bound: f64, s: usize, delta: f64, epsilon: f64, clients: usize) -> f64 {
    let eps_hat = epsilon / (18.0 * (2.0 / delta).ln().sqrt());
    360f64.sqrt() * bound * (s as f64).sqrt() * (4.0 * s as f64 / delta).ln().sqrt()
        / (clients as f64 * eps_hat)
}

/// Scalar-protocol noise scale for the standard-bandit width:
/// `sqrt(360) B sqrt(ln(2/delta)) / (eps/2)`.
pub fn sigma_ns_scalar(bound: f64, delta: f64, epsilon: f64) -> f64 {
    360f64.sqrt() * bound * (2.0 / delta).ln().sqrt() / (epsilon / 2.0)
}

impl PrivacyParams {
    /// Confidence-width noise term for the distributed algorithm given the
    /// phase support size `s_l`, client count `n_l`, ambient dimension `d`,
    /// and support-size bound `s_bound`.
    pub fn sigma_n_distributed(&self, s_l: usize, n_l: usize, d: usize, s_bound: usize) -> f64 {
        let sd = (s_bound as f64 * d as f64).sqrt();
        match self.model {
            PrivacyModel::None => 0.0,
            PrivacyModel::Central => {
                2.0 * sigma_nc(self.reward_bound, s_l, self.delta, self.epsilon, n_l) * sd
            }
            PrivacyModel::Local => {
                2.0 * sigma_nl(self.reward_bound, s_l, self.delta, self.epsilon)
                    * (s_bound as f64 * d as f64 / n_l as f64).sqrt()
            }
            PrivacyModel::Shuffle => {
                2.0 * sigma_ns(self.reward_bound, s_l, self.delta, self.epsilon, n_l) * sd
            }
        }
    }

    /// Confidence-width noise term for the standard-bandit algorithm given
    /// the phase support size `s_l`, phase budget `h_l`, and dimension `d`.
    pub fn sigma_n_standard(&self, s_l: usize, h_l: u64, d: usize) -> f64 {
        let d = d as f64;
        let h = h_l as f64;
        let s = s_l as f64;
        match self.model {
            PrivacyModel::None => 0.0,
            PrivacyModel::Central => {
                let snc = 2.0 * self.reward_bound * (2.0 * (1.25 / self.delta).ln()).sqrt()
                    / self.epsilon;
                2.0 * d * snc * s.sqrt() / h
            }
            PrivacyModel::Local => {
                let snl = 2.0 * self.reward_bound * (2.0 * (1.25 / self.delta).ln()).sqrt()
                    / self.epsilon;
                2.0 * d * snl * (2.0 * s / h).sqrt()
            }
            PrivacyModel::Shuffle => {
                let sns = sigma_ns_scalar(self.reward_bound, self.delta, self.epsilon);
                2.0 * d * sns * s.sqrt() / h
            }
        }
    }
}

/// Outcome of aggregating one phase of client reports: the private
/// feedback plus the communication charged per client.
#[derive(Debug, Clone)]
pub struct PhaseAggregate {
    pub feedback: AggregatedFeedback,
    /// Real numbers sent by each client (None/Central/Local models).
    pub reals_per_client: u64,
    /// Bits sent by each client (Shuffle model).
    pub bits_per_client: u64,
}

/// Dispatches the average-mode privatizer for distributed feedback.
pub fn privatize_average(
    reports: &[Vec<f64>],
    params: &PrivacyParams,
    rng: &mut SimRng,
    materialize_bits: bool,
) -> Result<PhaseAggregate> {
    let s = check_reports(reports, params.reward_bound)?;
    match params.model {
        PrivacyModel::None => Ok(PhaseAggregate {
            feedback: plain_average(reports, params.reward_bound)?,
            reals_per_client: s as u64,
            bits_per_client: 0,
        }),
        PrivacyModel::Central => Ok(PhaseAggregate {
            feedback: central_privatize(reports, params, rng)?,
            reals_per_client: s as u64,
            bits_per_client: 0,
        }),
        PrivacyModel::Local => Ok(PhaseAggregate {
            feedback: local_privatize(reports, params, rng)?,
            reals_per_client: s as u64,
            bits_per_client: 0,
        }),
        PrivacyModel::Shuffle => {
            // Vector inputs are bounded by delta2 = B sqrt(s).
            let delta2 = params.reward_bound * (s as f64).sqrt();
            let sp = shuffle_params(params.epsilon, params.delta, s, reports.len(), delta2)?;
            Ok(PhaseAggregate {
                feedback: shuffle_aggregate(reports, &sp, rng, materialize_bits)?,
                reals_per_client: 0,
                bits_per_client: sp.bits_per_client(),
            })
        }
    }
}

/// Private per-action sum for the standard-bandit algorithm. `values` are
/// the single observations of that action's client group.
pub fn privatize_sum(
    values: &[f64],
    params: &PrivacyParams,
    rng: &mut SimRng,
) -> Result<(f64, u64, u64)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("value list must be non-empty".into()));
    }
    let bound = params.reward_bound;
    for &y in values {
        if !y.is_finite() || y.abs() > bound * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "value {y} outside [-B, B] with B = {bound}"
            )));
        }
    }
    let sum: f64 = values.iter().sum();
    match params.model {
        PrivacyModel::None => Ok((sum, 1, 0)),
        PrivacyModel::Central => {
            // Sensitivity of a sum of bounded observations is 2B.
            let sigma = 2.0 * bound * (2.0 * (1.25 / params.delta).ln()).sqrt() / params.epsilon;
            Ok((sum + rng.gauss(sigma), 1, 0))
        }
        PrivacyModel::Local => {
            let sigma = 2.0 * bound * (2.0 * (1.25 / params.delta).ln()).sqrt() / params.epsilon;
            let noised: f64 = values.iter().map(|&y| y + rng.gauss(sigma)).sum();
            Ok((noised, 1, 0))
        }
        PrivacyModel::Shuffle => {
            let sp = scalar_shuffle_params(bound, params.epsilon, params.delta, values.len())?;
            let o = scalar_shuffle_sum_with(values, &sp, rng)?;
            Ok((o, 0, sp.bits_per_client()))
        }
    }
}
