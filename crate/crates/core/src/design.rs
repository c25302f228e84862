//! Near-G-optimal experiment design over a finite action set.
//!
//! The solver runs Frank-Wolfe on the D-optimal objective `log det V(pi)`
//! starting from uniform weights, taking the exact line-search step along
//! the steepest vertex direction, and stops as soon as the design value
//! `g(pi) = max_x ||x||^2_{V(pi)^-1}` drops to twice the effective
//! dimension. Rank-deficient action sets are handled by solving inside
//! `span(D)` and mapping the weights back.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap for the Frank-Wolfe solver; desk-scale sets converge in
/// hundreds of steps.
const FRANK_WOLFE_CAP: usize = 10_000;

/// Weights below this threshold are pruned from the support after
/// convergence.
const PRUNE_THRESHOLD: f64 = 1e-6;

/// Relative eigenvalue tolerance used to detect the span of an action set.
const SPAN_TOL: f64 = 1e-9;

/// Upper bound on the support size of a near-G-optimal design:
/// `max(16, ceil(4 d ln ln d) + 16)` with the double logarithm clamped at
/// zero where it would go negative.
pub fn support_bound(d: usize) -> usize {
    if d < 2 {
        return 16;
    }
    let ll = (d as f64).ln().ln().max(0.0);
    16 + (4.0 * d as f64 * ll).ceil() as usize
}

/// A finite decision set of `k` actions in `R^d`, each with squared
/// Euclidean norm at most one.
#[derive(Debug, Clone)]
pub struct DecisionSet {
    actions: Vec<Vec<f64>>,
    d: usize,
}

impl DecisionSet {
    pub fn new(actions: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidInput("decision set must be non-empty".into()));
        }
        let d = actions[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("actions must have dimension >= 1".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            if a.len() != d {
                return Err(Error::InvalidInput(format!(
                    "action {i} has dimension {} but expected {d}",
                    a.len()
                )));
            }
            let sq = a.iter().map(|v| v * v).sum::<f64>();
            if !(sq.is_finite() && sq <= 1.0 + 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "action {i} has squared norm {sq:.6}, which exceeds 1"
                )));
            }
        }
        Ok(Self { actions, d })
    }

    pub fn k(&self) -> usize {
        self.actions.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i]
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }
}

/// A probability distribution over an action list together with its design
/// value and effective dimension.
#[derive(Debug, Clone)]
pub struct DesignDistribution {
    weights: Vec<f64>,
    support: Vec<usize>,
    g_value: f64,
    d_eff: usize,
}

impl DesignDistribution {
    /// Probability weight of each action, aligned with the input list.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices with non-zero weight, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `max_x ||x||^2_{V(pi)^-1}` over the whole action list.
    pub fn g_value(&self) -> f64 {
        self.g_value
    }

    /// Dimension of the span of the action list.
    pub fn d_eff(&self) -> usize {
        self.d_eff
    }
}

/// Integer pull counts derived from a design.
#[derive(Debug, Clone)]
pub struct PullAllocation {
    /// `(action index, pull count)` for each supported action, ascending.
    pub counts: Vec<(usize, u64)>,
    /// Total pulls `T_l = sum of counts`.
    pub total: u64,
}

/// Rounds a design into pull counts: `count(x) = ceil(h * pi(x))` on the
/// support, zero elsewhere, so `h <= total <= h + |support|`.
pub fn allocate_pulls(design: &DesignDistribution, h: u64) -> PullAllocation {
    debug_assert!(h >= 1, "phase budget must be at least 1");
    let mut counts = Vec::with_capacity(design.support.len());
    let mut total = 0u64;
    for &i in &design.support {
        let c = (h as f64 * design.weights[i]).ceil() as u64;
        if c > 0 {
            counts.push((i, c));
            total += c;
        }
    }
    PullAllocation { counts, total }
}

/// Orthonormal basis of `span(actions)` detected from the eigenvalues of
/// `sum_x x x^T` at relative tolerance `SPAN_TOL`.
fn span_basis(actions: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::<f64>::zeros(d, d);
    for a in actions {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += a[i] * a[j];
            }
        }
    }
    let eig = m.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max_ev <= 0.0 {
        return Err(Error::InvalidInput(
            "active set spans a zero-dimensional subspace".into(),
        ));
    }
    let keep: Vec<usize> = (0..d)
        .filter(|&i| eig.eigenvalues[i] > SPAN_TOL * max_ev)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(d, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(basis)
}

/// Leverage scores `z_i^T V(pi)^{-1} z_i` for every action and their max.
fn leverages(z: &[DVector<f64>], weights: &[f64], r: usize) -> Result<(Vec<f64>, f64)> {
    let mut v = DMatrix::<f64>::zeros(r, r);
    for (zi, &w) in z.iter().zip(weights) {
        if w > 0.0 {
            v.syger(w, zi, zi, 1.0);
        }
    }
    let chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("design information matrix not positive definite".into()))?;
    let mut scores = Vec::with_capacity(z.len());
    let mut g = 0.0f64;
    for zi in z {
        let s = chol.solve(zi).dot(zi);
        g = g.max(s);
        scores.push(s);
    }
    Ok((scores, g))
}

struct FwState {
    weights: Vec<f64>,
    g: f64,
    iters_used: usize,
}

/// Frank-Wolfe iterations until `g <= target`, updating `state` in place.
fn frank_wolfe(z: &[DVector<f64>], r: usize, target: f64, state: &mut FwState) -> Result<()> {
    let (mut scores, mut g) = leverages(z, &state.weights, r)?;
    while g > target && state.iters_used < FRANK_WOLFE_CAP {
        state.iters_used += 1;
        let best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty action list");
        let rf = r as f64;
        // Exact line search for log det along the vertex direction.
        let gamma = ((g - rf) / (rf * (g - 1.0))).clamp(0.0, 1.0);
        if gamma <= 0.0 {
            break;
        }
        for w in state.weights.iter_mut() {
            *w *= 1.0 - gamma;
        }
        state.weights[best] += gamma;
        let (s, gg) = leverages(z, &state.weights, r)?;
        scores = s;
        g = gg;
    }
    state.g = g;
    Ok(())
}

/// Drops weights below `PRUNE_THRESHOLD` and renormalizes.
fn prune(weights: &mut [f64]) {
    let mut kept = 0.0;
    for w in weights.iter_mut() {
        if *w < PRUNE_THRESHOLD {
            *w = 0.0;
        } else {
            kept += *w;
        }
    }
    if kept > 0.0 {
        for w in weights.iter_mut() {
            *w /= kept;
        }
    }
}

/// Merges the smallest weights into their nearest (inner-product) supported
/// action until the support fits `bound`.
fn merge_to_bound(actions: &[Vec<f64>], weights: &mut [f64], bound: usize) {
    loop {
        let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if support.len() <= bound {
            return;
        }
        let &donor = support
            .iter()
            .min_by(|&&a, &&b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)))
            .expect("non-empty support");
        let recipient = support
            .iter()
            .copied()
            .filter(|&j| j != donor)
            .max_by(|&a, &b| {
                let da = dot(&actions[donor], &actions[a]);
                let db = dot(&actions[donor], &actions[b]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("support has at least two actions");
        weights[recipient] += weights[donor];
        weights[donor] = 0.0;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes a near-G-optimal design over `actions` with the standard target
/// `g(pi) <= 2 d_eff`. See [`compute_design_with_target`] for a tighter
/// target factor.
pub fn compute_near_g_optimal(actions: &[Vec<f64>]) -> Result<DesignDistribution> {
    compute_design_with_target(actions, 2.0)
}

/// Near-G-optimal design with target `g(pi) <= target_factor * d_eff`.
/// `target_factor` must be > 1; the Kiefer-Wolfowitz bound makes values at
/// or below 1 infeasible.
pub fn compute_design_with_target(
    actions: &[Vec<f64>],
    target_factor: f64,
) -> Result<DesignDistribution> {
    if actions.is_empty() {
        return Err(Error::InvalidInput("active set must be non-empty".into()));
    }
    if !(target_factor > 1.0) {
        return Err(Error::InvalidInput(
            "design target factor must exceed 1".into(),
        ));
    }
    let k = actions.len();

    // Solve in a canonical (lexicographic) ordering of the actions so the
    // result is exactly permutation invariant, then map weights back.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| lex_cmp(&actions[a], &actions[b]));
    let canonical: Vec<Vec<f64>> = order.iter().map(|&i| actions[i].clone()).collect();
    let solved = solve_canonical(&canonical, target_factor)?;
    let mut weights = vec![0.0; k];
    for (pos, &orig) in order.iter().enumerate() {
        weights[orig] = solved.weights[pos];
    }
    let mut support: Vec<usize> = (0..k).filter(|&i| weights[i] > 0.0).collect();
    support.sort_unstable();
    Ok(DesignDistribution {
        weights,
        support,
        g_value: solved.g_value,
        d_eff: solved.d_eff,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn solve_canonical(actions: &[Vec<f64>], target_factor: f64) -> Result<DesignDistribution> {
    let d = actions[0].len();
    let basis = span_basis(actions, d)?;
    let r = basis.ncols();
    let z: Vec<DVector<f64>> = actions
        .iter()
        .map(|a| basis.transpose() * DVector::from_column_slice(a))
        .collect();

    let k = actions.len();
    let target = target_factor * r as f64;
    let bound = support_bound(r);
    let mut state = FwState {
        weights: vec![1.0 / k as f64; k],
        g: f64::INFINITY,
        iters_used: 0,
    };

    let mut best_g = f64::INFINITY;
    for _round in 0..3 {
        frank_wolfe(&z, r, target, &mut state)?;
        best_g = best_g.min(state.g);
        if state.g > target {
            break; // iteration cap exhausted
        }
        prune(&mut state.weights);
        let (_, g_pruned) = leverages(&z, &state.weights, r)?;
        state.g = g_pruned;
        best_g = best_g.min(state.g);
        if state.g > target {
            continue; // pruning pushed g back over the target; iterate more
        }
        merge_to_bound(actions, &mut state.weights, bound);
        let (_, g_merged) = leverages(&z, &state.weights, r)?;
        state.g = g_merged;
        let support: Vec<usize> = (0..k).filter(|&i| state.weights[i] > 0.0).collect();
        if state.g <= target && support.len() <= bound {
            return Ok(DesignDistribution {
                weights: state.weights,
                support,
                g_value: state.g,
                d_eff: r,
            });
        }
    }
    Err(Error::DesignNonConvergence {
        best_g_value: best_g,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis(d: usize) -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                v
            })
            .collect()
    }

    #[test]
    fn standard_basis_gets_uniform_weights() {
        for d in [2usize, 3, 7] {
            let design = compute_near_g_optimal(&basis(d)).unwrap();
            for &w in design.weights() {
                assert!((w - 1.0 / d as f64).abs() < 1e-12);
            }
            assert!((design.g_value() - d as f64).abs() < 1e-9);
            assert_eq!(design.d_eff(), d);
            assert_eq!(design.support().len(), d);
        }
    }

    #[test]
    fn single_action_is_a_one_point_design() {
        let design = compute_near_g_optimal(&[vec![0.3, 0.4, 0.0]]).unwrap();
        assert_eq!(design.support(), &[0]);
        assert!((design.weights()[0] - 1.0).abs() < 1e-12);
        assert!((design.g_value() - 1.0).abs() < 1e-9);
        assert_eq!(design.d_eff(), 1);
    }

    /// Exhaustive grid over the 2-simplex at resolution 1e-3 minimizing
    /// g(pi); independent of the Frank-Wolfe path.
    fn grid_oracle(actions: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let n = 1000u32;
        let mut best = (f64::INFINITY, vec![0.0; 3]);
        for i in 0..=n {
            for j in 0..=(n - i) {
                let w = [
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    (n - i - j) as f64 / n as f64,
                ];
                // V(pi) in 2x2 closed form.
                let mut v = [[0.0f64; 2]; 2];
                for (a, &wa) in actions.iter().zip(&w) {
                    for r in 0..2 {
                        for c in 0..2 {
                            v[r][c] += wa * a[r] * a[c];
                        }
                    }
                }
                let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
                if det <= 1e-12 {
                    continue;
                }
                let inv = [
                    [v[1][1] / det, -v[0][1] / det],
                    [-v[1][0] / det, v[0][0] / det],
                ];
                let mut g = 0.0f64;
                for a in actions {
                    let q = a[0] * (inv[0][0] * a[0] + inv[0][1] * a[1])
                        + a[1] * (inv[1][0] * a[0] + inv[1][1] * a[1]);
                    g = g.max(q);
                }
                if g < best.0 {
                    best = (g, w.to_vec());
                }
            }
        }
        best
    }

    #[test]
    fn three_action_design_matches_grid_oracle() {
        let actions = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7, 0.7]];
        let (g_star, w_star) = grid_oracle(&actions);
        // The Kiefer-Wolfowitz optimum for a spanning set in R^2 is 2.
        assert!((g_star - 2.0).abs() < 1e-2);

        let design = compute_design_with_target(&actions, 1.0005).unwrap();
        assert!(design.g_value() <= 1.0005 * 2.0 + 1e-9);
        assert!((design.g_value() - g_star).abs() < 1e-2);
        for (ours, oracle) in design.weights().iter().zip(&w_star) {
            assert!((ours - oracle).abs() < 5e-2, "weights {ours} vs {oracle}");
        }

        // The default target is also satisfied, together with both bounds.
        let loose = compute_near_g_optimal(&actions).unwrap();
        assert!(loose.g_value() <= 2.0 * loose.d_eff() as f64 + 1e-9);
        assert!(loose.g_value() >= loose.d_eff() as f64 - 1e-9);
    }

    #[test]
    fn rank_deficient_sets_solve_in_their_span() {
        // Three collinear actions in R^3: span has dimension 1.
        let actions = vec![
            vec![0.5, 0.5, 0.0],
            vec![0.25, 0.25, 0.0],
            vec![-0.5, -0.5, 0.0],
        ];
        let design = compute_near_g_optimal(&actions).unwrap();
        assert_eq!(design.d_eff(), 1);
        assert!(design.g_value() <= 2.0 + 1e-9);
        assert!(design.g_value() >= 1.0 - 1e-9);
    }

    #[test]
    fn allocate_pulls_examples() {
        let design = DesignDistribution {
            weights: vec![0.5, 0.5],
            support: vec![0, 1],
            g_value: 2.0,
            d_eff: 2,
        };
        let alloc = allocate_pulls(&design, 3);
        assert_eq!(alloc.counts, vec![(0, 2), (1, 2)]);
        assert_eq!(alloc.total, 4);

        let one = DesignDistribution {
            weights: vec![1.0],
            support: vec![0],
            g_value: 1.0,
            d_eff: 1,
        };
        let alloc = allocate_pulls(&one, 7);
        assert_eq!(alloc.counts, vec![(0, 7)]);
        assert_eq!(alloc.total, 7);

        let three = DesignDistribution {
            weights: vec![0.34, 0.33, 0.33],
            support: vec![0, 1, 2],
            g_value: 2.0,
            d_eff: 2,
        };
        let alloc = allocate_pulls(&three, 10);
        assert_eq!(alloc.counts, vec![(0, 4), (1, 4), (2, 4)]);
        assert_eq!(alloc.total, 12);
    }

    #[test]
    fn decision_set_rejects_bad_inputs() {
        assert!(DecisionSet::new(vec![]).is_err());
        assert!(DecisionSet::new(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        assert!(DecisionSet::new(vec![vec![1.2, 0.0]]).is_err());
        assert!(DecisionSet::new(vec![vec![0.6, 0.6]]).is_ok()); // norm^2 = 0.72
        assert!(DecisionSet::new(vec![vec![0.8, 0.8]]).is_err()); // norm^2 = 1.28
    }

    fn random_actions(seed: u64, k: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::SimRng::seed_from(seed);
        (0..k).map(|_| rng.unit_sphere(d)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn design_bounds_hold_on_random_sets(seed in 0u64..1000, k in 6usize..40, d in 2usize..6) {
            let actions = random_actions(seed, k, d);
            let design = compute_near_g_optimal(&actions).unwrap();
            let r = design.d_eff() as f64;
            prop_assert!(design.g_value() <= 2.0 * r + 1e-9);
            prop_assert!(design.g_value() >= r - 1e-6);
            prop_assert!(design.support().len() <= support_bound(design.d_eff()));
            let sum: f64 = design.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(design.weights().iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn allocation_totals_are_bounded(seed in 0u64..1000, k in 3usize..30, d in 2usize..5, h in 1u64..5000) {
            let actions = random_actions(seed, k, d);
            let design = compute_near_g_optimal(&actions).unwrap();
            let alloc = allocate_pulls(&design, h);
            prop_assert!(alloc.total >= h);
            prop_assert!(alloc.total <= h + design.support().len() as u64);
        }

        #[test]
        fn design_value_is_permutation_invariant(seed in 0u64..500, k in 4usize..20, d in 2usize..5) {
            let actions = random_actions(seed, k, d);
            let mut reversed = actions.clone();
            reversed.reverse();
            let a = compute_near_g_optimal(&actions).unwrap();
            let b = compute_near_g_optimal(&reversed).unwrap();
            prop_assert!((a.g_value() - b.g_value()).abs() < 1e-6);
        }
    }
}
