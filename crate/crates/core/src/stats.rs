//! Small statistics helpers used by the harness summaries and by the
//! trend oracles in the test suites.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let s = sample_std(xs);
    s * s
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Slope of `ln(y)` against `ln(x)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    ols_slope(&lx, &ly)
}

/// One-sided Mann-Whitney U test p-value for the alternative "samples in
/// `a` are stochastically greater than samples in `b`", using the normal
/// approximation with tie correction and continuity correction.
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> f64 {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    assert!(n1 > 0.0 && n2 > 0.0);

    let mut all: Vec<(f64, usize)> = a
        .iter()
        .map(|&x| (x, 0usize))
        .chain(b.iter().map(|&x| (x, 1usize)))
        .collect();
    all.sort_by(|p, q| p.0.total_cmp(&q.0));

    // Average ranks over tie groups and accumulate the tie correction.
    let n = all.len();
    let mut ranks = vec![0.0f64; n];
    let mut tie_term = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // ranks are 1-based
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = avg_rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let r1: f64 = all
        .iter()
        .zip(&ranks)
        .filter(|((_, grp), _)| *grp == 0)
        .map(|(_, &r)| r)
        .sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nt = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if var <= 0.0 {
        return 0.5;
    }
    let z = (u1 - mu - 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_recovers_power_law() {
        let xs: Vec<f64> = vec![1e4, 1e5, 1e6];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.8)).collect();
        assert!((log_log_slope(&xs, &ys) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_detects_separation() {
        let a: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
        assert!(mann_whitney_greater(&a, &b) < 0.001);
        assert!(mann_whitney_greater(&b, &a) > 0.999);
    }

    #[test]
    fn mann_whitney_is_neutral_on_identical_samples() {
        let a = vec![1.0; 10];
        let b = vec![1.0; 10];
        let p = mann_whitney_greater(&a, &b);
        assert!(p >= 0.45 && p <= 0.65, "p = {p}");
    }

    #[test]
    fn basic_moments() {
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-12);
    }
}
