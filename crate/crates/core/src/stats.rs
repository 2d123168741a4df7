//! Wilcoxon signed rank test for paired and possibly right-censored runtimes,
//! censoring thresholds, and a paired t-test.
//!
//! Differences are always taken as `d = t(first) - t(second)`. A small `W+`
//! means the first strategy tends to be faster.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::StatsError;

/// Largest `n` for which the exact null distribution is computed.
pub const MAX_EXACT_N: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    pub rank: f64,
    pub sign: i8,
}

/// Ranks of `|d|` with zeros dropped and ties averaged, in input order.
pub fn signed_ranks(diffs: &[f64]) -> Vec<SignedRank> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let mut order: Vec<usize> = (0..nonzero.len()).collect();
    order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
    let mut ranks = vec![0.0; nonzero.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && nonzero[order[j]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    nonzero
        .iter()
        .zip(ranks)
        .map(|(d, rank)| SignedRank {
            rank,
            sign: if *d > 0.0 { 1 } else { -1 },
        })
        .collect()
}

/// Sum of the ranks of the positive differences.
pub fn wplus(diffs: &[f64]) -> Result<f64, StatsError> {
    let ranks = signed_ranks(diffs);
    if ranks.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(ranks
        .iter()
        .filter(|r| r.sign > 0)
        .map(|r| r.rank)
        .fold(0.0, |a, r| a + r))
}

/// Number of sign vectors over ranks `1..=n` giving each value of `W+`, index `0..=n(n+1)/2`.
pub fn wsr_exact_counts(n: usize) -> Result<Vec<u64>, StatsError> {
    if n > MAX_EXACT_N {
        return Err(StatsError::ExactTooLarge {
            n,
            max: MAX_EXACT_N,
        });
    }
    let top = n * (n + 1) / 2;
    let mut counts = vec![0u64; top + 1];
    counts[0] = 1;
    for r in 1..=n {
        for w in (r..=r * (r + 1) / 2).rev() {
            counts[w] += counts[w - r];
        }
    }
    Ok(counts)
}

/// `P(W+ <= w)` under the null hypothesis, without ties.
pub fn wsr_exact_cdf(n: usize, w: f64) -> Result<f64, StatsError> {
    let counts = wsr_exact_counts(n)?;
    if w < 0.0 {
        return Ok(0.0);
    }
    let upto = (w.floor() as usize).min(counts.len() - 1);
    let below: u64 = counts[..=upto].iter().sum();
    Ok(below as f64 / (1u64 << n) as f64)
}

/// Null mean and standard deviation of `W+`, the variance reduced by `tie_correction`.
fn moments(n: usize, tie_correction: f64) -> (f64, f64) {
    let n = n as f64;
    let mu = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_correction;
    (mu, var.max(0.0).sqrt())
}

/// `sum(t^3 - t) / 48` over the sizes `t` of groups of equal values.
pub fn tie_correction(abs_values: &[f64]) -> f64 {
    let mut v = abs_values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total / 48.0
}

/// Lower-tail `P(W+ <= w)` from the normal approximation with continuity correction.
pub fn wsr_normal_pvalue(n: usize, w: f64, tie_correction: f64) -> Result<f64, StatsError> {
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let (mu, sigma) = moments(n, tie_correction);
    if sigma <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let std = Normal::standard();
    Ok(std.cdf((w + 0.5 - mu) / sigma).clamp(0.0, 1.0))
}

fn normal_upper(n: usize, w: f64, tie_correction: f64) -> Result<f64, StatsError> {
    let (mu, sigma) = moments(n, tie_correction);
    if sigma <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let std = Normal::standard();
    Ok(std.sf((w - 0.5 - mu) / sigma).clamp(0.0, 1.0))
}

/// Paired differences `t(first) - t(second)`; `censored[j]` marks a timeout of the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDiffs {
    pub diffs: Vec<f64>,
    pub censor_flags: Vec<bool>,
}

impl PairedDiffs {
    pub fn new(diffs: Vec<f64>, censor_flags: Vec<bool>) -> Result<Self, StatsError> {
        if diffs.len() != censor_flags.len() {
            return Err(StatsError::LengthMismatch {
                a: diffs.len(),
                b: censor_flags.len(),
            });
        }
        Ok(PairedDiffs {
            diffs,
            censor_flags,
        })
    }

    pub fn uncensored(diffs: Vec<f64>) -> Self {
        let censor_flags = vec![false; diffs.len()];
        PairedDiffs {
            diffs,
            censor_flags,
        }
    }

    pub fn from_times(
        first: &[f64],
        second: &[f64],
        second_censored: &[bool],
    ) -> Result<Self, StatsError> {
        if first.len() != second.len() {
            return Err(StatsError::LengthMismatch {
                a: first.len(),
                b: second.len(),
            });
        }
        let diffs = first.iter().zip(second).map(|(a, b)| a - b).collect();
        Self::new(diffs, second_censored.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    NormalCC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// The first strategy is significantly faster.
    FirstBetter,
    NotSignificant,
    /// The second strategy is significantly faster.
    SecondBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsrResult {
    pub n: usize,
    pub w_plus: f64,
    pub mu: f64,
    pub sigma: f64,
    /// `P(W+ <= w_plus)`.
    pub p_value: f64,
    /// `P(W+ >= w_plus)`.
    pub p_upper: f64,
    pub method: Method,
    pub decision: Decision,
}

/// One-tailed signed rank test in both directions at level `alpha`.
///
/// Tie groups are counted among uncensored differences only: censored
/// magnitudes are arbitrary, so they never decide the method or the variance.
pub fn wsr_test(pd: &PairedDiffs, alpha: f64) -> WsrResult {
    let ranked: Vec<(f64, bool)> = pd
        .diffs
        .iter()
        .zip(&pd.censor_flags)
        .filter(|(d, _)| **d != 0.0)
        .map(|(d, c)| (*d, *c))
        .collect();
    let n = ranked.len();
    let (mu, sigma) = moments(n, 0.0);
    let inconclusive = |w_plus: f64, method| WsrResult {
        n,
        w_plus,
        mu,
        sigma,
        p_value: 1.0,
        p_upper: 1.0,
        method,
        decision: Decision::NotSignificant,
    };
    if n == 0 {
        return inconclusive(0.0, Method::Exact);
    }
    let diffs: Vec<f64> = ranked.iter().map(|r| r.0).collect();
    let w = wplus(&diffs).expect("non-empty");
    let plain: Vec<f64> = ranked.iter().filter(|r| !r.1).map(|r| r.0.abs()).collect();
    let tc = tie_correction(&plain);
    let (method, lower, upper) = if tc == 0.0 && n <= MAX_EXACT_N {
        let top = (n * (n + 1) / 2) as f64;
        let lower = wsr_exact_cdf(n, w).expect("n within cap");
        let upper = wsr_exact_cdf(n, top - w).expect("n within cap");
        (Method::Exact, lower, upper)
    } else {
        match (wsr_normal_pvalue(n, w, tc), normal_upper(n, w, tc)) {
            (Ok(l), Ok(u)) => (Method::NormalCC, l, u),
            _ => return inconclusive(w, Method::NormalCC),
        }
    };
    let sigma = moments(n, tc).1;
    let decision = if lower <= alpha {
        Decision::FirstBetter
    } else if upper <= alpha {
        Decision::SecondBetter
    } else {
        Decision::NotSignificant
    };
    WsrResult {
        n,
        w_plus: w,
        mu,
        sigma,
        p_value: lower,
        p_upper: upper,
        method,
        decision,
    }
}

/// Re-solve thresholds that make censoring invisible to `W+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensorPlan {
    /// Largest positive difference, 0 when there is none.
    pub d_max: f64,
    pub thresholds: Vec<f64>,
}

/// `to(j) = d_max + best(j) + 1`.
pub fn censor_plan(best_times: &[f64], diffs_observed: &[f64]) -> CensorPlan {
    let d_max = diffs_observed
        .iter()
        .copied()
        .filter(|d| *d > 0.0)
        .fold(0.0, f64::max);
    CensorPlan {
        d_max,
        thresholds: best_times.iter().map(|t| d_max + t + 1.0).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
    pub mean_diff: f64,
    pub decision: Decision,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs { need: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = nf - 1.0;
    let direction = if mean > 0.0 {
        Decision::SecondBetter
    } else {
        Decision::FirstBetter
    };
    if var <= f64::EPSILON * mean.abs().max(1.0) {
        let (t, p, decision) = if mean == 0.0 {
            (0.0, 1.0, Decision::NotSignificant)
        } else {
            (mean.signum() * f64::INFINITY, 0.0, direction)
        };
        return Ok(TTestResult {
            t,
            df,
            p_value: p,
            mean_diff: mean,
            decision,
        });
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    let decision = if p <= alpha {
        direction
    } else {
        Decision::NotSignificant
    };
    Ok(TTestResult {
        t,
        df,
        p_value: p,
        mean_diff: mean,
        decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S1: [f64; 10] = [62., 90., 155., 231., 198., 146., 62., 63., 167., 83.];
    const S3: [f64; 10] = [80., 92., 158., 250., 197., 170., 54., 111., 163., 120.];

    fn enumerate(n: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n * (n + 1) / 2 + 1];
        for mask in 0u32..(1 << n) {
            let w: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
            counts[w] += 1;
        }
        counts
    }

    #[test]
    fn ranks_of_the_worked_pair() {
        let d: Vec<f64> = S1.iter().zip(S3).map(|(a, b)| a - b).collect();
        assert_eq!(d, vec![-18., -2., -3., -19., 1., -24., 8., -48., 4., -37.]);
        let signed: Vec<f64> = signed_ranks(&d)
            .iter()
            .map(|r| r.rank * r.sign as f64)
            .collect();
        assert_eq!(signed, vec![-6., -2., -3., -7., 1., -8., 5., -10., 4., -9.]);
        assert_eq!(wplus(&d).unwrap(), 10.0);
        let r = wsr_test(&PairedDiffs::uncensored(d), 0.05);
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.decision, Decision::FirstBetter);
    }

    #[test]
    fn zeros_and_ties() {
        assert_eq!(
            signed_ranks(&[0., 0., 5.]),
            vec![SignedRank { rank: 1.0, sign: 1 }]
        );
        let r: Vec<_> = signed_ranks(&[1., -1., 2.])
            .iter()
            .map(|r| (r.rank, r.sign))
            .collect();
        assert_eq!(r, vec![(1.5, 1), (1.5, -1), (3.0, 1)]);
        assert_eq!(wplus(&[-1., -2.]).unwrap(), 0.0);
        assert_eq!(wplus(&[1., 2., 3., 4.]).unwrap(), 10.0);
        assert_eq!(wplus(&[0.0]), Err(StatsError::EmptySample));
    }

    #[test]
    fn exact_cdf_values() {
        assert_eq!(wsr_exact_cdf(3, 0.0).unwrap(), 0.125);
        assert_eq!(wsr_exact_cdf(1, 0.0).unwrap(), 0.5);
        assert!(wsr_exact_cdf(10, 10.0).unwrap() <= 0.05);
        assert!(wsr_exact_cdf(10, 11.0).unwrap() > 0.05);
        assert!(matches!(
            wsr_exact_cdf(51, 3.0),
            Err(StatsError::ExactTooLarge { .. })
        ));
        assert_eq!(
            wsr_exact_counts(50).unwrap().iter().sum::<u64>(),
            1u64 << 50
        );
    }

    #[test]
    fn exact_matches_enumeration() {
        for n in 1..=12 {
            let counts = wsr_exact_counts(n).unwrap();
            assert_eq!(counts, enumerate(n), "n={n}");
            let top = counts.len() - 1;
            for w in 0..=top {
                assert_eq!(counts[w], counts[top - w]);
                let cdf: u64 = counts[..=w].iter().sum();
                assert_eq!(
                    wsr_exact_cdf(n, w as f64).unwrap(),
                    cdf as f64 / (1u64 << n) as f64
                );
            }
        }
    }

    #[test]
    fn normal_close_to_exact_at_twenty() {
        for w in 0..=210 {
            let e = wsr_exact_cdf(20, w as f64).unwrap();
            let a = wsr_normal_pvalue(20, w as f64, 0.0).unwrap();
            assert!((e - a).abs() <= 0.02, "w={w} exact={e} normal={a}");
        }
        let n = 10;
        assert!(
            (wsr_normal_pvalue(n, 10.0, 0.0).unwrap() - wsr_exact_cdf(n, 10.0).unwrap()).abs()
                < 0.02
        );
        let mu = 27.5;
        assert!((wsr_normal_pvalue(n, mu - 0.5, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(wsr_normal_pvalue(n, 55.0, 0.0).unwrap() > 0.99);
        assert_eq!(
            wsr_normal_pvalue(1, 0.0, 0.25),
            Err(StatsError::DegenerateVariance)
        );
    }

    #[test]
    fn test_directions() {
        let same = PairedDiffs::uncensored(vec![0.0; 8]);
        let r = wsr_test(&same, 0.05);
        assert_eq!((r.n, r.decision), (0, Decision::NotSignificant));
        let slower = PairedDiffs::uncensored((1..=10).map(f64::from).collect());
        let r = wsr_test(&slower, 0.05);
        assert_eq!(r.w_plus, 55.0);
        assert_eq!(r.p_upper, 1.0 / 1024.0);
        assert_eq!(r.decision, Decision::SecondBetter);
        let tied = PairedDiffs::uncensored(vec![-1., -1., -2., -3., -4., -5., -6., -7., -8., 1.]);
        let r = wsr_test(&tied, 0.05);
        assert_eq!(r.method, Method::NormalCC);
        assert_eq!(r.decision, Decision::FirstBetter);
    }

    #[test]
    fn plans() {
        let p = censor_plan(&[10., 20.], &[-5., 2., -1.]);
        assert_eq!(p.d_max, 2.0);
        assert_eq!(p.thresholds, vec![13., 23.]);
        assert_eq!(censor_plan(&[4.], &[-3.]).thresholds, vec![5.]);
        let p = censor_plan(&[7.; 3], &[5., -1., 0.]);
        assert_eq!(p.thresholds, vec![13.; 3]);
    }

    #[test]
    fn ttest_cases() {
        let a = [1., 2., 3., 4.];
        assert_eq!(
            paired_ttest(&a, &a, 0.05).unwrap().decision,
            Decision::NotSignificant
        );
        let b: Vec<f64> = (0..10).map(|i| 50.0 + i as f64).collect();
        let noise = [0.1, -0.2, 0.05, 0.0, 0.15, -0.1, 0.2, -0.05, 0.1, -0.15];
        let a: Vec<f64> = b.iter().zip(noise).map(|(x, e)| x + 10.0 + e).collect();
        let r = paired_ttest(&a, &b, 0.05).unwrap();
        // mean 10.01, sd 0.1287..., t = 10.01 / (sd / sqrt(10))
        let sd = (noise.iter().map(|e| (e - 0.01f64).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((r.t - 10.01 / (sd / 10f64.sqrt())).abs() < 1e-9);
        assert_eq!(r.decision, Decision::SecondBetter);
        assert_eq!(
            paired_ttest(&[1., 0.], &[0., 1.], 0.05).unwrap().decision,
            Decision::NotSignificant
        );
        assert_eq!(
            paired_ttest(&[3., 4.], &[1., 2.], 0.05).unwrap().decision,
            Decision::SecondBetter
        );
        assert!(matches!(
            paired_ttest(&[1.], &[2.], 0.05),
            Err(StatsError::TooFewPairs { .. })
        ));
    }

    proptest! {
        #[test]
        fn rank_sum_is_conserved(d in prop::collection::vec(-20i32..20, 0..40)) {
            let d: Vec<f64> = d.into_iter().map(f64::from).collect();
            let m = d.iter().filter(|x| **x != 0.0).count() as f64;
            let total: f64 = signed_ranks(&d).iter().map(|r| r.rank).sum();
            prop_assert_eq!(total, m * (m + 1.0) / 2.0);
        }

        #[test]
        fn censoring_above_threshold_keeps_wplus(
            rows in prop::collection::vec((1u32..500, 1u32..500), 1..60),
            lift in prop::collection::vec(0u32..1000, 60),
        ) {
            let best: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
            let other: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
            let d: Vec<f64> = best.iter().zip(&other).map(|(a, b)| a - b).collect();
            let plan = censor_plan(&best, &d);
            let censored: Vec<f64> = other
                .iter()
                .zip(&plan.thresholds)
                .zip(&lift)
                .map(|((o, to), l)| if o >= to { to + *l as f64 } else { *o })
                .collect();
            let dc: Vec<f64> = best.iter().zip(&censored).map(|(a, b)| a - b).collect();
            if d.iter().any(|x| *x != 0.0) {
                prop_assert_eq!(wplus(&d).unwrap(), wplus(&dc).unwrap());
            }
        }
    }
}
