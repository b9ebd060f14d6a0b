//! Friedman test, Wilcoxon signed-rank test, Bonferroni correction and the
//! summaries used to compare configurations over paired instances.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("matrix needs at least 2 rows and 2 columns, got {rows}x{cols}")]
    Dimension { rows: usize, cols: usize },
    #[error("row {row} has {len} cells, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("paired samples differ in length ({0} vs {1}) or have fewer than 2 pairs")]
    PairLength(usize, usize),
    #[error("baseline value is zero")]
    ZeroBaseline,
    #[error("no values")]
    Empty,
}

/// Whether larger metric values are better (objective) or worse (time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "friedman")]
    Friedman,
    #[serde(rename = "wilcoxon-exact")]
    WilcoxonExact,
    #[serde(rename = "wilcoxon-normal")]
    WilcoxonNormal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Friedman => "friedman",
            Method::WilcoxonExact => "wilcoxon-exact",
            Method::WilcoxonNormal => "wilcoxon-normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub method: Method,
}

impl TestResult {
    pub fn significant(&self) -> bool {
        self.p_value < self.alpha
    }
}

/// Ranks in ascending order of value, starting at 1; ties share the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &t in &idx[i..j] {
            ranks[t] = r;
        }
        i = j;
    }
    ranks
}

fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Rows are instances, columns configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub baseline: usize,
}

impl PairedMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>, baseline: usize) -> Result<Self, StatsError> {
        let k = labels.len();
        if rows.len() < 2 || k < 2 || baseline >= k {
            return Err(StatsError::Dimension { rows: rows.len(), cols: k });
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(StatsError::Ragged {
                    row: r,
                    len: row.len(),
                    expected: k,
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite { row: r, col: c });
            }
        }
        Ok(Self { labels, rows, baseline })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Mean within-row rank of each column; rank 1 is the best value.
    pub fn mean_ranks(&self, direction: Direction) -> Vec<f64> {
        let k = self.n_cols();
        let mut sums = vec![0.0; k];
        for row in &self.rows {
            let oriented: Vec<f64> = match direction {
                Direction::LowerIsBetter => row.clone(),
                Direction::HigherIsBetter => row.iter().map(|v| -v).collect(),
            };
            for (s, r) in sums.iter_mut().zip(average_ranks(&oriented)) {
                *s += r;
            }
        }
        sums.iter().map(|s| s / self.n_rows() as f64).collect()
    }
}

/// How the Friedman p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FriedmanPValue {
    /// Seeded Monte Carlo over independent within-row permutations of the ranks.
    Permutation { draws: usize, seed: u64 },
    /// Asymptotic chi-square with `k - 1` degrees of freedom.
    ChiSquare,
}

impl Default for FriedmanPValue {
    fn default() -> Self {
        FriedmanPValue::Permutation {
            draws: 100_000,
            seed: 0x5eed_f12e_d3a4,
        }
    }
}

/// Tie-corrected Friedman statistic and p-value.
///
/// The statistic does not depend on the ranking direction; `p_method`
/// chooses between the permutation distribution and the chi-square limit.
pub fn friedman(m: &PairedMatrix, alpha: f64, p_method: FriedmanPValue) -> TestResult {
    let n = m.n_rows() as f64;
    let k = m.n_cols();
    let kf = k as f64;
    let ranks: Vec<Vec<f64>> = m.rows.iter().map(|r| average_ranks(r)).collect();
    let ties: f64 = m.rows.iter().map(|r| tie_term(r)).sum();
    let correction = 1.0 - ties / (n * (kf * kf * kf - kf));
    let sum_sq = |ranks: &[Vec<f64>]| -> f64 {
        (0..k)
            .map(|j| {
                let s: f64 = ranks.iter().map(|r| r[j]).sum();
                s * s
            })
            .sum()
    };
    let stat_of = |ssq: f64| -> f64 {
        let raw = 12.0 / (n * kf * (kf + 1.0)) * ssq - 3.0 * n * (kf + 1.0);
        (raw / correction).max(0.0)
    };
    if correction <= 1e-12 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            alpha,
            method: Method::Friedman,
        };
    }
    let observed_ssq = sum_sq(&ranks);
    let statistic = stat_of(observed_ssq);
    let p_value = match p_method {
        FriedmanPValue::ChiSquare => {
            let chi = ChiSquared::new(kf - 1.0).expect("k >= 2");
            (1.0 - chi.cdf(statistic)).clamp(0.0, 1.0)
        }
        FriedmanPValue::Permutation { draws, seed } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let mut work = ranks.clone();
            let tol = 1e-9 * observed_ssq.abs().max(1.0);
            let mut hits = 0usize;
            for _ in 0..draws {
                for row in work.iter_mut() {
                    row.shuffle(&mut rng);
                }
                if sum_sq(&work) >= observed_ssq - tol {
                    hits += 1;
                }
            }
            (hits as f64 + 1.0) / (draws as f64 + 1.0)
        }
    };
    TestResult {
        statistic,
        p_value,
        alpha,
        method: Method::Friedman,
    }
}

/// Treatment of zero differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Discard,
    /// Rank zeros with the others, then leave them out of both sums.
    Pratt,
}

/// Largest effective sample size evaluated with the exact null distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Counts of sign patterns per doubled `W+` value.
fn signed_rank_counts(doubled_ranks: &[u64]) -> Vec<u64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided Wilcoxon signed-rank test of `x - y`.
///
/// `W = min(W+, W-)`. Up to [`WILCOXON_EXACT_MAX_N`] nonzero differences the
/// p-value is the exact share of the `2^n` sign patterns with a minimum sum
/// at most `W`; beyond that a normal approximation with tie and continuity
/// corrections is used. All-zero differences give `p = 1`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alpha: f64, zero: ZeroMethod) -> Result<TestResult, StatsError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(StatsError::PairLength(x.len(), y.len()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let ranked: Vec<f64> = match zero {
        ZeroMethod::Discard => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Pratt => diffs.clone(),
    };
    let abs: Vec<f64> = ranked.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let nonzero: Vec<(f64, f64)> = ranked.iter().zip(&ranks).filter(|(d, _)| **d != 0.0).map(|(d, r)| (*d, *r)).collect();
    if nonzero.is_empty() {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            alpha,
            method: Method::WilcoxonExact,
        });
    }
    let w_plus: f64 = nonzero.iter().filter(|(d, _)| *d > 0.0).map(|(_, r)| r).sum();
    let total: f64 = nonzero.iter().map(|(_, r)| r).sum();
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);
    let n = nonzero.len();
    if n <= WILCOXON_EXACT_MAX_N {
        let doubled: Vec<u64> = nonzero.iter().map(|(_, r)| (r * 2.0).round() as u64).collect();
        let t2: u64 = doubled.iter().sum();
        let w2 = (w * 2.0).round() as u64;
        let counts = signed_rank_counts(&doubled);
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|&(s, _)| (s as u64).min(t2 - s as u64) <= w2)
            .map(|(_, c)| *c)
            .sum();
        let p_value = extreme as f64 / 2f64.powi(n as i32);
        return Ok(TestResult {
            statistic: w,
            p_value: p_value.min(1.0),
            alpha,
            method: Method::WilcoxonExact,
        });
    }
    let mean = total / 2.0;
    let var: f64 = nonzero.iter().map(|(_, r)| r * r).sum::<f64>() / 4.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0);
    Ok(TestResult {
        statistic: w,
        p_value,
        alpha,
        method: Method::WilcoxonNormal,
    })
}

/// Family-wise corrected level for all `k (k - 1) / 2` pairs.
pub fn bonferroni_alpha(k: usize, alpha: f64) -> f64 {
    assert!(k >= 2, "bonferroni needs at least two configurations");
    alpha / ((k * (k - 1) / 2) as f64)
}

pub fn delta_percent(f: f64, f_base: f64) -> Result<f64, StatsError> {
    if f_base == 0.0 {
        return Err(StatsError::ZeroBaseline);
    }
    Ok((f - f_base) / f_base * 100.0)
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (the usual "type 7" definition).
pub fn quantile(values: &[f64], q: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Five-number summary with Tukey fences at 1.5 IQR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

pub fn box_summary(values: &[f64]) -> Result<BoxSummary, StatsError> {
    let q1 = quantile(values, 0.25)?;
    let q3 = quantile(values, 0.75)?;
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let mut outliers: Vec<f64> = values.iter().copied().filter(|v| *v < lo || *v > hi).collect();
    outliers.sort_by(f64::total_cmp);
    let inside: Vec<f64> = values.iter().copied().filter(|v| *v >= lo && *v <= hi).collect();
    Ok(BoxSummary {
        min: inside.iter().copied().fold(f64::INFINITY, f64::min),
        q1,
        median: median(values)?,
        q3,
        max: inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn identical_columns_are_not_significant() {
        let m = PairedMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![5.0, 5.0, 5.0]],
            0,
        )
        .unwrap();
        let r = friedman(&m, 0.05, FriedmanPValue::default());
        assert_eq!(r.statistic, 0.0);
        assert!(!r.significant());
    }

    #[test]
    fn friedman_textbook_statistic() {
        // Every row ranks the columns identically: chi2 = N (k - 1).
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64 + 1.0, i as f64 + 2.0]).collect();
        let m = PairedMatrix::new(vec!["a".into(), "b".into(), "c".into()], rows, 0).unwrap();
        let r = friedman(&m, 0.05, FriedmanPValue::ChiSquare);
        assert_abs_diff_eq!(r.statistic, 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, (-6.0f64).exp(), epsilon = 1e-9);
        let perm = friedman(&m, 0.05, FriedmanPValue::default());
        assert!(perm.p_value < 0.01);
    }

    #[test]
    fn degenerate_matrix_rejected() {
        assert!(PairedMatrix::new(vec!["a".into()], vec![vec![1.0], vec![2.0]], 0).is_err());
        assert!(PairedMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0]], 0).is_err());
        assert!(PairedMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0], vec![1.0]], 0).is_err());
    }

    #[test]
    fn wilcoxon_small_exact() {
        // Five positive differences: only the all-plus and all-minus patterns reach W = 0.
        let x = [2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0; 5];
        let r = wilcoxon_signed_rank(&x, &y, 0.05, ZeroMethod::Discard).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 2.0 / 32.0);
        assert_eq!(r.method, Method::WilcoxonExact);
        let same = wilcoxon_signed_rank(&x, &x, 0.05, ZeroMethod::Discard).unwrap();
        assert_eq!(same.p_value, 1.0);
        assert!(!same.significant());
    }

    #[test]
    fn wilcoxon_normal_branch() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 + if i % 3 == 0 { -2.5 } else { 1.0 }).collect();
        let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&x, &y, 0.05, ZeroMethod::Discard).unwrap();
        assert_eq!(r.method, Method::WilcoxonNormal);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn pratt_keeps_zero_ranks() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 1.0, 1.0, 1.0];
        let d = wilcoxon_signed_rank(&x, &y, 0.05, ZeroMethod::Discard).unwrap();
        let p = wilcoxon_signed_rank(&x, &y, 0.05, ZeroMethod::Pratt).unwrap();
        assert_eq!(d.p_value, 2.0 / 8.0);
        assert_eq!(p.p_value, 2.0 / 8.0);
    }

    #[test]
    fn bonferroni_levels() {
        assert_eq!(bonferroni_alpha(8, 0.05), 0.05 / 28.0);
        assert_eq!(bonferroni_alpha(2, 0.05), 0.05);
        assert_eq!(bonferroni_alpha(7, 0.05), 0.05 / 21.0);
    }

    #[test]
    fn delta_and_median() {
        assert_abs_diff_eq!(delta_percent(110.0, 100.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_eq!(delta_percent(7.0, 7.0).unwrap(), 0.0);
        assert!(delta_percent(1.0, 0.0).is_err());
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn box_summary_flags_outliers() {
        let b = box_summary(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(b.median, 3.0);
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.max, 4.0);
    }
}
