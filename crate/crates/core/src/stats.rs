//! Friedman rank test and control-versus-others post hoc comparisons.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Rows are datasets, columns are algorithms; higher scores are better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub algorithms: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(algorithms: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = ScoreMatrix { algorithms, rows };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.algorithms.len();
        if k < 2 || self.rows.len() < 2 {
            return Err(Error::input(format!(
                "need at least 2 datasets and 2 algorithms, got {}×{k}",
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::input(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!("non-finite score at row {i}, column {j}")));
            }
        }
        Ok(())
    }
}

/// Ranks within one row: 1 = highest score, ties share the mean position.
pub fn rank_row(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub algorithm: String,
    pub average_rank: f64,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub algorithms: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub n_datasets: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// Index of the best (lowest) average rank; ties go to the first column.
    pub control: usize,
    /// Non-control algorithms against the control, in column order.
    pub comparisons: Vec<Comparison>,
    pub adjustment: String,
}

pub const ADJUSTMENT_LABEL: &str = "Benjamini-Hochberg step-up (one-stage)";

pub fn friedman_test(scores: &ScoreMatrix) -> Result<FriedmanResult> {
    scores.validate()?;
    let n = scores.rows.len();
    let k = scores.algorithms.len();
    let mut sums = vec![0.0; k];
    for row in &scores.rows {
        for (s, r) in sums.iter_mut().zip(rank_row(row)) {
            *s += r;
        }
    }
    let average_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();

    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = average_ranks.iter().map(|r| r * r).sum();
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0)).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).expect("k ≥ 2");
    let p_value = chi.sf(statistic);

    let control = average_ranks
        .iter()
        .enumerate()
        .fold(0, |best, (j, &r)| if r < average_ranks[best] { j } else { best });
    let comparisons = control_posthoc(&scores.algorithms, &average_ranks, n, control)?;

    Ok(FriedmanResult {
        algorithms: scores.algorithms.clone(),
        average_ranks,
        n_datasets: n,
        statistic,
        p_value,
        control,
        comparisons,
        adjustment: ADJUSTMENT_LABEL.to_string(),
    })
}

/// z-tests of each algorithm's average rank against the control's, with
/// Benjamini–Hochberg adjusted p-values.
pub fn control_posthoc(
    algorithms: &[String],
    average_ranks: &[f64],
    n: usize,
    control: usize,
) -> Result<Vec<Comparison>> {
    let k = average_ranks.len();
    if control >= k {
        return Err(Error::input(format!("control index {control} out of range for {k} algorithms")));
    }
    if n < 2 {
        return Err(Error::input("post hoc test needs at least 2 datasets"));
    }
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * n as f64)).sqrt();
    let normal = Normal::standard();
    let mut out: Vec<Comparison> = (0..k)
        .filter(|&j| j != control)
        .map(|j| {
            let z = (average_ranks[j] - average_ranks[control]) / se;
            Comparison {
                algorithm: algorithms.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
                average_rank: average_ranks[j],
                z,
                p_raw: (2.0 * normal.sf(z.abs())).min(1.0),
                p_adjusted: 0.0,
            }
        })
        .collect();
    let raw: Vec<f64> = out.iter().map(|c| c.p_raw).collect();
    for (c, adj) in out.iter_mut().zip(benjamini_hochberg(&raw)) {
        c.p_adjusted = adj;
    }
    Ok(out)
}

/// Step-up adjustment: sort ascending, scale p₍ᵢ₎ by m/i, take the running
/// minimum from the largest down, cap at 1. Output is in input order.
pub fn benjamini_hochberg(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &idx) in order.iter().enumerate().rev() {
        let scaled = raw[idx] * m as f64 / (pos + 1) as f64;
        running = running.min(scaled);
        // The max guards against the scaled value rounding below the raw one.
        adjusted[idx] = running.min(1.0).max(raw[idx]);
    }
    adjusted
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("a{j}")).collect()
    }

    #[test]
    fn identical_columns() {
        let m = ScoreMatrix::new(names(3), vec![vec![0.5; 3]; 4]).unwrap();
        let r = friedman_test(&m).unwrap();
        assert!(r.average_ranks.iter().all(|&x| x == 2.0));
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn three_by_two() {
        let m = ScoreMatrix::new(names(2), vec![vec![1.0, 2.0]; 3]).unwrap();
        let r = friedman_test(&m).unwrap();
        assert_eq!(r.average_ranks, vec![2.0, 1.0]);
        assert!((r.statistic - 3.0).abs() < 1e-12);
        assert!((r.p_value - 0.0833).abs() < 1e-4, "{}", r.p_value);
        assert_eq!(r.control, 1);
    }

    #[test]
    fn tie_gets_mean_rank() {
        assert_eq!(rank_row(&[0.9, 0.8, 0.9, 0.7]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn equal_rank_to_control_has_p_one() {
        let c = control_posthoc(&names(3), &[1.5, 1.5, 3.0], 5, 0).unwrap();
        assert_eq!(c[0].z, 0.0);
        assert_eq!(c[0].p_raw, 1.0);
        assert!(control_posthoc(&names(3), &[1.5, 1.5, 3.0], 5, 3).is_err());
    }

    #[test]
    fn bh_hand_example() {
        assert_eq!(benjamini_hochberg(&[0.01, 0.02, 0.03, 0.04]), vec![0.04; 4]);
        assert_eq!(benjamini_hochberg(&[0.3]), vec![0.3]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ScoreMatrix::new(names(2), vec![vec![1.0, f64::NAN], vec![1.0, 2.0]]).is_err());
        assert!(ScoreMatrix::new(names(2), vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn null_rejection_rate_is_controlled() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let (n, k, trials) = (10, 4, 2000);
        let mut rejections = 0;
        for _ in 0..trials {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let mut row: Vec<f64> = (0..k).map(|_| rng.random()).collect();
                    row.shuffle(&mut rng);
                    row
                })
                .collect();
            let r = friedman_test(&ScoreMatrix::new(names(k), rows).unwrap()).unwrap();
            if r.p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = f64::from(rejections) / f64::from(trials);
        assert!(rate <= 0.07, "rejection rate {rate}");
    }

    proptest! {
        #[test]
        fn ranks_sum_and_monotone_invariance(
            n in 2usize..12,
            k in 2usize..7,
            data in proptest::collection::vec(0u8..6, 12 * 7),
        ) {
            // Small integer values force plenty of ties.
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..k).map(|j| f64::from(data[i * 7 + j])).collect())
                .collect();
            let m = ScoreMatrix::new(names(k), rows.clone()).unwrap();
            let r = friedman_test(&m).unwrap();
            let total: f64 = r.average_ranks.iter().sum();
            prop_assert!((total - (k * (k + 1)) as f64 / 2.0).abs() < 1e-9);

            let transformed: Vec<Vec<f64>> =
                rows.iter().map(|row| row.iter().map(|v| (v * 0.3).exp() + 7.0).collect()).collect();
            let r2 = friedman_test(&ScoreMatrix::new(names(k), transformed).unwrap()).unwrap();
            prop_assert_eq!(r.average_ranks, r2.average_ranks);
        }

        #[test]
        fn bh_is_monotone_and_bounded(raw in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let adj = benjamini_hochberg(&raw);
            let mut order: Vec<usize> = (0..raw.len()).collect();
            order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
            for w in order.windows(2) {
                prop_assert!(adj[w[0]] <= adj[w[1]]);
            }
            prop_assert!(adj.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
