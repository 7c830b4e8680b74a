//! Standardization and data splitting.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::domain::StationDataset;
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std`, with zero-variance columns mapped to 0.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_dim(x.ncols())?;
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std_dev[j]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (j, (&v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            let (m, s) = (self.mean[j], self.std_dev[j]);
            *o = if s > 0.0 { (v - m) / s } else { 0.0 };
        }
    }

    pub fn invert(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_dim(z.ncols())?;
        let mut out = z.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std_dev[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    fn check_dim(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::input(format!(
                "matrix has {cols} columns, scaler expects {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

pub fn fit_scaler(x: ArrayView2<f64>) -> Result<Scaler> {
    if x.nrows() == 0 {
        return Err(Error::input("cannot fit a scaler on an empty matrix"));
    }
    let n = x.nrows() as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut std_dev = Vec::with_capacity(x.ncols());
    for col in x.axis_iter(Axis(1)) {
        // Summation error would otherwise give a constant column a tiny
        // nonzero spread.
        if let Some(&first) = col.iter().next().filter(|&&f| col.iter().all(|&v| v == f)) {
            mean.push(first);
            std_dev.push(0.0);
            continue;
        }
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean.push(m);
        std_dev.push(var.sqrt());
    }
    Ok(Scaler { mean, std_dev })
}

pub fn apply_scaler(scaler: &Scaler, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    scaler.apply(x)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Fold id per training position, when cross-validation folds were drawn.
    pub fold_assignments: Option<Vec<usize>>,
}

/// Earliest `ceil((1 - f) n)` rows train, the rest test. No shuffling.
pub fn chrono_split(ds: &StationDataset, test_fraction: f64) -> Result<SplitPlan> {
    let n = ds.len();
    if n == 0 {
        return Err(Error::input("cannot split an empty dataset"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::input(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    // The epsilon absorbs representation error in products like 0.8 * 10.
    let n_train = ((1.0 - test_fraction) * n as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::input(format!(
            "test fraction {test_fraction} leaves an empty partition for n = {n}"
        )));
    }
    Ok(SplitPlan {
        train_indices: (0..n_train).collect(),
        test_indices: (n_train..n).collect(),
        fold_assignments: None,
    })
}

/// Splits a dataset into its train and test parts.
pub fn split_dataset(ds: &StationDataset, plan: &SplitPlan) -> (StationDataset, StationDataset) {
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.observations[i]).collect();
    (
        ds.with_observations(pick(&plan.train_indices)),
        ds.with_observations(pick(&plan.test_indices)),
    )
}

/// Fold id for each of `n` samples: seeded shuffle, then contiguous chunks
/// whose sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::input(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::input(format!("{k} folds requested for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeedStream::new(seed).named("kfold").rng());
    let (base, extra) = (n / k, n % k);
    let mut folds = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            folds[i] = fold;
        }
        pos += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn scaler_on_one_two_three() {
        let x = array![[1.0], [2.0], [3.0]];
        let s = fit_scaler(x.view()).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert!((s.std_dev[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std_dev[0] - 0.816497).abs() < 1e-6);
        let z = s.apply(x.view()).unwrap();
        let expected = [-1.224745, 0.0, 1.224745];
        for (a, b) in z.column(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-6);
        }
        let back = s.invert(z.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]];
        let s = fit_scaler(x.view()).unwrap();
        assert_eq!((s.mean[0], s.std_dev[0]), (5.0, 0.0));
        let z = s.apply(x.view()).unwrap();
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn refit_on_standardized_is_identity() {
        let x = array![[1.0, 10.0], [4.0, -3.0], [9.0, 0.5], [2.0, 7.0]];
        let z = fit_scaler(x.view()).unwrap().apply(x.view()).unwrap();
        let s = fit_scaler(z.view()).unwrap();
        for j in 0..2 {
            assert!(s.mean[j].abs() <= 1e-9);
            assert!((s.std_dev[j] - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn scaler_errors() {
        assert!(fit_scaler(Array2::<f64>::zeros((0, 3)).view()).is_err());
        let s = fit_scaler(array![[1.0, 2.0]].view()).unwrap();
        assert!(s.apply(array![[1.0, 2.0, 3.0]].view()).is_err());
    }

    fn ds(n: usize) -> StationDataset {
        use chrono::{Duration, TimeZone, Utc};
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let rows = (0..n)
            .map(|i| crate::domain::SensorObservation {
                timestamp: t0 + Duration::hours(i as i64),
                sun_angle: 0.0,
                temperature: 10.0,
                dew_point: 5.0,
                pressure: 1000.0,
                precipitation: 0.0,
                ghi: 0.0,
                dhi: 0.0,
                bni: 0.0,
                light_state: (i % 2) as u8,
            })
            .collect();
        StationDataset::new("s", 50.0, -5.0, rows).unwrap()
    }

    #[test]
    fn chrono_split_ten_by_point_two() {
        let d = ds(10);
        let plan = chrono_split(&d, 0.2).unwrap();
        assert_eq!(plan.train_indices, (0..8).collect::<Vec<_>>());
        assert_eq!(plan.test_indices, vec![8, 9]);
        let (train, test) = split_dataset(&d, &plan);
        assert!(train.observations.last().unwrap().timestamp < test.observations[0].timestamp);
    }

    #[test]
    fn chrono_split_rejects_empty_partitions() {
        assert!(chrono_split(&ds(3), 0.1).is_err());
        assert!(chrono_split(&ds(10), 0.0).is_err());
        assert!(chrono_split(&ds(10), 1.0).is_err());
    }

    #[test]
    fn kfold_sizes() {
        let f = kfold_indices(10, 10, 3).unwrap();
        let mut sizes = [0; 10];
        f.iter().for_each(|&i| sizes[i] += 1);
        assert!(sizes.iter().all(|&s| s == 1));

        let f = kfold_indices(7, 3, 3).unwrap();
        let mut sizes = [0; 3];
        f.iter().for_each(|&i| sizes[i] += 1);
        assert_eq!(sizes, [3, 2, 2]);
        assert_eq!(f, kfold_indices(7, 3, 3).unwrap());
        assert!(kfold_indices(3, 4, 0).is_err());
        assert!(kfold_indices(3, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_the_samples(n in 2usize..300, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let k = 2 + ((n - 2) as f64 * k_frac) as usize;
            let folds = kfold_indices(n, k, seed).unwrap();
            prop_assert_eq!(folds.len(), n);
            let mut sizes = vec![0usize; k];
            for &f in &folds { sizes[f] += 1; }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        }

        #[test]
        fn standardized_columns_have_unit_moments(
            rows in 2usize..60,
            data in proptest::collection::vec(-1e3f64..1e3, 2 * 60 * 3),
        ) {
            let x = Array2::from_shape_vec((rows, 3), data[..rows * 3].to_vec()).unwrap();
            let s = fit_scaler(x.view()).unwrap();
            prop_assume!(s.std_dev.iter().all(|&v| v > 1e-6));
            let z = s.apply(x.view()).unwrap();
            let t = fit_scaler(z.view()).unwrap();
            for j in 0..3 {
                prop_assert!(t.mean[j].abs() <= 1e-9);
                prop_assert!((t.std_dev[j] - 1.0).abs() <= 1e-9);
            }
        }
    }
}
