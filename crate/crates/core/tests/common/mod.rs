#![allow(dead_code)]

pub mod solar_fixtures;

use chrono::NaiveDate;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use beacon::datagen::{generate_station_dataset, preset, SimConfig};
use beacon::domain::StationDataset;

/// 200 points in 8 dimensions labelled by a fixed hyperplane, with a margin.
pub fn separable(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let w = [1.0, -0.8, 0.6, 0.4, -0.3, 0.2, 0.5, -0.7];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 8);
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        let row: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
        if s.abs() < 0.15 {
            continue;
        }
        data.extend(row);
        y.push(u8::from(s > 0.0));
    }
    (Array2::from_shape_vec((n, 8), data).unwrap(), y)
}

/// Twenty points on a line: negative x is class 0, the rest class 1.
pub fn one_d() -> (Array2<f64>, Vec<u8>) {
    let xs: Vec<f64> = (0..20).map(|i| f64::from(i) - 9.5).collect();
    let y = xs.iter().map(|&x| u8::from(x >= 0.0)).collect();
    (Array2::from_shape_vec((20, 1), xs).unwrap(), y)
}

pub fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A preset station over a short span.
pub fn short_config(name: &str, seed: u64, days: u32) -> SimConfig {
    let mut c = preset(name, seed).unwrap();
    c.start_date = date(2021, 2, 1);
    c.end_date = c.start_date + chrono::Days::new(u64::from(days) - 1);
    c
}

pub fn short_station(name: &str, seed: u64, days: u32) -> StationDataset {
    generate_station_dataset(&short_config(name, seed, days)).unwrap()
}
