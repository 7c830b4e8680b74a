//! Detection of gradual photoresistor faults in lighthouse light sensors.

pub mod config;
pub mod datagen;
pub mod datastore;
pub mod detector;
pub mod domain;
pub mod drift;
pub mod error;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod solar;
pub mod stats;
pub mod tuning;

pub use error::{Error, Result};
