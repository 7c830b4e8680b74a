//! Core data types: sensor events, station datasets and feature vectors.

use std::fmt;

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of model inputs in the base feature set.
pub const N_FEATURES: usize = 8;

/// Column order of [`FeatureVector`].
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "sun_angle",
    "temperature",
    "dew_point",
    "pressure",
    "precipitation",
    "ghi",
    "dhi",
    "bni",
];

pub const LIGHT_OFF: u8 = 0;
pub const LIGHT_ON: u8 = 1;

/// Seven climate variables at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherState {
    pub temperature: f64,
    pub dew_point: f64,
    pub pressure: f64,
    pub precipitation: f64,
    pub ghi: f64,
    pub dhi: f64,
    pub bni: f64,
}

/// One light state-change event. `light_state` is the state entered at
/// `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorObservation {
    pub timestamp: DateTime<Utc>,
    pub sun_angle: f64,
    pub temperature: f64,
    pub dew_point: f64,
    pub pressure: f64,
    pub precipitation: f64,
    pub ghi: f64,
    pub dhi: f64,
    pub bni: f64,
    pub light_state: u8,
}

impl SensorObservation {
    pub fn from_parts(
        timestamp: DateTime<Utc>,
        sun_angle: f64,
        weather: WeatherState,
        light_state: u8,
    ) -> Self {
        SensorObservation {
            timestamp,
            sun_angle,
            temperature: weather.temperature,
            dew_point: weather.dew_point,
            pressure: weather.pressure,
            precipitation: weather.precipitation,
            ghi: weather.ghi,
            dhi: weather.dhi,
            bni: weather.bni,
            light_state,
        }
    }

    pub fn weather(&self) -> WeatherState {
        WeatherState {
            temperature: self.temperature,
            dew_point: self.dew_point,
            pressure: self.pressure,
            precipitation: self.precipitation,
            ghi: self.ghi,
            dhi: self.dhi,
            bni: self.bni,
        }
    }

    pub fn is_on(&self) -> bool {
        self.light_state == LIGHT_ON
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector([
            self.sun_angle,
            self.temperature,
            self.dew_point,
            self.pressure,
            self.precipitation,
            self.ghi,
            self.dhi,
            self.bni,
        ])
    }
}

/// A single violated observation invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    NonFinite(&'static str),
    Negative(&'static str),
    DewPointAboveTemperature,
    LightStateNotBinary,
    SunAngleOutOfRange,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(name) => write!(f, "{name} is finite"),
            Violation::Negative(name) => write!(f, "{name} ≥ 0"),
            Violation::DewPointAboveTemperature => f.write_str("dew_point ≤ temperature"),
            Violation::LightStateNotBinary => f.write_str("light_state ∈ {0,1}"),
            Violation::SunAngleOutOfRange => f.write_str("sun_angle ∈ [-90, 90]"),
        }
    }
}

/// Checks every [`SensorObservation`] invariant and reports all that fail.
pub fn validate_observation(obs: &SensorObservation) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let reals = [
        ("sun_angle", obs.sun_angle),
        ("temperature", obs.temperature),
        ("dew_point", obs.dew_point),
        ("pressure", obs.pressure),
        ("precipitation", obs.precipitation),
        ("ghi", obs.ghi),
        ("dhi", obs.dhi),
        ("bni", obs.bni),
    ];
    for (name, v) in reals {
        if !v.is_finite() {
            violations.push(Violation::NonFinite(name));
        }
    }
    if obs.sun_angle.is_finite() && !(-90.0..=90.0).contains(&obs.sun_angle) {
        violations.push(Violation::SunAngleOutOfRange);
    }
    for (name, v) in [
        ("precipitation", obs.precipitation),
        ("ghi", obs.ghi),
        ("dhi", obs.dhi),
        ("bni", obs.bni),
    ] {
        if v < 0.0 {
            violations.push(Violation::Negative(name));
        }
    }
    if obs.dew_point > obs.temperature {
        violations.push(Violation::DewPointAboveTemperature);
    }
    if obs.light_state > 1 {
        violations.push(Violation::LightStateNotBinary);
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("row {index}: {}", join(.violations))]
    InvalidRow {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("row {index}: timestamp {timestamp} is not after the previous row")]
    Ordering {
        index: usize,
        timestamp: DateTime<Utc>,
    },
    #[error("row {index}: light_state repeats the previous row (events must alternate)")]
    Alternation { index: usize },
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Ordered state-change events for one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDataset {
    pub station_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub observations: Vec<SensorObservation>,
}

impl StationDataset {
    /// Builds a dataset and validates it.
    pub fn new(
        station_name: impl Into<String>,
        latitude: f64,
        longitude: f64,
        observations: Vec<SensorObservation>,
    ) -> Result<Self, DatasetError> {
        let ds = StationDataset {
            station_name: station_name.into(),
            latitude,
            longitude,
            observations,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        check_coordinates(self.latitude, self.longitude)?;
        for (index, obs) in self.observations.iter().enumerate() {
            validate_observation(obs)
                .map_err(|violations| DatasetError::InvalidRow { index, violations })?;
        }
        check_sequence(&self.observations)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.observations.iter().map(|o| o.light_state).collect()
    }

    /// Same metadata, different rows (not validated).
    pub fn with_observations(&self, observations: Vec<SensorObservation>) -> Self {
        StationDataset {
            station_name: self.station_name.clone(),
            latitude: self.latitude,
            longitude: self.longitude,
            observations,
        }
    }
}

pub(crate) fn check_coordinates(latitude: f64, longitude: f64) -> Result<(), DatasetError> {
    if !(-90.0..=90.0).contains(&latitude) {
        return Err(DatasetError::Latitude(latitude));
    }
    if !(-180.0..=180.0).contains(&longitude) {
        return Err(DatasetError::Longitude(longitude));
    }
    Ok(())
}

/// Strictly increasing timestamps and alternating states.
pub fn check_sequence(observations: &[SensorObservation]) -> Result<(), DatasetError> {
    for (index, pair) in observations.windows(2).enumerate() {
        let index = index + 1;
        if pair[1].timestamp <= pair[0].timestamp {
            return Err(DatasetError::Ordering {
                index,
                timestamp: pair[1].timestamp,
            });
        }
        if pair[1].light_state == pair[0].light_state {
            return Err(DatasetError::Alternation { index });
        }
    }
    Ok(())
}

/// The eight model inputs in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Which columns are fed to the models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSet {
    /// Appends the UTC hour of day (fractional, in [0, 24)) as a ninth column.
    #[serde(default)]
    pub time_of_day: bool,
}

impl FeatureSet {
    pub fn dim(&self) -> usize {
        N_FEATURES + usize::from(self.time_of_day)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names = FEATURE_NAMES.to_vec();
        if self.time_of_day {
            names.push("hour_of_day");
        }
        names
    }

    pub fn row(&self, obs: &SensorObservation) -> Vec<f64> {
        let mut row = obs.features().0.to_vec();
        if self.time_of_day {
            let t = obs.timestamp;
            row.push(f64::from(t.num_seconds_from_midnight()) / 3600.0);
        }
        row
    }

    /// Feature matrix, one row per observation.
    pub fn matrix(&self, observations: &[SensorObservation]) -> ndarray::Array2<f64> {
        let dim = self.dim();
        let mut data = Vec::with_capacity(observations.len() * dim);
        for obs in observations {
            data.extend(self.row(obs));
        }
        ndarray::Array2::from_shape_vec((observations.len(), dim), data)
            .expect("row lengths equal feature dimension")
    }
}
