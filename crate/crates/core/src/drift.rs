//! Gradual photoresistor drift: shifted event timestamps with realigned
//! features.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::datagen::{SimConfig, WeatherModel};
use crate::domain::{SensorObservation, StationDataset, WeatherState};
use crate::error::{Error, Result};
use crate::solar::{solar_elevation, unix_f64};

/// The drift levels, in minutes, examined by default.
pub const DRIFT_LEVELS: [u32; 8] = [0, 1, 5, 10, 15, 20, 25, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// On-events move later, off-events earlier.
    #[default]
    PaperOperation,
    /// Both events move later: the evening switch-on and the morning
    /// switch-off each lag.
    DelayedResponse,
}

impl SignConvention {
    pub fn name(&self) -> &'static str {
        match self {
            SignConvention::PaperOperation => "paper-operation",
            SignConvention::DelayedResponse => "delayed-response",
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-operation" => Ok(SignConvention::PaperOperation),
            "delayed-response" => Ok(SignConvention::DelayedResponse),
            _ => Err(Error::input(format!(
                "unknown drift convention `{s}` (expected paper-operation or delayed-response)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub minutes: u32,
    pub sign_convention: SignConvention,
}

impl DriftSpec {
    pub fn new(minutes: u32, sign_convention: SignConvention) -> Self {
        DriftSpec { minutes, sign_convention }
    }

    /// Signed shift for an event entering `light_state`.
    pub fn offset(&self, light_state: u8) -> Duration {
        let d = Duration::minutes(i64::from(self.minutes));
        match (self.sign_convention, light_state) {
            (SignConvention::PaperOperation, 0) => -d,
            _ => d,
        }
    }

    /// Key/value pairs for the dataset file's comment header.
    pub fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("drift_minutes".into(), self.minutes.to_string()),
            ("convention".into(), self.sign_convention.name().into()),
        ]
    }
}

/// Climate variables at arbitrary instants.
pub trait ClimateSource: Send + Sync {
    fn weather_at(&self, t: DateTime<Utc>) -> Result<WeatherState>;
}

impl ClimateSource for WeatherModel {
    fn weather_at(&self, t: DateTime<Utc>) -> Result<WeatherState> {
        WeatherModel::weather_at(self, t)
    }
}

/// Piecewise-linear interpolation between the rows of a dataset, for data
/// without a generative weather model.
pub struct InterpolatedClimate {
    times: Vec<f64>,
    states: Vec<WeatherState>,
}

impl InterpolatedClimate {
    pub fn from_dataset(ds: &StationDataset) -> Self {
        InterpolatedClimate {
            times: ds.observations.iter().map(|o| unix_f64(o.timestamp)).collect(),
            states: ds.observations.iter().map(SensorObservation::weather).collect(),
        }
    }
}

fn lerp(a: &WeatherState, b: &WeatherState, w: f64) -> WeatherState {
    let f = |x: f64, y: f64| x + (y - x) * w;
    WeatherState {
        temperature: f(a.temperature, b.temperature),
        dew_point: f(a.dew_point, b.dew_point),
        pressure: f(a.pressure, b.pressure),
        precipitation: f(a.precipitation, b.precipitation),
        ghi: f(a.ghi, b.ghi),
        dhi: f(a.dhi, b.dhi),
        bni: f(a.bni, b.bni),
    }
}

impl ClimateSource for InterpolatedClimate {
    fn weather_at(&self, t: DateTime<Utc>) -> Result<WeatherState> {
        let s = unix_f64(t);
        let (Some(&first), Some(&last)) = (self.times.first(), self.times.last()) else {
            return Err(Error::Coverage(t));
        };
        if s < first || s > last {
            return Err(Error::Coverage(t));
        }
        let i = self.times.partition_point(|&x| x < s);
        if self.times[i] == s {
            return Ok(self.states[i]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        Ok(lerp(&self.states[i - 1], &self.states[i], (s - t0) / (t1 - t0)))
    }
}

/// The generator's weather for a synthetic station.
pub fn synthetic_climate(config: &SimConfig) -> Result<WeatherModel> {
    WeatherModel::new(config)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftReport {
    pub minutes: u32,
    pub convention: SignConvention,
    pub input_rows: usize,
    pub output_rows: usize,
    /// On/off pairs removed because their shifted times crossed.
    pub dropped_pairs: usize,
    /// Rows whose shifted time fell outside the climate source's span.
    pub dropped_out_of_coverage: usize,
}

#[derive(Debug, Clone)]
pub struct DriftOutcome {
    pub dataset: StationDataset,
    pub report: DriftReport,
}

/// Shifts every event per `spec`, recomputes its sun angle and climate at
/// the new instant, and restores ordering by dropping colliding pairs.
pub fn apply_drift(ds: &StationDataset, spec: DriftSpec, climate: &dyn ClimateSource) -> Result<DriftOutcome> {
    ds.validate()?;
    let mut report = DriftReport {
        minutes: spec.minutes,
        convention: spec.sign_convention,
        input_rows: ds.len(),
        output_rows: 0,
        dropped_pairs: 0,
        dropped_out_of_coverage: 0,
    };

    let mut kept: Vec<SensorObservation> = Vec::with_capacity(ds.len());
    for obs in &ds.observations {
        let offset = spec.offset(obs.light_state);
        let shifted = if offset.is_zero() {
            *obs
        } else {
            let t = obs.timestamp + offset;
            let weather = match climate.weather_at(t) {
                Ok(w) => w,
                Err(Error::Coverage(_)) => {
                    report.dropped_out_of_coverage += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let sun = solar_elevation(ds.latitude, ds.longitude, t)?;
            SensorObservation::from_parts(t, sun, weather, obs.light_state)
        };
        match kept.last() {
            Some(prev) if prev.timestamp >= shifted.timestamp && prev.light_state != shifted.light_state => {
                kept.pop();
                report.dropped_pairs += 1;
            }
            Some(prev) if prev.light_state == shifted.light_state => {
                // Only reachable after a coverage drop inside the series.
                report.dropped_out_of_coverage += 1;
            }
            _ => kept.push(shifted),
        }
    }
    report.output_rows = kept.len();
    let dataset = StationDataset::new(ds.station_name.clone(), ds.latitude, ds.longitude, kept)?;
    Ok(DriftOutcome { dataset, report })
}
