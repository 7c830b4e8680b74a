//! Synthetic multi-year station datasets.
//!
//! The sensor model: a photoresistor sees an effective light level (clear-sky
//! light attenuated by cloud and storm darkening), expressed in degrees of
//! equivalent sun elevation. The lamp switches on when that level falls below
//! `sensor_lux_threshold - hysteresis/2` and off when it rises above
//! `sensor_lux_threshold + hysteresis/2`. Each switch point carries its own
//! Gaussian jitter of [`SENSOR_JITTER_DEG`], clamped inside the band.

mod presets;
mod weather;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use presets::{preset, preset_names, PRESETS};
pub use weather::{
    synth_weather, Storm, WeatherModel, CLOUD_DARKENING_DEG, HEAVY_CLOUD_FACTOR, MIN_CLOUD_FACTOR,
};

use crate::domain::{check_coordinates, SensorObservation, StationDataset, LIGHT_OFF, LIGHT_ON};
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::solar::{elevation_at, sun_events, unix_f64, HORIZON_CROSSING_DEG};

/// Standard deviation of the per-event switching level.
pub const SENSOR_JITTER_DEG: f64 = 0.5;

/// Minimum duration of any generated on or off period.
pub const MIN_CYCLE_MINUTES: i64 = 20;

fn default_threshold() -> f64 {
    HORIZON_CROSSING_DEG
}
fn default_volatility() -> f64 {
    1.0
}
fn default_cloud_rate() -> f64 {
    0.8
}
fn default_hysteresis() -> f64 {
    2.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub station_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub sensor_lux_threshold: f64,
    #[serde(default = "default_volatility")]
    pub weather_volatility: f64,
    #[serde(default = "default_cloud_rate")]
    pub cloud_event_rate: f64,
    /// Width of the switching band in effective-elevation degrees.
    #[serde(default = "default_hysteresis")]
    pub hysteresis_deg: f64,
}

impl SimConfig {
    pub fn new(
        station_name: impl Into<String>,
        latitude: f64,
        longitude: f64,
        start_date: NaiveDate,
        end_date: NaiveDate,
        seed: u64,
    ) -> Self {
        SimConfig {
            station_name: station_name.into(),
            latitude,
            longitude,
            start_date,
            end_date,
            seed,
            sensor_lux_threshold: default_threshold(),
            weather_volatility: default_volatility(),
            cloud_event_rate: default_cloud_rate(),
            hysteresis_deg: default_hysteresis(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_coordinates(self.latitude, self.longitude).map_err(|e| Error::input(e.to_string()))?;
        if self.start_date >= self.end_date {
            return Err(Error::input(format!(
                "start_date {} must precede end_date {}",
                self.start_date, self.end_date
            )));
        }
        for (name, v) in [
            ("weather_volatility", self.weather_volatility),
            ("cloud_event_rate", self.cloud_event_rate),
            ("hysteresis_deg", self.hysteresis_deg),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::input(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        if !self.sensor_lux_threshold.is_finite() {
            return Err(Error::input("sensor_lux_threshold must be finite"));
        }
        Ok(())
    }

    pub fn switch_on_level(&self) -> f64 {
        self.sensor_lux_threshold - 0.5 * self.hysteresis_deg
    }

    pub fn switch_off_level(&self) -> f64 {
        self.sensor_lux_threshold + 0.5 * self.hysteresis_deg
    }

    pub fn days(&self) -> i64 {
        (self.end_date - self.start_date).num_days()
    }

    pub fn span(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        let at = |d: NaiveDate| Utc.from_utc_datetime(&d.and_time(NaiveTime::MIN));
        (at(self.start_date), at(self.end_date))
    }
}

/// First whole second in `(lo, hi]` at which `crossed` holds, given it holds
/// at `hi` and not at `lo`.
fn first_crossing(mut lo: i64, mut hi: i64, crossed: impl Fn(i64) -> bool) -> i64 {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if crossed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Synthesizes a validated dataset of light state-change events.
pub fn generate_station_dataset(config: &SimConfig) -> Result<StationDataset> {
    config.validate()?;
    let mut date = config.start_date;
    while date < config.end_date {
        let ev = sun_events(config.latitude, config.longitude, date)?;
        if ev.sunrise.is_none() || ev.sunset.is_none() {
            return Err(Error::PolarDate {
                station: config.station_name.clone(),
                date,
            });
        }
        date += Duration::days(1);
    }

    let model = WeatherModel::new(config)?;
    let (start, end) = config.span();
    let (start, end) = (start.timestamp(), end.timestamp());
    let on_level = config.switch_on_level();
    let off_level = config.switch_off_level();
    let light = |s: i64| model.effective_elevation(s as f64);

    let mut jitter_rng = SeedStream::new(config.seed).named("sensor").rng();
    let bound = 0.45 * config.hysteresis_deg;
    let mut jitter = || {
        let j: f64 = jitter_rng.sample(StandardNormal);
        (j * SENSOR_JITTER_DEG).clamp(-bound, bound)
    };
    let (mut on_at, mut off_at) = (on_level + jitter(), off_level + jitter());

    let mut lamp_on = light(start) < config.sensor_lux_threshold;
    let mut events: Vec<(i64, u8)> = Vec::new();
    let step = 60;
    let mut prev = start;
    let mut t = start + step;
    while t < end {
        let e = light(t);
        if !lamp_on && e < on_at {
            events.push((first_crossing(prev, t, |s| light(s) < on_at), LIGHT_ON));
            lamp_on = true;
            on_at = on_level + jitter();
        } else if lamp_on && e > off_at {
            events.push((first_crossing(prev, t, |s| light(s) > off_at), LIGHT_OFF));
            lamp_on = false;
            off_at = off_level + jitter();
        }
        prev = t;
        t += step;
    }

    let events = drop_short_cycles(events, MIN_CYCLE_MINUTES * 60);

    let observations = events
        .into_iter()
        .map(|(secs, state)| {
            let ts = Utc.timestamp_opt(secs, 0).unwrap();
            let sun_angle = elevation_at(config.latitude, config.longitude, secs as f64);
            SensorObservation::from_parts(ts, sun_angle, model.weather_at_secs(unix_f64(ts)), state)
        })
        .collect();

    Ok(StationDataset::new(
        config.station_name.clone(),
        config.latitude,
        config.longitude,
        observations,
    )?)
}

/// Removes adjacent event pairs closer than `min_gap` seconds. Pairs are
/// removed together so states keep alternating.
fn drop_short_cycles(events: Vec<(i64, u8)>, min_gap: i64) -> Vec<(i64, u8)> {
    let mut kept: Vec<(i64, u8)> = Vec::with_capacity(events.len());
    for ev in events {
        match kept.last() {
            Some(&(t, _)) if ev.0 - t < min_gap => {
                kept.pop();
            }
            _ => kept.push(ev),
        }
    }
    kept
}
