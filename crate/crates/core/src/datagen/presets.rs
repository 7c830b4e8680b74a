//! Seven south-west UK station presets. Coordinates are approximate; the
//! weather parameters are arbitrary variety, not climatology.

use chrono::NaiveDate;

use super::SimConfig;
use crate::rng::SeedStream;

pub struct Preset {
    pub name: &'static str,
    pub latitude: f64,
    pub longitude: f64,
    pub weather_volatility: f64,
    pub cloud_event_rate: f64,
}

pub const PRESETS: [Preset; 7] = [
    Preset { name: "Bishop Rock", latitude: 49.873, longitude: -6.445, weather_volatility: 1.1, cloud_event_rate: 0.8 },
    Preset { name: "Eddystone", latitude: 50.180, longitude: -4.265, weather_volatility: 1.0, cloud_event_rate: 0.8 },
    Preset { name: "Godrevy", latitude: 50.243, longitude: -5.401, weather_volatility: 0.85, cloud_event_rate: 1.1 },
    Preset { name: "Lizard", latitude: 49.960, longitude: -5.202, weather_volatility: 1.0, cloud_event_rate: 0.9 },
    Preset { name: "Longships", latitude: 50.067, longitude: -5.747, weather_volatility: 1.1, cloud_event_rate: 0.8 },
    Preset { name: "Trevose", latitude: 50.549, longitude: -5.035, weather_volatility: 1.0, cloud_event_rate: 0.8 },
    Preset { name: "Wolf Rock", latitude: 49.945, longitude: -5.808, weather_volatility: 1.2, cloud_event_rate: 0.8 },
];

/// Three and a half years, the span length the station logs cover.
pub fn default_span() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2018, 6, 1).unwrap(),
        NaiveDate::from_ymd_opt(2021, 12, 1).unwrap(),
    )
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// Preset configuration by name (case-insensitive, spaces optional). The
/// station seed is derived from `seed` and the station name.
pub fn preset(name: &str, seed: u64) -> Option<SimConfig> {
    let key = |s: &str| s.to_ascii_lowercase().replace([' ', '_', '-'], "");
    let p = PRESETS.iter().find(|p| key(p.name) == key(name))?;
    let (start, end) = default_span();
    let station_seed = SeedStream::new(seed).named("station").named(p.name).value();
    let mut config = SimConfig::new(p.name, p.latitude, p.longitude, start, end, station_seed);
    config.weather_volatility = p.weather_volatility;
    config.cloud_event_rate = p.cloud_event_rate;
    Some(config)
}
