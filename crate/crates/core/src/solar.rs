//! Sun elevation and sunrise/sunset.
//!
//! Low-precision almanac formulation: solar declination and the equation of
//! time come from the sun's mean longitude and mean anomaly; the hour angle is
//! then taken from UTC, longitude and the equation of time. Accuracy is about
//! 0.01° in elevation for 1950–2050, well inside what the classifiers need.

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::check_coordinates;
use crate::error::{Error, Result};

/// Elevation of the sun's centre at apparent sunrise/sunset: refraction
/// (34') plus the solar semi-diameter (16').
pub const HORIZON_CROSSING_DEG: f64 = -0.833;

const J2000: f64 = 2_451_545.0;
const UNIX_EPOCH_JD: f64 = 2_440_587.5;

/// Solar declination and equation of time at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarCoordinates {
    pub declination_deg: f64,
    /// Apparent minus mean solar time, in degrees of hour angle.
    pub equation_of_time_deg: f64,
}

fn wrap180(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

pub fn solar_coordinates(unix_seconds: f64) -> SolarCoordinates {
    let n = unix_seconds / 86_400.0 + UNIX_EPOCH_JD - J2000;
    let mean_longitude = (280.460 + 0.985_647_4 * n).rem_euclid(360.0);
    let mean_anomaly = (357.528 + 0.985_600_3 * n).rem_euclid(360.0).to_radians();
    let ecliptic_longitude = (mean_longitude
        + 1.915 * mean_anomaly.sin()
        + 0.020 * (2.0 * mean_anomaly).sin())
    .to_radians();
    let obliquity = (23.439 - 0.000_000_4 * n).to_radians();

    let right_ascension = (obliquity.cos() * ecliptic_longitude.sin())
        .atan2(ecliptic_longitude.cos())
        .to_degrees();
    let declination = (obliquity.sin() * ecliptic_longitude.sin()).asin();

    SolarCoordinates {
        declination_deg: declination.to_degrees(),
        equation_of_time_deg: wrap180(mean_longitude - right_ascension),
    }
}

/// Geometric elevation without coordinate validation; `unix_seconds` may be
/// fractional.
pub fn elevation_at(latitude: f64, longitude: f64, unix_seconds: f64) -> f64 {
    let coords = solar_coordinates(unix_seconds);
    let ut_hours = unix_seconds.rem_euclid(86_400.0) / 3600.0;
    let hour_angle = ((ut_hours - 12.0) * 15.0 + longitude + coords.equation_of_time_deg).to_radians();
    let lat = latitude.to_radians();
    let dec = coords.declination_deg.to_radians();
    let sin_elev = lat.sin() * dec.sin() + lat.cos() * dec.cos() * hour_angle.cos();
    sin_elev.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Geometric solar elevation in degrees above the horizon.
pub fn solar_elevation(latitude: f64, longitude: f64, t: DateTime<Utc>) -> Result<f64> {
    check_coordinates(latitude, longitude).map_err(|e| Error::input(e.to_string()))?;
    Ok(elevation_at(latitude, longitude, unix_f64(t)))
}

pub(crate) fn unix_f64(t: DateTime<Utc>) -> f64 {
    t.timestamp() as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9
}

/// Sunrise and sunset for one date. Both absent on polar days and nights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SunEvents {
    pub date: NaiveDate,
    pub sunrise: Option<DateTime<Utc>>,
    pub sunset: Option<DateTime<Utc>>,
}

impl SunEvents {
    pub fn day_length(&self) -> Option<Duration> {
        Some(self.sunset? - self.sunrise?)
    }
}

/// Instant of the sun's upper transit nearest to 12:00 local mean time on `date`.
pub fn solar_noon(longitude: f64, date: NaiveDate) -> DateTime<Utc> {
    let midday = Utc.from_utc_datetime(&date.and_time(NaiveTime::from_hms_opt(12, 0, 0).unwrap()));
    let mut t = unix_f64(midday) - longitude / 15.0 * 3600.0;
    // Two fixed-point passes on the equation of time converge to well under a second.
    for _ in 0..2 {
        let eot = solar_coordinates(t).equation_of_time_deg;
        t = unix_f64(midday) - (longitude + eot) / 15.0 * 3600.0;
    }
    Utc.timestamp_opt(t.round() as i64, 0).unwrap()
}

/// Bisects for the instant in `[lo, hi]` where `f` crosses zero, given
/// `f(lo)` and `f(hi)` of opposite sign. Returns whole seconds.
pub(crate) fn bisect_seconds(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo_negative = f(lo) < 0.0;
    while hi - lo > 0.5 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == f_lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).round()
}

/// Sunrise and sunset where elevation crosses [`HORIZON_CROSSING_DEG`],
/// resolved to one second.
pub fn sun_events(latitude: f64, longitude: f64, date: NaiveDate) -> Result<SunEvents> {
    check_coordinates(latitude, longitude).map_err(|e| Error::input(e.to_string()))?;
    let noon = unix_f64(solar_noon(longitude, date));
    let elev = |t: f64| elevation_at(latitude, longitude, t) - HORIZON_CROSSING_DEG;

    let half_day = 12.0 * 3600.0;
    let (before, at_noon, after) = (elev(noon - half_day), elev(noon), elev(noon + half_day));
    let to_time = |s: f64| Utc.timestamp_opt(s as i64, 0).unwrap();

    let sunrise = (before < 0.0 && at_noon > 0.0)
        .then(|| to_time(bisect_seconds(noon - half_day, noon, elev)));
    let sunset = (at_noon > 0.0 && after < 0.0)
        .then(|| to_time(bisect_seconds(noon, noon + half_day, elev)));

    Ok(SunEvents {
        date,
        sunrise,
        sunset,
    })
}
