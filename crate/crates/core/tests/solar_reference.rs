//! Solar position against an independent ephemeris.

mod common;

use beacon::solar::{solar_elevation, sun_events};
use common::solar_fixtures::{instant, FIXTURES, LAT, LON};

#[test]
fn elevation_matches_reference_within_half_degree() {
    for f in &FIXTURES {
        let date = f.day();
        for (hms, expected) in f.elevations {
            let got = solar_elevation(LAT, LON, instant(date, hms)).unwrap();
            assert!((got - expected).abs() <= 0.5, "{date} {hms}: {got} vs {expected}");
        }
    }
}

#[test]
fn sunrise_and_sunset_match_reference_within_two_minutes() {
    for f in &FIXTURES {
        let date = f.day();
        let ev = sun_events(LAT, LON, date).unwrap();
        let rise_err = (ev.sunrise.unwrap() - instant(date, f.sunrise)).num_seconds().abs();
        let set_err = (ev.sunset.unwrap() - instant(date, f.sunset)).num_seconds().abs();
        assert!(rise_err <= 120, "{date} sunrise off by {rise_err}s");
        assert!(set_err <= 120, "{date} sunset off by {set_err}s");
    }
}
