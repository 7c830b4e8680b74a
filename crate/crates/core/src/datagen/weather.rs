//! Seeded synthetic climate and the sensor's light model.

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use super::SimConfig;
use crate::domain::WeatherState;
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::solar::{elevation_at, sun_events, unix_f64};

/// Degrees of effective elevation lost per decade of cloud attenuation.
pub const CLOUD_DARKENING_DEG: f64 = 2.0;
/// Lower bound of the irradiance cloud factor.
pub const MIN_CLOUD_FACTOR: f64 = 0.05;
/// Storm episodes are only kept when the base cloud factor at their centre is
/// below this value.
pub const HEAVY_CLOUD_FACTOR: f64 = 0.55;

const HOUR: f64 = 3600.0;
const MINUTE: f64 = 60.0;

/// One hourly first-order autoregressive latent with unit stationary variance.
#[derive(Debug, Clone)]
struct Latent {
    nodes: Vec<f64>,
}

impl Latent {
    fn generate(stream: SeedStream, len: usize, phi: f64) -> Self {
        let mut rng = stream.rng();
        let innovation = (1.0 - phi * phi).sqrt();
        let mut nodes = Vec::with_capacity(len);
        let mut x: f64 = rng.sample(StandardNormal);
        for _ in 0..len {
            nodes.push(x);
            let e: f64 = rng.sample(StandardNormal);
            x = phi * x + innovation * e;
        }
        Latent { nodes }
    }

    fn at(&self, hours: f64) -> f64 {
        let i = (hours.floor() as usize).min(self.nodes.len() - 2);
        let frac = hours - i as f64;
        self.nodes[i] * (1.0 - frac) + self.nodes[i + 1] * frac
    }
}

/// A darkening episode with a trapezoidal profile: linear ramp in, plateau,
/// linear ramp out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Storm {
    pub start: f64,
    pub ramp: f64,
    pub plateau: f64,
    /// Peak darkening in degrees of effective elevation.
    pub depth: f64,
    /// Peak rain rate, mm/h.
    pub rain_peak: f64,
}

impl Storm {
    pub fn end(&self) -> f64 {
        self.start + 2.0 * self.ramp + self.plateau
    }

    fn intensity(&self, t: f64) -> f64 {
        let x = t - self.start;
        if x <= 0.0 || t >= self.end() {
            0.0
        } else if x < self.ramp {
            x / self.ramp
        } else if x <= self.ramp + self.plateau {
            1.0
        } else {
            (self.end() - t) / self.ramp
        }
    }

    /// Rain leads the darkness: it peaks as the plateau begins, then decays.
    fn rain(&self, t: f64) -> f64 {
        const DECAY: f64 = 25.0 * MINUTE;
        let x = t - self.start;
        if x <= 0.0 || t >= self.end() {
            0.0
        } else if x < self.ramp {
            self.rain_peak * x / self.ramp
        } else if x <= self.ramp + self.plateau {
            self.rain_peak * (-(x - self.ramp) / DECAY).exp()
        } else {
            self.rain_peak * (-self.plateau / DECAY).exp() * (self.end() - t) / self.ramp
        }
    }

    fn progress(&self, t: f64) -> f64 {
        ((t - self.start) / (self.end() - self.start)).clamp(0.0, 1.0)
    }
}

/// Deterministic climate for one [`SimConfig`]; evaluates every variable at
/// arbitrary instants inside the configured span.
#[derive(Debug, Clone)]
pub struct WeatherModel {
    latitude: f64,
    longitude: f64,
    volatility: f64,
    origin: f64,
    span_end: f64,
    temperature: Latent,
    depression: Latent,
    pressure: Latent,
    cloud: Latent,
    rain: Latent,
    storms: Vec<Storm>,
}

fn midnight(date: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&date.and_time(NaiveTime::MIN))
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl WeatherModel {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let origin = unix_f64(midnight(config.start_date));
        let span_end = unix_f64(midnight(config.end_date));
        let hours = ((span_end - origin) / HOUR).ceil() as usize + 2;
        let root = SeedStream::new(config.seed).named("weather");

        let mut model = WeatherModel {
            latitude: config.latitude,
            longitude: config.longitude,
            volatility: config.weather_volatility,
            origin,
            span_end,
            temperature: Latent::generate(root.named("temperature"), hours, 0.97),
            depression: Latent::generate(root.named("depression"), hours, 0.9),
            pressure: Latent::generate(root.named("pressure"), hours, 0.995),
            cloud: Latent::generate(root.named("cloud"), hours, 0.92),
            rain: Latent::generate(root.named("rain"), hours, 0.8),
            storms: Vec::new(),
        };
        model.storms = model.place_storms(config, root.named("storms"))?;
        Ok(model)
    }

    pub fn span(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        (
            Utc.timestamp_opt(self.origin as i64, 0).unwrap(),
            Utc.timestamp_opt(self.span_end as i64, 0).unwrap(),
        )
    }

    pub fn storms(&self) -> &[Storm] {
        &self.storms
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.origin && t <= self.span_end
    }

    fn hours(&self, t: f64) -> f64 {
        (t - self.origin) / HOUR
    }

    fn storm_at(&self, t: f64) -> Option<&Storm> {
        let i = self.storms.partition_point(|s| s.end() <= t);
        self.storms.get(i).filter(|s| s.start < t)
    }

    /// Cloud factor before storms, in [`MIN_CLOUD_FACTOR`], 1].
    pub fn base_cloud_factor(&self, t: f64) -> f64 {
        let cover = 0.95 * logistic(1.3 * self.cloud.at(self.hours(t)) + 0.2);
        (1.0 - self.volatility * cover).clamp(MIN_CLOUD_FACTOR, 1.0)
    }

    pub fn cloud_factor(&self, t: f64) -> f64 {
        let base = self.base_cloud_factor(t);
        match self.storm_at(t) {
            Some(s) => (base * (1.0 - 0.9 * s.intensity(t))).max(MIN_CLOUD_FACTOR),
            None => base,
        }
    }

    /// The scalar the photoresistor responds to, expressed as the sun
    /// elevation that would give the same light under a clear sky.
    pub fn effective_elevation(&self, t: f64) -> f64 {
        let mut e = elevation_at(self.latitude, self.longitude, t)
            + CLOUD_DARKENING_DEG * self.base_cloud_factor(t).log10();
        if let Some(s) = self.storm_at(t) {
            e -= s.depth * s.intensity(t);
        }
        e
    }

    fn local_solar_hour(&self, t: f64) -> f64 {
        (t / HOUR + self.longitude / 15.0).rem_euclid(24.0)
    }

    fn day_of_year(&self, t: f64) -> f64 {
        // Days since 1 January of the running year are close enough to the
        // seasonal phase; leap-year drift is a fraction of a day.
        (t / 86_400.0 - 0.5).rem_euclid(365.2425)
    }

    /// Deterministic seasonal + diurnal temperature, °C.
    pub fn baseline_temperature(&self, t: f64) -> f64 {
        // 1970-01-01 is doy 0 in the running count above; the coldest point of
        // the year sits near 1 February.
        let season = (2.0 * std::f64::consts::PI * (self.day_of_year(t) - 31.0) / 365.2425).cos();
        let diurnal_amp = 2.2 - 0.6 * season;
        let diurnal = (2.0 * std::f64::consts::PI * (self.local_solar_hour(t) - 15.0) / 24.0).cos();
        11.0 - 4.5 * season + diurnal_amp * diurnal
    }

    /// Climate at `t`. Errors when `t` is outside the configured span.
    pub fn weather_at(&self, t: DateTime<Utc>) -> Result<WeatherState> {
        let secs = unix_f64(t);
        if !self.covers(secs) {
            return Err(Error::Coverage(t));
        }
        Ok(self.weather_at_secs(secs))
    }

    pub(crate) fn weather_at_secs(&self, t: f64) -> WeatherState {
        use std::f64::consts::PI;
        let h = self.hours(t);
        let vol = self.volatility;
        let storm = self.storm_at(t);
        let solar_hour = self.local_solar_hour(t);
        let diurnal = (2.0 * PI * (solar_hour - 15.0) / 24.0).cos();

        let (cooling, storm_rain, storm_intensity) = match storm {
            Some(s) => (2.5 * s.intensity(t) * s.progress(t), s.rain(t), s.intensity(t)),
            None => (0.0, 0.0, 0.0),
        };

        let temperature = self.baseline_temperature(t) + vol * 1.8 * self.temperature.at(h) - cooling;

        let base_rain = vol * 1.5 * (0.7 * self.cloud.at(h) + 0.71 * self.rain.at(h) - 1.0).max(0.0);
        let precipitation = base_rain + storm_rain;

        let spread = 1.6 + 1.2 * diurnal + vol * 0.8 * self.depression.at(h);
        let wetting = 1.0 - 0.7 * (precipitation / 3.0).min(1.0);
        let depression = (0.2 + spread.max(0.0) + 0.3 * (spread.min(0.0)).exp()) * wetting;
        let dew_point = temperature - depression.max(0.05);

        let season = (2.0 * PI * (self.day_of_year(t) - 31.0) / 365.2425).cos();
        let pressure = 1013.0 + 3.0 * season + 0.6 * (4.0 * PI * (solar_hour - 10.0) / 24.0).cos()
            + vol * 8.0 * self.pressure.at(h)
            - 3.0 * storm_intensity;

        let sin_elev = elevation_at(self.latitude, self.longitude, t).to_radians().sin().max(0.0);
        let c = self.cloud_factor(t);
        let ghi = 1000.0 * sin_elev * c;
        let dhi = ghi * (0.15 + 0.75 * (1.0 - c));
        let bni = 880.0 * sin_elev * c * c;

        WeatherState {
            temperature,
            dew_point,
            pressure,
            precipitation,
            ghi,
            dhi,
            bni,
        }
    }

    fn place_storms(&self, config: &SimConfig, stream: SeedStream) -> Result<Vec<Storm>> {
        let mut storms = Vec::new();
        if config.cloud_event_rate <= 0.0 {
            return Ok(storms);
        }
        let poisson = Poisson::new(config.cloud_event_rate)
            .map_err(|e| Error::input(format!("cloud_event_rate: {e}")))?;
        let plateau_tail = Exp::new(1.0 / 40.0).expect("positive rate");
        let rain_tail = Exp::new(1.0 / 4.0).expect("positive rate");

        let mut date = config.start_date;
        let mut day = 0u64;
        while date < config.end_date {
            let mut rng = stream.index(day).rng();
            let count = poisson.sample(&mut rng) as usize;
            let ev = sun_events(config.latitude, config.longitude, date)?;
            if let (Some(rise), Some(set)) = (ev.sunrise, ev.sunset) {
                let window_start = unix_f64(rise) + 45.0 * MINUTE;
                let window_end = unix_f64(set) - 45.0 * MINUTE;
                let mut today: Vec<Storm> = Vec::new();
                for _ in 0..count {
                    let ramp = rng.random_range(10.0..30.0) * MINUTE;
                    let plateau = (20.0_f64 + plateau_tail.sample(&mut rng)).min(150.0) * MINUTE;
                    let margin = rng.random_range(1.5..6.0);
                    let rain_peak = 2.0 + rain_tail.sample(&mut rng);
                    let position: f64 = rng.random();
                    let length = 2.0 * ramp + plateau;
                    if window_end - window_start <= length {
                        continue;
                    }
                    let start = window_start + position * (window_end - window_start - length);
                    let mut storm = Storm {
                        start,
                        ramp,
                        plateau,
                        depth: 0.0,
                        rain_peak,
                    };
                    if self.base_cloud_factor(start + 0.5 * length) >= HEAVY_CLOUD_FACTOR {
                        continue;
                    }
                    let clash = today
                        .iter()
                        .any(|s| start < s.end() + 30.0 * MINUTE && s.start < storm.end() + 30.0 * MINUTE);
                    if clash {
                        continue;
                    }
                    storm.depth = self.required_depth(&storm, config) + margin;
                    today.push(storm);
                }
                storms.extend(today);
            }
            date += Duration::days(1);
            day += 1;
        }
        storms.sort_by(|a, b| a.start.total_cmp(&b.start));
        Ok(storms)
    }

    /// Darkening needed to push the effective elevation below the switch-on
    /// level everywhere on the storm's plateau.
    fn required_depth(&self, storm: &Storm, config: &SimConfig) -> f64 {
        let on_level = config.switch_on_level();
        let mut worst = f64::NEG_INFINITY;
        let mut t = storm.start;
        while t <= storm.end() {
            let e = elevation_at(self.latitude, self.longitude, t)
                + CLOUD_DARKENING_DEG * self.base_cloud_factor(t).log10();
            worst = worst.max(e - on_level);
            t += 5.0 * MINUTE;
        }
        worst.max(0.0)
    }
}

/// Climate at one instant for `config`. Builds the full model on every call;
/// hold a [`WeatherModel`] when querying repeatedly.
pub fn synth_weather(config: &SimConfig, t: DateTime<Utc>) -> Result<WeatherState> {
    WeatherModel::new(config)?.weather_at(t)
}
