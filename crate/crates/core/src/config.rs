//! Run configuration: a TOML file of `key = value` settings.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{preset, SimConfig};
use crate::detector::DEFAULT_THRESHOLD_PP;
use crate::drift::{SignConvention, DRIFT_LEVELS};
use crate::error::{Error, Result};
use crate::models::{DecisionTreeHP, Family, GradBoostHP, HyperParams, MlpHP, RandomForestHP};
use crate::rng::SeedStream;
use crate::tuning::{DecisionTreeGrid, GradBoostGrid, GridSpec, MlpGrid, RandomForestGrid, DEFAULT_FOLDS};

pub const SEED_ENV: &str = "BEACON_SEED";

fn default_seed() -> u64 {
    42
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_families() -> Vec<Family> {
    Family::ALL.to_vec()
}
fn default_monitor_family() -> Family {
    Family::Mlp
}
fn default_levels() -> Vec<u32> {
    DRIFT_LEVELS.to_vec()
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD_PP
}

/// One `[[stations]]` entry: a preset, a CSV file, or inline coordinates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationEntry {
    pub preset: Option<String>,
    pub csv: Option<PathBuf>,
    pub name: Option<String>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
    pub weather_volatility: Option<f64>,
    pub cloud_event_rate: Option<f64>,
    pub sensor_lux_threshold: Option<f64>,
    pub hysteresis_deg: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSection {
    pub dt: DecisionTreeGrid,
    pub rf: RandomForestGrid,
    pub gb: GradBoostGrid,
    pub mlp: MlpGrid,
}

/// Fixed hyperparameters used by `train` when no tuning result exists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParamSection {
    pub dt: Option<DecisionTreeHP>,
    pub rf: Option<RandomForestHP>,
    pub gb: Option<GradBoostHP>,
    pub mlp: Option<MlpHP>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub fast_grid: bool,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default = "default_monitor_family")]
    pub monitor_family: Family,
    #[serde(default = "default_levels")]
    pub drift_levels: Vec<u32>,
    #[serde(default)]
    pub convention: SignConvention,
    #[serde(default = "default_threshold")]
    pub alert_threshold_pp: f64,
    #[serde(default)]
    pub time_of_day_feature: bool,
    /// Adds every built-in preset to `stations`.
    #[serde(default)]
    pub all_presets: bool,
    #[serde(default)]
    pub stations: Vec<StationEntry>,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub hyperparams: HyperParamSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StationSource {
    Synthetic(SimConfig),
    Csv { name: String, path: PathBuf },
}

impl StationSource {
    pub fn name(&self) -> &str {
        match self {
            StationSource::Synthetic(c) => &c.station_name,
            StationSource::Csv { name, .. } => name,
        }
    }
}

/// File-system-safe form of a station name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

pub fn same_station(a: &str, b: &str) -> bool {
    slug(a) == slug(b)
}

/// A parsed, validated configuration with resolved paths.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub stations: Vec<StationSource>,
    /// SHA-256 of the configuration file bytes, hex encoded.
    pub config_hash: String,
}

impl LoadedConfig {
    pub fn grid(&self, family: Family) -> GridSpec {
        match family {
            Family::DecisionTree => GridSpec::DecisionTree(self.run.tuning.dt.clone()),
            Family::RandomForest => GridSpec::RandomForest(self.run.tuning.rf.clone()),
            Family::GradientBoosting => GridSpec::GradientBoosting(self.run.tuning.gb.clone()),
            Family::Mlp => GridSpec::Mlp(self.run.tuning.mlp.clone()),
        }
    }

    pub fn fixed_hyperparams(&self, family: Family) -> HyperParams {
        let h = &self.run.hyperparams;
        match family {
            Family::DecisionTree => h.dt.clone().map(HyperParams::DecisionTree),
            Family::RandomForest => h.rf.clone().map(HyperParams::RandomForest),
            Family::GradientBoosting => h.gb.clone().map(HyperParams::GradientBoosting),
            Family::Mlp => h.mlp.clone().map(HyperParams::Mlp),
        }
        .unwrap_or_else(|| HyperParams::default_for(family))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn station_source(entry: &StationEntry, seed: u64, base: &Path) -> Result<StationSource> {
    let bad = |m: String| Err(Error::Config(m));
    let inline = entry.latitude.is_some() || entry.longitude.is_some();
    match (&entry.preset, &entry.csv, inline) {
        (Some(p), None, false) => {
            let mut c = preset(p, seed).ok_or_else(|| Error::Config(format!("unknown preset station `{p}`")))?;
            if let Some(n) = &entry.name {
                c.station_name = n.clone();
            }
            apply_overrides(&mut c, entry);
            c.validate().map_err(|e| Error::Config(e.to_string()))?;
            Ok(StationSource::Synthetic(c))
        }
        (None, Some(path), false) => {
            let path = resolve(base, path);
            if !path.is_file() {
                return bad(format!("station file {} does not exist", path.display()));
            }
            let name = entry
                .name
                .clone()
                .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .unwrap_or_default();
            Ok(StationSource::Csv { name, path })
        }
        (None, None, true) => {
            let (Some(lat), Some(lon), Some(name), Some(start), Some(end)) =
                (entry.latitude, entry.longitude, &entry.name, entry.start_date, entry.end_date)
            else {
                return bad("inline stations need name, latitude, longitude, start_date and end_date".into());
            };
            let station_seed = entry
                .seed
                .unwrap_or_else(|| SeedStream::new(seed).named("station").named(name).value());
            let mut c = SimConfig::new(name.clone(), lat, lon, start, end, station_seed);
            apply_overrides(&mut c, entry);
            c.validate().map_err(|e| Error::Config(e.to_string()))?;
            Ok(StationSource::Synthetic(c))
        }
        _ => bad("each station needs exactly one of `preset`, `csv`, or inline coordinates".into()),
    }
}

fn apply_overrides(c: &mut SimConfig, e: &StationEntry) {
    if let Some(v) = e.start_date {
        c.start_date = v;
    }
    if let Some(v) = e.end_date {
        c.end_date = v;
    }
    if let Some(v) = e.weather_volatility {
        c.weather_volatility = v;
    }
    if let Some(v) = e.cloud_event_rate {
        c.cloud_event_rate = v;
    }
    if let Some(v) = e.sensor_lux_threshold {
        c.sensor_lux_threshold = v;
    }
    if let Some(v) = e.hysteresis_deg {
        c.hysteresis_deg = v;
    }
    if let Some(v) = e.seed {
        c.seed = v;
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if self.families.is_empty() {
            return bad("families must not be empty".into());
        }
        if self.drift_levels.first() != Some(&0) || self.drift_levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad("drift_levels must be strictly ascending and start at 0".into());
        }
        if !(self.alert_threshold_pp > 0.0) {
            return bad("alert_threshold_pp must be positive".into());
        }
        if self.stations.is_empty() && !self.all_presets {
            return bad("no stations configured (add [[stations]] entries or set all_presets = true)".into());
        }
        Ok(())
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses configuration text. Relative paths resolve against `base`;
/// `seed_override` replaces the configured seed.
pub fn parse_config(text: &str, base: &Path, seed_override: Option<u64>) -> Result<LoadedConfig> {
    let mut run: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(s) = seed_override {
        run.seed = s;
    }
    run.validate()?;
    run.out_dir = resolve(base, &run.out_dir);
    for family in Family::ALL {
        let grid = LoadedConfig { run: run.clone(), stations: vec![], config_hash: String::new() }.grid(family);
        grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let GridSpec::RandomForest(g) = &grid {
            if !g.learning_rate.is_empty() {
                log::warn!("tuning.rf.learning_rate has no effect on random forests");
            }
        }
    }

    let mut entries = Vec::new();
    if run.all_presets {
        entries.extend(crate::datagen::PRESETS.iter().map(|p| StationEntry {
            preset: Some(p.name.to_string()),
            ..Default::default()
        }));
    }
    entries.extend(run.stations.iter().cloned());
    let stations = entries
        .iter()
        .map(|e| station_source(e, run.seed, base))
        .collect::<Result<Vec<_>>>()?;
    for (i, s) in stations.iter().enumerate() {
        if stations[..i].iter().any(|o| same_station(o.name(), s.name())) {
            return Err(Error::Config(format!("station `{}` is configured twice", s.name())));
        }
    }
    Ok(LoadedConfig { run, stations, config_hash: config_hash(text.as_bytes()) })
}

/// Reads a configuration file, applying `BEACON_SEED` when set.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let seed_override = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
        ),
        Err(_) => None,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base, seed_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadedConfig> {
        parse_config(text, Path::new("/tmp"), None)
    }

    #[test]
    fn minimal_preset_config() {
        let c = parse("all_presets = true\n").unwrap();
        assert_eq!(c.stations.len(), 7);
        assert_eq!(c.run.seed, 42);
        assert_eq!(c.run.drift_levels, DRIFT_LEVELS.to_vec());
        assert_eq!(c.run.out_dir, PathBuf::from("/tmp/out"));
        assert_eq!(c.config_hash.len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("all_presets = true\ncolour = 3\n").is_err());
        assert!(parse("[[stations]]\npreset = \"Lizard\"\nheight = 3\n").is_err());
        assert!(parse("all_presets = true\n[tuning.mlp]\nneurons = [3]\n").is_err());
    }

    #[test]
    fn seed_override_and_grid_override() {
        let text = "seed = 1\nall_presets = true\n[tuning.mlp]\nmax_epochs = 50\nalpha = [0.1]\n";
        let c = parse_config(text, Path::new("."), Some(9)).unwrap();
        assert_eq!(c.run.seed, 9);
        let GridSpec::Mlp(g) = c.grid(Family::Mlp) else { panic!() };
        assert_eq!((g.max_epochs, g.alpha.clone(), g.hidden_layers.len()), (50, vec![0.1], 4));
    }

    #[test]
    fn station_entry_shapes() {
        let inline = r#"
            [[stations]]
            name = "Test Rock"
            latitude = 50.0
            longitude = -5.0
            start_date = "2020-01-01"
            end_date = "2020-03-01"
        "#;
        let c = parse(inline).unwrap();
        assert_eq!(c.stations[0].name(), "Test Rock");
        assert!(parse("[[stations]]\npreset = \"Atlantis\"\n").is_err());
        assert!(parse("[[stations]]\ncsv = \"missing.csv\"\n").is_err());
        assert!(parse("[[stations]]\npreset = \"Lizard\"\ncsv = \"x.csv\"\n").is_err());
        assert!(parse("all_presets = true\n[[stations]]\npreset = \"lizard\"\n").is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(parse("all_presets = true\ndrift_levels = [5, 10]\n").is_err());
        assert!(parse("all_presets = true\ntest_fraction = 1.5\n").is_err());
        assert!(parse("").is_err());
        assert!(parse("all_presets = true\n[tuning.gb]\nmax_depth = []\n").is_err());
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Bishop Rock"), "bishop-rock");
        assert_eq!(slug("  Wolf_Rock! "), "wolf-rock");
        assert!(same_station("wolf rock", "Wolf-Rock"));
    }
}
