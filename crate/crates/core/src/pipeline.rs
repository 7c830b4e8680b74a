//! The stages behind the CLI subcommands and the on-disk layout they share.
//!
//! ```text
//! <out>/data/<station>.csv                     generated datasets
//! <out>/tuning/<station>/<family>.json         grid-search results
//! <out>/models/<station>/<family>.json         fitted models
//! <out>/drift/<station>/drift_<m>min.csv       drifted datasets
//! <out>/reports/evaluation.json                baseline metrics
//! <out>/reports/comparison.json                Friedman + post hoc per metric
//! <out>/reports/degradation/<station>.json     degradation reports
//! <out>/figures/<metric>.svg                   degradation charts
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{slug, same_station, LoadedConfig, StationSource};
use crate::datagen::{generate_station_dataset, WeatherModel};
use crate::datastore::{read_dataset_csv, read_json, write_bytes, write_dataset_csv_with, write_json};
use crate::detector::{degradation_curve, CurveSpec, DegradationReport};
use crate::domain::{FeatureSet, StationDataset};
use crate::drift::{apply_drift, ClimateSource, DriftReport, DriftSpec, InterpolatedClimate};
use crate::error::{Error, Result};
use crate::metrics::{score, Metric};
use crate::models::{fit, Family, FittedModel, HyperParams};
use crate::preprocess::{chrono_split, split_dataset};
use crate::report::{svg_line_chart, EvaluationRow, EvaluationTable, RunStamp, Series, Stamped};
use crate::rng::SeedStream;
use crate::stats::{friedman_test, FriedmanResult, ScoreMatrix};
use crate::tuning::{fast_subset, search_candidates, TuneResult, FAST_GRID_SIZE};

/// Command-line selections layered over the configuration.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub station: Option<String>,
    pub family: Option<Family>,
    pub fast_grid: bool,
    pub out_dir: Option<PathBuf>,
}

pub struct StationData {
    pub source: StationSource,
    pub dataset: StationDataset,
    pub train: StationDataset,
    pub test: StationDataset,
    pub climate: Box<dyn ClimateSource>,
}

impl StationData {
    pub fn name(&self) -> &str {
        &self.dataset.station_name
    }

    pub fn slug(&self) -> String {
        slug(self.name())
    }
}

pub type ModelSet = BTreeMap<(String, Family), FittedModel>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub families: Vec<String>,
    pub stations: Vec<String>,
    pub by_metric: BTreeMap<String, FriedmanResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub family: String,
    pub threshold_pp: f64,
    pub stations: Vec<StationVerdict>,
    pub fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationVerdict {
    pub station: String,
    pub fault: bool,
    pub mean_accuracy_delta_pp: f64,
    pub first_fault_minutes: Option<u32>,
}

pub struct Pipeline {
    pub config: LoadedConfig,
    pub options: Options,
    pub stamp: RunStamp,
    pub out: PathBuf,
}

impl Pipeline {
    pub fn new(config: LoadedConfig, options: Options) -> Result<Self> {
        if let Some(name) = &options.station {
            if !config.stations.iter().any(|s| same_station(s.name(), name)) {
                return Err(Error::Config(format!("station `{name}` is not in the configuration")));
            }
        }
        if let Some(f) = options.family {
            if !config.run.families.contains(&f) {
                log::warn!("family {f} is not listed in the configuration; running it anyway");
            }
        }
        let stamp = RunStamp::new(config.config_hash.clone(), config.run.seed);
        let out = options.out_dir.clone().unwrap_or_else(|| config.run.out_dir.clone());
        Ok(Pipeline { config, options, stamp, out })
    }

    pub fn features(&self) -> FeatureSet {
        FeatureSet { time_of_day: self.config.run.time_of_day_feature }
    }

    pub fn families(&self) -> Vec<Family> {
        match self.options.family {
            Some(f) => vec![f],
            None => self.config.run.families.clone(),
        }
    }

    fn selected_sources(&self) -> Vec<&StationSource> {
        self.config
            .stations
            .iter()
            .filter(|s| self.options.station.as_deref().is_none_or(|n| same_station(s.name(), n)))
            .collect()
    }

    fn stamped<T>(&self, body: T) -> Stamped<T> {
        Stamped { run: self.stamp.clone(), body }
    }

    pub fn path(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.out.clone(), |p, s| p.join(s))
    }

    fn model_path(&self, station: &str, family: Family) -> PathBuf {
        self.path(&["models", &slug(station), &format!("{}.json", family.code())])
    }

    fn tuning_path(&self, station: &str, family: Family) -> PathBuf {
        self.path(&["tuning", &slug(station), &format!("{}.json", family.code())])
    }

    /// Loads or generates every selected station and splits it.
    pub fn load_stations(&self) -> Result<Vec<StationData>> {
        self.selected_sources()
            .into_par_iter()
            .map(|source| {
                let (dataset, climate): (StationDataset, Box<dyn ClimateSource>) = match source {
                    StationSource::Synthetic(c) => (generate_station_dataset(c)?, Box::new(WeatherModel::new(c)?)),
                    StationSource::Csv { path, .. } => {
                        let ds = read_dataset_csv(path)?;
                        let climate = Box::new(InterpolatedClimate::from_dataset(&ds));
                        (ds, climate)
                    }
                };
                let plan = chrono_split(&dataset, self.config.run.test_fraction)?;
                let (train, test) = split_dataset(&dataset, &plan);
                Ok(StationData { source: source.clone(), dataset, train, test, climate })
            })
            .collect()
    }

    /// Writes the synthetic stations' datasets.
    pub fn generate(&self, stations: &[StationData]) -> Result<Vec<PathBuf>> {
        stations
            .iter()
            .filter(|s| matches!(s.source, StationSource::Synthetic(_)))
            .map(|s| {
                let path = self.path(&["data", &format!("{}.csv", s.slug())]);
                write_dataset_csv_with(&s.dataset, &path, &self.stamp.csv_fields())?;
                log::info!("wrote {}", path.display());
                Ok(path)
            })
            .collect()
    }

    fn tune_seed(&self, station: &str, family: Family) -> u64 {
        SeedStream::new(self.config.run.seed).named("tune").named(&slug(station)).named(family.code()).value()
    }

    fn model_seed(&self, station: &str, family: Family) -> u64 {
        SeedStream::new(self.config.run.seed).named("model").named(&slug(station)).named(family.code()).value()
    }

    pub fn tune(&self, stations: &[StationData]) -> Result<BTreeMap<(String, Family), TuneResult>> {
        let fast = self.options.fast_grid || self.config.run.fast_grid;
        let jobs: Vec<(&StationData, Family)> =
            stations.iter().flat_map(|s| self.families().into_iter().map(move |f| (s, f))).collect();
        let results: Vec<((String, Family), TuneResult)> = jobs
            .into_par_iter()
            .map(|(s, family)| {
                let mut candidates = self.config.grid(family).candidates();
                if fast {
                    candidates = fast_subset(candidates, FAST_GRID_SIZE);
                }
                let x = self.features().matrix(&s.train.observations);
                let n = candidates.len();
                let search = search_candidates(candidates, x.view(), &s.train.labels(), self.config.run.folds, self.tune_seed(s.name(), family))?;
                let path = self.tuning_path(s.name(), family);
                write_json(&self.stamped(&search.result), &path)?;
                log::info!(
                    "{} {}: best of {n} candidates, cv accuracy {:.4}",
                    s.name(),
                    family,
                    search.result.candidates[search.result.best_index].mean_accuracy
                );
                Ok(((s.name().to_string(), family), search.result))
            })
            .collect::<Result<_>>()?;
        Ok(results.into_iter().collect())
    }

    fn hyperparams_for(&self, station: &str, family: Family, tuned: Option<&TuneResult>) -> Result<HyperParams> {
        if let Some(t) = tuned {
            return Ok(t.best.clone());
        }
        let path = self.tuning_path(station, family);
        if path.is_file() {
            let t: TuneResult = read_json(&path)?;
            return Ok(t.best);
        }
        Ok(self.config.fixed_hyperparams(family))
    }

    /// Fits each family on each station's training split, using tuned
    /// hyperparameters when available.
    pub fn train(
        &self,
        stations: &[StationData],
        tuned: Option<&BTreeMap<(String, Family), TuneResult>>,
    ) -> Result<ModelSet> {
        let jobs: Vec<(&StationData, Family)> =
            stations.iter().flat_map(|s| self.families().into_iter().map(move |f| (s, f))).collect();
        let models: Vec<((String, Family), FittedModel)> = jobs
            .into_par_iter()
            .map(|(s, family)| {
                let key = (s.name().to_string(), family);
                let hp = self.hyperparams_for(s.name(), family, tuned.and_then(|t| t.get(&key)))?;
                let x = self.features().matrix(&s.train.observations);
                let model = fit(x.view(), &s.train.labels(), &hp, self.model_seed(s.name(), family))?;
                write_json(&self.stamped(&model), &self.model_path(s.name(), family))?;
                Ok((key, model))
            })
            .collect::<Result<_>>()?;
        Ok(models.into_iter().collect())
    }

    fn load_model(&self, station: &str, family: Family) -> Result<FittedModel> {
        let path = self.model_path(station, family);
        if !path.is_file() {
            return Err(Error::input(format!(
                "no {family} model for {station} at {} (run `beacon train` first)",
                path.display()
            )));
        }
        crate::datastore::read_model_json(&path)
    }

    fn model<'a>(&self, models: Option<&'a ModelSet>, station: &str, family: Family) -> Result<std::borrow::Cow<'a, FittedModel>> {
        match models.and_then(|m| m.get(&(station.to_string(), family))) {
            Some(m) => Ok(std::borrow::Cow::Borrowed(m)),
            None => Ok(std::borrow::Cow::Owned(self.load_model(station, family)?)),
        }
    }

    /// Baseline test-split metrics for every station and family.
    pub fn evaluate(&self, stations: &[StationData], models: Option<&ModelSet>) -> Result<EvaluationTable> {
        let mut rows = Vec::new();
        for s in stations {
            let x = self.features().matrix(&s.test.observations);
            for family in self.families() {
                let model = self.model(models, s.name(), family)?;
                let metrics = score(&s.test.labels(), &model.predict(x.view())?)?;
                rows.push(EvaluationRow {
                    station: s.name().to_string(),
                    family: family.label().to_string(),
                    test_rows: s.test.len(),
                    metrics: metrics.rounded(),
                });
            }
        }
        let table = EvaluationTable { rows };
        write_json(&self.stamped(&table), &self.path(&["reports", "evaluation.json"]))?;
        Ok(table)
    }

    pub fn read_evaluation(&self) -> Result<EvaluationTable> {
        let path = self.path(&["reports", "evaluation.json"]);
        if !path.is_file() {
            return Err(Error::input(format!("{} not found (run `beacon evaluate` first)", path.display())));
        }
        read_json(&path)
    }

    /// Friedman test with post hoc comparisons on each metric.
    pub fn compare(&self, table: &EvaluationTable) -> Result<Comparison> {
        let stations = table.stations();
        let families = table.families();
        let mut by_metric = BTreeMap::new();
        for metric in Metric::ALL {
            let rows = stations
                .iter()
                .map(|st| {
                    families
                        .iter()
                        .map(|f| {
                            table.get(st, f).map(|m| m.get(metric)).ok_or_else(|| {
                                Error::input(format!("evaluation lacks {f} for {st}"))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let matrix = ScoreMatrix::new(families.clone(), rows)?;
            by_metric.insert(metric.name().to_string(), friedman_test(&matrix)?);
        }
        let cmp = Comparison { families, stations, by_metric };
        write_json(&self.stamped(&cmp), &self.path(&["reports", "comparison.json"]))?;
        Ok(cmp)
    }

    /// Writes each station's full dataset drifted by every configured level.
    pub fn drift(&self, stations: &[StationData]) -> Result<Vec<DriftReport>> {
        let jobs: Vec<(&StationData, u32)> = stations
            .iter()
            .flat_map(|s| self.config.run.drift_levels.iter().map(move |&m| (s, m)))
            .collect();
        jobs.into_par_iter()
            .map(|(s, minutes)| {
                let spec = DriftSpec::new(minutes, self.config.run.convention);
                let out = apply_drift(&s.dataset, spec, s.climate.as_ref())
                    .map_err(|e| Error::AtLevel { minutes, source: Box::new(e) })?;
                let mut provenance = spec.provenance();
                provenance.extend(self.stamp.csv_fields());
                let path = self.path(&["drift", &s.slug(), &format!("drift_{minutes}min.csv")]);
                write_dataset_csv_with(&out.dataset, &path, &provenance)?;
                Ok(out.report)
            })
            .collect()
    }

    /// Degradation curves for the monitored family, with per-station
    /// reports, one chart per metric and an overall verdict.
    pub fn monitor(&self, stations: &[StationData], models: Option<&ModelSet>) -> Result<(Vec<DegradationReport>, MonitorSummary)> {
        let family = self.options.family.unwrap_or(self.config.run.monitor_family);
        let reports: Vec<DegradationReport> = stations
            .par_iter()
            .map(|s| {
                let model = self.model(models, s.name(), family)?;
                let spec = CurveSpec {
                    levels: &self.config.run.drift_levels,
                    convention: self.config.run.convention,
                    threshold_pp: self.config.run.alert_threshold_pp,
                    features: self.features(),
                    model_id: format!("{}/{}", s.slug(), family.code()),
                };
                let report = degradation_curve(&model, &s.test, &spec, s.climate.as_ref())?.rounded();
                write_json(&self.stamped(&report), &self.path(&["reports", "degradation", &format!("{}.json", s.slug())]))?;
                Ok(report)
            })
            .collect::<Result<_>>()?;

        for metric in Metric::ALL {
            let series: Vec<Series> = reports
                .iter()
                .map(|r| Series {
                    label: r.station.clone(),
                    points: r.levels.iter().map(|l| (f64::from(l.minutes), l.metrics.get(metric))).collect(),
                })
                .collect();
            let title = format!("{} under drift ({})", metric.name(), family.label());
            let svg = svg_line_chart(&title, "drift (minutes)", metric.name(), &series);
            write_bytes(&self.path(&["figures", &format!("{}.svg", metric.name())]), svg.as_bytes())?;
        }

        let verdicts: Vec<StationVerdict> = reports
            .iter()
            .map(|r| StationVerdict {
                station: r.station.clone(),
                fault: r.fault,
                mean_accuracy_delta_pp: r.mean_accuracy_delta_pp,
                first_fault_minutes: r.levels.iter().find(|l| l.faults.any()).map(|l| l.minutes),
            })
            .collect();
        let summary = MonitorSummary {
            family: family.code().to_string(),
            threshold_pp: self.config.run.alert_threshold_pp,
            fault: verdicts.iter().any(|v| v.fault),
            stations: verdicts,
        };
        write_json(&self.stamped(&summary), &self.path(&["reports", "monitor.json"]))?;
        Ok((reports, summary))
    }
}

/// Human-readable degradation table for the terminal.
pub fn render_monitor(reports: &[DegradationReport], summary: &MonitorSummary) -> String {
    let mut s = format!("accuracy under drift, family {} (threshold {} pp)\n", summary.family, summary.threshold_pp);
    if let Some(first) = reports.first() {
        s.push_str(&format!("{:<16}", "station"));
        for l in &first.levels {
            s.push_str(&format!("{:>8}", format!("{}m", l.minutes)));
        }
        s.push_str(&format!("{:>10}{:>7}\n", "mean Δpp", "fault"));
    }
    for r in reports {
        s.push_str(&format!("{:<16}", r.station));
        for l in &r.levels {
            s.push_str(&format!("{:>8.2}", 100.0 * l.metrics.accuracy));
        }
        s.push_str(&format!("{:>10.2}{:>7}\n", r.mean_accuracy_delta_pp, if r.fault { "yes" } else { "no" }));
    }
    s
}

pub fn render_comparison(cmp: &Comparison) -> String {
    let mut s = String::new();
    for (metric, r) in &cmp.by_metric {
        s.push_str(&format!(
            "{metric}: Friedman χ² = {:.3}, p = {:.4}, control {}\n",
            r.statistic, r.p_value, r.algorithms[r.control]
        ));
        for (a, rank) in r.algorithms.iter().zip(&r.average_ranks) {
            s.push_str(&format!("  {a:<6} rank {rank:.2}"));
            if let Some(c) = r.comparisons.iter().find(|c| &c.algorithm == a) {
                s.push_str(&format!("  z {:+.3}  p {:.4}  p_adj {:.4}", c.z, c.p_raw, c.p_adjusted));
            }
            s.push('\n');
        }
    }
    s
}
