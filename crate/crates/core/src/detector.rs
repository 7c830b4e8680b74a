//! Baseline-versus-drifted scoring and fault verdicts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{FeatureSet, StationDataset};
use crate::drift::{apply_drift, ClimateSource, DriftSpec, SignConvention};
use crate::error::{Error, Result};
use crate::metrics::{score, Metric, MetricReport};
use crate::models::FittedModel;

/// Default alert threshold, in percentage points.
pub const DEFAULT_THRESHOLD_PP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultVerdict {
    pub fault: bool,
    /// `current − baseline`, as a fraction.
    pub delta: f64,
}

/// Fault when the metric fell by strictly more than `threshold` (a fraction).
pub fn detect_fault(baseline: &MetricReport, current: &MetricReport, threshold: f64, metric: Metric) -> FaultVerdict {
    let delta = current.get(metric) - baseline.get(metric);
    FaultVerdict { fault: -delta > threshold, delta }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub accuracy: f64,
    pub f1_on: f64,
    pub f1_off: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub accuracy: bool,
    pub f1_on: bool,
    pub f1_off: bool,
}

impl MetricFlags {
    pub fn any(&self) -> bool {
        self.accuracy || self.f1_on || self.f1_off
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub minutes: u32,
    pub rows: usize,
    pub metrics: MetricReport,
    /// Signed change from level 0, in percentage points.
    pub delta_pp: MetricDeltas,
    pub dropped_pairs: usize,
    pub dropped_out_of_coverage: usize,
    pub faults: MetricFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    pub station: String,
    pub model: String,
    pub convention: SignConvention,
    pub threshold_pp: f64,
    pub baseline: MetricReport,
    pub levels: Vec<LevelResult>,
    /// Mean accuracy change over the non-zero levels, in percentage points.
    pub mean_accuracy_delta_pp: f64,
    pub fault: bool,
}

impl DegradationReport {
    pub fn accuracy_curve(&self) -> Vec<(u32, f64)> {
        self.levels.iter().map(|l| (l.minutes, l.metrics.accuracy)).collect()
    }

    pub fn level(&self, minutes: u32) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.minutes == minutes)
    }

    /// Copy with metrics and deltas rounded to four decimals.
    pub fn rounded(&self) -> DegradationReport {
        let r = |v: f64| (v * 1e4).round() / 1e4;
        let mut out = self.clone();
        out.baseline = out.baseline.rounded();
        out.mean_accuracy_delta_pp = r(out.mean_accuracy_delta_pp);
        for l in &mut out.levels {
            l.metrics = l.metrics.rounded();
            l.delta_pp = MetricDeltas {
                accuracy: r(l.delta_pp.accuracy),
                f1_on: r(l.delta_pp.f1_on),
                f1_off: r(l.delta_pp.f1_off),
            };
        }
        out
    }
}

pub struct CurveSpec<'a> {
    pub levels: &'a [u32],
    pub convention: SignConvention,
    pub threshold_pp: f64,
    pub features: FeatureSet,
    pub model_id: String,
}

fn evaluate(model: &FittedModel, ds: &StationDataset, features: FeatureSet) -> Result<MetricReport> {
    let x = features.matrix(&ds.observations);
    score(&ds.labels(), &model.predict(x.view())?)
}

/// Scores `model` on `test` drifted by each level and compares every level
/// against level 0.
pub fn degradation_curve(
    model: &FittedModel,
    test: &StationDataset,
    spec: &CurveSpec,
    climate: &dyn ClimateSource,
) -> Result<DegradationReport> {
    let levels = spec.levels;
    if levels.first() != Some(&0) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("drift levels must be strictly ascending and start at 0"));
    }
    if !(spec.threshold_pp > 0.0) {
        return Err(Error::input(format!("alert threshold {} must be positive", spec.threshold_pp)));
    }

    let scored: Vec<(MetricReport, usize, usize, usize)> = levels
        .par_iter()
        .map(|&minutes| {
            let at_level = |source: Error| Error::AtLevel { minutes, source: Box::new(source) };
            let out = apply_drift(test, DriftSpec::new(minutes, spec.convention), climate).map_err(at_level)?;
            let metrics = evaluate(model, &out.dataset, spec.features).map_err(at_level)?;
            Ok((metrics, out.dataset.len(), out.report.dropped_pairs, out.report.dropped_out_of_coverage))
        })
        .collect::<Result<_>>()?;

    let baseline = scored[0].0;
    let threshold = spec.threshold_pp / 100.0;
    let results: Vec<LevelResult> = levels
        .iter()
        .zip(&scored)
        .map(|(&minutes, &(metrics, rows, dropped_pairs, dropped_out_of_coverage))| {
            let verdict = |m| detect_fault(&baseline, &metrics, threshold, m);
            let (acc, on, off) = (verdict(Metric::Accuracy), verdict(Metric::F1On), verdict(Metric::F1Off));
            LevelResult {
                minutes,
                rows,
                metrics,
                delta_pp: MetricDeltas {
                    accuracy: 100.0 * acc.delta,
                    f1_on: 100.0 * on.delta,
                    f1_off: 100.0 * off.delta,
                },
                dropped_pairs,
                dropped_out_of_coverage,
                faults: MetricFlags { accuracy: acc.fault, f1_on: on.fault, f1_off: off.fault },
            }
        })
        .collect();

    let drifted: Vec<f64> = results.iter().skip(1).map(|l| l.delta_pp.accuracy).collect();
    let mean_accuracy_delta_pp = if drifted.is_empty() {
        0.0
    } else {
        drifted.iter().sum::<f64>() / drifted.len() as f64
    };
    Ok(DegradationReport {
        station: test.station_name.clone(),
        model: spec.model_id.clone(),
        convention: spec.convention,
        threshold_pp: spec.threshold_pp,
        baseline,
        fault: results.iter().any(|l| l.faults.any()),
        levels: results,
        mean_accuracy_delta_pp,
    })
}

/// Count of adjacent increases in `values`, and whether every increase is
/// at most `tolerance`.
pub fn inversions(values: &[f64], tolerance: f64) -> (usize, bool) {
    let ups: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    (ups.len(), ups.iter().all(|&d| d <= tolerance))
}
