//! Batch experiments and report generation.
//!
//! The batch runner walks a corpus hour by hour: build both step curves,
//! clear them exactly, truncate to the fitting cap, fit both sides, intersect
//! the fitted models, and record the price error the compression introduced.
//! Hours that cannot complete the pipeline are recorded as skipped with a
//! reason; a year-long run never dies on one bad hour.
//!
//! Emitted reports are deterministic: records are ordered by `(date, hour)`,
//! floats are printed at full round-trip precision, and wall-clock timings
//! stay out of the files (they go to the API and stderr instead), so two runs
//! with the same inputs produce byte-identical outputs regardless of the
//! worker count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{fit_curve, intersect_fitted, FitError, FittedCurve, SegmentationMethod};
use crate::ingest::Corpus;
use crate::lm::SolveSettings;
use crate::market::{build_demand_curve, build_supply_curve, clear_market, CurveError, Side};
use crate::model::{ErfSumModel, Provenance};

/// Fitting configuration for a batch run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub m_supply: usize,
    pub m_demand: usize,
    pub method: SegmentationMethod,
    /// Fitting price cap in euro; curves are truncated here before fitting.
    pub price_cap: f64,
    pub solver: SolveSettings<f64>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            m_supply: 15,
            m_demand: 5,
            method: SegmentationMethod::Plateau,
            price_cap: 400.0,
            solver: SolveSettings::default(),
        }
    }
}

/// Outcome of one processed hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub date: NaiveDate,
    pub hour: u8,
    /// Clearing price of the untruncated step curves.
    pub exact_price: f64,
    pub exact_quantity: f64,
    /// Clearing price of the fitted models on the truncated curves.
    pub fitted_price: f64,
    pub fitted_quantity: f64,
    pub abs_error: f64,
    pub supply_terms: usize,
    pub demand_terms: usize,
    /// Wall time spent fitting this hour; excluded from serialized reports.
    #[serde(skip)]
    pub fit_time: Duration,
}

/// Why an hour was left out of the aggregates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Offers or bids missing for the hour.
    MissingSide,
    /// No breakpoints left under the price cap.
    EmptyAfterTruncation,
    /// The step curves never cross.
    NoStepIntersection,
    /// The exact clearing price exceeds the fitting cap.
    PriceAboveCap,
    /// The fitted models never cross inside the common domain.
    NoFittedIntersection,
    /// Curve construction or fitting failed outright.
    FitFailed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedHour {
    pub date: NaiveDate,
    pub hour: u8,
    pub reason: SkipReason,
}

/// Batch results: per-hour records plus corpus-level aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: BatchConfig,
    pub records: Vec<HourRecord>,
    pub skipped: Vec<SkippedHour>,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// Total fitting wall time; excluded from serialized reports.
    #[serde(skip)]
    pub total_fit_time: Duration,
    /// End-to-end batch wall time; excluded from serialized reports.
    #[serde(skip)]
    pub total_time: Duration,
}

/// Per-index coefficient spread across a collection of fitted models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMeanMax {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub side: Side,
    pub curves: usize,
    pub term_count: usize,
    pub amplitude: Vec<MinMeanMax>,
    pub center: Vec<MinMeanMax>,
    pub shape: Vec<MinMeanMax>,
}

/// Mean offer/bid layer counts over one grouping key.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCountMeans {
    pub offers: f64,
    pub bids: f64,
}

/// Mean layer counts grouped by hour of day, weekday, and month.
///
/// Only keys observed in the corpus appear; a full-year corpus covers every
/// key of each dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCountStats {
    pub by_hour: Vec<(u8, LayerCountMeans)>,
    pub by_weekday: Vec<(String, LayerCountMeans)>,
    pub by_month: Vec<(u8, LayerCountMeans)>,
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("every hour of the corpus was skipped; nothing to report")]
    EmptyReport,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Models fitted for one hour, kept so callers can dump or plot them.
#[derive(Clone, Debug, PartialEq)]
pub struct HourModels {
    pub date: NaiveDate,
    pub hour: u8,
    pub supply: FittedCurve<f64>,
    pub demand: FittedCurve<f64>,
}

/// A full batch outcome: the report plus the fitted models per hour.
pub struct BatchOutcome {
    pub report: FitReport,
    pub models: Vec<HourModels>,
}

/// Runs the fit/intersect pipeline over every hour of the corpus.
///
/// Hours are processed on the current rayon thread pool; results are merged
/// in corpus order so the report is identical for any worker count.
pub fn run_batch(corpus: &Corpus, config: &BatchConfig) -> Result<FitReport, AnalyticsError> {
    run_batch_with_models(corpus, config).map(|outcome| outcome.report)
}

/// Like [`run_batch`], also returning the fitted models of processed hours.
pub fn run_batch_with_models(
    corpus: &Corpus,
    config: &BatchConfig,
) -> Result<BatchOutcome, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let started = Instant::now();
    let outcomes: Vec<Result<(HourRecord, HourModels), SkippedHour>> = corpus
        .hours
        .par_iter()
        .map(|auction| process_hour(auction, config))
        .collect();

    let mut records = Vec::new();
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((record, model)) => {
                records.push(record);
                models.push(model);
            }
            Err(skip) => skipped.push(skip),
        }
    }
    if records.is_empty() {
        return Err(AnalyticsError::EmptyReport);
    }
    let mean_abs_error =
        records.iter().map(|r| r.abs_error).sum::<f64>() / records.len() as f64;
    let max_abs_error =
        records.iter().map(|r| r.abs_error).fold(0.0f64, f64::max);
    let total_fit_time = records.iter().map(|r| r.fit_time).sum();
    let report = FitReport {
        config: config.clone(),
        records,
        skipped,
        mean_abs_error,
        max_abs_error,
        total_fit_time,
        total_time: started.elapsed(),
    };
    Ok(BatchOutcome { report, models })
}

fn process_hour(
    auction: &crate::ingest::HourlyAuction,
    config: &BatchConfig,
) -> Result<(HourRecord, HourModels), SkippedHour> {
    let skip = |reason| SkippedHour { date: auction.date, hour: auction.hour, reason };
    if !auction.fittable() {
        return Err(skip(SkipReason::MissingSide));
    }
    let supply = build_supply_curve(&auction.offers)
        .map_err(|e| skip(SkipReason::FitFailed(e.to_string())))?;
    let demand = build_demand_curve(&auction.bids)
        .map_err(|e| skip(SkipReason::FitFailed(e.to_string())))?;

    let exact = match clear_market(&supply, &demand) {
        Ok(eq) => eq,
        Err(CurveError::NoIntersection) => return Err(skip(SkipReason::NoStepIntersection)),
        Err(e) => return Err(skip(SkipReason::FitFailed(e.to_string()))),
    };
    if exact.price > config.price_cap {
        return Err(skip(SkipReason::PriceAboveCap));
    }

    let truncated_supply = match supply.truncate(config.price_cap) {
        Ok(c) => c,
        Err(CurveError::EmptyCurve) => return Err(skip(SkipReason::EmptyAfterTruncation)),
        Err(e) => return Err(skip(SkipReason::FitFailed(e.to_string()))),
    };
    let truncated_demand = match demand.truncate(config.price_cap) {
        Ok(c) => c,
        Err(CurveError::EmptyCurve) => return Err(skip(SkipReason::EmptyAfterTruncation)),
        Err(e) => return Err(skip(SkipReason::FitFailed(e.to_string()))),
    };

    let fit_started = Instant::now();
    let fitted_supply =
        fit_curve(&truncated_supply, config.m_supply, config.method, &config.solver)
            .map_err(|e| skip(SkipReason::FitFailed(e.to_string())))?;
    let fitted_demand =
        fit_curve(&truncated_demand, config.m_demand, config.method, &config.solver)
            .map_err(|e| skip(SkipReason::FitFailed(e.to_string())))?;
    let fit_time = fit_started.elapsed();

    let q_max = truncated_supply.total_quantity().min(truncated_demand.total_quantity());
    let approx = match intersect_fitted(&fitted_supply.model, &fitted_demand.model, q_max) {
        Ok(eq) => eq,
        // Fitted demand covers fitted supply across the whole domain: one
        // side's volume runs out first, the same boundary case the exact
        // clearing resolves at the supply price of the domain edge.
        Err(FitError::NoIntersectionInDomain) => crate::market::Equilibrium {
            price: fitted_supply.model.evaluate(q_max),
            quantity: q_max,
            degenerate: false,
        },
        Err(FitError::NoIntersection) => {
            return Err(skip(SkipReason::NoFittedIntersection))
        }
        Err(e) => return Err(skip(SkipReason::FitFailed(e.to_string()))),
    };

    let provenance = |m: usize| Provenance {
        date: Some(auction.date),
        hour: Some(auction.hour),
        m,
    };
    let supply_terms = fitted_supply.model.terms().len();
    let demand_terms = fitted_demand.model.terms().len();
    let record = HourRecord {
        date: auction.date,
        hour: auction.hour,
        exact_price: exact.price,
        exact_quantity: exact.quantity,
        fitted_price: approx.price,
        fitted_quantity: approx.quantity,
        abs_error: (exact.price - approx.price).abs(),
        supply_terms,
        demand_terms,
        fit_time,
    };
    let models = HourModels {
        date: auction.date,
        hour: auction.hour,
        supply: FittedCurve {
            model: fitted_supply.model.with_provenance(provenance(config.m_supply)),
            segments: fitted_supply.segments,
            fit_time: fitted_supply.fit_time,
        },
        demand: FittedCurve {
            model: fitted_demand.model.with_provenance(provenance(config.m_demand)),
            segments: fitted_demand.segments,
            fit_time: fitted_demand.fit_time,
        },
    };
    Ok((record, models))
}

/// Mean offer/bid layer counts keyed by hour of day, weekday, and month.
pub fn layer_stats(corpus: &Corpus) -> Result<LayerCountStats, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let mut by_hour: BTreeMap<u8, (f64, f64, usize)> = BTreeMap::new();
    let mut by_weekday: BTreeMap<u8, (f64, f64, usize)> = BTreeMap::new();
    let mut by_month: BTreeMap<u8, (f64, f64, usize)> = BTreeMap::new();
    for auction in &corpus.hours {
        let offers = auction.offers.len() as f64;
        let bids = auction.bids.len() as f64;
        let entries = [
            by_hour.entry(auction.hour),
            by_weekday.entry(auction.date.weekday().num_days_from_monday() as u8),
            by_month.entry(auction.date.month() as u8),
        ];
        for entry in entries {
            let slot = entry.or_insert((0.0, 0.0, 0));
            slot.0 += offers;
            slot.1 += bids;
            slot.2 += 1;
        }
    }
    let mean = |(offers, bids, n): (f64, f64, usize)| LayerCountMeans {
        offers: offers / n as f64,
        bids: bids / n as f64,
    };
    Ok(LayerCountStats {
        by_hour: by_hour.into_iter().map(|(k, v)| (k, mean(v))).collect(),
        by_weekday: by_weekday
            .into_iter()
            .map(|(k, v)| (weekday_name(k).to_string(), mean(v)))
            .collect(),
        by_month: by_month.into_iter().map(|(k, v)| (k, mean(v))).collect(),
    })
}

fn weekday_name(days_from_monday: u8) -> &'static str {
    match days_from_monday {
        0 => "monday",
        1 => "tuesday",
        2 => "wednesday",
        3 => "thursday",
        4 => "friday",
        5 => "saturday",
        _ => "sunday",
    }
}

/// Per-index min/mean/max of the model coefficients across a collection of
/// fitted curves of the same side and term count.
pub fn coefficient_stats(models: &[ErfSumModel<f64>]) -> Result<CoefficientStats, AnalyticsError> {
    let first = models.first().ok_or(AnalyticsError::EmptyCorpus)?;
    let side = first.side();
    let term_count = first.terms().len();
    for m in models {
        if m.side() != side {
            return Err(AnalyticsError::InvalidInput("models mix supply and demand".into()));
        }
        if m.terms().len() != term_count {
            return Err(AnalyticsError::InvalidInput(format!(
                "models mix term counts {} and {}",
                term_count,
                m.terms().len()
            )));
        }
    }
    let stat = |extract: fn(&crate::model::ErfTerm<f64>) -> f64| -> Vec<MinMeanMax> {
        (0..term_count)
            .map(|i| {
                let values: Vec<f64> = models.iter().map(|m| extract(&m.terms()[i])).collect();
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                MinMeanMax { min, mean, max }
            })
            .collect()
    };
    Ok(CoefficientStats {
        side,
        curves: models.len(),
        term_count,
        amplitude: stat(|t| t.amplitude),
        center: stat(|t| t.center),
        shape: stat(|t| t.shape),
    })
}

/// Output format for emitted reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Anything the CLI can write to disk.
pub enum Report<'a> {
    Fit(&'a FitReport),
    Coefficients(&'a CoefficientStats),
    LayerCounts(&'a LayerCountStats),
}

/// Writes a report deterministically in the requested format.
pub fn emit_report(report: &Report<'_>, format: ReportFormat, path: &Path) -> Result<(), AnalyticsError> {
    let file =
        File::create(path).map_err(|source| AnalyticsError::Io { path: path.into(), source })?;
    let mut out = BufWriter::new(file);
    let result = match format {
        ReportFormat::Json => emit_json(report, &mut out),
        ReportFormat::Csv => match report {
            Report::Fit(r) => emit_fit_csv(r, &mut out),
            Report::Coefficients(r) => emit_coefficients_csv(r, &mut out),
            Report::LayerCounts(r) => emit_layer_counts_csv(r, &mut out),
        },
    };
    result.map_err(|source| AnalyticsError::Io { path: path.into(), source })
}

fn emit_json<W: Write>(report: &Report<'_>, out: &mut W) -> std::io::Result<()> {
    let value = match report {
        Report::Fit(r) => serde_json::to_value(r),
        Report::Coefficients(r) => serde_json::to_value(r),
        Report::LayerCounts(r) => serde_json::to_value(r),
    }
    .expect("report serialization cannot fail");
    serde_json::to_writer_pretty(&mut *out, &value)?;
    out.write_all(b"\n")
}

fn emit_fit_csv<W: Write>(report: &FitReport, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "date,hour,exact_price_eur,fitted_price_eur,abs_error_eur,exact_quantity_mw,fitted_quantity_mw,supply_terms,demand_terms"
    )?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.date,
            r.hour,
            r.exact_price,
            r.fitted_price,
            r.abs_error,
            r.exact_quantity,
            r.fitted_quantity,
            r.supply_terms,
            r.demand_terms
        )?;
    }
    writeln!(out, "aggregate,mean_abs_error_eur,{}", report.mean_abs_error)?;
    writeln!(out, "aggregate,max_abs_error_eur,{}", report.max_abs_error)?;
    writeln!(out, "aggregate,processed,{}", report.records.len())?;
    writeln!(out, "aggregate,skipped,{}", report.skipped.len())?;
    for s in &report.skipped {
        writeln!(out, "skipped,{},{},{:?}", s.date, s.hour, s.reason)?;
    }
    Ok(())
}

fn emit_coefficients_csv<W: Write>(stats: &CoefficientStats, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "coefficient,index,min,mean,max")?;
    for (name, values) in [
        ("amplitude", &stats.amplitude),
        ("center", &stats.center),
        ("shape", &stats.shape),
    ] {
        for (i, v) in values.iter().enumerate() {
            writeln!(out, "{},{},{},{},{}", name, i + 1, v.min, v.mean, v.max)?;
        }
    }
    Ok(())
}

fn emit_layer_counts_csv<W: Write>(stats: &LayerCountStats, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "dimension,key,offers_mean,bids_mean")?;
    for (hour, m) in &stats.by_hour {
        writeln!(out, "hour,{},{},{}", hour, m.offers, m.bids)?;
    }
    for (day, m) in &stats.by_weekday {
        writeln!(out, "weekday,{},{},{}", day, m.offers, m.bids)?;
    }
    for (month, m) in &stats.by_month {
        writeln!(out, "month,{},{},{}", month, m.offers, m.bids)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CorpusProvenance, HourlyAuction};
    use crate::market::BidLayer;
    use crate::model::ErfTerm;

    fn simple_hour(date: NaiveDate, hour: u8) -> HourlyAuction {
        // Single supply step strictly below a flat demand block: the fitted
        // and exact equilibria coincide up to solver tolerance.
        HourlyAuction {
            date,
            hour,
            offers: vec![BidLayer { volume: 100.0, price: 20.0, side: Side::Supply }],
            bids: vec![BidLayer { volume: 60.0, price: 300.0, side: Side::Demand }],
        }
    }

    fn tiny_corpus(hours: usize) -> Corpus {
        let start = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap();
        Corpus {
            hours: (0..hours)
                .map(|i| {
                    simple_hour(start + chrono::Days::new((i / 24) as u64), (i % 24) as u8 + 1)
                })
                .collect(),
            provenance: CorpusProvenance::Files { offers: None, bids: None },
        }
    }

    #[test]
    fn exactly_representable_hours_have_tiny_error() {
        let corpus = tiny_corpus(6);
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        assert_eq!(report.records.len(), 6);
        assert!(report.mean_abs_error <= 1e-6, "mean {}", report.mean_abs_error);
    }

    #[test]
    fn aggregates_match_records() {
        let corpus = tiny_corpus(8);
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        let mean: f64 =
            report.records.iter().map(|r| r.abs_error).sum::<f64>() / report.records.len() as f64;
        let max = report.records.iter().map(|r| r.abs_error).fold(0.0f64, f64::max);
        assert_eq!(report.mean_abs_error, mean);
        assert_eq!(report.max_abs_error, max);
        assert!(report.mean_abs_error <= report.max_abs_error);
        assert_eq!(report.records.len() + report.skipped.len(), corpus.len());
    }

    #[test]
    fn hour_missing_a_side_is_skipped() {
        let mut corpus = tiny_corpus(3);
        corpus.hours[1].bids.clear();
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].reason, SkipReason::MissingSide);
        assert_eq!(report.records.len() + report.skipped.len(), corpus.len());
    }

    #[test]
    fn non_crossing_hour_is_skipped() {
        let mut corpus = tiny_corpus(2);
        corpus.hours[0].bids = vec![BidLayer { volume: 60.0, price: 5.0, side: Side::Demand }];
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        assert_eq!(report.skipped[0].reason, SkipReason::NoStepIntersection);
    }

    #[test]
    fn price_above_cap_is_flagged() {
        let mut corpus = tiny_corpus(2);
        corpus.hours[0].offers =
            vec![BidLayer { volume: 10.0, price: 900.0, side: Side::Supply }];
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        assert_eq!(report.skipped[0].reason, SkipReason::PriceAboveCap);
    }

    #[test]
    fn all_skipped_is_empty_report() {
        let mut corpus = tiny_corpus(1);
        corpus.hours[0].offers.clear();
        assert!(matches!(
            run_batch(&corpus, &BatchConfig::default()),
            Err(AnalyticsError::EmptyReport)
        ));
    }

    #[test]
    fn layer_stats_single_hour_equal_counts() {
        let corpus = tiny_corpus(1);
        let stats = layer_stats(&corpus).unwrap();
        assert_eq!(stats.by_hour.len(), 1);
        assert_eq!(stats.by_hour[0].1.offers, 1.0);
        assert_eq!(stats.by_hour[0].1.bids, 1.0);
        assert_eq!(stats.by_weekday.len(), 1);
        assert_eq!(stats.by_month, vec![(1, LayerCountMeans { offers: 1.0, bids: 1.0 })]);
    }

    #[test]
    fn coefficient_stats_of_identical_models_has_zero_spread() {
        let model = ErfSumModel::new(
            Side::Supply,
            1.0,
            vec![ErfTerm { amplitude: 2.0, center: 10.0, shape: 0.5 }],
        )
        .unwrap();
        let stats = coefficient_stats(&[model.clone(), model]).unwrap();
        assert_eq!(stats.amplitude[0].min, stats.amplitude[0].mean);
        assert_eq!(stats.amplitude[0].mean, stats.amplitude[0].max);
    }

    #[test]
    fn coefficient_stats_order_statistics() {
        let m1 = ErfSumModel::new(
            Side::Supply,
            0.0,
            vec![
                ErfTerm { amplitude: 1.0, center: 0.0, shape: 1.0 },
                ErfTerm { amplitude: 3.0, center: 1.0, shape: 1.0 },
            ],
        )
        .unwrap();
        let m2 = ErfSumModel::new(
            Side::Supply,
            0.0,
            vec![
                ErfTerm { amplitude: 3.0, center: 0.0, shape: 1.0 },
                ErfTerm { amplitude: 1.0, center: 1.0, shape: 1.0 },
            ],
        )
        .unwrap();
        let stats = coefficient_stats(&[m1, m2]).unwrap();
        assert_eq!(stats.amplitude[0].min, 1.0);
        assert_eq!(stats.amplitude[0].mean, 2.0);
        assert_eq!(stats.amplitude[0].max, 3.0);
        for v in &stats.amplitude {
            assert!(v.min <= v.mean && v.mean <= v.max);
        }
    }

    #[test]
    fn mixed_term_counts_are_rejected() {
        let m1 = ErfSumModel::new(
            Side::Supply,
            0.0,
            vec![ErfTerm { amplitude: 1.0, center: 0.0, shape: 1.0 }],
        )
        .unwrap();
        let m2 = ErfSumModel::new(Side::Supply, 0.0, vec![]).unwrap();
        assert!(matches!(
            coefficient_stats(&[m1, m2]),
            Err(AnalyticsError::InvalidInput(_))
        ));
    }

    #[test]
    fn emitted_reports_are_deterministic() {
        let corpus = tiny_corpus(5);
        let report = run_batch(&corpus, &BatchConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        emit_report(&Report::Fit(&report), ReportFormat::Csv, &a).unwrap();
        emit_report(&Report::Fit(&report), ReportFormat::Csv, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let j = dir.path().join("a.json");
        emit_report(&Report::Fit(&report), ReportFormat::Json, &j).unwrap();
        let text = std::fs::read_to_string(&j).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            parsed["records"].as_array().unwrap().len(),
            report.records.len()
        );
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let corpus = tiny_corpus(12);
        let config = BatchConfig::default();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let report_serial = single.install(|| run_batch(&corpus, &config)).unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let report_parallel = many.install(|| run_batch(&corpus, &config)).unwrap();
        let serialize = |r: &FitReport| serde_json::to_string(r).unwrap();
        assert_eq!(serialize(&report_serial), serialize(&report_parallel));
    }
}
