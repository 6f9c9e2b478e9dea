//! Corpus ingestion: CSV bid/offer files grouped into hourly auctions.
//!
//! The input schema is one row per price layer: `date,hour,volume_mw,price_eur`
//! with dates in either `dd-mm-yyyy` or ISO `yyyy-mm-dd` form (stored
//! canonically as ISO). Offers and bids arrive in separate files since the
//! rows themselves carry no side marker. Parsing is strict: a malformed row
//! fails the whole file unless skipping is explicitly requested, and skipped
//! rows are reported with their line numbers, never dropped silently.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{BidLayer, Side, MARKET_MAX_PRICE};

/// Canonical CSV header, written by every serializer in this crate.
pub const CSV_HEADER: [&str; 4] = ["date", "hour", "volume_mw", "price_eur"];

/// One hour of one day: all offer and bid layers of that auction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyAuction {
    pub date: NaiveDate,
    /// Delivery hour, 1 through 24.
    pub hour: u8,
    pub offers: Vec<BidLayer<f64>>,
    pub bids: Vec<BidLayer<f64>>,
}

impl HourlyAuction {
    /// True when both sides have at least one layer.
    pub fn fittable(&self) -> bool {
        !self.offers.is_empty() && !self.bids.is_empty()
    }
}

/// Where a corpus came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CorpusProvenance {
    Files { offers: Option<PathBuf>, bids: Option<PathBuf> },
    Synthetic { seed: u64, description: String },
}

/// An ordered set of hourly auctions with unique `(date, hour)` keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub hours: Vec<HourlyAuction>,
    pub provenance: CorpusProvenance,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }
}

/// A parsed single-side file, grouped by auction hour.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusFragment {
    pub side: Side,
    pub groups: BTreeMap<(NaiveDate, u8), Vec<BidLayer<f64>>>,
    /// Rows accepted into `groups`.
    pub accepted: usize,
    /// Rows rejected, with their file line numbers; empty in strict mode.
    pub bad_rows: Vec<BadRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BadRow {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for BadRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Parser knobs; the defaults match the documented schema.
#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    pub delimiter: u8,
    /// Collect malformed rows instead of failing the file.
    pub skip_bad: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { delimiter: b',', skip_bad: false }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: {} malformed row(s), first: {}", .rows.len(), .rows[0])]
    BadRows { path: PathBuf, rows: Vec<BadRow> },
    #[error("{0} contains no data rows")]
    EmptyCorpus(PathBuf),
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Parses one side's auction file.
pub fn parse_auction_csv(
    path: &Path,
    side: Side,
    options: &ParseOptions,
) -> Result<CorpusFragment, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    parse_auction_reader(file, path, side, options)
}

fn parse_auction_reader<R: Read>(
    reader: R,
    path: &Path,
    side: Side,
    options: &ParseOptions,
) -> Result<CorpusFragment, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);

    let headers =
        csv_reader.headers().map_err(|source| IngestError::Csv { path: path.into(), source })?;
    check_header(headers, path)?;

    let mut groups: BTreeMap<(NaiveDate, u8), Vec<BidLayer<f64>>> = BTreeMap::new();
    let mut accepted = 0usize;
    let mut bad_rows = Vec::new();
    for record in csv_reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(source) => return Err(IngestError::Csv { path: path.into(), source }),
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, side) {
            Ok((date, hour, layer)) => {
                groups.entry((date, hour)).or_default().push(layer);
                accepted += 1;
            }
            Err(reason) => bad_rows.push(BadRow { line, reason }),
        }
    }
    if !bad_rows.is_empty() && !options.skip_bad {
        return Err(IngestError::BadRows { path: path.into(), rows: bad_rows });
    }
    if accepted == 0 {
        return Err(IngestError::EmptyCorpus(path.into()));
    }
    Ok(CorpusFragment { side, groups, accepted, bad_rows })
}

fn check_header(headers: &csv::StringRecord, path: &Path) -> Result<(), IngestError> {
    let normalized: Vec<String> = headers
        .iter()
        .map(|h| h.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase())
        .collect();
    let expected_prefixes = ["date", "hour", "volume", "price"];
    let ok = normalized.len() == 4
        && normalized.iter().zip(expected_prefixes).all(|(h, e)| h.starts_with(e));
    if ok {
        Ok(())
    } else {
        Err(IngestError::MalformedHeader {
            path: path.into(),
            reason: format!(
                "expected columns {:?} (Table-style names like \"Volume (MW)\" are accepted), got {:?}",
                CSV_HEADER,
                headers.iter().collect::<Vec<_>>()
            ),
        })
    }
}

fn parse_row(record: &csv::StringRecord, side: Side) -> Result<(NaiveDate, u8, BidLayer<f64>), String> {
    if record.len() != 4 {
        return Err(format!("expected 4 fields, got {}", record.len()));
    }
    let date = parse_date(&record[0])?;
    let hour: u8 =
        record[1].parse().map_err(|_| format!("hour {:?} is not an integer", &record[1]))?;
    if !(1..=24).contains(&hour) {
        return Err(format!("hour {hour} outside 1..=24"));
    }
    let volume: f64 =
        record[2].parse().map_err(|_| format!("volume {:?} is not numeric", &record[2]))?;
    let price: f64 =
        record[3].parse().map_err(|_| format!("price {:?} is not numeric", &record[3]))?;
    if !volume.is_finite() || volume < 0.0 {
        return Err(format!("volume {volume} must be finite and non-negative"));
    }
    if !price.is_finite() || !(0.0..=MARKET_MAX_PRICE).contains(&price) {
        return Err(format!("price {price} outside [0, {MARKET_MAX_PRICE}]"));
    }
    Ok((date, hour, BidLayer { volume, price, side }))
}

/// Accepts `dd-mm-yyyy` and ISO `yyyy-mm-dd`.
fn parse_date(field: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(field, "%d-%m-%Y")
        .or_else(|_| NaiveDate::parse_from_str(field, "%Y-%m-%d"))
        .map_err(|_| format!("date {field:?} matches neither dd-mm-yyyy nor yyyy-mm-dd"))
}

/// Zips offer and bid fragments into a corpus keyed by `(date, hour)`.
///
/// Hours present on only one side are kept with the other side empty; the
/// batch runner reports them as skipped rather than failing the corpus.
pub fn combine_fragments(offers: CorpusFragment, bids: CorpusFragment) -> Corpus {
    let provenance = CorpusProvenance::Files { offers: None, bids: None };
    let mut keys: Vec<(NaiveDate, u8)> =
        offers.groups.keys().chain(bids.groups.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let mut offer_groups = offers.groups;
    let mut bid_groups = bids.groups;
    let hours = keys
        .into_iter()
        .map(|(date, hour)| HourlyAuction {
            date,
            hour,
            offers: offer_groups.remove(&(date, hour)).unwrap_or_default(),
            bids: bid_groups.remove(&(date, hour)).unwrap_or_default(),
        })
        .collect();
    Corpus { hours, provenance }
}

/// Writes one side of a corpus in the canonical CSV schema.
///
/// Rows are ordered by `(date, hour)` and floats are printed at full
/// round-trip precision, so parsing the file back reproduces the corpus
/// field for field.
pub fn write_corpus_csv(corpus: &Corpus, side: Side, path: &Path) -> Result<(), IngestError> {
    let file = File::create(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        for hour in &corpus.hours {
            let layers = match side {
                Side::Supply => &hour.offers,
                Side::Demand => &hour.bids,
            };
            for layer in layers {
                writeln!(out, "{},{},{},{}", hour.date, hour.hour, layer.volume, layer.price)?;
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|source| IngestError::Io { path: path.into(), source })
}
