//! Price table parsing, calendar alignment and log-return panels.
//!
//! Input tables are CSV, either long (`date,ticker,price`, extra columns
//! ignored) or wide (`date,<ticker>,<ticker>,...`, empty cells meaning no
//! observation). Dates are strict ISO-8601 (`YYYY-MM-DD`). Alignment onto
//! a union calendar carries the previous observed price forward (or the
//! first price backward) and records the fill in a boolean mask, so that
//! the derived log return on a filled day is exactly zero.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::NaiveDate;
use thiserror::Error;

use crate::matrix::RectMatrix;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("duplicate observation for {ticker} on {date}")]
    DuplicateObservation { ticker: String, date: NaiveDate },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("intersection calendar is empty")]
    NoCommonDates,
    #[error("panel alignment needs at least two series")]
    SingleSeries,
    #[error("series {0} has no observations")]
    EmptySeries(String),
    #[error("return lag must be at least 1")]
    ZeroLag,
    #[error("return lag {lag} must be smaller than the panel length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("price and mask tables disagree: {0}")]
    MaskMismatch(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One ticker's observed price history. Dates strictly increase and all
/// prices are positive; construction enforces both.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticker: String,
    sector: Option<String>,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(
        ticker: impl Into<String>,
        sector: Option<String>,
        mut observations: Vec<(NaiveDate, f64)>,
    ) -> Result<Self, IngestError> {
        let ticker = ticker.into();
        if observations.is_empty() {
            return Err(IngestError::EmptySeries(ticker));
        }
        observations.sort_by_key(|(d, _)| *d);
        for pair in observations.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(IngestError::DuplicateObservation { ticker, date: pair[0].0 });
            }
        }
        debug_assert!(observations.iter().all(|&(_, p)| p > 0.0));
        Ok(Self { ticker, sector, observations })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn sector(&self) -> Option<&str> {
        self.sector.as_deref()
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Long,
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarMode {
    Union,
    Intersection,
}

/// A rejected input row: 1-based line number (header is line 1) plus the
/// reason it was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParsedPrices {
    pub series: Vec<PriceSeries>,
    pub rejected: Vec<RowDiagnostic>,
}

fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

fn parse_price(s: &str) -> Option<f64> {
    let p: f64 = s.trim().parse().ok()?;
    (p.is_finite() && p > 0.0).then_some(p)
}

/// Parses a long or wide price table. Rows with unparseable dates or
/// non-positive prices are dropped and reported in `rejected`; duplicate
/// (ticker, date) pairs and structural header problems are hard errors.
pub fn parse_price_table(text: &str, format: TableFormat) -> Result<ParsedPrices, IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }
    match format {
        TableFormat::Long => parse_long(text),
        TableFormat::Wide => parse_wide(text),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_long(text: &str) -> Result<ParsedPrices, IngestError> {
    let mut rdr = reader(text);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (date_col, ticker_col, price_col) = match (col("date"), col("ticker"), col("price")) {
        (Some(d), Some(t), Some(p)) => (d, t, p),
        _ => {
            return Err(IngestError::MalformedHeader(
                "long format needs date, ticker and price columns".into(),
            ))
        }
    };

    let mut order: Vec<String> = Vec::new();
    let mut by_ticker: Vec<Vec<(NaiveDate, f64)>> = Vec::new();
    let mut rejected = Vec::new();
    let mut saw_row = false;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        saw_row = true;
        let field = |c: usize| record.get(c).unwrap_or("");
        let Some(date) = parse_iso_date(field(date_col)) else {
            rejected.push(RowDiagnostic {
                line,
                message: format!("unparseable date {:?}", field(date_col)),
            });
            continue;
        };
        let ticker = field(ticker_col).to_string();
        if ticker.is_empty() {
            rejected.push(RowDiagnostic { line, message: "empty ticker".into() });
            continue;
        }
        let Some(price) = parse_price(field(price_col)) else {
            rejected.push(RowDiagnostic {
                line,
                message: format!("invalid price {:?} (must be a positive number)", field(price_col)),
            });
            continue;
        };
        let slot = match order.iter().position(|t| *t == ticker) {
            Some(i) => i,
            None => {
                order.push(ticker);
                by_ticker.push(Vec::new());
                order.len() - 1
            }
        };
        by_ticker[slot].push((date, price));
    }
    if !saw_row {
        return Err(IngestError::EmptyInput);
    }

    let mut series = Vec::with_capacity(order.len());
    for (ticker, obs) in order.into_iter().zip(by_ticker) {
        series.push(PriceSeries::new(ticker, None, obs)?);
    }
    Ok(ParsedPrices { series, rejected })
}

fn parse_wide(text: &str) -> Result<ParsedPrices, IngestError> {
    let mut rdr = reader(text);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || !headers.get(0).is_some_and(|h| h.eq_ignore_ascii_case("date")) {
        return Err(IngestError::MalformedHeader(
            "wide format needs a leading date column and at least one ticker column".into(),
        ));
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if tickers.iter().any(|t| t.is_empty()) {
        return Err(IngestError::MalformedHeader("empty ticker column name".into()));
    }

    let mut columns: Vec<Vec<(NaiveDate, f64)>> = vec![Vec::new(); tickers.len()];
    let mut rejected = Vec::new();
    let mut saw_row = false;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        saw_row = true;
        let Some(date) = parse_iso_date(record.get(0).unwrap_or("")) else {
            rejected.push(RowDiagnostic {
                line,
                message: format!("unparseable date {:?}", record.get(0).unwrap_or("")),
            });
            continue;
        };
        // Validate the whole row first so a rejected row leaves no trace.
        let mut parsed: Vec<(usize, f64)> = Vec::new();
        let mut bad: Option<String> = None;
        for (k, ticker) in tickers.iter().enumerate() {
            let cell = record.get(k + 1).unwrap_or("");
            if cell.is_empty() {
                continue; // missing observation
            }
            match parse_price(cell) {
                Some(p) => parsed.push((k, p)),
                None => {
                    bad = Some(format!("invalid price {cell:?} for {ticker}"));
                    break;
                }
            }
        }
        if let Some(message) = bad {
            rejected.push(RowDiagnostic { line, message });
            continue;
        }
        for (k, p) in parsed {
            columns[k].push((date, p));
        }
    }
    if !saw_row {
        return Err(IngestError::EmptyInput);
    }

    let mut series = Vec::with_capacity(tickers.len());
    for (ticker, obs) in tickers.into_iter().zip(columns) {
        series.push(PriceSeries::new(ticker, None, obs)?);
    }
    Ok(ParsedPrices { series, rejected })
}

/// Aligned date x ticker price matrix. `filled[i][t]` marks calendar days
/// where ticker `i` had no observation; the cell then carries the last
/// observed price (or the first, before any observation exists).
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: RectMatrix,
    filled: Vec<bool>,
}

impl PricePanel {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn price(&self, asset: usize, day: usize) -> f64 {
        self.prices.get(asset, day)
    }

    pub fn is_filled(&self, asset: usize, day: usize) -> bool {
        self.filled[asset * self.dates.len() + day]
    }
}

pub fn align_panel(series: &[PriceSeries], mode: CalendarMode) -> Result<PricePanel, IngestError> {
    if series.len() < 2 {
        return Err(IngestError::SingleSeries);
    }
    for s in series {
        if s.is_empty() {
            return Err(IngestError::EmptySeries(s.ticker().to_string()));
        }
    }

    let dates: Vec<NaiveDate> = match mode {
        CalendarMode::Union => {
            let mut set = BTreeSet::new();
            for s in series {
                set.extend(s.observations().iter().map(|(d, _)| *d));
            }
            set.into_iter().collect()
        }
        CalendarMode::Intersection => {
            let mut iter = series.iter();
            let mut set: BTreeSet<NaiveDate> =
                iter.next().unwrap().observations().iter().map(|(d, _)| *d).collect();
            for s in iter {
                let other: BTreeSet<NaiveDate> =
                    s.observations().iter().map(|(d, _)| *d).collect();
                set = set.intersection(&other).copied().collect();
            }
            if set.is_empty() {
                return Err(IngestError::NoCommonDates);
            }
            set.into_iter().collect()
        }
    };

    let n = series.len();
    let t = dates.len();
    let mut prices = RectMatrix::zeros(n, t);
    let mut filled = vec![false; n * t];
    for (i, s) in series.iter().enumerate() {
        let obs = s.observations();
        let first_price = obs[0].1;
        let mut cursor = 0usize;
        let mut last: Option<f64> = None;
        for (j, date) in dates.iter().enumerate() {
            while cursor < obs.len() && obs[cursor].0 < *date {
                last = Some(obs[cursor].1);
                cursor += 1;
            }
            if cursor < obs.len() && obs[cursor].0 == *date {
                last = Some(obs[cursor].1);
                cursor += 1;
                prices.set(i, j, obs[cursor - 1].1);
            } else {
                // forward fill, or back fill before the first observation
                prices.set(i, j, last.unwrap_or(first_price));
                filled[i * t + j] = true;
            }
        }
    }

    debug_assert!(mode != CalendarMode::Intersection || filled.iter().all(|&f| !f));
    Ok(PricePanel { tickers: series.iter().map(|s| s.ticker().to_string()).collect(), dates, prices, filled })
}

/// Log-return panel: `returns[i][t] = ln P[i][t+lag] - ln P[i][t]`,
/// attributed to the later day.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    returns: RectMatrix,
    lag: usize,
}

impl ReturnPanel {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn value(&self, asset: usize, day: usize) -> f64 {
        self.returns.get(asset, day)
    }

    pub fn matrix(&self) -> &RectMatrix {
        &self.returns
    }

    /// Test and synthetic-data constructor; rows are assets.
    pub fn from_matrix(tickers: Vec<String>, dates: Vec<NaiveDate>, returns: RectMatrix, lag: usize) -> Self {
        assert_eq!(tickers.len(), returns.rows());
        assert_eq!(dates.len(), returns.cols());
        Self { tickers, dates, returns, lag }
    }
}

pub fn log_returns(panel: &PricePanel, lag: usize) -> Result<ReturnPanel, IngestError> {
    if lag == 0 {
        return Err(IngestError::ZeroLag);
    }
    let t = panel.n_days();
    if lag >= t {
        return Err(IngestError::LagTooLarge { lag, len: t });
    }
    let n = panel.n_assets();
    let cols = t - lag;
    let mut returns = RectMatrix::zeros(n, cols);
    for i in 0..n {
        for k in 0..cols {
            let r = if panel.is_filled(i, k + lag) {
                // missing day: the paper's zero-return entry, exactly
                0.0
            } else {
                panel.price(i, k + lag).ln() - panel.price(i, k).ln()
            };
            returns.set(i, k, r);
        }
    }
    let dates = panel.dates()[lag..].to_vec();
    Ok(ReturnPanel { tickers: panel.tickers().to_vec(), dates, returns, lag })
}

impl PricePanel {
    /// Wide CSV of prices. `f64`'s shortest round-trip formatting keeps
    /// the serialize/parse cycle bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for t in &self.tickers {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for (j, date) in self.dates.iter().enumerate() {
            let _ = write!(out, "{date}");
            for i in 0..self.n_assets() {
                let _ = write!(out, ",{}", self.price(i, j));
            }
            out.push('\n');
        }
        out
    }

    /// Sibling mask table with 0/1 cells, same shape as the price CSV.
    pub fn mask_to_csv(&self) -> String {
        let mut out = String::from("date");
        for t in &self.tickers {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for (j, date) in self.dates.iter().enumerate() {
            let _ = write!(out, "{date}");
            for i in 0..self.n_assets() {
                let _ = write!(out, ",{}", u8::from(self.is_filled(i, j)));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_pair(prices_csv: &str, mask_csv: &str) -> Result<Self, IngestError> {
        let parsed = parse_price_table(prices_csv, TableFormat::Wide)?;
        if !parsed.rejected.is_empty() {
            return Err(IngestError::MaskMismatch(format!(
                "price table has {} rejected rows; a serialized panel must be clean",
                parsed.rejected.len()
            )));
        }
        let panel = align_panel(&parsed.series, CalendarMode::Union)?;
        if panel.filled.iter().any(|&f| f) {
            return Err(IngestError::MaskMismatch(
                "serialized price table has gaps; the mask file carries missingness".into(),
            ));
        }

        let mut rdr = reader(mask_csv);
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = std::iter::once("date")
            .chain(panel.tickers.iter().map(String::as_str))
            .collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(IngestError::MaskMismatch("mask header differs from price header".into()));
        }
        let t = panel.dates.len();
        let n = panel.tickers.len();
        let mut filled = vec![false; n * t];
        let mut row_count = 0usize;
        for (idx, record) in rdr.records().enumerate() {
            let record = record?;
            if idx >= t {
                return Err(IngestError::MaskMismatch("mask has more rows than prices".into()));
            }
            let date = parse_iso_date(record.get(0).unwrap_or(""))
                .ok_or_else(|| IngestError::MaskMismatch(format!("bad mask date on row {}", idx + 2)))?;
            if date != panel.dates[idx] {
                return Err(IngestError::MaskMismatch(format!(
                    "mask date {date} does not match panel date {}",
                    panel.dates[idx]
                )));
            }
            for i in 0..n {
                match record.get(i + 1).unwrap_or("") {
                    "0" => {}
                    "1" => filled[i * t + idx] = true,
                    other => {
                        return Err(IngestError::MaskMismatch(format!(
                            "mask cell must be 0 or 1, got {other:?}"
                        )))
                    }
                }
            }
            row_count += 1;
        }
        if row_count != t {
            return Err(IngestError::MaskMismatch("mask has fewer rows than prices".into()));
        }
        Ok(Self { filled, ..panel })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_iso_date(s).unwrap()
    }

    fn series(ticker: &str, obs: &[(&str, f64)]) -> PriceSeries {
        PriceSeries::new(
            ticker,
            None,
            obs.iter().map(|&(ds, p)| (d(ds), p)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn long_rows_build_one_series() {
        let text = "date,ticker,price\n2005-01-03,AAPL,100.0\n2005-01-04,AAPL,101.0\n";
        let parsed = parse_price_table(text, TableFormat::Long).unwrap();
        assert_eq!(parsed.series.len(), 1);
        assert_eq!(parsed.series[0].len(), 2);
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn wide_two_tickers_three_dates() {
        let text = "date,A,B\n2005-01-03,1,2\n2005-01-04,1.5,2.5\n2005-01-05,1.7,2.7\n";
        let parsed = parse_price_table(text, TableFormat::Wide).unwrap();
        assert_eq!(parsed.series.len(), 2);
        assert!(parsed.series.iter().all(|s| s.len() == 3));
    }

    #[test]
    fn negative_price_row_is_rejected_not_fatal() {
        let text = "date,ticker,price\n2005-01-03,AAPL,100.0\n2005-01-04,AAPL,-5.0\n2005-01-05,AAPL,101.0\n";
        let parsed = parse_price_table(text, TableFormat::Long).unwrap();
        assert_eq!(parsed.series[0].len(), 2);
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].line, 3);
    }

    #[test]
    fn duplicate_observation_is_an_error() {
        let text = "date,ticker,price\n2005-01-03,AAPL,100.0\n2005-01-03,AAPL,100.5\n";
        match parse_price_table(text, TableFormat::Long) {
            Err(IngestError::DuplicateObservation { ticker, .. }) => assert_eq!(ticker, "AAPL"),
            other => panic!("expected DuplicateObservation, got {other:?}"),
        }
    }

    #[test]
    fn header_and_empty_input_errors() {
        assert!(matches!(
            parse_price_table("time,sym,px\n2005-01-03,A,1\n", TableFormat::Long),
            Err(IngestError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_price_table("   \n", TableFormat::Long),
            Err(IngestError::EmptyInput)
        ));
        assert!(matches!(
            parse_price_table("date,ticker,price\n", TableFormat::Long),
            Err(IngestError::EmptyInput)
        ));
    }

    #[test]
    fn union_alignment_without_gaps_has_clean_mask() {
        let a = series("A", &[("2005-01-03", 1.0), ("2005-01-04", 1.1)]);
        let b = series("B", &[("2005-01-03", 2.0), ("2005-01-04", 2.1)]);
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        assert!((0..2).all(|i| (0..2).all(|j| !panel.is_filled(i, j))));
    }

    #[test]
    fn union_forward_fills_and_marks_gap() {
        let a = series("A", &[("2005-01-03", 10.0), ("2005-01-04", 11.0), ("2005-01-06", 12.0)]);
        let b = series(
            "B",
            &[("2005-01-03", 1.0), ("2005-01-04", 1.0), ("2005-01-05", 1.0), ("2005-01-06", 1.0)],
        );
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        assert_eq!(panel.n_days(), 4);
        assert_eq!(panel.price(0, 2), 11.0); // carried from Jan 4
        assert!(panel.is_filled(0, 2));
        assert!(!panel.is_filled(1, 2));
    }

    #[test]
    fn back_fill_before_first_observation() {
        let a = series("A", &[("2005-01-05", 7.0)]);
        let b = series("B", &[("2005-01-03", 1.0), ("2005-01-05", 1.2)]);
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        assert_eq!(panel.price(0, 0), 7.0);
        assert!(panel.is_filled(0, 0));
        let returns = log_returns(&panel, 1).unwrap();
        assert_eq!(returns.value(0, 0), 0.0);
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let a = series("A", &[("2005-01-03", 1.0)]);
        let b = series("B", &[("2005-01-04", 1.0)]);
        let c = series("C", &[("2005-01-05", 1.0)]);
        assert!(matches!(
            align_panel(&[a, b, c], CalendarMode::Intersection),
            Err(IngestError::NoCommonDates)
        ));
    }

    #[test]
    fn single_series_is_an_error() {
        let a = series("A", &[("2005-01-03", 1.0)]);
        assert!(matches!(align_panel(&[a], CalendarMode::Union), Err(IngestError::SingleSeries)));
    }

    #[test]
    fn log_return_examples() {
        let a = series("A", &[("2005-01-03", 100.0), ("2005-01-04", 100.0)]);
        let b = series("B", &[("2005-01-03", 100.0), ("2005-01-04", 100.0 * std::f64::consts::E)]);
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        let r = log_returns(&panel, 1).unwrap();
        assert_eq!(r.value(0, 0), 0.0);
        assert!((r.value(1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_day_lag_matches_high_precision_oracle() {
        let a = series("A", &[("2005-01-03", 100.0), ("2005-01-04", 110.0), ("2005-01-05", 121.0)]);
        let b = series("B", &[("2005-01-03", 50.0), ("2005-01-04", 50.0), ("2005-01-05", 50.0)]);
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        let r = log_returns(&panel, 2).unwrap();
        assert_eq!(r.n_days(), 1);
        // ln(121/100) to 30 digits: 0.190620359608649720087904246562
        assert!((r.value(0, 0) - 0.190620359608649720).abs() < 1e-15);
    }

    #[test]
    fn lag_bounds() {
        let a = series("A", &[("2005-01-03", 1.0), ("2005-01-04", 1.0)]);
        let b = series("B", &[("2005-01-03", 1.0), ("2005-01-04", 1.0)]);
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        assert!(matches!(log_returns(&panel, 2), Err(IngestError::LagTooLarge { .. })));
        assert!(matches!(log_returns(&panel, 0), Err(IngestError::ZeroLag)));
    }

    #[test]
    fn csv_pair_round_trip_is_bit_exact() {
        let a = series(
            "A",
            &[("2005-01-03", 100.125), ("2005-01-04", 0.1 + 0.2), ("2005-01-06", 97.3)],
        );
        let b = series(
            "B",
            &[("2005-01-03", 3.0e-7), ("2005-01-04", 12345.6789), ("2005-01-05", 1.0 / 3.0)],
        );
        let panel = align_panel(&[a, b], CalendarMode::Union).unwrap();
        let back = PricePanel::from_csv_pair(&panel.to_csv(), &panel.mask_to_csv()).unwrap();
        assert_eq!(panel, back);
    }

    #[test]
    fn zero_fill_soundness_over_random_gap_patterns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..25 {
            let t = 30;
            let base = d("2005-01-03");
            let mut all: Vec<PriceSeries> = Vec::new();
            for i in 0..4 {
                let mut obs = Vec::new();
                for k in 0..t {
                    if rng.random::<f64>() < 0.8 {
                        let date = base + chrono::Days::new(k);
                        obs.push((date, 1.0 + rng.random::<f64>() * 100.0));
                    }
                }
                if obs.is_empty() {
                    obs.push((base, 1.0));
                }
                all.push(PriceSeries::new(format!("T{i}"), None, obs).unwrap());
            }
            let panel = align_panel(&all, CalendarMode::Union).unwrap();
            for lag in [1usize, 2] {
                if lag >= panel.n_days() {
                    continue;
                }
                let r = log_returns(&panel, lag).unwrap();
                assert_eq!(r.n_days(), panel.n_days() - lag);
                for i in 0..panel.n_assets() {
                    for k in 0..r.n_days() {
                        if panel.is_filled(i, k + lag) {
                            assert_eq!(r.value(i, k), 0.0, "filled cell must give exact zero");
                        }
                        assert!(r.value(i, k).is_finite());
                    }
                }
            }
        }
    }

    #[test]
    fn returns_are_scale_invariant() {
        let a = series("A", &[("2005-01-03", 100.0), ("2005-01-04", 104.5), ("2005-01-05", 99.25)]);
        let scaled = PriceSeries::new(
            "A",
            None,
            a.observations().iter().map(|&(d, p)| (d, p * 7.25)).collect(),
        )
        .unwrap();
        let b = series("B", &[("2005-01-03", 1.0), ("2005-01-04", 1.0), ("2005-01-05", 1.0)]);
        let p1 = align_panel(&[a, b.clone()], CalendarMode::Union).unwrap();
        let p2 = align_panel(&[scaled, b], CalendarMode::Union).unwrap();
        let r1 = log_returns(&p1, 1).unwrap();
        let r2 = log_returns(&p2, 1).unwrap();
        for k in 0..r1.n_days() {
            assert!((r1.value(0, k) - r2.value(0, k)).abs() < 1e-12);
        }
    }
}
