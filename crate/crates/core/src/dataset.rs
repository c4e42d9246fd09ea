//! Loading a stock's quote and trade files into per-day series.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{
    filter_market_time, parse_quotes, parse_trades, split_by_day, Day, FormatConfig, MarketWindow, QuoteEvent,
    RowReject, TradeEvent,
};
use crate::midpoint::{build_midpoint_series, MidpointSeries};
use crate::signs::{build_sign_series, SignSeries};

/// Row and classification counts collected while loading a stock.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub quote_rows: usize,
    pub trade_rows: usize,
    pub quote_rejects: Vec<RowReject>,
    pub trade_rejects: Vec<RowReject>,
    pub quotes_in_window: usize,
    pub trades_in_window: usize,
    /// Trades whose sign could not be resolved.
    pub unresolved_trades: usize,
    /// Days that had trades but no quote inside the window.
    pub days_without_quotes: Vec<Day>,
}

/// Per-day midpoint and sign series of one stock, sorted by day.
#[derive(Debug, Clone, PartialEq)]
pub struct StockData {
    pub symbol: String,
    pub mids: Vec<MidpointSeries>,
    pub signs: Vec<SignSeries>,
    pub report: LoadReport,
}

impl StockData {
    /// Builds the series from parsed events.
    ///
    /// With `carry_signs` the tick-rule recursion continues across days,
    /// seeded with the last resolved sign of the previous day.
    pub fn from_events(
        symbol: &str,
        quotes: &[QuoteEvent],
        trades: &[TradeEvent],
        window: &MarketWindow,
        carry_signs: bool,
    ) -> Result<StockData> {
        let quotes = filter_market_time(quotes, window);
        let trades = filter_market_time(trades, window);
        let mut report = LoadReport {
            quotes_in_window: quotes.len(),
            trades_in_window: trades.len(),
            ..LoadReport::default()
        };
        let quotes_by_day = split_by_day(quotes);
        let mut trades_by_day = split_by_day(trades);
        for tr in trades_by_day.values_mut() {
            tr.sort_by_key(|e| (e.t, e.seq));
        }
        report.days_without_quotes = trades_by_day
            .keys()
            .filter(|d| !quotes_by_day.contains_key(d))
            .copied()
            .collect();

        let days: Vec<(&Day, &Vec<QuoteEvent>)> = quotes_by_day.iter().collect();
        let mids = days
            .par_iter()
            .map(|(day, q)| build_midpoint_series(**day, q, window))
            .collect::<Result<Vec<_>>>()?;

        let empty = Vec::new();
        let day_trades = |d: &Day| trades_by_day.get(d).unwrap_or(&empty);
        let signs: Vec<SignSeries> = if carry_signs {
            let mut carry = None;
            let mut out = Vec::with_capacity(days.len());
            for (day, _) in &days {
                let s = build_sign_series(**day, day_trades(day), window, carry);
                if let Some(last) = s.trade_sequence().last() {
                    carry = Some(last.1);
                }
                out.push(s);
            }
            out
        } else {
            days.par_iter().map(|(day, _)| build_sign_series(**day, day_trades(day), window, None)).collect()
        };
        report.unresolved_trades = signs.iter().map(|s| s.unresolved).sum();
        Ok(StockData { symbol: symbol.to_string(), mids, signs, report })
    }

    /// Parses the two files and builds the series.
    pub fn load(
        symbol: &str,
        quotes_path: &Path,
        trades_path: &Path,
        window: &MarketWindow,
        fmt: &FormatConfig,
        carry_signs: bool,
    ) -> Result<StockData> {
        let quotes = parse_quotes(BufReader::new(File::open(quotes_path)?), fmt)?;
        let trades = parse_trades(BufReader::new(File::open(trades_path)?), fmt)?;
        let mut data = StockData::from_events(symbol, &quotes.events, &trades.events, window, carry_signs)?;
        data.report.quote_rows = quotes.events.len() + quotes.rejects.len();
        data.report.trade_rows = trades.events.len() + trades.rejects.len();
        data.report.quote_rejects = quotes.rejects;
        data.report.trade_rejects = trades.rejects;
        Ok(data)
    }
}

/// Quote and trade file locations of one stock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseEntry {
    pub symbol: String,
    pub quotes: PathBuf,
    pub trades: PathBuf,
}

impl UniverseEntry {
    /// `<dir>/<SYMBOL>.quotes.csv` and `<dir>/<SYMBOL>.trades.csv`.
    pub fn in_dir(dir: &Path, symbol: &str) -> Self {
        Self {
            symbol: symbol.to_string(),
            quotes: dir.join(format!("{symbol}.quotes.csv")),
            trades: dir.join(format!("{symbol}.trades.csv")),
        }
    }
}

/// Reads a universe manifest with the header `symbol,quotes,trades`.
/// Relative paths resolve against the manifest's directory.
pub fn read_universe(path: &Path) -> Result<Vec<UniverseEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if n == 0 {
            if fields != ["symbol", "quotes", "trades"] {
                return Err(Error::Header(format!("universe manifest header must be `symbol,quotes,trades`, got `{line}`")));
            }
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Header(format!("universe manifest line {}: expected 3 fields", n + 1)));
        }
        out.push(UniverseEntry {
            symbol: fields[0].to_string(),
            quotes: base.join(fields[1]),
            trades: base.join(fields[2]),
        });
    }
    Ok(out)
}

pub fn write_universe<W: std::io::Write>(mut out: W, entries: &[UniverseEntry]) -> std::io::Result<()> {
    writeln!(out, "symbol,quotes,trades")?;
    for e in entries {
        writeln!(out, "{},{},{}", e.symbol, e.quotes.display(), e.trades.display())?;
    }
    Ok(())
}
