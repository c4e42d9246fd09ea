//! Quote and trade records, their text schema, and the market-time window.
//!
//! Files are delimiter-separated text with a header row. Quote files carry the
//! columns `day,time,bid,ask,bid_vol,ask_vol`; trade files carry
//! `day,time,price,volume`. Column order is free, names are matched
//! case-insensitively. `time` is either integer seconds since midnight or
//! `HH:MM:SS`. Malformed rows are rejected and reported with their line number;
//! they never abort a parse.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading day.
pub type Day = NaiveDate;

const DAY_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteEvent {
    pub day: Day,
    /// Seconds since midnight, exchange local time.
    pub t: u32,
    pub bid: f64,
    pub ask: f64,
    pub bid_vol: u64,
    pub ask_vol: u64,
    /// Arrival index among events sharing `(day, t)`.
    pub seq: u32,
}

impl QuoteEvent {
    pub fn midpoint(&self) -> f64 {
        (self.ask + self.bid) / 2.0
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub day: Day,
    pub t: u32,
    pub price: f64,
    pub volume: u64,
    pub seq: u32,
}

/// Anything stamped with a day and a second.
pub trait Timed {
    fn day(&self) -> Day;
    fn t(&self) -> u32;
}

impl Timed for QuoteEvent {
    fn day(&self) -> Day {
        self.day
    }
    fn t(&self) -> u32 {
        self.t
    }
}

impl Timed for TradeEvent {
    fn day(&self) -> Day {
        self.day
    }
    fn t(&self) -> u32 {
        self.t
    }
}

/// Half-open intraday window `[open_s, close_s)` in seconds since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketWindow {
    pub open_s: u32,
    pub close_s: u32,
}

impl MarketWindow {
    /// 09:40:00 to 15:50:00, which drops the first and last ten minutes of
    /// the regular session.
    pub const DEFAULT: MarketWindow = MarketWindow {
        open_s: 9 * 3600 + 40 * 60,
        close_s: 15 * 3600 + 50 * 60,
    };

    pub fn new(open_s: u32, close_s: u32) -> Result<Self> {
        if open_s >= close_s {
            return Err(Error::Config(format!(
                "market window must satisfy open < close, got {open_s} >= {close_s}"
            )));
        }
        Ok(Self { open_s, close_s })
    }

    /// Number of seconds in the window.
    pub fn len(&self) -> usize {
        (self.close_s - self.open_s) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: u32) -> bool {
        self.open_s <= t && t < self.close_s
    }

    /// Offset of `t` from the window open, if inside.
    pub fn offset(&self, t: u32) -> Option<usize> {
        self.contains(t).then(|| (t - self.open_s) as usize)
    }
}

impl Default for MarketWindow {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for MarketWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", format_hms(self.open_s), format_hms(self.close_s))
    }
}

impl FromStr for MarketWindow {
    type Err = Error;

    /// Parses `HH:MM:SS-HH:MM:SS`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("window `{s}` is not of the form start-end")))?;
        let open = parse_time(a.trim())
            .ok_or_else(|| Error::Config(format!("bad window start `{a}`")))?;
        let close = parse_time(b.trim())
            .ok_or_else(|| Error::Config(format!("bad window end `{b}`")))?;
        MarketWindow::new(open, close)
    }
}

pub fn format_hms(t: u32) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}

/// Parses integer seconds since midnight or `HH:MM:SS`.
pub fn parse_time(s: &str) -> Option<u32> {
    if let Ok(v) = s.parse::<u32>() {
        return (v < 86_400).then_some(v);
    }
    let mut parts = s.split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    let sec: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || h > 23 || m > 59 || sec > 59 {
        return None;
    }
    Some(h * 3600 + m * 60 + sec)
}

pub fn parse_day(s: &str) -> Option<Day> {
    NaiveDate::parse_from_str(s, DAY_FORMAT).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatConfig {
    pub delimiter: u8,
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReject {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

/// Accepted events in file order plus the rows that were rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub events: Vec<T>,
    pub rejects: Vec<RowReject>,
}

impl<T> Parsed<T> {
    pub fn reject_count(&self) -> usize {
        self.rejects.len()
    }
}

struct Columns {
    idx: Vec<usize>,
}

fn locate_columns(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Columns> {
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let mut idx = Vec::with_capacity(wanted.len());
    for w in wanted {
        match names.iter().position(|n| n == w) {
            Some(i) => idx.push(i),
            None => {
                return Err(Error::Header(format!(
                    "missing column `{w}` (found: {})",
                    names.join(",")
                )))
            }
        }
    }
    Ok(Columns { idx })
}

/// Assigns arrival indices within each `(day, t)` key.
#[derive(Default)]
struct SeqCounter(HashMap<(Day, u32), u32>);

impl SeqCounter {
    fn next(&mut self, day: Day, t: u32) -> u32 {
        let slot = self.0.entry((day, t)).or_insert(0);
        let seq = *slot;
        *slot += 1;
        seq
    }
}

fn field<'r>(rec: &'r csv::StringRecord, cols: &Columns, k: usize) -> std::result::Result<&'r str, String> {
    rec.get(cols.idx[k])
        .map(str::trim)
        .ok_or_else(|| format!("row has {} fields, column {} missing", rec.len(), cols.idx[k] + 1))
}

fn num<T: FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("non-numeric {what} `{s}`"))
}

fn price(s: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = num(s, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite {what} `{s}`"))
    }
}

fn stamp(rec: &csv::StringRecord, cols: &Columns) -> std::result::Result<(Day, u32), String> {
    let d = field(rec, cols, 0)?;
    let day = parse_day(d).ok_or_else(|| format!("bad day `{d}`"))?;
    let ts = field(rec, cols, 1)?;
    let t = parse_time(ts).ok_or_else(|| format!("bad time `{ts}`"))?;
    Ok((day, t))
}

fn parse_rows<R, T>(
    input: R,
    fmt: &FormatConfig,
    wanted: &[&str],
    mut row: impl FnMut(&csv::StringRecord, &Columns, &mut SeqCounter) -> std::result::Result<T, String>,
) -> Result<Parsed<T>>
where
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(fmt.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .clone();
    let mut out = Parsed { events: Vec::new(), rejects: Vec::new() };
    if headers.is_empty() {
        return Ok(out);
    }
    let cols = locate_columns(&headers, wanted)?;
    let mut seq = SeqCounter::default();
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                if rec.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                match row(&rec, &cols, &mut seq) {
                    Ok(ev) => out.events.push(ev),
                    Err(reason) => out.rejects.push(RowReject { line, reason }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(e.into());
                }
                out.rejects.push(RowReject { line, reason: e.to_string() });
            }
        }
    }
    Ok(out)
}

/// Parses a quote file. Rows with `ask < bid`, non-positive bid, or any
/// non-numeric field are rejected.
pub fn parse_quotes<R: Read>(input: R, fmt: &FormatConfig) -> Result<Parsed<QuoteEvent>> {
    parse_rows(
        input,
        fmt,
        &["day", "time", "bid", "ask", "bid_vol", "ask_vol"],
        |rec, cols, seq| {
            let (day, t) = stamp(rec, cols)?;
            let bid = price(field(rec, cols, 2)?, "bid")?;
            let ask = price(field(rec, cols, 3)?, "ask")?;
            let bid_vol = num::<u64>(field(rec, cols, 4)?, "bid_vol")?;
            let ask_vol = num::<u64>(field(rec, cols, 5)?, "ask_vol")?;
            if bid <= 0.0 {
                return Err(format!("non-positive bid {bid}"));
            }
            if ask < bid {
                return Err(format!("crossed quote: ask {ask} < bid {bid}"));
            }
            Ok(QuoteEvent { day, t, bid, ask, bid_vol, ask_vol, seq: seq.next(day, t) })
        },
    )
}

/// Parses a trade file. Rows with non-positive price or volume are rejected.
pub fn parse_trades<R: Read>(input: R, fmt: &FormatConfig) -> Result<Parsed<TradeEvent>> {
    parse_rows(input, fmt, &["day", "time", "price", "volume"], |rec, cols, seq| {
        let (day, t) = stamp(rec, cols)?;
        let price = price(field(rec, cols, 2)?, "price")?;
        let volume = num::<u64>(field(rec, cols, 3)?, "volume")?;
        if price <= 0.0 {
            return Err(format!("non-positive price {price}"));
        }
        if volume == 0 {
            return Err("zero volume".to_string());
        }
        Ok(TradeEvent { day, t, price, volume, seq: seq.next(day, t) })
    })
}

fn delim(fmt: &FormatConfig) -> char {
    fmt.delimiter as char
}

/// Writes quotes in the text schema. Prices use the shortest representation
/// that parses back to the same `f64`.
pub fn write_quotes<W: Write>(mut out: W, quotes: &[QuoteEvent], fmt: &FormatConfig) -> std::io::Result<()> {
    let d = delim(fmt);
    writeln!(out, "day{d}time{d}bid{d}ask{d}bid_vol{d}ask_vol")?;
    for q in quotes {
        writeln!(
            out,
            "{}{d}{}{d}{}{d}{}{d}{}{d}{}",
            q.day.format(DAY_FORMAT),
            q.t,
            q.bid,
            q.ask,
            q.bid_vol,
            q.ask_vol
        )?;
    }
    Ok(())
}

pub fn write_trades<W: Write>(mut out: W, trades: &[TradeEvent], fmt: &FormatConfig) -> std::io::Result<()> {
    let d = delim(fmt);
    writeln!(out, "day{d}time{d}price{d}volume")?;
    for tr in trades {
        writeln!(out, "{}{d}{}{d}{}{d}{}", tr.day.format(DAY_FORMAT), tr.t, tr.price, tr.volume)?;
    }
    Ok(())
}

/// Keeps events with `open_s <= t < close_s`, preserving order.
pub fn filter_market_time<E: Timed + Clone>(events: &[E], window: &MarketWindow) -> Vec<E> {
    events.iter().filter(|e| window.contains(e.t())).cloned().collect()
}

/// Groups events by day. Within a day the file order is kept.
pub fn split_by_day<E: Timed>(events: Vec<E>) -> BTreeMap<Day, Vec<E>> {
    let mut map: BTreeMap<Day, Vec<E>> = BTreeMap::new();
    for e in events {
        map.entry(e.day()).or_default().push(e);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day() -> Day {
        parse_day("2008-01-02").unwrap()
    }

    fn quotes(text: &str) -> Parsed<QuoteEvent> {
        parse_quotes(text.as_bytes(), &FormatConfig::default()).unwrap()
    }

    fn trades(text: &str) -> Parsed<TradeEvent> {
        parse_trades(text.as_bytes(), &FormatConfig::default()).unwrap()
    }

    const QH: &str = "day,time,bid,ask,bid_vol,ask_vol\n";
    const TH: &str = "day,time,price,volume\n";

    #[test]
    fn quote_row_maps_fields() {
        let p = quotes(&format!("{QH}2008-01-02,34800,100.00,100.02,500,300\n"));
        assert_eq!(p.reject_count(), 0);
        assert_eq!(
            p.events,
            vec![QuoteEvent {
                day: day(),
                t: 34800,
                bid: 100.00,
                ask: 100.02,
                bid_vol: 500,
                ask_vol: 300,
                seq: 0
            }]
        );
    }

    #[test]
    fn crossed_quote_is_rejected_and_parsing_continues() {
        let p = quotes(&format!(
            "{QH}2008-01-02,34800,100.00,99.99,5,5\n2008-01-02,34801,100.00,100.01,5,5\n"
        ));
        assert_eq!(p.reject_count(), 1);
        assert_eq!(p.rejects[0].line, 2);
        assert_eq!(p.events.len(), 1);
        assert_eq!(p.events[0].t, 34801);
    }

    #[test]
    fn non_numeric_field_is_rejected() {
        let p = quotes(&format!("{QH}2008-01-02,34800,abc,100.02,500,300\n"));
        assert_eq!(p.reject_count(), 1);
        assert!(p.rejects[0].reason.contains("bid"));
    }

    #[test]
    fn same_second_quotes_get_arrival_order() {
        let p = quotes(&format!(
            "{QH}2008-01-02,34800,100.00,100.02,1,1\n2008-01-02,34800,100.01,100.03,1,1\n"
        ));
        let seqs: Vec<u32> = p.events.iter().map(|q| q.seq).collect();
        assert_eq!(seqs, vec![0, 1]);
    }

    #[test]
    fn missing_column_is_fatal() {
        let err = parse_quotes(
            "day,time,bid,ask\n2008-01-02,1,1,1\n".as_bytes(),
            &FormatConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Header(_)));
    }

    #[test]
    fn trade_row_maps_fields() {
        let p = trades(&format!("{TH}2008-01-02,34801,100.01,200\n"));
        assert_eq!(p.events[0].t, 34801);
        assert_eq!(p.events[0].price, 100.01);
        assert_eq!(p.events[0].volume, 200);
    }

    #[test]
    fn empty_trade_file_is_empty() {
        let p = trades("");
        assert!(p.events.is_empty());
        assert_eq!(p.reject_count(), 0);
    }

    #[test]
    fn three_trades_same_second() {
        let p = trades(&format!(
            "{TH}2008-01-02,34801,1,1\n2008-01-02,34801,1,1\n2008-01-02,34801,1,1\n"
        ));
        let seqs: Vec<u32> = p.events.iter().map(|q| q.seq).collect();
        assert_eq!(seqs, vec![0, 1, 2]);
    }

    #[test]
    fn non_positive_trade_rejected() {
        let p = trades(&format!("{TH}2008-01-02,34801,0,10\n2008-01-02,34801,1.5,0\n"));
        assert_eq!(p.reject_count(), 2);
    }

    #[test]
    fn hms_times_and_custom_delimiter() {
        let fmt = FormatConfig { delimiter: b';' };
        let p = parse_trades("DAY;Time;Price;Volume\n2008-01-02;09:40:01;10.5;3\n".as_bytes(), &fmt)
            .unwrap();
        assert_eq!(p.events[0].t, 34801);
    }

    #[test]
    fn window_boundaries() {
        let w = MarketWindow::DEFAULT;
        assert_eq!(w.len(), 22_200);
        assert!(!w.contains(34_799));
        assert!(w.contains(34_800));
        assert!(!w.contains(57_000));
        let mk = |t| TradeEvent { day: day(), t, price: 1.0, volume: 1, seq: 0 };
        let kept = filter_market_time(&[mk(34_799), mk(34_800), mk(57_000)], &w);
        assert_eq!(kept.iter().map(|e| e.t).collect::<Vec<_>>(), vec![34_800]);
    }

    #[test]
    fn window_parse_and_display() {
        let w: MarketWindow = "09:40:00-15:50:00".parse().unwrap();
        assert_eq!(w, MarketWindow::DEFAULT);
        assert_eq!(w.to_string(), "09:40:00-15:50:00");
        assert!("15:50:00-09:40:00".parse::<MarketWindow>().is_err());
    }
}
