//! Per-second midpoint and spread series and the returns built on them.
//!
//! Each second of the market window carries the midpoint `(ask + bid) / 2`
//! of the last quote recorded in that second. Seconds without quotes repeat
//! the previous second's value. Seconds before the first quote of the day are
//! undefined, and estimators skip them.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{Day, MarketWindow, QuoteEvent};
use crate::stats::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointSeries {
    pub day: Day,
    /// Window open in seconds since midnight; offset 0 corresponds to it.
    pub base_s: u32,
    /// Midpoint per second offset, `NaN` before `defined_from`.
    pub mid: Vec<f64>,
    /// Spread per second offset, `NaN` before `defined_from`.
    pub spread: Vec<f64>,
    pub defined_from: usize,
}

impl MidpointSeries {
    pub fn len(&self) -> usize {
        self.mid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mid.is_empty()
    }

    #[inline]
    pub fn mid_at(&self, k: i64) -> Option<f64> {
        if k < self.defined_from as i64 || k >= self.mid.len() as i64 {
            None
        } else {
            Some(self.mid[k as usize])
        }
    }

    #[inline]
    pub fn spread_at(&self, k: i64) -> Option<f64> {
        self.mid_at(k).map(|_| self.spread[k as usize])
    }

    /// Spreads of every defined second.
    pub fn defined_spreads(&self) -> &[f64] {
        &self.spread[self.defined_from.min(self.spread.len())..]
    }

    /// Builds a series directly from midpoint values; `None` marks the
    /// undefined prefix. Mostly useful for fixtures.
    pub fn from_values(day: Day, base_s: u32, mids: &[Option<f64>], spreads: Option<&[f64]>) -> Self {
        let defined_from = mids.iter().position(Option::is_some).unwrap_or(mids.len());
        let mut mid = vec![f64::NAN; mids.len()];
        let mut spread = vec![f64::NAN; mids.len()];
        let mut last = f64::NAN;
        for (k, m) in mids.iter().enumerate().skip(defined_from) {
            if let Some(v) = m {
                last = *v;
            }
            mid[k] = last;
            spread[k] = spreads.map_or(0.0, |s| s[k]);
        }
        Self { day, base_s, mid, spread, defined_from }
    }
}

/// Builds the forward-filled series for one day.
///
/// Quotes outside `window` are ignored; within a second the quote with the
/// highest arrival index wins.
pub fn build_midpoint_series(day: Day, quotes: &[QuoteEvent], window: &MarketWindow) -> Result<MidpointSeries> {
    let len = window.len();
    let mut last: Vec<Option<(u32, f64, f64)>> = vec![None; len];
    for q in quotes.iter().filter(|q| q.day == day) {
        if let Some(k) = window.offset(q.t) {
            match last[k] {
                Some((seq, _, _)) if seq > q.seq => {}
                _ => last[k] = Some((q.seq, q.midpoint(), q.spread())),
            }
        }
    }
    let defined_from = last.iter().position(Option::is_some).ok_or(Error::EmptyDay(day))?;
    let mut mid = vec![f64::NAN; len];
    let mut spread = vec![f64::NAN; len];
    let (mut m, mut s) = (f64::NAN, f64::NAN);
    for k in defined_from..len {
        if let Some((_, qm, qs)) = last[k] {
            m = qm;
            s = qs;
        }
        mid[k] = m;
        spread[k] = s;
    }
    Ok(MidpointSeries { day, base_s: window.open_s, mid, spread, defined_from })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    /// `(m1 - m0) / m0`
    #[default]
    Relative,
    /// `ln(m1 / m0)`
    Logarithmic,
}

impl ReturnKind {
    #[inline]
    pub fn between(self, m0: f64, m1: f64) -> f64 {
        match self {
            ReturnKind::Relative => (m1 - m0) / m0,
            ReturnKind::Logarithmic => (m1 / m0).ln(),
        }
    }
}

impl std::str::FromStr for ReturnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" | "rel" => Ok(ReturnKind::Relative),
            "logarithmic" | "log" => Ok(ReturnKind::Logarithmic),
            other => Err(Error::Config(format!("unknown return kind `{other}`"))),
        }
    }
}

/// Return from second `t` to `t + tau` within one day, `None` when either
/// endpoint is undefined or outside the day.
pub fn compute_return(series: &MidpointSeries, t: i64, tau: i64, kind: ReturnKind) -> Option<f64> {
    let m0 = series.mid_at(t)?;
    let m1 = series.mid_at(t + tau)?;
    Some(kind.between(m0, m1))
}

/// Mean over quoted seconds of `|last_mid - mean_mid| / mean_mid`, i.e. how
/// far the last-of-second sampling rule lands from the per-second average.
pub fn midpoint_sampling_diagnostic(quotes: &[QuoteEvent]) -> f64 {
    let mut per_second: BTreeMap<(Day, u32), Vec<(u32, f64)>> = BTreeMap::new();
    for q in quotes {
        per_second.entry((q.day, q.t)).or_default().push((q.seq, q.midpoint()));
    }
    if per_second.is_empty() {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    for mids in per_second.values() {
        let mean = mids.iter().map(|&(_, m)| m).sum::<f64>() / mids.len() as f64;
        let last = mids.iter().max_by_key(|&&(seq, _)| seq).map(|&(_, m)| m).unwrap_or(mean);
        acc.add((last - mean).abs() / mean);
    }
    acc.value() / per_second.len() as f64
}

/// Writes the defined part of a series as `offset,midpoint,spread`.
pub fn write_midpoints<W: Write>(mut out: W, series: &MidpointSeries) -> std::io::Result<()> {
    writeln!(out, "offset,midpoint,spread")?;
    for k in series.defined_from..series.len() {
        writeln!(out, "{},{},{}", k, series.mid[k], series.spread[k])?;
    }
    Ok(())
}

/// Reads a file written by [`write_midpoints`]. Offsets missing from the file
/// are forward filled.
pub fn read_midpoints<R: BufRead>(input: R, day: Day, base_s: u32, len: usize) -> Result<MidpointSeries> {
    let mut mids = vec![None; len];
    let mut spreads = vec![0.0; len];
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Header(format!("line {}: malformed midpoint row `{line}`", n + 1));
        let mut it = line.split(',');
        let k: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let m: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let s: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if k >= len {
            return Err(bad());
        }
        mids[k] = Some(m);
        spreads[k] = s;
    }
    if mids.iter().all(Option::is_none) {
        return Err(Error::EmptyDay(day));
    }
    let mut series = MidpointSeries::from_values(day, base_s, &mids, Some(&spreads));
    // spreads of forward-filled seconds follow the last quoted second
    let mut last = f64::NAN;
    for k in series.defined_from..len {
        if mids[k].is_some() {
            last = spreads[k];
        }
        series.spread[k] = last;
    }
    Ok(series)
}
