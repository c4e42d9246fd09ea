//! Trade-sign classification on the trade scale and its per-second
//! aggregation.
//!
//! A trade is a buy (`+1`) when its price is above the previous trade's
//! price and a sell (`-1`) when below; at an unchanged price it inherits the
//! previous trade's sign. The per-second sign is the sign of the sum of the
//! trade signs in that second, or `0` when the second is empty or balanced.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{Day, MarketWindow, TradeEvent};

/// `+1` buyer initiated, `-1` seller initiated, `0` only for aggregates.
pub type Sign = i8;

#[inline]
pub fn sgn(x: i64) -> Sign {
    x.signum() as Sign
}

/// Per-trade signs in input order. `None` marks leading trades whose sign
/// cannot be resolved because no earlier price (or carry-in sign) exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub signs: Vec<Option<Sign>>,
    pub unresolved: usize,
}

/// Tick-rule classification of one day of trades ordered by `(t, seq)`.
///
/// `carry_in` seeds the recursion with the sign of the last trade of the
/// previous day; without it, trades before the first price change stay
/// unresolved.
pub fn classify_trade_scale(trades: &[TradeEvent], carry_in: Option<Sign>) -> Classification {
    let mut signs = Vec::with_capacity(trades.len());
    let mut prev_price: Option<f64> = None;
    let mut prev_sign = carry_in.filter(|s| *s != 0);
    let mut unresolved = 0;
    for tr in trades {
        let sign = match prev_price {
            // exact comparison: prices sit on a discrete tick grid
            Some(p) if tr.price != p => Some(if tr.price > p { 1 } else { -1 }),
            _ => prev_sign,
        };
        if sign.is_none() {
            unresolved += 1;
        }
        signs.push(sign);
        prev_price = Some(tr.price);
        prev_sign = sign;
    }
    Classification { signs, unresolved }
}

/// Trade signs grouped by second with the derived aggregates
/// `N(t)`, `E(t) = sum of signs` and `eps_p(t) = sgn(E(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSeries {
    pub day: Day,
    pub base_s: u32,
    /// CSR offsets into `trade_signs`, length `len + 1`.
    offsets: Vec<u32>,
    trade_signs: Vec<Sign>,
    n: Vec<u32>,
    e: Vec<i32>,
    eps: Vec<Sign>,
    /// Trades dropped because their sign could not be resolved.
    pub unresolved: usize,
}

impl SignSeries {
    /// Builds the series from per-second lists of `±1` trade signs.
    pub fn from_seconds(day: Day, base_s: u32, seconds: &[Vec<Sign>]) -> Self {
        let mut offsets = Vec::with_capacity(seconds.len() + 1);
        let mut trade_signs = Vec::new();
        let mut n = Vec::with_capacity(seconds.len());
        let mut e = Vec::with_capacity(seconds.len());
        let mut eps = Vec::with_capacity(seconds.len());
        offsets.push(0);
        for sec in seconds {
            debug_assert!(sec.iter().all(|s| *s == 1 || *s == -1));
            trade_signs.extend_from_slice(sec);
            offsets.push(trade_signs.len() as u32);
            let sum: i32 = sec.iter().map(|&s| s as i32).sum();
            n.push(sec.len() as u32);
            e.push(sum);
            eps.push(sgn(sum as i64));
        }
        Self { day, base_s, offsets, trade_signs, n, e, eps, unresolved: 0 }
    }

    /// Number of seconds.
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    #[inline]
    pub fn n(&self, t: usize) -> u32 {
        self.n[t]
    }

    #[inline]
    pub fn e(&self, t: usize) -> i32 {
        self.e[t]
    }

    /// Physical-scale sign of second `t`.
    #[inline]
    pub fn eps(&self, t: usize) -> Sign {
        self.eps[t]
    }

    pub fn trades_at(&self, t: usize) -> &[Sign] {
        &self.trade_signs[self.offsets[t] as usize..self.offsets[t + 1] as usize]
    }

    pub fn total_trades(&self) -> usize {
        self.trade_signs.len()
    }

    /// `(second, sign)` for every classified trade in trade-time order.
    pub fn trade_sequence(&self) -> impl Iterator<Item = (usize, Sign)> + '_ {
        (0..self.len()).flat_map(move |t| self.trades_at(t).iter().map(move |&s| (t, s)))
    }

    pub fn per_second(&self) -> Vec<Vec<Sign>> {
        (0..self.len()).map(|t| self.trades_at(t).to_vec()).collect()
    }

    /// Same series with every trade sign negated.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        out.trade_signs.iter_mut().for_each(|s| *s = -*s);
        out.e.iter_mut().for_each(|e| *e = -*e);
        out.eps.iter_mut().for_each(|s| *s = -*s);
        out
    }

    /// Replaces the direction of second `t`: every trade in it is negated when
    /// `sign` disagrees with the current physical sign. `N` and `|E|` are kept.
    pub(crate) fn set_direction(&mut self, t: usize, sign: Sign) {
        if self.eps[t] != 0 && self.eps[t] != sign {
            let (a, b) = (self.offsets[t] as usize, self.offsets[t + 1] as usize);
            self.trade_signs[a..b].iter_mut().for_each(|s| *s = -*s);
            self.e[t] = -self.e[t];
            self.eps[t] = sign;
        }
    }
}

/// Groups classified trades of one day into a [`SignSeries`] over `window`.
/// Unresolved trades and trades outside the window are dropped.
pub fn aggregate_physical(
    day: Day,
    trades: &[TradeEvent],
    classification: &Classification,
    window: &MarketWindow,
) -> SignSeries {
    let mut seconds: Vec<Vec<Sign>> = vec![Vec::new(); window.len()];
    for (tr, sign) in trades.iter().zip(&classification.signs) {
        if tr.day != day {
            continue;
        }
        if let (Some(k), Some(s)) = (window.offset(tr.t), sign) {
            seconds[k].push(*s);
        }
    }
    let mut series = SignSeries::from_seconds(day, window.open_s, &seconds);
    series.unresolved = classification.unresolved;
    series
}

/// Classifies and aggregates one day of trades in a single call.
pub fn build_sign_series(day: Day, trades: &[TradeEvent], window: &MarketWindow, carry_in: Option<Sign>) -> SignSeries {
    let classification = classify_trade_scale(trades, carry_in);
    aggregate_physical(day, trades, &classification, window)
}

/// Writes seconds with at least one trade as `offset,n,e,eps_p[,signs]`, where
/// `signs` spells the per-trade signs as a string of `+` and `-`.
pub fn write_signs<W: Write>(mut out: W, series: &SignSeries, per_trade: bool) -> std::io::Result<()> {
    if per_trade {
        writeln!(out, "offset,n,e,eps_p,signs")?;
    } else {
        writeln!(out, "offset,n,e,eps_p")?;
    }
    for t in 0..series.len() {
        if series.n(t) == 0 {
            continue;
        }
        write!(out, "{},{},{},{}", t, series.n(t), series.e(t), series.eps(t))?;
        if per_trade {
            let s: String = series.trades_at(t).iter().map(|&x| if x > 0 { '+' } else { '-' }).collect();
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a file written by [`write_signs`] with the per-trade column.
pub fn read_signs<R: BufRead>(input: R, day: Day, base_s: u32, len: usize) -> Result<SignSeries> {
    let mut seconds: Vec<Vec<Sign>> = vec![Vec::new(); len];
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if n == 0 {
            if !line.ends_with(",signs") {
                return Err(Error::Header("sign file lacks the per-trade `signs` column".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Header(format!("line {}: malformed sign row `{line}`", n + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad());
        }
        let k: usize = fields[0].parse().map_err(|_| bad())?;
        if k >= len {
            return Err(bad());
        }
        seconds[k] = fields[4]
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?;
    }
    Ok(SignSeries::from_seconds(day, base_s, &seconds))
}
