//! Synthetic quote and trade streams with known trade signs and a known
//! expected response.
//!
//! Trade signs follow a two-state Markov chain: each trade repeats the
//! previous sign with probability `p_persist`, giving the autocorrelation
//! `C(k) = (2 p_persist - 1)^k`. Every trade moves the log-midpoint by
//! `lambda * sign`; with the transient kernel a trade's contribution decays as
//! `exp(-age / decay)` seconds. Independent Gaussian noise of standard
//! deviation `sigma_noise` is added every second.
//!
//! A quote is emitted after every trade (and once in seconds without
//! trades), so the last midpoint of second `t` already contains the impact of
//! the trades in `t`. Trade prices sit on the tick grid and step in the
//! trade's direction whenever the sign changes, which makes tick-rule
//! classification recover the generated signs exactly.

use std::io::Write;

use chrono::{Datelike, Days, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{parse_day, Day, MarketWindow, QuoteEvent, TradeEvent};
use crate::signs::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradesPerSecond {
    Fixed(u32),
    /// Number of failures before the first success, with the given mean.
    Geometric { mean: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactKernel {
    Permanent,
    /// Exponential decay with the given length in seconds.
    Transient { decay: f64 },
}

impl std::str::FromStr for ImpactKernel {
    type Err = Error;

    /// `permanent` or `transient:<decay>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "permanent" {
            return Ok(ImpactKernel::Permanent);
        }
        if let Some(v) = s.strip_prefix("transient:") {
            let decay: f64 = v.parse().map_err(|_| Error::Config(format!("bad decay length `{v}`")))?;
            return Ok(ImpactKernel::Transient { decay });
        }
        Err(Error::Config(format!("unknown kernel `{s}`")))
    }
}

impl std::str::FromStr for TradesPerSecond {
    type Err = Error;

    /// `fixed:<k>` or `geometric:<mean>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown trades-per-second law `{s}`"));
        let (kind, v) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => Ok(TradesPerSecond::Fixed(v.parse().map_err(|_| bad())?)),
            "geometric" => Ok(TradesPerSecond::Geometric { mean: v.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub days: usize,
    pub seconds_per_day: u32,
    pub p_persist: f64,
    /// Log-price step per trade.
    pub lambda: f64,
    /// Per-second log-price noise.
    pub sigma_noise: f64,
    pub trades_per_second: TradesPerSecond,
    pub kernel: ImpactKernel,
    pub tick: f64,
    pub base_spread: f64,
    pub base_price: f64,
    /// First second of every day, seconds since midnight.
    pub open_s: u32,
    pub start_day: Day,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            days: 4,
            seconds_per_day: MarketWindow::DEFAULT.len() as u32,
            p_persist: 0.7,
            lambda: 1e-4,
            sigma_noise: 1e-4,
            trades_per_second: TradesPerSecond::Fixed(1),
            kernel: ImpactKernel::Permanent,
            tick: 0.01,
            base_spread: 0.02,
            base_price: 100.0,
            open_s: MarketWindow::DEFAULT.open_s,
            start_day: parse_day("2008-01-02").expect("valid literal date"),
            seed: 42,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.5..1.0).contains(&self.p_persist) {
            return bad("p_persist must lie in [0.5, 1)");
        }
        if !(self.lambda >= 0.0 && self.sigma_noise >= 0.0) {
            return bad("lambda and sigma_noise must be non-negative");
        }
        if !(self.tick > 0.0 && self.base_spread >= 0.0 && self.base_price > 0.0) {
            return bad("tick and base price must be positive, spread non-negative");
        }
        if self.days == 0 || self.seconds_per_day == 0 {
            return bad("days and seconds_per_day must be positive");
        }
        if self.open_s as u64 + self.seconds_per_day as u64 > 86_400 {
            return bad("trading day runs past midnight");
        }
        if let TradesPerSecond::Geometric { mean } = self.trades_per_second {
            if !(mean > 0.0) {
                return bad("geometric mean must be positive");
            }
        }
        if let ImpactKernel::Transient { decay } = self.kernel {
            if !(decay > 0.0) {
                return bad("transient decay length must be positive");
            }
        }
        Ok(())
    }

    /// Window covering exactly the generated seconds.
    pub fn window(&self) -> MarketWindow {
        MarketWindow { open_s: self.open_s, close_s: self.open_s + self.seconds_per_day }
    }

    /// The `n`-th business day (Mon-Fri) starting at `start_day`.
    pub fn day(&self, n: usize) -> Day {
        let mut d = self.start_day;
        let mut left = n;
        while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            d = d + Days::new(1);
        }
        while left > 0 {
            d = d + Days::new(1);
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                left -= 1;
            }
        }
        d
    }
}

/// Generated events plus the true sign of every trade (aligned with
/// `trades`).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub quotes: Vec<QuoteEvent>,
    pub trades: Vec<TradeEvent>,
    pub true_signs: Vec<Sign>,
}

struct DayOutput {
    quotes: Vec<QuoteEvent>,
    trades: Vec<TradeEvent>,
    signs: Vec<Sign>,
}

pub fn generate(params: &SynthParams) -> Result<SynthMarket> {
    params.validate()?;
    let per_day: Vec<DayOutput> = (0..params.days)
        .into_par_iter()
        .map(|d| generate_day(params, d))
        .collect::<Result<_>>()?;
    let mut out = SynthMarket { quotes: Vec::new(), trades: Vec::new(), true_signs: Vec::new() };
    for d in per_day {
        out.quotes.extend(d.quotes);
        out.trades.extend(d.trades);
        out.true_signs.extend(d.signs);
    }
    Ok(out)
}

fn generate_day(params: &SynthParams, d: usize) -> Result<DayOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(d as u64);
    let day = params.day(d);

    let geometric = match params.trades_per_second {
        TradesPerSecond::Geometric { mean } => {
            Some(Geometric::new(1.0 / (mean + 1.0)).map_err(|e| Error::Config(e.to_string()))?)
        }
        TradesPerSecond::Fixed(_) => None,
    };
    let decay = match params.kernel {
        ImpactKernel::Permanent => 1.0,
        ImpactKernel::Transient { decay } => (-1.0 / decay).exp(),
    };
    let ticks_per_dollar = 1.0 / params.tick;
    let integral_grid = (ticks_per_dollar - ticks_per_dollar.round()).abs() < 1e-9;
    let to_price = |ticks: i64| {
        if integral_grid {
            ticks as f64 / ticks_per_dollar.round()
        } else {
            ticks as f64 * params.tick
        }
    };
    let half = (params.base_spread / 2.0 / params.tick).round() * params.tick;
    let log_base = params.base_price.ln();

    let mut out = DayOutput { quotes: Vec::new(), trades: Vec::new(), signs: Vec::new() };
    let mut impact = 0.0f64;
    let mut noise = 0.0f64;
    let mut prev_sign: Option<Sign> = None;
    let mut last_ticks: Option<i64> = None;

    for k in 0..params.seconds_per_day {
        let t = params.open_s + k;
        if k > 0 {
            let z: f64 = rng.sample(StandardNormal);
            noise += params.sigma_noise * z;
            impact *= decay;
        }
        let n = match (params.trades_per_second, &geometric) {
            (TradesPerSecond::Fixed(n), _) => n as u64,
            (_, Some(g)) => g.sample(&mut rng),
            _ => unreachable!(),
        };
        let mut seq_q = 0u32;
        let quote = |rng: &mut ChaCha8Rng, mid: f64, seq: &mut u32| {
            let q = QuoteEvent {
                day,
                t,
                bid: mid - half,
                ask: mid + half,
                bid_vol: 100 * rng.random_range(1..=10u64),
                ask_vol: 100 * rng.random_range(1..=10u64),
                seq: *seq,
            };
            *seq += 1;
            q
        };
        if n == 0 {
            let mid = (log_base + params.lambda * impact + noise).exp();
            let q = quote(&mut rng, mid, &mut seq_q);
            out.quotes.push(q);
        }
        for seq_t in 0..n as u32 {
            let sign: Sign = match prev_sign {
                None => {
                    if rng.random_bool(0.5) {
                        1
                    } else {
                        -1
                    }
                }
                Some(s) => {
                    if rng.random_bool(params.p_persist) {
                        s
                    } else {
                        -s
                    }
                }
            };
            impact += sign as f64;
            let mid = (log_base + params.lambda * impact + noise).exp();
            let target = ((mid + sign as f64 * half) / params.tick).round() as i64;
            let ticks = match (prev_sign, last_ticks) {
                (Some(ps), Some(lt)) => {
                    let step = i64::from(ps != sign);
                    if sign > 0 {
                        target.max(lt + step)
                    } else {
                        target.min(lt - step)
                    }
                }
                _ => target,
            }
            .max(1);
            out.trades.push(TradeEvent {
                day,
                t,
                price: to_price(ticks),
                volume: 100 * rng.random_range(1..=10u64),
                seq: seq_t,
            });
            out.signs.push(sign);
            let q = quote(&mut rng, mid, &mut seq_q);
            out.quotes.push(q);
            prev_sign = Some(sign);
            last_ticks = Some(ticks);
        }
    }
    Ok(out)
}

/// Expected physical-scale response at lag `tau` for one trade per second.
///
/// Permanent kernel: `lambda * (1 - q^tau) / (1 - q)` with `q = 2p - 1`.
/// Transient kernel: the same expectation summed term by term over the
/// contributions of every earlier and later trade.
pub fn theoretical_response(params: &SynthParams, tau: u32) -> Result<f64> {
    if params.trades_per_second != TradesPerSecond::Fixed(1) {
        return Err(Error::Unsupported("expected response needs exactly one trade per second".into()));
    }
    if tau == 0 {
        return Ok(0.0);
    }
    let q = 2.0 * params.p_persist - 1.0;
    match params.kernel {
        ImpactKernel::Permanent => Ok(params.lambda * (1.0 - q.powi(tau as i32)) / (1.0 - q)),
        ImpactKernel::Transient { decay } => Ok(params.lambda * transient_expectation(q, decay, tau)),
    }
}

/// `sum_k C(|k|) [K(tau - 1 - k) - K(-1 - k)]` with `K(j) = exp(-j / decay)`
/// for `j >= 0` and `0` otherwise; `k` is the trade's position relative to
/// the sign second.
fn transient_expectation(q: f64, decay: f64, tau: u32) -> f64 {
    let kernel = |j: i64| if j < 0 { 0.0 } else { (-(j as f64) / decay).exp() };
    let corr = |k: i64| q.powi(k.unsigned_abs() as i32);
    let mut acc = crate::stats::NeumaierSum::new();
    let tau = tau as i64;
    for k in 0..tau {
        acc.add(corr(k) * kernel(tau - 1 - k));
    }
    // earlier trades: their decayed contribution keeps shrinking
    let mut k = -1i64;
    loop {
        let c = corr(k);
        let term = c * (kernel(tau - 1 - k) - kernel(-1 - k));
        acc.add(term);
        if c < 1e-18 || k < -2_000_000 {
            break;
        }
        k -= 1;
    }
    acc.value()
}

/// Sample autocorrelation of a sign sequence for lags `0..=max_lag`.
pub fn sign_autocorrelation(signs: &[Sign], max_lag: usize) -> Vec<f64> {
    let n = signs.len();
    let mean = signs.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
    let var = signs.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|k| {
            if k >= n || var == 0.0 {
                return f64::NAN;
            }
            let c: f64 = (0..n - k).map(|i| (signs[i] as f64 - mean) * (signs[i + k] as f64 - mean)).sum();
            c / (n - k) as f64 / var
        })
        .collect()
}

/// Writes `day,time,seq,sign` for every generated trade.
pub fn write_truth<W: Write>(mut out: W, market: &SynthMarket) -> std::io::Result<()> {
    writeln!(out, "day,time,seq,sign")?;
    for (tr, s) in market.trades.iter().zip(&market.true_signs) {
        writeln!(out, "{},{},{},{}", tr.day.format("%Y-%m-%d"), tr.t, tr.seq, s)?;
    }
    Ok(())
}
