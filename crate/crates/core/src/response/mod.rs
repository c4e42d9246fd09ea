//! Self- and cross-response functions.
//!
//! For stocks `i` (returns) and `j` (signs) the response at lag `tau` is a
//! weighted average of `r_i(t - 1, tau) * sgn(E_j(t))` over all seconds `t`
//! of all shared days, where the return is anchored one second before the
//! sign. The three weightings differ only in the per-second weight:
//!
//! | weighting  | numerator weight | denominator weight          |
//! |------------|------------------|-----------------------------|
//! | `Trade`    | `\|E(t)\|`       | `N(t)`                      |
//! | `Physical` | `eta(eps_p(t))`  | `eta(eps_p(t))` (or `1`)    |
//! | `Activity` | `N(t)`           | `N(t)`                      |
//!
//! `eta(x)` is `1` for `x != 0` and `0` otherwise. With `exclude_zero` off
//! the physical denominator counts every second with a defined return.
//!
//! Samples whose return is undefined (before the first quote or past the end
//! of the day) are dropped together with their weight. Each day produces its
//! own partial sums; partials are merged in day order, so the result does not
//! depend on how many worker threads computed them.

mod accumulate;
mod brute;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::Day;
use crate::midpoint::{MidpointSeries, ReturnKind};
use crate::signs::SignSeries;
use crate::stats::NeumaierSum;

pub(crate) use accumulate::{finalize, DayPartial};
pub use brute::brute_force_response;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Trade,
    Physical,
    Activity,
}

impl Weighting {
    pub const ALL: [Weighting; 3] = [Weighting::Trade, Weighting::Physical, Weighting::Activity];

    pub fn curve_kind(self) -> CurveKind {
        match self {
            Weighting::Trade => CurveKind::TradeScale,
            Weighting::Physical => CurveKind::Physical,
            Weighting::Activity => CurveKind::Activity,
        }
    }

    /// `(signed numerator weight, denominator weight)` of second `t`. The
    /// signed numerator weight already includes `sgn(E(t))`.
    #[inline]
    pub(crate) fn second_weights(self, signs: &SignSeries, t: usize, exclude_zero: bool) -> (f64, f64) {
        let eps = signs.eps(t) as f64;
        match self {
            Weighting::Trade => (signs.e(t) as f64, signs.n(t) as f64),
            Weighting::Physical => {
                let eta = eps.abs();
                (eps, if exclude_zero { eta } else { 1.0 })
            }
            Weighting::Activity => {
                let n = signs.n(t) as f64;
                (eps * n, n)
            }
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Trade => "trade",
            Weighting::Physical => "physical",
            Weighting::Activity => "activity",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trade" => Ok(Weighting::Trade),
            "physical" => Ok(Weighting::Physical),
            "activity" => Ok(Weighting::Activity),
            other => Err(Error::Config(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    TradeScale,
    Physical,
    Activity,
    Shifted,
    Short,
    Long,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub tau_max: u32,
    /// Drop seconds with `eps_p = 0` from the physical-scale denominator.
    pub exclude_zero: bool,
    pub return_kind: ReturnKind,
    /// Explicit lag grid; `None` means every integer in `1..=tau_max`.
    pub lags: Option<Vec<u32>>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { tau_max: 1000, exclude_zero: true, return_kind: ReturnKind::Relative, lags: None }
    }
}

impl EstimatorConfig {
    pub fn with_tau_max(tau_max: u32) -> Self {
        Self { tau_max, ..Self::default() }
    }

    pub fn lag_grid(&self) -> Result<Vec<u32>> {
        if self.tau_max < 1 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        match &self.lags {
            None => Ok((1..=self.tau_max).collect()),
            Some(lags) => {
                if lags.is_empty() {
                    return Err(Error::Config("lag grid is empty".into()));
                }
                if lags.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("lag grid must be strictly increasing".into()));
                }
                if lags[0] < 1 || *lags.last().unwrap() > self.tau_max {
                    return Err(Error::Config(format!("lags must lie in 1..={}", self.tau_max)));
                }
                Ok(lags.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub i: String,
    pub j: String,
    pub first_day: Option<Day>,
    pub last_day: Option<Day>,
    pub days: usize,
    pub weighting: Option<Weighting>,
    /// Offset between the return anchor and the sign second.
    pub shift: i64,
    pub exclude_zero: bool,
    pub return_kind: ReturnKind,
    pub flags: Vec<String>,
}

/// Estimator values over a lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub kind: CurveKind,
    pub lags: Vec<u32>,
    pub values: Vec<Option<f64>>,
    /// Samples (seconds, or trades on the trade-time scale) per lag.
    pub counts: Vec<u64>,
    /// Sum of squared residuals `(a - R b)^2` per lag.
    pub m2: Vec<f64>,
    pub stderr: Vec<Option<f64>>,
    pub meta: CurveMeta,
}

impl ResponseCurve {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn value_at(&self, tau: u32) -> Option<f64> {
        let k = self.lags.binary_search(&tau).ok()?;
        self.values[k]
    }

    pub fn stderr_at(&self, tau: u32) -> Option<f64> {
        let k = self.lags.binary_search(&tau).ok()?;
        self.stderr[k]
    }

    /// `(tau, value)` of the largest `|value|`.
    pub fn peak(&self) -> Option<(u32, f64)> {
        self.lags
            .iter()
            .zip(&self.values)
            .filter_map(|(&tau, v)| v.map(|v| (tau, v)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    }

    pub fn with_pair(mut self, i: &str, j: &str) -> Self {
        self.meta.i = i.to_string();
        self.meta.j = j.to_string();
        self
    }
}

/// Pairs return and sign series by day. Days present in only one of the two
/// inputs are skipped.
pub(crate) fn pair_days<'a>(
    mids: &'a [MidpointSeries],
    signs: &'a [SignSeries],
) -> Result<Vec<(&'a MidpointSeries, &'a SignSeries)>> {
    let by_day: BTreeMap<Day, &SignSeries> = signs.iter().map(|s| (s.day, s)).collect();
    let mut out: Vec<_> = mids
        .iter()
        .filter_map(|m| by_day.get(&m.day).map(|s| (m, *s)))
        .collect();
    out.sort_by_key(|(m, _)| m.day);
    if out.is_empty() {
        return Err(Error::NoOverlap);
    }
    if let Some((m, s)) = out.iter().find(|(m, s)| m.len() != s.len()) {
        return Err(Error::Config(format!(
            "day {}: midpoint series has {} seconds but sign series has {}",
            m.day,
            m.len(),
            s.len()
        )));
    }
    Ok(out)
}

pub(crate) fn base_meta(pairs: &[(&MidpointSeries, &SignSeries)], cfg: &EstimatorConfig) -> CurveMeta {
    CurveMeta {
        first_day: pairs.first().map(|(m, _)| m.day),
        last_day: pairs.last().map(|(m, _)| m.day),
        days: pairs.len(),
        exclude_zero: cfg.exclude_zero,
        return_kind: cfg.return_kind,
        ..CurveMeta::default()
    }
}

/// One day of the shifted physical-clock estimator: return anchored at
/// `t - shift`, sign taken at `t`.
pub(crate) fn day_partial(
    mid: &MidpointSeries,
    signs: &SignSeries,
    weighting: Weighting,
    cfg: &EstimatorConfig,
    shift: i64,
    lags: &[u32],
) -> DayPartial {
    let mut part = DayPartial::new(lags.len());
    let kind = cfg.return_kind;
    for t in 0..signs.len() {
        let (num_w, den_w) = weighting.second_weights(signs, t, cfg.exclude_zero);
        if den_w == 0.0 {
            continue;
        }
        let anchor = t as i64 - shift;
        let Some(m0) = mid.mid_at(anchor) else { continue };
        for (li, &tau) in lags.iter().enumerate() {
            // lags ascend and the series is forward filled, so the first
            // undefined endpoint means we ran past the end of the day
            let Some(m1) = mid.mid_at(anchor + tau as i64) else { break };
            part.push(li, kind.between(m0, m1) * num_w, den_w);
        }
    }
    part
}

pub(crate) fn estimate_shifted(
    mids: &[MidpointSeries],
    signs: &[SignSeries],
    weighting: Weighting,
    cfg: &EstimatorConfig,
    shift: i64,
    kind: CurveKind,
) -> Result<ResponseCurve> {
    let lags = cfg.lag_grid()?;
    let pairs = pair_days(mids, signs)?;
    let partials: Vec<DayPartial> = pairs
        .par_iter()
        .map(|(m, s)| day_partial(m, s, weighting, cfg, shift, &lags))
        .collect();
    let mut meta = base_meta(&pairs, cfg);
    meta.weighting = Some(weighting);
    meta.shift = shift;
    Ok(finalize(kind, lags, &partials, meta))
}

/// Response with the given weighting and the standard one-second anchor.
pub fn response(
    mids: &[MidpointSeries],
    signs: &[SignSeries],
    weighting: Weighting,
    cfg: &EstimatorConfig,
) -> Result<ResponseCurve> {
    estimate_shifted(mids, signs, weighting, cfg, 1, weighting.curve_kind())
}

/// Trade-sign weighted response: every individual trade sign in second `t`
/// is paired with the return from `t - 1`, normalised by the trade count.
pub fn response_trade_scale(mids: &[MidpointSeries], signs: &[SignSeries], cfg: &EstimatorConfig) -> Result<ResponseCurve> {
    response(mids, signs, Weighting::Trade, cfg)
}

/// Physical-scale response: one sample per second with a nonzero net sign.
pub fn response_physical(mids: &[MidpointSeries], signs: &[SignSeries], cfg: &EstimatorConfig) -> Result<ResponseCurve> {
    response(mids, signs, Weighting::Physical, cfg)
}

/// Physical-scale response weighted by the number of trades per second.
pub fn response_activity(mids: &[MidpointSeries], signs: &[SignSeries], cfg: &EstimatorConfig) -> Result<ResponseCurve> {
    response(mids, signs, Weighting::Activity, cfg)
}

/// Per-second weight functions, normalised over all seconds of all days.
///
/// These are the weights `w(t)` in `R = sum r * sgn(E) * w`: the physical and
/// activity weights sum to one, the trade weight sums to
/// `sum |E| / sum N <= 1`.
pub fn weight_function(signs: &[SignSeries], weighting: Weighting, exclude_zero: bool) -> Vec<Vec<f64>> {
    let mut num = Vec::with_capacity(signs.len());
    let mut den = NeumaierSum::new();
    for s in signs {
        let mut day = Vec::with_capacity(s.len());
        for t in 0..s.len() {
            let (n, e) = (s.n(t) as f64, s.e(t) as f64);
            let eta = (s.eps(t) as f64).abs();
            let (w, d) = match weighting {
                Weighting::Trade => (e.abs(), n),
                Weighting::Physical => (eta, if exclude_zero { eta } else { 1.0 }),
                Weighting::Activity => (n, n),
            };
            day.push(w);
            den.add(d);
        }
        num.push(day);
    }
    let den = den.value();
    if den > 0.0 {
        num.iter_mut().flatten().for_each(|w| *w /= den);
    }
    num
}
