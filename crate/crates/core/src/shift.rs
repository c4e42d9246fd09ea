//! Responses with a configurable offset between the return anchor and the
//! trade sign, and scans over that offset or over the lag.
//!
//! On the physical clock the return is anchored `shift` seconds before the
//! sign second; `shift = 1` is the standard estimator. On the trade clock each
//! trade gets a pseudo-midpoint, the last midpoint of the second before its
//! own second, and both shift and lag count trades. Shifts in `(0, 2]` keep
//! the causal order between quotes and trades; negative shifts, or shifts
//! beyond the lag, decouple them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::midpoint::MidpointSeries;
use crate::response::{base_meta, estimate_shifted, finalize, pair_days, CurveKind, DayPartial, EstimatorConfig, ResponseCurve, Weighting};
use crate::signs::SignSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftScale {
    /// Lags and shifts in trades.
    Trade,
    /// Lags and shifts in seconds.
    Physical,
}

impl std::str::FromStr for ShiftScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trade" => Ok(ShiftScale::Trade),
            "physical" => Ok(ShiftScale::Physical),
            other => Err(Error::Config(format!("unknown shift scale `{other}`"))),
        }
    }
}

fn trade_day_partial(mid: &MidpointSeries, signs: &SignSeries, cfg: &EstimatorConfig, shift: i64, lags: &[u32]) -> DayPartial {
    let seq: Vec<(usize, i8)> = signs.trade_sequence().collect();
    let pseudo: Vec<Option<f64>> = seq.iter().map(|&(sec, _)| mid.mid_at(sec as i64 - 1)).collect();
    let m = seq.len() as i64;
    let mut part = DayPartial::new(lags.len());
    for (n, &(_, sign)) in seq.iter().enumerate() {
        let anchor = n as i64 - shift;
        if anchor < 0 || anchor >= m {
            continue;
        }
        let Some(m0) = pseudo[anchor as usize] else { continue };
        for (li, &tau) in lags.iter().enumerate() {
            let end = anchor + tau as i64;
            if end >= m {
                break;
            }
            // pseudo-midpoints are defined from the first defined one onwards
            let Some(m1) = pseudo[end as usize] else { break };
            part.push(li, cfg.return_kind.between(m0, m1) * sign as f64, 1.0);
        }
    }
    part
}

/// Response with the return anchored `shift` steps before the sign.
///
/// Samples whose anchor or end point falls outside the day are dropped, so a
/// shift longer than the day yields a curve with no values.
pub fn response_with_shift(
    mids: &[MidpointSeries],
    signs: &[SignSeries],
    shift: i64,
    scale: ShiftScale,
    cfg: &EstimatorConfig,
) -> Result<ResponseCurve> {
    match scale {
        ShiftScale::Physical => estimate_shifted(mids, signs, Weighting::Physical, cfg, shift, CurveKind::Shifted),
        ShiftScale::Trade => {
            let lags = cfg.lag_grid()?;
            let pairs = pair_days(mids, signs)?;
            let partials: Vec<DayPartial> = pairs
                .par_iter()
                .map(|(m, s)| trade_day_partial(m, s, cfg, shift, &lags))
                .collect();
            let mut meta = base_meta(&pairs, cfg);
            meta.shift = shift;
            meta.flags.push("trade_clock".into());
            Ok(finalize(CurveKind::Shifted, lags, &partials, meta))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Hold the lag, vary the shift over the grid.
    FixedTauVaryShift { tau: u32 },
    /// Hold the shift, vary the lag over the grid.
    FixedShiftVaryTau { shift: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub grid: Vec<i64>,
    pub scale: ShiftScale,
    pub estimator: EstimatorConfig,
}

/// One single-lag curve per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftScan {
    pub mode: ScanMode,
    pub scale: ShiftScale,
    pub grid: Vec<i64>,
    pub curves: Vec<ResponseCurve>,
}

/// A scan row: `(grid value, value, count, stderr)`.
pub type ScanRow = (i64, Option<f64>, u64, Option<f64>);

impl ShiftScan {
    pub fn rows(&self) -> Vec<ScanRow> {
        self.grid
            .iter()
            .zip(&self.curves)
            .map(|(&g, c)| (g, c.values[0], c.counts[0], c.stderr[0]))
            .collect()
    }
}

pub fn run_shift_scan(mids: &[MidpointSeries], signs: &[SignSeries], scan: &ScanConfig) -> Result<ShiftScan> {
    if scan.grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    let curves = match scan.mode {
        ScanMode::FixedTauVaryShift { tau } => {
            let cfg = EstimatorConfig {
                tau_max: scan.estimator.tau_max.max(tau),
                lags: Some(vec![tau]),
                ..scan.estimator.clone()
            };
            scan.grid
                .par_iter()
                .map(|&shift| response_with_shift(mids, signs, shift, scan.scale, &cfg))
                .collect::<Result<Vec<_>>>()?
        }
        ScanMode::FixedShiftVaryTau { shift } => {
            if scan.grid.iter().any(|&g| g < 1) || scan.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("lag grid must be positive and strictly increasing".into()));
            }
            let lags: Vec<u32> = scan.grid.iter().map(|&g| g as u32).collect();
            let cfg = EstimatorConfig {
                tau_max: scan.estimator.tau_max.max(*lags.last().unwrap()),
                lags: Some(lags),
                ..scan.estimator.clone()
            };
            let full = response_with_shift(mids, signs, shift, scan.scale, &cfg)?;
            (0..full.len())
                .map(|k| ResponseCurve {
                    kind: full.kind,
                    lags: vec![full.lags[k]],
                    values: vec![full.values[k]],
                    counts: vec![full.counts[k]],
                    m2: vec![full.m2[k]],
                    stderr: vec![full.stderr[k]],
                    meta: full.meta.clone(),
                })
                .collect()
        }
    };
    Ok(ShiftScan { mode: scan.mode, scale: scan.scale, grid: scan.grid.clone(), curves })
}

/// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<i64>> {
    let bad = || Error::Config(format!("bad grid `{s}`"));
    if s.contains(':') {
        let parts: Vec<i64> = s.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step <= 0 || stop < start {
            return Err(bad());
        }
        Ok((start..=stop).step_by(step as usize).collect())
    } else {
        s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse().map_err(|_| bad())).collect()
    }
}
