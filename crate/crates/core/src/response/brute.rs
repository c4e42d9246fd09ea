//! Literal evaluation of the response definitions, used as a test oracle.
//!
//! Loops lag-major over `(day, t)` and, for the trade weighting, over every
//! individual trade sign, recomputing each return from the raw midpoints.
//! No state is shared between lags.

use crate::error::Result;
use crate::midpoint::{MidpointSeries, ReturnKind};
use crate::signs::SignSeries;
use crate::stats::NeumaierSum;

use super::{base_meta, pair_days, EstimatorConfig, ResponseCurve, Weighting};

fn midpoint(series: &MidpointSeries, k: i64) -> Option<f64> {
    if k < 0 || k < series.defined_from as i64 || k >= series.mid.len() as i64 {
        None
    } else {
        Some(series.mid[k as usize])
    }
}

fn ret(kind: ReturnKind, from: f64, to: f64) -> f64 {
    match kind {
        ReturnKind::Relative => (to - from) / from,
        ReturnKind::Logarithmic => (to / from).ln(),
    }
}

/// Brute-force response over the configured lag grid. Standard errors are
/// not computed.
pub fn brute_force_response(
    mids: &[MidpointSeries],
    signs: &[SignSeries],
    weighting: Weighting,
    cfg: &EstimatorConfig,
) -> Result<ResponseCurve> {
    let lags = cfg.lag_grid()?;
    let pairs = match pair_days(mids, signs) {
        Ok(p) => p,
        Err(_) if signs.iter().all(|s| s.total_trades() == 0) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut values = Vec::with_capacity(lags.len());
    let mut counts = Vec::with_capacity(lags.len());
    for &tau in &lags {
        let mut num = NeumaierSum::new();
        let mut den = NeumaierSum::new();
        let mut count = 0u64;
        for (mid, sg) in &pairs {
            for t in 0..sg.len() {
                let (Some(m0), Some(m1)) = (midpoint(mid, t as i64 - 1), midpoint(mid, t as i64 - 1 + tau as i64)) else {
                    continue;
                };
                let r = ret(cfg.return_kind, m0, m1);
                let trades = sg.trades_at(t);
                let n = trades.len();
                let e: i64 = trades.iter().map(|&s| s as i64).sum();
                let eps = e.signum() as f64;
                let eta = if e != 0 { 1.0 } else { 0.0 };
                match weighting {
                    Weighting::Trade => {
                        if n == 0 {
                            continue;
                        }
                        for &s in trades {
                            num.add(r * s as f64);
                        }
                        den.add(n as f64);
                    }
                    Weighting::Physical => {
                        let d = if cfg.exclude_zero { eta } else { 1.0 };
                        if d == 0.0 {
                            continue;
                        }
                        num.add(r * eps * eta);
                        den.add(d);
                    }
                    Weighting::Activity => {
                        if n == 0 {
                            continue;
                        }
                        num.add(r * eps * n as f64);
                        den.add(n as f64);
                    }
                }
                count += 1;
            }
        }
        let den = den.value();
        values.push((count > 0 && den > 0.0).then(|| num.value() / den));
        counts.push(count);
    }
    let n = lags.len();
    let mut meta = base_meta(&pairs, cfg);
    meta.weighting = Some(weighting);
    meta.shift = 1;
    meta.flags.push("brute_force".into());
    Ok(ResponseCurve {
        kind: weighting.curve_kind(),
        lags,
        values,
        counts,
        m2: vec![0.0; n],
        stderr: vec![None; n],
        meta,
    })
}
