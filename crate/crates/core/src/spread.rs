//! Average spreads, spread bands, and band-averaged response curves.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::midpoint::MidpointSeries;
use crate::response::ResponseCurve;
use crate::stats::NeumaierSum;

/// Default band edges in dollars.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.05, 0.10, 0.40];

/// Tolerance for comparing a spread against a band edge.
pub const EDGE_EPSILON: f64 = 1e-9;

/// Mean spread over every defined second of every day.
pub fn average_spread(days: &[MidpointSeries]) -> Result<f64> {
    let (sum, n) = days
        .par_iter()
        .map(|d| {
            let s = d.defined_spreads();
            (s.iter().copied().collect::<NeumaierSum>(), s.len())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((NeumaierSum::new(), 0usize), |(mut acc, n), (s, k)| {
            acc.merge(&s);
            (acc, n + k)
        });
    if n == 0 {
        return Err(Error::NoDefinedSeconds);
    }
    Ok(sum.value() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// Zero-based band index.
    Group(usize),
    OutOfRange,
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Band::Group(k) => write!(f, "{}", k + 1),
            Band::OutOfRange => f.write_str("out_of_range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadGrouping {
    pub thresholds: Vec<f64>,
    pub assignments: BTreeMap<String, Band>,
    pub spreads: BTreeMap<String, f64>,
}

impl SpreadGrouping {
    pub fn members(&self, band: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, b)| **b == Band::Group(band))
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn bands(&self) -> usize {
        self.thresholds.len()
    }
}

/// Band of one spread. Bands are `[0, e1)`, `[e1, e2)`, ..., `[e_{n-1}, e_n]`;
/// the top edge itself belongs to the last band, anything above it is out of
/// range. Edges are compared with a tolerance of [`EDGE_EPSILON`].
pub fn band_of(spread: f64, thresholds: &[f64]) -> Band {
    let last = thresholds.len() - 1;
    for (k, &edge) in thresholds.iter().enumerate() {
        if k == last {
            return if spread <= edge + EDGE_EPSILON { Band::Group(k) } else { Band::OutOfRange };
        }
        if spread < edge - EDGE_EPSILON {
            return Band::Group(k);
        }
    }
    unreachable!()
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Config("no spread thresholds".into()));
    }
    if thresholds.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Config("spread thresholds must be positive".into()));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("spread thresholds must be strictly increasing".into()));
    }
    Ok(())
}

pub fn assign_groups(spreads: &BTreeMap<String, f64>, thresholds: &[f64]) -> Result<SpreadGrouping> {
    check_thresholds(thresholds)?;
    let assignments = spreads.iter().map(|(sym, &s)| (sym.clone(), band_of(s, thresholds))).collect();
    Ok(SpreadGrouping { thresholds: thresholds.to_vec(), assignments, spreads: spreads.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAverages {
    /// One entry per band; `None` when no member has a curve.
    pub curves: Vec<Option<ResponseCurve>>,
    pub warnings: Vec<String>,
}

/// Unweighted mean of member curves per band and lag. `counts` holds the
/// number of stocks with a value at each lag and `stderr` the standard error
/// of the mean across them.
pub fn group_average_response(
    curves_by_stock: &BTreeMap<String, ResponseCurve>,
    grouping: &SpreadGrouping,
) -> Result<GroupAverages> {
    let mut lags: Option<&[u32]> = None;
    for c in curves_by_stock.values() {
        match lags {
            None => lags = Some(&c.lags),
            Some(l) if l != c.lags.as_slice() => return Err(Error::LagGridMismatch),
            _ => {}
        }
    }
    let mut warnings = Vec::new();
    for sym in curves_by_stock.keys() {
        if !grouping.assignments.contains_key(sym) {
            warnings.push(format!("{sym}: curve given but stock has no spread assignment"));
        }
    }
    let mut out = Vec::with_capacity(grouping.bands());
    for band in 0..grouping.bands() {
        let members: Vec<(&str, &ResponseCurve)> = grouping
            .members(band)
            .into_iter()
            .filter_map(|s| curves_by_stock.get(s).map(|c| (s, c)))
            .collect();
        if members.is_empty() {
            warnings.push(format!("band {}: no stocks with a response curve", band + 1));
            out.push(None);
            continue;
        }
        let first = members[0].1;
        let n = first.lags.len();
        let mut values = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        let mut stderr = Vec::with_capacity(n);
        for k in 0..n {
            let vals: Vec<f64> = members.iter().filter_map(|(_, c)| c.values[k]).collect();
            counts.push(vals.len() as u64);
            if vals.is_empty() {
                values.push(None);
                stderr.push(None);
                continue;
            }
            let mean = vals.iter().copied().collect::<NeumaierSum>().value() / vals.len() as f64;
            values.push(Some(mean));
            stderr.push((vals.len() > 1).then(|| {
                let ss: NeumaierSum = vals.iter().map(|v| (v - mean).powi(2)).collect();
                (ss.value() / (vals.len() - 1) as f64 / vals.len() as f64).sqrt()
            }));
        }
        let mut meta = first.meta.clone();
        meta.i.clear();
        meta.j.clear();
        meta.flags.push(format!("band={}", band + 1));
        meta.flags.push(format!("members={}", members.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(";")));
        out.push(Some(ResponseCurve {
            kind: first.kind,
            lags: first.lags.clone(),
            values,
            counts,
            m2: vec![0.0; n],
            stderr,
            meta,
        }));
    }
    Ok(GroupAverages { curves: out, warnings })
}
