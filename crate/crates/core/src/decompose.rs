//! Short/long split of the response at a pivot lag, and a shuffled-sign
//! baseline.
//!
//! For `tau > tau_prime` the lag-`tau` return splits into the part up to the
//! pivot and the part after it:
//!
//! ```text
//! ln(m(t-1+tau) / m(t-1)) = ln(m(t-1+tau') / m(t-1)) + ln(m(t-1+tau) / m(t-1+tau'))
//! ```
//!
//! The short curve averages the first term, the long curve the second. Up to
//! the pivot both equal the original response. All three curves use one fixed
//! sample set, the seconds whose return is defined out to the largest lag, so
//! the split is exact in logs and the short curve is the same number at every
//! lag past the pivot.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::midpoint::{MidpointSeries, ReturnKind};
use crate::response::{base_meta, estimate_shifted, finalize, pair_days, CurveKind, DayPartial, EstimatorConfig, ResponseCurve, Weighting};
use crate::signs::{Sign, SignSeries};

pub const DEFAULT_TAU_PRIME: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    pub tau_prime: u32,
    pub weighting: Weighting,
    pub estimator: EstimatorConfig,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            tau_prime: DEFAULT_TAU_PRIME,
            weighting: Weighting::Physical,
            estimator: EstimatorConfig { return_kind: ReturnKind::Logarithmic, ..EstimatorConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub tau_prime: u32,
    pub short: ResponseCurve,
    pub long: ResponseCurve,
    /// Response over the same sample set as the two parts.
    pub original: ResponseCurve,
    /// `short + long` past the pivot, the original response up to it.
    pub sum: Vec<Option<f64>>,
    /// Largest `|short + long - original|` past the pivot. Rounding level for
    /// log returns; the linearisation error for relative returns.
    pub residual: f64,
}

fn split_day_partial(
    mid: &MidpointSeries,
    signs: &SignSeries,
    cfg: &DecomposeConfig,
    lags: &[u32],
) -> [DayPartial; 3] {
    let kind = cfg.estimator.return_kind;
    let max_lag = *lags.last().unwrap() as i64;
    let pivot = cfg.tau_prime as i64;
    let mut parts = [DayPartial::new(lags.len()), DayPartial::new(lags.len()), DayPartial::new(lags.len())];
    for t in 0..signs.len() {
        let (num_w, den_w) = cfg.weighting.second_weights(signs, t, cfg.estimator.exclude_zero);
        if den_w == 0.0 {
            continue;
        }
        let anchor = t as i64 - 1;
        let (Some(m0), Some(_)) = (mid.mid_at(anchor), mid.mid_at(anchor + max_lag)) else { continue };
        let m_pivot = mid.mid_at(anchor + pivot).expect("pivot within the largest lag");
        let short_past = kind.between(m0, m_pivot) * num_w;
        for (li, &tau) in lags.iter().enumerate() {
            let m1 = mid.mid_at(anchor + tau as i64).expect("lag within the largest lag");
            let full = kind.between(m0, m1) * num_w;
            parts[0].push(li, full, den_w);
            if tau as i64 > pivot {
                parts[1].push(li, short_past, den_w);
                parts[2].push(li, kind.between(m_pivot, m1) * num_w, den_w);
            } else {
                parts[1].push(li, full, den_w);
                parts[2].push(li, full, den_w);
            }
        }
    }
    parts
}

/// Splits the response of returns `mids` to signs `signs` at `tau_prime`.
pub fn decompose_response(mids: &[MidpointSeries], signs: &[SignSeries], cfg: &DecomposeConfig) -> Result<Decomposition> {
    let lags = cfg.estimator.lag_grid()?;
    let max_lag = *lags.last().unwrap();
    if cfg.tau_prime < 1 || cfg.tau_prime > max_lag {
        return Err(Error::Config(format!("tau_prime must lie in 1..={max_lag}, got {}", cfg.tau_prime)));
    }
    let pairs = pair_days(mids, signs)?;
    let per_day: Vec<[DayPartial; 3]> = pairs.par_iter().map(|(m, s)| split_day_partial(m, s, cfg, &lags)).collect();
    let mut meta = base_meta(&pairs, &cfg.estimator);
    meta.weighting = Some(cfg.weighting);
    meta.shift = 1;
    meta.flags.push(format!("tau_prime={}", cfg.tau_prime));
    meta.flags.push("fixed_sample_set".into());
    let [mut orig, mut short, mut long] = [Vec::new(), Vec::new(), Vec::new()];
    for [o, s, l] in per_day {
        orig.push(o);
        short.push(s);
        long.push(l);
    }
    let original = finalize(cfg.weighting.curve_kind(), lags.clone(), &orig, meta.clone());
    let short = finalize(CurveKind::Short, lags.clone(), &short, meta.clone());
    let long = finalize(CurveKind::Long, lags.clone(), &long, meta);
    let mut residual = 0.0f64;
    let sum = lags
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            if tau <= cfg.tau_prime {
                return original.values[k];
            }
            let s = Some(short.values[k]? + long.values[k]?);
            if let (Some(s), Some(o)) = (s, original.values[k]) {
                residual = residual.max((s - o).abs());
            }
            s
        })
        .collect();
    Ok(Decomposition { tau_prime: cfg.tau_prime, short, long, original, sum, residual })
}

/// Day-level stream for the shuffle generator, independent of which other
/// days are present.
fn day_stream(s: &SignSeries) -> u64 {
    use chrono::Datelike;
    s.day.num_days_from_ce() as u64
}

fn shuffle_directions(signs: &SignSeries, seed: u64) -> SignSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(day_stream(signs));
    permute_directions(signs, |dirs| dirs.shuffle(&mut rng))
}

/// Rewrites the direction of every second with trades by permuting the
/// sequence of nonzero `eps_p` values. Which seconds trade, `N` and `|E|`
/// stay where they were.
fn permute_directions(signs: &SignSeries, permute: impl FnOnce(&mut [Sign])) -> SignSeries {
    let active: Vec<usize> = (0..signs.len()).filter(|&t| signs.eps(t) != 0).collect();
    let mut dirs: Vec<Sign> = active.iter().map(|&t| signs.eps(t)).collect();
    permute(&mut dirs);
    let mut out = signs.clone();
    for (&t, &d) in active.iter().zip(&dirs) {
        out.set_direction(t, d);
    }
    out
}

/// Response with each day's second directions shuffled. Its expectation is
/// zero; it shows how large a response sign order alone can fake.
pub fn shuffled_sign_baseline(
    mids: &[MidpointSeries],
    signs: &[SignSeries],
    weighting: Weighting,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<ResponseCurve> {
    let shuffled: Vec<SignSeries> = signs.par_iter().map(|s| shuffle_directions(s, seed)).collect();
    let mut curve = estimate_shifted(mids, &shuffled, weighting, cfg, 1, CurveKind::Baseline)?;
    curve.meta.flags.push(format!("shuffle_seed={seed}"));
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::response;
    use crate::response::tests::random_market;

    fn log_cfg(tau_max: u32, tau_prime: u32) -> DecomposeConfig {
        DecomposeConfig {
            tau_prime,
            weighting: Weighting::Physical,
            estimator: EstimatorConfig {
                tau_max,
                return_kind: ReturnKind::Logarithmic,
                ..EstimatorConfig::default()
            },
        }
    }

    #[test]
    fn log_split_is_exact_past_the_pivot() {
        let (m, s) = random_market(11, 3, 400, 3);
        let d = decompose_response(&m, &s, &log_cfg(60, 20)).unwrap();
        for (k, &tau) in d.original.lags.iter().enumerate() {
            if tau > 20 {
                let o = d.original.values[k].unwrap();
                assert!((d.sum[k].unwrap() - o).abs() <= 1e-12 * o.abs().max(1e-300) + 1e-15);
            }
        }
        assert!(d.residual < 1e-15);
    }

    #[test]
    fn short_is_constant_past_the_pivot() {
        let (m, s) = random_market(12, 2, 300, 2);
        let d = decompose_response(&m, &s, &log_cfg(50, 10)).unwrap();
        let past: Vec<f64> = d.short.values[10..].iter().map(|v| v.unwrap()).collect();
        assert!(past.iter().all(|&v| v == past[0]));
        assert_eq!(d.short.values[9], d.original.values[9]);
    }

    #[test]
    fn parts_equal_original_up_to_pivot() {
        let (m, s) = random_market(13, 2, 300, 2);
        let d = decompose_response(&m, &s, &log_cfg(30, 30)).unwrap();
        assert_eq!(d.long.values, d.original.values);
        assert_eq!(d.short.values, d.original.values);
        assert_eq!(d.sum, d.original.values);
    }

    #[test]
    fn pivot_must_lie_in_lag_range() {
        let (m, s) = random_market(14, 1, 100, 1);
        assert!(decompose_response(&m, &s, &log_cfg(30, 0)).is_err());
        assert!(decompose_response(&m, &s, &log_cfg(30, 31)).is_err());
    }

    #[test]
    fn relative_returns_report_linearisation_residual() {
        let (m, s) = random_market(15, 2, 300, 2);
        let mut cfg = log_cfg(40, 10);
        cfg.estimator.return_kind = ReturnKind::Relative;
        let d = decompose_response(&m, &s, &cfg).unwrap();
        assert!(d.residual > 0.0);
        // per sample the error is r_short * r_long, bounded by max |r|^2
        assert!(d.residual < 1e-2);
    }

    #[test]
    fn identity_permutation_reproduces_response() {
        let (m, s) = random_market(16, 2, 300, 4);
        let same: Vec<SignSeries> = s.iter().map(|x| permute_directions(x, |_| {})).collect();
        assert_eq!(same, s);
        let cfg = EstimatorConfig::with_tau_max(20);
        assert_eq!(
            estimate_shifted(&m, &same, Weighting::Trade, &cfg, 1, CurveKind::Baseline).unwrap().values,
            response(&m, &s, Weighting::Trade, &cfg).unwrap().values
        );
    }

    #[test]
    fn shuffle_preserves_activity_pattern() {
        let (_, s) = random_market(17, 3, 500, 5);
        for day in &s {
            let sh = shuffle_directions(day, 9);
            for t in 0..day.len() {
                assert_eq!(sh.n(t), day.n(t));
                assert_eq!(sh.e(t).abs(), day.e(t).abs());
                assert_eq!(sh.eps(t) == 0, day.eps(t) == 0);
            }
            let count = |x: &SignSeries, d| (0..x.len()).filter(|&t| x.eps(t) == d).count();
            assert_eq!(count(&sh, 1), count(day, 1));
            assert_eq!(count(&sh, -1), count(day, -1));
        }
    }

    #[test]
    fn baseline_is_deterministic_per_seed() {
        let (m, s) = random_market(18, 2, 400, 3);
        let cfg = EstimatorConfig::with_tau_max(10);
        let a = shuffled_sign_baseline(&m, &s, Weighting::Physical, &cfg, 1).unwrap();
        let b = shuffled_sign_baseline(&m, &s, Weighting::Physical, &cfg, 1).unwrap();
        let c = shuffled_sign_baseline(&m, &s, Weighting::Physical, &cfg, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
    }
}
