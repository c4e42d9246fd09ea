use crate::stats::NeumaierSum;

use super::{CurveKind, CurveMeta, ResponseCurve};

/// Running sums for one lag. Each sample is a pair `(a, b)` with the
/// estimator `R = sum a / sum b`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LagSums {
    num: NeumaierSum,
    den: NeumaierSum,
    aa: NeumaierSum,
    ab: NeumaierSum,
    bb: NeumaierSum,
    count: u64,
}

impl LagSums {
    #[inline]
    fn push(&mut self, a: f64, b: f64) {
        self.num.add(a);
        self.den.add(b);
        self.aa.add(a * a);
        self.ab.add(a * b);
        self.bb.add(b * b);
        self.count += 1;
    }

    fn merge(&mut self, other: &LagSums) {
        self.num.merge(&other.num);
        self.den.merge(&other.den);
        self.aa.merge(&other.aa);
        self.ab.merge(&other.ab);
        self.bb.merge(&other.bb);
        self.count += other.count;
    }
}

/// Per-day partial sums for every lag of a grid.
#[derive(Debug, Clone)]
pub(crate) struct DayPartial {
    lags: Vec<LagSums>,
}

impl DayPartial {
    pub(crate) fn new(n_lags: usize) -> Self {
        Self { lags: vec![LagSums::default(); n_lags] }
    }

    #[inline]
    pub(crate) fn push(&mut self, lag_index: usize, a: f64, b: f64) {
        self.lags[lag_index].push(a, b);
    }
}

/// Merges day partials in the given order and turns them into a curve.
///
/// The standard error is the ratio-estimator batch-means error over days when
/// at least two days contribute to a lag; returns of neighbouring seconds
/// overlap, so treating seconds as independent would understate it. With a
/// single day it falls back to the per-sample residual `sqrt(m2) / sum b`.
pub(crate) fn finalize(kind: CurveKind, lags: Vec<u32>, partials: &[DayPartial], meta: CurveMeta) -> ResponseCurve {
    let n = lags.len();
    let mut values = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut m2s = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    for li in 0..n {
        let mut total = LagSums::default();
        for p in partials {
            total.merge(&p.lags[li]);
        }
        let den = total.den.value();
        counts.push(total.count);
        if total.count == 0 || den == 0.0 {
            values.push(None);
            m2s.push(0.0);
            stderr.push(None);
            continue;
        }
        let r = total.num.value() / den;
        let m2 = (total.aa.value() - 2.0 * r * total.ab.value() + r * r * total.bb.value()).max(0.0);
        values.push(Some(r));
        m2s.push(m2);

        let mut batch = NeumaierSum::new();
        let mut days = 0usize;
        for p in partials {
            let s = &p.lags[li];
            if s.count == 0 {
                continue;
            }
            let dev = s.num.value() - r * s.den.value();
            batch.add(dev * dev);
            days += 1;
        }
        let se = if days >= 2 {
            let d = days as f64;
            (batch.value() * d / (d - 1.0)).sqrt() / den
        } else {
            m2.sqrt() / den
        };
        stderr.push(Some(se));
    }
    ResponseCurve { kind, lags, values, counts, m2: m2s, stderr, meta }
}
