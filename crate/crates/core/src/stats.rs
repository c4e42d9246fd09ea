//! Compensated summation used by every estimator accumulator.

use std::ops::AddAssign;

/// Kahan-Babuska (Neumaier) running sum.
///
/// Merging two sums with [`NeumaierSum::merge`] keeps the compensation terms,
/// so per-day partials can be combined in a fixed order without losing the
/// extra precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, c)
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, c) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += c;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}
