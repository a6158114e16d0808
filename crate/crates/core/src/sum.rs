//! Compensated (Neumaier) summation.
//!
//! Accumulating 10^6 losses in plain `f64` loses several digits; the
//! compensation term keeps the running error at a few ulps of the total.

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator of reals.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        // 1 + 1e100 + 1 - 1e100 == 2 exactly with compensation, 0 without.
        assert_eq!(sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn million_tenths() {
        let s = sum(std::iter::repeat_n(0.1, 1_000_000));
        assert!((s - 100_000.0).abs() < 1e-9, "{s}");
    }
}
