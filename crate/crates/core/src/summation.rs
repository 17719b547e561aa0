//! Compensated (Kahan-Babuska-Neumaier) accumulation.

use std::ops::AddAssign;

/// Running sum with a Neumaier correction term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.s + self.c
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

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let mut s = NeumaierSum::new();
        s += 1e100;
        s += 1.0;
        s += -1e100;
        assert_eq!(s.sum(), 1.0);
    }

    #[test]
    fn beats_naive_summation_on_harmonic_tail() {
        let naive: f64 = (1..=1_000_000).map(|k| 0.1 / k as f64).sum();
        let comp = compensated_sum((1..=1_000_000).map(|k| 0.1 / k as f64));
        // reference from the digamma identity H_n = ln n + gamma + 1/(2n) - 1/(12 n^2)
        let n = 1e6_f64;
        let h = n.ln() + 0.577_215_664_901_532_9 + 0.5 / n - 1.0 / (12.0 * n * n);
        let exact = 0.1 * h;
        assert!((comp - exact).abs() <= (naive - exact).abs());
        assert!((comp - exact).abs() < 1e-15);
    }
}
