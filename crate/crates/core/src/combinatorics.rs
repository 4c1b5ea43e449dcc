//! Log-space binomials and compensated summation.

use statrs::function::factorial;

/// `ln C(n, k)`; `-∞` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    factorial::ln_binomial(n, k)
}

/// `C(n, k)` as a float. Exact for every value below 2⁵³.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial::binomial(n, k)
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `ln Σ exp(xᵢ)`, stable for large magnitudes. Empty input gives `-∞`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: CompensatedSum = terms.iter().map(|t| (t - max).exp()).collect();
    max + sum.value().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials_are_exact() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(30, 15), 155117520.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert!((ln_binomial(6, 3) - 20f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_binomial_large_arguments() {
        // ln C(1000, 500) ≈ 689.4672 (from lgamma).
        let v = ln_binomial(1000, 500);
        assert!(v.is_finite());
        assert!((v - 689.467_261_567_851).abs() < 1e-6, "{v}");
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert!((s.value() - 2e-16).abs() < 1e-30);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let t = [0.1f64, -2.0, 3.5];
        let direct = t.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&t) - direct).abs() < 1e-14);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
