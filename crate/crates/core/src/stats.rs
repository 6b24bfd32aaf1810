//! Accumulators and batch-means error bars.

use serde::{Deserialize, Serialize};

/// A point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }

    /// `|self - target| <= k * se` (with a tiny floor so exact zeros agree).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se + 1e-15
    }

    /// Agreement of two independent estimates within `k` combined se.
    pub fn agrees(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.se.hypot(other.se) + 1e-15
    }

    pub fn relative_se(&self) -> f64 {
        if self.value == 0.0 {
            f64::INFINITY
        } else {
            self.se / self.value.abs()
        }
    }
}

/// Running count, sum and sum of squares; merge is associative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accum {
    pub n: u64,
    pub sum: f64,
    pub sumsq: f64,
}

impl Accum {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    pub fn merge(&mut self, other: &Accum) {
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Naive iid standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sumsq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Batch-means estimate from per-batch `(sum, count)` pairs: the grand mean
/// and the standard deviation of the batch means over `sqrt(batches)`.
pub fn batch_means(batches: &[(f64, u64)]) -> Estimate {
    let total_n: u64 = batches.iter().map(|b| b.1).sum();
    if total_n == 0 {
        return Estimate::exact(0.0);
    }
    let value = batches.iter().map(|b| b.0).sum::<f64>() / total_n as f64;
    let means: Vec<f64> = batches
        .iter()
        .filter(|b| b.1 > 0)
        .map(|b| b.0 / b.1 as f64)
        .collect();
    let k = means.len();
    if k < 2 {
        return Estimate { value, se: 0.0 };
    }
    let mbar = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (k as f64 - 1.0);
    Estimate {
        value,
        se: (var / k as f64).sqrt(),
    }
}

/// Ratio estimate `Σa / Σb` over batches, with batch-means error.
pub fn batch_ratio(batches: &[(f64, f64)]) -> Estimate {
    let a: f64 = batches.iter().map(|b| b.0).sum();
    let b: f64 = batches.iter().map(|b| b.1).sum();
    if b == 0.0 {
        return Estimate::exact(0.0);
    }
    let value = a / b;
    let k = batches.len();
    if k < 2 {
        return Estimate { value, se: 0.0 };
    }
    let bbar = b / k as f64;
    // linearised ratio residuals
    let resid: Vec<f64> = batches.iter().map(|(x, y)| (x - value * y) / bbar).collect();
    let var = resid.iter().map(|r| r * r).sum::<f64>() / (k as f64 - 1.0);
    Estimate {
        value,
        se: (var / k as f64).sqrt(),
    }
}

/// Normal quantile for a two-sided band of coverage `level` (0.95, 0.99 ...).
pub fn z_two_sided(level: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}
