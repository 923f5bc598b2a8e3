use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    /// Provenance of the run that produced the estimate (seed, config hash).
    #[serde(default)]
    pub config_digest: String,
}

impl TailEstimate {
    pub fn new(value: f64, stderr: f64, n: usize) -> Self {
        Self {
            value,
            stderr,
            n,
            config_digest: String::new(),
        }
    }

    /// Proportion `hits / n` with stderr `√(p(1−p)/n)`.
    pub fn binomial(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let p = hits as f64 / n as f64;
        Self::new(p, (p * (1.0 - p) / n as f64).sqrt(), n)
    }

    /// Sample mean with the usual `s/√n` error.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let (mean, var) = mean_var(samples);
        Self::new(mean, (var / n as f64).sqrt(), n)
    }

    /// Sample mean with a batch-means error estimate.
    pub fn batch_means(samples: &[f64], batches: usize) -> Self {
        let n = samples.len();
        let batches = batches.clamp(2, n.max(2));
        let size = n / batches;
        if size == 0 {
            return Self::from_samples(samples);
        }
        let means: Vec<f64> = samples
            .chunks_exact(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / size as f64)
            .collect();
        let (_, var) = mean_var(&means);
        let mean = samples.iter().sum::<f64>() / n as f64;
        Self::new(mean, (var / means.len() as f64).sqrt(), n)
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    /// Multiplies value and error by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            ..self.clone()
        }
    }

    /// Root-sum-square of two independent standard errors.
    pub fn combined_stderr(&self, other: &Self) -> f64 {
        self.stderr.hypot(other.stderr)
    }

    /// `|self − other| ≤ k · combined stderr`.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.combined_stderr(other)
    }

    /// `|self − target| ≤ k · stderr`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    /// Signed deviation from `target` in units of stderr.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.stderr
    }
}

/// Mean and unbiased variance, two-pass.
pub(crate) fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RngStream;
    use rand::Rng;

    #[test]
    fn binomial() {
        let e = TailEstimate::binomial(25, 100);
        assert_eq!(e.value, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(TailEstimate::binomial(0, 10).stderr, 0.0);
        assert!(TailEstimate::binomial(0, 0).value.is_nan());
    }

    #[test]
    fn sample_mean() {
        let e = TailEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(e.covers(2.6, 1.0));
        assert!(!e.covers(5.0, 3.0));
    }

    #[test]
    fn batch_means_agree_with_binomial_stderr() {
        let mut rng = RngStream::new(8, 8).rng();
        let x: Vec<f64> = (0..100_000)
            .map(|_| f64::from(u8::from(rng.random::<f64>() < 0.3)))
            .collect();
        let hits = x.iter().filter(|&&v| v > 0.5).count();
        let b = TailEstimate::binomial(hits, x.len());
        let bm = TailEstimate::batch_means(&x, 50);
        assert_eq!(b.value, bm.value);
        assert!((bm.stderr / b.stderr - 1.0).abs() < 0.2);
    }

    #[test]
    fn compensated_sum() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
