use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(domain("samples", "KS test needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(domain("samples", "NaN in KS sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_pvalue(d, xs.len()),
        n: xs.len(),
    })
}

/// Asymptotic `P(D_n > d)` with the Stephens small-sample correction.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{normal_cdf, standard_normal, RngStream};

    #[test]
    fn known_pvalues() {
        // λ = 1.3581 is the 5% point of the Kolmogorov distribution
        let n = 1_000_000;
        let d = 1.358_1 / ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
        assert!((kolmogorov_pvalue(d, n) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_pvalue(0.0, 10), 1.0);
        assert!(kolmogorov_pvalue(0.5, 1000) < 1e-100);
    }

    #[test]
    fn accepts_true_law_rejects_shifted() {
        let mut rng = RngStream::new(4, 4).rng();
        let xs: Vec<f64> = (0..20_000).map(|_| standard_normal(&mut rng)).collect();
        assert!(ks_test(&xs, normal_cdf).unwrap().passes(0.01));
        assert!(!ks_test(&xs, |x| normal_cdf(x - 0.1)).unwrap().passes(0.01));
    }
}
