use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{domain, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Heat kernel `(2πs)^{−1/2} exp(−(y−x)²/(2s))`.
pub fn gaussian_density(s: f64, x: f64, y: f64) -> Result<f64> {
    log_gaussian_density(s, x, y).map(f64::exp)
}

pub fn log_gaussian_density(s: f64, x: f64, y: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain(
            "heat kernel time",
            format!("s = {s} must be positive"),
        ));
    }
    let d = y - x;
    Ok(-0.5 * (LN_2PI + s.ln()) - d * d / (2.0 * s))
}

/// Density at `r` of the modulus of a `d`-dimensional Brownian motion
/// started at the origin and observed at time `l`, i.e. of `√l · χ_d`.
pub fn bessel_density_from_origin(d: u32, l: f64, r: f64) -> Result<f64> {
    if d == 0 {
        return Err(domain("dimension", "d must be at least 1"));
    }
    if !(l > 0.0) || !(r >= 0.0) {
        return Err(domain(
            "Bessel density",
            format!("need L > 0 and r >= 0, got L = {l}, r = {r}"),
        ));
    }
    let k = f64::from(d);
    let u = r / l.sqrt();
    if u == 0.0 {
        // only d = 1 has positive mass at the origin
        return Ok(if d == 1 {
            (2.0 / std::f64::consts::PI).sqrt() / l.sqrt()
        } else {
            0.0
        });
    }
    let log_chi = (k - 1.0) * u.ln()
        - 0.5 * u * u
        - (0.5 * k - 1.0) * std::f64::consts::LN_2
        - ln_gamma(0.5 * k);
    Ok((log_chi - 0.5 * l.ln()).exp())
}

/// `P(√l · χ_d ≤ r)`.
pub fn chi_cdf(d: u32, l: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    gamma_lr(0.5 * f64::from(d), r * r / (2.0 * l))
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_kernel() {
        let s = 0.7;
        let peak = gaussian_density(s, 1.3, 1.3).unwrap();
        assert!((peak - 1.0 / (2.0 * std::f64::consts::PI * s).sqrt()).abs() < 1e-15);
        assert_eq!(
            gaussian_density(2.0, 0.1, 1.4).unwrap(),
            gaussian_density(2.0, 1.4, 0.1).unwrap()
        );
        // φ(2) from a 30-digit evaluation
        assert!(
            (gaussian_density(1.0, 0.0, 2.0).unwrap() - 0.053_990_966_513_188_06).abs() < 1e-15
        );
        assert!(gaussian_density(0.0, 0.0, 0.0).is_err());
        assert!(gaussian_density(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn known_chi_densities() {
        for &r in &[0.1f64, 0.9, 1.7, 3.2] {
            let rayleigh = r * (-r * r / 2.0).exp();
            assert!((bessel_density_from_origin(2, 1.0, r).unwrap() - rayleigh).abs() < 1e-14);
            let maxwell = (2.0 / std::f64::consts::PI).sqrt() * r * r * (-r * r / 2.0).exp();
            assert!((bessel_density_from_origin(3, 1.0, r).unwrap() - maxwell).abs() < 1e-14);
        }
        assert!(bessel_density_from_origin(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // Composite Simpson on [0, 40] for (d, L) = (5, 2.7).
        let (d, l) = (5, 2.7);
        let n = 20_000;
        let h = 40.0 / n as f64;
        let f = |r: f64| bessel_density_from_origin(d, l, r).unwrap();
        let mut acc = f(0.0) + f(40.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cdf_matches_density() {
        // derivative of the cdf by central differences
        let (d, l) = (3, 1.5);
        for &r in &[0.4, 1.1, 2.5] {
            let h = 1e-5;
            let deriv = (chi_cdf(d, l, r + h) - chi_cdf(d, l, r - h)) / (2.0 * h);
            assert!((deriv - bessel_density_from_origin(d, l, r).unwrap()).abs() < 1e-7);
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((chi_cdf(1, 1.0, 1.0) - (2.0 * normal_cdf(1.0) - 1.0)).abs() < 1e-13);
    }
}
