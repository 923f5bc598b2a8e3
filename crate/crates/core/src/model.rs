//! Closed-form scalar quantities of the model: centering, window, the
//! coordinate helpers used by the barrier functions and the tail normalizer.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Largest argument for which `f64::exp` stays finite.
const EXP_MAX: f64 = 709.782_712_893_384;
/// Below this the exponential underflows to (sub)normal zero.
const EXP_MIN: f64 = -745.133_219_101_941_1;

/// Dimension and the constants derived from it. The branching rate is
/// fixed at one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dim: u32,
    alpha: f64,
    c_d: f64,
}

impl ModelParams {
    pub fn new(dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dimension", "d must be at least 1"));
        }
        let d = f64::from(dim);
        Ok(Self {
            dim,
            alpha: (d - 1.0) / 2.0,
            c_d: (d - 4.0) / (2.0 * SQRT2),
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Drift coefficient of the radial (Bessel) process, `(d-1)/2`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Coefficient of the logarithmic correction, `(d-4)/(2√2)`.
    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    pub fn branching_rate(&self) -> f64 {
        1.0
    }

    /// `m_t = √2 t + c_d log t`. Times in `(0, 1]` are accepted but flagged,
    /// since the log term changes sign there.
    pub fn centering(&self, t: f64) -> Result<Centering> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(
                "centering time",
                format!("t = {t} must be positive"),
            ));
        }
        Ok(Centering {
            value: self.m(t),
            short_time: t <= 1.0,
        })
    }

    /// Unchecked `m_t`; callers guarantee `t > 0`.
    pub fn m(&self, t: f64) -> f64 {
        SQRT2 * t + self.c_d * t.ln()
    }

    /// Slope `m_t / t` of the linear barriers.
    pub fn speed(&self, t: f64) -> f64 {
        SQRT2 + self.c_d * t.ln() / t
    }

    /// `m_t / t − √2 = c_d log(t) / t`.
    pub fn offset(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain("offset time", format!("t = {t} must be positive")));
        }
        Ok(self.c_d * t.ln() / t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centering {
    pub value: f64,
    /// Set when `t <= 1`, where `log t <= 0`.
    pub short_time: bool,
}

/// `√2 L − a`.
pub fn coord_x(l: f64, a: f64) -> f64 {
    SQRT2 * l - a
}

/// `(m_t/t)(t − ℓ) + y − b`.
pub fn coord_y(params: &ModelParams, t: f64, ell: f64, y: f64, b: f64) -> f64 {
    params.speed(t) * (t - ell) + y - b
}

/// Powers `L^{1/6}` and `L^{2/3}` through `cbrt` so that perfect powers
/// (64, 729, ...) come out exact.
pub(crate) fn pow_sixth(l: f64) -> f64 {
    l.cbrt().sqrt()
}

pub(crate) fn pow_two_thirds(l: f64) -> f64 {
    let c = l.cbrt();
    c * c
}

/// The radial window `[√2L − L^{outer}, √2L − L^{inner}]`, closed on both
/// ends. Default exponents are 1/6 (inner) and 2/3 (outer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub l: f64,
    pub lo: f64,
    pub hi: f64,
}

impl WindowSpec {
    pub fn new(l: f64) -> Result<Self> {
        check_window_time(l)?;
        Ok(Self {
            l,
            lo: coord_x(l, pow_two_thirds(l)),
            hi: coord_x(l, pow_sixth(l)),
        })
    }

    /// Window with custom exponents; any `inner < 1/4` and `outer > 1/2`
    /// is admissible for the asymptotics, but nothing here enforces that.
    pub fn with_exponents(l: f64, inner: f64, outer: f64) -> Result<Self> {
        check_window_time(l)?;
        if !(inner < outer) {
            return Err(domain(
                "window exponents",
                format!("inner {inner} must be below outer {outer}"),
            ));
        }
        Ok(Self {
            l,
            lo: coord_x(l, l.powf(outer)),
            hi: coord_x(l, l.powf(inner)),
        })
    }

    pub fn contains(&self, r: f64) -> bool {
        self.lo <= r && r <= self.hi
    }

    /// Distance range `[L^{inner}, L^{outer}]` below `√2 L` covered by the window.
    pub fn z_range(&self) -> (f64, f64) {
        (SQRT2 * self.l - self.hi, SQRT2 * self.l - self.lo)
    }
}

fn check_window_time(l: f64) -> Result<()> {
    if !(l >= 1.0) || !l.is_finite() {
        return Err(domain("window time", format!("L = {l} must be at least 1")));
    }
    Ok(())
}

/// Membership of `r` in the default window at time `L`. For `L < 1` the
/// window is empty.
pub fn in_window(r: f64, l: f64) -> bool {
    coord_x(l, pow_two_thirds(l)) <= r && r <= coord_x(l, pow_sixth(l))
}

/// A quantity that lives on an exponential scale. The logarithm is the
/// source of truth; the linear value saturates at `0` or `+inf` instead of
/// producing NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpScaled {
    pub log: f64,
}

impl ExpScaled {
    pub fn from_log(log: f64) -> Self {
        Self { log }
    }

    pub fn value(&self) -> f64 {
        if self.log.is_nan() {
            0.0
        } else {
            self.log.exp()
        }
    }

    /// True when the linear value was clamped to `0` or `+inf`.
    pub fn saturated(&self) -> bool {
        self.log > EXP_MAX || self.log < EXP_MIN || self.log.is_nan()
    }
}

/// `(√2L − z)^{−α_d} · z · e^{−(z+y)√2}` together with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailNormalizer {
    pub l: f64,
    pub z: f64,
    pub y: f64,
    pub scaled: ExpScaled,
}

impl TailNormalizer {
    pub fn value(&self) -> f64 {
        self.scaled.value()
    }

    pub fn log_value(&self) -> f64 {
        self.scaled.log
    }
}

pub fn tail_normalizer(l: f64, z: f64, y: f64, params: &ModelParams) -> Result<TailNormalizer> {
    let base = SQRT2 * l - z;
    if !(z > 0.0) || !(base > 0.0) {
        return Err(domain(
            "tail normalizer",
            format!("need 0 < z < √2L, got z = {z}, √2L = {}", SQRT2 * l),
        ));
    }
    let log = -params.alpha() * base.ln() + z.ln() - (z + y) * SQRT2;
    Ok(TailNormalizer {
        l,
        z,
        y,
        scaled: ExpScaled::from_log(log),
    })
}

/// Power factor used in `Z_L`: the particle's own modulus, or `√2 L` for
/// every particle. The two conventions differ by `(R/√2L)^{α_d}` per term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ZVariant {
    #[default]
    RadialPower,
    Sqrt2LPower,
}

/// One summand of `Z_L` for a particle at modulus `r`, in log space.
pub fn z_term_log(r: f64, l: f64, params: &ModelParams, variant: ZVariant) -> f64 {
    let gap = SQRT2 * l - r;
    let base = match variant {
        ZVariant::RadialPower => r,
        ZVariant::Sqrt2LPower => SQRT2 * l,
    };
    -params.alpha() * base.ln() + gap.ln() - gap * SQRT2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn p(d: u32) -> ModelParams {
        ModelParams::new(d).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(p(1).alpha(), 0.0);
        assert_eq!(p(3).alpha(), 1.0);
        assert_eq!(p(4).c_d(), 0.0);
        assert_eq!(p(1).c_d(), -3.0 / (2.0 * SQRT2));
        assert!(ModelParams::new(0).is_err());
        assert_eq!(p(7).branching_rate(), 1.0);
    }

    #[test]
    fn centering_examples() {
        let c = p(4).centering(100.0).unwrap();
        assert!((c.value - 141.421_356_237_309_5).abs() < 1e-10);
        assert!(!c.short_time);

        let c1 = p(1).centering(E).unwrap().value;
        assert!((c1 - (SQRT2 * E - 3.0 / (2.0 * SQRT2))).abs() < 1e-14);

        // d = 2, t = e: √2 e − 1/√2, evaluated at 30 digits separately.
        let c2 = p(2).centering(E).unwrap().value;
        assert!((c2 - 3.137_124_246_972_569).abs() < 1e-13);

        assert!(p(2).centering(0.0).is_err());
        assert!(p(2).centering(-1.0).is_err());
        assert!(p(2).centering(0.5).unwrap().short_time);
    }

    #[test]
    fn offset_examples() {
        assert_eq!(p(4).offset(37.0).unwrap(), 0.0);
        assert_eq!(p(6).offset(1.0).unwrap(), 0.0);
        let t = E * E;
        let o = p(2).offset(t).unwrap();
        let expected = -2.0 / (E * E * SQRT2);
        assert!((o - expected).abs() < 1e-15);
        let via_centering = p(2).centering(t).unwrap().value / t - SQRT2;
        assert!((o - via_centering).abs() < 1e-14);
        assert!(p(2).offset(0.0).is_err());
    }

    #[test]
    fn coordinates() {
        assert_eq!(coord_x(9.0, 0.0), SQRT2 * 9.0);
        assert_eq!(coord_x(9.0, SQRT2 * 9.0), 0.0);
        let y = coord_y(&p(4), 100.0, 4.0, 0.0, 0.0);
        assert!((y - SQRT2 * 96.0).abs() < 1e-12);
    }

    #[test]
    fn window_examples() {
        assert!(in_window(SQRT2 * 64.0 - 16.0, 64.0));
        assert!(!in_window(SQRT2 * 64.0, 64.0));
        assert!(in_window(SQRT2 - 1.0, 1.0));
        let w = WindowSpec::new(1.0).unwrap();
        assert_eq!(w.lo, w.hi);
        let w = WindowSpec::new(64.0).unwrap();
        assert_eq!(w.z_range(), (2.0, 16.0));
        assert!(WindowSpec::new(0.5).is_err());
        let custom = WindowSpec::with_exponents(64.0, 0.2, 0.6).unwrap();
        assert!(custom.lo > w.lo && custom.hi < w.hi);
    }

    #[test]
    fn tail_normalizer_examples() {
        let n = tail_normalizer(10.0, 1.0, 0.0, &p(1)).unwrap();
        assert!((n.value() - (-SQRT2).exp()).abs() < 1e-15);

        let z = 3.0;
        let n = tail_normalizer(10.0, z, -z, &p(5)).unwrap();
        let expected = (SQRT2 * 10.0 - z).powf(-2.0) * z;
        assert!((n.value() / expected - 1.0).abs() < 1e-13);

        // d = 3, L = 64, z = 4, y = 1, reference value from a 40-digit evaluation.
        let n = tail_normalizer(64.0, 4.0, 1.0, &p(3)).unwrap();
        assert!((n.value() / 3.927_078_785_223_904_5e-5 - 1.0).abs() < 1e-12);

        assert!(tail_normalizer(2.0, 2.0 * SQRT2, 0.0, &p(2)).is_err());
        assert!(tail_normalizer(2.0, 0.0, 0.0, &p(2)).is_err());
    }

    #[test]
    fn tail_normalizer_saturates_without_nan() {
        let n = tail_normalizer(1e6, 1.0, 800.0, &p(2)).unwrap();
        assert_eq!(n.value(), 0.0);
        assert!(n.scaled.saturated());
        assert!(n.log_value().is_finite());
    }

    #[test]
    fn z_variants_differ_by_power_ratio() {
        let (l, r) = (20.0, 25.0);
        let a = z_term_log(r, l, &p(3), ZVariant::RadialPower);
        let b = z_term_log(r, l, &p(3), ZVariant::Sqrt2LPower);
        assert!(((a - b) - (SQRT2 * l / r).ln()).abs() < 1e-12);
    }
}
