use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `g(x) = sqrt(x^2 + c)`, a smooth stand-in for `|x|`.
///
/// `g` is 1-Lipschitz and `1/sqrt(c)`-smooth, and `| g(x) - |x| | <= sqrt(c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothAbs {
    c: f64,
}

impl SmoothAbs {
    pub const DEFAULT_C: f64 = 1e-4;

    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("smoothing constant must be positive"));
        }
        Ok(SmoothAbs { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (x * x + self.c).sqrt()
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        x / (x * x + self.c).sqrt()
    }

    /// Lipschitz constant of `g` (G_g).
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    /// Smoothness constant of `g` (L_g), attained at 0.
    pub fn smoothness(&self) -> f64 {
        1.0 / self.c.sqrt()
    }
}

impl Default for SmoothAbs {
    fn default() -> Self {
        SmoothAbs { c: Self::DEFAULT_C }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_derivative_at_zero() {
        let g = SmoothAbs::new(1e-4).unwrap();
        assert!((g.value(0.0) - 0.01).abs() < 1e-15);
        assert_eq!(g.deriv(0.0), 0.0);
    }

    #[test]
    fn value_and_derivative_at_one() {
        let g = SmoothAbs::new(1e-4).unwrap();
        assert_eq!(g.value(1.0), 1.0001f64.sqrt());
        assert_eq!(g.deriv(1.0), 1.0 / 1.0001f64.sqrt());
    }

    #[test]
    fn symmetry() {
        let g = SmoothAbs::default();
        for x in [0.1, 0.7, 3.0, 1e3] {
            assert_eq!(g.value(x), g.value(-x));
            assert_eq!(g.deriv(x), -g.deriv(-x));
        }
    }

    #[test]
    fn rejects_nonpositive_c() {
        assert!(SmoothAbs::new(0.0).is_err());
        assert!(SmoothAbs::new(-1.0).is_err());
        assert!(SmoothAbs::new(f64::NAN).is_err());
    }
}
