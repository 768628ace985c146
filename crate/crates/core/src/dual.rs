//! Forward-mode dual numbers `a + b·ε`, `ε² = 0`.


use crate::ad::{impl_ad_scalar, AdCore};

/// First-order dual number over `f64`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }

    /// A constant (zero tangent).
    #[inline]
    pub fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }
}

impl AdCore for Dual {
    #[inline(always)]
    fn val(self) -> f64 {
        self.re
    }
    #[inline(always)]
    fn constant(v: f64) -> Self {
        Dual { re: v, eps: 0.0 }
    }
    #[inline(always)]
    fn unary(self, v: f64, d: f64) -> Self {
        Dual { re: v, eps: d * self.eps }
    }
    #[inline(always)]
    fn binary(self, rhs: Self, v: f64, da: f64, db: f64) -> Self {
        Dual { re: v, eps: da * self.eps + db * rhs.eps }
    }
}

impl_ad_scalar!(Dual);

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Float;

    fn derivative(f: impl Fn(Dual) -> Dual, x: f64) -> f64 {
        f(Dual::new(x, 1.0)).eps
    }

    #[test]
    fn elementary_derivatives() {
        let x = 0.7;
        assert!((derivative(|d| d * d * d, x) - 3.0 * x * x).abs() < 1e-15);
        assert!((derivative(|d| d.sqrt(), x) - 0.5 / x.sqrt()).abs() < 1e-15);
        assert!((derivative(|d| d.sin() * d.exp(), x) - (x.cos() + x.sin()) * x.exp()).abs() < 1e-14);
        assert!((derivative(|d| Dual::constant(1.0) / d, x) + 1.0 / (x * x)).abs() < 1e-14);
        assert!((derivative(|d| d.powi(-2), x) + 2.0 / x.powi(3)).abs() < 1e-13);
        assert!((derivative(|d| d.atan2(Dual::constant(2.0)), x) - 2.0 / (4.0 + x * x)).abs() < 1e-15);
    }

    #[test]
    fn comparisons_use_the_real_part() {
        assert!(Dual::new(1.0, 5.0) < Dual::new(2.0, -5.0));
        assert_eq!(Dual::new(1.0, 5.0), Dual::new(1.0, 0.0));
    }
}
