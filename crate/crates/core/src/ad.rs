//! Shared plumbing for the automatic-differentiation scalars.
//!
//! An AD scalar only has to say how to build a constant and how to combine a
//! primal value with local partial derivatives; [`impl_ad_scalar!`] derives the
//! full `num_traits::Float` surface from that.

pub(crate) trait AdCore: Copy {
    fn val(self) -> f64;
    fn constant(v: f64) -> Self;
    /// Result of a unary op with primal `v` and local derivative `d`.
    fn unary(self, v: f64, d: f64) -> Self;
    /// Result of a binary op with primal `v` and partials `da`, `db`.
    fn binary(self, rhs: Self, v: f64, da: f64, db: f64) -> Self;
}

macro_rules! impl_ad_scalar {
    ($t:ty) => {
        impl ::std::ops::Add for $t {
            type Output = $t;
            #[inline]
            fn add(self, rhs: $t) -> $t {
                let v = self.val() + rhs.val();
                self.binary(rhs, v, 1.0, 1.0)
            }
        }
        impl ::std::ops::Sub for $t {
            type Output = $t;
            #[inline]
            fn sub(self, rhs: $t) -> $t {
                let v = self.val() - rhs.val();
                self.binary(rhs, v, 1.0, -1.0)
            }
        }
        impl ::std::ops::Mul for $t {
            type Output = $t;
            #[inline]
            fn mul(self, rhs: $t) -> $t {
                let (a, b) = (self.val(), rhs.val());
                self.binary(rhs, a * b, b, a)
            }
        }
        impl ::std::ops::Div for $t {
            type Output = $t;
            #[inline]
            fn div(self, rhs: $t) -> $t {
                let (a, b) = (self.val(), rhs.val());
                let inv = 1.0 / b;
                self.binary(rhs, a * inv, inv, -a * inv * inv)
            }
        }
        impl ::std::ops::Rem for $t {
            type Output = $t;
            #[inline]
            fn rem(self, rhs: $t) -> $t {
                let (a, b) = (self.val(), rhs.val());
                self.binary(rhs, a % b, 1.0, -(a / b).trunc())
            }
        }
        impl ::std::ops::Neg for $t {
            type Output = $t;
            #[inline]
            fn neg(self) -> $t {
                self.unary(-self.val(), -1.0)
            }
        }
        impl ::std::ops::AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, rhs: $t) {
                *self = *self + rhs;
            }
        }
        impl ::std::ops::SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, rhs: $t) {
                *self = *self - rhs;
            }
        }
        impl ::std::ops::MulAssign for $t {
            #[inline]
            fn mul_assign(&mut self, rhs: $t) {
                *self = *self * rhs;
            }
        }
        impl ::std::ops::DivAssign for $t {
            #[inline]
            fn div_assign(&mut self, rhs: $t) {
                *self = *self / rhs;
            }
        }
        impl ::std::iter::Sum for $t {
            fn sum<I: Iterator<Item = $t>>(iter: I) -> $t {
                iter.fold(<$t as AdCore>::constant(0.0), |a, b| a + b)
            }
        }
        impl PartialEq for $t {
            #[inline]
            fn eq(&self, other: &$t) -> bool {
                self.val() == other.val()
            }
        }
        impl PartialOrd for $t {
            #[inline]
            fn partial_cmp(&self, other: &$t) -> Option<::std::cmp::Ordering> {
                self.val().partial_cmp(&other.val())
            }
        }
        impl ::std::fmt::Display for $t {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                ::std::fmt::Display::fmt(&self.val(), f)
            }
        }
        impl ::num_traits::Zero for $t {
            #[inline]
            fn zero() -> $t {
                <$t as AdCore>::constant(0.0)
            }
            #[inline]
            fn is_zero(&self) -> bool {
                self.val() == 0.0
            }
        }
        impl ::num_traits::One for $t {
            #[inline]
            fn one() -> $t {
                <$t as AdCore>::constant(1.0)
            }
        }
        impl ::num_traits::Num for $t {
            type FromStrRadixErr = <f64 as ::num_traits::Num>::FromStrRadixErr;
            fn from_str_radix(s: &str, radix: u32) -> Result<$t, Self::FromStrRadixErr> {
                <f64 as ::num_traits::Num>::from_str_radix(s, radix).map(<$t as AdCore>::constant)
            }
        }
        impl ::num_traits::ToPrimitive for $t {
            fn to_i64(&self) -> Option<i64> {
                self.val().to_i64()
            }
            fn to_u64(&self) -> Option<u64> {
                self.val().to_u64()
            }
            fn to_f64(&self) -> Option<f64> {
                Some(self.val())
            }
        }
        impl ::num_traits::NumCast for $t {
            fn from<N: ::num_traits::ToPrimitive>(n: N) -> Option<$t> {
                n.to_f64().map(<$t as AdCore>::constant)
            }
        }
        impl ::num_traits::FromPrimitive for $t {
            fn from_i64(n: i64) -> Option<$t> {
                Some(<$t as AdCore>::constant(n as f64))
            }
            fn from_u64(n: u64) -> Option<$t> {
                Some(<$t as AdCore>::constant(n as f64))
            }
            fn from_f64(n: f64) -> Option<$t> {
                Some(<$t as AdCore>::constant(n))
            }
        }
        impl ::num_traits::FloatConst for $t {
            fn E() -> $t { <$t as AdCore>::constant(::std::f64::consts::E) }
            fn FRAC_1_PI() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_1_PI) }
            fn FRAC_1_SQRT_2() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_1_SQRT_2) }
            fn FRAC_2_PI() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_2_PI) }
            fn FRAC_2_SQRT_PI() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_2_SQRT_PI) }
            fn FRAC_PI_2() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_PI_2) }
            fn FRAC_PI_3() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_PI_3) }
            fn FRAC_PI_4() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_PI_4) }
            fn FRAC_PI_6() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_PI_6) }
            fn FRAC_PI_8() -> $t { <$t as AdCore>::constant(::std::f64::consts::FRAC_PI_8) }
            fn LN_10() -> $t { <$t as AdCore>::constant(::std::f64::consts::LN_10) }
            fn LN_2() -> $t { <$t as AdCore>::constant(::std::f64::consts::LN_2) }
            fn LOG10_E() -> $t { <$t as AdCore>::constant(::std::f64::consts::LOG10_E) }
            fn LOG2_E() -> $t { <$t as AdCore>::constant(::std::f64::consts::LOG2_E) }
            fn PI() -> $t { <$t as AdCore>::constant(::std::f64::consts::PI) }
            fn SQRT_2() -> $t { <$t as AdCore>::constant(::std::f64::consts::SQRT_2) }
        }
        impl ::num_traits::Float for $t {
            fn nan() -> $t { <$t as AdCore>::constant(f64::NAN) }
            fn infinity() -> $t { <$t as AdCore>::constant(f64::INFINITY) }
            fn neg_infinity() -> $t { <$t as AdCore>::constant(f64::NEG_INFINITY) }
            fn neg_zero() -> $t { <$t as AdCore>::constant(-0.0) }
            fn min_value() -> $t { <$t as AdCore>::constant(f64::MIN) }
            fn min_positive_value() -> $t { <$t as AdCore>::constant(f64::MIN_POSITIVE) }
            fn max_value() -> $t { <$t as AdCore>::constant(f64::MAX) }
            fn epsilon() -> $t { <$t as AdCore>::constant(f64::EPSILON) }
            fn is_nan(self) -> bool { self.val().is_nan() }
            fn is_infinite(self) -> bool { self.val().is_infinite() }
            fn is_finite(self) -> bool { self.val().is_finite() }
            fn is_normal(self) -> bool { self.val().is_normal() }
            fn classify(self) -> ::std::num::FpCategory { self.val().classify() }
            fn floor(self) -> $t { self.unary(self.val().floor(), 0.0) }
            fn ceil(self) -> $t { self.unary(self.val().ceil(), 0.0) }
            fn round(self) -> $t { self.unary(self.val().round(), 0.0) }
            fn trunc(self) -> $t { self.unary(self.val().trunc(), 0.0) }
            fn fract(self) -> $t { self.unary(self.val().fract(), 1.0) }
            fn abs(self) -> $t {
                let x = self.val();
                self.unary(x.abs(), if x >= 0.0 { 1.0 } else { -1.0 })
            }
            fn signum(self) -> $t { self.unary(self.val().signum(), 0.0) }
            fn is_sign_positive(self) -> bool { self.val().is_sign_positive() }
            fn is_sign_negative(self) -> bool { self.val().is_sign_negative() }
            fn mul_add(self, a: $t, b: $t) -> $t { self * a + b }
            fn recip(self) -> $t {
                let x = self.val();
                self.unary(1.0 / x, -1.0 / (x * x))
            }
            fn powi(self, n: i32) -> $t {
                let x = self.val();
                let d = if n == 0 { 0.0 } else { n as f64 * x.powi(n - 1) };
                self.unary(x.powi(n), d)
            }
            fn powf(self, n: $t) -> $t {
                let (x, y) = (self.val(), n.val());
                let v = x.powf(y);
                let db = if x > 0.0 { v * x.ln() } else { 0.0 };
                self.binary(n, v, y * x.powf(y - 1.0), db)
            }
            fn sqrt(self) -> $t {
                let v = self.val().sqrt();
                self.unary(v, 0.5 / v)
            }
            fn exp(self) -> $t {
                let v = self.val().exp();
                self.unary(v, v)
            }
            fn exp2(self) -> $t {
                let v = self.val().exp2();
                self.unary(v, v * ::std::f64::consts::LN_2)
            }
            fn ln(self) -> $t {
                let x = self.val();
                self.unary(x.ln(), 1.0 / x)
            }
            fn log(self, base: $t) -> $t { self.ln() / base.ln() }
            fn log2(self) -> $t {
                let x = self.val();
                self.unary(x.log2(), 1.0 / (x * ::std::f64::consts::LN_2))
            }
            fn log10(self) -> $t {
                let x = self.val();
                self.unary(x.log10(), 1.0 / (x * ::std::f64::consts::LN_10))
            }
            fn max(self, other: $t) -> $t {
                if self.val() >= other.val() || other.val().is_nan() { self } else { other }
            }
            fn min(self, other: $t) -> $t {
                if self.val() <= other.val() || other.val().is_nan() { self } else { other }
            }
            fn abs_sub(self, other: $t) -> $t {
                if self.val() > other.val() { self - other } else { <$t as AdCore>::constant(0.0) }
            }
            fn cbrt(self) -> $t {
                let v = self.val().cbrt();
                self.unary(v, 1.0 / (3.0 * v * v))
            }
            fn hypot(self, other: $t) -> $t { (self * self + other * other).sqrt() }
            fn sin(self) -> $t {
                let x = self.val();
                self.unary(x.sin(), x.cos())
            }
            fn cos(self) -> $t {
                let x = self.val();
                self.unary(x.cos(), -x.sin())
            }
            fn tan(self) -> $t {
                let t = self.val().tan();
                self.unary(t, 1.0 + t * t)
            }
            fn asin(self) -> $t {
                let x = self.val();
                self.unary(x.asin(), 1.0 / (1.0 - x * x).sqrt())
            }
            fn acos(self) -> $t {
                let x = self.val();
                self.unary(x.acos(), -1.0 / (1.0 - x * x).sqrt())
            }
            fn atan(self) -> $t {
                let x = self.val();
                self.unary(x.atan(), 1.0 / (1.0 + x * x))
            }
            fn atan2(self, other: $t) -> $t {
                let (y, x) = (self.val(), other.val());
                let r2 = x * x + y * y;
                self.binary(other, y.atan2(x), x / r2, -y / r2)
            }
            fn sin_cos(self) -> ($t, $t) { (self.sin(), self.cos()) }
            fn exp_m1(self) -> $t {
                let x = self.val();
                self.unary(x.exp_m1(), x.exp())
            }
            fn ln_1p(self) -> $t {
                let x = self.val();
                self.unary(x.ln_1p(), 1.0 / (1.0 + x))
            }
            fn sinh(self) -> $t {
                let x = self.val();
                self.unary(x.sinh(), x.cosh())
            }
            fn cosh(self) -> $t {
                let x = self.val();
                self.unary(x.cosh(), x.sinh())
            }
            fn tanh(self) -> $t {
                let t = self.val().tanh();
                self.unary(t, 1.0 - t * t)
            }
            fn asinh(self) -> $t {
                let x = self.val();
                self.unary(x.asinh(), 1.0 / (x * x + 1.0).sqrt())
            }
            fn acosh(self) -> $t {
                let x = self.val();
                self.unary(x.acosh(), 1.0 / (x * x - 1.0).sqrt())
            }
            fn atanh(self) -> $t {
                let x = self.val();
                self.unary(x.atanh(), 1.0 / (1.0 - x * x))
            }
            fn integer_decode(self) -> (u64, i16, i8) {
                ::num_traits::Float::integer_decode(self.val())
            }
        }
    };
}

pub(crate) use impl_ad_scalar;
