//! Thin wrappers over `libm` so the rest of the crate reads like std float code.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `u^{-p} - 1` without cancellation near `u = 1`.
#[inline]
pub fn inv_pow_minus_one(u: f64, p: f64) -> f64 {
    expm1(-p * ln(u))
}

/// `b^{-p} - a^{-p}` evaluated as `a^{-p}·expm1(-p·ln(b/a))`, accurate when `a ≈ b`.
#[inline]
pub fn inv_pow_diff(a: f64, b: f64, p: f64) -> f64 {
    pow(a, -p) * expm1(-p * ln_1p((b - a) / a))
}
