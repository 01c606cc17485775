//! Scalar special functions.

use core::f64::consts::{LN_2, PI, SQRT_2};
#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    for x in xs {
        acc = log_add_exp(acc, x);
    }
    acc
}

/// `ln(1 - exp(x))` for `x <= 0`, accurate near both ends.
pub fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Log-density of a Student-t with `df` degrees of freedom at standardized `z`.
pub fn student_t_log_pdf(z: f64, df: f64) -> f64 {
    student_t_log_norm(df) + student_t_log_kernel(z, df)
}

/// Normalizing constant of [`student_t_log_pdf`].
pub fn student_t_log_norm(df: f64) -> f64 {
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln()
}

/// Unnormalized part of [`student_t_log_pdf`].
#[inline]
pub fn student_t_log_kernel(z: f64, df: f64) -> f64 {
    -0.5 * (df + 1.0) * (z * z / df).ln_1p()
}
