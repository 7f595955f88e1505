//! Small floating-point helpers shared by the solver and the oracles.

/// `x^n` by repeated squaring. `ipow(0.0, 0) == 1.0`.
pub fn ipow(mut x: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= x;
        }
        x *= x;
        n >>= 1;
    }
    acc
}

/// `x^k` for `x > 0`; exponents above 30 in magnitude are taken in log space.
pub fn pow_pos(x: f64, k: f64) -> f64 {
    if k.abs() > 30.0 {
        libm::exp(k * libm::log(x))
    } else {
        libm::pow(x, k)
    }
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// `sum_e |scale_e * x_e|^p`, evaluated as `M^p * sum_e (|scale_e x_e| / M)^p`
/// with `M` the largest term so that intermediate powers stay in range.
pub fn weighted_power_sum(scale: &[f64], x: &[f64], p: u32) -> f64 {
    let peak = scale
        .iter()
        .zip(x)
        .fold(0.0_f64, |m, (s, v)| m.max((s * v).abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let inner: f64 = scale
        .iter()
        .zip(x)
        .map(|(s, v)| ipow((s * v).abs() / peak, p))
        .sum();
    ipow(peak, p) * inner
}

/// `(sum_e |scale_e x_e|^p)^(1/p)` without forming the p-th powers of large terms.
pub fn weighted_p_norm(scale: &[f64], x: &[f64], p: u32) -> f64 {
    let peak = scale
        .iter()
        .zip(x)
        .fold(0.0_f64, |m, (s, v)| m.max((s * v).abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let inner: f64 = scale
        .iter()
        .zip(x)
        .map(|(s, v)| ipow((s * v).abs() / peak, p))
        .sum();
    peak * libm::pow(inner, 1.0 / p as f64)
}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}
