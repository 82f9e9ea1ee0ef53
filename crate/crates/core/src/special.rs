//! Gamma-family special functions.

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

// Lanczos approximation, g = 7, n = 9 (the GSL / Numerical Recipes set).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)] // digits as published
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < T::lit(0.5) {
        // Γ(x) = π / (sin(πx) Γ(1 − x)), with sin(πx) > 0 on (0, 1/2).
        let pi = T::PI();
        let s = (pi * x).sin();
        return Ok(pi.ln() - s.ln() - ln_gamma(T::one() - x)?);
    }
    Ok(lanczos_ln(x))
}

fn lanczos_ln<T: Real>(x: T) -> T {
    let xm1 = x - T::one();
    let mut acc = T::lit(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (xm1 + T::from_int(i as i64));
    }
    let t = xm1 + T::lit(LANCZOS_G) + T::lit(0.5);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    half_ln_2pi + (xm1 + T::lit(0.5)) * t.ln() - t + acc.ln()
}

/// `ln|Γ(x)|` together with the sign of `Γ(x)`. Rejects the poles at the
/// nonpositive integers.
pub fn ln_gamma_signed<T: Real>(x: T) -> Result<(T, T)> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x > T::zero() {
        return Ok((ln_gamma(x)?, T::one()));
    }
    if x == x.round() {
        return Err(Error::Domain(format!("gamma has a pole at {x}")));
    }
    // Reflection: Γ(x) Γ(1 − x) = π / sin(πx).
    let pi = T::PI();
    let s = (pi * x).sin();
    let ln_abs = pi.ln() - s.abs().ln() - ln_gamma(T::one() - x)?;
    Ok((ln_abs, s.signum()))
}

/// `Γ(x)` for any non-pole real argument.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    let (l, s) = ln_gamma_signed(x)?;
    Ok(s * l.exp())
}

/// Rising factorial `(x)_k = x (x + 1) ⋯ (x + k − 1)`, with `(x)_0 = 1`.
/// Exact over any ring; used wherever a ratio `Γ(x + k) / Γ(x)` would hit a
/// pole of `Γ`.
pub fn pochhammer<T: Scalar>(x: &T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, j| acc * (x.clone() + T::from_int(j as i64)))
}

/// `k!` embedded in the scalar type.
pub fn factorial<T: Scalar>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::from_int(j as i64))
}

/// Binomial coefficient `C(n, k)` computed in `i128`, exact for the small
/// degrees used by the potential constructions.
pub fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1i128, |acc, j| acc * (n - j) as i128 / (j + 1) as i128)
}
