//! Non-trivial fixed points of the universal equation,
//! `R^{1+1/γ}(ρ) = R(ρ) − ρ` with `R(0) = 1` and `γ < 0`.
//!
//! Points are solved for `S = R − ρ > 0` in the logarithmic variable
//! `t = ln S`, where the equation `t = (1 + 1/γ) ln(ρ + e^t)` has a unique
//! root for every `γ < 0` and `ρ ≥ 0`. This stays accurate at large ρ where
//! `R ≈ ρ`.

use crate::error::{Error, Result};
use crate::flow::fit_log_slope;
use crate::grid::{derivative4, GridFunction, UniformGrid};
use crate::potentials::RFunction;
use crate::scalar::{Real, Scalar};
use crate::series::TruncatedSeries;

/// Largest series order accepted by [`series_coeffs`].
pub const MAX_SERIES_ORDER: usize = 64;

/// Principal-branch fixed point sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution<T> {
    pub gamma: T,
    /// `Some(n)` when `γ = −1/n`.
    pub n: Option<usize>,
    values: GridFunction<T>,
    s_values: Vec<T>,
}

impl<T: Real> FixedPointSolution<T> {
    pub fn values(&self) -> &GridFunction<T> {
        &self.values
    }

    /// `S = R − ρ` at each grid point, solved directly.
    pub fn s_values(&self) -> &[T] {
        &self.s_values
    }

    /// `R^{1+1/γ} − R + ρ` at each grid point, evaluated as
    /// `R^{1+1/γ} − S` (for `γ = −1/n`, `R^{n−1}S − 1`, i.e. the polynomial
    /// `R^n − ρR^{n−1} − 1`).
    pub fn residuals(&self) -> Vec<T> {
        self.values
            .grid()
            .points()
            .into_iter()
            .zip(&self.s_values)
            .map(|(rho, &s)| point_residual(self.gamma, self.n, rho + s, s))
            .collect()
    }

    pub fn max_residual(&self) -> T {
        self.residuals()
            .into_iter()
            .fold(T::zero(), |m, r| m.max(r.abs()))
    }

    /// CSV rows `rho,R,residual`.
    pub fn csv_rows(&self) -> Vec<String> {
        let res = self.residuals();
        self.values
            .grid()
            .points()
            .into_iter()
            .zip(self.values.values())
            .zip(res)
            .map(|((x, r), e)| format!("{x},{r},{e}"))
            .collect()
    }
}

pub const FIXED_POINT_CSV_HEADER: &str = "rho,R,residual";

fn point_residual<T: Real>(gamma: T, n: Option<usize>, r: T, s: T) -> T {
    match n {
        Some(n) => r.powi(n as i32 - 1) * s - T::one(),
        None => r.powf(T::one() + gamma.recip()) - s,
    }
}

/// `n` with `γ = −1/n`, if γ is (to rounding) of that form.
pub fn polynomial_order<T: Real>(gamma: T) -> Option<usize> {
    if !(gamma < T::zero()) {
        return None;
    }
    let n = (-gamma.recip()).round();
    let n_usize = n.to_usize()?;
    if n_usize >= 1 && (gamma * n + T::one()).abs() <= T::lit(64.0) * T::epsilon() * n {
        Some(n_usize)
    } else {
        None
    }
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma < T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "fixed points require γ < 0, got {gamma}"
        )))
    }
}

/// `G(t) = t − a ln(ρ + e^t)` and `G′(t)`, `a = 1 + 1/γ`.
fn log_equation<T: Real>(a: T, rho: T, t: T) -> (T, T) {
    let s = t.exp();
    let r = rho + s;
    (t - a * r.ln(), T::one() - a * s / r)
}

/// Safeguarded Newton on `G(t) = 0`, warm-started at `guess`.
fn solve_log_s<T: Real>(a: T, rho: T, guess: T) -> Result<T> {
    let g = |t: T| log_equation(a, rho, t);
    // G is increasing (G′ > 0 for a < 1, S < R); expand a bracket.
    let mut lo = guess - T::one();
    let mut hi = guess + T::one();
    let mut step = T::one();
    let mut tries = 0;
    while g(lo).0 > T::zero() {
        step = step + step;
        lo = lo - step;
        tries += 1;
        if tries > 200 {
            return Err(Error::Solver(format!("no lower bracket at ρ = {rho}")));
        }
    }
    step = T::one();
    while g(hi).0 < T::zero() {
        step = step + step;
        hi = hi + step;
        tries += 1;
        if tries > 400 {
            return Err(Error::Solver(format!("no upper bracket at ρ = {rho}")));
        }
    }
    let mut t = guess.max(lo).min(hi);
    for _ in 0..200 {
        let (f, df) = g(t);
        if f == T::zero() {
            return Ok(t);
        }
        if f < T::zero() {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - f / df;
        let next = if df > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / T::from_int(2)
        };
        if (next - t).abs() <= T::lit(4.0) * T::epsilon() * (T::one() + t.abs()) {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::Solver(format!(
        "fixed-point Newton iteration did not converge at ρ = {rho}"
    )))
}

/// `S(ρ) = R(ρ) − ρ` of the principal branch at one point.
pub fn fixed_point_s<T: Real>(gamma: T, rho: T) -> Result<T> {
    check_gamma(gamma)?;
    if rho < T::zero() {
        return Err(Error::Domain(format!("ρ must be ≥ 0, got {rho}")));
    }
    let a = T::one() + gamma.recip();
    // warm start from the asymptotic law S ~ ρ^a for large ρ, else S(0) = 1
    let guess = if rho > T::one() {
        a * rho.ln()
    } else {
        T::zero()
    };
    Ok(solve_log_s(a, rho, guess)?.exp())
}

/// `R(ρ)` of the principal branch at one point.
pub fn fixed_point_value<T: Real>(gamma: T, rho: T) -> Result<T> {
    Ok(rho + fixed_point_s(gamma, rho)?)
}

/// Solves on a grid starting at `ρ = 0`, continuing the previous point's
/// solution as the next initial guess.
pub fn solve_fixed_point<T: Real>(
    gamma: T,
    grid: &UniformGrid<T>,
) -> Result<FixedPointSolution<T>> {
    check_gamma(gamma)?;
    if grid.start() != T::zero() {
        return Err(Error::Domain("fixed-point grid must start at ρ = 0".into()));
    }
    let n = polynomial_order(gamma);
    let a = match n {
        Some(n) => T::one() - T::from_int(n as i64),
        None => T::one() + gamma.recip(),
    };
    let mut s_values = Vec::with_capacity(grid.len());
    let mut t = T::zero();
    for rho in grid.points() {
        t = solve_log_s(a, rho, t)?;
        s_values.push(t.exp());
    }
    s_values[0] = T::one();
    let r = grid
        .points()
        .into_iter()
        .zip(&s_values)
        .map(|(x, s)| x + *s)
        .collect();
    Ok(FixedPointSolution {
        gamma,
        n,
        values: GridFunction::new(grid.clone(), r)?,
        s_values,
    })
}

/// Explicit solutions for `n = 1, 2, 3` (`γ = −1, −1/2, −1/3`).
///
/// The cubic uses Cardano's formula in a cancellation-free arrangement:
/// `R = ρ/3 + u + ρ²/(9u)` with `u³ = ½ + ρ³/27 + √(¼ + ρ³/27)`.
pub fn closed_form<T: Real>(n: usize, rho: T) -> Result<T> {
    if rho < T::zero() {
        return Err(Error::Domain(format!("ρ must be ≥ 0, got {rho}")));
    }
    let two = T::from_int(2);
    match n {
        1 => Ok(T::one() + rho),
        2 => Ok((rho + (rho * rho + T::from_int(4)).sqrt()) / two),
        3 => {
            let c = rho * rho * rho / T::from_int(27);
            let u = (T::lit(0.5) + c + (T::lit(0.25) + c).sqrt()).cbrt();
            Ok(rho / T::from_int(3) + u + rho * rho / (T::from_int(9) * u))
        }
        _ => Err(Error::Domain(format!(
            "closed forms exist for n ∈ {{1,2,3}}, got {n}"
        ))),
    }
}

/// Location of the square-root branch points of the principal solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity<T> {
    /// `|R|` at the branch point.
    pub r_modulus: T,
    /// `|ρ|` at the branch point (the radius of convergence about 0).
    pub rho_modulus: T,
    /// For `γ = −1/n`: the `n` rotated copies `ω^k ρ_s`, `ω^n = 1`.
    pub count: Option<usize>,
}

/// Branch point of the fixed point. `γ = −1` (the entire solution `1 + ρ`)
/// gives `None`. For `γ = −1/n`, `|ρ_s| = n/(n−1)^{(n−1)/n}`. For generic γ
/// the moduli of `R = (γ/(1+γ))^γ` and `ρ = γ^γ/(1+γ)^{1+γ}` are returned.
pub fn singularity<T: Real>(gamma: T) -> Result<Option<Singularity<T>>> {
    check_gamma(gamma)?;
    match polynomial_order(gamma) {
        Some(1) => Ok(None),
        Some(n) => {
            let nn = T::from_int(n as i64);
            let nm1 = nn - T::one();
            Ok(Some(Singularity {
                r_modulus: nm1.powf(nn.recip()),
                rho_modulus: nn / nm1.powf(nm1 / nn),
                count: Some(n),
            }))
        }
        None => {
            let onep = T::one() + gamma;
            if onep == T::zero() {
                return Ok(None);
            }
            Ok(Some(Singularity {
                r_modulus: (gamma / onep).abs().powf(gamma),
                rho_modulus: gamma.abs().powf(gamma) / onep.abs().powf(onep),
                count: None,
            }))
        }
    }
}

/// Taylor coefficients about `ρ = 0`:
/// `a_0 = 1`, `a_k = −γ (1 + γ(k−1))_{k−1} / k!`, with the rising factorial
/// standing in for the pole-prone ratio `Γ(k + γ(k−1))/Γ(1 + γ(k−1))`.
pub fn series_coeffs<S: Scalar>(gamma: &S, order: usize) -> Result<TruncatedSeries<S>> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::Domain(format!(
            "series order {order} exceeds {MAX_SERIES_ORDER}"
        )));
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(S::one());
    for k in 1..=order {
        let base = S::one() + gamma.clone() * S::from_int(k as i64 - 1);
        // interleave the rising factorial with 1/k! to keep exact rationals small
        let mut term = -gamma.clone();
        for j in 2..=k {
            term = term * (base.clone() + S::from_int(j as i64 - 2)) * S::from_ratio(1, j as i64);
        }
        coeffs.push(term);
    }
    Ok(TruncatedSeries::with_order(coeffs, order))
}

/// Radius of convergence from the stride-`s` coefficient ratio
/// `r_k = |a_k/a_{k+s}|^{1/s} = ρ_s(1 + c/k + …)`, extrapolated linearly in
/// `1/k` from the two largest usable `k`. The stride absorbs the periodic
/// pattern produced by several singularities on the circle of convergence.
pub fn ratio_test_radius<T: Real>(coeffs: &[T], stride: usize) -> Result<T> {
    if stride == 0 {
        return Err(Error::Domain("stride must be positive".into()));
    }
    let usable = |k: usize| {
        k + stride < coeffs.len() && coeffs[k] != T::zero() && coeffs[k + stride] != T::zero()
    };
    let ratio = |k: usize| {
        (coeffs[k] / coeffs[k + stride])
            .abs()
            .powf(T::from_int(stride as i64).recip())
    };
    let mut ks = (1..coeffs.len()).rev().filter(|&k| usable(k));
    let k1 = ks
        .next()
        .ok_or_else(|| Error::Domain("no usable coefficient pair".into()))?;
    let k2 = ks
        .find(|&k| k + stride <= k1)
        .ok_or_else(|| Error::Domain("need two usable coefficient pairs".into()))?;
    let (x1, x2) = (T::from_int(k1 as i64), T::from_int(k2 as i64));
    Ok((x1 * ratio(k1) - x2 * ratio(k2)) / (x1 - x2))
}

/// Ratio-test radius of the fixed-point series (stride `n` for `γ = −1/n`).
pub fn series_radius<T: Real>(gamma: T, order: usize) -> Result<T> {
    check_gamma(gamma)?;
    let series = series_coeffs(&gamma, order)?;
    let stride = polynomial_order(gamma).unwrap_or(1).max(1);
    ratio_test_radius(series.coeffs(), stride)
}

/// `|R(ρ, γ) − ρ R(ρ^{1/γ}, 1/γ)^{−γ}|`, both sides solved numerically.
pub fn duality_check<T: Real>(gamma: T, rho: T) -> Result<T> {
    check_gamma(gamma)?;
    if !(rho > T::zero()) {
        return Err(Error::Domain(format!("duality needs ρ > 0, got {rho}")));
    }
    let lhs = fixed_point_value(gamma, rho)?;
    let dual = fixed_point_value(gamma.recip(), rho.powf(gamma.recip()))?;
    Ok((lhs - rho * dual.powf(-gamma)).abs())
}

/// Log-log slope of `S = R − ρ` against ρ over `[lo, hi]` (expected `1 + 1/γ`).
pub fn asymptotic_slope<T: Real>(gamma: T, lo: T, hi: T, samples: usize) -> Result<T> {
    check_gamma(gamma)?;
    if !(lo > T::zero() && hi > lo) || samples < 2 {
        return Err(Error::Domain(
            "asymptotic fit needs 0 < lo < hi and ≥ 2 samples".into(),
        ));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let last = T::from_int(samples as i64 - 1);
    let xs: Vec<T> = (0..samples)
        .map(|i| llo + (lhi - llo) * T::from_int(i as i64) / last)
        .collect();
    let ys = xs
        .iter()
        .map(|x| fixed_point_s(gamma, x.exp()))
        .collect::<Result<Vec<T>>>()?;
    fit_log_slope(&xs, &ys)
}

/// The non-linear renormalization `h` and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearH<T> {
    pub h: GridFunction<T>,
    /// `−Rh′ + R′h + R − RR′` per grid point.
    pub ode_residual: Vec<T>,
    /// `1 − h′(1) − R′(1)(1 − h(1))` when `ρ = 1` lies on the grid.
    pub saddle_constraint: Option<T>,
}

impl<T: Real> NonlinearH<T> {
    pub fn max_ode_residual(&self) -> T {
        self.ode_residual
            .iter()
            .fold(T::zero(), |m, r| m.max(r.abs()))
    }
}

/// `h(ρ) = R(ρ)[∫_0^ρ dρ′/R(ρ′) − ln R(ρ) + ln R(0)]`, so `h(0) = 0`.
/// The integral is accumulated interval by interval with fourth-order
/// (Simpson-class) cubic rules.
pub fn nonlinear_h<T: Real>(r: &RFunction<T>, grid: &UniformGrid<T>) -> Result<NonlinearH<T>> {
    if grid.start() != T::zero() {
        return Err(Error::Domain("h grid must start at ρ = 0".into()));
    }
    let pts = grid.points();
    let rv = pts.iter().map(|&x| r.eval(x)).collect::<Result<Vec<T>>>()?;
    let drv = pts
        .iter()
        .map(|&x| r.derivative(x))
        .collect::<Result<Vec<T>>>()?;
    if let Some(i) = rv.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::Domain(format!(
            "R({}) = {} is not positive",
            pts[i], rv[i]
        )));
    }
    let inv: Vec<T> = rv.iter().map(|v| v.recip()).collect();
    let integral = cumulative_simpson(&inv, grid.spacing());
    let ln0 = rv[0].ln();
    let h: Vec<T> = (0..pts.len())
        .map(|i| rv[i] * (integral[i] - rv[i].ln() + ln0))
        .collect();
    let dh = derivative4(&h, grid.spacing());
    let ode_residual = (0..pts.len())
        .map(|i| -rv[i] * dh[i] + drv[i] * h[i] + rv[i] - rv[i] * drv[i])
        .collect();
    let hf = GridFunction::new(grid.clone(), h)?;
    let saddle_constraint = if hf.contains(T::one()) {
        let h1 = hf.interpolate(T::one())?;
        let dh1 = hf.interpolate_derivative(T::one())?;
        Some(T::one() - dh1 - r.derivative(T::one())? * (T::one() - h1))
    } else {
        None
    };
    Ok(NonlinearH {
        h: hf,
        ode_residual,
        saddle_constraint,
    })
}

/// `∫_{x_0}^{x_i} f` at every node of a uniform grid (at least 4 nodes).
///
/// Each interval uses the cubic through its four nearest nodes (centred
/// inside, one-sided at the ends), so the error is a smooth function of the
/// node and survives numerical differentiation.
fn cumulative_simpson<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    let mut out = vec![T::zero(); n];
    let c24 = h / T::from_int(24);
    let (nine, thirteen, nineteen, five) = (
        T::from_int(9),
        T::from_int(13),
        T::from_int(19),
        T::from_int(5),
    );
    for i in 1..n {
        let piece = if i == 1 {
            nine * f[0] + nineteen * f[1] - five * f[2] + f[3]
        } else if i + 1 == n {
            f[i - 3] - five * f[i - 2] + nineteen * f[i - 1] + nine * f[i]
        } else {
            thirteen * (f[i - 1] + f[i]) - f[i - 2] - f[i + 1]
        };
        out[i] = out[i - 1] + c24 * piece;
    }
    out
}
