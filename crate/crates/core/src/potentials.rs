//! Polynomial potentials and the model-specific maps `V ↔ R`.
//!
//! Every model is reduced to one universal flow for `R(ρ)`; the models
//! differ only in how `R` is built from `V'`:
//!
//! | model          | `R(V')`                         |
//! |----------------|---------------------------------|
//! | `VectorD0`     | `1 / (2V')`                     |
//! | `VectorQM`     | `1 / √(8V')`                    |
//! | `VectorField`  | `K(d) (2V')^{d/2 − 1}`          |
//! | `Matrix`       | `1 / V'`                        |
//!
//! Matrix potentials are stored in `ρ = μ²/2`, so that
//! `V(μ²/2) = Σ g_k μ^{2k} / (2k)` has `c_1 = g_1 = 1` and `V'(ρ) = V'(μ)/μ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::{Real, Scalar};
use crate::series::TruncatedSeries;
use crate::special::{binomial, ln_gamma_signed};

/// Model convention attached to a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// Zero-dimensional O(N) vector integral.
    VectorD0,
    /// O(N) quantum mechanics in the local approximation.
    VectorQm,
    /// O(N) field theory in `d` dimensions, `0 < d < 4`, `d ≠ 2`.
    VectorField { d: f64 },
    /// Hermitian one-matrix integral, stored in `ρ = μ²/2`.
    Matrix,
}

impl Model {
    /// Validated field-theory model.
    pub fn vector_field(d: f64) -> Result<Self> {
        validate_dimension(d)?;
        Ok(Model::VectorField { d })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Model::VectorD0 => "VectorD0",
            Model::VectorQm => "VectorQM",
            Model::VectorField { .. } => "VectorField",
            Model::Matrix => "Matrix",
        }
    }

    /// The value of `V'(0)` fixed by the normalization convention.
    pub fn normalization_slope<T: Scalar>(&self) -> T {
        match self {
            Model::Matrix => T::one(),
            _ => T::from_ratio(1, 2),
        }
    }

    /// `R` as a function of the local slope `V'`.
    pub fn r_of_slope<T: Real>(&self, dv: T) -> Result<T> {
        if !(dv > T::zero()) {
            return Err(Error::NonPositiveDerivative {
                rho: f64::NAN,
                dv: dv.to_f64_lossy(),
            });
        }
        Ok(match *self {
            Model::VectorD0 => (T::from_int(2) * dv).recip(),
            Model::VectorQm => (T::from_int(8) * dv).sqrt().recip(),
            Model::VectorField { d } => {
                let d = T::lit(d);
                k_of_d(d)? * (T::from_int(2) * dv).powf(d / T::from_int(2) - T::one())
            }
            Model::Matrix => dv.recip(),
        })
    }

    /// `dR/dV'` expressed through `R` and `V'`.
    pub fn dr_dslope<T: Real>(&self, r: T, dv: T) -> T {
        match *self {
            Model::VectorD0 => -T::from_int(2) * r * r,
            Model::VectorQm => -T::from_int(4) * r * r * r,
            Model::VectorField { d } => r * (T::lit(d) - T::from_int(2)) / (T::from_int(2) * dv),
            Model::Matrix => -r * r,
        }
    }

    /// Inverse map `V'(R)`.
    pub fn slope_of_r<T: Real>(&self, r: T) -> Result<T> {
        Ok(match *self {
            Model::VectorD0 => (T::from_int(2) * r).recip(),
            Model::VectorQm => (T::from_int(8) * r * r).recip(),
            Model::VectorField { d } => {
                let d = T::lit(d);
                let base = r / k_of_d(d)?;
                if !(base > T::zero()) {
                    return Err(Error::Domain(format!("R/K(d) = {base} must be positive")));
                }
                base.powf(T::from_int(2) / (d - T::from_int(2))) / T::from_int(2)
            }
            Model::Matrix => r.recip(),
        })
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::VectorField { d } => write!(f, "VectorField(d={d})"),
            other => f.write_str(other.tag()),
        }
    }
}

fn validate_dimension(d: f64) -> Result<()> {
    if !(d > 0.0 && d < 4.0) {
        return Err(Error::Domain(format!(
            "dimension must satisfy 0 < d < 4, got {d}"
        )));
    }
    if d == 2.0 {
        return Err(Error::Domain(
            "d = 2 is a pole of Γ(1 − d/2) and is not supported".into(),
        ));
    }
    Ok(())
}

/// `K(d) = Γ(1 − d/2) / (4π)^{d/2}`. Negative for `2 < d < 4`.
pub fn k_of_d<T: Real>(d: T) -> Result<T> {
    validate_dimension(d.to_f64_lossy())?;
    let half = d / T::from_int(2);
    let (ln_abs, sign) = ln_gamma_signed(T::one() - half)?;
    let four_pi = T::from_int(4) * T::PI();
    Ok(sign * (ln_abs - half * four_pi.ln()).exp())
}

/// A polynomial potential `V(ρ) = Σ c_k ρ^k` with its model convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    coeffs: Vec<T>,
    model: Model,
}

impl<T: Scalar> Potential<T> {
    pub fn new(coeffs: Vec<T>, model: Model) -> Result<Self> {
        if let Model::VectorField { d } = model {
            validate_dimension(d)?;
        }
        let coeffs = if coeffs.is_empty() {
            vec![T::zero()]
        } else {
            coeffs
        };
        Ok(Self { coeffs, model })
    }

    /// `V = ρ/2` (or `ρ` for the matrix convention).
    pub fn gaussian(model: Model) -> Result<Self> {
        Self::new(vec![T::zero(), model.normalization_slope()], model)
    }

    /// `V = ρ/2 + g ρ²/4` (vector) or `V(μ) = μ²/2 + g μ⁴/4` (matrix, which is
    /// `ρ + g ρ²` in the stored variable).
    pub fn quartic(model: Model, g: T) -> Result<Self> {
        let c2 = match model {
            Model::Matrix => g,
            _ => g * T::from_ratio(1, 4),
        };
        Self::new(vec![T::zero(), model.normalization_slope(), c2], model)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn with_model(&self, model: Model) -> Result<Self> {
        Self::new(self.coeffs.clone(), model)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn horner(coeffs: &[T], x: &T) -> T {
        coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Coefficients of the `k`-th derivative.
    pub fn derivative_coeffs(&self, k: usize) -> Vec<T> {
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            if c.len() <= 1 {
                return vec![T::zero()];
            }
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, a)| a.clone() * T::from_int(j as i64))
                .collect();
        }
        c
    }

    pub fn eval_v(&self, rho: &T) -> T {
        Self::horner(&self.coeffs, rho)
    }

    pub fn eval_dv(&self, rho: &T) -> T {
        Self::horner(&self.derivative_coeffs(1), rho)
    }

    pub fn eval_ddv(&self, rho: &T) -> T {
        Self::horner(&self.derivative_coeffs(2), rho)
    }

    /// True when `V'(0)` equals the model's normalization slope.
    pub fn is_normalized(&self) -> bool {
        self.coeff(1) == self.model.normalization_slope()
    }

    /// Adds another polynomial (same model).
    pub fn plus(&self, other: &[T]) -> Self {
        let n = self.coeffs.len().max(other.len());
        let coeffs = (0..n)
            .map(|k| self.coeff(k) + other.get(k).cloned().unwrap_or_else(T::zero))
            .collect();
        Self {
            coeffs,
            model: self.model,
        }
    }

    /// Exact Taylor coefficients of `V` about `x`, truncated at `order`.
    pub fn taylor_at(&self, x: &T, order: usize) -> TruncatedSeries<T> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                a[k] = a[k].clone() + a[k + 1].clone() * x.clone();
            }
        }
        TruncatedSeries::with_order(a, order)
    }

    /// Taylor coefficients of `V` about zero.
    pub fn to_series(&self, order: usize) -> TruncatedSeries<T> {
        TruncatedSeries::with_order(self.coeffs.clone(), order)
    }
}

impl<T: Real> Potential<T> {
    fn require_positive_slope(&self, rho: T) -> Result<T> {
        let dv = self.eval_dv(&rho);
        if !(dv > T::zero()) {
            return Err(Error::NonPositiveDerivative {
                rho: rho.to_f64_lossy(),
                dv: dv.to_f64_lossy(),
            });
        }
        Ok(dv)
    }

    /// `R(ρ)` for this potential's model.
    pub fn r_value(&self, rho: T) -> Result<T> {
        let dv = self.require_positive_slope(rho)?;
        self.model.r_of_slope(dv)
    }

    /// `R'(ρ)`, exact from `V''`.
    pub fn r_derivative(&self, rho: T) -> Result<T> {
        let dv = self.require_positive_slope(rho)?;
        let r = self.model.r_of_slope(dv)?;
        Ok(self.model.dr_dslope(r, dv) * self.eval_ddv(&rho))
    }

    /// Taylor series of `R` about `rho`, built with series `pow`.
    pub fn r_series(&self, rho: T, order: usize) -> Result<TruncatedSeries<T>> {
        self.require_positive_slope(rho)?;
        let dv = self.taylor_at(&rho, order + 1).derivative();
        let two = T::from_int(2);
        Ok(match self.model {
            Model::VectorD0 => dv.scale(&two).pow(-T::one())?,
            Model::VectorQm => dv.scale(&T::from_int(8)).pow(T::lit(-0.5))?,
            Model::VectorField { d } => {
                let d = T::lit(d);
                dv.scale(&two).pow(d / two - T::one())?.scale(&k_of_d(d)?)
            }
            Model::Matrix => dv.pow(-T::one())?,
        })
    }
}

/// `R(ρ)` per model; see the module table.
pub fn r_from_potential<T: Real>(p: &Potential<T>, rho: T) -> Result<T> {
    p.r_value(rho)
}

/// Local approximation of the one-component determinant density,
/// `(2K(d)/d) [2V'(ρ)]^{d/2}`; equals `√(2V')` at `d = 1`.
pub fn local_determinant_density<T: Real>(p: &Potential<T>, d: T, rho: T) -> Result<T> {
    let dv = p.require_positive_slope(rho)?;
    let two = T::from_int(2);
    Ok(two * k_of_d(d)? / d * (two * dv).powf(d / two))
}

fn rational_power<T: Scalar>(num: i64, den: i64, k: usize) -> T {
    let base = T::from_ratio(num, den);
    (0..k).fold(T::one(), |acc, _| acc * base.clone())
}

/// Coefficients of `(1 − ρ·num/den)^m` for `k = 0..=m`.
fn binomial_expansion<T: Scalar>(num: i64, den: i64, m: u32) -> Vec<T> {
    (0..=m)
        .map(|k| T::from_int(binomial(m, k) as i64) * rational_power::<T>(-num, den, k as usize))
        .collect()
}

/// Critical potential of order `m`: the degree-`(m − 1)` polynomial with
/// `V(0) = 0` and `2V'(ρ)ρ − 1 = −(1 − ρ/(m − 1))^{m − 1}`. Its saddle sits
/// at `ρ_c = m − 1`. Exact over the rationals.
pub fn multicritical_potential<T: Scalar>(m: usize) -> Result<Potential<T>> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "multicritical order must be ≥ 2, got {m}"
        )));
    }
    let a = (m - 1) as u32;
    let expansion = binomial_expansion::<T>(1, a as i64, a);
    // V'(ρ) = −Σ_{k≥1} e_k ρ^{k−1} / 2, integrated term by term.
    let mut coeffs = vec![T::zero()];
    for (k, e) in expansion.into_iter().enumerate().skip(1) {
        coeffs.push(-e * T::from_ratio(1, 2 * k as i64));
    }
    Potential::new(coeffs, Model::VectorD0)
}

/// Fixed point of the linearized-logarithm flow for `m ≥ 1`:
///
/// * `VectorD0`: `V = ½ − ½(1 − ρ/m)^m`
/// * `VectorQM`: `V = (1 + m)/(8m) [1 − (1 − 4ρ/(m + 1))^m]`
/// * `Matrix`:   `V = 1 − (1 − ρ/m)^m` (i.e. `1 − (1 − μ²/2m)^m`)
pub fn linear_fixed_potential<T: Scalar>(model: Model, m: usize) -> Result<Potential<T>> {
    if m < 1 {
        return Err(Error::Domain("linear fixed point needs m ≥ 1".into()));
    }
    let mi = m as i64;
    let (expansion, prefactor) = match model {
        Model::VectorD0 => (
            binomial_expansion::<T>(1, mi, m as u32),
            T::from_ratio(1, 2),
        ),
        Model::VectorQm => (
            binomial_expansion::<T>(4, mi + 1, m as u32),
            T::from_ratio(1 + mi, 8 * mi),
        ),
        Model::Matrix => (binomial_expansion::<T>(1, mi, m as u32), T::one()),
        Model::VectorField { .. } => return Err(Error::UnsupportedModel(model.to_string())),
    };
    let coeffs = expansion
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            if k == 0 {
                T::zero()
            } else {
                -(prefactor.clone() * e)
            }
        })
        .collect();
    Potential::new(coeffs, model)
}

/// Rescaling exponent that keeps `V'(0)` at its normalized value:
/// `2V''(0)` (VectorD0), `V''(0)/2` (VectorQM), `V''(0)` (Matrix, which is
/// twice the quartic coupling). For all three this equals `−R'(0)`.
pub fn gamma_anomalous<T: Scalar>(p: &Potential<T>) -> Result<T> {
    if !p.is_normalized() {
        return Err(Error::Domain(format!(
            "potential is not normalized: V'(0) = {:?}",
            p.coeff(1)
        )));
    }
    let ddv0 = p.coeff(2) * T::from_int(2);
    match p.model() {
        Model::VectorD0 => Ok(ddv0 * T::from_int(2)),
        Model::VectorQm => Ok(ddv0 * T::from_ratio(1, 2)),
        Model::Matrix => Ok(ddv0),
        m @ Model::VectorField { .. } => Err(Error::UnsupportedModel(format!(
            "{m}: γ depends on the cutoff shift; use flow::gamma_for_potential"
        ))),
    }
}

/// Source of `R` values: a potential (analytic) or samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum RSource<T> {
    Analytic(Potential<T>),
    Sampled(GridFunction<T>),
}

/// `R(ρ)` together with the cutoff shift `ρ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RFunction<T> {
    source: RSource<T>,
    rho_0: T,
}

impl<T: Real> RFunction<T> {
    pub fn from_potential(p: Potential<T>) -> Self {
        Self {
            source: RSource::Analytic(p),
            rho_0: T::zero(),
        }
    }

    pub fn from_grid(g: GridFunction<T>) -> Self {
        Self {
            source: RSource::Sampled(g),
            rho_0: T::zero(),
        }
    }

    pub fn with_shift(mut self, rho_0: T) -> Self {
        self.rho_0 = rho_0;
        self
    }

    pub fn shift(&self) -> T {
        self.rho_0
    }

    pub fn source(&self) -> &RSource<T> {
        &self.source
    }

    pub fn potential(&self) -> Option<&Potential<T>> {
        match &self.source {
            RSource::Analytic(p) => Some(p),
            RSource::Sampled(_) => None,
        }
    }

    /// Closed interval on which `R` can be evaluated (upper end may be infinite).
    pub fn domain(&self) -> (T, T) {
        match &self.source {
            RSource::Analytic(_) => (T::zero(), T::infinity()),
            RSource::Sampled(g) => (g.grid().start(), g.grid().end()),
        }
    }

    pub fn eval(&self, rho: T) -> Result<T> {
        match &self.source {
            RSource::Analytic(p) => p.r_value(rho),
            RSource::Sampled(g) => g.interpolate(rho),
        }
    }

    pub fn derivative(&self, rho: T) -> Result<T> {
        match &self.source {
            RSource::Analytic(p) => p.r_derivative(rho),
            RSource::Sampled(g) => g.interpolate_derivative(rho),
        }
    }

    /// Exact Taylor series about `rho` when `R` comes from a potential.
    pub fn taylor(&self, rho: T, order: usize) -> Option<Result<TruncatedSeries<T>>> {
        self.potential().map(|p| p.r_series(rho, order))
    }
}

impl<T: Real> fmt::Display for Potential<T> {
    /// `model=<tag> [d=<real>] coeffs=c0,c1,...` with shortest round-trip floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model={}", self.model.tag())?;
        if let Model::VectorField { d } = self.model {
            write!(f, " d={d}")?;
        }
        f.write_str(" coeffs=")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl<T: Real> FromStr for Potential<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tag = None;
        let mut d = None;
        let mut coeffs = None;
        for token in s.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{token}`")))?;
            match key {
                "model" => tag = Some(value.to_string()),
                "d" => {
                    d = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad dimension `{value}`: {e}")))?,
                    )
                }
                "coeffs" => {
                    let parsed = value
                        .split(',')
                        .map(|c| {
                            c.trim()
                                .parse::<T>()
                                .map_err(|_| Error::Parse(format!("bad coefficient `{c}`")))
                        })
                        .collect::<Result<Vec<T>>>()?;
                    coeffs = Some(parsed);
                }
                other => return Err(Error::Parse(format!("unknown potential field `{other}`"))),
            }
        }
        let tag = tag.ok_or_else(|| Error::Parse("missing model=".into()))?;
        let model = match tag.as_str() {
            "VectorD0" => Model::VectorD0,
            "VectorQM" => Model::VectorQm,
            "Matrix" => Model::Matrix,
            "VectorField" => Model::vector_field(
                d.ok_or_else(|| Error::Parse("VectorField requires d=".into()))?,
            )?,
            other => return Err(Error::Parse(format!("unknown model `{other}`"))),
        };
        if d.is_some() && !matches!(model, Model::VectorField { .. }) {
            return Err(Error::Parse(format!(
                "d= is only valid for VectorField, not {tag}"
            )));
        }
        let coeffs = coeffs.ok_or_else(|| Error::Parse("missing coeffs=".into()))?;
        Potential::new(coeffs, model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    fn vd0(c: &[f64]) -> Potential<f64> {
        Potential::new(c.to_vec(), Model::VectorD0).unwrap()
    }

    #[test]
    fn horner_evaluation() {
        let lin = vd0(&[0.0, 0.5]);
        assert_eq!(lin.eval_v(&3.0), 1.5);
        assert_eq!(lin.eval_dv(&3.0), 0.5);
        assert_eq!(lin.eval_ddv(&3.0), 0.0);
        assert_eq!(vd0(&[0.0, 0.5, 0.25]).eval_dv(&1.0), 1.0);
        assert_eq!(vd0(&[0.0, 0.5, -1.0 / 16.0]).eval_dv(&2.0), 0.25);
    }

    #[test]
    fn r_mappings_per_model() {
        let g = vd0(&[0.0, 0.5]);
        for rho in [0.0, 1.0, 7.5] {
            assert_eq!(r_from_potential(&g, rho).unwrap(), 1.0);
        }
        let quartic = Potential::quartic(Model::VectorD0, 1.0f64).unwrap();
        assert_eq!(r_from_potential(&quartic, 1.0).unwrap(), 0.5);
        let qm = Potential::<f64>::gaussian(Model::VectorQm).unwrap();
        assert_eq!(r_from_potential(&qm, 2.0).unwrap(), 0.5);
        // matrix: V(μ) = μ²/2 + g μ⁴/4  →  V'(μ)/μ = 1 + g μ² = 1 + 2gρ
        let mat = Potential::quartic(Model::Matrix, 0.25f64).unwrap();
        assert!((r_from_potential(&mat, 2.0).unwrap() - 1.0 / 2.0).abs() < 1e-15);
        assert_eq!(r_from_potential(&mat, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn r_rejects_nonpositive_slope() {
        let p = vd0(&[0.0, 0.5, -0.25]);
        assert!(matches!(
            p.r_value(1.0),
            Err(Error::NonPositiveDerivative { .. })
        ));
        assert!(p.r_value(2.0).is_err());
    }

    #[test]
    fn k_of_d_values() {
        assert!((k_of_d(1.0f64).unwrap() - 0.5).abs() < 1e-15);
        let k3 = k_of_d(3.0f64).unwrap();
        // Γ(−1/2) = −2√π and (4π)^{3/2} = 8π^{3/2}
        assert!((k3 + 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((k_of_d(1e-9f64).unwrap() - 1.0).abs() < 1e-8);
        assert!(k_of_d(2.0f64).is_err());
        assert!(k_of_d(4.0f64).is_err());
        assert!(k_of_d(0.0f64).is_err());
    }

    #[test]
    fn determinant_density() {
        let g = vd0(&[0.0, 0.5]);
        assert!((local_determinant_density(&g, 1.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
        let quartic = vd0(&[0.0, 0.5, 0.25]);
        assert!((local_determinant_density(&quartic, 1.0, 3.0).unwrap() - 2.0).abs() < 1e-15);
        let d3 = local_determinant_density(&g, 3.0, 1.7).unwrap();
        assert!((d3 + 1.0 / (6.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn multicritical_potentials_exact() {
        let m2 = multicritical_potential::<Q>(2).unwrap();
        assert_eq!(m2.coeffs(), &[q(0, 1), q(1, 2)]);
        let m3 = multicritical_potential::<Q>(3).unwrap();
        assert_eq!(m3.coeffs(), &[q(0, 1), q(1, 2), q(-1, 16)]);
        // quartic convention: c_2 = g/4  →  g = −1/4
        assert_eq!(m3.coeff(2) * q(4, 1), q(-1, 4));
        let m4 = multicritical_potential::<Q>(4).unwrap();
        assert_eq!(m4.coeffs(), &[q(0, 1), q(1, 2), q(-1, 12), q(1, 162)]);
        assert!(multicritical_potential::<f64>(1).is_err());
    }

    #[test]
    fn multicritical_saddle_is_degenerate() {
        for m in 2..=8usize {
            let p = multicritical_potential::<f64>(m).unwrap();
            let rc = (m - 1) as f64;
            let r = p.r_value(rc).unwrap();
            let dr = p.r_derivative(rc).unwrap();
            assert!((r - rc).abs() < 1e-10, "m={m}: R = {r}");
            if m >= 3 {
                assert!((dr - 1.0).abs() < 1e-10, "m={m}: R' = {dr}");
            }
        }
    }

    #[test]
    fn linear_fixed_potentials_exact() {
        let g = linear_fixed_potential::<Q>(Model::VectorD0, 1).unwrap();
        assert_eq!(g.coeffs(), &[q(0, 1), q(1, 2)]);
        // matrix m = 2: ρ − ρ²/4 = μ²/2 − μ⁴/16
        let m2 = linear_fixed_potential::<Q>(Model::Matrix, 2).unwrap();
        assert_eq!(m2.coeffs(), &[q(0, 1), q(1, 1), q(-1, 4)]);
        let m3 = linear_fixed_potential::<Q>(Model::Matrix, 3).unwrap();
        assert_eq!(m3.coeffs(), &[q(0, 1), q(1, 1), q(-1, 3), q(1, 27)]);
        let qm = linear_fixed_potential::<Q>(Model::VectorQm, 2).unwrap();
        assert_eq!(qm.coeff(1), q(1, 2));
        assert!(linear_fixed_potential::<f64>(Model::VectorField { d: 3.0 }, 2).is_err());
    }

    #[test]
    fn gamma_from_normalization() {
        let quartic = Potential::quartic(Model::VectorD0, q(3, 5)).unwrap();
        assert_eq!(gamma_anomalous(&quartic).unwrap(), q(3, 5));
        let g = Potential::<Q>::gaussian(Model::VectorD0).unwrap();
        assert_eq!(gamma_anomalous(&g).unwrap(), q(0, 1));
        for m in 1..=8usize {
            let p = linear_fixed_potential::<Q>(Model::VectorD0, m).unwrap();
            assert_eq!(gamma_anomalous(&p).unwrap(), q(1, m as i64) - q(1, 1));
            let p = linear_fixed_potential::<Q>(Model::VectorQm, m).unwrap();
            assert_eq!(gamma_anomalous(&p).unwrap(), q(1 - m as i64, 1 + m as i64));
            let p = linear_fixed_potential::<Q>(Model::Matrix, m).unwrap();
            assert_eq!(gamma_anomalous(&p).unwrap(), q(1, m as i64) - q(1, 1));
        }
        assert!(
            gamma_anomalous(&Potential::new(vec![q(0, 1), q(1, 1)], Model::VectorD0).unwrap())
                .is_err()
        );
    }

    #[test]
    fn gamma_equals_minus_r_prime_at_zero() {
        for g in [-0.2f64, 0.3, 1.0] {
            for model in [Model::VectorD0, Model::VectorQm, Model::Matrix] {
                let p = Potential::quartic(model, g)
                    .unwrap()
                    .plus(&[0.0, 0.0, 0.0, 0.07]);
                let gamma = gamma_anomalous(&p).unwrap();
                let dr0 = p.r_derivative(0.0).unwrap();
                assert!((gamma + dr0).abs() < 1e-12, "{model} g={g}");
            }
        }
    }

    #[test]
    fn vector_d0_roundtrip_through_r() {
        let p = vd0(&[0.0, 0.5, 0.3, -0.01, 0.002]);
        let grid = UniformGrid::new(0.0, 6.0, 301).unwrap();
        for rho in grid.points() {
            let r = p.r_value(rho).unwrap();
            let back = Model::VectorD0.slope_of_r(r).unwrap();
            assert!((back - p.eval_dv(&rho)).abs() < 1e-14);
        }
    }

    #[test]
    fn r_series_matches_pointwise_derivatives() {
        let models = [
            Model::VectorD0,
            Model::VectorQm,
            Model::Matrix,
            Model::vector_field(3.0).unwrap(),
        ];
        for model in models {
            let p = Potential::new(vec![0.0f64, 0.5, 0.2, 0.03], model).unwrap();
            let s = p.r_series(0.7, 3).unwrap();
            assert!((s.coeff(0) - p.r_value(0.7).unwrap()).abs() < 1e-14);
            assert!(
                (s.coeff(1) - p.r_derivative(0.7).unwrap()).abs() < 1e-13,
                "{model}"
            );
        }
    }

    #[test]
    fn taylor_shift_is_exact() {
        let p = Potential::new(vec![q(1, 1), q(2, 1), q(3, 1)], Model::VectorD0).unwrap();
        // 1 + 2(x+1) + 3(x+1)² = 6 + 8x + 3x²
        let t = p.taylor_at(&q(1, 1), 3);
        assert_eq!(t.coeffs(), &[q(6, 1), q(8, 1), q(3, 1), q(0, 1)]);
    }

    #[test]
    fn text_format_roundtrip() {
        let p: Potential<f64> = "model=VectorD0 coeffs=0,0.5,0.25".parse().unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.5, 0.25]);
        let f = Potential::new(
            vec![0.1, 1.0 / 3.0, -2e-17],
            Model::vector_field(3.0).unwrap(),
        )
        .unwrap();
        let text = f.to_string();
        assert_eq!(
            text,
            "model=VectorField d=3 coeffs=0.1,0.3333333333333333,-0.00000000000000002"
        );
        let back: Potential<f64> = text.parse().unwrap();
        assert_eq!(back, f);
        assert!("model=VectorField coeffs=1"
            .parse::<Potential<f64>>()
            .is_err());
        assert!("model=Matrix d=1 coeffs=1"
            .parse::<Potential<f64>>()
            .is_err());
        assert!("model=Bogus coeffs=1".parse::<Potential<f64>>().is_err());
        assert!("model=VectorD0 coeffs=1,x"
            .parse::<Potential<f64>>()
            .is_err());
        assert!("model=VectorField d=2 coeffs=1"
            .parse::<Potential<f64>>()
            .is_err());
    }

    #[test]
    fn rfunction_views_agree() {
        let p = vd0(&[0.0, 0.5, 0.25]);
        let grid = UniformGrid::new(0.0, 4.0, 401).unwrap();
        let sampled = GridFunction::from_fn(grid, |x| p.r_value(x).unwrap());
        let analytic = RFunction::from_potential(p);
        let view = RFunction::from_grid(sampled).with_shift(0.0);
        for x in [0.0, 0.33, 2.5, 4.0] {
            assert!((analytic.eval(x).unwrap() - view.eval(x).unwrap()).abs() < 1e-11);
            assert!((analytic.derivative(x).unwrap() - view.derivative(x).unwrap()).abs() < 1e-6);
        }
        assert!(view.taylor(1.0, 3).is_none());
        assert_eq!(view.domain(), (0.0, 4.0));
    }
}
