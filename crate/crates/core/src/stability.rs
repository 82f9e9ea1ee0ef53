//! Perturbative beta functions, linear-approximation spectra and the
//! critical-exponent formulas.

use std::fmt;
use std::ops::Div;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::flow_rhs_v_series;
use crate::grid::{derivative4, UniformGrid};
use crate::potentials::{Model, Potential};
use crate::scalar::{Real, Scalar};
use crate::series::{Poly, TruncatedSeries};
use crate::special::binomial;
use crate::Rational;

/// Beta function `β(g)` (with `N ∂g/∂N = −β`) and its zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    pub model: Model,
    /// Exact polynomial coefficients of β in g.
    pub beta: Poly<Rational>,
    /// `(g*, β′(g*))`, Gaussian point first.
    pub fixed_points: Vec<(Rational, Rational)>,
    /// `2 + 2/β′(g*)` at the non-trivial fixed point.
    pub derived_exponent: Option<Rational>,
    /// The exactly known critical coupling, for comparison.
    pub exact_critical_coupling: Rational,
}

impl BetaReport {
    pub fn eval(&self, g: Rational) -> Rational {
        self.beta.eval(&g)
    }

    /// Rows `g,beta` on an evenly spaced sweep.
    pub fn sweep(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        let coeffs: Vec<f64> = self.beta.coeffs().iter().map(rational_to_f64).collect();
        (0..points)
            .map(|i| {
                let g = if points > 1 {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                } else {
                    lo
                };
                (g, coeffs.iter().rev().fold(0.0, |acc, c| acc * g + c))
            })
            .collect()
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Runs the coupling through the V-form flow as a series in ρ whose
/// coefficients are exact polynomials in g. γ is fixed by requiring the ρ¹
/// coefficient of `NδV` to vanish, and β is read off the ρ² coefficient.
fn derive_beta(model: Model, order: usize) -> Result<Poly<Rational>> {
    if order < 2 {
        return Err(Error::Domain(format!(
            "beta derivation needs order ≥ 2, got {order}"
        )));
    }
    type P = Poly<Rational>;
    let g = P::x();
    let q = |n, d| P::constant(Rational::new(n, d));
    // V = ρ/2 + gρ²/4 (vector) or V(μ) = μ²/2 + gμ⁴/4 stored in ρ = μ²/2 as ρ + gρ²
    let (lin, quad) = match model {
        Model::VectorD0 | Model::VectorQm => (q(1, 2), q(1, 4)),
        Model::Matrix => (q(1, 1), q(1, 1)),
        Model::VectorField { .. } => return Err(Error::UnsupportedModel(model.to_string())),
    };
    let v = TruncatedSeries::with_order(vec![P::zero(), lin, g * quad.clone()], order + 1);
    let c1_at = |gamma: &P| -> Result<P> { Ok(flow_rhs_v_series(&v, model, gamma)?.coeff(1)) };
    let c1_0 = c1_at(&P::zero())?;
    let slope = c1_at(&P::constant(Rational::new(1, 1)))? - c1_0.clone();
    let slope = match slope.degree() {
        Some(0) => slope.coeff(0),
        _ => {
            return Err(Error::Solver(
                "γ does not enter the ρ¹ coefficient linearly".into(),
            ))
        }
    };
    let gamma = c1_0 * P::constant(-slope.recip());
    let delta = flow_rhs_v_series(&v, model, &gamma)?;
    // the ρ² coefficient of V is quad·g, so dg/dτ = c_2(NδV)/quad = −β
    Ok(delta.coeff(2) * P::constant(-quad.coeff(0).recip()))
}

fn poly_derivative_at(p: &Poly<Rational>, x: &Rational) -> Rational {
    p.derivative().eval(x)
}

/// Zeros of a beta polynomial of degree ≤ 2 (exact).
fn beta_zeros(beta: &Poly<Rational>) -> Result<Vec<Rational>> {
    if !beta.coeff(0).is_zero() {
        return Err(Error::Solver("β(0) ≠ 0".into()));
    }
    match beta.degree() {
        None => Err(Error::Solver("β vanishes identically".into())),
        Some(1) => Ok(vec![Rational::zero()]),
        Some(2) => Ok(vec![Rational::zero(), -beta.coeff(1) / beta.coeff(2)]),
        Some(d) => Err(Error::Solver(format!("β of degree {d} not solved exactly"))),
    }
}

fn beta_report(model: Model, order: usize, exact: Rational) -> Result<BetaReport> {
    let beta = derive_beta(model, order)?;
    let fixed_points: Vec<(Rational, Rational)> = beta_zeros(&beta)?
        .into_iter()
        .map(|g| {
            let d = poly_derivative_at(&beta, &g);
            (g, d)
        })
        .collect();
    let derived_exponent = fixed_points
        .iter()
        .rev()
        .find(|(g, _)| !g.is_zero())
        .map(|(_, d)| string_susceptibility(*d))
        .transpose()?;
    Ok(BetaReport {
        model,
        beta,
        fixed_points,
        derived_exponent,
        exact_critical_coupling: exact,
    })
}

/// Vector-model β from `V = ρ/2 + gρ²/4`: `g + 3g²`, zeros `0` and `−1/3`
/// with `β′(−1/3) = −1`. Exact critical coupling: `−1/4`.
pub fn beta_vector(order: usize) -> Result<BetaReport> {
    beta_report(Model::VectorD0, order, Rational::new(-1, 4))
}

/// Matrix-model β from `V = μ²/2 + gμ⁴/4`: `g + 6g²`, zeros `0` and `−1/6`
/// with `β′(−1/6) = −1`. Exact critical coupling: `−1/12`.
pub fn beta_matrix(order: usize) -> Result<BetaReport> {
    beta_report(Model::Matrix, order, Rational::new(-1, 12))
}

/// String susceptibility exponent `γ = 2 + 2/β′(g*)`.
pub fn string_susceptibility<T>(beta_prime: T) -> Result<T>
where
    T: Scalar + Div<Output = T>,
{
    if beta_prime.is_zero() {
        return Err(Error::Domain("β′(g*) = 0: exponent undefined".into()));
    }
    let two = T::from_int(2);
    Ok(two.clone() + two / beta_prime)
}

/// Which family a linear-approximation spectrum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumModel {
    Vector,
    Matrix,
    Qm,
}

impl SpectrumModel {
    pub fn from_model(m: Model) -> Result<Self> {
        match m {
            Model::VectorD0 => Ok(Self::Vector),
            Model::Matrix => Ok(Self::Matrix),
            Model::VectorQm => Ok(Self::Qm),
            Model::VectorField { .. } => Err(Error::UnsupportedModel(m.to_string())),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Vector => "vector",
            Self::Matrix => "matrix",
            Self::Qm => "qm",
        }
    }
}

impl fmt::Display for SpectrumModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub model: SpectrumModel,
    pub m: usize,
    /// `(p or q, κ)`, sorted by decreasing κ.
    pub eigenvalues: Vec<(usize, Rational)>,
    /// Removed values of κ with the reason.
    pub excluded: Vec<(Rational, &'static str)>,
    pub positive_count: usize,
}

/// Linear-approximation eigenvalues around the order-`m` fixed point.
///
/// Vector and matrix: `κ_p = 1 − p/m` for `p = 0, 1, …` with `κ = 0` and
/// `κ = 1/m` removed (no regular eigenvector). QM: `κ_q = 4(m−q)/(m+1)` for
/// `q = 0, 1, …` with `κ = 0` removed. `count` eigenvalues are returned.
pub fn spectrum(model: Model, m: usize, count: usize) -> Result<SpectrumReport> {
    let model = SpectrumModel::from_model(model)?;
    if m < 1 {
        return Err(Error::Domain("spectrum needs m ≥ 1".into()));
    }
    let mi = m as i64;
    let kappa = |j: i64| match model {
        SpectrumModel::Qm => Rational::new(4 * (mi - j), mi + 1),
        _ => Rational::new(mi - j, mi),
    };
    let excluded: Vec<(Rational, &'static str)> = match model {
        SpectrumModel::Qm => vec![(Rational::zero(), "marginal: removed by convention")],
        _ => vec![
            (
                Rational::zero(),
                "no regular eigenvector (special solution diverges)",
            ),
            (
                Rational::new(1, mi),
                "no regular eigenvector (special solution diverges)",
            ),
        ],
    };
    let mut eigenvalues = Vec::with_capacity(count);
    let mut j = 0i64;
    while eigenvalues.len() < count {
        let k = kappa(j);
        if !excluded.iter().any(|(e, _)| *e == k) {
            eigenvalues.push((j as usize, k));
        }
        j += 1;
    }
    // positive eigenvalues occur only for j < m, so the count is exact
    let positive_count = (0..=mi)
        .map(kappa)
        .filter(|k| k.is_positive() && !excluded.iter().any(|(e, _)| e == k))
        .count();
    Ok(SpectrumReport {
        model,
        m,
        eigenvalues,
        excluded,
        positive_count,
    })
}

/// Closed-form eigenvector `h = Σ c_i u^{e_i}` with `u = 1 − ρ/m` (vector) or
/// `u = 1 − μ²/2m` (matrix; the same as `1 − ρ/m` with `ρ = μ²/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvector {
    pub model: SpectrumModel,
    pub m: usize,
    pub kappa: f64,
    /// `δγ` (vector, chosen `2/m`) or `δg` (matrix, chosen `1/(2m)`).
    pub source_strength: f64,
    /// Special solution `h_0`: `(coefficient, integer exponent)`.
    pub special: Vec<(f64, i64)>,
    /// Homogeneous solution `h_1 = c·u^{m(1−κ)}`, with `c` fixed by
    /// `h′(0) = 0` (equivalently `h(0) = 0`).
    pub homogeneous: (f64, f64),
    /// `h` is regular (a polynomial) at `u = 0`.
    pub regular: bool,
}

impl Eigenvector {
    pub fn eval_u(&self, u: f64) -> f64 {
        let special: f64 = self
            .special
            .iter()
            .map(|(c, e)| c * u.powi(*e as i32))
            .sum();
        special + self.homogeneous.0 * u.powf(self.homogeneous.1)
    }

    /// `h(ρ)` with `u = 1 − ρ/m`.
    pub fn eval_rho(&self, rho: f64) -> f64 {
        self.eval_u(1.0 - rho / self.m as f64)
    }

    /// Coefficients in ρ (`ρ = μ²/2` for the matrix), when `h` is regular.
    pub fn rho_coeffs(&self) -> Option<Vec<f64>> {
        if !self.regular {
            return None;
        }
        let hom_exp = self.homogeneous.1.round() as i64;
        let mut terms = self.special.clone();
        terms.push((self.homogeneous.0, hom_exp));
        let degree = terms.iter().map(|(_, e)| *e).max().unwrap_or(0) as usize;
        let mut out = vec![0.0; degree + 1];
        let inv_m = 1.0 / self.m as f64;
        for (c, e) in terms {
            for k in 0..=e as u32 {
                out[k as usize] += c * binomial(e as u32, k) as f64 * (-inv_m).powi(k as i32);
            }
        }
        Some(out)
    }

    /// The source term `½δγ ρ u^{m−1}` (vector) / `δg μ² u^{m−1}` (matrix) at ρ.
    pub fn source_rho(&self, rho: f64) -> f64 {
        let u = 1.0 - rho / self.m as f64;
        let factor = match self.model {
            SpectrumModel::Matrix => 2.0 * self.source_strength,
            _ => 0.5 * self.source_strength,
        };
        factor * rho * u.powi(self.m as i32 - 1)
    }
}

/// Linear-approximation eigenvector for vector or matrix models.
///
/// With `δγ = 2/m`, `h_0 = u^m/κ + m u^{m−1}/(1 − mκ)` and
/// `h_1 = −u^{m(1−κ)}/(κ(1 − mκ))`; the matrix uses `δg = 1/(2m)`, giving
/// the same coefficients. Regular iff `m(1 − κ)` is a nonnegative integer.
pub fn eigenvector(model: Model, m: usize, kappa: f64) -> Result<Eigenvector> {
    let model = SpectrumModel::from_model(model)?;
    if model == SpectrumModel::Qm {
        return Err(Error::UnsupportedModel("VectorQM eigenvectors".into()));
    }
    if m < 1 {
        return Err(Error::Domain("eigenvector needs m ≥ 1".into()));
    }
    let mf = m as f64;
    if kappa == 0.0 || (mf * kappa - 1.0).abs() < 1e-14 {
        return Err(Error::Domain(format!(
            "κ = {kappa} is excluded (no regular eigenvector)"
        )));
    }
    let exponent = mf * (1.0 - kappa);
    let rounded = exponent.round();
    let regular = (exponent - rounded).abs() < 1e-12 && rounded >= 0.0;
    let source_strength = match model {
        SpectrumModel::Matrix => 1.0 / (2.0 * mf),
        _ => 2.0 / mf,
    };
    Ok(Eigenvector {
        model,
        m,
        kappa,
        source_strength,
        special: vec![
            (1.0 / kappa, m as i64),
            (mf / (1.0 - mf * kappa), m as i64 - 1),
        ],
        homogeneous: (
            -1.0 / (kappa * (1.0 - mf * kappa)),
            if regular { rounded } else { exponent },
        ),
        regular,
    })
}

/// Max residual of `Ωh − κh − source` on `ρ ∈ [0, m]`, with
/// `Ω = 1 + (1 − ρ/m) d/dρ` applied by fourth-order differences.
pub fn omega_residual(h: &Eigenvector, points: usize) -> Result<f64> {
    let m = h.m as f64;
    let grid = UniformGrid::new(0.0, m, points)?;
    let values: Vec<f64> = grid.points().into_iter().map(|x| h.eval_rho(x)).collect();
    let dh = derivative4(&values, grid.spacing());
    Ok(grid
        .points()
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let omega = values[i] + (1.0 - x / m) * dh[i];
            (omega - h.kappa * values[i] - h.source_rho(x)).abs()
        })
        .fold(0.0, f64::max))
}

/// QM scaling exponents `((m−2)/(m+2), −2(m−q)/(m+2))` for `α` and `v_q`.
pub fn scaling_exponents_qm(m: usize, q: usize) -> Result<(Rational, Rational)> {
    if m < 3 || q < 1 || q > m {
        return Err(Error::Domain(format!(
            "need m ≥ 3 and 1 ≤ q ≤ m, got m = {m}, q = {q}"
        )));
    }
    let (mi, qi) = (m as i64, q as i64);
    Ok((
        Rational::new(mi - 2, mi + 2),
        Rational::new(-2 * (mi - qi), mi + 2),
    ))
}

/// Matrix double-scaling data: `γ = −1/m` and the exponent `(2 − γ)/2` of
/// `(g − g_c)` in the fixed combination `N (g − g_c)^{(2−γ)/2}`.
pub fn double_scaling_matrix(m: usize) -> Result<(Rational, Rational)> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "double scaling needs m ≥ 2, got {m}"
        )));
    }
    let gamma = Rational::new(-1, m as i64);
    Ok((
        gamma,
        (Rational::from_integer(2) - gamma) / Rational::from_integer(2),
    ))
}

/// Coefficients of a matrix potential in powers of `μ²`: `c_k / 2^k`.
pub fn matrix_mu_coeffs<T: Scalar>(p: &Potential<T>) -> Result<Vec<T>> {
    if p.model() != Model::Matrix {
        return Err(Error::UnsupportedModel(p.model().to_string()));
    }
    let mut scale = T::one();
    Ok(p.coeffs()
        .iter()
        .map(|c| {
            let out = c.clone() * scale.clone();
            scale = scale.clone() * T::from_ratio(1, 2);
            out
        })
        .collect())
}

/// The κ = 1 direction of the `m = 2` vector fixed point as potential
/// coefficients (`h = ρ²/4`).
pub fn relevant_direction<T: Real>(m: usize) -> Result<Vec<T>> {
    let h = eigenvector(Model::VectorD0, m, 1.0)?;
    h.rho_coeffs()
        .map(|c| c.into_iter().map(T::lit).collect())
        .ok_or_else(|| Error::Domain("κ = 1 eigenvector is not polynomial".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::linear_fixed_potential;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn vector_beta() {
        let r = beta_vector(2).unwrap();
        assert_eq!(r.beta, Poly::new(vec![q(0, 1), q(1, 1), q(3, 1)]));
        assert_eq!(
            r.fixed_points,
            vec![(q(0, 1), q(1, 1)), (q(-1, 3), q(-1, 1))]
        );
        assert_eq!(r.eval(q(0, 1)), q(0, 1));
        // truncation order beyond ρ² does not change the result
        assert_eq!(beta_vector(5).unwrap().beta, r.beta);
        assert!(beta_vector(1).is_err());
    }

    #[test]
    fn matrix_beta_and_string_susceptibility() {
        let r = beta_matrix(2).unwrap();
        assert_eq!(r.beta, Poly::new(vec![q(0, 1), q(1, 1), q(6, 1)]));
        assert_eq!(r.fixed_points[1], (q(-1, 6), q(-1, 1)));
        assert_eq!(r.derived_exponent, Some(q(0, 1)));
        assert_eq!(r.exact_critical_coupling, q(-1, 12));
    }

    #[test]
    fn susceptibility_formula() {
        assert_eq!(string_susceptibility(q(-1, 1)).unwrap(), q(0, 1));
        assert_eq!(string_susceptibility(-4.0f64).unwrap(), 1.5);
        for m in 2..=8i64 {
            assert_eq!(string_susceptibility(q(-2, m)).unwrap(), q(2 - m, 1));
        }
        assert!(string_susceptibility(q(0, 1)).is_err());
    }

    #[test]
    fn vector_spectrum_lists() {
        let s = spectrum(Model::VectorD0, 2, 4).unwrap();
        let ks: Vec<Rational> = s.eigenvalues.iter().map(|e| e.1).collect();
        assert_eq!(ks, vec![q(1, 1), q(-1, 2), q(-1, 1), q(-3, 2)]);
        assert_eq!(s.positive_count, 1);
        let s1 = spectrum(Model::VectorD0, 1, 5).unwrap();
        assert!(s1.eigenvalues.iter().all(|e| e.1 < q(0, 1)));
        for m in 1..=8 {
            for model in [Model::VectorD0, Model::Matrix] {
                let s = spectrum(model, m, 3 * m + 3).unwrap();
                assert_eq!(s.positive_count, m - 1);
                assert!(s.eigenvalues.windows(2).all(|w| w[0].1 > w[1].1));
                assert!(s.excluded.iter().any(|e| e.0 == q(0, 1)));
                assert!(s.excluded.iter().any(|e| e.0 == q(1, m as i64)));
            }
        }
    }

    #[test]
    fn qm_spectrum() {
        let s = spectrum(Model::VectorQm, 2, 3).unwrap();
        assert_eq!(s.eigenvalues[1], (1, q(4, 3)));
        assert!(s.eigenvalues.iter().all(|e| e.1 != q(0, 1)));
        assert!(spectrum(Model::vector_field(3.0).unwrap(), 2, 3).is_err());
    }

    #[test]
    fn eigenvector_regularity() {
        let h = eigenvector(Model::VectorD0, 2, 1.0).unwrap();
        assert!(h.regular);
        assert_eq!(h.homogeneous.1, 0.0);
        let c = h.rho_coeffs().unwrap();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15 && (c[2] - 0.25).abs() < 1e-15);
        let bad = eigenvector(Model::VectorD0, 3, 1.0 - 1.0 / std::f64::consts::PI).unwrap();
        assert!(!bad.regular);
        assert!(bad.rho_coeffs().is_none());
        let mat = eigenvector(Model::Matrix, 2, 1.0).unwrap();
        assert!(mat.regular);
        assert!(eigenvector(Model::VectorD0, 3, 1.0 / 3.0).is_err());
        assert!(eigenvector(Model::VectorD0, 3, 0.0).is_err());
    }

    #[test]
    fn eigenvectors_satisfy_h_prime_zero_and_omega_equation() {
        for m in 2..=3usize {
            let s = spectrum(Model::VectorD0, m, 2 * m + 2).unwrap();
            for (_, k) in s.eigenvalues {
                let h = eigenvector(Model::VectorD0, m, rational_to_f64(&k)).unwrap();
                if !h.regular {
                    continue;
                }
                let c = h.rho_coeffs().unwrap();
                assert!(c[1].abs() < 1e-12, "h′(0) = {}", c[1]);
                let res = omega_residual(&h, 1025).unwrap();
                assert!(res < 1e-9, "m={m} κ={k} res={res}");
            }
        }
    }

    #[test]
    fn exponent_formulas() {
        assert_eq!(scaling_exponents_qm(3, 1).unwrap(), (q(1, 5), q(-4, 5)));
        assert_eq!(scaling_exponents_qm(5, 5).unwrap().1, q(0, 1));
        assert!(scaling_exponents_qm(2, 1).is_err());
        assert_eq!(double_scaling_matrix(2).unwrap(), (q(-1, 2), q(5, 4)));
        assert_eq!(double_scaling_matrix(3).unwrap(), (q(-1, 3), q(7, 6)));
        let (g, e) = double_scaling_matrix(1000).unwrap();
        assert!(rational_to_f64(&g).abs() < 1e-2 && (rational_to_f64(&e) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn matrix_linear_potentials_in_mu() {
        let p2 = linear_fixed_potential::<Rational>(Model::Matrix, 2).unwrap();
        assert_eq!(
            matrix_mu_coeffs(&p2).unwrap(),
            vec![q(0, 1), q(1, 2), q(-1, 16)]
        );
        let p3 = linear_fixed_potential::<Rational>(Model::Matrix, 3).unwrap();
        assert_eq!(
            matrix_mu_coeffs(&p3).unwrap(),
            vec![q(0, 1), q(1, 2), q(-1, 12), q(1, 216)]
        );
    }
}
