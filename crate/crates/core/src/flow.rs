//! The universal RG flow `∂_τ R = γR − (1+γ)ρR′ + (R + ρ_0)R′` (τ = ln λ)
//! and its model-specific V-form counterparts.
//!
//! The grid integrator uses classical RK4 in τ with a flux-limited
//! discretization of the advection term: the fourth-order central stencil
//! where the data is smooth, first-order upwinding (by the sign of the
//! characteristic speed `c = (1+γ)ρ − R − ρ_0`) where the ratio of
//! successive differences signals a kink or extremum. `R(0)` is pinned and γ
//! is chosen so that the pinned boundary is exactly stationary.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{derivative4, forward_derivative4, GridFunction, UniformGrid};
use crate::potentials::{k_of_d, Model, Potential, RFunction};
use crate::saddle::solve_saddle;
use crate::scalar::{Real, Scalar};
use crate::series::TruncatedSeries;

/// How γ is determined at each right-hand-side evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule<T> {
    /// `γ = −(R(0) + ρ_0) R′(0) / R(0)`, which keeps `R(0)` fixed.
    Pinned,
    /// A constant γ and no pinning (e.g. the trivial solution `R = ρ`).
    Fixed(T),
}

/// Which equation is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    /// `γR − (1+γ)ρR′ + (R + ρ_0)R′`.
    Full,
    /// Linearized logarithm, `ln 2V′ ↦ 2V′ − 1`: `γR + [1 + ρ_0 − (1+γ)ρ]R′`.
    Linear,
}

/// Model selector for the V-form right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowModel<T> {
    VectorD0,
    VectorQm,
    VectorField {
        d: f64,
    },
    Matrix,
    /// Matrix quantum mechanics in the local approximation, written in the
    /// eigenvalue variable μ with `V′(μ) = 1/(2R²)`. Its rescaling exponent η
    /// is supplied by the caller.
    MatrixQm {
        eta: T,
    },
}

impl<T> FlowModel<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            FlowModel::VectorD0 => "VectorD0",
            FlowModel::VectorQm => "VectorQM",
            FlowModel::VectorField { .. } => "VectorField",
            FlowModel::Matrix => "Matrix",
            FlowModel::MatrixQm { .. } => "MatrixQM",
        }
    }
}

impl<T> From<Model> for FlowModel<T> {
    fn from(m: Model) -> Self {
        match m {
            Model::VectorD0 => FlowModel::VectorD0,
            Model::VectorQm => FlowModel::VectorQm,
            Model::VectorField { d } => FlowModel::VectorField { d },
            Model::Matrix => FlowModel::Matrix,
        }
    }
}

/// `R` on a uniform ρ-grid at RG time τ.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    grid: UniformGrid<T>,
    r: Vec<T>,
    tau: T,
    gamma: T,
    rho_c: Option<T>,
    rho_0: T,
    rule: GammaRule<T>,
    equation: Equation,
}

impl<T: Real> FlowState<T> {
    /// A pinned, full-equation state. The grid must start at `ρ = 0` and all
    /// values must be positive.
    pub fn new(grid: UniformGrid<T>, r: Vec<T>) -> Result<Self> {
        if grid.start() != T::zero() {
            return Err(Error::Domain("flow grid must start at ρ = 0".into()));
        }
        if r.len() != grid.len() {
            return Err(Error::Domain(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                r.len()
            )));
        }
        let mut state = Self {
            grid,
            r,
            tau: T::zero(),
            gamma: T::zero(),
            rho_c: None,
            rho_0: T::zero(),
            rule: GammaRule::Pinned,
            equation: Equation::Full,
        };
        state.check_positive()?;
        state.gamma = state.gamma_of(&state.r);
        Ok(state)
    }

    pub fn from_fn(grid: UniformGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let r = grid.points().into_iter().map(f).collect();
        Self::new(grid, r)
    }

    /// Samples `R` of a potential on `[0, rho_max]`.
    pub fn from_potential(p: &Potential<T>, rho_max: T, n: usize) -> Result<Self> {
        let grid = UniformGrid::new(T::zero(), rho_max, n)?;
        let r = grid
            .points()
            .into_iter()
            .map(|x| p.r_value(x))
            .collect::<Result<_>>()?;
        Self::new(grid, r)
    }

    pub fn with_shift(mut self, rho_0: T) -> Self {
        self.rho_0 = rho_0;
        self.gamma = self.gamma_of(&self.r);
        self
    }

    /// Constant-γ, unpinned state. Non-negative values are allowed (used for
    /// the trivial solution `R = ρ`, which vanishes at the origin).
    pub fn with_fixed_gamma(mut self, gamma: T) -> Self {
        self.rule = GammaRule::Fixed(gamma);
        self.gamma = gamma;
        self
    }

    pub fn with_equation(mut self, equation: Equation) -> Self {
        self.equation = equation;
        self.gamma = self.gamma_of(&self.r);
        self
    }

    /// An unpinned state that may touch zero at the origin.
    pub fn unpinned(grid: UniformGrid<T>, r: Vec<T>, gamma: T) -> Result<Self> {
        if r.len() != grid.len() || grid.start() != T::zero() {
            return Err(Error::Domain(
                "unpinned state needs a grid from 0 and matching values".into(),
            ));
        }
        Ok(Self {
            grid,
            r,
            tau: T::zero(),
            gamma,
            rho_c: None,
            rho_0: T::zero(),
            rule: GammaRule::Fixed(gamma),
            equation: Equation::Full,
        })
    }

    pub fn grid(&self) -> &UniformGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.r
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn rho_c(&self) -> Option<T> {
        self.rho_c
    }

    pub fn rho_0(&self) -> T {
        self.rho_0
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn to_grid_function(&self) -> GridFunction<T> {
        GridFunction::new(self.grid.clone(), self.r.clone()).expect("lengths agree")
    }

    /// Locates the first root of `R(ρ) = ρ − ρ_0` on the grid and stores it.
    pub fn locate_saddle(&mut self) -> Result<Option<T>> {
        let rf = RFunction::from_grid(self.to_grid_function());
        let report = solve_saddle(
            &rf,
            self.rho_0,
            (self.grid.start(), self.grid.end()),
            self.grid.len() - 1,
        )?;
        self.rho_c = report.roots.first().map(|r| r.rho);
        Ok(self.rho_c)
    }

    fn check_positive(&self) -> Result<()> {
        let start = usize::from(matches!(self.rule, GammaRule::Fixed(_)));
        for (i, v) in self.r.iter().enumerate().skip(start) {
            if !(*v > T::zero()) {
                return Err(Error::Positivity {
                    tau: self.tau.to_f64_lossy(),
                    rho: self.grid.point(i).to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// Coefficient `a(ρ)` in front of `R′` coming from the determinant term.
    fn advection_source(&self, r: T) -> T {
        match self.equation {
            Equation::Full => r + self.rho_0,
            Equation::Linear => T::one() + self.rho_0,
        }
    }

    fn gamma_of(&self, r: &[T]) -> T {
        match self.rule {
            GammaRule::Fixed(g) => g,
            GammaRule::Pinned => {
                let d0 = forward_derivative4(r, self.grid.spacing());
                -self.advection_source(r[0]) * d0 / r[0]
            }
        }
    }

    /// Right-hand side with the fourth-order stencils everywhere.
    fn rhs_central(&self, r: &[T]) -> (T, Vec<T>) {
        let gamma = self.gamma_of(r);
        let dr = derivative4(r, self.grid.spacing());
        let rhs = (0..r.len())
            .map(|i| {
                let rho = self.grid.point(i);
                gamma * r[i] + (self.advection_source(r[i]) - (T::one() + gamma) * rho) * dr[i]
            })
            .collect();
        (gamma, rhs)
    }

    /// Right-hand side with the flux-limited advection derivative.
    fn rhs_limited(&self, r: &[T]) -> (T, Vec<T>) {
        let gamma = self.gamma_of(r);
        let h = self.grid.spacing();
        let central = derivative4(r, h);
        let n = r.len();
        let mut rhs = vec![T::zero(); n];
        for i in 0..n {
            let rho = self.grid.point(i);
            let speed = (T::one() + gamma) * rho - self.advection_source(r[i]);
            let dr = if (2..n - 2).contains(&i) {
                let back = r[i] - r[i - 1];
                let fwd = r[i + 1] - r[i];
                let (up, down) = if speed > T::zero() {
                    (back, fwd)
                } else {
                    (fwd, back)
                };
                let phi = limiter(up, down, r[i]);
                if phi == T::one() {
                    central[i]
                } else {
                    phi * central[i] + (T::one() - phi) * up / h
                }
            } else {
                central[i]
            };
            rhs[i] = gamma * r[i] - speed * dr;
        }
        (gamma, rhs)
    }

    fn is_pinned(&self) -> bool {
        matches!(self.rule, GammaRule::Pinned)
    }

    /// Boundary treatment after every stage: re-pin `R(0)`, and at an inflow
    /// right end extrapolate `S = R − ρ` linearly.
    fn apply_boundaries(&self, r: &mut [T], pinned_value: T, gamma: T) {
        if self.is_pinned() {
            r[0] = pinned_value;
        }
        let n = r.len();
        let rho_n = self.grid.end();
        let speed = (T::one() + gamma) * rho_n - self.advection_source(r[n - 1]);
        if speed < T::zero() {
            let h = self.grid.spacing();
            let s1 = r[n - 2] - (rho_n - h);
            let s2 = r[n - 3] - (rho_n - h - h);
            r[n - 1] = rho_n + T::from_int(2) * s1 - s2;
        }
    }

    /// Largest `|c(ρ)|` on the grid.
    fn max_speed(&self) -> T {
        let gamma = self.gamma_of(&self.r);
        self.r.iter().enumerate().fold(T::zero(), |m, (i, &v)| {
            let c = (T::one() + gamma) * self.grid.point(i) - self.advection_source(v);
            m.max(c.abs())
        })
    }

    /// One RK4 step of size `dt` (no CFL control).
    fn rk4_step(&mut self, dt: T) -> Result<()> {
        let pin = self.r[0];
        let half = dt / T::from_int(2);
        let axpy = |base: &[T], k: &[T], s: T| -> Vec<T> {
            base.iter().zip(k).map(|(b, k)| *b + s * *k).collect()
        };
        let (g1, k1) = self.rhs_limited(&self.r);
        let mut r2 = axpy(&self.r, &k1, half);
        self.apply_boundaries(&mut r2, pin, g1);
        let (g2, k2) = self.rhs_limited(&r2);
        let mut r3 = axpy(&self.r, &k2, half);
        self.apply_boundaries(&mut r3, pin, g2);
        let (g3, k3) = self.rhs_limited(&r3);
        let mut r4 = axpy(&self.r, &k3, dt);
        self.apply_boundaries(&mut r4, pin, g3);
        let (g4, k4) = self.rhs_limited(&r4);
        let six = T::from_int(6);
        let mut next: Vec<T> = (0..self.r.len())
            .map(|i| self.r[i] + dt / six * (k1[i] + T::from_int(2) * (k2[i] + k3[i]) + k4[i]))
            .collect();
        self.apply_boundaries(&mut next, pin, g4);
        self.r = next;
        self.tau = self.tau + dt;
        self.gamma = self.gamma_of(&self.r);
        self.check_positive()
    }

    /// Advances by `dtau` with internal sub-steps so that
    /// `dt ≤ 0.5 Δρ / max|c|` (recomputed every sub-step).
    fn advance(&mut self, dtau: T) -> Result<()> {
        let target = self.tau + dtau;
        let mut remaining = dtau;
        while remaining > T::zero() {
            let speed = self.max_speed();
            let limit = if speed > T::zero() {
                T::lit(0.5) * self.grid.spacing() / speed
            } else {
                remaining
            };
            let k = (remaining / limit).ceil().max(T::one());
            let dt = remaining / k;
            self.rk4_step(dt)?;
            remaining = remaining - dt;
            if remaining <= T::epsilon() * (T::one() + dtau.abs()) * T::from_int(16) {
                break;
            }
        }
        self.tau = target;
        Ok(())
    }
}

/// Universal right-hand side `∂_τ R` with fourth-order central differences
/// (one-sided at the ends) and γ from the state's rule.
pub fn flow_rhs_r<T: Real>(state: &FlowState<T>) -> Vec<T> {
    state.rhs_central(&state.r).1
}

/// γ implied by the state's rule for its current values.
pub fn flow_gamma<T: Real>(state: &FlowState<T>) -> T {
    state.gamma_of(&state.r)
}

/// Smooth-region indicator from the ratio of upwind to downwind differences:
/// 1 when `1/2 ≤ ratio ≤ 2`, falling to 0 at extrema.
fn limiter<T: Real>(up: T, down: T, scale: T) -> T {
    let tiny = T::lit(1e-13) * (T::one() + scale.abs());
    if up.abs() <= tiny && down.abs() <= tiny {
        return T::one();
    }
    if down == T::zero() || up * down <= T::zero() {
        return T::zero();
    }
    let ratio = up / down;
    let three = T::from_int(3);
    (three * ratio / (T::one() + ratio))
        .min(three / (T::one() + ratio))
        .min(T::one())
        .max(T::zero())
}

/// Advances `state` by `steps` steps of size `dtau`.
pub fn evolve<T: Real>(state: &FlowState<T>, dtau: T, steps: usize) -> Result<FlowState<T>> {
    state.check_positive()?;
    let mut s = state.clone();
    for _ in 0..steps {
        s.advance(dtau)?;
    }
    Ok(s)
}

/// As [`evolve`], returning the initial state and every step.
pub fn evolve_history<T: Real>(
    state: &FlowState<T>,
    dtau: T,
    steps: usize,
) -> Result<Vec<FlowState<T>>> {
    state.check_positive()?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = state.clone();
    out.push(s.clone());
    for _ in 0..steps {
        s.advance(dtau)?;
        out.push(s.clone());
    }
    Ok(out)
}

/// One row of the saddle track: `tau,gamma,rho_c,residual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow<T> {
    pub tau: T,
    pub gamma: T,
    pub rho_c: Option<T>,
    /// `|Δ ln ρ_c / Δτ − γ̄|` over the interval ending at this row.
    pub residual: Option<T>,
}

impl<T: Real> TrackRow<T> {
    pub const CSV_HEADER: &'static str = "tau,gamma,rho_c,residual";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{}",
            self.tau,
            self.gamma,
            opt(self.rho_c),
            opt(self.residual)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleTrack<T> {
    pub rows: Vec<TrackRow<T>>,
    /// Max drift-law residual over intervals where both ends have a saddle.
    pub max_residual: Option<T>,
    /// Number of states without a finite saddle on the grid.
    pub missing: usize,
}

/// Saddle location per state and the drift law `d ln ρ_c/dτ = γ`, checked
/// with midpoint differences (second order in the step).
pub fn track_saddle<T: Real>(history: &[FlowState<T>]) -> Result<SaddleTrack<T>> {
    let mut rows: Vec<TrackRow<T>> = Vec::with_capacity(history.len());
    let mut max_residual: Option<T> = None;
    for state in history {
        let mut s = state.clone();
        let rho_c = s.locate_saddle()?.filter(|r| *r > T::zero());
        let residual = match (rows.last(), rho_c) {
            (Some(prev), Some(rc)) => prev.rho_c.map(|prc| {
                let dt = s.tau - prev.tau;
                let slope = (rc.ln() - prc.ln()) / dt;
                (slope - (s.gamma + prev.gamma) / T::from_int(2)).abs()
            }),
            _ => None,
        };
        if let Some(r) = residual {
            max_residual = Some(max_residual.map_or(r, |m: T| m.max(r)));
        }
        rows.push(TrackRow {
            tau: s.tau,
            gamma: s.gamma,
            rho_c,
            residual,
        });
    }
    let missing = rows.iter().filter(|r| r.rho_c.is_none()).count();
    Ok(SaddleTrack {
        rows,
        max_residual,
        missing,
    })
}

/// Full-grid snapshot rows `tau,rho,R`.
pub fn snapshot_rows<T: Real>(state: &FlowState<T>) -> Vec<String> {
    state
        .grid
        .points()
        .into_iter()
        .zip(&state.r)
        .map(|(x, r)| format!("{},{},{}", state.tau, x, r))
        .collect()
}

/// The V-form flow evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VFlow<T> {
    /// γ (η for matrix QM) fixed by the normalization condition.
    pub gamma: T,
    /// Abscissae: ρ, or μ for matrix QM.
    pub points: Vec<T>,
    /// `N δV` at each abscissa.
    pub values: Vec<T>,
}

impl<T> VFlow<T> {
    /// The matrix rescaling factor `g + ½ = (1 + γ)/2`.
    pub fn matrix_rescaling(&self) -> T
    where
        T: Real,
    {
        (T::one() + self.gamma) / T::from_int(2)
    }
}

/// `R` as a function of the model's slope and its derivative `dR/dV′`, with
/// the matrix-QM convention `V′(μ) = 1/(2R²)`.
fn r_and_jacobian<T: Real>(model: FlowModel<T>, dv: T) -> Result<(T, T)> {
    match model {
        FlowModel::MatrixQm { .. } => {
            if !(dv > T::zero()) {
                return Err(Error::NonPositiveDerivative {
                    rho: f64::NAN,
                    dv: dv.to_f64_lossy(),
                });
            }
            let r = (T::from_int(2) * dv).sqrt().recip();
            Ok((r, -r * r * r))
        }
        FlowModel::VectorD0 => jac(Model::VectorD0, dv),
        FlowModel::VectorQm => jac(Model::VectorQm, dv),
        FlowModel::VectorField { d } => jac(Model::vector_field(d)?, dv),
        FlowModel::Matrix => jac(Model::Matrix, dv),
    }
}

fn jac<T: Real>(m: Model, dv: T) -> Result<(T, T)> {
    let r = m.r_of_slope(dv)?;
    Ok((r, m.dr_dslope(r, dv)))
}

/// γ that keeps `δR(0) = 0` (equivalently `δV′(0) = 0`) for a potential.
pub fn gamma_for_potential<T: Real>(p: &Potential<T>, rho_0: T) -> Result<T> {
    let r0 = p.r_value(T::zero())?;
    let dr0 = p.r_derivative(T::zero())?;
    Ok(-(r0 + rho_0) * dr0 / r0)
}

/// `N δV` per model on the given abscissae.
///
/// * VectorD0: `V − (1+γ)ρV′ + ½ ln 2V′`
/// * VectorQM: `(1−γ)V − (1+γ)ρV′ + ½(√(2V′) − 1)`
/// * VectorField(d): `(1 + γd/(d−2))V − (1+γ)ρV′ + (K/d)(2V′)^{d/2}`
/// * Matrix (in ρ = μ²/2): `V − (1+γ)ρV′ + ln V′`, i.e. `V − (g+½)μV′(μ) + ln(V′(μ)/μ)`
/// * MatrixQM (in μ): `(1−η)V − (1+η)μV′(μ) + √(2V′(μ))`
///
/// All forms carry the cutoff term `ρ_0 V′`. For the vector and matrix
/// models γ is fixed by `δV′(0) = 0` in the stored variable (for the matrix
/// this is `δV″(0) = 0` in μ).
pub fn flow_rhs_v<T: Real>(
    p: &Potential<T>,
    model: FlowModel<T>,
    rho_0: T,
    points: &[T],
) -> Result<VFlow<T>> {
    let half = T::lit(0.5);
    let two = T::from_int(2);
    let gamma = match model {
        FlowModel::MatrixQm { eta } => eta,
        _ => gamma_for_potential(&p.with_model(model_of(model)?)?, rho_0)?,
    };
    let values = points
        .iter()
        .map(|&x| -> Result<T> {
            match model {
                FlowModel::MatrixQm { eta } => {
                    // stored in ρ = μ²/2: V(μ) = W(ρ), V′(μ) = μ W′(ρ)
                    let rho = x * x / two;
                    let dv = x * p.eval_dv(&rho);
                    if !(dv > T::zero()) {
                        return Err(Error::NonPositiveDerivative {
                            rho: rho.to_f64_lossy(),
                            dv: dv.to_f64_lossy(),
                        });
                    }
                    Ok(
                        (T::one() - eta) * p.eval_v(&rho) - (T::one() + eta) * x * dv
                            + (two * dv).sqrt()
                            + rho_0 * dv,
                    )
                }
                _ => {
                    let v = p.eval_v(&x);
                    let dv = p.eval_dv(&x);
                    if !(dv > T::zero()) {
                        return Err(Error::NonPositiveDerivative {
                            rho: x.to_f64_lossy(),
                            dv: dv.to_f64_lossy(),
                        });
                    }
                    let transport = -(T::one() + gamma) * x * dv + rho_0 * dv;
                    Ok(match model {
                        FlowModel::VectorD0 => v + transport + half * (two * dv).ln(),
                        FlowModel::VectorQm => {
                            (T::one() - gamma) * v
                                + transport
                                + half * ((two * dv).sqrt() - T::one())
                        }
                        FlowModel::VectorField { d } => {
                            let dd = T::lit(d);
                            (T::one() + gamma * dd / (dd - two)) * v
                                + transport
                                + k_of_d(dd)? / dd * (two * dv).powf(dd / two)
                        }
                        FlowModel::Matrix => v + transport + dv.ln(),
                        FlowModel::MatrixQm { .. } => unreachable!(),
                    })
                }
            }
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(VFlow {
        gamma,
        points: points.to_vec(),
        values,
    })
}

fn model_of<T>(m: FlowModel<T>) -> Result<Model> {
    Ok(match m {
        FlowModel::VectorD0 => Model::VectorD0,
        FlowModel::VectorQm => Model::VectorQm,
        FlowModel::VectorField { d } => Model::vector_field(d)?,
        FlowModel::Matrix => Model::Matrix,
        FlowModel::MatrixQm { .. } => Model::Matrix,
    })
}

/// Maximum pointwise mismatch between the R-form flow and the V-form flow
/// transformed to `δR = (dR/dV′)·∂_x(NδV)`.
///
/// The V-form is differentiated numerically on the grid; the R-form uses
/// [`flow_rhs_r`] on `R` sampled from the same potential, with the same γ.
/// Both carry `O(Δ⁴)` discretization error.
#[derive(Debug, Clone, PartialEq)]
pub struct FormComparison<T> {
    pub gamma: T,
    pub max_abs_diff: T,
    pub max_abs_rhs: T,
}

pub fn compare_v_and_r_forms<T: Real>(
    p: &Potential<T>,
    model: FlowModel<T>,
    rho_0: T,
    grid: &UniformGrid<T>,
) -> Result<FormComparison<T>> {
    let points = grid.points();
    let vflow = flow_rhs_v(p, model, rho_0, &points)?;
    let d_delta_v = derivative4(&vflow.values, grid.spacing());
    let mut r_values = Vec::with_capacity(points.len());
    let mut transformed = Vec::with_capacity(points.len());
    for (i, &x) in points.iter().enumerate() {
        let dv = match model {
            FlowModel::MatrixQm { .. } => x * p.eval_dv(&(x * x / T::from_int(2))),
            _ => p.eval_dv(&x),
        };
        let (r, jacobian) = r_and_jacobian(model, dv)?;
        r_values.push(r);
        transformed.push(jacobian * d_delta_v[i]);
    }
    let rhs = universal_rhs(grid, &r_values, vflow.gamma, rho_0);
    let max_abs_rhs = rhs.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let max_abs_diff = rhs
        .iter()
        .zip(&transformed)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    Ok(FormComparison {
        gamma: vflow.gamma,
        max_abs_diff,
        max_abs_rhs,
    })
}

/// `γR − (1+γ)xR′ + (R + ρ_0)R′` on an arbitrary uniform grid (no pinning,
/// grid need not start at zero).
pub fn universal_rhs<T: Real>(grid: &UniformGrid<T>, r: &[T], gamma: T, rho_0: T) -> Vec<T> {
    let dr = derivative4(r, grid.spacing());
    (0..r.len())
        .map(|i| gamma * r[i] + (r[i] + rho_0 - (T::one() + gamma) * grid.point(i)) * dr[i])
        .collect()
}

/// `N δV` as a truncated series about `ρ = 0` for a given γ, over any scalar
/// ring. Requires the normalized slope so that the logarithm / square root
/// can be expanded about one: `2V′(0) = 1` (vector) or `V′(0) = 1` (matrix).
pub fn flow_rhs_v_series<S: Scalar>(
    v: &TruncatedSeries<S>,
    model: Model,
    gamma: &S,
) -> Result<TruncatedSeries<S>> {
    let dv = v.derivative();
    let one_plus = S::one() + gamma.clone();
    let transport = dv.shift_up().scale(&one_plus);
    let two = S::from_int(2);
    match model {
        Model::VectorD0 => {
            let log = dv.scale(&two).ln_unit()?.scale(&S::from_ratio(1, 2));
            Ok(&(&v.truncate(dv.order()) - &transport) + &log)
        }
        Model::VectorQm => {
            let root = dv.scale(&two).pow_unit(&S::from_ratio(1, 2))?;
            let source = root.add_constant(&-S::one()).scale(&S::from_ratio(1, 2));
            let lead = v.truncate(dv.order()).scale(&(S::one() - gamma.clone()));
            Ok(&(&lead - &transport) + &source)
        }
        Model::Matrix => {
            let log = dv.ln_unit()?;
            Ok(&(&v.truncate(dv.order()) - &transport) + &log)
        }
        m @ Model::VectorField { .. } => Err(Error::UnsupportedModel(format!(
            "{m}: K(d) is transcendental; use flow_rhs_v on a grid"
        ))),
    }
}

/// Linear-approximation flow of a polynomial potential (degree is preserved).
///
/// * VectorD0: `V + [1 − (1+γ)ρ]V′ − ½`
/// * VectorQM: `(1−γ)V + [½ − (1+γ)ρ]V′ − ¼`
/// * Matrix:   `V + [1 − (1+γ)ρ]V′ − 1`
///
/// with γ from `δV′(0) = 0`. Returns `(γ, dV/dτ)` coefficients.
pub fn linear_flow_rhs<T: Real>(p: &Potential<T>) -> Result<(T, Vec<T>)> {
    let c = p.coeffs();
    let n = c.len().max(3);
    let coeff = |k: usize| c.get(k).copied().unwrap_or_else(T::zero);
    let dv: Vec<T> = (0..n)
        .map(|k| coeff(k + 1) * T::from_int(k as i64 + 1))
        .collect();
    let (one_v, lin_v, source) = match p.model() {
        Model::VectorD0 => (T::one(), T::one(), T::lit(0.5)),
        Model::Matrix => (T::one(), T::one(), T::one()),
        Model::VectorQm => (T::zero(), T::lit(0.5), T::lit(0.25)),
        m => return Err(Error::UnsupportedModel(m.to_string())),
    };
    // γ from δV′(0) = 0
    let gamma = match p.model() {
        // (1−γ)V′(0) − (1+γ)V′(0) + ½V″(0) = 0
        Model::VectorQm => coeff(2) * T::from_int(2) / (T::from_int(4) * coeff(1)),
        // V′(0) + V″(0) − (1+γ)V′(0) = 0
        _ => coeff(2) * T::from_int(2) / coeff(1),
    };
    let v_factor = if p.model() == Model::VectorQm {
        T::one() - gamma
    } else {
        one_v
    };
    let out = (0..c.len())
        .map(|k| {
            let mut d = v_factor * coeff(k) + lin_v * dv[k];
            if k >= 1 {
                d = d - (T::one() + gamma) * dv[k - 1];
            }
            if k == 0 {
                d = d - source;
            }
            d
        })
        .collect();
    Ok((gamma, out))
}

/// RK4 integration of [`linear_flow_rhs`]; returns the potential after each step.
pub fn evolve_linear<T: Real>(
    p: &Potential<T>,
    dtau: T,
    steps: usize,
) -> Result<Vec<Potential<T>>> {
    let model = p.model();
    let mut current = p.clone();
    let mut out = vec![current.clone()];
    let add = |a: &Potential<T>, k: &[T], s: T| -> Result<Potential<T>> {
        let coeffs = a.coeffs().iter().zip(k).map(|(x, y)| *x + s * *y).collect();
        Potential::new(coeffs, model)
    };
    for _ in 0..steps {
        let (_, k1) = linear_flow_rhs(&current)?;
        let (_, k2) = linear_flow_rhs(&add(&current, &k1, dtau / T::from_int(2))?)?;
        let (_, k3) = linear_flow_rhs(&add(&current, &k2, dtau / T::from_int(2))?)?;
        let (_, k4) = linear_flow_rhs(&add(&current, &k3, dtau)?)?;
        let k: Vec<T> = (0..k1.len())
            .map(|i| (k1[i] + T::from_int(2) * (k2[i] + k3[i]) + k4[i]) / T::from_int(6))
            .collect();
        current = add(&current, &k, dtau)?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `x`.
pub fn fit_log_slope<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("need at least two matching samples".into()));
    }
    if ys.iter().any(|y| !(*y > T::zero())) {
        return Err(Error::Domain("log fit needs positive samples".into()));
    }
    let n = T::from_int(xs.len() as i64);
    let lys: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().fold(T::zero(), |s, x| s + *x) / n;
    let my = lys.iter().fold(T::zero(), |s, y| s + *y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(&lys) {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    Ok(sxy / sxx)
}

/// Growth exponent of `‖V(τ) − V*‖_∞` (coefficient norm) along a
/// linear-approximation flow started at `V* + ε h`.
pub fn linear_growth_exponent<T: Real>(
    fixed: &Potential<T>,
    direction: &[T],
    epsilon: T,
    dtau: T,
    steps: usize,
) -> Result<T> {
    let start = fixed.plus(&direction.iter().map(|h| *h * epsilon).collect::<Vec<_>>());
    let traj = evolve_linear(&start, dtau, steps)?;
    let (taus, norms): (Vec<T>, Vec<T>) = traj
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = p
                .coeffs()
                .iter()
                .enumerate()
                .fold(T::zero(), |m, (k, c)| m.max((*c - fixed.coeff(k)).abs()));
            (dtau * T::from_int(i as i64), n)
        })
        .unzip();
    fit_log_slope(&taus, &norms)
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Full => "full",
            Equation::Linear => "linear",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::linear_fixed_potential;
    use crate::series::Poly;
    use num_rational::Ratio;
    use num_traits::Zero;

    fn grid(n: usize, rho_max: f64) -> UniformGrid<f64> {
        UniformGrid::new(0.0, rho_max, n).unwrap()
    }

    fn max_norm(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn negative_input_aborts() {
        let grid = UniformGrid::new(0.0, 4.0, 65).unwrap();
        let mut values: Vec<f64> = grid.points().into_iter().map(|x| 1.0 + x).collect();
        values[30] = -0.5;
        let state = FlowState::unpinned(grid, values, 0.0).unwrap();
        assert!(matches!(
            evolve(&state, 0.01, 1),
            Err(Error::Positivity { .. })
        ));
        assert!(matches!(
            evolve_history(&state, 0.01, 1),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn rhs_vanishes_at_known_fixed_points() {
        let g = grid(1024, 8.0);
        let gauss = FlowState::from_fn(g.clone(), |_| 1.0).unwrap();
        assert!(max_norm(&flow_rhs_r(&gauss)) < 1e-14);
        assert_eq!(flow_gamma(&gauss), 0.0);
        let linear = FlowState::from_fn(g.clone(), |x| 1.0 + x).unwrap();
        assert!(max_norm(&flow_rhs_r(&linear)) < 1e-11);
        assert!((flow_gamma(&linear) + 1.0).abs() < 1e-12);
        let trivial = FlowState::unpinned(g.clone(), g.points(), 0.0).unwrap();
        assert!(max_norm(&flow_rhs_r(&trivial)) < 1e-12);
    }

    #[test]
    fn gaussian_and_linear_fixed_points_are_stationary() {
        let g = grid(1024, 8.0);
        for f in [|_: f64| 1.0, |x: f64| 1.0 + x] {
            let s0 = FlowState::from_fn(g.clone(), f).unwrap();
            let s1 = evolve(&s0, 0.05, 20).unwrap();
            assert!((s1.tau() - 1.0).abs() < 1e-12);
            let drift = s0
                .values()
                .iter()
                .zip(s1.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(drift < 1e-10, "drift {drift}");
        }
    }

    #[test]
    fn positivity_violation_aborts() {
        // a steep dip that the flow pushes through zero
        let g = grid(257, 4.0);
        let s =
            FlowState::from_fn(g, |x| 1.0 - 0.999 * (-(x - 2.0) * (x - 2.0) * 50.0).exp()).unwrap();
        let result = evolve(&s, 0.05, 200);
        if let Err(e) = result {
            assert!(matches!(e, Error::Positivity { .. }));
        } else {
            assert!(result.unwrap().values().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn v_form_matches_r_form_for_all_models() {
        let g = grid(1025, 2.0);
        let cases: Vec<(Potential<f64>, FlowModel<f64>)> = vec![
            (
                Potential::new(vec![0.0, 0.5, 0.1, 0.02], Model::VectorD0).unwrap(),
                FlowModel::VectorD0,
            ),
            (
                Potential::new(vec![0.0, 0.5, -0.05, 0.03], Model::VectorQm).unwrap(),
                FlowModel::VectorQm,
            ),
            (
                Potential::new(vec![0.0, 0.5, 0.1], Model::vector_field(3.0).unwrap()).unwrap(),
                FlowModel::VectorField { d: 3.0 },
            ),
            (
                Potential::new(vec![0.0, 1.0, 0.2, -0.01], Model::Matrix).unwrap(),
                FlowModel::Matrix,
            ),
        ];
        for (p, model) in cases {
            for rho_0 in [0.0, 0.3] {
                let cmp = compare_v_and_r_forms(&p, model, rho_0, &g).unwrap();
                assert!(
                    cmp.max_abs_diff < 1e-9 * (1.0 + cmp.max_abs_rhs),
                    "{}: {cmp:?}",
                    model.tag()
                );
            }
        }
        // matrix QM lives in μ and needs μ > 0
        let mu = UniformGrid::new(0.5, 2.0, 1025).unwrap();
        let p = Potential::new(vec![0.0, 1.0, 0.1], Model::Matrix).unwrap();
        let cmp = compare_v_and_r_forms(&p, FlowModel::MatrixQm { eta: -0.3 }, 0.0, &mu).unwrap();
        assert!(cmp.max_abs_diff < 1e-9 * (1.0 + cmp.max_abs_rhs), "{cmp:?}");
    }

    #[test]
    fn gaussian_v_flow_is_a_constant_shift() {
        let p = Potential::<f64>::gaussian(Model::VectorD0).unwrap();
        let pts: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let f = flow_rhs_v(&p, FlowModel::VectorD0, 0.0, &pts).unwrap();
        assert_eq!(f.gamma, 0.0);
        assert!(f.values.iter().all(|v| (v - f.values[0]).abs() < 1e-15));
    }

    #[test]
    fn beta_coefficients_from_series() {
        type Q = Ratio<i64>;
        let g = Poly::<Q>::x();
        let quarter = Poly::constant(Q::new(1, 4));
        let half = Poly::constant(Q::new(1, 2));
        let v = TruncatedSeries::with_order(vec![Poly::zero(), half, g.clone() * quarter], 3);
        let dv = flow_rhs_v_series(&v, Model::VectorD0, &g).unwrap();
        // ρ² coefficient: −(g + 3g²)/4
        assert_eq!(
            dv.coeff(2),
            Poly::new(vec![Q::new(0, 1), Q::new(-1, 4), Q::new(-3, 4)])
        );
        assert_eq!(dv.coeff(1), Poly::zero());
    }

    #[test]
    fn linear_fixed_points_are_stationary() {
        for m in 1..=6usize {
            for model in [Model::VectorD0, Model::VectorQm, Model::Matrix] {
                let p = linear_fixed_potential::<f64>(model, m).unwrap();
                let (_, d) = linear_flow_rhs(&p).unwrap();
                assert!(max_norm(&d) < 1e-12, "{model} m={m}: {d:?}");
            }
        }
    }

    #[test]
    fn linear_growth_along_relevant_direction() {
        let fixed = linear_fixed_potential::<f64>(Model::VectorD0, 2).unwrap();
        // h = −1 + ρ²/4 is the κ = 1 eigenvector
        let rate = linear_growth_exponent(&fixed, &[-1.0, 0.0, 0.25], 1e-8, 0.01, 300).unwrap();
        assert!((rate - 1.0).abs() < 1e-4, "{rate}");
    }

    #[test]
    fn saddle_tracking_and_drift_law() {
        let p = Potential::new(vec![0.0f64, 0.5, -0.025], Model::VectorD0).unwrap();
        let s0 = FlowState::from_potential(&p, 8.0, 257).unwrap();
        assert!((s0.gamma() + 0.1).abs() < 1e-6);
        let history = evolve_history(&s0, 0.05, 10).unwrap();
        let track = track_saddle(&history).unwrap();
        assert_eq!(track.missing, 0);
        let first = track.rows[0].rho_c.unwrap();
        let last = track.rows.last().unwrap().rho_c.unwrap();
        assert!(last < first, "γ < 0 drives the saddle toward 0");
        assert!(track.max_residual.unwrap() < 1e-3);
    }

    #[test]
    fn fit_recovers_exponent() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (0.7 * x).exp()).collect();
        assert!((fit_log_slope(&xs, &ys).unwrap() - 0.7).abs() < 1e-12);
    }
}
