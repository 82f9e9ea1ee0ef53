//! Large-N saddle points of the radial integral, the finite-N quadrature
//! oracle, and multicritical scaling collapse.
//!
//! After the angular integration the zero-dimensional vector integral is
//! `e^{Z_N} = 𝒩 ∫ dρ/ρ e^{−Nσ(ρ)}` with `σ = V − ½ ln ρ`; its saddle
//! condition is `R(ρ) = ρ − ρ_0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potentials::{multicritical_potential, Model, Potential, RFunction};
use crate::quadrature::integrate;
use crate::scalar::Real;
use crate::special::{binomial, ln_gamma};

/// Default number of scan panels for [`solve_saddle`].
pub const DEFAULT_PANELS: usize = 4096;

/// Highest criticality order the detector will report.
const MAX_ORDER: usize = 10;

/// A root of `R(ρ) − ρ + ρ_0` and its criticality order `m`
/// (`σ − σ(ρ_c) ∝ (ρ − ρ_c)^m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleRoot<T> {
    pub rho: T,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport<T> {
    pub roots: Vec<SaddleRoot<T>>,
    /// `N[½ − V(ρ_c) + ½ ln ρ_c]`, filled by [`free_energy_large_n`].
    pub z_leading: Option<T>,
    /// `−½ ln[2ρ_c² V″(ρ_c) + 1]`, filled by [`free_energy_large_n`].
    pub z_correction: Option<T>,
}

impl<T: Real> SaddleReport<T> {
    pub fn rho_c(&self) -> Vec<T> {
        self.roots.iter().map(|r| r.rho).collect()
    }

    /// Order of the unique root, if there is exactly one.
    pub fn order_m(&self) -> Option<usize> {
        match self.roots.as_slice() {
            [only] => Some(only.order),
            _ => None,
        }
    }

    /// Two-term asymptotic free energy, when computed.
    pub fn z_asymptotic(&self) -> Option<T> {
        Some(self.z_leading? + self.z_correction?)
    }
}

/// Finds every saddle `R(ρ) = ρ − ρ_0` on `domain` and classifies it.
///
/// Simple roots are bracketed by sign changes; even-multiplicity roots are
/// found as touching minima of `|R − ρ + ρ_0|`. Points where `R` cannot be
/// evaluated (non-positive `V′`) are skipped.
pub fn solve_saddle<T: Real>(
    r: &RFunction<T>,
    rho_0: T,
    domain: (T, T),
    panels: usize,
) -> Result<SaddleReport<T>> {
    let (lo, hi) = domain;
    if !(hi > lo) || panels < 2 {
        return Err(Error::Domain(format!("invalid saddle domain [{lo}, {hi}]")));
    }
    let g = |x: T| r.eval(x).map(|v| v - x + rho_0);
    let dg = |x: T| r.derivative(x).map(|v| v - T::one());
    let step = (hi - lo) / T::from_int(panels as i64);
    let xs: Vec<T> = (0..=panels)
        .map(|i| {
            if i == panels {
                hi
            } else {
                lo + step * T::from_int(i as i64)
            }
        })
        .collect();
    let gs: Vec<Option<T>> = xs
        .iter()
        .map(|&x| g(x).ok().filter(|v| v.is_finite()))
        .collect();

    let mut candidates = Vec::new();
    for i in 0..panels {
        let (Some(ga), Some(gb)) = (gs[i], gs[i + 1]) else {
            continue;
        };
        if ga == T::zero() {
            candidates.push(xs[i]);
        } else if ga * gb < T::zero() {
            candidates.push(bracketed_root(&g, &dg, xs[i], xs[i + 1])?);
        }
    }
    if let Some(last) = gs[panels] {
        if last == T::zero() {
            candidates.push(hi);
        }
    }
    // touching roots: |g| has an interior minimum without a sign change
    for i in 1..panels {
        let (Some(a), Some(b), Some(c)) = (gs[i - 1], gs[i], gs[i + 1]) else {
            continue;
        };
        if a * c > T::zero() && b * a > T::zero() && b.abs() <= a.abs() && b.abs() <= c.abs() {
            if let Some(x) = touching_root(&g, &dg, xs[i - 1], xs[i + 1]) {
                candidates.push(x);
            }
        }
    }

    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut roots: Vec<SaddleRoot<T>> = Vec::new();
    for x in candidates {
        let (x, order) = classify_root(r, rho_0, x)?;
        let tol = T::lit(1e-7) * (T::one() + x.abs());
        if roots.last().is_some_and(|prev| (prev.rho - x).abs() < tol) {
            continue;
        }
        roots.push(SaddleRoot { rho: x, order });
    }
    Ok(SaddleReport {
        roots,
        z_leading: None,
        z_correction: None,
    })
}

/// Safeguarded Newton on a sign-changing bracket.
fn bracketed_root<T: Real>(
    g: &impl Fn(T) -> Result<T>,
    dg: &impl Fn(T) -> Result<T>,
    mut a: T,
    mut b: T,
) -> Result<T> {
    let mut ga = g(a)?;
    let mut x = (a + b) / T::from_int(2);
    for _ in 0..200 {
        let gx = g(x)?;
        if gx.abs() < T::lit(1e-12) * (T::one() + x.abs()) && (b - a) < T::lit(1e-6) {
            return Ok(x);
        }
        if gx == T::zero() {
            return Ok(x);
        }
        if ga * gx < T::zero() {
            b = x;
        } else {
            a = x;
            ga = gx;
        }
        let newton = dg(x).ok().map(|d| x - gx / d);
        x = match newton {
            Some(n) if n > a && n < b && n.is_finite() => n,
            _ => (a + b) / T::from_int(2),
        };
        if b - a <= T::epsilon() * T::from_int(4) * (T::one() + x.abs()) {
            return Ok(x);
        }
    }
    let gx = g(x)?;
    if gx.abs() < T::lit(1e-10) * (T::one() + x.abs()) {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "saddle Newton/bisection did not converge near {x}"
        )))
    }
}

/// Locates a root of `g′` in `[a, b]` and accepts it when `g` vanishes there.
fn touching_root<T: Real>(
    g: &impl Fn(T) -> Result<T>,
    dg: &impl Fn(T) -> Result<T>,
    a: T,
    b: T,
) -> Option<T> {
    let da = dg(a).ok()?;
    let db = dg(b).ok()?;
    if da * db > T::zero() {
        return None;
    }
    let (mut lo, mut hi, mut dlo) = (a, b, da);
    for _ in 0..200 {
        let mid = (lo + hi) / T::from_int(2);
        if !(mid > lo && mid < hi) {
            break;
        }
        let dm = dg(mid).ok()?;
        if dm * dlo > T::zero() {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    let x = (lo + hi) / T::from_int(2);
    let tol = T::lit(1e-10) * (T::one() + x.abs());
    (g(x).ok()?.abs() < tol).then_some(x)
}

/// Refines a root and returns its criticality order.
///
/// With an analytic `R` the order is read from the exact Taylor series of
/// `g = R − ρ + ρ_0` (the multiplicity `k` of the root gives `m = k + 1`),
/// and the root is polished by Newton on `g^{(k−1)}`, which has a simple
/// zero. Sampled `R` falls back to Richardson-extrapolated differences.
fn classify_root<T: Real>(r: &RFunction<T>, rho_0: T, x0: T) -> Result<(T, usize)> {
    const REL: f64 = 1e-6;
    if r.potential().is_some() {
        let mut x = x0;
        let mut k = 1;
        for _ in 0..100 {
            let series = match r.taylor(x, MAX_ORDER) {
                Some(s) => s?,
                None => unreachable!("analytic R has a Taylor series"),
            };
            let scale = T::one() + x.abs();
            let mut b: Vec<T> = series.coeffs().to_vec();
            b[0] = b[0] - x + rho_0;
            b[1] = b[1] - T::one();
            let scaled: Vec<T> = b
                .iter()
                .enumerate()
                .map(|(j, c)| *c * scale.powi(j as i32))
                .collect();
            let top = scaled[1..].iter().fold(T::zero(), |m, c| m.max(c.abs()));
            k = (1..scaled.len())
                .find(|&j| scaled[j].abs() > T::lit(REL) * top)
                .unwrap_or(MAX_ORDER);
            let t = -b[k - 1] / (T::from_int(k as i64) * b[k]);
            if !t.is_finite() {
                break;
            }
            x = x + t;
            if t.abs() <= T::epsilon() * T::from_int(8) * scale {
                break;
            }
        }
        return Ok((x, (k + 1).min(MAX_ORDER)));
    }
    let scale = T::one() + x0.abs();
    let d1 = r.derivative(x0)? - T::one();
    if d1.abs() > T::lit(REL) * scale.recip() {
        return Ok((x0, 2));
    }
    let second = |h: T| -> Result<T> {
        Ok((r.derivative(x0 + h)? - r.derivative(x0 - h)?) / (T::from_int(2) * h))
    };
    let h = T::lit(1e-3) * scale;
    let d2 = (T::from_int(4) * second(h / T::from_int(2))? - second(h)?) / T::from_int(3);
    if d2.abs() > T::lit(1e-4) * scale.powi(-2) {
        return Ok((x0, 3));
    }
    Ok((x0, 4))
}

fn require_d0(p: &Potential<impl Real>) -> Result<()> {
    match p.model() {
        Model::VectorD0 => Ok(()),
        other => Err(Error::UnsupportedModel(format!(
            "{other}: the radial integral is defined for VectorD0 potentials"
        ))),
    }
}

/// Two-term large-N free energy
/// `Z_N ≈ N[½ − V(ρ_c) + ½ ln ρ_c] − ½ ln[2ρ_c² V″(ρ_c) + 1]`.
///
/// The saddle is searched on `(0, rho_max]`; it must be unique and Gaussian.
pub fn free_energy_large_n<T: Real>(p: &Potential<T>, n: T, rho_max: T) -> Result<SaddleReport<T>> {
    require_d0(p)?;
    let rf = RFunction::from_potential(p.clone());
    let mut report = solve_saddle(&rf, T::zero(), (T::zero(), rho_max), DEFAULT_PANELS)?;
    let root = match report.roots.as_slice() {
        [only] => *only,
        other => return Err(Error::SaddleCount(other.len())),
    };
    if root.order > 2 {
        return Err(Error::NonGaussianSaddle { order: root.order });
    }
    let rc = root.rho;
    let half = T::lit(0.5);
    let curvature = T::from_int(2) * rc * rc * p.eval_ddv(&rc) + T::one();
    if !(curvature > T::zero()) {
        return Err(Error::Domain(format!(
            "2ρ_c²V″(ρ_c) + 1 = {curvature} is not positive"
        )));
    }
    report.z_leading = Some(n * (half - p.eval_v(&rc) + half * rc.ln()));
    report.z_correction = Some(-half * curvature.ln());
    Ok(report)
}

/// `ln 𝒩 = (N/2) ln(N/2) − ln Γ(N/2)` (exact, not the large-N form).
pub fn ln_normalization<T: Real>(n: usize) -> Result<T> {
    let half_n = T::from_int(n as i64) / T::from_int(2);
    Ok(half_n * half_n.ln() - ln_gamma(half_n)?)
}

/// Finite-N oracle `Z_N = ln[𝒩 ∫ dρ/ρ e^{−Nσ(ρ)}]`, computed in the log
/// domain. The integral is taken in `u = √ρ`:
/// `∫ dρ ρ^{N/2−1} e^{−NV(ρ)} = 2 ∫ du u^{N−1} e^{−NV(u²)}`, which is smooth
/// at the origin for every `N ≥ 1`.
pub fn quadrature_z<T: Real>(p: &Potential<T>, n: usize) -> Result<T> {
    require_d0(p)?;
    if n == 0 || n > 1_000_000 {
        return Err(Error::Domain(format!("N must be in [1, 10^6], got {n}")));
    }
    // convergence at infinity: the leading non-constant coefficient must be positive
    match p
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .find(|(_, c)| **c != T::zero())
    {
        Some((_, c)) if *c > T::zero() => {}
        _ => return Err(Error::Divergent),
    }
    let nt = T::from_int(n as i64);
    let power = T::from_int(n as i64 - 1);
    let phi = move |u: T| -> T {
        let log_u = if n == 1 { T::zero() } else { power * u.ln() };
        log_u - nt * p.eval_v(&(u * u))
    };

    // bracket the region where the integrand is within e^{-60} of its peak
    let cutoff = T::from_int(60);
    let mut u_hi = T::one();
    let mut peak_seen = phi(u_hi);
    loop {
        let next = u_hi * T::from_int(2);
        peak_seen = peak_seen.max(phi(u_hi));
        if phi(u_hi) < peak_seen - cutoff && phi(next) < phi(u_hi) {
            break;
        }
        u_hi = next;
        if u_hi > T::lit(1e8) {
            return Err(Error::Divergent);
        }
    }
    let scan = 4096usize;
    let du = u_hi / T::from_int(scan as i64);
    let (mut best_u, mut best) = (du, phi(du));
    for i in 1..=scan {
        let u = du * T::from_int(i as i64);
        let v = phi(u);
        if v > best {
            best = v;
            best_u = u;
        }
    }
    if n == 1 && phi(T::zero()) > best {
        best = phi(T::zero());
        best_u = T::zero();
    }
    // golden-section polish of the peak
    let (mut a, mut b) = ((best_u - du).max(T::zero()), best_u + du);
    let golden = T::lit(0.618_033_988_749_894_9);
    for _ in 0..80 {
        let c = b - golden * (b - a);
        let d = a + golden * (b - a);
        if phi(c) > phi(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let peak_u = (a + b) / T::from_int(2);
    let shift = phi(peak_u).max(best);

    let upper = {
        let mut u = peak_u.max(du);
        while phi(u) - shift > -cutoff {
            u = u + (u_hi / T::from_int(64)).max(du);
        }
        u
    };
    let lower = {
        let mut u = peak_u;
        let stride = (u_hi / T::from_int(64)).max(du);
        while u > T::zero() && phi(u) - shift > -cutoff {
            u = (u - stride).max(T::zero());
        }
        u
    };
    let integrand = |u: T| -> T {
        let v = phi(u) - shift;
        if v.is_nan() {
            T::zero()
        } else {
            v.exp()
        }
    };
    // split at the peak and into coarse panels so that no lobe is missed
    let pieces = 32usize;
    let mut total = T::zero();
    for (a, b) in [(lower, peak_u), (peak_u, upper)] {
        if !(b > a) {
            continue;
        }
        let w = (b - a) / T::from_int(pieces as i64);
        for j in 0..pieces {
            let lo = a + w * T::from_int(j as i64);
            let hi = if j + 1 == pieces { b } else { lo + w };
            total = total + integrate(integrand, lo, hi, T::lit(1e-12), T::lit(1e-300))?;
        }
    }
    Ok(ln_normalization::<T>(n)? + shift + (T::from_int(2) * total).ln())
}

/// One row of the oracle comparison `N,Z_quad,Z_asym,diff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow<T> {
    pub n: usize,
    pub z_quad: T,
    pub z_asym: T,
    pub diff: T,
}

impl<T: Real> OracleRow<T> {
    pub const CSV_HEADER: &'static str = "N,Z_quad,Z_asym,diff";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.n, self.z_quad, self.z_asym, self.diff)
    }
}

/// Quadrature versus asymptotic free energy for each `N` (parallel, ordered by `N`).
pub fn oracle_comparison<T: Real>(
    p: &Potential<T>,
    ns: &[usize],
    rho_max: T,
) -> Result<Vec<OracleRow<T>>> {
    let mut rows = ns
        .par_iter()
        .map(|&n| {
            let z_quad = quadrature_z(p, n)?;
            let z_asym = free_energy_large_n(p, T::from_int(n as i64), rho_max)?
                .z_asymptotic()
                .expect("filled by free_energy_large_n");
            Ok(OracleRow {
                n,
                z_quad,
                z_asym,
                diff: z_quad - z_asym,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// `q/m − 1`: the power of `N` with which a relevant coupling `v_q` must
/// vanish in the scaling window (and the decay rate of irrelevant ones).
pub fn scaling_exponent_d0<T: Real>(m: usize, q: usize) -> Result<T> {
    if m < 2 || q < 1 {
        return Err(Error::Domain(format!(
            "need m ≥ 2 and q ≥ 1, got m={m}, q={q}"
        )));
    }
    Ok(T::from_int(q as i64) / T::from_int(m as i64) - T::one())
}

/// One `(N, v)` point of the collapse sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseRow<T> {
    pub n: usize,
    pub v: T,
    pub x: T,
    pub delta_z: T,
}

impl<T: Real> CollapseRow<T> {
    pub const CSV_HEADER: &'static str = "N,v,x,deltaZ";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.n, self.v, self.x, self.delta_z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport<T> {
    pub m: usize,
    pub q: usize,
    /// Rows sorted by `(N, v)`.
    pub rows: Vec<CollapseRow<T>>,
    /// Max over N-pairs of `|ΔZ(x; N_i) − ΔZ(x; N_j)|` on the common x-range.
    pub defect: T,
    pub max_abs_delta_z: T,
}

impl<T: Real> CollapseReport<T> {
    /// Defect relative to the largest `|ΔZ|`.
    pub fn relative_defect(&self) -> T {
        if self.max_abs_delta_z > T::zero() {
            self.defect / self.max_abs_delta_z
        } else {
            self.defect
        }
    }
}

/// `V_c + v z^q` with `z = 1 − ρ/(m − 1)`.
fn perturbed_critical<T: Real>(m: usize, q: usize, v: T) -> Result<Potential<T>> {
    let vc = multicritical_potential::<T>(m)?;
    let a = T::from_int(m as i64 - 1);
    let extra: Vec<T> = (0..=q as u32)
        .map(|k| {
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            v * sign * T::from_int(binomial(q as u32, k) as i64) * a.powi(k as i32).recip()
        })
        .collect();
    Ok(vc.plus(&extra))
}

fn check_collapse_args(m: usize, q: usize) -> Result<()> {
    if m % 2 == 1 {
        return Err(Error::Domain(format!(
            "m = {m} is odd: the saddle is only meaningful for a contour integral \
             after analytic continuation, which is not implemented"
        )));
    }
    if m < 4 || q < 1 || q > m - 2 {
        return Err(Error::Domain(format!(
            "need even m ≥ 4 and 1 ≤ q ≤ m − 2, got m={m}, q={q}"
        )));
    }
    Ok(())
}

/// Scaling collapse for the perturbation `v z^q` of the order-`m` critical
/// potential, with `x = v N^{1 − q/m}`. Each `(v, N)` pair is independent
/// and evaluated in parallel; the output is sorted.
pub fn scaling_collapse<T: Real>(
    m: usize,
    q: usize,
    vs: &[T],
    ns: &[usize],
) -> Result<CollapseReport<T>> {
    let jobs: Vec<(usize, T)> = ns
        .iter()
        .flat_map(|&n| vs.iter().map(move |&v| (n, v)))
        .collect();
    collapse_jobs(m, q, jobs)
}

/// As [`scaling_collapse`], but sampling fixed `x` values: `v = x N^{q/m − 1}`.
pub fn scaling_collapse_at_x<T: Real>(
    m: usize,
    q: usize,
    xs: &[T],
    ns: &[usize],
) -> Result<CollapseReport<T>> {
    check_collapse_args(m, q)?;
    let expo = scaling_exponent_d0::<T>(m, q)?;
    let jobs = ns
        .iter()
        .flat_map(|&n| {
            xs.iter()
                .map(move |&x| (n, x * T::from_int(n as i64).powf(expo)))
        })
        .collect();
    collapse_jobs(m, q, jobs)
}

fn collapse_jobs<T: Real>(m: usize, q: usize, jobs: Vec<(usize, T)>) -> Result<CollapseReport<T>> {
    check_collapse_args(m, q)?;
    let critical = multicritical_potential::<T>(m)?;
    let mut ns: Vec<usize> = jobs.iter().map(|j| j.0).collect();
    ns.sort_unstable();
    ns.dedup();
    let baseline: Vec<(usize, T)> = ns
        .par_iter()
        .map(|&n| quadrature_z(&critical, n).map(|z| (n, z)))
        .collect::<Result<_>>()?;
    let expo = T::one() - T::from_int(q as i64) / T::from_int(m as i64);
    let mut rows = jobs
        .par_iter()
        .map(|&(n, v)| {
            let z0 = baseline
                .iter()
                .find(|b| b.0 == n)
                .expect("baseline for every N")
                .1;
            let z = if v == T::zero() {
                z0
            } else {
                quadrature_z(&perturbed_critical(m, q, v)?, n)?
            };
            Ok(CollapseRow {
                n,
                v,
                x: v * T::from_int(n as i64).powf(expo),
                delta_z: z - z0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.v.partial_cmp(&b.v).unwrap_or(std::cmp::Ordering::Equal))
    });

    let curves: Vec<Vec<(T, T)>> = ns
        .iter()
        .map(|&n| {
            let mut c: Vec<(T, T)> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| (r.x, r.delta_z))
                .collect();
            c.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            c
        })
        .collect();
    let max_abs_delta_z = rows
        .iter()
        .fold(T::zero(), |acc, r| acc.max(r.delta_z.abs()));
    let mut defect = T::zero();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            defect = defect.max(curve_distance(&curves[i], &curves[j]));
        }
    }
    Ok(CollapseReport {
        m,
        q,
        rows,
        defect,
        max_abs_delta_z,
    })
}

fn lerp<T: Real>(curve: &[(T, T)], x: T) -> T {
    let k = curve.partition_point(|p| p.0 < x);
    if k == 0 {
        return curve[0].1;
    }
    if k == curve.len() {
        return curve[k - 1].1;
    }
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k];
    if x1 == x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Max distance on the union of abscissae inside the common x-range.
fn curve_distance<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> T {
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    a.iter()
        .chain(b.iter())
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi)
        .fold(T::zero(), |d, x| d.max((lerp(a, x) - lerp(b, x)).abs()))
}
