//! Uniform grids and sampled functions.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n` equally spaced points on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid<T> {
    start: T,
    end: T,
    n: usize,
}

impl<T: Real> UniformGrid<T> {
    /// At least five points are required by the fourth-order stencils.
    pub fn new(start: T, end: T, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::Domain(format!(
                "grid needs at least 5 points, got {n}"
            )));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::Domain(format!(
                "invalid grid interval [{start}, {end}]"
            )));
        }
        Ok(Self { start, end, n })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        (self.end - self.start) / T::from_int(self.n as i64 - 1)
    }

    pub fn point(&self, i: usize) -> T {
        if i + 1 == self.n {
            return self.end;
        }
        self.start + self.spacing() * T::from_int(i as i64)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Same interval, `2n - 1` points (spacing halved).
    pub fn refined(&self) -> Self {
        Self {
            start: self.start,
            end: self.end,
            n: 2 * self.n - 1,
        }
    }
}

/// Fourth-order first derivative of uniformly sampled values. Five-point
/// central stencils in the interior, five-point one-sided/off-centre stencils
/// at the two points nearest each end.
pub fn derivative4<T: Real>(values: &[T], h: T) -> Vec<T> {
    let n = values.len();
    assert!(n >= 5, "derivative4 needs at least five samples");
    let c = |k: i64| T::from_int(k);
    let inv = (c(12) * h).recip();
    let f = values;
    let mut d = vec![T::zero(); n];
    d[0] = (c(-25) * f[0] + c(48) * f[1] - c(36) * f[2] + c(16) * f[3] - c(3) * f[4]) * inv;
    d[1] = (c(-3) * f[0] - c(10) * f[1] + c(18) * f[2] - c(6) * f[3] + f[4]) * inv;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - c(8) * f[i - 1] + c(8) * f[i + 1] - f[i + 2]) * inv;
    }
    let m = n - 1;
    d[m] = (c(25) * f[m] - c(48) * f[m - 1] + c(36) * f[m - 2] - c(16) * f[m - 3]
        + c(3) * f[m - 4])
        * inv;
    d[m - 1] =
        (c(3) * f[m] + c(10) * f[m - 1] - c(18) * f[m - 2] + c(6) * f[m - 3] - f[m - 4]) * inv;
    d
}

/// One-sided fourth-order derivative at the first sample.
pub fn forward_derivative4<T: Real>(values: &[T], h: T) -> T {
    let c = |k: i64| T::from_int(k);
    let f = values;
    (c(-25) * f[0] + c(48) * f[1] - c(36) * f[2] + c(16) * f[3] - c(3) * f[4]) / (c(12) * h)
}

/// A function sampled on a [`UniformGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: UniformGrid<T>,
    values: Vec<T>,
}

/// Number of nodes in the local interpolation stencil (degree 5).
const INTERP_POINTS: usize = 6;

impl<T: Real> GridFunction<T> {
    pub fn new(grid: UniformGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &UniformGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Nodal derivative by [`derivative4`].
    pub fn derivative(&self) -> Vec<T> {
        derivative4(&self.values, self.grid.spacing())
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.grid.start && x <= self.grid.end
    }

    /// Scaled coordinate of `x` and the first node of its interpolation stencil.
    fn stencil(&self, x: T) -> Result<(T, usize, usize)> {
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "{x} outside grid [{}, {}]",
                self.grid.start, self.grid.end
            )));
        }
        let n = self.values.len();
        let s = (x - self.grid.start) / self.grid.spacing();
        let cell = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let count = INTERP_POINTS.min(n);
        let first = cell.saturating_sub(INTERP_POINTS / 2 - 1).min(n - count);
        Ok((s, first, count))
    }

    /// Local degree-5 Lagrange interpolation (sixth order in the spacing).
    pub fn interpolate(&self, x: T) -> Result<T> {
        let (s, first, count) = self.stencil(x)?;
        let mut acc = T::zero();
        for j in first..first + count {
            let sj = T::from_int(j as i64);
            let mut w = T::one();
            for k in (first..first + count).filter(|&k| k != j) {
                let sk = T::from_int(k as i64);
                w = w * (s - sk) / (sj - sk);
            }
            acc = acc + w * self.values[j];
        }
        Ok(acc)
    }

    /// Exact derivative of the local interpolant.
    pub fn interpolate_derivative(&self, x: T) -> Result<T> {
        let (s, first, count) = self.stencil(x)?;
        let idx = |k: usize| T::from_int(k as i64);
        let mut acc = T::zero();
        for j in first..first + count {
            let mut dw = T::zero();
            for k in (first..first + count).filter(|&k| k != j) {
                let mut term = (idx(j) - idx(k)).recip();
                for l in (first..first + count).filter(|&l| l != j && l != k) {
                    term = term * (s - idx(l)) / (idx(j) - idx(l));
                }
                dw = dw + term;
            }
            acc = acc + dw * self.values[j];
        }
        Ok(acc / self.grid.spacing())
    }
}
