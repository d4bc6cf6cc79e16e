//! Fixed-size 2x2 algebra and a tridiagonal solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn e1() -> Self {
        Self::new(T::one(), T::zero())
    }

    pub fn e2() -> Self {
        Self::new(T::zero(), T::one())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> std::ops::Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> std::ops::Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> std::ops::Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Solves `self * x = rhs` by Cramer's rule; fails when the determinant is
    /// negligible relative to the entries.
    pub fn solve(&self, rhs: Vec2<T>) -> Result<Vec2<T>> {
        let det = self.det();
        let scale = self.max_abs();
        if !det.is_finite() || det.abs() <= T::epsilon() * scale * scale * T::lit(16.0) {
            return Err(Error::Singular {
                what: "2x2 system",
                det: det.to_f64_lossy(),
            });
        }
        Ok(Vec2::new(
            (rhs.x * self.m[1][1] - self.m[0][1] * rhs.y) / det,
            (self.m[0][0] * rhs.y - self.m[1][0] * rhs.x) / det,
        ))
    }
}

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to unknown `i - 1` (`lower[0]` unused), `upper[i]`
/// couples row `i` to unknown `i + 1` (last entry unused). `scratch` must have
/// the same length as `diag` and is overwritten.
pub fn solve_tridiagonal<T: Real>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
    out: &mut [T],
    scratch: &mut [T],
) -> Result<()> {
    let n = diag.len();
    if lower.len() != n
        || upper.len() != n
        || rhs.len() != n
        || out.len() != n
        || scratch.len() != n
    {
        return Err(Error::LengthMismatch {
            expected: n,
            found: rhs.len().min(lower.len()).min(upper.len()).min(out.len()),
        });
    }
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == T::zero() || !pivot.is_finite() {
        return Err(Error::Singular {
            what: "tridiagonal system",
            det: pivot.to_f64_lossy(),
        });
    }
    scratch[0] = upper[0] / pivot;
    out[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::Singular {
                what: "tridiagonal system",
                det: pivot.to_f64_lossy(),
            });
        }
        scratch[i] = upper[i] / pivot;
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = out[i + 1];
        out[i] -= scratch[i] * next;
    }
    Ok(())
}
