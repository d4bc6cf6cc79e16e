//! Linear (Turing) stability of the coexistence equilibrium.
//!
//! Perturbations `w ~ exp(lambda t) cos(k x)` evolve under `A_k = gamma R - k^2 Q`,
//! and since `tr(A_k) < 0` for every `k`, instability can only come from
//! `det(A_k) = h(k^2) < 0` where
//! `h(s) = det(Q) s^2 + gamma q s + gamma^2 det(R)`, `q = m2 - b m1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::{Equilibrium, ScaledModelParams};
use crate::scalar::Real;

/// Number of samples in the default dispersion grid.
pub const DEFAULT_DISPERSION_SAMPLES: usize = 2048;
/// Upper end of the default dispersion grid in units of `k_c`.
pub const DEFAULT_DISPERSION_SPAN: f64 = 3.0;

/// `R` (reaction Jacobian factor) and `Q` (diffusion matrix) at the equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizedMatrices<T> {
    pub reaction: Mat2<T>,
    pub diffusion: Mat2<T>,
}

impl<T: Real> LinearizedMatrices<T> {
    /// `A_k = gamma R - k^2 Q`.
    pub fn mode_matrix(&self, gamma: T, k: T) -> Mat2<T> {
        self.reaction.scale(gamma).sub(&self.diffusion.scale(k * k))
    }
}

pub fn build_matrices<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b: T,
) -> LinearizedMatrices<T> {
    let (l, k) = (eq.labor, eq.capital);
    LinearizedMatrices {
        reaction: Mat2::new(-p.beta1 * l, l, k, -p.beta2 * k),
        diffusion: Mat2::new(
            p.labor_diffusivity(l),
            -b * l,
            T::zero(),
            p.capital_diffusivity(k),
        ),
    }
}

/// Eigenvalues of a real 2x2 matrix, ordered by real part (smaller first).
pub fn eigenvalues<T: Real>(a: &Mat2<T>) -> (Complex<T>, Complex<T>) {
    let two = T::lit(2.0);
    let tr = a.trace();
    let det = a.det();
    let disc = tr * tr - T::lit(4.0) * det;
    if disc >= T::zero() {
        let root = disc.sqrt();
        // Avoid cancellation between tr and the root.
        let s = if tr >= T::zero() {
            tr + root
        } else {
            tr - root
        };
        let (mut l1, mut l2) = if s == T::zero() {
            (T::zero(), T::zero())
        } else {
            (s / two, two * det / s)
        };
        if l1 > l2 {
            std::mem::swap(&mut l1, &mut l2);
        }
        (Complex::new(l1, T::zero()), Complex::new(l2, T::zero()))
    } else {
        let im = (-disc).sqrt() / two;
        (Complex::new(tr / two, -im), Complex::new(tr / two, im))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample<T> {
    pub k: T,
    pub det: T,
    pub re_lambda1: T,
    pub re_lambda2: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve<T> {
    pub b: T,
    pub samples: Vec<DispersionSample<T>>,
}

impl<T: Real> DispersionCurve<T> {
    pub fn min_det(&self) -> Option<&DispersionSample<T>> {
        self.samples.iter().min_by(|a, b| {
            a.det
                .partial_cmp(&b.det)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    pub fn max_growth(&self) -> T {
        self.samples
            .iter()
            .map(|s| s.re_lambda2)
            .fold(T::neg_infinity(), T::max)
    }
}

/// Uniform grid of `n` wavenumbers on `[0, k_max]`.
pub fn uniform_k_grid<T: Real>(k_max: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => {
            let step = k_max / T::lit((n - 1) as f64);
            (0..n).map(|i| step * T::lit(i as f64)).collect()
        }
    }
}

/// Default grid: [`DEFAULT_DISPERSION_SAMPLES`] points on `[0, 3 k_c]`.
pub fn default_k_grid<T: Real>(k_c: T) -> Vec<T> {
    uniform_k_grid(
        T::lit(DEFAULT_DISPERSION_SPAN) * k_c,
        DEFAULT_DISPERSION_SAMPLES,
    )
}

pub fn dispersion<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b: T,
    k_grid: &[T],
) -> DispersionCurve<T> {
    let mats = build_matrices(p, eq, b);
    let samples = k_grid
        .iter()
        .map(|&k| {
            let a = mats.mode_matrix(p.gamma, k);
            let (l1, l2) = eigenvalues(&a);
            DispersionSample {
                k,
                det: a.det(),
                re_lambda1: l1.re,
                re_lambda2: l2.re,
            }
        })
        .collect();
    DispersionCurve { b, samples }
}

/// Onset of the Turing instability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint<T> {
    pub b_c: T,
    pub k_c: T,
    pub m1: T,
    pub m2: T,
    pub det_r: T,
    pub det_q: T,
}

impl<T: Real> CriticalPoint<T> {
    /// `b > m2 / m1` is necessary for instability.
    pub fn necessary_threshold(&self) -> T {
        self.m2 / self.m1
    }
}

pub fn critical_threshold<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
) -> Result<CriticalPoint<T>> {
    let m1 = eq.labor * eq.capital;
    if !(m1 > T::zero()) {
        return Err(Error::Degenerate(format!(
            "m1 = L* K* = {m1} must be positive"
        )));
    }
    let mats = build_matrices(p, eq, T::zero());
    let q11 = mats.diffusion.get(0, 0);
    let q22 = mats.diffusion.get(1, 1);
    let m2 = p.beta1 * eq.labor * q22 + p.beta2 * eq.capital * q11;
    let det_r = mats.reaction.det();
    let det_q = q11 * q22;
    if !(det_r > T::zero()) || !(det_q > T::zero()) {
        return Err(Error::Degenerate(format!(
            "det R = {det_r} and det Q = {det_q} must both be positive"
        )));
    }
    let b_c = (m2 + T::lit(2.0) * (det_r * det_q).sqrt()) / m1;
    let k_c = (p.gamma * (det_r / det_q).sqrt()).sqrt();
    Ok(CriticalPoint {
        b_c,
        k_c,
        m1,
        m2,
        det_r,
        det_q,
    })
}

/// Coefficients `(det Q, gamma q, gamma^2 det R)` of `h(s) = det(A_k)`, `s = k^2`.
pub fn h_coefficients<T: Real>(
    p: &ScaledModelParams<T>,
    crit: &CriticalPoint<T>,
    b: T,
) -> (T, T, T) {
    let q = crit.m2 - b * crit.m1;
    (crit.det_q, p.gamma * q, p.gamma * p.gamma * crit.det_r)
}

/// `h(k^2)`.
pub fn h_polynomial<T: Real>(p: &ScaledModelParams<T>, crit: &CriticalPoint<T>, b: T, k: T) -> T {
    let (a, bb, c) = h_coefficients(p, crit, b);
    let s = k * k;
    (a * s + bb) * s + c
}

/// Squared wavenumbers `(k1^2, k2^2)` bounding the unstable band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnstableBand<T> {
    pub k1_sq: T,
    pub k2_sq: T,
}

impl<T: Real> UnstableBand<T> {
    pub fn contains_sq(&self, k_sq: T) -> bool {
        k_sq > self.k1_sq && k_sq < self.k2_sq
    }
}

/// Relative size of a negative discriminant still treated as a tangency.
const TANGENCY_TOL: f64 = 1e-10;

pub fn unstable_band<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b: T,
) -> Result<Option<UnstableBand<T>>> {
    let crit = critical_threshold(p, eq)?;
    Ok(band_from_critical(p, &crit, b))
}

pub fn band_from_critical<T: Real>(
    p: &ScaledModelParams<T>,
    crit: &CriticalPoint<T>,
    b: T,
) -> Option<UnstableBand<T>> {
    let (a, bb, c) = h_coefficients(p, crit, b);
    if bb >= T::zero() {
        return None;
    }
    let disc = bb * bb - T::lit(4.0) * a * c;
    if disc < T::zero() {
        if -disc <= T::lit(TANGENCY_TOL) * bb * bb {
            let s = -bb / (T::lit(2.0) * a);
            return Some(UnstableBand { k1_sq: s, k2_sq: s });
        }
        return None;
    }
    let t = (-bb + disc.sqrt()) / T::lit(2.0);
    Some(UnstableBand {
        k1_sq: c / t,
        k2_sq: t / a,
    })
}

/// Neumann modes `cos(k x)` on `(0, length)` have `k = n pi / length`; returns
/// those with `k^2` strictly inside the band.
pub fn admissible_modes<T: Real>(band: &UnstableBand<T>, length: T) -> Vec<T> {
    let unit = T::PI() / length;
    let n_max = (band.k2_sq.sqrt() / unit).floor().to_usize().unwrap_or(0);
    (1..=n_max)
        .map(|n| unit * T::lit(n as f64))
        .filter(|k| band.contains_sq(*k * *k))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientConditions {
    /// `b/2 + beta1 a2 g(K*)/K* > beta1 c2/K* + beta2 c1/L* + beta2 a1`.
    pub bif: bool,
    /// Equal-growth form; `None` unless `alpha1 == alpha2`.
    pub bif2: Option<bool>,
}

pub fn sufficient_conditions<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b: T,
) -> SufficientConditions {
    let (l, k) = (eq.labor, eq.capital);
    let two = T::lit(2.0);
    let a2g = p.a2 * p.g(k);
    let bif =
        b / two + p.beta1 / k * a2g > p.beta1 / k * p.c2 + p.beta2 / l * p.c1 + p.beta2 * p.a1;
    let equal_growth =
        (p.alpha1 - p.alpha2).abs() <= T::lit(1e-12) * p.alpha1.abs().max(p.alpha2.abs());
    let bif2 = equal_growth.then(|| {
        let det_b = p.beta1 * p.beta2 - T::one();
        let alpha = p.alpha1;
        b / two + det_b / alpha * a2g > det_b / alpha * (p.c1 + p.c2) + p.beta2 * p.a1
    });
    SufficientConditions { bif, bif2 }
}

/// Everything the linear analysis says about one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub matrices: LinearizedMatrices<T>,
    pub critical: CriticalPoint<T>,
    pub b: T,
    pub q: T,
    /// `b > m2/m1`.
    pub necessary_condition: bool,
    pub is_turing_unstable: bool,
    pub band: Option<UnstableBand<T>>,
    /// Wavenumbers `n/2` admitted on `(0, 2 pi)` inside the band.
    pub admissible_modes: Vec<T>,
    pub sufficient: SufficientConditions,
}

/// Linear analysis at `p.b` on the domain `(0, 2 pi)`.
pub fn analyze<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
) -> Result<StabilityReport<T>> {
    let crit = critical_threshold(p, eq)?;
    let band = band_from_critical(p, &crit, p.b);
    let admissible = band
        .map(|b| admissible_modes(&b, T::lit(2.0) * T::PI()))
        .unwrap_or_default();
    Ok(StabilityReport {
        matrices: build_matrices(p, eq, p.b),
        critical: crit,
        b: p.b,
        q: crit.m2 - p.b * crit.m1,
        necessary_condition: p.b > crit.necessary_threshold(),
        is_turing_unstable: p.b > crit.b_c,
        band,
        admissible_modes: admissible,
        sufficient: sufficient_conditions(p, eq, p.b),
    })
}

/// Reaction-only trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec2<T>>,
}

impl<T: Real> OdeTrajectory<T> {
    pub fn last(&self) -> Vec2<T> {
        *self
            .states
            .last()
            .expect("trajectory has the initial state")
    }
}

fn rk4<T: Real>(f: &impl Fn(Vec2<T>) -> Vec2<T>, y: Vec2<T>, h: T) -> Vec2<T> {
    let two = T::lit(2.0);
    let k1 = f(y);
    let k2 = f(y + k1.scale(h / two));
    let k3 = f(y + k2.scale(h / two));
    let k4 = f(y + k3.scale(h));
    y + (k1 + k2.scale(two) + k3.scale(two) + k4).scale(h / T::lit(6.0))
}

/// Integrates the reaction system `dL/dt = gamma L (...)`, `dK/dt = gamma K (...)`
/// with classical RK4 and step-doubling error control.
pub fn reaction_ode_integrate<T: Real>(
    p: &ScaledModelParams<T>,
    initial: Vec2<T>,
    t_end: T,
) -> Result<OdeTrajectory<T>> {
    if !(initial.x >= T::zero()) || !(initial.y >= T::zero()) {
        return Err(Error::Domain(format!(
            "initial state ({}, {}) must be non-negative",
            initial.x, initial.y
        )));
    }
    let f = |y: Vec2<T>| p.reaction_rhs(y.x, y.y);
    let tol = T::lit(1e-10);
    let h_min = t_end.abs().max(T::one()) * T::lit(1e-13);
    let mut h = (t_end / T::lit(1000.0)).min(T::lit(0.1) / p.gamma);
    let mut t = T::zero();
    let mut y = initial;
    let mut out = OdeTrajectory {
        times: vec![t],
        states: vec![y],
    };
    while t < t_end {
        h = h.min(t_end - t);
        let full = rk4(&f, y, h);
        let half = rk4(&f, rk4(&f, y, h / T::lit(2.0)), h / T::lit(2.0));
        let err = (half - full).norm() / T::lit(15.0);
        let scale = T::one() + half.norm();
        if err <= tol * scale || h <= h_min {
            if !half.is_finite() {
                return Err(Error::StepUnderflow {
                    t: t.to_f64_lossy(),
                    h: h.to_f64_lossy(),
                });
            }
            t += h;
            // Richardson-corrected fifth-order update.
            y = half + (half - full).scale(T::one() / T::lit(15.0));
            out.times.push(t);
            out.states.push(y);
        }
        if h <= h_min && err > tol * scale {
            return Err(Error::StepUnderflow {
                t: t.to_f64_lossy(),
                h: h.to_f64_lossy(),
            });
        }
        let ratio = if err > T::zero() {
            (tol * scale / err).powf(T::lit(0.2)) * T::lit(0.9)
        } else {
            T::lit(4.0)
        };
        h = (h * ratio.min(T::lit(4.0)).max(T::lit(0.2))).max(h_min);
    }
    Ok(out)
}
