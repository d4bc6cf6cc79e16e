//! Weakly nonlinear analysis near the Turing threshold.
//!
//! With `b = b_c + eps^2 b2` and slow time `T = eps^2 t` the pattern is
//! `w = eps A(T) rho cos(k x) + eps^2 A^2 (w20 + w22 cos(2 k x)) + ...`, and
//! the amplitude obeys the cubic Stuart-Landau equation
//! `dA/dT = sigma A - ell A^3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::{Equilibrium, ScaledModelParams};
use crate::scalar::Real;
use crate::stability::{build_matrices, critical_threshold, CriticalPoint};

/// Relative null-residual accepted as "at criticality".
pub const CRITICALITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WnlVectors<T> {
    /// Right null vector `(M, 1)` of `gamma R - k_c^2 Q(b_c)`.
    pub rho: Vec2<T>,
    /// Left null vector `(1, M*)`.
    pub eta: Vec2<T>,
    pub b_c: T,
    pub k_c: T,
    /// Admissible critical wavenumber on `(0, 2 pi)`: a multiple of 1/2.
    pub k_bar_c: T,
    /// `sqrt((b - b_c) / b_c)`, zero below threshold.
    pub epsilon_ctrl: T,
}

impl<T: Real> WnlVectors<T> {
    pub fn rho_dot_eta(&self) -> T {
        self.rho.dot(self.eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Supercritical,
    Subcritical,
}

/// Coefficients of the amplitude equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StuartLandau<T> {
    pub sigma: T,
    pub ell: T,
    pub regime: Regime,
    /// `sqrt(sigma / ell)` when supercritical.
    pub a_inf: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WnlResult<T> {
    pub vectors: WnlVectors<T>,
    pub b2: T,
    pub sigma: T,
    pub ell: T,
    pub regime: Regime,
    pub a_inf: Option<T>,
    pub w20: Vec2<T>,
    pub w22: Vec2<T>,
    /// Empty when subcritical.
    pub pattern_l: Vec<T>,
    pub pattern_k: Vec<T>,
}

impl<T: Real> WnlResult<T> {
    pub fn stuart_landau(&self) -> StuartLandau<T> {
        StuartLandau {
            sigma: self.sigma,
            ell: self.ell,
            regime: self.regime,
            a_inf: self.a_inf,
        }
    }

    pub fn pattern_parts(&self, eq: &Equilibrium<T>, nodes: &[T]) -> Result<PatternParts<T>> {
        pattern_parts(
            &self.stuart_landau(),
            &self.vectors,
            self.w20,
            self.w22,
            eq,
            nodes,
        )
    }
}

/// `k_bar = round(2 k_c) / 2`, ties upward, never below 1/2.
pub fn admissible_wavenumber<T: Real>(k_c: T) -> T {
    let half = T::lit(0.5);
    ((T::lit(2.0) * k_c + half).floor() * half).max(half)
}

/// `sqrt((b - b_c) / b_c)`, clamped at zero for `b <= b_c`.
pub fn control_parameter<T: Real>(b: T, b_c: T) -> T {
    ((b - b_c) / b_c).max(T::zero()).sqrt()
}

fn critical_matrix<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b_c: T,
    k_c: T,
) -> Mat2<T> {
    build_matrices(p, eq, b_c).mode_matrix(p.gamma, k_c)
}

/// Null vectors of the critical mode matrix; `epsilon_ctrl` uses `p.b`.
pub fn null_vectors<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b_c: T,
    k_c: T,
) -> Result<WnlVectors<T>> {
    let a = critical_matrix(p, eq, b_c, k_c);
    let a21 = a.get(1, 0);
    if a21 == T::zero() {
        return Err(Error::Degenerate(
            "critical matrix has a zero (2,1) entry".into(),
        ));
    }
    let rho = Vec2::new(-a.get(1, 1) / a21, T::one());
    let eta = Vec2::new(T::one(), -a.get(0, 0) / a21);
    let scale = a.max_abs();
    let right = a.apply(rho).norm() / rho.norm();
    let left = a.transpose().apply(eta).norm() / eta.norm();
    let tolerance = T::lit(CRITICALITY_TOL) * scale;
    let residual = right.max(left);
    if !(residual <= tolerance) {
        return Err(Error::NotCritical {
            residual: residual.to_f64_lossy(),
            tolerance: tolerance.to_f64_lossy(),
        });
    }
    if rho.dot(eta) == T::zero() {
        return Err(Error::Inconsistent("<rho, eta> vanishes".into()));
    }
    Ok(WnlVectors {
        rho,
        eta,
        b_c,
        k_c,
        k_bar_c: admissible_wavenumber(k_c),
        epsilon_ctrl: control_parameter(p.b, b_c),
    })
}

/// Bilinear forms of the quadratic part of the system at the equilibrium.
///
/// `Q_Q` carries the second-order Taylor coefficient of the capital flux
/// `(c2 - a2 g(K)) K_x`, i.e. `-a2 g'(K*)` in its second slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForms<T> {
    pub gamma: T,
    pub beta1: T,
    pub beta2: T,
    pub a1: T,
    pub capital_curvature: T,
    pub k_c_sq: T,
}

pub fn quadratic_forms<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    k_c: T,
) -> QuadraticForms<T> {
    QuadraticForms {
        gamma: p.gamma,
        beta1: p.beta1,
        beta2: p.beta2,
        a1: p.a1,
        capital_curvature: -p.a2 * p.dg(eq.capital),
        k_c_sq: k_c * k_c,
    }
}

impl<T: Real> QuadraticForms<T> {
    pub fn q_r(&self, x: Vec2<T>, y: Vec2<T>) -> Vec2<T> {
        let two = T::lit(2.0);
        let cross = x.x * y.y + x.y * y.x;
        Vec2::new(
            -two * self.beta1 * x.x * y.x + cross,
            -two * self.beta2 * x.y * y.y + cross,
        )
        .scale(self.gamma)
    }

    pub fn q_q(&self, x: Vec2<T>, y: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.a1 * x.x * y.x, self.capital_curvature * x.y * y.y)
    }

    /// `M_j = Q_R - j^2 k_c^2 Q_Q`.
    pub fn m(&self, j: u32, x: Vec2<T>, y: Vec2<T>) -> Vec2<T> {
        let jj = T::lit(f64::from(j * j));
        self.q_r(x, y) - self.q_q(x, y).scale(jj * self.k_c_sq)
    }
}

fn check_residual<T: Real>(a: &Mat2<T>, w: Vec2<T>, rhs: Vec2<T>, what: &str) -> Result<()> {
    let res = (a.apply(w) - rhs).norm();
    let scale = a.max_abs() * w.norm() + rhs.norm();
    if res <= T::lit(1e-10) * scale {
        Ok(())
    } else {
        Err(Error::Inconsistent(format!(
            "{what} residual {res} exceeds tolerance"
        )))
    }
}

/// Solves `gamma R w20 = -M0(rho, rho)/4` and
/// `(gamma R - 4 k_c^2 Q) w22 = -M2(rho, rho)/4 - b_c k_c^2 rho1 rho2 e1`.
pub fn second_order_corrections<T: Real>(
    v: &WnlVectors<T>,
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
) -> Result<(Vec2<T>, Vec2<T>)> {
    let forms = quadratic_forms(p, eq, v.k_c);
    let mats = build_matrices(p, eq, v.b_c);
    let quarter = T::lit(0.25);
    let k_sq = v.k_c * v.k_c;
    let rho = v.rho;

    let l0 = mats.reaction.scale(p.gamma);
    let rhs20 = -forms.m(0, rho, rho).scale(quarter);
    let w20 = l0.solve(rhs20)?;
    check_residual(&l0, w20, rhs20, "w20")?;

    let l2 = mats.mode_matrix(p.gamma, T::lit(2.0) * v.k_c);
    let rhs22 =
        -forms.m(2, rho, rho).scale(quarter) - Vec2::e1().scale(v.b_c * k_sq * rho.x * rho.y);
    let w22 = l2.solve(rhs22)?;
    check_residual(&l2, w22, rhs22, "w22")?;
    Ok((w20, w22))
}

/// Order-eps^3 forcing `G3` multiplying `A^3 cos(k_c x)`.
pub fn cubic_forcing<T: Real>(
    v: &WnlVectors<T>,
    w20: Vec2<T>,
    w22: Vec2<T>,
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
) -> Vec2<T> {
    let forms = quadratic_forms(p, eq, v.k_c);
    let half = T::lit(0.5);
    let k_sq = v.k_c * v.k_c;
    let rho = v.rho;
    let e1 = Vec2::e1();
    let quadratic = -(forms.m(1, rho, w20) + forms.m(1, rho, w22).scale(half));
    let transport = e1.scale(-k_sq * v.b_c * rho.x * w22.y)
        - e1.scale(half * k_sq * v.b_c * rho.y * (T::lit(2.0) * w20.x - w22.x));
    let saturation =
        Vec2::e2().scale(-p.a2 * p.d2g(eq.capital) * k_sq * rho.y.powi(3) / T::lit(8.0));
    quadratic + transport + saturation
}

/// Growth coefficient `sigma` and Landau constant `ell`. `b2` is the
/// second-order coefficient of the `b` expansion.
pub fn stuart_landau<T: Real>(
    v: &WnlVectors<T>,
    w20: Vec2<T>,
    w22: Vec2<T>,
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    b2: T,
) -> Result<StuartLandau<T>> {
    let re = v.rho_dot_eta();
    if re == T::zero() || !re.is_finite() {
        return Err(Error::Inconsistent(format!("<rho, eta> = {re}")));
    }
    let k_sq = v.k_c * v.k_c;
    let g1 = Vec2::e1().scale(-k_sq * b2 * eq.labor * v.rho.y);
    let sigma = -g1.dot(v.eta) / re;
    let ell = cubic_forcing(v, w20, w22, p, eq).dot(v.eta) / re;
    let regime = if ell > T::zero() {
        Regime::Supercritical
    } else {
        Regime::Subcritical
    };
    let a_inf = (regime == Regime::Supercritical).then(|| (sigma / ell).sqrt());
    Ok(StuartLandau {
        sigma,
        ell,
        regime,
        a_inf,
    })
}

/// The two parts of the second-order pattern on a set of nodes: the
/// even part `(L*, K*) + eps^2 A^2 (w20 + w22 cos(2 k x))` and the first
/// harmonic `eps A rho cos(k x)`, whose sign is not fixed by the analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternParts<T> {
    pub even_l: Vec<T>,
    pub even_k: Vec<T>,
    pub first_l: Vec<T>,
    pub first_k: Vec<T>,
}

impl<T: Real> PatternParts<T> {
    /// Fields with the first harmonic taken with `sign`.
    pub fn combine(&self, sign: T) -> (Vec<T>, Vec<T>) {
        let l = self
            .even_l
            .iter()
            .zip(&self.first_l)
            .map(|(&e, &f)| e + sign * f)
            .collect();
        let k = self
            .even_k
            .iter()
            .zip(&self.first_k)
            .map(|(&e, &f)| e + sign * f)
            .collect();
        (l, k)
    }
}

pub fn pattern_parts<T: Real>(
    sl: &StuartLandau<T>,
    v: &WnlVectors<T>,
    w20: Vec2<T>,
    w22: Vec2<T>,
    eq: &Equilibrium<T>,
    nodes: &[T],
) -> Result<PatternParts<T>> {
    let a_inf = sl.a_inf.ok_or(Error::Subcritical {
        ell: sl.ell.to_f64_lossy(),
    })?;
    let eps = v.epsilon_ctrl;
    let first = eps * a_inf;
    let second = eps * eps * a_inf * a_inf;
    let k = v.k_bar_c;
    let two = T::lit(2.0);
    let mut parts = PatternParts {
        even_l: Vec::with_capacity(nodes.len()),
        even_k: Vec::with_capacity(nodes.len()),
        first_l: Vec::with_capacity(nodes.len()),
        first_k: Vec::with_capacity(nodes.len()),
    };
    for &x in nodes {
        let c1 = (k * x).cos();
        let c2 = (two * k * x).cos();
        parts.even_l.push(eq.labor + second * (w20.x + w22.x * c2));
        parts
            .even_k
            .push(eq.capital + second * (w20.y + w22.y * c2));
        parts.first_l.push(first * v.rho.x * c1);
        parts.first_k.push(first * v.rho.y * c1);
    }
    Ok(parts)
}

/// Second-order approximation of the stationary pattern at the nodes.
pub fn assemble_pattern<T: Real>(
    sl: &StuartLandau<T>,
    v: &WnlVectors<T>,
    w20: Vec2<T>,
    w22: Vec2<T>,
    eq: &Equilibrium<T>,
    nodes: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    Ok(pattern_parts(sl, v, w20, w22, eq, nodes)?.combine(T::one()))
}

/// How the second-order coefficient `b2` of `b = b_c + eps^2 b2` is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `b2 = b_c`, so that `b = b_c (1 + eps^2)` with `eps^2 = (b - b_c) / b_c`.
    #[default]
    Threshold,
    /// A fixed `b2`.
    Fixed(f64),
}

impl Normalization {
    pub fn b2<T: Real>(self, b_c: T) -> T {
        match self {
            Normalization::Threshold => b_c,
            Normalization::Fixed(b2) => T::lit(b2),
        }
    }
}

/// Full weakly nonlinear analysis at `p.b`, with the pattern sampled at `nodes`.
/// The pattern is left empty when the bifurcation is subcritical.
pub fn analyze<T: Real>(
    p: &ScaledModelParams<T>,
    eq: &Equilibrium<T>,
    nodes: &[T],
    normalization: Normalization,
) -> Result<WnlResult<T>> {
    let crit: CriticalPoint<T> = critical_threshold(p, eq)?;
    let v = null_vectors(p, eq, crit.b_c, crit.k_c)?;
    let (w20, w22) = second_order_corrections(&v, p, eq)?;
    let sl = stuart_landau(&v, w20, w22, p, eq, normalization.b2(crit.b_c))?;
    let (pattern_l, pattern_k) = match sl.regime {
        Regime::Supercritical => assemble_pattern(&sl, &v, w20, w22, eq, nodes)?,
        Regime::Subcritical => (Vec::new(), Vec::new()),
    };
    Ok(WnlResult {
        vectors: v,
        b2: normalization.b2(crit.b_c),
        sigma: sl.sigma,
        ell: sl.ell,
        regime: sl.regime,
        a_inf: sl.a_inf,
        w20,
        w22,
        pattern_l,
        pattern_k,
    })
}

/// Mean square error over the `2n` nodal values of both fields.
pub fn mse<T: Real>(l: &[T], k: &[T], ref_l: &[T], ref_k: &[T]) -> Result<T> {
    let n = l.len();
    for len in [k.len(), ref_l.len(), ref_k.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let sum = l
        .iter()
        .zip(ref_l)
        .chain(k.iter().zip(ref_k))
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    Ok(sum / T::lit((2 * n) as f64))
}

/// MSE minimized over the sign of the first harmonic. On `(0, 2 pi)` with
/// `k = n/2` this is the same as minimizing over half-period shifts.
pub fn aligned_mse<T: Real>(fem_l: &[T], fem_k: &[T], parts: &PatternParts<T>) -> Result<(T, T)> {
    let mut best: Option<(T, T)> = None;
    for sign in [T::one(), -T::one()] {
        let (l, k) = parts.combine(sign);
        let e = mse(fem_l, fem_k, &l, &k)?;
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, sign));
        }
    }
    Ok(best.expect("two candidates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ReactionCoeffs, ScaledDiffusion};

    fn exp1() -> (ScaledModelParams<f64>, Equilibrium<f64>) {
        let p = ScaledModelParams::with_relative_saturation(
            ReactionCoeffs {
                alpha1: 0.5,
                alpha2: 0.15,
                beta1: 2.35,
                beta2: 2.47,
            },
            ScaledDiffusion {
                c1: 0.01,
                c2: 0.01,
                a1: 0.3,
                a2: 3e-4,
            },
            0.0,
            10.0,
            1.0,
        )
        .unwrap();
        let eq = p.equilibrium().unwrap();
        (p, eq)
    }

    #[test]
    fn wavenumber_rounding() {
        assert_eq!(admissible_wavenumber(3.9966), 4.0);
        assert_eq!(admissible_wavenumber(3.75), 4.0);
        assert_eq!(admissible_wavenumber(3.74), 3.5);
        assert_eq!(admissible_wavenumber(0.1), 0.5);
    }

    #[test]
    fn control_parameter_at_one_percent() {
        assert!((control_parameter(1.01 * 2.0, 2.0_f64) - 0.1).abs() < 1e-12);
        assert_eq!(control_parameter(1.0, 2.0), 0.0);
    }

    #[test]
    fn exp1_null_vectors() {
        let (p, eq) = exp1();
        let c = critical_threshold(&p, &eq).unwrap();
        let v = null_vectors(&p, &eq, c.b_c, c.k_c).unwrap();
        assert!((v.rho.x - 3.3687).abs() < 1e-3);
        assert!((v.eta.y - 12.5032).abs() < 1e-3);
        assert!(v.rho_dot_eta() > 0.0);
        assert_eq!(v.k_bar_c, 4.0);
    }

    #[test]
    fn off_critical_rejected() {
        let (p, eq) = exp1();
        let c = critical_threshold(&p, &eq).unwrap();
        let err = null_vectors(&p, &eq, 1.1 * c.b_c, c.k_c).unwrap_err();
        assert!(matches!(err, Error::NotCritical { .. }));
    }

    #[test]
    fn forms_basic_identities() {
        let (p, eq) = exp1();
        let f = quadratic_forms(&p, &eq, 4.0);
        let x = Vec2::new(0.3, -1.2);
        let y = Vec2::new(2.0, 0.7);
        assert_eq!(f.q_r(x, Vec2::zero()), Vec2::zero());
        assert!((f.q_r(x, y) - f.q_r(y, x)).norm() < 1e-15);
        assert_eq!(f.m(0, x, y), f.q_r(x, y));
    }

    #[test]
    fn exp1_coefficients() {
        let (p, eq) = exp1();
        let c = critical_threshold(&p, &eq).unwrap();
        let v = null_vectors(&p, &eq, c.b_c, c.k_c).unwrap();
        let (w20, w22) = second_order_corrections(&v, &p, &eq).unwrap();
        assert!((w20.x + 20.249).abs() < 1e-2 && (w20.y + 7.173).abs() < 1e-2);
        assert!((w22.x - 14.645).abs() < 1e-2 && (w22.y - 2.834).abs() < 1e-2);
        let sl = stuart_landau(&v, w20, w22, &p, &eq, 1.0).unwrap();
        assert!((sl.sigma - 0.290109).abs() < 1e-5);
        assert!((sl.ell - 7.3673).abs() < 1e-3);
        assert_eq!(sl.regime, Regime::Supercritical);
    }

    #[test]
    fn uniform_pattern_at_threshold() {
        let (p, eq) = exp1();
        let c = critical_threshold(&p, &eq).unwrap();
        let p = p.with_b(c.b_c);
        let r = analyze(&p, &eq, &[0.0, 1.0, 2.0], Normalization::default()).unwrap();
        assert!(r.pattern_l.iter().all(|&l| (l - eq.labor).abs() < 1e-14));
        assert!(r.pattern_k.iter().all(|&k| (k - eq.capital).abs() < 1e-14));
    }

    #[test]
    fn subcritical_pattern_refused() {
        let sl = StuartLandau {
            sigma: 1.0,
            ell: -1.0,
            regime: Regime::Subcritical,
            a_inf: None,
        };
        let v = WnlVectors {
            rho: Vec2::new(1.0, 1.0),
            eta: Vec2::new(1.0, 1.0),
            b_c: 1.0,
            k_c: 1.0,
            k_bar_c: 1.0,
            epsilon_ctrl: 0.1,
        };
        let eq = Equilibrium {
            labor: 1.0,
            capital: 1.0,
        };
        let err = assemble_pattern(&sl, &v, Vec2::zero(), Vec2::zero(), &eq, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Subcritical { .. }));
    }

    #[test]
    fn aligned_mse_picks_sign() {
        let parts = PatternParts {
            even_l: vec![1.0, 1.0],
            even_k: vec![2.0, 2.0],
            first_l: vec![0.1, -0.1],
            first_k: vec![0.2, -0.2],
        };
        let (l, k) = parts.combine(-1.0);
        let (e, s) = aligned_mse(&l, &k, &parts).unwrap();
        assert_eq!((e, s), (0.0, -1.0));
        assert!(mse(&[1.0], &[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }
}
