//! The rescaled labor/capital reaction-cross-diffusion system
//!
//! ```text
//! L_t - ((c1 + a1 L) L_x - b L K_x)_x = gamma L (alpha1 - beta1 L + K)
//! K_t - ((c2 - a2 g(K)) K_x)_x        = gamma K (alpha2 + L - beta2 K)
//! ```
//!
//! on `(0, 2 pi)` with homogeneous Neumann conditions.

use serde::{Deserialize, Serialize};

use crate::ces::LotkaVolterraCoeffs;
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::Real;

/// Saturation factor relating the default `K_s` to the equilibrium capital.
pub const DEFAULT_SATURATION_FACTOR: f64 = 10.0;

/// Coefficients of the rescaled system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledModelParams<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub beta1: T,
    pub beta2: T,
    /// Random diffusion of labor.
    pub c1: T,
    /// Random diffusion of capital.
    pub c2: T,
    /// Labor intra-repulsion.
    pub a1: T,
    /// Capital intra-attraction (saturated).
    pub a2: T,
    /// Attraction of labor toward capital gradients; the bifurcation parameter.
    pub b: T,
    /// Saturation constant `K_s`.
    pub saturation: T,
    /// Time-space scale factor multiplying the reaction terms.
    pub gamma: T,
}

/// Reaction part of the scaled system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionCoeffs<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub beta1: T,
    pub beta2: T,
}

/// Diffusion coefficients before rescaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDiffusion<T> {
    pub c1: T,
    pub c2: T,
    pub a11: T,
    pub a12: T,
    pub a22: T,
    pub saturation: T,
}

/// Diffusion coefficients after rescaling (the bifurcation parameter `b` is
/// set separately).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledDiffusion<T> {
    pub c1: T,
    pub c2: T,
    pub a1: T,
    pub a2: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub labor: T,
    pub capital: T,
}

impl<T: Real> Equilibrium<T> {
    pub fn as_vec(&self) -> Vec2<T> {
        Vec2::new(self.labor, self.capital)
    }
}

/// Saturation `g(K) = K / (K_s^2 + K^2)`, maximal at `K = K_s`.
pub fn saturation_g<T: Real>(k: T, ks: T) -> T {
    k / (ks * ks + k * k)
}

/// `g'(K) = (K_s^2 - K^2) / (K_s^2 + K^2)^2`.
pub fn saturation_dg<T: Real>(k: T, ks: T) -> T {
    let den = ks * ks + k * k;
    (ks * ks - k * k) / (den * den)
}

/// `g''(K) = 2K (K^2 - 3 K_s^2) / (K_s^2 + K^2)^3`.
pub fn saturation_d2g<T: Real>(k: T, ks: T) -> T {
    let den = ks * ks + k * k;
    T::lit(2.0) * k * (k * k - T::lit(3.0) * ks * ks) / (den * den * den)
}

impl<T: Real> ReactionCoeffs<T> {
    /// Scaled reaction coefficients from the (unscaled) Lotka-Volterra system.
    /// Labor is scaled by `b21`, capital by `b12`.
    pub fn from_lotka_volterra(lv: &LotkaVolterraCoeffs<T>) -> Result<Self> {
        let (b12, b21) = (lv.b12(), lv.b21());
        if !(b12 > T::zero()) || !(b21 > T::zero()) {
            return Err(Error::Degenerate(format!(
                "rescaling needs strict mutualism, got b12 = {b12}, b21 = {b21}"
            )));
        }
        Ok(Self {
            alpha1: lv.growth_labor,
            alpha2: lv.growth_capital,
            beta1: -lv.b11() / b21,
            beta2: -lv.b22() / b12,
        })
    }

    pub fn equilibrium(&self) -> Result<Equilibrium<T>> {
        let det = self.beta1 * self.beta2 - T::one();
        if !(det > T::zero()) {
            return Err(Error::NoEquilibrium {
                product: (self.beta1 * self.beta2).to_f64_lossy(),
            });
        }
        Ok(Equilibrium {
            labor: (self.alpha2 + self.alpha1 * self.beta2) / det,
            capital: (self.alpha1 + self.alpha2 * self.beta1) / det,
        })
    }
}

/// Change of variables to the scaled system.
pub fn rescale<T: Real>(
    lv: &LotkaVolterraCoeffs<T>,
    raw: &RawDiffusion<T>,
    gamma: T,
) -> Result<ScaledModelParams<T>> {
    let reaction = ReactionCoeffs::from_lotka_volterra(lv)?;
    let (b12, b21) = (lv.b12(), lv.b21());
    for (name, v) in [
        ("c1", raw.c1),
        ("c2", raw.c2),
        ("a11", raw.a11),
        ("a12", raw.a12),
        ("a22", raw.a22),
    ] {
        if !(v >= T::zero()) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("{v} must be non-negative"),
            });
        }
    }
    let p = ScaledModelParams {
        alpha1: reaction.alpha1,
        alpha2: reaction.alpha2,
        beta1: reaction.beta1,
        beta2: reaction.beta2,
        c1: raw.c1,
        c2: raw.c2,
        a1: raw.a11 / b21,
        a2: raw.a22 * b12,
        b: raw.a12 / b12,
        saturation: b12 * raw.saturation,
        gamma,
    };
    p.validate()?;
    Ok(p)
}

impl<T: Real> ScaledModelParams<T> {
    pub fn from_parts(
        reaction: ReactionCoeffs<T>,
        diffusion: ScaledDiffusion<T>,
        b: T,
        saturation: T,
        gamma: T,
    ) -> Result<Self> {
        let p = Self {
            alpha1: reaction.alpha1,
            alpha2: reaction.alpha2,
            beta1: reaction.beta1,
            beta2: reaction.beta2,
            c1: diffusion.c1,
            c2: diffusion.c2,
            a1: diffusion.a1,
            a2: diffusion.a2,
            b,
            saturation,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Like [`Self::from_parts`] with `K_s = factor * K*`.
    pub fn with_relative_saturation(
        reaction: ReactionCoeffs<T>,
        diffusion: ScaledDiffusion<T>,
        b: T,
        factor: T,
        gamma: T,
    ) -> Result<Self> {
        let eq = reaction.equilibrium()?;
        Self::from_parts(reaction, diffusion, b, factor * eq.capital, gamma)
    }

    pub fn reaction(&self) -> ReactionCoeffs<T> {
        ReactionCoeffs {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            beta1: self.beta1,
            beta2: self.beta2,
        }
    }

    pub fn diffusion(&self) -> ScaledDiffusion<T> {
        ScaledDiffusion {
            c1: self.c1,
            c2: self.c2,
            a1: self.a1,
            a2: self.a2,
        }
    }

    pub fn with_b(mut self, b: T) -> Self {
        self.b = b;
        self
    }

    /// Non-negativity, ellipticity, competition dominance and `gamma > 0`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("c1", self.c1),
            ("c2", self.c2),
            ("a1", self.a1),
            ("a2", self.a2),
            ("b", self.b),
        ];
        for (name, v) in fields {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and non-negative"),
                });
            }
        }
        if !(self.saturation > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "saturation",
                reason: format!("K_s = {} must be positive", self.saturation),
            });
        }
        if !(self.gamma > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{} must be positive", self.gamma),
            });
        }
        if !(self.c1 + self.a1 > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "c1",
                reason: "ellipticity requires c1 + a1 > 0".into(),
            });
        }
        self.check_capital_ellipticity()?;
        if !(self.alpha1 + self.alpha2 > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "alpha1",
                reason: "growth rates must not both vanish".into(),
            });
        }
        if !(self.beta1 * self.beta2 > T::one()) {
            return Err(Error::NoEquilibrium {
                product: (self.beta1 * self.beta2).to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// `c2 > a2 g(K_s)`: capital diffusivity stays positive for every `K >= 0`.
    pub fn check_capital_ellipticity(&self) -> Result<()> {
        if self.c2 > self.a2 * self.max_saturation() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "c2",
                reason: format!(
                    "ellipticity requires c2 = {} > a2 g(K_s) = {}",
                    self.c2,
                    self.a2 * self.max_saturation()
                ),
            })
        }
    }

    pub fn g(&self, k: T) -> T {
        saturation_g(k, self.saturation)
    }

    pub fn dg(&self, k: T) -> T {
        saturation_dg(k, self.saturation)
    }

    pub fn d2g(&self, k: T) -> T {
        saturation_d2g(k, self.saturation)
    }

    pub fn max_saturation(&self) -> T {
        T::one() / (T::lit(2.0) * self.saturation)
    }

    pub fn labor_diffusivity(&self, labor: T) -> T {
        self.c1 + self.a1 * labor
    }

    pub fn capital_diffusivity(&self, capital: T) -> T {
        self.c2 - self.a2 * self.g(capital)
    }

    pub fn equilibrium(&self) -> Result<Equilibrium<T>> {
        self.reaction().equilibrium()
    }

    /// Reaction right-hand side (with the `gamma` factor) at a point.
    pub fn reaction_rhs(&self, labor: T, capital: T) -> Vec2<T> {
        Vec2::new(
            self.gamma * labor * (self.alpha1 - self.beta1 * labor + capital),
            self.gamma * capital * (self.alpha2 + labor - self.beta2 * capital),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ces::Optimum;
    use crate::linalg::Mat2;

    fn table_exp1() -> ScaledModelParams<f64> {
        let reaction = ReactionCoeffs {
            alpha1: 0.5,
            alpha2: 0.15,
            beta1: 2.35,
            beta2: 2.47,
        };
        let diffusion = ScaledDiffusion {
            c1: 0.01,
            c2: 0.01,
            a1: 0.3,
            a2: 3e-4,
        };
        ScaledModelParams::with_relative_saturation(reaction, diffusion, 1.0, 10.0, 1.0).unwrap()
    }

    #[test]
    fn saturation_peak_and_origin() {
        let ks: f64 = 1.7;
        assert!((saturation_g(ks, ks) - 1.0 / (2.0 * ks)).abs() < 1e-15);
        assert_eq!(saturation_dg(ks, ks), 0.0);
        assert_eq!(saturation_g(0.0, ks), 0.0);
    }

    #[test]
    fn saturation_derivatives_match_finite_differences() {
        let ks: f64 = 0.8;
        for i in 0..100 {
            let k = 0.013 + 0.05 * i as f64;
            let h = 1e-5 * k.max(0.1);
            let fd1 = (saturation_g(k + h, ks) - saturation_g(k - h, ks)) / (2.0 * h);
            let fd2 = (saturation_dg(k + h, ks) - saturation_dg(k - h, ks)) / (2.0 * h);
            let d1 = saturation_dg(k, ks);
            let d2 = saturation_d2g(k, ks);
            assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1e-3), "g' at {k}");
            assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1e-3), "g'' at {k}");
        }
    }

    #[test]
    fn saturation_has_unique_maximum_at_ks() {
        let ks: f64 = 2.5;
        let n = 20_000;
        let (mut best_k, mut best) = (0.0, f64::MIN);
        for i in 0..=n {
            let k = 50.0 * ks * i as f64 / n as f64;
            let v = saturation_g(k, ks);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        assert!((best_k - ks).abs() <= 50.0 * ks / n as f64);
        assert!(saturation_dg(0.99 * ks, ks) > 0.0 && saturation_dg(1.01 * ks, ks) < 0.0);
    }

    #[test]
    fn symmetric_equilibrium() {
        let r = ReactionCoeffs::<f64> {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 2.0,
            beta2: 2.0,
        };
        let eq = r.equilibrium().unwrap();
        assert!((eq.labor - 1.0).abs() < 1e-15 && (eq.capital - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_equilibria() {
        let eq = table_exp1().equilibrium().unwrap();
        assert!((eq.labor - 0.29).abs() < 0.005 && (eq.capital - 0.18).abs() < 0.005);
        let r2 = ReactionCoeffs::<f64> {
            alpha1: 0.2,
            alpha2: 0.15,
            beta1: 0.48,
            beta2: 8.38,
        };
        let eq2 = r2.equilibrium().unwrap();
        assert!((eq2.labor - 0.6).abs() < 0.005 && (eq2.capital - 0.09).abs() < 0.005);
    }

    #[test]
    fn reaction_vanishes_at_equilibrium() {
        let p = table_exp1();
        let eq = p.equilibrium().unwrap();
        let r = p.reaction_rhs(eq.labor, eq.capital);
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn weak_competition_has_no_equilibrium() {
        let r = ReactionCoeffs::<f64> {
            alpha1: 0.05,
            alpha2: 0.15,
            beta1: 0.045,
            beta2: 5.4,
        };
        assert!(matches!(r.equilibrium(), Err(Error::NoEquilibrium { .. })));
    }

    #[test]
    fn ellipticity_over_dense_capital_range() {
        let p = table_exp1();
        let floor = p.c2 - p.a2 * p.g(p.saturation);
        assert!(floor > 0.0);
        for i in 0..=5000 {
            let k = 50.0 * p.saturation * i as f64 / 5000.0;
            assert!(p.capital_diffusivity(k) >= floor - 1e-15);
        }
    }

    #[test]
    fn identity_rescaling_passes_through() {
        let lv = LotkaVolterraCoeffs {
            growth_labor: 0.4,
            growth_capital: 0.2,
            interaction: Mat2::new(-3.0, 1.0, 1.0, -2.0),
            optimum: Optimum {
                labor: 0.16,
                capital: 0.18,
            },
        };
        let raw = RawDiffusion {
            c1: 0.01,
            c2: 0.02,
            a11: 0.3,
            a12: 1.5,
            a22: 1e-3,
            saturation: 2.0,
        };
        let p = rescale(&lv, &raw, 1.0).unwrap();
        assert_eq!((p.beta1, p.beta2), (3.0, 2.0));
        assert_eq!((p.a1, p.a2, p.b, p.saturation), (0.3, 1e-3, 1.5, 2.0));
        assert_eq!((p.alpha1, p.alpha2, p.c1, p.c2), (0.4, 0.2, 0.01, 0.02));
    }

    #[test]
    fn rescaling_requires_mutualism() {
        let lv = LotkaVolterraCoeffs {
            growth_labor: 0.4,
            growth_capital: 0.2,
            interaction: Mat2::new(-3.0, 0.0, 0.0, -2.0),
            optimum: Optimum {
                labor: 0.1,
                capital: 0.1,
            },
        };
        let raw = RawDiffusion {
            c1: 0.01,
            c2: 0.02,
            a11: 0.0,
            a12: 0.0,
            a22: 0.0,
            saturation: 1.0,
        };
        assert!(matches!(rescale(&lv, &raw, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ellipticity_violation_is_rejected() {
        let mut p = table_exp1();
        p.a2 = 10.0 * p.c2 * 2.0 * p.saturation;
        assert!(p.validate().is_err());
    }
}
