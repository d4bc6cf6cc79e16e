//! CES production, profit maximization and the Lotka-Volterra coefficients
//! induced by the profit Hessian.
//!
//! Vectors and matrices are ordered (labor, capital) throughout, matching the
//! order of the reaction system. The output price is the numeraire (p = 1) and
//! factor prices are held at their stable values `w*`, `r*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::scalar::{rel_diff, Real};

/// Parameters of `Y(K, L) = A (alpha K^eta + beta L^eta)^(epsilon / eta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CesParams<T> {
    /// Total factor productivity `A`.
    pub productivity: T,
    /// Capital income share `alpha`.
    pub capital_share: T,
    /// Labor income share `beta`.
    pub labor_share: T,
    /// Returns-to-scale exponent `epsilon`.
    pub returns: T,
    /// Substitution exponent `eta`.
    pub substitution: T,
}

impl<T: Real> CesParams<T> {
    pub fn new(
        productivity: T,
        capital_share: T,
        labor_share: T,
        returns: T,
        substitution: T,
    ) -> Result<Self> {
        let p = Self {
            productivity,
            capital_share,
            labor_share,
            returns,
            substitution,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the usual parameter range: shares and returns in (0, 1),
    /// `eta < 1`, `eta != 0`, `epsilon >= eta`, and `A > 0`.
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: T| {
            if v > T::zero() && v < T::one() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must lie in (0, 1)"),
                })
            }
        };
        if !(self.productivity > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "productivity",
                reason: format!("{} must be positive", self.productivity),
            });
        }
        unit("capital_share", self.capital_share)?;
        unit("labor_share", self.labor_share)?;
        unit("returns", self.returns)?;
        if !(self.substitution < T::one()) || self.substitution == T::zero() {
            return Err(Error::InvalidParameter {
                name: "substitution",
                reason: format!("{} must satisfy eta < 1, eta != 0", self.substitution),
            });
        }
        if self.returns < self.substitution {
            return Err(Error::InvalidParameter {
                name: "returns",
                reason: format!(
                    "epsilon = {} must be >= eta = {}",
                    self.returns, self.substitution
                ),
            });
        }
        Ok(())
    }

    /// `alpha K^eta + beta L^eta`.
    fn aggregate(&self, capital: T, labor: T) -> T {
        self.capital_share * capital.powf(self.substitution)
            + self.labor_share * labor.powf(self.substitution)
    }
}

/// Stable wage and rental rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPrices<T> {
    pub wage: T,
    pub rental: T,
}

impl<T: Real> FactorPrices<T> {
    pub fn new(wage: T, rental: T) -> Result<Self> {
        let f = Self { wage, rental };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wage > T::zero()) || !(self.rental > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "prices",
                reason: format!(
                    "wage {} and rental {} must be positive",
                    self.wage, self.rental
                ),
            });
        }
        Ok(())
    }
}

/// Factor levels at the profits optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum<T> {
    pub labor: T,
    pub capital: T,
}

/// Coefficients of `dL/dt = L (a1 + b11 L + b12 K)`, `dK/dt = K (a2 + b21 L + b22 K)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LotkaVolterraCoeffs<T> {
    pub growth_labor: T,
    pub growth_capital: T,
    /// Interaction matrix `B` in (labor, capital) order.
    pub interaction: Mat2<T>,
    pub optimum: Optimum<T>,
}

impl<T: Real> LotkaVolterraCoeffs<T> {
    pub fn b11(&self) -> T {
        self.interaction.get(0, 0)
    }
    pub fn b12(&self) -> T {
        self.interaction.get(0, 1)
    }
    pub fn b21(&self) -> T {
        self.interaction.get(1, 0)
    }
    pub fn b22(&self) -> T {
        self.interaction.get(1, 1)
    }

    /// Mutualistic sign structure: positive growth, negative self-interaction,
    /// symmetric non-negative cross terms, positive determinant.
    pub fn check_sign_structure(&self) -> Result<()> {
        let b = &self.interaction;
        let sym_tol = T::lit(1e-12) * self.b12().abs().max(T::one());
        let ok = self.growth_labor > T::zero()
            && self.growth_capital > T::zero()
            && self.b11() < T::zero()
            && self.b22() < T::zero()
            && (self.b12() - self.b21()).abs() <= sym_tol
            && self.b12() >= T::zero()
            && b.det() > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::Inconsistent(format!(
                "Lotka-Volterra sign structure violated: growth = ({}, {}), B = {:?}, det = {}",
                self.growth_labor,
                self.growth_capital,
                b.m,
                b.det()
            )))
        }
    }
}

/// Which closed form of the optimum and which off-diagonal Hessian entry
/// define the Lotka-Volterra coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Exact first-order-condition optimum and the true (symmetric) Hessian.
    #[default]
    Exact,
    /// The historically published closed form: both factors use the same
    /// bracket factor, the Hessian is evaluated with prices substituted for the
    /// marginal products, and its upper off-diagonal entry is used as the
    /// common mutualism coefficient. Reproduces the published coefficient table.
    Published,
}

fn require_positive<T: Real>(capital: T, labor: T) -> Result<()> {
    if capital > T::zero() && labor > T::zero() && capital.is_finite() && labor.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "CES inputs must be positive and finite (K = {capital}, L = {labor})"
        )))
    }
}

/// CES output `Y(K, L)`.
pub fn output<T: Real>(p: &CesParams<T>, capital: T, labor: T) -> Result<T> {
    require_positive(capital, labor)?;
    let q = p.aggregate(capital, labor);
    Ok(p.productivity * q.powf(p.returns / p.substitution))
}

/// Marginal products `(dY/dL, dY/dK)`.
pub fn marginal_products<T: Real>(p: &CesParams<T>, capital: T, labor: T) -> Result<Vec2<T>> {
    require_positive(capital, labor)?;
    let eta = p.substitution;
    let q = p.aggregate(capital, labor);
    let common = p.productivity * p.returns * q.powf(p.returns / eta - T::one());
    Ok(Vec2::new(
        common * p.labor_share * labor.powf(eta - T::one()),
        common * p.capital_share * capital.powf(eta - T::one()),
    ))
}

/// Profits `Y - w L - r K` with unit output price.
pub fn profits<T: Real>(p: &CesParams<T>, f: &FactorPrices<T>, capital: T, labor: T) -> Result<T> {
    Ok(output(p, capital, labor)? - f.wage * labor - f.rental * capital)
}

fn require_interior_returns<T: Real>(p: &CesParams<T>) -> Result<()> {
    p.validate()?;
    if p.returns >= T::one() {
        return Err(Error::InvalidParameter {
            name: "returns",
            reason: "the optimum requires epsilon < 1".into(),
        });
    }
    Ok(())
}

/// Profit-maximizing factor levels: the exact solution of `Y_L = w*`, `Y_K = r*`.
pub fn profits_optimum<T: Real>(p: &CesParams<T>, f: &FactorPrices<T>) -> Result<Optimum<T>> {
    require_interior_returns(p)?;
    f.validate()?;
    let one = T::one();
    let (eps, eta) = (p.returns, p.substitution);
    // Capital/labor ratio from dividing the two first-order conditions.
    let ratio = (f.wage * p.capital_share / (f.rental * p.labor_share)).powf(one / (one - eta));
    let bracket = p.labor_share + p.capital_share * ratio.powf(eta);
    let labor_pow = p.productivity * eps * p.labor_share / f.wage * bracket.powf((eps - eta) / eta);
    let labor = labor_pow.powf(one / (one - eps));
    Ok(Optimum {
        labor,
        capital: ratio * labor,
    })
}

/// The published closed form, which reuses the labor bracket factor for
/// capital. It satisfies the labor first-order condition but not the capital
/// one unless `alpha w* = beta r*` and `eta` makes the brackets coincide.
pub fn published_optimum<T: Real>(p: &CesParams<T>, f: &FactorPrices<T>) -> Result<Optimum<T>> {
    require_interior_returns(p)?;
    f.validate()?;
    let one = T::one();
    let (eps, eta) = (p.returns, p.substitution);
    let bracket = one
        + (f.wage / f.rental).powf(eta / (one - eta))
            * (p.capital_share / p.labor_share).powf(one / (one - eta));
    let rho = p.productivity * eps * bracket.powf((eps - eta) / eta);
    Ok(Optimum {
        labor: (rho / f.wage * p.labor_share.powf(eps / eta)).powf(one / (one - eps)),
        capital: (rho / f.rental * p.capital_share.powf(eps / eta)).powf(one / (one - eps)),
    })
}

/// Hessian of profits in (labor, capital) order at any positive point.
///
/// Written in terms of the marginal products, so at the optimum it coincides
/// with the price-substituted form of [`hessian_at_prices`].
pub fn profits_hessian<T: Real>(p: &CesParams<T>, capital: T, labor: T) -> Result<Mat2<T>> {
    let mp = marginal_products(p, capital, labor)?;
    let one = T::one();
    let (eps, eta) = (p.returns, p.substitution);
    let q = p.aggregate(capital, labor);
    let h11 = mp.x / labor * ((eps - eta) * p.labor_share * labor.powf(eta) / q - (one - eta));
    let h22 =
        mp.y / capital * ((eps - eta) * p.capital_share * capital.powf(eta) / q - (one - eta));
    let h12 = (eps - eta) * p.capital_share * capital.powf(eta - one) * mp.x / q;
    Ok(Mat2::new(h11, h12, h12, h22))
}

/// Hessian with the marginal products replaced by the stable prices.
/// Not symmetric away from the exact optimum.
pub fn hessian_at_prices<T: Real>(
    p: &CesParams<T>,
    f: &FactorPrices<T>,
    capital: T,
    labor: T,
) -> Result<Mat2<T>> {
    require_positive(capital, labor)?;
    let one = T::one();
    let (eps, eta) = (p.returns, p.substitution);
    let (w, r) = (f.wage, f.rental);
    let q = p.aggregate(capital, labor);
    let (al, be) = (p.capital_share, p.labor_share);
    Ok(Mat2::new(
        (be * (eps - eta) / q * w * labor.powf(eta) - (one - eta) * w) / labor,
        al * (eps - eta) / q * w * capital.powf(eta - one),
        be * (eps - eta) / q * r * labor.powf(eta - one),
        (al * (eps - eta) / q * r * capital.powf(eta) - (one - eta) * r) / capital,
    ))
}

/// Lotka-Volterra coefficients from the exact optimum.
pub fn derive_lv<T: Real>(p: &CesParams<T>, f: &FactorPrices<T>) -> Result<LotkaVolterraCoeffs<T>> {
    derive_lv_with(p, f, Convention::Exact)
}

pub fn derive_lv_with<T: Real>(
    p: &CesParams<T>,
    f: &FactorPrices<T>,
    convention: Convention,
) -> Result<LotkaVolterraCoeffs<T>> {
    let (optimum, hessian, interaction) = match convention {
        Convention::Exact => {
            let opt = profits_optimum(p, f)?;
            let h = profits_hessian(p, opt.capital, opt.labor)?;
            (opt, h, h)
        }
        Convention::Published => {
            let opt = published_optimum(p, f)?;
            let h = hessian_at_prices(p, f, opt.capital, opt.labor)?;
            let sym = Mat2::new(h.get(0, 0), h.get(0, 1), h.get(0, 1), h.get(1, 1));
            (opt, h, sym)
        }
    };
    let growth = -hessian.apply(Vec2::new(optimum.labor, optimum.capital));
    let lv = LotkaVolterraCoeffs {
        growth_labor: growth.x,
        growth_capital: growth.y,
        interaction,
        optimum,
    };
    let keep = T::one() - p.returns;
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    if rel_diff(lv.growth_labor, f.wage * keep, T::min_positive_value()) > tol
        || rel_diff(lv.growth_capital, f.rental * keep, T::min_positive_value()) > tol
    {
        return Err(Error::Inconsistent(format!(
            "growth rates ({}, {}) differ from ((1-eps) w*, (1-eps) r*) = ({}, {})",
            lv.growth_labor,
            lv.growth_capital,
            f.wage * keep,
            f.rental * keep
        )));
    }
    lv.check_sign_structure()?;
    Ok(lv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> (CesParams<f64>, FactorPrices<f64>) {
        (
            CesParams::<f64>::new(1.0, 0.3, 0.6, 0.5, 0.2).unwrap(),
            FactorPrices::<f64>::new(1.0, 0.3).unwrap(),
        )
    }

    #[test]
    fn unit_inputs_with_unit_shares() {
        let p = CesParams::<f64>::new(1.0, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!((output(&p, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_exponents_collapse_to_share_sum() {
        let p = CesParams::<f64>::new(2.0, 0.3, 0.6, 0.2, 0.2).unwrap();
        assert!((output(&p, 1.0, 1.0).unwrap() - 1.8).abs() < 1e-14);
    }

    #[test]
    fn output_matches_high_precision_value() {
        let p = CesParams::<f64>::new(1.0, 0.3, 0.6, 0.5, 0.2).unwrap();
        // 40-digit evaluation of the same formula.
        let reference = 1.246_247_756_218_022_6_f64;
        assert!((output(&p, 2.0, 3.0).unwrap() - reference).abs() < 4e-16);
    }

    #[test]
    fn nonpositive_inputs_are_domain_errors() {
        let (p, _) = exp1();
        assert!(matches!(output(&p, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            marginal_products(&p, 1.0, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hand_evaluated_marginal_products() {
        let p = CesParams::<f64>::new(1.0, 0.5, 0.5, 0.5, 0.5).unwrap();
        let mp = marginal_products(&p, 1.0, 1.0).unwrap();
        assert!((mp.x - 0.25).abs() < 1e-15 && (mp.y - 0.25).abs() < 1e-15);
    }

    #[test]
    fn parameter_range_is_enforced() {
        assert!(CesParams::<f64>::new(1.0, 0.3, 0.6, 1.0, 0.2).is_err());
        assert!(CesParams::<f64>::new(1.0, 0.3, 0.6, 0.5, 0.0).is_err());
        assert!(CesParams::<f64>::new(1.0, 0.3, 0.6, 0.1, 0.2).is_err());
        assert!(CesParams::<f64>::new(0.0, 0.3, 0.6, 0.5, 0.2).is_err());
        assert!(CesParams::<f64>::new(1.0, 0.3, 0.6, 0.5, -2.0).is_ok());
        assert!(FactorPrices::<f64>::new(0.0, 1.0).is_err());
    }

    #[test]
    fn optimum_satisfies_first_order_conditions() {
        let (p, f) = exp1();
        let opt = profits_optimum(&p, &f).unwrap();
        let mp = marginal_products(&p, opt.capital, opt.labor).unwrap();
        assert!(rel_diff(mp.x, f.wage, 1e-300) < 1e-12);
        assert!(rel_diff(mp.y, f.rental, 1e-300) < 1e-12);
    }

    #[test]
    fn published_form_misses_capital_condition() {
        let (p, f) = exp1();
        let opt = published_optimum(&p, &f).unwrap();
        let exact = profits_optimum(&p, &f).unwrap();
        assert!(rel_diff(opt.labor, exact.labor, 1e-300) < 1e-12);
        let mp = marginal_products(&p, opt.capital, opt.labor).unwrap();
        assert!((mp.y - f.rental).abs() > 0.1);
    }

    #[test]
    fn hessian_determinant_at_optimum() {
        let (p, f) = exp1();
        let opt = profits_optimum(&p, &f).unwrap();
        let h = profits_hessian(&p, opt.capital, opt.labor).unwrap();
        let expected = (1.0 - 0.5) * (1.0 - 0.2) * f.wage * f.rental / (opt.labor * opt.capital);
        assert!(h.get(0, 0) < 0.0 && h.get(1, 1) < 0.0);
        assert!(rel_diff(h.det(), expected, 1e-300) < 1e-8);
        let hp = hessian_at_prices(&p, &f, opt.capital, opt.labor).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(rel_diff(h.get(i, j), hp.get(i, j), 1e-300) < 1e-10);
            }
        }
    }

    #[test]
    fn equal_exponents_decouple() {
        let p = CesParams::<f64>::new(1.0, 0.3, 0.6, 0.4, 0.4).unwrap();
        let f = FactorPrices::<f64>::new(0.8, 0.5).unwrap();
        let h = profits_hessian(&p, 1.3, 0.7).unwrap();
        assert_eq!(h.get(0, 1), 0.0);
        assert_eq!(h.get(1, 0), 0.0);
        let lv = derive_lv(&p, &f).unwrap();
        assert_eq!(lv.b12(), 0.0);
        assert_eq!(lv.b21(), 0.0);
    }

    #[test]
    fn growth_rates_are_retained_price_fraction() {
        let (p, f) = exp1();
        for conv in [Convention::Exact, Convention::Published] {
            let lv = derive_lv_with(&p, &f, conv).unwrap();
            assert!((lv.growth_labor - 0.5).abs() < 1e-12);
            assert!((lv.growth_capital - 0.15).abs() < 1e-12);
        }
    }

    #[test]
    fn optimum_is_lotka_volterra_equilibrium() {
        let (p, f) = exp1();
        let lv = derive_lv(&p, &f).unwrap();
        let o = lv.optimum;
        let r = lv.interaction.apply(Vec2::new(o.labor, o.capital))
            + Vec2::new(lv.growth_labor, lv.growth_capital);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let p = CesParams::<f32>::new(1.0, 0.3, 0.6, 0.5, 0.2).unwrap();
        let f = FactorPrices::<f32>::new(1.0, 0.3).unwrap();
        let lv = derive_lv(&p, &f).unwrap();
        assert!((lv.growth_labor - 0.5).abs() < 1e-5);
    }
}
