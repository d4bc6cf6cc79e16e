use labcap_core::linalg::Vec2;
use labcap_core::model::{Equilibrium, ReactionCoeffs, ScaledDiffusion, ScaledModelParams};
use labcap_core::stability::*;
use proptest::prelude::*;

fn model(
    (alpha1, alpha2, beta1, beta_prod): (f64, f64, f64, f64),
    (c1, c2, a1, a2_frac): (f64, f64, f64, f64),
    gamma: f64,
) -> Option<(ScaledModelParams<f64>, Equilibrium<f64>)> {
    let reaction = ReactionCoeffs {
        alpha1,
        alpha2,
        beta1,
        beta2: beta_prod / beta1,
    };
    let eq = reaction.equilibrium().ok()?;
    // a2 as a fraction of the ellipticity bound c2 / g(K_s) = 2 c2 K_s.
    let ks = 10.0 * eq.capital;
    let diffusion = ScaledDiffusion {
        c1,
        c2,
        a1,
        a2: a2_frac * 2.0 * c2 * ks,
    };
    let p = ScaledModelParams::from_parts(reaction, diffusion, 0.0, ks, gamma).ok()?;
    Some((p, eq))
}

fn valid_model() -> impl Strategy<Value = (ScaledModelParams<f64>, Equilibrium<f64>)> {
    (
        (0.01..1.0, 0.01..1.0, 0.1..5.0, 1.05..10.0),
        (1e-3..0.5, 1e-3..0.5, 0.0..1.0, 0.0..0.95),
        0.5..10.0,
    )
        .prop_filter_map("invalid model", |(r, d, g)| model(r, d, g))
}

fn exp1() -> (ScaledModelParams<f64>, Equilibrium<f64>) {
    model((0.5, 0.15, 2.35, 2.35 * 2.47), (0.01, 0.01, 0.3, 0.0), 1.0)
        .map(|(mut p, eq)| {
            p.a2 = 3e-4;
            (p, eq)
        })
        .unwrap()
}

/// Smallest `b` with `det(A_k) = 0` at a fixed `k`, by bisection.
fn b_at(p: &ScaledModelParams<f64>, eq: &Equilibrium<f64>, k: f64) -> f64 {
    let det = |b: f64| build_matrices(p, eq, b).mode_matrix(p.gamma, k).det();
    let (mut lo, mut hi) = (0.0, 1.0);
    while det(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    if det(lo) <= 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if det(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `b_at` over `(0, k_max]` after a coarse scan.
fn scanned_threshold(p: &ScaledModelParams<f64>, eq: &Equilibrium<f64>, k_max: f64) -> (f64, f64) {
    let n = 400;
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=n {
        let k = k_max * i as f64 / n as f64;
        let b = b_at(p, eq, k);
        if b < best.0 {
            best = (b, k);
        }
    }
    let step = k_max / n as f64;
    let (mut a, mut c) = ((best.1 - step).max(1e-9), (best.1 + step).min(k_max));
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = c - phi * (c - a);
        let x2 = a + phi * (c - a);
        if b_at(p, eq, x1) < b_at(p, eq, x2) {
            c = x2;
        } else {
            a = x1;
        }
    }
    let k = 0.5 * (a + c);
    (b_at(p, eq, k), k)
}

#[test]
fn threshold_matches_scan_oracle_without_self_diffusion() {
    let (mut p, _) = exp1();
    p.a1 = 0.0;
    p.a2 = 0.0;
    let eq = p.equilibrium().unwrap();
    let c = critical_threshold(&p, &eq).unwrap();
    let (b, k) = scanned_threshold(&p, &eq, 4.0 * c.k_c);
    assert!((b - c.b_c).abs() <= 1e-8 * c.b_c, "{b} vs {}", c.b_c);
    assert!((k - c.k_c).abs() <= 1e-4 * c.k_c, "{k} vs {}", c.k_c);
}

#[test]
fn exp1_dispersion_dips_around_critical_wavenumber() {
    let (p, eq) = exp1();
    let c = critical_threshold(&p, &eq).unwrap();
    let b = 1.01 * c.b_c;
    let curve = dispersion(&p, &eq, b, &default_k_grid(c.k_c));
    assert_eq!(curve.samples.len(), DEFAULT_DISPERSION_SAMPLES);
    let negative: Vec<f64> = curve
        .samples
        .iter()
        .filter(|s| s.det < 0.0)
        .map(|s| s.k)
        .collect();
    assert!(!negative.is_empty());
    let (lo, hi) = (negative[0], *negative.last().unwrap());
    assert!(lo < c.k_c && c.k_c < hi);
    let band = band_from_critical(&p, &c, b).unwrap();
    let dk = curve.samples[1].k;
    assert!((lo * lo - band.k1_sq).abs() <= 2.0 * dk * hi);
    assert!((hi * hi - band.k2_sq).abs() <= 2.0 * dk * hi);
    assert!(curve.max_growth() > 0.0);
}

#[test]
fn neutral_stability_at_threshold() {
    let (p, eq) = exp1();
    let c = critical_threshold(&p, &eq).unwrap();
    let grid: Vec<f64> = uniform_k_grid(3.0 * c.k_c, 3001)
        .into_iter()
        .chain([c.k_c])
        .collect();
    let curve = dispersion(&p, &eq, c.b_c, &grid);
    assert!(curve.max_growth().abs() <= 1e-8, "{}", curve.max_growth());
}

#[test]
fn ode_returns_to_equilibrium() {
    let (p, eq) = exp1();
    for factor in [1.1, 0.9, 1.5, 0.5] {
        let start = eq.as_vec().scale(factor);
        let tr = reaction_ode_integrate(&p, start, 400.0).unwrap();
        assert!((tr.last() - eq.as_vec()).norm() < 1e-6, "factor {factor}");
    }
    let tr =
        reaction_ode_integrate(&p, Vec2::new(0.9 * eq.labor, 1.1 * eq.capital), 400.0).unwrap();
    assert!((tr.last().x - 0.2883).abs() < 1e-4 && (tr.last().y - 0.1774).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn zero_mode_stable_and_trace_negative((p, eq) in valid_model(), b_rel in 0.0..3.0f64) {
        let c = critical_threshold(&p, &eq).unwrap();
        let b = b_rel * c.b_c;
        let mats = build_matrices(&p, &eq, b);
        let a0 = mats.mode_matrix(p.gamma, 0.0);
        prop_assert!(a0.det() > 0.0);
        prop_assert!((a0.det() - p.gamma * p.gamma * mats.reaction.det()).abs() <= 1e-12 * a0.det());
        for k in uniform_k_grid(5.0 * c.k_c, 200) {
            prop_assert!(mats.mode_matrix(p.gamma, k).trace() < 0.0);
        }
    }

    #[test]
    fn determinant_equals_h_polynomial((p, eq) in valid_model(), b_rel in 0.0..3.0f64) {
        let c = critical_threshold(&p, &eq).unwrap();
        let b = b_rel * c.b_c;
        let curve = dispersion(&p, &eq, b, &uniform_k_grid(4.0 * c.k_c, 100));
        for s in &curve.samples {
            let h = h_polynomial(&p, &c, b, s.k);
            let (qa, qb, qc) = h_coefficients(&p, &c, b);
            let kk = s.k * s.k;
            let scale = (qa * kk * kk).abs() + (qb * kk).abs() + qc.abs();
            prop_assert!((s.det - h).abs() <= 1e-10 * scale, "{} vs {}", s.det, h);
        }
    }

    #[test]
    fn threshold_invariants((p, eq) in valid_model()) {
        let c = critical_threshold(&p, &eq).unwrap();
        prop_assert!(c.k_c > 0.0);
        prop_assert!(c.b_c >= c.necessary_threshold());
        prop_assert!(band_from_critical(&p, &c, 0.999 * c.b_c).is_none());
        let tangent = band_from_critical(&p, &c, c.b_c).unwrap();
        prop_assert!((tangent.k1_sq - tangent.k2_sq).abs() <= 1e-6 * c.k_c * c.k_c);
        let band = band_from_critical(&p, &c, 1.2 * c.b_c).unwrap();
        prop_assert!(band.k1_sq > 0.0 && band.k1_sq < c.k_c * c.k_c && c.k_c * c.k_c < band.k2_sq);
    }

    #[test]
    fn critical_wavenumber_squared_linear_in_gamma((p, eq) in valid_model()) {
        let c = critical_threshold(&p, &eq).unwrap();
        let mut q = p;
        q.gamma = 2.0 * p.gamma;
        let c2 = critical_threshold(&q, &eq).unwrap();
        let ratio = c2.k_c * c2.k_c / (c.k_c * c.k_c);
        prop_assert!((ratio - 2.0).abs() <= 2e-12 * 2.0);
        prop_assert!((c2.b_c - c.b_c).abs() <= 1e-12 * c.b_c);
    }

    #[test]
    fn threshold_monotone_in_random_diffusion((p, eq) in valid_model(), f1 in 1.0..3.0f64, f2 in 1.0..3.0f64) {
        let c = critical_threshold(&p, &eq).unwrap();
        let mut q = p;
        q.c1 *= f1;
        prop_assert!(critical_threshold(&q, &eq).unwrap().b_c >= c.b_c * (1.0 - 1e-14));
        let mut q = p;
        q.c2 *= f2;
        prop_assert!(critical_threshold(&q, &eq).unwrap().b_c >= c.b_c * (1.0 - 1e-14));
    }

    #[test]
    fn sufficient_condition_implies_instability((p, eq) in valid_model(), b_rel in 0.0..20.0f64) {
        let c = critical_threshold(&p, &eq).unwrap();
        let b = b_rel * c.b_c;
        let s = sufficient_conditions(&p, &eq, b);
        if s.bif {
            prop_assert!(b > c.b_c);
        }
    }

    #[test]
    fn equal_growth_condition_without_saturation(
        alpha in 0.01..1.0f64,
        beta1 in 0.1..5.0f64,
        prod in 1.05..10.0f64,
        c in (1e-3..0.5f64, 1e-3..0.5f64, 0.0..1.0f64),
        gamma in 0.5..10.0f64,
        b_rel in 0.0..20.0f64,
    ) {
        let (p, eq) = model((alpha, alpha, beta1, prod), (c.0, c.1, c.2, 0.0), gamma).unwrap();
        let crit = critical_threshold(&p, &eq).unwrap();
        let b = b_rel * crit.b_c;
        let s = sufficient_conditions(&p, &eq, b);
        let bif2 = s.bif2.unwrap();
        if bif2 {
            prop_assert!(s.bif);
            prop_assert!(b > crit.b_c);
        }
    }

    #[test]
    fn equal_growth_condition_with_saturation(
        alpha in 0.01..1.0f64,
        beta1 in 0.1..5.0f64,
        prod in 1.05..10.0f64,
        c in (1e-3..0.5f64, 1e-3..0.5f64, 0.0..1.0f64, 0.0..0.95f64),
        gamma in 0.5..10.0f64,
        b_rel in 0.0..20.0f64,
    ) {
        let (p, eq) = model((alpha, alpha, beta1, prod), c, gamma).unwrap();
        let crit = critical_threshold(&p, &eq).unwrap();
        let b = b_rel * crit.b_c;
        if sufficient_conditions(&p, &eq, b).bif2 == Some(true) {
            prop_assert!(b > crit.b_c);
        }
    }

    #[test]
    fn eigenvalue_real_parts_follow_determinant_sign((p, eq) in valid_model(), b_rel in 0.0..3.0f64) {
        let c = critical_threshold(&p, &eq).unwrap();
        let curve = dispersion(&p, &eq, b_rel * c.b_c, &uniform_k_grid(3.0 * c.k_c, 64));
        for s in &curve.samples {
            prop_assert!(s.re_lambda1 <= s.re_lambda2);
            prop_assert!(s.re_lambda1 < 0.0);
            if s.det > 0.0 {
                prop_assert!(s.re_lambda2 < 0.0);
            } else if s.det < 0.0 {
                prop_assert!(s.re_lambda2 > 0.0);
            }
        }
    }
}
