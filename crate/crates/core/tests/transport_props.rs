use aldsat::transport::*;
use proptest::prelude::*;

fn rates_strategy() -> impl Strategy<Value = DerivedRates> {
    (
        0.5f64..50.0,
        50.0f64..500.0,
        373.0f64..573.0,
        -5.0f64..-1.0,
        18.0f64..19.0,
    )
        .prop_map(|(p0, mw, t, log_beta, log_s0)| {
            let cond = ProcessConditions {
                partial_pressure: p0,
                molar_mass: mw,
                temperature: t,
                sticking_probability: 10f64.powf(log_beta),
                growth_per_cycle: 0.1,
                site_density: 10f64.powf(log_s0),
            };
            derive_rates(&cond, &ReactorGeometry::default()).unwrap()
        })
}

fn positions(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.4 * i as f64 / (n - 1) as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coverage_is_bounded_and_monotone(rates in rates_strategy(), frac in 0.0f64..3.0) {
        let t_sat = saturation_time(&rates, 0.4, 0.99).unwrap();
        let xs = positions(41);
        let early = profile_analytic(&rates, &xs, frac * t_sat).unwrap();
        let late = profile_analytic(&rates, &xs, 1.1 * frac * t_sat + 1e-9).unwrap();
        for w in early.coverage.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for (e, l) in early.coverage.iter().zip(&late.coverage) {
            prop_assert!((0.0..=1.0).contains(e));
            prop_assert!(l >= e);
        }
    }

    #[test]
    fn density_ratio_is_a_fraction(rates in rates_strategy(), x in 0.0f64..0.4, frac in 0.0f64..2.0) {
        let t_sat = saturation_time(&rates, 0.4, 0.99).unwrap();
        let c = density_analytic(&rates, x, frac * t_sat);
        prop_assert!(c > 0.0 && c <= 1.0);
    }

    #[test]
    fn saturation_time_falls_with_beta_and_pressure(
        p0 in 0.5f64..25.0,
        log_beta in -5.0f64..-1.5,
        bump in 1.01f64..2.0,
    ) {
        let base = ProcessConditions {
            partial_pressure: p0,
            molar_mass: 150.0,
            temperature: 473.15,
            sticking_probability: 10f64.powf(log_beta),
            growth_per_cycle: 0.1,
            site_density: 5e18,
        };
        let geom = ReactorGeometry::default();
        let t = |c: &ProcessConditions| saturation_time(&derive_rates(c, &geom).unwrap(), 0.4, 0.99).unwrap();
        let t0 = t(&base);
        let more_beta = ProcessConditions { sticking_probability: base.sticking_probability * bump, ..base };
        let more_p0 = ProcessConditions { partial_pressure: p0 * bump, ..base };
        prop_assert!(t(&more_beta) < t0);
        prop_assert!(t(&more_p0) < t0);
    }
}

#[test]
fn density_tends_to_one_as_sticking_vanishes() {
    let mut cond = ProcessConditions {
        partial_pressure: 10.0,
        molar_mass: 150.0,
        temperature: 473.15,
        sticking_probability: 1e-2,
        growth_per_cycle: 0.1,
        site_density: 5e18,
    };
    let geom = ReactorGeometry::default();
    let mut last = 0.0;
    for _ in 0..8 {
        let rates = derive_rates(&cond, &geom).unwrap();
        let c = density_analytic(&rates, 0.4, 0.0);
        assert!(c > last);
        last = c;
        cond.sticking_probability /= 10.0;
    }
    // 1 - e^{-B} ~ B with B ~ 2e-6 at beta = 1e-9
    let rates = derive_rates(&ProcessConditions { sticking_probability: 1e-9, ..cond }, &geom).unwrap();
    let b = rates.depletion(0.4);
    assert!(b < 1e-5);
    assert!(((1.0 - last) / b - 1.0).abs() < 1e-5);
}

/// Residual of dΘ/dτ = a c (1 - Θ) along a characteristic, by central
/// differences in τ. Halving the step must shrink it about fourfold.
#[test]
fn closed_form_satisfies_the_rate_equation() {
    let (ac0, b_over_u) = (2.0, 5.0);
    let theta = |x: f64, tau: f64| {
        let (a, b) = (ac0 * tau, b_over_u * x);
        (a.exp() - 1.0) / (a.exp() + b.exp() - 1.0)
    };
    let density = |x: f64, tau: f64| {
        let (a, b) = (ac0 * tau, b_over_u * x);
        a.exp() / (a.exp() + b.exp() - 1.0)
    };
    let residual = |h: f64| {
        let mut worst: f64 = 0.0;
        for &x in &[0.05, 0.2, 0.35] {
            for &tau in &[0.3, 1.0, 2.5] {
                let d = (theta(x, tau + h) - theta(x, tau - h)) / (2.0 * h);
                let rhs = ac0 * density(x, tau) * (1.0 - theta(x, tau));
                worst = worst.max((d - rhs).abs());
            }
        }
        worst
    };
    let (r1, r2) = (residual(1e-2), residual(5e-3));
    assert!(r1 < 1e-3);
    let order = (r1 / r2).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

/// Quasi-steady density: dc/dx = -(b/u) (1 - Θ) c at fixed τ.
#[test]
fn closed_form_satisfies_the_depletion_equation() {
    let (ac0, b_over_u) = (3.0, 8.0);
    let theta = |x: f64, tau: f64| {
        let (a, b) = (ac0 * tau, b_over_u * x);
        (a.exp() - 1.0) / (a.exp() + b.exp() - 1.0)
    };
    let density = |x: f64, tau: f64| {
        let (a, b) = (ac0 * tau, b_over_u * x);
        a.exp() / (a.exp() + b.exp() - 1.0)
    };
    for &tau in &[0.1, 0.8, 2.0] {
        for &x in &[0.05, 0.15, 0.3] {
            let h = 1e-5;
            let d = (density(x + h, tau) - density(x - h, tau)) / (2.0 * h);
            let rhs = -b_over_u * (1.0 - theta(x, tau)) * density(x, tau);
            assert!((d - rhs).abs() < 1e-7 * rhs.abs().max(1.0));
        }
    }
}
