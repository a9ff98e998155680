use std::f64::consts::PI;

use proptest::prelude::*;
use su11_chain::density::{
    classify_extrema, density, density_t_derivative, extrema_map, low_t_density, t2_coefficient_fd,
    zero_t_density, zero_t_exponents, ExtremaClass, DEFAULT_T_MAX,
};
use su11_chain::model::{dispersion, ChainSpec, Dispersion, Regime, Sites};
use su11_chain::Error;

const INF: Sites = Sites::ThermodynamicLimit;

fn disp_of(spec: &ChainSpec) -> Dispersion {
    dispersion(spec).unwrap()
}

#[test]
fn zero_t_closed_forms() {
    let xx = ChainSpec::xx(INF, 0.0).unwrap();
    let hs = ChainSpec::hs(INF, 0.0).unwrap();
    let (dx, dh) = (disp_of(&xx), disp_of(&hs));
    for k in 1..=100 {
        let u = k as f64 / 101.0;
        let l = 4.0 * u;
        let n = zero_t_density(&xx.with_lambda(l), &dx).unwrap();
        let exact = 2.0 / PI * (l.sqrt() / 2.0).asin();
        assert!((n - exact).abs() < 1e-10, "xx λ={l}: {n} vs {exact}");
        let l = PI * PI / 2.0 * u;
        let n = zero_t_density(&hs.with_lambda(l), &dh).unwrap();
        let exact = 1.0 - (1.0 - 2.0 * l / (PI * PI)).sqrt();
        assert!((n - exact).abs() < 1e-10, "hs λ={l}: {n} vs {exact}");
    }
    let half = density(&xx.with_lambda(2.0), &dx, 0.0).unwrap();
    assert_eq!(half.n_f, 0.5);
    assert_eq!(density(&xx.with_lambda(-1.0), &dx, 0.0).unwrap().n_f, 0.0);
    assert_eq!(density(&xx.with_lambda(5.0), &dx, 0.0).unwrap().n_f, 1.0);
}

#[test]
fn xx_half_filling_is_temperature_independent() {
    let spec = ChainSpec::xx(INF, 2.0).unwrap();
    let disp = disp_of(&spec);
    for t in [0.01, 0.3, 4.0] {
        let n = density(&spec, &disp, t).unwrap().n_f;
        assert!((n - 0.5).abs() < 1e-12);
    }
}

#[test]
fn derivative_signs_outside_band() {
    for spec in [
        ChainSpec::xx(INF, 0.0).unwrap(),
        ChainSpec::hs(INF, 0.0).unwrap(),
        ChainSpec::elliptic(3.0, INF, 0.0).unwrap(),
    ] {
        let disp = disp_of(&spec);
        let below = density_t_derivative(&spec.with_lambda(-0.5), &disp, 1.0).unwrap();
        let above = density_t_derivative(&spec.with_lambda(disp.e_pi() + 0.5), &disp, 1.0).unwrap();
        assert!(below > 0.0 && above < 0.0, "{spec}: {below}, {above}");
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let e_pi = disp_of(&ell).e_pi();
    for (spec, t) in [
        (ChainSpec::xx(INF, 1.0).unwrap(), 0.4),
        (ChainSpec::hs(INF, 3.0).unwrap(), 0.2),
        (ell.with_lambda(0.3 * e_pi), 0.5),
        (ell.with_lambda(-0.2), 1.0),
    ] {
        let disp = disp_of(&spec);
        let d = density_t_derivative(&spec, &disp, t).unwrap();
        let h = 1e-4 * t;
        let fd = (density(&spec, &disp, t + h).unwrap().n_f
            - density(&spec, &disp, t - h).unwrap().n_f)
            / (2.0 * h);
        assert!((d - fd).abs() < 1e-6 * d.abs(), "{spec}: {d} vs {fd}");
    }
}

#[test]
fn high_temperature_limit_is_half() {
    for spec in [
        ChainSpec::xx(INF, 0.7).unwrap(),
        ChainSpec::hs(INF, -2.0).unwrap(),
        ChainSpec::elliptic(2.0, INF, 9.0).unwrap(),
    ] {
        let disp = disp_of(&spec);
        let n = density(&spec, &disp, 1e3 * disp.e_pi()).unwrap().n_f;
        assert!((n - 0.5).abs() < 1e-3, "{spec}: {n}");
    }
}

#[test]
fn critical_t2_coefficients() {
    // XX: E'' = 2 - λ, v = √(λ(4-λ)).
    let xx = ChainSpec::xx(INF, 1.0).unwrap();
    let c = low_t_density(&xx, &disp_of(&xx)).unwrap();
    assert_eq!(c.regime, Regime::Critical);
    let expect = -PI * 1.0 / (6.0 * 3f64.powf(1.5));
    assert!((c.coefficient - expect).abs() < 1e-12, "{}", c.coefficient);

    // HS: E'' = -1, v = √(π² - 2λ).
    let l = 2.5;
    let hs = ChainSpec::hs(INF, l).unwrap();
    let c = low_t_density(&hs, &disp_of(&hs)).unwrap();
    let expect = PI / (6.0 * (PI * PI - 2.0 * l).powf(1.5));
    assert!((c.coefficient - expect).abs() < 1e-12);
    assert!((c.constant - (1.0 - (PI * PI - 2.0 * l).sqrt() / PI)).abs() < 1e-12);
}

#[test]
fn t2_coefficient_finite_difference() {
    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    for base in [
        ChainSpec::hs(INF, 0.0).unwrap(),
        ell,
        ChainSpec::xx(INF, 0.0).unwrap(),
    ] {
        for frac in [0.3, 0.5, 0.8] {
            let disp = disp_of(&base);
            let spec = base.with_lambda(frac * disp.e_pi());
            let pred = low_t_density(&spec, &disp).unwrap().coefficient;
            let fd = t2_coefficient_fd(&spec, &disp).unwrap();
            if pred == 0.0 || pred.abs() < 1e-12 {
                assert!(fd.abs() < 1e-6, "{spec}: fd = {fd}");
            } else {
                assert!((fd / pred - 1.0).abs() < 0.02, "{spec}: {fd} vs {pred}");
            }
        }
    }
}

#[test]
fn band_edge_densities() {
    let hs = ChainSpec::hs(INF, 0.0).unwrap();
    let disp = disp_of(&hs);
    let e = low_t_density(&hs, &disp).unwrap();
    assert_eq!(e.exponent, 1.0);
    assert!((e.coefficient - 2f64.ln() / (PI * PI)).abs() < 1e-14);
    for t in [1e-3, 1e-2] {
        let n = density(&hs, &disp, t).unwrap().n_f;
        assert!(
            (n / e.eval(t) - 1.0).abs() < 0.03,
            "T={t}: {n} vs {}",
            e.eval(t)
        );
    }

    for base in [
        ChainSpec::xx(INF, 0.0).unwrap(),
        ChainSpec::hs(INF, 0.0).unwrap(),
        ChainSpec::elliptic(5.0, INF, 0.0).unwrap(),
    ] {
        let disp = disp_of(&base);
        let e_pi = disp.e_pi();
        for (l, t) in [
            (0.0, 1e-4 * e_pi),
            (e_pi, 1e-4 * e_pi),
            (-0.05 * e_pi, 5e-3 * e_pi),
            (1.05 * e_pi, 5e-3 * e_pi),
        ] {
            let spec = base.with_lambda(l);
            let pred = low_t_density(&spec, &disp).unwrap();
            let n = density(&spec, &disp, t).unwrap().n_f;
            let (num, den) = if pred.constant == 1.0 {
                (1.0 - n, 1.0 - pred.eval(t))
            } else {
                (n, pred.eval(t))
            };
            assert!(
                (num / den - 1.0).abs() < 0.05,
                "{spec} T={t}: {num} vs {den}"
            );
        }
    }
}

#[test]
fn critical_exponents() {
    for (spec, k, v) in [
        (ChainSpec::xx(INF, 0.0).unwrap(), 0.5, 0.5),
        (ChainSpec::hs(INF, 0.0).unwrap(), 1.0, 0.5),
        (ChainSpec::elliptic(5.0, INF, 0.0).unwrap(), 0.5, 0.5),
    ] {
        let (lo, hi) = zero_t_exponents(&disp_of(&spec)).unwrap();
        assert!((lo / k - 1.0).abs() < 0.03, "{spec}: {lo}");
        assert!((hi / v - 1.0).abs() < 0.03, "{spec}: {hi}");
    }
}

#[test]
fn classification_needs_critical_lambda() {
    let spec = ChainSpec::xx(INF, -1.0).unwrap();
    assert!(matches!(
        classify_extrema(&spec, &disp_of(&spec), 40.0),
        Err(Error::InvalidRegime(_))
    ));
}

#[test]
fn single_lambda_classes() {
    let xx = ChainSpec::xx(INF, 0.0).unwrap();
    let dx = disp_of(&xx);
    let t_max = DEFAULT_T_MAX * dx.e_pi();
    assert_eq!(
        classify_extrema(&xx.with_lambda(1.0), &dx, t_max).unwrap(),
        ExtremaClass::MinimumOnly
    );
    assert_eq!(
        classify_extrema(&xx.with_lambda(3.0), &dx, t_max).unwrap(),
        ExtremaClass::MaximumOnly
    );
    let hs = ChainSpec::hs(INF, 0.0).unwrap();
    let dh = disp_of(&hs);
    let t_max = DEFAULT_T_MAX * dh.e_pi();
    assert_eq!(
        classify_extrema(&hs.with_lambda(1.0), &dh, t_max).unwrap(),
        ExtremaClass::Monotone
    );
    assert_eq!(
        classify_extrema(&hs.with_lambda(4.0), &dh, t_max).unwrap(),
        ExtremaClass::MaximumOnly
    );
}

#[test]
fn phase_maps() {
    let xx = ChainSpec::xx(INF, 0.0).unwrap();
    let d = disp_of(&xx);
    let m = extrema_map(&xx, &d, DEFAULT_T_MAX * d.e_pi()).unwrap();
    for l in [m.lambda1, m.lambda2, m.lambda3] {
        assert!((l - 2.0).abs() < 1e-3, "{m:?}");
    }

    let hs = ChainSpec::hs(INF, 0.0).unwrap();
    let d = disp_of(&hs);
    let m = extrema_map(&hs, &d, DEFAULT_T_MAX * d.e_pi()).unwrap();
    assert_eq!(m.lambda1, 0.0);
    assert_eq!(m.lambda2, 0.0);
    assert!((m.lambda3 - PI * PI / 3.0).abs() < 1e-3, "{}", m.lambda3);

    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let d = disp_of(&ell);
    let m = extrema_map(&ell, &d, DEFAULT_T_MAX * d.e_pi()).unwrap();
    assert_eq!(
        m.classes(),
        vec![
            ExtremaClass::MinimumOnly,
            ExtremaClass::MaximumThenMinimum,
            ExtremaClass::Monotone,
            ExtremaClass::MaximumOnly
        ]
    );
    assert!(0.0 < m.lambda1 && m.lambda1 < m.lambda2 && m.lambda2 < m.lambda3);
    assert!(m.lambda3 < m.e_pi);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_bounded_and_monotone_in_lambda(
        kind in 0usize..3,
        t in 0.01f64..5.0,
        l in -1.0f64..6.0,
        dl in 0.001f64..1.0,
    ) {
        let base = match kind {
            0 => ChainSpec::xx(INF, 0.0).unwrap(),
            1 => ChainSpec::hs(INF, 0.0).unwrap(),
            _ => ChainSpec::elliptic(4.0, INF, 0.0).unwrap(),
        };
        let disp = disp_of(&base);
        let a = density(&base.with_lambda(l), &disp, t).unwrap().n_f;
        let b = density(&base.with_lambda(l + dl), &disp, t).unwrap().n_f;
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b >= a - 1e-12, "n({}) = {} > n({}) = {}", l, a, l + dl, b);
    }
}
