use std::f64::consts::PI;

use proptest::prelude::*;
use su11_chain::fit::{log_grid, power_law_fit};
use su11_chain::model::{dispersion, ChainSpec, Regime, Sites};
use su11_chain::special_fns::{gamma_fn, riemann_zeta};
use su11_chain::thermo::{
    default_fit_grid, fit_central_charge, free_energy, free_energy_sweep, low_t_expansion,
    mode_sum_free_energy,
};
use su11_chain::Error;

const INF: Sites = Sites::ThermodynamicLimit;

#[test]
fn xx_ground_energy_at_half_band() {
    let spec = ChainSpec::xx(INF, 2.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    let r = free_energy(&spec, &disp, 0.05).unwrap();
    // (1/π)∫₀^{π/2} (2 - 2cos p - 2) dp
    assert!((r.f0 + 2.0 / PI).abs() < 1e-12, "{}", r.f0);
}

#[test]
fn empty_sea_has_vanishing_free_energy() {
    let spec = ChainSpec::xx(INF, -1.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    let r = free_energy(&spec, &disp, 0.01).unwrap();
    assert_eq!(r.f0, 0.0);
    assert!(r.f.abs() < 1e-40);
}

#[test]
fn full_band_free_energy_is_mean_energy_minus_lambda() {
    let spec = ChainSpec::xx(INF, 6.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    let r = free_energy(&spec, &disp, 0.01).unwrap();
    assert!((r.f0 - (2.0 - 6.0)).abs() < 1e-12);
    assert!((r.f - r.f0).abs() < 1e-12);
}

#[test]
fn hs_critical_t_squared_law() {
    let lambda = PI * PI / 4.0;
    let spec = ChainSpec::hs(INF, lambda).unwrap();
    let disp = dispersion(&spec).unwrap();
    let t = 0.1;
    let r = free_energy(&spec, &disp, t).unwrap();
    // E = p(2π - p)/2 ⇒ p0 = π - √(π² - 2λ), v = π - p0.
    let v = (PI * PI - 2.0 * lambda).sqrt();
    let pred = r.f0 - PI * t * t / (6.0 * v);
    assert!((r.f - pred).abs() < 2e-3 * t * t, "{} vs {}", r.f, pred);
}

#[test]
fn hs_band_edge_is_half_of_critical() {
    let spec = ChainSpec::hs(INF, 0.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    for t in [1e-3, 1e-2] {
        let f = free_energy(&spec, &disp, t).unwrap().f;
        assert!((f + t * t / 12.0).abs() < 0.05 * t * t, "T={t}: {f}");
    }
}

#[test]
fn low_t_predictions() {
    let hs = ChainSpec::hs(INF, 0.0).unwrap();
    let p = low_t_expansion(&hs, &dispersion(&hs).unwrap()).unwrap();
    assert_eq!(p.regime, Regime::LowerEndpoint);
    assert_eq!(p.exponent, 2.0);
    assert!((p.coefficient - 1.0 / 12.0).abs() < 1e-12);

    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let disp = dispersion(&ell).unwrap();
    let p = low_t_expansion(&ell, &disp).unwrap();
    assert_eq!(p.exponent, 1.5);
    let g = disp.a_coef() / PI
        * (1.0 - 0.5f64.sqrt())
        * gamma_fn(1.5).unwrap()
        * riemann_zeta(1.5).unwrap();
    assert!((p.coefficient - g).abs() < 1e-14);

    let top = ell.with_lambda(disp.e_pi());
    let p = low_t_expansion(&top, &disp).unwrap();
    assert_eq!(p.regime, Regime::UpperEndpoint);
    assert_eq!(p.exponent, 1.5);

    let xx = ChainSpec::xx(INF, 2.0).unwrap();
    let p = low_t_expansion(&xx, &dispersion(&xx).unwrap()).unwrap();
    assert_eq!(p.exponent, 2.0);
    assert!((p.coefficient - PI / 12.0).abs() < 1e-12);
}

#[test]
fn low_t_rejects_gapped() {
    let spec = ChainSpec::xx(INF, -0.5).unwrap();
    let disp = dispersion(&spec).unwrap();
    assert!(matches!(
        low_t_expansion(&spec, &disp),
        Err(Error::InvalidRegime(_))
    ));
}

#[test]
fn band_edge_law_converges() {
    let spec = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    let pred = low_t_expansion(&spec, &disp).unwrap();
    let mut last = f64::INFINITY;
    for t in [1e-1, 1e-2, 1e-3] {
        let f = free_energy(&spec, &disp, t).unwrap().f;
        let tp = t.powf(pred.exponent);
        let rel = (f + pred.coefficient * tp).abs() / tp;
        assert!(rel < last, "T={t}: {rel} did not improve on {last}");
        last = rel;
    }
    assert!(last < 0.05, "{last}");
}

#[test]
fn band_edge_power_law_fit() {
    let spec = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    let pred = low_t_expansion(&spec, &disp).unwrap();
    let temps = log_grid(1e-3, 1e-2, 8);
    let neg_f: Vec<f64> = free_energy_sweep(&spec, &disp, &temps)
        .unwrap()
        .iter()
        .map(|r| -r.f)
        .collect();
    let (e, c, _) = power_law_fit(&temps, &neg_f).unwrap();
    assert!((e - 1.5).abs() < 0.02, "exponent {e}");
    assert!(
        (c / pred.coefficient - 1.0).abs() < 0.02,
        "{c} vs {}",
        pred.coefficient
    );
}

#[test]
fn continuum_matches_large_mode_sum() {
    for (spec, t) in [
        (ChainSpec::xx(Sites::Finite(4000), 1.3).unwrap(), 0.2),
        (ChainSpec::hs(Sites::Finite(4000), 2.0).unwrap(), 0.3),
        (
            ChainSpec::elliptic(5.0, Sites::Finite(4000), 1.0).unwrap(),
            0.25,
        ),
    ] {
        let cont = spec.clone();
        let disp = dispersion(&ChainSpec { sites: INF, ..cont }).unwrap();
        let f = free_energy(&spec, &disp, t).unwrap().f;
        let sum = mode_sum_free_energy(&spec, t).unwrap();
        assert!((f - sum).abs() < 1e-6, "{spec}: {f} vs {sum}");
    }
}

#[test]
fn central_charges() {
    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let e_pi = dispersion(&ell).unwrap().e_pi();
    let cases = [
        (ChainSpec::xx(INF, 2.0).unwrap(), 1.0),
        (ChainSpec::hs(INF, PI * PI / 4.0).unwrap(), 1.0),
        (ell.with_lambda(0.6 * e_pi), 1.0),
        (ChainSpec::hs(INF, 0.0).unwrap(), 0.5),
    ];
    for (spec, c) in cases {
        let disp = dispersion(&spec).unwrap();
        let fit = fit_central_charge(&spec, &disp, &default_fit_grid(&disp)).unwrap();
        assert!((fit.c_hat - c).abs() < 0.02, "{spec}: c = {}", fit.c_hat);
    }
}

#[test]
fn central_charge_preconditions() {
    let spec = ChainSpec::xx(INF, 2.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    assert!(matches!(
        fit_central_charge(&spec, &disp, &[0.01, 0.02, 0.03]),
        Err(Error::InvalidSpec(_))
    ));
    let too_hot: Vec<f64> = (1..=6).map(|k| 0.1 * k as f64).collect();
    assert!(matches!(
        fit_central_charge(&spec, &disp, &too_hot),
        Err(Error::InvalidSpec(_))
    ));
    let ell = ChainSpec::elliptic(5.0, INF, 0.0).unwrap();
    let d = dispersion(&ell).unwrap();
    assert!(matches!(
        fit_central_charge(&ell, &d, &default_fit_grid(&d)),
        Err(Error::InvalidRegime(_))
    ));
}

fn any_spec() -> impl Strategy<Value = ChainSpec> {
    (0usize..3, 0.3f64..20.0, -0.2f64..1.2).prop_map(|(kind, alpha, frac)| {
        let base = match kind {
            0 => ChainSpec::xx(INF, 0.0).unwrap(),
            1 => ChainSpec::hs(INF, 0.0).unwrap(),
            _ => ChainSpec::elliptic(alpha, INF, 0.0).unwrap(),
        };
        let e_pi = dispersion(&base).unwrap().e_pi();
        base.with_lambda(frac * e_pi)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_identity(spec in any_spec(), t in 0.005f64..3.0) {
        let disp = dispersion(&spec).unwrap();
        let r = free_energy(&spec, &disp, t).unwrap();
        prop_assert!((r.f - (r.f0 + r.f1 + r.f2)).abs() < 1e-10,
            "{}: f = {}, sum = {}", spec, r.f, r.f0 + r.f1 + r.f2);
    }

    #[test]
    fn free_energy_non_increasing(spec in any_spec()) {
        let disp = dispersion(&spec).unwrap();
        let temps = log_grid(0.01, 5.0, 15);
        let rows = free_energy_sweep(&spec, &disp, &temps).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].f <= w[0].f + 1e-12, "{}: {:?}", spec, w);
        }
    }
}
