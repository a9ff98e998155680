//! Free energy per site and its low-temperature behaviour.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{lin_grid, linear_fit};
use crate::model::{classify, critical_point, ChainSpec, Dispersion, Regime};
use crate::quadrature::integrate_with_breaks;
use crate::special_fns::{gamma_fn, riemann_zeta};

/// Absolute quadrature tolerance for free-energy integrals.
pub const FREE_ENERGY_TOL: f64 = 1e-12;

/// Upper end of the central-charge fit window, as a fraction of `E(π)`.
pub const FIT_WINDOW: f64 = 0.05;

/// `log(1 + e^{-x})` without overflow.
pub fn softplus_neg(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyResult {
    pub temperature: f64,
    pub f: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Boundary between filled and empty momenta, `0` below the band and `π` above.
pub fn fermi_momentum(spec: &ChainSpec, disp: &Dispersion) -> Result<f64> {
    let cp = critical_point(spec, disp)?;
    Ok(match cp.regime {
        Regime::BelowInterval | Regime::LowerEndpoint => 0.0,
        Regime::UpperEndpoint | Regime::AboveInterval => PI,
        Regime::Critical => cp.p0.expect("critical regime has a Fermi point"),
    })
}

/// Quadrature breakpoints in `[lo, hi]`: the ends, `p0`, and the momenta where
/// `|E(p) - λ|` equals a few multiples of `T`, so that features of width `O(T)`
/// near the Fermi point or a band edge are resolved.
pub(crate) fn thermal_breaks(disp: &Dispersion, lambda: f64, t: f64, lo: f64, hi: f64) -> Vec<f64> {
    let e_pi = disp.e_pi();
    let mut pts = vec![lo, hi];
    let mut push = |e: f64| {
        if e > 0.0 && e < e_pi {
            let p = disp.inverse(e);
            if p > lo && p < hi {
                pts.push(p);
            }
        }
    };
    push(lambda);
    for m in [0.25, 1.0, 4.0, 16.0, 64.0] {
        push(lambda - m * t);
        push(lambda + m * t);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `f(T) = -(T/π)∫₀^π log[1 + e^{-(E(p)-λ)/T}] dp` and its split `f0 + f1 + f2`.
pub fn free_energy(
    spec: &ChainSpec,
    disp: &Dispersion,
    temperature: f64,
) -> Result<FreeEnergyResult> {
    free_energy_with_tol(spec, disp, temperature, FREE_ENERGY_TOL)
}

/// [`free_energy`] with an explicit absolute tolerance on each term.
pub fn free_energy_with_tol(
    spec: &ChainSpec,
    disp: &Dispersion,
    temperature: f64,
    tol: f64,
) -> Result<FreeEnergyResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "temperature {temperature} must be positive"
        )));
    }
    let lambda = spec.lambda;
    let t = temperature;
    let p0 = fermi_momentum(spec, disp)?;
    let breaks = thermal_breaks(disp, lambda, t, 0.0, PI);
    let lower = thermal_breaks(disp, lambda, t, 0.0, p0);
    let upper = thermal_breaks(disp, lambda, t, p0, PI);

    let f = -t / PI
        * integrate_with_breaks(
            |p| softplus_neg((disp.eval(p) - lambda) / t),
            &breaks,
            tol * PI / t,
            0.0,
        )?
        .value;
    let f0 =
        integrate_with_breaks(|p| disp.eval(p) - lambda, &[0.0, p0], tol * PI, 0.0)?.value / PI;
    let f1 = -t / PI
        * integrate_with_breaks(
            |p| softplus_neg((lambda - disp.eval(p)) / t),
            &lower,
            tol * PI / t,
            0.0,
        )?
        .value;
    let f2 = -t / PI
        * integrate_with_breaks(
            |p| softplus_neg((disp.eval(p) - lambda) / t),
            &upper,
            tol * PI / t,
            0.0,
        )?
        .value;
    Ok(FreeEnergyResult {
        temperature,
        f,
        f0,
        f1,
        f2,
    })
}

/// [`free_energy`] over a temperature grid, evaluated in parallel; output order follows `temps`.
pub fn free_energy_sweep(
    spec: &ChainSpec,
    disp: &Dispersion,
    temps: &[f64],
) -> Result<Vec<FreeEnergyResult>> {
    temps
        .par_iter()
        .map(|&t| free_energy(spec, disp, t))
        .collect()
}

/// `-(T/N) Σ_l log[1 + e^{-(ε_N(l)-λ)/T}]` for a finite chain.
pub fn mode_sum_free_energy(spec: &ChainSpec, temperature: f64) -> Result<f64> {
    let eps = spec.mode_energies()?;
    let n = eps.len() as f64;
    let t = temperature;
    Ok(-t / n
        * eps
            .iter()
            .map(|e| softplus_neg((e - spec.lambda) / t))
            .sum::<f64>())
}

/// Leading low-temperature law `f(T) - f0 ≈ -coefficient · T^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowTExpansion {
    pub regime: Regime,
    pub exponent: f64,
    pub coefficient: f64,
}

/// `γ = (a/π)(1 - 2^{-1/κ}) Γ(1 + 1/κ) ζ_R(1 + 1/κ)`.
pub fn gamma_coefficient(order: u32, scale: f64) -> Result<f64> {
    let s = 1.0 / order as f64;
    Ok(scale / PI * (1.0 - 2f64.powf(-s)) * gamma_fn(1.0 + s)? * riemann_zeta(1.0 + s)?)
}

pub fn low_t_expansion(spec: &ChainSpec, disp: &Dispersion) -> Result<LowTExpansion> {
    let cp = critical_point(spec, disp)?;
    let (exponent, coefficient) = match cp.regime {
        Regime::Critical => (
            2.0,
            PI / (6.0 * cp.v.expect("critical regime has a velocity")),
        ),
        Regime::LowerEndpoint => (
            1.0 + 1.0 / disp.kappa() as f64,
            gamma_coefficient(disp.kappa(), disp.a_coef())?,
        ),
        Regime::UpperEndpoint => (
            1.0 + 1.0 / disp.nu() as f64,
            gamma_coefficient(disp.nu(), disp.b_coef())?,
        ),
        Regime::BelowInterval => return Err(Error::InvalidRegime("below-interval (gapped)")),
        Regime::AboveInterval => return Err(Error::InvalidRegime("above-interval (gapped)")),
    };
    Ok(LowTExpansion {
        regime: cp.regime,
        exponent,
        coefficient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralChargeFit {
    pub c_hat: f64,
    pub v_used: f64,
    pub t_grid: Vec<f64>,
    /// Fitted coefficient of the linear-in-`T` correction.
    pub slope: f64,
    /// RMS residual of `(f - f0)/T²` about the fitted line.
    pub residual: f64,
}

/// Default fit grid: 12 points evenly spaced in `[0.1, 1]·FIT_WINDOW·E(π)`.
pub fn default_fit_grid(disp: &Dispersion) -> Vec<f64> {
    fit_grid(disp, FIT_WINDOW)
}

/// 12 points evenly spaced in `[0.1, 1]·window·E(π)`.
pub fn fit_grid(disp: &Dispersion, window: f64) -> Vec<f64> {
    let hi = window * disp.e_pi();
    lin_grid(0.1 * hi, hi, 12)
}

/// Fit `(f - f0)/T² = -(π/6v)c + dT` over `t_grid`.
pub fn fit_central_charge(
    spec: &ChainSpec,
    disp: &Dispersion,
    t_grid: &[f64],
) -> Result<CentralChargeFit> {
    fit_central_charge_in_window(spec, disp, t_grid, FIT_WINDOW)
}

/// [`fit_central_charge`] with temperatures allowed up to `window·E(π)`.
pub fn fit_central_charge_in_window(
    spec: &ChainSpec,
    disp: &Dispersion,
    t_grid: &[f64],
    window: f64,
) -> Result<CentralChargeFit> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "fit window {window} must be positive"
        )));
    }
    let v = match classify(spec.lambda, disp) {
        Regime::Critical => critical_point(spec, disp)?
            .v
            .expect("critical regime has a velocity"),
        Regime::LowerEndpoint if disp.kappa() == 1 => 1.0 / disp.a_coef(),
        _ => {
            return Err(Error::InvalidRegime(
                "central charge needs a critical lambda or a linear band edge at lambda = 0",
            ))
        }
    };
    if t_grid.len() < 6 {
        return Err(Error::InvalidSpec(format!(
            "central-charge fit needs at least 6 temperatures, got {}",
            t_grid.len()
        )));
    }
    let t_max = window * disp.e_pi();
    if let Some(bad) = t_grid
        .iter()
        .find(|&&t| !(t > 0.0 && t <= t_max * (1.0 + 1e-12)))
    {
        return Err(Error::InvalidSpec(format!(
            "temperature {bad} outside the fit window (0, {t_max}]"
        )));
    }
    let rows = free_energy_sweep(spec, disp, t_grid)?;
    let y: Vec<f64> = rows
        .iter()
        .map(|r| (r.f1 + r.f2) / (r.temperature * r.temperature))
        .collect();
    let fit = linear_fit(t_grid, &y)?;
    Ok(CentralChargeFit {
        c_hat: -fit.intercept * 6.0 * v / PI,
        v_used: v,
        t_grid: t_grid.to_vec(),
        slope: fit.slope,
        residual: fit.rms,
    })
}
