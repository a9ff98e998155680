//! Fermion density `n_f(λ, T)`, its temperature derivative and the
//! extremum-count phase map.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{lin_grid, linear_fit, log_grid, power_law_fit};
use crate::model::{classify, critical_point, ChainSpec, Dispersion, Regime};
use crate::quadrature::integrate_with_breaks;
use crate::special_fns::{dirichlet_eta, gamma_fn};
use crate::thermo::thermal_breaks;

pub const DENSITY_TOL: f64 = 1e-12;

/// Points in the coarse temperature grid of the extremum classifier.
pub const EXTREMA_T_POINTS: usize = 200;
/// Points in the chemical-potential grid of the phase map.
pub const EXTREMA_LAMBDA_POINTS: usize = 400;
/// Default upper temperature of the phase map, in units of `E(π)`.
pub const DEFAULT_T_MAX: f64 = 10.0;

/// `1/(1 + e^x)`.
pub fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `e^x/(1 + e^x)² = 1/(4cosh²(x/2))`.
fn fermi_kernel(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub lambda: f64,
    pub temperature: f64,
    pub n_f: f64,
    pub dn_dt: Option<f64>,
}

/// Ground-state density: `0`, `p0/π` or `1`.
pub fn zero_t_density(spec: &ChainSpec, disp: &Dispersion) -> Result<f64> {
    let cp = critical_point(spec, disp)?;
    Ok(match cp.regime {
        Regime::BelowInterval | Regime::LowerEndpoint => 0.0,
        Regime::UpperEndpoint | Regime::AboveInterval => 1.0,
        Regime::Critical => cp.p0.expect("critical regime has a Fermi point") / PI,
    })
}

/// `n_f = (1/π)∫₀^π dp / (1 + e^{(E(p)-λ)/T})`.
pub fn density(spec: &ChainSpec, disp: &Dispersion, temperature: f64) -> Result<DensityPoint> {
    density_with_tol(spec, disp, temperature, DENSITY_TOL)
}

/// [`density`] with an explicit absolute quadrature tolerance.
pub fn density_with_tol(
    spec: &ChainSpec,
    disp: &Dispersion,
    temperature: f64,
    tol: f64,
) -> Result<DensityPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let lambda = spec.lambda;
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "temperature {temperature} must be nonnegative"
        )));
    }
    let n_f = if temperature == 0.0 {
        zero_t_density(spec, disp)?
    } else {
        let t = temperature;
        let breaks = thermal_breaks(disp, lambda, t, 0.0, PI);
        integrate_with_breaks(
            |p| fermi((disp.eval(p) - lambda) / t),
            &breaks,
            tol * PI,
            0.0,
        )?
        .value
            / PI
    };
    Ok(DensityPoint {
        lambda,
        temperature,
        n_f: n_f.clamp(0.0, 1.0),
        dn_dt: None,
    })
}

/// `∂n_f/∂T = (1/(πT²))∫₀^π (E-λ) / (4cosh²[(E-λ)/2T]) dp`.
pub fn density_t_derivative(spec: &ChainSpec, disp: &Dispersion, temperature: f64) -> Result<f64> {
    Ok(t_derivative_with_error(spec, disp, temperature)?.0)
}

/// [`density_t_derivative`] with its quadrature error estimate.
fn t_derivative_with_error(
    spec: &ChainSpec,
    disp: &Dispersion,
    temperature: f64,
) -> Result<(f64, f64)> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "temperature {temperature} must be positive"
        )));
    }
    let lambda = spec.lambda;
    let t = temperature;
    let breaks = thermal_breaks(disp, lambda, t, 0.0, PI);
    let r = integrate_with_breaks(
        |p| {
            let x = (disp.eval(p) - lambda) / t;
            x * fermi_kernel(x)
        },
        &breaks,
        1e-13,
        1e-10,
    )?;
    Ok((r.value / (PI * t), r.abs_error / (PI * t)))
}

/// Density and its temperature derivative together.
pub fn density_with_derivative(
    spec: &ChainSpec,
    disp: &Dispersion,
    temperature: f64,
) -> Result<DensityPoint> {
    let mut pt = density(spec, disp, temperature)?;
    if temperature > 0.0 {
        pt.dn_dt = Some(density_t_derivative(spec, disp, temperature)?);
    }
    Ok(pt)
}

/// Low-temperature form `n_f ≈ constant + coefficient·T^exponent·e^{-decay/T}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowTDensity {
    pub regime: Regime,
    pub constant: f64,
    pub coefficient: f64,
    pub exponent: f64,
    pub decay: f64,
}

impl LowTDensity {
    pub fn eval(&self, temperature: f64) -> f64 {
        let t = temperature;
        let activation = if self.decay == 0.0 {
            1.0
        } else {
            (-self.decay / t).exp()
        };
        self.constant + self.coefficient * t.powf(self.exponent) * activation
    }
}

pub fn low_t_density(spec: &ChainSpec, disp: &Dispersion) -> Result<LowTDensity> {
    let lambda = spec.lambda;
    let regime = classify(lambda, disp);
    let edge = |order: u32, scale: f64| -> Result<f64> {
        let s = 1.0 / order as f64;
        Ok(scale / PI * gamma_fn(1.0 + s)?)
    };
    let (kappa, a, nu, b) = (disp.kappa(), disp.a_coef(), disp.nu(), disp.b_coef());
    let e_pi = disp.e_pi();
    let out = |constant, coefficient, exponent, decay| LowTDensity {
        regime,
        constant,
        coefficient,
        exponent,
        decay,
    };
    Ok(match regime {
        Regime::BelowInterval => out(0.0, edge(kappa, a)?, 1.0 / kappa as f64, -lambda),
        Regime::LowerEndpoint => {
            let s = 1.0 / kappa as f64;
            // κ = 1 gives η(1) = log 2.
            let eta = if kappa == 1 { LN_2 } else { dirichlet_eta(s)? };
            out(0.0, edge(kappa, a)? * eta, s, 0.0)
        }
        Regime::Critical => {
            let cp = critical_point(spec, disp)?;
            let p0 = cp.p0.expect("critical regime has a Fermi point");
            let v = cp.v.expect("critical regime has a velocity");
            out(p0 / PI, -PI * disp.deriv2(p0) / (6.0 * v.powi(3)), 2.0, 0.0)
        }
        Regime::UpperEndpoint => {
            let s = 1.0 / nu as f64;
            out(1.0, -edge(nu, b)? * dirichlet_eta(s)?, s, 0.0)
        }
        Regime::AboveInterval => out(1.0, -edge(nu, b)?, 1.0 / nu as f64, lambda - e_pi),
    })
}

/// Finite-difference estimate of the `T²` coefficient of `n_f` at a critical `λ`:
/// a fit of `(n_f(T) - p0/π)/T²` against `T²` over `T ∈ [0.005, 0.03]·E(π)`.
pub fn t2_coefficient_fd(spec: &ChainSpec, disp: &Dispersion) -> Result<f64> {
    if classify(spec.lambda, disp) != Regime::Critical {
        return Err(Error::InvalidRegime(
            "T² coefficient needs a critical lambda",
        ));
    }
    let n0 = zero_t_density(spec, disp)?;
    let temps = lin_grid(0.005 * disp.e_pi(), 0.03 * disp.e_pi(), 8);
    let rows: Vec<f64> = temps
        .par_iter()
        .map(|&t| density(spec, disp, t).map(|d| (d.n_f - n0) / (t * t)))
        .collect::<Result<_>>()?;
    let t2: Vec<f64> = temps.iter().map(|t| t * t).collect();
    Ok(linear_fit(&t2, &rows)?.intercept)
}

/// Exponents of `n_f(λ→0⁺)` and `1 - n_f(λ→E(π)⁻)` at `T = 0`, from log–log fits
/// over `λ` (or `E(π) - λ`) in `[1e-8, 1e-5]·E(π)`.
pub fn zero_t_exponents(disp: &Dispersion) -> Result<(f64, f64)> {
    let e_pi = disp.e_pi();
    let d = log_grid(1e-8 * e_pi, 1e-5 * e_pi, 10);
    let low: Vec<f64> = d.iter().map(|&l| disp.inverse(l) / PI).collect();
    let high: Vec<f64> = d
        .iter()
        .map(|&l| (PI - disp.inverse(e_pi - l)) / PI)
        .collect();
    Ok((power_law_fit(&d, &low)?.0, power_law_fit(&d, &high)?.0))
}

/// Temperature behaviour of `n_f` at fixed critical `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremaClass {
    /// A single minimum.
    MinimumOnly,
    /// A maximum followed by a minimum.
    MaximumThenMinimum,
    /// Monotone.
    Monotone,
    /// A single maximum.
    MaximumOnly,
}

impl ExtremaClass {
    pub fn label(self) -> &'static str {
        match self {
            ExtremaClass::MinimumOnly => "i",
            ExtremaClass::MaximumThenMinimum => "ii",
            ExtremaClass::Monotone => "iii",
            ExtremaClass::MaximumOnly => "iv",
        }
    }

    fn rank(self) -> u8 {
        self as u8
    }
}

fn collapse(signs: impl IntoIterator<Item = i8>) -> Vec<i8> {
    let mut out: Vec<i8> = Vec::new();
    for s in signs {
        if s != 0 && out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

fn class_of(seq: &[i8]) -> Option<ExtremaClass> {
    match seq {
        [-1, 1] => Some(ExtremaClass::MinimumOnly),
        [1, -1, 1] => Some(ExtremaClass::MaximumThenMinimum),
        // An empty pattern means `n_f` does not depend on `T`.
        [] | [1] => Some(ExtremaClass::Monotone),
        [1, -1] => Some(ExtremaClass::MaximumOnly),
        _ => None,
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn signed(d: f64, err: f64) -> i8 {
    if d.abs() <= 10.0 * err {
        0
    } else {
        sign(d)
    }
}

/// Golden-section search for an extremum of `g` on `[lo, hi]` (in `log T`).
/// Returns the extremal `(value, error)`.
fn golden_extremum(
    g: impl Fn(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
    minimize: bool,
) -> Result<(f64, f64)> {
    const R: f64 = 0.618_033_988_749_895;
    let key = |v: (f64, f64)| if minimize { v.0 } else { -v.0 };
    let mut x1 = hi - R * (hi - lo);
    let mut x2 = lo + R * (hi - lo);
    let mut g1 = g(x1)?;
    let mut g2 = g(x2)?;
    for _ in 0..40 {
        if key(g1) < key(g2) {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - R * (hi - lo);
            g1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + R * (hi - lo);
            g2 = g(x2)?;
        }
    }
    Ok(if key(g1) < key(g2) { g1 } else { g2 })
}

/// Sign pattern of `∂n_f/∂T` on a grid. An interior positive local minimum, or
/// negative local maximum, is refined by golden section so that a narrow pair
/// of sign changes between grid points is not missed.
fn grid_pattern(
    spec: &ChainSpec,
    disp: &Dispersion,
    temps: &[f64],
    values: &[(f64, f64)],
) -> Result<Vec<i8>> {
    let g = |x: f64| t_derivative_with_error(spec, disp, x.exp());
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let (d, err) = values[i];
        let s = signed(d, err);
        if i == 0 || i + 1 == values.len() {
            out.push(s);
            continue;
        }
        let (l, r) = (values[i - 1].0, values[i + 1].0);
        let (lo, hi) = (temps[i - 1].ln(), temps[i + 1].ln());
        let refined = if s >= 0 && d <= l && d <= r {
            let (v, e) = golden_extremum(g, lo, hi, true)?;
            signed(v, e).min(s)
        } else if s <= 0 && d >= l && d >= r {
            let (v, e) = golden_extremum(g, lo, hi, false)?;
            signed(v, e).max(s)
        } else {
            s
        };
        out.push(refined);
    }
    Ok(out)
}

/// Classify `n_f(T)` at a critical `λ` by the sign pattern of `∂n_f/∂T` over
/// `T ∈ [1e-3·E(π), t_max]`, bracketed by the asymptotic signs at `T → 0⁺`
/// (opposite to `E''(p0)`) and `T → ∞` (that of `Ē - λ`). Values within their
/// error count as zero. The pattern must be the same on the coarse grid and on
/// its twofold refinement.
pub fn classify_extrema(spec: &ChainSpec, disp: &Dispersion, t_max: f64) -> Result<ExtremaClass> {
    let lambda = spec.lambda;
    if classify(lambda, disp) != Regime::Critical {
        return Err(Error::InvalidRegime(
            "extremum classification needs a critical lambda",
        ));
    }
    let p0 = disp.inverse(lambda);
    let e_pi = disp.e_pi();
    let tiny = |x: f64, scale: f64| if x.abs() <= 1e-12 * scale { 0.0 } else { x };
    let s0 = sign(tiny(-disp.deriv2(p0), e_pi));
    let s_inf = sign(tiny(disp.mean() - lambda, e_pi));
    let fine_t = log_grid(1e-3 * e_pi, t_max, 2 * EXTREMA_T_POINTS - 1);
    let fine_v: Vec<(f64, f64)> = fine_t
        .iter()
        .map(|&t| t_derivative_with_error(spec, disp, t))
        .collect::<Result<_>>()?;
    let coarse_t: Vec<f64> = fine_t.iter().copied().step_by(2).collect();
    let coarse_v: Vec<(f64, f64)> = fine_v.iter().copied().step_by(2).collect();
    let bracket = |inner: Vec<i8>| {
        let mut all = vec![s0];
        all.extend(inner);
        all.push(s_inf);
        collapse(all)
    };
    let seq_c = bracket(grid_pattern(spec, disp, &coarse_t, &coarse_v)?);
    let seq_f = bracket(grid_pattern(spec, disp, &fine_t, &fine_v)?);
    if seq_c != seq_f {
        return Err(Error::ClassificationAmbiguous {
            lambda,
            reason: format!("sign pattern {seq_c:?} changes to {seq_f:?} under refinement"),
        });
    }
    class_of(&seq_f).ok_or_else(|| Error::ClassificationAmbiguous {
        lambda,
        reason: format!("sign pattern {seq_f:?} matches no class"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaMap {
    pub model: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub e_pi: f64,
    /// `(λ, class)` on the scan grid.
    pub samples: Vec<(f64, ExtremaClass)>,
}

impl ExtremaMap {
    /// Classes present, in order of increasing `λ`.
    pub fn classes(&self) -> Vec<ExtremaClass> {
        let mut out: Vec<ExtremaClass> = Vec::new();
        for &(_, c) in &self.samples {
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// Boundaries `λ₁ ≤ λ₂ ≤ λ₃` between the four classes over the critical interval.
pub fn extrema_map(spec: &ChainSpec, disp: &Dispersion, t_max: f64) -> Result<ExtremaMap> {
    let e_pi = disp.e_pi();
    let n = EXTREMA_LAMBDA_POINTS;
    let lambdas: Vec<f64> = (0..n).map(|k| e_pi * (k as f64 + 0.5) / n as f64).collect();
    let classify_at =
        |l: f64| -> Result<ExtremaClass> { classify_extrema(&spec.with_lambda(l), disp, t_max) };
    let classes: Vec<ExtremaClass> = lambdas
        .par_iter()
        .map(|&l| classify_at(l))
        .collect::<Result<_>>()?;
    for (w, l) in classes.windows(2).zip(&lambdas) {
        if w[1].rank() < w[0].rank() {
            return Err(Error::ClassificationAmbiguous {
                lambda: *l,
                reason: format!(
                    "class {} follows class {} at larger lambda",
                    w[1].label(),
                    w[0].label()
                ),
            });
        }
    }
    // Edge `s` separates classes of rank <= s from the rest; an absent class
    // gives coinciding edges.
    let mut edges = [0.0; 3];
    for (slot, edge) in edges.iter_mut().enumerate() {
        let below = |c: ExtremaClass| c.rank() as usize <= slot;
        *edge = match classes.iter().position(|&c| !below(c)) {
            Some(0) => 0.0,
            None => e_pi,
            Some(k) => bisect_boundary(lambdas[k - 1], lambdas[k], 1e-6 * e_pi, |l| {
                classify_at(l).map(below)
            })?,
        };
    }
    Ok(ExtremaMap {
        model: spec.interaction.to_string(),
        lambda1: edges[0],
        lambda2: edges[1],
        lambda3: edges[2],
        e_pi,
        samples: lambdas.into_iter().zip(classes).collect(),
    })
}

/// Bisect between `lo` (predicate true) and `hi` (false) down to width `tol`.
fn bisect_boundary(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    pred: impl Fn(f64) -> Result<bool>,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
