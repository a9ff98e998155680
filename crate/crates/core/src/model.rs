//! Chain specification, couplings `h_N`, mode energies and the continuum
//! dispersion with its critical-point data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special_fns::Lattice;

/// Nome `e^{-π/α}` above which the elliptic dispersion switches to the dual-nome form.
const DIRECT_NOME_MAX: f64 = 0.95;

/// Relative tolerance used to place `λ` exactly at a band edge.
pub const REGIME_TOL: f64 = 1e-12;

/// Relative gap below which a mode counts as sitting at the chemical potential.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Interaction {
    Elliptic {
        alpha: f64,
    },
    Xx,
    Hs,
    /// `h(1), …, h(N-1)`
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sites {
    Finite(usize),
    ThermodynamicLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub interaction: Interaction,
    pub sites: Sites,
    pub lambda: f64,
}

impl ChainSpec {
    pub fn new(interaction: Interaction, sites: Sites, lambda: f64) -> Result<Self> {
        let spec = ChainSpec {
            interaction,
            sites,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn elliptic(alpha: f64, sites: Sites, lambda: f64) -> Result<Self> {
        Self::new(Interaction::Elliptic { alpha }, sites, lambda)
    }

    pub fn xx(sites: Sites, lambda: f64) -> Result<Self> {
        Self::new(Interaction::Xx, sites, lambda)
    }

    pub fn hs(sites: Sites, lambda: f64) -> Result<Self> {
        Self::new(Interaction::Hs, sites, lambda)
    }

    /// Copy with a different chemical potential.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        ChainSpec {
            lambda,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "lambda = {} is not finite",
                self.lambda
            )));
        }
        if let Sites::Finite(n) = self.sites {
            if n < 2 {
                return Err(Error::InvalidSpec(format!(
                    "need at least 2 sites, got {n}"
                )));
            }
        }
        match &self.interaction {
            Interaction::Elliptic { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "alpha = {alpha} must be positive"
                    )));
                }
            }
            Interaction::Xx | Interaction::Hs => {}
            Interaction::Tabulated(h) => {
                let n = match self.sites {
                    Sites::Finite(n) => n,
                    Sites::ThermodynamicLimit => {
                        return Err(Error::InvalidSpec(
                            "tabulated couplings need a finite chain".into(),
                        ))
                    }
                };
                if h.len() != n - 1 {
                    return Err(Error::InvalidSpec(format!(
                        "expected {} couplings, got {}",
                        n - 1,
                        h.len()
                    )));
                }
                for (j, &v) in h.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "h({}) = {v} must be >= 0",
                            j + 1
                        )));
                    }
                    let mirror = h[n - 2 - j];
                    if (v - mirror).abs() > 1e-12 * v.abs().max(1.0) {
                        return Err(Error::InvalidSpec(format!(
                            "h({}) = {v} differs from h({}) = {mirror}",
                            j + 1,
                            n - 1 - j
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> Result<usize> {
        match self.sites {
            Sites::Finite(n) => Ok(n),
            Sites::ThermodynamicLimit => Err(Error::RequiresFiniteChain),
        }
    }

    /// Couplings `h_N(1), …, h_N(N-1)`.
    pub fn couplings(&self) -> Result<Vec<f64>> {
        let n = self.n_sites()?;
        match &self.interaction {
            Interaction::Tabulated(h) => Ok(h.clone()),
            Interaction::Xx => Ok((1..n)
                .map(|x| f64::from(x == 1) + f64::from(x == n - 1))
                .collect()),
            Interaction::Hs => {
                let nf = n as f64;
                Ok((1..n)
                    .map(|x| {
                        let s = (PI * x as f64 / nf).sin();
                        (PI / nf).powi(2) / (s * s)
                    })
                    .collect())
            }
            Interaction::Elliptic { alpha } => {
                if *alpha < n as f64 {
                    Ok(elliptic_couplings_images(*alpha, n))
                } else {
                    elliptic_couplings_weierstrass(*alpha, n)
                }
            }
        }
    }

    /// Mode energies `ε_N(l) = Σ_j [1 - cos(2πjl/N)] h_N(j)` for `l = 0..N`.
    pub fn mode_energies(&self) -> Result<Vec<f64>> {
        let n = self.n_sites()?;
        let h = self.couplings()?;
        Ok((0..n).map(|l| mode_sum(&h, n, l)).collect())
    }

    /// Occupation of each mode in the ground state.
    ///
    /// Fails with [`Error::DegenerateGroundState`] if some `ε_N(l)` equals `λ`.
    pub fn ground_state_occupation(&self) -> Result<Vec<bool>> {
        let eps = self.mode_energies()?;
        let scale = eps
            .iter()
            .fold(self.lambda.abs(), |m, e| m.max(e.abs()))
            .max(1.0);
        eps.iter()
            .enumerate()
            .map(|(l, &e)| {
                if (e - self.lambda).abs() < DEGENERACY_TOL * scale {
                    Err(Error::DegenerateGroundState { mode: l })
                } else {
                    Ok(e < self.lambda)
                }
            })
            .collect()
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interaction::Elliptic { alpha } => write!(f, "elliptic(alpha={alpha})"),
            Interaction::Xx => write!(f, "xx"),
            Interaction::Hs => write!(f, "hs"),
            Interaction::Tabulated(h) => write!(f, "tabulated({} couplings)", h.len()),
        }
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.interaction)?;
        match self.sites {
            Sites::Finite(n) => write!(f, ", N={n}")?,
            Sites::ThermodynamicLimit => write!(f, ", N=inf")?,
        }
        write!(f, ", lambda={}", self.lambda)
    }
}

/// Elliptic couplings `(α/π)² sinh²(π/α)[℘_N(x) - 2η̂₁/α²]` with
/// `℘_N = ℘(·; N/2, iα/2)` and `η̂₁ = ζ(1/2; 1/2, iN/(2α))`.
///
/// Loses about `sinh²(π/α)·ε` absolute accuracy, so small `α` should use
/// [`elliptic_couplings_images`].
pub fn elliptic_couplings_weierstrass(alpha: f64, n: usize) -> Result<Vec<f64>> {
    let nf = n as f64;
    let lat = Lattice::new(nf / 2.0, alpha / 2.0)?;
    let eta_hat = Lattice::new(0.5, nf / (2.0 * alpha))?.eta1();
    let pref = (alpha / PI).powi(2) * (PI / alpha).sinh().powi(2);
    (1..n)
        .map(|x| Ok(pref * (lat.wp(x as f64)? - 2.0 * eta_hat / (alpha * alpha))))
        .collect()
}

/// Elliptic couplings as the periodized sum `sinh²(π/α) Σ_m csch²(π(x + mN)/α)`.
///
/// Converges like `e^{-2πN|m|/α}`; intended for `α` below `N`.
pub fn elliptic_couplings_images(alpha: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    let pref = (PI / alpha).sinh().powi(2);
    let csch2 = |y: f64| {
        let e = (-2.0 * PI * y.abs() / alpha).exp();
        4.0 * e / ((1.0 - e) * (1.0 - e))
    };
    (1..n)
        .map(|x| {
            let x = x as f64;
            let mut sum = csch2(x);
            for m in 1.. {
                let mf = m as f64;
                let t = csch2(x + mf * nf) + csch2(x - mf * nf);
                sum += t;
                if t <= 1e-18 * sum {
                    break;
                }
            }
            pref * sum
        })
        .collect()
}

fn mode_sum(h: &[f64], n: usize, l: usize) -> f64 {
    let nf = n as f64;
    h.iter()
        .enumerate()
        .map(|(i, hj)| {
            // reduce j*l mod N first to keep the angle small
            let m = ((i + 1) * l % n) as f64;
            2.0 * (PI * m / nf).sin().powi(2) * hj
        })
        .sum()
}

/// `h_N(x)` for `x` in `1..N`.
pub fn interaction_h(spec: &ChainSpec, x: usize) -> Result<f64> {
    let n = spec.n_sites()?;
    if x == 0 || x >= n {
        return Err(Error::InvalidSpec(format!(
            "coupling index {x} outside 1..{n}"
        )));
    }
    Ok(spec.couplings()?[x - 1])
}

/// `ε_N(l)` for `l` in `0..N`.
pub fn mode_energy(spec: &ChainSpec, l: usize) -> Result<f64> {
    let n = spec.n_sites()?;
    if l >= n {
        return Err(Error::InvalidSpec(format!("mode index {l} outside 0..{n}")));
    }
    Ok(mode_sum(&spec.couplings()?, n, l))
}

/// Cancellation-free q-series for the elliptic dispersion with `q = e^{-π/α}`,
/// regular at `p = 0`.
#[derive(Debug, Clone)]
struct DirectSeries {
    c0: f64,
    /// weights of `1 - cos(np)`
    w: Vec<f64>,
    /// weights of `sin(np)` in the squared term
    s: Vec<f64>,
}

impl DirectSeries {
    fn new(alpha: f64) -> Self {
        let sigma = PI / alpha; // -ln q
        let mut qt = Vec::new();
        let mut s = Vec::new();
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            let denom = -(-2.0 * nf * sigma).exp_m1();
            qt.push((-(2.0 * nf - 2.0) * sigma).exp() / denom);
            s.push((-(2.0 * nf - 1.0) * sigma).exp() / denom);
            if (-2.0 * nf * sigma).exp() * nf.powi(3) < 1e-20 {
                break;
            }
            n += 1;
        }
        let mut tail = vec![0.0; qt.len()];
        let mut acc = 0.0;
        for i in (0..qt.len()).rev() {
            tail[i] = acc;
            acc += qt[i];
        }
        let w = qt
            .iter()
            .zip(&tail)
            .enumerate()
            .map(|(i, (q, r))| 2.0 * (i as f64 + 2.0) * q + 4.0 * r)
            .collect();
        let q2 = (-2.0 * sigma).exp();
        let c0 = (1.0 - q2).powi(2) / 2.0;
        DirectSeries { c0, w, s }
    }

    /// `(E, E', E'')` at `p ∈ [0, π]`.
    ///
    /// `sin np` and `u_n = 1 - cos np` follow from angle addition; the update
    /// `u_{n+1} = u_n + u_1 - u_n u_1 + sin(np) sin p` has no cancellation near `p = 0`.
    fn eval(&self, p: f64) -> (f64, f64, f64) {
        let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let sin1 = p.sin();
        let half = (0.5 * p).sin();
        let u1 = 2.0 * half * half;
        let (mut sn, mut un) = (sin1, u1);
        for (i, (w, s)) in self.w.iter().zip(&self.s).enumerate() {
            let n = (i + 1) as f64;
            let cn = 1.0 - un;
            a0 += w * un;
            a1 += w * n * sn;
            a2 += w * n * n * cn;
            s0 += s * sn;
            s1 += s * n * cn;
            s2 -= s * n * n * sn;
            let next_s = sn * (1.0 - u1) + cn * sin1;
            un = un + u1 - un * u1 + sn * sin1;
            sn = next_s;
        }
        (
            self.c0 * (a0 - 4.0 * s0 * s0),
            self.c0 * (a1 - 8.0 * s0 * s1),
            self.c0 * (a2 - 8.0 * (s1 * s1 + s0 * s2)),
        )
    }
}

/// Dual-nome form for large `α`: with `y = αp/2` and `g = (α/2)coth(απ/2)`,
/// `E = 2sinh²(π/α)[(2g/π)(y coth y - 1) - (gp/π)²]` up to terms of relative
/// size `e^{-πα}`, which are below `1e-80` wherever this form is used.
#[derive(Debug, Clone)]
struct DualForm {
    alpha: f64,
    pref: f64,
    g: f64,
}

impl DualForm {
    fn new(alpha: f64) -> Self {
        let pref = 2.0 * (PI / alpha).sinh().powi(2);
        let g = alpha / 2.0 / (alpha * PI / 2.0).tanh();
        DualForm { alpha, pref, g }
    }

    fn eval(&self, p: f64) -> (f64, f64, f64) {
        let y = 0.5 * self.alpha * p;
        let (phi, dphi, d2phi) = ycoth_minus_one(y);
        let h = self.alpha / 2.0;
        let k = 2.0 * self.g / PI;
        let u = self.g / PI;
        (
            self.pref * (k * phi - (u * p).powi(2)),
            self.pref * (k * h * dphi - 2.0 * u * u * p),
            self.pref * (k * h * h * d2phi - 2.0 * u * u),
        )
    }
}

/// `φ(y) = y coth y - 1` and its first two derivatives, for `y >= 0`.
fn ycoth_minus_one(y: f64) -> (f64, f64, f64) {
    if y < 0.1 {
        phi_series(y)
    } else {
        phi_closed(y)
    }
}

fn phi_series(y: f64) -> (f64, f64, f64) {
    // 2^{2k} B_{2k}/(2k)! for k = 1..=5
    const C: [f64; 5] = [
        1.0 / 3.0,
        -1.0 / 45.0,
        2.0 / 945.0,
        -1.0 / 4725.0,
        2.0 / 93555.0,
    ];
    let y2 = y * y;
    let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let mut pw = 1.0; // y^{2k-2}
    for (i, c) in C.iter().enumerate() {
        let k2 = 2.0 * (i + 1) as f64;
        f += c * pw * y2;
        d1 += c * k2 * pw * y;
        d2 += c * k2 * (k2 - 1.0) * pw;
        pw *= y2;
    }
    (f, d1, d2)
}

fn phi_closed(y: f64) -> (f64, f64, f64) {
    let e = (-2.0 * y).exp();
    let coth = (1.0 + e) / (1.0 - e);
    let csch2 = 4.0 * e / ((1.0 - e) * (1.0 - e));
    let phi = y * coth - 1.0;
    (phi, coth - y * csch2, 2.0 * csch2 * phi)
}

#[derive(Debug, Clone)]
enum EllipticForm {
    Direct(DirectSeries),
    Dual(DualForm),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form {
    Xx,
    Hs,
    Elliptic {
        alpha: f64,
        form: EllipticForm,
    },
    Custom {
        e: ScalarFn,
        de: ScalarFn,
        d2e: ScalarFn,
    },
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Xx => write!(f, "Xx"),
            Form::Hs => write!(f, "Hs"),
            Form::Elliptic { alpha, .. } => write!(f, "Elliptic {{ alpha: {alpha} }}"),
            Form::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Form {
    /// `(E, E', E'')` on `[0, π]`.
    fn eval_half(&self, p: f64) -> (f64, f64, f64) {
        match self {
            Form::Xx => {
                let (s, c) = p.sin_cos();
                let half = (0.5 * p).sin();
                (4.0 * half * half, 2.0 * s, 2.0 * c)
            }
            Form::Hs => (0.5 * p * (2.0 * PI - p), PI - p, -1.0),
            Form::Elliptic { form, .. } => match form {
                EllipticForm::Direct(d) => d.eval(p),
                EllipticForm::Dual(d) => d.eval(p),
            },
            Form::Custom { e, de, d2e } => (e(p), de(p), d2e(p)),
        }
    }
}

/// Continuum dispersion `E(p)` on `[0, 2π]` with endpoint expansion data.
#[derive(Debug, Clone)]
pub struct Dispersion {
    form: Form,
    e_pi: f64,
    kappa: u32,
    a_coef: f64,
    nu: u32,
    b_coef: f64,
    mean: f64,
}

/// Grid size for the monotonicity check.
const MONOTONE_GRID: usize = 512;

impl Dispersion {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        let form = match &spec.interaction {
            Interaction::Xx => Form::Xx,
            Interaction::Hs => Form::Hs,
            Interaction::Elliptic { alpha } => {
                let alpha = *alpha;
                let form = if (-PI / alpha).exp() <= DIRECT_NOME_MAX {
                    EllipticForm::Direct(DirectSeries::new(alpha))
                } else {
                    EllipticForm::Dual(DualForm::new(alpha))
                };
                Form::Elliptic { alpha, form }
            }
            Interaction::Tabulated(_) => return Err(Error::UnsupportedInteraction),
        };
        Self::from_form(form)
    }

    /// Dispersion from user-supplied `E`, `E'`, `E''` on `[0, π]`, extended by
    /// `E(p) = E(2π - p)`. `E(0)` must vanish.
    pub fn custom<F, G, H>(e: F, de: G, d2e: H) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let e0 = e(0.0);
        if e0.abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("E(0) = {e0} must vanish")));
        }
        Self::from_form(Form::Custom {
            e: Arc::new(e),
            de: Arc::new(de),
            d2e: Arc::new(d2e),
        })
    }

    fn from_form(form: Form) -> Result<Self> {
        let mut disp = Dispersion {
            e_pi: form.eval_half(PI).0,
            form,
            kappa: 0,
            a_coef: 0.0,
            nu: 0,
            b_coef: 0.0,
            mean: 0.0,
        };
        disp.validate_monotone()?;
        let (kappa, a, nu, b) = endpoint_expansions(&disp)?;
        disp.kappa = kappa;
        disp.a_coef = a;
        disp.nu = nu;
        disp.b_coef = b;
        let r = integrate(|p| disp.eval(p), 0.0, PI, 1e-13 * disp.e_pi, 1e-14)?;
        disp.mean = r.value / PI;
        Ok(disp)
    }

    fn validate_monotone(&self) -> Result<()> {
        for i in 1..MONOTONE_GRID {
            let p = PI * i as f64 / MONOTONE_GRID as f64;
            let slope = self.deriv(p);
            if !(slope > 0.0) {
                return Err(Error::NonMonotoneDispersion { p, slope });
            }
        }
        Ok(())
    }

    fn eval_all(&self, p: f64) -> (f64, f64, f64) {
        let two_pi = 2.0 * PI;
        let r = p.rem_euclid(two_pi);
        if r <= PI {
            self.form.eval_half(r)
        } else {
            let (e, d1, d2) = self.form.eval_half(two_pi - r);
            (e, -d1, d2)
        }
    }

    /// `E(p)`, periodic with period `2π`.
    pub fn eval(&self, p: f64) -> f64 {
        self.eval_all(p).0
    }

    /// `E'(p)`; at `p = 0` this is the right derivative.
    pub fn deriv(&self, p: f64) -> f64 {
        self.eval_all(p).1
    }

    /// `E''(p)`; at `p = 0` this is the right derivative.
    pub fn deriv2(&self, p: f64) -> f64 {
        self.eval_all(p).2
    }

    pub fn e_pi(&self) -> f64 {
        self.e_pi
    }

    /// Lowest nonvanishing derivative order at `p = 0`.
    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// `[κ!/E^{(κ)}(0)]^{1/κ}`
    pub fn a_coef(&self) -> f64 {
        self.a_coef
    }

    /// Lowest nonvanishing (even) derivative order at `p = π`.
    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// `[-ν!/E^{(ν)}(π)]^{1/ν}`
    pub fn b_coef(&self) -> f64 {
        self.b_coef
    }

    /// Band average `(1/π)∫₀^π E(p) dp`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.form {
            Form::Elliptic { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Inverse of `E` on `[0, π]`, for `0 <= e <= E(π)`.
    pub fn inverse(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        if e >= self.e_pi {
            return PI;
        }
        let (mut lo, mut hi) = (0.0, PI);
        let mut p = 0.5 * PI;
        let tol = 1e-13 * e.abs().max(1.0);
        for _ in 0..200 {
            let (val, slope, _) = self.eval_all(p);
            let r = val - e;
            if r.abs() <= tol * 0.01 {
                break;
            }
            if r > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let newton = p - r / slope;
            p = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        p
    }
}

/// Build the continuum dispersion of `spec`.
pub fn dispersion(spec: &ChainSpec) -> Result<Dispersion> {
    Dispersion::new(spec)
}

/// Threshold on `|E^{(k)}| (π^k / k!) / E(π)` for a derivative to count as nonzero.
const ORDER_THRESHOLD: f64 = 1e-6;

/// One-sided derivatives `E^{(1..=4)}` at `p0`, going into the band in
/// direction `dir`. Orders 1 and 2 are limits of the analytic derivatives;
/// orders 3 and 4 are Richardson-extrapolated one-sided differences of `E''`.
fn one_sided_derivatives(disp: &Dispersion, p0: f64, dir: f64) -> [f64; 4] {
    let d1 = disp.form.eval_half(p0).1;
    let d2 = disp.form.eval_half(p0).2;
    // E''(p0 + dir·t) = d2 + dir·d3·t + d4·t²/2 + ...
    let scale = disp.alpha().map_or(1.0, |a| a.max(1.0));
    let h = 1e-3 / scale;
    let f = |t: f64| disp.form.eval_half(p0 + dir * t).2;
    let (f1, f2, f4) = (f(h), f(2.0 * h), f(4.0 * h));
    // forward differences with one Richardson level
    let diff = |t: f64, ft: f64, f2t: f64| (4.0 * ft - f2t - 3.0 * d2) / (2.0 * t);
    let d3 = dir * (4.0 * diff(h, f1, f2) - diff(2.0 * h, f2, f4)) / 3.0;
    let d4 = {
        let second = |t: f64, ft: f64, f2t: f64| (f2t - 2.0 * ft + d2) / (t * t);
        2.0 * second(h, f1, f2) - second(2.0 * h, f2, f4)
    };
    [d1, d2, d3, d4]
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `(κ, a, ν, b)` from the lowest nonvanishing derivatives at `0` and `π`.
pub fn endpoint_expansions(disp: &Dispersion) -> Result<(u32, f64, u32, f64)> {
    let e_pi = disp.e_pi;
    let scaled = |k: u32, d: f64| d.abs() * PI.powi(k as i32) / factorial(k) / e_pi;

    let at0 = one_sided_derivatives(disp, 0.0, 1.0);
    let kappa = (1..=4u32)
        .find(|&k| scaled(k, at0[k as usize - 1]) > ORDER_THRESHOLD)
        .ok_or(Error::ExpansionOrderUndetected { at: 0.0 })?;
    let a = (factorial(kappa) / at0[kappa as usize - 1]).powf(1.0 / kappa as f64);

    let atpi = one_sided_derivatives(disp, PI, -1.0);
    let nu = [2u32, 4]
        .into_iter()
        .find(|&k| scaled(k, atpi[k as usize - 1]) > ORDER_THRESHOLD)
        .ok_or(Error::ExpansionOrderUndetected { at: PI })?;
    let b = (-factorial(nu) / atpi[nu as usize - 1]).powf(1.0 / nu as f64);
    Ok((kappa, a, nu, b))
}

/// Position of `λ` relative to the band `[0, E(π)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    BelowInterval,
    LowerEndpoint,
    Critical,
    UpperEndpoint,
    AboveInterval,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::BelowInterval => "below-interval",
            Regime::LowerEndpoint => "lower-endpoint",
            Regime::Critical => "critical",
            Regime::UpperEndpoint => "upper-endpoint",
            Regime::AboveInterval => "above-interval",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub regime: Regime,
    /// Fermi momentum; `0` or `π` at the endpoints, absent outside the band.
    pub p0: Option<f64>,
    /// Fermi velocity `E'(p0)`, critical regime only.
    pub v: Option<f64>,
}

pub fn classify(lambda: f64, disp: &Dispersion) -> Regime {
    let tol = REGIME_TOL * disp.e_pi;
    if lambda < -tol {
        Regime::BelowInterval
    } else if lambda <= tol {
        Regime::LowerEndpoint
    } else if lambda < disp.e_pi - tol {
        Regime::Critical
    } else if lambda <= disp.e_pi + tol {
        Regime::UpperEndpoint
    } else {
        Regime::AboveInterval
    }
}

/// Fermi point of `spec.lambda`.
pub fn critical_point(spec: &ChainSpec, disp: &Dispersion) -> Result<CriticalPoint> {
    disp.validate_monotone()?;
    let lambda = spec.lambda;
    let regime = classify(lambda, disp);
    let (p0, v) = match regime {
        Regime::BelowInterval | Regime::AboveInterval => (None, None),
        Regime::LowerEndpoint => (Some(0.0), None),
        Regime::UpperEndpoint => (Some(PI), None),
        Regime::Critical => {
            let p0 = disp.inverse(lambda);
            (Some(p0), Some(disp.deriv(p0)))
        }
    };
    Ok(CriticalPoint { regime, p0, v })
}

/// `min_l |ε_N(l) - λ|`, which scales as `1/N` inside the band.
pub fn min_mode_gap(spec: &ChainSpec) -> Result<f64> {
    Ok(spec
        .mode_energies()?
        .iter()
        .map(|e| (e - spec.lambda).abs())
        .fold(f64::INFINITY, f64::min))
}
