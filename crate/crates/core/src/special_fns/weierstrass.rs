//! Weierstrass `℘` and `ζ` on the real and imaginary axes of a rectangular lattice.
//!
//! The lattice is generated by the half-periods `ω₁` (real) and `ω₃ = i·ω₃'`.
//! Both functions are summed from their trigonometric q-series (logarithmic
//! derivatives of `θ₁`). When the nome `q = exp(-π ω₃'/ω₁)` is too close to one
//! the lattice is rotated by a quarter turn, which exchanges the roles of the two
//! axes and replaces `q` by the dual nome `exp(-π ω₁/ω₃')`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nome above which the series are summed on the rotated lattice.
pub const MODULAR_SWITCH_NOME: f64 = 0.95;

/// Radius, in units of the full period, inside which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-8;

/// Series data for a rectangular lattice with real half-period `w` and
/// imaginary half-period `i·wi`.
#[derive(Debug, Clone)]
struct RectSeries {
    w: f64,
    wi: f64,
    /// `-ln q`, kept instead of `q` so the dual nome never underflows.
    s: f64,
    /// `π / (2w)`
    k: f64,
    /// `q^{2n} / (1 - q^{2n})` for `n = 1..`
    coef: Vec<f64>,
    eta: f64,
    eta_imag: f64,
}

impl RectSeries {
    fn new(w: f64, wi: f64) -> Self {
        let s = PI * wi / w;
        let k = PI / (2.0 * w);
        // e^{-ns} n^3 must fall below 1e-22 for the imaginary-axis sums at |y| <= wi.
        let mut coef = Vec::new();
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            if (-nf * s).exp() * nf.powi(3) < 1e-22 && n > 1 {
                break;
            }
            coef.push(q_coef(nf, s));
            n += 1;
        }
        let mut series = RectSeries {
            w,
            wi,
            s,
            k,
            coef,
            eta: 0.0,
            eta_imag: 0.0,
        };
        let m: f64 = series
            .coef
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * c)
            .sum();
        series.eta = PI * PI / (12.0 * w) * (1.0 - 24.0 * m);
        series.eta_imag = series.zeta_imag_reduced(wi);
        series
    }

    fn reduce(x: f64, half_period: f64) -> (f64, f64) {
        let period = 2.0 * half_period;
        let m = (x / period).round();
        (x - m * period, m)
    }

    fn guard(xr: f64, half_period: f64, x: f64) -> Result<()> {
        if (xr / (2.0 * half_period)).abs() < POLE_GUARD {
            Err(Error::PoleAt { x })
        } else {
            Ok(())
        }
    }

    fn wp_real(&self, x: f64) -> Result<f64> {
        let (xr, _) = Self::reduce(x, self.w);
        Self::guard(xr, self.w, x)?;
        let k = self.k;
        let kx = k * xr;
        let csc = 1.0 / kx.sin();
        let mut sum = 0.0;
        for (i, c) in self.coef.iter().enumerate() {
            let n = (i + 1) as f64;
            sum += n * c * (2.0 * n * kx).cos();
        }
        Ok(-self.eta / self.w + k * k * (csc * csc - 8.0 * sum))
    }

    fn wp_real_deriv(&self, x: f64) -> Result<f64> {
        let (xr, _) = Self::reduce(x, self.w);
        Self::guard(xr, self.w, x)?;
        let k = self.k;
        let kx = k * xr;
        let csc = 1.0 / kx.sin();
        let cot = kx.cos() * csc;
        let mut sum = 0.0;
        for (i, c) in self.coef.iter().enumerate() {
            let n = (i + 1) as f64;
            sum += n * n * c * (2.0 * n * kx).sin();
        }
        Ok(k * k * k * (-2.0 * csc * csc * cot + 16.0 * sum))
    }

    fn zeta_real(&self, x: f64) -> Result<f64> {
        let (xr, m) = Self::reduce(x, self.w);
        Self::guard(xr, self.w, x)?;
        let k = self.k;
        let kx = k * xr;
        let mut sum = 0.0;
        for (i, c) in self.coef.iter().enumerate() {
            let n = (i + 1) as f64;
            sum += c * (2.0 * n * kx).sin();
        }
        let core = self.eta * xr / self.w + k / kx.tan() + 4.0 * k * sum;
        Ok(core + 2.0 * m * self.eta)
    }

    /// `℘(iy)`, real for real `y`.
    fn wp_imag(&self, y: f64) -> Result<f64> {
        let (yr, _) = Self::reduce(y, self.wi);
        Self::guard(yr, self.wi, y)?;
        let k = self.k;
        let t = 2.0 * k * yr.abs();
        let csch = 1.0 / (k * yr).sinh();
        let mut sum = 0.0;
        for n in 1..=self.coef.len() {
            let nf = n as f64;
            sum += nf * cosh_term(nf, self.s, t);
        }
        Ok(-self.eta / self.w - k * k * (csch * csch + 8.0 * sum))
    }

    /// `d/dy ℘(iy)`.
    fn wp_imag_deriv(&self, y: f64) -> Result<f64> {
        let (yr, _) = Self::reduce(y, self.wi);
        Self::guard(yr, self.wi, y)?;
        let k = self.k;
        let t = 2.0 * k * yr.abs();
        let ky = k * yr;
        let csch = 1.0 / ky.sinh();
        let coth = 1.0 / ky.tanh();
        let mut sum = 0.0;
        for n in 1..=self.coef.len() {
            let nf = n as f64;
            sum += nf * nf * sinh_term(nf, self.s, t);
        }
        let sum = sum * yr.signum();
        Ok(-k * k * k * (-2.0 * csch * csch * coth + 16.0 * sum))
    }

    /// `i·ζ(iy)`, real for real `y`.
    fn zeta_imag(&self, y: f64) -> Result<f64> {
        let (yr, m) = Self::reduce(y, self.wi);
        Self::guard(yr, self.wi, y)?;
        Ok(self.zeta_imag_reduced(yr) + 2.0 * m * self.eta_imag)
    }

    fn zeta_imag_reduced(&self, y: f64) -> f64 {
        let k = self.k;
        let t = 2.0 * k * y.abs();
        let mut sum = 0.0;
        for n in 1..=self.coef.len() {
            sum += sinh_term(n as f64, self.s, t);
        }
        let sum = sum * y.signum();
        -self.eta * y / self.w + k / (k * y).tanh() - 4.0 * k * sum
    }

    fn g2(&self) -> f64 {
        let sum: f64 = self
            .coef
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powi(3) * c)
            .sum();
        4.0 / 3.0 * self.k.powi(4) * (1.0 + 240.0 * sum)
    }

    fn g3(&self) -> f64 {
        let sum: f64 = self
            .coef
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powi(5) * c)
            .sum();
        8.0 / 27.0 * self.k.powi(6) * (1.0 - 504.0 * sum)
    }

    /// Roots `(e1, e2, e3)` from the theta constants at nome `q`.
    fn roots_theta(&self) -> (f64, f64, f64) {
        let s = self.s;
        let mut th2 = 0.0;
        let mut th3 = 1.0;
        let mut th4 = 1.0;
        for n in 0..200 {
            let nf = n as f64;
            let t2 = 2.0 * (-(nf + 0.5) * (nf + 0.5) * s).exp();
            th2 += t2;
            if n > 0 {
                let t = 2.0 * (-nf * nf * s).exp();
                th3 += t;
                th4 += if n % 2 == 0 { t } else { -t };
            }
            if t2 < 1e-300 {
                break;
            }
        }
        let (a2, a3, a4) = (th2.powi(4), th3.powi(4), th4.powi(4));
        let pref = self.k * self.k / 3.0;
        (pref * (a3 + a4), pref * (a2 - a4), -pref * (a2 + a3))
    }
}

fn q_coef(n: f64, s: f64) -> f64 {
    (-2.0 * n * s).exp() / -(-2.0 * n * s).exp_m1()
}

/// `q^{2n}/(1-q^{2n}) · cosh(n t)` without forming the large factor.
fn cosh_term(n: f64, s: f64, t: f64) -> f64 {
    ((-n * (2.0 * s - t)).exp() + (-n * (2.0 * s + t)).exp()) / (-2.0 * (-2.0 * n * s).exp_m1())
}

fn sinh_term(n: f64, s: f64, t: f64) -> f64 {
    ((-n * (2.0 * s - t)).exp() - (-n * (2.0 * s + t)).exp()) / (-2.0 * (-2.0 * n * s).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    Direct,
    Rotated,
}

/// Rectangular period lattice with half-periods `ω₁` and `i·ω₃'`.
///
/// Immutable once built; all evaluators take `&self`.
#[derive(Debug, Clone)]
pub struct Lattice {
    omega1: f64,
    omega3_imag: f64,
    orientation: Orientation,
    series: RectSeries,
}

impl Lattice {
    pub fn new(omega1: f64, omega3_imag: f64) -> Result<Self> {
        let q = (-PI * omega3_imag / omega1).exp();
        let orientation = if q > MODULAR_SWITCH_NOME {
            Orientation::Rotated
        } else {
            Orientation::Direct
        };
        Self::with_orientation(omega1, omega3_imag, orientation)
    }

    fn with_orientation(omega1: f64, omega3_imag: f64, orientation: Orientation) -> Result<Self> {
        if !(omega1.is_finite() && omega1 > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "omega1 = {omega1} must be positive"
            )));
        }
        if !(omega3_imag.is_finite() && omega3_imag > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "omega3_imag = {omega3_imag} must be positive"
            )));
        }
        let series = match orientation {
            Orientation::Direct => RectSeries::new(omega1, omega3_imag),
            Orientation::Rotated => RectSeries::new(omega3_imag, omega1),
        };
        Ok(Lattice {
            omega1,
            omega3_imag,
            orientation,
            series,
        })
    }

    /// Lattice with half-periods `π` and `iπ/α`, the momentum-space lattice of
    /// the elliptic chain.
    pub fn elliptic(alpha: f64) -> Result<Self> {
        Self::new(PI, PI / alpha)
    }

    /// Same lattice, summed on the orientation not chosen by [`Lattice::new`].
    /// Used to cross-check the two series representations.
    pub fn alternate(&self) -> Self {
        let other = match self.orientation {
            Orientation::Direct => Orientation::Rotated,
            Orientation::Rotated => Orientation::Direct,
        };
        Self::with_orientation(self.omega1, self.omega3_imag, other)
            .expect("lattice already validated")
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega3_imag(&self) -> f64 {
        self.omega3_imag
    }

    /// `q = exp(-π ω₃'/ω₁)`.
    pub fn nome(&self) -> f64 {
        (-PI * self.omega3_imag / self.omega1).exp()
    }

    pub fn is_rotated(&self) -> bool {
        self.orientation == Orientation::Rotated
    }

    /// `℘(x)` for real `x`.
    pub fn wp(&self, x: f64) -> Result<f64> {
        match self.orientation {
            Orientation::Direct => self.series.wp_real(x),
            Orientation::Rotated => self.series.wp_imag(x).map(|v| -v),
        }
    }

    /// `℘'(x)` for real `x`.
    pub fn wp_prime(&self, x: f64) -> Result<f64> {
        match self.orientation {
            Orientation::Direct => self.series.wp_real_deriv(x),
            Orientation::Rotated => self.series.wp_imag_deriv(x).map(|v| -v),
        }
    }

    /// `ζ(x)` for real `x`.
    pub fn wzeta(&self, x: f64) -> Result<f64> {
        match self.orientation {
            Orientation::Direct => self.series.zeta_real(x),
            Orientation::Rotated => self.series.zeta_imag(x),
        }
    }

    /// `℘(iy)` for real `y`.
    pub fn wp_imag_axis(&self, y: f64) -> Result<f64> {
        match self.orientation {
            Orientation::Direct => self.series.wp_imag(y),
            Orientation::Rotated => self.series.wp_real(y).map(|v| -v),
        }
    }

    /// `i·ζ(iy)` for real `y`; real-valued on a rectangular lattice.
    pub fn zeta_imag_axis(&self, y: f64) -> Result<f64> {
        match self.orientation {
            Orientation::Direct => self.series.zeta_imag(y),
            Orientation::Rotated => self.series.zeta_real(y),
        }
    }

    /// `η₁ = ζ(ω₁)`.
    pub fn eta1(&self) -> f64 {
        match self.orientation {
            Orientation::Direct => self.series.eta,
            Orientation::Rotated => self.series.eta_imag,
        }
    }

    /// `e₁ = ℘(ω₁)`.
    pub fn e1(&self) -> f64 {
        self.wp(self.omega1).expect("half-period is never a pole")
    }

    /// Second invariant from the weight-4 Eisenstein series.
    pub fn g2(&self) -> f64 {
        self.series.g2()
    }

    /// Third invariant from the weight-6 Eisenstein series.
    pub fn g3(&self) -> f64 {
        match self.orientation {
            Orientation::Direct => self.series.g3(),
            Orientation::Rotated => -self.series.g3(),
        }
    }

    /// Roots `(e₁, e₂, e₃)` of `4t³ - g₂t - g₃` from theta constants.
    pub fn roots_theta(&self) -> (f64, f64, f64) {
        let (a, b, c) = self.series.roots_theta();
        match self.orientation {
            Orientation::Direct => (a, b, c),
            Orientation::Rotated => (-c, -b, -a),
        }
    }

    /// `g₂ = 2(e₁² + e₂² + e₃²)` from the theta-constant roots.
    pub fn g2_theta(&self) -> f64 {
        let (a, b, c) = self.roots_theta();
        2.0 * (a * a + b * b + c * c)
    }

    /// `(η₁, e₁, g₂)`.
    pub fn constants(&self) -> (f64, f64, f64) {
        (self.eta1(), self.e1(), self.g2())
    }

    /// Real form of Legendre's relation, `η₁ω₃' + ω₁·iζ(iω₃') - π/2`.
    pub fn legendre_residual(&self) -> f64 {
        let zt = self
            .zeta_imag_axis(self.omega3_imag)
            .expect("half-period is never a pole");
        self.eta1() * self.omega3_imag + self.omega1 * zt - PI / 2.0
    }
}

/// `(η₁, e₁, g₂)` of `lat`.
pub fn lattice_constants(lat: &Lattice) -> (f64, f64, f64) {
    lat.constants()
}
