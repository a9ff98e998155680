//! Special functions: Weierstrass `℘`/`ζ` on rectangular lattices, `Γ`,
//! Riemann `ζ_R` and Dirichlet `η`.

mod weierstrass;

pub use weierstrass::{lattice_constants, Lattice, MODULAR_SWITCH_NOME, POLE_GUARD};

use crate::error::{Error, Result};

/// Gamma function for positive real arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError {
            function: "gamma",
            x,
        });
    }
    Ok(statrs::function::gamma::gamma(x))
}

// B_{2k} / (2k)! for k = 1..=10
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Riemann zeta for real `x > 0`, `x != 1`, by Euler–Maclaurin summation.
pub fn riemann_zeta(x: f64) -> Result<f64> {
    if !(x > 0.0) || x == 1.0 || !x.is_finite() {
        return Err(Error::DomainError {
            function: "riemann_zeta",
            x,
        });
    }
    const N: usize = 24;
    let nf = N as f64;
    let mut sum = 0.0;
    for n in (1..N).rev() {
        sum += (n as f64).powf(-x);
    }
    sum += nf.powf(1.0 - x) / (x - 1.0) + 0.5 * nf.powf(-x);
    // rising product s(s+1)...(s+2k-2) times N^{-s-2k+1}
    let mut rising = x;
    let mut power = nf.powf(-x - 1.0);
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            rising *= (x + j - 1.0) * (x + j);
            power /= nf * nf;
        }
        sum += c * rising * power;
    }
    Ok(sum)
}

/// Dirichlet eta `Σ (-1)^{n-1} n^{-x}` for real `x > 0`, via Borwein's
/// accelerated alternating series.
pub fn dirichlet_eta(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError {
            function: "dirichlet_eta",
            x,
        });
    }
    const N: usize = 40;
    // d_k = N Σ_{i<=k} (N+i-1)! 4^i / ((N-i)! (2i)!), built from the ratio of successive terms
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / N as f64;
    let mut acc = term;
    d[0] = N as f64 * acc;
    for i in 1..=N {
        let (fi, fnn) = (i as f64, N as f64);
        term *= (fnn + fi - 1.0) * (fnn - fi + 1.0) * 4.0 / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        d[i] = fnn * acc;
    }
    let dn = d[N];
    let mut sum = 0.0;
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (dn - dk) / dn * ((k + 1) as f64).powf(-x);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn zeta_classical_values() {
        assert!(rel(riemann_zeta(2.0).unwrap(), PI * PI / 6.0) < 1e-14);
        assert!(rel(riemann_zeta(4.0).unwrap(), PI.powi(4) / 90.0) < 1e-14);
        assert!(rel(riemann_zeta(0.5).unwrap(), -1.4603545088095868) < 1e-13);
        assert!(rel(riemann_zeta(1.5).unwrap(), 2.6123753486854883) < 1e-13);
        assert!(rel(riemann_zeta(10.0).unwrap(), 1.0009945751278181) < 1e-14);
    }

    #[test]
    fn eta_classical_values() {
        assert!(rel(dirichlet_eta(1.0).unwrap(), LN_2) < 1e-14);
        assert!(rel(dirichlet_eta(2.0).unwrap(), PI * PI / 12.0) < 1e-14);
        assert!(rel(dirichlet_eta(0.5).unwrap(), 0.6048986434216303) < 1e-13);
    }

    #[test]
    fn eta_matches_zeta_relation() {
        for &x in &[0.25, 0.5, 0.75, 1.5, 2.5, 3.0, 5.0, 7.5, 10.0] {
            let lhs = dirichlet_eta(x).unwrap();
            let rhs = (1.0 - 2f64.powf(1.0 - x)) * riemann_zeta(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn gamma_values() {
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-13);
        assert!(rel(gamma_fn(1.5).unwrap(), PI.sqrt() / 2.0) < 1e-13);
        assert!(rel(gamma_fn(5.0).unwrap(), 24.0) < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(gamma_fn(0.0), Err(Error::DomainError { .. })));
        assert!(matches!(gamma_fn(-1.5), Err(Error::DomainError { .. })));
        assert!(matches!(riemann_zeta(1.0), Err(Error::DomainError { .. })));
        assert!(matches!(riemann_zeta(-2.0), Err(Error::DomainError { .. })));
        assert!(matches!(dirichlet_eta(0.0), Err(Error::DomainError { .. })));
    }
}
