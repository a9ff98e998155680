//! Dense exact diagonalization in the occupation basis, for small chains.
//!
//! Basis state `b ∈ 0..2^N` is the bitstring `s₁…s_N` read with `s₁` as the most
//! significant bit, so site `i` is bit `N - i` and the order is lexicographic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::entanglement::{matrix_diagnostics, VN_SWITCH};
use crate::error::{Error, Result};
use crate::model::{ChainSpec, DEGENERACY_TOL};

/// Largest chain handled by the dense oracle.
pub const MAX_SITES: usize = 12;
/// Tolerance for the spectrum against the mode subset sums.
pub const SPECTRUM_TOL: f64 = 1e-10;

fn occupied(b: usize, n: usize, i: usize) -> bool {
    (b >> (n - i)) & 1 == 1
}

/// Number of fermions strictly between sites `i < j` (1-based).
fn between(b: usize, n: usize, i: usize, j: usize) -> u32 {
    if j <= i + 1 {
        return 0;
    }
    // Sites i+1..j-1 are bits n-j+1..=n-i-1.
    let mask = ((1usize << (j - i - 1)) - 1) << (n - j + 1);
    (b & mask).count_ones()
}

fn checked_sites(spec: &ChainSpec) -> Result<usize> {
    let n = spec.n_sites()?;
    if n > MAX_SITES {
        return Err(Error::SizeCap {
            sites: n,
            max: MAX_SITES,
        });
    }
    Ok(n)
}

fn sign(parity: u32) -> f64 {
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Graded permutation `S_ij` (`i < j`, 1-based) as a dense matrix.
pub fn permutation_operator(n: usize, i: usize, j: usize) -> Result<DMatrix<f64>> {
    if n > MAX_SITES {
        return Err(Error::SizeCap {
            sites: n,
            max: MAX_SITES,
        });
    }
    if !(1 <= i && i < j && j <= n) {
        return Err(Error::InvalidSpec(format!(
            "need 1 <= i < j <= {n}, got ({i}, {j})"
        )));
    }
    let dim = 1usize << n;
    let mut s = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let (si, sj) = (occupied(b, n, i), occupied(b, n, j));
        if si == sj {
            s[(b, b)] = if si { -1.0 } else { 1.0 };
        } else {
            let swapped = b ^ (1 << (n - i)) ^ (1 << (n - j));
            s[(swapped, b)] = sign(between(b, n, i, j));
        }
    }
    Ok(s)
}

/// `H = Σ_{i<j} h_N(j-i)(1 - S_ij) - λ N_f`.
pub fn spin_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    let n = checked_sites(spec)?;
    let h = spec.couplings()?;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        m[(b, b)] -= spec.lambda * b.count_ones() as f64;
        for i in 1..n {
            for j in i + 1..=n {
                let hij = h[j - i - 1];
                let (si, sj) = (occupied(b, n, i), occupied(b, n, j));
                if si == sj {
                    // S_ij = (-1)^{s_i}
                    m[(b, b)] += hij * if si { 2.0 } else { 0.0 };
                } else {
                    let swapped = b ^ (1 << (n - i)) ^ (1 << (n - j));
                    m[(b, b)] += hij;
                    m[(swapped, b)] -= hij * sign(between(b, n, i, j));
                }
            }
        }
    }
    Ok(m)
}

/// `H = -Σ_{i,j} h_N(i-j) a†_i a_j - λ Σ_i a†_i a_i` with `h_N(0) = -Σ_x h_N(x)`
/// and Jordan–Wigner strings over lower-numbered sites.
pub fn fermion_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    let n = checked_sites(spec)?;
    let h = spec.couplings()?;
    let h0 = -h.iter().sum::<f64>();
    let hop = |d: usize| if d == 0 { h0 } else { h[d - 1] };
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    // Parity of occupied sites below site k.
    let string = |b: usize, k: usize| -> u32 {
        let mask = !((1usize << (n - k + 1)) - 1) & (dim - 1);
        (b & mask).count_ones()
    };
    for b in 0..dim {
        for j in 1..=n {
            if !occupied(b, n, j) {
                continue;
            }
            let s1 = string(b, j);
            let mid = b ^ (1 << (n - j));
            for i in 1..=n {
                if occupied(mid, n, i) {
                    continue;
                }
                let s2 = string(mid, i);
                let out = mid | (1 << (n - i));
                let d = (i + n - j) % n;
                m[(out, b)] -= hop(d) * sign(s1 + s2);
            }
        }
        m[(b, b)] -= spec.lambda * b.count_ones() as f64;
    }
    Ok(m)
}

/// All `2^N` sums `Σ_{l∈S}(ε_N(l) - λ)`, ascending.
pub fn mode_subset_spectrum(spec: &ChainSpec) -> Result<Vec<f64>> {
    let n = checked_sites(spec)?;
    let shifted: Vec<f64> = spec
        .mode_energies()?
        .iter()
        .map(|e| e - spec.lambda)
        .collect();
    let mut out: Vec<f64> = (0..1usize << n)
        .map(|s| {
            shifted
                .iter()
                .enumerate()
                .filter(|(l, _)| (s >> l) & 1 == 1)
                .map(|(_, e)| e)
                .sum()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Full eigendecomposition with eigenvalues in ascending order.
pub fn diagonalize(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1_000_000).ok_or_else(|| {
        Error::EigensolverFailure {
            dim: m.nrows(),
            diagnostics: matrix_diagnostics(m),
        }
    })?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(diagonalize(m)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sites: usize,
    pub spin_vs_fermion_entrywise: f64,
    pub spin_vs_modes: f64,
    pub fermion_vs_modes: f64,
    /// Index of the worst eigenvalue deviation.
    pub worst_index: usize,
}

impl SpectrumReport {
    pub fn worst(&self) -> f64 {
        self.spin_vs_fermion_entrywise
            .max(self.spin_vs_modes)
            .max(self.fermion_vs_modes)
    }
}

fn worst_pair(a: &[f64], b: &[f64]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .fold((0.0, 0), |acc, (k, d)| if d > acc.0 { (d, k) } else { acc })
}

/// Compare the spin form, the hopping form and the mode subset sums.
/// Fails with [`Error::SpectrumMismatch`] beyond [`SPECTRUM_TOL`].
pub fn spectrum_vs_modes(spec: &ChainSpec) -> Result<SpectrumReport> {
    let n = checked_sites(spec)?;
    let hs = spin_hamiltonian(spec)?;
    let hf = fermion_hamiltonian(spec)?;
    let entry = (&hs - &hf).amax();
    let modes = mode_subset_spectrum(spec)?;
    let (ds, ks) = worst_pair(&spectrum(&hs)?, &modes);
    let (df, kf) = worst_pair(&spectrum(&hf)?, &modes);
    let report = SpectrumReport {
        sites: n,
        spin_vs_fermion_entrywise: entry,
        spin_vs_modes: ds,
        fermion_vs_modes: df,
        worst_index: if ds >= df { ks } else { kf },
    };
    if report.worst() > SPECTRUM_TOL {
        return Err(Error::SpectrumMismatch {
            worst: report.worst(),
            index: report.worst_index,
        });
    }
    Ok(report)
}

/// Nondegenerate ground state of a dense Hamiltonian: `(energy, vector)`.
/// Matrices that conserve the occupation-basis particle number are
/// diagonalized sector by sector.
pub fn ground_state(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let dim = m.nrows();
    let conserves = dim.is_power_of_two()
        && (0..dim).all(|r| (0..dim).all(|c| m[(r, c)] == 0.0 || r.count_ones() == c.count_ones()));
    // Particle-number sectors: (energies, full-space vectors) per sector.
    let sectors: Vec<(Vec<f64>, DMatrix<f64>)> = if conserves {
        let bits = dim.trailing_zeros();
        (0..=bits)
            .map(|k| {
                let idx: Vec<usize> = (0..dim).filter(|i| i.count_ones() == k).collect();
                let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
                let (values, vectors) = diagonalize(&block)?;
                let mut full = DMatrix::zeros(dim, 1);
                for (a, &i) in idx.iter().enumerate() {
                    full[(i, 0)] = vectors[(a, 0)];
                }
                Ok((values, full))
            })
            .collect::<Result<_>>()?
    } else {
        let (values, vectors) = diagonalize(m)?;
        vec![(values, vectors.columns(0, 1).into_owned())]
    };
    let mut values: Vec<f64> = sectors
        .iter()
        .flat_map(|(v, _)| v.iter().copied())
        .collect();
    values.sort_by(f64::total_cmp);
    let scale = values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    if values.len() > 1 && values[1] - values[0] < DEGENERACY_TOL * scale {
        return Err(Error::DegenerateGroundState { mode: 1 });
    }
    let (_, vector) = sectors
        .iter()
        .min_by(|a, b| a.0[0].total_cmp(&b.0[0]))
        .expect("at least one sector");
    Ok((values[0], vector.column(0).into_owned()))
}

/// Eigenvalues of `ρ_L = tr_{L+1..N} |ψ⟩⟨ψ|` for the block of sites `1..L`.
pub fn reduced_density_spectrum(psi: &DVector<f64>, n: usize, l: usize) -> Result<Vec<f64>> {
    if psi.len() != 1 << n || l == 0 || l > n {
        return Err(Error::InvalidSpec(format!(
            "state of length {} and block {l} do not fit N = {n}",
            psi.len()
        )));
    }
    let rest = 1usize << (n - l);
    let mat = DMatrix::from_fn(1 << l, rest, |a, b| psi[a * rest + b]);
    let rho = &mat * mat.transpose();
    let mut p: Vec<f64> = rho.symmetric_eigenvalues().iter().copied().collect();
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure {
            dim: rho.nrows(),
            diagnostics: matrix_diagnostics(&rho),
        });
    }
    p.sort_by(f64::total_cmp);
    Ok(p)
}

/// Rényi (`q ≠ 1`) or von Neumann entropy of a probability vector.
pub fn spectrum_entropy(p: &[f64], q: f64) -> f64 {
    if (q - 1.0).abs() < VN_SWITCH {
        p.iter()
            .map(|&x| {
                let x = x.clamp(0.0, 1.0);
                if x > 0.0 {
                    -x * x.ln()
                } else {
                    0.0
                }
            })
            .sum()
    } else {
        p.iter().map(|&x| x.max(0.0).powf(q)).sum::<f64>().ln() / (1.0 - q)
    }
}

/// Block entropy of the ground state by explicit partial trace.
pub fn ed_block_entropy(spec: &ChainSpec, l: usize, q: f64) -> Result<f64> {
    let n = checked_sites(spec)?;
    // Fails early on a degenerate Fermi sea, where the dense ground state is not unique.
    spec.ground_state_occupation()?;
    let (_, psi) = ground_state(&fermion_hamiltonian(spec)?)?;
    Ok(spectrum_entropy(&reduced_density_spectrum(&psi, n, l)?, q))
}

/// `⟨a†_m a_n⟩` for sites `1..=L` of a state, with the same sign conventions as
/// [`fermion_hamiltonian`].
pub fn ed_correlation_matrix(psi: &DVector<f64>, n: usize, l: usize) -> Result<DMatrix<f64>> {
    if psi.len() != 1 << n || l == 0 || l > n {
        return Err(Error::InvalidSpec(format!(
            "state of length {} and block {l} do not fit N = {n}",
            psi.len()
        )));
    }
    let dim = 1usize << n;
    let string = |b: usize, k: usize| -> u32 {
        let mask = !((1usize << (n - k + 1)) - 1) & (dim - 1);
        (b & mask).count_ones()
    };
    let mut a = DMatrix::zeros(l, l);
    for b in 0..dim {
        if psi[b] == 0.0 {
            continue;
        }
        for j in 1..=l {
            if !occupied(b, n, j) {
                continue;
            }
            let mid = b ^ (1 << (n - j));
            for i in 1..=l {
                if occupied(mid, n, i) {
                    continue;
                }
                let out = mid | (1 << (n - i));
                a[(i - 1, j - 1)] += psi[out] * psi[b] * sign(string(b, j) + string(mid, i));
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_layout() {
        // b = 0b100 is s = (1, 0, 0).
        assert!(occupied(0b100, 3, 1));
        assert!(!occupied(0b100, 3, 3));
        assert_eq!(between(0b1011, 4, 1, 4), 1);
        assert_eq!(between(0b1111, 4, 1, 2), 0);
        assert_eq!(between(0b0110, 4, 1, 4), 2);
    }
}
