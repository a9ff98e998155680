//! Block entanglement of the free-fermion ground state from correlation-matrix spectra.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::model::ChainSpec;

/// Eigenvalues within this distance outside `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-10;
/// Rényi parameters this close to 1 use the von Neumann formula.
pub const VN_SWITCH: f64 = 1e-6;
/// Default cap on the block length.
pub const MAX_BLOCK: usize = 4096;

/// Sine-kernel correlation matrix `sin(p0(m-n))/(π(m-n))`, `p0/π` on the diagonal.
pub fn correlation_matrix(p0: f64, l: usize) -> Result<DMatrix<f64>> {
    if !(p0 > 0.0 && p0 < PI) {
        return Err(Error::DomainError {
            function: "correlation_matrix",
            x: p0,
        });
    }
    check_block(l)?;
    // Toeplitz: one row of distinct entries.
    let row: Vec<f64> = (0..l)
        .map(|d| {
            if d == 0 {
                p0 / PI
            } else {
                let x = d as f64;
                (p0 * x).sin() / (PI * x)
            }
        })
        .collect();
    Ok(DMatrix::from_fn(l, l, |i, j| row[i.abs_diff(j)]))
}

fn check_block(l: usize) -> Result<()> {
    if l == 0 || l > MAX_BLOCK {
        return Err(Error::InvalidSpec(format!(
            "block length {l} outside 1..={MAX_BLOCK}"
        )));
    }
    Ok(())
}

/// `A_mn = (1/N) Σ_{l occupied} cos(2π(m-n)l/N)` for the ground state of a finite chain.
pub fn correlation_matrix_finite_n(spec: &ChainSpec, l: usize) -> Result<DMatrix<f64>> {
    let n = spec.n_sites()?;
    if l == 0 || l > n {
        return Err(Error::InvalidSpec(format!(
            "block length {l} outside 1..={n}"
        )));
    }
    let occ = spec.ground_state_occupation()?;
    let nf = n as f64;
    let row: Vec<f64> = (0..l)
        .map(|d| {
            occ.iter()
                .enumerate()
                .filter(|(_, &o)| o)
                .map(|(k, _)| (2.0 * PI * ((d * k) % n) as f64 / nf).cos())
                .sum::<f64>()
                / nf
        })
        .collect();
    Ok(DMatrix::from_fn(l, l, |i, j| row[i.abs_diff(j)]))
}

/// Sorted eigenvalues of a correlation matrix, validated and clamped to `[0, 1]`.
pub fn correlation_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let raw = a.symmetric_eigenvalues();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure {
            dim: a.nrows(),
            diagnostics: matrix_diagnostics(a),
        });
    }
    let mut mu = Vec::with_capacity(raw.len());
    for &v in raw.iter() {
        if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&v) {
            return Err(Error::EigenvalueOutOfRange { value: v });
        }
        mu.push(v.clamp(0.0, 1.0));
    }
    mu.sort_by(f64::total_cmp);
    Ok(mu)
}

pub(crate) fn matrix_diagnostics(a: &DMatrix<f64>) -> String {
    let max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = (a - a.transpose()).amax();
    format!(
        "frobenius norm {:.3e}, max |entry| {:.3e}, max asymmetry {:.3e}, non-finite entries {}",
        a.norm(),
        max,
        asym,
        a.iter().filter(|v| !v.is_finite()).count()
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpectrum {
    pub l: usize,
    pub p0: f64,
    /// Eigenvalues of `A_L`, ascending.
    pub mu: Vec<f64>,
}

type SpectrumKey = (i64, usize);

fn key(p0: f64, l: usize) -> SpectrumKey {
    ((p0 * 1e12).round() as i64, l)
}

fn memory_cache() -> &'static Mutex<HashMap<SpectrumKey, Arc<CorrelationSpectrum>>> {
    static CACHE: OnceLock<Mutex<HashMap<SpectrumKey, Arc<CorrelationSpectrum>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn disk_dir() -> &'static Mutex<Option<PathBuf>> {
    static DIR: OnceLock<Mutex<Option<PathBuf>>> = OnceLock::new();
    DIR.get_or_init(|| Mutex::new(None))
}

/// Also persist spectra as JSON files under `dir`; `None` disables the disk cache.
pub fn set_cache_dir(dir: Option<&Path>) {
    *disk_dir().lock().expect("cache lock") = dir.map(Path::to_path_buf);
}

fn disk_path(k: SpectrumKey) -> Option<PathBuf> {
    let dir = disk_dir().lock().expect("cache lock").clone()?;
    Some(dir.join(format!("spectrum_p{}_L{}.json", k.0, k.1)))
}

/// Spectrum of the sine-kernel matrix, cached by `(p0 to 1e-12, L)`.
pub fn correlation_spectrum(p0: f64, l: usize) -> Result<Arc<CorrelationSpectrum>> {
    let k = key(p0, l);
    if let Some(s) = memory_cache().lock().expect("cache lock").get(&k) {
        return Ok(Arc::clone(s));
    }
    let path = disk_path(k);
    let from_disk = path
        .as_ref()
        .and_then(|p| std::fs::read(p).ok())
        .and_then(|bytes| serde_json::from_slice::<CorrelationSpectrum>(&bytes).ok())
        .filter(|s| s.l == l && s.mu.len() == l);
    let spec = match from_disk {
        Some(s) => s,
        None => {
            let mu = correlation_eigenvalues(&correlation_matrix(p0, l)?)?;
            let s = CorrelationSpectrum { l, p0, mu };
            if let Some(p) = &path {
                // The disk cache is best effort.
                if let Ok(json) = serde_json::to_vec(&s) {
                    let _ = std::fs::create_dir_all(p.parent().unwrap_or(Path::new(".")));
                    let _ = std::fs::write(p, json);
                }
            }
            s
        }
    };
    let arc = Arc::new(spec);
    memory_cache()
        .lock()
        .expect("cache lock")
        .entry(k)
        .or_insert_with(|| Arc::clone(&arc));
    Ok(arc)
}

/// Single-mode entropy: `-x log x - (1-x) log(1-x)` for `q = 1`, else
/// `log[x^q + (1-x)^q]/(1-q)`.
pub fn single_mode_entropy(x: f64, q: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if (q - 1.0).abs() < VN_SWITCH {
        let xlx = |y: f64| if y > 0.0 { -y * y.ln() } else { 0.0 };
        xlx(x) + xlx(1.0 - x)
    } else {
        (x.powf(q) + (1.0 - x).powf(q)).ln() / (1.0 - q)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::DomainError {
            function: "renyi_entropy",
            x: q,
        });
    }
    Ok(())
}

pub fn entropy_of_spectrum(mu: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(mu.iter().map(|&x| single_mode_entropy(x, q)).sum())
}

pub fn entropy_of_matrix(a: &DMatrix<f64>, q: f64) -> Result<f64> {
    check_q(q)?;
    entropy_of_spectrum(&correlation_eigenvalues(a)?, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub l: usize,
    pub q: f64,
    pub s_exact: f64,
    pub s_asymptotic: Option<f64>,
    pub gamma1_q: Option<f64>,
}

/// Exact block entropy at Fermi momentum `p0`, with the asymptote when `gamma1` is known.
pub fn entropy(p0: f64, l: usize, q: f64, gamma1: Option<f64>) -> Result<EntropyResult> {
    let spec = correlation_spectrum(p0, l)?;
    let s_exact = entropy_of_spectrum(&spec.mu, q)?;
    let s_asymptotic = gamma1.map(|g| entropy_asymptotic(p0, l, q, Some(g)).value);
    Ok(EntropyResult {
        l,
        q,
        s_exact,
        s_asymptotic,
        gamma1_q: gamma1,
    })
}

/// `(q+1)/(6q)`
pub fn log_coefficient(q: f64) -> f64 {
    (q + 1.0) / (6.0 * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub value: f64,
    /// `false` when no `γ₁` was supplied and only the logarithm is returned.
    pub calibrated: bool,
    /// `L sin p0 < 20`, where the asymptote is unreliable.
    pub small_argument: bool,
}

/// `(q+1)/(6q) log(L sin p0) + γ₁`.
pub fn entropy_asymptotic(p0: f64, l: usize, q: f64, gamma1: Option<f64>) -> Asymptote {
    let arg = l as f64 * p0.sin();
    Asymptote {
        value: log_coefficient(q) * arg.ln() + gamma1.unwrap_or(0.0),
        calibrated: gamma1.is_some(),
        small_argument: arg < 20.0,
    }
}

/// Small-block forms with `x = L p0/π` (or `L(π-p0)/π` at the upper endpoint):
/// `-x log x` for `q = 1`, `x^q/(1-q)` for `q < 1`, `q x/(q-1)` for `q > 1`.
pub fn endpoint_entropy_limit(x: f64, q: f64) -> f64 {
    if (q - 1.0).abs() < VN_SWITCH {
        if x > 0.0 {
            -x * x.ln()
        } else {
            0.0
        }
    } else if q < 1.0 {
        x.powf(q) / (1.0 - q)
    } else {
        q * x / (q - 1.0)
    }
}

/// `γ₁^{(q)}` values keyed by `q`, stored as `gamma1[q]=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Calibration {
    values: BTreeMap<String, f64>,
}

fn q_key(q: f64) -> String {
    format!("{q}")
}

impl Calibration {
    pub fn get(&self, q: f64) -> Option<f64> {
        self.values.get(&q_key(q)).copied()
    }

    pub fn insert(&mut self, q: f64, gamma1: f64) {
        self.values.insert(q_key(q), gamma1);
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Calibration(format!("line {}: cannot parse {raw:?}", no + 1));
            let (k, v) = line.split_once('=').ok_or_else(bad)?;
            let q = k
                .trim()
                .strip_prefix("gamma1[")
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(bad)?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            values.insert(q_key(q), v);
        }
        Ok(Calibration { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values printed with 10 decimals.
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(q, v)| format!("gamma1[{q}]={v:.10}\n"))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Fit {
    pub q: f64,
    pub gamma1: f64,
    /// `max - min` of `S_exact - (q+1)/(6q) log(L sin p0)` over the block lengths.
    pub spread: f64,
    pub lengths: Vec<usize>,
}

/// Fit `γ₁^{(q)}` at `p0 = π/2` as the mean of `S_exact - (q+1)/(6q) log L`.
pub fn calibrate_gamma1(q: f64, lengths: &[usize]) -> Result<Gamma1Fit> {
    if lengths.is_empty() {
        return Err(Error::Calibration("no block lengths".into()));
    }
    let p0 = PI / 2.0;
    let c = log_coefficient(q);
    let resid: Vec<f64> = lengths
        .iter()
        .map(|&l| Ok(entropy(p0, l, q, None)?.s_exact - c * (l as f64).ln()))
        .collect::<Result<_>>()?;
    let max = resid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = resid.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Gamma1Fit {
        q,
        gamma1: resid.iter().sum::<f64>() / resid.len() as f64,
        spread: max - min,
        lengths: lengths.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub q: f64,
    pub slope: f64,
    pub intercept: f64,
    pub expected_slope: f64,
}

/// Regression of `S_q` against `log(L sin p0)`.
pub fn entropy_scaling(p0: f64, lengths: &[usize], q: f64) -> Result<ScalingFit> {
    let x: Vec<f64> = lengths
        .iter()
        .map(|&l| (l as f64 * p0.sin()).ln())
        .collect();
    let y: Vec<f64> = lengths
        .iter()
        .map(|&l| Ok(entropy(p0, l, q, None)?.s_exact))
        .collect::<Result<_>>()?;
    let fit = linear_fit(&x, &y)?;
    Ok(ScalingFit {
        q,
        slope: fit.slope,
        intercept: fit.intercept,
        expected_slope: log_coefficient(q),
    })
}
