//! Command-line front end: argument parsing, table assembly and output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use su11_chain::density::{
    density_t_derivative, density_with_tol, extrema_map, DEFAULT_T_MAX, DENSITY_TOL,
};
use su11_chain::ed_oracle::{ed_block_entropy, spectrum_vs_modes, SPECTRUM_TOL};
use su11_chain::entanglement::{
    calibrate_gamma1, correlation_matrix, correlation_matrix_finite_n, correlation_spectrum,
    entropy, entropy_asymptotic, entropy_of_matrix, entropy_scaling, set_cache_dir, Calibration,
};
use su11_chain::model::{dispersion, ChainSpec, Dispersion, Interaction, Sites};
use su11_chain::special_fns::Lattice;
use su11_chain::thermo::{
    fit_central_charge_in_window, fit_grid, free_energy_with_tol, mode_sum_free_energy, FIT_WINDOW,
    FREE_ENERGY_TOL,
};
use su11_chain::Error;

/// Directory for the on-disk correlation-spectrum cache.
pub const CACHE_ENV: &str = "SU11_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "su11",
    version,
    about = "su(1|1) long-range spin chain numerics"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Dispersion curve E(p), or mode energies of a finite chain.
    Dispersion {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        /// Momentum samples on [0, 2π].
        #[arg(long, default_value_t = 513)]
        points: usize,
    },
    /// Free energy per site over temperatures, optionally with a central-charge fit.
    FreeEnergy {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[command(flatten)]
        #[serde(flatten)]
        temp: TempArgs,
        /// Fit c from the low-temperature free energy.
        #[arg(long)]
        central_charge: bool,
        /// Upper end of the fit window in units of E(π).
        #[arg(long, default_value_t = FIT_WINDOW)]
        fit_window: f64,
        /// Absolute quadrature tolerance.
        #[arg(long, default_value_t = FREE_ENERGY_TOL)]
        tol: f64,
    },
    /// Ground-state block entropies.
    Entropy {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        #[serde(flatten)]
        lambda: LambdaArgs,
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        block_size: Vec<usize>,
        /// Rényi index; 1 is von Neumann.
        #[arg(long, default_value_t = 1.0)]
        renyi: f64,
        /// File of `gamma1[q]=value` lines supplying the asymptote constant.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Fit the entropy constant at half filling and optionally store it.
    Calibrate {
        /// Rényi indices, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        renyi: Vec<f64>,
        /// Block sizes used in the fit, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "500,1000,1500,2000")]
        block_size: Vec<usize>,
        /// Calibration file to create or update.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Fermion density and its temperature derivative.
    Density {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        #[serde(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        #[serde(flatten)]
        temp: TempArgs,
        /// Also report ∂n/∂T.
        #[arg(long)]
        derivative: bool,
        /// Absolute quadrature tolerance.
        #[arg(long, default_value_t = DENSITY_TOL)]
        tol: f64,
    },
    /// Classes of ∂n/∂T sign patterns across the critical interval.
    PhaseMap {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        /// Largest temperature scanned, in units of E(π).
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: f64,
    },
    /// Run the exact-diagonalization and identity checks.
    Verify {
        #[command(flatten)]
        #[serde(flatten)]
        model: ModelArgs,
        /// Chemical potential; defaults to 0.4123·E(π).
        #[arg(long, allow_negative_numbers = true)]
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        /// Spectrum agreement tolerance.
        #[arg(long, default_value_t = SPECTRUM_TOL)]
        tol: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Elliptic,
    Xx,
    Hs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Model::Elliptic)]
    model: Model,
    /// Elliptic parameter α > 0 (elliptic model only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Finite chain length; omit for the thermodynamic limit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sites: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LambdaArgs {
    #[arg(long, allow_negative_numbers = true, conflicts_with = "lambda_grid")]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    /// `lo:hi:n[:log]` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_grid: Option<Grid>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TempArgs {
    #[arg(long, conflicts_with = "temp_grid")]
    #[serde(skip_serializing_if = "Option::is_none")]
    temp: Option<f64>,
    /// `lo:hi:n[:log]` or a comma-separated list.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    temp_grid: Option<Grid>,
}

/// Invalid user input; maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A verification check failed; maps to exit code 4.
#[derive(Debug)]
struct OracleMismatch(Vec<String>);

impl fmt::Display for OracleMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "failed checks: {}", self.0.join(", "))
    }
}

impl std::error::Error for OracleMismatch {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    text: String,
    values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| -> std::result::Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|_| format!("bad number {t:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value {t:?}"))
            }
        };
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err("expected lo:hi:n or lo:hi:n:log".into());
            }
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad point count {:?}", parts[2]))?;
            if n < 2 {
                return Err("a grid needs at least 2 points".into());
            }
            match parts.get(3).map(|p| p.trim()) {
                None | Some("lin") => su11_chain::fit::lin_grid(lo, hi, n),
                Some("log") if lo > 0.0 && hi > 0.0 => su11_chain::fit::log_grid(lo, hi, n),
                Some("log") => return Err("log grid needs positive ends".into()),
                Some(other) => return Err(format!("unknown spacing {other:?}")),
            }
        } else {
            s.split(',')
                .map(num)
                .collect::<std::result::Result<_, _>>()?
        };
        Ok(Grid {
            text: s.to_string(),
            values,
        })
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl LambdaArgs {
    fn values(&self) -> Result<Vec<f64>> {
        let v = match (self.lambda, &self.lambda_grid) {
            (Some(l), None) => vec![l],
            (None, Some(g)) => g.values.clone(),
            _ => return Err(usage("give exactly one of --lambda or --lambda-grid")),
        };
        if let Some(bad) = v.iter().find(|l| !l.is_finite()) {
            return Err(usage(format!("lambda {bad} is not finite")));
        }
        Ok(v)
    }
}

impl TempArgs {
    fn values(&self, allow_zero: bool) -> Result<Option<Vec<f64>>> {
        let v = match (self.temp, &self.temp_grid) {
            (Some(t), None) => vec![t],
            (None, Some(g)) => g.values.clone(),
            (None, None) => return Ok(None),
            _ => return Err(usage("give at most one of --temp or --temp-grid")),
        };
        let ok = |t: f64| t.is_finite() && (t > 0.0 || (allow_zero && t == 0.0));
        if let Some(bad) = v.iter().find(|&&t| !ok(t)) {
            return Err(usage(format!("temperature {bad} out of range")));
        }
        Ok(Some(v))
    }
}

impl ModelArgs {
    fn interaction(&self) -> Result<Interaction> {
        match (self.model, self.alpha) {
            (Model::Elliptic, Some(alpha)) => Ok(Interaction::Elliptic { alpha }),
            (Model::Elliptic, None) => Err(usage("--model elliptic needs --alpha")),
            (_, Some(_)) => Err(usage("--alpha applies only to --model elliptic")),
            (Model::Xx, None) => Ok(Interaction::Xx),
            (Model::Hs, None) => Ok(Interaction::Hs),
        }
    }

    fn spec(&self, lambda: f64) -> Result<ChainSpec> {
        let sites = match self.sites {
            Some(n) => Sites::Finite(n),
            None => Sites::ThermodynamicLimit,
        };
        Ok(ChainSpec::new(self.interaction()?, sites, lambda)?)
    }

    /// Continuum dispersion, also for finite chains.
    fn dispersion(&self) -> Result<Dispersion> {
        let spec = ChainSpec::new(self.interaction()?, Sites::ThermodynamicLimit, 0.0)?;
        Ok(dispersion(&spec)?)
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// 17 significant digits.
fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Default)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, Cell)>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    fn note(&mut self, key: impl Into<String>, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    fn render(&self, config: &Value, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = format!("# su11 {}\n", env!("CARGO_PKG_VERSION"));
                s += &format!("# config: {config}\n");
                for (k, v) in &self.summary {
                    s += &format!("# {k} = {}\n", v.csv());
                }
                s += &self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let summary: Map<String, Value> = self
                    .summary
                    .iter()
                    .map(|(k, v)| (k.clone(), v.json()))
                    .collect();
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let doc = json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": config,
                    "summary": summary,
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_string_pretty(&doc).expect("json") + "\n"
            }
        }
    }
}

fn cmd_dispersion(model: &ModelArgs, points: usize) -> Result<Table> {
    if let Some(n) = model.sites {
        let spec = model.spec(0.0)?;
        let mut t = Table::new(&["l", "p", "energy"]);
        for (l, e) in spec.mode_energies()?.into_iter().enumerate() {
            let p = 2.0 * std::f64::consts::PI * l as f64 / n as f64;
            t.rows.push(vec![l.into(), p.into(), e.into()]);
        }
        return Ok(t);
    }
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let disp = model.dispersion()?;
    let mut t = Table::new(&["p", "energy", "velocity"]);
    t.note("e_pi", disp.e_pi());
    for p in su11_chain::fit::lin_grid(0.0, 2.0 * std::f64::consts::PI, points) {
        t.rows
            .push(vec![p.into(), disp.eval(p).into(), disp.deriv(p).into()]);
    }
    Ok(t)
}

fn cmd_free_energy(
    model: &ModelArgs,
    lambda: f64,
    temp: &TempArgs,
    central_charge: bool,
    fit_window: f64,
    tol: f64,
) -> Result<Table> {
    if !(tol > 0.0) || !(fit_window > 0.0) {
        return Err(usage("--tol and --fit-window must be positive"));
    }
    let spec = model.spec(lambda)?;
    let disp = model.dispersion()?;
    let inf = ChainSpec {
        sites: Sites::ThermodynamicLimit,
        ..spec.clone()
    };
    let temps = match temp.values(false)? {
        Some(v) => v,
        None if central_charge => fit_grid(&disp, fit_window),
        None => return Err(usage("give --temp or --temp-grid")),
    };
    let mut cols = vec!["temperature", "f", "f0", "f1", "f2"];
    if model.sites.is_some() {
        cols.push("f_modes");
    }
    let mut t = Table::new(&cols);
    if central_charge {
        let fit = fit_central_charge_in_window(&inf, &disp, &temps, fit_window)?;
        t.note("c_hat", fit.c_hat);
        t.note("velocity", fit.v_used);
        t.note("fit_slope", fit.slope);
        t.note("fit_rms", fit.residual);
    }
    let rows: Vec<Vec<Cell>> = temps
        .par_iter()
        .map(|&temp| -> Result<Vec<Cell>> {
            let r = free_energy_with_tol(&inf, &disp, temp, tol)?;
            let mut row: Vec<Cell> = vec![
                temp.into(),
                r.f.into(),
                r.f0.into(),
                r.f1.into(),
                r.f2.into(),
            ];
            if model.sites.is_some() {
                row.push(mode_sum_free_energy(&spec, temp)?.into());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    t.rows = rows;
    Ok(t)
}

fn cmd_entropy(
    model: &ModelArgs,
    lambda: &LambdaArgs,
    blocks: &[usize],
    q: f64,
    calibration: Option<&Path>,
) -> Result<Table> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(usage("--renyi must be positive"));
    }
    if blocks.contains(&0) {
        return Err(usage("block sizes must be positive"));
    }
    let lambdas = lambda.values()?;
    let specs: Vec<ChainSpec> = lambdas
        .iter()
        .map(|&l| model.spec(l))
        .collect::<Result<_>>()?;
    if let Some(n) = model.sites {
        if let Some(&big) = blocks.iter().find(|&&l| l > n) {
            return Err(usage(format!("block {big} exceeds the chain length {n}")));
        }
        let mut t = Table::new(&["lambda", "block", "renyi", "s_exact"]);
        let rows: Vec<Vec<Vec<Cell>>> = specs
            .par_iter()
            .map(|spec| -> Result<Vec<Vec<Cell>>> {
                blocks
                    .iter()
                    .map(|&l| {
                        let s = entropy_of_matrix(&correlation_matrix_finite_n(spec, l)?, q)?;
                        Ok(vec![spec.lambda.into(), l.into(), q.into(), s.into()])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        t.rows = rows.into_iter().flatten().collect();
        return Ok(t);
    }
    let gamma1 = match calibration {
        Some(path) => Calibration::load(path)?.get(q),
        None => None,
    };
    let disp = model.dispersion()?;
    let e_pi = disp.e_pi();
    let mut t = Table::new(&["lambda", "p0", "block", "renyi", "s_exact", "s_asymptotic"]);
    match gamma1 {
        Some(g) => t.note("gamma1", g),
        None => t.note("gamma1", "none"),
    }
    let rows: Vec<Vec<Vec<Cell>>> = lambdas
        .par_iter()
        .map(|&lam| -> Result<Vec<Vec<Cell>>> {
            let inside = lam > 0.0 && lam < e_pi;
            let p0 = disp.inverse(lam);
            blocks
                .iter()
                .map(|&l| {
                    let (s, a) = if inside {
                        let r = entropy(p0, l, q, gamma1)?;
                        (r.s_exact, entropy_asymptotic(p0, l, q, gamma1).value)
                    } else {
                        (0.0, f64::NAN)
                    };
                    Ok(vec![
                        lam.into(),
                        p0.into(),
                        l.into(),
                        q.into(),
                        s.into(),
                        a.into(),
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    t.rows = rows.into_iter().flatten().collect();
    if lambdas.len() == 1 && blocks.len() >= 2 && lambdas[0] > 0.0 && lambdas[0] < e_pi {
        let fit = entropy_scaling(disp.inverse(lambdas[0]), blocks, q)?;
        t.note("log_slope", fit.slope);
        t.note("expected_slope", fit.expected_slope);
        t.note("intercept", fit.intercept);
    }
    Ok(t)
}

fn cmd_calibrate(qs: &[f64], blocks: &[usize], path: Option<&Path>) -> Result<Table> {
    if let Some(bad) = qs.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
        return Err(usage(format!("Rényi index {bad} must be positive")));
    }
    if blocks.len() < 2 || blocks.contains(&0) {
        return Err(usage("calibration needs at least 2 positive block sizes"));
    }
    let fits = qs
        .iter()
        .map(|&q| calibrate_gamma1(q, blocks))
        .collect::<su11_chain::Result<Vec<_>>>()?;
    let mut t = Table::new(&["renyi", "gamma1", "spread"]);
    let mut cal = match path {
        Some(p) if p.exists() => Calibration::load(p)?,
        _ => Calibration::default(),
    };
    for f in &fits {
        t.rows
            .push(vec![f.q.into(), f.gamma1.into(), f.spread.into()]);
        cal.insert(f.q, f.gamma1);
    }
    if let Some(p) = path {
        cal.save(p)?;
    }
    Ok(t)
}

fn cmd_density(
    model: &ModelArgs,
    lambda: &LambdaArgs,
    temp: &TempArgs,
    derivative: bool,
    tol: f64,
) -> Result<Table> {
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if model.sites.is_some() {
        return Err(usage(
            "density is computed in the thermodynamic limit; drop --sites",
        ));
    }
    let lambdas = lambda.values()?;
    let temps = temp
        .values(true)?
        .ok_or_else(|| usage("give --temp or --temp-grid"))?;
    let disp = model.dispersion()?;
    let specs: Vec<ChainSpec> = lambdas
        .iter()
        .map(|&l| model.spec(l))
        .collect::<Result<_>>()?;
    let pairs: Vec<(&ChainSpec, f64)> = specs
        .iter()
        .flat_map(|s| temps.iter().map(move |&t| (s, t)))
        .collect();
    let mut cols = vec!["lambda", "temperature", "n_f"];
    if derivative {
        cols.push("dn_dt");
    }
    let mut t = Table::new(&cols);
    t.rows = pairs
        .par_iter()
        .map(|&(spec, temp)| -> Result<Vec<Cell>> {
            let pt = density_with_tol(spec, &disp, temp, tol)?;
            let mut row: Vec<Cell> = vec![spec.lambda.into(), temp.into(), pt.n_f.into()];
            if derivative {
                let d = if temp > 0.0 {
                    density_t_derivative(spec, &disp, temp)?
                } else {
                    f64::NAN
                };
                row.push(d.into());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(t)
}

fn cmd_phase_map(model: &ModelArgs, t_max: f64) -> Result<Table> {
    if !(t_max > 1e-3 && t_max.is_finite()) {
        return Err(usage("--t-max must exceed 1e-3 (units of E(pi))"));
    }
    if model.sites.is_some() {
        return Err(usage(
            "the phase map is computed in the thermodynamic limit; drop --sites",
        ));
    }
    let disp = model.dispersion()?;
    let spec = model.spec(0.0)?;
    let map = extrema_map(&spec, &disp, t_max * disp.e_pi())?;
    let mut t = Table::new(&["lambda", "lambda_over_e_pi", "class"]);
    t.note("e_pi", map.e_pi);
    t.note("lambda1", map.lambda1);
    t.note("lambda2", map.lambda2);
    t.note("lambda3", map.lambda3);
    for &(l, c) in &map.samples {
        t.rows
            .push(vec![l.into(), (l / map.e_pi).into(), c.label().into()]);
    }
    Ok(t)
}

const LEGENDRE_TOL: f64 = 1e-12;
const DUAL_ENTROPY_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-10;

fn cmd_verify(model: &ModelArgs, lambda: Option<f64>, tol: f64) -> Result<Table> {
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let n = model.sites.unwrap_or(6);
    let disp = model.dispersion()?;
    let lambda = lambda.unwrap_or(0.4123 * disp.e_pi());
    let finite = ModelArgs {
        sites: Some(n),
        ..model.clone()
    };
    let spec = finite.spec(lambda)?;
    let mut t = Table::new(&["check", "value", "tolerance", "status"]);
    t.note("lambda", lambda);
    t.note("sites", n);
    let mut push = |name: String, value: f64, tol: f64| {
        let pass = value.is_finite() && value <= tol;
        t.rows.push(vec![
            Cell::Text(name),
            value.into(),
            tol.into(),
            if pass { "PASS" } else { "FAIL" }.into(),
        ]);
    };

    let worst = match spectrum_vs_modes(&spec) {
        Ok(r) => r.worst(),
        Err(Error::SpectrumMismatch { worst, .. }) => worst,
        Err(e) => return Err(e.into()),
    };
    push(format!("fermionization N={n}"), worst, tol);

    for l in 1..=n / 2 {
        let ed = ed_block_entropy(&spec, l, 1.0)?;
        let cm = entropy_of_matrix(&correlation_matrix_finite_n(&spec, l)?, 1.0)?;
        push(
            format!("block entropy N={n} L={l}"),
            (ed - cm).abs(),
            DUAL_ENTROPY_TOL,
        );
    }

    for alpha in [0.5, 1.0, 5.0, 20.0] {
        let r = Lattice::elliptic(alpha)?.legendre_residual().abs();
        push(format!("legendre alpha={alpha}"), r, LEGENDRE_TOL);
    }

    if lambda > 0.0 && lambda < disp.e_pi() {
        let p0 = disp.inverse(lambda);
        for l in [16usize, 64] {
            let trace: f64 = correlation_spectrum(p0, l)?.mu.iter().sum();
            let dev = (trace - l as f64 * p0 / std::f64::consts::PI).abs();
            push(format!("trace L={l}"), dev, TRACE_TOL * l as f64);
            let diag = correlation_matrix(p0, l)?.trace();
            push(
                format!("diagonal L={l}"),
                (diag - trace).abs(),
                TRACE_TOL * l as f64,
            );
        }
    }
    Ok(t)
}

fn config_value(cmd: &Command) -> Value {
    serde_json::to_value(cmd).expect("config serializes")
}

fn execute(cli: &Cli) -> Result<String> {
    let table = match &cli.command {
        Command::Dispersion { model, points } => cmd_dispersion(model, *points)?,
        Command::FreeEnergy {
            model,
            lambda,
            temp,
            central_charge,
            fit_window,
            tol,
        } => cmd_free_energy(model, *lambda, temp, *central_charge, *fit_window, *tol)?,
        Command::Entropy {
            model,
            lambda,
            block_size,
            renyi,
            calibration,
        } => cmd_entropy(model, lambda, block_size, *renyi, calibration.as_deref())?,
        Command::Calibrate {
            renyi,
            block_size,
            calibration,
        } => cmd_calibrate(renyi, block_size, calibration.as_deref())?,
        Command::Density {
            model,
            lambda,
            temp,
            derivative,
            tol,
        } => cmd_density(model, lambda, temp, *derivative, *tol)?,
        Command::PhaseMap { model, t_max } => cmd_phase_map(model, *t_max)?,
        Command::Verify { model, lambda, tol } => {
            let t = cmd_verify(model, *lambda, *tol)?;
            let failed: Vec<String> = t
                .rows
                .iter()
                .filter(|r| matches!(&r[3], Cell::Text(s) if s == "FAIL"))
                .map(|r| r[0].csv())
                .collect();
            let text = t.render(&config_value(&cli.command), cli.format);
            write_output(cli.out.as_deref(), &text)?;
            if !failed.is_empty() {
                return Err(OracleMismatch(failed).into());
            }
            return Ok(String::new());
        }
    };
    let text = table.render(&config_value(&cli.command), cli.format);
    write_output(cli.out.as_deref(), &text)?;
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing stdout")?;
            out.flush().context("writing stdout")
        }
    }
}

/// 2 validation, 3 numeric failure, 4 oracle mismatch.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() || err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    if err.downcast_ref::<OracleMismatch>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::SpectrumMismatch { .. }) => 4,
        Some(
            Error::QuadratureNonConvergence { .. }
            | Error::EigensolverFailure { .. }
            | Error::EigenvalueOutOfRange { .. }
            | Error::ClassificationAmbiguous { .. }
            | Error::NonMonotoneDispersion { .. }
            | Error::ExpansionOrderUndetected { .. }
            | Error::PoleAt { .. },
        ) => 3,
        Some(_) => 2,
        None => 3,
    }
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        set_cache_dir(Some(Path::new(&dir)));
    }
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
