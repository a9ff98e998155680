use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use su11_chain::density::density;
use su11_chain::model::{dispersion, ChainSpec, Sites};

fn su11(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su11"))
        .args(args)
        .env_remove("SU11_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = su11(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    summary: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut summary = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.next_if(|l| l.starts_with('#')) {
            if let Some((k, v)) = l[1..].split_once(" = ") {
                summary.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let columns = lines
            .next()
            .expect("header row")
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        Csv {
            summary,
            columns,
            rows,
        }
    }

    fn note(&self, key: &str) -> f64 {
        let v = &self.summary.iter().find(|(k, _)| k == key).expect(key).1;
        v.parse().unwrap()
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).expect(name);
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("su11-cli-{}-{name}", std::process::id()))
}

#[test]
fn xx_dispersion_reaches_four_at_pi() {
    let t = Csv::parse(&ok(&["dispersion", "--model", "xx", "--points", "3"]));
    assert_eq!(t.columns, ["p", "energy", "velocity"]);
    assert_eq!(t.col("p")[1], PI);
    assert_eq!(t.col("energy")[1], 4.0);
}

#[test]
fn hs_band_top() {
    let t = Csv::parse(&ok(&["dispersion", "--model", "hs", "--points", "3"]));
    assert!((t.note("e_pi") - PI * PI / 2.0).abs() < 1e-14);
}

#[test]
fn elliptic_dispersion_is_reflection_symmetric() {
    let t = Csv::parse(&ok(&[
        "dispersion",
        "--model",
        "elliptic",
        "--alpha",
        "5",
        "--points",
        "512",
    ]));
    let e = t.col("energy");
    assert_eq!(e.len(), 512);
    for k in 0..256 {
        assert!((e[k] - e[511 - k]).abs() < 1e-12, "k={k}");
    }
}

#[test]
fn finite_chain_mode_energies() {
    let t = Csv::parse(&ok(&["dispersion", "--model", "xx", "--sites", "4"]));
    assert_eq!(t.columns, ["l", "p", "energy"]);
    let e = t.col("energy");
    let want = [0.0, 2.0, 4.0, 2.0];
    for (a, b) in e.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn half_band_ratio_grows_with_alpha() {
    let mut last = 0.5 - 1e-12;
    for alpha in ["0.5", "2", "5", "20"] {
        let t = Csv::parse(&ok(&["dispersion", "--alpha", alpha, "--points", "5"]));
        let ratio = t.col("energy")[1] / t.note("e_pi");
        assert!(ratio > last && ratio < 0.75, "alpha={alpha}: {ratio}");
        last = ratio;
    }
}

#[test]
fn central_charge_from_free_energy() {
    let t = Csv::parse(&ok(&[
        "free-energy",
        "--model",
        "xx",
        "--lambda",
        "2",
        "--central-charge",
    ]));
    assert!((t.note("c_hat") - 1.0).abs() < 0.02);
    assert_eq!(t.rows.len(), 12);
    let hs = Csv::parse(&ok(&[
        "free-energy",
        "--model",
        "hs",
        "--lambda",
        "0",
        "--central-charge",
    ]));
    assert!((hs.note("c_hat") - 0.5).abs() < 0.02);
}

#[test]
fn gapped_free_energy_is_flat() {
    let t = Csv::parse(&ok(&[
        "free-energy",
        "--model",
        "xx",
        "--lambda=-1",
        "--temp-grid",
        "0.01:0.05:5",
    ]));
    // Gap 1 above the chemical potential: f - f0 is bounded by T e^{-1/T}.
    for ((f, f0), temp) in t.col("f").iter().zip(t.col("f0")).zip(t.col("temperature")) {
        assert!((f - f0).abs() <= temp * (-1.0 / temp).exp(), "T={temp}");
    }
    let out = su11(&[
        "free-energy",
        "--model",
        "xx",
        "--lambda=-1",
        "--central-charge",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn finite_chain_free_energy_column() {
    let t = Csv::parse(&ok(&[
        "free-energy",
        "--model",
        "hs",
        "--lambda",
        "1",
        "--sites",
        "400",
        "--temp",
        "0.5",
    ]));
    let (f, fm) = (t.col("f")[0], t.col("f_modes")[0]);
    assert!((f - fm).abs() < 1e-3, "{f} vs {fm}");
}

#[test]
fn xx_entropy_symmetric_about_half_band() {
    let t = Csv::parse(&ok(&[
        "entropy",
        "--model",
        "xx",
        "--lambda-grid",
        "0.4:3.6:5",
        "--block-size",
        "400",
    ]));
    let s = t.col("s_exact");
    for k in 0..2 {
        assert!((s[k] - s[4 - k]).abs() < 1e-9);
    }
    assert!(s[2] > s[1]);
}

#[test]
fn entropy_log_slope() {
    let t = Csv::parse(&ok(&[
        "entropy",
        "--model",
        "xx",
        "--lambda",
        "2",
        "--block-size",
        "100,200,400,800",
    ]));
    assert!((t.note("log_slope") / (1.0 / 3.0) - 1.0).abs() < 0.02);
    assert_eq!(t.rows.len(), 4);
    let out = ok(&[
        "entropy",
        "--model",
        "xx",
        "--lambda=-1",
        "--block-size",
        "10",
    ]);
    let t = Csv::parse(&out);
    assert_eq!(t.col("s_exact")[0], 0.0);
    assert_eq!(t.rows[0][5], "nan");
}

#[test]
fn calibration_round_trip() {
    let path = scratch("gamma.txt");
    let t = Csv::parse(&ok(&[
        "calibrate",
        "--renyi",
        "1,2",
        "--block-size",
        "200,400",
        "--calibration",
        path.to_str().unwrap(),
    ]));
    let g = t.col("gamma1");
    assert!((g[0] - 0.7261).abs() < 2e-3);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("gamma1[1]=") && text.contains("gamma1[2]="));
    let e = Csv::parse(&ok(&[
        "entropy",
        "--model",
        "xx",
        "--lambda",
        "2",
        "--block-size",
        "300",
        "--calibration",
        path.to_str().unwrap(),
    ]));
    assert!((e.note("gamma1") - g[0]).abs() < 1e-9);
    let (s, a) = (e.col("s_exact")[0], e.col("s_asymptotic")[0]);
    assert!((s - a).abs() < 1e-3, "{s} vs {a}");
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn density_rows_match_library() {
    let t = Csv::parse(&ok(&[
        "density",
        "--alpha",
        "5",
        "--lambda-grid",
        "0.5,1.5,3",
        "--temp-grid",
        "0,0.1,1",
        "--derivative",
    ]));
    assert_eq!(t.rows.len(), 9);
    let spec = ChainSpec::elliptic(5.0, Sites::ThermodynamicLimit, 0.0).unwrap();
    let disp = dispersion(&spec).unwrap();
    for ((l, temp), n) in t
        .col("lambda")
        .iter()
        .zip(t.col("temperature"))
        .zip(t.col("n_f"))
    {
        let want = density(&spec.with_lambda(*l), &disp, temp).unwrap().n_f;
        assert_eq!(n, want);
    }
    assert_eq!(t.rows[0][3], "nan");
}

#[test]
fn xx_phase_map() {
    let t = Csv::parse(&ok(&["phase-map", "--model", "xx"]));
    for k in ["lambda1", "lambda2", "lambda3"] {
        assert!((t.note(k) - 2.0).abs() < 1e-3, "{k}");
    }
    assert_eq!(t.rows.len(), 400);
}

#[test]
fn verify_passes_and_reports_mismatch() {
    let text = ok(&["verify", "--model", "hs"]);
    let t = Csv::parse(&text);
    assert!(t.rows.iter().all(|r| r[3] == "PASS"), "{text}");
    assert!(t.rows.iter().any(|r| r[0] == "fermionization N=6"));
    let out = su11(&["verify", "--model", "hs", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(4));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| su11(args).status.code();
    assert_eq!(code(&["dispersion"]), Some(2));
    assert_eq!(
        code(&["dispersion", "--model", "xx", "--alpha", "1"]),
        Some(2)
    );
    assert_eq!(code(&["dispersion", "--alpha=-1"]), Some(2));
    assert_eq!(
        code(&[
            "density",
            "--model",
            "xx",
            "--lambda",
            "1",
            "--lambda-grid",
            "1,2",
            "--temp",
            "1"
        ]),
        Some(2)
    );
    assert_eq!(
        code(&["density", "--model", "xx", "--lambda", "1"]),
        Some(2)
    );
    assert_eq!(
        code(&["density", "--model", "xx", "--lambda", "1", "--temp=-1"]),
        Some(2)
    );
    assert_eq!(code(&["verify", "--model", "xx", "--sites", "13"]), Some(2));
    assert_eq!(
        code(&[
            "free-energy",
            "--model",
            "xx",
            "--lambda",
            "2",
            "--temp",
            "0.1",
            "--tol",
            "1e-300"
        ]),
        Some(3)
    );
    assert_eq!(code(&["--version"]), Some(0));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "density",
        "--model",
        "hs",
        "--lambda-grid",
        "0.5:4.5:9",
        "--temp-grid",
        "0.01:2:6:log",
    ];
    let a = ok(&args);
    let b = ok(&args);
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let c = ok(&one);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.starts_with(&format!("# su11 {}\n# config: ", env!("CARGO_PKG_VERSION"))));
    // 17 significant digits.
    let t = Csv::parse(&a);
    assert_eq!(t.rows[0][0], "5.0000000000000000e-1");
}

#[test]
fn json_and_out_file() {
    let path = scratch("out.json");
    let out = su11(&[
        "dispersion",
        "--model",
        "xx",
        "--points",
        "4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["config"]["model"], "xx");
    assert_eq!(doc["columns"].as_array().unwrap().len(), 3);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert_eq!(doc["summary"]["e_pi"], 4.0);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn cache_directory_from_environment() {
    let dir = scratch("cache");
    let out = Command::new(env!("CARGO_BIN_EXE_su11"))
        .args([
            "entropy",
            "--model",
            "xx",
            "--lambda",
            "1.7",
            "--block-size",
            "50",
        ])
        .env("SU11_CACHE_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
