use std::path::PathBuf;
use std::process::{Command, Output};

use plasmon_cli::config::{Command as Cmd, OutputFormat, PotentialKind, RunConfig};
use proptest::prelude::*;
use serde_json::Value;

fn plasmon(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plasmon"));
    c.args(args).env_remove(plasmon_cli::THREADS_ENV);
    if let Some(t) = threads {
        c.env(plasmon_cli::THREADS_ENV, t);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV table, header comments and summaries dropped.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plasmon-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn figure1_rows_at_full_radius() {
    let o = plasmon(&["figure1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 13);
    let eps = |r: &Vec<String>| r[4].parse::<f64>().unwrap();
    assert_eq!(rows[0][5], "1001");
    assert!((eps(&rows[0]) - 7324.0).abs() <= 2.0);
    assert_eq!(rows[12][5], "13169");
    assert!((eps(&rows[12]) - 13510.0).abs() <= 2.0);
    for (j, r) in rows.iter().enumerate() {
        let j = j as i64 + 1;
        assert_eq!(r[5].parse::<i64>().unwrap(), 1000 * j + j * j);
        assert!(eps(r) > r[6].parse::<f64>().unwrap(), "ε above the estimate at j = {j}");
    }
}

#[test]
fn figure1_without_interaction_sits_on_the_continuum_edge() {
    let o = plasmon(&["figure1", "--g", "0", "--radius-sq", "400", "--kmax", "5"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for r in csv_rows(&stdout(&o)) {
        assert_eq!(r[4].parse::<f64>().unwrap(), r[5].parse::<f64>().unwrap());
        assert_eq!(r[7], "NaN");
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    for args in [
        vec!["figure1", "--radius-sq", "2500", "--kmax", "6"],
        vec!["ecorr", "--radius-sq", "100", "--kcut", "3"],
        vec!["dispersion", "--kf2", "2500", "--kmax", "4"],
    ] {
        let one = plasmon(&args, Some("1"));
        let again = plasmon(&args, Some("1"));
        let four = plasmon(&[args.as_slice(), &["--threads", "4"]].concat(), None);
        assert!(one.status.success() && four.status.success());
        assert_eq!(one.stdout, again.stdout, "{args:?}");
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

#[test]
fn csv_header_documents_every_column() {
    let text = stdout(&plasmon(&["dispersion", "--kf2", "400", "--kmax", "2"], None));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    for col in header.split(',') {
        assert!(text.contains(&format!("# column {col}: ")), "{col} undocumented");
    }
    assert!(text.lines().any(|l| l.starts_with("# config_sha256: ") && l.len() == "# config_sha256: ".len() + 64));
    // 17 significant digits
    let eps = &csv_rows(&text)[0][4];
    let mantissa = eps.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{eps}");
}

#[test]
fn ecorr_without_interaction_is_zero() {
    let o = plasmon(&["ecorr", "--potential", "zero", "--radius-sq", "25", "--kcut", "3", "--format", "json"], None);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["summary"]["total"], 0.0);
    assert_eq!(v["summary"]["tail_estimate"], 0.0);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["ecorr_k"] == 0.0));
}

#[test]
fn ecorr_is_negative_with_coulomb() {
    let v = json(&plasmon(&["ecorr", "--radius-sq", "25", "--kcut", "2", "--format", "json"], None));
    let rows = v["rows"].as_array().unwrap();
    // momenta with |k|² = 1, 2, 3, 4
    assert_eq!(rows.len(), 6 + 12 + 8 + 6);
    assert!(rows.iter().all(|r| r["ecorr_k"].as_f64().unwrap() < 0.0));
    let total = v["summary"]["total"].as_f64().unwrap();
    let parts = v["summary"]["lattice_sum"].as_f64().unwrap() + v["summary"]["tail_estimate"].as_f64().unwrap();
    assert!((total - parts).abs() <= 1e-12 * total.abs());
}

#[test]
fn verify_default_passes() {
    let o = plasmon(&["verify", "--format", "json"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["summary"]["all_passed"], true);
    assert_eq!(v["summary"]["n_modes"], 19);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn bounds_reports_residual_ratios() {
    let o = plasmon(&["bounds", "--radius-sq", "400", "--M", "4", "--format", "json"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["holds"] != false));
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r["quantity"] == "residual_over_scale")
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    let fitted = rows.iter().find(|r| r["quantity"] == "fitted_residual_constant").unwrap()["value"].as_f64().unwrap();
    assert!(ratios.iter().all(|&r| r <= fitted));
    // M^{5/2} growth keeps the ratio within a factor of two across M = 2..4
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi <= 2.0 * lo, "{ratios:?}");
}

#[test]
fn invalid_config_names_the_field() {
    let o = plasmon(&["ecorr", "--tol", "-1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tol`"));
    let o = plasmon(&["dispersion", "--potential", "zero"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = plasmon(&["figure1", "--radius-sq", "4"], Some("many"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"radius_sq": 4, "radius": 4}"#).unwrap();
    let o = plasmon(&["figure1", "--config", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(serde_json::from_str::<RunConfig>(r#"{"gg": 1.0}"#).is_err());
}

#[test]
fn printed_config_reproduces_the_run() {
    let args = ["figure1", "--radius-sq", "900", "--k", "1,1,0", "--k", "-2,0,1"];
    let printed = stdout(&plasmon(&[args.as_slice(), &["--print-config"]].concat(), None));
    let path = scratch("figure1.json");
    std::fs::write(&path, &printed).unwrap();
    let direct = plasmon(&args, None);
    let from_file = plasmon(&["figure1", "--config", path.to_str().unwrap()], None);
    assert!(direct.status.success());
    assert_eq!(direct.stdout, from_file.stdout);
    let rows = csv_rows(&stdout(&direct));
    assert_eq!((rows[0][0].as_str(), rows[1][0].as_str()), ("1", "-2"));
}

#[test]
fn table_can_be_written_to_a_file() {
    let path = scratch("out.csv");
    let o = plasmon(&["figure1", "--radius-sq", "100", "--kmax", "2", "--out", path.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv_rows(&text).len(), 2);
    // the output path does not enter the hash
    let on_stdout = stdout(&plasmon(&["figure1", "--radius-sq", "100", "--kmax", "2"], None));
    assert_eq!(text, on_stdout);
}

#[test]
fn resolve_fills_command_defaults() {
    let figure = RunConfig::default().resolve(Cmd::Figure1).unwrap();
    assert_eq!((figure.radius_sq, figure.k_max), (Some(250_000), Some(13)));
    let verify = RunConfig::default().resolve(Cmd::Verify).unwrap();
    assert_eq!((verify.radius_sq, verify.fock_radius_sq), (Some(1), 1));
    let bad = RunConfig { shell_cap: 0, ..RunConfig::default() };
    assert_eq!(bad.resolve(Cmd::Bounds).unwrap_err().field, "shell_cap");
    let listed = RunConfig { k_list: Some(vec![[0, 0, 0]]), ..RunConfig::default() };
    assert_eq!(listed.resolve(Cmd::Figure1).unwrap_err().field, "k_list");
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        proptest::option::of(1i64..1_000_000),
        0.0f64..100.0,
        any::<bool>(),
        proptest::option::of(1u32..50),
        proptest::option::of(proptest::collection::vec(proptest::array::uniform3(-9i64..=9), 1..4)),
        (1u32..6, 0i64..4, 0i64..8, 1u32..8),
        (1e-14f64..1e-2, 1e-15f64..1e-6, proptest::option::of(1usize..16), any::<bool>()),
    )
        .prop_map(|(radius_sq, g, zero, k_max, k_list, (m, fr, extra, k_cut), (tol, check_tol, threads, json))| {
            RunConfig {
                radius_sq,
                g,
                potential: if zero { PotentialKind::Zero } else { PotentialKind::Coulomb },
                k_max,
                k_list,
                m,
                fock_radius_sq: fr,
                shell_cap: fr + extra,
                k_cut,
                tol,
                check_tol,
                threads,
                output: None,
                format: if json { OutputFormat::Json } else { OutputFormat::Csv },
            }
        })
}

proptest! {
    #[test]
    fn config_json_round_trip_is_idempotent(cfg in arb_config()) {
        let once = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&once).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), once);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_ignores_threads_and_output(cfg in arb_config(), threads in 1usize..64) {
        let other = RunConfig { threads: Some(threads), output: Some("x.csv".into()), ..cfg.clone() };
        prop_assert_eq!(other.hash(), cfg.hash());
    }
}
