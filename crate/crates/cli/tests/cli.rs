use std::io::Write;
use std::process::{Command, Output};

fn magicflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magicflow"))
        .args(args)
        .env_remove("MAGICFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Column-name line plus rows, as maps from column to cell.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(header["seed"].is_u64());
    let cols: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            cols.iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn cell<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(c, _)| c == name).unwrap().1
}

fn data_section(out: &Output) -> String {
    stdout(out).lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn haar_row_matches_closed_form() {
    let out = magicflow(&["haar", "--d", "2", "--N", "4"]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    let y: f64 = cell(&rows[0], "Y").parse().unwrap();
    assert!((y - (19.0f64 / 4.0).ln()).abs() < 1e-12);
}

#[test]
fn tn_rows_have_documented_columns() {
    let out = magicflow(&["tn", "--d", "3", "--N", "8", "--t", "1:3", "--chi", "36"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "d,N,t,chi,log_upsilon,Y,Y_haar,delta_Y,max_bond,discarded_weight"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    let y1: f64 = cell(&rows[0], "Y").parse().unwrap();
    assert!((y1 - 4.0 * (11.0f64 / 3.0).ln()).abs() < 1e-10);
}

#[test]
fn usage_errors_have_distinct_exit_codes() {
    let code = |args: &[&str]| magicflow(args).status.code().unwrap();
    assert_eq!(code(&["tn", "--N", "64", "--t", "1:20", "--chi", "36"]), 2);
    assert_eq!(
        code(&["tn", "--d", "3", "--N", "64", "--t", "1:x", "--chi", "36"]),
        7
    );
    assert_eq!(code(&["haar", "--d", "two", "--N", "4"]), 7);
    assert_eq!(code(&["haar", "--d", "2", "--N", "4", "--chi", "3"]), 2);
    assert_eq!(code(&["defects", "--d", "2", "--k", "7"]), 3);
    assert_eq!(code(&[]), 2);

    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "mode = \"exact\"\nd = 2\nN = 4").unwrap();
    let path = file.path().to_str().unwrap();
    assert_eq!(code(&["haar", "--config", path]), 6);
}

#[test]
fn flags_override_config_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "d = 3\nN = 4\nt = \"1:2\"\nchi = 36").unwrap();
    let path = file.path().to_str().unwrap();
    let out = magicflow(&["tn", "--config", path, "--chi", "72"]);
    assert!(out.status.success());
    let header: serde_json::Value =
        serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(header["config"]["chi"][0], 72);
    assert_eq!(cell(&csv_rows(&stdout(&out))[0], "chi"), "72");
}

#[test]
fn fixed_seed_reproduces_data_bytes() {
    let args = [
        "exact", "--d", "2", "--N", "4", "--t", "0:3", "--M", "50", "--seed", "11",
    ];
    let a = magicflow(&args);
    let b = magicflow(&args);
    assert!(a.status.success());
    assert_eq!(data_section(&a), data_section(&b));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    assert_eq!(data_section(&a), data_section(&magicflow(&threaded)));

    let other = magicflow(&[
        "exact", "--d", "2", "--N", "4", "--t", "0:3", "--M", "50", "--seed", "12",
    ]);
    assert_ne!(data_section(&a), data_section(&other));
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_magicflow"))
        .args(["haar", "--d", "3", "--N", "2"])
        .env("MAGICFLOW_SEED", "42")
        .output()
        .unwrap();
    let header: serde_json::Value =
        serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 42);
}

#[test]
fn validate_passes_and_gates() {
    let ok = magicflow(&[
        "validate", "--d", "2", "--N", "4", "--t", "1:3", "--M", "2000", "--seed", "3",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(csv_rows(&stdout(&ok))
        .iter()
        .all(|r| cell(r, "pass") == "true"));

    // a bond dimension of one without the conservation fix is far off
    let bad = magicflow(&[
        "validate",
        "--d",
        "2",
        "--N",
        "6",
        "--t",
        "3",
        "--M",
        "500",
        "--chi",
        "1",
        "--conserve",
        "false",
    ]);
    assert_eq!(bad.status.code(), Some(5));
    assert_eq!(cell(&csv_rows(&stdout(&bad))[0], "pass"), "false");
}

#[test]
fn fit_reads_tn_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tn.csv");
    let csv = csv.to_str().unwrap();
    let out = magicflow(&[
        "tn", "--d", "3", "--N", "16", "--t", "1:12", "--chi", "36", "--out", csv,
    ]);
    assert!(out.status.success());
    let fit = magicflow(&["fit", "--input", csv, "--t", "5:12"]);
    assert!(fit.status.success());
    let row: serde_json::Value =
        serde_json::from_str(stdout(&fit).lines().nth(1).unwrap()).unwrap();
    let alpha = row["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0).abs() < 0.1, "alpha {alpha}");
    assert_eq!(row["t_window"][0].as_f64(), Some(5.0));
    for key in ["stderr", "a", "residual"] {
        assert!(row[key].is_f64());
    }
}

#[test]
fn defects_lists_census() {
    let out = magicflow(&["defects", "--d", "2", "--k", "4"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(cell(&rows[0], "generators"), "1111");
    assert_eq!(cell(&rows[0], "all_ones"), "true");
}

#[test]
fn doped_rows_track_reference_columns() {
    let out = magicflow(&[
        "doped", "--N", "4", "--t", "0:3", "--M", "20", "--seed", "1",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    let y0: f64 = cell(&rows[0], "Y_annealed").parse().unwrap();
    assert!(y0.abs() < 1e-12);
    assert_eq!(cell(&rows[3], "T_gates"), "3");
}
