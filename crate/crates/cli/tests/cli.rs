use std::path::Path;
use std::process::{Command, Output};

fn fehc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fehc"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("FEHC_THREADS", "1")
        .output()
        .expect("spawn fehc")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn mesh_subcommand_writes_readable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = fehc(&["mesh", "--preset", "table1", "--n", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("table1_n4.mesh");
    let mesh = fehc_core::mesh::TriMesh::read_text(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(mesh.num_triangles(), 32);
    assert_eq!(mesh.num_vertices(), 25);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("triangles=32"), "{stdout}");
}

#[test]
fn kappa_subcommand_reports_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = fehc(&["kappa", "--preset", "table1", "--n", "16"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("table1_constants.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rec = rdr.records().next().unwrap().unwrap();
    let kappa: f64 = rec[1].parse().unwrap();
    assert!((kappa - 0.030).abs() / 0.030 < 0.05, "{kappa}");
}

#[test]
fn unknown_subcommand_fails() {
    let out = Command::new(env!("CARGO_BIN_EXE_fehc")).arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn missing_config_source_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = fehc(&["estimate"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--preset"));
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_list": []}"#);
    let out = fehc(&["estimate", "--preset", "table1", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n_list"), "{err}");

    let cfg = write_config(dir.path(), r#"{"epsilon": -1.0}"#);
    let out = fehc(&["estimate", "--preset", "table1", "--config", &cfg], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    let out = fehc(&["estimate", "--preset", "table9"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("table9"));
}

#[test]
fn estimate_is_deterministic_and_certified() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), r#"{"name": "small", "n_list": [8, 16]}"#);
    let ra = fehc(&["estimate", "--preset", "table1", "--config", &cfg], a.path());
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    let rb = Command::new(env!("CARGO_BIN_EXE_fehc"))
        .args(["estimate", "--preset", "table1", "--config", &cfg, "--out"])
        .arg(b.path())
        .env("FEHC_THREADS", "2")
        .output()
        .unwrap();
    assert!(rb.status.success());
    let ca = std::fs::read_to_string(a.path().join("small.csv")).unwrap();
    let cb = std::fs::read_to_string(b.path().join("small.csv")).unwrap();
    assert_eq!(ca, cb);
    assert!(ca.starts_with("h,kappa_h,C_h,E_L,E1,E2,EhatL,EhatG,beta,beta_hat\n"));
    assert_eq!(ca.lines().count(), 3);
    for col in ["kappa_h", "EhatL", "beta_hat"] {
        let svg = std::fs::read_to_string(a.path().join(format!("small_{col}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("small_rows.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fehc"))
        .args(["kappa", "--preset", "table1", "--n", "4", "--out"])
        .arg(dir.path())
        .env("FEHC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FEHC_THREADS"));
}

#[test]
fn sweep_and_converge_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"name": "sw", "n_list": [8, 16], "epsilon_sweep": {"start": 0.1, "stop": 0.2, "step": 0.05}}"#,
    );
    let out = fehc(&["sweep", "--preset", "table1", "--config", &cfg, "--row", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("sw_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(dir.path().join("sw_sweep.svg").exists());

    let cfg = write_config(dir.path(), r#"{"name": "cv", "n_list": [4, 8, 16]}"#);
    let out = fehc(&["converge", "--preset", "table1", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("cv_orders.csv")).unwrap();
    assert!(text.starts_with("column,slope,order_2,order_3"), "{text}");
    assert!(text.contains("E_hat_L") || text.contains("EhatL"), "{text}");
}
