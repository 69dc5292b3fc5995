use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
n = 30
support = [[1.0, 0.0], [1.0, 1.0]]
assignment = "circulant"
b1 = [0.3, 0.5, 0.4]
b2 = [-0.5, 0.4]
rho0 = 0.05
rho1 = 0.1
replications = 5
seed = 4
grid_r0 = "0:0.1:3"
"#;

fn netform(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netform"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn full_pipeline_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "sim.toml", CONFIG);
    let out = netform(d, &["simulate", "--config", "sim.toml", "--out", "sim"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "support.csv",
        "covariates.csv",
        "true_network.csv",
        "observed_network.csv",
        "summary.json",
    ] {
        assert!(d.join("sim").join(f).exists(), "{f}");
    }

    let data = format!("{CONFIG}network_file = \"sim/observed_network.csv\"\ncovariates_file = \"sim/covariates.csv\"\n");
    write_config(d, "data.toml", &data);
    let cases: [(&str, &[&str]); 4] = [
        ("estimate", &["cells.csv", "variance.csv", "summary.json"]),
        ("ci", &["confidence_set.csv", "summary.json"]),
        ("sp-set", &["sp_set.csv", "summary.json"]),
        ("mc-coverage", &["replications.csv", "summary.json"]),
    ];
    for (cmd, files) in cases {
        let out = netform(
            d,
            &[
                cmd,
                "--config",
                "data.toml",
                "--out",
                cmd,
                "--threads",
                "1",
                "--alpha",
                "0.1",
            ],
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        for f in files {
            assert!(d.join(cmd).join(f).exists(), "{cmd}: {f}");
        }
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("ci/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["alpha"], 0.1);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "sim.toml", CONFIG);
    for (name, seed) in [("a", "4"), ("b", "4"), ("c", "5")] {
        let out = netform(
            d,
            &[
                "simulate", "--config", "sim.toml", "--out", name, "--seed", seed,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |name: &str| fs::read(d.join(name).join("true_network.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, "bad.toml", &format!("{CONFIG}unknown_key = 1\n"));
    write_config(
        d,
        "rates.toml",
        &CONFIG.replace("rho1 = 0.1", "rho1 = 0.95"),
    );
    write_config(
        d,
        "missing.toml",
        &format!("{CONFIG}network_file = \"absent.csv\"\n"),
    );
    for args in [
        &["simulate"][..],
        &["simulate", "--config", "nope.toml"],
        &["simulate", "--config", "bad.toml"],
        &["simulate", "--config", "rates.toml"],
        &["estimate", "--config", "missing.toml"],
        &["frobnicate"],
    ] {
        let out = netform(d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(
        d,
        "slow.toml",
        &format!("{CONFIG}max_iter = 1\ntol = 1e-15\n"),
    );
    let out = netform(d, &["simulate", "--config", "slow.toml"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let empty = CONFIG
        .replace("b2 = [-0.5, 0.4]", "b2 = [-9.0, 0.0]")
        .replace("b1 = [0.3, 0.5, 0.4]", "b1 = [0.0, 0.0, 0.0]")
        .replace("rho0 = 0.05", "rho0 = 0.0");
    write_config(d, "empty.toml", &empty);
    let out = netform(d, &["mc-coverage", "--config", "empty.toml", "--out", "mc"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
