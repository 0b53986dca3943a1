use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use mbions_core::cli::{execute, Command, Invocation};
use mbions_core::io::{parse_diagnostics_csv, read_snapshot};
use mbions_core::kinetics::Species;
use mbions_core::Error;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn invoke(command: Command, name: &str, out: &Path) -> mbions_core::Result<serde_json::Value> {
    execute(&Invocation {
        command,
        config: fixture(name),
        out: Some(out.to_path_buf()),
        verbose: false,
        dry_run: false,
    })
    .map(|o| o.summary)
}

fn csv_rows(path: &Path) -> Vec<Vec<Option<f64>>> {
    parse_diagnostics_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_pb_uniform_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let s = invoke(Command::SolvePb, "solve_pb_uniform.ini", dir.path()).unwrap();
    assert!((s["beta"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((s["phi_min"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-10);
    assert!((s["phi_max"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-10);
    assert!(dir.path().join("phi.csv").exists());
}

#[test]
fn steady_state_rows_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let s = invoke(Command::Run, "steady_state.ini", dir.path()).unwrap();
    assert_eq!(s["steps"].as_u64(), Some(10));
    let rows = csv_rows(&dir.path().join("diagnostics.csv"));
    assert_eq!(rows.len(), 11);
    for row in &rows {
        // every column but time
        for (a, b) in row[1..].iter().zip(&rows[0][1..]) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}")
                }
                (None, None) => {}
                _ => panic!("column presence changed"),
            }
        }
    }
    let dom = mbions_core::domain::Domain::new(
        mbions_core::config::RunConfig::parse(
            &fs::read_to_string(fixture("steady_state.ini")).unwrap(),
        )
        .unwrap()
        .domain,
    )
    .unwrap();
    for name in ["ions_t0.bin", "ions_t0.25.bin", "final_ions.bin"] {
        let (f, t) = read_snapshot(&dir.path().join(name), dom.clone(), Species::Ion).unwrap();
        assert!(f.mass() > 0.0 && t >= 0.0, "{name}");
    }
}

#[test]
fn diagnostics_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    invoke(Command::Run, "reduced_perturbed.ini", a.path()).unwrap();
    invoke(Command::Run, "reduced_perturbed.ini", b.path()).unwrap();
    let read = |d: &Path| fs::read(d.join("diagnostics.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let echo = fs::read_to_string(a.path().join("config.echo")).unwrap();
    let cfg = mbions_core::config::RunConfig::parse(&echo).unwrap();
    assert_eq!(cfg.dump(), echo);
}

#[test]
fn limit_sweep_writes_one_row_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let s = invoke(Command::LimitSweep, "limit_sweep.ini", dir.path()).unwrap();
    let rows = s["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for (row, eps) in rows.iter().zip([0.4, 0.2]) {
        assert_eq!(row["epsilon"].as_f64(), Some(eps));
        assert!(row["error"].is_null(), "{row}");
        assert!(row["deviation"].as_f64().unwrap() >= 0.0);
    }
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    for sub in ["eps_0.4", "eps_0.2"] {
        assert!(csv_rows(&dir.path().join(sub).join("diagnostics.csv")).len() >= 2);
    }
}

#[test]
fn equilibrium_and_arnold_commands() {
    let dir = tempfile::tempdir().unwrap();
    let s = invoke(Command::Equilibrium, "equilibrium.ini", dir.path()).unwrap();
    assert!(s["pde_residual"].as_f64().unwrap() <= 1e-10);
    assert!(s["residuals"]["density"].as_f64().unwrap() < 1e-10);

    let dir = tempfile::tempdir().unwrap();
    let s = invoke(Command::Run, "arnold.ini", dir.path()).unwrap();
    let a0 = s["arnold_initial"].as_f64().unwrap();
    let a1 = s["arnold_final"].as_f64().unwrap();
    assert!(a0 > 0.0 && a1 < a0, "{a0} -> {a1}");
    assert!(s["entropy_monitor"]["increases"].as_u64() == Some(0));
}

#[test]
fn subcommand_must_match_model() {
    let dir = tempfile::tempdir().unwrap();
    match invoke(Command::SolvePb, "steady_state.ini", dir.path()) {
        Err(Error::Config(v)) => assert!(v[0].contains("solve_pb")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn binary_dry_run_and_error_exit() {
    let exe = env!("CARGO_BIN_EXE_mbions");
    let ok = Proc::new(exe)
        .args(["run", "--dry-run", "--config"])
        .arg(fixture("steady_state.ini"))
        .output()
        .unwrap();
    assert!(ok.status.success());
    let dump = String::from_utf8(ok.stdout).unwrap();
    assert!(dump.starts_with("[run]\nmodel = reduced_ions\n"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(
        &bad,
        "[run]\nmodel = reduced_ions\n[physics]\ne0 = 3\ncompatibility = 1\n",
    )
    .unwrap();
    let out = Proc::new(exe)
        .args(["run", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("compatibility condition"), "{err}");

    let out = Proc::new(exe).arg("run").output().unwrap();
    assert!(!out.status.success(), "--config is required");
}
