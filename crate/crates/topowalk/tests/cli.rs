//! End-to-end checks of the `topowalk` binary: exit-code contract, pi
//! expression handling, flag-over-config precedence, and output formats.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topowalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn dispersion_gapless_point() {
    let out = run(&[
        "dispersion", "--family", "simple1d", "-T", "4", "--theta", "pi", "--k", "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("gapless"), "{text}");
    assert!(text.contains("E+ = +0.000000000000"), "{text}");
}

#[test]
fn dispersion_2d_gapped_point() {
    let out = run(&[
        "dispersion", "--family", "simple2d", "-T", "8", "--theta", "pi/5", "--k", "pi/7,pi/5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("gapped"), "{text}");
    assert!(text.contains("n  = ("), "{text}");
}

#[test]
fn dispersion_missing_theta_is_usage_error() {
    let out = run(&["dispersion", "--family", "simple1d", "-T", "4", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("theta"));
}

#[test]
fn dispersion_csv_format() {
    let out = run(&[
        "dispersion", "--family", "simple1d", "-T", "1", "--theta", "0", "--k", "pi/3",
        "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("k,e_plus,e_minus,gapless,vx,vy,nx,ny,nz"));
}

#[test]
fn winding_is_unit_valued() {
    let out = run(&[
        "invariants", "--winding", "--family", "simple1d", "-T", "1", "--theta", "pi/2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("quantized=-1") || text.contains("quantized=1"),
        "{text}"
    );
}

#[test]
fn chern_is_zero_with_relation() {
    let out = run(&[
        "invariants", "--chern", "--family", "split2d", "-T", "8", "--alpha", "pi/5",
        "--relation", "1/3,pi/3", "--resolution", "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("quantized=0"), "{}", stdout(&out));
}

#[test]
fn zak_ratio_modes() {
    let out = run(&[
        "invariants", "--zak", "--family", "split1d", "-T", "2", "--alpha", "pi/3",
        "--beta", "pi/3", "--mode", "signed",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("value=+1.0000"), "{}", stdout(&out));
    let out = run(&[
        "invariants", "--zak", "--family", "split1d", "-T", "1", "--alpha", "0.3",
        "--beta", "pi",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("divergent"));
}

#[test]
fn path_with_gapless_endpoint_fails_numerically() {
    let out = run(&[
        "invariants", "--path", "--family", "split1d", "-T", "6", "--alpha", "0",
        "--relation", "1/3,pi/3", "--from", "-pi/2", "--to", "0.3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gapless"));
}

#[test]
fn path_counts_simple_t4() {
    let out = run(&[
        "invariants", "--path", "--family", "simple1d", "-T", "4", "--theta", "0",
        "--from", "pi/4", "--to", "3pi/4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("q0=1 qpi=0"), "{}", stdout(&out));
}

#[test]
fn classify_reports_cell_pattern() {
    let out = run(&[
        "classify", "--family", "split1d", "-T", "6", "--relation", "1/3,pi/3",
        "--alpha-range", "-pi/2,pi/2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("pattern: CELL"), "{text}");
    assert!(text.contains("5 closings"), "{text}");
    assert_eq!(text.matches("fermi-arc").count(), 2);
    assert_eq!(text.matches("dirac-cone").count(), 1);
    assert_eq!(text.matches("flat-band").count(), 2);
}

#[test]
fn classify_simple_t4_all_dirac() {
    let out = run(&[
        "classify", "--family", "simple1d", "-T", "4", "--range", "0,2pi",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("5 closings"), "{text}");
    assert_eq!(text.matches("dirac-cone").count(), 5);
}

#[test]
fn classify_empty_range_is_fine() {
    let out = run(&[
        "classify", "--family", "simple1d", "-T", "4", "--range", "1,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no closings"));
}

#[test]
fn evolve_drift_reaches_step_count() {
    // No -T needed: step-indexed evolution defaults it to the step count.
    let out = run(&[
        "evolve", "--family", "simple1d", "--theta", "0", "--steps", "10",
        "--extent", "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("final mean position = +10.000000"), "{text}");
    assert!(stderr(&out).is_empty());
}

#[test]
fn evolve_warns_on_small_extent() {
    let out = run(&[
        "evolve", "--family", "simple1d", "-T", "1", "--theta", "0.4", "--steps", "10",
        "--extent", "16",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
}

#[test]
fn evolve_inhomogeneous_emits_window_column() {
    let out = run(&[
        "evolve", "--inhomogeneous", "--alpha1", "1.2", "--steps", "50", "--window", "4",
        "--extent", "128",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // axis2 code 3 marks the window-probability rows.
    assert!(
        text.lines().any(|l| l.contains(",3.0000000000000000e0,")),
        "{text}"
    );
}

#[test]
fn verify_passes_and_detects_injected_tolerance() {
    let out = run(&["verify", "--grid", "64", "--sets", "2", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("all residuals below"));

    let out = run(&[
        "verify", "--grid", "64", "--sets", "2", "--seed", "5", "--tolerance", "1e-20",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));

    let out = run(&["verify", "--grid", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        r#"
schema = "topowalk/v1"

[dispersion]
family = "simple1d"
t = 4
theta = "0.3"
k = "0"
"#,
    )
    .unwrap();
    // Config alone: half angle 0.6 at k=0 gives E+ = 0.6.
    let out = run(&["dispersion", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("E+ = +0.600000000000"), "{}", stdout(&out));
    // Flag wins over config.
    let out = run(&[
        "dispersion", "--config", path.to_str().unwrap(), "--theta", "pi",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("E+ = +0.000000000000"), "{}", stdout(&out));
}

#[test]
fn config_rejects_unknown_keys_and_wrong_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "schema = \"topowalk/v1\"\nnonsense = 1\n").unwrap();
    let out = run(&[
        "dispersion", "--config", path.to_str().unwrap(), "--family", "simple1d",
        "-T", "1", "--theta", "0", "--k", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&path, "[dispersion]\nfamily = \"simple1d\"\n").unwrap();
    let out = run(&[
        "dispersion", "--config", path.to_str().unwrap(), "-T", "1", "--theta", "0",
        "--k", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schema"));
}

#[test]
fn sweep_writes_per_step_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("bands.csv");
    let out = run(&[
        "sweep", "--quantity", "energy_plus", "--family", "simple1d", "-T", "1",
        "--theta", "0", "--t-list", "2,4", "--angle-axis", "theta,0,2pi,21",
        "--momentum-axis", "k,-pi,pi,21", "--out", base.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("bands_T2.csv").exists());
    assert!(dir.path().join("bands_T4.csv").exists());
    let text = std::fs::read_to_string(dir.path().join("bands_T4.csv")).unwrap();
    assert!(text.starts_with("# topowalk v1, family=simple1d, T=4, quantity=energy_plus"));
    assert_eq!(text.lines().count(), 2 + 21 * 21);
}

#[test]
fn sweep_fully_config_driven() {
    // No flags beyond --config: the step count comes from the list.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let out_csv = dir.path().join("map.csv");
    std::fs::write(
        &path,
        format!(
            r#"
schema = "topowalk/v1"

[sweep]
family = "split1d"
alpha = "0"
relation = ["1/3", "pi/3"]
quantity = "zak_absolute"
t_list = [2, 6]
angle_axis = {{ name = "alpha", min = "-pi", max = "pi", samples = 21 }}
out_csv = "{}"
"#,
            out_csv.display()
        ),
    )
    .unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("# topowalk v1, family=split1d, T=2|6, quantity=zak_absolute"));
}

#[test]
fn sweep_stdout_when_no_destination() {
    let out = run(&[
        "sweep", "--quantity", "zak_absolute", "--family", "split1d", "-T", "1",
        "--alpha", "0", "--beta", "pi/3", "--t-list", "2,3,4",
        "--angle-axis", "alpha,-pi,pi,41",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# topowalk v1, family=split1d, T=2|3|4, quantity=zak_absolute"));
}
