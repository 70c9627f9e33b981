use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smx::config::{parse_config, SCHEMA};
use smx::manifest::{read_manifest, verify_manifest};
use smx::series_io::read_series;

fn smx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smx")).args(args).output().expect("spawn smx")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL_HYDROGEN: &str = r#"
name = "h16"
[grid]
n = 16
[[atoms]]
[time]
n_steps = 10
[diagnostics]
interval = 2
"#;

#[test]
fn shipped_configs_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = smx(&["validate-config", "--config", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen >= 4);
}

#[test]
fn full_scale_hydrogen_config_matches_the_reference_setup() {
    let text = std::fs::read_to_string(configs_dir().join("paper-example-1.toml")).unwrap();
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.grid.dims(), [100, 100, 100]);
    assert_eq!(cfg.grid.origin(), [-4.95; 3]);
    for h in cfg.grid.spacing() {
        assert!((h - 0.1).abs() < 1e-15);
    }
    let expect = 1.5 * 0.1 / (3f64.sqrt() * cfg.consts.c);
    assert!((cfg.dt - expect).abs() <= 1e-15 * expect);
    assert_eq!(cfg.n_steps, 20_000);
    assert_eq!(cfg.order, 1);
}

#[test]
fn schema_text_is_itself_a_valid_scenario() {
    parse_config(SCHEMA).unwrap();
    let out = smx(&["describe-schema"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), SCHEMA);
}

#[test]
fn missing_config_exits_with_config_status() {
    let out = smx(&["validate-config", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = smx(&["run", "--config", "/definitely/not/here.toml", "--output", "/tmp/unused-smx"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[grid]\nn = -4\n[[atoms]]\n");
    let out = smx(&["validate-config", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
}

#[test]
fn small_run_writes_series_and_complete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", SMALL_HYDROGEN);
    let outdir = dir.path().join("out");
    let out = smx(&["run", "--config", &cfg, "--output", outdir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let series = read_series(&outdir.join("series.tsv")).unwrap();
    assert_eq!(series.channels(), ["prob_0", "H_d", "H_dqm", "H_dem"]);
    assert_eq!(series.len(), 6);
    for p in series.channel("prob_0").unwrap() {
        assert!((p - 1.0).abs() < 1e-9);
    }

    let m = read_manifest(&outdir).unwrap();
    assert_eq!(m.status, "completed");
    assert_eq!(m.steps_completed, 10);
    assert_eq!(m.config_sha256, smx::manifest::sha256_hex(SMALL_HYDROGEN.as_bytes()));
    assert!(m.end_time >= m.start_time);
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(names, ["config.toml", "series.tsv"]);
    verify_manifest(&outdir).unwrap();
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", SMALL_HYDROGEN);
    let read = |name: &str| {
        let o = dir.path().join(name);
        let out = smx(&["run", "--config", &cfg, "--output", o.to_str().unwrap(), "--n-steps", "4"]);
        assert!(out.status.success());
        std::fs::read(o.join("series.tsv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn snapshots_modes_and_spectra_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[grid]
n = 8
[[atoms]]
[initial]
field = "gaussian_pulse"
[time]
cfl_coefficient = 0.5
n_steps = 12
[diagnostics]
interval = 2
probe = [0.0, 0.0, 0.0]
dipole = true
outer_radius = 3.0
flux_margin = 1
field_probes = [[0.0, 0.0, 2.5]]
mode_frequencies = [0.0795774715459477]
hhg_omegas = [1.0, 2.0]
snapshot_interval = 6
snapshot_plane_z = 0.0
snapshot_fields = ["density", "a_x"]
"#;
    let cfg = write(dir.path(), "p.toml", text);
    let outdir = dir.path().join("out");
    let out = smx(&["run", "--config", &cfg, "--output", outdir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&outdir).unwrap();
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    for want in [
        "snap_density_e0_00000000.f64",
        "snap_a_x_00000012.f64.meta",
        "mode0_e0_re.f64",
        "mode0_e0_im.f64.meta",
        "spectrum_e0.tsv",
    ] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    let snap = smx::snapshot::read_snapshot(&outdir.join("snap_a_x_00000006.f64")).unwrap();
    assert_eq!(snap.meta.dims, [8, 8, 1]);
    let series = read_series(&outdir.join("series.tsv")).unwrap();
    assert!(series.channel("flux_0").is_ok());
    assert!(series.channel("field_probe0_a_z").is_ok());
    verify_manifest(&outdir).unwrap();
}

#[test]
fn solver_failure_exits_with_solver_status_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_HYDROGEN}[solver]\ntol = 1e-15\nmax_iter = 1\n");
    let cfg = write(dir.path(), "h.toml", &text);
    let outdir = dir.path().join("out");
    let out = smx(&["run", "--config", &cfg, "--output", outdir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&outdir).unwrap();
    assert!(m.status.starts_with("aborted"), "{}", m.status);
    // The initial sample was flushed before the first step failed.
    assert_eq!(read_series(&outdir.join("series.tsv")).unwrap().len(), 1);
}
