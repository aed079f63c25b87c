use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quasiwave::config::RunConfig;
use quasiwave::imaging::read_pgm;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasiwave")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_presets() {
    let o = run(&["classify", "--preset", "square"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("periodic"));
    assert!(stdout(&o).contains("witness: basis {k1, k2}"));
    let o = run(&["classify", "--preset", "hexagon"]);
    assert!(stdout(&o).contains("k3 = -k1 + k2"));
    let o = run(&["classify", "--preset", "octagon"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("quasiperiodic"));
}

#[test]
fn symmetry_defect_is_printed() {
    let o = run(&["symmetry", "--preset", "octagon", "--order", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value: f64 = text.split_whitespace().last().unwrap().parse().unwrap();
    assert!(value <= 1e-10, "{text}");
    let o = run(&["symmetry", "--preset", "octagon", "--order", "3"]);
    let value: f64 = stdout(&o).split_whitespace().last().unwrap().parse().unwrap();
    assert!(value > 1e-3);
}

#[test]
fn field_outputs_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    let o = run(&["field", "--preset", "octagon", "--grid-res", "128", "--grid-box", "3", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = fs::read(out.join("psi.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n128 128\n65535\n"));
    let img = read_pgm(&bytes[..]).unwrap();
    let lo = img.samples().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img.samples().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!((lo, hi), (0.0, 1.0));
    let raw = fs::read(out.join("grid.bin")).unwrap();
    assert_eq!(raw.len(), 3 * 128 * 128 * 8);
    let meta: toml::Table = fs::read_to_string(out.join("psi.meta.toml")).unwrap().parse().unwrap();
    let psi_min = meta["psi_min"].as_float().unwrap();
    let psi_max = meta["psi_max"].as_float().unwrap();
    assert!(psi_min < psi_max);
    assert_eq!(meta["resolution"].as_array().unwrap().len(), 2);
    assert!((meta["wavelength"].as_float().unwrap() - 1.5e-3).abs() < 1e-15);
    // physical values are recoverable from the raw planes
    let first = f64::from_le_bytes(raw[..8].try_into().unwrap());
    assert!(first >= psi_min && first <= psi_max);
    let plane: Vec<f64> = raw[..128 * 128 * 8].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    assert_eq!(plane.iter().copied().fold(f64::INFINITY, f64::min), psi_min);
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(
        &cfg_path,
        "seed = 3\n[wave]\npreset = \"exp2\"\n[grid]\nresolution = 96\nhalf_width_wavelengths = 2.0\n[criteria]\nmode = \"auto\"\ngrad_fraction = 0.2\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = run(&["minima", "--config", path(&cfg_path), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    let reparsed = RunConfig::from_toml_str(&echo).unwrap();
    let original = RunConfig::from_toml_str(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    assert_eq!(reparsed, original);
    assert_eq!(reparsed.to_toml_string(), echo);
}

#[test]
fn minima_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = run(&["minima", "--preset", "octagon", "--grid-res", "200", "--grid-box", "2", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("minima.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert_eq!(lines.next(), Some("x,y,psi,grad_norm,min_eig,refined"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 6));
    assert!(rows.iter().any(|r| r[5] == "true") && rows.iter().any(|r| r[5] == "false"));
    assert!(!csv.contains('\r'));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(
        &cfg_path,
        "seed = 11\n[wave]\npreset = \"decagon\"\n[grid]\nresolution = 160\nhalf_width_wavelengths = 2.0\n[relax]\nparticles = 40\nradius_wavelengths = 2.0\nrecord_paths = true\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        for cmd in ["minima", "relax"] {
            let o = run(&[cmd, "--config", path(&cfg_path), "--threads", threads, "--out", path(&out)]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        }
        outputs.push((
            fs::read(out.join("minima.csv")).unwrap(),
            fs::read(out.join("trajectories.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let relax = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(relax.lines().nth(1).unwrap().starts_with("particle,step,x,y,psi"));
    // a different seed moves the particles
    let out = dir.path().join("seed");
    run(&["relax", "--config", path(&cfg_path), "--seed", "12", "--out", path(&out)]);
    assert_ne!(fs::read(out.join("trajectories.csv")).unwrap(), outputs[0].1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["classify", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["classify"]).status.code(), Some(1));
    let o = run(&["classify", "--preset", "heptagon"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("heptagon"));
    assert_eq!(run(&["field", "--preset", "octagon", "--threads", "0"]).status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[wave]\nwavenumber = 2.0\nwavevectors = [[2.0, 0.0], [0.0, 2.5]]\n").unwrap();
    let o = run(&["classify", "--config", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("wavevectors[1]"), "{}", stderr(&o));

    let both = dir.path().join("both.toml");
    fs::write(&both, "[wave]\npreset = \"square\"\nwavevectors = [[2.0, 0.0]]\n").unwrap();
    assert_eq!(run(&["classify", "--config", path(&both)]).status.code(), Some(1));

    let syntax = dir.path().join("syntax.toml");
    fs::write(&syntax, "[wave]\npreset = \n").unwrap();
    let o = run(&["classify", "--config", path(&syntax)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let cube = dir.path().join("cube.toml");
    fs::write(
        &cube,
        "[wave]\nwavenumber = 1.0\nwavevectors = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n[grid]\nresolution = 8\n",
    )
    .unwrap();
    let out = dir.path().join("c");
    assert_eq!(run(&["field", "--config", path(&cube), "--out", path(&out)]).status.code(), Some(1));
    assert_eq!(run(&["classify", "--config", path(&cube)]).status.code(), Some(0));
    let o = run(&["minima", "--config", path(&cube), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("minima.csv")).unwrap().contains("x,y,z,psi"));

    assert_eq!(run(&["compare", "--preset", "exp1", "--out", path(&out)]).status.code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["classify", "--config", path(&missing)]).status.code(), Some(2));
}

#[test]
fn preset_flag_overrides_config_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[wave]\npreset = \"octagon\"\n").unwrap();
    let o = run(&["classify", "--config", path(&cfg), "--preset", "square"]);
    assert_eq!(stdout(&o).lines().next(), Some("periodic"));
    fs::write(&cfg, "[wave]\nwavevectors = [[1.0, 0.0]]\nwavenumber = 1.0\n").unwrap();
    assert_eq!(run(&["classify", "--config", path(&cfg), "--preset", "square"]).status.code(), Some(1));
}
