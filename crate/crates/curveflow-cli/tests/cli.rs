//! End-to-end tests of the `curveflow` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn curveflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curveflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Rows of a snapshots CSV grouped as (t, x, y) string triples.
fn snapshot_rows(text: &str) -> Vec<(String, String, String)> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (f[0].to_string(), f[2].to_string(), f[3].to_string())
        })
        .collect()
}

#[test]
fn evolve_circle_shrinks_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "curve.kind = circle\ncurve.radius = 1\ncurve.n = 60\n\
         law.name = curve_shortening\n\
         stepping.tau = 1e-4\nstepping.snapshot_interval = 0.02\n\
         stopping.mode = area_fraction\nstopping.delta = 0.05\n",
    );
    let out = curveflow(&["evolve", "--config", &cfg, "--out", "a"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("a/snapshots.csv")).unwrap();
    assert!(csv.starts_with("t,i,x,y,k,nu,alpha,r\n"));
    assert!(tmp.path().join("a/trajectory.svg").exists());

    // Lengths decrease monotonically along snapshots (shrinking circle).
    let mut lengths = Vec::new();
    let mut current_t = String::new();
    let mut acc = 0.0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] != current_t {
            if !current_t.is_empty() {
                lengths.push(acc);
            }
            current_t = f[0].to_string();
            acc = 0.0;
        }
        acc += f[7].parse::<f64>().unwrap();
    }
    lengths.push(acc);
    for w in lengths.windows(2) {
        assert!(w[1] < w[0], "length grew: {w:?}");
    }

    // Identical config, second run: byte-identical output.
    let out2 = curveflow(&["evolve", "--config", &cfg, "--out", "b"], tmp.path());
    assert!(out2.status.success());
    let csv2 = fs::read_to_string(tmp.path().join("b/snapshots.csv")).unwrap();
    assert_eq!(csv, csv2);
}

#[test]
fn snapshots_round_trip_through_points_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "curve.kind = ellipse\ncurve.a = 2\ncurve.b = 1\ncurve.n = 40\n\
         law.name = curve_shortening\n\
         stepping.tau = 1e-4\nstepping.snapshot_interval = 0.01\n\
         stopping.mode = none\nstopping.max_time = 0.05\n",
    );
    let out = curveflow(&["evolve", "--config", &cfg, "--out", "first"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(tmp.path().join("first/snapshots.csv")).unwrap();
    let rows = snapshot_rows(&first);
    let t_last = rows.last().unwrap().0.clone();
    let final_rows: Vec<_> = rows.iter().filter(|r| r.0 == t_last).collect();

    // Re-ingest: zero further steps, so the t = 0 rows are the same points.
    let cfg2 = write_config(
        tmp.path(),
        "reload.conf",
        "curve.kind = points_csv\ncurve.path = first/snapshots.csv\n\
         law.name = curve_shortening\n\
         stepping.tau = 1e-4\nstepping.snapshot_interval = 1\n\
         stopping.mode = none\nstopping.max_steps = 0\n",
    );
    let out = curveflow(&["evolve", "--config", &cfg2, "--out", "second"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let second = fs::read_to_string(tmp.path().join("second/snapshots.csv")).unwrap();
    let reloaded = snapshot_rows(&second);
    assert_eq!(final_rows.len(), reloaded.len());
    for (a, b) in final_rows.iter().zip(&reloaded) {
        assert_eq!(a.1, b.1, "x coordinate not bit-exact");
        assert_eq!(a.2, b.2, "y coordinate not bit-exact");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.conf", "redistribution.epsilon = 1.5\n");
    let out = curveflow(&["evolve", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: config:"), "{stderr}");
    assert!(stderr.contains("redistribution.epsilon"), "{stderr}");

    let out = curveflow(&["frobnicate", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = curveflow(&["evolve", "--config", "missing.conf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // Fixed oversized step loses diagonal dominance and is not retried.
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "curve.kind = ellipse\ncurve.n = 40\nlaw.name = curve_shortening\n\
         stepping.tau = 10\nstopping.mode = none\nstopping.max_time = 100\n",
    );
    let out = curveflow(&["evolve", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: numerical:"), "{stderr}");
}

#[test]
fn redistribute_reproduces_length_optimal_defect() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "redist.conf",
        "curve.kind = ellipse\ncurve.a = 3\ncurve.b = 1\ncurve.n = 12\n\
         redistribution.shape = power\nredistribution.p = 0.6666666666666666\n",
    );
    let out = curveflow(&["redistribute", "--config", &cfg, "--out", "r"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let defects = fs::read_to_string(tmp.path().join("r/defects.csv")).unwrap();
    let row = defects.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[1], "12");
    let dl: f64 = fields[2].parse().unwrap();
    assert!((dl / 0.00733 - 1.0).abs() < 0.02, "Delta_L = {dl}");
    assert!(tmp.path().join("r/points.csv").exists());
    assert!(tmp.path().join("r/points.svg").exists());

    // One SVG per shape choice, as in the redistribution figure.
    for (i, extra) in [
        "redistribution.shape = unit",
        "redistribution.shape = smoothed\nredistribution.epsilon = 0.9",
        "redistribution.shape = crystalline",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(
            tmp.path(),
            &format!("redist{i}.conf"),
            &format!(
                "curve.kind = ellipse\ncurve.a = 3\ncurve.b = 1\ncurve.n = 12\n{extra}\n"
            ),
        );
        let dir = format!("panel{i}");
        let out = curveflow(&["redistribute", "--config", &cfg, "--out", &dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(tmp.path().join(&dir).join("points.svg").exists());
    }
}

#[test]
fn eoc_smoke_writes_table_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "eoc.conf",
        "eoc.n_list = 16,32\neoc.epsilons = 0.1\neoc.t_max = 0.3\neoc.samples = 10\n",
    );
    let out = curveflow(&["eoc", "--config", &cfg, "--out", "t"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("t/eoc_eps0.1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,p,E_p_1,EOC_p_1,E_p_2,EOC_p_2,E_p_inf,EOC_p_inf");
    assert_eq!(lines.len(), 7); // header + 2 grids x 3 norms
    assert!(lines[1].starts_with("16,1,"));
    assert!(lines[4].starts_with("32,1,"));
}

#[test]
fn discrepancy_smoke_orders_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "disc.conf",
        "discrepancy.n = 40\ndiscrepancy.samples = 40\n\
         discrepancy.epsilons = 0,1\ndiscrepancy.powers = 0.5\n",
    );
    let out = curveflow(&["discrepancy", "--config", &cfg, "--out", "d"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("d/discrepancy.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "phi,DL_1,DL_2,DL_inf,DA_1,DA_2,DA_inf");
    assert_eq!(lines.len(), 4);
    let dl = |line: &str| -> f64 { line.split(',').nth(1).unwrap().parse().unwrap() };
    // phi_1 = |k| tracks the shrinking ellipse better than phi_0 = uniform.
    assert!(dl(lines[2]) < dl(lines[1]));
}

#[test]
fn set_overrides_change_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.conf",
        "curve.kind = circle\ncurve.n = 24\nstepping.tau = 1e-3\n\
         stopping.mode = none\nstopping.max_steps = 5\n",
    );
    let out = curveflow(
        &[
            "evolve",
            "--config",
            &cfg,
            "--out",
            "o",
            "--set",
            "curve.n=36",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("o/snapshots.csv")).unwrap();
    // 36 vertices in the t = 0 block.
    let count = csv
        .lines()
        .skip(1)
        .take_while(|l| l.split(',').next() == csv.lines().nth(1).unwrap().split(',').next())
        .count();
    assert_eq!(count, 36);
}

/// Synthetic 64x64 disk PGM (P5) for segmentation smoke tests.
fn write_disk_pgm(path: &Path) {
    let (w, h) = (64usize, 64usize);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            let x = c as f64 + 0.5 - 32.0;
            let y = r as f64 + 0.5 - 32.0;
            bytes.push(if (x * x + y * y).sqrt() <= 20.0 { 255 } else { 0 });
        }
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn segment_smoke_runs_sharp_law() {
    let tmp = tempfile::tempdir().unwrap();
    write_disk_pgm(&tmp.path().join("disk.pgm"));
    let cfg = write_config(
        tmp.path(),
        "seg.conf",
        "curve.kind = circle\ncurve.radius = 1.2\ncurve.n = 60\n\
         law.name = sharp\nimage.path = disk.pgm\nimage.sigma = 1\n\
         image.f_max = 30\nimage.f_min = -30\n\
         redistribution.kappa2 = 0\n\
         stepping.mode = adaptive\nstepping.lambda = 1\nstepping.snapshot_interval = 0.01\n\
         stopping.mode = relative_stationary\nstopping.delta = 1e-5\nstopping.max_steps = 30000\n",
    );
    let out = curveflow(&["segment", "--config", &cfg, "--out", "s"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("terminated: stationary"), "{stdout}");
    let svg = fs::read_to_string(tmp.path().join("s/segment.svg")).unwrap();
    assert!(svg.contains("data:image/png;base64,"));
    assert!(tmp.path().join("s/snapshots.csv").exists());

    // The contour settles near the disk radius: 20 px at 3/64 units per px.
    let csv = fs::read_to_string(tmp.path().join("s/snapshots.csv")).unwrap();
    let rows = snapshot_rows(&csv);
    let t_last = rows.last().unwrap().0.clone();
    let finals: Vec<f64> = rows
        .iter()
        .filter(|r| r.0 == t_last)
        .map(|r| {
            let x: f64 = r.1.parse().unwrap();
            let y: f64 = r.2.parse().unwrap();
            x.hypot(y)
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let expect = 20.0 * 3.0 / 64.0;
    assert!((mean - expect).abs() < 3.0 * 3.0 / 64.0, "radius {mean} vs {expect}");
}

#[test]
fn segment_requires_image_law() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seg.conf", "law.name = curve_shortening\n");
    let out = curveflow(&["segment", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
