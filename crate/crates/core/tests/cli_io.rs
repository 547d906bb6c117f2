use std::fs;
use std::path::Path;
use std::process::Command;

use hhrd::grid::{build_grid, SpatialConfig};
use hhrd::io::{parse_summary_labels, parse_timeseries_csv, render_snapshot_csv, render_timeseries_csv};
use hhrd::{classify_regime, preset, simulate, ClassifierConfig, PresetName, Scheme};

fn hhrd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hhrd")).args(args).output().unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn preset_fig2_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = hhrd(&["preset", "fig2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["timeseries.csv", "snapshot_t500.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary = read(&out.join("summary.txt"));
    assert_eq!(parse_summary_labels(&summary), vec![(1, "stationary".to_string())]);
    assert!(!summary.contains("wall"));

    let ts = parse_timeseries_csv(&read(&out.join("timeseries.csv"))).unwrap();
    assert_eq!(ts.times.len(), 50_001);
    let last = ts.times.len() - 1;
    let snap = read(&out.join("snapshot_t500.csv"));
    let rows: Vec<Vec<f64>> = snap
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.len() == 5));
    let grid = build_grid(&SpatialConfig::default()).unwrap();
    assert!(rows.iter().zip(&grid).all(|(r, x)| r[0] == *x));
    assert!((ts.series[0][0][last].v - rows[0][1]).abs() < 1.0);
    assert!((ts.series[0][1][last].v - rows[100][1]).abs() < 1.0);

    // Labels recomputed from the CSV match the summary.
    let c = hhrd(&["classify", "--input", out.join("timeseries.csv").to_str().unwrap()]);
    assert!(c.status.success());
    assert_eq!(String::from_utf8_lossy(&c.stdout), "neuron1 stationary\n");

    // Rerunning produces identical bytes in every file.
    let out2 = dir.path().join("e");
    assert!(hhrd(&["preset", "fig2", "--out", out2.to_str().unwrap()]).status.success());
    for f in ["timeseries.csv", "snapshot_t500.csv", "summary.txt"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(out2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn fig6_summary_labels_survive_serialization() {
    let p = preset(PresetName::Fig6).unwrap();
    let rec = simulate(&p.spec, &p.init, &p.time, Scheme::Split, &p.probes, &p.snapshot_times).unwrap();
    let cfg = ClassifierConfig::default();
    let direct: Vec<_> = classify_regime(&rec, &cfg).unwrap().into_iter().map(|l| l.label).collect();
    let text = render_timeseries_csv(&rec).unwrap();
    let back = parse_timeseries_csv(&text).unwrap();
    let reread: Vec<_> = classify_regime(&back, &cfg).unwrap().into_iter().map(|l| l.label).collect();
    assert_eq!(direct, reread);
    assert_eq!(render_timeseries_csv(&back).unwrap(), text);
    assert!(text.starts_with("t,1_V@x0,1_n@x0,1_m@x0,1_h@x0,1_V@x100,1_n@x100,1_m@x100,1_h@x100,2_V@x0,"));
    let snap = render_snapshot_csv(&rec, 250.0).unwrap();
    assert!(snap.starts_with("x,V1,n1,m1,h1,V2,n2,m2,h2\n"));
}

#[test]
fn fig4_snapshots_differ() {
    let p = preset(PresetName::Fig4).unwrap();
    let rec = simulate(&p.spec, &p.init, &p.time, Scheme::Rk4, &p.probes, &p.snapshot_times).unwrap();
    let a = render_snapshot_csv(&rec, 200.0).unwrap();
    let b = render_snapshot_csv(&rec, 250.0).unwrap();
    assert_eq!(a.lines().count(), 102);
    assert_ne!(a, b);
    assert!(render_snapshot_csv(&rec, 300.0).is_err());
}

#[test]
fn run_config_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "[time]\nt_end = 40.0\nscheme = \"split\"\n[network]\ni0 = 10.0\n[output]\ndir = \"{}\"\nprobes = [0.0, 50.0, 100.0]\nsvg = true\n",
            out.display()
        ),
    )
    .unwrap();
    let o = hhrd(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["timeseries.csv", "snapshot_t40.csv", "summary.txt", "timeseries.svg", "snapshot_t40.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = read(&out.join("timeseries.csv")).lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 13);
    assert!(read(&out.join("summary.txt")).contains("config.scheme = split"));

    let missing = hhrd(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("No such file"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[network]\nneurons = 2\n[[coupling]]\ntarget = 2\nsource = 1\nhigh = -1.0\n").unwrap();
    let o = hhrd(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonnegative"));

    let blow = dir.path().join("blow.toml");
    fs::write(&blow, "[time]\ndt = 1.0\nt_end = 20.0\n[network]\ni0 = 1e6\n").unwrap();
    let o = hhrd(&["run", "--config", blow.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(hhrd(&["preset", "fig9", "--out", out.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(hhrd(&["sweep", "--from", "5.3", "--to", "5.2", "--width", "0.1"]).status.code(), Some(1));
}

#[test]
fn sweep_prints_bracket() {
    let o = hhrd(&["sweep", "--from", "5.2", "--to", "5.3", "--width", "0.1", "--init", "1,1,1,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "5.2 stationary\n5.3 periodic\n");
}

#[test]
fn digits_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    fs::write(&cfg, "[time]\nt_end = 1.0\n[classifier]\nwindow_start = 0.0\nwindow_end = 1.0\n").unwrap();
    let run = |digits: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_hhrd"))
            .env("HHRD_CSV_DIGITS", digits)
            .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        read(&out.join("timeseries.csv"))
    };
    let short = run("3", "a");
    let long = run("12", "b");
    let row = |s: &str| s.lines().nth(2).unwrap().to_string();
    assert!(row(&short).len() < row(&long).len());
    assert_eq!(row(&short).split(',').nth(1).unwrap().len(), 4);
}
