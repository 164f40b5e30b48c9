use std::fs;

use soc_dpt::config::{ConfigError, RunConfig};
use soc_dpt::harness::{bracket_by_min_sz, linear_grid, reproduce_figure, scan_v0, thermal_scan, FigureId, HarnessError, RunOptions, SCAN_HEADER};
use soc_dpt::thermal::{GammaTable, ThermalConfig};
use soc_dpt::ModelParams;

const BASE: &str = "omega = 0.3\ngs_n = 1.0\nga_n = 0.9987\nn_atoms = 10\n";

fn params() -> ModelParams {
    ModelParams::new(0.3, 1.0, 10).with_ga_n(0.9987)
}

fn fast() -> RunOptions {
    RunOptions { dt_scale: 10.0, ..RunOptions::default() }
}

#[test]
fn scan_rows_and_invariants() {
    let grid = linear_grid(0.6, 1.4, 9);
    let table = scan_v0(&params(), &grid, &[1, 10], &fast()).unwrap();
    // 1.0 is dropped by default.
    assert_eq!(table.rows.len(), 8 * 2);
    for pair in table.rows.chunks(2) {
        assert_eq!(pair[0].n_atoms, 1);
        assert_eq!(pair[1].n_atoms, 10);
        assert_eq!(pair[0].v0_ratio, pair[1].v0_ratio);
    }
    for r in &table.rows {
        assert!((-1.0..=1.0).contains(&r.m_bar));
        assert!((0.0..=1.0).contains(&r.e_bar));
        assert!(r.e_hz_bar > 0.0);
        assert!(!r.failed);
        if r.v0_ratio < 1.0 {
            assert!(r.m_bar > 0.0);
        } else {
            assert!(r.m_bar.abs() < 1e-6);
        }
    }
    let block = table.block(0.0, 10);
    assert!(block.windows(2).all(|w| w[0].v0_ratio < w[1].v0_ratio));
    let cell = bracket_by_min_sz(&block).unwrap();
    assert!((cell - 1.0).abs() <= 0.1);
}

#[test]
fn separatrix_point_kept_on_request() {
    let opts = RunOptions { allow_separatrix: true, ..fast() };
    let table = scan_v0(&params(), &[0.9, 1.0, 1.1], &[10], &opts).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.rows[1].v0_ratio, 1.0);
}

#[test]
fn invalid_grids_are_rejected() {
    for grid in [vec![], vec![0.0, 1.1], vec![0.5, 3.1], vec![1.2, 1.1]] {
        assert!(matches!(scan_v0(&params(), &grid, &[10], &fast()), Err(HarnessError::BadGrid(_))));
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let grid = linear_grid(0.7, 1.3, 5);
    let one = scan_v0(&params(), &grid, &[10], &RunOptions { workers: 1, ..fast() }).unwrap();
    let four = scan_v0(&params(), &grid, &[10], &RunOptions { workers: 4, ..fast() }).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    one.write_csv(&mut a).unwrap();
    four.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thermal_rows_are_blocked_by_temperature() {
    let cfg = ThermalConfig::constant(&[0.0, 40.0], &[0.0, 0.1]).unwrap();
    let grid = linear_grid(0.6, 1.3, 4);
    let table = thermal_scan(&params(), &cfg, &grid, &[10], &fast()).unwrap();
    assert_eq!(table.rows.len(), 8);
    assert!(table.rows[..4].iter().all(|r| r.temperature_nk == 0.0 && !r.e_bar.is_nan()));
    assert!(table.rows[4..].iter().all(|r| r.temperature_nk == 40.0 && r.e_bar.is_nan() && r.gamma == 0.1));
    for (cold, warm) in table.rows[..4].iter().zip(&table.rows[4..]) {
        assert!(warm.e_hz_bar > cold.e_hz_bar);
    }
}

#[test]
fn tabulated_gamma_runs() {
    let table = GammaTable::parse("alpha_sq,T_nK,gamma\n0,0,0\n1,0,0\n0,50,0.05\n1,50,0.15\n").unwrap();
    let cfg = ThermalConfig::tabulated(&[0.0, 50.0], table).unwrap();
    let out = thermal_scan(&params(), &cfg, &[0.8], &[10], &fast()).unwrap();
    assert_eq!(out.rows[0].gamma, 0.0);
    assert_eq!(out.rows[1].gamma, 0.15);
}

fn quick_config(extra: &str) -> RunConfig {
    let text = format!("{BASE}grid_points = 5\ndt_scale = 10\n{extra}");
    RunConfig::parse(&text, None).unwrap()
}

#[test]
fn fig3_manifest_and_determinism() {
    let cfg = quick_config("");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = reproduce_figure(FigureId::Fig3, &cfg, a.path()).unwrap();
    reproduce_figure(FigureId::Fig3, &cfg, b.path()).unwrap();
    for f in &out.files {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{}", f.display());
    }
    let manifest = fs::read_to_string(a.path().join("fig3/manifest.txt")).unwrap();
    assert!(manifest.contains("n_list=1,10,100\n"));
    assert!(manifest.contains("omega=0.3\n"));
    assert!(manifest.contains("gs_n=1\n"));
    assert!(manifest.contains("file=fig3/scan.csv\n"));
    let csv = fs::read_to_string(a.path().join("fig3/scan.csv")).unwrap();
    assert!(csv.starts_with(SCAN_HEADER));
    assert!(!csv.contains('\r'));
}

#[test]
fn fig2_trajectories_twice() {
    let cfg = quick_config("");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = reproduce_figure(FigureId::Fig2, &cfg, a.path()).unwrap();
    reproduce_figure(FigureId::Fig2, &cfg, b.path()).unwrap();
    assert_eq!(out.files.len(), 5);
    for f in &out.files {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    let text = fs::read_to_string(a.path().join("fig2/traj_r0.600.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,sz,e_n1,e_n10,e_n100,e_hz_n1,e_hz_n10,e_hz_n100");
    assert_eq!(lines.next().unwrap().split(',').nth(1).unwrap(), "1.000000000000e+00");
    assert!(text.lines().count() <= 2002);
}

#[test]
fn fig6_needs_gamma_keys() {
    let cfg = quick_config("");
    let dir = tempfile::tempdir().unwrap();
    let err = reproduce_figure(FigureId::Fig6, &cfg, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Config(ConfigError::MissingKey("temperatures"))));
    assert!(!dir.path().join("fig6").exists());

    let cfg = quick_config("temperatures = 0, 50\ngamma_mode = constant\ngamma_values = 0, 0.2\n");
    let out = reproduce_figure(FigureId::Fig6, &cfg, dir.path()).unwrap();
    let manifest = fs::read_to_string(dir.path().join("fig6/manifest.txt")).unwrap();
    assert!(manifest.contains("gamma_mode=constant\n"));
    assert!(out.files.iter().any(|f| f.ends_with("thermal.csv")));
}

#[test]
fn unwritable_output_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = reproduce_figure(FigureId::Fig3, &quick_config(""), &blocker).unwrap_err();
    match err {
        HarnessError::Io { path, .. } => assert!(path.starts_with(&blocker)),
        other => panic!("{other}"),
    }
}
