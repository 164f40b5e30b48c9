//! Figure data sets: fixed sweeps written as CSV plus a `manifest.txt`.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{hz_series, prepare_grid, scan_v0, thermal_scan, HarnessError, ScanTable};
use crate::config::RunConfig;
use crate::csv::{fmt_e12, write_row};
use crate::dynamics::{capped_window, default_dt, evolve, evolve_until_return, STEPS_PER_PERIOD_ESTIMATE};
use crate::entropy::BinomialEntropy;
use crate::model::derive;
use crate::moments::init_moments;
use crate::state::SpinorState;

pub const TRAJECTORY_RATIOS: [f64; 4] = [0.6, 0.999, 1.001, 1.4];
pub const TRAJECTORY_ATOMS: [u32; 3] = [1, 10, 100];
pub const ENTROPY_SCAN_ATOMS: [u32; 3] = [1, 10, 100];
pub const HZ_SCAN_ATOMS: [u32; 2] = [10, 100];
/// Trajectory CSVs are thinned to about this many rows.
pub const TRAJECTORY_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Spin and entropy trajectories at four perturbation strengths.
    Fig2,
    /// Entropy and order parameter against `V₀`.
    Fig3,
    /// Hillery-Zubairy parameter against `V₀`.
    Fig5,
    /// Order parameter and HZ dip at finite temperature.
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig5, FigureId::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown figure {s:?}; expected fig2, fig3, fig5 or fig6"))
    }
}

/// Files written by one reproduction, relative to the output root.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Whether any row carries a numerical failure flag.
    pub failed: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Run the sweep behind `fig` and write `out_root/<fig>/`.
pub fn reproduce_figure(fig: FigureId, cfg: &RunConfig, out_root: &Path) -> Result<FigureOutput, HarnessError> {
    // Fail on configuration before touching the file system.
    let thermal = match fig {
        FigureId::Fig6 => Some(cfg.thermal_config()?),
        _ => None,
    };
    let opts = cfg.run_options();
    let grid = cfg.grid();

    let dir = out_root.join(fig.name());
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut files = Vec::new();
    let mut failed = false;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "fig_id={fig}");
    let _ = writeln!(manifest, "version={}", env!("CARGO_PKG_VERSION"));
    manifest.push_str(&cfg.describe());
    let _ = writeln!(manifest, "dt_rule=(pi/Vp)/{STEPS_PER_PERIOD_ESTIMATE}*dt_scale");

    let mut write_scan = |name: &str, table: &ScanTable, files: &mut Vec<PathBuf>| -> Result<(), HarnessError> {
        let path = dir.join(name);
        write_file(&path, |w| table.write_csv(w))?;
        files.push(PathBuf::from(fig.name()).join(name));
        failed |= table.any_failed();
        Ok(())
    };

    match fig {
        FigureId::Fig2 => {
            let _ = writeln!(manifest, "ratios={}", join(&TRAJECTORY_RATIOS));
            let _ = writeln!(manifest, "n_list={}", join_u32(&TRAJECTORY_ATOMS));
            for ratio in TRAJECTORY_RATIOS {
                let name = format!("traj_r{ratio:.3}.csv");
                let path = dir.join(&name);
                failed |= write_trajectory(cfg, ratio, &path)?;
                files.push(PathBuf::from(fig.name()).join(name));
            }
        }
        FigureId::Fig3 | FigureId::Fig5 => {
            let n_list: &[u32] = if fig == FigureId::Fig3 { &ENTROPY_SCAN_ATOMS } else { &HZ_SCAN_ATOMS };
            let _ = writeln!(manifest, "n_list={}", join_u32(n_list));
            let _ = writeln!(manifest, "grid={}", join(&prepare_grid(&grid, &opts)?));
            let table = scan_v0(&cfg.params, &grid, n_list, &opts)?;
            write_scan("scan.csv", &table, &mut files)?;
        }
        FigureId::Fig6 => {
            let thermal = thermal.expect("built above");
            let n_list = [cfg.params.n_atoms];
            let _ = writeln!(manifest, "n_list={}", join_u32(&n_list));
            let _ = writeln!(manifest, "grid={}", join(&prepare_grid(&grid, &opts)?));
            let table = thermal_scan(&cfg.params, &thermal, &grid, &n_list, &opts)?;
            write_scan("thermal.csv", &table, &mut files)?;
        }
    }

    for f in &files {
        let _ = writeln!(manifest, "file={}", f.display());
    }
    let path = dir.join("manifest.txt");
    write_file(&path, |w| w.write_all(manifest.as_bytes()))?;
    files.push(PathBuf::from(fig.name()).join("manifest.txt"));
    Ok(FigureOutput { dir, files, failed })
}

/// Two return periods (or the capped window) of `sz`, entropy and `E_HZ`
/// for every trajectory atom number. Returns the failure flag.
fn write_trajectory(cfg: &RunConfig, ratio: f64, path: &Path) -> Result<bool, HarnessError> {
    let d0 = derive(&cfg.params)?;
    let d = d0.with_v0(ratio * d0.v0_crit);
    let dt = default_dt(&d, cfg.dt_scale);
    let cap = capped_window(&d);
    let probe = evolve_until_return(SpinorState::magnetized_right(), &d, cap, dt)?;
    let horizon = probe.period.map_or(cap, |t| (2.0 * t).min(cap));
    let traj = evolve(SpinorState::magnetized_right(), &d, horizon, dt)?;
    let steps = traj.len() - 1;

    let mut failed = traj.integration_failed();
    let mut entropy = Vec::new();
    let mut hz = Vec::new();
    for n in TRAJECTORY_ATOMS {
        let table = BinomialEntropy::new(n);
        entropy.push(traj.states.iter().map(|s| table.entropy(s.pop_right()).e_norm).collect::<Vec<_>>());
        let (series, ok) = hz_series(init_moments(&traj.states[0], n), &d, dt, steps, n, |_, m| *m);
        failed |= !ok;
        hz.push(series);
    }

    let stride = traj.len().div_ceil(TRAJECTORY_ROWS).max(1);
    write_file(path, |w| {
        let mut header = String::from("t,sz");
        for n in TRAJECTORY_ATOMS {
            let _ = write!(header, ",e_n{n}");
        }
        for n in TRAJECTORY_ATOMS {
            let _ = write!(header, ",e_hz_n{n}");
        }
        writeln!(w, "{header}")?;
        let mut row = Vec::with_capacity(2 + 2 * TRAJECTORY_ATOMS.len());
        let mut k = 0;
        loop {
            row.clear();
            row.push(traj.times[k]);
            row.push(traj.states[k].sz());
            row.extend(entropy.iter().map(|e| e[k]));
            row.extend(hz.iter().map(|h| h[k]));
            write_row(w, &row)?;
            if k == steps {
                break;
            }
            k = (k + stride).min(steps);
        }
        Ok(())
    })?;
    Ok(failed)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_e12(*x)).collect::<Vec<_>>().join(",")
}

fn join_u32(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}
