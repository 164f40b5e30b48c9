//! `soc-dpt`: run simulations and figure sweeps from a key=value config.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when results were
//! written but carry numerical failure flags. Errors go to stderr followed
//! by one `key=value` line for scripts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soc_dpt::config::{ConfigError, RunConfig};
use soc_dpt::dynamics::{capped_window, default_dt, evolve, evolve_until_return, DynamicsError};
use soc_dpt::entropy::von_neumann_entropy;
use soc_dpt::harness::{reproduce_figure, scan_v0, thermal_scan, FigureId, HarnessError, ScanTable};
use soc_dpt::moments::{evolve_moments, hz_parameter, init_moments};
use soc_dpt::oracle::{build_state, entropy_from_fock, hz_from_fock, OracleError};
use soc_dpt::{classify_ground_phase, derive, Derived, SpinorState};

const ORACLE_LIMIT: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "soc-dpt", version, about = "Dynamical phase transition of a perturbed two-mode SOC condensate")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "SOC_DPT_OUT", default_value = "out")]
    out: PathBuf,
    /// Multiplier on the default RK4 step.
    #[arg(long, global = true)]
    dt_scale: Option<f64>,
    /// Horizon of `evolve`/`moments` in return periods.
    #[arg(long, global = true)]
    horizon_periods: Option<u32>,
    /// Parallel sweep workers (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Keep the grid point V0 = V0crit, averaged over the capped window.
    #[arg(long, global = true)]
    allow_separatrix: bool,
    /// Validate the configuration and print derived constants only.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-field trajectory from the magnetized state.
    Evolve,
    /// Moment hierarchy and E_HZ along the trajectory.
    Moments,
    /// Zero-temperature sweep over V0 / V0crit.
    Scan,
    /// Finite-temperature sweep.
    ThermalScan,
    /// Write the data set behind one figure (fig2, fig3, fig5, fig6).
    Reproduce { fig: FigureId },
    /// Compare the closed-form initial moments with exact Fock-space values.
    OracleCheck {
        #[arg(long, default_value_t = 12)]
        n: u32,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

/// Failure with its exit status and machine-readable trailer.
struct Failure {
    code: u8,
    message: String,
    trailer: String,
}

impl Failure {
    fn invalid(message: impl ToString, trailer: String) -> Self {
        Failure { code: 1, message: message.to_string(), trailer }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let trailer = match (&e, e.key()) {
            (ConfigError::MissingKey(k), _) => format!("missing_key={k}"),
            (ConfigError::Io { path, .. }, _) => format!("path={}", path.display()),
            (_, Some(k)) => format!("invalid_key={k}"),
            (_, None) => "error=config".to_string(),
        };
        Failure::invalid(e, trailer)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => c.into(),
            HarnessError::Io { ref path, .. } => {
                let trailer = format!("path={}", path.display());
                Failure::invalid(e, trailer)
            }
            HarnessError::Param(ref p) => {
                let trailer = format!("invalid_key={}", p.key());
                Failure::invalid(e, trailer)
            }
            HarnessError::BadGrid(_) => Failure::invalid(e, "invalid_key=grid".into()),
            other => Failure::invalid(other, "error=harness".into()),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure::invalid(e, "error=dynamics".into())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::invalid(e, "invalid_key=n".into())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::invalid(format!("{}: {e}", path.display()), format!("path={}", path.display()))
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::invalid("--config is required for this command", "missing_key=config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    // Flags win over the file.
    if let Some(s) = common.dt_scale {
        if !(s.is_finite() && s > 0.0) {
            return Err(Failure::invalid(format!("--dt-scale must be positive, got {s}"), "invalid_key=dt_scale".into()));
        }
        cfg.dt_scale = s;
    }
    if let Some(h) = common.horizon_periods {
        if h == 0 {
            return Err(Failure::invalid("--horizon-periods must be at least 1", "invalid_key=horizon_periods".into()));
        }
        cfg.horizon_periods = h as f64;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.allow_separatrix |= common.allow_separatrix;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn print_derived(cfg: &RunConfig, d: &Derived) -> Result<(), Failure> {
    let k2 = cfg.params.k0 * cfg.params.k0;
    let phase = classify_ground_phase(&cfg.params).map_err(|e| Failure::invalid(&e, format!("invalid_key={}", e.key())))?;
    println!("theta={}", d.theta);
    println!("k_m={}", d.km * cfg.params.k0);
    println!("E_s={}", d.es * k2);
    println!("E_m={}", d.em * k2);
    println!("V0_crit={}", d.v0_crit * k2);
    println!("V_p={}", d.vp * k2);
    println!("T_est={}", d.period_estimate() / k2);
    println!("ground_phase={phase}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<(), Failure> {
    w.flush().map_err(|e| io_failure(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn numerical(flagged: bool, what: &str) -> Result<u8, Failure> {
    if flagged {
        return Err(Failure { code: 2, message: format!("{what} exceeded its tolerance"), trailer: format!("numerical_failure={what}") });
    }
    Ok(0)
}

/// Return period of the configured run, falling back to the capped window.
fn run_horizon(cfg: &RunConfig, d: &Derived, dt: f64) -> Result<(f64, Option<f64>), Failure> {
    let probe = evolve_until_return(SpinorState::magnetized_right(), d, capped_window(d), dt)?;
    let t = probe.period.unwrap_or_else(|| capped_window(d));
    Ok((cfg.horizon_periods * t, probe.period))
}

fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<u8, Failure> {
    let d = derive(&cfg.params).map_err(|e| Failure::invalid(&e, format!("invalid_key={}", e.key())))?;
    let dt = default_dt(&d, cfg.dt_scale);
    let (horizon, period) = run_horizon(cfg, &d, dt)?;
    let traj = evolve(SpinorState::magnetized_right(), &d, horizon, dt)?;
    let path = out.join("trajectory.csv");
    let mut w = create(&path)?;
    traj.write_csv(&d, &mut w).map_err(|e| io_failure(&path, e))?;
    finish(w, &path)?;
    match period {
        Some(t) => println!("t_r={t}"),
        None => println!("t_r=none"),
    }
    println!("norm_drift={:e}", traj.norm_drift);
    numerical(traj.integration_failed(), "norm_drift")
}

fn cmd_moments(cfg: &RunConfig, out: &Path) -> Result<u8, Failure> {
    let d = derive(&cfg.params).map_err(|e| Failure::invalid(&e, format!("invalid_key={}", e.key())))?;
    let dt = default_dt(&d, cfg.dt_scale);
    let (horizon, _) = run_horizon(cfg, &d, dt)?;
    let mt = evolve_moments(init_moments(&SpinorState::magnetized_right(), cfg.params.n_atoms), &d, horizon, dt)?;
    let path = out.join("moments.csv");
    let mut w = create(&path)?;
    mt.write_csv(&mut w).map_err(|e| io_failure(&path, e))?;
    finish(w, &path)?;
    println!("number_drift={:e}", mt.number_drift);
    println!("pair_drift={:e}", mt.pair_drift);
    numerical(mt.conservation_failed(), "conservation")
}

fn write_table(table: &ScanTable, path: &Path) -> Result<u8, Failure> {
    let mut w = create(path)?;
    table.write_csv(&mut w).map_err(|e| io_failure(path, e))?;
    finish(w, path)?;
    numerical(table.any_failed(), "scan_rows")
}

fn cmd_oracle(n: u32, samples: usize, seed: u64) -> Result<u8, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["n_r", "n_l", "c", "w", "u", "v", "p", "q_r", "q_l", "e_vn", "e_hz"];
    let mut worst = [0.0_f64; 11];
    for _ in 0..samples {
        let mut z = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s = SpinorState::new(z(), z()).normalized();
        let fock = build_state(&s, n)?;
        let (a, b) = (fock.moments(), init_moments(&s, n));
        let diffs = [
            (a.n_r - b.n_r).abs(),
            (a.n_l - b.n_l).abs(),
            (a.c - b.c).norm(),
            (a.w - b.w).abs(),
            (a.u - b.u).norm(),
            (a.v - b.v).norm(),
            (a.p - b.p).norm(),
            (a.q_r - b.q_r).abs(),
            (a.q_l - b.q_l).abs(),
            (entropy_from_fock(&fock).e_vn - von_neumann_entropy(&s, n).e_vn).abs(),
            (hz_from_fock(&fock).e_hz - hz_parameter(&b, n).e_hz).abs(),
        ];
        // Moments are compared relative to their N² scale.
        let scale = (n as f64).powi(2);
        for (k, diff) in diffs.iter().enumerate() {
            let rel = if k < 9 { diff / scale } else { *diff };
            worst[k] = worst[k].max(rel);
        }
    }
    for (name, w) in names.iter().zip(&worst) {
        println!("{name} max_discrepancy={w:e}");
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    println!("max_discrepancy={max:e} n={n} samples={samples}");
    numerical(!(max <= ORACLE_LIMIT), "oracle")
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let common = &cli.common;
    if let Command::OracleCheck { n, samples, seed } = cli.command {
        return cmd_oracle(n, samples, seed);
    }
    let cfg = load_config(common)?;
    let d = derive(&cfg.params).map_err(|e| Failure::invalid(&e, format!("invalid_key={}", e.key())))?;
    if let Command::ThermalScan | Command::Reproduce { fig: FigureId::Fig6 } = cli.command {
        // Surface missing Γ keys before any work, also in dry runs.
        cfg.thermal_config()?;
    }
    if common.dry_run {
        print_derived(&cfg, &d)?;
        return Ok(0);
    }
    let out = common.out.as_path();
    match cli.command {
        Command::Evolve => cmd_evolve(&cfg, out),
        Command::Moments => cmd_moments(&cfg, out),
        Command::Scan => {
            let table = scan_v0(&cfg.params, &cfg.grid(), &cfg.n_list, &cfg.run_options())?;
            write_table(&table, &out.join("scan.csv"))
        }
        Command::ThermalScan => {
            let thermal = cfg.thermal_config()?;
            for w in thermal.validate().map_err(ConfigError::from)? {
                eprintln!("warning: {w}");
            }
            let table = thermal_scan(&cfg.params, &thermal, &cfg.grid(), &cfg.n_list, &cfg.run_options())?;
            write_table(&table, &out.join("thermal_scan.csv"))
        }
        Command::Reproduce { fig } => {
            let result = reproduce_figure(fig, &cfg, out)?;
            for f in &result.files {
                println!("wrote {}", out.join(f).display());
            }
            numerical(result.failed, "scan_rows")
        }
        Command::OracleCheck { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are validation errors; keep 2 for numerical flags.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            eprintln!("{}", f.trailer);
            ExitCode::from(f.code)
        }
    }
}
