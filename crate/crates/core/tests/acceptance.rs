//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! Criteria listed in `KNOWN_RED` are reported but do not fail the run;
//! any other failure, or a known-red criterion that starts passing, does.

use std::fs;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soc_dpt::config::RunConfig;
use soc_dpt::dynamics::{capped_window, default_dt, evolve, evolve_until_return, order_parameter};
use soc_dpt::entropy::{max_entropy_bits, von_neumann_entropy};
use soc_dpt::harness::{argmax_by, argmin_by, linear_grid, reproduce_figure, scan_v0, thermal_scan, transition_ratio, FigureId, RunOptions, ScanTable};
use soc_dpt::moments::{evolve_moments, hz_parameter, init_moments};
use soc_dpt::oracle::{build_state, entropy_from_fock, hz_from_fock};
use soc_dpt::thermal::{effective_params, ThermalConfig};
use soc_dpt::{derive, Derived, ModelParams, SpinorState};

/// Criteria that fail for documented reasons (see README, "Known deviations").
const KNOWN_RED: &[u32] = &[5];

const BASE: &str = "omega = 0.3\ngs_n = 1.0\nga_n = 0.9987\nn_atoms = 100\n";

fn params() -> ModelParams {
    ModelParams::new(0.3, 1.0, 100).with_ga_n(0.9987)
}

fn at_ratio(ratio: f64) -> Derived {
    let d = derive(&params()).unwrap();
    d.with_v0(ratio * d.v0_crit)
}

fn random_state(rng: &mut ChaCha8Rng) -> SpinorState {
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    SpinorState::new(c(), c()).normalized()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn norm_and_energy() -> Outcome {
    let start = Instant::now();
    let d = at_ratio(0.6);
    let dt = default_dt(&d, 1.0);
    let t_r = evolve_until_return(SpinorState::magnetized_right(), &d, capped_window(&d), dt)
        .unwrap()
        .period
        .unwrap();
    let traj = evolve(SpinorState::magnetized_right(), &d, 10.0 * t_r, dt).unwrap();
    let energy = traj.energy_drift(&d);
    let elapsed = start.elapsed();
    outcome(
        traj.norm_drift < 1e-9 && energy < 1e-7 && elapsed < Duration::from_secs(5),
        format!("norm drift {:.2e}, energy drift {:.2e}, {:.2?}", traj.norm_drift, energy, elapsed),
    )
}

fn linear_limit() -> Outcome {
    let mut d = at_ratio(0.6);
    d.es = 0.0;
    d.em = 0.0;
    let dt = default_dt(&d, 1.0);
    let t_exact = std::f64::consts::PI / d.vp;
    let traj = evolve(SpinorState::magnetized_right(), &d, 3.0 * t_exact, dt).unwrap();
    let err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.sz() - (2.0 * d.vp * t).cos()).abs())
        .fold(0.0, f64::max);
    let period = traj.period.unwrap_or(f64::NAN);
    let rel = (period / t_exact - 1.0).abs();
    outcome(err < 1e-6 && rel < 1e-3, format!("max |sz - cos 2Vp t| {err:.2e}, T_R rel. error {rel:.2e}"))
}

fn window_order_parameter(ratio: f64) -> (f64, f64) {
    let d = at_ratio(ratio);
    let cap = capped_window(&d);
    let traj = evolve_until_return(SpinorState::magnetized_right(), &d, cap, default_dt(&d, 1.0)).unwrap();
    let (t_r, _) = traj.averaging_window(cap);
    (order_parameter(&traj, t_r), traj.min_sz())
}

fn bracketing() -> Outcome {
    let (below, _) = window_order_parameter(0.95);
    let (above, _) = window_order_parameter(1.05);
    let (_, min_sz) = window_order_parameter(1.4);
    outcome(
        below > 0.05 && above < 0.01 && min_sz < -0.999,
        format!("M(0.95) {below:.4}, M(1.05) {above:.2e}, min sz(1.4) {min_sz:.6}"),
    )
}

fn entropy_peak(table: &ScanTable) -> Outcome {
    let n10 = table.block(0.0, 10);
    let n100 = table.block(0.0, 100);
    let p10 = argmax_by(&n10, |r| r.e_bar).unwrap();
    let p100 = argmax_by(&n100, |r| r.e_bar).unwrap();
    outcome(
        (p10.v0_ratio - 1.0).abs() <= 0.02 + 1e-12 && p100.e_bar < p10.e_bar,
        format!(
            "argmax(N=10) at {:.2}, peak heights N=10 {:.4} > N=100 {:.4}",
            p10.v0_ratio, p10.e_bar, p100.e_bar
        ),
    )
}

fn hz_dip(table: &ScanTable) -> Outcome {
    let n10 = table.block(0.0, 10);
    let n100 = table.block(0.0, 100);
    let m10 = argmin_by(&n10, |r| r.e_hz_bar).unwrap();
    let m100 = argmin_by(&n100, |r| r.e_hz_bar).unwrap();
    let p = params();
    let at_zero = soc_dpt::harness::evaluate_point(&p, 0.0, &[10, 100], 0.0, soc_dpt::thermal::GammaAt::Fixed(0.0), &RunOptions::default()).unwrap();
    let exact_one = at_zero.iter().all(|r| r.e_hz_bar == 1.0);
    let near = |r: f64| (r - 1.0).abs() <= 0.05 + 1e-12;
    outcome(
        near(m10.v0_ratio) && near(m100.v0_ratio) && exact_one,
        format!(
            "argmin(N=10) at {:.2} ({:.4}), argmin(N=100) at {:.2} ({:.4}), E_HZ(V0=0) == 1: {exact_one}",
            m10.v0_ratio, m10.e_hz_bar, m100.v0_ratio, m100.e_hz_bar
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut moment_err, mut measure_err) = (0.0_f64, 0.0_f64);
    for n in [2u32, 5, 12] {
        for _ in 0..20 {
            let s = random_state(&mut rng);
            let fock = build_state(&s, n).unwrap();
            let exact = fock.moments();
            let fast = init_moments(&s, n);
            let scale = (n * n) as f64;
            let pairs = [
                (C64::from(exact.n_r), C64::from(fast.n_r)),
                (C64::from(exact.n_l), C64::from(fast.n_l)),
                (exact.c, fast.c),
                (C64::from(exact.w), C64::from(fast.w)),
                (exact.u, fast.u),
                (exact.v, fast.v),
                (exact.p, fast.p),
                (C64::from(exact.q_r), C64::from(fast.q_r)),
                (C64::from(exact.q_l), C64::from(fast.q_l)),
            ];
            for (a, b) in pairs {
                moment_err = moment_err.max((a - b).norm() / scale);
            }
            let e = (entropy_from_fock(&fock).e_vn - von_neumann_entropy(&s, n).e_vn).abs();
            let h = (hz_from_fock(&fock).e_hz - hz_parameter(&fast, n).e_hz).abs();
            measure_err = measure_err.max(e).max(h);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        moment_err < 1e-12 && measure_err < 1e-10 && elapsed < Duration::from_secs(10),
        format!("max moment error {moment_err:.2e} (relative to N^2), max measure error {measure_err:.2e}, {elapsed:.2?}"),
    )
}

fn hierarchy_conservation() -> Outcome {
    let mut worst = 0.0_f64;
    for ratio in [0.6, 0.999, 1.001, 1.4] {
        let d = at_ratio(ratio);
        let dt = default_dt(&d, 1.0);
        let cap = capped_window(&d);
        let t_r = evolve_until_return(SpinorState::magnetized_right(), &d, cap, dt).unwrap().averaging_window(cap).0;
        let mt = evolve_moments(init_moments(&SpinorState::magnetized_right(), 100), &d, 10.0 * t_r, dt).unwrap();
        worst = worst.max(mt.number_drift).max(mt.pair_drift);
    }
    outcome(worst < 1e-8, format!("largest relative drift {worst:.2e}"))
}

fn coherent_closed_form() -> Outcome {
    let mut d = at_ratio(0.6);
    d.es = d.em;
    let dt = default_dt(&d, 1.0);
    let s0 = SpinorState::new(C64::new(0.8, 0.1), C64::new(0.3, -0.5)).normalized();
    let mt = evolve_moments(init_moments(&s0, 50), &d, 2.0 * std::f64::consts::PI / d.vp, dt).unwrap();
    let err = mt
        .moments
        .iter()
        .map(|m| (hz_parameter(m, 50).e_hz - 0.5 * (1.0 + m.sz() * m.sz())).abs())
        .fold(0.0, f64::max);
    outcome(err < 1e-6, format!("max |E_HZ - (1+sz^2)/2| {err:.2e}"))
}

fn thermal_shift() -> Outcome {
    let p = params();
    let cfg = ThermalConfig::constant(&[0.0, 50.0], &[0.0, 0.2]).unwrap();
    let grid = linear_grid(0.5, 1.5, 101);
    let table = thermal_scan(&p, &cfg, &grid, &[10], &RunOptions::default()).unwrap();
    let shifted = transition_ratio(&table.block(50.0, 10), 0.01).unwrap_or(f64::NAN);
    let v0 = derive(&p).unwrap().v0_crit;
    let v1 = effective_params(&p, 0.2).unwrap().v0_crit;
    let formula = (v1 - 0.8 * v0).abs() / v0;
    outcome(
        (shifted - 0.8).abs() <= 0.02 && formula < 1e-14,
        format!("transition at {shifted:.3} V0crit(0), |v0_crit(0.2) - 0.8 v0_crit(0)| / v0_crit = {formula:.1e}"),
    )
}

fn thermal_dip() -> Outcome {
    let p = params();
    let temps = [0.0, 30.0, 60.0];
    let cfg = ThermalConfig::constant(&temps, &[0.0, 0.1, 0.2]).unwrap();
    let grid = linear_grid(0.5, 1.5, 101);
    let table = thermal_scan(&p, &cfg, &grid, &[100], &RunOptions::default()).unwrap();
    let minima: Vec<f64> = temps
        .iter()
        .map(|t| table.block(*t, 100).iter().map(|r| r.e_hz_bar).fold(f64::INFINITY, f64::min))
        .collect();
    outcome(
        minima.windows(2).all(|w| w[0] < w[1]),
        format!("min E_HZ at gamma 0, 0.1, 0.2: {:.4}, {:.4}, {:.4}", minima[0], minima[1], minima[2]),
    )
}

fn entropy_values() -> Outcome {
    let e_product = von_neumann_entropy(&SpinorState::magnetized_right(), 100).e_vn;
    let half = SpinorState::from_population(0.5);
    let e1 = von_neumann_entropy(&half, 1).e_vn;
    let e2 = von_neumann_entropy(&half, 2).e_vn;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bound = max_entropy_bits(100);
    let worst = (0..1000)
        .map(|_| von_neumann_entropy(&random_state(&mut rng), 100).e_vn)
        .fold(0.0, f64::max);
    outcome(
        e_product == 0.0 && (e1 - 1.0).abs() < 1e-12 && (e2 - 1.5).abs() < 1e-12 && worst <= bound,
        format!("E(alpha=1) {e_product}, E(N=1) {e1}, E(N=2) {e2}, max E(N=100) {worst:.4} <= {bound:.4}"),
    )
}

fn determinism() -> Outcome {
    let cfg = RunConfig::parse(BASE, None).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out_a = reproduce_figure(FigureId::Fig3, &cfg, a.path()).unwrap();
    reproduce_figure(FigureId::Fig3, &cfg, b.path()).unwrap();
    let fig3 = start.elapsed() / 2;
    let identical = out_a
        .files
        .iter()
        .all(|f| fs::read(a.path().join(f)).unwrap() == fs::read(b.path().join(f)).unwrap());
    let start = Instant::now();
    reproduce_figure(FigureId::Fig2, &cfg, a.path()).unwrap();
    reproduce_figure(FigureId::Fig5, &cfg, a.path()).unwrap();
    let total = fig3 + start.elapsed();
    outcome(
        identical && total < Duration::from_secs(300),
        format!("fig3 byte-identical: {identical}, fig2+fig3+fig5 in {total:.2?}"),
    )
}

fn main() {
    let grid = linear_grid(0.5, 1.5, 101);
    let scan = scan_v0(&params(), &grid, &[10, 100], &RunOptions::default()).unwrap();

    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "norm and energy conservation", norm_and_energy()),
        (2, "linear limit", linear_limit()),
        (3, "transition bracketing", bracketing()),
        (4, "entropy peak", entropy_peak(&scan)),
        (5, "HZ dip", hz_dip(&scan)),
        (6, "oracle equivalence", oracle_equivalence()),
        (7, "hierarchy conservation", hierarchy_conservation()),
        (8, "coherent closed form", coherent_closed_form()),
        (9, "thermal shift", thermal_shift()),
        (10, "thermal dip degradation", thermal_dip()),
        (11, "entropy values", entropy_values()),
        (12, "determinism and runtime", determinism()),
    ];

    let mut unexpected = Vec::new();
    for (id, name, o) in &results {
        let known = KNOWN_RED.contains(id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id:>2} {name}: {}", o.detail);
        if o.pass == known {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
