//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Run with `cargo test -p omitsense-core --test acceptance`.

use std::f64::consts::TAU;
use std::process::ExitCode;

use omitsense_core::linear_response::{closed_form_deviation, residual, solve_sidebands, transmissions};
use omitsense_core::mass_sensing::{
    invert_mass, kst_curve_vs_shift, kst_of_mass, linearity_sweep, sensitivity_beta, sensitivity_map, with_kappa_sweep,
};
use omitsense_core::steady_state::{bistability_scan, operating_point, self_consistency_error, steady_states};
use omitsense_core::time_domain::{
    extract_peaks, parseval_mismatch, reference_drives, sense_mass_pipeline, settling_time, simulate, spectrum,
    FieldSpectrum, SimulationConfig,
};
use omitsense_core::units::{mhz_to_angular, FG_PER_PG, PW_PER_UW};
use omitsense_core::{Cx, SystemParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const TEST_MASSES_FG: [f64; 4] = [1.428, 2.857, 4.287, 5.671];
/// r (fg) above which K_st(m_d) counts as proportional over the test masses.
const LINEARITY_THRESHOLD_FG: f64 = 10.0;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac1_bistability_window() -> Outcome {
    let p = SystemParams::reference_device();
    let powers: Vec<f64> = (0..=3000).map(|i| i as f64 * 0.1 * PW_PER_UW).collect();
    let curve = bistability_scan(&p, &powers);
    let (lo, hi) = curve.multistable_range().ok_or("no three-root region found")?;
    let (lo, hi) = (lo / PW_PER_UW, hi / PW_PER_UW);
    let xmax = curve.max_abs_displacement();
    check(
        (5.0..=15.0).contains(&lo) && (120.0..=180.0).contains(&hi) && xmax < 5.0,
        format!("three roots for {lo:.1}-{hi:.1} uW, max |x| = {xmax:.3} pm"),
    )
}

/// Independent root finder: dense scan of the static force balance plus bisection.
fn oracle_roots(p: &SystemParams<f64>, power_pw: f64, detuning: f64) -> Vec<f64> {
    let hbar = 1.054_571_817e-4;
    let photon = hbar * TAU * 2.997_924_58e11 / p.pump_wavelength;
    let eps2 = power_pw / photon;
    let kh = p.kappa / 2.0;
    let h = |x: f64| {
        let d = detuning - p.g_coupling * x;
        x * p.m_eff * p.omega_m * p.omega_m + hbar * p.g_coupling * p.kappa_ex * eps2 / (d * d + kh * kh)
    };
    let n = 1_000_000;
    let (a, b) = (-10.0, 10.0);
    let xs = |i: usize| a + (b - a) * i as f64 / n as f64;
    let mut roots = Vec::new();
    let mut prev = h(xs(0));
    for i in 1..=n {
        let cur = h(xs(i));
        if cur == 0.0 {
            roots.push(xs(i));
        } else if prev.signum() * cur.signum() < 0.0 {
            let (mut lo, mut hi) = (xs(i - 1), xs(i));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h(mid).signum() == h(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    roots
}

fn ac2_root_oracle() -> Outcome {
    let p = SystemParams::reference_device();
    // bare detuning fixed by Δ̄ = −Ω_m at the reference power
    let hbar = 1.054_571_817e-4;
    let photon = hbar * TAU * 2.997_924_58e11 / p.pump_wavelength;
    let n_ref = p.kappa_ex * (p.pump_power / photon) / (p.omega_m.powi(2) + p.kappa.powi(2) / 4.0);
    let x_ref = -hbar * p.g_coupling * n_ref / (p.m_eff * p.omega_m.powi(2));
    let detuning = -p.omega_m + p.g_coupling * x_ref;

    let mut worst = 0.0f64;
    let mut total = 0;
    for i in 1..=50 {
        let power = i as f64 * 6.0 * PW_PER_UW;
        let mut ours: Vec<f64> = steady_states(&p, power, p.detuning_bar_target)
            .iter()
            .map(|s| s.x_bar)
            .collect();
        ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let oracle = oracle_roots(&p, power, detuning);
        if ours.len() != oracle.len() {
            return Err(format!("P = {} uW: {} roots vs oracle {}", i * 6, ours.len(), oracle.len()));
        }
        for (a, b) in ours.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
        total += ours.len();
    }
    check(worst <= 1e-6, format!("{total} roots over 50 powers, max deviation {worst:.2e} pm"))
}

fn ac3_stokes_equals_homodyne() -> Outcome {
    let p = SystemParams::reference_device()
        .with_kappa(mhz_to_angular(100.0))
        .with_kappa_ex(mhz_to_angular(25.0));
    let s = operating_point(&p);
    let t = transmissions(&p, &s, p.omega_m).map_err(|e| e.to_string())?;
    let ratio = t.t_hom.norm() / t.t_plus.norm();
    let mut dev = 0.0f64;
    for i in -200..=200 {
        let w = p.omega_m + mhz_to_angular(i as f64 * 0.01);
        dev = dev.max(closed_form_deviation(&p, &s, 1.0, w).map_err(|e| e.to_string())?);
    }
    check(
        (ratio - 1.0).abs() <= 0.01,
        format!("|t_hom|/|t+| = {ratio:.5} at zero detuning; closed form vs direct solve max deviation {dev:.1e}"),
    )
}

fn ac4_kst_structure() -> Outcome {
    let shifts: Vec<f64> = (0..=20).map(|i| mhz_to_angular(0.05 * i as f64)).collect();
    let base = SystemParams::sensing_device();
    let mut slopes = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for mhz in [50.0, 100.0, 200.0] {
        let p = with_kappa_sweep(&base, mhz_to_angular(mhz), true);
        let s = operating_point(&p);
        let c = kst_curve_vs_shift(&p, &s, &shifts).map_err(|e| e.to_string())?;
        let k0 = c.kst[0];
        ok &= (k0 - 1.0).abs() <= 0.01 && c.is_monotone_non_decreasing();
        let slope = c.slope() * mhz_to_angular(1.0);
        notes.push(format!("kappa {mhz} MHz: K(0) = {k0:.4}, slope {slope:.3}/MHz"));
        slopes.push(slope);
    }
    let increasing = slopes.windows(2).all(|w| w[1] > w[0]);
    if !increasing {
        notes.push("slope does not increase with kappa under critical coupling".into());
    }
    check(ok && increasing, notes.join("; "))
}

fn ac5_beta() -> Outcome {
    let base = SystemParams::reference_device()
        .with_kappa(mhz_to_angular(100.0))
        .with_kappa_ex(mhz_to_angular(50.0))
        .with_pump_power(7.0 * PW_PER_UW);
    let s = operating_point(&base);
    let est = sensitivity_beta(&base, &s);
    // independent secant of the mass formula
    let h = 1e-4;
    let secant = (kst_of_mass(&base, &s, h / FG_PER_PG) - kst_of_mass(&base, &s, -h / FG_PER_PG)) / (2.0 * h);
    let fd_ok = (est.per_fg - secant).abs() <= 1e-6 * secant.abs();
    let closed_agrees = est.discrepancy <= 1e-3;

    let ge0 = (base.g_coupling * base.eps_pump()).abs();
    let kappas: Vec<f64> = [0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|g| g * TAU).collect();
    let ges: Vec<f64> = [0.5, 0.75, 1.0, 1.25, 1.5].iter().map(|f| f * ge0).collect();
    let map = sensitivity_map(&base, &kappas, &ges, false);
    let up_in_kappa = (0..ges.len()).all(|j| (1..kappas.len()).all(|i| map.beta[i][j] > map.beta[i - 1][j]));
    let down_in_ge = map.beta.iter().all(|row| row.windows(2).all(|w| w[1] < w[0]));
    check(
        fd_ok && up_in_kappa && down_in_ge,
        format!(
            "beta = {:.4}/fg (finite difference, authoritative); closed form {:.3e} {}; \
             increases with kappa: {up_in_kappa}; decreases with G*eps: {down_in_ge}",
            est.per_fg,
            est.closed_form,
            if closed_agrees { "agrees" } else { "disagrees (logged)" }
        ),
    )
}

fn ac6_linearity_threshold() -> Outcome {
    let base = SystemParams::reference_device()
        .with_kappa_ex(mhz_to_angular(50.0))
        .with_kappa(mhz_to_angular(100.0))
        .with_pump_power(7.0 * PW_PER_UW);
    let ghz = [0.05, 0.1, 0.2, 0.5, 1.0];
    let kappas: Vec<f64> = ghz.iter().map(|g| g * TAU).collect();
    let r = linearity_sweep(&base, &kappas, false);
    let rises = r[2] > r[0];
    let proportional_above = ghz
        .iter()
        .zip(&r)
        .filter(|(g, _)| **g > 0.1)
        .all(|(_, r)| *r >= LINEARITY_THRESHOLD_FG);
    let table: Vec<String> = ghz.iter().zip(&r).map(|(g, r)| format!("{g} GHz: {r:.1} fg")).collect();
    check(
        rises && proportional_above,
        format!(
            "r = [{}]; r(0.2) > r(0.05): {rises}; r >= {LINEARITY_THRESHOLD_FG} fg for kappa > 0.1 GHz: {proportional_above}",
            table.join(", ")
        ),
    )
}

fn ac7_settling() -> Outcome {
    let p = SystemParams::sensing_device();
    let sim = SimulationConfig::default();
    let d = reference_drives(&p).map_err(|e| e.to_string())?;
    let traj = simulate(&p, &d, p.omega_m, &sim).map_err(|e| e.to_string())?;
    let t = settling_time(&traj, sim.record_stride, 0.01);
    check((50.0..=100.0).contains(&t), format!("envelope within 1% of final after {t:.1} ns"))
}

fn pipeline() -> Result<Vec<omitsense_core::SensingReport64>, String> {
    let mut masses = vec![0.0];
    masses.extend(TEST_MASSES_FG);
    sense_mass_pipeline(&SystemParams::sensing_device(), &masses, &SimulationConfig::default())
        .map_err(|e| e.to_string())
}

fn ac8_end_to_end() -> Outcome {
    let reports = pipeline()?;
    let loaded = &reports[1..];
    let cal = loaded.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    let uncal = loaded
        .iter()
        .map(|r| r.relative_error_uncalibrated.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let stokes: Vec<f64> = reports.iter().map(|r| r.stokes_amp).collect();
    let smax = stokes.iter().copied().fold(f64::MIN, f64::max);
    let smin = stokes.iter().copied().fold(f64::MAX, f64::min);
    let drift = (smax - smin) / smin;
    let homodyne_rises = reports.windows(2).all(|w| w[1].homodyne_amp > w[0].homodyne_amp);
    let recovered: Vec<String> = loaded.iter().map(|r| format!("{:.3}", r.mass_recovered_fg)).collect();
    check(
        cal <= 0.05 && uncal <= 0.15 && drift <= 0.01 && homodyne_rises,
        format!(
            "recovered [{}] fg; calibrated max error {:.2}%, uncalibrated {:.2}%, Stokes drift {:.2}%",
            recovered.join(", "),
            100.0 * cal,
            100.0 * uncal,
            100.0 * drift
        ),
    )
}

fn ac9_cross_validation() -> Outcome {
    let reports = pipeline()?;
    let worst = reports
        .iter()
        .map(|r| (r.kst_sim - r.kst_analytic).abs() / r.kst_analytic)
        .fold(0.0, f64::max);
    check(worst <= 0.05, format!("max |K_sim - K_linear|/K_linear = {:.3}%", 100.0 * worst))
}

/// Random valid device near the design point; stable at Δ̄ = −Ω_m.
fn draw_device(rng: &mut ChaCha8Rng) -> SystemParams<f64> {
    loop {
        let kappa = mhz_to_angular(rng.random_range(40.0..400.0));
        let p = SystemParams {
            m_eff: rng.random_range(1.0..4.0),
            omega_m: rng.random_range(0.9..2.0),
            gamma_m: TAU * rng.random_range(1e-5..1e-4),
            kappa,
            kappa_ex: kappa * rng.random_range(0.2..0.8),
            g_coupling: -rng.random_range(0.2..0.8),
            pump_power: rng.random_range(1.0..10.0) * PW_PER_UW,
            ..SystemParams::reference_device()
        };
        let p = SystemParams {
            detuning_bar_target: -p.omega_m,
            probe_power: p.pump_power * 1e-3,
            ..p
        };
        if p.validate().is_ok() && operating_point(&p).stable {
            return p;
        }
    }
}

fn ac10_property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let cases = 100;
    let (mut res, mut ss, mut inv, mut pars, mut conv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for _ in 0..cases {
        let p = draw_device(&mut rng);
        let s = operating_point(&p);
        let w = p.omega_m + rng.random_range(-1.0..1.0) * p.kappa;
        let sol = solve_sidebands(&p, &s, 1.0, w).map_err(|e| e.to_string())?;
        res = res.max(residual(&p, &s, 1.0, w, &sol));

        let power = rng.random_range(0.0..300.0) * PW_PER_UW;
        for st in steady_states(&p, power, p.detuning_bar_target) {
            let (ex, ea) = self_consistency_error(&p, power, &st);
            ss = ss.max(ex).max(ea);
        }

        let m_fg = rng.random_range(0.0..10.0);
        let k0 = kst_of_mass(&p, &s, 0.0);
        let k = kst_of_mass(&p, &s, m_fg / FG_PER_PG);
        let back = invert_mass(&p, &s, k, k0).map_err(|e| format!("{m_fg} fg: {e}"))? * FG_PER_PG;
        inv = inv.max((back - m_fg).abs());
    }

    for _ in 0..cases {
        let n = 64 * rng.random_range(1..40);
        let samples: Vec<Cx<f64>> = (0..n)
            .map(|_| Cx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let times: Vec<f64> = (0..n).map(|k| 200.0 + k as f64 * 0.07).collect();
        let traj = omitsense_core::Trajectory64 {
            x: vec![0.0; n],
            v: vec![0.0; n],
            beat_freq: TAU / (64.0 * 0.07),
            times,
            a: samples,
        };
        let sim = SimulationConfig {
            duration: 1e4,
            transient_cut: 200.0,
            ..SimulationConfig::default()
        };
        let spec: FieldSpectrum<f64> = spectrum(&traj, &sim).map_err(|e| e.to_string())?;
        pars = pars.max(parseval_mismatch(&spec));
    }

    for _ in 0..cases {
        // devices near the sensing point settle well within the cut
        let kappa = mhz_to_angular(rng.random_range(80.0..160.0));
        let p = SystemParams::sensing_device()
            .with_kappa(kappa)
            .critically_coupled()
            .with_pump_power(rng.random_range(4.0..10.0) * PW_PER_UW);
        let p = p.with_probe_power(p.pump_power * 1e-3);
        let mass = rng.random_range(0.0..6.0) / FG_PER_PG;
        let base = SimulationConfig {
            duration: 400.0,
            transient_cut: 200.0,
            ..SimulationConfig::default()
        };
        let tight = SimulationConfig {
            solver_rel_tol: base.solver_rel_tol / 2.0,
            solver_abs_tol: base.solver_abs_tol / 2.0,
            ..base
        };
        let d = reference_drives(&p).map_err(|e| e.to_string())?;
        let w = omitsense_core::mass_sensing::loaded_frequency(&p, mass);
        let peaks = |sim: &SimulationConfig<f64>| -> Result<(f64, f64), String> {
            let traj = simulate(&p, &d, w, sim).map_err(|e| e.to_string())?;
            Ok(extract_peaks(&spectrum(&traj, sim).map_err(|e| e.to_string())?, d.beat_freq))
        };
        let (h1, s1) = peaks(&base)?;
        let (h2, s2) = peaks(&tight)?;
        conv = conv.max(((h1 - h2) / h2).abs()).max(((s1 - s2) / s2).abs());
    }

    check(
        res <= 1e-9 && ss <= 1e-9 && inv <= 1e-6 && pars <= 1e-6 && conv <= 1e-4,
        format!(
            "{cases} cases each: sideband residual {res:.1e}, steady-state residual {ss:.1e}, \
             inversion round trip {inv:.1e} fg, Parseval {pars:.1e}, tolerance halving {conv:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("AC1 bistability window", ac1_bistability_window),
        ("AC2 steady-state root oracle", ac2_root_oracle),
        ("AC3 Stokes/homodyne equality", ac3_stokes_equals_homodyne),
        ("AC4 K_st structure", ac4_kst_structure),
        ("AC5 slope beta", ac5_beta),
        ("AC6 linearity threshold", ac6_linearity_threshold),
        ("AC7 settling time", ac7_settling),
        ("AC8 end-to-end sensing", ac8_end_to_end),
        ("AC9 simulation vs linear response", ac9_cross_validation),
        ("AC10 property suites", ac10_property_suites),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
