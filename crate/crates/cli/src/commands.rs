//! One function per subcommand: read its section, compute, write tables.

use std::f64::consts::TAU;
use std::fs;

use serde_json::json;

use omitsense_core::config::Dimension;
use omitsense_core::linear_response::spectrum_sweep;
use omitsense_core::mass_sensing::{
    kst_curve_vs_mass, kst_curve_vs_shift, linearity_sweep, loaded_frequency, sensitivity_beta, sensitivity_map, with_kappa_sweep,
    SensingCurve,
};
use omitsense_core::steady_state::{bistability_scan, operating_point};
use omitsense_core::time_domain::{
    extract_peaks, reference_drives, sense_mass_pipeline, settling_time, simulate, spectrum,
};
use omitsense_core::units::{angular_to_mhz, FG_PER_PG, PW_PER_UW};
use omitsense_core::{build_params, ConfigDocument, SystemParams};

use crate::error::CliError;
use crate::output::{num, Flags, Manifest, Outputs};
use crate::plot::{chart, Series};
use crate::settings::{ascending, grid, reject_unknown_sections, required_grid, solver};
use crate::{CliResult, CommandKind, Common};

/// What a command reports into the manifest.
struct Run {
    settings: serde_json::Value,
    results: serde_json::Value,
}

struct Ctx<'a> {
    doc: &'a ConfigDocument,
    params: SystemParams<f64>,
    common: &'a Common,
}

pub fn run(kind: CommandKind, common: &Common) -> CliResult<Vec<std::path::PathBuf>> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let doc = ConfigDocument::parse(&text)?;
    reject_unknown_sections(&doc)?;
    let mut params = build_params::<f64>(&doc)?;
    if common.critical_coupling {
        params = params.critically_coupled();
    }
    let ctx = Ctx {
        doc: &doc,
        params,
        common,
    };
    let mut out = Outputs::new(&common.out)?;
    let run = match kind {
        CommandKind::Steady => steady(&ctx, &mut out)?,
        CommandKind::Spectrum => response_spectrum(&ctx, &mut out)?,
        CommandKind::Kst => kst(&ctx, &mut out)?,
        CommandKind::Beta => beta(&ctx, &mut out)?,
        CommandKind::Linearity => linearity(&ctx, &mut out)?,
        CommandKind::Simulate => simulate_one(&ctx, &mut out)?,
        CommandKind::Sense => sense(&ctx, &mut out)?,
    };
    out.finish(Manifest {
        command: command_name(kind).into(),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
        config_path: common.config.display().to_string(),
        config_text: text,
        flags: Flags {
            plot: common.plot,
            critical_coupling: common.critical_coupling,
            output_field: common.output_field,
        },
        resolved_device: ctx.params.to_config_text(),
        settings: run.settings,
        results: run.results,
        files: vec![],
    })
}

fn command_name(kind: CommandKind) -> &'static str {
    match kind {
        CommandKind::Steady => "steady",
        CommandKind::Spectrum => "spectrum",
        CommandKind::Kst => "kst",
        CommandKind::Beta => "beta",
        CommandKind::Linearity => "linearity",
        CommandKind::Simulate => "simulate",
        CommandKind::Sense => "sense",
    }
}

fn ghz(w: f64) -> f64 {
    w / TAU
}

/// Curve label: κ/2π in MHz without trailing noise.
fn mhz_label(w: f64) -> String {
    let v = (angular_to_mhz(w) * 1e3).round() / 1e3;
    num(v)
}

fn kappa_grid(ctx: &Ctx, section: &str) -> CliResult<Vec<f64>> {
    let s = ctx.doc.section(section);
    let k = grid(&s, "kappa", Dimension::Frequency)?.unwrap_or_else(|| vec![ctx.params.kappa]);
    if k.iter().any(|&v| !(v > 0.0)) {
        return Err(CliError::Config(format!("[{section}]: kappa values must be positive")));
    }
    Ok(k)
}

fn steady(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("steady");
    s.reject_unknown(&["powers", "powers_range", "points"])?;
    let powers = required_grid(&s, "powers", Dimension::Power)?;
    if powers.iter().any(|&p| !(p >= 0.0)) {
        return Err(CliError::Config("[steady]: powers must be non-negative".into()));
    }
    let curve = bistability_scan(&ctx.params, &powers);

    let mut rows = Vec::new();
    for (p, states) in &curve.points {
        for (i, st) in states.iter().enumerate() {
            rows.push(vec![
                num(p / PW_PER_UW),
                i.to_string(),
                num(st.x_bar),
                num(st.a_bar.re),
                num(st.a_bar.im),
                st.stable.to_string(),
            ]);
        }
    }
    out.csv(
        "steady.csv",
        &["power_uW", "branch_index", "x_bar_pm", "re_a_bar", "im_a_bar", "stable"],
        rows,
    )?;

    if ctx.common.plot {
        let pick = |stable: bool| -> Vec<(f64, f64)> {
            curve
                .points
                .iter()
                .flat_map(|(p, st)| st.iter().filter(move |s| s.stable == stable).map(move |s| (p / PW_PER_UW, s.x_bar)))
                .collect()
        };
        chart(
            &out.file("steady.svg"),
            "Steady-state displacement",
            "pump power (uW)",
            "x_bar (pm)",
            &[Series::scatter("stable", pick(true)), Series::scatter("unstable", pick(false))],
        )?;
    }

    let range = curve.multistable_range().map(|(a, b)| [a / PW_PER_UW, b / PW_PER_UW]);
    Ok(Run {
        settings: json!({ "powers_pW": powers }),
        results: json!({
            "multistable_range_uW": range,
            "max_abs_x_bar_pm": curve.max_abs_displacement(),
        }),
    })
}

fn response_spectrum(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("spectrum");
    s.reject_unknown(&["dprime", "dprime_range", "points"])?;
    let grid = required_grid(&s, "dprime", Dimension::Frequency)?;
    ascending("dprime", &grid)?;
    let p = &ctx.params;
    let state = operating_point(p);
    let sp = spectrum_sweep(p, &state, &grid)?;
    if sp.regime_warning {
        log::warn!("|t-| exceeds the linear-response regime bound somewhere on the grid");
    }

    let rows = (0..grid.len()).map(|i| {
        let mut r = vec![num(angular_to_mhz(sp.delta_prime[i]))];
        for z in [sp.t_plus[i], sp.t_minus[i], sp.t_hom[i]] {
            r.extend([num(z.re), num(z.im), num(z.norm())]);
        }
        r
    });
    out.csv(
        "spectrum.csv",
        &[
            "dprime_MHz", "re_t_plus", "im_t_plus", "abs_t_plus", "re_t_minus", "im_t_minus", "abs_t_minus",
            "re_t_hom", "im_t_hom", "abs_t_hom",
        ],
        rows,
    )?;

    if ctx.common.plot {
        let x: Vec<f64> = sp.delta_prime.iter().map(|&d| angular_to_mhz(d)).collect();
        let line = |v: &[omitsense_core::Cx<f64>]| x.iter().copied().zip(v.iter().map(|z| z.norm())).collect();
        chart(
            &out.file("spectrum.svg"),
            "OMIT transmission",
            "probe offset dprime/2pi (MHz)",
            "|t|",
            &[
                Series::line("|t_hom|", line(&sp.t_hom)),
                Series::line("|t+|", line(&sp.t_plus)),
                Series::line("|t-|", line(&sp.t_minus)),
            ],
        )?;
    }

    Ok(Run {
        settings: json!({ "dprime_rad_per_ns": grid }),
        results: json!({
            "regime_warning": sp.regime_warning,
            "a_bar": [state.a_bar.re, state.a_bar.im],
            "x_bar_pm": state.x_bar,
        }),
    })
}

fn kst(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("kst");
    s.reject_unknown(&["kappa", "kappa_range", "shifts", "shifts_range", "masses", "masses_range", "points"])?;
    let kappas = kappa_grid(ctx, "kst")?;
    let shifts = grid(&s, "shifts", Dimension::Frequency)?;
    let masses = grid(&s, "masses", Dimension::Mass)?;
    let (axis, column, values) = match (shifts, masses) {
        (Some(v), None) => ("shift", "shift_MHz", v),
        (None, Some(v)) => ("mass", "mass_fg", v),
        _ => {
            return Err(CliError::Config(
                "[kst]: give exactly one abscissa, `shifts` or `masses`".into(),
            ))
        }
    };

    let mut series = Vec::new();
    let mut summary = Vec::new();
    for &k in &kappas {
        let p = with_kappa_sweep(&ctx.params, k, ctx.common.critical_coupling);
        p.validate()?;
        let state = operating_point(&p);
        let curve: SensingCurve<f64> = if axis == "shift" {
            kst_curve_vs_shift(&p, &state, &values)?
        } else {
            let fg: Vec<f64> = values.iter().map(|m| m * FG_PER_PG).collect();
            kst_curve_vs_mass(&p, &state, &fg)
        };
        let x: Vec<f64> = if axis == "shift" {
            curve.abscissa.iter().map(|&d| angular_to_mhz(d)).collect()
        } else {
            curve.abscissa.clone()
        };
        let name = format!("kst_kappa_{}MHz.csv", mhz_label(k));
        out.csv(
            &name,
            &[column, "kst"],
            x.iter().zip(&curve.kst).map(|(a, b)| vec![num(*a), num(*b)]),
        )?;
        summary.push(json!({
            "kappa_over_2pi_MHz": angular_to_mhz(k),
            "file": name,
            "monotone": curve.is_monotone_non_decreasing(),
            "slope_per_rad_per_ns_or_per_fg": curve.slope(),
        }));
        series.push(Series::line(format!("kappa/2pi = {} MHz", mhz_label(k)), x.into_iter().zip(curve.kst).collect()));
    }

    if ctx.common.plot {
        chart(&out.file("kst.svg"), "Relative intensity K_st", column, "K_st", &series)?;
    }
    Ok(Run {
        settings: json!({ "kappa_rad_per_ns": kappas, "axis": axis, "abscissa_internal": values }),
        results: json!({ "curves": summary }),
    })
}

fn beta(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("beta");
    s.reject_unknown(&["kappa", "kappa_range", "g_eps", "g_eps_range", "points"])?;
    let kappas = kappa_grid(ctx, "beta")?;
    let g_eps = required_grid(&s, "g_eps", Dimension::Dimensionless)?;
    if g_eps.iter().any(|&g| !(g > 0.0)) {
        return Err(CliError::Config("[beta]: g_eps values must be positive".into()));
    }
    if ctx.params.g_coupling == 0.0 {
        return Err(CliError::Config("[beta]: g_eps sweep needs a non-zero g_coupling".into()));
    }
    for &k in &kappas {
        with_kappa_sweep(&ctx.params, k, ctx.common.critical_coupling).validate()?;
    }
    let map = sensitivity_map(&ctx.params, &kappas, &g_eps, ctx.common.critical_coupling);
    let device_beta = sensitivity_beta(&ctx.params, &operating_point(&ctx.params));
    if device_beta.discrepancy > 1e-3 {
        log::warn!(
            "closed-form beta {} disagrees with the finite-difference slope {}/fg at the device point \
             (relative {:.3}); the finite difference is reported",
            device_beta.closed_form,
            device_beta.per_fg,
            device_beta.discrepancy
        );
    }
    let mut rows = Vec::new();
    for (i, &k) in map.kappa.iter().enumerate() {
        for (j, &g) in map.g_eps.iter().enumerate() {
            rows.push(vec![num(ghz(k)), num(g), num(map.beta[i][j])]);
        }
    }
    out.csv("beta_map.csv", &["kappa_GHz", "g_eps", "beta_per_fg"], rows)?;

    if ctx.common.plot {
        let series: Vec<Series> = map
            .g_eps
            .iter()
            .enumerate()
            .map(|(j, g)| {
                Series::line(
                    format!("G eps = {}", num(*g)),
                    map.kappa.iter().enumerate().map(|(i, &k)| (ghz(k), map.beta[i][j])).collect(),
                )
            })
            .collect();
        chart(&out.file("beta_map.svg"), "Sensitivity beta", "kappa/2pi (GHz)", "beta (1/fg)", &series)?;
    }
    Ok(Run {
        settings: json!({ "kappa_rad_per_ns": kappas, "g_eps": g_eps }),
        results: json!({
            "beta_per_fg": map.beta,
            "device_beta_per_fg": device_beta.per_fg,
            "device_beta_closed_form": device_beta.closed_form,
        }),
    })
}

fn linearity(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("linearity");
    s.reject_unknown(&["kappa", "kappa_range", "points"])?;
    let kappas = kappa_grid(ctx, "linearity")?;
    for &k in &kappas {
        with_kappa_sweep(&ctx.params, k, ctx.common.critical_coupling).validate()?;
    }
    let r = linearity_sweep(&ctx.params, &kappas, ctx.common.critical_coupling);
    out.csv(
        "linearity.csv",
        &["kappa_GHz", "r_fg"],
        kappas.iter().zip(&r).map(|(k, r)| vec![num(ghz(*k)), num(*r)]),
    )?;
    if ctx.common.plot {
        chart(
            &out.file("linearity.svg"),
            "Linearity scale",
            "kappa/2pi (GHz)",
            "log10 r (fg)",
            &[Series::line("r", kappas.iter().zip(&r).map(|(k, r)| (ghz(*k), r.log10())).collect())],
        )?;
    }
    // JSON has no infinity
    let r_json: Vec<Option<f64>> = r.iter().map(|v| v.is_finite().then_some(*v)).collect();
    Ok(Run {
        settings: json!({ "kappa_rad_per_ns": kappas }),
        results: json!({ "r_fg": r_json }),
    })
}

fn simulate_one(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("simulate");
    s.reject_unknown(&["mass"])?;
    let mass_pg = s.scalar("mass", Dimension::Mass)?.unwrap_or(0.0);
    if !(mass_pg >= 0.0) {
        return Err(CliError::Config("[simulate]: mass must be non-negative".into()));
    }
    let sim = solver(ctx.doc, ctx.common.output_field)?;
    let p = &ctx.params;
    let drives = reference_drives(p)?;
    let w = loaded_frequency(p, mass_pg);
    let traj = simulate(p, &drives, w, &sim)?;
    let spec = spectrum(&traj, &sim)?;
    let scale = if sim.output_field { p.kappa_ex.sqrt() } else { 1.0 };

    out.csv(
        "trajectory.csv",
        &["t_ns", "re_a", "im_a", "abs_a", "x_pm"],
        traj.times.iter().zip(&traj.a).zip(&traj.x).map(|((t, a), x)| {
            let a = a * scale;
            vec![num(*t), num(a.re), num(a.im), num(a.norm()), num(*x)]
        }),
    )?;
    out.csv(
        "field_spectrum.csv",
        &["offset_GHz", "abs_amp"],
        spec.freqs.iter().zip(&spec.amps).map(|(f, a)| vec![num(ghz(*f)), num(a.norm() * scale)]),
    )?;

    let (h, st) = extract_peaks(&spec, drives.beat_freq);
    let settle = settling_time(&traj, sim.record_stride, 0.01);
    if ctx.common.plot {
        chart(
            &out.file("trajectory.svg"),
            "Intracavity field",
            "t (ns)",
            "|a|",
            &[Series::line("|a|", traj.times.iter().zip(&traj.a).map(|(t, a)| (*t, a.norm() * scale)).collect())],
        )?;
        chart(
            &out.file("field_spectrum.svg"),
            "Field spectrum",
            "offset from pump (GHz)",
            "log10 |amp|",
            &[Series::line(
                "|amp|",
                spec.freqs.iter().zip(&spec.amps).map(|(f, a)| (ghz(*f), (a.norm() * scale).log10())).collect(),
            )],
        )?;
    }
    Ok(Run {
        settings: json!({
            "mass_pg": mass_pg,
            "omega_m_loaded_rad_per_ns": w,
            "solver": sim_json(&sim),
        }),
        results: json!({
            "settling_time_ns": settle,
            "homodyne_amp": h * scale,
            "stokes_amp": st * scale,
            "kst_sim": h / st,
        }),
    })
}

fn sim_json(sim: &omitsense_core::SimulationConfig64) -> serde_json::Value {
    json!({
        "duration_ns": sim.duration,
        "transient_cut_ns": sim.transient_cut,
        "rel_tol": sim.solver_rel_tol,
        "abs_tol": sim.solver_abs_tol,
        "record_stride": sim.record_stride,
        "output_field": sim.output_field,
    })
}

fn sense(ctx: &Ctx, out: &mut Outputs) -> CliResult<Run> {
    let s = ctx.doc.section("sense");
    s.reject_unknown(&["masses", "masses_range", "points"])?;
    let mut masses: Vec<f64> = required_grid(&s, "masses", Dimension::Mass)?
        .iter()
        .map(|m| m * FG_PER_PG)
        .collect();
    if masses.iter().any(|&m| !(m >= 0.0)) {
        return Err(CliError::Config("[sense]: masses must be non-negative".into()));
    }
    // the unloaded calibration run always comes first
    if masses[0] != 0.0 {
        masses.insert(0, 0.0);
    }
    let sim = solver(ctx.doc, ctx.common.output_field)?;
    let reports = sense_mass_pipeline(&ctx.params, &masses, &sim)?;

    out.csv(
        "report.csv",
        &["mass_true_fg", "kst_sim", "mass_recovered_fg", "rel_error"],
        reports.iter().map(|r| {
            vec![num(r.mass_true_fg), num(r.kst_sim), num(r.mass_recovered_fg), num(r.relative_error)]
        }),
    )?;
    for r in &reports {
        println!(
            "mass {} fg: K_st {:.6} (analytic {:.6}), recovered {:.4} fg, error {:.3}%",
            r.mass_true_fg,
            r.kst_sim,
            r.kst_analytic,
            r.mass_recovered_fg,
            100.0 * r.relative_error
        );
    }
    if ctx.common.plot {
        chart(
            &out.file("report.svg"),
            "Sensing: simulated versus analytic K_st",
            "mass (fg)",
            "K_st",
            &[
                Series::scatter("simulated", reports.iter().map(|r| (r.mass_true_fg, r.kst_sim)).collect()),
                Series::line("analytic", reports.iter().map(|r| (r.mass_true_fg, r.kst_analytic)).collect()),
            ],
        )?;
    }
    let details: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "mass_true_fg": r.mass_true_fg,
                "homodyne_amp": r.homodyne_amp,
                "stokes_amp": r.stokes_amp,
                "kst_sim": r.kst_sim,
                "kst_analytic": r.kst_analytic,
                "mass_recovered_fg": r.mass_recovered_fg,
                "mass_recovered_uncalibrated_fg": r.mass_recovered_uncalibrated_fg,
            })
        })
        .collect();
    Ok(Run {
        settings: json!({ "masses_fg": masses, "solver": sim_json(&sim) }),
        results: json!({ "runs": details }),
    })
}
