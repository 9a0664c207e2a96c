//! Nonlinear time-domain model under pump + probe drive, and the sensing
//! experiment built on it.
//!
//! Equations of motion in the frame rotating at the pump:
//!
//! ```text
//! da/dt = (iΔ − κ/2 − iGx) a + √κ_ex (ε₁ + ε_p e^(−iΩt))
//! d²x/dt² = −Γ_m dx/dt − Ω_m'² x − ħG|a|²/m
//! ```
//!
//! integrated from rest. The probe beat appears in a(t) as e^(−iΩt) (the
//! homodyne line) and the four-wave-mixing Stokes line as e^(+iΩt).

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::OmitError;
use crate::mass_sensing::{invert_mass, kst_of_mass, loaded_frequency, relative_intensity};
use crate::ode::{integrate_dense, Tolerances};
use crate::params::{DriveFields, SystemParams};
use crate::scalar::{Cx, Real};
use crate::steady_state::{operating_point, reference_detuning};
use crate::units::FG_PER_PG;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig<T> {
    /// ns.
    pub duration: T,
    /// Samples before this time (ns) are excluded from spectra.
    pub transient_cut: T,
    pub solver_rel_tol: T,
    pub solver_abs_tol: T,
    /// Record samples per beat period.
    pub record_stride: usize,
    /// Report amplitudes of the output field √κ_ex·a instead of the intracavity a.
    pub output_field: bool,
}

impl<T: Real> Default for SimulationConfig<T> {
    fn default() -> Self {
        SimulationConfig {
            duration: T::of(2000.0),
            transient_cut: T::of(200.0),
            solver_rel_tol: T::of(1e-9),
            solver_abs_tol: T::of(1e-12),
            record_stride: 64,
            output_field: false,
        }
    }
}

impl<T: Real> SimulationConfig<T> {
    pub fn validate(&self) -> Result<(), OmitError> {
        if !(self.transient_cut >= T::zero()) || !(self.duration > self.transient_cut) {
            return Err(OmitError::invalid("duration must exceed transient_cut"));
        }
        if !(self.solver_rel_tol > T::zero()) || !(self.solver_abs_tol > T::zero()) {
            return Err(OmitError::invalid("solver tolerances must be positive"));
        }
        if self.record_stride < 4 {
            return Err(OmitError::invalid("record_stride must be at least 4"));
        }
        Ok(())
    }

    /// Record spacing for beat frequency `beat`.
    pub fn record_step(&self, beat: T) -> T {
        T::two_pi() / (beat * T::of(self.record_stride as f64))
    }
}

/// Uniformly sampled solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    /// ns.
    pub times: Vec<T>,
    /// Intracavity amplitude, ns^(-1/2).
    pub a: Vec<Cx<T>>,
    /// pm.
    pub x: Vec<T>,
    /// pm/ns.
    pub v: Vec<T>,
    /// Ω used to build the record grid, rad/ns.
    pub beat_freq: T,
}

/// DFT of the analysis window, plus the window itself for projections.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum<T> {
    /// Angular frequency ν of each e^(iνt) component, ascending (rad/ns).
    /// The probe beat e^(−iΩt) sits at ν = −Ω.
    pub freqs: Vec<T>,
    /// Normalised so a tone c·e^(iνt) on a bin gives |amp| = |c|.
    pub amps: Vec<Cx<T>>,
    pub window_times: Vec<T>,
    pub window_samples: Vec<Cx<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingReport<T> {
    pub mass_true_fg: T,
    pub homodyne_amp: T,
    pub stokes_amp: T,
    /// homodyne_amp / stokes_amp.
    pub kst_sim: T,
    /// Linear-response K_st at the same loaded frequency.
    pub kst_analytic: T,
    /// Recovered against the simulated unloaded run.
    pub mass_recovered_fg: T,
    pub relative_error: T,
    /// Recovered against the analytic unloaded K_st (None if out of range).
    pub mass_recovered_uncalibrated_fg: Option<T>,
    pub relative_error_uncalibrated: Option<T>,
}

/// Pump and probe at the reference operating point, beat at Ω_m.
pub fn reference_drives<T: Real>(params: &SystemParams<T>) -> Result<DriveFields<T>, OmitError> {
    Ok(DriveFields::new(
        params.eps_pump(),
        params.eps_probe(),
        params.omega_m,
        reference_detuning(params, params.detuning_bar_target),
    )?)
}

/// Integrates the mean-field equations from rest and samples them on a grid
/// of `record_stride` points per beat period.
pub fn simulate<T: Real>(
    params: &SystemParams<T>,
    drives: &DriveFields<T>,
    omega_m_actual: T,
    sim: &SimulationConfig<T>,
) -> Result<Trajectory<T>, OmitError> {
    sim.validate()?;
    if !(omega_m_actual > T::zero()) {
        return Err(OmitError::invalid("mechanical frequency must be positive"));
    }
    if !(drives.beat_freq > T::zero()) {
        return Err(OmitError::invalid("beat frequency must be positive"));
    }
    let dt = sim.record_step(drives.beat_freq);
    let n = (sim.duration / dt).floor().to_f64_lossy() as usize;
    let times: Vec<T> = (0..=n).map(|k| T::of(k as f64) * dt).collect();

    let kh = params.kappa * T::half();
    let g = params.g_coupling;
    let sqrt_kex = params.kappa_ex.sqrt();
    let delta = drives.pump_detuning;
    let beat = drives.beat_freq;
    let w2 = omega_m_actual * omega_m_actual;
    let force = params.constants.hbar * g / params.m_eff;
    let gamma = params.gamma_m;
    let (e1, ep) = (drives.eps_pump, drives.eps_probe);

    let rhs = move |t: T, y: &[T; 4]| {
        let [u, w, x, v] = *y;
        let det = delta - g * x;
        let (s, c) = (beat * t).sin_cos();
        // (i det − κ/2)(u + i w) + √κ_ex (ε₁ + ε_p (cos − i sin))
        let du = -kh * u - det * w + sqrt_kex * (e1 + ep * c);
        let dw = det * u - kh * w - sqrt_kex * ep * s;
        let dv = -gamma * v - w2 * x - force * (u * u + w * w);
        [du, dw, v, dv]
    };
    let mut tol = Tolerances::new(sim.solver_rel_tol, sim.solver_abs_tol);
    // keep several steps per beat so the drive is always resolved
    tol.max_step = Some(T::two_pi() / (beat * T::of(8.0)));
    let ys = integrate_dense(rhs, T::zero(), [T::zero(); 4], &times, &tol).map_err(|e| OmitError::Divergence {
        t: e.time().to_f64_lossy(),
        reason: e.reason().to_string(),
    })?;
    if let Some(k) = ys.iter().position(|y| !y.iter().all(|v| v.is_finite())) {
        return Err(OmitError::Divergence {
            t: times[k].to_f64_lossy(),
            reason: "non-finite state".into(),
        });
    }
    Ok(Trajectory {
        a: ys.iter().map(|y| Cx::new(y[0], y[1])).collect(),
        x: ys.iter().map(|y| y[2]).collect(),
        v: ys.iter().map(|y| y[3]).collect(),
        times,
        beat_freq: beat,
    })
}

/// Index range of the analysis window: the longest whole number of beat
/// periods that ends at the last sample and starts after the transient cut.
pub fn analysis_window<T: Real>(traj: &Trajectory<T>, sim: &SimulationConfig<T>) -> Result<std::ops::Range<usize>, OmitError> {
    let len = traj.times.len();
    let first = traj
        .times
        .iter()
        .position(|&t| t >= sim.transient_cut)
        .unwrap_or(len);
    let periods = (len - first) / sim.record_stride;
    if periods == 0 {
        return Err(OmitError::invalid("analysis window shorter than one beat period"));
    }
    Ok(len - periods * sim.record_stride..len)
}

/// Normalised DFT of a(t) over the analysis window.
pub fn spectrum<T: Real + rustfft::FftNum>(
    traj: &Trajectory<T>,
    sim: &SimulationConfig<T>,
) -> Result<FieldSpectrum<T>, OmitError> {
    let window = analysis_window(traj, sim)?;
    let window_times = traj.times[window.clone()].to_vec();
    let window_samples = traj.a[window].to_vec();
    let n = window_samples.len();
    let dt = traj.times[1] - traj.times[0];

    let mut buf: Vec<rustfft::num_complex::Complex<T>> = window_samples
        .iter()
        .map(|z| rustfft::num_complex::Complex::new(z.re, z.im))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // the window starts at t0, not 0: remove the resulting bin phase
    let t0 = window_times[0];
    let inv_n = T::one() / T::of(n as f64);
    let dnu = T::two_pi() / (T::of(n as f64) * dt);
    let mut rows: Vec<(T, Cx<T>)> = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let signed = if k <= (n - 1) / 2 { k as f64 } else { k as f64 - n as f64 };
            let nu = T::of(signed) * dnu;
            let phase = Cx::from_polar(T::one(), -nu * t0);
            (nu, Cx::new(z.re, z.im) * inv_n * phase)
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequency"));
    Ok(FieldSpectrum {
        freqs: rows.iter().map(|r| r.0).collect(),
        amps: rows.iter().map(|r| r.1).collect(),
        window_times,
        window_samples,
    })
}

/// Complex amplitude of the e^(iνt) component of the window (inner product).
pub fn project<T: Real>(spec: &FieldSpectrum<T>, nu: T) -> Cx<T> {
    let n = T::of(spec.window_samples.len() as f64);
    spec.window_times
        .iter()
        .zip(&spec.window_samples)
        .map(|(&t, &a)| a * Cx::from_polar(T::one(), -nu * t))
        .sum::<Cx<T>>()
        / n
}

/// (homodyne, Stokes) magnitudes: the e^(−iΩt) and e^(+iΩt) components.
pub fn extract_peaks<T: Real>(spec: &FieldSpectrum<T>, omega_beat: T) -> (T, T) {
    (project(spec, -omega_beat).norm(), project(spec, omega_beat).norm())
}

/// Relative mismatch between spectral power and mean time-domain power.
pub fn parseval_mismatch<T: Real>(spec: &FieldSpectrum<T>) -> T {
    let spectral: T = spec.amps.iter().map(|z| z.norm_sqr()).sum();
    let n = T::of(spec.window_samples.len() as f64);
    let temporal: T = spec.window_samples.iter().map(|z| z.norm_sqr()).sum::<T>() / n;
    if temporal == T::zero() {
        return spectral;
    }
    (spectral - temporal).abs() / temporal
}

/// Time after which the field envelope (max |a| per beat period) stays
/// within `rel_tol` of its final value.
pub fn settling_time<T: Real>(traj: &Trajectory<T>, stride: usize, rel_tol: T) -> T {
    let env: Vec<(T, T)> = traj
        .a
        .chunks_exact(stride)
        .zip(traj.times.chunks_exact(stride))
        .map(|(a, t)| (t[0], a.iter().map(|z| z.norm()).fold(T::zero(), T::max)))
        .collect();
    let Some(&(_, last)) = env.last() else {
        return T::zero();
    };
    match env.iter().rposition(|&(_, e)| ((e - last) / last).abs() > rel_tol) {
        None => T::zero(),
        Some(i) if i + 1 < env.len() => env[i + 1].0,
        Some(i) => env[i].0,
    }
}

fn relative<T: Real>(recovered: T, truth: T) -> T {
    if truth == T::zero() {
        if recovered == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        (recovered - truth).abs() / truth
    }
}

/// The full measurement: one simulation per mass (the first must be 0, the
/// calibration run), K_st from the projected lines, mass recovered by
/// inverting K_st(m_d).
pub fn sense_mass_pipeline<T: Real + rustfft::FftNum>(
    params: &SystemParams<T>,
    masses_fg: &[T],
    sim: &SimulationConfig<T>,
) -> Result<Vec<SensingReport<T>>, OmitError> {
    match masses_fg.first() {
        Some(m) if *m == T::zero() => {}
        _ => return Err(OmitError::invalid("mass list must start with the unloaded run (0 fg)")),
    }
    if masses_fg.iter().any(|m| !(*m >= T::zero())) {
        return Err(OmitError::invalid("masses must be non-negative"));
    }
    let drives = reference_drives(params)?;
    let scale = if sim.output_field {
        params.kappa_ex.sqrt()
    } else {
        T::one()
    };
    let lines = masses_fg
        .par_iter()
        .map(|&m| {
            let w = loaded_frequency(params, m / T::of(FG_PER_PG));
            let traj = simulate(params, &drives, w, sim)?;
            let spec = spectrum(&traj, sim)?;
            let (h, s) = extract_peaks(&spec, drives.beat_freq);
            Ok((h * scale, s * scale))
        })
        .collect::<Result<Vec<_>, OmitError>>()?;

    let state = operating_point(params);
    let baseline = lines[0].0 / lines[0].1;
    let analytic_baseline = kst_of_mass(params, &state, T::zero());
    masses_fg
        .iter()
        .zip(&lines)
        .map(|(&m, &(h, s))| {
            let kst_sim = h / s;
            let w = loaded_frequency(params, m / T::of(FG_PER_PG));
            let kst_analytic = relative_intensity(params, &state, params.omega_m, w)?;
            let rec = invert_mass(params, &state, kst_sim, baseline)? * T::of(FG_PER_PG);
            let uncal = match invert_mass(params, &state, kst_sim, analytic_baseline) {
                Ok(v) => Some(v * T::of(FG_PER_PG)),
                Err(e) => {
                    // K ratio just under 1 at m = 0 is expected
                    if m > T::zero() {
                        log::warn!("uncalibrated inversion for {m} fg: {e}");
                    }
                    None
                }
            };
            Ok(SensingReport {
                mass_true_fg: m,
                homodyne_amp: h,
                stokes_amp: s,
                kst_sim,
                kst_analytic,
                mass_recovered_fg: rec,
                relative_error: relative(rec, m),
                mass_recovered_uncalibrated_fg: uncal,
                relative_error_uncalibrated: uncal.map(|u| relative(u, m)),
            })
        })
        .collect()
}
