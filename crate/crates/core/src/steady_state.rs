//! Mean-field steady states, their stability, and pump-power scans.
//!
//! The pump laser is fixed relative to the cavity by requiring the effective
//! detuning Δ̄ = Δ − G x̄ to equal a target value at the reference pump power
//! of [`SystemParams`]. At any other power the same bare detuning Δ is kept
//! and the static radiation-pressure balance
//!
//! ```text
//! m Ω_m² x̄ = −ħ G |ā|²,    ā = √κ_ex ε₁ / (−i(Δ − G x̄) + κ/2)
//! ```
//!
//! is a cubic in the frequency pull y = G x̄:
//! y³ − 2Δ y² + (Δ² + κ²/4) y + ħG²κ_ex ε₁²/(mΩ_m²) = 0.

use rayon::prelude::*;

use crate::cubic::solve_monic_cubic;
use crate::params::{drive_amplitude_with, SystemParams};
use crate::scalar::{imag_unit, re, Cx, Real};

/// Steady intracavity amplitude and mechanical displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    /// ā in the pump-rotating frame, ns^(-1/2) (photon number |ā|²).
    pub a_bar: Cx<T>,
    /// x̄ in pm.
    pub x_bar: T,
    /// Δ̄ = ω₁ − (ω_c + G x̄), rad/ns.
    pub delta_bar: T,
    pub stable: bool,
}

impl<T: Real> SteadyState<T> {
    /// Intracavity photon number |ā|².
    pub fn photons(&self) -> T {
        self.a_bar.norm_sqr()
    }
}

/// Steady states as a function of pump power.
#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityCurve<T> {
    pub points: Vec<(T, Vec<SteadyState<T>>)>,
}

impl<T: Real> BistabilityCurve<T> {
    /// First and last power with three coexisting solutions.
    pub fn multistable_range(&self) -> Option<(T, T)> {
        let mut it = self.points.iter().filter(|(_, s)| s.len() >= 3).map(|(p, _)| *p);
        let first = it.next()?;
        Some((first, it.last().unwrap_or(first)))
    }

    pub fn max_abs_displacement(&self) -> T {
        self.points
            .iter()
            .flat_map(|(_, s)| s.iter().map(|st| st.x_bar.abs()))
            .fold(T::zero(), T::max)
    }
}

/// Reference steady state with Δ̄ = `delta_bar_target` exactly at `params.pump_power`.
///
/// This is explicit: |ā|² follows from the fixed Δ̄, and x̄ from |ā|².
pub fn operating_point_at<T: Real>(params: &SystemParams<T>, delta_bar_target: T) -> SteadyState<T> {
    let eps = params.eps_pump();
    let a_bar = amplitude(params, eps, delta_bar_target);
    let x_bar = displacement_for(params, a_bar.norm_sqr());
    let mut state = SteadyState {
        a_bar,
        x_bar,
        delta_bar: delta_bar_target,
        stable: false,
    };
    state.stable = classify_stability(params, &state);
    state
}

/// [`operating_point_at`] with the configured Δ̄ target.
pub fn operating_point<T: Real>(params: &SystemParams<T>) -> SteadyState<T> {
    operating_point_at(params, params.detuning_bar_target)
}

/// Bare pump detuning Δ = Δ̄_target + G x̄_ref.
pub fn reference_detuning<T: Real>(params: &SystemParams<T>, delta_bar_target: T) -> T {
    let reference = operating_point_at(params, delta_bar_target);
    delta_bar_target + params.g_coupling * reference.x_bar
}

fn amplitude<T: Real>(params: &SystemParams<T>, eps: T, delta_bar: T) -> Cx<T> {
    re(params.kappa_ex.sqrt() * eps) / (-imag_unit::<T>() * delta_bar + re(params.kappa * T::half()))
}

/// x̄ = −ħG|ā|²/(m Ω_m²).
fn displacement_for<T: Real>(params: &SystemParams<T>, photons: T) -> T {
    -params.constants.hbar * params.g_coupling * photons
        / (params.m_eff * params.omega_m * params.omega_m)
}

/// All real steady states at `pump_power`, ordered by |x̄|.
pub fn steady_states<T: Real>(
    params: &SystemParams<T>,
    pump_power: T,
    delta_bar_target: T,
) -> Vec<SteadyState<T>> {
    let detuning = reference_detuning(params, delta_bar_target);
    steady_states_at_detuning(params, pump_power, detuning)
}

/// All real steady states for a fixed bare detuning Δ.
pub fn steady_states_at_detuning<T: Real>(
    params: &SystemParams<T>,
    pump_power: T,
    detuning: T,
) -> Vec<SteadyState<T>> {
    let eps = drive_amplitude_with(&params.constants, pump_power, params.pump_wavelength)
        .expect("validated wavelength");
    let g = params.g_coupling;
    let kappa_half = params.kappa * T::half();

    let (pulls, double) = if g == T::zero() {
        (vec![T::zero()], None)
    } else {
        let load = params.constants.hbar * g * g * params.kappa_ex * eps * eps
            / (params.m_eff * params.omega_m * params.omega_m);
        let roots = solve_monic_cubic(
            -T::two() * detuning,
            detuning * detuning + kappa_half * kappa_half,
            load,
        );
        (roots.roots, roots.double)
    };

    let mut states: Vec<(bool, SteadyState<T>)> = pulls
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let delta_bar = detuning - y;
            let a_bar = amplitude(params, eps, delta_bar);
            let x_bar = if g == T::zero() {
                T::zero()
            } else {
                y / g
            };
            let mut st = SteadyState {
                a_bar,
                x_bar,
                delta_bar,
                stable: false,
            };
            let marginal = double == Some(i);
            st.stable = !marginal && classify_stability(params, &st);
            (marginal, st)
        })
        .collect();
    states.sort_by(|a, b| {
        a.1.x_bar
            .abs()
            .partial_cmp(&b.1.x_bar.abs())
            .expect("finite displacement")
    });
    states.into_iter().map(|(_, s)| s).collect()
}

/// Relative violation of the two steady-state relations.
pub fn self_consistency_error<T: Real>(params: &SystemParams<T>, pump_power: T, state: &SteadyState<T>) -> (T, T) {
    let eps = drive_amplitude_with(&params.constants, pump_power, params.pump_wavelength)
        .expect("validated wavelength");
    let x_expect = displacement_for(params, state.photons());
    let a_expect = amplitude(params, eps, state.delta_bar);
    let rel = |err: T, scale: T| {
        if scale == T::zero() {
            err
        } else {
            err / scale
        }
    };
    (
        rel((state.x_bar - x_expect).abs(), x_expect.abs()),
        rel((state.a_bar - a_expect).norm(), a_expect.norm()),
    )
}

/// Jacobian of the mean-field equations about `state`, variables
/// (Re δa, Im δa, δx, δẋ).
pub fn jacobian<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>) -> [[T; 4]; 4] {
    let kh = params.kappa * T::half();
    let d = state.delta_bar;
    let g = params.g_coupling;
    let (u, v) = (state.a_bar.re, state.a_bar.im);
    let force = T::two() * params.constants.hbar * g / params.m_eff;
    let z = T::zero();
    [
        [-kh, -d, g * v, z],
        [d, -kh, -g * u, z],
        [z, z, z, T::one()],
        [
            -force * u,
            -force * v,
            -params.omega_m * params.omega_m,
            -params.gamma_m,
        ],
    ]
}

/// Coefficients (a1, a2, a3, a4) of det(λI − A) = λ⁴ + a1λ³ + a2λ² + a3λ + a4
/// (Faddeev–LeVerrier).
pub fn characteristic_polynomial<T: Real>(a: &[[T; 4]; 4]) -> [T; 4] {
    let mul = |x: &[[T; 4]; 4], y: &[[T; 4]; 4]| {
        let mut out = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        out
    };
    let mut coeffs = [T::zero(); 4];
    let mut m = [[T::zero(); 4]; 4];
    let mut c_prev = T::one();
    for k in 1..=4 {
        let mut am = mul(a, &m);
        for (i, row) in am.iter_mut().enumerate() {
            row[i] += c_prev;
        }
        m = am;
        let amk = mul(a, &m);
        let trace: T = (0..4).map(|i| amk[i][i]).sum();
        let c = -trace / T::of(k as f64);
        coeffs[k - 1] = c;
        c_prev = c;
    }
    coeffs
}

/// Routh–Hurwitz test: every root of λ⁴ + a1λ³ + a2λ² + a3λ + a4 has Re < 0.
pub fn hurwitz_stable<T: Real>(c: &[T; 4]) -> bool {
    let [a1, a2, a3, a4] = *c;
    let z = T::zero();
    a1 > z && a2 > z && a3 > z && a4 > z && a1 * a2 - a3 > z && a1 * a2 * a3 - a3 * a3 - a1 * a1 * a4 > z
}

/// True iff all eigenvalues of the linearisation about `state` have negative real part.
pub fn classify_stability<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>) -> bool {
    hurwitz_stable(&characteristic_polynomial(&jacobian(params, state)))
}

/// Steady states for each pump power (bare detuning fixed at the reference).
pub fn bistability_scan<T: Real>(params: &SystemParams<T>, powers: &[T]) -> BistabilityCurve<T> {
    let detuning = reference_detuning(params, params.detuning_bar_target);
    let points = powers
        .par_iter()
        .map(|&p| (p, steady_states_at_detuning(params, p, detuning)))
        .collect();
    BistabilityCurve { points }
}

/// Stable state with the smallest |x̄|.
pub fn lowest_stable_branch<T: Real>(states: &[SteadyState<T>]) -> Option<SteadyState<T>> {
    states.iter().copied().find(|s| s.stable)
}
