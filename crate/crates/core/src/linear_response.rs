//! Linearised pump–probe response about a steady state.
//!
//! With δa = A⁻e^(−iΩt) + A⁺e^(iΩt) and δx = X e^(−iΩt) + c.c., the
//! e^(−iΩt) balance of the mean-field equations is the 3×3 system
//!
//! ```text
//! D₋ A⁻          + iGā X  = √κ_ex s_p        D₋ = −i(Δ̄+Ω) + κ/2
//!       D₊ A⁺*   − iGā* X = 0                D₊ =  i(Δ̄−Ω) + κ/2
//! ħGā* A⁻ + ħGā A⁺* + X/χ = 0                χ  = 1/(m(Ω_m² − Ω² − iΩΓ_m))
//! ```
//!
//! which is solved directly; closed forms in terms of f = ħG²|ā|²χ/D₊ are
//! kept as cross-checks.

use rayon::prelude::*;

use crate::error::OmitError;
use crate::params::SystemParams;
use crate::scalar::{imag_unit, re, Cx, Real};
use crate::steady_state::SteadyState;

/// |t⁻| above this is flagged as outside the linear-response regime.
pub const REGIME_WARNING_TRANSMISSION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandSolution<T> {
    /// A⁻, intracavity component at the probe frequency.
    pub a_minus: Cx<T>,
    /// (A⁺)*, Stokes component.
    pub a_plus_conj: Cx<T>,
    /// X, mechanical amplitude (pm).
    pub x_amp: Cx<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmissions<T> {
    pub t_plus: Cx<T>,
    pub t_minus: Cx<T>,
    pub t_hom: Cx<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpectrum<T> {
    /// Δ' = Ω − Ω_m (rad/ns), ascending.
    pub delta_prime: Vec<T>,
    pub t_plus: Vec<Cx<T>>,
    pub t_minus: Vec<Cx<T>>,
    pub t_hom: Vec<Cx<T>>,
    /// Any |t⁻| above [`REGIME_WARNING_TRANSMISSION`].
    pub regime_warning: bool,
}

/// χ(Ω) = 1/(m(Ω_m² − Ω² − iΩΓ_m)).
pub fn mech_susceptibility<T: Real>(params: &SystemParams<T>, omega: T) -> Cx<T> {
    let w = params.omega_m;
    Cx::new(
        params.m_eff * (w * w - omega * omega),
        -params.m_eff * omega * params.gamma_m,
    )
    .inv()
}

fn d_minus<T: Real>(params: &SystemParams<T>, delta_bar: T, omega: T) -> Cx<T> {
    Cx::new(params.kappa * T::half(), -(delta_bar + omega))
}

fn d_plus<T: Real>(params: &SystemParams<T>, delta_bar: T, omega: T) -> Cx<T> {
    Cx::new(params.kappa * T::half(), delta_bar - omega)
}

/// f(Ω) = ħG²|ā|² χ(Ω) / (i(Δ̄−Ω) + κ/2).
///
/// The denominator is the Stokes-row coefficient; with it the closed forms
/// below solve the 3×3 system exactly.
pub fn response_factor<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>, omega: T) -> Cx<T> {
    coupling_strength(params, state) * mech_susceptibility(params, omega)
        / d_plus(params, state.delta_bar, omega)
}

/// f with the denominator i(Δ̄+Ω) + κ/2 as it is commonly printed.
///
/// Not self-consistent with the sideband equations; kept for comparison.
pub fn response_factor_as_printed<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    omega: T,
) -> Cx<T> {
    let den = Cx::new(params.kappa * T::half(), state.delta_bar + omega);
    coupling_strength(params, state) * mech_susceptibility(params, omega) / den
}

fn coupling_strength<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>) -> Cx<T> {
    let g = params.g_coupling;
    re(params.constants.hbar * g * g * state.photons())
}

fn system_matrix<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    omega: T,
) -> [[Cx<T>; 3]; 3] {
    let i = imag_unit::<T>();
    let g = params.g_coupling;
    let hg = params.constants.hbar * g;
    let a = state.a_bar;
    let zero = Cx::new(T::zero(), T::zero());
    [
        [d_minus(params, state.delta_bar, omega), zero, i * a * g],
        [zero, d_plus(params, state.delta_bar, omega), -i * a.conj() * g],
        [a.conj() * hg, a * hg, mech_susceptibility(params, omega).inv()],
    ]
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve3<T: Real>(mut m: [[Cx<T>; 3]; 3], mut b: [Cx<T>; 3]) -> Result<[Cx<T>; 3], OmitError> {
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|z| z.norm()))
        .fold(T::zero(), T::max);
    if scale == T::zero() || !scale.is_finite() {
        return Err(OmitError::Singular("degenerate sideband matrix"));
    }
    let tiny = scale * T::epsilon() * T::of(16.0);
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&p, &q| m[p][col].norm().partial_cmp(&m[q][col].norm()).expect("finite"))
            .expect("non-empty");
        if m[pivot][col].norm() <= tiny {
            return Err(OmitError::Singular("sideband determinant underflow"));
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, &src) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *dst -= factor * src;
            }
            let sub = factor * b[col];
            b[row] -= sub;
        }
    }
    let mut x = [Cx::new(T::zero(), T::zero()); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Direct solve of the sideband equations for probe amplitude `probe_amp`
/// (ns^(-1/2)) at beat frequency `omega`.
pub fn solve_sidebands<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    probe_amp: T,
    omega: T,
) -> Result<SidebandSolution<T>, OmitError> {
    if !(probe_amp > T::zero()) {
        return Err(OmitError::invalid("probe amplitude must be positive"));
    }
    let m = system_matrix(params, state, omega);
    let zero = Cx::new(T::zero(), T::zero());
    let rhs = [re(params.kappa_ex.sqrt() * probe_amp), zero, zero];
    let [a_minus, a_plus_conj, x_amp] = solve3(m, rhs)?;
    Ok(SidebandSolution {
        a_minus,
        a_plus_conj,
        x_amp,
    })
}

/// Largest row residual of `sol`, relative to the largest term in that row.
pub fn residual<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    probe_amp: T,
    omega: T,
    sol: &SidebandSolution<T>,
) -> T {
    let m = system_matrix(params, state, omega);
    let x = [sol.a_minus, sol.a_plus_conj, sol.x_amp];
    let rhs = [re(params.kappa_ex.sqrt() * probe_amp), Cx::new(T::zero(), T::zero()), Cx::new(T::zero(), T::zero())];
    let mut worst = T::zero();
    for r in 0..3 {
        let terms: Vec<Cx<T>> = (0..3).map(|k| m[r][k] * x[k]).collect();
        let total: Cx<T> = terms.iter().copied().sum::<Cx<T>>() - rhs[r];
        let scale = terms
            .iter()
            .map(|z| z.norm())
            .fold(rhs[r].norm(), T::max);
        if scale > T::zero() {
            worst = worst.max(total.norm() / scale);
        }
    }
    worst
}

/// Closed-form A⁻ and (A⁺)* in terms of f.
///
/// (A⁺)* carries the gauge phase ā*/ā, which is 1 for real ā.
pub fn closed_form_sidebands<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    probe_amp: T,
    omega: T,
) -> (Cx<T>, Cx<T>) {
    let i = imag_unit::<T>();
    let f = response_factor(params, state, omega);
    let drive = re(params.kappa_ex.sqrt() * probe_amp);
    let den = d_minus(params, state.delta_bar, omega) + f * T::two() * state.delta_bar;
    let a_minus = (Cx::new(T::one(), T::zero()) + i * f) * drive / den;
    let phase = if state.photons() > T::zero() {
        state.a_bar.conj() / state.a_bar
    } else {
        Cx::new(T::one(), T::zero())
    };
    let a_plus_conj = -i * f * phase * drive / den;
    (a_minus, a_plus_conj)
}

/// Largest relative deviation of the closed forms from the direct solve.
pub fn closed_form_deviation<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    probe_amp: T,
    omega: T,
) -> Result<T, OmitError> {
    let sol = solve_sidebands(params, state, probe_amp, omega)?;
    let (am, ap) = closed_form_sidebands(params, state, probe_amp, omega);
    let rel = |a: Cx<T>, b: Cx<T>| {
        let s = a.norm().max(b.norm());
        if s == T::zero() {
            T::zero()
        } else {
            (a - b).norm() / s
        }
    };
    Ok(rel(sol.a_minus, am).max(rel(sol.a_plus_conj, ap)))
}

/// Output-normalised t⁺, t⁻ = 1 − √κ_ex A⁻/s_p and t_hom = 1 − t⁻.
pub fn transmissions<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    omega: T,
) -> Result<Transmissions<T>, OmitError> {
    // linear in the probe: unit amplitude
    let sol = solve_sidebands(params, state, T::one(), omega)?;
    let k = params.kappa_ex.sqrt();
    let t_hom = sol.a_minus * k;
    Ok(Transmissions {
        t_plus: sol.a_plus_conj * k,
        t_minus: Cx::new(T::one(), T::zero()) - t_hom,
        t_hom,
    })
}

/// Transmissions at Ω = Ω_m + Δ' for each grid point.
pub fn spectrum_sweep<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    delta_prime_grid: &[T],
) -> Result<ResponseSpectrum<T>, OmitError> {
    if delta_prime_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OmitError::invalid("detuning grid must be strictly ascending"));
    }
    let rows = delta_prime_grid
        .par_iter()
        .map(|&dp| transmissions(params, state, params.omega_m + dp))
        .collect::<Result<Vec<_>, _>>()?;
    let limit = T::of(REGIME_WARNING_TRANSMISSION);
    let regime_warning = rows.iter().any(|t| t.t_minus.norm() > limit);
    if regime_warning {
        log::warn!("|t-| exceeds {REGIME_WARNING_TRANSMISSION}: probe response outside the linear regime");
    }
    Ok(ResponseSpectrum {
        delta_prime: delta_prime_grid.to_vec(),
        t_plus: rows.iter().map(|t| t.t_plus).collect(),
        t_minus: rows.iter().map(|t| t.t_minus).collect(),
        t_hom: rows.iter().map(|t| t.t_hom).collect(),
        regime_warning,
    })
}
