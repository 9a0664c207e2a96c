//! Relative intensity K_st = |t_hom/t⁺| and its use as a mass readout.
//!
//! A deposited mass m_d lowers the mechanical frequency,
//! Ω_m' = Ω_m − m_d Ω_m/(2m_eff), while the probe beat stays at the unloaded
//! Ω_m. The homodyne line grows with the detuning Ω − Ω_m' and the Stokes
//! line does not, so K_st rises roughly linearly in m_d.
//!
//! Masses are in pg internally; slopes and the linearity scale are reported
//! per fg / in fg, as that is the natural scale of the problem.

use rayon::prelude::*;

use crate::error::OmitError;
use crate::linear_response::response_factor;
use crate::params::SystemParams;
use crate::scalar::{imag_unit, Cx, Real};
use crate::steady_state::{operating_point, SteadyState};
use crate::units::FG_PER_PG;

/// Finite-difference step for slopes and curvature, fg.
pub const DERIVATIVE_STEP_FG: f64 = 1e-3;

/// K_st versus shift or mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingCurve<T> {
    /// δΩ_m (rad/ns) or m_d (fg), as produced.
    pub abscissa: Vec<T>,
    pub kst: Vec<T>,
}

impl<T: Real> SensingCurve<T> {
    pub fn is_monotone_non_decreasing(&self) -> bool {
        self.kst.windows(2).all(|w| w[1] >= w[0])
    }

    /// Least-squares slope of K_st against the abscissa.
    pub fn slope(&self) -> T {
        let n = T::of(self.kst.len() as f64);
        let mx = self.abscissa.iter().copied().sum::<T>() / n;
        let my = self.kst.iter().copied().sum::<T>() / n;
        let (mut sxy, mut sxx) = (T::zero(), T::zero());
        for (x, y) in self.abscissa.iter().zip(&self.kst) {
            sxy += (*x - mx) * (*y - my);
            sxx += (*x - mx) * (*x - mx);
        }
        sxy / sxx
    }
}

/// β over a (κ, Gε₁) grid; `beta[i][j]` belongs to `kappa[i]`, `g_eps[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap<T> {
    pub kappa: Vec<T>,
    pub g_eps: Vec<T>,
    /// Per fg.
    pub beta: Vec<Vec<T>>,
}

/// Slope of K_st at m_d = 0 by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate<T> {
    /// Richardson-refined central difference of [`kst_of_mass`], per fg.
    pub per_fg: T,
    /// The printed closed form, in whatever units it carries.
    pub closed_form: T,
    /// |closed_form − per_fg| / |per_fg|.
    pub discrepancy: T,
}

pub fn shift_from_mass<T: Real>(params: &SystemParams<T>, m_d: T) -> T {
    m_d * params.omega_m / (T::two() * params.m_eff)
}

pub fn mass_from_shift<T: Real>(params: &SystemParams<T>, delta_omega_m: T) -> T {
    T::two() * params.m_eff * delta_omega_m / params.omega_m
}

/// Ω_m' = Ω_m − δΩ_m(m_d).
pub fn loaded_frequency<T: Real>(params: &SystemParams<T>, m_d: T) -> T {
    params.omega_m - shift_from_mass(params, m_d)
}

/// K_st = |1 + 1/(i f)| with f evaluated for a resonator at `omega_m_actual`
/// driven at beat `omega_probe`.
pub fn relative_intensity<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    omega_probe: T,
    omega_m_actual: T,
) -> Result<T, OmitError> {
    let loaded = params.with_omega_m(omega_m_actual);
    let f = response_factor(&loaded, state, omega_probe);
    if f.norm() == T::zero() || !f.norm().is_finite() {
        return Err(OmitError::UndefinedRatio);
    }
    Ok((Cx::new(T::one(), T::zero()) + (imag_unit::<T>() * f).inv()).norm())
}

fn bracket_product<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>, m_d: T) -> Cx<T> {
    let d = shift_from_mass(params, m_d);
    let w = params.omega_m;
    let g = params.g_coupling;
    let scale = params.m_eff / (params.constants.hbar * g * g * state.photons());
    let first = Cx::new(T::two() * w + d, -params.kappa * T::half());
    let second = Cx::new(T::two() * w * d - d * d, -w * params.gamma_m);
    first * second * scale
}

/// Resolved-sideband K_st(m_d) = |1 + Z(m_d)| at Δ̄ = −Ω_m, probing at Ω_m,
/// with Z = m/(ħG²|ā|²)·(2Ω_m + δ − iκ/2)(2Ω_mδ − δ² − iΩ_mΓ_m), δ = m_dΩ_m/(2m).
///
/// `m_d` in pg.
pub fn kst_of_mass<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>, m_d: T) -> T {
    (Cx::new(T::one(), T::zero()) + bracket_product(params, state, m_d)).norm()
}

/// |Z(m_d)| alone — the expression without the leading unity.
pub fn kst_of_mass_as_printed<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>, m_d: T) -> T {
    bracket_product(params, state, m_d).norm()
}

/// Central first difference with one Richardson step.
fn first_derivative<T: Real>(k: &impl Fn(T) -> T, x: T, h: T) -> T {
    let d = |h: T| (k(x + h) - k(x - h)) / (T::two() * h);
    (T::of(4.0) * d(h * T::half()) - d(h)) / T::of(3.0)
}

fn second_derivative<T: Real>(k: &impl Fn(T) -> T, x: T, h: T) -> T {
    let d = |h: T| (k(x + h) - T::two() * k(x) + k(x - h)) / (h * h);
    (T::of(4.0) * d(h * T::half()) - d(h)) / T::of(3.0)
}

/// The printed closed-form slope
/// mΩ²(γκ⁴ + 12γκ²Ω² − 4κ²Ω² + 16ΓΩ²) / (G²ε₁²ħκ_ex(κ² + 4Ω²)√(κ² + 16Ω²))
/// with γ read as Γ_m.
pub fn beta_closed_form<T: Real>(params: &SystemParams<T>) -> T {
    let (m, w, gm, k) = (params.m_eff, params.omega_m, params.gamma_m, params.kappa);
    let g = params.g_coupling;
    let eps = params.eps_pump();
    let (k2, w2) = (k * k, w * w);
    let num = m * w2 * (gm * k2 * k2 + T::of(12.0) * gm * k2 * w2 - T::of(4.0) * k2 * w2 + T::of(16.0) * gm * w2);
    let den = g * g * eps * eps * params.constants.hbar * params.kappa_ex * (k2 + T::of(4.0) * w2)
        * (k2 + T::of(16.0) * w2).sqrt();
    num / den
}

/// β = dK_st/dm_d at m_d = 0 (per fg); the finite difference is authoritative.
pub fn sensitivity_beta<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>) -> BetaEstimate<T> {
    let per_fg = first_derivative(
        &|m_fg: T| kst_of_mass(params, state, m_fg / T::of(FG_PER_PG)),
        T::zero(),
        T::of(DERIVATIVE_STEP_FG),
    );
    let closed_form = beta_closed_form(params);
    let discrepancy = ((closed_form - per_fg) / per_fg).abs();
    if !(discrepancy <= T::of(1e-3)) {
        log::debug!(
            "closed-form slope {closed_form} disagrees with finite difference {per_fg}/fg \
             (relative {discrepancy}); using the finite difference"
        );
    }
    BetaEstimate {
        per_fg,
        closed_form,
        discrepancy,
    }
}

/// r = |K'(x0)| / |K''(x0)| for an arbitrary response, in the units of `x`.
///
/// Curvature indistinguishable from rounding noise yields +∞.
pub fn linearity_ratio_of<T: Real>(k: impl Fn(T) -> T, x0: T, h: T) -> T {
    let d1 = first_derivative(&k, x0, h);
    let d2 = second_derivative(&k, x0, h);
    let noise = T::of(16.0) * T::epsilon() * k(x0).abs() / (h * h);
    if d2.abs() <= noise.max(T::of(1e-30)) {
        return T::infinity();
    }
    d1.abs() / d2.abs()
}

/// Mass scale (fg) at which K_st(m_d) departs from linear.
pub fn linearity_ratio<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>) -> T {
    linearity_ratio_of(
        |m_fg: T| kst_of_mass(params, state, m_fg / T::of(FG_PER_PG)),
        T::zero(),
        T::of(DERIVATIVE_STEP_FG),
    )
}

/// Mass (pg) whose K_st ratio to the unloaded value equals
/// `kst_measured / kst_baseline`.
pub fn invert_mass<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    kst_measured: T,
    kst_baseline: T,
) -> Result<T, OmitError> {
    if !(kst_baseline > T::zero()) || !kst_measured.is_finite() {
        return Err(OmitError::invalid("K_st baseline must be positive and finite"));
    }
    let ratio = kst_measured / kst_baseline;
    if ratio == T::one() {
        return Ok(T::zero());
    }
    let k0 = kst_of_mass(params, state, T::zero());
    let g = |m: T| kst_of_mass(params, state, m) / k0 - ratio;
    let (mut lo, mut hi) = (T::zero(), params.m_eff / T::of(10.0));
    let out_of_range = || OmitError::MassOutOfRange {
        ratio: ratio.to_f64_lossy(),
    };
    if g(lo) > T::zero() || g(hi) < T::zero() {
        return Err(out_of_range());
    }
    // seed from the linear estimate
    let beta_pg = sensitivity_beta(params, state).per_fg * T::of(FG_PER_PG);
    let guess = (ratio - T::one()) * k0 / beta_pg;
    if guess > lo && guess < hi {
        if g(guess) >= T::zero() {
            hi = guess;
        } else {
            lo = guess;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the sign change lies in [lo, hi]; pick the better end
    Ok(if g(hi).abs() < g(lo).abs() { hi } else { lo })
}

/// K_st (relative_intensity) versus downshift δΩ_m (rad/ns), probe at Ω_m.
pub fn kst_curve_vs_shift<T: Real>(
    params: &SystemParams<T>,
    state: &SteadyState<T>,
    shifts: &[T],
) -> Result<SensingCurve<T>, OmitError> {
    let kst = shifts
        .iter()
        .map(|&d| relative_intensity(params, state, params.omega_m, params.omega_m - d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SensingCurve {
        abscissa: shifts.to_vec(),
        kst,
    })
}

/// K_st ([`kst_of_mass`]) versus mass in fg.
pub fn kst_curve_vs_mass<T: Real>(params: &SystemParams<T>, state: &SteadyState<T>, masses_fg: &[T]) -> SensingCurve<T> {
    SensingCurve {
        abscissa: masses_fg.to_vec(),
        kst: masses_fg
            .iter()
            .map(|&m| kst_of_mass(params, state, m / T::of(FG_PER_PG)))
            .collect(),
    }
}

/// Pump power giving coupling-drive product `g_eps` (rad ns^-3/2 pm^-1) at fixed G.
pub fn with_g_eps<T: Real>(params: &SystemParams<T>, g_eps: T) -> SystemParams<T> {
    let eps = g_eps / params.g_coupling;
    let power = eps * eps * params.constants.photon_energy(params.pump_wavelength);
    params.with_pump_power(power)
}

/// β over κ × Gε₁, each cell at its own Δ̄ = target operating point.
pub fn sensitivity_map<T: Real>(
    params: &SystemParams<T>,
    kappas: &[T],
    g_eps: &[T],
    critical_coupling: bool,
) -> SensitivityMap<T> {
    let cells: Vec<(usize, usize)> = (0..kappas.len())
        .flat_map(|i| (0..g_eps.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<T> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = with_kappa_sweep(params, kappas[i], critical_coupling);
            let p = with_g_eps(&p, g_eps[j]);
            sensitivity_beta(&p, &operating_point(&p)).per_fg
        })
        .collect();
    let beta = values.chunks(g_eps.len().max(1)).map(|c| c.to_vec()).collect();
    SensitivityMap {
        kappa: kappas.to_vec(),
        g_eps: g_eps.to_vec(),
        beta,
    }
}

/// Linearity scale r (fg) for each κ.
pub fn linearity_sweep<T: Real>(params: &SystemParams<T>, kappas: &[T], critical_coupling: bool) -> Vec<T> {
    kappas
        .par_iter()
        .map(|&k| {
            let p = with_kappa_sweep(params, k, critical_coupling);
            linearity_ratio(&p, &operating_point(&p))
        })
        .collect()
}

/// κ replaced; κ_ex either tied to κ/2 or kept (and clipped to κ).
pub fn with_kappa_sweep<T: Real>(params: &SystemParams<T>, kappa: T, critical_coupling: bool) -> SystemParams<T> {
    let p = params.with_kappa(kappa);
    if critical_coupling {
        p.critically_coupled()
    } else {
        p.with_kappa_ex(params.kappa_ex.min(kappa))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_angular;
    use proptest::prelude::*;

    fn sensing() -> (SystemParams<f64>, SteadyState<f64>) {
        let p = SystemParams::sensing_device();
        let s = operating_point(&p);
        (p, s)
    }

    #[test]
    fn shift_mass_conversion() {
        let p = SystemParams::reference_device();
        assert_eq!(mass_from_shift(&p, 0.0), 0.0);
        // 5e5 rad/s = 5e-4 rad/ns → 1.42857 fg
        let m = mass_from_shift(&p, 5e-4) * FG_PER_PG;
        assert!((m - 1.428_571_428_6).abs() < 1e-9);
        assert_eq!(mass_from_shift(&p, 1e-3), 2.0 * mass_from_shift(&p, 5e-4));
        // 5.671 fg → 1.985e6 rad/s
        let d = shift_from_mass(&p, 5.671e-3) * 1e9;
        assert!((d - 1.985e6).abs() < 1e3);
        // positive mass lowers the resonance
        assert!(loaded_frequency(&p, 1e-3) < p.omega_m);
    }

    #[test]
    fn unloaded_intensity_is_near_unity() {
        for p in [SystemParams::reference_device(), SystemParams::sensing_device()] {
            let s = operating_point(&p);
            let k = relative_intensity(&p, &s, p.omega_m, p.omega_m).unwrap();
            assert!((k - 1.0).abs() < 1e-2, "{k}");
            let k25 = kst_of_mass(&p, &s, 0.0);
            assert!((k25 - k).abs() < 1e-2 * k);
        }
    }

    #[test]
    fn no_pump_is_undefined() {
        let (p, mut s) = sensing();
        s.a_bar = Cx::new(0.0, 0.0);
        assert_eq!(
            relative_intensity(&p, &s, p.omega_m, p.omega_m),
            Err(OmitError::UndefinedRatio)
        );
    }

    #[test]
    fn strong_response_limit() {
        let (p, s) = sensing();
        let mut strong = s;
        strong.a_bar = s.a_bar * 1e4;
        let k = relative_intensity(&p, &strong, p.omega_m, p.omega_m).unwrap();
        assert!((k - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mass_formula_tracks_shifted_response() {
        let (p, s) = sensing();
        for i in 0..=20 {
            let m = i as f64 * 0.5e-3;
            let a = kst_of_mass(&p, &s, m);
            let b = relative_intensity(&p, &s, p.omega_m, loaded_frequency(&p, m)).unwrap();
            assert!((a - b).abs() < 1e-2 * b, "{m}: {a} {b}");
        }
    }

    #[test]
    fn printed_mass_formula_is_the_inverse_response() {
        let (p, s) = sensing();
        let z = kst_of_mass_as_printed(&p, &s, 0.0);
        let f = response_factor(&p, &s, p.omega_m);
        assert!((z - 1.0 / f.norm()).abs() < 1e-2 * z);
        assert!(z < 0.1);
    }

    #[test]
    fn kst_increases_with_mass() {
        let (p, s) = sensing();
        let masses: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        assert!(kst_curve_vs_mass(&p, &s, &masses).is_monotone_non_decreasing());
    }

    #[test]
    fn larger_kappa_gives_larger_kst() {
        let base = SystemParams::reference_device();
        let d = mhz_to_angular(0.2);
        let k = |mhz: f64| {
            let p = base.with_kappa(mhz_to_angular(mhz));
            let s = operating_point(&p);
            relative_intensity(&p, &s, p.omega_m, p.omega_m - d).unwrap()
        };
        assert!(k(200.0) > k(100.0));
    }

    #[test]
    fn beta_matches_local_secant() {
        let (p, s) = sensing();
        let b = sensitivity_beta(&p, &s);
        let h = 1e-4; // fg
        let secant = (kst_of_mass(&p, &s, h / FG_PER_PG) - kst_of_mass(&p, &s, -h / FG_PER_PG)) / (2.0 * h);
        assert!((b.per_fg - secant).abs() < 1e-6 * secant.abs());
        assert!(b.per_fg > 0.05 && b.per_fg < 0.1, "{}", b.per_fg);
        assert!(b.closed_form.is_finite());
    }

    #[test]
    fn differentiator_on_polynomials() {
        let r = linearity_ratio_of(|m: f64| 1.0 + 0.3 * m, 0.0, 1e-3);
        assert!(r.is_infinite());
        let (a, b) = (0.07, 2e-4);
        let r = linearity_ratio_of(|m: f64| 1.0 + a * m + b * m * m, 0.0, 1e-3);
        assert!((r - a / (2.0 * b)).abs() < 1e-3 * a / (2.0 * b), "{r}");
    }

    #[test]
    fn inversion_round_trip_on_test_masses() {
        let (p, s) = sensing();
        let k0 = kst_of_mass(&p, &s, 0.0);
        assert_eq!(invert_mass(&p, &s, k0, k0).unwrap(), 0.0);
        for m_fg in [1.428, 2.857, 4.287, 5.671] {
            let k = kst_of_mass(&p, &s, m_fg / FG_PER_PG);
            let back = invert_mass(&p, &s, k, k0).unwrap() * FG_PER_PG;
            assert!((back - m_fg).abs() < 1e-6, "{m_fg} -> {back}");
        }
    }

    #[test]
    fn inversion_out_of_range() {
        let (p, s) = sensing();
        let k0 = kst_of_mass(&p, &s, 0.0);
        assert!(matches!(
            invert_mass(&p, &s, 1e6 * k0, k0),
            Err(OmitError::MassOutOfRange { .. })
        ));
        assert!(matches!(
            invert_mass(&p, &s, 0.5 * k0, k0),
            Err(OmitError::MassOutOfRange { .. })
        ));
    }

    #[test]
    fn map_is_finite_and_positive() {
        let p = SystemParams::sensing_device();
        let ge0 = p.g_coupling * p.eps_pump();
        let kappas: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|g| g * std::f64::consts::TAU).collect();
        let map = sensitivity_map(&p, &kappas, &[ge0 * 0.5, ge0, ge0 * 2.0], false);
        assert_eq!(map.beta.len(), 3);
        for row in &map.beta {
            assert_eq!(row.len(), 3);
            assert!(row.iter().all(|b| b.is_finite() && *b > 0.0));
        }
    }

    #[test]
    fn g_eps_sets_pump_power() {
        let p = SystemParams::sensing_device();
        let ge = p.g_coupling * p.eps_pump();
        let q = with_g_eps(&p, 2.0 * ge);
        assert!((q.pump_power / p.pump_power - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn shift_round_trip(m in 0.0f64..0.01) {
            let p = SystemParams::sensing_device();
            let back = mass_from_shift(&p, shift_from_mass(&p, m));
            prop_assert!((back - m).abs() <= f64::EPSILON * m.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn inversion_round_trip(m_fg in 0.0f64..10.0) {
            let (p, s) = sensing();
            let k0 = kst_of_mass(&p, &s, 0.0);
            let k = kst_of_mass(&p, &s, m_fg / FG_PER_PG);
            let back = invert_mass(&p, &s, k, k0).unwrap() * FG_PER_PG;
            prop_assert!((back - m_fg).abs() < 1e-6);
        }
    }
}
