//! Device and drive parameters in internal units.

use crate::config::{ConfigDocument, ConfigError, Dimension, Section};
use crate::scalar::Real;
use crate::units::{PhysicalConstants, PM_PER_NM, PW_PER_UW};

/// Largest allowed probe/pump power ratio (perturbative probe).
pub const MAX_PROBE_PUMP_POWER_RATIO: f64 = 1e-2;
/// Largest allowed probe/pump amplitude ratio.
pub const MAX_PROBE_PUMP_AMPLITUDE_RATIO: f64 = 0.1;
/// Pump wavelength used when the config does not give one, pm.
pub const DEFAULT_PUMP_WAVELENGTH_PM: f64 = 532.0 * PM_PER_NM;

/// Keys accepted in the device block.
pub const DEVICE_KEYS: &[&str] = &[
    "m_eff",
    "omega_m",
    "gamma_m",
    "kappa",
    "kappa_ex",
    "g_coupling",
    "pump_wavelength",
    "pump_power",
    "probe_power",
    "detuning_bar_target",
];

/// Optomechanical device plus drive settings.
///
/// Frequencies are angular (rad/ns), lengths pm, masses pg, powers pW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// Effective resonator mass.
    pub m_eff: T,
    /// Mechanical frequency Ω_m.
    pub omega_m: T,
    /// Mechanical damping Γ_m.
    pub gamma_m: T,
    /// Total cavity decay κ.
    pub kappa: T,
    /// External (waveguide) coupling κ_ex.
    pub kappa_ex: T,
    /// Optomechanical frequency pull G, rad/ns per pm.
    pub g_coupling: T,
    pub pump_wavelength: T,
    pub pump_power: T,
    pub probe_power: T,
    /// Effective pump detuning Δ̄ at the reference operating point.
    pub detuning_bar_target: T,
    pub constants: PhysicalConstants<T>,
}

impl<T: Real> SystemParams<T> {
    /// Checks the parameter invariants, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invariant(key, format!("{key} must be positive")))
            }
        };
        positive("m_eff", self.m_eff)?;
        positive("omega_m", self.omega_m)?;
        positive("gamma_m", self.gamma_m)?;
        positive("kappa", self.kappa)?;
        positive("kappa_ex", self.kappa_ex)?;
        positive("pump_wavelength", self.pump_wavelength)?;
        if self.kappa_ex > self.kappa {
            return Err(ConfigError::invariant(
                "kappa_ex",
                "kappa_ex must not exceed kappa (intrinsic loss would be negative)",
            ));
        }
        if !self.g_coupling.is_finite() || !self.detuning_bar_target.is_finite() {
            return Err(ConfigError::invariant("g_coupling", "values must be finite"));
        }
        if !(self.pump_power >= T::zero()) || !self.pump_power.is_finite() {
            return Err(ConfigError::invariant("pump_power", "pump_power must be non-negative"));
        }
        if !(self.probe_power >= T::zero()) || !self.probe_power.is_finite() {
            return Err(ConfigError::invariant(
                "probe_power",
                "probe_power must be non-negative",
            ));
        }
        if self.probe_power > T::of(MAX_PROBE_PUMP_POWER_RATIO) * self.pump_power {
            return Err(ConfigError::invariant(
                "probe_power",
                format!(
                    "probe_power must be at most {MAX_PROBE_PUMP_POWER_RATIO} x pump_power \
                     for the linearised response to hold"
                ),
            ));
        }
        Ok(())
    }

    /// Intrinsic loss κ₀ = κ − κ_ex.
    pub fn kappa_intrinsic(&self) -> T {
        self.kappa - self.kappa_ex
    }

    /// Pump amplitude ε₁ = sqrt(P₁/ħω₁).
    pub fn eps_pump(&self) -> T {
        drive_amplitude_with(&self.constants, self.pump_power, self.pump_wavelength)
            .expect("validated wavelength")
    }

    /// Probe amplitude ε_p, evaluated at the pump wavelength (the two differ by Ω_m/ω₁ ~ 1e-6).
    pub fn eps_probe(&self) -> T {
        drive_amplitude_with(&self.constants, self.probe_power, self.pump_wavelength)
            .expect("validated wavelength")
    }

    pub fn with_kappa(mut self, kappa: T) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_kappa_ex(mut self, kappa_ex: T) -> Self {
        self.kappa_ex = kappa_ex;
        self
    }

    /// Locks κ_ex = κ/2.
    pub fn critically_coupled(mut self) -> Self {
        self.kappa_ex = self.kappa * T::half();
        self
    }

    pub fn with_omega_m(mut self, omega_m: T) -> Self {
        self.omega_m = omega_m;
        self
    }

    pub fn with_pump_power(mut self, p: T) -> Self {
        self.pump_power = p;
        self
    }

    pub fn with_probe_power(mut self, p: T) -> Self {
        self.probe_power = p;
        self
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> SystemParams<U> {
        let c = |x: T| U::of(x.to_f64_lossy());
        SystemParams {
            m_eff: c(self.m_eff),
            omega_m: c(self.omega_m),
            gamma_m: c(self.gamma_m),
            kappa: c(self.kappa),
            kappa_ex: c(self.kappa_ex),
            g_coupling: c(self.g_coupling),
            pump_wavelength: c(self.pump_wavelength),
            pump_power: c(self.pump_power),
            probe_power: c(self.probe_power),
            detuning_bar_target: c(self.detuning_bar_target),
            constants: PhysicalConstants {
                hbar: c(self.constants.hbar),
                c_light: c(self.constants.c_light),
            },
        }
    }

    /// Serialises the parameters as a device block that [`build_params`] reads back.
    pub fn to_config_text(&self) -> String {
        let f = |x: T| x.to_f64_lossy();
        format!(
            "m_eff = {} pg\nomega_m = {} rad/ns\ngamma_m = {} rad/ns\nkappa = {} rad/ns\n\
             kappa_ex = {} rad/ns\ng_coupling = {} rad/ns/pm\npump_wavelength = {} pm\n\
             pump_power = {} uW\nprobe_power = {} uW\ndetuning_bar_target = {} rad/ns\n",
            f(self.m_eff),
            f(self.omega_m),
            f(self.gamma_m),
            f(self.kappa),
            f(self.kappa_ex),
            f(self.g_coupling),
            f(self.pump_wavelength),
            f(self.pump_power) / PW_PER_UW,
            f(self.probe_power) / PW_PER_UW,
            f(self.detuning_bar_target),
        )
    }
}

impl SystemParams<f64> {
    /// Device of the reference design: 2 pg resonator at Ω_m = 1.4 rad/ns,
    /// Γ_m/2π = 35 kHz, κ/2π = 50 MHz, κ_ex/2π = 25 MHz, G = −485 GHz/nm,
    /// 7.3 μW pump and 7.3 nW probe at 532 nm, Δ̄ = −Ω_m.
    pub fn reference_device() -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            m_eff: 2.0,
            omega_m: 1.4,
            gamma_m: tau * 35e-6,
            kappa: tau * 50e-3,
            kappa_ex: tau * 25e-3,
            g_coupling: -0.485,
            pump_wavelength: DEFAULT_PUMP_WAVELENGTH_PM,
            pump_power: 7.3 * PW_PER_UW,
            probe_power: 7.3e-3 * PW_PER_UW,
            detuning_bar_target: -1.4,
            constants: PhysicalConstants::internal(),
        }
    }

    /// Time-domain sensing configuration: κ/2π = 100 MHz, critically coupled.
    pub fn sensing_device() -> Self {
        Self::reference_device()
            .with_kappa(std::f64::consts::TAU * 100e-3)
            .critically_coupled()
    }
}

/// Drive fields in the frame rotating at the pump frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveFields<T> {
    /// ε₁, taken real and non-negative (phase gauge).
    pub eps_pump: T,
    /// ε_p (also written s_p).
    pub eps_probe: T,
    /// Ω = ω_p − ω₁.
    pub beat_freq: T,
    /// Bare pump detuning Δ = ω₁ − ω_c.
    pub pump_detuning: T,
}

impl<T: Real> DriveFields<T> {
    pub fn new(eps_pump: T, eps_probe: T, beat_freq: T, pump_detuning: T) -> Result<Self, ConfigError> {
        if !(eps_pump >= T::zero()) || !(eps_probe >= T::zero()) {
            return Err(ConfigError::invariant("eps_pump", "drive amplitudes must be non-negative"));
        }
        if eps_probe > T::of(MAX_PROBE_PUMP_AMPLITUDE_RATIO) * eps_pump {
            return Err(ConfigError::invariant(
                "eps_probe",
                "probe amplitude must be at most 0.1 x pump amplitude",
            ));
        }
        if !beat_freq.is_finite() || !pump_detuning.is_finite() {
            return Err(ConfigError::invariant("beat_freq", "drive frequencies must be finite"));
        }
        Ok(Self {
            eps_pump,
            eps_probe,
            beat_freq,
            pump_detuning,
        })
    }
}

/// Drive amplitude sqrt(P/ħω) for power (pW) at vacuum wavelength (pm), in ns^(-1/2).
pub fn drive_amplitude<T: Real>(power: T, wavelength: T) -> Result<T, ConfigError> {
    drive_amplitude_with(&PhysicalConstants::internal(), power, wavelength)
}

pub fn drive_amplitude_with<T: Real>(
    constants: &PhysicalConstants<T>,
    power: T,
    wavelength: T,
) -> Result<T, ConfigError> {
    if !(wavelength > T::zero()) || !wavelength.is_finite() {
        return Err(ConfigError::invariant("pump_wavelength", "wavelength must be positive"));
    }
    if !(power >= T::zero()) {
        return Err(ConfigError::invariant("pump_power", "power must be non-negative"));
    }
    Ok((power / constants.photon_energy(wavelength)).sqrt())
}

/// Reads the device block of `config` into validated [`SystemParams`].
pub fn build_params<T: Real>(config: &ConfigDocument) -> Result<SystemParams<T>, ConfigError> {
    params_from_section(&config.device)
}

pub fn params_from_section<T: Real>(s: &Section) -> Result<SystemParams<T>, ConfigError> {
    s.reject_unknown(DEVICE_KEYS)?;
    let req = |k, d| s.require(k, d).map(T::of);
    let omega_m = req("omega_m", Dimension::Frequency)?;
    let params = SystemParams {
        m_eff: req("m_eff", Dimension::Mass)?,
        omega_m,
        gamma_m: req("gamma_m", Dimension::Frequency)?,
        kappa: req("kappa", Dimension::Frequency)?,
        kappa_ex: req("kappa_ex", Dimension::Frequency)?,
        g_coupling: req("g_coupling", Dimension::Coupling)?,
        pump_wavelength: s
            .scalar("pump_wavelength", Dimension::Length)?
            .map_or(T::of(DEFAULT_PUMP_WAVELENGTH_PM), T::of),
        pump_power: req("pump_power", Dimension::Power)?,
        probe_power: req("probe_power", Dimension::Power)?,
        detuning_bar_target: s
            .scalar("detuning_bar_target", Dimension::Frequency)?
            .map_or(-omega_m, T::of),
        constants: PhysicalConstants::internal(),
    };
    params.validate()?;
    Ok(params)
}
