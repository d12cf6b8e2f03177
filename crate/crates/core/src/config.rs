//! Run configuration: a flat, commented key-value file (TOML scalars) with
//! strict unknown-key rejection, defaults equal to the published experimental
//! settings, and a content hash tying output files to the generating config.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{default_nv_axis, radius_for_expected_spins, FROZEN_CORE_THRESHOLD, NATURAL_ABUNDANCE};
use crate::hamiltonian::{resonance_frequency, SystemSpec, GAMMA_E, GAMMA_N_13C, LARMOR_DEFAULT, ZFS_DEFAULT};
use crate::instrument::{BathParams, LaserModel, ResonatorModel, RESET_FIDELITY_DEFAULT, RESONATOR_HWHM_DEFAULT};
use crate::protocols::{
    EngineParams, IseSweep, NovelSequence, Protocol, SweepDirection, T1RHO_DEFAULT_US,
};
use crate::{Error, Result};

/// Which transfer protocol a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Novel,
    Ise,
}

/// Flat run configuration. Every field has a default equal to the published
/// value where one exists; unknown keys in a config file are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub protocol: ProtocolKind,

    // system
    pub zfs_mhz: f64,
    pub gamma_e_mhz_per_t: f64,
    pub gamma_n_mhz_per_t: f64,
    pub nuclear_larmor_mhz: f64,
    pub theta_deg: f64,
    pub rabi_mhz: f64,
    pub secular_shift: f64,

    // NOVEL settings
    pub lock_rabi_mhz: f64,
    pub lock_duration_us: f64,
    pub t1rho_us: f64,

    // ISE sweep settings
    pub sweep_rate_mhz_per_us: f64,
    pub sweep_range_mhz: f64,
    pub sweep_center_offset_mhz: f64,
    pub sweep_direction: SweepDirection,

    // bath
    pub bath_spins: usize,
    pub abundance: f64,
    pub frozen_core_threshold_mhz: f64,
    pub diffusion_linewidth_mhz: f64,
    pub diffusion_cutoff_nm: f64,

    // cycle engine
    pub n_cycles: usize,
    pub diffusion_window_ms: f64,
    pub t1n_s: f64,
    pub stochastic: bool,

    // instrument
    pub resonator_hwhm_mhz: f64,
    pub resonator_power_lorentzian: bool,
    pub reset_fidelity: f64,
    pub laser_pump_rate_khz: f64,

    // run control
    pub master_seed: u64,
    pub n_seeds: usize,
    pub angles_deg: Vec<f64>,
    pub include_per_spin: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolKind::Ise,
            zfs_mhz: ZFS_DEFAULT,
            gamma_e_mhz_per_t: GAMMA_E,
            gamma_n_mhz_per_t: GAMMA_N_13C,
            nuclear_larmor_mhz: LARMOR_DEFAULT,
            theta_deg: 0.0,
            rabi_mhz: 1.0,
            secular_shift: 0.5,
            lock_rabi_mhz: LARMOR_DEFAULT,
            lock_duration_us: 200.0,
            t1rho_us: T1RHO_DEFAULT_US,
            sweep_rate_mhz_per_us: 0.3,
            sweep_range_mhz: 100.0,
            sweep_center_offset_mhz: 40.0,
            sweep_direction: SweepDirection::Down,
            bath_spins: 500,
            abundance: NATURAL_ABUNDANCE,
            frozen_core_threshold_mhz: FROZEN_CORE_THRESHOLD,
            diffusion_linewidth_mhz: 0.002,
            diffusion_cutoff_nm: 1.5,
            n_cycles: 200,
            diffusion_window_ms: 10.0,
            t1n_s: 300.0,
            stochastic: false,
            resonator_hwhm_mhz: RESONATOR_HWHM_DEFAULT,
            resonator_power_lorentzian: false,
            reset_fidelity: RESET_FIDELITY_DEFAULT,
            laser_pump_rate_khz: 1.0,
            master_seed: 1,
            n_seeds: 3,
            angles_deg: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            include_per_spin: false,
        }
    }
}

impl RunConfig {
    /// Parse a config file; unknown keys and type errors are reported with
    /// the line and column from the TOML parser.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nuclear_larmor_mhz <= 0.0 {
            return Err(Error::Config(format!("nuclear_larmor_mhz must be positive, got {}", self.nuclear_larmor_mhz)));
        }
        if self.gamma_n_mhz_per_t <= 0.0 || self.gamma_e_mhz_per_t <= 0.0 {
            return Err(Error::Config("gyromagnetic ratios must be positive".into()));
        }
        if !(0.0..=90.0).contains(&self.theta_deg) {
            return Err(Error::Config(format!("theta_deg must lie in [0, 90], got {}", self.theta_deg)));
        }
        if self.n_cycles == 0 {
            return Err(Error::Config("n_cycles must be at least 1".into()));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.bath_spins == 0 {
            return Err(Error::Config("bath_spins must be at least 1".into()));
        }
        if !(0.0 < self.abundance && self.abundance <= 1.0) {
            return Err(Error::Config(format!("abundance must lie in (0, 1], got {}", self.abundance)));
        }
        if !(0.0..=1.0).contains(&self.reset_fidelity) {
            return Err(Error::Config(format!("reset_fidelity must lie in [0, 1], got {}", self.reset_fidelity)));
        }
        if self.resonator_hwhm_mhz <= 0.0 {
            return Err(Error::Config(format!("resonator_hwhm_mhz must be positive (inf disables), got {}", self.resonator_hwhm_mhz)));
        }
        if self.sweep_range_mhz <= 0.0 || self.sweep_rate_mhz_per_us <= 0.0 {
            return Err(Error::Config("sweep range and rate must be positive".into()));
        }
        if self.lock_rabi_mhz <= 0.0 || self.lock_duration_us < 0.0 {
            return Err(Error::Config("lock Rabi must be positive and lock duration non-negative".into()));
        }
        self.system_spec()?.validate()?;
        Ok(())
    }

    /// Static field magnitude reproducing the configured Larmor frequency, T.
    pub fn field_t(&self) -> f64 {
        self.nuclear_larmor_mhz / self.gamma_n_mhz_per_t
    }

    /// System parameters at the configured angle (on-resonance drive).
    pub fn system_spec(&self) -> Result<SystemSpec> {
        let mut spec = SystemSpec {
            zfs: self.zfs_mhz,
            gamma_e: self.gamma_e_mhz_per_t,
            gamma_n: self.gamma_n_mhz_per_t,
            field: self.field_t(),
            theta: self.theta_deg.to_radians(),
            rabi: self.rabi_mhz,
            drive_freq: 0.0,
            a_z: 0.0,
            a_x: 0.0,
            secular_shift: self.secular_shift,
        };
        spec.drive_freq = resonance_frequency(&spec)?;
        Ok(spec)
    }

    /// Resonance frequency of the on-axis (θ = 0) transition, MHz; the
    /// resonator center and the sweep-center offset are referenced to it.
    pub fn on_axis_resonance(&self) -> Result<f64> {
        let mut spec = self.system_spec()?;
        spec.theta = 0.0;
        resonance_frequency(&spec)
    }

    pub fn ise_sweep(&self) -> Result<IseSweep> {
        let sweep = IseSweep {
            center_freq: self.on_axis_resonance()? + self.sweep_center_offset_mhz,
            range: self.sweep_range_mhz,
            rate: self.sweep_rate_mhz_per_us,
            rabi: self.rabi_mhz,
            direction: self.sweep_direction,
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn novel_sequence(&self) -> Result<NovelSequence> {
        let seq = NovelSequence {
            lock_rabi: self.lock_rabi_mhz,
            lock_duration: self.lock_duration_us,
            laser_continuous: true,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn protocol_instance(&self) -> Result<Protocol> {
        Ok(match self.protocol {
            ProtocolKind::Novel => Protocol::Novel(self.novel_sequence()?),
            ProtocolKind::Ise => Protocol::Ise(self.ise_sweep()?),
        })
    }

    pub fn bath_params(&self) -> BathParams {
        BathParams {
            radius_nm: radius_for_expected_spins(self.bath_spins, self.abundance),
            abundance: self.abundance,
            nv_axis: default_nv_axis(),
            frozen_threshold_mhz: self.frozen_core_threshold_mhz,
        }
    }

    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            n_cycles: self.n_cycles,
            diffusion_window_ms: self.diffusion_window_ms,
            t1n_s: self.t1n_s,
            reset_fidelity: self.reset_fidelity,
            t1rho_us: self.t1rho_us,
            diffusion_linewidth: self.diffusion_linewidth_mhz,
            diffusion_cutoff_nm: self.diffusion_cutoff_nm,
            stochastic_seed: if self.stochastic { Some(self.master_seed.wrapping_add(1)) } else { None },
        }
    }

    pub fn resonator(&self) -> Result<ResonatorModel> {
        Ok(ResonatorModel {
            center_freq: self.on_axis_resonance()?,
            hwhm: self.resonator_hwhm_mhz,
            power_lorentzian: self.resonator_power_lorentzian,
        })
    }

    pub fn laser(&self) -> LaserModel {
        LaserModel { reset_fidelity: self.reset_fidelity, pump_rate_khz: self.laser_pump_rate_khz }
    }

    /// Per-run bath seeds derived from the master seed.
    pub fn bath_seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.master_seed.wrapping_add(i)).collect()
    }

    /// Hash over the canonical config rendering plus the seed; wall time and
    /// other run metadata do not enter, so reruns of the same config hash
    /// identically.
    pub fn manifest_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.render().as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Render the config as the commented key-value file that
    /// `print-defaults` emits and `--config` reads back.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |s: &str| {
            out.push_str(s);
            out.push('\n');
        };
        line("# Polarization-transfer simulation configuration.");
        line("# All keys are optional; omitted keys take the defaults shown here.");
        line("# Unknown keys are rejected.");
        line("");
        line("# Protocol: \"novel\" (Hartmann-Hahn spin locking) or \"ise\" (swept-frequency).");
        line(&format!("protocol = \"{}\"", match self.protocol { ProtocolKind::Novel => "novel", ProtocolKind::Ise => "ise" }));
        line("");
        line("# NV ground-state zero-field splitting, MHz.");
        line(&format!("zfs_mhz = {}", fmt_toml_float(self.zfs_mhz)));
        line("# Electron gyromagnetic ratio, MHz/T.");
        line(&format!("gamma_e_mhz_per_t = {}", fmt_toml_float(self.gamma_e_mhz_per_t)));
        line("# 13C gyromagnetic ratio, MHz/T.");
        line(&format!("gamma_n_mhz_per_t = {}", fmt_toml_float(self.gamma_n_mhz_per_t)));
        line("# 13C Larmor frequency, MHz; fixes the static field magnitude.");
        line(&format!("nuclear_larmor_mhz = {}", fmt_toml_float(self.nuclear_larmor_mhz)));
        line("# Misalignment angle between NV axis and field, degrees.");
        line(&format!("theta_deg = {}", fmt_toml_float(self.theta_deg)));
        line("# Microwave Rabi frequency, MHz.");
        line(&format!("rabi_mhz = {}", fmt_toml_float(self.rabi_mhz)));
        line("# Fraction of the secular hyperfine coupling entering the effective");
        line("# nuclear field (B_eff = Larmor - f*a_z); 0 disables the shift.");
        line(&format!("secular_shift = {}", fmt_toml_float(self.secular_shift)));
        line("");
        line("# Spin-locking Rabi frequency, MHz (Hartmann-Hahn matched by default).");
        line(&format!("lock_rabi_mhz = {}", fmt_toml_float(self.lock_rabi_mhz)));
        line("# Spin-locking pulse length, µs (0.2 ms).");
        line(&format!("lock_duration_us = {}", fmt_toml_float(self.lock_duration_us)));
        line("# Electron rotating-frame lifetime, µs (0.465 ms); inf disables damping.");
        line(&format!("t1rho_us = {}", fmt_toml_float(self.t1rho_us)));
        line("");
        line("# Microwave frequency sweep rate, MHz/µs.");
        line(&format!("sweep_rate_mhz_per_us = {}", fmt_toml_float(self.sweep_rate_mhz_per_us)));
        line("# Full sweep range, MHz.");
        line(&format!("sweep_range_mhz = {}", fmt_toml_float(self.sweep_range_mhz)));
        line("# Sweep center relative to the θ = 0 resonance, MHz; a positive offset");
        line("# keeps the resonance inside the window as it shifts with angle.");
        line(&format!("sweep_center_offset_mhz = {}", fmt_toml_float(self.sweep_center_offset_mhz)));
        line("# Sweep direction: \"down\" pumps nuclear polarization positive.");
        line(&format!("sweep_direction = \"{}\"", match self.sweep_direction { SweepDirection::Up => "up", SweepDirection::Down => "down" }));
        line("");
        line("# Expected number of bath spins; sets the sampling radius.");
        line(&format!("bath_spins = {}", self.bath_spins));
        line("# 13C site occupation probability (natural abundance 1.1%).");
        line(&format!("abundance = {}", fmt_toml_float(self.abundance)));
        line("# Frozen-core coupling threshold, MHz (10 kHz).");
        line(&format!("frozen_core_threshold_mhz = {}", fmt_toml_float(self.frozen_core_threshold_mhz)));
        line("# Linewidth entering the diffusion pair rates, MHz (2 kHz).");
        line(&format!("diffusion_linewidth_mhz = {}", fmt_toml_float(self.diffusion_linewidth_mhz)));
        line("# Pair-distance cutoff of the diffusion model, nm.");
        line(&format!("diffusion_cutoff_nm = {}", fmt_toml_float(self.diffusion_cutoff_nm)));
        line("");
        line("# Number of polarization cycles per run.");
        line(&format!("n_cycles = {}", self.n_cycles));
        line("# Polarization-transfer window with the NV in m_s = 0, ms.");
        line(&format!("diffusion_window_ms = {}", fmt_toml_float(self.diffusion_window_ms)));
        line("# Nuclear T1 in the polarizing field, s; inf disables decay.");
        line(&format!("t1n_s = {}", fmt_toml_float(self.t1n_s)));
        line("# Sample per-spin flips instead of expected-value updates.");
        line(&format!("stochastic = {}", self.stochastic));
        line("");
        line("# Resonator half width at half maximum, MHz; inf disables the filter.");
        line(&format!("resonator_hwhm_mhz = {}", fmt_toml_float(self.resonator_hwhm_mhz)));
        line("# Filter the drive power instead of the amplitude.");
        line(&format!("resonator_power_lorentzian = {}", self.resonator_power_lorentzian));
        line("# NV polarization restored by the optical reset.");
        line(&format!("reset_fidelity = {}", fmt_toml_float(self.reset_fidelity)));
        line("# Optical pumping rate, kHz (informational).");
        line(&format!("laser_pump_rate_khz = {}", fmt_toml_float(self.laser_pump_rate_khz)));
        line("");
        line("# Master seed; per-bath seeds are master_seed, master_seed+1, ...");
        line(&format!("master_seed = {}", self.master_seed));
        line("# Number of bath samples averaged per data point.");
        line(&format!("n_seeds = {}", self.n_seeds));
        line("# Misalignment angles for angle-sweep runs, degrees.");
        line(&format!(
            "angles_deg = [{}]",
            self.angles_deg.iter().map(|a| fmt_toml_float(*a)).collect::<Vec<_>>().join(", ")
        ));
        line("# Include full per-spin polarization vectors in the result JSON.");
        line(&format!("include_per_spin = {}", self.include_per_spin));
        out
    }
}

/// Shortest round-trip float rendering that stays a TOML float (always keeps
/// a decimal point or exponent).
pub fn fmt_toml_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}
