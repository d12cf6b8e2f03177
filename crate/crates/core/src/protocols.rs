//! Polarization-transfer protocols: NOVEL (Hartmann-Hahn spin locking) and the
//! integrated solid effect (swept-frequency Landau-Zener passages), each as
//! analytic transfer formulas and as full time-dependent propagation of the
//! rotating-frame Hamiltonian, plus the multi-cycle build-up engine with
//! optical reset, diffusion windows and nuclear relaxation.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::bath::{stream_rng, BathSample, DiffusionModel};
use crate::hamiltonian::{build_htrans_at, resonance_frequency, SystemSpec};
use crate::spinops::{unitarity_defect, CVec, Spectral, C64};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Rotating-frame T1ρ of the NV electron spin, µs (0.465 ms).
pub const T1RHO_DEFAULT_US: f64 = 465.0;

/// Spin-locking sequence at the Hartmann-Hahn condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelSequence {
    /// Rabi frequency of the locking drive, MHz.
    pub lock_rabi: f64,
    /// Lock duration, µs.
    pub lock_duration: f64,
    /// Whether the laser stays on during the lock (reset model only).
    pub laser_continuous: bool,
}

impl NovelSequence {
    pub fn validate(&self) -> Result<()> {
        if self.lock_rabi <= 0.0 {
            return Err(Error::InvalidInput(format!("lock Rabi frequency must be positive, got {}", self.lock_rabi)));
        }
        if self.lock_duration < 0.0 {
            return Err(Error::InvalidInput(format!("lock duration must be non-negative, got {}", self.lock_duration)));
        }
        Ok(())
    }

    /// Non-fatal advisories, e.g. locking longer than the T1ρ budget.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.lock_duration > T1RHO_DEFAULT_US {
            w.push(format!(
                "lock duration {:.1} µs exceeds the T1ρ budget of {:.1} µs; transfer will be strongly damped",
                self.lock_duration, T1RHO_DEFAULT_US
            ));
        }
        w
    }
}

/// Direction of the microwave frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Up,
    /// High to low drive frequency; pumps nuclear polarization positive for
    /// an NV prepared in m_s = 0.
    Down,
}

/// Linear microwave-frequency sweep program for the integrated solid effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IseSweep {
    /// Sweep center drive frequency, MHz (absolute).
    pub center_freq: f64,
    /// Full sweep range, MHz.
    pub range: f64,
    /// Sweep rate ν, MHz/µs.
    pub rate: f64,
    /// Drive Rabi frequency during the sweep, MHz.
    pub rabi: f64,
    pub direction: SweepDirection,
}

impl IseSweep {
    pub fn validate(&self) -> Result<()> {
        if self.range <= 0.0 {
            return Err(Error::InvalidInput(format!("sweep range must be positive, got {}", self.range)));
        }
        if self.rate <= 0.0 {
            return Err(Error::InvalidInput(format!("sweep rate must be positive, got {}", self.rate)));
        }
        if self.rabi < 0.0 {
            return Err(Error::InvalidInput(format!("sweep Rabi frequency must be non-negative, got {}", self.rabi)));
        }
        Ok(())
    }

    /// Sweep duration range/rate, µs.
    pub fn duration(&self) -> f64 {
        self.range / self.rate
    }

    /// Swept drive-frequency window (low, high), MHz.
    pub fn window(&self) -> (f64, f64) {
        (self.center_freq - self.range / 2.0, self.center_freq + self.range / 2.0)
    }
}

/// Landau-Zener exponent μ = Ω² a_x'² / (16 ν γ_n B √((γ_n B)² - Ω²)),
/// evaluated with all quantities in MHz and MHz/µs.
pub fn lz_mu(omega: f64, a_x_eff: f64, nu: f64, nuclear_larmor: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < nuclear_larmor) {
        return Err(Error::NoResonance { omega, larmor: nuclear_larmor });
    }
    if nu <= 0.0 {
        return Err(Error::InvalidInput(format!("sweep rate must be positive, got {nu}")));
    }
    let root = (nuclear_larmor * nuclear_larmor - omega * omega).sqrt();
    Ok(omega * omega * a_x_eff * a_x_eff / (16.0 * nu * nuclear_larmor * root))
}

/// Diabatic passage probability P_LZ = exp(-2πμ).
pub fn lz_probability(mu: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::InvalidInput(format!("LZ exponent must be non-negative, got {mu}")));
    }
    Ok((-TWO_PI * mu).exp())
}

/// Net transfer over a double passage, P̄ = 2 P_LZ (1 - P_LZ).
pub fn ise_transfer_analytic(p_lz: f64) -> f64 {
    2.0 * p_lz * (1.0 - p_lz)
}

/// Locate the maximum of P̄(μ) by bisecting the stationarity condition
/// dP̄/dμ = 0, which reduces to 1 - 2 exp(-2πμ) = 0 (monotone in μ).
///
/// Returns (μ*, P̄(μ*)). Used by the oracle suite; the analytic answer is
/// μ* = ln 2 / 2π with P̄ = 1/2.
pub fn pbar_extremum_search() -> (f64, f64) {
    let g = |mu: f64| 1.0 - 2.0 * (-TWO_PI * mu).exp();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu_star = 0.5 * (lo + hi);
    let p = (-TWO_PI * mu_star).exp();
    (mu_star, ise_transfer_analytic(p))
}

/// Analytic NOVEL transfer: detuned two-level Rabi flopping on the resonant
/// flip-flop subspace with coupling a_x/4 and mismatch δ = Ω_lock - B_eff,
/// with the envelope damped by exp(-t/T1ρ).
///
/// Peak transfer is a_x²/(a_x² + 4δ²); at exact matching the flip-flop
/// oscillates at frequency a_x/2 and is complete at t = 1/a_x.
pub fn novel_transfer_analytic(a_x: f64, mismatch: f64, duration_us: f64, t1rho_us: f64) -> f64 {
    if a_x == 0.0 {
        return 0.0;
    }
    let g = a_x.abs() / 4.0;
    let g_eff = (g * g + mismatch * mismatch / 4.0).sqrt();
    let amplitude = g * g / (g_eff * g_eff);
    let oscillation = (TWO_PI * g_eff * duration_us).sin().powi(2);
    let damping = if t1rho_us.is_finite() { (-duration_us / t1rho_us).exp() } else { 1.0 };
    amplitude * oscillation * damping
}

/// Nuclear spin-flip probability of an isolated NV-13C pair under spin
/// locking, from full propagation of the rotating-frame Hamiltonian with
/// Δ = 0 and Ω = lock Rabi.
///
/// The electron starts in the upper dressed state (spin locked along the
/// drive), the nucleus in |↓>; returns the probability of ending in |↑>.
pub fn novel_transfer(spec: &SystemSpec, seq: &NovelSequence) -> Result<f64> {
    Ok(novel_transfer_scan(spec, seq, &[seq.lock_duration])?[0])
}

/// [`novel_transfer`] evaluated at several lock durations, reusing one
/// eigendecomposition.
pub fn novel_transfer_scan(spec: &SystemSpec, seq: &NovelSequence, durations_us: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    seq.validate()?;
    let mut locked = spec.clone();
    locked.rabi = seq.lock_rabi;
    let h = build_htrans_at(&locked, 0.0);
    let spectral = Spectral::new(&h)?;
    // basis {(+,↑), (+,↓), (-,↑), (-,↓)}: start (+,↓)
    let mut psi0 = CVec::zeros(4);
    psi0[1] = C64::new(1.0, 0.0);
    Ok(durations_us
        .iter()
        .map(|&t| {
            let psi = spectral.evolve(&psi0, t);
            psi[0].norm_sqr() + psi[2].norm_sqr()
        })
        .collect())
}

/// Options controlling time-dependent sweep propagation.
#[derive(Debug, Clone)]
pub struct SweepPropagationOptions {
    /// Segments per period of the fastest eigenfrequency (the dt ≤
    /// 1/(steps·f_max) rule).
    pub steps_per_period: f64,
    /// Hard cap on segment count.
    pub max_segments: usize,
}

impl Default for SweepPropagationOptions {
    fn default() -> Self {
        Self { steps_per_period: 50.0, max_segments: 5_000_000 }
    }
}

/// Outcome of a swept-frequency propagation.
#[derive(Debug, Clone)]
pub struct IseOutcome {
    /// P(nucleus ↓ → ↑) for the NV prepared in m_s = 0.
    pub pump_up: f64,
    /// P(nucleus ↑ → ↓) for the same preparation.
    pub pump_down: f64,
    pub segments: usize,
    /// Largest ‖U†U - I‖_F over all propagator segments.
    pub max_unitarity_defect: f64,
}

impl IseOutcome {
    /// Flip probability of an initially unpolarized nucleus.
    pub fn unpolarized_flip(&self) -> f64 {
        0.5 * (self.pump_up + self.pump_down)
    }

    /// Polarization change of an initially unpolarized nucleus.
    pub fn polarization_change(&self) -> f64 {
        self.pump_up - self.pump_down
    }
}

/// Propagate the rotating-frame Hamiltonian through a linear frequency sweep.
///
/// The detuning is ramped at ±ν across the sweep window mapped through the
/// spec's resonance frequency; the Hamiltonian is held constant over each
/// segment (zeroth-order hold) with dt chosen to resolve the largest
/// instantaneous eigenfrequency. The NV starts in m_s = 0; both nuclear
/// initial states are propagated.
///
/// A window that covers both dressed-state resonances realizes the double
/// Landau-Zener passage; partial windows simply integrate the portion given,
/// so single- or zero-crossing behavior emerges from the window placement.
pub fn ise_transfer_numeric(
    spec: &SystemSpec,
    sweep: &IseSweep,
    opts: &SweepPropagationOptions,
) -> Result<IseOutcome> {
    spec.validate()?;
    sweep.validate()?;
    let mut driven = spec.clone();
    driven.rabi = sweep.rabi;
    let f_res = resonance_frequency(&driven)?;
    let (w_lo, w_hi) = sweep.window();
    let (delta_from, delta_to) = match sweep.direction {
        SweepDirection::Up => (w_lo - f_res, w_hi - f_res),
        SweepDirection::Down => (w_hi - f_res, w_lo - f_res),
    };
    let delta_max = delta_from.abs().max(delta_to.abs());

    // spectral-norm bound on the instantaneous eigenfrequencies
    let f_max = 0.5 * (driven.rabi.powi(2) + delta_max.powi(2)).sqrt()
        + 0.5 * driven.b_eff().abs()
        + 0.25 * (driven.a_z.abs() + driven.a_x.abs());
    let dt_limit = 1.0 / (opts.steps_per_period * f_max);
    let duration = sweep.duration();
    let segments = (duration / dt_limit).ceil() as usize;
    if segments > opts.max_segments {
        return Err(Error::StepBudgetExceeded { needed: segments, budget: opts.max_segments });
    }
    let dt = duration / segments as f64;
    let ramp = (delta_to - delta_from) / duration;

    // |0> = (|+> + |->)/√2; one run per nuclear initial state
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi_down = CVec::zeros(4);
    psi_down[1] = amp;
    psi_down[3] = amp;
    let mut psi_up = CVec::zeros(4);
    psi_up[0] = amp;
    psi_up[2] = amp;

    let mut max_defect: f64 = 0.0;
    for k in 0..segments {
        let t_mid = (k as f64 + 0.5) * dt;
        let delta = delta_from + ramp * t_mid;
        let h = build_htrans_at(&driven, delta);
        let u = Spectral::new(&h)?.propagator(dt);
        max_defect = max_defect.max(unitarity_defect(&u));
        psi_down = &u * psi_down;
        psi_up = &u * psi_up;
    }

    Ok(IseOutcome {
        pump_up: psi_down[0].norm_sqr() + psi_down[2].norm_sqr(),
        pump_down: psi_up[1].norm_sqr() + psi_up[3].norm_sqr(),
        segments,
        max_unitarity_defect: max_defect,
    })
}

/// Numeric single-crossing Landau-Zener benchmark: a two-level avoided
/// crossing parameterized directly by μ, integrated with the same
/// piecewise-constant propagation as the sweeps.
///
/// The diabatic splitting is ramped at `rate` MHz/µs through a coupling
/// g = √(μ·rate/2π), for which the diabatic survival probability tends to
/// exp(-2πμ); the returned value is that survival probability. The run starts
/// in the exact entry eigenstate and projects onto the exact exit eigenstate
/// continuing the same diabatic branch; in the adiabatic basis the
/// populations settle quickly once the crossing region is left, so a modest
/// window already reaches the asymptotic value.
pub fn lz_single_crossing_numeric(mu: f64, rate: f64, opts: &SweepPropagationOptions) -> Result<f64> {
    if mu < 0.0 || rate <= 0.0 {
        return Err(Error::InvalidInput(format!("need mu ≥ 0 and rate > 0, got mu={mu}, rate={rate}")));
    }
    let g = (mu * rate / TWO_PI).sqrt();
    // window wide enough that the crossing region and the adiabatic tails fit
    let half_width = (10.0 + 40.0 * g).max(8.0 * (rate / TWO_PI).sqrt());
    let duration = 2.0 * half_width / rate;
    let f_max = 0.5 * (half_width.powi(2) + 4.0 * g * g).sqrt();
    let dt_limit = 1.0 / (opts.steps_per_period * f_max);
    let segments = (duration / dt_limit).ceil() as usize;
    if segments > opts.max_segments {
        return Err(Error::StepBudgetExceeded { needed: segments, budget: opts.max_segments });
    }
    let dt = duration / segments as f64;

    let gc = C64::new(g, 0.0);
    let two_level = |eps: f64| {
        crate::spinops::CMat::from_row_slice(
            2,
            2,
            &[C64::new(eps / 2.0, 0.0), gc, gc, C64::new(-eps / 2.0, 0.0)],
        )
    };

    // diabatic state 1 enters as the lower eigenstate and exits as the upper
    let entry = Spectral::new(&two_level(-half_width))?;
    let mut psi: CVec = entry.eigenvectors.column(0).into();
    for k in 0..segments {
        let eps = -half_width + rate * (k as f64 + 0.5) * dt;
        psi = Spectral::new(&two_level(eps))?.evolve(&psi, dt);
    }
    let exit = Spectral::new(&two_level(half_width))?;
    let overlap = (exit.eigenvectors.column(1).adjoint() * &psi)[(0, 0)];
    Ok(overlap.norm_sqr())
}

/// Protocol applied once per polarization cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    Novel(NovelSequence),
    Ise(IseSweep),
    /// Identical transfer probability for every spin; the homogenized-rate
    /// mode used for fixed-point calibration.
    Uniform { probability: f64, duration_us: f64 },
}

impl Protocol {
    /// Active protocol time per cycle, µs (excludes the diffusion window).
    pub fn duration_us(&self) -> f64 {
        match self {
            Protocol::Novel(seq) => seq.lock_duration,
            Protocol::Ise(sweep) => sweep.duration(),
            Protocol::Uniform { duration_us, .. } => *duration_us,
        }
    }
}

/// Per-spin transfer probabilities for one protocol application.
///
/// Each bath spin interacts with the NV one at a time through its own
/// (a_z, a_x); NOVEL uses the detuned two-level formula with the spin's
/// effective mismatch, ISE the analytic double-passage transfer restricted to
/// the resonances actually inside the swept window (two crossings give
/// 2P(1-P), one gives 1-P, none gives 0).
pub fn transfer_probabilities(
    spec: &SystemSpec,
    bath: &BathSample,
    protocol: &Protocol,
    t1rho_us: f64,
) -> Result<Vec<f64>> {
    match protocol {
        Protocol::Uniform { probability, .. } => {
            if !(0.0..=1.0).contains(probability) {
                return Err(Error::InvalidInput(format!("uniform transfer probability must lie in [0, 1], got {probability}")));
            }
            Ok(vec![*probability; bath.spins.len()])
        }
        Protocol::Novel(seq) => {
            seq.validate()?;
            Ok(bath
                .spins
                .iter()
                .map(|spin| {
                    let b_eff = spec.nuclear_larmor() - spec.secular_shift * spin.a_z;
                    let mismatch = seq.lock_rabi - b_eff;
                    novel_transfer_analytic(spin.a_x, mismatch, seq.lock_duration, t1rho_us)
                })
                .collect())
        }
        Protocol::Ise(sweep) => {
            sweep.validate()?;
            let mut at_angle = spec.clone();
            at_angle.rabi = sweep.rabi;
            let f_res = resonance_frequency(&at_angle)?;
            let (w_lo, w_hi) = sweep.window();
            Ok(bath
                .spins
                .iter()
                .map(|spin| {
                    let b_eff = spec.nuclear_larmor() - spec.secular_shift * spin.a_z;
                    if sweep.rabi <= 0.0 || sweep.rabi >= b_eff || b_eff <= 0.0 {
                        return 0.0;
                    }
                    let root = (b_eff * b_eff - sweep.rabi * sweep.rabi).sqrt();
                    let crossings = [f_res - root, f_res + root]
                        .iter()
                        .filter(|f| (w_lo..=w_hi).contains(*f))
                        .count();
                    if crossings == 0 {
                        return 0.0;
                    }
                    let mu = lz_mu(sweep.rabi, spin.a_x, sweep.rate, b_eff).expect("domain checked");
                    let p = lz_probability(mu).expect("mu is non-negative");
                    match crossings {
                        1 => 1.0 - p,
                        _ => ise_transfer_analytic(p),
                    }
                })
                .collect())
        }
    }
}

/// State of one polarization cycle in a build-up run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Simulated elapsed time at the end of the cycle, ms.
    pub time_ms: f64,
    /// Mean polarization over all bath spins.
    pub bulk: f64,
    /// Mean polarization over frozen-core members (0 when the core is empty).
    pub frozen_core: f64,
    pub per_spin: Vec<f64>,
}

/// Per-cycle polarization history of a build-up run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarizationTrace {
    pub per_cycle: Vec<CycleRecord>,
    /// Wall time of one cycle (protocol + diffusion window), ms.
    pub cycle_time_ms: f64,
}

impl PolarizationTrace {
    pub fn final_bulk(&self) -> f64 {
        self.per_cycle.last().map(|r| r.bulk).unwrap_or(0.0)
    }
}

/// Cycle-engine parameters common to both protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub n_cycles: usize,
    /// Diffusion window with the NV reset to m_s = 0, ms.
    pub diffusion_window_ms: f64,
    /// Nuclear T1 in the polarizing field, s (infinite disables decay).
    pub t1n_s: f64,
    /// NV polarization restored by the optical reset, in [0, 1].
    pub reset_fidelity: f64,
    /// Electron rotating-frame lifetime damping the NOVEL envelope, µs.
    pub t1rho_us: f64,
    /// Linewidth entering the diffusion pair rates, MHz.
    pub diffusion_linewidth: f64,
    /// Pair-distance cutoff for the diffusion model, nm.
    pub diffusion_cutoff_nm: f64,
    /// Draw per-spin flips instead of expected-value updates.
    pub stochastic_seed: Option<u64>,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            n_cycles: 200,
            diffusion_window_ms: 10.0,
            t1n_s: 300.0,
            reset_fidelity: 0.96,
            t1rho_us: T1RHO_DEFAULT_US,
            diffusion_linewidth: 0.002,
            diffusion_cutoff_nm: 1.5,
            stochastic_seed: None,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_cycles < 1 {
            return Err(Error::InvalidInput("n_cycles must be at least 1".into()));
        }
        if self.diffusion_window_ms < 0.0 {
            return Err(Error::InvalidInput(format!("diffusion window must be non-negative, got {} ms", self.diffusion_window_ms)));
        }
        if !(0.0..=1.0).contains(&self.reset_fidelity) {
            return Err(Error::InvalidInput(format!("reset fidelity must lie in [0, 1], got {}", self.reset_fidelity)));
        }
        if self.t1n_s <= 0.0 {
            return Err(Error::InvalidInput(format!("T1n must be positive, got {} s", self.t1n_s)));
        }
        Ok(())
    }
}

/// Run the multi-cycle polarization build-up.
///
/// Each cycle: (1) optical reset of the NV to m_s = 0 with the configured
/// fidelity, (2) protocol transfer applied spin by spin as
/// p ← p + P·(p_NV - p) (or a stochastic flip in stochastic mode),
/// (3) spin diffusion over the window with the NV in m_s = 0, (4) T1n decay.
pub fn polarization_cycle_run(
    bath: &BathSample,
    spec: &SystemSpec,
    protocol: &Protocol,
    params: &EngineParams,
) -> Result<PolarizationTrace> {
    params.validate()?;
    let probs = transfer_probabilities(spec, bath, protocol, params.t1rho_us)?;
    let diffusion = DiffusionModel::new(bath, params.diffusion_linewidth, params.diffusion_cutoff_nm)?;
    let cycle_time_ms = protocol.duration_us() / 1e3 + params.diffusion_window_ms;
    let decay = if params.t1n_s.is_finite() {
        (-(cycle_time_ms / 1e3) / params.t1n_s).exp()
    } else {
        1.0
    };
    let p_nv = params.reset_fidelity;
    let mut rng = params.stochastic_seed.map(|s| stream_rng(s, 1));

    let n = bath.spins.len();
    let mut polarizations = vec![0.0f64; n];
    let mut per_cycle = Vec::with_capacity(params.n_cycles);
    for cycle in 1..=params.n_cycles {
        match rng.as_mut() {
            None => {
                for (p, &prob) in polarizations.iter_mut().zip(&probs) {
                    *p += prob * (p_nv - *p);
                }
            }
            Some(rng) => {
                for (p, &prob) in polarizations.iter_mut().zip(&probs) {
                    if rng.gen::<f64>() < prob {
                        *p = p_nv;
                    }
                }
            }
        }
        if params.diffusion_window_ms > 0.0 {
            diffusion.step(&mut polarizations, params.diffusion_window_ms, true);
        }
        if decay != 1.0 {
            for p in polarizations.iter_mut() {
                *p *= decay;
            }
        }
        let bulk = if n == 0 { 0.0 } else { polarizations.iter().sum::<f64>() / n as f64 };
        let frozen_core = if bath.frozen_core_members.is_empty() {
            0.0
        } else {
            bath.frozen_core_members.iter().map(|&i| polarizations[i]).sum::<f64>()
                / bath.frozen_core_members.len() as f64
        };
        per_cycle.push(CycleRecord {
            cycle,
            time_ms: cycle as f64 * cycle_time_ms,
            bulk,
            frozen_core,
            per_spin: polarizations.clone(),
        });
    }
    Ok(PolarizationTrace { per_cycle, cycle_time_ms })
}

/// Steady state of the homogeneous pumping/relaxation balance,
/// p* = Γ T1n / (1 + Γ T1n).
pub fn steady_state_polarization(gamma_pol_per_s: f64, t1n_s: f64) -> Result<f64> {
    if gamma_pol_per_s < 0.0 {
        return Err(Error::InvalidInput(format!("polarization rate must be non-negative, got {gamma_pol_per_s}")));
    }
    if t1n_s <= 0.0 {
        return Err(Error::InvalidInput(format!("T1n must be positive, got {t1n_s}")));
    }
    let x = gamma_pol_per_s * t1n_s;
    Ok(x / (1.0 + x))
}
