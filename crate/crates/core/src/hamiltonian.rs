//! Rotating-frame NV-13C Hamiltonian with angle-dependent detuning, dressed
//! states and their resonance points, plus a full lab-frame spin-1 oracle used
//! to validate the perturbative angle treatment.
//!
//! Electron subspace in the rotating frame is {|0>, |-1>} expressed in the
//! |±> = (|0> ± |-1>)/√2 basis, where the drive appears along σ_z and the
//! detuning along σ_x (σ are 1/2 times the Pauli matrices). The |+1> level
//! exists only in the lab-frame oracle.

use serde::{Deserialize, Serialize};

use crate::spinops::{identity, kron, re, spin_operators, CMat, Spectral};
use crate::{Error, Result};

/// Electron gyromagnetic ratio, MHz/T.
pub const GAMMA_E: f64 = 28024.95;
/// 13C nuclear gyromagnetic ratio, MHz/T.
pub const GAMMA_N_13C: f64 = 10.7084;
/// NV ground-state zero-field splitting, MHz.
pub const ZFS_DEFAULT: f64 = 2800.0;
/// Default 13C Larmor frequency, MHz; fixes the default field magnitude.
pub const LARMOR_DEFAULT: f64 = 4.87;

/// Physical parameters of one NV-13C pair in the rotating frame.
///
/// Units: frequencies MHz, field tesla, gyromagnetic ratios MHz/T, angle rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Zero-field splitting D, MHz.
    pub zfs: f64,
    /// Electron gyromagnetic ratio, MHz/T.
    pub gamma_e: f64,
    /// Nuclear gyromagnetic ratio, MHz/T.
    pub gamma_n: f64,
    /// Static field magnitude, T.
    pub field: f64,
    /// Misalignment angle between NV axis and field, rad.
    pub theta: f64,
    /// Microwave Rabi frequency Ω entering the σ_z drive term, MHz.
    pub rabi: f64,
    /// Microwave drive frequency ω_M, MHz.
    pub drive_freq: f64,
    /// Secular hyperfine coupling a_z, MHz.
    pub a_z: f64,
    /// Pseudo-secular hyperfine coupling a_x, MHz.
    pub a_x: f64,
    /// Fraction of a_z subtracted from the nuclear Zeeman term
    /// (B_eff = γ_n B - f·a_z). The shift is not pinned down by the
    /// rotating-frame derivation, so it is exposed; 0.5 by default, 0 disables.
    pub secular_shift: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        let field = LARMOR_DEFAULT / GAMMA_N_13C;
        Self {
            zfs: ZFS_DEFAULT,
            gamma_e: GAMMA_E,
            gamma_n: GAMMA_N_13C,
            field,
            theta: 0.0,
            rabi: 1.0,
            // On resonance with the theta = 0 transition by default.
            drive_freq: GAMMA_E * field - ZFS_DEFAULT,
            a_z: 0.0,
            a_x: 0.0,
            secular_shift: 0.5,
        }
    }
}

impl SystemSpec {
    /// Electron Larmor frequency γ_e B, MHz.
    pub fn electron_larmor(&self) -> f64 {
        self.gamma_e * self.field
    }

    /// Nuclear Larmor frequency γ_n B, MHz.
    pub fn nuclear_larmor(&self) -> f64 {
        self.gamma_n * self.field
    }

    /// Effective nuclear field B_eff = γ_n B - f·a_z, MHz.
    pub fn b_eff(&self) -> f64 {
        self.nuclear_larmor() - self.secular_shift * self.a_z
    }

    /// Basic range checks on the physical parameters.
    pub fn validate(&self) -> Result<()> {
        if self.zfs <= 0.0 {
            return Err(Error::InvalidInput(format!("zero-field splitting must be positive, got {}", self.zfs)));
        }
        if self.field < 0.0 {
            return Err(Error::InvalidInput(format!("field must be non-negative, got {}", self.field)));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(Error::InvalidInput(format!("theta must lie in [0, π/2], got {}", self.theta)));
        }
        if self.rabi < 0.0 {
            return Err(Error::InvalidInput(format!("Rabi frequency must be non-negative, got {}", self.rabi)));
        }
        Ok(())
    }

    /// Whether the perturbative angle treatment is valid (γ_e B > 2 D).
    pub fn strong_field(&self) -> bool {
        self.electron_larmor() > 2.0 * self.zfs
    }

    fn require_strong_field(&self) -> Result<()> {
        if !self.strong_field() {
            return Err(Error::StrongFieldViolation { gamma_e_b: self.electron_larmor(), d: self.zfs });
        }
        Ok(())
    }
}

/// Angle-dependent zero-field-splitting projection and its second-order
/// correction, both in MHz.
///
/// First order is the secular projection D(θ) = D (3cos²θ - 1)/2; the
/// second-order term comes from the off-diagonal ZFS elements mixing the
/// Zeeman levels, δ(θ) = (D²/γ_e B)(sin²θ cos²θ / 2 + sin⁴θ / 8). Both are
/// validated against [`full_lab_hamiltonian`]; requires γ_e B > 2 D.
pub fn zfs_shift(zfs: f64, gamma_e_b: f64, theta: f64) -> Result<(f64, f64)> {
    if gamma_e_b <= 2.0 * zfs {
        return Err(Error::StrongFieldViolation { gamma_e_b, d: zfs });
    }
    let (s, c) = theta.sin_cos();
    let d_theta = zfs * (3.0 * c * c - 1.0) / 2.0;
    let delta_theta = zfs * zfs / gamma_e_b * (s * s * c * c / 2.0 + s.powi(4) / 8.0);
    Ok((d_theta, delta_theta))
}

/// Detuning Δ = D(θ) - δ(θ) - γ_e B + ω_M between drive and the
/// |0> ↔ |-1> transition, MHz.
pub fn detuning(spec: &SystemSpec) -> Result<f64> {
    spec.validate()?;
    spec.require_strong_field()?;
    let (d_theta, delta_theta) = zfs_shift(spec.zfs, spec.electron_larmor(), spec.theta)?;
    Ok(d_theta - delta_theta - spec.electron_larmor() + spec.drive_freq)
}

/// Frequency of the |0> ↔ |-1> transition at the spec's angle, MHz
/// (the drive frequency at which the detuning vanishes).
pub fn resonance_frequency(spec: &SystemSpec) -> Result<f64> {
    let (d_theta, delta_theta) = zfs_shift(spec.zfs, spec.electron_larmor(), spec.theta)?;
    Ok(spec.electron_larmor() - d_theta + delta_theta)
}

/// Rotating-frame Hamiltonian of the driven NV-13C pair, 4x4 in MHz, on
/// (electron |±> two-level) ⊗ (nuclear spin-1/2):
///
/// H = Ω σ_z + Δ σ_x + B_eff I_z + a_z σ_z I_z + a_x σ_x I_x
pub fn build_htrans(spec: &SystemSpec) -> Result<CMat> {
    spec.validate()?;
    let delta = detuning(spec)?;
    Ok(build_htrans_at(spec, delta))
}

/// Same as [`build_htrans`] but with the detuning supplied directly, which is
/// how the swept-frequency propagation updates it segment by segment.
pub fn build_htrans_at(spec: &SystemSpec, delta: f64) -> CMat {
    let (sx, _, sz) = spin_operators(2).expect("spin-1/2 operators");
    let (ix, _, iz) = spin_operators(2).expect("spin-1/2 operators");
    let i2 = identity(2);
    kron(&sz, &i2) * re(spec.rabi)
        + kron(&sx, &i2) * re(delta)
        + kron(&i2, &iz) * re(spec.b_eff())
        + kron(&sz, &iz) * re(spec.a_z)
        + kron(&sx, &ix) * re(spec.a_x)
}

/// Dressed states of the driven electron two-level system.
#[derive(Debug, Clone)]
pub struct DressedState {
    /// Mixing angle ζ with |χ+> = cos ζ |+> + sin ζ |->, tan 2ζ = Δ/Ω.
    pub zeta: f64,
    /// (upper, lower) energies ±√(Ω² + Δ²)/2, MHz.
    pub energies: (f64, f64),
    /// (upper, lower) eigenvectors as (|+>, |->) components.
    pub states: ([f64; 2], [f64; 2]),
}

/// Eigenstates and energies of the electron-only part Ω σ_z + Δ σ_x.
pub fn dressed_states(delta: f64, omega: f64) -> Result<DressedState> {
    if delta == 0.0 && omega == 0.0 {
        return Err(Error::DegenerateDressedStates);
    }
    let gap = (omega * omega + delta * delta).sqrt();
    let zeta = 0.5 * delta.atan2(omega);
    let (s, c) = zeta.sin_cos();
    Ok(DressedState {
        zeta,
        energies: (gap / 2.0, -gap / 2.0),
        states: ([c, s], [-s, c]),
    })
}

/// Detunings (Δ_A1, Δ_A2) = ∓√((γ_n B)² - Ω²) at which the dressed-state
/// splitting √(Ω² + Δ²) equals the nuclear Larmor frequency.
///
/// At Ω = γ_n B the two resonances merge at Δ = 0; above it no real crossing
/// exists and an error is returned.
pub fn resonance_detunings(omega: f64, nuclear_larmor: f64) -> Result<(f64, f64)> {
    if omega > nuclear_larmor {
        return Err(Error::NoResonance { omega, larmor: nuclear_larmor });
    }
    let root = (nuclear_larmor * nuclear_larmor - omega * omega).sqrt();
    Ok((-root, root))
}

/// Full lab-frame Hamiltonian on spin-1 ⊗ spin-1/2, 6x6 in MHz:
///
/// H = D S_z'² + γ_e B S_z + γ_n B I_z + a_z S_z' I_z + a_x S_z' I_x
///
/// with S_z' the spin projection along the NV axis tilted by θ from the field
/// axis. Serves as the exact-diagonalization oracle for [`zfs_shift`].
pub fn full_lab_hamiltonian(spec: &SystemSpec) -> Result<CMat> {
    spec.validate()?;
    let (sx, _, sz) = spin_operators(3)?;
    let (ix, _, iz) = spin_operators(2)?;
    let (s, c) = spec.theta.sin_cos();
    let sz_nv = &sz * re(c) + &sx * re(s);
    let i2 = identity(2);
    let i3 = identity(3);
    Ok(kron(&(&sz_nv * &sz_nv), &i2) * re(spec.zfs)
        + kron(&sz, &i2) * re(spec.electron_larmor())
        + kron(&i3, &iz) * re(spec.nuclear_larmor())
        + kron(&sz_nv, &iz) * re(spec.a_z)
        + kron(&sz_nv, &ix) * re(spec.a_x))
}

/// |0> ↔ |-1> transition frequency from exact diagonalization of the
/// lab-frame Hamiltonian with hyperfine and nuclear Zeeman terms dropped.
///
/// Eigenstates are classified by their ⟨S_z⟩ expectation value, which is
/// unambiguous in the strong-field regime this oracle is used in.
pub fn lab_transition_frequency(spec: &SystemSpec) -> Result<f64> {
    let mut bare = spec.clone();
    bare.a_z = 0.0;
    bare.a_x = 0.0;
    bare.gamma_n = 0.0;
    let h = full_lab_hamiltonian(&bare)?;
    let spectral = Spectral::new(&h)?;
    let sz3 = {
        let (_, _, z) = spin_operators(3)?;
        kron(&z, &identity(2))
    };
    // energy per m_s sector, averaged over the duplicated nuclear factor
    let mut energy = [0.0f64; 3];
    let mut count = [0usize; 3];
    for k in 0..6 {
        let v = spectral.eigenvectors.column(k);
        let ms: f64 = (v.adjoint() * &sz3 * v)[(0, 0)].re;
        let idx = (ms.round() as i64 + 1).clamp(0, 2) as usize; // -1, 0, +1 -> 0, 1, 2
        energy[idx] += spectral.eigenvalues[k];
        count[idx] += 1;
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(Error::InvalidInput(
            "could not classify lab-frame eigenstates by m_s; field too weak".into(),
        ));
    }
    let e_minus = energy[0] / count[0] as f64;
    let e_zero = energy[1] / count[1] as f64;
    Ok(e_zero - e_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::{hermiticity_defect, CVec, C64};

    const TAU_DEG: f64 = std::f64::consts::PI / 180.0;

    fn sorted_eigenvalues(h: &CMat) -> Vec<f64> {
        Spectral::new(h).unwrap().eigenvalues.iter().copied().collect()
    }

    #[test]
    fn zfs_shift_on_axis_is_exact() {
        let (d_theta, delta_theta) = zfs_shift(2800.0, 28000.0, 0.0).unwrap();
        assert_eq!(d_theta, 2800.0);
        assert_eq!(delta_theta, 0.0);
    }

    #[test]
    fn zfs_shift_ten_degrees() {
        // D(10°) = D (3cos²θ - 1)/2, evaluated independently: 2673.3545
        let (d_theta, _) = zfs_shift(2800.0, 28000.0, 10.0 * TAU_DEG).unwrap();
        assert!((d_theta - 2673.3545036504074).abs() < 1e-9);
        // the ~127 MHz shift that a 100 MHz sweep roughly covers
        assert!((2800.0 - d_theta - 126.645).abs() < 1e-2);
    }

    #[test]
    fn zfs_shift_requires_strong_field() {
        assert!(matches!(
            zfs_shift(2800.0, 5000.0, 0.1),
            Err(Error::StrongFieldViolation { .. })
        ));
    }

    #[test]
    fn zfs_shift_matches_lab_oracle_within_two_percent() {
        // Exact diagonalization at γ_e B = 10 D vs the perturbative
        // transition frequency; agreement within 2% of the shift magnitude.
        let mut spec = SystemSpec { field: 10.0 * ZFS_DEFAULT / GAMMA_E, ..Default::default() };
        for theta_deg in [1.0, 2.0, 5.0, 8.0, 10.0, 15.0] {
            spec.theta = theta_deg * TAU_DEG;
            let exact = lab_transition_frequency(&spec).unwrap();
            let (d_theta, delta_theta) = zfs_shift(spec.zfs, spec.electron_larmor(), spec.theta).unwrap();
            let pert = spec.electron_larmor() - d_theta + delta_theta;
            let shift = exact - (spec.electron_larmor() - spec.zfs);
            assert!(
                (pert - exact).abs() <= 0.02 * shift.abs(),
                "theta {theta_deg}°: pert {pert} vs exact {exact}, shift {shift}"
            );
        }
    }

    #[test]
    fn detuning_examples() {
        let mut spec = SystemSpec::default();
        // drive on the theta = 0 resonance: Δ = 0
        spec.drive_freq = spec.electron_larmor() - spec.zfs;
        assert!(detuning(&spec).unwrap().abs() < 1e-9);
        // linear in the drive frequency
        spec.drive_freq += 50.0;
        assert!((detuning(&spec).unwrap() - 50.0).abs() < 1e-9);
        // off-axis: Δ picks up the (negative) zfs shift
        spec.drive_freq -= 50.0;
        spec.theta = 10.0 * TAU_DEG;
        let (d_theta, delta_theta) = zfs_shift(spec.zfs, spec.electron_larmor(), spec.theta).unwrap();
        let expected = (d_theta - spec.zfs) - delta_theta;
        assert!((detuning(&spec).unwrap() - expected).abs() < 1e-9);
        assert!(detuning(&spec).unwrap() < -120.0);
    }

    #[test]
    fn htrans_separable_spectrum_without_hyperfine() {
        let spec = SystemSpec {
            rabi: 1.3,
            drive_freq: GAMMA_E * (LARMOR_DEFAULT / GAMMA_N_13C) - ZFS_DEFAULT + 2.1,
            ..Default::default()
        };
        let h = build_htrans(&spec).unwrap();
        let gap = (spec.rabi.powi(2) + 2.1f64.powi(2)).sqrt();
        let b = spec.nuclear_larmor();
        let mut expected: Vec<f64> = [
            gap / 2.0 + b / 2.0,
            gap / 2.0 - b / 2.0,
            -gap / 2.0 + b / 2.0,
            -gap / 2.0 - b / 2.0,
        ]
        .to_vec();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = sorted_eigenvalues(&h);
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn htrans_nuclear_zeeman_only() {
        let mut spec = SystemSpec { rabi: 0.0, ..Default::default() };
        spec.drive_freq = spec.electron_larmor() - spec.zfs; // Δ = 0
        let h = build_htrans(&spec).unwrap();
        let got = sorted_eigenvalues(&h);
        let half = LARMOR_DEFAULT / 2.0;
        assert!((got[0] + half).abs() < 1e-9 && (got[1] + half).abs() < 1e-9);
        assert!((got[2] - half).abs() < 1e-9 && (got[3] - half).abs() < 1e-9);
    }

    #[test]
    fn htrans_matches_elementwise_expansion() {
        // Hand expansion of the five-term sum in the basis
        // {(+,↑), (+,↓), (-,↑), (-,↓)} with σ, I as half-Pauli matrices.
        let spec = SystemSpec { rabi: 1.7, theta: 4.0 * TAU_DEG, a_z: 0.35, a_x: 0.1, ..Default::default() };
        let delta = detuning(&spec).unwrap();
        let h = build_htrans(&spec).unwrap();
        assert!(hermiticity_defect(&h) <= 1e-12 * 3000.0);

        let o = spec.rabi;
        let b = spec.b_eff();
        let (az, ax) = (spec.a_z, spec.a_x);
        let z = |re: f64| C64::new(re, 0.0);
        #[rustfmt::skip]
        let expected = CMat::from_row_slice(4, 4, &[
            z(o / 2.0 + b / 2.0 + az / 4.0), z(0.0),                          z(delta / 2.0),                   z(ax / 4.0),
            z(0.0),                          z(o / 2.0 - b / 2.0 - az / 4.0), z(ax / 4.0),                      z(delta / 2.0),
            z(delta / 2.0),                  z(ax / 4.0),                     z(-o / 2.0 + b / 2.0 - az / 4.0), z(0.0),
            z(ax / 4.0),                     z(delta / 2.0),                  z(0.0),                           z(-o / 2.0 - b / 2.0 + az / 4.0),
        ]);
        let diff = (&h - &expected).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(diff < 1e-12, "max elementwise diff {diff}");
    }

    #[test]
    fn htrans_conserves_nuclear_z_without_pseudosecular() {
        let spec = SystemSpec { a_z: 0.4, a_x: 0.0, rabi: 2.0, ..Default::default() };
        let h = build_htrans(&spec).unwrap();
        let (_, _, iz) = spin_operators(2).unwrap();
        let iz4 = kron(&identity(2), &iz);
        let comm = &h * &iz4 - &iz4 * &h;
        let norm = comm.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(norm <= 1e-12);
    }

    #[test]
    fn dressed_states_diagonal_case() {
        let d = dressed_states(0.0, 3.0).unwrap();
        assert_eq!(d.zeta, 0.0);
        assert!((d.energies.0 - 1.5).abs() < 1e-14);
        assert!((d.energies.1 + 1.5).abs() < 1e-14);
        assert_eq!(d.states.0, [1.0, 0.0]);
        assert_eq!(d.states.1, [0.0, 1.0]);
    }

    #[test]
    fn dressed_states_pure_detuning_limit() {
        let d = dressed_states(5.0, 1e-12).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.states.0[0] - inv_sqrt2).abs() < 1e-6);
        assert!((d.states.0[1] - inv_sqrt2).abs() < 1e-6);
        assert!((d.states.1[0] + inv_sqrt2).abs() < 1e-6);
        assert!((d.states.1[1] - inv_sqrt2).abs() < 1e-6);
    }

    #[test]
    fn dressed_states_match_generic_eigensolver() {
        let (sx, _, sz) = spin_operators(2).unwrap();
        for (delta, omega) in [(2.0, 2.0), (0.7, 3.1), (-1.2, 0.4), (4.0, 0.9)] {
            let d = dressed_states(delta, omega).unwrap();
            let h = &sz * C64::new(omega, 0.0) + &sx * C64::new(delta, 0.0);
            let spectral = Spectral::new(&h).unwrap();
            assert!((d.energies.1 - spectral.eigenvalues[0]).abs() < 1e-12);
            assert!((d.energies.0 - spectral.eigenvalues[1]).abs() < 1e-12);
            let gap = (omega * omega + delta * delta).sqrt();
            assert!((d.energies.0 - gap / 2.0).abs() < 1e-12);
            // orthonormality
            let dot = d.states.0[0] * d.states.1[0] + d.states.0[1] * d.states.1[1];
            assert!(dot.abs() < 1e-12);
            // eigenvector check: H |χ+> = E+ |χ+>
            let chi = CVec::from_vec(vec![C64::new(d.states.0[0], 0.0), C64::new(d.states.0[1], 0.0)]);
            let residual = (&h * &chi - &chi * C64::new(d.energies.0, 0.0)).norm();
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn dressed_states_degenerate_rejected() {
        assert!(matches!(dressed_states(0.0, 0.0), Err(Error::DegenerateDressedStates)));
    }

    #[test]
    fn resonance_detunings_examples() {
        let (a1, a2) = resonance_detunings(0.0, 4.87).unwrap();
        assert!((a1 + 4.87).abs() < 1e-12 && (a2 - 4.87).abs() < 1e-12);

        // merge at the boundary
        let (a1, a2) = resonance_detunings(4.87, 4.87).unwrap();
        assert_eq!(a1, 0.0);
        assert_eq!(a2, 0.0);

        let (a1, a2) = resonance_detunings(1.0, 4.87).unwrap();
        assert!((a2 - (4.87f64.powi(2) - 1.0).sqrt()).abs() < 1e-12);
        assert!((a2 - 4.766).abs() < 1e-3);
        assert_eq!(a1, -a2);

        assert!(matches!(resonance_detunings(5.0, 4.87), Err(Error::NoResonance { .. })));
    }

    #[test]
    fn resonance_detunings_hit_the_larmor_gap() {
        for (omega, larmor) in [(1.0, 4.87), (3.0, 4.87), (0.3, 2.0)] {
            let (a1, a2) = resonance_detunings(omega, larmor).unwrap();
            for delta in [a1, a2] {
                let gap = (omega * omega + delta * delta).sqrt();
                assert!((gap - larmor).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn lab_hamiltonian_zero_field_levels() {
        let spec = SystemSpec { field: 0.0, theta: 0.0, ..Default::default() };
        let h = full_lab_hamiltonian(&spec).unwrap();
        let got = sorted_eigenvalues(&h);
        // {0, 0, D, D, D, D}: m_s = 0 pair at zero, m_s = ±1 pairs at D
        assert!(got[0].abs() < 1e-9 && got[1].abs() < 1e-9);
        for v in &got[2..] {
            assert!((v - spec.zfs).abs() < 1e-9);
        }
    }

    #[test]
    fn lab_hamiltonian_on_axis_transition() {
        let spec = SystemSpec { field: 10.0 * ZFS_DEFAULT / GAMMA_E, ..Default::default() };
        let f = lab_transition_frequency(&spec).unwrap();
        assert!((f - (spec.electron_larmor() - spec.zfs)).abs() < 1e-9);
    }

    #[test]
    fn htrans_hermitian_across_specs() {
        let mut spec = SystemSpec::default();
        for theta in [0.0, 0.05, 0.1, 0.2] {
            for (az, ax) in [(0.0, 0.0), (0.3, 0.1), (-0.2, 0.05)] {
                spec.theta = theta;
                spec.a_z = az;
                spec.a_x = ax;
                let h = build_htrans(&spec).unwrap();
                let scale = h.iter().fold(0.0f64, |m, v| m.max(v.norm()));
                assert!(hermiticity_defect(&h) <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
