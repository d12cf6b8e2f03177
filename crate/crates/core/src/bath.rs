//! 13C nuclear spin bath: lattice-site sampling at natural abundance,
//! point-dipole hyperfine couplings to the NV, frozen-core classification and
//! a pairwise rate model for nuclear spin diffusion.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{GAMMA_E, GAMMA_N_13C};
use crate::{Error, Result};

/// Conventional diamond cubic cell, nm.
pub const LATTICE_CONSTANT: f64 = 0.357;
/// C-C bond length, nm.
pub const BOND_LENGTH: f64 = 0.154;
/// Carbon number density of diamond, nm^-3.
pub const NUMBER_DENSITY: f64 = 176.0;
/// No bath site closer to the NV than this, nm (vacancy exclusion).
pub const EXCLUSION_RADIUS: f64 = 0.15;
/// Natural 13C abundance.
pub const NATURAL_ABUNDANCE: f64 = 0.011;
/// Default frozen-core coupling threshold, MHz (10 kHz).
pub const FROZEN_CORE_THRESHOLD: f64 = 0.01;

/// (μ0/4π)·h expressed so that couplings come out in MHz with gyromagnetic
/// ratios in MHz/T and distances in nm.
pub const DIPOLAR_PREFACTOR: f64 = 6.62607015e-8;

/// Default NV symmetry axis, a [111] diamond direction.
pub fn default_nv_axis() -> [f64; 3] {
    let s = 1.0 / 3.0f64.sqrt();
    [s, s, s]
}

/// Portable per-stream RNG: one master seed, one stream index per work item.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// One sampled 13C site with its hyperfine couplings to the NV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpin {
    /// Position relative to the NV, nm.
    pub position: [f64; 3],
    /// Secular hyperfine coupling, MHz.
    pub a_z: f64,
    /// Pseudo-secular hyperfine coupling, MHz.
    pub a_x: f64,
}

/// A sampled nuclear spin bath around one NV center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSample {
    pub seed: u64,
    /// Sampling ball radius, nm.
    pub radius: f64,
    /// Site occupation probability.
    pub abundance: f64,
    /// NV axis used for the coupling geometry (unit vector).
    pub nv_axis: [f64; 3],
    pub spins: Vec<BathSpin>,
    /// Coupling-magnitude threshold used for `frozen_core_members`, MHz.
    pub frozen_threshold: f64,
    /// Indices of spins with √(a_z² + a_x²) ≥ `frozen_threshold`, ascending.
    pub frozen_core_members: Vec<usize>,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// All diamond lattice sites inside `radius` (and outside the vacancy
/// exclusion), enumerated in a deterministic order.
pub fn lattice_sites(radius: f64) -> Vec<[f64; 3]> {
    // conventional cell: fcc translations + two-atom basis
    const FCC: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
    const BASIS: [[f64; 3]; 2] = [[0.0, 0.0, 0.0], [0.25, 0.25, 0.25]];
    let n = (radius / LATTICE_CONSTANT).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for f in &FCC {
                    for b in &BASIS {
                        let pos = [
                            (i as f64 + f[0] + b[0]) * LATTICE_CONSTANT,
                            (j as f64 + f[1] + b[1]) * LATTICE_CONSTANT,
                            (k as f64 + f[2] + b[2]) * LATTICE_CONSTANT,
                        ];
                        let r = norm3(pos);
                        if r <= radius && r >= EXCLUSION_RADIUS {
                            sites.push(pos);
                        }
                    }
                }
            }
        }
    }
    sites
}

/// Point-dipole hyperfine couplings (a_z, a_x) in MHz of a 13C at `position`
/// (nm, relative to the NV) for the given NV axis.
///
/// With b(r) = (μ0/4π) h γ_e γ_n / r³ and θ_p the angle between axis and
/// displacement: a_z = b (1 - 3cos²θ_p), a_x = 3 b sinθ_p cosθ_p.
pub fn hyperfine_coupling(position: [f64; 3], nv_axis: [f64; 3]) -> Result<(f64, f64)> {
    let r = norm3(position);
    if r < EXCLUSION_RADIUS {
        return Err(Error::InsideExclusionRadius { r, min: EXCLUSION_RADIUS });
    }
    let cos_t = (dot3(position, nv_axis) / (r * norm3(nv_axis))).clamp(-1.0, 1.0);
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    let b = DIPOLAR_PREFACTOR * GAMMA_E * GAMMA_N_13C / (r * r * r);
    Ok((b * (1.0 - 3.0 * cos_t * cos_t), 3.0 * b * sin_t * cos_t))
}

/// Homonuclear 13C-13C point-dipole coupling magnitude (μ0/4π) h γ_n²/r³ in
/// MHz, without the angular factor.
pub fn nn_dipolar_coupling(r: f64) -> f64 {
    DIPOLAR_PREFACTOR * GAMMA_N_13C * GAMMA_N_13C / (r * r * r)
}

/// Sample a bath with the default NV axis and frozen-core threshold.
pub fn sample_bath(seed: u64, radius: f64, abundance: f64) -> Result<BathSample> {
    sample_bath_with(seed, radius, abundance, default_nv_axis(), FROZEN_CORE_THRESHOLD)
}

/// Sample a bath: every lattice site within `radius` is occupied
/// independently with probability `abundance`, reproducibly for a fixed seed.
pub fn sample_bath_with(
    seed: u64,
    radius: f64,
    abundance: f64,
    nv_axis: [f64; 3],
    frozen_threshold: f64,
) -> Result<BathSample> {
    if radius < 0.5 {
        return Err(Error::InvalidInput(format!("bath radius must be at least 0.5 nm, got {radius}")));
    }
    if !(0.0 < abundance && abundance <= 1.0) {
        return Err(Error::InvalidInput(format!("abundance must lie in (0, 1], got {abundance}")));
    }
    let sites = lattice_sites(radius);
    if sites.is_empty() {
        return Err(Error::EmptyBath(radius));
    }
    let mut rng = stream_rng(seed, 0);
    let mut spins = Vec::new();
    for pos in sites {
        if rng.gen::<f64>() < abundance {
            let (a_z, a_x) = hyperfine_coupling(pos, nv_axis)?;
            spins.push(BathSpin { position: pos, a_z, a_x });
        }
    }
    let mut bath = BathSample {
        seed,
        radius,
        abundance,
        nv_axis,
        spins,
        frozen_threshold,
        frozen_core_members: Vec::new(),
    };
    bath.frozen_core_members = frozen_core_partition(&bath, frozen_threshold)?;
    Ok(bath)
}

/// Radius of a ball expected to contain `n` spins at the given abundance.
pub fn radius_for_expected_spins(n: usize, abundance: f64) -> f64 {
    (3.0 * n as f64 / (4.0 * std::f64::consts::PI * NUMBER_DENSITY * abundance)).cbrt()
}

/// Indices of spins with coupling magnitude √(a_z² + a_x²) ≥ `threshold`.
pub fn frozen_core_partition(bath: &BathSample, threshold: f64) -> Result<Vec<usize>> {
    if threshold <= 0.0 {
        return Err(Error::InvalidInput(format!("frozen-core threshold must be positive, got {threshold}")));
    }
    Ok(bath
        .spins
        .iter()
        .enumerate()
        .filter(|(_, s)| (s.a_z * s.a_z + s.a_x * s.a_x).sqrt() >= threshold)
        .map(|(i, _)| i)
        .collect())
}

/// Pairwise flip-flop rate model for nuclear spin diffusion.
///
/// Each pair (i, j) carries an exchange rate W = d² / linewidth with d the
/// secular flip-flop element b(r)·(1 - 3cos²θ)/2 between the two nuclei.
/// Exchange between frozen-core and bulk spins is suppressed to zero unless
/// the NV is in m_s = 0 (no field gradient); bulk-bulk pairs always exchange.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    /// (i, j, rate MHz, crosses frozen-core boundary)
    pairs: Vec<(usize, usize, f64, bool)>,
}

impl DiffusionModel {
    /// Precompute pair rates; pairs farther apart than `cutoff` nm are
    /// dropped (their window-integrated exchange is negligible).
    pub fn new(bath: &BathSample, linewidth: f64, cutoff: f64) -> Result<Self> {
        if linewidth <= 0.0 {
            return Err(Error::InvalidInput(format!("diffusion linewidth must be positive, got {linewidth}")));
        }
        let frozen: Vec<bool> = {
            let mut f = vec![false; bath.spins.len()];
            for &i in &bath.frozen_core_members {
                f[i] = true;
            }
            f
        };
        let axis = bath.nv_axis;
        let axis_norm = norm3(axis);
        let mut pairs = Vec::new();
        for i in 0..bath.spins.len() {
            for j in (i + 1)..bath.spins.len() {
                let pi = bath.spins[i].position;
                let pj = bath.spins[j].position;
                let d = [pj[0] - pi[0], pj[1] - pi[1], pj[2] - pi[2]];
                let r = norm3(d);
                if r > cutoff || r == 0.0 {
                    continue;
                }
                let cos_t = dot3(d, axis) / (r * axis_norm);
                let element = nn_dipolar_coupling(r) * (1.0 - 3.0 * cos_t * cos_t) / 2.0;
                let rate = element * element / linewidth;
                if rate > 0.0 {
                    pairs.push((i, j, rate, frozen[i] != frozen[j]));
                }
            }
        }
        Ok(Self { pairs })
    }

    /// Advance the polarization vector by `dt_ms` of pairwise exchange.
    ///
    /// Each pair relaxes toward its mean with the exact two-spin solution,
    /// so the total polarization is conserved and values stay in [-1, 1].
    pub fn step(&self, polarizations: &mut [f64], dt_ms: f64, nv_state_is_zero: bool) {
        let dt_us = dt_ms * 1e3;
        for &(i, j, rate, crosses_core) in &self.pairs {
            if crosses_core && !nv_state_is_zero {
                continue;
            }
            let decay = (-2.0 * rate * dt_us).exp();
            let mean = 0.5 * (polarizations[i] + polarizations[j]);
            let half_diff = 0.5 * (polarizations[i] - polarizations[j]) * decay;
            polarizations[i] = (mean + half_diff).clamp(-1.0, 1.0);
            polarizations[j] = (mean - half_diff).clamp(-1.0, 1.0);
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

/// One diffusion step built directly from a bath (convenience wrapper around
/// [`DiffusionModel`]; precompute the model when stepping repeatedly).
pub fn diffusion_step(
    polarizations: &mut [f64],
    bath: &BathSample,
    linewidth: f64,
    cutoff: f64,
    dt_ms: f64,
    nv_state_is_zero: bool,
) -> Result<()> {
    if dt_ms <= 0.0 {
        return Err(Error::InvalidInput(format!("diffusion step must be positive, got {dt_ms} ms")));
    }
    DiffusionModel::new(bath, linewidth, cutoff)?.step(polarizations, dt_ms, nv_state_is_zero);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_density_matches_diamond() {
        let sites = lattice_sites(3.0);
        let volume = 4.0 / 3.0 * std::f64::consts::PI * 27.0;
        let density = sites.len() as f64 / volume;
        assert!((density - NUMBER_DENSITY).abs() < 4.0, "density {density}");
    }

    #[test]
    fn full_occupancy_fills_every_site() {
        let bath = sample_bath(1, 0.5, 1.0).unwrap();
        assert_eq!(bath.spins.len(), lattice_sites(0.5).len());
        assert!(!bath.spins.is_empty());
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_bath(42, 2.0, 0.011).unwrap();
        let b = sample_bath(42, 2.0, 0.011).unwrap();
        assert_eq!(a, b);
        let c = sample_bath(43, 2.0, 0.011).unwrap();
        assert_ne!(a.spins, c.spins);
    }

    #[test]
    fn occupancy_statistics_binomial() {
        let n_sites = lattice_sites(3.0).len();
        let n_seeds = 200;
        let mean = (0..n_seeds)
            .map(|s| sample_bath(s, 3.0, 0.011).unwrap().spins.len() as f64)
            .sum::<f64>()
            / n_seeds as f64;
        let expected = 0.011 * n_sites as f64;
        let se = (n_sites as f64 * 0.011 * 0.989).sqrt() / (n_seeds as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean}, expected {expected} ± {}",
            3.0 * se
        );
    }

    #[test]
    fn radius_for_500_spins() {
        let r = radius_for_expected_spins(500, 0.011);
        assert!((r - 3.95).abs() < 0.02, "r = {r}");
        let mean = (0..30)
            .map(|s| sample_bath(s, r, 0.011).unwrap().spins.len() as f64)
            .sum::<f64>()
            / 30.0;
        assert!((mean - 500.0).abs() <= 50.0, "mean count {mean}");
    }

    #[test]
    fn small_radius_rejected() {
        assert!(sample_bath(0, 0.3, 0.011).is_err());
        assert!(sample_bath(0, 2.0, 0.0).is_err());
        assert!(sample_bath(0, 2.0, 1.5).is_err());
    }

    #[test]
    fn hyperfine_magic_angle_kills_secular_part() {
        let cos_m = (1.0f64 / 3.0).sqrt();
        let sin_m = (2.0f64 / 3.0).sqrt();
        let pos = [sin_m * 2.0, 0.0, cos_m * 2.0];
        let (a_z, _) = hyperfine_coupling(pos, [0.0, 0.0, 1.0]).unwrap();
        assert!(a_z.abs() < 1e-15);
    }

    #[test]
    fn hyperfine_on_axis_at_two_nm() {
        // b(2 nm) evaluated independently: 2.4856e-3 MHz; a_z = -2b ≈ -5 kHz,
        // within a factor of 4 of the 10 kHz frozen-core scale.
        let (a_z, a_x) = hyperfine_coupling([0.0, 0.0, 2.0], [0.0, 0.0, 1.0]).unwrap();
        assert!((a_z - (-0.004971248465371641)).abs() < 1e-12);
        assert!(a_x.abs() < 1e-15);
        assert!(a_z.abs() >= 0.01 / 4.0 && a_z.abs() <= 0.01 * 4.0);
    }

    #[test]
    fn hyperfine_inverse_cube() {
        let p1 = [0.9, 0.4, 1.3];
        let p2 = [1.8, 0.8, 2.6];
        let (az1, ax1) = hyperfine_coupling(p1, default_nv_axis()).unwrap();
        let (az2, ax2) = hyperfine_coupling(p2, default_nv_axis()).unwrap();
        assert!((az1 / az2 - 8.0).abs() < 1e-12 * 8.0);
        assert!((ax1 / ax2 - 8.0).abs() < 1e-12 * 8.0);
    }

    #[test]
    fn hyperfine_rotation_covariant() {
        // rotate position and axis together about y: couplings unchanged
        let angle: f64 = 0.7;
        let (s, c) = angle.sin_cos();
        let rot = |v: [f64; 3]| [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]];
        let pos = [1.1, -0.3, 0.8];
        let axis = [0.0, 0.0, 1.0];
        let (az1, ax1) = hyperfine_coupling(pos, axis).unwrap();
        let (az2, ax2) = hyperfine_coupling(rot(pos), rot(axis)).unwrap();
        assert!((az1 - az2).abs() < 1e-12 * az1.abs().max(1e-6));
        assert!((ax1 - ax2).abs() < 1e-12 * ax1.abs().max(1e-6));
    }

    #[test]
    fn hyperfine_rejects_excluded_positions() {
        assert!(matches!(
            hyperfine_coupling([0.05, 0.0, 0.0], [0.0, 0.0, 1.0]),
            Err(Error::InsideExclusionRadius { .. })
        ));
    }

    #[test]
    fn nn_dipolar_values() {
        // bonded pair: 2.0804e-3 MHz ≈ 2.1 kHz, within ±15% of 2 kHz
        let d = nn_dipolar_coupling(BOND_LENGTH);
        assert!((d - 0.002080381761502382).abs() < 1e-15);
        assert!((d - 0.002).abs() <= 0.15 * 0.002);
        // r^-3 law
        assert!((nn_dipolar_coupling(2.0 * BOND_LENGTH) - d / 8.0).abs() < 1e-18);
        // one lattice constant out: ≈ 0.17 kHz
        let d2 = nn_dipolar_coupling(LATTICE_CONSTANT);
        assert!((d2 - d / (LATTICE_CONSTANT / BOND_LENGTH).powi(3)).abs() < 1e-18);
        assert!((d2 * 1e3 - 0.17).abs() < 0.01);
    }

    #[test]
    fn frozen_core_partition_limits() {
        let bath = sample_bath(7, 3.0, 0.011).unwrap();
        let all = frozen_core_partition(&bath, 1e-300).unwrap();
        assert_eq!(all.len(), bath.spins.len());
        let none = frozen_core_partition(&bath, f64::INFINITY).unwrap();
        assert!(none.is_empty());
        assert!(frozen_core_partition(&bath, 0.0).is_err());
    }

    #[test]
    fn frozen_core_members_sit_near_the_nv() {
        for seed in 0..20 {
            let bath = sample_bath(seed, 3.5, 0.05).unwrap();
            for &i in &frozen_core_partition(&bath, 0.01).unwrap() {
                let r = norm3(bath.spins[i].position);
                assert!(r <= 3.0, "frozen-core member at {r} nm");
            }
        }
    }

    #[test]
    fn frozen_core_monotone_in_threshold() {
        let bath = sample_bath(3, 3.0, 0.02).unwrap();
        let mut previous = usize::MAX;
        for threshold in [1e-6, 1e-4, 1e-3, 0.01, 0.1] {
            let n = frozen_core_partition(&bath, threshold).unwrap().len();
            assert!(n <= previous);
            previous = n;
        }
    }

    fn two_spin_bath(separation: f64) -> BathSample {
        let nv_axis = [0.0, 0.0, 1.0];
        let positions = [[1.0, 0.0, 1.0], [1.0 + separation, 0.0, 1.0]];
        let spins: Vec<BathSpin> = positions
            .iter()
            .map(|&p| {
                let (a_z, a_x) = hyperfine_coupling(p, nv_axis).unwrap();
                BathSpin { position: p, a_z, a_x }
            })
            .collect();
        let mut bath = BathSample {
            seed: 0,
            radius: 5.0,
            abundance: 1.0,
            nv_axis,
            spins,
            frozen_threshold: FROZEN_CORE_THRESHOLD,
            frozen_core_members: Vec::new(),
        };
        bath.frozen_core_members = frozen_core_partition(&bath, bath.frozen_threshold).unwrap();
        bath
    }

    #[test]
    fn diffusion_equilibrates_a_pair() {
        let bath = two_spin_bath(BOND_LENGTH);
        let mut p = vec![1.0, 0.0];
        diffusion_step(&mut p, &bath, 0.002, 1.5, 1e6, true).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert!((p[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn diffusion_uniform_is_fixed_point() {
        let bath = sample_bath(5, 2.5, 0.05).unwrap();
        let n = bath.spins.len();
        let mut p = vec![0.37; n];
        diffusion_step(&mut p, &bath, 0.002, 1.5, 10.0, true).unwrap();
        for v in &p {
            assert_eq!(*v, 0.37);
        }
    }

    #[test]
    fn diffusion_conserves_total_polarization() {
        let bath = sample_bath(11, 3.0, 0.03).unwrap();
        let n = bath.spins.len();
        let model = DiffusionModel::new(&bath, 0.002, 1.5).unwrap();
        let mut p: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.8 } else { -0.1 }).collect();
        let total0: f64 = p.iter().sum();
        for _ in 0..1000 {
            model.step(&mut p, 0.01, true);
        }
        let total: f64 = p.iter().sum();
        assert!((total - total0).abs() <= 1e-9, "drift {}", total - total0);
        for v in &p {
            assert!((-1.0..=1.0).contains(v));
        }
    }

    #[test]
    fn gradient_suppresses_core_bulk_exchange() {
        // one frozen-core spin next to the NV, one bulk partner further out
        let nv_axis = [0.0, 0.0, 1.0];
        let positions = [[0.0, 0.0, 0.5], [0.0, 0.0, 2.8]];
        let spins: Vec<BathSpin> = positions
            .iter()
            .map(|&p| {
                let (a_z, a_x) = hyperfine_coupling(p, nv_axis).unwrap();
                BathSpin { position: p, a_z, a_x }
            })
            .collect();
        let mut bath = BathSample {
            seed: 0,
            radius: 5.0,
            abundance: 1.0,
            nv_axis,
            spins,
            frozen_threshold: FROZEN_CORE_THRESHOLD,
            frozen_core_members: Vec::new(),
        };
        bath.frozen_core_members = frozen_core_partition(&bath, bath.frozen_threshold).unwrap();
        assert_eq!(bath.frozen_core_members, vec![0]);

        let model = DiffusionModel::new(&bath, 0.002, 5.0).unwrap();
        assert_eq!(model.pair_count(), 1);
        let mut p = vec![1.0, 0.0];
        model.step(&mut p, 1e12, false);
        assert_eq!(p, vec![1.0, 0.0]);
        model.step(&mut p, 1e12, true);
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bath_roundtrips_through_json() {
        let bath = sample_bath(9, 2.0, 0.05).unwrap();
        let text = serde_json::to_string(&bath).unwrap();
        let back: BathSample = serde_json::from_str(&text).unwrap();
        assert_eq!(bath, back);
    }
}

