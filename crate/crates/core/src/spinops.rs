//! Dense complex-matrix algebra for the small spin Hilbert spaces used here
//! (dimensions 2 to 6): spin operators, tensor products, exact propagators via
//! spectral decomposition, and unitarity checks.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

/// Complex matrix element type.
pub type C64 = Complex<f64>;
/// Dense complex matrix; Hamiltonians carry MHz (linear frequency) entries.
pub type CMat = DMatrix<C64>;
/// Dense complex state vector.
pub type CVec = DVector<C64>;

/// Relative hermiticity tolerance for constructed Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real scalar as a complex number, for scaling operators.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Identity matrix of dimension `n`.
pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Spin operators (Sx, Sy, Sz) for multiplicity 2 (spin-1/2) or 3 (spin-1).
///
/// Spin-1/2 operators are 1/2 times the Pauli matrices; spin-1 operators have
/// eigenvalues {-1, 0, +1}. Both satisfy [Sx, Sy] = i Sz cyclically.
pub fn spin_operators(multiplicity: usize) -> Result<(CMat, CMat, CMat)> {
    match multiplicity {
        2 => {
            let sx = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
            let sy = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
            let sz = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
            Ok((sx, sy, sz))
        }
        3 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let sx = CMat::from_row_slice(
                3,
                3,
                &[
                    c(0.0, 0.0), c(s, 0.0),   c(0.0, 0.0),
                    c(s, 0.0),   c(0.0, 0.0), c(s, 0.0),
                    c(0.0, 0.0), c(s, 0.0),   c(0.0, 0.0),
                ],
            );
            let sy = CMat::from_row_slice(
                3,
                3,
                &[
                    c(0.0, 0.0), c(0.0, -s),  c(0.0, 0.0),
                    c(0.0, s),   c(0.0, 0.0), c(0.0, -s),
                    c(0.0, 0.0), c(0.0, s),   c(0.0, 0.0),
                ],
            );
            let sz = CMat::from_row_slice(
                3,
                3,
                &[
                    c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0),
                ],
            );
            Ok((sx, sy, sz))
        }
        m => Err(Error::UnsupportedMultiplicity(m)),
    }
}

/// Kronecker (tensor) product A ⊗ B.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest absolute deviation from hermiticity, max|H - H†|.
pub fn hermiticity_defect(h: &CMat) -> f64 {
    let mut defect: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    defect
}

fn max_abs(h: &CMat) -> f64 {
    h.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn check_hermitian(h: &CMat) -> Result<()> {
    let defect = hermiticity_defect(h);
    let tol = HERMITICITY_TOL * max_abs(h).max(1.0);
    if defect > tol {
        return Err(Error::NonHermitian { defect, tol });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: H = V diag(λ) V† with real λ.
///
/// Returned eigenvalues are sorted ascending; columns of V are the matching
/// orthonormal eigenvectors.
pub struct Spectral {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMat,
}

impl Spectral {
    /// Decompose a Hermitian matrix (entries in MHz).
    pub fn new(h: &CMat) -> Result<Self> {
        check_hermitian(h)?;
        let eig = h.clone().symmetric_eigen();
        // Sort ascending for stable downstream conventions.
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let mut vals = DVector::zeros(n);
        let mut vecs = CMat::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vals[k] = eig.eigenvalues[i];
            vecs.set_column(k, &eig.eigenvectors.column(i));
        }
        Ok(Self { eigenvalues: vals, eigenvectors: vecs })
    }

    /// Propagator U = exp(-i 2π H dt) from the stored decomposition.
    pub fn propagator(&self, dt: f64) -> CMat {
        let n = self.eigenvalues.len();
        let mut phases = CMat::zeros(n, n);
        for k in 0..n {
            let phi = -2.0 * std::f64::consts::PI * self.eigenvalues[k] * dt;
            phases[(k, k)] = c(phi.cos(), phi.sin());
        }
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }

    /// Evolve a state: ψ(dt) = exp(-i 2π H dt) ψ0, without forming U.
    pub fn evolve(&self, psi0: &CVec, dt: f64) -> CVec {
        let amps = self.eigenvectors.adjoint() * psi0;
        let mut out = CVec::zeros(psi0.len());
        for k in 0..self.eigenvalues.len() {
            let phi = -2.0 * std::f64::consts::PI * self.eigenvalues[k] * dt;
            out += self.eigenvectors.column(k) * (amps[k] * c(phi.cos(), phi.sin()));
        }
        out
    }
}

/// Propagator U = exp(-i 2π H dt) for a Hermitian H in MHz and dt in µs.
///
/// The 2π converts linear-frequency matrix elements to angular phase. Uses
/// spectral decomposition, exact for the ≤ 6x6 Hermitian matrices used here.
pub fn propagator(h: &CMat, dt: f64) -> Result<CMat> {
    if dt < 0.0 {
        return Err(Error::NegativeTimeStep(dt));
    }
    Ok(Spectral::new(h)?.propagator(dt))
}

/// Frobenius-norm deviation from unitarity, ‖U†U - I‖_F.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    let residual = u.adjoint() * u - identity(n);
    residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
