use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spin multiplicity {0} (expected 2 or 3)")]
    UnsupportedMultiplicity(usize),

    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds {tol:.3e})")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("negative time step {0} µs")]
    NegativeTimeStep(f64),

    #[error(
        "strong-field condition violated: gamma_e*B = {gamma_e_b:.1} MHz must exceed 2*D = {:.1} MHz; \
         use the lab-frame Hamiltonian instead",
        2.0 * d
    )]
    StrongFieldViolation { gamma_e_b: f64, d: f64 },

    #[error("dressed states undefined for Delta = Omega = 0 (degenerate)")]
    DegenerateDressedStates,

    #[error(
        "no dressed-state resonance: Rabi frequency {omega:.4} MHz must be below the \
         nuclear Larmor frequency {larmor:.4} MHz"
    )]
    NoResonance { omega: f64, larmor: f64 },

    #[error("position inside the vacancy exclusion radius ({r:.4} nm < {min:.4} nm)")]
    InsideExclusionRadius { r: f64, min: f64 },

    #[error("bath radius {0} nm contains no lattice sites")]
    EmptyBath(f64),

    #[error("time-step budget exceeded: sweep needs {needed} segments, budget is {budget}")]
    StepBudgetExceeded { needed: usize, budget: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
