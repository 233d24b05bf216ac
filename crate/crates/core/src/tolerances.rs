//! Numerical tolerances shared across modules.

/// One record holding every threshold the simulator checks against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of ‖ψ‖ from 1 after a public operation.
    pub norm: f64,
    /// Allowed deviation of U†U from the identity for gates.
    pub unitarity: f64,
    /// Below this post-measurement norm a trajectory is considered annihilated.
    pub annihilation: f64,
    /// Hermiticity, trace and positivity slack for density matrices.
    pub density: f64,
    /// Maximum drift from orthonormality of tracked Lyapunov vectors.
    pub orthonormality: f64,
    /// Relative residual below which a Gram-Schmidt vector counts as dependent.
    pub rank_collapse: f64,
    /// Slack on the majorization width bound.
    pub width_bound: f64,
    /// Off-diagonal Frobenius norm at which the Jacobi eigensolver stops.
    pub jacobi: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-10,
        unitarity: 1e-10,
        annihilation: 1e-150,
        density: 1e-10,
        orthonormality: 1e-8,
        rank_collapse: 1e-14,
        width_bound: 1e-9,
        jacobi: 1e-15,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;
