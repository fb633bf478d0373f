//! Tolerances shared by every certifier and verifier.
//!
//! Double-precision accumulation over n <= 4096 inner products stays below
//! 1e-10 relative error, so these margins leave several orders of headroom.

/// Entrywise reconstruction error allowed for a local decomposition.
pub const RECONSTRUCTION: f64 = 1e-8;

/// Deviation from unit Euclidean norm allowed for ensemble vectors.
pub const UNIT_NORM: f64 = 1e-12;

/// Margin for strict inequalities (`x > bound + STRICT_MARGIN`).
pub const STRICT_MARGIN: f64 = 1e-8;

/// Slack on `|gamma_ij| <= 1`.
pub const ENTRY_BOUND: f64 = 1e-12;

/// Orthogonality of sampled orthogonal matrices, entrywise.
pub const ORTHOGONALITY: f64 = 1e-10;

/// Relative pivot floor below which Gram-Schmidt reports rank deficiency.
pub const GS_PIVOT: f64 = 1e-10;

/// Feasibility margin for the quantum-value dual certificate.
pub const EIGEN_FEASIBILITY: f64 = 1e-8;

/// Upper end of the Grothendieck constant bracket, rounded up.
pub const GROTHENDIECK_UPPER: f64 = 1.78222;

/// Lower end of the Grothendieck constant bracket.
pub const GROTHENDIECK_LOWER: f64 = 1.67696;

/// Asymptotic classical-value constant for gaussian games, `2 sqrt(ln 2)`
/// truncated to four decimals.
pub const CLASSICAL_GAUSSIAN_CONSTANT: f64 = 1.6651;

/// Largest n for which exponential enumerations are allowed.
pub const EXACT_LIMIT: usize = 20;
