//! Game values, tensor norms and the certifiers built on them.

mod chsh;
mod classical;
pub(crate) mod norms;
mod pinorm;
mod quantum;
pub mod simplex;
mod witness;

pub use chsh::{certify_nonlocal_chsh, chsh_scan, chsh_value_at, ChshMode, ChshScan};
pub use classical::classical_value_exact;
pub use norms::{certify_local_fast, l1_l2_norm, linf_l2_norm};
pub use pinorm::{pi_norm_exact, pi_norm_with, PiNormOptions, PiNormResult};
pub use quantum::{
    ascent_trace, quantum_value_bounds, quantum_value_lower, quantum_value_upper, AscentOptions,
    QuantumLower, QuantumUpper, QuantumValueBounds, UpperOptions,
};
pub use witness::{coupled_svd_witness, statistical_threshold, SvdWitness, ThresholdMode};
