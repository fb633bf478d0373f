//! Certification of locality and nonlocality for random bipartite
//! correlation matrices `gamma_ij = <u_i, v_j>`.
//!
//! The crate samples correlation matrices from Haar-sphere, Bernoulli and
//! SVD-coupled ensembles, and classifies each one with a fixed pipeline of
//! certifiers whose outputs can be re-verified independently:
//!
//! * [`values::certify_local_fast`]: `sqrt(2) * ||gamma||_{l_inf(l_2)} <= 1`
//! * [`values::certify_nonlocal_chsh`]: a CHSH sub-block exceeding 2
//! * [`values::pi_norm_exact`]: projective norm by column generation (n <= 20)
//! * [`values::coupled_svd_witness`]: the gaussian witness whose singular
//!   vectors generate the correlation (statistical only)
//!
//! [`rmt`] holds the Marcenko-Pastur law, the decoupling envelope and the
//! threshold solver; [`experiments`] runs reproducible phase sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlations;
pub mod error;
pub mod experiments;
pub mod format;
pub mod rmt;
pub mod sampling;
pub mod tolerance;
pub mod values;

pub use correlations::{
    gram, verify_certificate, BellWitness, Certificate, ClassicalBound, Classification,
    CorrelationMatrix, SignPair, Verdict, VectorEnsemble,
};
pub use error::{Error, Result};
pub use sampling::Seed;
