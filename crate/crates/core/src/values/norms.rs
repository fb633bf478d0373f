use crate::correlations::{Certificate, CorrelationMatrix, Matrix};

/// `max_i (sum_j M_ij^2)^(1/2)`.
pub fn linf_l2_norm(m: &Matrix) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// `sum_i (sum_j M_ij^2)^(1/2)`.
pub fn l1_l2_norm(m: &Matrix) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

/// O(n^2) locality test: `||gamma||_pi <= sqrt(2) ||gamma||_{l_inf(l_2)}`, so
/// a maximal row norm of at most `1/sqrt(2)` proves `gamma` local. One-sided:
/// `None` says nothing about nonlocality.
pub fn certify_local_fast(gamma: &CorrelationMatrix) -> Option<Certificate> {
    let linf_l2 = linf_l2_norm(gamma.entries());
    within_fast_bound(gamma.entries()).then_some(Certificate::LocalNormBound { linf_l2 })
}

/// `2 max_i |row_i|^2 <= 1`, which is `sqrt(2) ||M||_{l_inf(l_2)} <= 1`
/// without the rounding of the square roots.
pub(crate) fn within_fast_bound(m: &Matrix) -> bool {
    m.row_iter().all(|r| 2.0 * r.norm_squared() <= 1.0)
}
