//! Real simplicial homology ranks.

use nalgebra::DMatrix;

use super::SimplicialPatch;
use crate::linalg::rank;
use crate::scalar::{lit, Real};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

/// Dense coboundary matrix `d_k`: rows are (k+1)-simplices, columns
/// k-simplices, entries the incidence signs.
pub fn coboundary_matrix<T: Real>(m: &SimplicialPatch<T>, k: usize) -> DMatrix<T> {
    let rows = m.num_simplices(k + 1);
    let cols = m.num_simplices(k);
    let mut d = DMatrix::zeros(rows, cols);
    if k < m.intrinsic_dim() {
        for s in 0..rows {
            for inc in m.faces_of(k + 1, s) {
                d[(s, inc.face)] = if inc.sign > 0 { T::one() } else { -T::one() };
            }
        }
    }
    d
}

/// `(b0, b1)` over the reals: `b_k = dim C_k - rank d_k - rank d_{k-1}`.
pub fn betti_numbers<T: Real>(m: &SimplicialPatch<T>) -> (usize, usize) {
    let tol = lit::<T>(RANK_TOL);
    let rank_d0 = rank(&coboundary_matrix(m, 0), tol);
    let rank_d1 = if m.intrinsic_dim() >= 2 {
        rank(&coboundary_matrix(m, 1), tol)
    } else {
        0
    };
    let b0 = m.num_simplices(0) - rank_d0;
    let b1 = m.num_simplices(1) - rank_d0 - rank_d1;
    (b0, b1)
}
