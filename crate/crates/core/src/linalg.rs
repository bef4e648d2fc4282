//! Dense SVD helpers: rank, null space, truncated pseudo-inverse.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{lit, to_f64, Real};

/// Thin SVD `a = U diag(s) Vᵀ` with `s` descending.
///
/// Backed by faer's blocked SVD, which is an order of magnitude faster than
/// nalgebra's on the system sizes of fine meshes. The factorization runs in
/// `f64` whatever `T` is.
struct ThinSvd<T: Real> {
    u: DMatrix<T>,
    s: Vec<T>,
    v: DMatrix<T>,
}

fn thin_svd<T: Real>(a: &DMatrix<T>) -> ThinSvd<T> {
    let (m, n) = a.shape();
    let mat = faer::Mat::<f64>::from_fn(m, n, |i, j| to_f64(a[(i, j)]));
    let svd = mat.thin_svd().expect("SVD of a finite matrix converges");
    let (u, v) = (svd.U(), svd.V());
    let k = m.min(n);
    ThinSvd {
        u: DMatrix::from_fn(m, k, |i, j| lit(u[(i, j)])),
        s: (0..k).map(|i| lit(svd.S()[i])).collect(),
        v: DMatrix::from_fn(n, k, |i, j| lit(v[(i, j)])),
    }
}

/// Singular values (descending) and the matching right singular vectors as
/// columns of an `n x n` matrix. Rows are zero-padded so that every column
/// direction gets a singular value, including the null directions of wide
/// matrices.
pub struct FullSvd<T: Real> {
    pub values: Vec<T>,
    pub right: DMatrix<T>,
}

pub fn full_svd<T: Real>(a: &DMatrix<T>) -> FullSvd<T> {
    let (m, n) = a.shape();
    let svd = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        thin_svd(&p)
    } else {
        thin_svd(a)
    };
    FullSvd {
        values: svd.s,
        right: svd.v,
    }
}

/// Numerical rank with threshold `rel_tol * largest singular value`.
pub fn rank<T: Real>(a: &DMatrix<T>, rel_tol: T) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = full_svd(a).values;
    let cut = rel_tol * s[0];
    s.iter().filter(|&&x| x > cut).count()
}

/// Null space of `a` with the singular-value gap around the cut.
#[derive(Debug, Clone)]
pub struct NullSpace<T: Real> {
    /// Orthonormal (Euclidean) basis vectors.
    pub basis: Vec<DVector<T>>,
    /// All singular values, descending, padded to the column count.
    pub singular_values: Vec<T>,
    /// Smallest retained singular value divided by the largest discarded one.
    /// Infinite when nothing was discarded or the discarded values are exactly zero.
    pub gap: f64,
}

pub fn null_space<T: Real>(a: &DMatrix<T>, rel_tol: T) -> NullSpace<T> {
    let n = a.ncols();
    if n == 0 {
        return NullSpace {
            basis: vec![],
            singular_values: vec![],
            gap: f64::INFINITY,
        };
    }
    if a.nrows() == 0 {
        let basis = (0..n)
            .map(|i| DVector::from_fn(n, |r, _| if r == i { T::one() } else { T::zero() }))
            .collect();
        return NullSpace {
            basis,
            singular_values: vec![T::zero(); n],
            gap: f64::INFINITY,
        };
    }
    let svd = full_svd(a);
    let smax = svd.values[0];
    let cut = rel_tol * smax;
    let mut basis = Vec::new();
    let mut smallest_kept: Option<T> = None;
    let mut largest_dropped = T::zero();
    for (i, &s) in svd.values.iter().enumerate() {
        if s > cut {
            smallest_kept = Some(s);
        } else {
            largest_dropped = largest_dropped.max(s);
            basis.push(svd.right.column(i).into_owned());
        }
    }
    let gap = match smallest_kept {
        Some(k) if largest_dropped > T::zero() => {
            (k / largest_dropped).to_f64().unwrap_or(f64::INFINITY)
        }
        _ => f64::INFINITY,
    };
    NullSpace {
        basis,
        singular_values: svd.values,
        gap,
    }
}

/// Minimum-norm least-squares solution with singular values below
/// `rel_tol * largest` truncated.
pub fn pinv_solve<T: Real>(a: &DMatrix<T>, b: &DVector<T>, rel_tol: T) -> (DVector<T>, usize) {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return (DVector::zeros(n), 0);
    }
    let svd = thin_svd(a);
    let smax = svd.s.first().copied().unwrap_or_else(T::zero);
    let cut = rel_tol * smax;
    let mut x = DVector::zeros(n);
    let mut used = 0;
    for (i, &s) in svd.s.iter().enumerate() {
        if s > cut && s > T::zero() {
            used += 1;
            x += svd.v.column(i) * (svd.u.column(i).dot(b) / s);
        }
    }
    (x, used)
}

/// Default relative threshold for kernel detection.
pub fn kernel_tol<T: Real>() -> T {
    lit(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        // Two equations, four unknowns: kernel has dimension 2.
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.basis.len(), 2);
        for v in &ns.basis {
            assert!((&a * v).norm() < 1e-12);
        }
    }

    #[test]
    fn pinv_is_minimum_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let (x, used): (DVector<f64>, usize) = pinv_solve(&a, &b, 1e-12);
        assert_eq!(used, 1);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_rank_one() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, -1.0, -2.0, -3.0]);
        assert_eq!(rank(&a, 1e-9), 1);
        assert_eq!(rank(&a.cast::<f32>(), 1e-5), 1);
    }
}
