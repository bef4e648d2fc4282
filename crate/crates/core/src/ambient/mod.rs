//! Flat Calabi-Yau structure on R^{2n} = C^n with coordinates
//! `(x_1, y_1, ..., x_n, y_n)`, and codimension-two scaffolds.
//!
//! Conventions: `ω(u, v) = Σ (u_{x_i} v_{y_i} - u_{y_i} v_{x_i})`,
//! `J(x, y) = (-y, x)`, `g(u, v) = ω(u, J v)`, `α = dz_1 ∧ ... ∧ dz_n`.
//! The phase enters as `e^{-iθ} α` throughout.

mod config;
mod scaffold;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{err, ErrorKind, Result};
use crate::scalar::{from_usize, lit, Real};

pub use config::{load_scaffold, parse_scaffold, ScaffoldConfig};
pub use scaffold::{
    boundary_frames, check_scaffold_conditions, propagation_order, Confinement, ProductChart,
    Scaffold, ScaffoldEval, ScaffoldReport, VertexCheck, PROJECTION_MAX_ITER, PROJECTION_TOL,
    SYMPLECTIC_TOL,
};

const MODULE: &str = "ambient";

/// `ω(u, v)`; callers guarantee matching even dimensions.
pub fn omega<T: Real>(u: &DVector<T>, v: &DVector<T>) -> T {
    let mut s = T::zero();
    for i in (0..u.len()).step_by(2) {
        s += u[i] * v[i + 1] - u[i + 1] * v[i];
    }
    s
}

/// Checked `ω(u, v)`.
pub fn omega_eval<T: Real>(u: &DVector<T>, v: &DVector<T>) -> Result<T> {
    if u.len() != v.len() || !u.len().is_multiple_of(2) {
        return err(
            MODULE,
            "omega_eval",
            ErrorKind::Dimension {
                expected: u.len().max(2),
                got: v.len(),
            },
        );
    }
    Ok(omega(u, v))
}

/// The complex structure `J(x_i, y_i) = (-y_i, x_i)`.
pub fn j_apply<T: Real>(v: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(v.len());
    for i in (0..v.len()).step_by(2) {
        out[i] = -v[i + 1];
        out[i + 1] = v[i];
    }
    out
}

/// Matrix `Ω` with `ω(u, v) = uᵀ Ω v`; Hamiltonian fields are `Ω ∇H`.
pub fn omega_matrix<T: Real>(dim: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in (0..dim).step_by(2) {
        m[(i, i + 1)] = T::one();
        m[(i + 1, i)] = -T::one();
    }
    m
}

/// `g(u, v) = ω(u, J v)`; equals the Euclidean dot product.
pub fn metric<T: Real>(u: &DVector<T>, v: &DVector<T>) -> T {
    omega(u, &j_apply(v))
}

/// Complex coordinates `z_i = x_i + i y_i` of a real vector.
pub fn to_complex<T: Real>(v: &DVector<T>) -> Vec<Complex<T>> {
    (0..v.len() / 2)
        .map(|i| Complex::new(v[2 * i], v[2 * i + 1]))
        .collect()
}

/// Flat Calabi-Yau data of C^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmbientSpace {
    pub n: usize,
}

impl AmbientSpace {
    pub fn new(n: usize) -> Self {
        AmbientSpace { n }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Largest violation of `ω(Ju, Jv) = ω(u, v)` and `g(u, v) = ω(u, Jv)`
    /// on a pair of vectors.
    pub fn compatibility_defect<T: Real>(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        let a = crate::scalar::abs(omega(&j_apply(u), &j_apply(v)) - omega(u, v));
        let b = crate::scalar::abs(u.dot(v) - metric(u, v));
        a.max(b)
    }

    /// `α(∂x_1, ..., ∂x_n)`.
    pub fn alpha_on_standard_frame<T: Real>(&self) -> Complex<T> {
        let dim = self.dim();
        let cols: Vec<DVector<T>> = (0..self.n)
            .map(|i| DVector::from_fn(dim, |r, _| if r == 2 * i { T::one() } else { T::zero() }))
            .collect();
        complex_det(&cols)
    }
}

/// Determinant of the complex matrix whose columns are the complexified
/// real vectors `cols`.
pub fn complex_det<T: Real>(cols: &[DVector<T>]) -> Complex<T> {
    let n = cols.len();
    let z = DMatrix::from_fn(n, n, |r, c| {
        Complex::new(cols[c][2 * r], cols[c][2 * r + 1])
    });
    z.determinant()
}

fn factorial<T: Real>(n: usize) -> T {
    (2..=n).fold(T::one(), |acc, i| acc * from_usize::<T>(i))
}

fn edges<T: Real>(pts: &[&DVector<T>]) -> Vec<DVector<T>> {
    pts[1..].iter().map(|p| *p - pts[0]).collect()
}

fn check_simplex<T: Real>(pts: &[&DVector<T>], k: usize, op: &'static str) -> Result<()> {
    if pts.len() != k + 1 {
        return err(
            MODULE,
            op,
            ErrorKind::Dimension {
                expected: k + 1,
                got: pts.len(),
            },
        );
    }
    let dim = pts[0].len();
    if !dim.is_multiple_of(2) || pts.iter().any(|p| p.len() != dim) {
        return err(
            MODULE,
            op,
            ErrorKind::Dimension {
                expected: dim + dim % 2,
                got: dim,
            },
        );
    }
    let vol = crate::mesh::simplex_volume(pts);
    let longest = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| (*a - *b).norm()))
        .fold(T::zero(), |x, y| x.max(y));
    if vol <= lit::<T>(crate::mesh::DEGENERACY_TOL) * longest.powi(k as i32) {
        return err(
            MODULE,
            op,
            ErrorKind::Degenerate {
                simplex: 0,
                volume: crate::scalar::to_f64(vol),
            },
        );
    }
    Ok(())
}

/// `ω` pulled back along the affine 2-simplex spanned by an edge pair.
pub fn pullback_omega<T: Real>(e1: &DVector<T>, e2: &DVector<T>) -> T {
    omega(e1, e2)
}

/// Exact `∫ ω` over the oriented affine triangle `pts[0..3]`.
pub fn omega_integral<T: Real>(pts: &[&DVector<T>]) -> Result<T> {
    check_simplex(pts, 2, "omega_integral")?;
    let e = edges(pts);
    Ok(omega(&e[0], &e[1]) * lit(0.5))
}

/// Exact `∫ e^{-iθ} α` over the oriented affine n-simplex `pts[0..=n]`:
/// `e^{-iθ} det(Z) / n!` with `Z` the complexified edge matrix.
pub fn alpha_integral<T: Real>(pts: &[&DVector<T>], theta: T) -> Result<Complex<T>> {
    let n = pts.first().map_or(0, |p| p.len() / 2);
    check_simplex(pts, n, "alpha_integral")?;
    Ok(alpha_integral_unchecked(pts, theta))
}

pub(crate) fn alpha_integral_unchecked<T: Real>(pts: &[&DVector<T>], theta: T) -> Complex<T> {
    let n = pts.len() - 1;
    let det = complex_det(&edges(pts));
    phase(theta) * det / Complex::new(factorial::<T>(n), T::zero())
}

/// `e^{-iθ}`.
pub fn phase<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), -theta.sin())
}

#[cfg(test)]
mod tests;
