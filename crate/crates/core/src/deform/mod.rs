//! Normal deformations of a Lagrangian patch with boundary on a scaffold:
//! the nonlinear residual `Φ(V, θ) = (ω, -Im(e^{-iθ} α))` of the deformed
//! patch, its linearization, Newton solves and moduli exploration.
//!
//! Unknowns are normal fields only. At a vertex with orthonormal tangent
//! basis `T_v` a normal field is `V = J T_v c`; at a boundary vertex the
//! basis is restricted to the boundary tangent directions, which is exactly
//! the constraint `ω(V, N) = 0`. Deformed positions come from the
//! move-then-project retraction: interior `p + V`, boundary `P_W(p + V)`.

mod linear;
mod metric;
mod newton;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::ambient::{alpha_integral, omega, omega_integral, phase, Confinement};
use crate::dec::Cochain;
use crate::error::{err, Error, ErrorKind, Result};
use crate::mesh::{boundary_data, BoundaryData, SimplicialPatch};
use crate::scalar::{abs, from_usize, lit, max_abs, principal_angle, to_f64, Real};

pub use linear::{linearize_at_zero, moduli_basis, LinearizedOperator};
pub use metric::{build_hat_metric, bump, geodesic_shoot, HatMetric};
pub use newton::{moduli_step, newton_solve, NewtonOptions};

const MODULE: &str = "deform";

/// Tolerance of the normal-field constraints (relative to `max(1, |V|)`).
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Largest residual norm accepted as "special Lagrangian" for a base patch.
pub const BASE_SL_TOL: f64 = 1e-8;

/// Per-vertex displacement in `R^{2n}`, normal to the base patch.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField<T: Real> {
    pub values: Vec<DVector<T>>,
}

impl<T: Real> NormalField<T> {
    pub fn zeros(m: &SimplicialPatch<T>) -> Self {
        NormalField {
            values: vec![DVector::zeros(m.ambient_dim()); m.num_simplices(0)],
        }
    }

    /// Largest vertex displacement.
    pub fn max_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    pub fn scaled(&self, s: T) -> Self {
        NormalField {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Parametrization of the admissible normal fields of a base patch.
#[derive(Debug, Clone)]
pub struct FieldSpace<T: Real> {
    /// Per vertex, the columns `J·(tangent basis)` spanning admissible values.
    pub bases: Vec<DMatrix<T>>,
    /// Orthonormal tangent basis of L at each vertex.
    pub tangents: Vec<DMatrix<T>>,
    /// Inward normal at boundary vertices.
    pub normals: Vec<Option<DVector<T>>>,
    offsets: Vec<usize>,
    dim: usize,
}

fn j_columns<T: Real>(t: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(t.nrows(), t.ncols());
    for c in 0..t.ncols() {
        out.set_column(c, &crate::ambient::j_apply(&t.column(c).into_owned()));
    }
    out
}

impl<T: Real> FieldSpace<T> {
    pub fn new(m: &SimplicialPatch<T>, b: &BoundaryData<T>) -> Self {
        let nv = m.num_simplices(0);
        let mut bases = Vec::with_capacity(nv);
        let mut tangents = Vec::with_capacity(nv);
        let mut normals = vec![None; nv];
        let mut offsets = Vec::with_capacity(nv + 1);
        let mut dim = 0;
        for v in 0..nv {
            offsets.push(dim);
            let (tangent, basis) = match b.position(v) {
                Some(pos) => {
                    normals[v] = Some(b.inward_normal[pos].clone());
                    (b.tangent[pos].clone(), j_columns(&b.boundary_tangent[pos]))
                }
                None => {
                    let t = m.vertex_tangent_basis(v);
                    let jt = j_columns(&t);
                    (t, jt)
                }
            };
            dim += basis.ncols();
            tangents.push(tangent);
            bases.push(basis);
        }
        offsets.push(dim);
        FieldSpace {
            bases,
            tangents,
            normals,
            offsets,
            dim,
        }
    }

    /// Number of coefficients.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn field(&self, coeffs: &DVector<T>) -> NormalField<T> {
        let values = self
            .bases
            .iter()
            .enumerate()
            .map(|(v, basis)| basis * coeffs.rows(self.offsets[v], basis.ncols()))
            .collect();
        NormalField { values }
    }

    /// Coefficients of the orthogonal projection onto the admissible set.
    pub fn coefficients(&self, field: &NormalField<T>) -> DVector<T> {
        let mut c = DVector::zeros(self.dim);
        for (v, basis) in self.bases.iter().enumerate() {
            c.rows_mut(self.offsets[v], basis.ncols())
                .copy_from(&basis.tr_mul(&field.values[v]));
        }
        c
    }

    /// Closest admissible field.
    pub fn project(&self, field: &NormalField<T>) -> NormalField<T> {
        self.field(&self.coefficients(field))
    }

    /// Checks normality and the boundary condition `ω(V, N) = 0`.
    pub fn validate(&self, field: &NormalField<T>) -> Result<()> {
        const OP: &str = "normal_field";
        if field.values.len() != self.bases.len() {
            return err(
                MODULE,
                OP,
                ErrorKind::Dimension {
                    expected: self.bases.len(),
                    got: field.values.len(),
                },
            );
        }
        for (v, val) in field.values.iter().enumerate() {
            let scale = T::one().max(val.norm());
            let tol = lit::<T>(CONSTRAINT_TOL) * scale;
            let tangential = self.tangents[v].tr_mul(val).norm();
            if !(tangential <= tol) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Constraint(format!(
                        "vertex {v}: tangential component {:.3e}",
                        to_f64(tangential)
                    )),
                );
            }
            if let Some(n) = &self.normals[v] {
                let pairing = abs(omega(val, n));
                if !(pairing <= tol) {
                    return err(
                        MODULE,
                        OP,
                        ErrorKind::Constraint(format!(
                            "vertex {v}: |ω(V, N)| = {:.3e}",
                            to_f64(pairing)
                        )),
                    );
                }
            }
        }
        Ok(())
    }
}

/// A deformation `(V, θ)` together with its residual.
#[derive(Debug, Clone)]
pub struct DeformationState<T: Real> {
    pub field: NormalField<T>,
    pub coefficients: DVector<T>,
    /// Phase on the principal branch `(-π, π]`.
    pub theta: T,
    /// Per-2-face `∫ ω` of the deformed patch.
    pub residual_omega: Cochain<T>,
    /// Per-n-simplex `-Im ∫ e^{-iθ} α` of the deformed patch.
    pub residual_alpha: Cochain<T>,
    /// `(‖residual_omega‖∞, ‖residual_alpha‖∞)`.
    pub norms: [T; 2],
    /// Deformed vertex positions.
    pub positions: Vec<DVector<T>>,
    /// Residual norm before each Newton iteration and after the last one.
    pub history: Vec<T>,
    /// Largest component of a Newton correction along the deflated kernel.
    pub kernel_component: T,
}

impl<T: Real> DeformationState<T> {
    pub fn residual_norm(&self) -> T {
        self.norms[0].max(self.norms[1])
    }

    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Deformed patch with the base connectivity.
    pub fn patch(&self, base: &SimplicialPatch<T>) -> Result<SimplicialPatch<T>> {
        base.with_vertices(self.positions.clone())
    }

    fn residual_vector(&self) -> DVector<T> {
        let mut r = self.residual_omega.values.clone();
        r.extend_from_slice(&self.residual_alpha.values);
        DVector::from_vec(r)
    }
}

/// Residual cochains of a patch with the base connectivity and the given
/// vertex positions.
pub fn residual_at_positions<T: Real>(
    m: &SimplicialPatch<T>,
    positions: &[DVector<T>],
    theta: T,
) -> Result<(Cochain<T>, Cochain<T>)> {
    let n = m.intrinsic_dim();
    let reindex = |e: Error, s: usize| match e.kind {
        ErrorKind::Degenerate { volume, .. } => Error::new(
            MODULE,
            "residual",
            ErrorKind::Degenerate { simplex: s, volume },
        ),
        other => Error::new(MODULE, "residual", other),
    };
    let om = m
        .k_simplices(2)
        .iter()
        .enumerate()
        .map(|(s, f)| {
            let pts: Vec<&DVector<T>> = f.iter().map(|&v| &positions[v]).collect();
            omega_integral(&pts).map_err(|e| reindex(e, s))
        })
        .collect::<Result<Vec<T>>>()?;
    let al = m
        .simplices()
        .iter()
        .enumerate()
        .map(|(s, simplex)| {
            let pts: Vec<&DVector<T>> = simplex.iter().map(|&v| &positions[v]).collect();
            alpha_integral(&pts, theta)
                .map(|a| -a.im)
                .map_err(|e| reindex(e, s))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((Cochain::new(2, om), Cochain::new(n, al)))
}

/// Phase `θ` making `Σ ∫ e^{-iθ} α` real and positive: the best-fit phase
/// of a nearly special Lagrangian patch.
pub fn best_fit_theta<T: Real>(m: &SimplicialPatch<T>) -> Result<T> {
    let mut total = Complex::new(T::zero(), T::zero());
    for simplex in m.simplices() {
        let pts: Vec<&DVector<T>> = simplex.iter().map(|&v| m.vertex(v)).collect();
        total += alpha_integral(&pts, T::zero())?;
    }
    Ok(total.im.atan2(total.re))
}

/// Complex cofactor matrix `C_{rj} = (-1)^{r+j} det(minor_{rj})`.
fn complex_cofactors<T: Real>(z: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let n = z.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, Complex::new(T::one(), T::zero()));
    }
    DMatrix::from_fn(n, n, |r, c| {
        let minor = z.clone().remove_row(r).remove_column(c);
        let d = minor.determinant();
        if (r + c) % 2 == 0 {
            d
        } else {
            -d
        }
    })
}

/// Gradient of `-Im(e^{-iθ} det(Z)/n!)` with respect to each vertex, and
/// the θ-derivative `Re(e^{-iθ} det(Z)/n!)`.
fn alpha_gradient<T: Real>(pts: &[&DVector<T>], theta: T) -> (Vec<DVector<T>>, T) {
    let n = pts.len() - 1;
    let dim = pts[0].len();
    let z = DMatrix::from_fn(n, n, |r, c| {
        let e = pts[c + 1] - pts[0];
        Complex::new(e[2 * r], e[2 * r + 1])
    });
    let fact = (2..=n).fold(T::one(), |acc, i| acc * from_usize::<T>(i));
    let ph = phase(theta);
    let cof = complex_cofactors(&z);
    let mut grads = vec![DVector::zeros(dim); n + 1];
    for j in 0..n {
        for r in 0..n {
            let w = ph * cof[(r, j)];
            grads[j + 1][2 * r] = -w.im / fact;
            grads[j + 1][2 * r + 1] = -w.re / fact;
        }
    }
    let sum = grads[1..]
        .iter()
        .fold(DVector::zeros(dim), |acc, g| acc + g);
    grads[0] = -sum;
    let dtheta = (ph * z.determinant()).re / fact;
    (grads, dtheta)
}

/// Gradient of `½ ω(q1 - q0, q2 - q0)` with respect to each vertex.
fn omega_gradient<T: Real>(pts: &[&DVector<T>]) -> [DVector<T>; 3] {
    let om = crate::ambient::omega_matrix::<T>(pts[0].len());
    let e1 = pts[1] - pts[0];
    let e2 = pts[2] - pts[0];
    let half = lit::<T>(0.5);
    let g1 = &om * &e2 * half;
    let g2 = &om * &e1 * (-half);
    let g0 = -(&g1 + &g2);
    [g0, g1, g2]
}

/// Deformation problem: base patch, its boundary data, the confinement of
/// the boundary and the normal-field parametrization.
pub struct Deformer<'a, T: Real> {
    pub mesh: &'a SimplicialPatch<T>,
    pub boundary: BoundaryData<T>,
    pub confinement: &'a dyn Confinement<T>,
    pub space: FieldSpace<T>,
}

impl<'a, T: Real> Deformer<'a, T> {
    pub fn new(m: &'a SimplicialPatch<T>, w: &'a dyn Confinement<T>) -> Result<Self> {
        if w.dim() != m.ambient_dim() {
            return err(
                MODULE,
                "deformer",
                ErrorKind::Dimension {
                    expected: m.ambient_dim(),
                    got: w.dim(),
                },
            );
        }
        let boundary = boundary_data(m)?;
        let space = FieldSpace::new(m, &boundary);
        Ok(Deformer {
            mesh: m,
            boundary,
            confinement: w,
            space,
        })
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.space.normals[v].is_some()
    }

    /// Move-then-project retraction of an admissible field.
    pub fn retract(&self, field: &NormalField<T>) -> Result<Vec<DVector<T>>> {
        self.space.validate(field)?;
        self.retract_unchecked(field)
    }

    fn retract_unchecked(&self, field: &NormalField<T>) -> Result<Vec<DVector<T>>> {
        self.mesh
            .vertices()
            .iter()
            .zip(&field.values)
            .enumerate()
            .map(|(v, (p, d))| {
                let moved = p + d;
                if self.is_boundary(v) {
                    self.confinement.project(&moved)
                } else {
                    Ok(moved)
                }
            })
            .collect()
    }

    /// State for coefficients `c` and phase `θ`.
    pub fn state(&self, coeffs: &DVector<T>, theta: T) -> Result<DeformationState<T>> {
        let field = self.space.field(coeffs);
        let positions = self.retract_unchecked(&field)?;
        let (om, al) = residual_at_positions(self.mesh, &positions, theta)?;
        let norms = [max_abs(&om.values), max_abs(&al.values)];
        Ok(DeformationState {
            field,
            coefficients: coeffs.clone(),
            theta: principal_angle(theta),
            residual_omega: om,
            residual_alpha: al,
            norms,
            positions,
            history: Vec::new(),
            kernel_component: T::zero(),
        })
    }

    /// State of an admissible field (validated first).
    pub fn state_of_field(&self, field: &NormalField<T>, theta: T) -> Result<DeformationState<T>> {
        self.space.validate(field)?;
        self.state(&self.space.coefficients(field), theta)
    }

    /// Recomputes the residual of a state from its field and phase.
    pub fn residual(&self, state: &DeformationState<T>) -> Result<(Cochain<T>, Cochain<T>)> {
        let positions = self.retract(&state.field)?;
        residual_at_positions(self.mesh, &positions, state.theta)
    }

    /// Exact Jacobian of the stacked residual `[ω-slot; α-slot]` with
    /// respect to `(c, θ)`, including the derivative of the projection.
    pub fn jacobian(&self, coeffs: &DVector<T>, theta: T) -> Result<DMatrix<T>> {
        let m = self.mesh;
        let field = self.space.field(coeffs);
        let positions = self.retract_unchecked(&field)?;
        let blocks: Vec<DMatrix<T>> = (0..m.num_simplices(0))
            .map(|v| {
                if self.is_boundary(v) {
                    let moved = m.vertex(v) + &field.values[v];
                    Ok(self.confinement.projection_jacobian(&moved)? * &self.space.bases[v])
                } else {
                    Ok(self.space.bases[v].clone())
                }
            })
            .collect::<Result<_>>()?;
        let faces = m.k_simplices(2);
        let simplices = m.simplices();
        let rows = faces.len() + simplices.len();
        let cols = self.space.dim() + 1;
        let mut jac = DMatrix::zeros(rows, cols);
        let mut add = |row: usize, v: usize, g: &DVector<T>| {
            let contrib = blocks[v].tr_mul(g);
            let range = self.space.vertex_range(v);
            for (k, col) in range.enumerate() {
                jac[(row, col)] += contrib[k];
            }
        };
        for (f, face) in faces.iter().enumerate() {
            let pts: Vec<&DVector<T>> = face.iter().map(|&v| &positions[v]).collect();
            for (g, &v) in omega_gradient(&pts).iter().zip(face) {
                add(f, v, g);
            }
        }
        let mut theta_col = Vec::with_capacity(simplices.len());
        for (s, simplex) in simplices.iter().enumerate() {
            let pts: Vec<&DVector<T>> = simplex.iter().map(|&v| &positions[v]).collect();
            let (grads, dtheta) = alpha_gradient(&pts, theta);
            for (g, &v) in grads.iter().zip(simplex) {
                add(faces.len() + s, v, g);
            }
            theta_col.push(dtheta);
        }
        for (s, d) in theta_col.into_iter().enumerate() {
            jac[(faces.len() + s, cols - 1)] = d;
        }
        Ok(jac)
    }
}

/// Residual of a state, recomputed from `(field, θ)`.
pub fn residual<T: Real>(
    m: &SimplicialPatch<T>,
    w: &dyn Confinement<T>,
    state: &DeformationState<T>,
) -> Result<(Cochain<T>, Cochain<T>)> {
    Deformer::new(m, w)?.residual(state)
}

/// Retraction of an admissible field onto deformed vertex positions.
pub fn retract<T: Real>(
    m: &SimplicialPatch<T>,
    w: &dyn Confinement<T>,
    field: &NormalField<T>,
) -> Result<Vec<DVector<T>>> {
    Deformer::new(m, w)?.retract(field)
}

#[cfg(test)]
mod tests;
