//! Gauss-Newton on `(c, θ)` with truncated-SVD steps, kernel deflation and
//! step halving.

use nalgebra::{DMatrix, DVector};

use super::{best_fit_theta, DeformationState, Deformer, NormalField, MODULE};
use crate::error::{err, ErrorKind, Result};
use crate::linalg::{null_space, pinv_solve};
use crate::scalar::{abs, lit, to_f64, Real};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Target for `max(‖r_ω‖∞, ‖r_α‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative singular-value cut of the pseudo-inverse.
    pub pinv_tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            pinv_tol: 1e-8,
            max_halvings: 10,
        }
    }
}

/// Orthonormal basis (columns) of the complement of `kernel` in the
/// coefficient-plus-θ space.
fn deflation_basis<T: Real>(kernel: &[DVector<T>], cols: usize) -> DMatrix<T> {
    if kernel.is_empty() {
        return DMatrix::identity(cols, cols);
    }
    let k = DMatrix::from_fn(kernel.len(), cols, |r, c| {
        if c < kernel[r].len() {
            kernel[r][c]
        } else {
            T::zero()
        }
    });
    DMatrix::from_columns(&null_space(&k, lit(1e-12)).basis)
}

/// Solves `Φ(c, θ) = 0` starting from `initial`. Corrections are kept
/// orthogonal to the coefficient vectors in `kernel`.
pub fn newton_solve<T: Real>(
    d: &Deformer<'_, T>,
    initial: &DeformationState<T>,
    kernel: &[DVector<T>],
    opts: &NewtonOptions,
) -> Result<DeformationState<T>> {
    const OP: &str = "newton_solve";
    let mut state = d.state(&initial.coefficients, initial.theta)?;
    let tol = lit::<T>(opts.tol);
    let cols = d.space.dim() + 1;
    let unit_kernel: Vec<DVector<T>> = kernel
        .iter()
        .filter(|k| k.norm() > T::zero())
        .map(|k| k.normalize())
        .collect();
    let q = deflation_basis(&unit_kernel, cols);
    let mut history = vec![state.residual_norm()];
    let mut kernel_component = T::zero();
    for _ in 0..opts.max_iter {
        let r = state.residual_norm();
        if !r.is_finite() {
            break;
        }
        if r <= tol {
            state.history = history;
            state.kernel_component = kernel_component;
            return Ok(state);
        }
        let jac = d.jacobian(&state.coefficients, state.theta)? * &q;
        let (y, used) = pinv_solve(&jac, &(-state.residual_vector()), lit(opts.pinv_tol));
        if used == 0 {
            return err(
                MODULE,
                OP,
                ErrorKind::NoConvergence {
                    iterations: history.len() - 1,
                    residual: to_f64(r),
                },
            );
        }
        let delta = &q * y;
        for k in &unit_kernel {
            kernel_component = kernel_component.max(abs(k.dot(&delta.rows(0, k.len()))));
        }
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let c = &state.coefficients + delta.rows(0, cols - 1) * step;
            let theta = state.theta + delta[cols - 1] * step;
            if let Ok(trial) = d.state(&c, theta) {
                if trial.residual_norm() < r {
                    accepted = Some(trial);
                    break;
                }
            }
            step *= lit(0.5);
        }
        match accepted {
            Some(next) => {
                state = next;
                history.push(state.residual_norm());
            }
            None => break,
        }
    }
    let r = state.residual_norm();
    if r <= tol {
        state.history = history;
        state.kernel_component = kernel_component;
        return Ok(state);
    }
    err(
        MODULE,
        OP,
        ErrorKind::NoConvergence {
            iterations: history.len() - 1,
            residual: to_f64(r),
        },
    )
}

/// Newton solve from `step × direction` at the base phase, with the
/// corrections kept orthogonal to `direction`.
pub fn moduli_step<T: Real>(
    d: &Deformer<'_, T>,
    direction: &NormalField<T>,
    step: T,
    opts: &NewtonOptions,
) -> Result<DeformationState<T>> {
    d.space.validate(direction)?;
    let theta0 = best_fit_theta(d.mesh)?;
    let k = d.space.coefficients(direction);
    let initial = d.state(&(&k * step), theta0)?;
    newton_solve(d, &initial, &[k], opts)
}
