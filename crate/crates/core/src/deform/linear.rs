//! Linearization at the base patch and the moduli directions.

use nalgebra::{DMatrix, DVector};

use super::{best_fit_theta, Deformer, NormalField, BASE_SL_TOL, MODULE};
use crate::ambient::{j_apply, omega, phase};
use crate::dec::{whitney_at_vertex, Cochain, DecOperators};
use crate::error::{err, ErrorKind, Result};
use crate::hodge::HodgeSolver;
use crate::mesh::volume_cochain;
use crate::scalar::{to_f64, Real};

/// The map `(V, a) ↦ (dη_V, d⋆η_V + a·Vol)` at a special Lagrangian base.
///
/// `η_V` has edge values `∫_e V ⌟ ω`; its geometric star `⋆η_V` has edge
/// values `∫_e V ⌟ (-Im e^{-iθ₀} α)`, both exact for linearly interpolated
/// `V`. At boundary vertices `V` enters through the derivative of the
/// projection onto the scaffold, so the operator is the derivative of the
/// residual along the retraction.
pub struct LinearizedOperator<T: Real> {
    pub ops: DecOperators<T>,
    /// Phase of the base patch.
    pub theta0: T,
    pub volume: Cochain<T>,
    edges: Vec<Vec<usize>>,
    positions: Vec<DVector<T>>,
    /// Derivative of the retraction at boundary vertices.
    boundary_maps: Vec<Option<DMatrix<T>>>,
}

impl<T: Real> LinearizedOperator<T> {
    fn displacement(&self, field: &NormalField<T>, v: usize) -> DVector<T> {
        match &self.boundary_maps[v] {
            Some(dp) => dp * &field.values[v],
            None => field.values[v].clone(),
        }
    }

    /// `(η_V, ⋆η_V)` as primal 1-cochains.
    pub fn eta_pair(&self, field: &NormalField<T>) -> (Cochain<T>, Cochain<T>) {
        let disp: Vec<DVector<T>> = (0..self.positions.len())
            .map(|v| self.displacement(field, v))
            .collect();
        let ph = phase(self.theta0);
        let half = T::one() / (T::one() + T::one());
        let mut eta = Vec::with_capacity(self.edges.len());
        let mut star = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (a, b) = (e[0], e[1]);
            let mid = (&disp[a] + &disp[b]) * half;
            let t = &self.positions[b] - &self.positions[a];
            eta.push(omega(&mid, &t));
            let z = crate::ambient::complex_det(&[mid, t]);
            star.push(-(ph * z).im);
        }
        (Cochain::new(1, eta), Cochain::new(1, star))
    }

    pub fn eta(&self, field: &NormalField<T>) -> Cochain<T> {
        self.eta_pair(field).0
    }

    pub fn apply(&self, field: &NormalField<T>, a: T) -> Result<(Cochain<T>, Cochain<T>)> {
        let (eta, star) = self.eta_pair(field);
        let d_eta = self.ops.coboundary(&eta)?;
        let d_star = self.ops.coboundary(&star)?;
        Ok((d_eta, d_star.axpy(a, &self.volume)))
    }
}

fn require_special_lagrangian<T: Real>(d: &Deformer<'_, T>, op: &'static str) -> Result<T> {
    let theta0 = best_fit_theta(d.mesh)?;
    let state = d.state(&DVector::zeros(d.space.dim()), theta0)?;
    let r = state.residual_norm();
    if !(to_f64(r) <= BASE_SL_TOL) {
        return err(
            MODULE,
            op,
            ErrorKind::NotSpecialLagrangian {
                residual: to_f64(r),
            },
        );
    }
    Ok(theta0)
}

pub fn linearize_at_zero<T: Real>(d: &Deformer<'_, T>) -> Result<LinearizedOperator<T>> {
    const OP: &str = "linearize_at_zero";
    let m = d.mesh;
    if m.intrinsic_dim() != 2 {
        return err(
            MODULE,
            OP,
            ErrorKind::Unsupported(format!("linearization for n = {}", m.intrinsic_dim())),
        );
    }
    let theta0 = require_special_lagrangian(d, OP)?;
    let boundary_maps = (0..m.num_simplices(0))
        .map(|v| {
            if d.is_boundary(v) {
                d.confinement.projection_jacobian(m.vertex(v)).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearizedOperator {
        ops: DecOperators::new(m),
        theta0,
        volume: volume_cochain(m),
        edges: m.k_simplices(1).to_vec(),
        positions: m.vertices().to_vec(),
        boundary_maps,
    })
}

/// Normal fields `V = -J η♯` for the Neumann harmonic 1-forms `η`, with
/// `η♯` the Whitney vertex vector, projected onto the admissible set.
pub fn moduli_basis<T: Real>(d: &Deformer<'_, T>) -> Result<Vec<NormalField<T>>> {
    require_special_lagrangian(d, "moduli_basis")?;
    let m = d.mesh;
    let forms = HodgeSolver::new(m)?.harmonic_space(1)?.forms;
    Ok(forms
        .iter()
        .map(|eta| {
            let values = (0..m.num_simplices(0))
                .map(|v| -j_apply(&whitney_at_vertex(eta, m, v)))
                .collect();
            d.space.project(&NormalField { values })
        })
        .collect())
}
