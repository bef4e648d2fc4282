//! Neumann Hodge boundary-value problem for 1-forms on surfaces:
//! `dη = σ`, `d⋆η = τ + a·Vol`, `η(N) = 0`.
//!
//! Discretization: `d⋆η` is the dual coboundary `-d_0ᵀ ⋆_1 η` on the clipped
//! vertex dual cells (interior vertices). At a boundary vertex the same
//! flux balance measures the normal flux through the boundary part of its
//! dual cell; divided by that part's length it is the discrete `η(N)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dec::{Cochain, DecOperators};
use crate::error::{err, ErrorKind, Result};
use crate::linalg::{null_space, pinv_solve};
use crate::mesh::{volume_cochain, SimplicialPatch};
use crate::scalar::{abs, lit, to_f64, Real};

const MODULE: &str = "hodge";

/// Relative singular-value threshold below which a direction is kernel.
pub const KERNEL_TOL: f64 = 1e-8;
/// Ambiguity band: singular values in `[KERNEL_TOL, AMBIGUITY_FACTOR·KERNEL_TOL]·σ_max`.
pub const AMBIGUITY_FACTOR: f64 = 10.0;
/// Relative pass threshold for solvability residuals.
pub const SOLVABILITY_TOL: f64 = 1e-9;

/// Right-hand side of the Hodge system.
#[derive(Debug, Clone)]
pub struct HodgeProblem<T: Real> {
    /// Target of `dη` (degree 2).
    pub sigma: Cochain<T>,
    /// Target of `d⋆η` (degree n): a primal n-cochain, or a dual cochain on
    /// the vertex dual cells.
    pub tau: Cochain<T>,
    /// Whether `a·Vol` is an extra unknown in the `τ`-slot.
    pub free_volume: bool,
}

impl<T: Real> HodgeProblem<T> {
    pub fn new(sigma: Cochain<T>, tau: Cochain<T>) -> Self {
        HodgeProblem {
            sigma,
            tau,
            free_volume: true,
        }
    }

    pub fn zero(m: &SimplicialPatch<T>) -> Self {
        let n = m.intrinsic_dim();
        Self::new(Cochain::zeros(m, 2.min(n)), Cochain::zeros(m, n))
    }

    pub fn fixed_volume(mut self) -> Self {
        self.free_volume = false;
        self
    }

    fn scale(&self) -> T {
        T::one().max(self.sigma.inf_norm()).max(self.tau.inf_norm())
    }
}

#[derive(Debug, Clone)]
pub struct HodgeSolution<T: Real> {
    pub eta: Cochain<T>,
    pub a: T,
    /// `(‖dη − σ‖∞, ‖d⋆η − τ − a·Vol‖∞, max |η(N)|)`.
    pub residual_norms: [T; 3],
    /// Coefficients of the least-squares solution in the harmonic basis
    /// before they were removed.
    pub harmonic_component: Vec<T>,
}

/// One named solvability condition with its residual.
#[derive(Debug, Clone)]
pub struct SolvabilityCheck {
    pub name: &'static str,
    /// Worst residual; `None` when the condition does not apply in this dimension.
    pub residual: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SolvabilityReport {
    pub checks: [SolvabilityCheck; 5],
    /// `1e-9 × max(1, ‖σ‖∞, ‖τ‖∞)`.
    pub threshold: f64,
}

impl SolvabilityReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Conditions (1)–(4), the ones the solver cannot repair by choosing `a`.
    pub fn structural_pass(&self) -> bool {
        self.checks[..4].iter().all(|c| c.pass)
    }

    fn failures(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for SolvabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<34}  {:>24}  {:>6}",
            "condition", "residual", "status"
        )?;
        for c in &self.checks {
            let r = c
                .residual
                .map_or_else(|| "n/a".to_string(), |r| format!("{r:.16e}"));
            writeln!(
                f,
                "{:<34}  {:>24}  {:>6}",
                c.name,
                r,
                if c.pass { "pass" } else { "FAIL" }
            )?;
        }
        write!(f, "threshold {:.16e}", self.threshold)
    }
}

/// Kernel of a stacked operator together with its spectrum.
#[derive(Debug, Clone)]
pub struct HarmonicSpace<T: Real> {
    /// ⋆-orthonormal basis.
    pub forms: Vec<Cochain<T>>,
    pub singular_values: Vec<T>,
    /// Smallest kept over largest dropped singular value.
    pub gap: f64,
}

impl<T: Real> HarmonicSpace<T> {
    pub fn dim(&self) -> usize {
        self.forms.len()
    }
}

/// Assembled operators of the Hodge system on one patch.
pub struct HodgeSolver<'a, T: Real> {
    pub mesh: &'a SimplicialPatch<T>,
    pub ops: DecOperators<T>,
    /// `d⋆` on 1-cochains: `-d_0ᵀ diag(⋆_1)` (vertices × edges).
    codiff: DMatrix<T>,
    /// Weight of the codifferential block (block-norm equilibration).
    weight: T,
    /// Length of the boundary part of each vertex dual cell (0 inside).
    boundary_dual_length: Vec<T>,
    volume: T,
    harmonic: Option<HarmonicSpace<T>>,
}

impl<'a, T: Real> HodgeSolver<'a, T> {
    pub fn new(m: &'a SimplicialPatch<T>) -> Result<Self> {
        let ops = DecOperators::new(m);
        let n = m.intrinsic_dim();
        let volume = volume_cochain(m)
            .values
            .iter()
            .fold(T::zero(), |a, &b| a + b);
        let (codiff, weight) = match ops.stars.as_ref() {
            Some(stars) => {
                let mut c = -ops.d[0].transpose();
                for (j, &s) in stars.diag[1].iter().enumerate() {
                    c.column_mut(j).scale_mut(s);
                }
                let w = ops.d[1].norm() / c.norm().max(lit(1e-300));
                (c, w)
            }
            None => (DMatrix::zeros(0, 0), T::one()),
        };
        let mut boundary_dual_length = vec![T::zero(); m.num_simplices(0)];
        if n == 2 {
            for &e in &ops.boundary.simplices[1] {
                let edge = &m.k_simplices(1)[e];
                let half = m.k_volume(1, e) * lit(0.5);
                boundary_dual_length[edge[0]] += half;
                boundary_dual_length[edge[1]] += half;
            }
        }
        Ok(HodgeSolver {
            mesh: m,
            ops,
            codiff,
            weight,
            boundary_dual_length,
            volume,
            harmonic: None,
        })
    }

    fn require_surface(&self, op: &'static str) -> Result<()> {
        if self.ops.stars.is_none() {
            return err(
                MODULE,
                op,
                ErrorKind::Unsupported(format!(
                    "Hodge system for n = {}",
                    self.ops.intrinsic_dim()
                )),
            );
        }
        Ok(())
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    /// Dual areas `⋆_0 1` (the dual Vol cochain).
    pub fn dual_volume(&self) -> &DVector<T> {
        &self.ops.stars.as_ref().expect("surface stars").diag[0]
    }

    pub fn boundary_dual_length(&self) -> &[T] {
        &self.boundary_dual_length
    }

    /// `d⋆η` as a dual 2-cochain on vertex dual cells.
    pub fn codifferential(&self, eta: &Cochain<T>) -> Result<DVector<T>> {
        self.require_surface("codifferential")?;
        Ok(&self.codiff * DVector::from_column_slice(&eta.values))
    }

    /// Discrete `η(N)` at each boundary vertex (order of `boundary_vertices()`)
    /// for a 1-form with divergence target `rhs` (dual 2-cochain).
    pub fn normal_flux(&self, eta: &Cochain<T>, rhs: &DVector<T>) -> Result<Vec<T>> {
        let div = self.codifferential(eta)?;
        Ok(self
            .mesh
            .boundary_vertices()
            .iter()
            .map(|&v| (div[v] - rhs[v]) / self.boundary_dual_length[v])
            .collect())
    }

    /// `τ` on the vertex dual cells: dual cochains are taken as given,
    /// primal n-cochains are transferred by corner areas.
    pub fn tau_on_dual_cells(&self, tau: &Cochain<T>) -> Result<DVector<T>> {
        let v = self.mesh.num_simplices(0);
        if tau.dual {
            if tau.degree != 2 || tau.values.len() != v {
                return err(
                    MODULE,
                    "solve_bvp",
                    ErrorKind::Dimension {
                        expected: v,
                        got: tau.values.len(),
                    },
                );
            }
            return Ok(DVector::from_column_slice(&tau.values));
        }
        Ok(DVector::from_vec(
            self.ops.primal_to_dual_top(tau, self.mesh)?.values,
        ))
    }

    /// Stacked matrix `[d_1; w·d⋆]` whose kernel is the Neumann harmonic space.
    fn stacked(&self) -> DMatrix<T> {
        let (t, e) = self.ops.d[1].shape();
        let v = self.codiff.nrows();
        let mut a = DMatrix::zeros(t + v, e);
        a.view_mut((0, 0), (t, e)).copy_from(&self.ops.d[1]);
        a.view_mut((t, 0), (v, e))
            .copy_from(&(&self.codiff * self.weight));
        a
    }

    /// Kernel of the degree-k Neumann Hodge system.
    pub fn harmonic_space(&self, k: usize) -> Result<HarmonicSpace<T>> {
        const OP: &str = "neumann_harmonic_basis";
        self.require_surface(OP)?;
        let n = self.ops.intrinsic_dim();
        if k > n {
            return err(MODULE, OP, ErrorKind::Degree { degree: k, n });
        }
        // k = 0: df = 0 (δ and the normal trace are void);
        // k = 1: dη = 0, d⋆η = 0, zero normal flux;
        // k = 2: δσ = 0 with the boundary value of ⋆σ forced to zero.
        let a = match k {
            0 => self.ops.d[0].clone(),
            1 => self.stacked(),
            _ => {
                let mut m = self.ops.d[1].transpose();
                let s2 = &self.ops.stars.as_ref().expect("surface stars").diag[2];
                for (j, &s) in s2.iter().enumerate() {
                    m.column_mut(j).scale_mut(s);
                }
                m
            }
        };
        let ns = null_space(&a, lit(KERNEL_TOL));
        if let Some(&smax) = ns.singular_values.first() {
            let lo = lit::<T>(KERNEL_TOL) * smax;
            let hi = lit::<T>(KERNEL_TOL * AMBIGUITY_FACTOR) * smax;
            if ns.singular_values.iter().any(|&s| s >= lo && s <= hi) {
                return err(MODULE, OP, ErrorKind::AmbiguousKernel { gap: ns.gap });
            }
        }
        let star = self.ops.star_diag(k)?.clone();
        let forms = star_orthonormalize(ns.basis, &star)
            .into_iter()
            .map(|v| Cochain::new(k, v.iter().copied().collect()))
            .collect();
        Ok(HarmonicSpace {
            forms,
            singular_values: ns.singular_values,
            gap: ns.gap,
        })
    }

    fn harmonic_one_forms(&mut self) -> Result<&HarmonicSpace<T>> {
        if self.harmonic.is_none() {
            self.harmonic = Some(self.harmonic_space(1)?);
        }
        Ok(self.harmonic.as_ref().expect("cached"))
    }

    /// The five solvability conditions for `P`.
    pub fn solvability_report(&self, p: &HodgeProblem<T>) -> Result<SolvabilityReport> {
        let n = self.ops.intrinsic_dim();
        let threshold = SOLVABILITY_TOL * to_f64(p.scale());
        let check = |name, residual: Option<f64>| SolvabilityCheck {
            name,
            pass: residual.is_none_or(|r| r.is_finite() && r <= threshold),
            residual,
        };
        // (1) dσ = 0: σ has degree 2, so the condition is void on surfaces.
        let c1 = if p.sigma.degree < n {
            let ds = &self.ops.d[p.sigma.degree] * DVector::from_column_slice(&p.sigma.values);
            Some(to_f64(ds.amax()))
        } else {
            Some(0.0)
        };
        // (2) dτ = 0 and (3) the tangential trace of τ: τ has top degree.
        let c2 = Some(0.0);
        let c3 = Some(0.0);
        let (c4, c5) = if n == 2 && self.ops.stars.is_some() {
            // (4) pairings of σ against harmonic 2-forms
            let h2 = self.harmonic_space(2)?;
            let r4 = h2
                .forms
                .iter()
                .map(|h| to_f64(abs(self.ops.inner(&p.sigma, h).unwrap_or(T::zero()))))
                .fold(0.0, f64::max);
            // (5) pairing of ⋆τ with ⋆κ for the harmonic 0-forms κ, normalized to sup-norm one
            let h0 = self.harmonic_space(0)?;
            let r5 = h0
                .forms
                .iter()
                .map(|kappa| {
                    let sup = kappa.inf_norm();
                    let pair = if p.tau.dual {
                        p.tau.dot(kappa)
                    } else {
                        p.tau.values.iter().zip(self.mesh.simplices().iter()).fold(
                            T::zero(),
                            |acc, (&t, s)| {
                                let mean = s.iter().fold(T::zero(), |a, &v| a + kappa.values[v])
                                    / lit(s.len() as f64);
                                acc + t * mean
                            },
                        )
                    };
                    to_f64(abs(pair / sup))
                })
                .fold(0.0, f64::max);
            (Some(r4), Some(r5))
        } else {
            (None, None)
        };
        Ok(SolvabilityReport {
            checks: [
                check("(1) d sigma = 0", c1),
                check("(2) d tau = 0", c2),
                check("(3) tangential trace of tau = 0", c3),
                check("(4) <sigma, *lambda> = 0", c4),
                check("(5) <*tau, *kappa> = 0", c5),
            ],
            threshold,
        })
    }

    /// Minimum-norm solution of the stacked system.
    pub fn solve(&mut self, p: &HodgeProblem<T>) -> Result<HodgeSolution<T>> {
        const OP: &str = "solve_bvp";
        self.require_surface(OP)?;
        let report = self.solvability_report(p)?;
        let blocking = if p.free_volume {
            report.structural_pass()
        } else {
            report.passes()
        };
        if !blocking {
            return err(
                MODULE,
                OP,
                ErrorKind::Solvability(format!("{} failed\n{report}", report.failures())),
            );
        }
        let m = self.mesh;
        if p.sigma.degree != 2 || p.sigma.values.len() != m.num_simplices(2) {
            return err(
                MODULE,
                OP,
                ErrorKind::Dimension {
                    expected: m.num_simplices(2),
                    got: p.sigma.values.len(),
                },
            );
        }
        let rhs_tau = self.tau_on_dual_cells(&p.tau)?;
        let basis = self.harmonic_one_forms()?.forms.clone();
        let (t, e) = self.ops.d[1].shape();
        let v = m.num_simplices(0);
        let cols = e + usize::from(p.free_volume);
        let mut a = DMatrix::zeros(t + v, cols);
        a.view_mut((0, 0), (t + v, e)).copy_from(&self.stacked());
        let areas = self.dual_volume().clone();
        if p.free_volume {
            a.view_mut((t, e), (v, 1))
                .copy_from(&(&areas * (-self.weight)));
        }
        let mut b = DVector::zeros(t + v);
        b.rows_mut(0, t)
            .copy_from(&DVector::from_column_slice(&p.sigma.values));
        b.rows_mut(t, v).copy_from(&(&rhs_tau * self.weight));
        let (x, _) = pinv_solve(&a, &b, lit(KERNEL_TOL));
        let mut eta = Cochain::new(1, x.rows(0, e).iter().copied().collect());
        let a_val = if p.free_volume { x[e] } else { T::zero() };
        let mut harmonic_component = Vec::with_capacity(basis.len());
        for h in &basis {
            let c = self.ops.inner(&eta, h)?;
            harmonic_component.push(c);
        }
        for (h, &c) in basis.iter().zip(&harmonic_component) {
            eta = eta.axpy(-c, h);
        }
        let residual_norms = self.residuals(&eta, a_val, p, &rhs_tau)?;
        let tol = lit::<T>(SOLVABILITY_TOL) * p.scale();
        if residual_norms.iter().any(|r| !(*r <= tol)) {
            return err(
                MODULE,
                OP,
                ErrorKind::Solvability(format!(
                    "least-squares residuals {:.3e}, {:.3e}, {:.3e} exceed {:.3e}",
                    to_f64(residual_norms[0]),
                    to_f64(residual_norms[1]),
                    to_f64(residual_norms[2]),
                    to_f64(tol)
                )),
            );
        }
        Ok(HodgeSolution {
            eta,
            a: a_val,
            residual_norms,
            harmonic_component,
        })
    }

    fn residuals(
        &self,
        eta: &Cochain<T>,
        a: T,
        p: &HodgeProblem<T>,
        rhs_tau: &DVector<T>,
    ) -> Result<[T; 3]> {
        let de = &self.ops.d[1] * DVector::from_column_slice(&eta.values);
        let r1 = (de - DVector::from_column_slice(&p.sigma.values)).amax();
        let target = rhs_tau + self.dual_volume() * a;
        let div = self.codifferential(eta)?;
        let mut r2 = T::zero();
        for v in 0..div.len() {
            if self.boundary_dual_length[v] == T::zero() {
                r2 = r2.max(abs(div[v] - target[v]));
            }
        }
        let r3 = self
            .normal_flux(eta, &target)?
            .into_iter()
            .fold(T::zero(), |acc, x| acc.max(abs(x)));
        Ok([r1, r2, r3])
    }
}

/// Gram-Schmidt in the diagonal inner product `⟨x, y⟩ = Σ x_i s_i y_i`.
fn star_orthonormalize<T: Real>(vs: Vec<DVector<T>>, star: &DVector<T>) -> Vec<DVector<T>> {
    let ip = |x: &DVector<T>, y: &DVector<T>| x.component_mul(star).dot(y);
    let mut out: Vec<DVector<T>> = Vec::with_capacity(vs.len());
    for mut v in vs {
        for u in &out {
            let c = ip(&v, u);
            v -= u * c;
        }
        let nrm = ip(&v, &v).sqrt();
        out.push(v / nrm);
    }
    out
}

/// ⋆-orthonormal basis of the discrete Neumann harmonic k-forms.
pub fn neumann_harmonic_basis<T: Real>(
    m: &SimplicialPatch<T>,
    k: usize,
) -> Result<Vec<Cochain<T>>> {
    Ok(HodgeSolver::new(m)?.harmonic_space(k)?.forms)
}

pub fn solvability_report<T: Real>(
    m: &SimplicialPatch<T>,
    p: &HodgeProblem<T>,
) -> Result<SolvabilityReport> {
    HodgeSolver::new(m)?.solvability_report(p)
}

pub fn solve_bvp<T: Real>(m: &SimplicialPatch<T>, p: &HodgeProblem<T>) -> Result<HodgeSolution<T>> {
    HodgeSolver::new(m)?.solve(p)
}

/// `a = -∫_L dβ / Vol(L)`.
pub fn integrability_scalar<T: Real>(beta: &Cochain<T>, m: &SimplicialPatch<T>) -> Result<T> {
    let n = m.intrinsic_dim();
    if beta.degree + 1 != n || beta.dual {
        return err(
            MODULE,
            "integrability_scalar",
            ErrorKind::Degree {
                degree: beta.degree,
                n,
            },
        );
    }
    let vol = volume_cochain(m)
        .values
        .iter()
        .fold(T::zero(), |a, &b| a + b);
    if !(vol > T::zero()) {
        return err(MODULE, "integrability_scalar", ErrorKind::ZeroVolume);
    }
    let d = &crate::mesh::coboundary_matrix(m, n - 1) * DVector::from_column_slice(&beta.values);
    Ok(-d.iter().fold(T::zero(), |a, &b| a + b) / vol)
}

#[cfg(test)]
mod tests;
