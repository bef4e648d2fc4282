//! Hamiltonian deformations of the scaffold.
//!
//! A section `X` of `(TW)^ω` is extended to the cut-off Hamiltonian
//! `H_X(p) = bump(|s|) ω(X(q), s)` with `q = P_W(p)` and `s = p - q`. In
//! frame-dual coordinates `s = s¹E + s²F` this is
//! `bump · (-a² s¹ + a¹ s²)`, and its Hamiltonian field restricted to `W`
//! is `X`. The time-one flow `φ_X` is integrated with the implicit midpoint
//! rule; the moved scaffold `φ_X(W)` is handled through `F ∘ φ_X⁻¹`.

mod section;


use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

pub use section::{load_section, parse_section, ScaffoldSection, SectionConfig};

use crate::ambient::{omega, omega_matrix, Confinement, Scaffold};
use crate::deform::{best_fit_theta, newton_solve, DeformationState, Deformer, NewtonOptions};
use crate::error::{err, Error, ErrorKind, Result};
use crate::hodge::HodgeSolver;
use crate::mesh::SimplicialPatch;
use crate::scalar::{from_usize, lit, to_f64, Real};

pub(crate) const MODULE: &str = "flow";

/// Inner cutoff radius: `H_X` is exactly `ω(X(q), s)` for `|s| ≤ r_in`.
pub const DEFAULT_R_IN: f64 = 0.2;
/// Implicit-midpoint steps over unit time.
pub const DEFAULT_STEPS: usize = 100;
/// Relative tolerance of the fixed-point iteration in each midpoint step.
pub const FIXED_POINT_TOL: f64 = 1e-14;
pub const FIXED_POINT_MAX_ITER: usize = 50;
/// Step of the fourth-order differences for `DX`. `DX` sits inside `∇H_X`,
/// which is differenced again for the tangent map, so it must be accurate
/// well below the second step's square.
const SECTION_FD_STEP: f64 = 2e-4;
/// Step of the central differences of `∇H_X` for the tangent map.
const HESSIAN_FD_STEP: f64 = 1e-5;
/// Target accuracy of the radial gain fit, in units of `max(1, |δ|)`.
const GAIN_TOL: f64 = 1e-13;
const GAIN_MAX_ITER: usize = 30;
const CACHE_LIMIT: usize = 1 << 16;

/// Quintic smoothstep cutoff and its derivative.
fn cutoff<T: Real>(r: T, r_in: T, r_out: T) -> (T, T) {
    if r <= r_in {
        return (T::one(), T::zero());
    }
    if r >= r_out {
        return (T::zero(), T::zero());
    }
    let width = r_out - r_in;
    let s = (r - r_in) / width;
    let s2 = s * s;
    let value = T::one() - s2 * s * (lit::<T>(10.0) - lit::<T>(15.0) * s + lit::<T>(6.0) * s2);
    let slope = -lit::<T>(30.0) * s2 * (T::one() - s) * (T::one() - s) / width;
    (value, slope)
}

type FlowCache<T> = HashMap<(bool, Vec<u64>), (DVector<T>, Option<DMatrix<T>>)>;

/// The cut-off Hamiltonian `H_X` and its integrator.
pub struct FlowSpec<T: Real> {
    pub scaffold: Scaffold<T>,
    pub section: ScaffoldSection<T>,
    pub r_in: T,
    pub r_out: T,
    pub steps: usize,
    /// Gain multiplying the section; fitted for radial sections, else 1.
    pub gain: T,
    /// Time scale `t` of the flow `φ_{tX}`.
    pub scale: T,
    cache: Mutex<FlowCache<T>>,
}

impl<T: Real> Clone for FlowSpec<T> {
    fn clone(&self) -> Self {
        FlowSpec {
            scaffold: self.scaffold.clone(),
            section: self.section.clone(),
            r_in: self.r_in,
            r_out: self.r_out,
            steps: self.steps,
            gain: self.gain,
            scale: self.scale,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<T: Real> std::fmt::Debug for FlowSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowSpec")
            .field("section", &self.section)
            .field("r_in", &self.r_in)
            .field("r_out", &self.r_out)
            .field("steps", &self.steps)
            .field("gain", &self.gain)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

impl<T: Real> FlowSpec<T> {
    /// Builds `H_X` with explicit cutoff radii and step count. Radial
    /// sections get their gain fitted here.
    pub fn new(
        section: ScaffoldSection<T>,
        w: Scaffold<T>,
        r_in: T,
        r_out: T,
        steps: usize,
    ) -> Result<Self> {
        const OP: &str = "hamiltonian";
        if !(r_in > T::zero() && r_out > r_in) {
            return err(
                MODULE,
                OP,
                ErrorKind::Invalid("cutoff radii must satisfy 0 < r_in < r_out".into()),
            );
        }
        if steps == 0 {
            return err(
                MODULE,
                OP,
                ErrorKind::Invalid("flow needs at least one step".into()),
            );
        }
        let mut spec = FlowSpec {
            scaffold: w,
            section,
            r_in,
            r_out,
            steps,
            gain: T::one(),
            scale: T::one(),
            cache: Mutex::new(HashMap::new()),
        };
        if let ScaffoldSection::Radial { delta } = spec.section {
            spec.gain = spec.fit_radial_gain(delta)?;
        }
        Ok(spec)
    }

    /// The same Hamiltonian scaled by `t` (the flow `φ_{tX}`).
    pub fn scaled(&self, t: T) -> Self {
        let mut s = self.clone();
        s.scale = self.scale * t;
        s
    }

    fn is_trivial(&self) -> bool {
        self.section.is_zero() || self.scale == T::zero() || self.gain == T::zero()
    }

    /// `X(q)` including gain and time scale.
    pub fn section_at(&self, q: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.section.eval(&self.scaffold, q)? * (self.gain * self.scale))
    }

    /// `H_X(p)`; zero where the projection onto `W` fails (far from `W`).
    pub fn value(&self, p: &DVector<T>) -> T {
        if self.is_trivial() {
            return T::zero();
        }
        let Ok(q) = self.scaffold.project(p) else {
            return T::zero();
        };
        let s = p - &q;
        let (b, _) = cutoff(s.norm(), self.r_in, self.r_out);
        if b == T::zero() {
            return T::zero();
        }
        self.section_at(&q).map_or(T::zero(), |x| b * omega(&x, &s))
    }

    /// `∇H_X(p)`. With `DP` the derivative of the projection,
    /// `dH(v) = b ω(X, (I - DP)v) + b ω(DX·DP v, s) + b' ω(X, s) ⟨s, (I - DP)v⟩/|s|`.
    pub fn gradient(&self, p: &DVector<T>) -> Result<DVector<T>> {
        let dim = p.len();
        if self.is_trivial() {
            return Ok(DVector::zeros(dim));
        }
        let Ok(q) = self.scaffold.project(p) else {
            return Ok(DVector::zeros(dim));
        };
        let s = p - &q;
        let r = s.norm();
        let (b, db) = cutoff(r, self.r_in, self.r_out);
        if b == T::zero() && db == T::zero() {
            return Ok(DVector::zeros(dim));
        }
        let dp = self.scaffold.projection_jacobian(p)?;
        let normal = DMatrix::identity(dim, dim) - &dp;
        let om = omega_matrix::<T>(dim);
        let x = self.section_at(&q)?;
        // ω(u, v) = uᵀ Ω v, so v ↦ ω(X, Av) has gradient Aᵀ Ωᵀ X.
        let mut g = normal.transpose() * (om.transpose() * &x) * b;
        if r > T::zero() {
            let h = lit::<T>(SECTION_FD_STEP);
            let om_s = &om * &s;
            // Row k of DXᵀ Ω s is ⟨∂_k X, Ω s⟩.
            let mut dx_t = DVector::zeros(dim);
            for k in 0..dim {
                let at = |offset: T| -> Result<T> {
                    let mut a = q.clone();
                    a[k] += offset;
                    Ok(self.section_at(&a)?.dot(&om_s))
                };
                let near = at(h)? - at(-h)?;
                let far = at(h + h)? - at(-h - h)?;
                dx_t[k] = (near * lit(8.0) - far) / (h * lit(12.0));
            }
            g += dp.transpose() * dx_t * b;
            if db != T::zero() {
                g += normal.transpose() * &s * (db * omega(&x, &s) / r);
            }
        }
        Ok(g)
    }

    /// Hamiltonian vector field `Ω ∇H_X`.
    pub fn vector_field(&self, p: &DVector<T>) -> Result<DVector<T>> {
        Ok(omega_matrix::<T>(p.len()) * self.gradient(p)?)
    }

    /// Derivative of the vector field by central differences of `∇H_X`.
    fn field_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        let dim = p.len();
        let h = lit::<T>(HESSIAN_FD_STEP);
        let mut hess = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut a = p.clone();
            let mut c = p.clone();
            a[k] += h;
            c[k] -= h;
            hess.set_column(k, &((self.gradient(&a)? - self.gradient(&c)?) / (h + h)));
        }
        let hess = (&hess + hess.transpose()) * lit::<T>(0.5);
        Ok(omega_matrix::<T>(dim) * hess)
    }

    /// One implicit midpoint step `y' = y + h f((y + y')/2)` by fixed-point
    /// iteration.
    fn midpoint_step(&self, y: &DVector<T>, h: T, step: usize) -> Result<DVector<T>> {
        let half = lit::<T>(0.5);
        let mut next = y + self.vector_field(y)? * h;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let mid = (y + &next) * half;
            let candidate = y + self.vector_field(&mid)? * h;
            let change = (&candidate - &next).norm();
            next = candidate;
            if change <= lit::<T>(FIXED_POINT_TOL) * next.norm().max(T::one()) {
                return Ok(next);
            }
        }
        err(MODULE, "time_one_flow", ErrorKind::Integrator { step })
    }

    /// Time-one map (`inverse = false`) or its inverse, optionally with the
    /// exact derivative of the discrete map,
    /// `(I - h/2 Df(m))⁻¹ (I + h/2 Df(m))` per step.
    fn integrate(
        &self,
        p: &DVector<T>,
        inverse: bool,
        with_jacobian: bool,
    ) -> Result<(DVector<T>, Option<DMatrix<T>>)> {
        let dim = p.len();
        if self.is_trivial() {
            return Ok((
                p.clone(),
                with_jacobian.then(|| DMatrix::identity(dim, dim)),
            ));
        }
        let key = (
            inverse,
            p.iter().map(|c| to_f64(*c).to_bits()).collect::<Vec<u64>>(),
        );
        if let Some((image, jac)) = self.cache.lock().expect("flow cache").get(&key) {
            if jac.is_some() || !with_jacobian {
                return Ok((image.clone(), jac.clone()));
            }
        }
        let h = (if inverse { -T::one() } else { T::one() }) / from_usize::<T>(self.steps);
        let half = lit::<T>(0.5);
        let id = DMatrix::<T>::identity(dim, dim);
        let mut y = p.clone();
        let mut jac = with_jacobian.then(|| id.clone());
        for step in 0..self.steps {
            let next = self.midpoint_step(&y, h, step)?;
            if let Some(j) = jac.as_mut() {
                let df = self.field_jacobian(&((&y + &next) * half))? * (h * half);
                let lhs = &id - &df;
                let Some(m) = lhs.lu().solve(&(&id + &df)) else {
                    return err(MODULE, "time_one_flow", ErrorKind::Integrator { step });
                };
                *j = m * &*j;
            }
            y = next;
        }
        let mut cache = self.cache.lock().expect("flow cache");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, (y.clone(), jac.clone()));
        Ok((y, jac))
    }

    pub fn flow_point(&self, p: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.integrate(p, false, false)?.0)
    }

    pub fn inverse_flow_point(&self, p: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.integrate(p, true, false)?.0)
    }

    /// `Dφ_X(p)` of the discrete flow.
    pub fn flow_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        Ok(self
            .integrate(p, false, true)?
            .1
            .expect("jacobian requested"))
    }

    /// `Dφ_X⁻¹(p)` of the discrete inverse flow.
    pub fn inverse_flow_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        Ok(self
            .integrate(p, true, true)?
            .1
            .expect("jacobian requested"))
    }

    /// Reference point for the radial gain: the projection of the first
    /// coordinate axis onto `W`.
    fn radial_reference(&self) -> Result<DVector<T>> {
        let dim = self.scaffold.dim();
        self.scaffold.project(&DVector::from_fn(dim, |r, _| {
            if r == 0 {
                T::one()
            } else {
                T::zero()
            }
        }))
    }

    /// Secant fit of the gain `κ` so that `Re F_1(φ_{κX}(q₀)) = δ` at the
    /// reference point.
    fn fit_radial_gain(&self, delta: T) -> Result<T> {
        if delta == T::zero() {
            return Ok(T::zero());
        }
        let q0 = self.radial_reference()?;
        let miss = |gain: T| -> Result<T> {
            let mut trial = self.clone();
            trial.gain = gain;
            Ok(self.scaffold.eval(&trial.flow_point(&q0)?).values[0] - delta)
        };
        let tol = lit::<T>(GAIN_TOL) * delta.abs().max(T::one());
        let (mut k0, mut k1) = (delta, delta * lit(1.01));
        let (mut m0, mut m1) = (miss(k0)?, miss(k1)?);
        for _ in 0..GAIN_MAX_ITER {
            if m1.abs() <= tol {
                return Ok(k1);
            }
            if m1 == m0 {
                break;
            }
            let k2 = k1 - m1 * (k1 - k0) / (m1 - m0);
            (k0, m0) = (k1, m1);
            k1 = k2;
            m1 = miss(k1)?;
        }
        err(
            MODULE,
            "hamiltonian",
            ErrorKind::Invalid(format!("radial gain fit missed by {:e}", to_f64(m1))),
        )
    }
}

/// `H_X` for section `x` on `w` with the default cutoff (`r_in = 0.2`,
/// `r_out = 1`, half the diameter of the unit disk) and 100 midpoint steps.
pub fn hamiltonian<T: Real>(x: &ScaffoldSection<T>, w: &Scaffold<T>) -> Result<FlowSpec<T>> {
    FlowSpec::new(
        x.clone(),
        w.clone(),
        lit(DEFAULT_R_IN),
        T::one(),
        DEFAULT_STEPS,
    )
}

/// `φ_X` applied to each point.
pub fn time_one_flow<T: Real>(
    spec: &FlowSpec<T>,
    points: &[DVector<T>],
) -> Result<Vec<DVector<T>>> {
    points.iter().map(|p| spec.flow_point(p)).collect()
}

/// `φ_X⁻¹` applied to each point, by the same scheme run backwards.
pub fn inverse_time_one_flow<T: Real>(
    spec: &FlowSpec<T>,
    points: &[DVector<T>],
) -> Result<Vec<DVector<T>>> {
    points.iter().map(|p| spec.inverse_flow_point(p)).collect()
}

/// The moved scaffold `W' = φ_X(W)` with defining functions `F ∘ φ_X⁻¹` and
/// retraction `φ_X ∘ P_W ∘ φ_X⁻¹`.
#[derive(Debug, Clone)]
pub struct FlowedScaffold<T: Real> {
    pub spec: FlowSpec<T>,
}

impl<T: Real> FlowedScaffold<T> {
    pub fn new(spec: FlowSpec<T>) -> Self {
        FlowedScaffold { spec }
    }

    /// `max |F_i ∘ φ_X⁻¹(p)|`.
    pub fn residual(&self, p: &DVector<T>) -> Result<T> {
        Ok(self
            .spec
            .scaffold
            .eval(&self.spec.inverse_flow_point(p)?)
            .residual())
    }
}

impl<T: Real> Confinement<T> for FlowedScaffold<T> {
    fn dim(&self) -> usize {
        self.spec.scaffold.dim()
    }

    fn constraint(&self, p: &DVector<T>) -> Result<([T; 2], [DVector<T>; 2])> {
        let (pre, jac) = self.spec.integrate(p, true, true)?;
        let jac = jac.expect("jacobian requested");
        let ev = self.spec.scaffold.eval(&pre);
        let [g0, g1] = ev.gradients;
        Ok((ev.values, [jac.transpose() * g0, jac.transpose() * g1]))
    }

    fn project(&self, p: &DVector<T>) -> Result<DVector<T>> {
        let q = self
            .spec
            .scaffold
            .project(&self.spec.inverse_flow_point(p)?)?;
        self.spec.flow_point(&q)
    }

    fn projection_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        let (pre, back) = self.spec.integrate(p, true, true)?;
        let q = self.spec.scaffold.project(&pre)?;
        let dp = self.spec.scaffold.projection_jacobian(&pre)?;
        let forward = self.spec.flow_jacobian(&q)?;
        Ok(forward * dp * back.expect("jacobian requested"))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Midpoint steps of each flow.
    pub flow_steps: usize,
    pub r_in: f64,
    /// Outer cutoff radius; half the boundary diameter of the mesh if unset.
    pub r_out: Option<f64>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            newton: NewtonOptions::default(),
            flow_steps: DEFAULT_STEPS,
            r_in: DEFAULT_R_IN,
            r_out: None,
        }
    }
}

/// One accepted continuation step.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationStep {
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Continuation<T: Real> {
    pub state: DeformationState<T>,
    /// Final moved scaffold `φ_X(W)`.
    pub scaffold: FlowedScaffold<T>,
    pub path: Vec<ContinuationStep>,
    /// `max |F_i ∘ φ_X⁻¹|` over the final boundary vertices.
    pub boundary_residual: T,
}

/// Minimal Lagrangian with boundary on `φ_X(W)`, reached by re-solving on
/// `φ_{tX}(W)` for `t = 1/steps, …, 1` from the previous solution.
pub fn continuation_solve<T: Real>(
    m: &SimplicialPatch<T>,
    w: &Scaffold<T>,
    x_target: &ScaffoldSection<T>,
    steps: usize,
    opts: &ContinuationOptions,
) -> Result<Continuation<T>> {
    const OP: &str = "continuation_solve";
    if steps == 0 {
        return err(
            MODULE,
            OP,
            ErrorKind::Invalid("continuation needs at least one step".into()),
        );
    }
    let b1 = HodgeSolver::new(m)?.harmonic_space(1)?.dim();
    if b1 != 0 {
        return err(MODULE, OP, ErrorKind::NonzeroBetti { b1 });
    }
    let r_in = lit::<T>(opts.r_in);
    let r_out = opts
        .r_out
        .map_or_else(|| m.boundary_diameter() * lit(0.5), lit);
    let target = FlowSpec::new(x_target.clone(), w.clone(), r_in, r_out, opts.flow_steps)?;

    let base = Deformer::new(m, w)?;
    let theta0 = best_fit_theta(m)?;
    let start = base.state(&DVector::zeros(base.space.dim()), theta0)?;
    let mut state = newton_solve(&base, &start, &[], &opts.newton)?;
    let mut path = vec![ContinuationStep {
        t: 0.0,
        residual: to_f64(state.residual_norm()),
        iterations: state.iterations(),
    }];
    let mut scaffold = FlowedScaffold::new(target.scaled(T::zero()));
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let moved = FlowedScaffold::new(target.scaled(lit(t)));
        let next = Deformer::new(m, &moved)
            .and_then(|d| {
                let initial = d.state(&state.coefficients, state.theta)?;
                newton_solve(&d, &initial, &[], &opts.newton)
            })
            .map_err(|e| {
                let t_good = (k - 1) as f64 / steps as f64;
                Error::new(
                    MODULE,
                    OP,
                    ErrorKind::Continuation {
                        t_good,
                        t_failed: t,
                        message: e.to_string(),
                    },
                )
            })?;
        state = next;
        path.push(ContinuationStep {
            t,
            residual: to_f64(state.residual_norm()),
            iterations: state.iterations(),
        });
        scaffold = moved;
    }
    let boundary_residual = m
        .boundary_vertices()
        .into_iter()
        .try_fold(T::zero(), |acc, v| {
            Ok::<T, Error>(acc.max(scaffold.residual(&state.positions[v])?))
        })?;
    Ok(Continuation {
        state,
        scaffold,
        path,
        boundary_residual,
    })
}
