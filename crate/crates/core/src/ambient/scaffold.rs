//! Codimension-two scaffolds `W = {F_1 = F_2 = 0}` with their projection,
//! symplectic-complement frame and the Definition-1 condition report.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::{omega, omega_matrix, MODULE};
use crate::error::{err, Error, ErrorKind, Result};
use crate::linalg::{full_svd, null_space};
use crate::mesh::{BoundaryData, SimplicialPatch};
use crate::scalar::{abs, lit, max_abs, to_f64, Real};

/// Convergence threshold on `|F_i|` for projection.
pub const PROJECTION_TOL: f64 = 1e-12;
pub const PROJECTION_MAX_ITER: usize = 50;
/// Smallest admissible singular value of `ω` restricted to `T_pW`.
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// `W = {z_n = a + b z_1 + c z_1^2}`: a complex curve (for n = 2) written as
/// a graph, with product-chart coordinates `(z_1, ..., z_{n-1}, s)` where
/// `s = z_n - f(z_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductChart<T: Real> {
    pub n: usize,
    pub coeffs: [Complex<T>; 3],
}

impl<T: Real> ProductChart<T> {
    pub fn f(&self, z: Complex<T>) -> Complex<T> {
        let [a, b, c] = self.coeffs;
        a + b * z + c * z * z
    }

    pub fn df(&self, z: Complex<T>) -> Complex<T> {
        let [_, b, c] = self.coeffs;
        b + c * z * Complex::new(lit(2.0), T::zero())
    }

    pub fn d2f(&self) -> Complex<T> {
        self.coeffs[2] * Complex::new(lit(2.0), T::zero())
    }

    /// Chart map `(w, s) -> p` with `w ∈ C^{n-1}`, `s ∈ C`, real coordinates.
    pub fn chart_to_point(&self, coords: &DVector<T>) -> DVector<T> {
        let mut p = coords.clone();
        let z1 = Complex::new(coords[0], coords[1]);
        let fz = self.f(z1);
        let last = 2 * (self.n - 1);
        p[last] = coords[last] + fz.re;
        p[last + 1] = coords[last + 1] + fz.im;
        p
    }

    /// Inverse chart map.
    pub fn point_to_chart(&self, p: &DVector<T>) -> DVector<T> {
        let mut c = p.clone();
        let z1 = Complex::new(p[0], p[1]);
        let fz = self.f(z1);
        let last = 2 * (self.n - 1);
        c[last] = p[last] - fz.re;
        c[last + 1] = p[last + 1] - fz.im;
        c
    }
}

/// Values, gradients and Hessians of `(F_1, F_2)` at a point.
#[derive(Debug, Clone)]
pub struct ScaffoldEval<T: Real> {
    pub values: [T; 2],
    pub gradients: [DVector<T>; 2],
    pub hessians: [DMatrix<T>; 2],
}

impl<T: Real> ScaffoldEval<T> {
    fn zeros(dim: usize) -> Self {
        ScaffoldEval {
            values: [T::zero(); 2],
            gradients: [DVector::zeros(dim), DVector::zeros(dim)],
            hessians: [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)],
        }
    }

    /// Adds `(Re h(z_j), Im h(z_j))` for a holomorphic `h` given by its value
    /// and first two derivatives at `z_j`.
    fn add_holomorphic(&mut self, j: usize, h: Complex<T>, dh: Complex<T>, d2h: Complex<T>) {
        let (x, y) = (2 * j, 2 * j + 1);
        self.values[0] += h.re;
        self.values[1] += h.im;
        // Cauchy-Riemann: ∂Re/∂x = Re h', ∂Re/∂y = -Im h', ∂Im/∂x = Im h', ∂Im/∂y = Re h'
        self.gradients[0][x] += dh.re;
        self.gradients[0][y] -= dh.im;
        self.gradients[1][x] += dh.im;
        self.gradients[1][y] += dh.re;
        let h0 = &mut self.hessians[0];
        h0[(x, x)] += d2h.re;
        h0[(x, y)] -= d2h.im;
        h0[(y, x)] -= d2h.im;
        h0[(y, y)] -= d2h.re;
        let h1 = &mut self.hessians[1];
        h1[(x, x)] += d2h.im;
        h1[(x, y)] += d2h.re;
        h1[(y, x)] += d2h.re;
        h1[(y, y)] -= d2h.im;
    }

    pub fn gradient_matrix(&self) -> DMatrix<T> {
        DMatrix::from_columns(&self.gradients)
    }

    pub fn residual(&self) -> T {
        abs(self.values[0]).max(abs(self.values[1]))
    }
}

/// A codimension-two scaffold. `Union` holds disconnected components; each
/// point is handled by the component it is (to first order) closest to.
#[derive(Debug, Clone, PartialEq)]
pub enum Scaffold<T: Real> {
    /// `Σ μ_j z_j^2 = c`: `F_1 = Re(Σ μ_j z_j^2) - c`, `F_2 = Im(Σ μ_j z_j^2)`.
    Quadric {
        mu: Vec<Complex<T>>,
        c: T,
    },
    /// `F_i(p) = ⟨normals[i], p⟩ - offsets[i]`.
    Affine {
        normals: [DVector<T>; 2],
        offsets: [T; 2],
    },
    /// Graph `z_n = f(z_1)` with a global product chart.
    Product(ProductChart<T>),
    Union(Vec<Scaffold<T>>),
}

impl<T: Real> Scaffold<T> {
    /// `Σ z_j^2 = c` in C^n.
    pub fn quadric(n: usize, c: T) -> Self {
        Scaffold::Quadric {
            mu: vec![Complex::new(T::one(), T::zero()); n],
            c,
        }
    }

    /// `{z_k = w}` (0-based k): an affine complex line of codimension one.
    pub fn complex_plane(n: usize, k: usize, w: Complex<T>) -> Self {
        let dim = 2 * n;
        let e = |i: usize| DVector::from_fn(dim, |r, _| if r == i { T::one() } else { T::zero() });
        Scaffold::Affine {
            normals: [e(2 * k), e(2 * k + 1)],
            offsets: [w.re, w.im],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Scaffold::Quadric { mu, .. } => 2 * mu.len(),
            Scaffold::Affine { normals, .. } => normals[0].len(),
            Scaffold::Product(chart) => 2 * chart.n,
            Scaffold::Union(parts) => parts.first().map_or(0, Scaffold::dim),
        }
    }

    pub fn components(&self) -> Vec<&Scaffold<T>> {
        match self {
            Scaffold::Union(parts) => parts.iter().flat_map(|p| p.components()).collect(),
            single => vec![single],
        }
    }

    /// Component responsible for `p`: smallest first-order distance
    /// `|F(p)| / |∇F(p)|`.
    pub fn component_for(&self, p: &DVector<T>) -> &Scaffold<T> {
        let comps = self.components();
        let mut best = comps[0];
        let mut best_d = f64::INFINITY;
        for c in comps {
            let ev = c.eval_piece(p);
            let num = ev.values[0].hypot(ev.values[1]);
            let den = ev.gradient_matrix().norm();
            let d = if den > T::zero() {
                to_f64(num / den)
            } else {
                f64::INFINITY
            };
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    fn eval_piece(&self, p: &DVector<T>) -> ScaffoldEval<T> {
        let dim = p.len();
        let mut ev = ScaffoldEval::zeros(dim);
        match self {
            Scaffold::Quadric { mu, c } => {
                let two = Complex::new(lit::<T>(2.0), T::zero());
                for (j, &m) in mu.iter().enumerate() {
                    let z = Complex::new(p[2 * j], p[2 * j + 1]);
                    ev.add_holomorphic(j, m * z * z, two * m * z, two * m);
                }
                ev.values[0] -= *c;
            }
            Scaffold::Affine { normals, offsets } => {
                for i in 0..2 {
                    ev.values[i] = normals[i].dot(p) - offsets[i];
                    ev.gradients[i] = normals[i].clone();
                }
            }
            Scaffold::Product(chart) => {
                let last = chart.n - 1;
                let one = Complex::new(T::one(), T::zero());
                let zl = Complex::new(p[2 * last], p[2 * last + 1]);
                ev.add_holomorphic(last, zl, one, Complex::new(T::zero(), T::zero()));
                let z1 = Complex::new(p[0], p[1]);
                ev.add_holomorphic(0, -chart.f(z1), -chart.df(z1), -chart.d2f());
            }
            Scaffold::Union(_) => return self.component_for(p).eval_piece(p),
        }
        ev
    }

    /// `(F_1, F_2, ∇F_1, ∇F_2)` plus Hessians at `p`.
    pub fn eval(&self, p: &DVector<T>) -> ScaffoldEval<T> {
        self.eval_piece(p)
    }

    /// Closest point on the responsible component: Newton on the optimality
    /// system `q - p = λ_1 ∇F_1(q) + λ_2 ∇F_2(q)`, `F(q) = 0`.
    pub fn project(&self, p: &DVector<T>) -> Result<DVector<T>> {
        self.project_with_multipliers(p).map(|(q, _)| q)
    }

    fn project_with_multipliers(&self, p: &DVector<T>) -> Result<(DVector<T>, [T; 2])> {
        let piece = self.component_for(p);
        let dim = p.len();
        let tol = lit::<T>(PROJECTION_TOL);
        let scale = T::one() + p.norm();
        let mut q = p.clone();
        let mut lam = [T::zero(); 2];
        let mut converged = false;
        for _ in 0..PROJECTION_MAX_ITER {
            let ev = piece.eval_piece(&q);
            let r1 = &q - p - &ev.gradients[0] * lam[0] - &ev.gradients[1] * lam[1];
            let done = ev.residual() <= tol && r1.norm() <= tol * scale;
            if converged {
                // one polishing step has been taken
                break;
            }
            let k = kkt_matrix(&ev, &lam, dim);
            if !regular(&ev) {
                return err(
                    MODULE,
                    "scaffold_project",
                    ErrorKind::Projection {
                        residual: to_f64(ev.residual()),
                    },
                );
            }
            let mut rhs = DVector::zeros(dim + 2);
            rhs.rows_mut(0, dim).copy_from(&(-r1));
            rhs[dim] = -ev.values[0];
            rhs[dim + 1] = -ev.values[1];
            let Some(step) = k.lu().solve(&rhs) else {
                return err(
                    MODULE,
                    "scaffold_project",
                    ErrorKind::Projection {
                        residual: to_f64(ev.residual()),
                    },
                );
            };
            q += step.rows(0, dim);
            lam[0] += step[dim];
            lam[1] += step[dim + 1];
            converged = done;
        }
        let ev = piece.eval_piece(&q);
        if !(ev.residual() <= tol) || !q.iter().all(|x| x.is_finite()) {
            return err(
                MODULE,
                "scaffold_project",
                ErrorKind::Projection {
                    residual: to_f64(ev.residual()),
                },
            );
        }
        Ok((q, lam))
    }

    /// Derivative of the projection map at `p`.
    pub fn projection_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        let (q, lam) = self.project_with_multipliers(p)?;
        let dim = p.len();
        let ev = self.component_for(p).eval_piece(&q);
        let k = kkt_matrix(&ev, &lam, dim);
        let mut rhs = DMatrix::zeros(dim + 2, dim);
        rhs.view_mut((0, 0), (dim, dim)).fill_with_identity();
        let sol = k.lu().solve(&rhs).ok_or_else(|| {
            Error::new(
                MODULE,
                "projection_jacobian",
                ErrorKind::Projection {
                    residual: to_f64(ev.residual()),
                },
            )
        })?;
        Ok(sol.rows(0, dim).into_owned())
    }

    /// Orthonormal basis (columns) of `T_pW = ker dF_1 ∩ ker dF_2`.
    pub fn tangent_basis(&self, p: &DVector<T>) -> DMatrix<T> {
        let g = self.eval(p).gradient_matrix();
        DMatrix::from_columns(&null_space(&g.transpose(), lit(1e-12)).basis)
    }

    /// Smallest singular value of `ω` restricted to `T_pW`.
    pub fn symplectic_margin(&self, p: &DVector<T>) -> T {
        let t = self.tangent_basis(p);
        if t.ncols() == 0 {
            return T::zero();
        }
        let w = t.transpose() * omega_matrix::<T>(p.len()) * &t;
        full_svd(&w).values.last().copied().unwrap_or(T::zero())
    }

    /// Frame `(E, F)` of `(T_pW)^ω` with `ω(E, F) = 1`. Without a hint, `E`
    /// is the normalized projection of the first coordinate axis with the
    /// largest projection; with a hint, of the hint (continuity along ∂L).
    pub fn frame(
        &self,
        p: &DVector<T>,
        hint: Option<&DVector<T>>,
    ) -> Result<(DVector<T>, DVector<T>)> {
        const OP: &str = "scaffold_frame";
        let ev = self.eval(p);
        if !regular(&ev) {
            return err(
                MODULE,
                OP,
                ErrorKind::ScaffoldConditions("dF_1 ∧ dF_2 vanishes".into()),
            );
        }
        let margin = self.symplectic_margin(p);
        if margin <= lit(SYMPLECTIC_TOL) {
            return err(
                MODULE,
                OP,
                ErrorKind::NotSymplectic {
                    pairing: to_f64(margin),
                },
            );
        }
        let dim = p.len();
        let om = omega_matrix::<T>(dim);
        let comp = DMatrix::from_columns(&[&om * &ev.gradients[0], &om * &ev.gradients[1]]);
        let c = comp.qr().q();
        let from_hint = hint.and_then(|h| {
            let e = &c * (c.transpose() * h);
            (e.norm() > lit(1e-8)).then(|| e.normalize())
        });
        let e = match from_hint {
            Some(e) => e,
            None => {
                let mut best = 0;
                let mut best_norm = T::zero();
                for k in 0..dim {
                    let r = c.row(k).norm();
                    if r > best_norm + lit(1e-12) {
                        best = k;
                        best_norm = r;
                    }
                }
                (&c * c.row(best).transpose()).normalize()
            }
        };
        let a = c.transpose() * &e;
        let f = &c * DVector::from_vec(vec![-a[1], a[0]]);
        let pairing = omega(&e, &f);
        if abs(pairing) <= lit(SYMPLECTIC_TOL) {
            return err(
                MODULE,
                OP,
                ErrorKind::NotSymplectic {
                    pairing: to_f64(pairing),
                },
            );
        }
        Ok((e, f / pairing))
    }

    /// Symplectic projection of `v` onto `(T_pW)^ω` along `T_pW`.
    pub fn complement_part(&self, p: &DVector<T>, v: &DVector<T>) -> Result<DVector<T>> {
        let (e, f) = self.frame(p, None)?;
        Ok(&e * omega(v, &f) + &f * omega(&e, v))
    }
}

fn regular<T: Real>(ev: &ScaffoldEval<T>) -> bool {
    let g = ev.gradient_matrix();
    let s = full_svd(&g).values;
    let smax = s.first().copied().unwrap_or(T::zero());
    let smin = s.get(1).copied().unwrap_or(T::zero());
    smax > T::zero() && smin > lit::<T>(1e-12) * smax
}

fn kkt_matrix<T: Real>(ev: &ScaffoldEval<T>, lam: &[T; 2], dim: usize) -> DMatrix<T> {
    let mut k = DMatrix::zeros(dim + 2, dim + 2);
    let top = DMatrix::identity(dim, dim) - &ev.hessians[0] * lam[0] - &ev.hessians[1] * lam[1];
    k.view_mut((0, 0), (dim, dim)).copy_from(&top);
    for i in 0..2 {
        k.view_mut((0, dim + i), (dim, 1))
            .copy_from(&(-&ev.gradients[i]));
        k.view_mut((dim + i, 0), (1, dim))
            .copy_from(&ev.gradients[i].transpose());
    }
    k
}

/// A boundary constraint the deformation solver can retract onto.
pub trait Confinement<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    /// Defining function values and gradients at `p`.
    fn constraint(&self, p: &DVector<T>) -> Result<([T; 2], [DVector<T>; 2])>;
    fn project(&self, p: &DVector<T>) -> Result<DVector<T>>;
    /// Derivative of `project` at `p`.
    fn projection_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>>;
}

impl<T: Real> Confinement<T> for Scaffold<T> {
    fn dim(&self) -> usize {
        Scaffold::dim(self)
    }

    fn constraint(&self, p: &DVector<T>) -> Result<([T; 2], [DVector<T>; 2])> {
        let ev = self.eval(p);
        Ok((ev.values, ev.gradients))
    }

    fn project(&self, p: &DVector<T>) -> Result<DVector<T>> {
        Scaffold::project(self, p)
    }

    fn projection_jacobian(&self, p: &DVector<T>) -> Result<DMatrix<T>> {
        Scaffold::projection_jacobian(self, p)
    }
}

/// Per-boundary-vertex residuals of the three conditions of Definition 1.
#[derive(Debug, Clone)]
pub struct VertexCheck {
    pub vertex: usize,
    /// `max |F_i(p)|`.
    pub containment: f64,
    /// `max_t |ω(N, t)|` over an orthonormal basis `t` of `T_pW`.
    pub transversality: f64,
    /// Frame defect `max(|ω(E,F) - 1|, |ω(E,t)|, |ω(F,t)|)`; infinite if no frame exists.
    pub frame: f64,
    /// Smallest singular value of `ω|_{T_pW}`.
    pub symplectic_margin: f64,
}

#[derive(Debug, Clone)]
pub struct ScaffoldReport {
    pub rows: Vec<VertexCheck>,
    pub tolerance: f64,
    pub frame_tolerance: f64,
}

impl ScaffoldReport {
    pub fn containment_ok(&self) -> bool {
        self.rows.iter().all(|r| r.containment <= self.tolerance)
    }

    pub fn transversality_ok(&self) -> bool {
        self.rows.iter().all(|r| r.transversality <= self.tolerance)
    }

    pub fn frame_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.frame <= self.frame_tolerance && r.symplectic_margin > SYMPLECTIC_TOL)
    }

    pub fn passes(&self) -> bool {
        self.containment_ok() && self.transversality_ok() && self.frame_ok()
    }

    fn worst(&self, f: impl Fn(&VertexCheck) -> f64) -> f64 {
        self.rows.iter().map(f).fold(0.0, f64::max)
    }

    /// One line per condition: name, worst residual, verdict.
    pub fn summary(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        let min_margin = self
            .rows
            .iter()
            .map(|r| r.symplectic_margin)
            .fold(f64::INFINITY, f64::min);
        format!(
            "(1) containment    max|F| = {:.16e}  {}\n(2) N in (TW)^w    max|w(N,t)| = {:.16e}  {}\n(3) frame          defect = {:.16e}  min sv = {:.16e}  {}\n",
            self.worst(|r| r.containment),
            verdict(self.containment_ok()),
            self.worst(|r| r.transversality),
            verdict(self.transversality_ok()),
            self.worst(|r| r.frame),
            min_margin,
            verdict(self.frame_ok()),
        )
    }
}

impl fmt::Display for ScaffoldReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8}  {:>24}  {:>24}  {:>24}  {:>24}",
            "vertex", "containment", "transversality", "frame", "symplectic_sv"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8}  {:>24.16e}  {:>24.16e}  {:>24.16e}  {:>24.16e}",
                r.vertex, r.containment, r.transversality, r.frame, r.symplectic_margin
            )?;
        }
        write!(f, "{}", self.summary())
    }
}

/// Boundary vertices in propagation order: each vertex after the first is
/// the unvisited one nearest to the visited set, paired with that nearest
/// visited vertex (position in `b.boundary_vertex_set`).
pub fn propagation_order<T: Real>(
    m: &SimplicialPatch<T>,
    b: &BoundaryData<T>,
) -> Vec<(usize, Option<usize>)> {
    let nb = b.len();
    let mut order = Vec::with_capacity(nb);
    let mut done = vec![false; nb];
    let mut best: Vec<(f64, Option<usize>)> = vec![(f64::INFINITY, None); nb];
    for _ in 0..nb {
        let next = (0..nb)
            .filter(|&i| !done[i])
            .min_by(|&i, &j| {
                best[i]
                    .0
                    .partial_cmp(&best[j].0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            })
            .expect("unvisited vertex");
        done[next] = true;
        order.push((next, best[next].1));
        let p = m.vertex(b.boundary_vertex_set[next]);
        for i in 0..nb {
            if !done[i] {
                let d = to_f64((m.vertex(b.boundary_vertex_set[i]) - p).norm());
                if d < best[i].0 {
                    best[i] = (d, Some(next));
                }
            }
        }
    }
    order
}

/// Frames at all boundary vertices with hint propagation (aligned with
/// `b.boundary_vertex_set`).
pub fn boundary_frames<T: Real>(
    w: &Scaffold<T>,
    m: &SimplicialPatch<T>,
    b: &BoundaryData<T>,
) -> Result<Vec<(DVector<T>, DVector<T>)>> {
    let mut frames: Vec<Option<(DVector<T>, DVector<T>)>> = vec![None; b.len()];
    for (i, parent) in propagation_order(m, b) {
        let hint = parent.and_then(|j| frames[j].as_ref().map(|f| f.0.clone()));
        frames[i] = Some(w.frame(m.vertex(b.boundary_vertex_set[i]), hint.as_ref())?);
    }
    Ok(frames
        .into_iter()
        .map(|f| f.expect("frame computed"))
        .collect())
}

/// Checks Definition 1 at every boundary vertex: containment, `N ∈ (TW)^ω`
/// and existence of a normalized frame of `(TW)^ω`.
pub fn check_scaffold_conditions<T: Real>(
    w: &Scaffold<T>,
    m: &SimplicialPatch<T>,
    b: &BoundaryData<T>,
) -> ScaffoldReport {
    let mut rows = vec![None; b.len()];
    let mut hints: Vec<Option<DVector<T>>> = vec![None; b.len()];
    for (i, parent) in propagation_order(m, b) {
        let v = b.boundary_vertex_set[i];
        let p = m.vertex(v);
        let ev = w.eval(p);
        let t = w.tangent_basis(p);
        let n = &b.inward_normal[i];
        let transversality = (0..t.ncols())
            .map(|c| to_f64(abs(omega(n, &t.column(c).into_owned()))))
            .fold(0.0, f64::max);
        let hint = parent.and_then(|j| hints[j].clone());
        let frame = match w.frame(p, hint.as_ref()) {
            Ok((e, f)) => {
                let mut defect = abs(omega(&e, &f) - T::one());
                for c in 0..t.ncols() {
                    let tc = t.column(c).into_owned();
                    defect = defect.max(abs(omega(&e, &tc))).max(abs(omega(&f, &tc)));
                }
                hints[i] = Some(e);
                to_f64(defect)
            }
            Err(_) => f64::INFINITY,
        };
        rows[i] = Some(VertexCheck {
            vertex: v,
            containment: to_f64(max_abs(&ev.values)),
            transversality,
            frame,
            symplectic_margin: to_f64(w.symplectic_margin(p)),
        });
    }
    ScaffoldReport {
        rows: rows.into_iter().flatten().collect(),
        tolerance: 1e-8,
        frame_tolerance: 1e-10,
    }
}
