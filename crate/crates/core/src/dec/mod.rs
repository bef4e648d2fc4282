//! Discrete exterior calculus on a simplicial patch: cochains, coboundary,
//! diagonal Hodge stars with clipped boundary duals, boundary trace and the
//! Whitney normal component.

mod boundary;
mod cochain;

use nalgebra::{DMatrix, DVector};

use crate::error::{err, ErrorKind, Result};
use crate::mesh::{coboundary_matrix, max_angle, BoundaryData, SimplicialPatch};
use crate::scalar::{from_usize, lit, Real};

pub use boundary::BoundaryComplex;
pub use cochain::Cochain;

const MODULE: &str = "dec";

/// Which dual complex the diagonal star was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarKind {
    /// Circumcentric dual (mesh is well-centered).
    Circumcentric,
    /// Barycentric dual fallback.
    Barycentric,
}

impl std::fmt::Display for StarKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StarKind::Circumcentric => "circumcentric",
            StarKind::Barycentric => "barycentric",
        })
    }
}

/// Diagonal Hodge stars of a triangulated surface (n = 2).
#[derive(Debug, Clone)]
pub struct Stars<T: Real> {
    pub kind: StarKind,
    /// `diag[k][i]`: dual (n-k)-volume over primal k-volume.
    pub diag: Vec<DVector<T>>,
    /// Dual-cell area of each vertex inside each triangle, in simplex vertex order.
    pub corner_area: Vec<[T; 3]>,
    /// Largest interior angle (radians).
    pub max_angle: f64,
}

/// Assembled operators of a patch.
#[derive(Debug, Clone)]
pub struct DecOperators<T: Real> {
    n: usize,
    /// `d[k]`: coboundary from k- to (k+1)-cochains, entries 0/±1.
    pub d: Vec<DMatrix<T>>,
    /// Hodge stars; available for surfaces (n = 2) only.
    pub stars: Option<Stars<T>>,
    pub boundary: BoundaryComplex<T>,
    counts: Vec<usize>,
}

impl<T: Real> DecOperators<T> {
    pub fn new(m: &SimplicialPatch<T>) -> Self {
        let n = m.intrinsic_dim();
        let d = (0..n).map(|k| coboundary_matrix(m, k)).collect();
        let stars = (n == 2).then(|| surface_stars(m));
        let counts = (0..=n).map(|k| m.num_simplices(k)).collect();
        DecOperators {
            n,
            d,
            stars,
            boundary: BoundaryComplex::new(m),
            counts,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.n
    }

    pub fn count(&self, k: usize) -> usize {
        self.counts[k]
    }

    pub fn star_kind(&self) -> Option<StarKind> {
        self.stars.as_ref().map(|s| s.kind)
    }

    fn stars_or_err(&self, op: &'static str) -> Result<&Stars<T>> {
        self.stars.as_ref().ok_or_else(|| {
            crate::Error::new(
                MODULE,
                op,
                ErrorKind::Unsupported(format!("Hodge star for n = {}", self.n)),
            )
        })
    }

    /// Diagonal of `⋆_k`.
    pub fn star_diag(&self, k: usize) -> Result<&DVector<T>> {
        Ok(&self.stars_or_err("hodge_star")?.diag[k])
    }

    /// Primal coboundary `d_k`.
    pub fn coboundary(&self, c: &Cochain<T>) -> Result<Cochain<T>> {
        let k = c.degree;
        if c.dual {
            return self.dual_coboundary(c);
        }
        if k >= self.n {
            return err(
                MODULE,
                "coboundary",
                ErrorKind::Degree {
                    degree: k,
                    n: self.n,
                },
            );
        }
        self.check_len(c, "coboundary")?;
        let v = &self.d[k] * DVector::from_column_slice(&c.values);
        Ok(Cochain::new(k + 1, v.iter().copied().collect()))
    }

    /// Coboundary on the dual complex with the natural (zero-flux) boundary
    /// convention: a dual (n-k)-cochain, indexed by primal k-simplices, maps
    /// to a dual (n-k+1)-cochain via `(-1)^k d_{k-1}^T`.
    pub fn dual_coboundary(&self, c: &Cochain<T>) -> Result<Cochain<T>> {
        let k = self.n - c.degree;
        if !c.dual || k == 0 {
            return err(
                MODULE,
                "dual_coboundary",
                ErrorKind::Degree {
                    degree: c.degree,
                    n: self.n,
                },
            );
        }
        let v = self.d[k - 1].tr_mul(&DVector::from_column_slice(&c.values));
        let sign = if k.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        Ok(Cochain::dual(
            c.degree + 1,
            v.iter().map(|&x| x * sign).collect(),
        ))
    }

    /// `⋆`: primal k -> dual (n-k) by the diagonal ratio; dual -> primal by
    /// the inverse ratio and the sign `(-1)^{k(n-k)}`, so `⋆⋆ = (-1)^{k(n-k)}`.
    pub fn hodge_star(&self, c: &Cochain<T>) -> Result<Cochain<T>> {
        let stars = self.stars_or_err("hodge_star")?;
        if c.dual {
            let k = self.n - c.degree;
            let sign = if (k * (self.n - k)).is_multiple_of(2) {
                T::one()
            } else {
                -T::one()
            };
            let vals = c
                .values
                .iter()
                .zip(stars.diag[k].iter())
                .map(|(&x, &s)| sign * x / s)
                .collect();
            Ok(Cochain::new(k, vals))
        } else {
            self.check_len(c, "hodge_star")?;
            let k = c.degree;
            let vals = c
                .values
                .iter()
                .zip(stars.diag[k].iter())
                .map(|(&x, &s)| x * s)
                .collect();
            Ok(Cochain::dual(self.n - k, vals))
        }
    }

    /// `⟨a, b⟩ = Σ a_i ⋆_i b_i` on primal k-cochains.
    pub fn inner(&self, a: &Cochain<T>, b: &Cochain<T>) -> Result<T> {
        let s = self.star_diag(a.degree)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .zip(s.iter())
            .fold(T::zero(), |acc, ((&x, &y), &w)| acc + x * y * w))
    }

    /// Signed sum of the values of a top-degree cochain (primal or dual).
    pub fn integrate(&self, c: &Cochain<T>) -> Result<T> {
        if c.degree != self.n {
            return err(
                MODULE,
                "integrate",
                ErrorKind::Degree {
                    degree: c.degree,
                    n: self.n,
                },
            );
        }
        Ok(c.values.iter().fold(T::zero(), |a, &b| a + b))
    }

    /// Transfer of a primal n-cochain to the dual n-cells of vertices,
    /// distributing each simplex value by its dual corner areas.
    pub fn primal_to_dual_top(
        &self,
        tau: &Cochain<T>,
        m: &SimplicialPatch<T>,
    ) -> Result<Cochain<T>> {
        let stars = self.stars_or_err("primal_to_dual_top")?;
        if tau.degree != self.n || tau.dual {
            return err(
                MODULE,
                "primal_to_dual_top",
                ErrorKind::Degree {
                    degree: tau.degree,
                    n: self.n,
                },
            );
        }
        let mut out = vec![T::zero(); m.num_simplices(0)];
        for (s, simplex) in m.simplices().iter().enumerate() {
            let area = m.simplex_volume(s);
            for (c, &v) in simplex.iter().enumerate() {
                out[v] += tau.values[s] * stars.corner_area[s][c] / area;
            }
        }
        Ok(Cochain::dual(self.n, out))
    }

    /// Restriction to the boundary complex.
    pub fn boundary_trace(&self, c: &Cochain<T>) -> Result<Cochain<T>> {
        if c.dual || c.degree >= self.n {
            return err(
                MODULE,
                "boundary_trace",
                ErrorKind::Degree {
                    degree: c.degree,
                    n: self.n,
                },
            );
        }
        self.check_len(c, "boundary_trace")?;
        Ok(self.boundary.trace(c))
    }

    /// Discrete Stokes boundary term: integral of an (n-1)-cochain over the
    /// boundary with its induced orientation.
    pub fn boundary_integral(&self, c: &Cochain<T>) -> Result<T> {
        if c.degree + 1 != self.n || c.dual {
            return err(
                MODULE,
                "boundary_integral",
                ErrorKind::Degree {
                    degree: c.degree,
                    n: self.n,
                },
            );
        }
        Ok(self.boundary.integrate_top(c))
    }

    /// `η(N)` at each boundary vertex: Whitney interpolation of the edge
    /// values at the vertex in every incident simplex, area-weighted
    /// average, paired with the inward normal.
    pub fn normal_component(
        &self,
        c: &Cochain<T>,
        m: &SimplicialPatch<T>,
        b: &BoundaryData<T>,
    ) -> Result<Vec<T>> {
        if c.degree != 1 || c.dual {
            return err(
                MODULE,
                "normal_component",
                ErrorKind::Degree {
                    degree: c.degree,
                    n: self.n,
                },
            );
        }
        self.check_len(c, "normal_component")?;
        let mut out = Vec::with_capacity(b.len());
        for (pos, &v) in b.boundary_vertex_set.iter().enumerate() {
            let w = whitney_at_vertex(c, m, v);
            out.push(w.dot(&b.inward_normal[pos]));
        }
        Ok(out)
    }

    fn check_len(&self, c: &Cochain<T>, op: &'static str) -> Result<()> {
        let expected = self.counts[c.degree.min(self.n)];
        if c.values.len() != expected {
            return err(
                MODULE,
                op,
                ErrorKind::Dimension {
                    expected,
                    got: c.values.len(),
                },
            );
        }
        Ok(())
    }
}

/// Whitney reconstruction of a 1-cochain as a vector at vertex `v`
/// (area-weighted average over incident simplices).
pub fn whitney_at_vertex<T: Real>(c: &Cochain<T>, m: &SimplicialPatch<T>, v: usize) -> DVector<T> {
    let dim = m.ambient_dim();
    let mut acc = DVector::zeros(dim);
    let mut weight = T::zero();
    for (s, simplex) in m.simplices().iter().enumerate() {
        let Some(local) = simplex.iter().position(|&u| u == v) else {
            continue;
        };
        let grads = barycentric_gradients(m, simplex);
        let area = m.simplex_volume(s);
        let mut vec = DVector::zeros(dim);
        for (j, &u) in simplex.iter().enumerate() {
            if j == local {
                continue;
            }
            if let Some((e, sign)) = m.find_simplex(&[v, u]) {
                vec += &grads[j] * (c.values[e] * if sign > 0 { T::one() } else { -T::one() });
            }
        }
        acc += vec * area;
        weight += area;
    }
    if weight > T::zero() {
        acc / weight
    } else {
        acc
    }
}

/// Gradients (in the simplex plane) of the barycentric coordinates.
pub fn barycentric_gradients<T: Real>(
    m: &SimplicialPatch<T>,
    simplex: &[usize],
) -> Vec<DVector<T>> {
    let dim = m.ambient_dim();
    let k = simplex.len() - 1;
    let p0 = m.vertex(simplex[0]);
    let e = DMatrix::from_fn(dim, k, |r, c| m.vertex(simplex[c + 1])[r] - p0[r]);
    let gram = e.tr_mul(&e);
    let inv = gram.try_inverse().unwrap_or_else(|| DMatrix::zeros(k, k));
    let g = &e * inv;
    let mut out = Vec::with_capacity(k + 1);
    let mut first = DVector::zeros(dim);
    for c in 0..k {
        first -= g.column(c);
    }
    out.push(first);
    for c in 0..k {
        out.push(g.column(c).into_owned());
    }
    out
}

fn surface_stars<T: Real>(m: &SimplicialPatch<T>) -> Stars<T> {
    let worst = max_angle(m);
    let kind = if worst < std::f64::consts::FRAC_PI_2 {
        StarKind::Circumcentric
    } else {
        StarKind::Barycentric
    };
    let nv = m.num_simplices(0);
    let ne = m.num_simplices(1);
    let nt = m.num_simplices(2);
    let mut star0: DVector<T> = DVector::zeros(nv);
    let mut dual_len: DVector<T> = DVector::zeros(ne);
    let mut star2: DVector<T> = DVector::zeros(nt);
    let mut corner_area = Vec::with_capacity(nt);
    let half = lit::<T>(0.5);
    let third = T::one() / from_usize::<T>(3);
    for (s, t) in m.simplices().iter().enumerate() {
        let area = m.simplex_volume(s);
        star2[s] = T::one() / area;
        let p = [m.vertex(t[0]), m.vertex(t[1]), m.vertex(t[2])];
        let mut corners = [T::zero(); 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let (e, _) = m.find_simplex(&[t[j], t[k]]).expect("edge of simplex");
            let len = (p[k] - p[j]).norm();
            match kind {
                StarKind::Circumcentric => {
                    // edge jk is opposite vertex i
                    let a = p[j] - p[i];
                    let b = p[k] - p[i];
                    let cot = a.dot(&b) / (lit::<T>(2.0) * area);
                    dual_len[e] += half * len * cot;
                    let quarter_cot_len2 = cot * len * len / lit::<T>(8.0);
                    corners[j] += quarter_cot_len2;
                    corners[k] += quarter_cot_len2;
                }
                StarKind::Barycentric => {
                    let centroid = (p[0] + p[1] + p[2]) * third;
                    let mid = (p[j] + p[k]) * half;
                    dual_len[e] += (centroid - mid).norm();
                    corners[i] = area * third;
                }
            }
        }
        for i in 0..3 {
            star0[t[i]] += corners[i];
        }
        corner_area.push(corners);
    }
    let star1 = DVector::from_fn(ne, |e, _| dual_len[e] / m.k_volume(1, e));
    Stars {
        kind,
        diag: vec![star0, star1, star2],
        corner_area,
        max_angle: worst,
    }
}

/// 1-cochain of a vector field: ∫_e f·dx by Simpson's rule (exact for
/// fields quadratic along edges), canonical edge orientation.
pub fn one_form_of_field<T: Real>(
    m: &SimplicialPatch<T>,
    f: impl Fn(&DVector<T>) -> DVector<T>,
) -> Cochain<T> {
    let six = lit::<T>(6.0);
    let four = lit::<T>(4.0);
    let half = lit::<T>(0.5);
    let vals = m
        .k_simplices(1)
        .iter()
        .map(|e| {
            let a = m.vertex(e[0]);
            let b = m.vertex(e[1]);
            let dx = b - a;
            let mid = (a + b) * half;
            (f(a).dot(&dx) + f(&mid).dot(&dx) * four + f(b).dot(&dx)) / six
        })
        .collect();
    Cochain::new(1, vals)
}

/// Cochain export: header naming degree and patch hash, then
/// `simplex_index,value` rows with 17 significant digits.
pub fn cochain_csv<T: Real>(c: &Cochain<T>, patch_hash: &str) -> String {
    let mut out = format!(
        "# degree={} complex={} patch={}\nsimplex_index,value\n",
        c.degree,
        if c.dual { "dual" } else { "primal" },
        patch_hash
    );
    for (i, v) in c.values.iter().enumerate() {
        out.push_str(&format!("{i},{:.16e}\n", crate::scalar::to_f64(*v)));
    }
    out
}
