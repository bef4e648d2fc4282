//! Simplicial patches: an oriented n-dimensional simplicial manifold with
//! boundary embedded in R^{2n}.

mod generate;
mod homology;
mod io;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{err, ErrorKind, Result};
use crate::scalar::{from_usize, is_finite, lit, to_f64, Real};

pub use generate::{generate_mesh, max_angle, Shape};
pub use homology::{betti_numbers, coboundary_matrix, RANK_TOL};
pub use io::{format_mesh, load_mesh, parse_mesh, patch_hash, write_mesh};

const MODULE: &str = "mesh";

/// Scale-invariant degeneracy threshold: volume < this * (longest edge)^n.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Incidence of a (k+1)-simplex on one of its k-faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub face: usize,
    pub sign: i8,
}

/// A boundary (n-1)-face with the orientation induced by its only coface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub face: usize,
    pub sign: i8,
    pub coface: usize,
}

/// Combinatorics of all skeleta. Simplices of degree `k < n` are stored with
/// ascending vertex indices (canonical orientation); top simplices keep the
/// orientation given in the input.
#[derive(Debug, Clone)]
struct Skeleta {
    simplices: Vec<Vec<Vec<usize>>>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
    /// `faces[k][s]`: incidences of k-simplex `s` on its (k-1)-faces (k >= 1).
    faces: Vec<Vec<Vec<Incidence>>>,
    /// `cofaces[k][f]`: (k+1)-simplices containing k-simplex `f`, with sign.
    cofaces: Vec<Vec<Vec<(usize, i8)>>>,
}

#[derive(Debug, Clone)]
pub struct SimplicialPatch<T: Real> {
    n: usize,
    vertices: Vec<DVector<T>>,
    skeleta: Skeleta,
    boundary: Vec<BoundaryFace>,
}

fn parity(perm: &mut [usize]) -> i8 {
    // bubble sort counting swaps; simplices are tiny
    let mut sign = 1i8;
    for i in 0..perm.len() {
        for j in 0..perm.len() - 1 - i {
            if perm[j] > perm[j + 1] {
                perm.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

/// Gram-determinant volume of the simplex spanned by `pts`.
pub fn simplex_volume<T: Real>(pts: &[&DVector<T>]) -> T {
    let k = pts.len() - 1;
    if k == 0 {
        return T::one();
    }
    let dim = pts[0].len();
    let e = DMatrix::from_fn(dim, k, |r, c| pts[c + 1][r] - pts[0][r]);
    let gram = e.transpose() * &e;
    let det = gram.determinant().max(T::zero());
    let mut fact = T::one();
    for i in 2..=k {
        fact *= from_usize::<T>(i);
    }
    det.sqrt() / fact
}

impl<T: Real> SimplicialPatch<T> {
    /// Builds and validates a patch. `simplices` carry the orientation.
    pub fn new(n: usize, vertices: Vec<DVector<T>>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        const OP: &str = "validate";
        if n == 0 {
            return err(
                MODULE,
                OP,
                ErrorKind::Invalid("intrinsic dimension must be positive".into()),
            );
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != 2 * n {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Dimension {
                        expected: 2 * n,
                        got: v.len(),
                    },
                );
            }
            if !v.iter().all(|&x| is_finite(x)) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid(format!("vertex {i} is not finite")),
                );
            }
        }
        if simplices.is_empty() {
            return err(MODULE, OP, ErrorKind::Invalid("no simplices".into()));
        }
        for (s, simplex) in simplices.iter().enumerate() {
            if simplex.len() != n + 1 {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Dimension {
                        expected: n + 1,
                        got: simplex.len(),
                    },
                );
            }
            if let Some(&bad) = simplex.iter().find(|&&i| i >= vertices.len()) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid(format!("simplex {s} references vertex {bad}")),
                );
            }
            let mut sorted = simplex.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != simplex.len() {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Degenerate {
                        simplex: s,
                        volume: 0.0,
                    },
                );
            }
            let pts: Vec<&DVector<T>> = simplex.iter().map(|&i| &vertices[i]).collect();
            let vol = simplex_volume(&pts);
            let mut longest = T::zero();
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    longest = longest.max((pts[a] - pts[b]).norm());
                }
            }
            if vol < lit::<T>(DEGENERACY_TOL) * longest.powi(n as i32) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Degenerate {
                        simplex: s,
                        volume: to_f64(vol),
                    },
                );
            }
        }

        let skeleta = build_skeleta(n, vertices.len(), &simplices);

        // manifold-with-boundary and orientability on (n-1)-faces
        let mut boundary = Vec::new();
        for (f, cof) in skeleta.cofaces[n - 1].iter().enumerate() {
            match cof.len() {
                1 => boundary.push(BoundaryFace {
                    face: f,
                    sign: cof[0].1,
                    coface: cof[0].0,
                }),
                2 => {
                    if cof[0].1 == cof[1].1 {
                        return err(
                            MODULE,
                            OP,
                            ErrorKind::NonOrientable {
                                face: skeleta.simplices[n - 1][f].clone(),
                                simplex: cof[1].0,
                            },
                        );
                    }
                }
                count => {
                    return err(
                        MODULE,
                        OP,
                        ErrorKind::NonManifold {
                            face: skeleta.simplices[n - 1][f].clone(),
                            count,
                            simplex: cof.get(2).map(|c| c.0).unwrap_or(0),
                        },
                    )
                }
            }
        }

        let patch = SimplicialPatch {
            n,
            vertices,
            skeleta,
            boundary,
        };
        let components = patch.simplex_components();
        if components > 1 {
            return err(MODULE, OP, ErrorKind::Disconnected { components });
        }
        Ok(patch)
    }

    fn simplex_components(&self) -> usize {
        let s = self.num_simplices(self.n);
        let mut seen = vec![false; s];
        let mut components = 0;
        for start in 0..s {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(t) = stack.pop() {
                for inc in &self.skeleta.faces[self.n][t] {
                    for &(other, _) in &self.skeleta.cofaces[self.n - 1][inc.face] {
                        if !seen[other] {
                            seen[other] = true;
                            stack.push(other);
                        }
                    }
                }
            }
        }
        components
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.n
    }

    pub fn vertices(&self) -> &[DVector<T>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &DVector<T> {
        &self.vertices[i]
    }

    /// Top simplices in their given orientation.
    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.skeleta.simplices[self.n]
    }

    /// k-simplices; canonical (ascending) orientation for k < n.
    pub fn k_simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.skeleta.simplices[k]
    }

    pub fn num_simplices(&self, k: usize) -> usize {
        self.skeleta.simplices.get(k).map_or(0, Vec::len)
    }

    /// Index of the k-simplex with the given vertex set and the sign of the
    /// given ordering relative to the stored orientation.
    pub fn find_simplex(&self, vertices: &[usize]) -> Option<(usize, i8)> {
        let k = vertices.len().checked_sub(1)?;
        if k > self.n {
            return None;
        }
        let mut key = vertices.to_vec();
        let sign = parity(&mut key);
        let idx = *self.skeleta.lookup[k].get(&key)?;
        let stored = &self.skeleta.simplices[k][idx];
        let mut stored_sorted = stored.clone();
        let stored_sign = parity(&mut stored_sorted);
        Some((idx, sign * stored_sign))
    }

    /// Incidences of k-simplex `s` on its (k-1)-faces.
    pub fn faces_of(&self, k: usize, s: usize) -> &[Incidence] {
        &self.skeleta.faces[k][s]
    }

    /// (k+1)-simplices containing k-simplex `f`, with incidence sign.
    pub fn cofaces_of(&self, k: usize, f: usize) -> &[(usize, i8)] {
        &self.skeleta.cofaces[k][f]
    }

    /// Boundary (n-1)-faces with induced orientation.
    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Sorted vertex indices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .boundary
            .iter()
            .flat_map(|b| self.skeleta.simplices[self.n - 1][b.face].iter().copied())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Unsigned n-volume of top simplex `s`.
    pub fn simplex_volume(&self, s: usize) -> T {
        let pts: Vec<&DVector<T>> = self.simplices()[s]
            .iter()
            .map(|&i| &self.vertices[i])
            .collect();
        simplex_volume(&pts)
    }

    /// Unsigned volume of an arbitrary k-simplex of the patch.
    pub fn k_volume(&self, k: usize, s: usize) -> T {
        let pts: Vec<&DVector<T>> = self.skeleta.simplices[k][s]
            .iter()
            .map(|&i| &self.vertices[i])
            .collect();
        simplex_volume(&pts)
    }

    /// Same combinatorics with new vertex positions (no revalidation of the
    /// face structure, only finiteness and non-degeneracy).
    pub fn with_vertices(&self, vertices: Vec<DVector<T>>) -> Result<Self> {
        const OP: &str = "with_vertices";
        if vertices.len() != self.vertices.len() {
            return err(
                MODULE,
                OP,
                ErrorKind::Dimension {
                    expected: self.vertices.len(),
                    got: vertices.len(),
                },
            );
        }
        for v in &vertices {
            if v.len() != 2 * self.n || !v.iter().all(|&x| is_finite(x)) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid("vertex not finite or wrong dimension".into()),
                );
            }
        }
        let out = SimplicialPatch {
            vertices,
            ..self.clone()
        };
        for s in 0..out.num_simplices(out.n) {
            let vol = out.simplex_volume(s);
            let mut longest = T::zero();
            let simplex = &out.simplices()[s];
            for a in 0..simplex.len() {
                for b in a + 1..simplex.len() {
                    longest =
                        longest.max((&out.vertices[simplex[a]] - &out.vertices[simplex[b]]).norm());
                }
            }
            if vol < lit::<T>(DEGENERACY_TOL) * longest.powi(out.n as i32) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Degenerate {
                        simplex: s,
                        volume: to_f64(vol),
                    },
                );
            }
        }
        Ok(out)
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(&DVector<T>) -> DVector<T>) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    /// Relabels vertices: new index of old vertex `i` is `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let mut vertices = vec![DVector::zeros(2 * self.n); self.vertices.len()];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old].clone();
        }
        let simplices = self
            .simplices()
            .iter()
            .map(|s| s.iter().map(|&i| perm[i]).collect())
            .collect();
        SimplicialPatch::new(self.n, vertices, simplices)
    }

    /// Orthonormal basis (columns) of the unit in-simplex tangent plane.
    fn simplex_frame(&self, pts: &[usize]) -> DMatrix<T> {
        let dim = 2 * self.n;
        let k = pts.len() - 1;
        let e = DMatrix::from_fn(dim, k, |r, c| {
            self.vertices[pts[c + 1]][r] - self.vertices[pts[0]][r]
        });
        let qr = e.qr();
        qr.q().columns(0, k).into_owned()
    }

    /// Averaged tangent space of L at vertex `v`: the dominant n-dimensional
    /// eigenspace of the volume-weighted sum of simplex projectors.
    pub fn vertex_tangent_basis(&self, v: usize) -> DMatrix<T> {
        let dim = 2 * self.n;
        let mut acc = DMatrix::zeros(dim, dim);
        for (s, simplex) in self.simplices().iter().enumerate() {
            if simplex.contains(&v) {
                let q = self.simplex_frame(simplex);
                acc += (&q * q.transpose()) * self.simplex_volume(s);
            }
        }
        dominant_eigenspace(acc, self.n)
    }

    /// Averaged tangent space of the boundary at boundary vertex `v`
    /// (dimension n-1).
    pub fn boundary_tangent_basis(&self, v: usize) -> DMatrix<T> {
        let dim = 2 * self.n;
        let mut acc = DMatrix::zeros(dim, dim);
        for b in &self.boundary {
            let face = &self.skeleta.simplices[self.n - 1][b.face];
            if face.contains(&v) && self.n > 1 {
                let q = self.simplex_frame(face);
                acc += (&q * q.transpose()) * self.k_volume(self.n - 1, b.face);
            }
        }
        dominant_eigenspace(acc, self.n - 1)
    }

    /// Longest edge length; the mesh size `h`.
    pub fn mesh_size(&self) -> T {
        (0..self.num_simplices(1))
            .map(|e| self.k_volume(1, e))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest distance between two boundary vertices.
    pub fn boundary_diameter(&self) -> T {
        let bv = self.boundary_vertices();
        let mut d = T::zero();
        for (i, &a) in bv.iter().enumerate() {
            for &b in &bv[i + 1..] {
                d = d.max((&self.vertices[a] - &self.vertices[b]).norm());
            }
        }
        d
    }
}

/// Orthonormal basis of the eigenspace of the `k` largest eigenvalues.
pub(crate) fn dominant_eigenspace<T: Real>(sym: DMatrix<T>, k: usize) -> DMatrix<T> {
    let dim = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(dim, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
    }
    out
}

fn build_skeleta(n: usize, num_vertices: usize, top: &[Vec<usize>]) -> Skeleta {
    let mut simplices: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n + 1];
    let mut lookup: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); n + 1];
    simplices[0] = (0..num_vertices).map(|i| vec![i]).collect();
    for i in 0..num_vertices {
        lookup[0].insert(vec![i], i);
    }
    // collect sub-simplices of every degree, in order of first appearance
    // after sorting, which makes indexing deterministic
    for k in 1..n {
        let mut keys: Vec<Vec<usize>> = Vec::new();
        for s in top {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            for comb in combinations(&sorted, k + 1) {
                keys.push(comb);
            }
        }
        keys.sort();
        keys.dedup();
        for (i, key) in keys.iter().enumerate() {
            lookup[k].insert(key.clone(), i);
        }
        simplices[k] = keys;
    }
    simplices[n] = top.to_vec();
    for (i, s) in top.iter().enumerate() {
        let mut key = s.clone();
        key.sort_unstable();
        lookup[n].insert(key, i);
    }

    let mut faces: Vec<Vec<Vec<Incidence>>> = vec![Vec::new(); n + 1];
    let mut cofaces: Vec<Vec<Vec<(usize, i8)>>> = (0..=n)
        .map(|k| vec![Vec::new(); simplices[k].len()])
        .collect();
    for k in 1..=n {
        faces[k] = simplices[k]
            .iter()
            .enumerate()
            .map(|(s, simplex)| {
                let mut out = Vec::with_capacity(simplex.len());
                for drop in 0..simplex.len() {
                    let mut face: Vec<usize> = simplex
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    let base = if drop % 2 == 0 { 1i8 } else { -1 };
                    let perm_sign = parity(&mut face);
                    let idx = lookup[k - 1][&face];
                    let sign = base * perm_sign;
                    cofaces[k - 1][idx].push((s, sign));
                    out.push(Incidence { face: idx, sign });
                }
                out
            })
            .collect();
    }
    Skeleta {
        simplices,
        lookup,
        faces,
        cofaces,
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + items.len() - k {
                break;
            }
            if i == 0 && idx[0] == items.len() - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Boundary geometry: boundary vertices and their inward unit normals.
#[derive(Debug, Clone)]
pub struct BoundaryData<T: Real> {
    pub boundary_vertex_set: Vec<usize>,
    /// One unit vector per entry of `boundary_vertex_set`.
    pub inward_normal: Vec<DVector<T>>,
    /// Orthonormal basis of the averaged boundary tangent space, per entry.
    pub boundary_tangent: Vec<DMatrix<T>>,
    /// Orthonormal basis of the averaged tangent space of L, per entry.
    pub tangent: Vec<DMatrix<T>>,
}

impl<T: Real> BoundaryData<T> {
    /// Position of vertex `v` in `boundary_vertex_set`.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.boundary_vertex_set.binary_search(&v).ok()
    }

    pub fn len(&self) -> usize {
        self.boundary_vertex_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary_vertex_set.is_empty()
    }
}

/// Inward unit normal of the boundary at every boundary vertex.
pub fn boundary_data<T: Real>(m: &SimplicialPatch<T>) -> Result<BoundaryData<T>> {
    let n = m.intrinsic_dim();
    let dim = 2 * n;
    if m.boundary_faces().is_empty() {
        return err(MODULE, "boundary_data", ErrorKind::EmptyBoundary);
    }
    let bverts = m.boundary_vertices();
    let mut sums: HashMap<usize, DVector<T>> =
        bverts.iter().map(|&v| (v, DVector::zeros(dim))).collect();
    for b in m.boundary_faces() {
        let face = &m.k_simplices(n - 1)[b.face];
        let simplex = &m.simplices()[b.coface];
        let opposite = *simplex
            .iter()
            .find(|v| !face.contains(v))
            .expect("coface has an opposite vertex");
        let mut normal = &m.vertices[opposite] - &m.vertices[face[0]];
        if n > 1 {
            let q = m.simplex_frame(face);
            normal -= &q * (q.transpose() * &normal);
        }
        let len = normal.norm();
        let weight = m.simplex_volume(b.coface);
        for &v in face {
            if let Some(acc) = sums.get_mut(&v) {
                *acc += &normal * (weight / len);
            }
        }
    }
    let mut normals = Vec::with_capacity(bverts.len());
    let mut btangents = Vec::with_capacity(bverts.len());
    let mut tangents = Vec::with_capacity(bverts.len());
    for &v in &bverts {
        let tan = m.vertex_tangent_basis(v);
        let btan = m.boundary_tangent_basis(v);
        let mut nv = &tan * (tan.transpose() * &sums[&v]);
        nv -= &btan * (btan.transpose() * &nv);
        let len = nv.norm();
        if len <= T::zero() {
            return err(
                MODULE,
                "boundary_data",
                ErrorKind::Invalid(format!("vanishing normal at vertex {v}")),
            );
        }
        normals.push(nv / len);
        btangents.push(btan);
        tangents.push(tan);
    }
    Ok(BoundaryData {
        boundary_vertex_set: bverts,
        inward_normal: normals,
        boundary_tangent: btangents,
        tangent: tangents,
    })
}

/// Signed n-volume per top simplex; positive for the stored orientation, so
/// the sum is Vol(L).
pub fn volume_cochain<T: Real>(m: &SimplicialPatch<T>) -> crate::dec::Cochain<T> {
    let n = m.intrinsic_dim();
    crate::dec::Cochain::new(
        n,
        (0..m.num_simplices(n))
            .map(|s| m.simplex_volume(s))
            .collect(),
    )
}

/// Embeds planar coordinates `(a, b)` into the x-plane of C^2.
pub fn x_plane_point<T: Real>(a: f64, b: f64) -> DVector<T> {
    DVector::from_vec(vec![lit(a), T::zero(), lit(b), T::zero()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SimplicialPatch<f64> {
        SimplicialPatch::new(
            2,
            vec![
                x_plane_point(0.0, 0.0),
                x_plane_point(1.0, 0.0),
                DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]),
            ],
            vec![vec![0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_counts() {
        let t = triangle();
        assert_eq!(t.vertices().len(), 3);
        assert_eq!(t.num_simplices(2), 1);
        assert_eq!(t.boundary_faces().len(), 3);
        assert_eq!(t.boundary_vertices(), vec![0, 1, 2]);
    }

    #[test]
    fn repeated_triangle_is_not_orientable() {
        let e = SimplicialPatch::new(
            2,
            vec![
                x_plane_point::<f64>(0.0, 0.0),
                x_plane_point(1.0, 0.0),
                x_plane_point(0.0, 1.0),
            ],
            vec![vec![0, 1, 2], vec![0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(e.kind, ErrorKind::NonOrientable { .. }), "{e}");
    }

    #[test]
    fn three_triangles_on_an_edge_is_non_manifold() {
        let v = vec![
            x_plane_point::<f64>(0.0, 0.0),
            x_plane_point(1.0, 0.0),
            x_plane_point(0.5, 1.0),
            x_plane_point(0.5, -1.0),
            DVector::from_vec(vec![0.5, 1.0, 0.0, 0.0]),
        ];
        let e = SimplicialPatch::new(2, v, vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]])
            .unwrap_err();
        assert!(matches!(
            e.kind,
            ErrorKind::NonManifold { count: 3, .. } | ErrorKind::NonOrientable { .. }
        ));
    }

    #[test]
    fn degenerate_and_disconnected_rejected() {
        let v = vec![
            x_plane_point::<f64>(0.0, 0.0),
            x_plane_point(1.0, 0.0),
            x_plane_point(2.0, 0.0),
        ];
        let e = SimplicialPatch::new(2, v, vec![vec![0, 1, 2]]).unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Degenerate { simplex: 0, .. }));

        let v = (0..6)
            .map(|i| {
                x_plane_point::<f64>(
                    (i % 3) as f64 * 0.5 + (i / 3) as f64 * 5.0,
                    (i % 3 == 2) as u8 as f64,
                )
            })
            .collect();
        let e = SimplicialPatch::new(2, v, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Disconnected { components: 2 }));
    }

    #[test]
    fn inward_normal_of_triangle() {
        let t = triangle();
        let b = boundary_data(&t).unwrap();
        let pos = b.position(1).unwrap();
        let nrm = &b.inward_normal[pos];
        assert!((nrm.norm() - 1.0).abs() < 1e-12);
        // interior of the triangle from (1,0,0,0) lies towards (-1, 0, 1, 0)
        let to_centroid = DVector::from_vec(vec![1.0 / 3.0 - 1.0, 0.0, 1.0 / 3.0, 0.0]);
        assert!(nrm.dot(&to_centroid) > 0.0);
        // orthogonal to the averaged boundary tangent
        let bt = &b.boundary_tangent[pos];
        assert!((bt.transpose() * nrm).norm() < 1e-10);
    }

    #[test]
    fn volume_and_orientation_lookup() {
        let t = triangle();
        let vol = volume_cochain(&t);
        assert!((vol.values[0] - 0.5).abs() < 1e-15);
        let (idx, sign) = t.find_simplex(&[0, 2, 1]).unwrap();
        assert_eq!((idx, sign), (0, -1));
        assert!((vol.eval(&t, &[0, 2, 1]).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(
            combinations(&[1, 2, 3], 2),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(&[1, 2, 3, 4], 4).len(), 1);
        assert_eq!(combinations(&[1, 2, 3, 4], 3).len(), 4);
    }

    #[test]
    fn works_in_single_precision() {
        let t = SimplicialPatch::<f32>::new(
            2,
            vec![
                x_plane_point(0.0, 0.0),
                x_plane_point(1.0, 0.0),
                x_plane_point(0.0, 1.0),
            ],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        assert!((volume_cochain(&t).values[0] - 0.5).abs() < 1e-6);
    }
}
