use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::Cochain;
use crate::mesh::SimplicialPatch;
use crate::scalar::Real;

/// The subcomplex of simplices lying in boundary (n-1)-faces.
#[derive(Debug, Clone)]
pub struct BoundaryComplex<T: Real> {
    /// `simplices[k]`: patch indices of boundary k-simplices, ascending.
    pub simplices: Vec<Vec<usize>>,
    position: Vec<HashMap<usize, usize>>,
    /// Orientation induced by L on each boundary (n-1)-simplex, aligned with
    /// `simplices[n-1]`.
    pub induced_sign: Vec<i8>,
    /// Restricted coboundaries `d[k]`: boundary k -> boundary (k+1).
    pub d: Vec<DMatrix<T>>,
    /// Connected components as lists of positions in `simplices[n-1]`.
    pub components: Vec<Vec<usize>>,
}

impl<T: Real> BoundaryComplex<T> {
    pub fn new(m: &SimplicialPatch<T>) -> Self {
        let n = m.intrinsic_dim();
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut signs: HashMap<usize, i8> = HashMap::new();
        for b in m.boundary_faces() {
            sets[n - 1].push(b.face);
            signs.insert(b.face, b.sign);
        }
        for k in (1..n).rev() {
            let mut lower: Vec<usize> = sets[k]
                .iter()
                .flat_map(|&s| m.faces_of(k, s).iter().map(|i| i.face))
                .collect();
            lower.sort_unstable();
            lower.dedup();
            sets[k - 1] = lower;
        }
        sets[n - 1].sort_unstable();
        let position: Vec<HashMap<usize, usize>> = sets
            .iter()
            .map(|s| s.iter().enumerate().map(|(i, &f)| (f, i)).collect())
            .collect();
        let induced_sign = sets[n - 1].iter().map(|f| signs[f]).collect();

        let mut d = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            let mut mat = DMatrix::zeros(sets[k + 1].len(), sets[k].len());
            for (r, &s) in sets[k + 1].iter().enumerate() {
                for inc in m.faces_of(k + 1, s) {
                    let c = position[k][&inc.face];
                    mat[(r, c)] = if inc.sign > 0 { T::one() } else { -T::one() };
                }
            }
            d.push(mat);
        }

        let components = if n >= 2 {
            connected_faces(m, &sets[n - 1], &position[n - 2], n)
        } else {
            (0..sets[0].len()).map(|i| vec![i]).collect()
        };
        BoundaryComplex {
            simplices: sets,
            position,
            induced_sign,
            d,
            components,
        }
    }

    /// Restriction of a patch k-cochain to the boundary k-simplices.
    pub fn trace(&self, c: &Cochain<T>) -> Cochain<T> {
        Cochain::new(
            c.degree,
            self.simplices[c.degree]
                .iter()
                .map(|&s| c.values[s])
                .collect(),
        )
    }

    /// Index of patch k-simplex `s` in the boundary complex.
    pub fn position(&self, k: usize, s: usize) -> Option<usize> {
        self.position.get(k)?.get(&s).copied()
    }

    /// Coboundary within the boundary complex.
    pub fn coboundary(&self, c: &Cochain<T>) -> Cochain<T> {
        let v = &self.d[c.degree] * DVector::from_column_slice(&c.values);
        Cochain::new(c.degree + 1, v.iter().copied().collect())
    }

    /// ∫_{∂L} of a patch (n-1)-cochain with induced orientation.
    pub fn integrate_top(&self, c: &Cochain<T>) -> T {
        let top = self.simplices.len() - 1;
        self.simplices[top]
            .iter()
            .zip(&self.induced_sign)
            .fold(T::zero(), |acc, (&f, &s)| {
                if s > 0 {
                    acc + c.values[f]
                } else {
                    acc - c.values[f]
                }
            })
    }

    /// ∫ over each boundary component separately.
    pub fn component_integrals(&self, c: &Cochain<T>) -> Vec<T> {
        let top = self.simplices.len() - 1;
        self.components
            .iter()
            .map(|comp| {
                comp.iter().fold(T::zero(), |acc, &i| {
                    let v = c.values[self.simplices[top][i]];
                    if self.induced_sign[i] > 0 {
                        acc + v
                    } else {
                        acc - v
                    }
                })
            })
            .collect()
    }
}

fn connected_faces<T: Real>(
    m: &SimplicialPatch<T>,
    faces: &[usize],
    lower_pos: &HashMap<usize, usize>,
    n: usize,
) -> Vec<Vec<usize>> {
    // union-find over boundary faces sharing an (n-2)-face
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (i, &f) in faces.iter().enumerate() {
        for inc in m.faces_of(n - 1, f) {
            debug_assert!(lower_pos.contains_key(&inc.face));
            if let Some(&j) = owner.get(&inc.face) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else {
                owner.insert(inc.face, i);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..faces.len() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}
