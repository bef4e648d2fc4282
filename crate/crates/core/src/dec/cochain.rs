use crate::mesh::SimplicialPatch;
use crate::scalar::{max_abs, Real};

/// A discrete k-form: one value per oriented k-simplex. Dual cochains are
/// indexed by the primal simplices whose dual cells carry them (a dual
/// `degree`-cochain lives on primal `(n - degree)`-simplices).
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<T: Real> {
    pub degree: usize,
    pub dual: bool,
    pub values: Vec<T>,
}

impl<T: Real> Cochain<T> {
    pub fn new(degree: usize, values: Vec<T>) -> Self {
        Cochain {
            degree,
            dual: false,
            values,
        }
    }

    pub fn dual(degree: usize, values: Vec<T>) -> Self {
        Cochain {
            degree,
            dual: true,
            values,
        }
    }

    pub fn zeros(m: &SimplicialPatch<T>, degree: usize) -> Self {
        Cochain::new(degree, vec![T::zero(); m.num_simplices(degree)])
    }

    /// Value on the simplex with the given ordered vertices; the sign
    /// follows the ordering relative to the stored orientation.
    pub fn eval(&self, m: &SimplicialPatch<T>, vertices: &[usize]) -> Option<T> {
        if self.dual || vertices.len() != self.degree + 1 {
            return None;
        }
        let (idx, sign) = m.find_simplex(vertices)?;
        let v = *self.values.get(idx)?;
        Some(if sign > 0 { v } else { -v })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn inf_norm(&self) -> T {
        max_abs(&self.values)
    }

    pub fn scaled(&self, s: T) -> Self {
        Cochain {
            values: self.values.iter().map(|&v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `self + s * other` (same degree and complex).
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        debug_assert_eq!(
            (self.degree, self.dual, self.len()),
            (other.degree, other.dual, other.len())
        );
        Cochain {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + s * b)
                .collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Euclidean dot product of the value vectors.
    pub fn dot(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |a, (&x, &y)| a + x * y)
    }
}
