//! Small fixed-capacity vectors in the ambient embedding space.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// A point or direction in the ambient Euclidean space. Stored inline so that
/// per-node arithmetic in the flow never allocates.
#[derive(Clone, Copy, PartialEq)]
pub struct AmbientVector {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl AmbientVector {
    pub fn zeros(dim: usize) -> Self {
        assert!(
            (2..=MAX_DIM).contains(&dim),
            "ambient dimension {dim} outside 2..={MAX_DIM}"
        );
        Self { dim, c: [0.0; MAX_DIM] }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Self::zeros(values.len());
        v.c[..values.len()].copy_from_slice(values);
        v
    }

    /// The `k`-th standard basis vector.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.c[k] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for k in 0..self.dim {
            s += self.c[k] * other.c[k];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for k in 0..self.dim {
            out.c[k] *= s;
        }
        out
    }

    /// `self + s * other`.
    #[inline]
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..self.dim {
            out.c[k] += s * other.c[k];
        }
        out
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// Unit vector in the same direction; returns `None` for (near) zero vectors.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl fmt::Debug for AmbientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for AmbientVector {
    type Output = f64;
    #[inline]
    fn index(&self, k: usize) -> &f64 {
        debug_assert!(k < self.dim);
        &self.c[k]
    }
}

impl IndexMut<usize> for AmbientVector {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        debug_assert!(k < self.dim);
        &mut self.c[k]
    }
}

impl Add for AmbientVector {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for AmbientVector {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.axpy(-1.0, &rhs)
    }
}

impl AddAssign for AmbientVector {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = self.axpy(1.0, &rhs);
    }
}

impl SubAssign for AmbientVector {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = self.axpy(-1.0, &rhs);
    }
}

impl Mul<f64> for AmbientVector {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Mul<AmbientVector> for f64 {
    type Output = AmbientVector;
    #[inline]
    fn mul(self, v: AmbientVector) -> AmbientVector {
        v.scale(self)
    }
}

impl Neg for AmbientVector {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = AmbientVector::from_slice(&[1.0, 2.0, 2.0]);
        let b = AmbientVector::basis(3, 0);
        assert_eq!(a.norm(), 3.0);
        assert_eq!((a - b).as_slice(), &[0.0, 2.0, 2.0]);
        assert_eq!((2.0 * b + a).as_slice(), &[3.0, 2.0, 2.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert!(AmbientVector::zeros(3).normalized().is_none());
    }
}
