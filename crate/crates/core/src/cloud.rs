//! Point clouds and lattices.
//!
//! A [`Cloud`] is an ordered N-tuple of points in R^d, stored row-major as a
//! flat vector of length `N * d`. Arithmetic treats it as a vector in R^{Nd}.

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Cloud<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> Cloud<T> {
    pub fn new(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("point dimension must be positive".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cloud coordinates"));
        }
        Ok(Cloud { dim, coords })
    }

    /// A cloud of scalar particles (d = 1).
    pub fn line(coords: &[T]) -> Result<Self> {
        Self::new(1, coords.to_vec())
    }

    pub fn from_points(points: &[Vec<T>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("points have differing dimensions".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Cloud {
            dim,
            coords: vec![T::zero(); n * dim],
        }
    }

    /// Builds a cloud without validation. Callers guarantee shape and finiteness.
    pub(crate) fn raw(dim: usize, coords: Vec<T>) -> Self {
        debug_assert!(dim > 0 && coords.len().is_multiple_of(dim));
        Cloud { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coords
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords.len() == other.coords.len()
    }

    pub(crate) fn check_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.n(),
                self.dim,
                other.n(),
                other.dim
            )))
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        scalar::dot(&self.coords, &other.coords)
    }

    pub fn norm_sq(&self) -> T {
        scalar::norm_sq(&self.coords)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> T {
        scalar::dist_sq(&self.coords, &other.coords).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|a| a * s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    /// Linear interpolation `(1 - w) * self + w * other`.
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        self.zip_map(other, |a, b| a + w * (b - a))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Cloud {
            dim: self.dim,
            coords: self.coords.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert!(self.same_shape(other));
        Cloud {
            dim: self.dim,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `X^σ = (x_{σ(1)}, ..., x_{σ(N)})`.
    pub fn permute(&self, sigma: &Perm) -> Result<Self> {
        if sigma.len() != self.n() {
            return Err(Error::Dimension(format!(
                "permutation of length {} applied to {} particles",
                sigma.len(),
                self.n()
            )));
        }
        Ok(self.permute_unchecked(sigma.as_slice()))
    }

    pub(crate) fn permute_unchecked(&self, sigma: &[usize]) -> Self {
        let d = self.dim;
        let mut coords = Vec::with_capacity(self.coords.len());
        for &s in sigma {
            coords.extend_from_slice(&self.coords[s * d..(s + 1) * d]);
        }
        Cloud { dim: d, coords }
    }

    /// Mean point, repeated for every particle.
    pub fn barycenter(&self) -> Self {
        let n = self.n();
        let mut mean = vec![T::zero(); self.dim];
        for i in 0..n {
            for (m, &c) in mean.iter_mut().zip(self.point(i)) {
                *m += c;
            }
        }
        let inv = T::one() / scalar::count::<T>(n);
        let mean: Vec<T> = mean.into_iter().map(|m| m * inv).collect();
        Cloud {
            dim: self.dim,
            coords: mean.iter().copied().cycle().take(self.coords.len()).collect(),
        }
    }

    /// Sorts a scalar cloud ascending. Returns the sorted cloud and σ with
    /// `sorted = self^σ`. Stable, so tied particles keep their order.
    pub fn sort_ascending(&self) -> Result<(Self, Perm)> {
        if self.dim != 1 {
            return Err(Error::Dimension("sorting requires d = 1".into()));
        }
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&i, &j| self.coords[i].partial_cmp(&self.coords[j]).unwrap());
        let sorted = self.permute_unchecked(&idx);
        Ok((sorted, Perm::from_vec_unchecked(idx)))
    }

    pub fn is_sorted_ascending(&self) -> bool {
        self.dim == 1 && self.coords.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn cast<U: Scalar>(&self) -> Cloud<U> {
        Cloud {
            dim: self.dim,
            coords: self
                .coords
                .iter()
                .map(|c| U::from_f64(c.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }
}

/// The target cloud `A`. Tracks whether it is a strictly increasing scalar sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    cloud: Cloud<T>,
    strictly_ordered: bool,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(cloud: Cloud<T>) -> Self {
        let strictly_ordered =
            cloud.dim() == 1 && cloud.as_slice().windows(2).all(|w| w[0] < w[1]);
        Lattice {
            cloud,
            strictly_ordered,
        }
    }

    pub fn line(coords: &[T]) -> Result<Self> {
        Ok(Self::new(Cloud::line(coords)?))
    }

    pub fn cloud(&self) -> &Cloud<T> {
        &self.cloud
    }

    pub fn n(&self) -> usize {
        self.cloud.n()
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn is_strictly_ordered(&self) -> bool {
        self.strictly_ordered
    }

    pub fn norm(&self) -> T {
        self.cloud.norm()
    }

    pub fn norm_sq(&self) -> T {
        self.cloud.norm_sq()
    }

    /// Scalar lattice values sorted ascending.
    pub fn sorted_values(&self) -> Result<Vec<T>> {
        Ok(self.cloud.sort_ascending()?.0.into_vec())
    }

    /// Mean of the lattice points, `ā`.
    pub fn mean_point(&self) -> Vec<T> {
        self.cloud.barycenter().point(0).to_vec()
    }

    pub(crate) fn check_cloud(&self, x: &Cloud<T>, what: &str) -> Result<()> {
        self.cloud.check_shape(x, what)
    }
}
