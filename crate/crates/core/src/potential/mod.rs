//! The permutation potential `f(X) = max_σ X · A^σ`, its entropic smoothing
//! `f_ε`, and the quantities derived from them.

mod assignment;
mod extended;
mod min_norm;
mod resolvent;

pub use assignment::{optimal_assignment, Assignment};
pub use min_norm::min_norm_point;

use crate::cloud::{Cloud, Lattice};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::perm::Perm;
use crate::scalar::{self, count, Scalar};

/// Largest particle count for which the `N!` permutation sum is enumerated.
pub const N_CAP: usize = 8;

/// Largest particle count for the ordered-partition gap search.
pub const GAP_CAP: usize = 12;

/// Lattice together with its enumerated permutation vertices `A^σ`.
#[derive(Debug, Clone)]
pub struct Potential<T> {
    lattice: Lattice<T>,
    table: Option<Table<T>>,
}

#[derive(Debug, Clone)]
struct Table<T> {
    perms: Vec<Perm>,
    /// Row-major `N! x (N d)`.
    vertices: Vec<T>,
    ln_count: T,
}

/// Softmax statistics of the scores `s_σ = W · A^σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxStats<T> {
    /// `h(W) = log((1/N!) Σ_σ exp(s_σ))`.
    pub value: T,
    /// `⟨A^σ⟩_W`, the softmax-weighted mean vertex.
    pub mean: Cloud<T>,
    /// Indices into [`Potential::perms`] attaining the maximum score.
    pub argmax: Vec<usize>,
}

impl<T: Scalar> Potential<T> {
    /// Enumerates the permutation table when `N <= N_CAP`; larger lattices
    /// only support the assignment-based operations.
    pub fn new(lattice: Lattice<T>) -> Self {
        let n = lattice.n();
        let table = (n <= N_CAP).then(|| {
            let perms: Vec<Perm> = Perm::all(n).collect();
            let mut vertices = Vec::with_capacity(perms.len() * n * lattice.dim());
            for p in &perms {
                vertices.extend_from_slice(lattice.cloud().permute_unchecked(p.as_slice()).as_slice());
            }
            Table {
                perms,
                vertices,
                ln_count: scalar::ln_factorial(n),
            }
        });
        Potential { lattice, table }
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    fn table(&self, what: &'static str) -> Result<&Table<T>> {
        self.table.as_ref().ok_or(Error::Capability {
            what,
            n: self.n(),
            cap: N_CAP,
        })
    }

    /// Permutations in lexicographic order, when enumerated.
    pub fn perms(&self) -> Result<&[Perm]> {
        Ok(&self.table("permutation table")?.perms)
    }

    /// The vertex `A^σ` for the `k`-th permutation.
    pub fn vertex(&self, k: usize) -> Result<Cloud<T>> {
        let t = self.table("permutation table")?;
        let p = self.n() * self.dim();
        Ok(Cloud::raw(self.dim(), t.vertices[k * p..(k + 1) * p].to_vec()))
    }

    pub(crate) fn vertex_rows(&self) -> Result<impl Iterator<Item = &[T]>> {
        let t = self.table("permutation table")?;
        Ok(t.vertices.chunks_exact(self.n() * self.dim()))
    }

    fn scores(&self, w: &Cloud<T>, what: &'static str) -> Result<Vec<T>> {
        self.lattice.check_cloud(w, what)?;
        Ok(self
            .vertex_rows()
            .map_err(|_| Error::Capability {
                what,
                n: self.n(),
                cap: N_CAP,
            })?
            .map(|v| scalar::dot(w.as_slice(), v))
            .collect())
    }

    /// Normalized softmax weights for the scores of `w`, with the log-partition value.
    fn weights(&self, w: &Cloud<T>, what: &'static str) -> Result<(Vec<T>, T, Vec<T>)> {
        let s = self.scores(w, what)?;
        let (lse, _) = scalar::log_sum_exp(&s);
        if !lse.is_finite() {
            return Err(Error::NonFinite(what));
        }
        let ln_count = self.table(what)?.ln_count;
        let wts = s.iter().map(|&x| (x - lse).exp()).collect();
        Ok((wts, lse - ln_count, s))
    }

    /// `h(W) = log((1/N!) Σ_σ exp(W · A^σ))`.
    pub fn h_logsumexp(&self, w: &Cloud<T>) -> Result<T> {
        Ok(self.weights(w, "log-sum-exp")?.1)
    }

    pub fn softmax(&self, w: &Cloud<T>) -> Result<SoftmaxStats<T>> {
        let (wts, value, s) = self.weights(w, "softmax")?;
        let mean = self.weighted_mean(&wts);
        let max = s.iter().copied().fold(T::neg_infinity(), T::max);
        let tol = tie_tol(w, &self.lattice);
        let argmax = (0..s.len()).filter(|&k| s[k] >= max - tol).collect();
        Ok(SoftmaxStats { value, mean, argmax })
    }

    fn weighted_mean(&self, wts: &[T]) -> Cloud<T> {
        let p = self.n() * self.dim();
        let mut mean = vec![T::zero(); p];
        for (v, &wk) in self.vertex_rows().expect("table exists").zip(wts) {
            for (m, &vi) in mean.iter_mut().zip(v) {
                *m += wk * vi;
            }
        }
        Cloud::raw(self.dim(), mean)
    }

    /// `f_ε(t, X) = ε t h(X / (ε t))`.
    pub fn f_eps(&self, t: T, x: &Cloud<T>, eps: T) -> Result<T> {
        let s = check_scale(t, eps)?;
        Ok(s * self.h_logsumexp(&x.scale(T::one() / s))?)
    }

    /// `∇f_ε(t, X) = ⟨A^σ⟩_{X/(εt)}`.
    pub fn grad_f_eps(&self, t: T, x: &Cloud<T>, eps: T) -> Result<Cloud<T>> {
        let s = check_scale(t, eps)?;
        let (wts, _, _) = self.weights(&x.scale(T::one() / s), "grad f_eps")?;
        Ok(self.weighted_mean(&wts))
    }

    /// `D²h(X) V = ⟨(A^σ·V) A^σ⟩ - (⟨A^σ⟩·V) ⟨A^σ⟩`, computed in centered form.
    pub fn hess_h_apply(&self, x: &Cloud<T>, v: &Cloud<T>) -> Result<Cloud<T>> {
        self.lattice.check_cloud(v, "Hessian direction")?;
        let (wts, _, _) = self.weights(x, "Hessian of h")?;
        let mean = self.weighted_mean(&wts);
        let p = mean.as_slice().len();
        let mut out = vec![T::zero(); p];
        let mut c = vec![T::zero(); p];
        for (row, &wk) in self.vertex_rows()?.zip(&wts) {
            for i in 0..p {
                c[i] = row[i] - mean.as_slice()[i];
            }
            let cv = wk * scalar::dot(&c, v.as_slice());
            for i in 0..p {
                out[i] += cv * c[i];
            }
        }
        Ok(Cloud::raw(self.dim(), out))
    }

    /// Dense `D²h(X)` as a row-major `Nd x Nd` matrix, with `∇h(X)`.
    pub fn hess_h_dense(&self, x: &Cloud<T>) -> Result<(Vec<T>, Cloud<T>)> {
        let (wts, _, _) = self.weights(x, "Hessian of h")?;
        let mean = self.weighted_mean(&wts);
        let p = mean.as_slice().len();
        let mut out = vec![T::zero(); p * p];
        let mut c = vec![T::zero(); p];
        for (row, &wk) in self.vertex_rows()?.zip(&wts) {
            if wk == T::zero() {
                continue;
            }
            for i in 0..p {
                c[i] = row[i] - mean.as_slice()[i];
            }
            for i in 0..p {
                let ci = wk * c[i];
                for j in 0..=i {
                    out[i * p + j] += ci * c[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                out[j * p + i] = out[i * p + j];
            }
        }
        Ok((out, mean))
    }

    /// `f(X) = max_σ X · A^σ` via the optimal assignment.
    pub fn f_max(&self, x: &Cloud<T>) -> Result<T> {
        let asg = optimal_assignment(x, &self.lattice)?;
        Ok(x.dot(&self.lattice.cloud().permute_unchecked(asg.perm.as_slice())))
    }

    /// Minimal-norm element of the subdifferential of `f` at `X`.
    pub fn extended_gradient(&self, x: &Cloud<T>, tol: Option<T>) -> Result<Cloud<T>> {
        extended::extended_gradient(self, x, tol)
    }

    /// `J_τ(X) = argmin_Y f(Y) + |Y - X|² / (2τ)`.
    pub fn resolvent(&self, x: &Cloud<T>, tau: T) -> Result<Cloud<T>> {
        resolvent::resolvent(self, x, tau)
    }

    /// `argmin_Y f_ε(t, Y) + |Y - X|² / (2τ)`.
    pub fn resolvent_eps(&self, x: &Cloud<T>, tau: T, t: T, eps: T) -> Result<Cloud<T>> {
        resolvent::resolvent_eps(self, x, tau, t, eps)
    }
}

/// Default tie tolerance for scores, `1e-9 (1 + |X| |A|)`.
pub fn tie_tol<T: Scalar>(x: &Cloud<T>, a: &Lattice<T>) -> T {
    scalar::default_tol::<T>() * (T::one() + x.norm() * a.norm())
}

fn check_scale<T: Scalar>(t: T, eps: T) -> Result<T> {
    if !(t > T::zero()) || !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "smoothing needs t > 0 and eps > 0, got t = {t}, eps = {eps}"
        )));
    }
    Ok(eps * t)
}

/// `h(π) = Σ_C |Σ_{j∈C} a_j|² / #C`.
pub fn internal_energy<T: Scalar>(pi: &Partition, a: &Lattice<T>) -> Result<T> {
    if pi.n() != a.n() {
        return Err(Error::Dimension(format!(
            "partition of {} labels for {} lattice points",
            pi.n(),
            a.n()
        )));
    }
    let d = a.dim();
    Ok(pi
        .classes()
        .iter()
        .map(|c| {
            let s: T = (0..d)
                .map(|k| {
                    let v: T = c.iter().map(|&j| a.cloud().point(j)[k]).sum();
                    v * v
                })
                .sum();
            s / count(c.len())
        })
        .sum())
}

/// Smallest drop of `h` over strict ordered refinements, and the derived
/// velocity-jump constant `α = sqrt(δ / (N² - N))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaGap<T> {
    pub delta: T,
    pub alpha: T,
}

pub fn delta_gap<T: Scalar>(a: &Lattice<T>) -> Result<DeltaGap<T>> {
    let n = a.n();
    if n < 2 {
        return Err(Error::InvalidArgument("the gap needs at least two particles".into()));
    }
    if n > GAP_CAP {
        return Err(Error::Capability {
            what: "ordered-partition gap",
            n,
            cap: GAP_CAP,
        });
    }
    if a.dim() != 1 {
        return Err(Error::Dimension("the gap is defined for scalar lattices".into()));
    }
    let parts = Partition::all_ordered(n);
    let h: Vec<T> = parts
        .iter()
        .map(|p| internal_energy(p, a))
        .collect::<Result<_>>()?;
    // Partition index = cut mask; finer partitions have superset masks.
    let mut delta = T::infinity();
    for fine in 0..parts.len() {
        let mut coarse = fine;
        while coarse > 0 {
            coarse = (coarse - 1) & fine;
            delta = delta.min(h[fine] - h[coarse]);
        }
    }
    let alpha = (delta / count(n * n - n)).sqrt();
    Ok(DeltaGap { delta, alpha })
}
