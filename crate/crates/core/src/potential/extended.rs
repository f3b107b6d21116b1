use super::min_norm::{wolfe, VertexList};
use super::{tie_tol, Potential};
use crate::cloud::Cloud;
use crate::error::Result;
use crate::scalar::{self, count, Scalar};

pub(super) fn extended_gradient<T: Scalar>(
    pot: &Potential<T>,
    x: &Cloud<T>,
    tol: Option<T>,
) -> Result<Cloud<T>> {
    pot.lattice.check_cloud(x, "extended gradient")?;
    let tol = tol.unwrap_or_else(|| tie_tol(x, &pot.lattice));
    if x.dim() == 1 {
        return Ok(scalar_path(&pot.lattice.sorted_values()?, x, tol));
    }
    let s: Vec<(T, &[T])> = pot
        .vertex_rows()?
        .map(|v| (scalar::dot(x.as_slice(), v), v))
        .collect();
    let max = s.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let mut active: Vec<Vec<T>> = Vec::new();
    for (score, v) in s {
        if score >= max - tol && !active.iter().any(|w| w.as_slice() == v) {
            active.push(v.to_vec());
        }
    }
    Ok(Cloud::raw(x.dim(), wolfe(&VertexList(&active))?))
}

/// For scalar particles: sort, group coordinates closer than `tol`, give
/// each sorted slot the mean of the sorted lattice over its group.
fn scalar_path<T: Scalar>(a_sorted: &[T], x: &Cloud<T>, tol: T) -> Cloud<T> {
    let (sorted, sigma) = x.sort_ascending().expect("d = 1");
    let s = sorted.as_slice();
    let n = s.len();
    let mut out = vec![T::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && s[end] - s[end - 1] <= tol {
            end += 1;
        }
        let mean = a_sorted[start..end].iter().copied().sum::<T>() / count(end - start);
        for k in start..end {
            out[sigma.apply(k)] = mean;
        }
        start = end;
    }
    Cloud::raw(1, out)
}
