//! Partitions of particle labels into clusters.

use crate::cloud::Cloud;
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// A partition of `{0, ..., N-1}`. Classes are sorted internally and listed
/// by their smallest element, so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl Partition {
    pub fn from_classes(mut classes: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = classes.iter().map(Vec::len).sum();
        let mut class_of = vec![usize::MAX; n];
        for c in &mut classes {
            if c.is_empty() {
                return Err(Error::InvalidArgument("empty class".into()));
            }
            c.sort_unstable();
        }
        classes.sort_by_key(|c| c[0]);
        for (k, c) in classes.iter().enumerate() {
            for &i in c {
                if i >= n || class_of[i] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("{classes:?} is not a partition")));
                }
                class_of[i] = k;
            }
        }
        Ok(Partition { classes, class_of })
    }

    /// Builds a partition from arbitrary per-particle labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::BTreeMap::<usize, Vec<usize>>::new();
        for (i, &l) in labels.iter().enumerate() {
            map.entry(l).or_default().push(i);
        }
        Self::from_classes(map.into_values().collect()).expect("labels define a partition")
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn full(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    /// Ordered partition from consecutive class sizes, e.g. `[2, 1]` gives `{0,1},{2}`.
    pub fn from_sizes(sizes: &[usize]) -> Self {
        let mut labels = Vec::new();
        for (k, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(k, s));
        }
        Self::from_labels(&labels)
    }

    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_index(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn class_of(&self, i: usize) -> &[usize] {
        &self.classes[self.class_of[i]]
    }

    /// True iff every class is a run of consecutive labels.
    pub fn is_ordered(&self) -> bool {
        self.classes
            .iter()
            .all(|c| c.windows(2).all(|w| w[1] == w[0] + 1))
    }

    pub fn is_trivial(&self) -> bool {
        self.classes.len() == self.n()
    }

    /// True iff every class of `self` lies inside a class of `coarser`.
    pub fn is_refinement_of(&self, coarser: &Partition) -> bool {
        self.n() == coarser.n()
            && self.classes.iter().all(|c| {
                let k = coarser.class_of[c[0]];
                c.iter().all(|&i| coarser.class_of[i] == k)
            })
    }

    /// Finest common coarsening.
    pub fn join(&self, other: &Partition) -> Partition {
        let n = self.n();
        let mut uf = UnionFind::new(n);
        for p in [self, other] {
            for c in &p.classes {
                for &i in &c[1..] {
                    uf.union(c[0], i);
                }
            }
        }
        uf.into_partition()
    }

    /// All ordered partitions of `{0, ..., n-1}`, one per set of cut positions.
    pub fn all_ordered(n: usize) -> Vec<Partition> {
        if n == 0 {
            return vec![];
        }
        (0u64..1 << (n - 1))
            .map(|cuts| {
                let mut labels = vec![0; n];
                for i in 1..n {
                    labels[i] = labels[i - 1] + ((cuts >> (i - 1)) & 1) as usize;
                }
                Partition::from_labels(&labels)
            })
            .collect()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub(crate) fn into_partition(mut self) -> Partition {
        let labels: Vec<usize> = (0..self.parent.len()).map(|i| self.find(i)).collect();
        Partition::from_labels(&labels)
    }
}

/// Groups particles whose positions lie within `tol` of each other,
/// closed transitively.
pub fn partition_of<T: Scalar>(x: &Cloud<T>, tol: T) -> Partition {
    let n = x.n();
    let mut uf = UnionFind::new(n);
    let tol_sq = tol * tol;
    if x.dim() == 1 {
        // Transitive closure on a line only needs sorted neighbours.
        let (sorted, sigma) = x.sort_ascending().expect("d = 1");
        let s = sorted.as_slice();
        for k in 1..n {
            if s[k] - s[k - 1] <= tol {
                uf.union(sigma.apply(k - 1), sigma.apply(k));
            }
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if scalar::dist_sq(x.point(i), x.point(j)) <= tol_sq {
                    uf.union(i, j);
                }
            }
        }
    }
    uf.into_partition()
}

/// Replaces each particle of `v` by the mean over its class in `pi`.
pub fn project_class_average<T: Scalar>(v: &Cloud<T>, pi: &Partition) -> Result<Cloud<T>> {
    if pi.n() != v.n() {
        return Err(Error::Dimension(format!(
            "partition of {} labels applied to {} particles",
            pi.n(),
            v.n()
        )));
    }
    let d = v.dim();
    let mut out = v.clone();
    for c in pi.classes() {
        let inv = T::one() / scalar::count::<T>(c.len());
        for k in 0..d {
            let mean = c.iter().map(|&i| v.point(i)[k]).sum::<T>() * inv;
            for &i in c {
                out.as_mut_slice()[i * d + k] = mean;
            }
        }
    }
    Ok(out)
}

/// Diameter of a group of particles: the largest pairwise distance.
pub fn class_spread<T: Scalar>(x: &Cloud<T>, class: &[usize]) -> T {
    let mut best = T::zero();
    for (a, &i) in class.iter().enumerate() {
        for &j in &class[a + 1..] {
            best = best.max(scalar::dist_sq(x.point(i), x.point(j)).sqrt());
        }
    }
    best
}
