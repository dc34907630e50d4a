//! Sparse and dense vector types plus the small set of linear operations
//! the rest of the crate is generic over.

/// Operations a vector representation must support to be retrofitted,
/// compared, and evaluated. Implementations must be deterministic.
pub trait VectorOps: Clone + PartialEq + std::fmt::Debug {
    /// Linear combination of the given terms. An empty term list yields
    /// the zero vector.
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self;

    /// Squared Euclidean distance.
    fn dist_sq(&self, other: &Self) -> f64;

    /// Inner product.
    fn dot(&self, other: &Self) -> f64;

    /// True when every component is zero.
    fn is_zero(&self) -> bool;

    /// Fixed dimensionality, if the representation has one. Sparse vectors
    /// share one unbounded index space and return `None`.
    fn dims(&self) -> Option<usize>;

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Cosine similarity; zero whenever either argument has zero norm.
pub fn cosine<V: VectorOps>(u: &V, v: &V) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        u.dot(v) / (nu * nv)
    }
}

/// Sparse vector stored as (index, weight) pairs with strictly increasing
/// indices and nonzero finite weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    components: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from arbitrary pairs: duplicate indices are summed,
    /// exact zeros are dropped. Weights must be finite.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut components: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            debug_assert!(w.is_finite(), "non-finite weight at index {i}");
            match components.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => components.push((i, w)),
            }
        }
        components.retain(|&(_, w)| w != 0.0);
        Self { components }
    }

    /// Pairs already sorted by strictly increasing index, zero-free.
    pub(crate) fn from_sorted_unchecked(components: Vec<(usize, f64)>) -> Self {
        debug_assert!(components.windows(2).all(|p| p[0].0 < p[1].0));
        debug_assert!(components.iter().all(|&(_, w)| w != 0.0 && w.is_finite()));
        Self { components }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.components.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.components.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.components.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.components[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Copy with every component of magnitude below `threshold` removed.
    pub fn prune(&self, threshold: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .copied()
                .filter(|&(_, w)| w.abs() >= threshold)
                .collect(),
        }
    }
}

impl VectorOps for SparseVector {
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self {
        // Merge through an ordered map so the result is independent of
        // term order up to float association in a fixed index order.
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for &(coeff, v) in terms {
            for (i, w) in v.iter() {
                *acc.entry(i).or_insert(0.0) += coeff * w;
            }
        }
        let components: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, w)| w != 0.0).collect();
        Self { components }
    }

    fn dist_sq(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (self.components.iter(), other.components.iter());
        let (mut x, mut y) = (a.next(), b.next());
        let mut sum = 0.0;
        loop {
            match (x, y) {
                (Some(&(i, u)), Some(&(j, v))) => {
                    if i == j {
                        let d = u - v;
                        sum += d * d;
                        x = a.next();
                        y = b.next();
                    } else if i < j {
                        sum += u * u;
                        x = a.next();
                    } else {
                        sum += v * v;
                        y = b.next();
                    }
                }
                (Some(&(_, u)), None) => {
                    sum += u * u;
                    x = a.next();
                }
                (None, Some(&(_, v))) => {
                    sum += v * v;
                    y = b.next();
                }
                (None, None) => return sum,
            }
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (self.components.iter(), other.components.iter());
        let (mut x, mut y) = (a.next(), b.next());
        let mut sum = 0.0;
        while let (Some(&(i, u)), Some(&(j, v))) = (x, y) {
            if i == j {
                sum += u * v;
                x = a.next();
                y = b.next();
            } else if i < j {
                x = a.next();
            } else {
                y = b.next();
            }
        }
        sum
    }

    fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    fn dims(&self) -> Option<usize> {
        None
    }
}

/// Fixed-dimension dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

impl VectorOps for DenseVector {
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self {
        let dim = terms.first().map_or(0, |(_, v)| v.len());
        let mut out = vec![0.0; dim];
        for &(coeff, v) in terms {
            assert_eq!(v.len(), dim, "mixed dimensions in weighted sum");
            for (o, x) in out.iter_mut().zip(&v.values) {
                *o += coeff * x;
            }
        }
        Self { values: out }
    }

    fn dist_sq(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "mixed dimensions in distance");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "mixed dimensions in dot product");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn dims(&self) -> Option<usize> {
        Some(self.values.len())
    }
}
