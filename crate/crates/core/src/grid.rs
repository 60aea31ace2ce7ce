//! Dense functions on `Z_N^d`, coordinate projections `P_ω` and index sets.
//!
//! Coordinates are residues `0..N`; storage is row-major with the first
//! coordinate most significant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A subset `I` of the vertex classes `{1, …, universe}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "IndexSetRepr", into = "IndexSetRepr")]
pub struct IndexSet {
    universe: usize,
    bits: u32,
}

#[derive(Serialize, Deserialize)]
struct IndexSetRepr {
    universe: usize,
    members: Vec<usize>,
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = Error;
    fn try_from(r: IndexSetRepr) -> Result<Self> {
        IndexSet::new(r.universe, &r.members)
    }
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        IndexSetRepr {
            universe: s.universe,
            members: s.members().collect(),
        }
    }
}

impl IndexSet {
    pub const MAX_UNIVERSE: usize = 16;

    pub fn new(universe: usize, members: &[usize]) -> Result<Self> {
        if universe > Self::MAX_UNIVERSE {
            return domain(format!("universe {universe} exceeds {}", Self::MAX_UNIVERSE));
        }
        let mut bits = 0u32;
        for &m in members {
            if m == 0 || m > universe {
                return domain(format!("member {m} outside [1, {universe}]"));
            }
            bits |= 1 << (m - 1);
        }
        Ok(IndexSet { universe, bits })
    }

    pub fn from_bits(universe: usize, bits: u32) -> Self {
        debug_assert!(universe <= Self::MAX_UNIVERSE && bits >> universe == 0);
        IndexSet { universe, bits }
    }

    pub fn full(universe: usize) -> Self {
        Self::from_bits(universe, ((1u64 << universe) - 1) as u32)
    }

    pub fn empty(universe: usize) -> Self {
        Self::from_bits(universe, 0)
    }

    /// `[universe] \ {j}`.
    pub fn without(universe: usize, j: usize) -> Self {
        let full = Self::full(universe);
        Self::from_bits(universe, full.bits & !(1 << (j - 1)))
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, m: usize) -> bool {
        m >= 1 && m <= self.universe && self.bits & (1 << (m - 1)) != 0
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.bits & !other.bits == 0
    }

    /// Members in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.universe).filter(move |&m| self.contains(m))
    }

    /// Position of `m` among the members, if present.
    pub fn position(&self, m: usize) -> Option<usize> {
        self.contains(m)
            .then(|| (self.bits & ((1u32 << (m - 1)) - 1)).count_ones() as usize)
    }

    /// All subsets of `self`, in increasing bit order.
    pub fn subsets(&self) -> Vec<IndexSet> {
        let mut out = Vec::with_capacity(1 << self.len());
        let mut sub = 0u32;
        loop {
            out.push(IndexSet::from_bits(self.universe, sub));
            if sub == self.bits {
                break;
            }
            sub = (sub.wrapping_sub(self.bits)) & self.bits;
        }
        out
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// `ω ∈ {0,1}^d`; bit `j` selects coordinate `j` (0-based) from `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProjectionMask {
    d: usize,
    bits: u32,
}

impl ProjectionMask {
    pub fn new(d: usize, bits: u32) -> Result<Self> {
        if d > 31 || (bits as u64) >> d != 0 {
            return domain(format!("mask {bits:#b} does not fit dimension {d}"));
        }
        Ok(ProjectionMask { d, bits })
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let packed = bits
            .iter()
            .enumerate()
            .fold(0u32, |acc, (j, &b)| acc | ((b as u32) << j));
        Self::new(bits.len(), packed)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits >> j & 1 == 1
    }

    /// Every mask of dimension `d`, in increasing bit order.
    pub fn all(d: usize) -> impl Iterator<Item = ProjectionMask> {
        (0..1u32 << d).map(move |bits| ProjectionMask { d, bits })
    }
}

/// `P_ω(x, y)`: coordinate `j` is `x_j` when `ω_j = 0`, `y_j` when `ω_j = 1`.
pub fn project(mask: ProjectionMask, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    if x.len() != mask.d {
        return Err(Error::DimensionMismatch {
            expected: mask.d,
            got: x.len(),
        });
    }
    if y.len() != mask.d {
        return Err(Error::DimensionMismatch {
            expected: mask.d,
            got: y.len(),
        });
    }
    Ok((0..mask.d)
        .map(|j| if mask.get(j) { y[j] } else { x[j] })
        .collect())
}

/// A real-valued function on `Z_N^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

fn grid_len(d: usize, n: usize) -> Result<usize> {
    (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(n))
        .ok_or_else(|| Error::Domain(format!("N^d overflows for N = {n}, d = {d}")))
}

impl GridFunction {
    pub fn new(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return domain("modulus N must be positive");
        }
        let len = grid_len(d, n)?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value at index {i}"));
        }
        Ok(GridFunction { d, n, values })
    }

    pub fn constant(d: usize, n: usize, c: f64) -> Result<Self> {
        Self::new(d, n, vec![c; grid_len(d, n)?])
    }

    pub fn zeros(d: usize, n: usize) -> Result<Self> {
        Self::constant(d, n, 0.0)
    }

    /// Build from `f(coords)`.
    pub fn from_fn(d: usize, n: usize, mut f: impl FnMut(&[u64]) -> f64) -> Result<Self> {
        let len = grid_len(d, n)?;
        let mut coords = vec![0u64; d];
        let mut values = Vec::with_capacity(len);
        for idx in 0..len {
            decode_into(idx, n, &mut coords);
            values.push(f(&coords));
        }
        Self::new(d, n, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear index of `coords`, each reduced mod `N`.
    pub fn index_of(&self, coords: &[u64]) -> usize {
        debug_assert_eq!(coords.len(), self.d);
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.n + (c % self.n as u64) as usize)
    }

    pub fn get(&self, coords: &[u64]) -> f64 {
        self.values[self.index_of(coords)]
    }

    pub fn coords_of(&self, idx: usize) -> Vec<u64> {
        let mut c = vec![0; self.d];
        decode_into(idx, self.n, &mut c);
        c
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.d, self.n, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_domain(other)?;
        Self::new(
            self.d,
            self.n,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn check_same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        if self.n != other.n {
            return domain(format!("modulus mismatch: {} vs {}", self.n, other.n));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        crate::par::pairwise_sum(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Row-major decode of `idx` into `coords` (first coordinate most significant).
pub(crate) fn decode_into(mut idx: usize, n: usize, coords: &mut [u64]) {
    for c in coords.iter_mut().rev() {
        *c = (idx % n) as u64;
        idx /= n;
    }
}

/// `1_A` for a set of points in `[0, N)^d`.
pub fn indicator_from_set(d: usize, n: usize, points: &[Vec<u64>]) -> Result<GridFunction> {
    let mut f = GridFunction::zeros(d, n)?;
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if let Some(&c) = p.iter().find(|&&c| c >= n as u64) {
            return domain(format!("point {p:?} has coordinate {c} outside [0, {n})"));
        }
        let idx = f.index_of(p);
        f.values[idx] = 1.0;
    }
    Ok(f)
}

/// The slice of `f` over the coordinates in `keep` (a subset of `[d]`), with
/// every other coordinate fixed; `fixed` lists those values in ascending
/// coordinate order.
pub fn restrict_slice(f: &GridFunction, keep: IndexSet, fixed: &[u64]) -> Result<GridFunction> {
    if keep.universe() != f.d() {
        return Err(Error::DimensionMismatch {
            expected: f.d(),
            got: keep.universe(),
        });
    }
    let free = f.d() - keep.len();
    if fixed.len() != free {
        return Err(Error::DimensionMismatch {
            expected: free,
            got: fixed.len(),
        });
    }
    if let Some(&c) = fixed.iter().find(|&&c| c >= f.n() as u64) {
        return domain(format!("fixed coordinate {c} outside [0, {})", f.n()));
    }
    let mut full = vec![0u64; f.d()];
    GridFunction::from_fn(keep.len(), f.n(), |sub| {
        let (mut ki, mut fi) = (0, 0);
        for (j, slot) in full.iter_mut().enumerate() {
            if keep.contains(j + 1) {
                *slot = sub[ki];
                ki += 1;
            } else {
                *slot = fixed[fi];
                fi += 1;
            }
        }
        f.get(&full)
    })
}
