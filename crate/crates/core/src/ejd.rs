//! Extreme joint distributions with prescribed discrete marginals.
//!
//! For a monotonicity structure `e` (bit `e_k = 1` when coordinate `k` is
//! antimonotone to coordinate 1) the extreme measure assigns to the index
//! vector `(i_1, ..., i_d)` the mass
//!
//! ```text
//! [ min_k Fbar_k(i_k - e_k; e_k) - max_k Fbar_k(i_k + e_k - 1; e_k) ]^+
//! ```
//!
//! with `Fbar_k(i; 0) = F_k(i)` and `Fbar_k(i; 1) = 1 - F_k(i)`. Each
//! coordinate therefore owns the interval `(Fbar(i + e - 1), Fbar(i - e)]` of a
//! common uniform variable, and the measure is the overlap of those
//! intervals. The support is a monotone path, which is built here by sweeping
//! the interval boundaries of all coordinates at once rather than scanning
//! the product grid.

use std::fmt;

use crate::distributions::{NeumaierSum, TruncatedPmf};
use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 12;

/// Overlaps below this mass are discarded and counted as tail.
pub const DUST_THRESHOLD: f64 = 1e-14;

/// Pairwise co/antimonotone pattern relative to coordinate 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonotonicityStructure {
    bits: Vec<u8>,
}

impl MonotonicityStructure {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.len() < 2 || bits.len() > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange(bits.len()));
        }
        if bits[0] != 0 {
            return Err(Error::InvalidParameter(
                "first monotonicity bit must be 0".into(),
            ));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(
                "monotonicity bits must be 0 or 1".into(),
            ));
        }
        Ok(MonotonicityStructure { bits })
    }

    /// Structure number `index` in lexicographic order.
    pub fn from_index(d: usize, index: usize) -> Result<Self> {
        check_dimension(d)?;
        if index >= 1 << (d - 1) {
            return Err(Error::InvalidParameter(format!(
                "structure index {index} out of range for d = {d}"
            )));
        }
        let bits = (0..d)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((index >> (d - 1 - i)) & 1) as u8
                }
            })
            .collect();
        Ok(MonotonicityStructure { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn dimension(&self) -> usize {
        self.bits.len()
    }

    pub fn is_antimonotone(&self, k: usize) -> bool {
        self.bits[k] == 1
    }

    /// Whether coordinates `k` and `l` move together.
    pub fn comonotone(&self, k: usize, l: usize) -> bool {
        self.bits[k] == self.bits[l]
    }
}

impl fmt::Display for MonotonicityStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (2..=MAX_DIMENSION).contains(&d) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(d))
    }
}

/// All `2^(d-1)` structures with `e_1 = 0`, in lexicographic order.
pub fn enumerate_structures(d: usize) -> Result<Vec<MonotonicityStructure>> {
    check_dimension(d)?;
    (0..1usize << (d - 1))
        .map(|j| MonotonicityStructure::from_index(d, j))
        .collect()
}

/// Symmetric unit-diagonal matrix of pairwise correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<f64>,
}

/// Correlation matrix of an extreme measure.
pub type ExtremeCorrelationMatrix = CorrelationMatrix;

impl CorrelationMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = 1.0;
        }
        CorrelationMatrix { dim, entries }
    }

    /// Builds from rows, checking squareness, symmetry (1e-12), unit diagonal
    /// and the range `[-1, 1]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::NotCorrelationMatrix("matrix must be square".into()));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        let m = CorrelationMatrix { dim, entries };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        for k in 0..d {
            for l in 0..d {
                let v = self.get(k, l);
                if !v.is_finite() {
                    return Err(Error::NotCorrelationMatrix(format!(
                        "entry ({},{}) is not finite",
                        k + 1,
                        l + 1
                    )));
                }
                if (v - self.get(l, k)).abs() > 1e-12 {
                    return Err(Error::NotCorrelationMatrix(format!(
                        "asymmetric entries at ({},{})",
                        k + 1,
                        l + 1
                    )));
                }
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::NotCorrelationMatrix(format!(
                        "entry ({},{}) = {v} outside [-1, 1]",
                        k + 1,
                        l + 1
                    )));
                }
            }
            if (self.get(k, k) - 1.0).abs() > 1e-12 {
                return Err(Error::NotCorrelationMatrix(format!(
                    "diagonal entry {} is not 1",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.dim + l]
    }

    pub(crate) fn set_pair(&mut self, k: usize, l: usize, v: f64) {
        self.entries[k * self.dim + l] = v;
        self.entries[l * self.dim + k] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }
}

/// Monotone joint distribution on `Z_+^d` stored along its support path.
#[derive(Debug, Clone)]
pub struct ExtremeMeasure {
    structure: MonotonicityStructure,
    // row-major, `dim` values per support point
    support: Vec<u32>,
    probs: Vec<f64>,
    cum: Vec<f64>,
    tail_mass: f64,
}

struct Cursor<'a> {
    probs: &'a [f64],
    antimonotone: bool,
    consumed: usize,
    boundary: NeumaierSum,
}

impl<'a> Cursor<'a> {
    fn new(probs: &'a [f64], antimonotone: bool) -> Self {
        let mut c = Cursor {
            probs,
            antimonotone,
            consumed: 0,
            boundary: NeumaierSum::default(),
        };
        c.boundary.add(c.probs[c.value()]);
        c
    }

    // index of the atom whose interval is currently open
    fn value(&self) -> usize {
        if self.antimonotone {
            self.probs.len() - 1 - self.consumed
        } else {
            self.consumed
        }
    }

    fn upper(&self) -> f64 {
        self.boundary.value()
    }

    fn exhausted(&self) -> bool {
        self.consumed + 1 >= self.probs.len()
    }

    fn advance(&mut self) {
        self.consumed += 1;
        self.boundary.add(self.probs[self.value()]);
    }
}

/// Builds the extreme measure for `structure` over truncated marginals.
///
/// Antimonotone coordinates are walked from their truncation index downward.
/// The sweep stops at the smallest retained marginal mass; what lies beyond,
/// plus discarded dust, is reported as the joint tail mass.
pub fn build_extreme_measure(
    marginals: &[TruncatedPmf],
    structure: &MonotonicityStructure,
) -> Result<ExtremeMeasure> {
    let d = structure.dimension();
    if marginals.len() != d {
        return Err(Error::InvalidParameter(format!(
            "{} marginals for a structure of dimension {d}",
            marginals.len()
        )));
    }
    let limit = marginals
        .iter()
        .map(TruncatedPmf::total_mass)
        .fold(f64::INFINITY, f64::min);

    let mut cursors: Vec<Cursor> = marginals
        .iter()
        .enumerate()
        .map(|(k, m)| Cursor::new(m.probs(), structure.is_antimonotone(k)))
        .collect();

    let capacity: usize = marginals.iter().map(|m| m.probs().len()).sum();
    let mut support = Vec::with_capacity(capacity * d);
    let mut probs = Vec::with_capacity(capacity);
    let mut lower = 0.0;
    loop {
        let next = cursors
            .iter()
            .map(Cursor::upper)
            .fold(f64::INFINITY, f64::min);
        let end = next.min(limit);
        let mass = end - lower;
        if mass >= DUST_THRESHOLD {
            support.extend(cursors.iter().map(|c| c.value() as u32));
            probs.push(mass);
        }
        lower = end;
        if end >= limit {
            break;
        }
        let mut stuck = false;
        for c in cursors.iter_mut() {
            if c.upper() <= end {
                if c.exhausted() {
                    stuck = true;
                } else {
                    c.advance();
                }
            }
        }
        if stuck {
            break;
        }
    }

    let mut acc = NeumaierSum::default();
    let cum: Vec<f64> = probs
        .iter()
        .map(|&p| {
            acc.add(p);
            acc.value()
        })
        .collect();
    let total = cum.last().copied().unwrap_or(0.0);
    Ok(ExtremeMeasure {
        structure: structure.clone(),
        support,
        probs,
        cum,
        tail_mass: (1.0 - total).max(0.0),
    })
}

impl ExtremeMeasure {
    pub fn structure(&self) -> &MonotonicityStructure {
        &self.structure
    }

    pub fn dimension(&self) -> usize {
        self.structure.dimension()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support_point(&self, i: usize) -> &[u32] {
        let d = self.dimension();
        &self.support[i * d..(i + 1) * d]
    }

    pub fn support(&self) -> impl Iterator<Item = &[u32]> {
        self.support.chunks(self.dimension())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn total_mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Marginal pmf of coordinate `k` on `0..=max`.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        let len = self.support().map(|s| s[k] as usize + 1).max().unwrap_or(0);
        let mut out = vec![0.0; len];
        for (s, &p) in self.support().zip(&self.probs) {
            out[s[k] as usize] += p;
        }
        out
    }

    /// `E[X_k X_l]` over the stored (unnormalized) mass.
    pub fn cross_moment(&self, k: usize, l: usize) -> f64 {
        self.support()
            .zip(&self.probs)
            .map(|(s, &p)| s[k] as f64 * s[l] as f64 * p)
            .sum()
    }

    /// Pearson correlations computed exactly from the support.
    ///
    /// Moments are normalized by the retained mass so that the matrix belongs
    /// to the measure actually sampled.
    pub fn correlation_matrix(&self) -> Result<ExtremeCorrelationMatrix> {
        let d = self.dimension();
        let total = self.total_mass();
        let mut mean = vec![0.0; d];
        for (s, &p) in self.support().zip(&self.probs) {
            for k in 0..d {
                mean[k] += s[k] as f64 * p;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        let mut cov = vec![0.0; d * d];
        for (s, &p) in self.support().zip(&self.probs) {
            for k in 0..d {
                let dk = s[k] as f64 - mean[k];
                for l in k..d {
                    cov[k * d + l] += dk * (s[l] as f64 - mean[l]) * p;
                }
            }
        }
        for k in 0..d {
            if cov[k * d + k] <= 0.0 {
                return Err(Error::ZeroVariance(k));
            }
        }
        let mut c = CorrelationMatrix::identity(d);
        for k in 0..d {
            for l in (k + 1)..d {
                let rho = cov[k * d + l] / (cov[k * d + k] * cov[l * d + l]).sqrt();
                c.set_pair(k, l, rho.clamp(-1.0, 1.0));
            }
        }
        Ok(c)
    }

    /// Position of the support point selected by `u` under inverse-CDF sampling.
    pub fn sample_index(&self, u: f64) -> usize {
        self.cum.partition_point(|&c| c <= u).min(self.len() - 1)
    }

    /// Inverse-CDF draw along the monotone support; `u` past the retained mass
    /// maps to the last support point.
    pub fn sample(&self, u: f64) -> &[u32] {
        self.support_point(self.sample_index(u))
    }

    /// Replaces the atom masses with a distorted, renormalized copy. The result
    /// no longer has the construction marginals; used as a negative control.
    #[doc(hidden)]
    pub fn corrupt_masses(&mut self) {
        let total = self.total_mass();
        for (i, p) in self.probs.iter_mut().enumerate() {
            *p *= if i % 2 == 0 { 1.6 } else { 0.4 };
        }
        let new_total: f64 = self.probs.iter().sum();
        self.probs.iter_mut().for_each(|p| *p *= total / new_total);
        let mut acc = NeumaierSum::default();
        self.cum = self
            .probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
    }
}
