//! Non-conformal dyadic partitions of R^d.
//!
//! The level-`n` partition attached to a positive rate vector `chi` cuts
//! coordinate `j` into half-open dyadic intervals of generation
//! `⌊chi_j · n⌋`: coordinates with larger rates refine faster, which is what
//! makes the partition track an anisotropic contraction. All cells are
//! anchored at 0 and half-open, `[k/2^m, (k+1)/2^m)`, with floor semantics
//! for negative coordinates.
//!
//! [`Partition`] is the closure of these product partitions under joins and
//! coordinate-subset pull-backs: every partition in that family is again a
//! product of per-coordinate dyadic partitions, with some coordinates
//! possibly untracked, so a canonical form is just "an optional generation
//! per coordinate". Joins become an elementwise maximum and never need
//! explicit cell intersection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest per-coordinate dyadic generation (in absolute value) a partition
/// may use; keeps `2^m` finite and normal in f64 arithmetic.
pub const MAX_DYADIC_LEVEL: i64 = 900;

/// A rate vector together with an integer level: coordinate `j` is cut at
/// dyadic generation `⌊chi_j · n⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    chi: Vec<f64>,
    n: i64,
}

impl PartitionSpec {
    pub fn new(chi: Vec<f64>, n: i64) -> Result<Self> {
        if chi.is_empty() {
            return Err(Error::InvalidInput("a partition needs at least one rate".into()));
        }
        if let Some(&bad) = chi.iter().find(|r| !r.is_finite() || **r <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "partition rates must be positive and finite, got {bad}"
            )));
        }
        let spec = PartitionSpec { chi, n };
        if let Some(&m) = spec.levels().iter().find(|m| m.abs() > MAX_DYADIC_LEVEL) {
            return Err(Error::InvalidInput(format!(
                "dyadic generation {m} exceeds the supported range ±{MAX_DYADIC_LEVEL}"
            )));
        }
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.chi.len()
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    /// Per-coordinate dyadic generations `⌊chi_j · n⌋`.
    pub fn levels(&self) -> Vec<i64> {
        self.chi
            .iter()
            .map(|&r| (r * self.n as f64).floor() as i64)
            .collect()
    }

    /// The spec as a general [`Partition`] tracking every coordinate.
    pub fn partition(&self) -> Partition {
        Partition {
            levels: self.levels().into_iter().map(Some).collect(),
        }
    }

    /// Pull-back through the coordinate projection keeping `coords`: the
    /// partition that only sees the listed coordinates, at this spec's
    /// generations.
    pub fn pullback(&self, coords: &[usize]) -> Result<Partition> {
        let mut levels = vec![None; self.d()];
        let spec_levels = self.levels();
        for &j in coords {
            if j >= self.d() {
                return Err(Error::InvalidInput(format!(
                    "pullback coordinate {j} out of range for d = {}",
                    self.d()
                )));
            }
            levels[j] = Some(spec_levels[j]);
        }
        Ok(Partition { levels })
    }
}

/// Index of one cell of a full-dimensional partition: coordinate `j` lies in
/// `[k_j/2^{m_j}, (k_j+1)/2^{m_j})`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub indices: Vec<i64>,
}

/// Index `⌊x · 2^m⌋` of the generation-`m` dyadic interval containing `x`.
/// Multiplying by a power of two is exact in f64, so the floor is the true
/// integer part of the scaled coordinate.
pub(crate) fn dyadic_index(x: f64, m: i64) -> Result<i64> {
    let scaled = x * (m as f64).exp2();
    if !scaled.is_finite() || scaled.abs() >= 4.0e18 {
        return Err(Error::InvalidInput(format!(
            "coordinate {x} at generation {m} leaves the representable index range"
        )));
    }
    Ok(scaled.floor() as i64)
}

/// Cell of the level-`spec.n` partition containing `x`.
pub fn cell_of(x: &[f64], spec: &PartitionSpec) -> Result<CellIndex> {
    if x.len() != spec.d() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, partition expects {}",
            x.len(),
            spec.d()
        )));
    }
    let indices = x
        .iter()
        .zip(spec.levels())
        .map(|(&xj, m)| dyadic_index(xj, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellIndex { indices })
}

/// A product dyadic partition in canonical form: an optional generation per
/// coordinate, `None` meaning the partition does not separate points along
/// that coordinate. Closed under [`Partition::join`] by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    levels: Vec<Option<i64>>,
}

impl Partition {
    /// The partition that separates nothing: a single cell.
    pub fn trivial(d: usize) -> Self {
        Partition { levels: vec![None; d] }
    }

    pub fn d(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Option<i64>] {
        &self.levels
    }

    /// Common refinement. Dyadic partitions of a line are nested, so the join
    /// is the elementwise finer (larger) generation.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        if self.d() != other.d() {
            return Err(Error::InvalidInput(format!(
                "cannot join partitions of dimension {} and {}",
                self.d(),
                other.d()
            )));
        }
        Ok(Partition {
            levels: self
                .levels
                .iter()
                .zip(&other.levels)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        })
    }

    /// Key identifying the cell of `x`: per-coordinate dyadic indices, `None`
    /// along untracked coordinates. Two points share a cell exactly when
    /// their keys are equal.
    pub fn key(&self, x: &[f64]) -> Result<Vec<Option<i64>>> {
        if x.len() != self.d() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, partition expects {}",
                x.len(),
                self.d()
            )));
        }
        x.iter()
            .zip(&self.levels)
            .map(|(&xj, &m)| match m {
                Some(m) => dyadic_index(xj, m).map(Some),
                None => Ok(None),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_sits_in_the_zero_cell() {
        let spec = PartitionSpec::new(vec![1.0, 2.0, 0.5], 7).unwrap();
        assert_eq!(
            cell_of(&[0.0, 0.0, 0.0], &spec).unwrap().indices,
            vec![0, 0, 0]
        );
    }

    #[test]
    fn rates_scale_the_generation_per_coordinate() {
        let spec = PartitionSpec::new(vec![1.0, 2.0], 1).unwrap();
        assert_eq!(spec.levels(), vec![1, 2]);
        assert_eq!(cell_of(&[0.3, 0.3], &spec).unwrap().indices, vec![0, 1]);
    }

    #[test]
    fn negative_coordinates_use_floor_semantics() {
        let spec = PartitionSpec::new(vec![1.0], 3).unwrap();
        assert_eq!(cell_of(&[-0.3], &spec).unwrap().indices, vec![-3]);
    }

    #[test]
    fn negative_levels_make_coarse_cells() {
        let spec = PartitionSpec::new(vec![1.0], -2).unwrap();
        assert_eq!(spec.levels(), vec![-2]);
        assert_eq!(cell_of(&[3.9], &spec).unwrap().indices, vec![0]);
        assert_eq!(cell_of(&[4.0], &spec).unwrap().indices, vec![1]);
    }

    #[test]
    fn join_takes_the_finer_generation() {
        let a = PartitionSpec::new(vec![1.0, 1.0], 2).unwrap();
        let joined = a
            .partition()
            .join(&a.pullback(&[1]).unwrap())
            .unwrap();
        assert_eq!(joined.levels(), &[Some(2), Some(2)]);
        let b = PartitionSpec::new(vec![1.0, 3.0], 1).unwrap();
        let joined = a.partition().join(&b.partition()).unwrap();
        assert_eq!(joined.levels(), &[Some(2), Some(3)]);
    }

    #[test]
    fn pullback_tracks_only_the_kept_coordinates() {
        let spec = PartitionSpec::new(vec![1.0, 1.0], 4).unwrap();
        let pulled = spec.pullback(&[0]).unwrap();
        // Same first coordinate, wildly different second: same cell.
        assert_eq!(
            pulled.key(&[0.2, -5.0]).unwrap(),
            pulled.key(&[0.2, 9.0]).unwrap()
        );
        assert_ne!(
            pulled.key(&[0.2, 0.0]).unwrap(),
            pulled.key(&[0.3, 0.0]).unwrap()
        );
    }

    #[test]
    fn trivial_partition_never_separates() {
        let t = Partition::trivial(2);
        assert_eq!(t.key(&[1.0, 2.0]).unwrap(), t.key(&[-3.0, 4.5]).unwrap());
    }

    #[test]
    fn constructors_reject_bad_inputs() {
        assert!(PartitionSpec::new(vec![], 1).is_err());
        assert!(PartitionSpec::new(vec![0.0], 1).is_err());
        assert!(PartitionSpec::new(vec![-1.0], 1).is_err());
        assert!(PartitionSpec::new(vec![f64::NAN], 1).is_err());
        assert!(PartitionSpec::new(vec![2.0], 1_000).is_err());
        let spec = PartitionSpec::new(vec![1.0], 1).unwrap();
        assert!(cell_of(&[0.1, 0.2], &spec).is_err());
        assert!(spec.pullback(&[1]).is_err());
        let a = Partition::trivial(1);
        let b = Partition::trivial(2);
        assert!(a.join(&b).is_err());
    }
}
