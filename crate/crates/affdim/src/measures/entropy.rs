//! Shannon entropies (base 2) of atomic measures against product dyadic
//! partitions, plain and conditional, plus the multiscale component average
//! that links global entropy to component entropies.
//!
//! Conditional entropy is computed by the component formula — weight times
//! entropy of the normalized restriction, summed over conditioning cells — so
//! the chain rule `H(D|E) = H(D∨E) − H(E)` is something the tests can check
//! across two genuinely different code paths.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measures::partition::{Partition, PartitionSpec};
use crate::measures::DiscreteMeasure;

/// Cell label of a (possibly pulled-back) partition: one dyadic index per
/// refined coordinate, `None` where the partition does not refine.
type CellKey = Vec<Option<i64>>;

/// `-Σ p·log2(p)` over the given masses; zero-mass entries contribute 0.
pub(crate) fn shannon_bits<I: IntoIterator<Item = f64>>(masses: I) -> f64 {
    let mut h = 0.0;
    for p in masses {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Entropy of the cell masses of `m` under a general partition.
pub fn entropy_partition(m: &DiscreteMeasure, part: &Partition) -> Result<f64> {
    let mut cells: BTreeMap<CellKey, f64> = BTreeMap::new();
    for a in m.atoms() {
        *cells.entry(part.key(&a.point)?).or_insert(0.0) += a.mass;
    }
    Ok(shannon_bits(cells.into_values()))
}

/// Entropy of the cell masses of `m` under the level-`spec.n` partition.
/// Always at most `log2` of the occupied-cell count, zero for a point mass.
pub fn entropy(m: &DiscreteMeasure, spec: &PartitionSpec) -> Result<f64> {
    entropy_partition(m, &spec.partition())
}

/// Conditional entropy `H(m, fine | cond)` for general partitions: the
/// cond-cell-weighted average of the entropies of the normalized
/// restrictions.
pub fn cond_entropy_partition(
    m: &DiscreteMeasure,
    fine: &Partition,
    cond: &Partition,
) -> Result<f64> {
    let mut groups: BTreeMap<CellKey, BTreeMap<CellKey, f64>> = BTreeMap::new();
    for a in m.atoms() {
        let ck = cond.key(&a.point)?;
        let fk = fine.key(&a.point)?;
        *groups.entry(ck).or_default().entry(fk).or_insert(0.0) += a.mass;
    }
    let mut h = 0.0;
    for inner in groups.values() {
        let w: f64 = inner.values().sum();
        if w > 0.0 {
            h += w * shannon_bits(inner.values().map(|&p| p / w));
        }
    }
    Ok(h)
}

/// Conditional entropy between two dyadic levels. The formula applies to any
/// pair of specs; with equal rate vectors and `fine.n >= coarse.n` the
/// partitions are nested and this is the usual refinement entropy.
pub fn cond_entropy(
    m: &DiscreteMeasure,
    fine: &PartitionSpec,
    coarse: &PartitionSpec,
) -> Result<f64> {
    cond_entropy_partition(m, &fine.partition(), &coarse.partition())
}

/// Conditional entropy of the level-`q + mstep` partition given the level-`q`
/// partition joined with the pull-back, through the projection that drops
/// coordinate `j`, of the level-`q + mstep` partition.
///
/// In words: how much of the refinement from level `q` to `q + mstep` is
/// still unresolved once every *other* coordinate is known at the fine level.
/// Returned in bits, not divided by `mstep`.
pub fn cond_entropy_with_projection(
    m: &DiscreteMeasure,
    j: usize,
    q: i64,
    mstep: i64,
    chi: &[f64],
) -> Result<f64> {
    let d = m.d();
    if j >= d {
        return Err(Error::InvalidInput(format!(
            "slice coordinate {j} out of range for d = {d}"
        )));
    }
    if mstep <= 0 {
        return Err(Error::InvalidInput(format!(
            "slice step must be positive, got {mstep}"
        )));
    }
    let fine = PartitionSpec::new(chi.to_vec(), q + mstep)?;
    let coarse = PartitionSpec::new(chi.to_vec(), q)?;
    let others: Vec<usize> = (0..d).filter(|&c| c != j).collect();
    let cond = coarse.partition().join(&fine.pullback(&others)?)?;
    cond_entropy_partition(m, &fine.partition(), &cond)
}

/// Average per-step component entropy
/// `(1/n) Σ_{i=1..n} (1/mstep) H(m, E_{i+mstep} | E_i)`.
///
/// The expectation over level-`i` components of the component entropy at
/// level `i + mstep` is exactly the conditional entropy, so this needs one
/// conditional entropy per level. Callers compare it against the global rate
/// `(1/n) H(m, E_n)`; the two agree up to boundary terms of order
/// `(mstep + log R)/n` for supports of diameter `R`.
pub fn multiscale_average(
    m: &DiscreteMeasure,
    n: i64,
    mstep: i64,
    chi: &[f64],
) -> Result<f64> {
    if n <= 0 || mstep <= 0 {
        return Err(Error::InvalidInput(format!(
            "multiscale average needs positive n and mstep, got n = {n}, mstep = {mstep}"
        )));
    }
    let mut total = 0.0;
    for i in 1..=n {
        let fine = PartitionSpec::new(chi.to_vec(), i + mstep)?;
        let coarse = PartitionSpec::new(chi.to_vec(), i)?;
        total += cond_entropy(m, &fine, &coarse)? / mstep as f64;
    }
    Ok(total / n as f64)
}
