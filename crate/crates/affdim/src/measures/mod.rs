//! Finite atomic measures on R^d and the operations the entropy machinery
//! needs: projections, sum-convolutions, partition components, lattice
//! quantization, anisotropic rescaling, moments, and comparison against a
//! Gaussian.
//!
//! Everything here is exact on atoms: a measure is a finite list of weighted
//! points, canonicalized on construction (sorted, exact duplicates merged,
//! `-0.0` normalized) so that equal measures have equal representations and
//! all downstream accumulation runs in one deterministic order. Continuous
//! measures enter only through their finite approximations built elsewhere;
//! every identity the tests assert is exact on atomic measures, which is the
//! point of keeping the type this small.

mod entropy;
mod gaussian;
mod partition;

pub use entropy::{
    cond_entropy, cond_entropy_partition, cond_entropy_with_projection, entropy,
    entropy_partition, multiscale_average,
};
pub(crate) use entropy::shannon_bits;
pub use gaussian::{gaussian_cdf, kolmogorov_distance, levy_distance, GaussianSpec};
pub use partition::{cell_of, CellIndex, Partition, PartitionSpec, MAX_DYADIC_LEVEL};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a measure: sums must land within this of 1.
pub const MASS_SUM_TOL: f64 = 1e-9;

/// One weighted point of a [`DiscreteMeasure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

/// A finite atomic probability measure on R^d.
///
/// Construction canonicalizes: points are sorted lexicographically, exact
/// duplicates are merged by adding masses, and `-0.0` coordinates become
/// `+0.0`. Masses must be positive and sum to 1 within [`MASS_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    d: usize,
    atoms: Vec<Atom>,
}

fn cmp_points(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

impl DiscreteMeasure {
    pub fn new(d: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("measures need dimension at least 1".into()));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidInput("a measure needs at least one atom".into()));
        }
        let mut cleaned = Vec::with_capacity(atoms.len());
        for (mut point, mass) in atoms {
            if point.len() != d {
                return Err(Error::InvalidInput(format!(
                    "atom has {} coordinates, measure is {d}-dimensional",
                    point.len()
                )));
            }
            if !mass.is_finite() || mass <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom masses must be positive and finite, got {mass}"
                )));
            }
            for c in point.iter_mut() {
                if !c.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "atom coordinates must be finite, got {c}"
                    )));
                }
                if *c == 0.0 {
                    *c = 0.0; // collapse -0.0 and +0.0 to one key
                }
            }
            cleaned.push(Atom { point, mass });
        }
        cleaned.sort_unstable_by(|a, b| cmp_points(&a.point, &b.point));
        let mut merged: Vec<Atom> = Vec::with_capacity(cleaned.len());
        for atom in cleaned {
            match merged.last_mut() {
                Some(last) if last.point == atom.point => last.mass += atom.mass,
                _ => merged.push(atom),
            }
        }
        let total: f64 = merged.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "atom masses must sum to 1 within {MASS_SUM_TOL}, got {total}"
            )));
        }
        Ok(DiscreteMeasure { d, atoms: merged })
    }

    /// The unit mass at one point.
    pub fn point_mass(point: Vec<f64>) -> Result<Self> {
        let d = point.len();
        DiscreteMeasure::new(d, vec![(point, 1.0)])
    }

    /// Equal masses on the given points (duplicates merge).
    pub fn uniform_on(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("a measure needs at least one atom".into()));
        }
        let d = points[0].len();
        let mass = 1.0 / points.len() as f64;
        DiscreteMeasure::new(d, points.into_iter().map(|p| (p, mass)).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Push-forward under the coordinate projection: coordinates outside
    /// `coords` are zeroed (the empty set gives the point mass at the
    /// origin), and coinciding images merge.
    pub fn project(&self, coords: &[usize]) -> Result<DiscreteMeasure> {
        let mut keep = vec![false; self.d];
        for &j in coords {
            if j >= self.d {
                return Err(Error::InvalidInput(format!(
                    "projection coordinate {j} out of range for d = {}",
                    self.d
                )));
            }
            keep[j] = true;
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let point = a
                    .point
                    .iter()
                    .zip(&keep)
                    .map(|(&x, &k)| if k { x } else { 0.0 })
                    .collect();
                (point, a.mass)
            })
            .collect();
        DiscreteMeasure::new(self.d, atoms)
    }

    /// Sum-convolution: atoms at `x + y` with mass products. The budget
    /// bounds the atom-count product before merging.
    pub fn convolve(&self, other: &DiscreteMeasure, budget: u64) -> Result<DiscreteMeasure> {
        if self.d != other.d {
            return Err(Error::InvalidInput(format!(
                "cannot convolve measures of dimension {} and {}",
                self.d, other.d
            )));
        }
        let pairs = (self.atoms.len() as u128) * (other.atoms.len() as u128);
        if pairs > budget as u128 {
            return Err(Error::BudgetExceeded(format!(
                "convolution of {} x {} atoms exceeds budget {budget}",
                self.atoms.len(),
                other.atoms.len()
            )));
        }
        let mut atoms = Vec::with_capacity(pairs as usize);
        for a in &self.atoms {
            for b in &other.atoms {
                let point = a.point.iter().zip(&b.point).map(|(&x, &y)| x + y).collect();
                atoms.push((point, a.mass * b.mass));
            }
        }
        DiscreteMeasure::new(self.d, atoms)
    }

    /// `k`-fold sum-convolution of the measure with itself (`k = 1` is the
    /// measure). Each fold is budget-checked like [`DiscreteMeasure::convolve`].
    pub fn self_convolve(&self, k: usize, budget: u64) -> Result<DiscreteMeasure> {
        if k == 0 {
            return Err(Error::InvalidInput("self-convolution needs k >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.convolve(self, budget)?;
        }
        Ok(acc)
    }

    /// Self-convolution with the base measure first snapped to the dyadic
    /// lattice of `spec`. Sums of lattice points stay on the lattice, so
    /// intermediate results merge and the atom count stays bounded by the
    /// occupied-cell count instead of growing like `atoms^k`.
    pub fn self_convolve_quantized(
        &self,
        k: usize,
        spec: &PartitionSpec,
        budget: u64,
    ) -> Result<DiscreteMeasure> {
        self.lattice_quantize(spec)?.self_convolve(k, budget)
    }

    /// Moves every atom to the lattice point of its cell (the left endpoint
    /// `(⌊x_j·2^{m_j}⌋/2^{m_j})_j`), aggregating masses. Entropy against the
    /// same spec is unchanged, since cells are preserved.
    pub fn lattice_quantize(&self, spec: &PartitionSpec) -> Result<DiscreteMeasure> {
        if spec.d() != self.d {
            return Err(Error::InvalidInput(format!(
                "partition dimension {} does not match measure dimension {}",
                spec.d(),
                self.d
            )));
        }
        let levels = spec.levels();
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let cell = cell_of(&a.point, spec)?;
            let point = cell
                .indices
                .iter()
                .zip(&levels)
                .map(|(&k, &m)| k as f64 * (-m as f64).exp2())
                .collect();
            atoms.push((point, a.mass));
        }
        DiscreteMeasure::new(self.d, atoms)
    }

    /// Push-forward under the anisotropic dilation that multiplies
    /// coordinate `j` by `2^{t·chi_j}`. At integer dyadic scalings this is
    /// exact and shifts partition levels: the cell of the rescaled point at
    /// level `n` is the cell of the original at level `n + t`.
    pub fn rescale(&self, t: f64, chi: &[f64]) -> Result<DiscreteMeasure> {
        if chi.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "rate vector has {} entries, measure dimension is {}",
                chi.len(),
                self.d
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("rescale exponent must be finite, got {t}")));
        }
        let factors: Vec<f64> = chi.iter().map(|&r| (t * r).exp2()).collect();
        if let Some(&bad) = factors.iter().find(|f| !f.is_finite() || **f <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "rescale factor {bad} is not a positive finite number"
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let point = a.point.iter().zip(&factors).map(|(&x, &f)| x * f).collect();
                (point, a.mass)
            })
            .collect();
        DiscreteMeasure::new(self.d, atoms)
    }

    /// Splits the measure over the cells of `spec`: for each occupied cell,
    /// its index, its weight, and the normalized restriction. Cells come out
    /// in index order; weights sum to 1.
    pub fn components(&self, spec: &PartitionSpec) -> Result<Vec<(CellIndex, f64, DiscreteMeasure)>> {
        if spec.d() != self.d {
            return Err(Error::InvalidInput(format!(
                "partition dimension {} does not match measure dimension {}",
                spec.d(),
                self.d
            )));
        }
        let mut cells: BTreeMap<Vec<i64>, Vec<(Vec<f64>, f64)>> = BTreeMap::new();
        for a in &self.atoms {
            let cell = cell_of(&a.point, spec)?;
            cells
                .entry(cell.indices)
                .or_default()
                .push((a.point.clone(), a.mass));
        }
        let mut out = Vec::with_capacity(cells.len());
        for (indices, mut atoms) in cells {
            let weight: f64 = atoms.iter().map(|(_, m)| *m).sum();
            for (_, m) in atoms.iter_mut() {
                *m /= weight;
            }
            out.push((
                CellIndex { indices },
                weight,
                DiscreteMeasure::new(self.d, atoms)?,
            ));
        }
        Ok(out)
    }

    /// Mean and variance of a one-dimensional measure.
    pub fn mean_variance(&self) -> Result<(f64, f64)> {
        if self.d != 1 {
            return Err(Error::InvalidInput(format!(
                "moments are defined for one-dimensional measures, got d = {}",
                self.d
            )));
        }
        let mean: f64 = self.atoms.iter().map(|a| a.mass * a.point[0]).sum();
        let var: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * (a.point[0] - mean) * (a.point[0] - mean))
            .sum();
        Ok((mean, var))
    }
}

/// Checks that every atom of `m` sits exactly on the dyadic lattice of
/// `levels` and returns the measure in integer lattice coordinates.
fn to_lattice(m: &DiscreteMeasure, levels: &[i64]) -> Result<BTreeMap<Vec<i128>, f64>> {
    let mut out: BTreeMap<Vec<i128>, f64> = BTreeMap::new();
    for a in &m.atoms {
        let mut key = Vec::with_capacity(levels.len());
        for (&x, &lvl) in a.point.iter().zip(levels) {
            let scaled = x * (lvl as f64).exp2();
            if scaled.fract() != 0.0 || scaled.abs() >= 4.0e18 {
                return Err(Error::NotOnLattice(format!(
                    "coordinate {x} is not a generation-{lvl} dyadic point; quantize first"
                )));
            }
            key.push(scaled as i128);
        }
        *out.entry(key).or_insert(0.0) += a.mass;
    }
    Ok(out)
}

/// Convolution of two integer-lattice measures; the group operation is exact
/// integer addition, so merging never depends on float rounding.
fn convolve_lattice(
    a: &BTreeMap<Vec<i128>, f64>,
    b: &BTreeMap<Vec<i128>, f64>,
    budget: u64,
) -> Result<BTreeMap<Vec<i128>, f64>> {
    let pairs = (a.len() as u128) * (b.len() as u128);
    if pairs > budget as u128 {
        return Err(Error::BudgetExceeded(format!(
            "lattice convolution of {} x {} atoms exceeds budget {budget}",
            a.len(),
            b.len()
        )));
    }
    let mut out: BTreeMap<Vec<i128>, f64> = BTreeMap::new();
    for (x, p) in a {
        for (y, q) in b {
            let key: Vec<i128> = x.iter().zip(y).map(|(u, v)| u + v).collect();
            *out.entry(key).or_insert(0.0) += p * q;
        }
    }
    Ok(out)
}

fn lattice_entropy(m: &BTreeMap<Vec<i128>, f64>) -> f64 {
    entropy::shannon_bits(m.values().copied())
}

/// Convolution-smoothing gap on the dyadic lattice of `spec`:
/// `k·(H(θ*σ) − H(σ)) − (H(θ^{*k}*σ) − H(σ))`, all entropies taken atom by
/// atom on the lattice.
///
/// On an abelian group the k-fold smoothing gain is at most k times the
/// single-step gain (the Kaimanovich–Vershik inequality), so the returned gap
/// is nonnegative up to float accumulation; callers assert `≥ -1e-9`. Both
/// measures must already sit on the lattice — quantize first — because the
/// inequality is a group statement and silently snapping points would change
/// the measures being compared.
pub fn kv_gap(
    theta: &DiscreteMeasure,
    sigma: &DiscreteMeasure,
    k: usize,
    spec: &PartitionSpec,
    budget: u64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("the smoothing gap needs k >= 1".into()));
    }
    if theta.d() != sigma.d() || spec.d() != theta.d() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: theta is {}-d, sigma {}-d, partition {}-d",
            theta.d(),
            sigma.d(),
            spec.d()
        )));
    }
    let levels = spec.levels();
    let theta_lat = to_lattice(theta, &levels)?;
    let sigma_lat = to_lattice(sigma, &levels)?;

    let h_sigma = lattice_entropy(&sigma_lat);
    let smoothed = convolve_lattice(&theta_lat, &sigma_lat, budget)?;
    let h_once = lattice_entropy(&smoothed);

    let mut theta_k = theta_lat.clone();
    for _ in 1..k {
        theta_k = convolve_lattice(&theta_k, &theta_lat, budget)?;
    }
    let h_k = lattice_entropy(&convolve_lattice(&theta_k, &sigma_lat, budget)?);

    Ok(k as f64 * (h_once - h_sigma) - (h_k - h_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms_of(m: &DiscreteMeasure) -> Vec<(Vec<f64>, f64)> {
        m.atoms().iter().map(|a| (a.point.clone(), a.mass)).collect()
    }

    #[test]
    fn construction_sorts_merges_and_normalizes_signed_zero() {
        let m = DiscreteMeasure::new(
            1,
            vec![(vec![0.5], 0.25), (vec![-0.0], 0.5), (vec![0.5], 0.25)],
        )
        .unwrap();
        assert_eq!(atoms_of(&m), vec![(vec![0.0], 0.5), (vec![0.5], 0.5)]);
        assert!(m.atoms()[0].point[0].is_sign_positive());
    }

    #[test]
    fn construction_rejects_bad_atoms() {
        assert!(DiscreteMeasure::new(1, vec![]).is_err());
        assert!(DiscreteMeasure::new(0, vec![(vec![], 1.0)]).is_err());
        assert!(DiscreteMeasure::new(1, vec![(vec![0.0, 1.0], 1.0)]).is_err());
        assert!(DiscreteMeasure::new(1, vec![(vec![0.0], -1.0)]).is_err());
        assert!(DiscreteMeasure::new(1, vec![(vec![0.0], 0.0)]).is_err());
        assert!(DiscreteMeasure::new(1, vec![(vec![f64::NAN], 1.0)]).is_err());
        assert!(DiscreteMeasure::new(1, vec![(vec![0.0], 0.9)]).is_err());
    }

    #[test]
    fn projection_zeroes_dropped_coordinates() {
        let m = DiscreteMeasure::new(2, vec![(vec![1.0, 2.0], 0.5), (vec![1.0, 3.0], 0.5)])
            .unwrap();
        let full = m.project(&[0, 1]).unwrap();
        assert_eq!(atoms_of(&full), atoms_of(&m));
        let first = m.project(&[0]).unwrap();
        assert_eq!(atoms_of(&first), vec![(vec![1.0, 0.0], 1.0)]);
        let none = m.project(&[]).unwrap();
        assert_eq!(atoms_of(&none), vec![(vec![0.0, 0.0], 1.0)]);
        assert!(m.project(&[2]).is_err());
    }

    #[test]
    fn convolution_of_point_masses_translates() {
        let a = DiscreteMeasure::point_mass(vec![1.0, -2.0]).unwrap();
        let b = DiscreteMeasure::point_mass(vec![0.25, 0.5]).unwrap();
        let c = a.convolve(&b, 100).unwrap();
        assert_eq!(atoms_of(&c), vec![(vec![1.25, -1.5], 1.0)]);
    }

    #[test]
    fn self_convolution_builds_binomials() {
        let coin = DiscreteMeasure::uniform_on(vec![vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(atoms_of(&coin.self_convolve(1, 100).unwrap()), atoms_of(&coin));
        let two = coin.self_convolve(2, 100).unwrap();
        assert_eq!(
            atoms_of(&two),
            vec![(vec![-2.0], 0.25), (vec![0.0], 0.5), (vec![2.0], 0.25)]
        );
        assert!(coin.self_convolve(0, 100).is_err());
    }

    #[test]
    fn point_mass_at_origin_is_the_convolution_identity() {
        let m = DiscreteMeasure::new(1, vec![(vec![0.25], 0.75), (vec![-1.5], 0.25)]).unwrap();
        let delta = DiscreteMeasure::point_mass(vec![0.0]).unwrap();
        assert_eq!(atoms_of(&m.convolve(&delta, 100).unwrap()), atoms_of(&m));
    }

    #[test]
    fn convolution_is_commutative_and_associative_on_dyadic_data() {
        let a = DiscreteMeasure::uniform_on(vec![vec![0.0], vec![1.0]]).unwrap();
        let b = DiscreteMeasure::uniform_on(vec![vec![0.0], vec![0.5]]).unwrap();
        let c = DiscreteMeasure::uniform_on(vec![vec![-1.0], vec![0.25]]).unwrap();
        assert_eq!(
            atoms_of(&a.convolve(&b, 100).unwrap()),
            atoms_of(&b.convolve(&a, 100).unwrap())
        );
        let left = a.convolve(&b, 100).unwrap().convolve(&c, 100).unwrap();
        let right = a.convolve(&b.convolve(&c, 100).unwrap(), 100).unwrap();
        assert_eq!(atoms_of(&left), atoms_of(&right));
    }

    #[test]
    fn convolution_budget_is_enforced() {
        let a = DiscreteMeasure::uniform_on(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            a.convolve(&a, 8),
            Err(crate::error::Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn lattice_quantize_snaps_to_cell_left_endpoints() {
        let spec = PartitionSpec::new(vec![1.0], 1).unwrap();
        let m = DiscreteMeasure::new(1, vec![(vec![0.3], 0.5), (vec![0.4], 0.5)]).unwrap();
        let q = m.lattice_quantize(&spec).unwrap();
        assert_eq!(atoms_of(&q), vec![(vec![0.0], 1.0)]);
        // Cells are preserved, so entropy against the same spec is unchanged.
        assert_eq!(entropy(&m, &spec).unwrap(), entropy(&q, &spec).unwrap());
        // A point already on the lattice stays put.
        let on = DiscreteMeasure::point_mass(vec![-0.5]).unwrap();
        assert_eq!(atoms_of(&on.lattice_quantize(&spec).unwrap()), atoms_of(&on));
    }

    #[test]
    fn components_split_and_recombine() {
        let spec = PartitionSpec::new(vec![1.0], 1).unwrap();
        let single = DiscreteMeasure::point_mass(vec![0.3]).unwrap();
        let comps = single.components(&spec).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].1, 1.0);

        let m = DiscreteMeasure::uniform_on(vec![vec![0.1], vec![0.2], vec![0.6], vec![0.7]])
            .unwrap();
        let comps = m.components(&spec).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].0.indices, vec![0]);
        assert_eq!(comps[1].0.indices, vec![1]);
        assert_eq!(comps[0].1, 0.5);
        assert_eq!(comps[1].1, 0.5);

        // Expectation identity: sum of weight * component entropy at a finer
        // spec is the conditional entropy.
        let fine = PartitionSpec::new(vec![1.0], 4).unwrap();
        let expected: f64 = comps
            .iter()
            .map(|(_, w, comp)| w * entropy(comp, &fine).unwrap())
            .sum();
        let direct = cond_entropy(&m, &fine, &spec).unwrap();
        assert!((expected - direct).abs() <= 1e-12);
    }

    #[test]
    fn smoothing_gap_is_zero_for_one_step_and_for_point_masses() {
        let spec = PartitionSpec::new(vec![1.0], 4).unwrap();
        let theta =
            DiscreteMeasure::uniform_on(vec![vec![0.0], vec![0.0625]]).unwrap();
        let sigma = DiscreteMeasure::point_mass(vec![0.0]).unwrap();
        assert_eq!(kv_gap(&theta, &sigma, 1, &spec, 1_000).unwrap(), 0.0);
        let delta = DiscreteMeasure::point_mass(vec![0.5]).unwrap();
        assert_eq!(kv_gap(&delta, &sigma, 3, &spec, 1_000).unwrap(), 0.0);
    }

    #[test]
    fn smoothing_gap_matches_the_binomial_hand_count() {
        // theta^{*3} has masses (1/8, 3/8, 3/8, 1/8): H = 1.811278124459133,
        // so the gap is 3·1 − H.
        let spec = PartitionSpec::new(vec![1.0], 4).unwrap();
        let theta = DiscreteMeasure::uniform_on(vec![vec![0.0], vec![0.0625]]).unwrap();
        let sigma = DiscreteMeasure::point_mass(vec![0.0]).unwrap();
        let gap = kv_gap(&theta, &sigma, 3, &spec, 1_000).unwrap();
        assert!((gap - 1.188721875540867).abs() <= 1e-12);
    }

    #[test]
    fn smoothing_gap_rejects_off_lattice_points() {
        let spec = PartitionSpec::new(vec![1.0], 1).unwrap();
        let theta = DiscreteMeasure::point_mass(vec![0.3]).unwrap();
        let sigma = DiscreteMeasure::point_mass(vec![0.0]).unwrap();
        assert!(matches!(
            kv_gap(&theta, &sigma, 2, &spec, 1_000),
            Err(crate::error::Error::NotOnLattice(_))
        ));
    }

    #[test]
    fn moments_match_hand_values_and_add_under_convolution() {
        let delta = DiscreteMeasure::point_mass(vec![2.5]).unwrap();
        assert_eq!(delta.mean_variance().unwrap(), (2.5, 0.0));
        let coin = DiscreteMeasure::uniform_on(vec![vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(coin.mean_variance().unwrap(), (0.0, 1.0));
        let shifted = DiscreteMeasure::uniform_on(vec![vec![0.0], vec![2.0]]).unwrap();
        let sum = coin.convolve(&shifted, 100).unwrap();
        let (mean, var) = sum.mean_variance().unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(var, 2.0);
        let planar = DiscreteMeasure::point_mass(vec![0.0, 0.0]).unwrap();
        assert!(planar.mean_variance().is_err());
    }

    #[test]
    fn rescale_shifts_dyadic_partition_levels() {
        let m = DiscreteMeasure::new(1, vec![(vec![0.3], 0.5), (vec![0.7], 0.5)]).unwrap();
        assert_eq!(atoms_of(&m.rescale(0.0, &[1.0]).unwrap()), atoms_of(&m));
        let doubled = m.rescale(1.0, &[1.0]).unwrap();
        for n in 0..4 {
            let here = PartitionSpec::new(vec![1.0], n).unwrap();
            let finer = PartitionSpec::new(vec![1.0], n + 1).unwrap();
            assert_eq!(
                entropy(&doubled, &here).unwrap(),
                entropy(&m, &finer).unwrap()
            );
        }
    }

    #[test]
    fn quantized_self_convolution_stays_on_the_lattice() {
        let spec = PartitionSpec::new(vec![1.0], 2).unwrap();
        let m = DiscreteMeasure::new(1, vec![(vec![0.1], 0.5), (vec![0.35], 0.5)]).unwrap();
        let q = m.self_convolve_quantized(3, &spec, 1_000).unwrap();
        // Base snaps to {0, 0.25}; the 3-fold sum is binomial on {0,...,0.75}.
        assert_eq!(
            atoms_of(&q),
            vec![
                (vec![0.0], 0.125),
                (vec![0.25], 0.375),
                (vec![0.5], 0.375),
                (vec![0.75], 0.125),
            ]
        );
    }
}
