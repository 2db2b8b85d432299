//! Diagonal affine iterated function systems on R^d.
//!
//! A system is a finite indexed family of contracting affine maps whose
//! linear parts are diagonal: map `i` sends `x_j` to `r_{i,j}·x_j + a_{i,j}`
//! in every coordinate `j`, with `0 < |r_{i,j}| < 1`. Finite composition
//! words over the index set generate the semigroup of cylinder maps; the
//! attractor and the stationary measures of the weighted system live inside
//! the invariant [`DiagonalIFS::bounding_box`].
//!
//! Two arithmetic backends coexist and are never mixed within a call: plain
//! `f64`, always available, and exact rationals, available when the system
//! was constructed from rational coefficients (see [`DiagonalIFS::new_exact`]).
//! Exactness matters for overlap detection, where "two words compose to the
//! same map" is an equality of coefficients, not a tolerance check.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on bookkeeping enumerations (words, atom pairs) unless a caller
/// supplies its own budget. Chosen so desk-scale runs finish in seconds.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Absolute tolerance below which two floating-point offsets are treated as
/// equal by float-backend overlap detection and atom merging. Declared here
/// once so every consumer (separation scans, word-measure merging) agrees.
pub const FLOAT_COINCIDENCE_EPS: f64 = 1e-12;

/// Relative tolerance for the collinearity test in [`WeightedIFS::subgroup_times`].
pub const SUBGROUP_REL_TOL: f64 = 1e-9;

/// Nearest-f64 image of a rational, used wherever an exact-backend result is
/// reported through a float interface. `BigRational::to_f64` only fails on
/// magnitudes beyond f64 range, which no contracting system produces; map
/// that corner to infinity rather than panicking.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// A finite composition word: a sequence of map indices, possibly empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: &[u32]) -> Self {
        Word(letters.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    /// Concatenation `self · other` (self acts first in composition order).
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// True if `self` is a (strict or equal) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(empty)");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// One-dimensional affine map `t -> slope·t + offset`.
///
/// Constructed maps satisfy `0 < |slope| < 1`; compositions therefore do too.
/// The only unit-slope value in circulation is the identity produced by
/// composing the empty word.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap1 {
    pub slope: f64,
    pub offset: f64,
}

impl AffineMap1 {
    pub fn new(slope: f64, offset: f64) -> Result<Self> {
        if !slope.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidInput("map coefficients must be finite".into()));
        }
        if slope == 0.0 || slope.abs() >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "slope must satisfy 0 < |slope| < 1, got {slope}"
            )));
        }
        Ok(AffineMap1 { slope, offset })
    }

    pub fn identity() -> Self {
        AffineMap1 { slope: 1.0, offset: 0.0 }
    }

    pub fn apply(&self, t: f64) -> f64 {
        self.slope * t + self.offset
    }

    /// Composition `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &AffineMap1) -> AffineMap1 {
        AffineMap1 {
            slope: self.slope * other.slope,
            offset: self.slope * other.offset + self.offset,
        }
    }
}

/// Diagonal affine map on R^d: an independent [`AffineMap1`] per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMap {
    pub coords: Vec<AffineMap1>,
}

impl DiagonalMap {
    pub fn new(coords: Vec<AffineMap1>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("a diagonal map needs at least one coordinate".into()));
        }
        Ok(DiagonalMap { coords })
    }

    pub fn identity(d: usize) -> Self {
        DiagonalMap { coords: vec![AffineMap1::identity(); d] }
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.coords.len());
        self.coords.iter().zip(x).map(|(m, &t)| m.apply(t)).collect()
    }

    /// Composition `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &DiagonalMap) -> DiagonalMap {
        debug_assert_eq!(self.d(), other.d());
        DiagonalMap {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.compose(b))
                .collect(),
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.coords.iter().map(|m| m.slope).collect()
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.coords.iter().map(|m| m.offset).collect()
    }
}

/// Exact-rational counterpart of [`AffineMap1`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMap1 {
    pub slope: BigRational,
    pub offset: BigRational,
}

impl RationalMap1 {
    pub fn new(slope: BigRational, offset: BigRational) -> Result<Self> {
        if slope.is_zero() || slope.abs() >= BigRational::from_integer(1.into()) {
            return Err(Error::InvalidInput(format!(
                "rational slope must satisfy 0 < |slope| < 1, got {slope}"
            )));
        }
        Ok(RationalMap1 { slope, offset })
    }

    pub fn identity() -> Self {
        RationalMap1 {
            slope: BigRational::from_integer(1.into()),
            offset: BigRational::zero(),
        }
    }

    /// Composition `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &RationalMap1) -> RationalMap1 {
        RationalMap1 {
            slope: &self.slope * &other.slope,
            offset: &self.slope * &other.offset + &self.offset,
        }
    }

    pub fn to_float(&self) -> Result<AffineMap1> {
        let slope = self.slope.to_f64().ok_or_else(|| {
            Error::InvalidInput("rational slope does not fit in an f64".into())
        })?;
        let offset = self.offset.to_f64().ok_or_else(|| {
            Error::InvalidInput("rational offset does not fit in an f64".into())
        })?;
        AffineMap1::new(slope, offset)
    }
}

/// Exact-rational counterpart of [`DiagonalMap`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalDiagonalMap {
    pub coords: Vec<RationalMap1>,
}

impl RationalDiagonalMap {
    pub fn new(coords: Vec<RationalMap1>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("a diagonal map needs at least one coordinate".into()));
        }
        Ok(RationalDiagonalMap { coords })
    }

    pub fn identity(d: usize) -> Self {
        RationalDiagonalMap { coords: vec![RationalMap1::identity(); d] }
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    /// Composition `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &RationalDiagonalMap) -> RationalDiagonalMap {
        debug_assert_eq!(self.d(), other.d());
        RationalDiagonalMap {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.compose(b))
                .collect(),
        }
    }

    pub fn to_float(&self) -> Result<DiagonalMap> {
        let coords = self
            .coords
            .iter()
            .map(RationalMap1::to_float)
            .collect::<Result<Vec<_>>>()?;
        DiagonalMap::new(coords)
    }
}

/// A diagonal affine iterated function system: `d`, the ambient dimension,
/// and an indexed family of maps. At least one map is required (several
/// diagnostics are defined, trivially, for one-map systems); operations that
/// genuinely need two maps check for themselves.
#[derive(Clone, Debug)]
pub struct DiagonalIFS {
    d: usize,
    maps: Vec<DiagonalMap>,
    /// Parallel exact coefficients, present only when *every* coefficient was
    /// supplied as a rational. All-or-nothing, so a call sees one backend.
    exact: Option<Vec<RationalDiagonalMap>>,
}

impl DiagonalIFS {
    pub fn new(maps: Vec<DiagonalMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidInput("a system needs at least one map".into()));
        }
        let d = maps[0].d();
        for (i, m) in maps.iter().enumerate() {
            if m.d() != d {
                return Err(Error::InvalidInput(format!(
                    "map {i} has dimension {} but map 0 has dimension {d}",
                    m.d()
                )));
            }
            for (j, c) in m.coords.iter().enumerate() {
                if !c.slope.is_finite() || !c.offset.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "map {i} coordinate {j} has a non-finite coefficient"
                    )));
                }
                if c.slope == 0.0 || c.slope.abs() >= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "map {i} coordinate {j}: slope must satisfy 0 < |slope| < 1, got {}",
                        c.slope
                    )));
                }
            }
        }
        Ok(DiagonalIFS { d, maps, exact: None })
    }

    /// Build a system from exact rational coefficients. The float view is
    /// derived by rounding; the rationals are retained so overlap-sensitive
    /// operations can run exactly.
    pub fn new_exact(maps: Vec<RationalDiagonalMap>) -> Result<Self> {
        let float_maps = maps
            .iter()
            .map(RationalDiagonalMap::to_float)
            .collect::<Result<Vec<_>>>()?;
        let one = BigRational::from_integer(1.into());
        for (i, m) in maps.iter().enumerate() {
            for (j, c) in m.coords.iter().enumerate() {
                if c.slope.is_zero() || c.slope.abs() >= one {
                    return Err(Error::InvalidInput(format!(
                        "map {i} coordinate {j}: rational slope must satisfy 0 < |slope| < 1"
                    )));
                }
            }
        }
        let mut sys = DiagonalIFS::new(float_maps)?;
        sys.exact = Some(maps);
        Ok(sys)
    }

    /// The two-map family `x -> (r_1 x_1, …, r_d x_d) ± (1, …, 1)`.
    /// Map 0 carries offset +1 in every coordinate, map 1 offset −1.
    pub fn pm_one_family(rbar: &[f64]) -> Result<Self> {
        if rbar.is_empty() {
            return Err(Error::InvalidInput("need at least one contraction rate".into()));
        }
        let build = |sign: f64| -> Result<DiagonalMap> {
            DiagonalMap::new(
                rbar.iter()
                    .map(|&r| AffineMap1::new(r, sign))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        DiagonalIFS::new(vec![build(1.0)?, build(-1.0)?])
    }

    /// Exact-backend version of [`DiagonalIFS::pm_one_family`].
    pub fn pm_one_family_exact(rbar: &[BigRational]) -> Result<Self> {
        if rbar.is_empty() {
            return Err(Error::InvalidInput("need at least one contraction rate".into()));
        }
        let build = |sign: i64| -> Result<RationalDiagonalMap> {
            RationalDiagonalMap::new(
                rbar.iter()
                    .map(|r| RationalMap1::new(r.clone(), BigRational::from_integer(sign.into())))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        DiagonalIFS::new_exact(vec![build(1)?, build(-1)?])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of maps (the size of the index set).
    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[DiagonalMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &DiagonalMap {
        &self.maps[i]
    }

    /// Exact coefficients, if this system carries the rational backend.
    pub fn exact_maps(&self) -> Option<&[RationalDiagonalMap]> {
        self.exact.as_deref()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// A copy with the rational backend stripped, forcing float arithmetic.
    pub fn without_exact(&self) -> DiagonalIFS {
        DiagonalIFS { d: self.d, maps: self.maps.clone(), exact: None }
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        for &l in w.letters() {
            if l as usize >= self.maps.len() {
                return Err(Error::InvalidInput(format!(
                    "letter {l} out of range for a {}-map system",
                    self.maps.len()
                )));
            }
        }
        Ok(())
    }

    /// The cylinder map of a word: `φ_{i_1 … i_n} = φ_{i_1} ∘ … ∘ φ_{i_n}`,
    /// the empty word giving the identity. Left-to-right fold, so equal-word
    /// compositions are bit-identical.
    pub fn compose(&self, w: &Word) -> Result<DiagonalMap> {
        self.check_word(w)?;
        let mut acc = DiagonalMap::identity(self.d);
        for &l in w.letters() {
            acc = acc.compose(&self.maps[l as usize]);
        }
        Ok(acc)
    }

    /// Exact-backend composition; `None` when the system is float-only.
    pub fn compose_exact(&self, w: &Word) -> Result<Option<RationalDiagonalMap>> {
        self.check_word(w)?;
        let Some(exact) = &self.exact else { return Ok(None) };
        let mut acc = RationalDiagonalMap::identity(self.d);
        for &l in w.letters() {
            acc = acc.compose(&exact[l as usize]);
        }
        Ok(Some(acc))
    }

    /// The one-dimensional subsystem acting on coordinate `j`.
    pub fn coordinate_slice(&self, j: usize) -> Result<DiagonalIFS> {
        if j >= self.d {
            return Err(Error::InvalidInput(format!(
                "coordinate {j} out of range for dimension {}",
                self.d
            )));
        }
        match &self.exact {
            Some(exact) => DiagonalIFS::new_exact(
                exact
                    .iter()
                    .map(|m| RationalDiagonalMap::new(vec![m.coords[j].clone()]))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => DiagonalIFS::new(
                self.maps
                    .iter()
                    .map(|m| DiagonalMap::new(vec![m.coords[j]]))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }

    /// The invariant box `∏_j [−M_j, M_j]` with
    /// `M_j = max_i |a_{i,j}| / (1 − max_i |r_{i,j}|)`; every map sends the
    /// box into itself (checked here at the box corners).
    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        let box_: Vec<[f64; 2]> = (0..self.d)
            .map(|j| {
                let max_a = self
                    .maps
                    .iter()
                    .map(|m| m.coords[j].offset.abs())
                    .fold(0.0_f64, f64::max);
                let max_r = self
                    .maps
                    .iter()
                    .map(|m| m.coords[j].slope.abs())
                    .fold(0.0_f64, f64::max);
                let mj = max_a / (1.0 - max_r);
                [-mj, mj]
            })
            .collect();
        // Invariance check at corners; the slack absorbs float rounding in
        // the M_j formula itself.
        for m in &self.maps {
            for (j, b) in box_.iter().enumerate() {
                let mj = b[1];
                let slack = 1e-9 * (1.0 + mj);
                for corner in [-mj, mj] {
                    let image = m.coords[j].apply(corner);
                    assert!(
                        image >= -mj - slack && image <= mj + slack,
                        "bounding box not invariant in coordinate {j}"
                    );
                }
            }
        }
        box_
    }
}

/// A system together with a probability vector over its maps.
#[derive(Clone, Debug)]
pub struct WeightedIFS {
    ifs: DiagonalIFS,
    p: Vec<f64>,
}

/// Tolerance on `Σ p_i = 1` at construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightedIFS {
    pub fn new(ifs: DiagonalIFS, p: Vec<f64>) -> Result<Self> {
        if p.len() != ifs.map_count() {
            return Err(Error::InvalidInput(format!(
                "{} weights supplied for {} maps",
                p.len(),
                ifs.map_count()
            )));
        }
        if p.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        Ok(WeightedIFS { ifs, p })
    }

    pub fn uniform(ifs: DiagonalIFS) -> Self {
        let k = ifs.map_count();
        WeightedIFS { ifs, p: vec![1.0 / k as f64; k] }
    }

    pub fn ifs(&self) -> &DiagonalIFS {
        &self.ifs
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn d(&self) -> usize {
        self.ifs.d()
    }

    /// Lyapunov exponents in bits: `χ_j = −Σ_i p_i · log₂|r_{i,j}|`,
    /// in coordinate order (not sorted). All entries are positive.
    pub fn lyapunov_exponents(&self) -> Vec<f64> {
        (0..self.ifs.d())
            .map(|j| {
                -self
                    .ifs
                    .maps()
                    .iter()
                    .zip(&self.p)
                    .map(|(m, &pi)| {
                        if pi == 0.0 {
                            0.0
                        } else {
                            pi * m.coords[j].slope.abs().log2()
                        }
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    /// Shannon entropy of the weight vector, in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .p
            .iter()
            .map(|&w| if w == 0.0 { 0.0 } else { w * w.log2() })
            .sum::<f64>()
    }

    /// Checks whether every map's contraction-rate vector
    /// `(−log₂|r_{i,1}|, …, −log₂|r_{i,d}|)` is a positive scalar multiple
    /// `t_i · χ` of the Lyapunov vector, within [`SUBGROUP_REL_TOL`] relative
    /// tolerance per coordinate ratio. Returns the scalars `t_i` if so.
    pub fn subgroup_times(&self) -> Option<Vec<f64>> {
        let chi = self.lyapunov_exponents();
        let mut times = Vec::with_capacity(self.ifs.map_count());
        for m in self.ifs.maps() {
            let v: Vec<f64> = (0..self.d())
                .map(|j| -m.coords[j].slope.abs().log2())
                .collect();
            let t = v[0] / chi[0];
            for j in 1..self.d() {
                let tj = v[j] / chi[j];
                if (tj - t).abs() > SUBGROUP_REL_TOL * t.abs().max(tj.abs()) {
                    return None;
                }
            }
            times.push(t);
        }
        Some(times)
    }

    /// Enumerates the stopping set at threshold `n`: words `u = i_1…i_l`
    /// with `t_{i_1…i_{l−1}} < n ≤ t_u`, where `t_u = Σ_k t_{i_k}` and the
    /// `t_i` come from [`WeightedIFS::subgroup_times`]. The set is prefix-free
    /// and exhaustive, so the word masses `p_u` sum to one. For `n ≤ 0` every
    /// single-letter word qualifies (the root is always expanded).
    pub fn stopping_words(&self, n: f64, budget: u64) -> Result<Vec<Word>> {
        if !n.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        let times = self.subgroup_times().ok_or(Error::SubgroupViolation)?;
        let mut out = Vec::new();
        let mut stack: Vec<u32> = Vec::new();
        let mut visited: u64 = 0;
        self.stopping_rec(&times, n, budget, &mut stack, &mut visited, &mut out)?;
        Ok(out)
    }

    fn stopping_rec(
        &self,
        times: &[f64],
        n: f64,
        budget: u64,
        stack: &mut Vec<u32>,
        visited: &mut u64,
        out: &mut Vec<Word>,
    ) -> Result<()> {
        let t_prefix: f64 = stack.iter().map(|&l| times[l as usize]).sum();
        for l in 0..self.ifs.map_count() as u32 {
            *visited += 1;
            if *visited > budget {
                return Err(Error::BudgetExceeded(format!(
                    "stopping-word enumeration visited more than {budget} nodes"
                )));
            }
            stack.push(l);
            let t_here = t_prefix + times[l as usize];
            if t_here >= n {
                out.push(Word(stack.clone()));
            } else {
                self.stopping_rec(times, n, budget, stack, visited, out)?;
            }
            stack.pop();
        }
        Ok(())
    }
}

/// All words of a given length over `map_count` letters, in lexicographic
/// order. Errors when `map_count^n` exceeds the budget.
pub fn enumerate_words(map_count: usize, n: usize, budget: u64) -> Result<Vec<Word>> {
    let total = (map_count as f64).powi(n as i32);
    if total > budget as f64 {
        return Err(Error::BudgetExceeded(format!(
            "{map_count}^{n} words exceed the budget of {budget}"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut stack = Vec::with_capacity(n);
    fn rec(map_count: u32, n: usize, stack: &mut Vec<u32>, out: &mut Vec<Word>) {
        if stack.len() == n {
            out.push(Word(stack.clone()));
            return;
        }
        for l in 0..map_count {
            stack.push(l);
            rec(map_count, n, stack, out);
            stack.pop();
        }
    }
    rec(map_count as u32, n, &mut stack, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// d=1 pair t -> t/2 ± 1 with the exact backend.
    fn half_pm_one() -> DiagonalIFS {
        DiagonalIFS::pm_one_family_exact(&[rat(1, 2)]).unwrap()
    }

    #[test]
    fn empty_word_composes_to_identity() {
        let sys = half_pm_one();
        let id = sys.compose(&Word::empty()).unwrap();
        assert_eq!(id.coords[0].slope, 1.0);
        assert_eq!(id.coords[0].offset, 0.0);
    }

    #[test]
    fn repeated_plus_map_composes_by_hand() {
        // (t/2 + 1) twice: t/4 + 3/2.
        let sys = half_pm_one();
        let m = sys.compose(&Word::from_letters(&[0, 0])).unwrap();
        assert_eq!(m.coords[0].slope, 0.25);
        assert_eq!(m.coords[0].offset, 1.5);
        let exact = sys.compose_exact(&Word::from_letters(&[0, 0])).unwrap().unwrap();
        assert_eq!(exact.coords[0].slope, rat(1, 4));
        assert_eq!(exact.coords[0].offset, rat(3, 2));
    }

    #[test]
    fn golden_ratio_words_nearly_coincide() {
        // r is the truncated decimal of the positive root of x² + x − 1, so
        // the words −++ and +−− compose to maps agreeing within 1e−9 but not
        // exactly (the truncation misses the algebraic root).
        let r = 0.6180339887;
        let sys = DiagonalIFS::pm_one_family(&[r]).unwrap();
        let a = sys.compose(&Word::from_letters(&[1, 0, 0])).unwrap();
        let b = sys.compose(&Word::from_letters(&[0, 1, 1])).unwrap();
        assert_eq!(a.coords[0].slope, b.coords[0].slope);
        let gap = (a.coords[0].offset - b.coords[0].offset).abs();
        assert!(gap < 1e-9, "offset gap {gap}");
        assert!(gap > 0.0);
    }

    #[test]
    fn composition_is_a_morphism_on_words() {
        let sys = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let u = Word::from_letters(&[0, 1, 1]);
        let v = Word::from_letters(&[1, 0]);
        let uv = sys.compose(&u.concat(&v)).unwrap();
        let u_then_v = sys.compose(&u).unwrap().compose(&sys.compose(&v).unwrap());
        for j in 0..2 {
            assert!((uv.coords[j].slope - u_then_v.coords[j].slope).abs() < 1e-15);
            assert!((uv.coords[j].offset - u_then_v.coords[j].offset).abs() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_exponents_match_hand_values() {
        // Uniform weights on slopes (0.6, 0.3): χ = (−log₂0.6, −log₂0.3).
        let sys = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let w = WeightedIFS::uniform(sys);
        let chi = w.lyapunov_exponents();
        assert!((chi[0] - 0.736_965_594_166_206).abs() < 1e-12);
        assert!((chi[1] - 1.736_965_594_166_206).abs() < 1e-12);

        // Rows (0.5, 0.2), (0.4, 0.25) with p = (0.7, 0.3).
        let maps = vec![
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.2, 1.0).unwrap(),
            ])
            .unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(0.4, -1.0).unwrap(),
                AffineMap1::new(0.25, -1.0).unwrap(),
            ])
            .unwrap(),
        ];
        let w = WeightedIFS::new(DiagonalIFS::new(maps).unwrap(), vec![0.7, 0.3]).unwrap();
        let chi = w.lyapunov_exponents();
        assert!((chi[0] - 1.096_578_428_466_209).abs() < 1e-9, "chi1 = {}", chi[0]);
        assert!((chi[1] - 2.225_349_666_421_153).abs() < 1e-9, "chi2 = {}", chi[1]);
    }

    #[test]
    fn negative_slopes_use_absolute_value_in_exponents() {
        let maps = vec![
            DiagonalMap::new(vec![AffineMap1::new(-0.5, 1.0).unwrap()]).unwrap(),
            DiagonalMap::new(vec![AffineMap1::new(0.5, -1.0).unwrap()]).unwrap(),
        ];
        let w = WeightedIFS::uniform(DiagonalIFS::new(maps).unwrap());
        assert!((w.lyapunov_exponents()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subgroup_times_present_on_commensurable_system() {
        // Slopes (1/2, 1/4) and (1/4, 1/16), uniform weights:
        // χ = (3/2, 3) and the maps sit at t = 2/3 and t = 4/3.
        let maps = vec![
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.25, 1.0).unwrap(),
            ])
            .unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(0.25, -1.0).unwrap(),
                AffineMap1::new(0.0625, -1.0).unwrap(),
            ])
            .unwrap(),
        ];
        let w = WeightedIFS::uniform(DiagonalIFS::new(maps).unwrap());
        let t = w.subgroup_times().expect("collinear rates");
        assert!((t[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((t[1] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn subgroup_times_absent_on_incommensurable_system() {
        // Slopes (1/2, 1/4) and (1/3, 1/8): the second map's rate vector is
        // not a multiple of χ.
        let maps = vec![
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.25, 1.0).unwrap(),
            ])
            .unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(1.0 / 3.0, -1.0).unwrap(),
                AffineMap1::new(0.125, -1.0).unwrap(),
            ])
            .unwrap(),
        ];
        let w = WeightedIFS::uniform(DiagonalIFS::new(maps).unwrap());
        assert!(w.subgroup_times().is_none());
    }

    #[test]
    fn homogeneous_stopping_words_are_full_levels() {
        // All letters at t = 1, threshold 3: exactly the length-3 words.
        let sys = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let w = WeightedIFS::uniform(sys);
        let words = w.stopping_words(3.0, 1_000).unwrap();
        assert_eq!(words.len(), 8);
        assert!(words.iter().all(|u| u.len() == 3));
    }

    #[test]
    fn stopping_words_at_zero_threshold_are_single_letters() {
        let sys = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let w = WeightedIFS::uniform(sys);
        let words = w.stopping_words(0.0, 1_000).unwrap();
        assert_eq!(words, vec![Word(vec![0]), Word(vec![1])]);
    }

    #[test]
    fn mixed_time_stopping_set_matches_hand_enumeration() {
        // t = (2/3, 4/3), threshold 2: {000, 001, 01, 10, 11}.
        let maps = vec![
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.25, 1.0).unwrap(),
            ])
            .unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(0.25, -1.0).unwrap(),
                AffineMap1::new(0.0625, -1.0).unwrap(),
            ])
            .unwrap(),
        ];
        let w = WeightedIFS::uniform(DiagonalIFS::new(maps).unwrap());
        let words = w.stopping_words(2.0, 1_000).unwrap();
        let expected = vec![
            Word(vec![0, 0, 0]),
            Word(vec![0, 0, 1]),
            Word(vec![0, 1]),
            Word(vec![1, 0]),
            Word(vec![1, 1]),
        ];
        assert_eq!(words, expected);
    }

    #[test]
    fn stopping_words_are_prefix_free_with_unit_mass() {
        let maps = vec![
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.25, 1.0).unwrap(),
            ])
            .unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(0.25, -1.0).unwrap(),
                AffineMap1::new(0.0625, -1.0).unwrap(),
            ])
            .unwrap(),
        ];
        let w = WeightedIFS::uniform(DiagonalIFS::new(maps).unwrap());
        let times = w.subgroup_times().unwrap();
        let max_t = times.iter().cloned().fold(0.0_f64, f64::max);
        for n in [0.5, 1.0, 2.5, 4.0] {
            let words = w.stopping_words(n, 100_000).unwrap();
            for (a, ua) in words.iter().enumerate() {
                for (b, ub) in words.iter().enumerate() {
                    if a != b {
                        assert!(!ua.is_prefix_of(ub), "{ua} is a prefix of {ub}");
                    }
                }
                let tu: f64 = ua.letters().iter().map(|&l| times[l as usize]).sum();
                assert!(tu >= n && tu <= n + max_t + 1e-12, "t_u = {tu} outside [{n}, n+max]");
            }
            let mass: f64 = words
                .iter()
                .map(|u| u.letters().iter().map(|&l| w.p()[l as usize]).product::<f64>())
                .sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bounding_box_matches_hand_values() {
        let sys = half_pm_one();
        assert_eq!(sys.bounding_box(), vec![[-2.0, 2.0]]);

        let sys = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let bb = sys.bounding_box();
        assert!((bb[0][1] - 2.5).abs() < 1e-12);
        assert!((bb[1][1] - 10.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_offsets_give_degenerate_box() {
        let maps = vec![DiagonalMap::new(vec![AffineMap1::new(0.5, 0.0).unwrap()]).unwrap()];
        let sys = DiagonalIFS::new(maps).unwrap();
        assert_eq!(sys.bounding_box(), vec![[0.0, 0.0]]);
    }

    #[test]
    fn construction_rejects_bad_slopes() {
        assert!(AffineMap1::new(0.0, 1.0).is_err());
        assert!(AffineMap1::new(1.0, 1.0).is_err());
        assert!(AffineMap1::new(-1.5, 1.0).is_err());
        assert!(AffineMap1::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn construction_rejects_mixed_dimensions() {
        let maps = vec![
            DiagonalMap::new(vec![AffineMap1::new(0.5, 1.0).unwrap()]).unwrap(),
            DiagonalMap::new(vec![
                AffineMap1::new(0.5, 1.0).unwrap(),
                AffineMap1::new(0.5, 1.0).unwrap(),
            ])
            .unwrap(),
        ];
        assert!(DiagonalIFS::new(maps).is_err());
    }

    #[test]
    fn weights_must_be_a_probability_vector() {
        let sys = half_pm_one();
        assert!(WeightedIFS::new(sys.clone(), vec![0.5]).is_err());
        assert!(WeightedIFS::new(sys.clone(), vec![0.6, 0.6]).is_err());
        assert!(WeightedIFS::new(sys.clone(), vec![-0.1, 1.1]).is_err());
        assert!(WeightedIFS::new(sys, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn compose_rejects_out_of_range_letters() {
        let sys = half_pm_one();
        assert!(sys.compose(&Word::from_letters(&[2])).is_err());
    }

    #[test]
    fn word_enumeration_is_lexicographic_and_budgeted() {
        let words = enumerate_words(2, 2, 100).unwrap();
        assert_eq!(
            words,
            vec![Word(vec![0, 0]), Word(vec![0, 1]), Word(vec![1, 0]), Word(vec![1, 1])]
        );
        assert!(matches!(enumerate_words(2, 40, 100), Err(Error::BudgetExceeded(_))));
    }
}
