//! Dimension functionals of diagonal systems: the singular-value pressure and
//! the affinity dimension it defines, the Lyapunov dimension of a weighted
//! system, the asymptotic entropy rate κ, and the closed-form dimension of
//! the two-map ±1-offset family.
//!
//! Conventions: all entropies and exponents are in bits (base-2 logarithms);
//! dimension values are ratios of logarithms and therefore base-free.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{enumerate_words, DiagonalIFS, DiagonalMap, WeightedIFS};

/// Largest ambient dimension accepted by the permutation-maximized pressure;
/// the scan is over d! coordinate orders.
pub const MAX_PRESSURE_DIMENSION: usize = 8;

/// Value of the permutation-maximized singular-value pressure at one `s`,
/// together with the maximizing coordinate permutation (lexicographically
/// smallest on ties; for `s ≥ d` the permutation is irrelevant and reported
/// as the identity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureValue {
    pub value: f64,
    pub permutation: Vec<usize>,
}

/// Per-map singular-value weight for a fixed coordinate order: the product of
/// the `⌊s⌋` largest-ranked slopes in that order, with the next slope raised
/// to the fractional remainder; for `s ≥ d`, the full slope product raised to
/// `s/d`.
fn singular_weight(map: &DiagonalMap, perm: &[usize], s: f64) -> f64 {
    let d = map.d();
    if s >= d as f64 {
        let prod: f64 = map.coords.iter().map(|c| c.slope.abs()).product();
        return prod.powf(s / d as f64);
    }
    let m = s.floor() as usize;
    let mut w = 1.0;
    for &j in &perm[..m] {
        w *= map.coords[j].slope.abs();
    }
    let frac = s - m as f64;
    if frac > 0.0 {
        w *= map.coords[perm[m]].slope.abs().powf(frac);
    }
    w
}

/// The singular-value pressure `max_σ Σ_i φ_σ^s(i)` at exponent `s ≥ 0`.
/// Strictly decreasing and continuous in `s`, with value `|Λ|` at `s = 0`.
pub fn pressure(ifs: &DiagonalIFS, s: f64) -> Result<PressureValue> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidInput(format!("pressure exponent must be ≥ 0, got {s}")));
    }
    let d = ifs.d();
    if d > MAX_PRESSURE_DIMENSION {
        return Err(Error::InvalidInput(format!(
            "dimension {d} exceeds the permutation-scan cap {MAX_PRESSURE_DIMENSION}"
        )));
    }
    let identity: Vec<usize> = (0..d).collect();
    if s >= d as f64 {
        let value = ifs
            .maps()
            .iter()
            .map(|m| singular_weight(m, &identity, s))
            .sum();
        return Ok(PressureValue { value, permutation: identity });
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_perm = identity.clone();
    for perm in (0..d).permutations(d) {
        let value: f64 = ifs.maps().iter().map(|m| singular_weight(m, &perm, s)).sum();
        if value > best {
            best = value;
            best_perm = perm;
        }
    }
    Ok(PressureValue { value: best, permutation: best_perm })
}

/// The affinity dimension: the unique `s ≥ 0` with `pressure(s) = 1`, found
/// by bracketing (doubling the upper end until the pressure drops below one)
/// and bisection to width `tol`. Requires at least two maps, so that
/// `pressure(0) = |Λ| > 1` and a root exists.
pub fn affinity_dimension(ifs: &DiagonalIFS, tol: f64) -> Result<f64> {
    if ifs.map_count() < 2 {
        return Err(Error::InvalidInput(
            "affinity dimension needs at least two maps (pressure(0) must exceed 1)".into(),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while pressure(ifs, hi)?.value >= 1.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::InvalidInput(
                "pressure does not drop below 1 at any reasonable exponent".into(),
            ));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pressure(ifs, mid)?.value >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form affinity dimension of the two-map family
/// `x -> (r_1 x_1, …, r_d x_d) ± (1, …, 1)` for strictly decreasing
/// `r_1 > … > r_d` in (0,1). With `m` the largest `k` such that
/// `r_1⋯r_k ≥ 1/2` (empty product = 1):
/// `m + (1 + log₂r_1 + … + log₂r_m)/(−log₂r_{m+1})` when `m < d`,
/// and `d / (−log₂r_1 − … − log₂r_d)` when `m = d`.
pub fn pm_one_family_dimension(rbar: &[f64]) -> Result<f64> {
    let d = rbar.len();
    if d == 0 {
        return Err(Error::InvalidInput("need at least one contraction rate".into()));
    }
    for (j, &r) in rbar.iter().enumerate() {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "rate {j} must lie in (0,1), got {r}"
            )));
        }
        if j > 0 && rbar[j - 1] <= r {
            return Err(Error::InvalidInput(
                "rates must be strictly decreasing".into(),
            ));
        }
    }
    let mut m = 0usize;
    let mut prod = 1.0_f64;
    for &r in rbar {
        if prod * r >= 0.5 {
            prod *= r;
            m += 1;
        } else {
            break;
        }
    }
    if m == d {
        let denom: f64 = -rbar.iter().map(|&r| r.log2()).sum::<f64>();
        Ok(d as f64 / denom)
    } else {
        let num = 1.0 + rbar[..m].iter().map(|&r| r.log2()).sum::<f64>();
        Ok(m as f64 + num / (-rbar[m].log2()))
    }
}

/// Lyapunov dimension of a weighted system, together with the entropy level
/// `m`: with χ sorted ascending and `H = H(p)` in bits, `m` is the largest
/// `j` with `χ_1 + … + χ_j ≤ H`, and the dimension is
/// `m + (H − χ_1 − … − χ_m)/χ_{m+1}` when `m < d`, else `d·H / Σ_j χ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDimension {
    pub value: f64,
    pub m: usize,
}

pub fn lyapunov_dimension(w: &WeightedIFS) -> LyapunovDimension {
    let mut chi = w.lyapunov_exponents();
    chi.sort_by(f64::total_cmp);
    let h = w.entropy_bits();
    lyapunov_dimension_from(&chi, h)
}

/// The same functional from raw ingredients (χ ascending, entropy in bits).
pub fn lyapunov_dimension_from(chi_ascending: &[f64], h: f64) -> LyapunovDimension {
    let d = chi_ascending.len();
    let mut m = 0usize;
    let mut prefix = 0.0_f64;
    while m < d && prefix + chi_ascending[m] <= h {
        prefix += chi_ascending[m];
        m += 1;
    }
    if m == d {
        let total: f64 = chi_ascending.iter().sum();
        LyapunovDimension { value: d as f64 * h / total, m }
    } else {
        LyapunovDimension { value: m as f64 + (h - prefix) / chi_ascending[m], m }
    }
}

/// Weights that make the Lyapunov dimension coincide with the affinity
/// dimension: `p_i` is map `i`'s singular-value weight at `s = dim_A` under
/// the maximizing permutation, normalized. Returns the weights and the
/// permutation.
pub fn natural_weights(ifs: &DiagonalIFS) -> Result<(Vec<f64>, Vec<usize>)> {
    let s = affinity_dimension(ifs, 1e-13)?;
    let pv = pressure(ifs, s)?;
    let raw: Vec<f64> = ifs
        .maps()
        .iter()
        .map(|m| singular_weight(m, &pv.permutation, s))
        .collect();
    // The raw weights sum to pressure(s) = 1 up to the bisection width;
    // normalizing keeps downstream probability-vector checks exact.
    let sum: f64 = raw.iter().sum();
    Ok((raw.iter().map(|x| x / sum).collect(), pv.permutation))
}

/// The asymptotic entropy rate `κ = χ_d·dim − Σ_{j<d}(χ_d − χ_j)` of a
/// measure of dimension `dim` with Lyapunov exponents `chi` (ascending).
pub fn kappa_value(chi_ascending: &[f64], dim: f64) -> Result<f64> {
    if chi_ascending.is_empty() {
        return Err(Error::InvalidInput("need at least one exponent".into()));
    }
    if chi_ascending.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("exponents must be ascending".into()));
    }
    let d = chi_ascending.len();
    let chi_d = chi_ascending[d - 1];
    let deficit: f64 = chi_ascending[..d - 1].iter().map(|&c| chi_d - c).sum();
    Ok(chi_d * dim - deficit)
}

/// Maximum of `f(y) = Σ_k y_k/χ_k` over the box-with-budget
/// `{0 ≤ y_k ≤ χ_k, Σ_k y_k ≤ h}`, with the maximizer: fill coordinates in
/// ascending-χ order to their caps until the budget `h` runs out. Requires
/// `h < Σ_k χ_k` so the budget binds; then the maximum is
/// `m + (h − χ_1 − … − χ_m)/χ_{m+1}` with `m` the number of full coordinates.
pub fn lyapunov_max_profile(chis_ascending: &[f64], h: f64) -> Result<(f64, Vec<f64>)> {
    let s = chis_ascending.len();
    if s == 0 {
        return Err(Error::InvalidInput("need at least one exponent".into()));
    }
    if chis_ascending.iter().any(|&c| c.is_nan() || c <= 0.0) {
        return Err(Error::InvalidInput("exponents must be positive".into()));
    }
    if chis_ascending.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("exponents must be ascending".into()));
    }
    let total: f64 = chis_ascending.iter().sum();
    if !(h >= 0.0 && h < total) {
        return Err(Error::InvalidInput(format!(
            "budget must satisfy 0 ≤ h < Σχ = {total}, got {h}"
        )));
    }
    let mut m = 0usize;
    let mut prefix = 0.0_f64;
    while m < s && prefix + chis_ascending[m] <= h {
        prefix += chis_ascending[m];
        m += 1;
    }
    let mut maximizer = vec![0.0; s];
    maximizer[..m].copy_from_slice(&chis_ascending[..m]);
    let value;
    if m < s {
        maximizer[m] = h - prefix;
        value = m as f64 + (h - prefix) / chis_ascending[m];
    } else {
        value = m as f64; // unreachable given h < Σχ, kept for completeness
    }
    Ok((value, maximizer))
}

/// The depth-`n` iterate: maps `φ_u` over all words `u` of length `n` in
/// lexicographic order, weighted by the word masses `p_u` (renormalized to
/// absorb float drift in the products).
pub fn iterate_system(w: &WeightedIFS, n: usize, budget: u64) -> Result<WeightedIFS> {
    if n == 0 {
        return Err(Error::InvalidInput("iterate depth must be positive".into()));
    }
    let words = enumerate_words(w.ifs().map_count(), n, budget)?;
    let mut maps = Vec::with_capacity(words.len());
    let mut weights = Vec::with_capacity(words.len());
    for u in &words {
        maps.push(w.ifs().compose(u)?);
        weights.push(u.letters().iter().map(|&l| w.p()[l as usize]).product::<f64>());
    }
    let sum: f64 = weights.iter().sum();
    for q in &mut weights {
        *q /= sum;
    }
    WeightedIFS::new(DiagonalIFS::new(maps)?, weights)
}

/// Everything the dimension pipeline knows about one weighted system.
/// `kappa` is evaluated at `dim = min{dim_L, d}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionReport {
    pub d: usize,
    pub map_count: usize,
    /// Lyapunov exponents in bits, ascending.
    pub chi: Vec<f64>,
    /// Shannon entropy of the weights, bits.
    pub entropy_p: f64,
    pub affinity_dim: f64,
    pub lyapunov_dim: f64,
    pub lyapunov_m: usize,
    pub kappa: f64,
    pub natural_weights: Vec<f64>,
    pub max_permutation: Vec<usize>,
}

pub fn dimension_report(w: &WeightedIFS, tol: f64) -> Result<DimensionReport> {
    let mut chi = w.lyapunov_exponents();
    chi.sort_by(f64::total_cmp);
    let ld = lyapunov_dimension(w);
    let (nat, perm) = natural_weights(w.ifs())?;
    let kappa = kappa_value(&chi, ld.value.min(w.d() as f64))?;
    Ok(DimensionReport {
        d: w.d(),
        map_count: w.ifs().map_count(),
        chi,
        entropy_p: w.entropy_bits(),
        affinity_dim: affinity_dimension(w.ifs(), tol)?,
        lyapunov_dim: ld.value,
        lyapunov_m: ld.m,
        kappa,
        natural_weights: nat,
        max_permutation: perm,
    })
}
