//! Exact-overlap diagnostics for one-dimensional systems.
//!
//! Two affine maps of the line are compared with the metric [`rho`]: infinite
//! when the linear parts differ, otherwise the distance between the
//! translation parts. A system has an *exact overlap* when two distinct words
//! compose to the same map. [`exact_overlap_search`] looks for the shortest
//! such pair, [`separation_profile`] tracks how close same-slope compositions
//! get level by level, and [`pm10_root_check`] runs the polynomial root
//! criterion for the two-map family `t -> rt ± 1`: that family has an exact
//! overlap exactly when `r` is a root of a nonzero polynomial with
//! coefficients in {-1, 0, 1}.
//!
//! Everything here works on the rational backend when the system carries one
//! and falls back to floating point otherwise. Floating-point coincidence is
//! declared, not silent: offsets within [`FLOAT_COINCIDENCE_EPS`] of each
//! other count as equal, and the polynomial test accepts residuals up to
//! [`PM10_ROOT_EPS`].

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{enumerate_words, AffineMap1, DiagonalIFS, Word, FLOAT_COINCIDENCE_EPS};

/// Residual tolerance for the floating-point polynomial root test.
pub const PM10_ROOT_EPS: f64 = 1e-10;

/// Largest polynomial degree [`pm10_root_check`] will scan.
pub const MAX_PM10_DEGREE: usize = 30;

/// Degrees up to this bound are searched by pruned DFS; beyond it the
/// per-degree search switches to meet-in-the-middle over coefficient halves.
const MITM_DEGREE_THRESHOLD: usize = 16;

/// Distance between two affine maps of the line: `+inf` when the slopes
/// differ, `|offset difference|` when they agree.
///
/// Slopes are compared for exact equality here; the searches below group
/// near-equal slopes under a declared tolerance instead, so that independently
/// computed products of the same slope multiset land in one class.
pub fn rho(a: &AffineMap1, b: &AffineMap1) -> f64 {
    if a.slope == b.slope {
        (a.offset - b.offset).abs()
    } else {
        f64::INFINITY
    }
}

/// A pair of distinct words whose compositions agree as maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapWitness {
    /// Lexicographically smaller word of the pair.
    pub u1: Word,
    /// Lexicographically larger word of the pair.
    pub u2: Word,
    /// Length of the longer word; the search guarantees no witness exists
    /// with both words shorter than this.
    pub len: usize,
}

/// Per-level separation diagnostics: for each level `n`, the minimum of
/// `rho` over distinct pairs of length-`n` words and the normalized value
/// `c_n = (min rho)^(1/n)`.
///
/// `c_n` is `+inf` when every pair at that level has distinct slopes and `0`
/// when two compositions coincide (exactly, or within the declared
/// floating-point tolerance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationProfile {
    /// The word lengths that were scanned.
    pub levels: Vec<usize>,
    /// Minimum pair distance at each level (`+inf` if all slopes distinct).
    pub min_rho: Vec<f64>,
    /// `min_rho^(1/n)` per level, with `0^(1/n) = 0` and `inf^(1/n) = inf`.
    pub c_values: Vec<f64>,
}

fn require_one_dimensional(ifs: &DiagonalIFS, what: &str) -> Result<()> {
    if ifs.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "{what} expects a one-dimensional system, got d = {}",
            ifs.d()
        )));
    }
    Ok(())
}

/// Slope of the composition along `word`, computed from the letter counts as
/// an ordered product of `powi` factors. Words with the same letter multiset
/// get bit-identical slopes, so slope-class grouping never splits a class
/// through float rounding.
fn canonical_slope(ifs: &DiagonalIFS, word: &Word) -> f64 {
    let mut counts = vec![0i32; ifs.map_count()];
    for &letter in word.letters() {
        counts[letter as usize] += 1;
    }
    let mut slope = 1.0;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            slope *= ifs.map(i).coords[0].slope.powi(c);
        }
    }
    slope
}

/// One enumerated word with its composed map, float backend.
struct FloatEntry {
    slope: f64,
    offset: f64,
    word: Word,
}

fn float_entries_for_length(ifs: &DiagonalIFS, len: usize) -> Result<Vec<FloatEntry>> {
    let words = enumerate_words(ifs.map_count(), len, u64::MAX)?;
    let mut out = Vec::with_capacity(words.len());
    for word in words {
        let offset = ifs.compose(&word)?.coords[0].offset;
        out.push(FloatEntry {
            slope: canonical_slope(ifs, &word),
            offset,
            word,
        });
    }
    Ok(out)
}

fn sort_entries(entries: &mut [FloatEntry]) {
    entries.sort_unstable_by(|a, b| {
        a.slope
            .total_cmp(&b.slope)
            .then(a.offset.total_cmp(&b.offset))
            .then_with(|| a.word.cmp(&b.word))
    });
}

/// Whether two already-sorted adjacent slopes belong to one slope class.
fn same_slope_class(a: f64, b: f64) -> bool {
    (a - b).abs() <= FLOAT_COINCIDENCE_EPS * a.abs().max(b.abs())
}

fn word_budget(map_count: usize, len: usize) -> u128 {
    (map_count as u128).saturating_pow(len as u32)
}

/// Searches `Λ^{≤max_len}` for the shortest pair of distinct words whose
/// compositions agree as maps of the line.
///
/// Words of unequal length are compared too. On the rational backend
/// agreement is exact; on the float backend two maps agree when their
/// slope-class products coincide within [`FLOAT_COINCIDENCE_EPS`] (relative)
/// and their offsets within the same bound (absolute). The budget caps the
/// total number of enumerated words.
pub fn exact_overlap_search(
    ifs: &DiagonalIFS,
    max_len: usize,
    budget: u64,
) -> Result<Option<OverlapWitness>> {
    require_one_dimensional(ifs, "exact_overlap_search")?;
    if max_len == 0 {
        return Err(Error::InvalidInput(
            "exact_overlap_search needs max_len >= 1".into(),
        ));
    }

    let mut spent: u128 = 0;
    let mut charge = |len: usize| -> Result<()> {
        spent += word_budget(ifs.map_count(), len);
        if spent > budget as u128 {
            return Err(Error::BudgetExceeded(format!(
                "overlap search over {} words exceeds budget {budget}",
                spent
            )));
        }
        Ok(())
    };

    if ifs.has_exact() {
        // Exact backend: one map keyed by the exact (slope, offset) pair,
        // filled in (length, lex) order; the first collision is the witness.
        let mut seen: BTreeMap<(BigRational, BigRational), Word> = BTreeMap::new();
        for len in 1..=max_len {
            charge(len)?;
            for word in enumerate_words(ifs.map_count(), len, u64::MAX)? {
                let map = ifs
                    .compose_exact(&word)?
                    .expect("exact backend present but compose_exact returned none");
                let key = (map.coords[0].slope.clone(), map.coords[0].offset.clone());
                if let Some(prev) = seen.get(&key) {
                    let (u1, u2) = if prev < &word {
                        (prev.clone(), word.clone())
                    } else {
                        (word.clone(), prev.clone())
                    };
                    let len = u1.len().max(u2.len());
                    return Ok(Some(OverlapWitness { u1, u2, len }));
                }
                seen.insert(key, word);
            }
        }
        return Ok(None);
    }

    // Float backend: pool all words up to the current length, sort by
    // (slope, offset), and scan adjacent entries. Any coincidence found in
    // round `len` involves a word of length `len`, because earlier rounds
    // scanned the same criteria over the shorter words.
    let mut entries: Vec<FloatEntry> = Vec::new();
    for len in 1..=max_len {
        charge(len)?;
        entries.extend(float_entries_for_length(ifs, len)?);
        sort_entries(&mut entries);
        let mut best: Option<(Word, Word)> = None;
        for pair in entries.windows(2) {
            if !same_slope_class(pair[0].slope, pair[1].slope) {
                continue;
            }
            if (pair[1].offset - pair[0].offset).abs() > FLOAT_COINCIDENCE_EPS {
                continue;
            }
            let (u1, u2) = if pair[0].word < pair[1].word {
                (pair[0].word.clone(), pair[1].word.clone())
            } else {
                (pair[1].word.clone(), pair[0].word.clone())
            };
            if best.as_ref().is_none_or(|b| (&u1, &u2) < (&b.0, &b.1)) {
                best = Some((u1, u2));
            }
        }
        if let Some((u1, u2)) = best {
            let len = u1.len().max(u2.len());
            return Ok(Some(OverlapWitness { u1, u2, len }));
        }
    }
    Ok(None)
}

/// Minimum pair distance over `Λ^n`, float backend. Returns `+inf` when every
/// slope class is a singleton.
fn level_min_rho_float(ifs: &DiagonalIFS, n: usize) -> Result<f64> {
    let mut entries = float_entries_for_length(ifs, n)?;
    sort_entries(&mut entries);
    let mut min = f64::INFINITY;
    for pair in entries.windows(2) {
        if same_slope_class(pair[0].slope, pair[1].slope) {
            min = min.min((pair[1].offset - pair[0].offset).abs());
        }
    }
    Ok(min)
}

/// Minimum pair distance over `Λ^n`, exact backend. `None` means every slope
/// class is a singleton.
fn level_min_rho_exact(ifs: &DiagonalIFS, n: usize) -> Result<Option<BigRational>> {
    let mut classes: BTreeMap<BigRational, Vec<BigRational>> = BTreeMap::new();
    for word in enumerate_words(ifs.map_count(), n, u64::MAX)? {
        let map = ifs
            .compose_exact(&word)?
            .expect("exact backend present but compose_exact returned none");
        classes
            .entry(map.coords[0].slope.clone())
            .or_default()
            .push(map.coords[0].offset.clone());
    }
    let mut min: Option<BigRational> = None;
    for offsets in classes.values_mut() {
        offsets.sort();
        for pair in offsets.windows(2) {
            let gap = &pair[1] - &pair[0];
            if min.as_ref().is_none_or(|m| &gap < m) {
                min = Some(gap);
            }
        }
    }
    Ok(min)
}

/// Number of same-slope pairs at one level, used only to honor the declared
/// budget; the scan itself is linear after sorting.
fn level_pair_count(class_sizes: impl Iterator<Item = usize>) -> u128 {
    class_sizes
        .map(|k| (k as u128) * (k.saturating_sub(1) as u128) / 2)
        .sum()
}

/// Computes the separation profile `c_n = (min distinct-pair rho at level
/// n)^(1/n)` for each requested level.
///
/// The budget bounds, per level, the number of enumerated words plus the
/// number of same-slope pairs (words are deduplicated into slope classes
/// before pairs are counted).
pub fn separation_profile(
    ifs: &DiagonalIFS,
    levels: &[usize],
    budget: u64,
) -> Result<SeparationProfile> {
    require_one_dimensional(ifs, "separation_profile")?;
    if levels.is_empty() {
        return Err(Error::InvalidInput(
            "separation_profile needs at least one level".into(),
        ));
    }
    if let Some(&bad) = levels.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidInput(format!(
            "separation_profile levels must be positive, got {bad}"
        )));
    }

    let mut min_rho = Vec::with_capacity(levels.len());
    let mut c_values = Vec::with_capacity(levels.len());
    for &n in levels {
        let words = word_budget(ifs.map_count(), n);
        if words > budget as u128 {
            return Err(Error::BudgetExceeded(format!(
                "level {n} enumerates {words} words, budget is {budget}"
            )));
        }
        let rho_min = if ifs.has_exact() {
            let mut sizes: BTreeMap<BigRational, usize> = BTreeMap::new();
            for word in enumerate_words(ifs.map_count(), n, u64::MAX)? {
                let map = ifs.compose_exact(&word)?.expect("exact backend present");
                *sizes.entry(map.coords[0].slope.clone()).or_default() += 1;
            }
            let pairs = level_pair_count(sizes.values().copied());
            if words + pairs > budget as u128 {
                return Err(Error::BudgetExceeded(format!(
                    "level {n} scans {pairs} same-slope pairs, budget is {budget}"
                )));
            }
            match level_min_rho_exact(ifs, n)? {
                None => f64::INFINITY,
                Some(gap) => crate::ifs::rational_to_f64(&gap),
            }
        } else {
            let mut entries = float_entries_for_length(ifs, n)?;
            sort_entries(&mut entries);
            let mut sizes = Vec::new();
            let mut run = 1usize;
            for pair in entries.windows(2) {
                if same_slope_class(pair[0].slope, pair[1].slope) {
                    run += 1;
                } else {
                    sizes.push(run);
                    run = 1;
                }
            }
            sizes.push(run);
            let pairs = level_pair_count(sizes.into_iter());
            if words + pairs > budget as u128 {
                return Err(Error::BudgetExceeded(format!(
                    "level {n} scans {pairs} same-slope pairs, budget is {budget}"
                )));
            }
            level_min_rho_float(ifs, n)?
        };
        let c = if rho_min.is_infinite() {
            f64::INFINITY
        } else if rho_min <= FLOAT_COINCIDENCE_EPS {
            0.0
        } else {
            rho_min.powf(1.0 / n as f64)
        };
        min_rho.push(rho_min);
        c_values.push(c);
    }
    Ok(SeparationProfile {
        levels: levels.to_vec(),
        min_rho,
        c_values,
    })
}

/// Whether the system is the two-map ±offset family `t -> rt ± b` the
/// polynomial root criterion applies to: one dimension, two maps with equal
/// slopes and opposite nonzero offsets.
pub fn matches_pm_one_template(ifs: &DiagonalIFS) -> bool {
    if ifs.d() != 1 || ifs.map_count() != 2 {
        return false;
    }
    let a = &ifs.map(0).coords[0];
    let b = &ifs.map(1).coords[0];
    a.slope == b.slope && a.offset != 0.0 && a.offset == -b.offset
}

fn validate_pm10_degree(max_degree: usize) -> Result<()> {
    if max_degree == 0 || max_degree > MAX_PM10_DEGREE {
        return Err(Error::InvalidInput(format!(
            "max_degree must be in 1..={MAX_PM10_DEGREE}, got {max_degree}"
        )));
    }
    Ok(())
}

fn charge_nodes(visited: &mut u64, add: u64, budget: u64) -> Result<()> {
    *visited = visited.saturating_add(add);
    if *visited > budget {
        return Err(Error::BudgetExceeded(format!(
            "polynomial search visited {visited} nodes, budget is {budget}"
        )));
    }
    Ok(())
}

/// Pruned DFS over coefficient vectors of exact degree `deg`. The constant
/// term is fixed to -1 (sign symmetry) and the leading term is nonzero, so
/// degrees scanned in ascending order yield a minimal-degree witness.
fn dfs_degree(
    powers: &[f64],
    deg: usize,
    eps: f64,
    budget: u64,
    visited: &mut u64,
) -> Result<Option<Vec<i8>>> {
    // tail[j] = powers[j] + ... + powers[deg]: the most the remaining
    // coefficients can still move the partial sum.
    let mut tail = vec![0.0; deg + 2];
    for j in (0..=deg).rev() {
        tail[j] = tail[j + 1] + powers[j];
    }
    let mut coeffs = vec![0i8; deg + 1];
    coeffs[0] = -1;

    #[allow(clippy::too_many_arguments)]
    fn go(
        powers: &[f64],
        tail: &[f64],
        deg: usize,
        eps: f64,
        budget: u64,
        visited: &mut u64,
        coeffs: &mut Vec<i8>,
        j: usize,
        sum: f64,
    ) -> Result<Option<Vec<i8>>> {
        charge_nodes(visited, 1, budget)?;
        if j > deg {
            return Ok(if sum.abs() <= eps {
                Some(coeffs.clone())
            } else {
                None
            });
        }
        if sum.abs() > tail[j] + eps {
            return Ok(None); // no coefficient choice can cancel the sum
        }
        let choices: &[i8] = if j == deg { &[-1, 1] } else { &[-1, 0, 1] };
        for &c in choices {
            coeffs[j] = c;
            let found = go(
                powers,
                tail,
                deg,
                eps,
                budget,
                visited,
                coeffs,
                j + 1,
                sum + f64::from(c) * powers[j],
            )?;
            if found.is_some() {
                return Ok(found);
            }
        }
        coeffs[j] = 0;
        Ok(None)
    }

    go(
        powers, &tail, deg, eps, budget, visited, &mut coeffs, 1, -powers[0],
    )
}

/// Meet-in-the-middle over coefficient halves at exact degree `deg`: low-half
/// sums are sorted, high-half sums are matched against them by binary search.
fn mitm_degree(
    powers: &[f64],
    deg: usize,
    eps: f64,
    budget: u64,
    visited: &mut u64,
) -> Result<Option<Vec<i8>>> {
    let tail1: f64 = powers[1..=deg].iter().sum();
    if 1.0 > tail1 + eps {
        return Ok(None); // the constant term can never be cancelled
    }

    let h = deg / 2;
    let low_count = 3u64.pow(h as u32);
    let high_count = 2 * 3u64.pow((deg - h - 1) as u32);
    charge_nodes(visited, low_count + high_count, budget)?;

    let decode = |mut code: u64, len: usize| -> Vec<i8> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push((code % 3) as i8 - 1);
            code /= 3;
        }
        out
    };

    // Low half: coefficients 1..=h, constant term fixed at -1.
    let mut lows: Vec<(f64, u64)> = Vec::with_capacity(low_count as usize);
    for code in 0..low_count {
        let cs = decode(code, h);
        let mut sum = -powers[0];
        for (k, &c) in cs.iter().enumerate() {
            sum += f64::from(c) * powers[k + 1];
        }
        lows.push((sum, code));
    }
    lows.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // High half: coefficients h+1..deg-1 free, leading coefficient ±1.
    for lead in [-1i8, 1] {
        let mid_len = deg - h - 1;
        for code in 0..3u64.pow(mid_len as u32) {
            let cs = decode(code, mid_len);
            let mut sum = f64::from(lead) * powers[deg];
            for (k, &c) in cs.iter().enumerate() {
                sum += f64::from(c) * powers[h + 1 + k];
            }
            let target = -sum;
            let start = lows.partition_point(|&(v, _)| v < target - eps);
            if start < lows.len() && lows[start].0 <= target + eps {
                let mut coeffs = vec![0i8; deg + 1];
                coeffs[0] = -1;
                for (k, &c) in decode(lows[start].1, h).iter().enumerate() {
                    coeffs[k + 1] = c;
                }
                for (k, &c) in cs.iter().enumerate() {
                    coeffs[h + 1 + k] = c;
                }
                coeffs[deg] = lead;
                return Ok(Some(coeffs));
            }
        }
    }
    Ok(None)
}

/// Searches for a nonzero polynomial with coefficients in {-1, 0, 1} that
/// vanishes at `r` (residual at most [`PM10_ROOT_EPS`]).
///
/// The returned vector lists coefficients by ascending power, constant term
/// first; it is trimmed to the witness degree, has constant term -1 and a
/// nonzero leading coefficient, and is of minimal degree among such
/// witnesses. Degrees above 16 are searched by meet-in-the-middle. The budget
/// caps the number of search nodes across all degrees.
pub fn pm10_root_check(r: f64, max_degree: usize, budget: u64) -> Result<Option<Vec<i8>>> {
    if !r.is_finite() || r <= 0.0 || r >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "polynomial root test needs r in (0, 1), got {r}"
        )));
    }
    validate_pm10_degree(max_degree)?;
    let powers: Vec<f64> = (0..=max_degree).map(|k| r.powi(k as i32)).collect();
    let mut visited = 0u64;
    for deg in 1..=max_degree {
        let found = if deg <= MITM_DEGREE_THRESHOLD {
            dfs_degree(&powers[..=deg], deg, PM10_ROOT_EPS, budget, &mut visited)?
        } else {
            mitm_degree(&powers[..=deg], deg, PM10_ROOT_EPS, budget, &mut visited)?
        };
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// Exact-arithmetic DFS analogue of [`dfs_degree`].
fn dfs_degree_exact(
    powers: &[BigRational],
    deg: usize,
    budget: u64,
    visited: &mut u64,
) -> Result<Option<Vec<i8>>> {
    let mut tail = vec![BigRational::zero(); deg + 2];
    for j in (0..=deg).rev() {
        tail[j] = &tail[j + 1] + &powers[j];
    }
    let mut coeffs = vec![0i8; deg + 1];
    coeffs[0] = -1;

    #[allow(clippy::too_many_arguments)]
    fn go(
        powers: &[BigRational],
        tail: &[BigRational],
        deg: usize,
        budget: u64,
        visited: &mut u64,
        coeffs: &mut Vec<i8>,
        j: usize,
        sum: BigRational,
    ) -> Result<Option<Vec<i8>>> {
        charge_nodes(visited, 1, budget)?;
        if j > deg {
            return Ok(if sum.is_zero() {
                Some(coeffs.clone())
            } else {
                None
            });
        }
        if sum.abs() > tail[j] {
            return Ok(None);
        }
        let choices: &[i8] = if j == deg { &[-1, 1] } else { &[-1, 0, 1] };
        for &c in choices {
            coeffs[j] = c;
            let next = match c {
                -1 => &sum - &powers[j],
                1 => &sum + &powers[j],
                _ => sum.clone(),
            };
            let found = go(powers, tail, deg, budget, visited, coeffs, j + 1, next)?;
            if found.is_some() {
                return Ok(found);
            }
        }
        coeffs[j] = 0;
        Ok(None)
    }

    let start = -powers[0].clone();
    go(powers, &tail, deg, budget, visited, &mut coeffs, 1, start)
}

/// Exact-arithmetic meet-in-the-middle analogue of [`mitm_degree`].
fn mitm_degree_exact(
    powers: &[BigRational],
    deg: usize,
    budget: u64,
    visited: &mut u64,
) -> Result<Option<Vec<i8>>> {
    let mut tail1 = BigRational::zero();
    for p in &powers[1..=deg] {
        tail1 += p;
    }
    if powers[0] > tail1 {
        return Ok(None);
    }

    let h = deg / 2;
    let low_count = 3u64.pow(h as u32);
    let high_count = 2 * 3u64.pow((deg - h - 1) as u32);
    charge_nodes(visited, low_count + high_count, budget)?;

    let decode = |mut code: u64, len: usize| -> Vec<i8> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push((code % 3) as i8 - 1);
            code /= 3;
        }
        out
    };
    let term = |c: i8, p: &BigRational| -> BigRational {
        match c {
            -1 => -p.clone(),
            1 => p.clone(),
            _ => BigRational::zero(),
        }
    };

    let mut lows: BTreeMap<BigRational, u64> = BTreeMap::new();
    for code in 0..low_count {
        let cs = decode(code, h);
        let mut sum = -powers[0].clone();
        for (k, &c) in cs.iter().enumerate() {
            sum += term(c, &powers[k + 1]);
        }
        lows.entry(sum).or_insert(code);
    }

    for lead in [-1i8, 1] {
        let mid_len = deg - h - 1;
        for code in 0..3u64.pow(mid_len as u32) {
            let cs = decode(code, mid_len);
            let mut sum = term(lead, &powers[deg]);
            for (k, &c) in cs.iter().enumerate() {
                sum += term(c, &powers[h + 1 + k]);
            }
            if let Some(&low_code) = lows.get(&(-sum)) {
                let mut coeffs = vec![0i8; deg + 1];
                coeffs[0] = -1;
                for (k, &c) in decode(low_code, h).iter().enumerate() {
                    coeffs[k + 1] = c;
                }
                for (k, &c) in cs.iter().enumerate() {
                    coeffs[h + 1 + k] = c;
                }
                coeffs[deg] = lead;
                return Ok(Some(coeffs));
            }
        }
    }
    Ok(None)
}

/// Exact-arithmetic version of [`pm10_root_check`] for rational `r`: a
/// witness must vanish exactly.
///
/// By the rational root theorem no rational in (0, 1) is a root of a
/// polynomial with coefficients in {-1, 0, 1} and nonzero constant and
/// leading terms, so for rational input this always reports absence — the
/// point of running it is that the search proves absence up to the requested
/// degree rather than assuming the theorem.
pub fn pm10_root_check_exact(
    r: &BigRational,
    max_degree: usize,
    budget: u64,
) -> Result<Option<Vec<i8>>> {
    if r <= &BigRational::zero() || r >= &BigRational::from_integer(1.into()) {
        return Err(Error::InvalidInput(format!(
            "polynomial root test needs r in (0, 1), got {r}"
        )));
    }
    validate_pm10_degree(max_degree)?;
    let mut powers = Vec::with_capacity(max_degree + 1);
    powers.push(BigRational::from_integer(1.into()));
    for _ in 0..max_degree {
        powers.push(powers.last().unwrap() * r);
    }
    let mut visited = 0u64;
    for deg in 1..=max_degree {
        let found = if deg <= MITM_DEGREE_THRESHOLD {
            dfs_degree_exact(&powers[..=deg], deg, budget, &mut visited)?
        } else {
            mitm_degree_exact(&powers[..=deg], deg, budget, &mut visited)?
        };
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{DiagonalMap, RationalDiagonalMap, RationalMap1};
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn map1(slope: f64, offset: f64) -> DiagonalMap {
        DiagonalMap::new(vec![AffineMap1::new(slope, offset).unwrap()]).unwrap()
    }

    fn golden() -> f64 {
        (5.0_f64.sqrt() - 1.0) / 2.0
    }

    fn eval_pm10(coeffs: &[i8], r: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| f64::from(c) * r.powi(k as i32))
            .sum()
    }

    #[test]
    fn rho_matches_the_three_cases() {
        let a = AffineMap1::new(0.5, 1.0).unwrap();
        let b = AffineMap1::new(0.5, -1.0).unwrap();
        let c = AffineMap1::new(0.4, 1.0).unwrap();
        assert_eq!(rho(&a, &b), 2.0);
        assert_eq!(rho(&b, &a), 2.0);
        assert_eq!(rho(&a, &c), f64::INFINITY);
        assert_eq!(rho(&a, &a), 0.0);
    }

    #[test]
    fn golden_family_has_a_length_three_witness() {
        // With r² + r = 1 the compositions -1 + r + r² and 1 - r - r² agree.
        let ifs = DiagonalIFS::pm_one_family(&[golden()]).unwrap();
        let witness = exact_overlap_search(&ifs, 3, 1_000_000).unwrap().unwrap();
        assert_eq!(witness.len, 3);
        let words = [witness.u1.clone(), witness.u2.clone()];
        assert!(words.contains(&Word::from_letters(&[0, 1, 1])));
        assert!(words.contains(&Word::from_letters(&[1, 0, 0])));
        // Cross-check: recomposing both words gives maps within tolerance.
        let m1 = ifs.compose(&witness.u1).unwrap();
        let m2 = ifs.compose(&witness.u2).unwrap();
        assert!((m1.coords[0].slope - m2.coords[0].slope).abs() <= 1e-12);
        assert!((m1.coords[0].offset - m2.coords[0].offset).abs() <= 1e-12);
    }

    #[test]
    fn dyadic_family_has_no_overlap_to_length_twelve() {
        // Offsets are distinct dyadic expansions, so both backends agree.
        let exact = DiagonalIFS::pm_one_family_exact(&[rat(1, 2)]).unwrap();
        assert!(exact_overlap_search(&exact, 12, 10_000_000)
            .unwrap()
            .is_none());
        let float = DiagonalIFS::pm_one_family(&[0.5]).unwrap();
        assert!(exact_overlap_search(&float, 12, 10_000_000)
            .unwrap()
            .is_none());
    }

    #[test]
    fn single_map_system_never_overlaps() {
        let ifs = DiagonalIFS::new(vec![map1(0.7, 0.3)]).unwrap();
        assert!(exact_overlap_search(&ifs, 6, 1_000).unwrap().is_none());
    }

    #[test]
    fn duplicated_map_overlaps_at_length_one() {
        let ifs = DiagonalIFS::new(vec![map1(0.5, 0.25), map1(0.5, 0.25)]).unwrap();
        let witness = exact_overlap_search(&ifs, 4, 1_000).unwrap().unwrap();
        assert_eq!(witness.len, 1);
        assert_eq!(witness.u1, Word::from_letters(&[0]));
        assert_eq!(witness.u2, Word::from_letters(&[1]));
    }

    #[test]
    fn unequal_length_words_are_compared() {
        // t/2 and t/4 with zero offsets: the word (1) equals the word (0,0).
        let ifs = DiagonalIFS::new_exact(vec![
            RationalDiagonalMap::new(vec![RationalMap1::new(rat(1, 2), rat(0, 1)).unwrap()])
                .unwrap(),
            RationalDiagonalMap::new(vec![RationalMap1::new(rat(1, 4), rat(0, 1)).unwrap()])
                .unwrap(),
        ])
        .unwrap();
        let witness = exact_overlap_search(&ifs, 3, 1_000).unwrap().unwrap();
        assert_eq!(witness.u1, Word::from_letters(&[0, 0]));
        assert_eq!(witness.u2, Word::from_letters(&[1]));
        assert_eq!(witness.len, 2);
    }

    #[test]
    fn overlap_search_budget_is_enforced() {
        let ifs = DiagonalIFS::pm_one_family(&[0.5]).unwrap();
        let err = exact_overlap_search(&ifs, 12, 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn overlap_search_rejects_higher_dimensions() {
        let ifs = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        assert!(matches!(
            exact_overlap_search(&ifs, 3, 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            separation_profile(&ifs, &[2], 1_000),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dyadic_profile_level_four_matches_hand_count() {
        // Closest length-4 offsets differ in the last sign digit: 2·(1/2)³.
        for ifs in [
            DiagonalIFS::pm_one_family(&[0.5]).unwrap(),
            DiagonalIFS::pm_one_family_exact(&[rat(1, 2)]).unwrap(),
        ] {
            let profile = separation_profile(&ifs, &[4], 1_000_000).unwrap();
            assert_eq!(profile.min_rho, vec![0.25]);
            assert!((profile.c_values[0] - 0.25f64.powf(0.25)).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_profile_reports_collapse_at_level_three() {
        let ifs = DiagonalIFS::pm_one_family(&[golden()]).unwrap();
        let profile = separation_profile(&ifs, &[2, 3], 1_000_000).unwrap();
        assert!(profile.c_values[0] > 0.0);
        assert_eq!(profile.c_values[1], 0.0);
    }

    #[test]
    fn distinct_slopes_give_infinite_separation() {
        let ifs = DiagonalIFS::new(vec![map1(0.5, 1.0), map1(0.4, 1.0)]).unwrap();
        let profile = separation_profile(&ifs, &[1], 1_000).unwrap();
        assert_eq!(profile.min_rho, vec![f64::INFINITY]);
        assert_eq!(profile.c_values, vec![f64::INFINITY]);
    }

    #[test]
    fn profile_rejects_empty_and_zero_levels() {
        let ifs = DiagonalIFS::pm_one_family(&[0.5]).unwrap();
        assert!(matches!(
            separation_profile(&ifs, &[], 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            separation_profile(&ifs, &[0], 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            separation_profile(&ifs, &[30], 1_000),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn template_recognizer_accepts_scaled_families() {
        assert!(matches_pm_one_template(
            &DiagonalIFS::pm_one_family(&[0.5]).unwrap()
        ));
        let scaled = DiagonalIFS::new(vec![map1(0.5, 0.25), map1(0.5, -0.25)]).unwrap();
        assert!(matches_pm_one_template(&scaled));
        let skewed = DiagonalIFS::new(vec![map1(0.5, 1.0), map1(0.4, -1.0)]).unwrap();
        assert!(!matches_pm_one_template(&skewed));
        assert!(!matches_pm_one_template(
            &DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap()
        ));
    }

    #[test]
    fn pm10_finds_the_golden_defining_polynomial() {
        let witness = pm10_root_check(golden(), 8, 1_000_000).unwrap().unwrap();
        assert_eq!(witness, vec![-1, 1, 1]);
    }

    #[test]
    fn pm10_reports_absence_for_one_half() {
        assert!(pm10_root_check(0.5, 12, 1_000_000).unwrap().is_none());
        // Exact backend, pushed past the meet-in-the-middle threshold.
        assert!(pm10_root_check_exact(&rat(1, 2), 18, 10_000_000)
            .unwrap()
            .is_none());
    }

    #[test]
    fn pm10_finds_cubic_witnesses() {
        // Root of x³ + x - 1, so -1 + r + r³ = 0.
        let witness = pm10_root_check(0.6823278038280194, 6, 10_000_000)
            .unwrap()
            .unwrap();
        assert_eq!(witness, vec![-1, 1, 0, 1]);
        // Root of x³ + x² + x - 1, so -1 + r + r² + r³ = 0.
        let witness = pm10_root_check(0.5436890126920764, 6, 10_000_000)
            .unwrap()
            .unwrap();
        assert_eq!(witness, vec![-1, 1, 1, 1]);
        assert!(eval_pm10(&witness, 0.5436890126920764).abs() <= PM10_ROOT_EPS);
    }

    #[test]
    fn pm10_meet_in_the_middle_path_reports_absence() {
        // 0.52 = 13/25 is rational, so no witness exists at any degree; a
        // 17-degree scan exercises the meet-in-the-middle path.
        assert!(pm10_root_check(0.52, 17, 10_000_000).unwrap().is_none());
    }

    #[test]
    fn mitm_agrees_with_dfs_at_small_degree() {
        let r = golden();
        let powers: Vec<f64> = (0..=2).map(|k| r.powi(k)).collect();
        let mut visited = 0u64;
        let found = mitm_degree(&powers, 2, PM10_ROOT_EPS, 1_000_000, &mut visited)
            .unwrap()
            .unwrap();
        assert_eq!(found, vec![-1, 1, 1]);
    }

    #[test]
    fn pm10_rejects_bad_inputs() {
        assert!(matches!(
            pm10_root_check(1.0, 4, 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            pm10_root_check(-0.5, 4, 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            pm10_root_check(0.5, 0, 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            pm10_root_check(0.5, 31, 1_000),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            pm10_root_check_exact(&rat(3, 2), 4, 1_000),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn pm10_witness_translates_to_an_overlap_pair() {
        // Coefficient c_k = (a_k - b_k)/2 with offsets a, b in {+1, -1} maps a
        // degree-k witness to two words of length k+1 whose maps agree.
        let r = golden();
        let witness = pm10_root_check(r, 8, 1_000_000).unwrap().unwrap();
        let ifs = DiagonalIFS::pm_one_family(&[r]).unwrap();
        let mut w1 = Vec::new();
        let mut w2 = Vec::new();
        for &c in &witness {
            let (l1, l2) = match c {
                1 => (0, 1),  // offsets (+1, -1)
                -1 => (1, 0), // offsets (-1, +1)
                _ => (0, 0),
            };
            w1.push(l1);
            w2.push(l2);
        }
        let m1 = ifs.compose(&Word::from_letters(&w1)).unwrap();
        let m2 = ifs.compose(&Word::from_letters(&w2)).unwrap();
        assert!((m1.coords[0].offset - m2.coords[0].offset).abs() <= 1e-12);
        let found = exact_overlap_search(&ifs, witness.len(), 1_000_000)
            .unwrap()
            .unwrap();
        assert!(found.len <= witness.len());
    }

    #[test]
    fn iterated_dyadic_family_stays_separated() {
        // No overlap to length 6 in the base system implies none to length 3
        // in the square of the system.
        let base = crate::ifs::WeightedIFS::uniform(DiagonalIFS::pm_one_family(&[0.5]).unwrap());
        assert!(
            exact_overlap_search(base.ifs(), 6, 1_000_000)
                .unwrap()
                .is_none()
        );
        let squared = crate::dimension::iterate_system(&base, 2, 1_000_000).unwrap();
        assert!(
            exact_overlap_search(squared.ifs(), 3, 1_000_000)
                .unwrap()
                .is_none()
        );
    }
}
