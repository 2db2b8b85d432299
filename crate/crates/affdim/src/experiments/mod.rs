//! Finite proxies for the self-affine measure and attractor, and the
//! numerical experiments built on them: entropy-rate curves against their
//! predicted limit, covering counts against the affinity dimension, slice
//! entropies of repeated self-convolutions, and the smoothing effect of
//! convolving a test measure with the proxy.
//!
//! Two proxies are available everywhere and each result records which one
//! produced it. The exact proxy places an atom at the image of the origin
//! under every word of a fixed depth; it is deterministic, merges duplicate
//! images, and its masses sum to 1 exactly when the rational backend is
//! active. The sampled proxy draws random words with a seeded generator, so
//! runs are reproducible bit for bit; it trades exactness for depth.

mod gridcount;

pub use gridcount::{
    box_count, box_count_series, box_dim_estimate, nonconformal_count, raster_cover_count,
    raster_cover_series, BoxCountSeries, BoxRow, RegressionEstimate, MAX_GRID_DIMENSION,
};

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{rational_to_f64, WeightedIFS, FLOAT_COINCIDENCE_EPS};
use crate::measures::{shannon_bits, DiscreteMeasure, PartitionSpec};

/// Seed used by every randomized experiment unless the caller picks one.
pub const DEFAULT_SEED: u64 = 17;

/// Slack allowed when asserting that sampled points land in the bounding
/// box; the box bound is exact in real arithmetic, so only accumulated
/// rounding from composing maps can push a point past it.
const BOX_SLACK: f64 = 1e-9;

/// Which proxy measure a curve was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveMode {
    /// Full word enumeration at each depth.
    Exact,
    /// One seeded empirical measure, evaluated at every depth.
    MonteCarlo,
}

/// Knobs for [`entropy_curve`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveOptions {
    pub mode: CurveMode,
    /// Number of sampled points (Monte Carlo mode only).
    pub sample_count: usize,
    /// Word depth for the sampled proxy; 0 means twice the deepest row,
    /// which is also the smallest depth accepted.
    pub word_depth: usize,
    pub seed: u64,
    /// Add the Miller-Madow bias correction (occupied - 1) / (2 N ln 2) to
    /// sampled entropies. Off by default: the correction helps means but
    /// muddies comparisons against exact rows.
    pub miller_madow: bool,
    /// Cap on enumerated words and convolution products.
    pub budget: u64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            mode: CurveMode::Exact,
            sample_count: 100_000,
            word_depth: 0,
            seed: DEFAULT_SEED,
            miller_madow: false,
            budget: crate::ifs::DEFAULT_BUDGET,
        }
    }
}

/// One depth of an entropy curve: `entropy` is measured against the
/// anisotropic partition at step `n`, and `rate` is `entropy / n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: i64,
    pub entropy: f64,
    pub rate: f64,
}

/// Entropy rates of a proxy measure across partition steps, with the
/// predicted limiting rate for comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub mode: CurveMode,
    pub rows: Vec<CurveRow>,
    /// Predicted limit of `rate`: the non-conformality constant of the
    /// system at its Lyapunov dimension (clamped to the ambient dimension).
    pub target: Option<f64>,
}

/// Per-coordinate occupancy fractions of slice entropies of a repeated
/// self-convolution; see [`slice_entropy_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    /// Refinement rates per coordinate, in coordinate order.
    pub chi: Vec<f64>,
    pub k: usize,
    pub mstep: i64,
    pub n: i64,
    pub eps: f64,
    /// Fraction of steps q in [1, n] whose slice entropy rate along
    /// coordinate j exceeds `chi[j] - eps`.
    pub fractions: Vec<f64>,
    pub rows: Vec<SliceRow>,
}

/// Slice entropy rates at one step: `values[j]` is the conditional entropy
/// per level gained along coordinate j between steps q and q + mstep, given
/// full resolution elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub q: i64,
    pub values: Vec<f64>,
}

/// Entropy rates before and after smoothing a test measure by the word
/// proxy; see [`entropy_increase_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyIncreaseReport {
    /// Predicted limiting rate for the system itself.
    pub kappa: f64,
    /// Entropy rate of the convolved measure at step n.
    pub smoothed_rate: f64,
    /// `smoothed_rate - kappa`: positive values witness entropy above the
    /// system's own rate.
    pub excess: f64,
    /// Entropy rate of the unconvolved test measure at step n.
    pub theta_rate: f64,
}

/// Weights converted to exact rationals and normalized so they sum to 1
/// exactly. Every finite f64 is a dyadic rational, so the conversion itself
/// is lossless; the normalization absorbs the float sum's last-ulp slack.
fn exact_weights(w: &WeightedIFS) -> Vec<BigRational> {
    let qs: Vec<BigRational> = w
        .p()
        .iter()
        .map(|&p| BigRational::from_float(p).expect("weights are finite"))
        .collect();
    let total = qs
        .iter()
        .fold(BigRational::zero(), |acc, q| acc + q.clone());
    qs.into_iter().map(|q| q / total.clone()).collect()
}

fn float_word_atoms(w: &WeightedIFS, n: usize) -> Vec<(Vec<f64>, f64)> {
    let ifs = w.ifs();
    let d = ifs.d();
    let mut out = Vec::new();
    let mut slopes = vec![1.0f64; d];
    let mut offsets = vec![0.0f64; d];
    fn rec(
        w: &WeightedIFS,
        depth_left: usize,
        slopes: &mut Vec<f64>,
        offsets: &mut Vec<f64>,
        mass: f64,
        out: &mut Vec<(Vec<f64>, f64)>,
    ) {
        if depth_left == 0 {
            out.push((offsets.clone(), mass));
            return;
        }
        for (i, &p) in w.p().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let map = w.ifs().map(i);
            let saved_s = slopes.clone();
            let saved_o = offsets.clone();
            for (j, c) in map.coords.iter().enumerate() {
                offsets[j] = saved_s[j].mul_add(c.offset, saved_o[j]);
                slopes[j] = saved_s[j] * c.slope;
            }
            rec(w, depth_left - 1, slopes, offsets, mass * p, out);
            *slopes = saved_s;
            *offsets = saved_o;
        }
    }
    rec(w, n, &mut slopes, &mut offsets, 1.0, &mut out);
    out
}

fn exact_word_atoms(w: &WeightedIFS, n: usize) -> Vec<(Vec<f64>, f64)> {
    let maps = w.ifs().exact_maps().expect("caller checked has_exact");
    let d = w.d();
    let weights = exact_weights(w);
    let mut acc: BTreeMap<Vec<BigRational>, BigRational> = BTreeMap::new();
    let mut slopes = vec![BigRational::from_integer(1.into()); d];
    let mut offsets = vec![BigRational::zero(); d];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        maps: &[crate::ifs::RationalDiagonalMap],
        weights: &[BigRational],
        depth_left: usize,
        slopes: &mut Vec<BigRational>,
        offsets: &mut Vec<BigRational>,
        mass: &BigRational,
        acc: &mut BTreeMap<Vec<BigRational>, BigRational>,
    ) {
        if depth_left == 0 {
            let entry = acc.entry(offsets.clone()).or_insert_with(BigRational::zero);
            *entry = entry.clone() + mass.clone();
            return;
        }
        for (map, p) in maps.iter().zip(weights) {
            if p.is_zero() {
                continue;
            }
            let saved_s = slopes.clone();
            let saved_o = offsets.clone();
            for (j, c) in map.coords.iter().enumerate() {
                offsets[j] = &saved_s[j] * &c.offset + &saved_o[j];
                slopes[j] = &saved_s[j] * &c.slope;
            }
            let mass2 = mass * p;
            rec(maps, weights, depth_left - 1, slopes, offsets, &mass2, acc);
            *slopes = saved_s;
            *offsets = saved_o;
        }
    }
    rec(
        maps,
        &weights,
        n,
        &mut slopes,
        &mut offsets,
        &BigRational::from_integer(1.into()),
        &mut acc,
    );
    debug_assert!(
        acc.values().fold(BigRational::zero(), |a, m| a + m.clone())
            == BigRational::from_integer(1.into()),
        "exact masses must sum to 1"
    );
    acc.into_iter()
        .map(|(point, mass)| {
            (
                point.iter().map(rational_to_f64).collect(),
                rational_to_f64(&mass),
            )
        })
        .collect()
}

/// Merge float atoms whose coordinates all agree with the first atom of
/// their run to within the coincidence threshold. Points produced by
/// genuinely identical compositions match bit for bit; the tolerance only
/// has to absorb different rounding paths to the same real point.
fn merge_float_atoms(d: usize, mut atoms: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    atoms.sort_unstable_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(atoms.len());
    for (point, mass) in atoms {
        if let Some(last) = merged.last_mut() {
            if (0..d).all(|j| (point[j] - last.0[j]).abs() <= FLOAT_COINCIDENCE_EPS) {
                last.1 += mass;
                continue;
            }
        }
        merged.push((point, mass));
    }
    merged
}

/// The word proxy at depth n: an atom at the image of the origin under each
/// of the |Λ|^n words, weighted by the word's probability. Duplicate images
/// merge — exactly under the rational backend, and up to the coincidence
/// threshold in float, so overlapping systems produce fewer than |Λ|^n
/// atoms. Depth must be positive and |Λ|^n may not exceed the budget.
pub fn exact_word_measure(w: &WeightedIFS, n: usize, budget: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidInput("word depth must be at least 1".into()));
    }
    let words = (w.ifs().map_count() as u128).saturating_pow(n as u32);
    if words > budget as u128 {
        return Err(Error::BudgetExceeded(format!(
            "depth {n} needs {words} words, over the budget of {budget}"
        )));
    }
    let atoms = if w.ifs().has_exact() {
        exact_word_atoms(w, n)
    } else {
        merge_float_atoms(w.d(), float_word_atoms(w, n))
    };
    DiscreteMeasure::new(w.d(), atoms)
}

fn draw_letter(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        cum += pi;
        last = i;
        if u < cum {
            return i;
        }
    }
    // Float slack can leave cum marginally below 1; charge it to the last
    // positive-weight letter.
    last
}

/// The sampled proxy: `count` independent draws of a depth-n word, each
/// contributing mass 1/count at its image of the origin. The generator is
/// seeded, so equal arguments give bit-identical measures. Every sampled
/// point is checked against the bounding box; a point outside it means the
/// arithmetic broke and is reported as a property violation.
pub fn sample_measure(
    w: &WeightedIFS,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidInput("word depth must be at least 1".into()));
    }
    if count == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    let ifs = w.ifs();
    let d = ifs.d();
    let boxes = ifs.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass = 1.0 / count as f64;
    let mut letters = vec![0usize; n];
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        for slot in letters.iter_mut() {
            *slot = draw_letter(&mut rng, w.p());
        }
        // The word acts as the composition of its letters, so the origin is
        // pushed through the letters back to front.
        let mut x = vec![0.0f64; d];
        for &i in letters.iter().rev() {
            let map = ifs.map(i);
            for (j, c) in map.coords.iter().enumerate() {
                x[j] = c.slope.mul_add(x[j], c.offset);
            }
        }
        for (j, b) in boxes.iter().enumerate() {
            if x[j] < b[0] - BOX_SLACK || x[j] > b[1] + BOX_SLACK {
                return Err(Error::PropertyViolation(format!(
                    "sampled point coordinate {} = {} escapes the bounding box [{}, {}]",
                    j, x[j], b[0], b[1]
                )));
            }
        }
        atoms.push((x.clone(), mass));
    }
    DiscreteMeasure::new(d, atoms)
}

/// Entropy against the step-`n` partition together with the number of
/// occupied cells.
fn entropy_and_occupancy(
    m: &DiscreteMeasure,
    chi: &[f64],
    n: i64,
) -> Result<(f64, usize)> {
    let spec = PartitionSpec::new(chi.to_vec(), n)?;
    let mut cells: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for atom in m.atoms() {
        let cell = crate::measures::cell_of(&atom.point, &spec)?;
        *cells.entry(cell.indices).or_insert(0.0) += atom.mass;
    }
    let occupied = cells.len();
    Ok((shannon_bits(cells.into_values()), occupied))
}

/// Predicted limiting entropy rate of the system: the non-conformality
/// constant evaluated at the Lyapunov dimension clamped to the ambient
/// dimension.
fn predicted_rate(w: &WeightedIFS) -> Result<f64> {
    let mut chi = w.lyapunov_exponents();
    chi.sort_unstable_by(f64::total_cmp);
    let dim_l = crate::dimension::lyapunov_dimension(w);
    crate::dimension::kappa_value(&chi, dim_l.value.min(w.d() as f64))
}

/// Entropy of a proxy measure against the anisotropic partition at every
/// step up to `n_max`, normalized by the step. In exact mode each row uses
/// the word proxy at its own depth; in Monte Carlo mode one sampled proxy
/// (word depth at least twice `n_max`, so word truncation error stays below
/// cell size) serves every row.
pub fn entropy_curve(
    w: &WeightedIFS,
    n_max: usize,
    opts: &CurveOptions,
) -> Result<EntropyCurve> {
    if n_max == 0 {
        return Err(Error::InvalidInput(
            "curve needs at least one step".into(),
        ));
    }
    let chi = w.lyapunov_exponents();
    let target = predicted_rate(w)?;
    let sampled = match opts.mode {
        CurveMode::Exact => None,
        CurveMode::MonteCarlo => {
            let depth = if opts.word_depth == 0 {
                2 * n_max
            } else {
                opts.word_depth
            };
            if depth < 2 * n_max {
                return Err(Error::InvalidInput(format!(
                    "sampled word depth {depth} is shallower than twice the deepest step {n_max}"
                )));
            }
            Some(sample_measure(w, depth, opts.sample_count, opts.seed)?)
        }
    };
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let exact_proxy = match opts.mode {
            CurveMode::Exact => Some(exact_word_measure(w, n, opts.budget)?),
            CurveMode::MonteCarlo => None,
        };
        let proxy = exact_proxy.as_ref().or(sampled.as_ref()).unwrap();
        let (mut entropy, occupied) = entropy_and_occupancy(proxy, &chi, n as i64)?;
        if opts.miller_madow && opts.mode == CurveMode::MonteCarlo {
            entropy += (occupied.saturating_sub(1)) as f64
                / (2.0 * opts.sample_count as f64 * std::f64::consts::LN_2);
        }
        rows.push(CurveRow {
            n: n as i64,
            entropy,
            rate: entropy / n as f64,
        });
    }
    Ok(EntropyCurve {
        mode: opts.mode,
        rows,
        target: Some(target),
    })
}

/// Slice entropies of the k-fold self-convolution: for each step q in
/// [1, n] and coordinate j, the conditional entropy per level gained along
/// coordinate j over `mstep` further levels, given step-q resolution there
/// and full final resolution everywhere else. The report records, per
/// coordinate, the fraction of steps whose rate clears `chi[j] - eps` — the
/// saturation diagnostic.
pub fn slice_entropy_experiment(
    theta: &DiscreteMeasure,
    chi: &[f64],
    k: usize,
    mstep: i64,
    n: i64,
    eps: f64,
    budget: u64,
) -> Result<SliceReport> {
    if chi.len() != theta.d() {
        return Err(Error::InvalidInput(format!(
            "got {} rates for a measure on R^{}",
            chi.len(),
            theta.d()
        )));
    }
    if k == 0 || n < 1 || mstep < 1 {
        return Err(Error::InvalidInput(
            "need k >= 1, n >= 1 and mstep >= 1".into(),
        ));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidInput(format!("bad threshold slack {eps}")));
    }
    let conv = theta.self_convolve(k, budget)?;
    let d = theta.d();
    let mut rows = Vec::with_capacity(n as usize);
    for q in 1..=n {
        let mut values = Vec::with_capacity(d);
        for j in 0..d {
            let raw =
                crate::measures::cond_entropy_with_projection(&conv, j, q, mstep, chi)?;
            values.push(raw / mstep as f64);
        }
        rows.push(SliceRow { q, values });
    }
    let fractions = (0..d)
        .map(|j| {
            rows.iter().filter(|r| r.values[j] > chi[j] - eps).count() as f64 / n as f64
        })
        .collect();
    Ok(SliceReport {
        chi: chi.to_vec(),
        k,
        mstep,
        n,
        eps,
        fractions,
        rows,
    })
}

/// Entropy rate of `theta` convolved with the depth-`proxy_depth` word
/// proxy, measured at partition step n and compared against the system's
/// predicted rate. Smoothing by the proxy can only add entropy; how much of
/// the gap to the predicted rate it closes is what the experiment probes.
pub fn entropy_increase_experiment(
    w: &WeightedIFS,
    theta: &DiscreteMeasure,
    n: i64,
    proxy_depth: usize,
    budget: u64,
) -> Result<EntropyIncreaseReport> {
    if theta.d() != w.d() {
        return Err(Error::InvalidInput(format!(
            "test measure lives on R^{} but the system acts on R^{}",
            theta.d(),
            w.d()
        )));
    }
    if n < 1 {
        return Err(Error::InvalidInput("partition step must be at least 1".into()));
    }
    let chi = w.lyapunov_exponents();
    let kappa = predicted_rate(w)?;
    let proxy = exact_word_measure(w, proxy_depth, budget)?;
    let smoothed = theta.convolve(&proxy, budget)?;
    let (h_smoothed, _) = entropy_and_occupancy(&smoothed, &chi, n)?;
    let (h_theta, _) = entropy_and_occupancy(theta, &chi, n)?;
    let smoothed_rate = h_smoothed / n as f64;
    Ok(EntropyIncreaseReport {
        kappa,
        smoothed_rate,
        excess: smoothed_rate - kappa,
        theta_rate: h_theta / n as f64,
    })
}
