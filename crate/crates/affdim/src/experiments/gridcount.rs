//! Covering counts on dyadic grids: how many grid cells does the attractor
//! touch at a given resolution, and what growth rate does that suggest?

// Index math here walks several parallel fixed-size arrays (index vector,
// bounds, strides) in lockstep; explicit indices read better than a zip of
// four iterators.
#![allow(clippy::needless_range_loop)]
//!
//! The naive approach — enumerate all words of depth n and stamp each image —
//! is exponential in depth and hopeless for slowly contracting systems (slope
//! 0.9 needs depth ~79 to reach cell size 2^-12, i.e. 2^79 words). The engine
//! here explores the word tree depth-first and cuts a subtree as soon as the
//! cells its root's image can reach are all marked already: every descendant
//! image is contained in the ancestor image, so the subtree cannot mark
//! anything new and the final count is exactly the naive one. On attractors
//! that fill regions of the grid this collapses the tree to a manageable
//! frontier.
//!
//! Cells are tracked in a flat bitmap over the index ranges the bounding box
//! allows, with a second bitmap marking saturated 64-cell words so that
//! "is this whole range marked?" can scan 4096 cells per u64 read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{DiagonalIFS, WeightedIFS};

/// Largest ambient dimension the covering engine accepts; the index
/// arithmetic uses fixed-size arrays of this width to keep the hot recursion
/// allocation-free.
pub const MAX_GRID_DIMENSION: usize = 8;

/// Cap on bitmap size: 2^33 cells is one gigabyte of bits.
const GRID_BIT_CAP: u128 = 1 << 33;

/// Diagonal probes attempted before a full range sweep; they reject
/// almost-full ranges cheaply.
const DIAGONAL_PROBES: u64 = 32;

/// Coarsest level the raster pyramid starts from.
const RASTER_SEED_LEVEL: usize = 4;

/// Sweep cap while settling the seed level, which starts from the full
/// bounding box and must contract all the way onto the attractor.
const RASTER_SEED_SETTLE: usize = 96;

/// Sweep cap per refinement level; the upsampled set is already within a
/// couple of cells of its fixed point, so this is headroom, not a tuning
/// knob.
const RASTER_STEP_SETTLE: usize = 24;

/// Guard below which `x * 2^m` floors reliably into an `i64`.
const INDEX_MAGNITUDE_CAP: f64 = 4.0e18;

/// One resolution step of a covering count: `count` cells of the grid were
/// touched at level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRow {
    pub n: usize,
    pub count: u64,
}

/// Covering counts across a range of resolutions, plus the growth-rate
/// estimate over the default regression window (levels ≥ 4) when at least
/// three such rows exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    pub rows: Vec<BoxRow>,
    pub slope_estimate: Option<f64>,
}

/// Least-squares fit of log2(count) against level over a window of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionEstimate {
    /// Fitted slope in bits per level — the box-dimension estimate.
    pub slope: f64,
    /// Fitted value at level 0.
    pub intercept: f64,
    /// Largest absolute deviation of log2(count) from the fitted line.
    pub max_abs_residual: f64,
    /// Number of rows inside the window.
    pub rows_used: usize,
}

/// Flat bitmap over the cell-index box `[lo_0, hi_0] x ... x [lo_{d-1},
/// hi_{d-1}]`, with a saturation summary (`full[w]` set iff `bits[w]` is all
/// ones) and a running popcount.
struct Grid {
    d: usize,
    lo: [i64; MAX_GRID_DIMENSION],
    hi: [i64; MAX_GRID_DIMENSION],
    strides: [u64; MAX_GRID_DIMENSION],
    bits: Vec<u64>,
    full: Vec<u64>,
    marked: u64,
}

/// Mask with bits `0..=e` set.
fn mask_to(e: u64) -> u64 {
    if e >= 63 {
        u64::MAX
    } else {
        (1u64 << (e + 1)) - 1
    }
}

impl Grid {
    fn new(lo: &[i64], hi: &[i64]) -> Result<Grid> {
        let d = lo.len();
        let mut total: u128 = 1;
        for j in 0..d {
            total = total.saturating_mul((hi[j] - lo[j] + 1) as u128);
            if total > GRID_BIT_CAP {
                return Err(Error::BudgetExceeded(format!(
                    "covering grid needs more than {GRID_BIT_CAP} cells; lower the level"
                )));
            }
        }
        let total = total as u64;
        let mut strides = [0u64; MAX_GRID_DIMENSION];
        strides[d - 1] = 1;
        for j in (0..d - 1).rev() {
            strides[j] = strides[j + 1] * (hi[j + 1] - lo[j + 1] + 1) as u64;
        }
        let words = total.div_ceil(64) as usize;
        let mut glo = [0i64; MAX_GRID_DIMENSION];
        let mut ghi = [0i64; MAX_GRID_DIMENSION];
        glo[..d].copy_from_slice(lo);
        ghi[..d].copy_from_slice(hi);
        Ok(Grid {
            d,
            lo: glo,
            hi: ghi,
            strides,
            bits: vec![0u64; words],
            full: vec![0u64; words.div_ceil(64)],
            marked: 0,
        })
    }

    fn flat(&self, idx: &[i64]) -> u64 {
        let mut pos = 0u64;
        for j in 0..self.d {
            pos += (idx[j] - self.lo[j]) as u64 * self.strides[j];
        }
        pos
    }

    fn get(&self, pos: u64) -> bool {
        self.bits[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    fn set_word(&mut self, w: usize, mask: u64) {
        let before = self.bits[w];
        let after = before | mask;
        if after != before {
            self.marked += (after ^ before).count_ones() as u64;
            self.bits[w] = after;
            if after == u64::MAX {
                self.full[w / 64] |= 1 << (w % 64);
            }
        }
    }

    /// Set the inclusive bit range `[s, e]`.
    fn set_span(&mut self, s: u64, e: u64) {
        let (ws, we) = ((s / 64) as usize, (e / 64) as usize);
        if ws == we {
            self.set_word(ws, (u64::MAX << (s % 64)) & mask_to(e % 64));
            return;
        }
        self.set_word(ws, u64::MAX << (s % 64));
        for w in ws + 1..we {
            self.set_word(w, u64::MAX);
        }
        self.set_word(we, mask_to(e % 64));
    }

    /// Are the words with inclusive indices `[a, b]` all saturated?
    fn words_full(&self, a: u64, b: u64) -> bool {
        if a > b {
            return true;
        }
        let (ca, cb) = ((a / 64) as usize, (b / 64) as usize);
        if ca == cb {
            let m = (u64::MAX << (a % 64)) & mask_to(b % 64);
            return self.full[ca] & m == m;
        }
        let m = u64::MAX << (a % 64);
        if self.full[ca] & m != m {
            return false;
        }
        if self.full[ca + 1..cb].iter().any(|&c| c != u64::MAX) {
            return false;
        }
        let m = mask_to(b % 64);
        self.full[cb] & m == m
    }

    /// Is the inclusive bit range `[s, e]` fully marked?
    fn span_full(&self, s: u64, e: u64) -> bool {
        let (ws, we) = (s / 64, e / 64);
        if ws == we {
            let m = (u64::MAX << (s % 64)) & mask_to(e % 64);
            return self.bits[ws as usize] & m == m;
        }
        let m = u64::MAX << (s % 64);
        if self.bits[ws as usize] & m != m {
            return false;
        }
        let m = mask_to(e % 64);
        if self.bits[we as usize] & m != m {
            return false;
        }
        self.words_full(ws + 1, we - 1)
    }

    /// Mark every cell in the inclusive index box `[a, b]`.
    fn mark_range(&mut self, a: &[i64], b: &[i64]) {
        let d = self.d;
        let mut idx = [0i64; MAX_GRID_DIMENSION];
        idx[..d].copy_from_slice(a);
        loop {
            let mut base = 0u64;
            for j in 0..d - 1 {
                base += (idx[j] - self.lo[j]) as u64 * self.strides[j];
            }
            let s = base + (a[d - 1] - self.lo[d - 1]) as u64;
            let e = base + (b[d - 1] - self.lo[d - 1]) as u64;
            self.set_span(s, e);
            let mut j = d as isize - 2;
            while j >= 0 {
                idx[j as usize] += 1;
                if idx[j as usize] <= b[j as usize] {
                    break;
                }
                idx[j as usize] = a[j as usize];
                j -= 1;
            }
            if j < 0 {
                break;
            }
        }
    }

    /// Visit every maximal run of set bits inside the inclusive flat span
    /// `[s, e]` as `(first, last)` flat positions. Runs are split at 64-bit
    /// word boundaries; the extra splits only cost duplicate-adjacent work
    /// downstream, never correctness.
    fn for_each_run(&self, s: u64, e: u64, f: &mut impl FnMut(u64, u64)) {
        let (ws, we) = (s / 64, e / 64);
        for w in ws..=we {
            let mut word = self.bits[w as usize];
            if w == ws {
                word &= u64::MAX << (s % 64);
            }
            if w == we {
                word &= mask_to(e % 64);
            }
            while word != 0 {
                let start = word.trailing_zeros() as u64;
                let len = (!(word >> start)).trailing_zeros() as u64;
                f(w * 64 + start, w * 64 + start + len - 1);
                if start + len >= 64 {
                    break;
                }
                word &= !(((1u64 << len) - 1) << start);
            }
        }
    }

    /// Is every cell in the inclusive index box `[a, b]` marked? Probes the
    /// corners and a diagonal first so that ranges with holes bail out before
    /// the row-by-row sweep.
    fn range_full(&self, a: &[i64], b: &[i64]) -> bool {
        let d = self.d;
        for corner in 0..(1u32 << d) {
            let mut idx = [0i64; MAX_GRID_DIMENSION];
            for j in 0..d {
                idx[j] = if corner >> j & 1 == 1 { b[j] } else { a[j] };
            }
            if !self.get(self.flat(&idx[..d])) {
                return false;
            }
        }
        for t in 1..DIAGONAL_PROBES {
            let mut idx = [0i64; MAX_GRID_DIMENSION];
            for j in 0..d {
                idx[j] = a[j] + ((b[j] - a[j]) as u64 * t / DIAGONAL_PROBES) as i64;
            }
            if !self.get(self.flat(&idx[..d])) {
                return false;
            }
        }
        let mut idx = [0i64; MAX_GRID_DIMENSION];
        idx[..d].copy_from_slice(a);
        loop {
            let mut base = 0u64;
            for j in 0..d - 1 {
                base += (idx[j] - self.lo[j]) as u64 * self.strides[j];
            }
            let s = base + (a[d - 1] - self.lo[d - 1]) as u64;
            let e = base + (b[d - 1] - self.lo[d - 1]) as u64;
            if !self.span_full(s, e) {
                return false;
            }
            let mut j = d as isize - 2;
            while j >= 0 {
                idx[j as usize] += 1;
                if idx[j as usize] <= b[j as usize] {
                    break;
                }
                idx[j as usize] = a[j as usize];
                j -= 1;
            }
            if j < 0 {
                break;
            }
        }
        true
    }
}

/// Depth-first cover of the attractor by grid cells at fixed per-coordinate
/// levels. A branch stops (and stamps its image box) once the image is no
/// wider than one cell in every coordinate; it is cut without descending when
/// its image's cell range is already fully marked, which cannot change the
/// final count because descendant images nest inside it.
struct Cover<'a> {
    ifs: &'a DiagonalIFS,
    d: usize,
    box_lo: [f64; MAX_GRID_DIMENSION],
    box_hi: [f64; MAX_GRID_DIMENSION],
    scale: [f64; MAX_GRID_DIMENSION],
    thresh: [f64; MAX_GRID_DIMENSION],
    grid: Grid,
    budget: u64,
    visited: u64,
}

impl Cover<'_> {
    fn node(
        &mut self,
        slopes: &[f64; MAX_GRID_DIMENSION],
        offsets: &[f64; MAX_GRID_DIMENSION],
    ) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::BudgetExceeded(format!(
                "covering walk visited more than {} nodes",
                self.budget
            )));
        }
        let mut a = [0i64; MAX_GRID_DIMENSION];
        let mut b = [0i64; MAX_GRID_DIMENSION];
        let mut stop = true;
        for j in 0..self.d {
            let p = slopes[j].mul_add(self.box_lo[j], offsets[j]);
            let q = slopes[j].mul_add(self.box_hi[j], offsets[j]);
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            // The image sits inside the bounding box, so after clamping the
            // floors stay inside the grid; the clamp only absorbs float slop
            // at the boundary.
            a[j] = ((lo * self.scale[j]).floor().max(self.grid.lo[j] as f64)) as i64;
            b[j] = ((hi * self.scale[j]).floor().min(self.grid.hi[j] as f64)) as i64;
            if a[j] > b[j] {
                return Ok(());
            }
            if slopes[j].abs() > self.thresh[j] {
                stop = false;
            }
        }
        if stop {
            self.grid.mark_range(&a[..self.d], &b[..self.d]);
            return Ok(());
        }
        if self.grid.range_full(&a[..self.d], &b[..self.d]) {
            return Ok(());
        }
        for i in 0..self.ifs.map_count() {
            let map = self.ifs.map(i);
            let mut s2 = [0.0; MAX_GRID_DIMENSION];
            let mut o2 = [0.0; MAX_GRID_DIMENSION];
            for j in 0..self.d {
                let c = &map.coords[j];
                o2[j] = slopes[j].mul_add(c.offset, offsets[j]);
                s2[j] = slopes[j] * c.slope;
            }
            self.node(&s2, &o2)?;
        }
        Ok(())
    }
}

/// Floor of `x * 2^level` as a grid index, guarded against magnitudes an
/// `i64` cannot hold.
fn grid_index(x: f64, scale: f64) -> Result<i64> {
    let v = (x * scale).floor();
    if !v.is_finite() || v.abs() >= INDEX_MAGNITUDE_CAP {
        return Err(Error::InvalidInput(format!(
            "grid index {v:e} out of range; lower the level"
        )));
    }
    Ok(v as i64)
}

/// Count the cells touched by the attractor on the anisotropic grid whose
/// cell at index k_j spans `[k_j/2^{m_j}, (k_j+1)/2^{m_j})` per coordinate.
fn cover_count(ifs: &DiagonalIFS, levels: &[i64], budget: u64) -> Result<u64> {
    let d = ifs.d();
    if d > MAX_GRID_DIMENSION {
        return Err(Error::InvalidInput(format!(
            "covering counts support dimension at most {MAX_GRID_DIMENSION}, got {d}"
        )));
    }
    let boxes = ifs.bounding_box();
    let mut cover = Cover {
        ifs,
        d,
        box_lo: [0.0; MAX_GRID_DIMENSION],
        box_hi: [0.0; MAX_GRID_DIMENSION],
        scale: [0.0; MAX_GRID_DIMENSION],
        thresh: [0.0; MAX_GRID_DIMENSION],
        grid: Grid::new(&[0], &[0])?,
        budget,
        visited: 0,
    };
    let mut lo_idx = vec![0i64; d];
    let mut hi_idx = vec![0i64; d];
    for j in 0..d {
        cover.box_lo[j] = boxes[j][0];
        cover.box_hi[j] = boxes[j][1];
        cover.scale[j] = (levels[j] as f64).exp2();
        cover.thresh[j] = (-levels[j] as f64).exp2();
        lo_idx[j] = grid_index(boxes[j][0], cover.scale[j])?;
        hi_idx[j] = grid_index(boxes[j][1], cover.scale[j])?;
    }
    cover.grid = Grid::new(&lo_idx, &hi_idx)?;
    let slopes = {
        let mut s = [0.0; MAX_GRID_DIMENSION];
        s[..d].fill(1.0);
        s
    };
    let offsets = [0.0; MAX_GRID_DIMENSION];
    cover.node(&slopes, &offsets)?;
    Ok(cover.grid.marked)
}

/// Number of level-n dyadic grid cells (side 2^-n in every coordinate)
/// touched by the attractor. Word images count toward the cover, so cells
/// touched only by the construction's intermediate hulls may inflate the
/// count by a bounded boundary term; the growth rate is unaffected.
pub fn box_count(ifs: &DiagonalIFS, n: usize, budget: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "covering level must be at least 1".into(),
        ));
    }
    cover_count(ifs, &vec![n as i64; ifs.d()], budget)
}

/// Number of cells of the anisotropic partition at step n (coordinate j is
/// refined to level floor(chi_j * n), with chi the Lyapunov exponents of the
/// weights) touched by the attractor. In one dimension this equals
/// `box_count` at level floor(chi_1 * n) exactly: the stop rule and the grid
/// coincide.
pub fn nonconformal_count(w: &WeightedIFS, n: usize, budget: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "covering step must be at least 1".into(),
        ));
    }
    let chi = w.lyapunov_exponents();
    let levels: Vec<i64> = chi.iter().map(|c| (c * n as f64).floor() as i64).collect();
    cover_count(w.ifs(), &levels, budget)
}

/// Covering counts for every level in `[n_min, n_max]`, with the weak
/// monotonicity check (counts never drop as the grid refines) enforced and a
/// growth-rate estimate over the rows with level ≥ 4 when at least three
/// exist. The budget applies to each level's walk separately.
pub fn box_count_series(
    ifs: &DiagonalIFS,
    n_min: usize,
    n_max: usize,
    budget: u64,
) -> Result<BoxCountSeries> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidInput(format!(
            "bad level range [{n_min}, {n_max}]"
        )));
    }
    let mut rows = Vec::with_capacity(n_max - n_min + 1);
    for n in n_min..=n_max {
        let count = box_count(ifs, n, budget)?;
        if let Some(&BoxRow { count: prev, .. }) = rows.last() {
            if count < prev {
                return Err(Error::PropertyViolation(format!(
                    "covering count dropped from {prev} to {count} at level {n}"
                )));
            }
        }
        rows.push(BoxRow { n, count });
    }
    let mut series = BoxCountSeries {
        rows,
        slope_estimate: None,
    };
    let window_lo = n_min.max(4);
    if n_max >= window_lo && n_max - window_lo >= 2 {
        series.slope_estimate = Some(box_dim_estimate(&series, (window_lo, n_max))?.slope);
    }
    Ok(series)
}

/// The raster pyramid: a covering-count engine for systems the word walk
/// cannot handle.
///
/// When sibling images barely overlap, the walk above amortizes: marked
/// regions saturate and whole subtrees are cut. When the maps overlap
/// heavily (slopes near 1), every region is revisited by exponentially many
/// branches before it saturates and the walk's cost explodes — slope 0.9
/// at level 12 is out of reach by orders of magnitude.
///
/// This engine works on the cell set directly. A sweep replaces the
/// occupied set by the rasterized images of its cells under every map; a
/// set containing every attractor-touching cell keeps containing them, and
/// spurious cells die off geometrically because their images walk toward
/// the attractor. The pyramid starts from the full bounding box at a coarse
/// level, settles, then alternates upsampling (each cell's 2^d children)
/// with a few settling sweeps per level. The cost per level is proportional
/// to the occupied-cell count, not to the word tree.
///
/// The settled set is the attractor's cells plus a collar of width a few
/// cells (outward rasterization rounding, amplified by 1/(1−max|r|)), so
/// counts are a constant-factor overestimate with the same growth rate —
/// matching the walk's own stop-box dilation. Use `box_count` where it is
/// affordable; use this for strongly overlapping systems.
struct Raster<'a> {
    ifs: &'a DiagonalIFS,
    d: usize,
    budget: u64,
    processed: u64,
}

impl Raster<'_> {
    fn charge(&mut self, cells: u64) -> Result<()> {
        self.processed = self.processed.saturating_add(cells);
        if self.processed > self.budget {
            return Err(Error::BudgetExceeded(format!(
                "raster pyramid processed more than {} cells",
                self.budget
            )));
        }
        Ok(())
    }

    /// Grid over the bounding box at one isotropic level.
    fn level_grid(&self, n: usize) -> Result<Grid> {
        let scale = (n as f64).exp2();
        let boxes = self.ifs.bounding_box();
        let mut lo = vec![0i64; self.d];
        let mut hi = vec![0i64; self.d];
        for j in 0..self.d {
            lo[j] = grid_index(boxes[j][0], scale)?;
            hi[j] = grid_index(boxes[j][1], scale)?;
        }
        Grid::new(&lo, &hi)
    }

    /// One replace-sweep: rasterize the images of `src`'s occupied cells,
    /// processed as runs along the contiguous axis, into a fresh grid.
    fn sweep(&mut self, src: &Grid, n: usize) -> Result<Grid> {
        self.charge(src.marked)?;
        let mut dst = Grid::new(&src.lo[..self.d], &src.hi[..self.d])?;
        let d = self.d;
        let scale = (n as f64).exp2();
        let inv = (-(n as f64)).exp2();
        let mut idx = [0i64; MAX_GRID_DIMENSION];
        idx[..d].copy_from_slice(&src.lo[..d]);
        loop {
            let mut base = 0u64;
            for j in 0..d - 1 {
                base += (idx[j] - src.lo[j]) as u64 * src.strides[j];
            }
            let width = (src.hi[d - 1] - src.lo[d - 1]) as u64;
            src.for_each_run(base, base + width, &mut |first, last| {
                let s_idx = src.lo[d - 1] + (first - base) as i64;
                let e_idx = src.lo[d - 1] + (last - base) as i64;
                for i in 0..self.ifs.map_count() {
                    let map = self.ifs.map(i);
                    let mut a = [0i64; MAX_GRID_DIMENSION];
                    let mut b = [0i64; MAX_GRID_DIMENSION];
                    let mut hit = true;
                    for j in 0..d {
                        let (xlo, xhi) = if j == d - 1 {
                            (s_idx as f64 * inv, (e_idx + 1) as f64 * inv)
                        } else {
                            (idx[j] as f64 * inv, (idx[j] + 1) as f64 * inv)
                        };
                        let c = &map.coords[j];
                        let p = c.slope.mul_add(xlo, c.offset);
                        let q = c.slope.mul_add(xhi, c.offset);
                        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                        a[j] = ((lo * scale).floor().max(dst.lo[j] as f64)) as i64;
                        b[j] = ((hi * scale).floor().min(dst.hi[j] as f64)) as i64;
                        if a[j] > b[j] {
                            hit = false;
                            break;
                        }
                    }
                    if hit {
                        dst.mark_range(&a[..d], &b[..d]);
                    }
                }
            });
            let mut j = d as isize - 2;
            while j >= 0 {
                idx[j as usize] += 1;
                if idx[j as usize] <= src.hi[j as usize] {
                    break;
                }
                idx[j as usize] = src.lo[j as usize];
                j -= 1;
            }
            if j < 0 {
                break;
            }
        }
        Ok(dst)
    }

    /// Sweep until the occupied count repeats or the cap runs out.
    fn settle(&mut self, mut g: Grid, n: usize, cap: usize) -> Result<Grid> {
        for _ in 0..cap {
            let next = self.sweep(&g, n)?;
            let stable = next.marked == g.marked;
            g = next;
            if stable {
                break;
            }
        }
        Ok(g)
    }

    /// Double the resolution: every occupied cell turns into its 2^d
    /// children, clamped to the finer grid's bounds.
    fn upsample(&mut self, parent: &Grid, n: usize) -> Result<Grid> {
        self.charge(parent.marked)?;
        let mut child = self.level_grid(n)?;
        let d = self.d;
        let mut idx = [0i64; MAX_GRID_DIMENSION];
        idx[..d].copy_from_slice(&parent.lo[..d]);
        loop {
            let mut base = 0u64;
            let mut a = [0i64; MAX_GRID_DIMENSION];
            let mut b = [0i64; MAX_GRID_DIMENSION];
            let mut nonempty = true;
            for j in 0..d - 1 {
                base += (idx[j] - parent.lo[j]) as u64 * parent.strides[j];
                a[j] = (2 * idx[j]).max(child.lo[j]);
                b[j] = (2 * idx[j] + 1).min(child.hi[j]);
                if a[j] > b[j] {
                    nonempty = false;
                }
            }
            if nonempty {
                let width = (parent.hi[d - 1] - parent.lo[d - 1]) as u64;
                parent.for_each_run(base, base + width, &mut |first, last| {
                    let s_idx = parent.lo[d - 1] + (first - base) as i64;
                    let e_idx = parent.lo[d - 1] + (last - base) as i64;
                    a[d - 1] = (2 * s_idx).max(child.lo[d - 1]);
                    b[d - 1] = (2 * e_idx + 1).min(child.hi[d - 1]);
                    if a[d - 1] <= b[d - 1] {
                        child.mark_range(&a[..d], &b[..d]);
                    }
                });
            }
            let mut j = d as isize - 2;
            while j >= 0 {
                idx[j as usize] += 1;
                if idx[j as usize] <= parent.hi[j as usize] {
                    break;
                }
                idx[j as usize] = parent.lo[j as usize];
                j -= 1;
            }
            if j < 0 {
                break;
            }
        }
        Ok(child)
    }
}

/// Covering counts for every level in `[n_min, n_max]` from the raster
/// pyramid (see [`Raster`]); prefer this over [`box_count_series`] for
/// systems with strongly overlapping images, where the word walk's pruning
/// cannot amortize. Counts carry a small constant-factor collar, so compare
/// growth rates across engines, never raw counts. The budget bounds the
/// total number of occupied cells processed across all sweeps.
pub fn raster_cover_series(
    ifs: &DiagonalIFS,
    n_min: usize,
    n_max: usize,
    budget: u64,
) -> Result<BoxCountSeries> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidInput(format!(
            "bad level range [{n_min}, {n_max}]"
        )));
    }
    let d = ifs.d();
    if d > MAX_GRID_DIMENSION {
        return Err(Error::InvalidInput(format!(
            "covering counts support dimension at most {MAX_GRID_DIMENSION}, got {d}"
        )));
    }
    let mut raster = Raster {
        ifs,
        d,
        budget,
        processed: 0,
    };
    let seed_level = RASTER_SEED_LEVEL.min(n_min);
    let mut grid = raster.level_grid(seed_level)?;
    let lo = grid.lo;
    let hi = grid.hi;
    grid.mark_range(&lo[..d], &hi[..d]);
    grid = raster.settle(grid, seed_level, RASTER_SEED_SETTLE)?;
    let mut rows = Vec::with_capacity(n_max - n_min + 1);
    if seed_level >= n_min {
        rows.push(BoxRow {
            n: seed_level,
            count: grid.marked,
        });
    }
    for n in seed_level + 1..=n_max {
        grid = raster.upsample(&grid, n)?;
        grid = raster.settle(grid, n, RASTER_STEP_SETTLE)?;
        if n >= n_min {
            rows.push(BoxRow {
                n,
                count: grid.marked,
            });
        }
    }
    for pair in rows.windows(2) {
        if pair[1].count < pair[0].count {
            return Err(Error::PropertyViolation(format!(
                "raster cover count dropped from {} to {} at level {}",
                pair[0].count, pair[1].count, pair[1].n
            )));
        }
    }
    let mut series = BoxCountSeries {
        rows,
        slope_estimate: None,
    };
    let window_lo = n_min.max(4);
    if n_max >= window_lo && n_max - window_lo >= 2 {
        series.slope_estimate = Some(box_dim_estimate(&series, (window_lo, n_max))?.slope);
    }
    Ok(series)
}

/// Single-level raster cover count; runs the pyramid up from its seed.
pub fn raster_cover_count(ifs: &DiagonalIFS, n: usize, budget: u64) -> Result<u64> {
    Ok(raster_cover_series(ifs, n, n, budget)?.rows[0].count)
}

/// Least-squares fit of log2(count) against level over the inclusive window,
/// the usual box-dimension estimator. Requires at least three rows inside
/// the window so the residuals mean something.
pub fn box_dim_estimate(
    series: &BoxCountSeries,
    window: (usize, usize),
) -> Result<RegressionEstimate> {
    let (wa, wb) = window;
    let pts: Vec<(f64, f64)> = series
        .rows
        .iter()
        .filter(|r| r.n >= wa && r.n <= wb)
        .map(|r| (r.n as f64, (r.count as f64).log2()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "regression window [{wa}, {wb}] holds {} rows; need at least 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let max_abs_residual = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(RegressionEstimate {
        slope,
        intercept,
        max_abs_residual,
        rows_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{AffineMap1, DiagonalIFS, DiagonalMap, WeightedIFS, DEFAULT_BUDGET};

    fn interval_family() -> DiagonalIFS {
        DiagonalIFS::pm_one_family(&[0.5]).unwrap()
    }

    #[test]
    fn single_map_attractor_occupies_one_cell() {
        let ifs = DiagonalIFS::new(vec![DiagonalMap {
            coords: vec![AffineMap1::new(0.5, 0.0).unwrap()],
        }])
        .unwrap();
        for n in 1..=6 {
            assert_eq!(box_count(&ifs, n, DEFAULT_BUDGET).unwrap(), 1);
        }
    }

    #[test]
    fn dyadic_interval_counts_exactly() {
        // The attractor of t/2 ± 1 is [-2, 2]; a level-n grid over it holds
        // the indices -2^{n+1} ..= 2^{n+1}, all of them touched.
        let ifs = interval_family();
        for n in 1..=8 {
            let count = box_count(&ifs, n, DEFAULT_BUDGET).unwrap();
            assert_eq!(count, (1u64 << (n + 2)) + 1, "level {n}");
        }
    }

    #[test]
    fn series_is_monotone_and_estimates_the_interval_slope() {
        let series = box_count_series(&interval_family(), 2, 9, DEFAULT_BUDGET).unwrap();
        assert_eq!(series.rows.len(), 8);
        for pair in series.rows.windows(2) {
            assert!(pair[1].count >= pair[0].count);
        }
        let slope = series.slope_estimate.unwrap();
        assert!((slope - 1.0).abs() < 0.01, "slope {slope}");
    }

    #[test]
    fn one_dim_nonconformal_count_matches_box_count() {
        // Slopes 1/4 and 1/2 with equal weights give chi = 1.5, so step n of
        // the anisotropic partition is the plain grid at level floor(1.5 n).
        let ifs = DiagonalIFS::new(vec![
            DiagonalMap {
                coords: vec![AffineMap1::new(0.25, 1.0).unwrap()],
            },
            DiagonalMap {
                coords: vec![AffineMap1::new(0.5, -1.0).unwrap()],
            },
        ])
        .unwrap();
        let w = WeightedIFS::uniform(ifs.clone());
        for n in 2..=6 {
            let level = (1.5 * n as f64).floor() as usize;
            assert_eq!(
                nonconformal_count(&w, n, DEFAULT_BUDGET).unwrap(),
                box_count(&ifs, level, DEFAULT_BUDGET).unwrap(),
                "step {n}"
            );
        }
    }

    #[test]
    fn regression_recovers_exact_powers() {
        // Counts 2^{1.5 n} at even levels lie exactly on a line of slope 1.5.
        let rows = [2usize, 4, 6, 8]
            .iter()
            .map(|&n| BoxRow {
                n,
                count: 1u64 << (3 * n / 2),
            })
            .collect();
        let series = BoxCountSeries {
            rows,
            slope_estimate: None,
        };
        let est = box_dim_estimate(&series, (2, 8)).unwrap();
        assert!((est.slope - 1.5).abs() <= 1e-12);
        assert!(est.max_abs_residual <= 1e-12);
        assert_eq!(est.rows_used, 4);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let rows = (1..=5).map(|n| BoxRow { n, count: 7 }).collect();
        let series = BoxCountSeries {
            rows,
            slope_estimate: None,
        };
        let est = box_dim_estimate(&series, (1, 5)).unwrap();
        assert_eq!(est.slope, 0.0);
        assert_eq!(est.max_abs_residual, 0.0);
    }

    #[test]
    fn regression_needs_three_rows_in_window() {
        let series = box_count_series(&interval_family(), 3, 6, DEFAULT_BUDGET).unwrap();
        assert!(matches!(
            box_dim_estimate(&series, (5, 6)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn walk_budget_is_enforced() {
        assert!(matches!(
            box_count(&interval_family(), 10, 50),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn grid_memory_cap_is_enforced() {
        let ifs = DiagonalIFS::pm_one_family(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            box_count(&ifs, 20, DEFAULT_BUDGET),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn dimension_above_eight_is_rejected() {
        let ifs = DiagonalIFS::pm_one_family(&[0.5; 9]).unwrap();
        assert!(matches!(
            box_count(&ifs, 2, DEFAULT_BUDGET),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            box_count(&interval_family(), 0, DEFAULT_BUDGET),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn raster_counts_the_dyadic_interval_exactly() {
        // The images of [-2, 2] tile it exactly on dyadic endpoints, so the
        // raster settles onto the same 2^{n+2} + 1 cells the walk finds, with
        // no collar at all.
        let ifs = interval_family();
        for n in [1usize, 4, 6, 9] {
            let count = raster_cover_count(&ifs, n, DEFAULT_BUDGET).unwrap();
            assert_eq!(count, (1u64 << (n + 2)) + 1, "level {n}");
        }
    }

    #[test]
    fn raster_tracks_the_walk_up_to_its_collar() {
        // Cross-engine check on a thin plane family: the raster count sits a
        // stable constant factor above the walk's (outward rounding builds a
        // collar a few cells wide), so the two stay within one bit in log2.
        let ifs = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        for n in [4usize, 6, 8] {
            let walk = box_count(&ifs, n, DEFAULT_BUDGET).unwrap();
            let raster = raster_cover_count(&ifs, n, DEFAULT_BUDGET).unwrap();
            assert!(raster >= walk / 2, "level {n}: walk {walk} raster {raster}");
            let gap = (raster as f64).log2() - (walk as f64).log2();
            assert!(gap.abs() <= 1.0, "level {n}: log2 gap {gap}");
        }
        // Behavior lock for the settled counts themselves.
        assert_eq!(raster_cover_count(&ifs, 6, DEFAULT_BUDGET).unwrap(), 1199);
    }

    #[test]
    fn raster_series_estimates_the_thin_family_slope() {
        let ifs = DiagonalIFS::pm_one_family(&[0.6, 0.3]).unwrap();
        let series = raster_cover_series(&ifs, 5, 11, 1_000_000_000).unwrap();
        assert_eq!(series.rows.len(), 7);
        for pair in series.rows.windows(2) {
            assert!(pair[1].count >= pair[0].count);
        }
        let slope = series.slope_estimate.unwrap();
        assert!((slope - 1.15).abs() <= 0.2, "slope {slope}");
    }

    #[test]
    fn raster_budget_and_arguments_are_enforced() {
        let ifs = interval_family();
        assert!(matches!(
            raster_cover_series(&ifs, 8, 8, 100),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(matches!(
            raster_cover_series(&ifs, 0, 4, DEFAULT_BUDGET),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            raster_cover_series(&ifs, 5, 4, DEFAULT_BUDGET),
            Err(Error::InvalidInput(_))
        ));
    }
}
