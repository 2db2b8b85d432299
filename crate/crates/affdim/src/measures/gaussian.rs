//! Comparison of one-dimensional atomic measures against a centered
//! Gaussian: distribution function, Kolmogorov (sup) distance, and Lévy
//! distance.
//!
//! Both distances are exact up to their stated tolerances because the atomic
//! distribution function is a step function: the supremum against a monotone
//! continuous function is attained at atom breakpoints (from the left or the
//! right), so scanning breakpoints is enough.

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Bisection tolerance for [`levy_distance`].
pub const LEVY_TOL: f64 = 1e-6;

/// A centered Gaussian on the line, identified by its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    variance: f64,
}

impl GaussianSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "gaussian variance must be positive and finite, got {variance}"
            )));
        }
        Ok(GaussianSpec { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Distribution function of the centered Gaussian, via the error function.
pub fn gaussian_cdf(g: &GaussianSpec, t: f64) -> f64 {
    0.5 * (1.0 + libm::erf(t / (2.0 * g.variance).sqrt()))
}

fn breakpoints(m: &DiscreteMeasure) -> Result<Vec<(f64, f64, f64)>> {
    if m.d() != 1 {
        return Err(Error::InvalidInput(format!(
            "gaussian comparison is defined for one-dimensional measures, got d = {}",
            m.d()
        )));
    }
    // Atoms are sorted by construction; record (x, F(x-), F(x)).
    let mut out = Vec::with_capacity(m.atom_count());
    let mut cum = 0.0;
    for a in m.atoms() {
        out.push((a.point[0], cum, cum + a.mass));
        cum += a.mass;
    }
    Ok(out)
}

/// Kolmogorov distance `sup_t |F_m(t) − F_γ(t)|`, evaluated at every atom
/// from both sides.
pub fn kolmogorov_distance(m: &DiscreteMeasure, g: &GaussianSpec) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (x, before, after) in breakpoints(m)? {
        let phi = gaussian_cdf(g, x);
        best = best.max((before - phi).abs()).max((after - phi).abs());
    }
    Ok(best)
}

/// Lévy distance: the least `ε` with
/// `F_γ(t−ε) − ε ≤ F_m(t) ≤ F_γ(t+ε) + ε` for all `t`, found by bisection to
/// [`LEVY_TOL`].
///
/// For a step function against a monotone continuous one, the two band
/// conditions are tight exactly at atom breakpoints — the upper just after a
/// jump, the lower just before it — so per-`ε` feasibility is a breakpoint
/// scan.
pub fn levy_distance(m: &DiscreteMeasure, g: &GaussianSpec) -> Result<f64> {
    let points = breakpoints(m)?;
    let feasible = |eps: f64| -> bool {
        points.iter().all(|&(x, before, after)| {
            after <= gaussian_cdf(g, x + eps) + eps && gaussian_cdf(g, x - eps) - eps <= before
        })
    };
    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > LEVY_TOL / 4.0 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
