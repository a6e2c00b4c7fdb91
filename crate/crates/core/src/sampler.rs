//! Uniform sampling over a semialgebraic set by rejection from a polynomial
//! dominating density.
//!
//! A proposal is drawn from the density `p / int_B p` one coordinate at a
//! time: for coordinate `i` the conditional CDF given `x_1..x_{i-1}` is the
//! univariate polynomial
//!
//! ```text
//! F_i(t) = sum_j c_j * prod_{l<i} x_l^a_{j,l} * t^(a_{j,i}+1) / (a_{j,i}+1)
//!              * prod_{l>i} int_{lo_l}^{hi_l} s^a_{j,l} ds
//! ```
//!
//! (the exponent is `a_{j,i} + 1`, the integration exponent, and the suffix
//! product runs over every later coordinate), which is inverted by bisection.
//! A proposal `xi` is accepted when `xi` lies in `K` and `u p(xi) <= 1` for
//! `u ~ U[0, 1]`; since `p >= 1` on `K` the accepted points are uniform on
//! `K` and the acceptance rate is `vol K / int_B p`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{PssKind, PssResult, SemialgSet};
use crate::error::{check_dim, Error, Result};
use crate::moments::{interval_moment, l1_norm, BoundingBox};
use crate::poly::MultiPoly;
use crate::rng::stream_rng;

/// Dense univariate polynomial, `coeffs[k]` multiplying `t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    pub coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Conditional CDF of coordinate `i` (0-based) of the density proportional
/// to `p` on `b`, given `prefix = (x_1, .., x_{i-1})`. Not normalized and not
/// shifted: the mass of the fiber is `F(hi_i) - F(lo_i)`.
pub fn marginal_cdf(p: &MultiPoly, b: &BoundingBox, i: usize, prefix: &[f64]) -> Result<UniPoly> {
    let n = b.dim();
    check_dim(n, p.dim())?;
    if i >= n {
        return Err(Error::invalid(format!("coordinate {} out of range for dimension {n}", i + 1)));
    }
    check_dim(i, prefix.len())?;
    let table = CdfTable::new(p, b);
    let prefix_products: Vec<f64> = table
        .terms
        .iter()
        .map(|(e, c)| c * prefix.iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product::<f64>())
        .collect();
    let f = table.cdf(i, &prefix_products);
    if f.coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateFiber { coordinate: i + 1 });
    }
    Ok(f)
}

/// Leftmost `xi` in `[lo, hi]` with `F(xi) >= w`, by bisection down to
/// floating-point resolution. `F` must be nondecreasing on the interval.
pub fn invert_cdf(f: &UniPoly, w: f64, lo: f64, hi: f64) -> Result<f64> {
    let (fa, fb) = (f.eval(lo), f.eval(hi));
    if !(lo <= hi) || !(fa <= w && w <= fb) {
        return Err(Error::invalid(format!(
            "target {w} outside CDF range [{fa}, {fb}] on [{lo}, {hi}]"
        )));
    }
    Ok(bisect(f, w, lo, hi))
}

fn bisect(f: &UniPoly, w: f64, mut lo: f64, mut hi: f64) -> f64 {
    if f.eval(lo) >= w {
        return lo;
    }
    // invariant: F(lo) < w <= F(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if f.eval(mid) >= w {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Terms of `p` with, per coordinate, the product of the box integrals of
/// all later coordinates.
#[derive(Clone, Debug)]
struct CdfTable {
    terms: Vec<(Vec<u32>, f64)>,
    suffix: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    degree: usize,
}

impl CdfTable {
    fn new(p: &MultiPoly, b: &BoundingBox) -> Self {
        let n = b.dim();
        let terms: Vec<(Vec<u32>, f64)> = p.terms().map(|(m, c)| (m.exponents().to_vec(), c)).collect();
        let suffix = (0..n)
            .map(|i| {
                terms
                    .iter()
                    .map(|(e, _)| (i + 1..n).map(|l| interval_moment(b.lo()[l], b.hi()[l], e[l])).product())
                    .collect()
            })
            .collect();
        CdfTable {
            terms,
            suffix,
            lo: b.lo().to_vec(),
            hi: b.hi().to_vec(),
            degree: p.degree(),
        }
    }

    /// `prefix_products[j]` is `c_j * prod_{l<i} x_l^a_{j,l}`.
    fn cdf(&self, i: usize, prefix_products: &[f64]) -> UniPoly {
        let mut coeffs = vec![0.0; self.degree + 2];
        for ((e, _), (pp, s)) in self.terms.iter().zip(prefix_products.iter().zip(&self.suffix[i])) {
            let k = e[i] as usize + 1;
            coeffs[k] += pp * s / k as f64;
        }
        UniPoly { coeffs }
    }
}

const FIBER_RETRIES: usize = 1000;

/// Probability density `p / int_B p` on `B` for a polynomial certified
/// nonnegative there. Draws are made in `[-1, 1]^n` coordinates and mapped
/// back to `B`.
#[derive(Clone, Debug)]
pub struct PolyDensity {
    poly: MultiPoly,
    bbox: BoundingBox,
    mass: f64,
    table: CdfTable,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl PolyDensity {
    /// Refuses results without an SOS certificate of nonnegativity on the box.
    pub fn from_result(r: &PssResult) -> Result<Self> {
        if !r.certified || r.kind == PssKind::Fit {
            return Err(Error::invalid(
                "sampling needs a polynomial certified nonnegative on the box; LP fits are only grid-checked",
            ));
        }
        Self::trusted(r.poly.clone(), r.bbox.clone())
    }

    /// For polynomials known to be nonnegative on `b` by other means.
    pub fn trusted(poly: MultiPoly, bbox: BoundingBox) -> Result<Self> {
        check_dim(bbox.dim(), poly.dim())?;
        let mass = l1_norm(&poly, &bbox)?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid(format!("density mass {mass} is not positive")));
        }
        let center = bbox.center();
        let half = bbox.half_widths();
        let work = poly.compose_affine(&center, &half)?;
        let table = CdfTable::new(&work, &BoundingBox::symmetric_unit(bbox.dim()));
        Ok(PolyDensity {
            poly,
            bbox,
            mass,
            table,
            center,
            half,
        })
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// One draw with density `p / mass`. A fiber of zero mass restarts the
    /// draw; after 1000 restarts the draw fails.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let n = self.bbox.dim();
        let mut last = 0;
        'retry: for _ in 0..FIBER_RETRIES {
            let mut prefix: Vec<f64> = self.table.terms.iter().map(|(_, c)| *c).collect();
            let mut u = Vec::with_capacity(n);
            for i in 0..n {
                let f = self.table.cdf(i, &prefix);
                let (lo, hi) = (self.table.lo[i], self.table.hi[i]);
                let (fa, fb) = (f.eval(lo), f.eval(hi));
                if !(fb > fa) {
                    last = i + 1;
                    continue 'retry;
                }
                let w = (fa + rng.gen::<f64>() * (fb - fa)).clamp(fa, fb);
                let xi = bisect(&f, w, lo, hi);
                for (pp, (e, _)) in prefix.iter_mut().zip(&self.table.terms) {
                    *pp *= xi.powi(e[i] as i32);
                }
                u.push(xi);
            }
            let (lo, hi) = (self.bbox.lo(), self.bbox.hi());
            return Ok((0..n)
                .map(|i| (self.center[i] + self.half[i] * u[i]).clamp(lo[i], hi[i]))
                .collect());
        }
        Err(Error::DegenerateFiber { coordinate: last })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<Vec<f64>>,
    pub proposals: u64,
    pub accepted: u64,
    pub empirical_rate: f64,
    /// Proposals outside `K`.
    pub rejected_outside: u64,
    /// Proposals inside `K` rejected by the `u p(xi) <= 1` test.
    pub rejected_inside: u64,
    pub seed: u64,
}

pub const STALL_PROPOSALS: u64 = 100_000;
pub const STALL_RATE: f64 = 1e-4;

/// `count` independent uniform samples on `K`. Sample `k` consumes RNG
/// stream `(seed, k)` only, so the batch does not depend on scheduling.
/// Aborts once at least 100000 proposals have been made with an acceptance
/// rate below 1e-4.
pub fn uniform_sample(k: &SemialgSet, pd: &PolyDensity, count: usize, seed: u64) -> Result<SampleBatch> {
    check_dim(k.dim(), pd.bbox.dim())?;
    let proposals = AtomicU64::new(0);
    let accepted = AtomicU64::new(0);
    let stalled = AtomicBool::new(false);

    let per_sample: Vec<(Vec<f64>, u64, u64, u64)> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, idx as u64);
            let (mut outside, mut inside, mut tries) = (0u64, 0u64, 0u64);
            loop {
                if stalled.load(Ordering::Relaxed) {
                    return Err(stall_error(&proposals, &accepted));
                }
                let xi = pd.draw(&mut rng)?;
                tries += 1;
                let total = proposals.fetch_add(1, Ordering::Relaxed) + 1;
                let acc = accepted.load(Ordering::Relaxed);
                if total >= STALL_PROPOSALS && (acc as f64) < STALL_RATE * total as f64 {
                    stalled.store(true, Ordering::Relaxed);
                    return Err(stall_error(&proposals, &accepted));
                }
                if !k.contains(&xi) {
                    outside += 1;
                    continue;
                }
                let u: f64 = rng.gen();
                if u * pd.poly.eval_unchecked(&xi) <= 1.0 {
                    accepted.fetch_add(1, Ordering::Relaxed);
                    return Ok((xi, tries, outside, inside));
                }
                inside += 1;
            }
        })
        .collect::<Result<_>>()?;

    let mut batch = SampleBatch {
        samples: Vec::with_capacity(count),
        proposals: 0,
        accepted: count as u64,
        empirical_rate: 0.0,
        rejected_outside: 0,
        rejected_inside: 0,
        seed,
    };
    for (x, tries, outside, inside) in per_sample {
        batch.samples.push(x);
        batch.proposals += tries;
        batch.rejected_outside += outside;
        batch.rejected_inside += inside;
    }
    batch.empirical_rate = if batch.proposals > 0 {
        batch.accepted as f64 / batch.proposals as f64
    } else {
        1.0
    };
    Ok(batch)
}

fn stall_error(proposals: &AtomicU64, accepted: &AtomicU64) -> Error {
    Error::SamplerStalled {
        accepted: accepted.load(Ordering::Relaxed),
        proposals: proposals.load(Ordering::Relaxed),
    }
}

/// `vol K / int_B p`, with `vol K` supplied by the caller.
pub fn acceptance_rate<F>(k: &SemialgSet, pd: &PolyDensity, vol_estimator: F) -> f64
where
    F: FnOnce(&SemialgSet) -> f64,
{
    vol_estimator(k) / pd.mass
}
