//! Outer and inner polynomial superlevel-set approximations, bounding boxes
//! and point-cloud fitting.
//!
//! The outer problem minimizes `int_B p` over degree-`d` polynomials subject
//! to `p >= 0` on `B` and `p >= 1` on `K`, each positivity constraint
//! replaced by an SOS certificate of order `r`. The inner problem solves the
//! same program for the complement `B \ K = union_j {g_j < 0}` and reads the
//! approximation off the sublevel set `{p <= 1}`.
//!
//! When rescaling is on, the program is assembled in coordinates
//! `u = (x - c) / h` on `[-1, 1]^n` and the optimal polynomial is mapped back;
//! generators are also divided by their largest coefficient in that frame.
//! Neither step changes the sets involved.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{assemble, half_degree, sos_constraint, AffinePolyExpr};
use crate::error::{check_dim, Error, Result};
use crate::moments::{l1_norm, objective_vector, BoundingBox};
use crate::poly::{monomial_basis, MultiPoly};
use crate::rng::stream_rng;
use crate::solve::{solve_conic, solve_lp, ConicSolution, Inequality, SolveStatus, SolverSettings};

/// `{x : g_i(x) >= 0 for all i}` together with a box containing it.
#[derive(Clone, Debug, PartialEq)]
pub struct SemialgSet {
    generators: Vec<MultiPoly>,
    bbox: BoundingBox,
}

impl SemialgSet {
    pub fn new(generators: Vec<MultiPoly>, bbox: BoundingBox) -> Result<Self> {
        validate_generators(&generators, bbox.dim())?;
        Ok(SemialgSet { generators, bbox })
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn generators(&self) -> &[MultiPoly] {
        &self.generators
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Closed-set membership: `x` in the box and every `g_i(x) >= 0`, no tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bbox.contains(x) && self.generators.iter().all(|g| g.eval_unchecked(x) >= 0.0)
    }

    /// `max_i max(0, -g_i(x))`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.generators
            .iter()
            .map(|g| (-g.eval_unchecked(x)).max(0.0))
            .fold(0.0, f64::max)
    }
}

fn validate_generators(generators: &[MultiPoly], n: usize) -> Result<()> {
    for (i, g) in generators.iter().enumerate() {
        check_dim(n, g.dim())?;
        if g.is_constant() {
            return Err(Error::invalid(format!(
                "generator {} is constant; constant constraints carry no information",
                i + 1
            )));
        }
    }
    Ok(())
}

/// JSON form of a set: `{"dim": n, "generators": [poly, ...], "box": {"lo": [...], "hi": [...]}}`.
/// The box may be omitted when only a bounding box is to be computed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetDescription {
    pub dim: usize,
    pub generators: Vec<MultiPoly>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

impl SetDescription {
    pub fn validate(&self) -> Result<()> {
        validate_generators(&self.generators, self.dim)?;
        if let Some(b) = &self.bbox {
            check_dim(self.dim, b.dim())?;
        }
        Ok(())
    }

    pub fn to_set(&self) -> Result<SemialgSet> {
        let bbox = self
            .bbox
            .clone()
            .ok_or_else(|| Error::invalid("set description has no box"))?;
        check_dim(self.dim, bbox.dim())?;
        SemialgSet::new(self.generators.clone(), bbox)
    }
}

impl From<&SemialgSet> for SetDescription {
    fn from(k: &SemialgSet) -> Self {
        SetDescription {
            dim: k.dim(),
            generators: k.generators.clone(),
            bbox: Some(k.bbox.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSettings {
    pub degree: usize,
    /// Relaxation order; `None` picks the smallest admissible order with `2r >= d`.
    pub order: Option<usize>,
    /// Rescale the box to `[-1, 1]^n`; `None` means on.
    pub rescale: Option<bool>,
    pub solver: SolverSettings,
}

impl ApproxSettings {
    pub fn degree(d: usize) -> Self {
        ApproxSettings {
            degree: d,
            order: None,
            rescale: None,
            solver: SolverSettings::default(),
        }
    }

    pub fn with_order(mut self, r: usize) -> Self {
        self.order = Some(r);
        self
    }

    pub fn with_rescale(mut self, on: bool) -> Self {
        self.rescale = Some(on);
        self
    }

    fn rescale_on(&self) -> bool {
        self.rescale.unwrap_or(true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PssKind {
    Outer,
    Inner,
    Fit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub status: SolveStatus,
    pub iterations: u32,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub equality_residual: f64,
    pub settings: SolverSettings,
}

impl SolveDiagnostics {
    fn new(sol: &ConicSolution, settings: &SolverSettings) -> Self {
        SolveDiagnostics {
            status: sol.status,
            iterations: sol.iterations,
            objective: sol.objective,
            dual_objective: sol.dual_objective,
            gap: sol.gap,
            equality_residual: sol.equality_residual,
            settings: settings.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PssResult {
    pub kind: PssKind,
    pub degree: usize,
    /// Relaxation order, absent for LP fits.
    pub order: Option<usize>,
    pub poly: MultiPoly,
    /// `int_B p`.
    pub w: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub rescaled: bool,
    /// True when nonnegativity on the box carries an SOS certificate.
    pub certified: bool,
    pub certificate_residual: Option<f64>,
    pub min_gram_eigenvalue: Option<f64>,
    pub solver: SolveDiagnostics,
}

impl PssResult {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval_unchecked(x)
    }

    /// `x` in `U(p) = {x in B : p(x) >= 1}`.
    pub fn in_superlevel(&self, x: &[f64]) -> bool {
        self.bbox.contains(x) && self.eval(x) >= 1.0
    }

    /// `x` in `V(p) = {x in B : p(x) <= 1}`.
    pub fn in_sublevel(&self, x: &[f64]) -> bool {
        self.bbox.contains(x) && self.eval(x) <= 1.0
    }

    /// Flags results that only met the solver's reduced tolerances.
    pub fn near_optimal(&self) -> bool {
        self.solver.status == SolveStatus::NearOptimal
    }
}

/// Affine change of variables `x = shift + scale * u`.
#[derive(Clone, Debug)]
struct Frame {
    shift: Vec<f64>,
    scale: Vec<f64>,
    work_box: BoundingBox,
}

impl Frame {
    fn new(b: &BoundingBox, rescale: bool) -> Self {
        if rescale {
            Frame {
                shift: b.center(),
                scale: b.half_widths(),
                work_box: BoundingBox::symmetric_unit(b.dim()),
            }
        } else {
            let n = b.dim();
            Frame {
                shift: vec![0.0; n],
                scale: vec![1.0; n],
                work_box: b.clone(),
            }
        }
    }

    fn is_identity(&self) -> bool {
        self.shift.iter().all(|&s| s == 0.0) && self.scale.iter().all(|&s| s == 1.0)
    }

    fn jacobian(&self) -> f64 {
        self.scale.iter().product()
    }

    fn to_work(&self, p: &MultiPoly) -> MultiPoly {
        if self.is_identity() {
            return p.clone();
        }
        p.compose_affine(&self.shift, &self.scale).expect("frame dimension")
    }

    fn to_original(&self, q: &MultiPoly) -> MultiPoly {
        if self.is_identity() {
            return q.clone();
        }
        let shift: Vec<f64> = self.shift.iter().zip(&self.scale).map(|(c, h)| -c / h).collect();
        let scale: Vec<f64> = self.scale.iter().map(|h| 1.0 / h).collect();
        q.compose_affine(&shift, &scale).expect("frame dimension")
    }

    fn to_work_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(x, (c, h))| (x - c) / h)
            .collect()
    }
}

fn normalized(g: &MultiPoly) -> MultiPoly {
    let m = g.max_abs_coeff();
    if m > 0.0 {
        g.scale(1.0 / m)
    } else {
        g.clone()
    }
}

/// Default relaxation order: the smallest `r` with `2r >= d`, `r >= 1` (box
/// quadratics) and `r >= ceil(deg g / 2)` for every generator.
pub fn default_order(d: usize, generators: &[MultiPoly]) -> usize {
    generators
        .iter()
        .map(half_degree)
        .chain([d.div_ceil(2), 1])
        .max()
        .unwrap_or(1)
}

/// Solves `min int_B p` with `p >= 0` on `B` and, for each entry of
/// `set_certificates`, `p >= 1` on the set its generators describe.
fn solve_superlevel_program(
    kind: PssKind,
    bbox: &BoundingBox,
    set_certificates: Vec<(String, Vec<MultiPoly>)>,
    settings: &ApproxSettings,
) -> Result<PssResult> {
    let n = bbox.dim();
    let d = settings.degree;
    let frame = Frame::new(bbox, settings.rescale_on());
    let work_box = &frame.work_box;

    let set_certificates: Vec<(String, Vec<MultiPoly>)> = set_certificates
        .into_iter()
        .map(|(label, gens)| {
            let gens = gens.iter().map(|g| normalized(&frame.to_work(g))).collect();
            (label, gens)
        })
        .collect();
    let all_gens: Vec<MultiPoly> = set_certificates
        .iter()
        .flat_map(|(_, g)| g.iter().cloned())
        .collect();
    let r = settings.order.unwrap_or_else(|| default_order(d, &all_gens));

    let jac = frame.jacobian();
    let objective: Vec<f64> = objective_vector(work_box, d).into_iter().map(|v| v * jac).collect();

    let mut constraints = vec![sos_constraint(
        "B",
        AffinePolyExpr::unknown_polynomial(n, d, 0),
        work_box.quadratics(),
        r,
    )?];
    for (label, gens) in set_certificates {
        constraints.push(sos_constraint(
            label,
            AffinePolyExpr::unknown_polynomial(n, d, 0).plus_constant(-1.0),
            gens,
            r,
        )?);
    }
    let program = assemble(objective, constraints)?;
    let sol = solve_conic(&program.problem, &settings.solver)?;
    if !sol.status.is_usable() {
        return Err(Error::Solver {
            status: sol.status.to_string(),
            detail: format!(
                "{kind:?} PSS d={d} r={r}: {} iterations, gap {:.3e}, equality residual {:.3e}",
                sol.iterations, sol.gap, sol.equality_residual
            ),
        });
    }
    let basis = monomial_basis(n, d);
    let q = MultiPoly::from_basis(n, &basis, program.free_values(&sol.primal));
    let poly = frame.to_original(&q);
    let w = l1_norm(&poly, bbox)?;
    Ok(PssResult {
        kind,
        degree: d,
        order: Some(r),
        poly,
        w,
        bbox: bbox.clone(),
        rescaled: !frame.is_identity(),
        certified: true,
        certificate_residual: Some(program.certificate_residual(&sol.primal)?),
        min_gram_eigenvalue: Some(program.min_gram_eigenvalue(&sol.primal)),
        solver: SolveDiagnostics::new(&sol, &settings.solver),
    })
}

/// Minimum-L1 outer approximation: `U(p) = {x in B : p(x) >= 1}` contains `K`.
/// With no generators, `K = B` and the set certificate uses the box quadratics.
pub fn outer_pss(k: &SemialgSet, settings: &ApproxSettings) -> Result<PssResult> {
    let gens = if k.generators.is_empty() {
        k.bbox.quadratics()
    } else {
        k.generators.clone()
    };
    solve_superlevel_program(PssKind::Outer, &k.bbox, vec![("K".to_string(), gens)], settings)
}

/// Inner approximation: the outer problem for `B \ K`, one certificate per
/// `K_j = {g_j <= 0} cap B` (generators `-g_j` and the box quadratics).
/// `V(p) = {x in B : p(x) <= 1}` is then contained in `K`.
pub fn inner_pss(k: &SemialgSet, settings: &ApproxSettings) -> Result<PssResult> {
    let quads = k.bbox.quadratics();
    let certs = k
        .generators
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let mut gens = vec![g.scale(-1.0)];
            gens.extend(quads.iter().cloned());
            (format!("K{}", j + 1), gens)
        })
        .collect();
    solve_superlevel_program(PssKind::Inner, &k.bbox, certs, settings)
}

pub const BBOX_PADDING: f64 = 1e-6;

/// Outer bounding box of `{g_i >= 0}` from order-`r` relaxations of
/// `min x_j` and `max x_j`. The default order is one above the smallest
/// admissible one. Each side is pushed outward by `BBOX_PADDING` (relative
/// to `max(1, |bound|)`) so solver tolerance cannot cut into the set.
pub fn bounding_box(
    generators: &[MultiPoly],
    n: usize,
    r: Option<usize>,
    settings: &SolverSettings,
) -> Result<BoundingBox> {
    validate_generators(generators, n)?;
    if generators.is_empty() {
        return Err(Error::Unbounded {
            coordinate: 1,
            side: "lower",
        });
    }
    let gens: Vec<MultiPoly> = generators.iter().map(normalized).collect();
    let r = r.unwrap_or_else(|| default_order(1, &gens) + 1);
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for j in 0..n {
        let xj = MultiPoly::var(n, j);
        let one = MultiPoly::constant(n, 1.0);
        for (side, sign) in [("lower", 1.0), ("upper", -1.0)] {
            // lower: max y s.t. x_j - y >= 0 on K; upper: min y s.t. y - x_j >= 0 on K
            let target = AffinePolyExpr::new(n, xj.scale(sign), vec![(0, one.scale(-sign))])?;
            let c = sos_constraint(format!("{side} x{}", j + 1), target, gens.clone(), r)?;
            let program = assemble(vec![-sign], vec![c])?;
            let sol = solve_conic(&program.problem, settings)?;
            match sol.status {
                s if s.is_usable() => {}
                SolveStatus::Infeasible => {
                    return Err(Error::Unbounded {
                        coordinate: j + 1,
                        side,
                    })
                }
                SolveStatus::Unbounded => {
                    return Err(Error::invalid(format!(
                        "bound on x{} is unbounded in the feasible direction; the set appears empty",
                        j + 1
                    )))
                }
                s => {
                    return Err(Error::Solver {
                        status: s.to_string(),
                        detail: format!("{side} bound of x{}", j + 1),
                    })
                }
            }
            let y = sol.primal[0];
            let pad = BBOX_PADDING * y.abs().max(1.0);
            if side == "lower" {
                lo.push(y - pad);
            } else {
                hi.push(y + pad);
            }
        }
    }
    BoundingBox::new(lo, hi)
}

/// Regular grid over `b` with `per_axis` points per side (endpoints
/// included). Index `k` maps to coordinates with the last axis fastest.
pub fn grid_point(b: &BoundingBox, per_axis: usize, mut k: usize) -> Vec<f64> {
    let n = b.dim();
    let mut t = vec![0.0; n];
    for i in (0..n).rev() {
        let idx = k % per_axis;
        k /= per_axis;
        t[i] = if per_axis > 1 {
            idx as f64 / (per_axis - 1) as f64
        } else {
            0.5
        };
    }
    b.lerp(&t)
}

pub fn grid_len(n: usize, per_axis: usize) -> usize {
    per_axis.pow(n as u32)
}

/// Fits `U(p)` around a finite point set by linear programming: `p >= 1` at
/// every point, `p >= 0` on a `grid_per_axis^n` grid over `b`. Positivity off
/// the grid is not guaranteed, so the result is never marked certified.
pub fn fit_points(
    points: &[Vec<f64>],
    b: &BoundingBox,
    grid_per_axis: usize,
    settings: &ApproxSettings,
) -> Result<PssResult> {
    let n = b.dim();
    let d = settings.degree;
    if grid_per_axis < 2 {
        return Err(Error::invalid("positivity grid needs at least 2 points per axis"));
    }
    if points.is_empty() {
        return Err(Error::invalid("no points to fit"));
    }
    for (i, x) in points.iter().enumerate() {
        check_dim(n, x.len())?;
        if !b.contains(x) {
            return Err(Error::invalid(format!("point {} = {x:?} lies outside the box", i + 1)));
        }
    }
    let frame = Frame::new(b, settings.rescale_on());
    let basis = monomial_basis(n, d);
    let row = |u: &[f64], rhs: f64| Inequality {
        coeffs: basis.iter().enumerate().map(|(k, m)| (k, m.eval(u))).collect(),
        rhs,
    };
    let mut rows: Vec<Inequality> = points.iter().map(|x| row(&frame.to_work_point(x), 1.0)).collect();
    let work_box = &frame.work_box;
    rows.extend((0..grid_len(n, grid_per_axis)).map(|k| row(&grid_point(work_box, grid_per_axis, k), 0.0)));

    let jac = frame.jacobian();
    let objective: Vec<f64> = objective_vector(work_box, d).into_iter().map(|v| v * jac).collect();
    let sol = solve_lp(&objective, &rows, &settings.solver)?;
    if !sol.status.is_usable() {
        return Err(Error::Solver {
            status: sol.status.to_string(),
            detail: format!("point fit d={d}: {} iterations", sol.iterations),
        });
    }
    let q = MultiPoly::from_basis(n, &basis, &sol.primal);
    let poly = frame.to_original(&q);
    let w = l1_norm(&poly, b)?;
    Ok(PssResult {
        kind: PssKind::Fit,
        degree: d,
        order: None,
        poly,
        w,
        bbox: b.clone(),
        rescaled: !frame.is_identity(),
        certified: false,
        certificate_residual: None,
        min_gram_eigenvalue: None,
        solver: SolveDiagnostics::new(&sol, &settings.solver),
    })
}

/// Monte-Carlo volume estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_CHUNK: usize = 4096;

/// Estimates the volumes of several subsets of `b` from one stream of
/// uniform points. Chunk `c` of the stream uses RNG stream `(seed, c)`, so the
/// estimate does not depend on thread scheduling.
pub fn monte_carlo_volumes<F>(
    b: &BoundingBox,
    samples: usize,
    seed: u64,
    count: usize,
    indicators: F,
) -> Vec<VolumeEstimate>
where
    F: Fn(&[f64], &mut [bool]) + Sync,
{
    use rand::Rng;
    let n = b.dim();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut local = vec![0u64; count];
            let mut t = vec![0.0; n];
            let mut flags = vec![false; count];
            for _ in 0..len {
                for v in t.iter_mut() {
                    *v = rng.gen::<f64>();
                }
                let x = b.lerp(&t);
                flags.iter_mut().for_each(|f| *f = false);
                indicators(&x, &mut flags);
                for (h, &f) in local.iter_mut().zip(&flags) {
                    *h += f as u64;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; count],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let vol = b.volume();
    hits.into_iter()
        .map(|h| {
            let f = h as f64 / samples as f64;
            VolumeEstimate {
                value: vol * f,
                std_error: vol * (f * (1.0 - f) / samples as f64).sqrt(),
                samples,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Points per axis; `None` selects 400 for n <= 2, 60 for n = 3, and
    /// Monte-Carlo points for n >= 4.
    pub grid_per_axis: Option<usize>,
    pub mc_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            grid_per_axis: None,
            mc_samples: 1_000_000,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

pub fn default_grid(n: usize) -> Option<usize> {
    match n {
        0..=2 => Some(400),
        3 => Some(60),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub kind: PssKind,
    /// Grid resolution used, or `None` when Monte-Carlo points were scanned.
    pub grid_per_axis: Option<usize>,
    pub points_scanned: usize,
    pub set_points: usize,
    /// Outer/fit: minimum of `p` over scanned points in `K`.
    pub min_on_set: Option<f64>,
    /// Minimum of `p` over all scanned points of `B`.
    pub min_on_box: f64,
    /// Inner: largest generator violation over scanned points in `V(p)`.
    pub max_violation_in_sublevel: Option<f64>,
    pub sublevel_points: usize,
    pub w: f64,
    pub vol_set: VolumeEstimate,
    pub vol_superlevel: VolumeEstimate,
    pub vol_sublevel: VolumeEstimate,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Copy)]
struct ScanAcc {
    set_points: usize,
    min_on_set: f64,
    min_on_box: f64,
    sublevel_points: usize,
    max_violation: f64,
}

impl ScanAcc {
    fn empty() -> Self {
        ScanAcc {
            set_points: 0,
            min_on_set: f64::INFINITY,
            min_on_box: f64::INFINITY,
            sublevel_points: 0,
            max_violation: 0.0,
        }
    }

    fn merge(self, o: Self) -> Self {
        ScanAcc {
            set_points: self.set_points + o.set_points,
            min_on_set: self.min_on_set.min(o.min_on_set),
            min_on_box: self.min_on_box.min(o.min_on_box),
            sublevel_points: self.sublevel_points + o.sublevel_points,
            max_violation: self.max_violation.max(o.max_violation),
        }
    }
}

/// Scans a grid (or Monte-Carlo points for `n >= 4`) over the result's box
/// and checks the containment the result promises, then estimates
/// `vol K`, `vol U(p)` and `vol V(p)` by Monte Carlo.
pub fn containment_check(
    result: &PssResult,
    k: &SemialgSet,
    opts: &CheckOptions,
) -> Result<ContainmentReport> {
    check_dim(k.dim(), result.poly.dim())?;
    let b = &result.bbox;
    let n = b.dim();
    let grid = opts.grid_per_axis.or_else(|| default_grid(n));
    if let Some(g) = grid {
        if g < 2 {
            return Err(Error::invalid("containment grid needs at least 2 points per axis"));
        }
    }
    let scan = |x: &[f64]| {
        let p = result.eval(x);
        let mut acc = ScanAcc::empty();
        acc.min_on_box = p;
        if k.contains(x) {
            acc.set_points = 1;
            acc.min_on_set = p;
        }
        if p <= 1.0 {
            acc.sublevel_points = 1;
            acc.max_violation = k.violation(x);
        }
        acc
    };
    let (acc, scanned) = match grid {
        Some(g) => {
            let total = grid_len(n, g);
            let acc = (0..total)
                .into_par_iter()
                .map(|i| scan(&grid_point(b, g, i)))
                .reduce(ScanAcc::empty, ScanAcc::merge);
            (acc, total)
        }
        None => {
            use rand::Rng;
            let total = opts.mc_samples;
            let chunks = total.div_ceil(MC_CHUNK);
            let acc = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream_rng(opts.seed ^ 0x5ca1_ab1e, c as u64);
                    let len = MC_CHUNK.min(total - c * MC_CHUNK);
                    let mut acc = ScanAcc::empty();
                    let mut t = vec![0.0; n];
                    for _ in 0..len {
                        t.iter_mut().for_each(|v| *v = rng.gen());
                        acc = acc.merge(scan(&b.lerp(&t)));
                    }
                    acc
                })
                .reduce(ScanAcc::empty, ScanAcc::merge);
            (acc, total)
        }
    };

    let vols = monte_carlo_volumes(b, opts.mc_samples, opts.seed, 3, |x, f| {
        let p = result.eval(x);
        f[0] = k.contains(x);
        f[1] = p >= 1.0;
        f[2] = p <= 1.0;
    });

    let tol = opts.tolerance;
    let (min_on_set, max_violation, passed) = match result.kind {
        PssKind::Outer | PssKind::Fit => {
            let m = (acc.set_points > 0).then_some(acc.min_on_set);
            let ok = m.is_none_or(|v| v >= 1.0 - tol) && acc.min_on_box >= -tol;
            (m, None, ok)
        }
        PssKind::Inner => {
            let v = acc.max_violation;
            (None, Some(v), v <= tol)
        }
    };
    Ok(ContainmentReport {
        kind: result.kind,
        grid_per_axis: grid,
        points_scanned: scanned,
        set_points: acc.set_points,
        min_on_set,
        min_on_box: acc.min_on_box,
        max_violation_in_sublevel: max_violation,
        sublevel_points: acc.sublevel_points,
        w: result.w,
        vol_set: vols[0],
        vol_superlevel: vols[1],
        vol_sublevel: vols[2],
        tolerance: tol,
        passed,
    })
}
