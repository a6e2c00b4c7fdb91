//! Conic solver adapter.
//!
//! Problems arrive in the standard form of [`ConicProblem`]; the only backend
//! is Clarabel, which takes `min q^T x s.t. A x + s = b, s in K`. Equality rows
//! map to the zero cone, and each constrained block `x_I` gets rows
//! `-D x_I + s = 0` with `D` the svec scaling (`sqrt 2` on off-diagonal PSD
//! entries).

use std::f64::consts::SQRT_2;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::certify::{triangle_index, Cone, ConicProblem};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Converged only to the backend's reduced tolerances.
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    /// Optimal or near-optimal; downstream code accepts both.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// Multipliers of the equality rows.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual| / max(1, min(|primal|, |dual|))`.
    pub gap: f64,
    pub iterations: u32,
    /// `max |A x - b|` over equality rows.
    pub equality_residual: f64,
    #[serde(skip)]
    pub solve_seconds: f64,
}

/// A backend able to solve problems with free, nonnegative and PSD blocks.
pub trait ConicBackend {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelBackend;

fn csc_from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    t.sort_by_key(|&(r, c, _)| (c, r));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match merged.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => merged.push((r, c, v)),
        }
    }
    let mut colptr = vec![0usize; cols + 1];
    for &(_, c, _) in &merged {
        colptr[c + 1] += 1;
    }
    for c in 0..cols {
        colptr[c + 1] += colptr[c];
    }
    let rowval = merged.iter().map(|e| e.0).collect();
    let nzval = merged.iter().map(|e| e.2).collect();
    CscMatrix::new(rows, cols, colptr, rowval, nzval)
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    }
}

impl ConicBackend for ClarabelBackend {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
        let start = Instant::now();
        let n = problem.num_vars();
        let m_eq = problem.num_rows();

        let mut triplets = problem.a.clone();
        let mut b = problem.b.clone();
        let mut cones = Vec::new();
        if m_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(m_eq));
        }
        let mut row = m_eq;
        for bl in &problem.blocks {
            match bl.cone {
                Cone::Free(_) => {}
                Cone::NonNeg(k) => {
                    for i in 0..k {
                        triplets.push((row + i, bl.offset + i, -1.0));
                    }
                    row += k;
                    cones.push(SupportedConeT::NonnegativeConeT(k));
                }
                Cone::Psd(k) => {
                    for j in 0..k {
                        for i in 0..=j {
                            let idx = triangle_index(i, j);
                            let scale = if i == j { 1.0 } else { SQRT_2 };
                            triplets.push((row + idx, bl.offset + idx, -scale));
                        }
                    }
                    row += bl.cone.num_vars();
                    cones.push(SupportedConeT::PSDTriangleConeT(k));
                }
            }
        }
        b.resize(row, 0.0);

        let a = csc_from_triplets(row, n, triplets);
        let p = CscMatrix::<f64>::zeros((n, n));
        let opts = DefaultSettingsBuilder::default()
            .verbose(settings.verbose)
            .max_iter(settings.max_iter)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap)
            .tol_gap_rel(settings.tol_gap)
            .direct_solve_method("faer".to_string())
            .max_threads(1)
            .build()
            .map_err(|e| Error::Solver {
                status: "settings".into(),
                detail: e.to_string(),
            })?;
        let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, opts)
            .map_err(|e| Error::Solver {
                status: "setup".into(),
                detail: e.to_string(),
            })?;
        solver.solve();
        let sol = &solver.solution;
        let status = map_status(sol.status);
        let primal = sol.x.clone();
        let dual = sol.z[..m_eq].to_vec();
        let (obj, dobj) = (sol.obj_val, sol.obj_val_dual);
        let gap = if obj.is_finite() && dobj.is_finite() {
            (obj - dobj).abs() / 1f64.max(obj.abs().min(dobj.abs()))
        } else {
            f64::INFINITY
        };
        let equality_residual = problem.equality_residual(&primal);
        Ok(ConicSolution {
            status,
            objective: problem.objective_value(&primal),
            dual_objective: dobj,
            gap,
            iterations: sol.iterations,
            equality_residual,
            primal,
            dual,
            solve_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Solves with the default backend.
pub fn solve_conic(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    ClarabelBackend.solve(problem, settings)
}

/// One LP row `sum_k coeffs[k].1 * x[coeffs[k].0] >= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `min c^T x s.t. every row holds`, with `x` free. Rows become nonnegative
/// slacks `t_i = a_i x - rhs_i` in the standard form.
pub fn solve_lp(
    objective: &[f64],
    rows: &[Inequality],
    settings: &SolverSettings,
) -> Result<ConicSolution> {
    let n = objective.len();
    let m = rows.len();
    let mut c = objective.to_vec();
    c.resize(n + m, 0.0);
    let mut entries = Vec::new();
    let mut b = Vec::with_capacity(m);
    for (i, r) in rows.iter().enumerate() {
        for &(k, v) in &r.coeffs {
            if k >= n {
                return Err(Error::invalid(format!("LP row {i} references x[{k}] of {n}")));
            }
            entries.push((i, k, v));
        }
        entries.push((i, n + i, -1.0));
        b.push(r.rhs);
    }
    let mut cones = vec![("x".to_string(), Cone::Free(n))];
    if m > 0 {
        cones.push(("slack".to_string(), Cone::NonNeg(m)));
    }
    let problem = ConicProblem::new(c, entries, b, cones)?;
    let mut sol = solve_conic(&problem, settings)?;
    sol.primal.truncate(n);
    Ok(sol)
}
