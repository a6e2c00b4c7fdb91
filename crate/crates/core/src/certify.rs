//! Lowering of Putinar-style positivity certificates to a standard-form
//! conic program.
//!
//! A certificate states `target = s_0 + sum_i s_i * g_i` with every `s_i` a
//! sum of squares, represented by a PSD Gram matrix over a monomial basis.
//! The decision vector is laid out as
//!
//! ```text
//! [ free block (polynomial coefficients, auxiliary scalars) | Gram 1 | Gram 2 | ... ]
//! ```
//!
//! Each Gram block stores the upper triangle of its symmetric matrix,
//! column-major (`(0,0), (0,1), (1,1), (0,2), ...`), unscaled. Equality rows
//! match the coefficients of every monomial of degree `<= 2r` between the
//! target and the certificate expansion.
//!
//! # Text format
//!
//! `ConicProblem::write_text` emits a line-oriented sparse description:
//!
//! ```text
//! psskit-conic 1
//! vars <N> rows <M>
//! cones <K>
//! free <len> <label>
//! nonneg <len> <label>
//! psd <side> <label>
//! objective <nnz>
//! <col> <value>
//! A <nnz>
//! <row> <col> <value>
//! b <nnz>
//! <row> <value>
//! ```
//!
//! Values are written with shortest round-trip exponent notation; entries are
//! sorted by index so identical problems serialize to identical bytes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::poly::{basis_len, expand_gram, monomial_basis, GramDecomposition, Monomial, MultiPoly};

/// `constant + sum_k free[k] * linear_k`, a polynomial whose coefficients are
/// affine in the free decision variables.
#[derive(Clone, Debug)]
pub struct AffinePolyExpr {
    dim: usize,
    constant: MultiPoly,
    linear: Vec<(usize, MultiPoly)>,
}

impl AffinePolyExpr {
    pub fn new(dim: usize, constant: MultiPoly, linear: Vec<(usize, MultiPoly)>) -> Result<Self> {
        check_dim(dim, constant.dim())?;
        for (_, p) in &linear {
            check_dim(dim, p.dim())?;
        }
        Ok(AffinePolyExpr {
            dim,
            constant,
            linear,
        })
    }

    /// The unknown polynomial `p = sum_alpha p_alpha x^alpha` over the degree-`d`
    /// basis, with `p_alpha` stored in free variables `first_var..`.
    pub fn unknown_polynomial(dim: usize, d: usize, first_var: usize) -> Self {
        let linear = monomial_basis(dim, d)
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                let mut p = MultiPoly::zero(dim);
                p.add_term(m, 1.0);
                (first_var + k, p)
            })
            .collect();
        AffinePolyExpr {
            dim,
            constant: MultiPoly::zero(dim),
            linear,
        }
    }

    /// Adds the constant polynomial `c`.
    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant = self
            .constant
            .add(&MultiPoly::constant(self.dim, c))
            .expect("same dimension");
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.linear
            .iter()
            .map(|(_, p)| p.degree())
            .chain(std::iter::once(self.constant.degree()))
            .max()
            .unwrap_or(0)
    }

    fn max_var(&self) -> Option<usize> {
        self.linear.iter().map(|(k, _)| *k).max()
    }

    /// The polynomial obtained by substituting values for the free variables.
    pub fn evaluate(&self, free: &[f64]) -> MultiPoly {
        let mut out = self.constant.clone();
        for (k, p) in &self.linear {
            for (m, c) in p.terms() {
                out.add_term(m.clone(), c * free[*k]);
            }
        }
        out
    }
}

/// One SOS multiplier: `s_0` (no generator) or the multiplier of generator `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplier {
    pub generator: Option<usize>,
    pub basis_degree: usize,
    pub size: usize,
}

/// `target >= 0` on `{g_i >= 0}`, certified at relaxation order `r`.
#[derive(Clone, Debug)]
pub struct PositivityConstraint {
    pub label: String,
    pub target: AffinePolyExpr,
    pub generators: Vec<MultiPoly>,
    pub order: usize,
    pub multipliers: Vec<Multiplier>,
}

impl PositivityConstraint {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn num_rows(&self) -> usize {
        basis_len(self.dim(), 2 * self.order)
    }
}

/// Half-degree `ceil(deg g / 2)` of a generator.
pub fn half_degree(g: &MultiPoly) -> usize {
    g.degree().div_ceil(2)
}

/// Builds the certificate `target = s_0 + sum_i s_i g_i` with `s_0` over the
/// degree-`r` basis and `s_i` over the degree-`(r - ceil(deg g_i / 2))` basis.
pub fn sos_constraint(
    label: impl Into<String>,
    target: AffinePolyExpr,
    generators: Vec<MultiPoly>,
    r: usize,
) -> Result<PositivityConstraint> {
    let label = label.into();
    let n = target.dim();
    for g in &generators {
        check_dim(n, g.dim())?;
    }
    if 2 * r < target.degree() {
        return Err(Error::RelaxationOrder {
            order: r,
            minimum: target.degree().div_ceil(2),
            what: format!("{label}: target of degree {}", target.degree()),
        });
    }
    let mut multipliers = vec![Multiplier {
        generator: None,
        basis_degree: r,
        size: basis_len(n, r),
    }];
    for (i, g) in generators.iter().enumerate() {
        if g.is_constant() {
            return Err(Error::invalid(format!(
                "{label}: generator {} is constant",
                i + 1
            )));
        }
        let ri = half_degree(g);
        if r < ri {
            return Err(Error::RelaxationOrder {
                order: r,
                minimum: ri,
                what: format!("{label}: generator {} of degree {}", i + 1, g.degree()),
            });
        }
        multipliers.push(Multiplier {
            generator: Some(i),
            basis_degree: r - ri,
            size: basis_len(n, r - ri),
        });
    }
    Ok(PositivityConstraint {
        label,
        target,
        generators,
        order: r,
        multipliers,
    })
}

/// Cone of one block of decision variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Free(usize),
    NonNeg(usize),
    /// Symmetric PSD matrices of the given side length.
    Psd(usize),
}

impl Cone {
    pub fn num_vars(&self) -> usize {
        match *self {
            Cone::Free(k) | Cone::NonNeg(k) => k,
            Cone::Psd(k) => k * (k + 1) / 2,
        }
    }
}

/// Position of one cone block in the flat decision vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    pub label: String,
    pub cone: Cone,
    pub offset: usize,
}

/// Flat index of upper-triangle entry `(row, col)`, `row <= col`, within a PSD block.
pub fn triangle_index(row: usize, col: usize) -> usize {
    let (i, j) = if row <= col { (row, col) } else { (col, row) };
    j * (j + 1) / 2 + i
}

/// `min c^T x  s.t.  A x = b,  x in cone_1 x cone_2 x ...`
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub objective: Vec<f64>,
    /// Equality matrix as `(row, col, value)` triplets sorted by `(row, col)`.
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub blocks: Vec<BlockLayout>,
}

impl ConicProblem {
    /// Builds a problem from blocks in order; offsets are recomputed.
    pub fn new(
        objective: Vec<f64>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        b: Vec<f64>,
        cones: Vec<(String, Cone)>,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(cones.len());
        let mut offset = 0;
        for (label, cone) in cones {
            blocks.push(BlockLayout {
                label,
                cone,
                offset,
            });
            offset += cone.num_vars();
        }
        check_dim(offset, objective.len())?;
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= b.len() || c >= offset {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside {}x{offset} equality matrix",
                    b.len()
                )));
            }
            *merged.entry((r, c)).or_insert(0.0) += v;
        }
        let a = merged
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(ConicProblem {
            objective,
            a,
            b,
            blocks,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Flat index of `(row, col)` inside PSD block `block`.
    pub fn psd_index(&self, block: usize, row: usize, col: usize) -> usize {
        let bl = &self.blocks[block];
        match bl.cone {
            Cone::Psd(k) => {
                assert!(row < k && col < k, "entry outside PSD block");
                bl.offset + triangle_index(row, col)
            }
            other => panic!("block {block} is {other:?}, not PSD"),
        }
    }

    /// Reads PSD block `block` out of a flat vector as a full symmetric matrix.
    pub fn psd_block(&self, block: usize, x: &[f64]) -> DMatrix<f64> {
        let k = match self.blocks[block].cone {
            Cone::Psd(k) => k,
            other => panic!("block {block} is {other:?}, not PSD"),
        };
        DMatrix::from_fn(k, k, |i, j| x[self.psd_index(block, i, j)])
    }

    /// `max_i |(A x - b)_i|`.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.num_rows()];
        for &(r, c, v) in &self.a {
            ax[r] += v * x[c];
        }
        ax.iter()
            .zip(&self.b)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn write_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "psskit-conic 1");
        let _ = writeln!(s, "vars {} rows {}", self.num_vars(), self.num_rows());
        let _ = writeln!(s, "cones {}", self.blocks.len());
        for bl in &self.blocks {
            let label = if bl.label.is_empty() { "-" } else { &bl.label };
            let _ = match bl.cone {
                Cone::Free(k) => writeln!(s, "free {k} {label}"),
                Cone::NonNeg(k) => writeln!(s, "nonneg {k} {label}"),
                Cone::Psd(k) => writeln!(s, "psd {k} {label}"),
            };
        }
        let obj: Vec<_> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .collect();
        let _ = writeln!(s, "objective {}", obj.len());
        for (i, v) in obj {
            let _ = writeln!(s, "{i} {v:e}");
        }
        let _ = writeln!(s, "A {}", self.a.len());
        for (r, c, v) in &self.a {
            let _ = writeln!(s, "{r} {c} {v:e}");
        }
        let rhs: Vec<_> = self
            .b
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .collect();
        let _ = writeln!(s, "b {}", rhs.len());
        for (i, v) in rhs {
            let _ = writeln!(s, "{i} {v:e}");
        }
        s
    }

    pub fn read_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::invalid(format!("conic text: missing {what}")))
        };
        let bad = |l: &str| Error::invalid(format!("conic text: malformed line `{l}`"));

        let header = next("header")?;
        if header != "psskit-conic 1" {
            return Err(bad(header));
        }
        let sizes = next("sizes")?;
        let f: Vec<&str> = sizes.split_whitespace().collect();
        let (nvars, nrows) = match f.as_slice() {
            ["vars", v, "rows", r] => (
                v.parse::<usize>().map_err(|_| bad(sizes))?,
                r.parse::<usize>().map_err(|_| bad(sizes))?,
            ),
            _ => return Err(bad(sizes)),
        };
        let count = |line: &str, key: &str| -> Result<usize> {
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                [k, n] if *k == key => n.parse().map_err(|_| bad(line)),
                _ => Err(bad(line)),
            }
        };
        let ncones = count(next("cones")?, "cones")?;
        let mut cones = Vec::with_capacity(ncones);
        for _ in 0..ncones {
            let l = next("cone")?;
            let mut it = l.splitn(3, ' ');
            let kind = it.next().unwrap_or_default();
            let k: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(l))?;
            let label = match it.next().unwrap_or("-") {
                "-" => String::new(),
                s => s.to_string(),
            };
            let cone = match kind {
                "free" => Cone::Free(k),
                "nonneg" => Cone::NonNeg(k),
                "psd" => Cone::Psd(k),
                _ => return Err(bad(l)),
            };
            cones.push((label, cone));
        }
        let mut objective = vec![0.0; nvars];
        for _ in 0..count(next("objective")?, "objective")? {
            let l = next("objective entry")?;
            let mut it = l.split_whitespace();
            let i: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            let v: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            *objective.get_mut(i).ok_or_else(|| bad(l))? = v;
        }
        let mut entries = Vec::new();
        for _ in 0..count(next("A")?, "A")? {
            let l = next("A entry")?;
            let mut it = l.split_whitespace();
            let r: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            let c: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            let v: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            entries.push((r, c, v));
        }
        let mut b = vec![0.0; nrows];
        for _ in 0..count(next("b")?, "b")? {
            let l = next("b entry")?;
            let mut it = l.split_whitespace();
            let i: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            let v: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(l))?;
            *b.get_mut(i).ok_or_else(|| bad(l))? = v;
        }
        ConicProblem::new(objective, entries, b, cones)
    }
}

/// An assembled SOS program: the conic problem plus the certificates it
/// encodes, so solutions can be mapped back to Gram matrices.
#[derive(Clone, Debug)]
pub struct SosProgram {
    pub problem: ConicProblem,
    pub constraints: Vec<PositivityConstraint>,
    free_vars: usize,
    /// For each constraint, the layout block index of each multiplier.
    multiplier_blocks: Vec<Vec<usize>>,
    /// For each constraint, its first equality row.
    row_offsets: Vec<usize>,
}

/// Lowers certificates sharing one free-variable space into a conic problem.
/// `objective` is the cost on the free block; Gram blocks carry zero cost.
pub fn assemble(objective: Vec<f64>, constraints: Vec<PositivityConstraint>) -> Result<SosProgram> {
    let free_vars = objective.len();
    let dim = constraints
        .first()
        .map(|c| c.dim())
        .ok_or_else(|| Error::invalid("no constraints to assemble"))?;
    for c in &constraints {
        check_dim(dim, c.dim())?;
        if let Some(k) = c.target.max_var() {
            if k >= free_vars {
                return Err(Error::invalid(format!(
                    "{}: free variable {k} outside free block of {free_vars}",
                    c.label
                )));
            }
        }
    }

    let mut cones = vec![("free".to_string(), Cone::Free(free_vars))];
    let mut multiplier_blocks = Vec::with_capacity(constraints.len());
    for c in &constraints {
        let mut ids = Vec::with_capacity(c.multipliers.len());
        for m in &c.multipliers {
            ids.push(cones.len());
            let name = match m.generator {
                None => format!("{}/s0", c.label),
                Some(i) => format!("{}/s{}", c.label, i + 1),
            };
            cones.push((name, Cone::Psd(m.size)));
        }
        multiplier_blocks.push(ids);
    }
    let mut offsets = Vec::with_capacity(cones.len());
    let mut total = 0;
    for (_, cone) in &cones {
        offsets.push(total);
        total += cone.num_vars();
    }

    let mut full_objective = vec![0.0; total];
    full_objective[..free_vars].copy_from_slice(&objective);

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = Vec::new();
    let mut row_offsets = Vec::with_capacity(constraints.len());
    for (ci, c) in constraints.iter().enumerate() {
        let row0 = b.len();
        row_offsets.push(row0);
        let rows_basis = monomial_basis(dim, 2 * c.order);
        let row_of: HashMap<&Monomial, usize> = rows_basis
            .iter()
            .enumerate()
            .map(|(i, m)| (m, row0 + i))
            .collect();
        b.extend(std::iter::repeat(0.0).take(rows_basis.len()));

        // target side: + linear part, constants move to the right-hand side
        for (k, p) in &c.target.linear {
            for (m, v) in p.terms() {
                entries.push((row_of[m], *k, v));
            }
        }
        for (m, v) in c.target.constant.terms() {
            b[row_of[m]] -= v;
        }

        // certificate side: - sum_i <G_i, pi pi^T g_i>
        let one = MultiPoly::constant(dim, 1.0);
        for (mult, &block) in c.multipliers.iter().zip(&multiplier_blocks[ci]) {
            let g = match mult.generator {
                None => &one,
                Some(i) => &c.generators[i],
            };
            let basis = monomial_basis(dim, mult.basis_degree);
            let off = offsets[block];
            for j in 0..basis.len() {
                for i in 0..=j {
                    let weight = if i == j { 1.0 } else { 2.0 };
                    let prod = basis[i].mul(&basis[j]);
                    let col = off + triangle_index(i, j);
                    for (gm, gv) in g.terms() {
                        let row = row_of[&prod.mul(gm)];
                        entries.push((row, col, -weight * gv));
                    }
                }
            }
        }
    }

    let problem = ConicProblem::new(full_objective, entries, b, cones)?;
    Ok(SosProgram {
        problem,
        constraints,
        free_vars,
        multiplier_blocks,
        row_offsets,
    })
}

impl SosProgram {
    pub fn num_free(&self) -> usize {
        self.free_vars
    }

    pub fn free_values<'a>(&self, primal: &'a [f64]) -> &'a [f64] {
        &primal[..self.free_vars]
    }

    /// Equality rows belonging to constraint `i`.
    pub fn rows_of(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.row_offsets[i];
        start..start + self.constraints[i].num_rows()
    }

    /// Gram matrices of constraint `i`'s multipliers, `s_0` first.
    pub fn grams(&self, i: usize, primal: &[f64]) -> Vec<GramDecomposition> {
        self.constraints[i]
            .multipliers
            .iter()
            .zip(&self.multiplier_blocks[i])
            .map(|(m, &block)| {
                GramDecomposition::new(m.basis_degree, self.problem.psd_block(block, primal))
            })
            .collect()
    }

    /// Smallest Gram eigenvalue over every multiplier.
    pub fn min_gram_eigenvalue(&self, primal: &[f64]) -> f64 {
        (0..self.constraints.len())
            .flat_map(|i| self.grams(i, primal))
            .map(|g| g.min_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest coefficient mismatch between each target and the polynomial
    /// `s_0 + sum_i s_i g_i` rebuilt from the Gram blocks of `primal`.
    pub fn certificate_residual(&self, primal: &[f64]) -> Result<f64> {
        check_dim(self.problem.num_vars(), primal.len())?;
        let free = self.free_values(primal);
        let mut worst: f64 = 0.0;
        for (i, c) in self.constraints.iter().enumerate() {
            let n = c.dim();
            let mut rebuilt = MultiPoly::zero(n);
            for (mult, gram) in c.multipliers.iter().zip(self.grams(i, primal)) {
                let s = expand_gram(&gram, n)?;
                let term = match mult.generator {
                    None => s,
                    Some(k) => s.mul(&c.generators[k])?,
                };
                rebuilt = rebuilt.add(&term)?;
            }
            let diff = c.target.evaluate(free).sub(&rebuilt)?;
            worst = worst.max(diff.max_abs_coeff());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::BoundingBox;

    fn poly(n: usize, terms: &[(&[u32], f64)]) -> MultiPoly {
        MultiPoly::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    fn example_6_1_generators() -> Vec<MultiPoly> {
        vec![
            poly(2, &[(&[0, 0], 1.0), (&[0, 1], 2.0)]),
            poly(2, &[(&[0, 0], 2.0), (&[1, 0], -4.0), (&[0, 1], -3.0)]),
            poly(
                2,
                &[
                    (&[0, 0], 10.0),
                    (&[1, 0], -28.0),
                    (&[0, 1], -5.0),
                    (&[1, 1], -24.0),
                    (&[0, 2], -18.0),
                ],
            ),
            poly(
                2,
                &[
                    (&[0, 0], 1.0),
                    (&[0, 1], -1.0),
                    (&[2, 0], -8.0),
                    (&[1, 1], -2.0),
                    (&[0, 2], -1.0),
                    (&[2, 1], -8.0),
                    (&[1, 2], -6.0),
                ],
            ),
        ]
    }

    fn sizes(c: &PositivityConstraint) -> Vec<usize> {
        c.multipliers.iter().map(|m| m.size).collect()
    }

    #[test]
    fn box_certificate_block_sizes() {
        let b = BoundingBox::symmetric_unit(2);
        let target = AffinePolyExpr::unknown_polynomial(2, 6, 0);
        let c = sos_constraint("B", target, b.quadratics(), 3).unwrap();
        assert_eq!(sizes(&c), vec![10, 6, 6]);
        assert_eq!(c.num_rows(), 28);
    }

    #[test]
    fn univariate_without_generators() {
        let target = AffinePolyExpr::unknown_polynomial(1, 2, 0);
        let c = sos_constraint("B", target, vec![], 1).unwrap();
        assert_eq!(sizes(&c), vec![2]);
        assert_eq!(c.num_rows(), 3);
    }

    #[test]
    fn example_6_1_set_certificate_block_sizes() {
        let target = AffinePolyExpr::unknown_polynomial(2, 6, 0).plus_constant(-1.0);
        let c = sos_constraint("K", target, example_6_1_generators(), 3).unwrap();
        assert_eq!(sizes(&c), vec![10, 6, 6, 6, 3]);
        // independent count: monomials of degree <= r - r_i
        let counted: Vec<usize> = [3usize, 2, 2, 2, 1]
            .iter()
            .map(|&k| monomial_basis(2, k).len())
            .collect();
        assert_eq!(sizes(&c), counted);
    }

    #[test]
    fn order_too_small_names_generator() {
        let target = AffinePolyExpr::unknown_polynomial(2, 2, 0).plus_constant(-1.0);
        let err = sos_constraint("K", target, example_6_1_generators(), 1).unwrap_err();
        match err {
            Error::RelaxationOrder { order, minimum, what } => {
                assert_eq!((order, minimum), (1, 2));
                assert!(what.contains("generator 4"), "{what}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let target = AffinePolyExpr::unknown_polynomial(1, 4, 0);
        assert!(matches!(
            sos_constraint("B", target, vec![], 1),
            Err(Error::RelaxationOrder { .. })
        ));
    }

    #[test]
    fn constant_generator_rejected() {
        let target = AffinePolyExpr::unknown_polynomial(1, 2, 0);
        assert!(sos_constraint("K", target, vec![MultiPoly::constant(1, 2.0)], 1).is_err());
    }

    #[test]
    fn degree_zero_problem_layout() {
        let b = BoundingBox::symmetric_unit(1);
        let obj = crate::moments::objective_vector(&b, 0);
        let pb = sos_constraint("B", AffinePolyExpr::unknown_polynomial(1, 0, 0), b.quadratics(), 1).unwrap();
        let pk = sos_constraint(
            "K",
            AffinePolyExpr::unknown_polynomial(1, 0, 0).plus_constant(-1.0),
            b.quadratics(),
            1,
        )
        .unwrap();
        let prog = assemble(obj, vec![pb, pk]).unwrap();
        assert_eq!(prog.num_free(), 1);
        assert_eq!(prog.problem.objective[0], 2.0);
        assert!(prog.problem.objective[1..].iter().all(|&v| v == 0.0));
        assert_eq!(prog.problem.blocks.len(), 5);
    }

    #[test]
    fn one_d_layout_counts() {
        let b = BoundingBox::new(vec![1.5], vec![4.0]).unwrap();
        let g1 = poly(1, &[(&[0], 0.5), (&[1], -2.0), (&[2], 1.0)]);
        let g2 = poly(1, &[(&[0], 3.0), (&[1], -1.0)]);
        let obj = crate::moments::objective_vector(&b, 8);
        let pb = sos_constraint("B", AffinePolyExpr::unknown_polynomial(1, 8, 0), b.quadratics(), 4).unwrap();
        let pk = sos_constraint(
            "K",
            AffinePolyExpr::unknown_polynomial(1, 8, 0).plus_constant(-1.0),
            vec![g1, g2],
            4,
        )
        .unwrap();
        let prog = assemble(obj.clone(), vec![pb, pk]).unwrap();
        let free: Vec<_> = prog.problem.blocks.iter().filter(|b| matches!(b.cone, Cone::Free(9))).collect();
        assert_eq!(free.len(), 1);
        let psd = prog.problem.blocks.iter().filter(|b| matches!(b.cone, Cone::Psd(_))).count();
        // B: s0 and one box multiplier; K: s0 and two generator multipliers
        assert_eq!(psd, 5);
        assert_eq!(&prog.problem.objective[..9], obj.as_slice());
        assert_eq!(prog.problem.num_rows(), 18);
    }

    #[test]
    fn hand_built_certificate_has_zero_residual() {
        // 1 + x^2 = s0 with Gram identity over [1, x]; target has no free vars
        let target = AffinePolyExpr::new(1, poly(1, &[(&[0], 1.0), (&[2], 1.0)]), vec![]).unwrap();
        let c = sos_constraint("T", target, vec![], 1).unwrap();
        let prog = assemble(vec![0.0], vec![c]).unwrap();
        let mut x = vec![0.0; prog.problem.num_vars()];
        x[prog.problem.psd_index(1, 0, 0)] = 1.0;
        x[prog.problem.psd_index(1, 1, 1)] = 1.0;
        assert_eq!(prog.certificate_residual(&x).unwrap(), 0.0);
        assert_eq!(prog.problem.equality_residual(&x), 0.0);

        // perturbing an off-diagonal entry moves the x coefficient by twice the amount
        x[prog.problem.psd_index(1, 0, 1)] = 1e-3;
        let r = prog.certificate_residual(&x).unwrap();
        assert!((r - 2e-3).abs() < 1e-15, "{r}");
        assert!((prog.problem.equality_residual(&x) - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn text_roundtrip_and_determinism() {
        let b = BoundingBox::symmetric_unit(2);
        let build = || {
            let obj = crate::moments::objective_vector(&b, 2);
            let pb = sos_constraint("B", AffinePolyExpr::unknown_polynomial(2, 2, 0), b.quadratics(), 1).unwrap();
            assemble(obj, vec![pb]).unwrap()
        };
        let t1 = build().problem.write_text();
        let t2 = build().problem.write_text();
        assert_eq!(t1, t2);
        let back = ConicProblem::read_text(&t1).unwrap();
        assert_eq!(back, build().problem);
        assert!(ConicProblem::read_text("nonsense").is_err());
    }
}
