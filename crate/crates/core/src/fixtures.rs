//! Reference sets and point clouds. The JSON and CSV files under
//! `crates/core/fixtures/` are generated from these functions by
//! `cargo run --example gen_fixtures`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::approx::SemialgSet;
use crate::moments::BoundingBox;
use crate::poly::MultiPoly;
use crate::rng::stream_rng;

fn poly(n: usize, terms: &[(&[u32], f64)]) -> MultiPoly {
    MultiPoly::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).expect("fixture polynomial")
}

/// Schur stabilizability region of `x2 + 2 x1 z - (2 x1 + x2) z^3 + z^4`.
pub fn example_6_1() -> SemialgSet {
    let g = vec![
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
    ];
    let b = BoundingBox::new(vec![-0.8, -0.5], vec![0.6, 1.0]).expect("box");
    SemialgSet::new(g, b).expect("fixture set")
}

/// `{(x-1)^2 - 0.5 >= 0, 3 - x >= 0}` in `[1.5, 4]`, i.e. the interval `[1 + sqrt(0.5), 3]`.
pub fn one_d() -> SemialgSet {
    let g = vec![
        poly(1, &[(&[2], 1.0), (&[1], -2.0), (&[0], 0.5)]),
        poly(1, &[(&[0], 3.0), (&[1], -1.0)]),
    ];
    SemialgSet::new(g, BoundingBox::new(vec![1.5], vec![4.0]).expect("box")).expect("fixture set")
}

/// Closed unit disk in `[-1.2, 1.2]^2`.
pub fn unit_disk() -> SemialgSet {
    let g = vec![poly(2, &[(&[0, 0], 1.0), (&[2, 0], -1.0), (&[0, 2], -1.0)])];
    SemialgSet::new(g, BoundingBox::new(vec![-1.2, -1.2], vec![1.2, 1.2]).expect("box")).expect("fixture set")
}

/// Closed-loop coefficients `c_0..c_7` (ascending powers of `s`) of
/// `s D(s) + (kI + kP s + kD s^2) N(s)` with
/// `N = s^3 - 2s^2 - s - 1`, `D = s^6 + 2s^5 + 32s^4 + 26s^3 + 65s^2 - 8s + 1`
/// and gains `kI = 25(x1 - 1)`, `kP = 10(x2 - 1.5)`, `kD = 10(x3 - 1)`.
pub fn pid_characteristic() -> Vec<MultiPoly> {
    let n = 3;
    let s_d = [0.0, 1.0, -8.0, 65.0, 26.0, 32.0, 2.0, 1.0];
    let num = [-1.0, -1.0, -2.0, 1.0];
    let gains = [
        poly(n, &[(&[1, 0, 0], 25.0), (&[0, 0, 0], -25.0)]),
        poly(n, &[(&[0, 1, 0], 10.0), (&[0, 0, 0], -15.0)]),
        poly(n, &[(&[0, 0, 1], 10.0), (&[0, 0, 0], -10.0)]),
    ];
    (0..8)
        .map(|k| {
            let mut c = MultiPoly::constant(n, s_d[k]);
            for (i, g) in gains.iter().enumerate() {
                if k >= i && k - i < num.len() {
                    c = c.add(&g.scale(num[k - i])).expect("dim");
                }
            }
            c
        })
        .collect()
}

/// Determinant of a square matrix of polynomials by cofactor expansion
/// along rows, memoized on the set of remaining columns.
fn poly_det(m: &[Vec<MultiPoly>], dim: usize) -> MultiPoly {
    use std::collections::HashMap;
    fn rec(
        m: &[Vec<MultiPoly>],
        row: usize,
        cols: u32,
        dim: usize,
        memo: &mut HashMap<u32, MultiPoly>,
    ) -> MultiPoly {
        let k = m.len();
        if row == k {
            return MultiPoly::constant(dim, 1.0);
        }
        if let Some(v) = memo.get(&cols) {
            return v.clone();
        }
        let mut acc = MultiPoly::zero(dim);
        let mut sign = 1.0;
        for j in 0..k {
            if cols & (1 << j) == 0 {
                continue;
            }
            if !m[row][j].is_zero() {
                let minor = rec(m, row + 1, cols & !(1 << j), dim, memo);
                let term = m[row][j].mul(&minor).expect("dim").scale(sign);
                acc = acc.add(&term).expect("dim");
            }
            sign = -sign;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    let mut memo = HashMap::new();
    rec(m, 0, (1u32 << m.len()) - 1, dim, &mut memo)
}

fn normalized(g: MultiPoly) -> MultiPoly {
    let m = g.max_abs_coeff();
    g.scale(1.0 / m)
}

/// Stabilizing PID gains in `[-1, 1]^3` via the Liénard-Chipart criterion:
/// `a_7, a_5, a_3, a_1 >= 0` and Hurwitz minors `D_6, D_4, D_2 >= 0` for
/// `a_0 s^7 + a_1 s^6 + ... + a_7`. Each generator is scaled to unit max
/// coefficient; constant conditions are dropped.
pub fn pid() -> SemialgSet {
    let n = 3;
    let c = pid_characteristic();
    let deg = 7;
    // a_i = coefficient of s^(7-i)
    let a = |i: isize| -> MultiPoly {
        if (0..=deg as isize).contains(&i) {
            c[deg - i as usize].clone()
        } else {
            MultiPoly::zero(n)
        }
    };
    let hurwitz_minor = |k: usize| -> MultiPoly {
        let m: Vec<Vec<MultiPoly>> = (0..k)
            .map(|i| (0..k).map(|j| a(2 * j as isize - i as isize + 1)).collect())
            .collect();
        poly_det(&m, n)
    };
    let mut gens = Vec::new();
    for i in [7, 5, 3, 1] {
        gens.push(a(i));
    }
    for k in [6, 4, 2] {
        gens.push(hurwitz_minor(k));
    }
    let gens = gens
        .into_iter()
        .filter(|g| !g.is_constant())
        .map(normalized)
        .collect();
    SemialgSet::new(gens, BoundingBox::symmetric_unit(n)).expect("fixture set")
}

pub const GAUSSIAN_MEANS: [[f64; 2]; 3] = [[0.4, 0.3], [-0.3, -0.5], [-0.5, 0.4]];
pub const GAUSSIAN_VARIANCE: f64 = 0.1;
pub const GAUSSIAN_SEED: u64 = 2015;

/// `count` points from an equal-weight mixture of `N(mean, 0.1 I)` over
/// [`GAUSSIAN_MEANS`], redrawing any point outside `[-1, 1]^2`.
pub fn gaussian_mixture_points(count: usize, seed: u64) -> Vec<Vec<f64>> {
    gaussian_mixture_points_with_variance(count, seed, GAUSSIAN_VARIANCE)
}

/// Same mixture with a different per-axis variance.
pub fn gaussian_mixture_points_with_variance(count: usize, seed: u64, variance: f64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    let normal = Normal::new(0.0, variance.sqrt()).expect("variance");
    let b = BoundingBox::symmetric_unit(2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mean = GAUSSIAN_MEANS[rng.gen_range(0..GAUSSIAN_MEANS.len())];
        let x: Vec<f64> = mean.iter().map(|m| m + normal.sample(&mut rng)).collect();
        if b.contains(&x) {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_interval() {
        let k = one_d();
        let lo = 1.0 + 0.5f64.sqrt();
        assert!(k.contains(&[lo + 1e-12]));
        assert!(!k.contains(&[lo - 1e-9]));
        assert!(k.contains(&[3.0]));
        assert!(!k.contains(&[3.0 + 1e-12]));
    }

    #[test]
    fn example_6_1_contains_origin() {
        let k = example_6_1();
        assert!(k.contains(&[0.0, 0.0]));
        assert!(!k.contains(&[0.5, 0.9]));
    }

    #[test]
    fn pid_characteristic_at_zero_gains() {
        // x = (1, 1.5, 1) zeroes all gains, leaving s D(s)
        let c = pid_characteristic();
        let v: Vec<f64> = c.iter().map(|p| p.eval(&[1.0, 1.5, 1.0]).unwrap()).collect();
        assert_eq!(v, vec![0.0, 1.0, -8.0, 65.0, 26.0, 32.0, 2.0, 1.0]);
        // kI alone multiplies N(s)
        let v: Vec<f64> = c.iter().map(|p| p.eval(&[2.0, 1.5, 1.0]).unwrap()).collect();
        assert_eq!(&v[..4], &[-25.0, 1.0 - 25.0, -8.0 - 50.0, 65.0 + 25.0]);
    }

    #[test]
    fn poly_det_matches_numeric() {
        let m: Vec<Vec<MultiPoly>> = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]
            .iter()
            .map(|r| r.iter().map(|&v| MultiPoly::constant(1, v)).collect())
            .collect();
        let d = poly_det(&m, 1);
        assert!((d.eval(&[0.0]).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn pid_set_is_nonempty_and_proper() {
        let k = pid();
        assert_eq!(k.dim(), 3);
        let g = 21;
        let b = k.bbox().clone();
        let inside = (0..g * g * g)
            .filter(|&i| k.contains(&crate::approx::grid_point(&b, g, i)))
            .count();
        assert!(inside > 0 && inside < g * g * g, "{inside}");
    }

    #[test]
    fn gaussian_points_reproducible_and_in_box() {
        let a = gaussian_mixture_points(100, GAUSSIAN_SEED);
        assert_eq!(a, gaussian_mixture_points(100, GAUSSIAN_SEED));
        assert!(a.iter().all(|x| x.iter().all(|v| v.abs() <= 1.0)));
    }
}
