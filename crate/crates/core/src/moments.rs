//! Lebesgue moments of axis-aligned boxes and the L1 objective vector.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::{monomial_basis, Monomial, MultiPoly};

/// Axis-aligned box `[lo, hi]` with nonempty interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxJson", into = "BoxJson")]
pub struct BoundingBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<BoxJson> for BoundingBox {
    type Error = Error;
    fn try_from(b: BoxJson) -> Result<Self> {
        BoundingBox::new(b.lo, b.hi)
    }
}

impl From<BoundingBox> for BoxJson {
    fn from(b: BoundingBox) -> Self {
        BoxJson { lo: b.lo, hi: b.hi }
    }
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::invalid("box must have at least one dimension"));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid(format!(
                    "box side {} is [{a}, {b}]; need finite a < b",
                    i + 1
                )));
            }
        }
        Ok(BoundingBox { lo, hi })
    }

    /// `[-1, 1]^n`.
    pub fn symmetric_unit(n: usize) -> Self {
        BoundingBox {
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Same center, every side scaled by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        let c = self.center();
        let h = self.half_widths();
        BoundingBox {
            lo: c.iter().zip(&h).map(|(c, h)| c - factor * h).collect(),
            hi: c.iter().zip(&h).map(|(c, h)| c + factor * h).collect(),
        }
    }

    /// `lo + t * (hi - lo)` componentwise, for `t` in `[0,1]^n`.
    pub fn lerp(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect()
    }

    /// The moment `int_B x^alpha dx`.
    pub fn moment(&self, alpha: &Monomial) -> f64 {
        box_moment(self, alpha)
    }

    /// Box quadratics `(x_j - a_j)(b_j - x_j)`, nonnegative exactly on the box.
    pub fn quadratics(&self) -> Vec<MultiPoly> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let xj = MultiPoly::var(n, j);
                let left = xj.sub(&MultiPoly::constant(n, self.lo[j])).expect("dim");
                let right = MultiPoly::constant(n, self.hi[j]).sub(&xj).expect("dim");
                left.mul(&right).expect("dim")
            })
            .collect()
    }
}

/// `prod_i (b_i^(alpha_i+1) - a_i^(alpha_i+1)) / (alpha_i+1)`.
pub fn box_moment(b: &BoundingBox, alpha: &Monomial) -> f64 {
    assert_eq!(b.dim(), alpha.dim(), "box and monomial dimensions differ");
    alpha
        .exponents()
        .iter()
        .zip(b.lo.iter().zip(&b.hi))
        .map(|(&e, (&lo, &hi))| interval_moment(lo, hi, e))
        .product()
}

/// `int_lo^hi x^e dx`.
pub(crate) fn interval_moment(lo: f64, hi: f64, e: u32) -> f64 {
    if e == 0 {
        return hi - lo;
    }
    let k = e as i32 + 1;
    (hi.powi(k) - lo.powi(k)) / k as f64
}

/// Signed integral of `p` over the box.
pub fn l1_norm(p: &MultiPoly, b: &BoundingBox) -> Result<f64> {
    check_dim(b.dim(), p.dim())?;
    Ok(p.terms().map(|(m, c)| c * box_moment(b, m)).sum())
}

/// Moments of the degree-`d` monomial basis, so that
/// `l1_norm(p, b) == <coeffs(p), objective_vector(b, d)>`.
pub fn objective_vector(b: &BoundingBox, d: usize) -> Vec<f64> {
    monomial_basis(b.dim(), d)
        .iter()
        .map(|m| box_moment(b, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_examples() {
        let sq = BoundingBox::symmetric_unit(2);
        assert_eq!(box_moment(&sq, &Monomial::one(2)), 4.0);
        let unit = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(box_moment(&unit, &Monomial::new(vec![3])), 0.25);
        let ref_box = BoundingBox::new(vec![-0.8, -0.5], vec![0.6, 1.0]).unwrap();
        assert!((box_moment(&ref_box, &Monomial::one(2)) - 2.1).abs() < 1e-15);
    }

    #[test]
    fn l1_examples() {
        let sq = BoundingBox::symmetric_unit(2);
        assert_eq!(l1_norm(&MultiPoly::constant(2, 1.0), &sq).unwrap(), 4.0);
        let line = BoundingBox::symmetric_unit(1);
        assert_eq!(l1_norm(&MultiPoly::var(1, 0), &line).unwrap(), 0.0);
        assert!(l1_norm(&MultiPoly::var(2, 0), &line).is_err());
    }

    #[test]
    fn l1_of_reference_degree8_polynomial() {
        // Exact rational evaluation of the same sum gives 2.4724263740079366.
        let coeffs = [
            107.28, -606.07, 1090.8, -961.88, 477.92, -139.5, 23.434, -2.0515, 0.069473,
        ];
        let p = MultiPoly::from_terms(
            1,
            coeffs.iter().enumerate().map(|(k, &c)| (vec![k as u32], c)),
        )
        .unwrap();
        let b = BoundingBox::new(vec![1.5], vec![4.0]).unwrap();
        let w = l1_norm(&p, &b).unwrap();
        assert!((w - 2.4724263740079366).abs() < 1e-9, "{w}");
    }

    #[test]
    fn objective_vector_examples() {
        let unit = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(objective_vector(&unit, 1), vec![1.0, 0.5]);
        assert_eq!(
            objective_vector(&BoundingBox::symmetric_unit(2), 1),
            vec![4.0, 0.0, 0.0]
        );
        let v = objective_vector(&BoundingBox::symmetric_unit(1), 2);
        assert_eq!(v[0], 2.0);
        assert_eq!(v[1], 0.0);
        assert!((v[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_box() {
        assert!(BoundingBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoundingBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(serde_json::from_str::<BoundingBox>(r#"{"lo":[2.0],"hi":[1.0]}"#).is_err());
    }

    #[test]
    fn box_quadratics_vanish_on_faces() {
        let b = BoundingBox::new(vec![1.5], vec![4.0]).unwrap();
        let q = &b.quadratics()[0];
        assert_eq!(q.eval(&[1.5]).unwrap(), 0.0);
        assert_eq!(q.eval(&[4.0]).unwrap(), 0.0);
        assert!(q.eval(&[2.0]).unwrap() > 0.0);
    }
}
