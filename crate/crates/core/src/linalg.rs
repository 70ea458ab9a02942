//! Dense complex vectors of runtime length and the regularized rank-1
//! inverse `(g g^H + c I)^{-1}`.

use std::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex column vector (channel, beamformer or direction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVec(Vec<Complex64>);

impl CVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("vector length must be >= 1".into()));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Domain("vector entries must be finite".into()));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Standard basis vector `e_k` of length `len`.
    pub fn basis(len: usize, k: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real_imag(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                left: re.len(),
                right: im.len(),
            });
        }
        Self::new(
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    /// `self + s * other`
    pub fn axpy(&self, s: Complex64, other: &CVec) -> Result<Self> {
        check_len(self, other)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &CVec) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

fn check_len(a: &CVec, b: &CVec) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `a^H b` (conjugate-linear in `a`).
pub fn inner(a: &CVec, b: &CVec) -> Result<Complex64> {
    check_len(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum())
}

/// Applies `(g g^H + c I)^{-1}` to `x` using the Woodbury identity:
/// `(1/c) (x - g (g^H x) / (c + ||g||^2))`.
pub fn reg_rank1_inverse_apply(g: &CVec, c: f64, x: &CVec) -> Result<CVec> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "regularization must be positive and finite, got {c}"
        )));
    }
    let gx = inner(g, x)?;
    let coeff = -gx / (c + g.norm_sqr());
    Ok(x.axpy(coeff, g)?.scale(1.0 / c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_on_basis() {
        let e1 = CVec::basis(3, 0);
        let e2 = CVec::basis(3, 1);
        assert_eq!(inner(&e1, &e1).unwrap(), c(1.0, 0.0));
        assert_eq!(inner(&e1, &e2).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first() {
        let a = CVec::new(vec![c(1.0, 2.0), c(-0.5, 0.3)]).unwrap();
        let b = CVec::new(vec![c(0.2, -1.0), c(3.0, 0.1)]).unwrap();
        let s = c(0.7, -1.3);
        let lhs = inner(&a.scale_complex(s), &b).unwrap();
        let rhs = s.conj() * inner(&a, &b).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn inner_length_mismatch() {
        let err = inner(&CVec::zeros(2), &CVec::zeros(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { left: 2, right: 3 });
    }

    #[test]
    fn rank1_inverse_with_zero_g_scales() {
        let x = CVec::new(vec![c(1.0, -1.0), c(2.0, 0.5)]).unwrap();
        let y = reg_rank1_inverse_apply(&CVec::zeros(2), 4.0, &x).unwrap();
        assert_eq!(y, x.scale(0.25));
    }

    #[test]
    fn rank1_inverse_eigenvector() {
        let g = CVec::new(vec![c(1.0, 2.0), c(0.5, -0.5), c(-1.0, 0.0)]).unwrap();
        let cc = 0.3;
        let y = reg_rank1_inverse_apply(&g, cc, &g).unwrap();
        let expected = g.scale(1.0 / (cc + g.norm_sqr()));
        assert!(y.sub(&expected).unwrap().norm() < 1e-14 * expected.norm());
    }

    #[test]
    fn rank1_inverse_rejects_nonpositive_c() {
        let g = CVec::basis(2, 0);
        assert!(reg_rank1_inverse_apply(&g, 0.0, &g).is_err());
        assert!(reg_rank1_inverse_apply(&g, -1.0, &g).is_err());
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(CVec::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(CVec::new(vec![]).is_err());
    }
}
