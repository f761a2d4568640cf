//! Univariate polynomials over [`Scalar`] and exact characteristic polynomials.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Coefficients lowest degree first; trailing zeros are always trimmed, so the
/// zero polynomial is the empty list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Scalar>", into = "Vec<Scalar>")]
pub struct Polynomial {
    coeffs: Vec<Scalar>,
}

impl TryFrom<Vec<Scalar>> for Polynomial {
    type Error = Error;
    fn try_from(coeffs: Vec<Scalar>) -> Result<Self> {
        Ok(Polynomial::new(coeffs))
    }
}

impl From<Polynomial> for Vec<Scalar> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `λ^d`.
    pub fn monomial(d: usize) -> Self {
        let mut coeffs = vec![Scalar::zero(); d + 1];
        coeffs[d] = Scalar::one();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    /// True iff the polynomial is exactly `λ^deg`.
    pub fn is_pure_power(&self) -> bool {
        match self.coeffs.split_last() {
            Some((lead, rest)) => lead.is_one() && rest.iter().all(Scalar::is_zero),
            None => false,
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &Scalar::from_i64(k as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(lead) => {
                let inv = lead.inv().expect("nonzero leading coefficient");
                Self::new(self.coeffs.iter().map(|c| c * &inv).collect())
            }
            None => Self::zero(),
        }
    }

    /// Remainder of division by a nonzero divisor.
    pub fn rem(&self, divisor: &Polynomial) -> Result<Polynomial> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::Domain("division by the zero polynomial".into()))?;
        let lead_inv = divisor.leading().and_then(Scalar::inv).expect("nonzero lead");
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let q = &r[top] * &lead_inv;
            if !q.is_zero() {
                let shift = top - dd;
                for (k, c) in divisor.coeffs.iter().enumerate() {
                    r[shift + k] -= &(&q * c);
                }
            }
            r.pop();
            while r.last().is_some_and(Scalar::is_zero) {
                r.pop();
            }
        }
        Ok(Polynomial::new(r))
    }

    /// Monic greatest common divisor (Euclid over the field).
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("b is nonzero");
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let negative = c.is_real() && c.re < num_traits::Zero::zero();
            let mag = if negative { -c } else { c.clone() };
            let coef = if mag.is_one() && k > 0 {
                String::new()
            } else if mag.is_real() {
                mag.to_string()
            } else {
                format!("({mag})")
            };
            let term = match k {
                0 => coef,
                1 => format!("{coef}λ"),
                _ => format!("{coef}λ^{k}"),
            };
            let sign = match (out.is_empty(), negative) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            out.push_str(sign);
            out.push_str(&term);
        }
        f.write_str(&out)
    }
}

/// `det(λI − m)`, computed by the Faddeev–LeVerrier recurrence with exact
/// division by the step index.
pub fn char_poly(m: &Matrix) -> Result<Polynomial> {
    m.require_square("characteristic polynomial")?;
    let n = m.rows();
    if n == 0 {
        return Err(Error::Shape("characteristic polynomial of a 0x0 matrix".into()));
    }
    let mut coeffs = vec![Scalar::zero(); n + 1];
    coeffs[n] = Scalar::one();
    let id = Matrix::identity(n);
    let mut mk = Matrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m * &mk;
        next.add_scaled(&coeffs[n - k + 1], &id);
        let am = m * &next;
        let tr = am.trace()?;
        coeffs[n - k] = -(tr.checked_div(&Scalar::from_i64(k as i64)).expect("k > 0"));
        mk = next;
    }
    Ok(Polynomial::new(coeffs))
}

/// Number of distinct complex roots: `deg p − deg gcd(p, p′)`.
pub fn distinct_eigenvalue_count(p: &Polynomial) -> Result<usize> {
    let deg = p
        .degree()
        .ok_or_else(|| Error::Domain("the zero polynomial has no finite root count".into()))?;
    let g = p.gcd(&p.derivative());
    Ok(deg - g.degree().unwrap_or(0))
}
