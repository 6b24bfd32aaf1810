//! The ring `R_m[D]` of polynomials in the differentiation symbol `D` taken
//! modulo `D^{m+1}`, together with Laplace characters and the backward
//! signed shift.
//!
//! Elements act on a tail function `F̄` through `D^{-1} F̄ = -∫_x^∞ F̄`: the
//! coefficient `c_k` of an operator is paired with `D^{k-1} F̄`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::symbolic::SymbolicScalar;
use crate::tail::{TailError, TailModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DopError {
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("element has zero constant term and is not invertible")]
    NotInvertible,
    #[error("backward shift needs order >= 1")]
    ShiftOfOrderZero,
    #[error("a ring element needs at least one coefficient")]
    Empty,
    #[error("need {needed} moments for order {order}, got {got}")]
    TooFewMoments { order: usize, needed: usize, got: usize },
    #[error("cannot truncate order {from} up to {to}")]
    TruncateUp { from: usize, to: usize },
    #[error(transparent)]
    Tail(#[from] TailError),
}

/// Element `c_0 + c_1 D + ... + c_m D^m` of `R_m[D]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DPoly<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> DPoly<S> {
    /// Builds an element of order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<S>) -> Result<Self, DopError> {
        if coeffs.is_empty() {
            return Err(DopError::Empty);
        }
        Ok(DPoly { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        DPoly {
            coeffs: vec![S::zero(); order + 1],
        }
    }

    /// The multiplicative unit `Id`.
    pub fn unit(order: usize) -> Self {
        Self::monomial(0, S::one(), order)
    }

    /// `c D^k`, which is zero when `k > order`.
    pub fn monomial(k: usize, c: S, order: usize) -> Self {
        let mut p = Self::zero(order);
        if k <= order {
            p.coeffs[k] = c;
        }
        p
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &S {
        &self.coeffs[k]
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    fn check_order(&self, other: &Self) -> Result<(), DopError> {
        if self.order() != other.order() {
            return Err(DopError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Result<Self, DopError> {
        if order > self.order() {
            return Err(DopError::TruncateUp {
                from: self.order(),
                to: order,
            });
        }
        Ok(DPoly {
            coeffs: self.coeffs[..=order].to_vec(),
        })
    }

    /// Truncates both operands to the smaller order.
    pub fn truncate_to_min(a: &Self, b: &Self) -> (Self, Self) {
        let m = a.order().min(b.order());
        (a.truncate(m).unwrap(), b.truncate(m).unwrap())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, DopError> {
        self.check_order(rhs)?;
        Ok(DPoly {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, DopError> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        DPoly {
            coeffs: self.coeffs.iter().map(S::neg).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        DPoly {
            coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect(),
        }
    }

    /// Cauchy product with every power above the order discarded.
    pub fn mul(&self, rhs: &Self) -> Result<Self, DopError> {
        self.check_order(rhs)?;
        let m = self.order();
        let coeffs = (0..=m)
            .map(|k| {
                (0..=k).fold(S::zero(), |acc, j| {
                    acc.add(&self.coeffs[j].mul(&rhs.coeffs[k - j]))
                })
            })
            .collect();
        Ok(DPoly { coeffs })
    }

    /// Multiplicative inverse by the power-series recursion
    /// `b_0 = 1/c_0`, `b_k = -(1/c_0) Σ_{j=1..k} c_j b_{k-j}`.
    pub fn inverse(&self) -> Result<Self, DopError> {
        let inv_c0 = self.coeffs[0].recip().ok_or(DopError::NotInvertible)?;
        let mut b: Vec<S> = Vec::with_capacity(self.coeffs.len());
        b.push(inv_c0.clone());
        for k in 1..=self.order() {
            let s = (1..=k).fold(S::zero(), |acc, j| acc.add(&self.coeffs[j].mul(&b[k - j])));
            b.push(s.mul(&inv_c0).neg());
        }
        Ok(DPoly { coeffs: b })
    }

    /// Nonnegative integer power.
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::unit(self.order());
        for _ in 0..n {
            acc = acc.mul(self).expect("same order");
        }
        acc
    }

    /// Backward signed shift: `S D^0 = 0`, `S D^j = -D^{j-1}`.
    pub fn shift(&self) -> Result<Self, DopError> {
        if self.order() == 0 {
            return Err(DopError::ShiftOfOrderZero);
        }
        Ok(DPoly {
            coeffs: self.coeffs[1..].iter().map(S::neg).collect(),
        })
    }

    /// Laplace character `Σ_{k<=m} (-1)^k μ_k D^k / k!` from the moments
    /// `μ_0..μ_m` of a possibly defective measure.
    pub fn laplace_character(moments: &[S], order: usize) -> Result<Self, DopError> {
        if moments.len() < order + 1 {
            return Err(DopError::TooFewMoments {
                order,
                needed: order + 1,
                got: moments.len(),
            });
        }
        let mut fact = S::one();
        let coeffs = moments[..=order]
            .iter()
            .enumerate()
            .map(|(k, mu)| {
                if k > 0 {
                    fact = fact.mul(&S::inv_int(k as u64));
                }
                let c = mu.mul(&fact);
                if k % 2 == 1 {
                    c.neg()
                } else {
                    c
                }
            })
            .collect();
        Ok(DPoly { coeffs })
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.order() == other.order()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| a.approx_eq(b))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(S::is_zero)
    }
}

impl DPoly<f64> {
    /// The addends `c_k D^{k-1} F̄(x)`, `k = 0..=order`.
    pub fn tail_terms(&self, model: &dyn TailModel, x: f64) -> Result<Vec<f64>, DopError> {
        if self.order() > 0 && model.k_max() + 1 < self.order() {
            return Err(TailError::DerivativeOrder {
                k: self.order() - 1,
                k_max: model.k_max(),
            }
            .into());
        }
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| Ok(c * d_power(model, k as i64 - 1, x)?))
            .collect()
    }

    /// `Σ_k c_k D^{k-1} F̄(x)`.
    pub fn apply_to_tail(&self, model: &dyn TailModel, x: f64) -> Result<f64, DopError> {
        Ok(self.tail_terms(model, x)?.iter().sum())
    }

    /// Largest relative deviation of `self * other` from the unit, each
    /// coefficient measured against the magnitude of the products summed
    /// into it.
    pub fn unit_residual(&self, other: &Self) -> Result<f64, DopError> {
        self.check_order(other)?;
        let prod = self.mul(other)?;
        let mut worst: f64 = 0.0;
        for k in 0..=self.order() {
            let scale = (0..=k)
                .map(|j| (self.coeffs[j] * other.coeffs[k - j]).abs())
                .sum::<f64>()
                .max(crate::scalar::FLOAT_ABS_FLOOR);
            let target = if k == 0 { 1.0 } else { 0.0 };
            worst = worst.max((prod.coeffs[k] - target).abs() / scale);
        }
        Ok(worst)
    }
}

/// `D^j F̄(x)` for `j >= -1`.
pub fn d_power(model: &dyn TailModel, j: i64, x: f64) -> Result<f64, TailError> {
    match j {
        -1 => Ok(-model.itail(x)?),
        0 => model.tail(x),
        k if k > 0 => model.dtail(k as usize, x),
        _ => unreachable!("only D^-1 is defined on tails"),
    }
}

impl DPoly<SymbolicScalar> {
    /// Canonical text: one `coeff * factors * D^k` term per monomial,
    /// sorted by `k` then by monomial, joined with ` + `.
    pub fn canonical_text(&self) -> String {
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            for (m, r) in c.terms() {
                let coef = crate::scalar::format_rational(r);
                if m.is_one() {
                    parts.push(format!("{coef} * D^{k}"));
                } else {
                    parts.push(format!("{coef} * {m} * D^{k}"));
                }
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for DPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c}) D^{k}")?;
        }
        Ok(())
    }
}
