//! The expansion operator `(1−p)(Id−ℒ_{F₊,m−1})^{−2}(Sℒ_{F₋,m})^{−1}` acting on
//! `D^{−1}F̄`, its `F̄₊` counterpart, the penultimate form in `F̄₊`, and
//! residual diagnostics against oracle values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dop::{DPoly, DopError};
use crate::ladder::{LadderError, MomentSet};
use crate::scalar::{ratio, Scalar};
use crate::symbolic::{SymbolicError, SymbolicScalar, Symbol};
use crate::tail::TailModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("order m = {0} is not allowed; the expansion needs m >= 1")]
    OrderTooSmall(usize),
    #[error("order m = {m} is not below min(alpha, kappa, omega) = {bound}")]
    OrderTooLarge { m: usize, bound: f64 },
    #[error(transparent)]
    Moments(#[from] LadderError),
    #[error(transparent)]
    Ring(#[from] DopError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Checks `1 <= m < min(alpha, kappa, omega)`; returns a warning when `m`
/// is within 0.5 of the bound.
pub fn check_order(m: usize, alpha: f64, kappa: f64, omega: f64) -> Result<Option<String>, ExpansionError> {
    if m < 1 {
        return Err(ExpansionError::OrderTooSmall(m));
    }
    let bound = alpha.min(kappa).min(omega);
    if m as f64 >= bound {
        return Err(ExpansionError::OrderTooLarge { m, bound });
    }
    Ok((bound - m as f64 <= 0.5).then(|| {
        format!("m = {m} is within 0.5 of min(alpha, kappa, omega) = {bound}; expect slow convergence")
    }))
}

/// `q (Id − ℒ_{F₊,m−1})^{−2} (S ℒ_{F₋,m})^{−1}`, order `m − 1`, over any
/// scalar. `mu_plus[0]` must be the ascent probability written so that
/// `1 − mu_plus[0]` is a unit of the substrate.
pub fn theorem_operator<S: Scalar>(q: &S, mu_minus: &[S], mu_plus: &[S], m: usize) -> Result<DPoly<S>, ExpansionError> {
    if m < 1 {
        return Err(ExpansionError::OrderTooSmall(m));
    }
    let sl = fplus_operator_generic(mu_minus, m)?;
    let lp = DPoly::laplace_character(&mu_plus[..mu_plus.len().min(m)], m - 1)?;
    let factor = DPoly::unit(m - 1).sub(&lp)?.inverse()?.pow(2);
    Ok(factor.mul(&sl)?.scale(q))
}

/// `(S ℒ_{F₋,m})^{−1}`, order `m − 1`.
pub fn fplus_operator_generic<S: Scalar>(mu_minus: &[S], m: usize) -> Result<DPoly<S>, ExpansionError> {
    if m < 1 {
        return Err(ExpansionError::OrderTooSmall(m));
    }
    let lm = DPoly::laplace_character(&mu_minus[..mu_minus.len().min(m + 1)], m)?;
    Ok(lm.shift()?.inverse()?)
}

/// `q (Id − ℒ_{F₊,m})^{−2}`, order `m`, applied to `F̄₊` itself.
pub fn penultimate_operator_generic<S: Scalar>(q: &S, mu_plus: &[S], m: usize) -> Result<DPoly<S>, ExpansionError> {
    let lp = DPoly::laplace_character(&mu_plus[..mu_plus.len().min(m + 1)], m)?;
    Ok(DPoly::unit(m).sub(&lp)?.inverse()?.pow(2).scale(q))
}

/// Numeric operator of the main expansion from a moment set.
pub fn build_operator(ms: &MomentSet, m: usize) -> Result<DPoly<f64>, ExpansionError> {
    if m < 1 {
        return Err(ExpansionError::OrderTooSmall(m));
    }
    ms.check(m)?;
    theorem_operator(&(1.0 - ms.p), &ms.mu_minus, &ms.mu_plus, m)
}

/// Numeric `F̄₊` operator.
pub fn fplus_operator(ms: &MomentSet, m: usize) -> Result<DPoly<f64>, ExpansionError> {
    if m < 1 {
        return Err(ExpansionError::OrderTooSmall(m));
    }
    if ms.mu_minus.len() < m + 1 {
        return Err(LadderError::Missing {
            what: format!("mu_minus up to order {m}"),
        }
        .into());
    }
    fplus_operator_generic(&ms.mu_minus, m)
}

/// Numeric penultimate operator; needs `μ_{F₊,0..m}`.
pub fn penultimate_operator(ms: &MomentSet, m: usize) -> Result<DPoly<f64>, ExpansionError> {
    if ms.mu_plus.len() < m + 1 {
        return Err(LadderError::Missing {
            what: format!("mu_plus up to order {m}"),
        }
        .into());
    }
    penultimate_operator_generic(&(1.0 - ms.p), &ms.mu_plus, m)
}

fn sym(s: Symbol) -> SymbolicScalar {
    SymbolicScalar::symbol(s)
}

fn symbolic_moments(m: usize) -> (SymbolicScalar, Vec<SymbolicScalar>, Vec<SymbolicScalar>) {
    let q = sym(Symbol::Q);
    let one = <SymbolicScalar as Scalar>::one();
    let mut mu_minus = vec![one.clone()];
    mu_minus.extend((1..=m as u32).map(|j| sym(Symbol::MuMinus(j))));
    // μ[Fp,0] = p is written 1 − q so that Id − ℒ_{F₊} has the unit q as
    // constant term
    let mut mu_plus = vec![Scalar::sub(&one, &q)];
    mu_plus.extend((1..=m as u32).map(|j| sym(Symbol::MuPlus(j))));
    (q, mu_minus, mu_plus)
}

/// The main operator with moment symbols, `q = 1 − p` kept as a symbol.
pub fn symbolic_operator(m: usize) -> Result<DPoly<SymbolicScalar>, ExpansionError> {
    let (q, mu_minus, mu_plus) = symbolic_moments(m);
    theorem_operator(&q, &mu_minus, &mu_plus, m)
}

pub fn symbolic_fplus_operator(m: usize) -> Result<DPoly<SymbolicScalar>, ExpansionError> {
    let (_, mu_minus, _) = symbolic_moments(m);
    fplus_operator_generic(&mu_minus, m)
}

pub fn symbolic_penultimate_operator(m: usize) -> Result<DPoly<SymbolicScalar>, ExpansionError> {
    let (q, _, mu_plus) = symbolic_moments(m);
    penultimate_operator_generic(&q, &mu_plus, m)
}

/// Rewrites an expression in terms of the step mean through
/// `μ[Fm,1] = μ[F,1] / q`.
pub fn express_in_step_mean(e: &SymbolicScalar) -> Result<SymbolicScalar, ExpansionError> {
    let value = Scalar::mul(&sym(Symbol::MuF), &sym(Symbol::Q).pow(-1).expect("q is a unit"));
    Ok(e.substitute(Symbol::MuMinus(1), &value)?)
}

/// Imposes `μ[F,1] = q μ[Fm,1]` (the inverse rewrite).
pub fn eliminate_step_mean(e: &SymbolicScalar) -> Result<SymbolicScalar, ExpansionError> {
    let value = Scalar::mul(&sym(Symbol::Q), &sym(Symbol::MuMinus(1)));
    Ok(e.substitute(Symbol::MuF, &value)?)
}

/// One line of a symbolic listing: the coefficient of `D^{power}F̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct ListingTerm {
    pub power: i64,
    pub coeff: SymbolicScalar,
}

/// Coefficients of the order-`m` operator paired with `D^{k−1}F̄`.
///
/// As in the computer-algebra convention (series truncated at `x^{m−1}`
/// before dividing by `x`), only the first `m − 1` terms are listed unless
/// `all_terms` is set; `m = 1` always lists its single term.
pub fn symbolic_listing(m: usize, all_terms: bool, in_step_mean: bool) -> Result<Vec<ListingTerm>, ExpansionError> {
    let op = symbolic_operator(m)?;
    let n = if all_terms || m == 1 { m } else { m - 1 };
    op.coeffs()
        .iter()
        .take(n)
        .enumerate()
        .map(|(k, c)| {
            let coeff = if in_step_mean {
                express_in_step_mean(c)?
            } else {
                c.clone()
            };
            Ok(ListingTerm {
                power: k as i64 - 1,
                coeff,
            })
        })
        .collect()
}

/// The coefficients displayed for `m = 4` in terms of `μ[F,1]` and `q`:
/// `1/μ_F`, `(q μ₋₂ − 4 μ₊₁ μ₋₁)/(2 μ_F²)` and
/// `(3q²μ₋₂² + 12 μ_F(μ₋₁μ₊₂ − μ₊₁μ₋₂) + 36 μ₋₁²μ₊₁² − 2 q μ_F μ₋₃)/(12 μ_F³)`.
pub fn displayed_three_terms() -> Vec<SymbolicScalar> {
    let c = |n: i64, d: i64| SymbolicScalar::constant(ratio(n, d));
    let mul = |a: &SymbolicScalar, b: &SymbolicScalar| Scalar::mul(a, b);
    let add = |a: &SymbolicScalar, b: &SymbolicScalar| Scalar::add(a, b);
    let sub = |a: &SymbolicScalar, b: &SymbolicScalar| Scalar::sub(a, b);
    let q = sym(Symbol::Q);
    let mf = sym(Symbol::MuF);
    let mm = |j| sym(Symbol::MuMinus(j));
    let mp = |j| sym(Symbol::MuPlus(j));
    let inv_mf = |e: i32| mf.pow(-e).expect("monomial");

    let c0 = inv_mf(1);
    let c1 = mul(
        &mul(&c(1, 2), &inv_mf(2)),
        &sub(&mul(&q, &mm(2)), &mul(&c(4, 1), &mul(&mp(1), &mm(1)))),
    );
    let bracket = {
        let t1 = mul(&c(3, 1), &mul(&mul(&q, &q), &mul(&mm(2), &mm(2))));
        let t2 = mul(
            &mul(&c(12, 1), &mf),
            &sub(&mul(&mm(1), &mp(2)), &mul(&mp(1), &mm(2))),
        );
        let t3 = mul(&c(36, 1), &mul(&mul(&mm(1), &mm(1)), &mul(&mp(1), &mp(1))));
        let t4 = mul(&c(2, 1), &mul(&mul(&q, &mf), &mm(3)));
        sub(&add(&add(&t1, &t2), &t3), &t4)
    };
    let c2 = mul(&mul(&c(1, 12), &inv_mf(3)), &bracket);
    vec![c0, c1, c2]
}

/// Value of an operator at `x` with its addends `c_k D^{k−1}F̄(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: f64,
    pub terms: Vec<f64>,
    pub value: f64,
}

pub fn evaluate(op: &DPoly<f64>, model: &dyn TailModel, x: f64) -> Result<Evaluation, ExpansionError> {
    let terms = op.tail_terms(model, x)?;
    Ok(Evaluation {
        x,
        value: terms.iter().sum(),
        terms,
    })
}

/// Linearised standard error of a quantity computed from a moment set,
/// treating the moment standard errors as independent. `p` and
/// `μ_{F₊,0}` move together.
pub fn propagate_se(
    ms: &MomentSet,
    f: &dyn Fn(&MomentSet) -> Result<f64, ExpansionError>,
) -> Result<f64, ExpansionError> {
    let base = f(ms)?;
    let mut var = 0.0;
    let mut bump = |g: &dyn Fn(&mut MomentSet)| -> Result<(), ExpansionError> {
        let mut pert = ms.clone();
        g(&mut pert);
        var += (f(&pert)? - base).powi(2);
        Ok(())
    };
    if ms.p_se > 0.0 {
        bump(&|s: &mut MomentSet| {
            s.p += ms.p_se;
            s.mu_plus[0] = s.p;
        })?;
    }
    for (k, &se) in ms.mu_minus_se.iter().enumerate().skip(1) {
        if se > 0.0 && k < ms.mu_minus.len() {
            bump(&|s: &mut MomentSet| s.mu_minus[k] += se)?;
        }
    }
    for (k, &se) in ms.mu_plus_se.iter().enumerate().skip(1) {
        if se > 0.0 && k < ms.mu_plus.len() {
            bump(&|s: &mut MomentSet| s.mu_plus[k] += se)?;
        }
    }
    Ok(var.sqrt())
}

/// The scale `x^{−m+2} F̄(x)` of the remainder (for `m = 1`, the leading
/// term `|c_0 D^{−1}F̄(x)|` instead, since there the remainder is only
/// small relative to it).
pub fn residual_scale(op: &DPoly<f64>, m: usize, model: &dyn TailModel, x: f64) -> Result<f64, ExpansionError> {
    if m == 1 {
        Ok((op.coeff(0) * model.itail(x).map_err(DopError::from)?).abs())
    } else {
        Ok(x.powi(2 - m as i32) * model.tail(x).map_err(DopError::from)?)
    }
}

/// One row of the residual diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub x: f64,
    pub value: f64,
    pub reference: f64,
    /// Uncertainty of the reference (se or interval half-width).
    pub reference_err: f64,
    pub residual: f64,
    pub scaled: f64,
}

/// Residual table of the expansion against reference values
/// `(x, W̄(x), uncertainty)`. The model is evaluated at `x + eval_shift`
/// (the lattice midpoint offset, zero for continuous references).
pub fn residual_diagnostic(
    op: &DPoly<f64>,
    m: usize,
    model: &dyn TailModel,
    reference: &[(f64, f64, f64)],
    eval_shift: f64,
) -> Result<Vec<ResidualRow>, ExpansionError> {
    reference
        .iter()
        .map(|&(x, w, err)| {
            let y = x + eval_shift;
            let value = op.apply_to_tail(model, y)?;
            let residual = (w - value).abs();
            Ok(ResidualRow {
                x,
                value,
                reference: w,
                reference_err: err,
                residual,
                scaled: residual / residual_scale(op, m, model, y)?,
            })
        })
        .collect()
}

/// True when the scaled residual is nonincreasing over the upper half of
/// the rows.
pub fn residual_passes(rows: &[ResidualRow]) -> bool {
    let upper = &rows[rows.len() / 2..];
    upper.windows(2).all(|w| w[1].scaled <= w[0].scaled)
}
