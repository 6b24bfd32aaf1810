//! Ruin probabilities of the renewal risk model: the net loss per claim is
//! `X = A − cT`, and the ruin probability from initial capital `x` is the
//! tail `P{M > x}` of the maximum of the walk with steps `X`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{build_operator, check_order, evaluate, ExpansionError};
use crate::ladder::{simulate_max, Censor, MaxTail, MomentSet};
use crate::quad;
use crate::rng::WalkRng;
use crate::step::Step;
use crate::tail::{parse_kv, take_keys, TailError, TailModel, TailSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuinError {
    #[error("net loss mean E A - c E T = {0} must be negative")]
    NonNegativeMean(f64),
    #[error("malformed interarrival spec `{0}`")]
    Spec(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// Interarrival law `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Interarrival {
    Exponential { mean: f64 },
    Deterministic { t: f64 },
}

impl Interarrival {
    pub fn mean(&self) -> f64 {
        match *self {
            Interarrival::Exponential { mean } => mean,
            Interarrival::Deterministic { t } => t,
        }
    }
}

impl fmt::Display for Interarrival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interarrival::Exponential { mean } => write!(f, "exp:mean={mean}"),
            Interarrival::Deterministic { t } => write!(f, "det:t={t}"),
        }
    }
}

/// `exp:mean=2`, `exp:rate=0.5` or `det:t=1`.
impl FromStr for Interarrival {
    type Err = RuinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RuinError::Spec(s.to_string());
        let (name, kv) = parse_kv(s).ok_or_else(bad)?;
        let out = match name.as_str() {
            "exp" | "exponential" => {
                if kv.iter().any(|(k, _)| k == "rate") {
                    let v = take_keys(&kv, &[("rate", None)]).ok_or_else(bad)?;
                    Interarrival::Exponential { mean: 1.0 / v[0] }
                } else {
                    let v = take_keys(&kv, &[("mean", None)]).ok_or_else(bad)?;
                    Interarrival::Exponential { mean: v[0] }
                }
            }
            "det" | "deterministic" => {
                let v = take_keys(&kv, &[("t", None)]).ok_or_else(bad)?;
                Interarrival::Deterministic { t: v[0] }
            }
            _ => return Err(bad()),
        };
        if !(out.mean() > 0.0) || !out.mean().is_finite() {
            return Err(bad());
        }
        Ok(out)
    }
}

/// Step tail `F̄(x) = ∫ L̄(x + ct) dK(t)` of the net loss, with derivatives
/// `F̄^{(k)}(x) = ∫ L̄^{(k)}(x + ct) dK(t)`.
#[derive(Debug)]
pub struct NetLossTail {
    claims: Box<dyn TailModel>,
    interarrival: Interarrival,
    premium: f64,
}

/// Exponential weights beyond this many mean lengths are below `e^{-40}`.
const EXP_CUTOFF: f64 = 40.0;

impl NetLossTail {
    /// `∫_0^∞ g(x + ct) dK(t)` for a function `g` of the claim scale.
    fn mix(&self, x: f64, g: &dyn Fn(f64) -> Result<f64, TailError>) -> Result<f64, TailError> {
        match self.interarrival {
            Interarrival::Deterministic { t } => g(x + self.premium * t),
            Interarrival::Exponential { mean } => {
                // substitute u = c t: density e^{-u/b}/b with b = c E T
                let b = self.premium * mean;
                // the integrand's domain starts at x, so probing there
                // surfaces any error before the quadrature runs
                g(x)?;
                Ok(quad::integrate(
                    &|u: f64| g(x + u).map_or(f64::NAN, |val| val * (-u / b).exp() / b),
                    0.0,
                    EXP_CUTOFF * b,
                ))
            }
        }
    }
}

impl TailModel for NetLossTail {
    fn alpha(&self) -> f64 {
        self.claims.alpha()
    }
    fn x_min(&self) -> f64 {
        match self.interarrival {
            Interarrival::Deterministic { t } => self.claims.x_min() - self.premium * t,
            Interarrival::Exponential { .. } => self.claims.x_min(),
        }
    }
    fn k_max(&self) -> usize {
        self.claims.k_max()
    }
    fn smoothness_order(&self) -> f64 {
        self.claims.smoothness_order()
    }
    fn tail(&self, x: f64) -> Result<f64, TailError> {
        self.dtail(0, x)
    }
    fn dtail(&self, k: usize, x: f64) -> Result<f64, TailError> {
        if x < self.x_min() || x.is_nan() {
            return Err(TailError::OutsideDomain {
                x,
                x_min: self.x_min(),
            });
        }
        self.mix(x, &|y| self.claims.dtail(k, y))
    }
    fn itail(&self, x: f64) -> Result<f64, TailError> {
        if x < self.x_min() || x.is_nan() {
            return Err(TailError::OutsideDomain {
                x,
                x_min: self.x_min(),
            });
        }
        // order exchange: ∫_x^∞ ∫ L̄(y + ct) dK dy = ∫ Ī_L(x + ct) dK
        self.mix(x, &|y| self.claims.itail(y))
    }
    fn describe(&self) -> String {
        format!(
            "net loss tail of {} with {} and premium {}",
            self.claims.describe(),
            self.interarrival,
            self.premium
        )
    }
}

/// Claims `A` with tail `L̄`, interarrivals `T ~ K`, premium rate `c`.
#[derive(Debug)]
pub struct RuinScenario {
    claims: TailSpec,
    interarrival: Interarrival,
    premium: f64,
    tail: NetLossTail,
    mean: f64,
}

impl RuinScenario {
    pub fn new(claims: TailSpec, interarrival: Interarrival, premium: f64) -> Result<Self, RuinError> {
        if !(premium > 0.0) || !premium.is_finite() {
            return Err(RuinError::Invalid(format!("premium rate must be positive, got {premium}")));
        }
        let model = claims.build()?;
        let mean = claims.raw_moment(1) - premium * interarrival.mean();
        if !(mean < 0.0) {
            return Err(RuinError::NonNegativeMean(mean));
        }
        Ok(RuinScenario {
            claims,
            interarrival,
            premium,
            tail: NetLossTail {
                claims: model,
                interarrival,
                premium,
            },
            mean,
        })
    }

    pub fn claims(&self) -> &TailSpec {
        &self.claims
    }

    pub fn interarrival(&self) -> Interarrival {
        self.interarrival
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    /// The step tail model `F̄`.
    pub fn step_tail(&self) -> &NetLossTail {
        &self.tail
    }

    /// Exact ladder moments when interarrivals are exponential: the
    /// descending ladder height is `−Exp(mean cET)`, `p = E A/(c E T)`, and
    /// `F₊` is `p` times the equilibrium law of `A`.
    pub fn exact_moments(&self, m: usize) -> Result<MomentSet, RuinError> {
        let Interarrival::Exponential { mean } = self.interarrival else {
            return Err(RuinError::Invalid(
                "closed-form ladder moments need exponential interarrivals".into(),
            ));
        };
        let b = self.premium * mean;
        let ea = self.claims.raw_moment(1);
        let p = ea / b;
        let mut mu_minus = vec![1.0];
        let mut fact = 1.0;
        for k in 1..=m {
            fact *= k as f64;
            mu_minus.push(if k % 2 == 0 { 1.0 } else { -1.0 } * fact * b.powi(k as i32));
        }
        let mu_plus: Vec<f64> = (0..m.max(1) as u32)
            .map(|k| p * self.claims.raw_moment(k + 1) / ((k + 1) as f64 * ea))
            .collect();
        if mu_plus.iter().any(|v| !v.is_finite()) {
            return Err(RuinError::Invalid(format!(
                "claims lack the moment of order {} needed for m = {m}",
                m
            )));
        }
        Ok(MomentSet::exact(p, self.mean, mu_minus, mu_plus, "closed form (exponential interarrivals)"))
    }
}

impl Step for RuinScenario {
    fn sample(&self, rng: &mut WalkRng) -> f64 {
        let a = self.claims.inverse_survival(1.0 - rng.gen::<f64>());
        let t = match self.interarrival {
            Interarrival::Exponential { mean } => Exp::new(1.0 / mean)
                .expect("positive rate")
                .sample(rng),
            Interarrival::Deterministic { t } => t,
        };
        a - self.premium * t
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn kappa(&self) -> f64 {
        f64::INFINITY
    }
    fn upper_tail(&self) -> Option<&dyn TailModel> {
        Some(&self.tail)
    }
    fn survival(&self, x: f64) -> f64 {
        let model = &self.tail.claims;
        let lo = model.x_min();
        let full = |y: f64| -> Result<f64, TailError> {
            if y < lo {
                Ok(1.0)
            } else {
                model.tail(y)
            }
        };
        self.tail.mix(x, &full).unwrap_or(f64::NAN)
    }
    fn lower_bound(&self) -> f64 {
        match self.interarrival {
            Interarrival::Exponential { .. } => f64::NEG_INFINITY,
            Interarrival::Deterministic { t } => -self.premium * t,
        }
    }
    fn describe(&self) -> String {
        format!(
            "ruin:claims={},interarrival={},premium={}",
            self.claims, self.interarrival, self.premium
        )
    }
}

/// One row of the ruin-probability expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub x: f64,
    pub terms: Vec<f64>,
    pub psi: f64,
}

/// `ψ(x)` by the order-`m` expansion on `x_grid`, with an optional
/// warning from the order guard.
pub fn psi_expansion(
    sc: &RuinScenario,
    m: usize,
    moments: &MomentSet,
    x_grid: &[f64],
) -> Result<(Vec<PsiRow>, Option<String>), RuinError> {
    let model = sc.step_tail();
    let warning = check_order(m, model.alpha(), sc.kappa(), model.smoothness_order())?;
    let op = build_operator(moments, m)?;
    let rows = x_grid
        .iter()
        .map(|&x| {
            let e = evaluate(&op, model, x)?;
            Ok(PsiRow {
                x,
                terms: e.terms,
                psi: e.value,
            })
        })
        .collect::<Result<_, ExpansionError>>()?;
    Ok((rows, warning))
}

/// Simulated ruin frequencies `P{M > x}` with barrier censoring.
pub fn psi_monte_carlo(sc: &RuinScenario, x_grid: &[f64], censor: Censor, reps: u64, seed: u64) -> MaxTail {
    simulate_max(sc, x_grid, censor, reps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(inter: Interarrival, c: f64) -> RuinScenario {
        RuinScenario::new(TailSpec::Pareto { alpha: 3.0, scale: 1.0 }, inter, c).unwrap()
    }

    #[test]
    fn deterministic_interarrival_is_a_translation() {
        let sc = scenario(Interarrival::Deterministic { t: 2.0 }, 2.0);
        let model = sc.claims().build().unwrap();
        assert_eq!(sc.step_tail().tail(10.0).unwrap(), model.tail(14.0).unwrap());
        assert_eq!(sc.mean(), 1.5 - 4.0);
    }

    #[test]
    fn interarrival_specs() {
        assert_eq!(
            "exp:rate=2".parse::<Interarrival>().unwrap(),
            Interarrival::Exponential { mean: 0.5 }
        );
        assert_eq!("det:t=1".parse::<Interarrival>().unwrap().to_string(), "det:t=1");
        assert!("exp:mean=-1".parse::<Interarrival>().is_err());
    }

    #[test]
    fn positive_loading_required() {
        let e = RuinScenario::new(
            TailSpec::Pareto { alpha: 3.0, scale: 1.0 },
            Interarrival::Exponential { mean: 1.0 },
            1.5,
        );
        assert!(matches!(e, Err(RuinError::NonNegativeMean(_))));
    }

    #[test]
    fn exact_moments_satisfy_mean_identity() {
        let sc = scenario(Interarrival::Exponential { mean: 1.0 }, 2.5);
        let ms = sc.exact_moments(2).unwrap();
        assert!((ms.p - 0.6).abs() < 1e-15);
        assert!((ms.mu_f - (1.0 - ms.p) * ms.mu_minus[1]).abs() < 1e-12);
        assert_eq!(ms.mu_minus[2], 2.0 * 2.5 * 2.5);
        assert!(sc.exact_moments(3).is_err());
    }
}
