//! Step laws of the random walk: sampling, exact mean, the upper tail model
//! and the declared lower-tail moment index.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::rng::WalkRng;
use crate::tail::{parse_kv, take_keys, Pareto, TailError, TailModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step mean must be negative, got {0}")]
    NonNegativeMean(f64),
    #[error("malformed step spec `{0}`")]
    Spec(String),
    #[error("invalid step parameters: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Tail(#[from] TailError),
}

/// A step law `F` with negative mean.
pub trait Step: fmt::Debug + Send + Sync {
    fn sample(&self, rng: &mut WalkRng) -> f64;
    /// `μ = E X < 0`.
    fn mean(&self) -> f64;
    /// Lower-tail moment index; `f64::INFINITY` for bounded-below laws.
    fn kappa(&self) -> f64;
    /// Smooth model of `F̄` on its domain; `None` for light-tailed laws.
    fn upper_tail(&self) -> Option<&dyn TailModel>;
    /// `P{X > x}` on the whole line.
    fn survival(&self, x: f64) -> f64;
    /// Essential infimum of the support (may be `-inf`).
    fn lower_bound(&self) -> f64;
    /// Atoms `(x, mass)` for purely discrete laws.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
    fn describe(&self) -> String;
}

/// Built-in step families.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSpec {
    /// `X = A - shift` with `A` Pareto(alpha, scale).
    ParetoShift { alpha: f64, scale: f64, shift: f64 },
    /// `P{X = up} = q`, `P{X = -down} = 1 - q`.
    TwoPoint { q: f64, up: f64, down: f64 },
    /// `X ≡ value`.
    Constant { value: f64 },
}

impl StepSpec {
    pub fn build(&self) -> Result<StepDistribution, StepError> {
        StepDistribution::new(self.clone())
    }
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSpec::ParetoShift { alpha, scale, shift } => {
                write!(f, "paretoshift:alpha={alpha},scale={scale},shift={shift}")
            }
            StepSpec::TwoPoint { q, up, down } => write!(f, "twopoint:q={q},up={up},down={down}"),
            StepSpec::Constant { value } => write!(f, "constant:value={value}"),
        }
    }
}

impl FromStr for StepSpec {
    type Err = StepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StepError::Spec(s.to_string());
        let (name, kv) = parse_kv(s).ok_or_else(bad)?;
        match name.as_str() {
            "paretoshift" => {
                let v = take_keys(&kv, &[("alpha", None), ("scale", Some(1.0)), ("shift", None)])
                    .ok_or_else(bad)?;
                Ok(StepSpec::ParetoShift {
                    alpha: v[0],
                    scale: v[1],
                    shift: v[2],
                })
            }
            "twopoint" => {
                let v = take_keys(&kv, &[("q", None), ("up", Some(1.0)), ("down", Some(1.0))])
                    .ok_or_else(bad)?;
                Ok(StepSpec::TwoPoint {
                    q: v[0],
                    up: v[1],
                    down: v[2],
                })
            }
            "constant" => {
                let v = take_keys(&kv, &[("value", None)]).ok_or_else(bad)?;
                Ok(StepSpec::Constant { value: v[0] })
            }
            _ => Err(bad()),
        }
    }
}

/// A validated built-in step law.
#[derive(Clone, Debug)]
pub struct StepDistribution {
    spec: StepSpec,
    tail: Option<Pareto>,
    mean: f64,
}

impl StepDistribution {
    pub fn new(spec: StepSpec) -> Result<Self, StepError> {
        let (tail, mean) = match spec {
            StepSpec::ParetoShift { alpha, scale, shift } => {
                let tail = Pareto::new(alpha, scale)?.with_location(-shift);
                (Some(tail), scale * alpha / (alpha - 1.0) - shift)
            }
            StepSpec::TwoPoint { q, up, down } => {
                if !(q > 0.0 && q < 1.0) || !(up > 0.0) || !(down > 0.0) {
                    return Err(StepError::InvalidParameter(format!(
                        "twopoint needs 0 < q < 1 and positive up/down (q={q}, up={up}, down={down})"
                    )));
                }
                (None, q * up - (1.0 - q) * down)
            }
            StepSpec::Constant { value } => (None, value),
        };
        if !(mean < 0.0) {
            return Err(StepError::NonNegativeMean(mean));
        }
        Ok(StepDistribution { spec, tail, mean })
    }

    pub fn pareto_shift(alpha: f64, scale: f64, shift: f64) -> Result<Self, StepError> {
        Self::new(StepSpec::ParetoShift { alpha, scale, shift })
    }

    pub fn two_point(q: f64, up: f64, down: f64) -> Result<Self, StepError> {
        Self::new(StepSpec::TwoPoint { q, up, down })
    }

    pub fn constant(value: f64) -> Result<Self, StepError> {
        Self::new(StepSpec::Constant { value })
    }

    pub fn spec(&self) -> &StepSpec {
        &self.spec
    }
}

impl Step for StepDistribution {
    fn sample(&self, rng: &mut WalkRng) -> f64 {
        match self.spec {
            StepSpec::ParetoShift { alpha, scale, shift } => {
                // 1 - U lies in (0, 1], so the power is finite
                let u = 1.0 - rng.gen::<f64>();
                scale * u.powf(-1.0 / alpha) - shift
            }
            StepSpec::TwoPoint { q, up, down } => {
                if rng.gen::<f64>() < q {
                    up
                } else {
                    -down
                }
            }
            StepSpec::Constant { value } => value,
        }
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn kappa(&self) -> f64 {
        f64::INFINITY
    }

    fn upper_tail(&self) -> Option<&dyn TailModel> {
        self.tail.as_ref().map(|t| t as &dyn TailModel)
    }

    fn survival(&self, x: f64) -> f64 {
        match self.spec {
            StepSpec::ParetoShift { alpha, scale, shift } => {
                if x + shift <= scale {
                    1.0
                } else {
                    ((x + shift) / scale).powf(-alpha)
                }
            }
            StepSpec::TwoPoint { q, up, down } => {
                if x < -down {
                    1.0
                } else if x < up {
                    q
                } else {
                    0.0
                }
            }
            StepSpec::Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn lower_bound(&self) -> f64 {
        match self.spec {
            StepSpec::ParetoShift { scale, shift, .. } => scale - shift,
            StepSpec::TwoPoint { down, .. } => -down,
            StepSpec::Constant { value } => value,
        }
    }

    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self.spec {
            StepSpec::ParetoShift { .. } => None,
            StepSpec::TwoPoint { q, up, down } => Some(vec![(-down, 1.0 - q), (up, q)]),
            StepSpec::Constant { value } => Some(vec![(value, 1.0)]),
        }
    }

    fn describe(&self) -> String {
        self.spec.to_string()
    }
}

/// Partial sums `S_1..S_n` of one path.
pub fn sample_path(step: &dyn Step, n: usize, rng: &mut WalkRng) -> Vec<f64> {
    let mut s = 0.0;
    (0..n)
        .map(|_| {
            s += step.sample(rng);
            s
        })
        .collect()
}

/// Adjustment coefficient `R > 0` with `E e^{RX} = 1` for a discrete law
/// with negative mean. `None` when the law has no positive atom (the walk
/// never goes up, so every return bound is zero).
pub fn lundberg_exponent(atoms: &[(f64, f64)]) -> Option<f64> {
    if !atoms.iter().any(|&(x, w)| x > 0.0 && w > 0.0) {
        return None;
    }
    let phi = |r: f64| atoms.iter().map(|&(x, w)| w * (r * x).exp()).sum::<f64>() - 1.0;
    let mut hi = 1e-3;
    while phi(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    // phi < 0 just right of 0 because the mean is negative
    let mut lo = hi / 2.0;
    while phi(lo) > 0.0 && lo > 1e-300 {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn spec_round_trip() {
        for s in [
            "paretoshift:alpha=3,scale=1,shift=3",
            "twopoint:q=0.25,up=1,down=1",
            "constant:value=-1",
        ] {
            let spec: StepSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("twopoint:q=0.25,sideways=1".parse::<StepSpec>().is_err());
        assert!("gauss:mu=1".parse::<StepSpec>().is_err());
    }

    #[test]
    fn nonnegative_mean_rejected() {
        assert_eq!(
            StepDistribution::two_point(0.5, 1.0, 1.0).unwrap_err(),
            StepError::NonNegativeMean(0.0)
        );
        assert!(StepDistribution::pareto_shift(3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pareto_shift_tail_is_translated() {
        let s = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
        assert_eq!(s.mean(), -1.5);
        let t = s.upper_tail().unwrap();
        assert!((t.tail(7.0).unwrap() - 1e-3).abs() < 1e-18);
        assert_eq!(s.survival(7.0), t.tail(7.0).unwrap());
        assert_eq!(s.survival(-2.5), 1.0);
    }

    #[test]
    fn path_is_cumulative_and_seeded() {
        let s = StepDistribution::two_point(0.25, 1.0, 1.0).unwrap();
        let a = sample_path(&s, 50, &mut stream(1, 0, 0));
        let b = sample_path(&s, 50, &mut stream(1, 0, 0));
        assert_eq!(a, b);
        let mut r = stream(1, 0, 0);
        assert_eq!(sample_path(&s, 1, &mut r)[0].abs(), 1.0);
    }

    #[test]
    fn lundberg_two_point() {
        // 0.25 e^R + 0.75 e^{-R} = 1 at e^R = 3
        let r = lundberg_exponent(&[(-1.0, 0.75), (1.0, 0.25)]).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-12);
        assert_eq!(lundberg_exponent(&[(-1.0, 1.0)]), None);
    }
}
