//! Monte Carlo estimation of the ascent probability `p` and the ladder
//! height moments, plus the renewal-sum diagnostic.

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{run_batches, DEFAULT_BATCHES};
use crate::stats::{batch_means, Estimate};
use crate::step::{lundberg_exponent, Step};
use crate::tail::{TailError, TailModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LadderError {
    #[error("a path did not descend within {cap} steps; is the step mean really negative?")]
    NoDescent { cap: u64 },
    #[error("moment set is missing {what}")]
    Missing { what: String },
    #[error("invalid moment set: {0}")]
    Invalid(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Tail(#[from] TailError),
}

/// Ascent probability and ladder-height moments of one step law.
///
/// `mu_minus[k]` is `μ_{F₋,k}` with `mu_minus[0] = 1`; `mu_plus[k]` is
/// `μ_{F₊,k}` with `mu_plus[0] = p`. Standard errors are zero for exact
/// values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSet {
    pub p: f64,
    pub mu_f: f64,
    pub mu_minus: Vec<f64>,
    pub mu_plus: Vec<f64>,
    #[serde(default)]
    pub p_se: f64,
    #[serde(default)]
    pub mu_f_se: f64,
    #[serde(default)]
    pub mu_minus_se: Vec<f64>,
    #[serde(default)]
    pub mu_plus_se: Vec<f64>,
    /// Censoring indicator of the ascending-path simulation, if any.
    #[serde(default)]
    pub censoring: Option<f64>,
    #[serde(default)]
    pub source: String,
}

impl MomentSet {
    /// Exact moment set with zero standard errors.
    pub fn exact(p: f64, mu_f: f64, mu_minus: Vec<f64>, mu_plus: Vec<f64>, source: &str) -> Self {
        MomentSet {
            p,
            mu_f,
            mu_minus_se: vec![0.0; mu_minus.len()],
            mu_plus_se: vec![0.0; mu_plus.len()],
            mu_minus,
            mu_plus,
            p_se: 0.0,
            mu_f_se: 0.0,
            censoring: None,
            source: source.to_string(),
        }
    }

    /// Checks that the set carries what an order-`m` expansion needs:
    /// `μ_{F₋,0..m}` and `μ_{F₊,0..m-1}`, with `0 < p < 1`.
    pub fn check(&self, m: usize) -> Result<(), LadderError> {
        if self.mu_minus.len() < m + 1 {
            return Err(LadderError::Missing {
                what: format!("mu_minus up to order {m}"),
            });
        }
        if self.mu_plus.len() < m {
            return Err(LadderError::Missing {
                what: format!("mu_plus up to order {}", m.saturating_sub(1)),
            });
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(LadderError::Invalid(format!("p = {} is not in (0, 1)", self.p)));
        }
        if self.mu_minus.len() > 1 && !(self.mu_minus[1] < 0.0) {
            return Err(LadderError::Invalid("mu_minus[1] must be negative".into()));
        }
        Ok(())
    }

    /// `|μ_F − (1−p)μ_{F₋,1}|` in units of the combined standard error
    /// (`inf` if the errors are zero and the identity fails).
    pub fn identity_z(&self) -> f64 {
        let lhs = self.mu_f;
        let rhs = (1.0 - self.p) * self.mu_minus[1];
        let se_rhs = ((1.0 - self.p) * self.mu_minus_se.get(1).copied().unwrap_or(0.0))
            .hypot(self.mu_minus[1] * self.p_se);
        let se = self.mu_f_se.hypot(se_rhs);
        let gap = (lhs - rhs).abs();
        if se == 0.0 {
            if gap <= 1e-12 * lhs.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / se
        }
    }
}

/// Barrier and step cap for simulating a defective ascent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Censor {
    pub barrier: f64,
    pub cap: u64,
}

impl Censor {
    /// `B = 50 |μ|`, `cap = 1e5`.
    pub fn default_for(step: &dyn Step) -> Self {
        Censor {
            barrier: 50.0 * step.mean().abs(),
            cap: 100_000,
        }
    }
}

/// Upper bound on the probability that a walk started at `-b` ever enters
/// `(level, ∞)`. Lundberg's bound for discrete laws, the first-order
/// integrated-tail approximation for heavy tails.
pub fn return_bound(step: &dyn Step, b: f64, level: f64) -> f64 {
    if let Some(atoms) = step.atoms() {
        return match lundberg_exponent(&atoms) {
            Some(r) => (-r * (b + level)).exp().min(1.0),
            None => 0.0,
        };
    }
    match step.upper_tail() {
        Some(t) => {
            let x = (b + level).max(t.x_min());
            t.itail(x)
                .map(|v| (v / step.mean().abs()).min(1.0))
                .unwrap_or(1.0)
        }
        None => 1.0,
    }
}

/// Censoring diagnostics of a barrier/cap simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Censoring {
    /// Fraction of paths stopped below the barrier.
    pub killed: f64,
    /// Fraction of paths stopped by the step cap.
    pub capped: f64,
    /// `capped + killed * return_bound`: bound on the mass misclassified.
    pub indicator: f64,
}

#[derive(Clone, Debug, Default)]
struct AscentBatch {
    reps: u64,
    heights: Vec<f64>,
    killed: u64,
    capped: u64,
}

/// Ascending ladder heights `S_τ` of censored paths.
#[derive(Clone, Debug)]
pub struct AscentRun {
    batches: Vec<AscentBatch>,
    censoring: Censoring,
}

const TAG_ASCENT: u32 = 1;
const TAG_DESCENT: u32 = 2;
const TAG_SPITZER: u32 = 3;
const TAG_MAX: u32 = 4;
const TAG_RENEWAL: u32 = 5;

/// Simulates `reps` paths until first entry to `(0, ∞)`, the barrier
/// `-censor.barrier`, or `censor.cap` steps.
pub fn simulate_ascents(step: &dyn Step, censor: Censor, reps: u64, seed: u64) -> AscentRun {
    let batches = run_batches(seed, TAG_ASCENT, reps, DEFAULT_BATCHES, |rng, n| {
        let mut b = AscentBatch {
            reps: n,
            ..Default::default()
        };
        for _ in 0..n {
            let mut s = 0.0;
            let mut steps = 0u64;
            loop {
                s += step.sample(rng);
                steps += 1;
                if s > 0.0 {
                    b.heights.push(s);
                    break;
                }
                if s < -censor.barrier {
                    b.killed += 1;
                    break;
                }
                if steps >= censor.cap {
                    b.capped += 1;
                    break;
                }
            }
        }
        b
    });
    let total = reps.max(1) as f64;
    let killed = batches.iter().map(|b| b.killed).sum::<u64>() as f64 / total;
    let capped = batches.iter().map(|b| b.capped).sum::<u64>() as f64 / total;
    let censoring = Censoring {
        killed,
        capped,
        indicator: capped + killed * return_bound(step, censor.barrier, 0.0),
    };
    AscentRun { batches, censoring }
}

impl AscentRun {
    pub fn censoring(&self) -> Censoring {
        self.censoring
    }

    fn per_batch(&self, f: impl Fn(f64) -> f64) -> Estimate {
        let pairs: Vec<(f64, u64)> = self
            .batches
            .iter()
            .map(|b| (b.heights.iter().map(|&h| f(h)).sum(), b.reps))
            .collect();
        batch_means(&pairs)
    }

    pub fn p(&self) -> Estimate {
        self.per_batch(|_| 1.0)
    }

    /// `E[S_τ^k; τ < ∞]`; censored paths contribute 0.
    pub fn moment(&self, k: u32) -> Estimate {
        self.per_batch(|h| h.powi(k as i32))
    }

    /// `P{S_τ > x, τ < ∞}`.
    pub fn tail(&self, x: f64) -> Estimate {
        self.per_batch(|h| if h > x { 1.0 } else { 0.0 })
    }

    pub fn ascents(&self) -> usize {
        self.batches.iter().map(|b| b.heights.len()).sum()
    }
}

/// `p` with its censoring diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectP {
    pub p: Estimate,
    pub censoring: Censoring,
}

pub fn estimate_p_direct(step: &dyn Step, censor: Censor, reps: u64, seed: u64) -> DirectP {
    let run = simulate_ascents(step, censor, reps, seed);
    DirectP {
        p: run.p(),
        censoring: run.censoring(),
    }
}

/// Defective moments `μ_{F₊,0..=k_max}`.
pub fn ascending_moments(
    step: &dyn Step,
    k_max: u32,
    reps: u64,
    censor: Censor,
    seed: u64,
) -> (Vec<Estimate>, Censoring) {
    let run = simulate_ascents(step, censor, reps, seed);
    ((0..=k_max).map(|k| run.moment(k)).collect(), run.censoring())
}

/// Moments `μ_{F₋,0..=k_max}` of the weak descending ladder height.
pub fn descending_moments(
    step: &dyn Step,
    k_max: u32,
    reps: u64,
    cap: u64,
    seed: u64,
) -> Result<Vec<Estimate>, LadderError> {
    let k = k_max as usize;
    let batches = run_batches(seed, TAG_DESCENT, reps, DEFAULT_BATCHES, |rng, n| {
        let mut sums = vec![0.0; k + 1];
        for _ in 0..n {
            let mut s = 0.0;
            let mut steps = 0u64;
            loop {
                s += step.sample(rng);
                steps += 1;
                if s <= 0.0 {
                    break;
                }
                if steps >= cap {
                    return Err(LadderError::NoDescent { cap });
                }
            }
            let mut pw = 1.0;
            for v in sums.iter_mut() {
                *v += pw;
                pw *= s;
            }
        }
        Ok((sums, n))
    });
    let batches: Vec<(Vec<f64>, u64)> = batches.into_iter().collect::<Result<_, _>>()?;
    Ok((0..=k)
        .map(|j| {
            let pairs: Vec<(f64, u64)> = batches.iter().map(|(s, n)| (s[j], *n)).collect();
            batch_means(&pairs)
        })
        .collect())
}

/// Sparre Andersen estimate of `p` with its truncation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpitzerP {
    pub p: Estimate,
    /// `Σ_{n ≤ N} P{S_n > 0}/n`.
    pub series: Estimate,
    /// Extrapolated `Σ_{n > N}`, included in `p`.
    pub remainder: f64,
    /// Fitted decay exponent of the summand, if the fit was possible.
    pub decay: Option<f64>,
}

/// `p = 1 − exp(−Σ_n P{S_n>0}/n)` with `P{S_n>0}` estimated from `reps`
/// paths of length `n_terms`. The tail of the series is extrapolated from
/// a power-law fit `a_n ∝ n^{-γ}` over the upper half of the summands.
pub fn estimate_p_spitzer(step: &dyn Step, n_terms: usize, reps: u64, seed: u64) -> SpitzerP {
    let n_terms = n_terms.max(1);
    let batches = run_batches(seed, TAG_SPITZER, reps, DEFAULT_BATCHES, |rng, n| {
        let mut counts = vec![0u64; n_terms + 1];
        let mut ysum = 0.0;
        for _ in 0..n {
            let mut s = 0.0;
            for (i, c) in counts.iter_mut().enumerate().skip(1) {
                s += step.sample(rng);
                if s > 0.0 {
                    *c += 1;
                    ysum += 1.0 / i as f64;
                }
            }
        }
        (ysum, n, counts)
    });
    let pairs: Vec<(f64, u64)> = batches.iter().map(|b| (b.0, b.1)).collect();
    let series = batch_means(&pairs);
    let mut counts = vec![0u64; n_terms + 1];
    for b in &batches {
        for (c, d) in counts.iter_mut().zip(&b.2) {
            *c += d;
        }
    }
    let total = reps.max(1) as f64;
    let summand: Vec<(f64, f64)> = (n_terms / 2..=n_terms)
        .filter(|&i| i >= 1 && counts[i] > 0)
        .map(|i| ((i as f64).ln(), (counts[i] as f64 / total / i as f64).ln()))
        .collect();
    let (remainder, decay) = power_law_remainder(&summand, n_terms as f64);
    let lambda = series.value + remainder;
    let p = 1.0 - (-lambda).exp();
    SpitzerP {
        p: Estimate {
            value: p,
            se: (-lambda).exp() * series.se,
        },
        series,
        remainder,
        decay,
    }
}

/// Least-squares fit of `ln a = c − γ ln n`; returns `Σ_{n>N} a_n ≈
/// a(N) N/(γ−1)` (with `γ` floored at 1.1) and the fitted `γ`.
fn power_law_remainder(points: &[(f64, f64)], n: f64) -> (f64, Option<f64>) {
    if points.len() < 3 {
        return (0.0, None);
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, None);
    }
    let slope = sxy / sxx;
    let gamma = -slope;
    let a_n = (my + slope * (n.ln() - mx)).exp();
    let g = gamma.max(1.1);
    (a_n * n / (g - 1.0), Some(gamma))
}

/// Tail of the maximum `M` of a censored walk on a grid of levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxTail {
    pub x: Vec<f64>,
    /// `P{M > x}` per level.
    pub tail: Vec<Estimate>,
    /// Bound on the probability lost to censoring, per level.
    pub censoring: Vec<f64>,
    pub killed: f64,
    pub capped: f64,
}

/// Simulates `M = max_n S_n` (with `S_0 = 0`) until the walk falls below
/// `-censor.barrier` relative to zero or the cap is hit, and counts
/// `M > x` for every `x` in `levels`.
pub fn simulate_max(
    step: &dyn Step,
    levels: &[f64],
    censor: Censor,
    reps: u64,
    seed: u64,
) -> MaxTail {
    let top = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let batches = run_batches(seed, TAG_MAX, reps, DEFAULT_BATCHES, |rng, n| {
        let mut above = vec![0u64; levels.len()];
        let (mut killed, mut capped) = (0u64, 0u64);
        for _ in 0..n {
            let mut s = 0.0f64;
            let mut m = 0.0f64;
            let mut steps = 0u64;
            loop {
                s += step.sample(rng);
                steps += 1;
                m = m.max(s);
                if m > top {
                    break;
                }
                if s < -censor.barrier {
                    killed += 1;
                    break;
                }
                if steps >= censor.cap {
                    capped += 1;
                    break;
                }
            }
            for (c, &x) in above.iter_mut().zip(levels) {
                if m > x {
                    *c += 1;
                }
            }
        }
        (above, killed, capped, n)
    });
    let total = reps.max(1) as f64;
    let killed = batches.iter().map(|b| b.1).sum::<u64>() as f64 / total;
    let capped = batches.iter().map(|b| b.2).sum::<u64>() as f64 / total;
    let tail = (0..levels.len())
        .map(|i| {
            let pairs: Vec<(f64, u64)> = batches.iter().map(|b| (b.0[i] as f64, b.3)).collect();
            batch_means(&pairs)
        })
        .collect();
    let censoring = levels
        .iter()
        .map(|&x| capped + killed * return_bound(step, censor.barrier, x.max(0.0)))
        .collect();
    MaxTail {
        x: levels.to_vec(),
        tail,
        censoring,
        killed,
        capped,
    }
}

/// Law of the renewal increments `Y` in the renewal-sum diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RenewalStep {
    Deterministic(f64),
    Exponential { mean: f64 },
}

impl RenewalStep {
    pub fn mean(&self) -> f64 {
        match *self {
            RenewalStep::Deterministic(y) => y,
            RenewalStep::Exponential { mean } => mean,
        }
    }
}

/// One row of the renewal-sum diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub x: f64,
    pub ratio: f64,
    pub se: f64,
    pub target: f64,
}

/// Direct terms summed before switching to Euler–Maclaurin.
const DIRECT_TERMS: u64 = 100_000;

/// Ratio `(1/(x f(x))) Σ_{n≥0} E f(x + Z_n)` against its limit
/// `1/((β−1) E Y)`, where `f` is `model`'s tail (index `−β`) and `Z_n`
/// the renewal sequence of `y`.
///
/// Deterministic `Y` is summed directly until the terms fall below
/// `1e-15` of the head or `DIRECT_TERMS` are used, then closed with an
/// Euler–Maclaurin tail. Exponential `Y` is simulated for `reps` paths up
/// to `Z_n ≥ horizon_frac · x`; the rest of each path is replaced by its
/// conditional expectation `(1/EY) ∫_{x+Z_n}^∞ f`.
pub fn lemma1_diagnostic(
    model: &dyn TailModel,
    y: RenewalStep,
    x_grid: &[f64],
    reps: u64,
    horizon_frac: f64,
    seed: u64,
) -> Result<Vec<Lemma1Row>, LadderError> {
    let beta = model.alpha();
    let ey = y.mean();
    if !(ey > 0.0) {
        return Err(LadderError::Argument("renewal step needs a positive mean".into()));
    }
    let target = 1.0 / ((beta - 1.0) * ey);
    let mut rows = Vec::with_capacity(x_grid.len());
    for (i, &x) in x_grid.iter().enumerate() {
        let scale = x * model.tail(x)?;
        let (sum, se) = match y {
            RenewalStep::Deterministic(step) => (renewal_sum_deterministic(model, x, step)?, 0.0),
            RenewalStep::Exponential { mean } => {
                let horizon = horizon_frac.max(0.0) * x;
                let exp = Exp::new(1.0 / mean)
                    .map_err(|e| LadderError::Argument(e.to_string()))?;
                let batches = run_batches(
                    seed,
                    TAG_RENEWAL + ((i as u32) << 8),
                    reps,
                    DEFAULT_BATCHES,
                    |rng, n| -> Result<(f64, u64), TailError> {
                        let mut acc = 0.0;
                        for _ in 0..n {
                            let mut z = 0.0;
                            let mut v = 0.0;
                            while z < horizon {
                                v += model.tail(x + z)?;
                                z += exp.sample(rng);
                            }
                            v += model.tail(x + z)? + model.itail(x + z)? / mean;
                            acc += v;
                        }
                        Ok((acc, n))
                    },
                );
                let pairs: Vec<(f64, u64)> = batches.into_iter().collect::<Result<_, _>>()?;
                let e = batch_means(&pairs);
                (e.value, e.se)
            }
        };
        rows.push(Lemma1Row {
            x,
            ratio: sum / scale,
            se: se / scale,
            target,
        });
    }
    Ok(rows)
}

fn renewal_sum_deterministic(model: &dyn TailModel, x: f64, y: f64) -> Result<f64, TailError> {
    let head = model.tail(x)?;
    let mut sum = 0.0;
    let mut n = 0u64;
    loop {
        let t = model.tail(x + n as f64 * y)?;
        if t < 1e-15 * head {
            return Ok(sum);
        }
        if n >= DIRECT_TERMS {
            break;
        }
        sum += t;
        n += 1;
    }
    // Σ_{j≥n} g(j) ≈ ∫_n^∞ g + g(n)/2 − g'(n)/12 + g'''(n)/720, g(j) = f(x + j y)
    let u = x + n as f64 * y;
    let mut tail = model.itail(u)? / y + model.tail(u)? / 2.0 - y * model.dtail(1, u)? / 12.0;
    if model.k_max() >= 3 {
        tail += y.powi(3) * model.dtail(3, u)? / 720.0;
    }
    Ok(sum + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::StepDistribution;
    use crate::tail::Pareto;

    #[test]
    fn moment_set_identity_exact() {
        // two-point q = 1/4: p = 1/3, F- = 1/4 δ0 + 3/4 δ-1, mean -1/2
        let ms = MomentSet::exact(
            1.0 / 3.0,
            -0.5,
            vec![1.0, -0.75, 0.75],
            vec![1.0 / 3.0, 1.0 / 3.0],
            "closed form",
        );
        ms.check(2).unwrap();
        assert_eq!(ms.identity_z(), 0.0);
        assert!(ms.check(3).is_err());
    }

    #[test]
    fn constant_step_never_ascends() {
        let s = StepDistribution::constant(-1.0).unwrap();
        let d = estimate_p_direct(&s, Censor::default_for(&s), 1000, 1);
        assert_eq!(d.p.value, 0.0);
        assert_eq!(d.censoring.indicator, 0.0);
        let sp = estimate_p_spitzer(&s, 50, 1000, 1);
        assert_eq!(sp.p.value, 0.0);
        let dm = descending_moments(&s, 3, 100, 10, 1).unwrap();
        assert_eq!(dm[3].value, -1.0);
        let (am, _) = ascending_moments(&s, 2, 1000, Censor::default_for(&s), 1);
        assert!(am.iter().all(|e| e.value == 0.0));
    }

    #[test]
    fn renewal_sum_matches_hurwitz_partial_sums() {
        // x Σ_{n≥0} (x+n)^{-2} at x = 100 ≈ 1 + 1/(2x) + 1/(6x²)
        let f = Pareto::new(2.0, 1.0).unwrap();
        let rows = lemma1_diagnostic(&f, RenewalStep::Deterministic(1.0), &[100.0], 0, 0.0, 0)
            .unwrap();
        let want = 1.0 + 1.0 / 200.0 + 1.0 / 60000.0;
        assert!((rows[0].ratio - want).abs() < 1e-8, "{}", rows[0].ratio);
        assert_eq!(rows[0].target, 1.0);
        let rows = lemma1_diagnostic(&Pareto::new(3.0, 1.0).unwrap(), RenewalStep::Deterministic(2.0), &[50.0], 0, 0.0, 0).unwrap();
        assert_eq!(rows[0].target, 0.25);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let pts: Vec<(f64, f64)> = (50..=100)
            .map(|n| ((n as f64).ln(), (2.0 * (n as f64).powf(-3.0)).ln()))
            .collect();
        let (rem, g) = power_law_remainder(&pts, 100.0);
        assert!((g.unwrap() - 3.0).abs() < 1e-9);
        // Σ_{n>100} 2 n^{-3} ≈ 2·100^{-2}/2 − 2·100^{-3}/2 …
        assert!((rem - 1e-4).abs() < 2e-6, "{rem}");
    }
}
