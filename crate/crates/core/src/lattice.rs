//! Exact computations for walks on a uniform lattice: ladder-height laws,
//! the Wiener–Hopf identity, and the compound-geometric law of the maximum.
//! Everything here is deterministic and serves as ground truth for the
//! Monte Carlo and asymptotic layers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::MomentSet;
use crate::step::{lundberg_exponent, Step};

/// Largest support accepted by the direct convolutions.
pub const MAX_SUPPORT: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid lattice: {0}")]
    Invalid(String),
    #[error("support of {len} points exceeds the limit of {max}")]
    TooLarge { len: usize, max: usize },
    #[error("mass {leak:e} beyond the grid exceeds the budget {budget:e}")]
    Leak { leak: f64, budget: f64 },
    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
    #[error("lattice step has nonnegative mean {0}")]
    NonNegativeMean(f64),
    #[error("{0}")]
    Unsupported(String),
}

/// Finite (possibly defective) distribution on `{offset h, (offset+1) h, …}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDist {
    h: f64,
    offset: i64,
    masses: Vec<f64>,
}

impl LatticeDist {
    pub fn new(h: f64, offset: i64, masses: Vec<f64>) -> Result<Self, LatticeError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(LatticeError::Invalid(format!("grid step must be positive, got {h}")));
        }
        if masses.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(LatticeError::Invalid("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(LatticeError::Invalid(format!("total mass {total} exceeds 1")));
        }
        Ok(LatticeDist { h, offset, masses })
    }

    /// Point masses `(x, w)`; every `x` must sit on the grid.
    pub fn from_atoms(h: f64, atoms: &[(f64, f64)]) -> Result<Self, LatticeError> {
        let idx: Vec<(i64, f64)> = atoms
            .iter()
            .map(|&(x, w)| {
                let k = (x / h).round();
                if (x / h - k).abs() > 1e-9 {
                    Err(LatticeError::Invalid(format!("atom {x} is off the grid h={h}")))
                } else {
                    Ok((k as i64, w))
                }
            })
            .collect::<Result<_, _>>()?;
        let lo = idx.iter().map(|a| a.0).min().unwrap_or(0);
        let hi = idx.iter().map(|a| a.0).max().unwrap_or(-1);
        let mut masses = vec![0.0; (hi - lo + 1).max(0) as usize];
        for (k, w) in idx {
            masses[(k - lo) as usize] += w;
        }
        Self::new(h, lo, masses)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn min_index(&self) -> i64 {
        self.offset
    }

    pub fn max_index(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// Mass at grid index `i` (zero off the support).
    pub fn mass(&self, i: i64) -> f64 {
        let j = i - self.offset;
        if j < 0 || j >= self.masses.len() as i64 {
            0.0
        } else {
            self.masses[j as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `Σ (i h)^k w_i`.
    pub fn moment(&self, k: u32) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(j, w)| w * ((self.offset + j as i64) as f64 * self.h).powi(k as i32))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `P{X > i h}`.
    pub fn tail_index(&self, i: i64) -> f64 {
        let start = (i + 1 - self.offset).max(0) as usize;
        self.masses.iter().skip(start).sum()
    }

    /// `P{X <= i h}`.
    pub fn cdf_index(&self, i: i64) -> f64 {
        let end = (i + 1 - self.offset).clamp(0, self.masses.len() as i64) as usize;
        self.masses[..end].iter().sum()
    }

    /// The measure restricted to indices in `[lo, hi]`.
    pub fn restrict(&self, lo: i64, hi: i64) -> LatticeDist {
        let lo = lo.max(self.min_index());
        let hi = hi.min(self.max_index());
        if hi < lo {
            return LatticeDist {
                h: self.h,
                offset: lo,
                masses: Vec::new(),
            };
        }
        let a = (lo - self.offset) as usize;
        let b = (hi - self.offset) as usize;
        LatticeDist {
            h: self.h,
            offset: lo,
            masses: self.masses[a..=b].to_vec(),
        }
    }

    /// Direct convolution.
    pub fn convolve(&self, other: &LatticeDist) -> Result<LatticeDist, LatticeError> {
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(LatticeError::Invalid("grid steps differ".into()));
        }
        for len in [self.len(), other.len()] {
            if len > MAX_SUPPORT {
                return Err(LatticeError::TooLarge {
                    len,
                    max: MAX_SUPPORT,
                });
            }
        }
        if self.is_empty() || other.is_empty() {
            return Ok(LatticeDist {
                h: self.h,
                offset: self.offset + other.offset,
                masses: Vec::new(),
            });
        }
        let mut out = vec![0.0; self.len() + other.len() - 1];
        for (i, a) in self.masses.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.masses.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(LatticeDist {
            h: self.h,
            offset: self.offset + other.offset,
            masses: out,
        })
    }
}

/// A step law binned onto a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretized {
    pub lattice: LatticeDist,
    /// Mass beyond the top grid point; it is parked on that point so the
    /// lattice stays proper.
    pub leak: f64,
}

/// Bins `step` to grid midpoints: index `k` collects `((k−½)h, (k+½)h]`.
/// The grid runs from the bin of the lower support bound to `top`.
pub fn discretize(step: &dyn Step, h: f64, top: i64, leak_budget: f64) -> Result<Discretized, LatticeError> {
    if !(h > 0.0) {
        return Err(LatticeError::Invalid(format!("grid step must be positive, got {h}")));
    }
    let lb = step.lower_bound();
    if !lb.is_finite() {
        return Err(LatticeError::Unsupported(
            "discretization needs a step bounded below".into(),
        ));
    }
    let lo = (lb / h - 0.5).ceil() as i64;
    if top < lo {
        return Err(LatticeError::Invalid(format!("top index {top} lies below the support")));
    }
    let len = (top - lo + 1) as usize;
    if len > MAX_SUPPORT {
        return Err(LatticeError::TooLarge {
            len,
            max: MAX_SUPPORT,
        });
    }
    let edge = |k: i64| step.survival((k as f64 - 0.5) * h);
    let mut masses: Vec<f64> = (lo..=top).map(|k| (edge(k) - edge(k + 1)).max(0.0)).collect();
    let leak = edge(top + 1);
    if leak > leak_budget {
        return Err(LatticeError::Leak {
            leak,
            budget: leak_budget,
        });
    }
    if let Some(last) = masses.last_mut() {
        *last += leak;
    }
    Ok(Discretized {
        lattice: LatticeDist::new(h, lo, masses)?,
        leak,
    })
}

/// Ladder-height laws of a lattice walk.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderLaws {
    /// Defective strict ascending ladder height law, on indices `>= 1`.
    pub plus: LatticeDist,
    /// Weak descending ladder height law, on indices `<= 0`.
    pub minus: LatticeDist,
    /// `p = P{τ < ∞}` (lower end of its interval).
    pub p: f64,
    /// Width of the interval `[p, p + defect]` accounting for truncation.
    pub defect: f64,
    pub iterations: usize,
}

impl LadderLaws {
    pub fn p_interval(&self) -> (f64, f64) {
        (self.p, self.p + self.defect)
    }

    /// Exact moment set of the lattice walk for an order-`m` expansion.
    pub fn moment_set(&self, step: &LatticeDist, m: usize) -> MomentSet {
        MomentSet::exact(
            self.p,
            step.mean(),
            (0..=m as u32).map(|k| self.minus.moment(k)).collect(),
            (0..m.max(1) as u32).map(|k| self.plus.moment(k)).collect(),
            "lattice",
        )
    }

    /// Law `H = F₊/p` of a ladder height given that it exists.
    pub fn conditional_plus(&self) -> Result<LatticeDist, LatticeError> {
        if self.p <= 0.0 {
            return Err(LatticeError::Invalid("p = 0: no ascending ladder heights".into()));
        }
        let masses = self.plus.masses().iter().map(|w| w / self.p).collect();
        LatticeDist::new(self.plus.h(), self.plus.offset(), masses)
    }
}

/// How [`ladder_laws`] computes the factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LadderMethod {
    /// Absorbing dynamic program on `[-barrier, 0]` (ascent pass) and
    /// `[1, barrier]` (descent pass); mass killed below the window enters
    /// the defect weighted by its Lundberg return bound. Cost grows with
    /// barrier × support; meant for small steps.
    Absorbing { barrier: i64, max_iter: usize },
    /// Monotone fixed-point iteration `F₋ ← F|≤0 + (F₊⋆F₋)|≤0`, with `F₊`
    /// rebuilt from the renewal measure of `F₋` at every pass.
    FixedPoint { max_iter: usize },
}

impl LadderMethod {
    /// Absorbing for supports of at most 64 points, fixed point otherwise.
    pub fn auto(step: &LatticeDist) -> Self {
        if step.len() <= 64 {
            LadderMethod::Absorbing {
                barrier: 64 * step.len() as i64,
                max_iter: 1_000_000,
            }
        } else {
            LadderMethod::FixedPoint { max_iter: 10_000 }
        }
    }
}

fn check_step(step: &LatticeDist) -> Result<(), LatticeError> {
    if (step.total() - 1.0).abs() > 1e-9 {
        return Err(LatticeError::Invalid(format!(
            "ladder laws need a proper step, total mass is {}",
            step.total()
        )));
    }
    let mean = step.mean();
    if !(mean < 0.0) {
        return Err(LatticeError::NonNegativeMean(mean));
    }
    if step.len() > MAX_SUPPORT {
        return Err(LatticeError::TooLarge {
            len: step.len(),
            max: MAX_SUPPORT,
        });
    }
    Ok(())
}

/// Ascending and descending ladder-height laws of a proper lattice step
/// with negative mean, to accuracy `eps`.
pub fn ladder_laws(step: &LatticeDist, method: LadderMethod, eps: f64) -> Result<LadderLaws, LatticeError> {
    check_step(step)?;
    match method {
        LadderMethod::Absorbing { barrier, max_iter } => absorbing(step, barrier, max_iter, eps),
        LadderMethod::FixedPoint { max_iter } => fixed_point(step, max_iter, eps),
    }
}

fn absorbing(step: &LatticeDist, barrier: i64, max_iter: usize, eps: f64) -> Result<LadderLaws, LatticeError> {
    let h = step.h();
    let top = step.max_index().max(0);
    let lo = step.min_index().min(0);
    let b = barrier.max(1);

    // ascent pass: positions -b..=0 stored at index + b
    let mut cur = vec![0.0; (b + 1) as usize];
    cur[b as usize] = 1.0;
    let mut plus = vec![0.0; top.max(0) as usize];
    let mut leak = 0.0;
    let mut remaining = 1.0;
    let mut iters = 0;
    while remaining >= eps {
        if iters >= max_iter {
            return Err(LatticeError::NotConverged {
                what: "absorbing ascent pass",
                iterations: iters,
            });
        }
        let mut next = vec![0.0; cur.len()];
        for (pos, &w) in cur.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let s = pos as i64 - b;
            for (j, &f) in step.masses().iter().enumerate() {
                let t = s + step.offset() + j as i64;
                let mass = w * f;
                if t > 0 {
                    plus[(t - 1) as usize] += mass;
                } else if t < -b {
                    leak += mass;
                } else {
                    next[(t + b) as usize] += mass;
                }
            }
        }
        cur = next;
        remaining = cur.iter().sum();
        iters += 1;
    }
    // a path killed below -b still ascends with probability at most
    // e^{-R b h} (Lundberg); finite supports always have the exponent
    let atoms: Vec<(f64, f64)> = step
        .masses()
        .iter()
        .enumerate()
        .map(|(j, &f)| ((step.offset() + j as i64) as f64 * h, f))
        .collect();
    let climb = match lundberg_exponent(&atoms) {
        Some(r) => (-r * b as f64 * h).exp(),
        None if top > 0 => 1.0,
        None => 0.0,
    };
    let defect_plus = leak * climb + remaining;

    // descent pass: positions 1..=b stored at index - 1
    let mut cur = vec![0.0; b as usize];
    let mut minus = vec![0.0; (-lo + 1) as usize];
    let mut leak_minus = 0.0;
    for (j, &f) in step.masses().iter().enumerate() {
        let t = step.offset() + j as i64;
        if t <= 0 {
            minus[(t - lo) as usize] += f;
        } else if t > b {
            leak_minus += f;
        } else {
            cur[(t - 1) as usize] += f;
        }
    }
    let mut remaining: f64 = cur.iter().sum();
    let mut iters2 = 0;
    while remaining >= eps {
        if iters2 >= max_iter {
            return Err(LatticeError::NotConverged {
                what: "absorbing descent pass",
                iterations: iters2,
            });
        }
        let mut next = vec![0.0; cur.len()];
        for (pos, &w) in cur.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let s = pos as i64 + 1;
            for (j, &f) in step.masses().iter().enumerate() {
                let t = s + step.offset() + j as i64;
                let mass = w * f;
                if t <= 0 {
                    minus[(t - lo) as usize] += mass;
                } else if t > b {
                    leak_minus += mass;
                } else {
                    next[(t - 1) as usize] += mass;
                }
            }
        }
        cur = next;
        remaining = cur.iter().sum();
        iters2 += 1;
    }
    let _ = leak_minus;
    let plus = LatticeDist::new(h, 1, plus)?;
    let p = plus.total();
    Ok(LadderLaws {
        plus,
        minus: LatticeDist::new(h, lo, minus)?,
        p,
        defect: defect_plus,
        iterations: iters + iters2,
    })
}

/// Renewal measure `G(i)`, `i = 0..len`, of the weak descending ladder
/// process with increment law `fm[k]` at `-k` (`k = 0..=d`).
fn descending_renewal(fm: &[f64], len: usize) -> Vec<f64> {
    let d = fm.len() - 1;
    let denom = 1.0 - fm[0];
    let mut g = vec![0.0; len];
    for i in 0..len {
        let mut s = if i == 0 { 1.0 } else { 0.0 };
        for k in 1..=d.min(i) {
            s += fm[k] * g[i - k];
        }
        g[i] = s / denom;
    }
    g
}

fn fixed_point(step: &LatticeDist, max_iter: usize, eps: f64) -> Result<LadderLaws, LatticeError> {
    let h = step.h();
    let d = (-step.min_index()).max(0) as usize;
    let top = step.max_index();
    // f(k) for k = -d..=0 stored at fm[-k]
    let down: Vec<f64> = (0..=d).map(|k| step.mass(-(k as i64))).collect();
    if top <= 0 {
        return Ok(LadderLaws {
            plus: LatticeDist::new(h, 1, Vec::new())?,
            minus: step.restrict(-(d as i64), 0),
            p: 0.0,
            defect: 0.0,
            iterations: 0,
        });
    }
    let top = top as usize;
    // F₊(z) = Σ_i G(i) f(z + i)
    let fplus_at = |g: &[f64], z: usize| -> f64 {
        (0..=top - z).map(|i| g[i] * step.mass((z + i) as i64)).sum()
    };
    let mut fm = down.clone();
    let mut change = f64::INFINITY;
    let mut prev_change = f64::INFINITY;
    let mut iters = 0;
    while change > eps * 1e-3 {
        if iters >= max_iter {
            return Err(LatticeError::NotConverged {
                what: "ladder fixed point",
                iterations: iters,
            });
        }
        let g = descending_renewal(&fm, top);
        let fp: Vec<f64> = (1..=d.min(top)).map(|z| fplus_at(&g, z)).collect();
        let mut next = down.clone();
        // F₋(-k) += Σ_j F₊(j) F₋(-k-j)
        for k in 0..=d {
            for (jm1, &w) in fp.iter().enumerate() {
                let idx = k + jm1 + 1;
                if idx <= d {
                    next[k] += w * fm[idx];
                }
            }
        }
        prev_change = change;
        change = next
            .iter()
            .zip(&fm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        fm = next;
        iters += 1;
    }
    let g = descending_renewal(&fm, top);
    let plus_masses: Vec<f64> = (1..=top).map(|z| fplus_at(&g, z)).collect();
    let plus = LatticeDist::new(h, 1, plus_masses)?;
    let p = plus.total();
    // geometric extrapolation of the remaining monotone increase
    let ratio = if prev_change.is_finite() && prev_change > 0.0 {
        (change / prev_change).min(0.999)
    } else {
        0.0
    };
    let fm_gap = change * ratio / (1.0 - ratio);
    let minus_masses: Vec<f64> = (0..=d).rev().map(|k| fm[k]).collect();
    Ok(LadderLaws {
        plus,
        minus: LatticeDist::new(h, -(d as i64), minus_masses)?,
        p,
        defect: fm_gap * (top as f64).max(1.0) + 64.0 * f64::EPSILON,
        iterations: iters,
    })
}

/// Max-norm of `F − (F₊ + F₋ − F₊⋆F₋)` over the lattice.
pub fn wiener_hopf_residual(step: &LatticeDist, laws: &LadderLaws) -> Result<f64, LatticeError> {
    let conv = laws.plus.convolve(&laws.minus)?;
    let lo = step
        .min_index()
        .min(laws.minus.min_index())
        .min(conv.min_index());
    let hi = step
        .max_index()
        .max(laws.plus.max_index())
        .max(conv.max_index());
    Ok((lo..=hi)
        .map(|i| {
            (step.mass(i) - (laws.plus.mass(i) + laws.minus.mass(i) - conv.mass(i))).abs()
        })
        .fold(0.0, f64::max))
}

/// `F̄₊(t)`, `t = 0..=top`, as `Σ_{i≥0} U^i F̄` with
/// `U g(t) = Σ_u g(t−u) F₋(u)`, summed until an increment falls below
/// `eps` in sup-norm.
pub fn fplus_via_representation(
    step: &LatticeDist,
    minus: &LatticeDist,
    n_terms: usize,
    eps: f64,
) -> Result<Vec<f64>, LatticeError> {
    let top = step.max_index().max(0) as usize;
    let d = (-minus.min_index()).max(0) as usize;
    let mut g: Vec<f64> = (0..=top as i64).map(|t| step.tail_index(t)).collect();
    let mut acc = g.clone();
    for _ in 0..n_terms {
        let next: Vec<f64> = (0..=top)
            .map(|t| {
                (0..=d.min(top - t))
                    .map(|k| g[t + k] * minus.mass(-(k as i64)))
                    .sum()
            })
            .collect();
        let sup = next.iter().cloned().fold(0.0, f64::max);
        for (a, v) in acc.iter_mut().zip(&next) {
            *a += v;
        }
        g = next;
        if sup < eps {
            return Ok(acc);
        }
    }
    if g.iter().all(|&v| v == 0.0) {
        return Ok(acc);
    }
    Err(LatticeError::NotConverged {
        what: "ladder representation series",
        iterations: n_terms,
    })
}

/// Tail `W̄(jh) = P{M > jh}` of the compound-geometric law with certified
/// bracketing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgTail {
    pub h: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Total mass of the accumulated geometric terms.
    pub mass: f64,
    pub terms: usize,
}

impl CgTail {
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// Widens every interval by `delta` (e.g. an uncertainty in `p`).
    pub fn widen(&mut self, delta: f64) {
        for (l, u) in self.lower.iter_mut().zip(self.upper.iter_mut()) {
            *l = (*l - delta).max(0.0);
            *u = (*u + delta).min(1.0);
        }
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        0.5 * (self.lower[j] + self.upper[j])
    }
}

/// `W = (1−p) Σ_n p^n H^{⋆n}` on indices `0..=top`, accumulated until
/// `p^{n+1} < eps`; the neglected geometric weight bounds the error.
pub fn compound_geometric_tail(hdist: &LatticeDist, p: f64, eps: f64, top: usize) -> Result<CgTail, LatticeError> {
    if !(0.0..1.0).contains(&p) {
        return Err(LatticeError::Invalid(format!("p = {p} is not in [0, 1)")));
    }
    if p > 0.0 && (hdist.min_index() < 1 || (hdist.total() - 1.0).abs() > 1e-9) {
        return Err(LatticeError::Invalid(
            "H must be a proper law on positive grid points".into(),
        ));
    }
    if top + 1 > MAX_SUPPORT {
        return Err(LatticeError::TooLarge {
            len: top + 1,
            max: MAX_SUPPORT,
        });
    }
    let hm: Vec<f64> = (0..=top as i64).map(|i| hdist.mass(i)).collect();
    let mut cur = vec![0.0; top + 1];
    cur[0] = 1.0;
    let mut lower = vec![0.0; top + 1];
    let mut pn = 1.0;
    let mut n = 0;
    loop {
        let weight = (1.0 - p) * pn;
        let mut cdf = 0.0f64;
        for (j, l) in lower.iter_mut().enumerate() {
            cdf += cur[j];
            *l += weight * (1.0 - cdf).max(0.0);
        }
        pn *= p;
        n += 1;
        if pn < eps {
            break;
        }
        let mut next = vec![0.0; top + 1];
        for (i, &a) in cur.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (k, &b) in hm.iter().enumerate().take(top + 1 - i).skip(1) {
                next[i + k] += a * b;
            }
        }
        cur = next;
    }
    let upper = lower.iter().map(|l| (l + pn).min(1.0)).collect();
    Ok(CgTail {
        h: hdist.h(),
        lower,
        upper,
        mass: 1.0 - pn,
        terms: n,
    })
}

/// `p = 1 − exp(−Σ_n P{S_n > 0}/n)` by exact convolution powers, summed
/// until the summand falls below `tol`.
pub fn spitzer_p_lattice(step: &LatticeDist, tol: f64, max_n: usize) -> Result<f64, LatticeError> {
    let mut sn = step.clone();
    let mut sum = 0.0;
    for n in 1..=max_n {
        let term = sn.tail_index(0) / n as f64;
        sum += term;
        if term < tol && n > 1 {
            return Ok(1.0 - (-sum).exp());
        }
        sn = sn.convolve(step)?;
    }
    Err(LatticeError::NotConverged {
        what: "lattice Spitzer series",
        iterations: max_n,
    })
}
