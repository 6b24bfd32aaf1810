//! Smoothly varying upper tails `F̄` with analytic derivatives and
//! integrated tails.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailError {
    #[error("invalid tail parameters: {0}")]
    InvalidParameter(String),
    #[error("x = {x} is outside the model domain [{x_min}, inf)")]
    OutsideDomain { x: f64, x_min: f64 },
    #[error("derivative of order {k} requested but the model supplies up to {k_max}")]
    DerivativeOrder { k: usize, k_max: usize },
    #[error("malformed tail spec `{0}`")]
    Spec(String),
}

/// An upper tail `F̄(x) = P{X > x}` regularly varying with index `-alpha`.
pub trait TailModel: fmt::Debug + Send + Sync {
    /// Magnitude of the regular-variation index.
    fn alpha(&self) -> f64;
    /// Left end of the domain on which the model is smooth.
    fn x_min(&self) -> f64;
    /// Highest analytic derivative order available.
    fn k_max(&self) -> usize;
    /// Declared order of smooth variation.
    fn smoothness_order(&self) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, x: f64) -> Result<f64, TailError>;
    /// k-th derivative of `F̄`; `k = 0` is the tail itself.
    fn dtail(&self, k: usize, x: f64) -> Result<f64, TailError>;
    /// `∫_x^∞ F̄`, reported positive.
    fn itail(&self, x: f64) -> Result<f64, TailError>;
    fn describe(&self) -> String;
}

fn check_domain(x: f64, x_min: f64) -> Result<(), TailError> {
    if x.is_nan() || x < x_min {
        return Err(TailError::OutsideDomain { x, x_min });
    }
    Ok(())
}

fn check_order(k: usize, k_max: usize) -> Result<(), TailError> {
    if k > k_max {
        return Err(TailError::DerivativeOrder { k, k_max });
    }
    Ok(())
}

const DEFAULT_K_MAX: usize = 16;

/// `F̄(x) = ((x - location)/scale)^{-alpha}` for `x >= location + scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pareto {
    alpha: f64,
    scale: f64,
    location: f64,
    k_max: usize,
}

impl Pareto {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, TailError> {
        if !(alpha > 1.0) || !alpha.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(TailError::InvalidParameter(format!(
                "pareto needs alpha > 1 and scale > 0 (alpha={alpha}, scale={scale})"
            )));
        }
        Ok(Pareto {
            alpha,
            scale,
            location: 0.0,
            k_max: DEFAULT_K_MAX,
        })
    }

    /// Translates the model: the returned tail is `x ↦ F̄(x - location)`.
    pub fn with_location(mut self, location: f64) -> Self {
        self.location = location;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn location(&self) -> f64 {
        self.location
    }
}

impl TailModel for Pareto {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn x_min(&self) -> f64 {
        self.location + self.scale
    }
    fn k_max(&self) -> usize {
        self.k_max
    }
    fn tail(&self, x: f64) -> Result<f64, TailError> {
        self.dtail(0, x)
    }
    fn dtail(&self, k: usize, x: f64) -> Result<f64, TailError> {
        check_domain(x, self.x_min())?;
        check_order(k, self.k_max)?;
        let y = x - self.location;
        // d^k/dy^k s^a y^{-a} = s^a (-a)(-a-1)...(-a-k+1) y^{-a-k}
        let falling: f64 = (0..k).map(|i| -self.alpha - i as f64).product();
        Ok(falling * (y / self.scale).powf(-self.alpha) * y.powi(-(k as i32)))
    }
    fn itail(&self, x: f64) -> Result<f64, TailError> {
        check_domain(x, self.x_min())?;
        let y = x - self.location;
        Ok(self.scale * (y / self.scale).powf(1.0 - self.alpha) / (self.alpha - 1.0))
    }
    fn describe(&self) -> String {
        format!(
            "pareto(alpha={}, scale={}, location={})",
            self.alpha, self.scale, self.location
        )
    }
}

/// Burr XII tail `F̄(x) = (1 + ((x - location)/scale)^c)^{-k}`, index `-ck`.
#[derive(Clone, Debug, PartialEq)]
pub struct Burr {
    c: f64,
    k: f64,
    scale: f64,
    location: f64,
    k_max: usize,
    // u-value beyond which the three-term series for ∫F̄ is used
    series_cutoff: f64,
}

const BURR_SERIES_TERMS: usize = 3;
const BURR_SERIES_REL_TOL: f64 = 1e-12;

impl Burr {
    pub fn new(c: f64, k: f64, scale: f64) -> Result<Self, TailError> {
        let ok = c > 0.0 && k > 0.0 && scale > 0.0 && c.is_finite() && k.is_finite() && scale.is_finite();
        if !ok || c * k <= 1.0 {
            return Err(TailError::InvalidParameter(format!(
                "burr needs c, k, scale > 0 and c*k > 1 (c={c}, k={k}, scale={scale})"
            )));
        }
        let b3 = generalized_binomial(-k, BURR_SERIES_TERMS).abs();
        let series_cutoff = (b3 / BURR_SERIES_REL_TOL)
            .powf(1.0 / (BURR_SERIES_TERMS as f64 * c))
            .max(2.0);
        Ok(Burr {
            c,
            k,
            scale,
            location: 0.0,
            k_max: 12,
            series_cutoff,
        })
    }

    pub fn with_location(mut self, location: f64) -> Self {
        self.location = location;
        self
    }

    fn u(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    /// Three-term expansion of `∫_x^∞ F̄`, valid for `u > 1`.
    fn itail_series(&self, u: f64) -> f64 {
        (0..BURR_SERIES_TERMS)
            .map(|j| {
                let e = self.c * (self.k + j as f64);
                generalized_binomial(-self.k, j) * u.powf(1.0 - e) / (e - 1.0)
            })
            .sum::<f64>()
            * self.scale
    }
}

/// `binom(a, j) = a (a-1) ... (a-j+1) / j!` for real `a`.
pub(crate) fn generalized_binomial(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a - i as f64) / (i as f64 + 1.0))
}

impl TailModel for Burr {
    fn alpha(&self) -> f64 {
        self.c * self.k
    }
    fn x_min(&self) -> f64 {
        self.location
    }
    fn k_max(&self) -> usize {
        self.k_max
    }
    fn tail(&self, x: f64) -> Result<f64, TailError> {
        check_domain(x, self.x_min())?;
        Ok((1.0 + self.u(x).powf(self.c)).powf(-self.k))
    }
    fn dtail(&self, k: usize, x: f64) -> Result<f64, TailError> {
        if k == 0 {
            return self.tail(x);
        }
        check_domain(x, self.x_min())?;
        check_order(k, self.k_max)?;
        let y = x - self.location;
        if y <= 0.0 {
            return Err(TailError::OutsideDomain {
                x,
                x_min: self.location,
            });
        }
        // Taylor coefficients of g(x+δ) = 1 + ((x+δ-loc)/s)^c in δ
        let uc = self.u(x).powf(self.c);
        let g: Vec<f64> = (0..=k)
            .map(|j| {
                let t = uc * generalized_binomial(self.c, j) * y.powi(-(j as i32));
                if j == 0 {
                    1.0 + t
                } else {
                    t
                }
            })
            .collect();
        // f = g^{-k}: n g_0 f_n = Σ_{j=1..n} (a j - (n - j)) g_j f_{n-j}
        let a = -self.k;
        let mut f = vec![g[0].powf(a)];
        for n in 1..=k {
            let s: f64 = (1..=n)
                .map(|j| (a * j as f64 - (n - j) as f64) * g[j] * f[n - j])
                .sum();
            f.push(s / (n as f64 * g[0]));
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        Ok(f[k] * fact)
    }
    fn itail(&self, x: f64) -> Result<f64, TailError> {
        check_domain(x, self.x_min())?;
        let u = self.u(x);
        if u >= self.series_cutoff {
            return Ok(self.itail_series(u));
        }
        let xc = self.location + self.scale * self.series_cutoff;
        let body = quad::integrate(
            &|t| (1.0 + self.u(t).powf(self.c)).powf(-self.k),
            x,
            xc,
        );
        Ok(body + self.itail_series(self.series_cutoff))
    }
    fn describe(&self) -> String {
        format!(
            "burr(c={}, k={}, scale={}, location={})",
            self.c, self.k, self.scale, self.location
        )
    }
}

/// Tail spec as accepted on the command line:
/// `pareto:alpha=2.5,scale=1` or `burr:c=2,k=1.5,scale=1`.
#[derive(Clone, Debug, PartialEq)]
pub enum TailSpec {
    Pareto { alpha: f64, scale: f64 },
    Burr { c: f64, k: f64, scale: f64 },
}

impl TailSpec {
    pub fn build(&self) -> Result<Box<dyn TailModel>, TailError> {
        Ok(match *self {
            TailSpec::Pareto { alpha, scale } => Box::new(Pareto::new(alpha, scale)?),
            TailSpec::Burr { c, k, scale } => Box::new(Burr::new(c, k, scale)?),
        })
    }

    /// The `x` with `F̄(x) = u`, for `u` in `(0, 1]`; turns a uniform draw
    /// into a sample.
    pub fn inverse_survival(&self, u: f64) -> f64 {
        match *self {
            TailSpec::Pareto { alpha, scale } => scale * u.powf(-1.0 / alpha),
            TailSpec::Burr { c, k, scale } => scale * (u.powf(-1.0 / k) - 1.0).max(0.0).powf(1.0 / c),
        }
    }

    /// `E A^j` for a nonnegative variable with this tail; infinite when
    /// `j >= alpha`.
    pub fn raw_moment(&self, j: u32) -> f64 {
        let jf = j as f64;
        match *self {
            TailSpec::Pareto { alpha, scale } => {
                if jf >= alpha {
                    f64::INFINITY
                } else {
                    alpha * scale.powi(j as i32) / (alpha - jf)
                }
            }
            TailSpec::Burr { c, k, scale } => {
                if jf >= c * k {
                    f64::INFINITY
                } else {
                    // E A^j = s^j k B(k − j/c, 1 + j/c)
                    scale.powi(j as i32) * k * statrs::function::beta::beta(k - jf / c, 1.0 + jf / c)
                }
            }
        }
    }
}

impl fmt::Display for TailSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailSpec::Pareto { alpha, scale } => write!(f, "pareto:alpha={alpha},scale={scale}"),
            TailSpec::Burr { c, k, scale } => write!(f, "burr:c={c},k={k},scale={scale}"),
        }
    }
}

/// Splits `name:key=value,...` into the name and a key/value list.
pub(crate) fn parse_kv(spec: &str) -> Option<(String, Vec<(String, f64)>)> {
    let (name, rest) = spec.trim().split_once(':')?;
    let mut out = Vec::new();
    for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=')?;
        out.push((k.trim().to_string(), v.trim().parse().ok()?));
    }
    Some((name.trim().to_ascii_lowercase(), out))
}

/// Looks up the keys in `wanted` (with optional defaults) and rejects
/// anything else.
pub(crate) fn take_keys(
    pairs: &[(String, f64)],
    wanted: &[(&str, Option<f64>)],
) -> Option<Vec<f64>> {
    if pairs
        .iter()
        .any(|(k, _)| !wanted.iter().any(|(w, _)| w == k))
    {
        return None;
    }
    wanted
        .iter()
        .map(|(w, default)| {
            pairs
                .iter()
                .find(|(k, _)| k == w)
                .map(|(_, v)| *v)
                .or(*default)
        })
        .collect()
}

impl FromStr for TailSpec {
    type Err = TailError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TailError::Spec(s.to_string());
        let (name, kv) = parse_kv(s).ok_or_else(bad)?;
        match name.as_str() {
            "pareto" => {
                let v = take_keys(&kv, &[("alpha", None), ("scale", Some(1.0))]).ok_or_else(bad)?;
                Ok(TailSpec::Pareto {
                    alpha: v[0],
                    scale: v[1],
                })
            }
            "burr" => {
                let v = take_keys(&kv, &[("c", None), ("k", None), ("scale", Some(1.0))])
                    .ok_or_else(bad)?;
                Ok(TailSpec::Burr {
                    c: v[0],
                    k: v[1],
                    scale: v[2],
                })
            }
            _ => Err(bad()),
        }
    }
}

/// One row of the smooth-variation diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessRow {
    pub t: f64,
    pub delta: f64,
    pub sup_abs: f64,
}

/// `Δ^r_{t,x}(h) = sign(x) (h(t(1-x)) - h(t)) / (|x|^r h(t))`.
pub fn delta_increment(h: &dyn Fn(f64) -> Result<f64, TailError>, r: f64, t: f64, x: f64) -> Result<f64, TailError> {
    let ht = h(t)?;
    Ok(x.signum() * (h(t * (1.0 - x))? - ht) / (x.abs().powf(r) * ht))
}

const DIAGNOSTIC_POINTS: usize = 64;

/// Sup over `0 < |x| <= δ` of `|Δ^r_{t,x}(F̄^{(m)})|` for every `(t, δ)` pair,
/// evaluated on a log-spaced grid of `|x|` of both signs.
pub fn smoothness_diagnostic(
    model: &dyn TailModel,
    m: usize,
    r: f64,
    t_grid: &[f64],
    delta_grid: &[f64],
) -> Result<Vec<SmoothnessRow>, TailError> {
    check_order(m, model.k_max())?;
    let h = |y: f64| model.dtail(m, y);
    let mut rows = Vec::with_capacity(t_grid.len() * delta_grid.len());
    for &t in t_grid {
        for &delta in delta_grid {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(TailError::InvalidParameter(format!(
                    "delta must lie in (0, 1), got {delta}"
                )));
            }
            check_domain(t * (1.0 - delta), model.x_min())?;
            let mut sup: f64 = 0.0;
            for i in 0..DIAGNOSTIC_POINTS {
                let frac = i as f64 / (DIAGNOSTIC_POINTS - 1) as f64;
                let ax = delta * 1e-6f64.powf(1.0 - frac);
                for x in [ax, -ax] {
                    sup = sup.max(delta_increment(&h, r, t, x)?.abs());
                }
            }
            rows.push(SmoothnessRow {
                t,
                delta,
                sup_abs: sup,
            });
        }
    }
    Ok(rows)
}

/// Relative error between `F̄^{(k)}(x)` and the central difference of
/// `F̄^{(k-1)}` with step `h`.
pub fn deriv_check(model: &dyn TailModel, k: usize, x: f64, h: f64) -> Result<f64, TailError> {
    if k == 0 {
        return Err(TailError::InvalidParameter("deriv_check needs k >= 1".into()));
    }
    let exact = model.dtail(k, x)?;
    let fd = (model.dtail(k - 1, x + h)? - model.dtail(k - 1, x - h)?) / (2.0 * h);
    let scale = exact.abs().max(f64::MIN_POSITIVE);
    Ok((exact - fd).abs() / scale)
}
