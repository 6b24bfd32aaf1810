//! Validation suites: closed forms, lattice oracles and simulation checked
//! against one another. Emits one CSV row per check; the gate fails if any
//! row fails.

use walktail_core::expansion::{build_operator, fplus_operator, residual_diagnostic, ResidualRow};
use walktail_core::ladder::{
    descending_moments, return_bound, simulate_ascents, simulate_max, MomentSet,
};
use walktail_core::lattice::{fplus_via_representation, spitzer_p_lattice, wiener_hopf_residual};
use walktail_core::stats::Estimate;
use walktail_core::step::{Step, StepDistribution};

use crate::commands::{censor_from, lattice_run, mc_moments, seed, DEFAULT_EPS, DEFAULT_TOP};
use crate::config::RunConfig;
use crate::output::{num, parse_grid, Table};
use crate::{usage, CliError};

/// z-score bound for simulation checks.
const Z: f64 = 3.0;
/// Bound on the ascent censoring indicator.
const CENSORING_LIMIT: f64 = 1e-4;
/// Default barrier, in units of `|μ|`, for the ladder-tail check.
const LADDER_TAIL_BARRIER: f64 = 400.0;

struct Check {
    name: String,
    x: Option<f64>,
    value: f64,
    target: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    /// `|value − target| <= tolerance`.
    fn close(&mut self, name: &str, value: f64, target: f64, tolerance: f64) {
        self.push(name, None, value, target, tolerance, (value - target).abs() <= tolerance);
    }

    /// Estimate within `Z` standard errors of `target`.
    fn z(&mut self, name: &str, x: Option<f64>, e: Estimate, target: f64) {
        let tol = Z * e.se;
        self.push(name, x, e.value, target, tol, e.within(target, Z));
    }

    fn push(&mut self, name: &str, x: Option<f64>, value: f64, target: f64, tolerance: f64, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            x,
            value,
            target,
            tolerance,
            pass,
        });
    }

    fn finish(self, case: &str, out: &mut Vec<u8>) -> Result<Option<String>, CliError> {
        let mut t = Table::new(["check", "x", "value", "target", "tolerance", "pass"]);
        t.note(format!("validation case {case}"));
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        for c in &self.checks {
            t.rows.push(vec![
                c.name.clone(),
                c.x.map(num).unwrap_or_default(),
                num(c.value),
                num(c.target),
                num(c.tolerance),
                c.pass.to_string(),
            ]);
        }
        t.write(out)?;
        Ok((!failed.is_empty()).then(|| {
            format!(
                "validation `{case}` failed {} of {} checks: {}",
                failed.len(),
                self.checks.len(),
                failed.join(", ")
            )
        }))
    }
}

pub fn run(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<Option<String>, CliError> {
    let case = cfg
        .case
        .clone()
        .ok_or_else(|| CliError::Usage("missing --case (twopoint or paretoshift)".into()))?;
    match case.as_str() {
        "twopoint" => twopoint(cfg, strict, out),
        "paretoshift" => paretoshift(cfg, strict, out),
        other => Err(CliError::Usage(format!("unknown validation case `{other}`"))),
    }
}

/// `P{X=1} = 1/4`, `P{X=−1} = 3/4`: `p = 1/3`, `F₊ = δ₁/3`,
/// `μ_{F₋,1} = −3/4`, `P{M ≥ k} = 3^{−k}`.
fn twopoint(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<Option<String>, CliError> {
    let seed = seed(cfg, strict)?;
    let reps = *cfg.reps.get_or_insert(1_000_000);
    let step = StepDistribution::two_point(0.25, 1.0, 1.0).map_err(usage)?;
    cfg.step = Some(step.describe());
    let mut s = Suite::default();
    let tol = 1e-10;

    let run = lattice_run(&step, 1.0, 1, DEFAULT_EPS)?;
    let laws = &run.laws;
    s.close("lattice_p", laws.p, 1.0 / 3.0, tol);
    s.close("lattice_mu_minus_1", laws.minus.moment(1), -0.75, tol);
    let plus_gap = (laws.plus.min_index()..=laws.plus.max_index())
        .map(|i| (laws.plus.mass(i) - if i == 1 { 1.0 / 3.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    s.close("lattice_fplus_atom", plus_gap, 0.0, tol);
    let w = run.max_tail(1e-15, 10)?;
    let max_gap = (1..=10)
        .map(|k| (w.midpoint(k - 1) - 3f64.powi(-(k as i32))).abs())
        .fold(0.0, f64::max);
    s.close("lattice_max_tail", max_gap, 0.0, tol);
    let wh = wiener_hopf_residual(&run.lattice, laws).map_err(usage)?;
    s.close("wiener_hopf_residual", wh, 0.0, tol);
    let sp = spitzer_p_lattice(&run.lattice, 1e-17, 5000).map_err(usage)?;
    s.close("lattice_spitzer_p", sp, 1.0 / 3.0, tol);
    let rep = fplus_via_representation(&run.lattice, &laws.minus, 10_000, 1e-14).map_err(usage)?;
    let rep_gap = rep
        .iter()
        .enumerate()
        .map(|(t, v)| (v - laws.plus.tail_index(t as i64)).abs())
        .fold(0.0, f64::max);
    s.close("fplus_representation", rep_gap, 0.0, tol);

    let censor = censor_from(cfg, &step);
    let terms = *cfg.spitzer_terms.get_or_insert(200);
    let (ms, diag) = mc_moments(&step, 2, reps, censor, terms, seed)?;
    s.z("mc_p", None, Estimate { value: ms.p, se: ms.p_se }, 1.0 / 3.0);
    s.z("mc_mu_minus_1", None, Estimate { value: ms.mu_minus[1], se: ms.mu_minus_se[1] }, -0.75);
    s.z("mc_mu_plus_1", None, Estimate { value: ms.mu_plus[1], se: ms.mu_plus_se[1] }, 1.0 / 3.0);
    s.z("mc_spitzer_p", None, diag.spitzer.p, 1.0 / 3.0);
    s.push("mc_identity_z", None, ms.identity_z(), 0.0, Z, ms.identity_z() <= Z);
    s.close("mc_censoring", diag.ascent_censoring.indicator, 0.0, CENSORING_LIMIT);
    let levels: Vec<f64> = (1..=10).map(|k| k as f64 - 0.5).collect();
    let mt = simulate_max(&step, &levels, censor, reps, seed);
    for (k, e) in (1..=10).zip(&mt.tail) {
        let t = 3f64.powi(-k);
        // a level with no hits has zero batch variance; fall back on the
        // binomial error under the target
        let e = Estimate {
            se: e.se.max((t * (1.0 - t) / reps as f64).sqrt()),
            ..*e
        };
        s.z("mc_max_tail", Some(k as f64), e, t);
    }
    s.finish("twopoint", out)
}

/// Rows of the top quartile of a residual table.
pub fn top_quartile(rows: &[ResidualRow]) -> &[ResidualRow] {
    &rows[(3 * rows.len()) / 4..]
}

/// `X = A − 3`, `A` Pareto(3, 1): lattice identities, expansion against the
/// lattice oracle, and the first-order ascending-ladder tail against
/// simulation.
fn paretoshift(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<Option<String>, CliError> {
    let seed = seed(cfg, strict)?;
    let reps = *cfg.reps.get_or_insert(10_000_000);
    let step = StepDistribution::pareto_shift(3.0, 1.0, 3.0).map_err(usage)?;
    cfg.step = Some(step.describe());
    let model = step.upper_tail().expect("pareto step has a tail model");
    let mut s = Suite::default();

    let run = lattice_run(&step, 1.0, DEFAULT_TOP, 1e-13)?;
    let wh = wiener_hopf_residual(&run.lattice, &run.laws).map_err(usage)?;
    s.close("wiener_hopf_residual", wh, 0.0, 1e-10);
    let lat_ms = run.laws.moment_set(&run.lattice, 2);
    let gap = (lat_ms.mu_f - (1.0 - lat_ms.p) * lat_ms.mu_minus[1]).abs();
    s.close("lattice_identity", gap, 0.0, 1e-10 * lat_ms.mu_f.abs());

    // expansion of orders 1 and 2 against the oracle on x = 10..100
    let xs = parse_grid("10:100:10")?;
    let w = run.max_tail(1e-15, 100)?;
    let reference: Vec<(f64, f64, f64)> = xs
        .iter()
        .map(|&x| {
            let j = x as usize;
            (x, w.midpoint(j), 0.5 * (w.upper[j] - w.lower[j]))
        })
        .collect();
    let rows = |m| -> Result<Vec<ResidualRow>, CliError> {
        let op = build_operator(&lat_ms, m).map_err(usage)?;
        residual_diagnostic(&op, m, model, &reference, 0.5).map_err(usage)
    };
    let (r1, r2) = (rows(1)?, rows(2)?);
    for (a, b) in top_quartile(&r1).iter().zip(top_quartile(&r2)) {
        s.push("order2_not_worse", Some(a.x), b.residual, a.residual, 0.0, b.residual <= a.residual);
    }
    let q2 = top_quartile(&r2);
    for pair in q2.windows(2) {
        let pass = pair[1].scaled <= pair[0].scaled;
        s.push("order2_scaled_nonincreasing", Some(pair[1].x), pair[1].scaled, pair[0].scaled, 0.0, pass);
    }

    // first-order F̄₊ against simulated ascending ladder heights; a path
    // killed at -B would still have climbed above x with probability about
    // ∫_{B+x}^∞ F̄/|μ|, so the barrier must sit far below the levels probed
    cfg.barrier.get_or_insert(LADDER_TAIL_BARRIER * step.mean().abs());
    let censor = censor_from(cfg, &step);
    let asc = simulate_ascents(&step, censor, reps, seed);
    let desc = descending_moments(&step, 2, reps.min(1_000_000), censor.cap, seed).map_err(usage)?;
    let mc_ms = MomentSet {
        p: asc.p().value,
        mu_f: step.mean(),
        mu_minus: desc.iter().map(|e| e.value).collect(),
        mu_plus: vec![asc.p().value],
        p_se: asc.p().se,
        mu_f_se: 0.0,
        mu_minus_se: desc.iter().map(|e| e.se).collect(),
        mu_plus_se: vec![asc.p().se],
        censoring: Some(asc.censoring().indicator),
        source: "monte carlo".into(),
    };
    s.push("mc_identity_z", None, mc_ms.identity_z(), 0.0, Z, mc_ms.identity_z() <= Z);
    let op = fplus_operator(&mc_ms, 1).map_err(usage)?;
    let grid = parse_grid("log:1:1000:31")?;
    let resolved = grid
        .iter()
        .map(|&x| (x, asc.tail(x)))
        .filter(|(_, e)| e.value > 0.0 && e.relative_se() < 0.05)
        .last();
    match resolved {
        Some((x, e)) => {
            let fit = op.apply_to_tail(model, x).map_err(usage)?;
            let ratio = fit / e.value;
            s.push("fplus_first_order_ratio", Some(x), ratio, 1.0, 0.15, (0.85..=1.15).contains(&ratio));
            let bias = asc.censoring().killed * return_bound(&step, censor.barrier, x) / e.value;
            s.push("fplus_censoring_relative", Some(x), bias, 0.0, 0.05, bias <= 0.05);
        }
        None => s.push("fplus_first_order_ratio", None, f64::NAN, 1.0, 0.15, false),
    }
    s.close("mc_censoring", asc.censoring().indicator, 0.0, CENSORING_LIMIT);
    s.finish("paretoshift", out)
}
