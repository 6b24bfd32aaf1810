//! Subcommand implementations. Each fills the defaults it uses into the
//! resolved config so that `--emit-config` reproduces the run.

use serde::Serialize;
use serde_json::json;
use walktail_core::expansion::{
    build_operator, check_order, evaluate, fplus_operator, penultimate_operator, propagate_se,
    symbolic_fplus_operator, symbolic_listing, symbolic_penultimate_operator, ExpansionError,
};
use walktail_core::ladder::{
    ascending_moments, descending_moments, estimate_p_spitzer, lemma1_diagnostic, Censor, Censoring,
    MomentSet, RenewalStep, SpitzerP,
};
use walktail_core::lattice::{
    compound_geometric_tail, discretize, ladder_laws, wiener_hopf_residual, CgTail, LadderLaws,
    LadderMethod, LatticeDist,
};
use walktail_core::ruin::{psi_expansion, psi_monte_carlo, Interarrival, RuinScenario};
use walktail_core::step::{Step, StepDistribution, StepSpec};
use walktail_core::tail::{TailModel, TailSpec};

use crate::config::RunConfig;
use crate::output::{load_moments, num, parse_grid, write_json, Table};
use crate::{usage, validate, CliError, Command, ExpandArgs, SCHEMA};

/// Result of a subcommand: the resolved settings and, for validation
/// suites, the failure summary if the gate did not pass.
pub struct Outcome {
    pub resolved: RunConfig,
    pub gate: Option<String>,
}

impl Outcome {
    fn ok(resolved: RunConfig) -> Self {
        Outcome { resolved, gate: None }
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EPS: f64 = 1e-12;
pub const DEFAULT_TOP: i64 = 10_000;
/// Largest mass beyond the top grid point accepted when discretizing.
pub const LEAK_BUDGET: f64 = 1e-6;

pub fn dispatch(cmd: &Command, mut cfg: RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<Outcome, CliError> {
    match cmd {
        Command::Expand(a) => expand(a, &mut cfg, out).map(|_| Outcome::ok(cfg)),
        Command::Moments(_) => moments(&mut cfg, strict, out).map(|_| Outcome::ok(cfg)),
        Command::Evaluate(_) => evaluate_cmd(&mut cfg, out).map(|_| Outcome::ok(cfg)),
        Command::Oracle(_) => oracle(&mut cfg, out).map(|_| Outcome::ok(cfg)),
        Command::Ruin(_) => ruin(&mut cfg, strict, out).map(|_| Outcome::ok(cfg)),
        Command::Lemma1(_) => lemma1(&mut cfg, strict, out).map(|_| Outcome::ok(cfg)),
        Command::Validate(_) => {
            let gate = validate::run(&mut cfg, strict, out)?;
            Ok(Outcome { resolved: cfg, gate })
        }
    }
}

pub(crate) fn seed(cfg: &mut RunConfig, strict: bool) -> Result<u64, CliError> {
    match cfg.seed {
        Some(s) => Ok(s),
        None if strict => Err(CliError::Usage("--seed is required in --strict mode".into())),
        None => Ok(*cfg.seed.insert(DEFAULT_SEED)),
    }
}

pub(crate) fn step_from(cfg: &RunConfig) -> Result<StepDistribution, CliError> {
    let spec = cfg
        .step
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing --step".into()))?;
    let spec: StepSpec = spec.parse().map_err(usage)?;
    StepDistribution::new(spec).map_err(usage)
}

fn order(cfg: &mut RunConfig, default: usize) -> Result<usize, CliError> {
    let m = *cfg.order.get_or_insert(default);
    if m < 1 {
        return Err(usage(ExpansionError::OrderTooSmall(m)));
    }
    Ok(m)
}

fn grid(cfg: &mut RunConfig, default: &str) -> Result<Vec<f64>, CliError> {
    parse_grid(cfg.xgrid.get_or_insert_with(|| default.to_string()))
}

fn warn(w: Option<String>) {
    if let Some(w) = w {
        eprintln!("walktail: warning: {w}");
    }
}

fn guard(m: usize, model: &dyn TailModel, step: &dyn Step) -> Result<(), CliError> {
    warn(check_order(m, model.alpha(), step.kappa(), model.smoothness_order()).map_err(usage)?);
    Ok(())
}

fn expand(a: &ExpandArgs, cfg: &mut RunConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let m = order(cfg, 4)?;
    if !matches!(a.format.as_str(), "text" | "json") {
        return Err(CliError::Usage(format!("unknown format `{}`", a.format)));
    }
    // (power of D applied to F̄ for the first coefficient, coefficients)
    let (first, coeffs): (i64, Vec<String>) = match &cfg.moments {
        Some(path) if !a.symbolic => {
            let ms = load_moments(std::path::Path::new(path))?;
            let op = match a.operator.as_str() {
                "theorem" => build_operator(&ms, m),
                "fplus" => fplus_operator(&ms, m),
                "penultimate" => penultimate_operator(&ms, m),
                other => return Err(CliError::Usage(format!("unknown operator `{other}`"))),
            }
            .map_err(usage)?;
            let first = if a.operator == "penultimate" { 0 } else { -1 };
            (first, op.coeffs().iter().map(|&c| num(c)).collect())
        }
        _ => match a.operator.as_str() {
            "theorem" => {
                let listing = symbolic_listing(m, a.all_terms, a.in_step_mean).map_err(usage)?;
                (-1, listing.iter().map(|t| t.coeff.to_string()).collect())
            }
            "fplus" => {
                let op = symbolic_fplus_operator(m).map_err(usage)?;
                (-1, op.coeffs().iter().map(|c| c.to_string()).collect())
            }
            "penultimate" => {
                let op = symbolic_penultimate_operator(m).map_err(usage)?;
                (0, op.coeffs().iter().map(|c| c.to_string()).collect())
            }
            other => return Err(CliError::Usage(format!("unknown operator `{other}`"))),
        },
    };
    let lines: Vec<(i64, &String)> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| (first + k as i64, c))
        .collect();
    if a.format == "json" {
        let terms: Vec<_> = lines
            .iter()
            .map(|(p, c)| json!({"power": p, "coeff": c}))
            .collect();
        write_json(
            out,
            &json!({
                "schema": SCHEMA.trim_start_matches("# "),
                "operator": a.operator,
                "order": m,
                "terms": terms,
            }),
        )
    } else {
        out.extend_from_slice(format!("{SCHEMA}\n# operator {} order {m}: coefficient of D^k Fbar\n", a.operator).as_bytes());
        for (p, c) in lines {
            out.extend_from_slice(format!("D^{p}: {c}\n").as_bytes());
        }
        Ok(())
    }
}

/// Monte Carlo diagnostics reported next to a moment set.
#[derive(Debug, Serialize)]
pub struct McDiagnostics {
    pub ascent_censoring: Censoring,
    pub spitzer: SpitzerP,
    /// `|p_direct − p_spitzer|` in combined standard errors.
    pub p_agreement_z: f64,
    /// `|μ_F − (1−p)μ_{F₋,1}|` in standard errors.
    pub identity_z: f64,
}

/// Ladder moments by simulation: descending moments up to `m`, ascending
/// up to `m − 1`, plus the Spitzer cross-check of `p`.
pub fn mc_moments(
    step: &dyn Step,
    m: usize,
    reps: u64,
    censor: Censor,
    spitzer_terms: usize,
    seed: u64,
) -> Result<(MomentSet, McDiagnostics), CliError> {
    let desc = descending_moments(step, m as u32, reps, censor.cap, seed).map_err(usage)?;
    let (asc, censoring) = ascending_moments(step, m.saturating_sub(1) as u32, reps, censor, seed);
    let spitzer = estimate_p_spitzer(step, spitzer_terms, reps, seed);
    let ms = MomentSet {
        p: asc[0].value,
        mu_f: step.mean(),
        mu_minus: desc.iter().map(|e| e.value).collect(),
        mu_plus: asc.iter().map(|e| e.value).collect(),
        p_se: asc[0].se,
        mu_f_se: 0.0,
        mu_minus_se: desc.iter().map(|e| e.se).collect(),
        mu_plus_se: asc.iter().map(|e| e.se).collect(),
        censoring: Some(censoring.indicator),
        source: format!("monte carlo ({reps} reps, seed {seed})"),
    };
    let p_agreement_z = (ms.p - spitzer.p.value).abs() / ms.p_se.hypot(spitzer.p.se);
    let diag = McDiagnostics {
        ascent_censoring: censoring,
        spitzer,
        p_agreement_z,
        identity_z: ms.identity_z(),
    };
    Ok((ms, diag))
}

pub(crate) fn censor_from(cfg: &mut RunConfig, step: &dyn Step) -> Censor {
    let d = Censor::default_for(step);
    Censor {
        barrier: *cfg.barrier.get_or_insert(d.barrier),
        cap: *cfg.cap.get_or_insert(d.cap),
    }
}

/// A step on a lattice with its exact ladder laws.
pub struct LatticeRun {
    pub lattice: LatticeDist,
    /// Mass beyond the top grid point, parked on it.
    pub leak: f64,
    pub laws: LadderLaws,
}

impl LatticeRun {
    /// Heuristic bound on how far parking the leaked mass on the top grid
    /// point can move `P{M > x}` for `x` below the top: each of the
    /// `~ top/|μ|` steps of a descent from there could have been a leaked
    /// jump.
    pub fn leak_bound(&self) -> f64 {
        let top = self.lattice.max_index() as f64 * self.lattice.h();
        self.leak * top.max(1.0) / self.lattice.mean().abs()
    }

    /// `P{M > jh}`, `j = 0..=top_j`, widened by the uncertainty of `p` and
    /// the leak bound.
    pub fn max_tail(&self, eps: f64, top_j: usize) -> Result<CgTail, CliError> {
        let h = self.laws.conditional_plus().map_err(usage)?;
        let mut w = compound_geometric_tail(&h, self.laws.p, eps, top_j).map_err(usage)?;
        let p_hi = self.laws.p_interval().1.min(1.0 - 1e-12);
        w.widen(self.laws.defect * (1.0 + p_hi) / (1.0 - p_hi) + self.leak_bound());
        Ok(w)
    }
}

pub fn lattice_run(step: &StepDistribution, h: f64, top: i64, eps: f64) -> Result<LatticeRun, CliError> {
    let (lattice, leak) = match step.atoms() {
        Some(atoms) => (LatticeDist::from_atoms(h, &atoms).map_err(usage)?, 0.0),
        None => {
            let d = discretize(step, h, top, LEAK_BUDGET).map_err(usage)?;
            (d.lattice, d.leak)
        }
    };
    let laws = ladder_laws(&lattice, LadderMethod::auto(&lattice), eps).map_err(usage)?;
    Ok(LatticeRun { lattice, leak, laws })
}

fn lattice_settings(cfg: &mut RunConfig) -> (f64, i64, f64) {
    (
        *cfg.h.get_or_insert(1.0),
        *cfg.top.get_or_insert(DEFAULT_TOP),
        *cfg.eps.get_or_insert(DEFAULT_EPS),
    )
}

fn lattice_diagnostics(run: &LatticeRun) -> Result<serde_json::Value, CliError> {
    let (lo, hi) = run.laws.p_interval();
    Ok(json!({
        "h": run.lattice.h(),
        "support": [run.lattice.min_index(), run.lattice.max_index()],
        "leak": run.leak,
        "p_interval": [lo, hi],
        "iterations": run.laws.iterations,
        "wiener_hopf_residual": wiener_hopf_residual(&run.lattice, &run.laws).map_err(usage)?,
    }))
}

fn moments(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<(), CliError> {
    let step = step_from(cfg)?;
    let m = order(cfg, 2)?;
    let source = cfg.source.get_or_insert_with(|| "mc".into()).clone();
    let (ms, diagnostics) = match source.as_str() {
        "mc" => {
            let seed = seed(cfg, strict)?;
            let reps = *cfg.reps.get_or_insert(100_000);
            let censor = censor_from(cfg, &step);
            let terms = *cfg.spitzer_terms.get_or_insert(200);
            let (ms, diag) = mc_moments(&step, m, reps, censor, terms, seed)?;
            (ms, serde_json::to_value(diag).map_err(usage)?)
        }
        "lattice" => {
            let (h, top, eps) = lattice_settings(cfg);
            let run = lattice_run(&step, h, top, eps)?;
            let ms = run.laws.moment_set(&run.lattice, m);
            let mut diag = lattice_diagnostics(&run)?;
            diag["identity_z"] = json!(ms.identity_z());
            (ms, diag)
        }
        other => return Err(CliError::Usage(format!("unknown moment source `{other}` (mc or lattice)"))),
    };
    write_json(
        out,
        &json!({
            "schema": SCHEMA.trim_start_matches("# "),
            "step": step.describe(),
            "order": m,
            "moments": ms,
            "diagnostics": diagnostics,
        }),
    )
}

/// Value of the order-`m` expansion at `x` and its standard error from the
/// moment uncertainties.
fn value_with_se(ms: &MomentSet, m: usize, model: &dyn TailModel, x: f64) -> Result<(Vec<f64>, f64, f64), CliError> {
    let op = build_operator(ms, m).map_err(usage)?;
    let e = evaluate(&op, model, x).map_err(usage)?;
    let se = propagate_se(ms, &|s: &MomentSet| Ok(build_operator(s, m)?.apply_to_tail(model, x)?)).map_err(usage)?;
    Ok((e.terms, e.value, se))
}

fn term_header(m: usize) -> impl Iterator<Item = String> {
    (0..m).map(|k| format!("term_{k}"))
}

fn evaluate_cmd(cfg: &mut RunConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let step = step_from(cfg)?;
    let m = order(cfg, 2)?;
    let xs = grid(cfg, "10:100:10")?;
    let model = step
        .upper_tail()
        .ok_or_else(|| CliError::Usage(format!("{} has no heavy upper tail to expand", step.describe())))?;
    guard(m, model, &step)?;
    let mut table = Table::new(
        std::iter::once("x".to_string())
            .chain(term_header(m))
            .chain(["value".to_string(), "value_se".to_string()]),
    );
    let (ms, shift) = match cfg.moments.clone() {
        Some(path) => {
            table.note(format!("moments: {path}"));
            (load_moments(std::path::Path::new(&path))?, 0.0)
        }
        None => {
            let (h, top, eps) = lattice_settings(cfg);
            let run = lattice_run(&step, h, top, eps)?;
            table.note(format!("moments: lattice h={h}; the expansion is evaluated at x + h/2"));
            (run.laws.moment_set(&run.lattice, m), 0.5 * h)
        }
    };
    for &x in &xs {
        let (terms, value, se) = value_with_se(&ms, m, model, x + shift)?;
        let mut row = vec![x];
        row.extend(terms);
        row.extend([value, se]);
        table.push_nums(&row);
    }
    table.write(out)
}

fn oracle(cfg: &mut RunConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let step = step_from(cfg)?;
    let (h, top, eps) = lattice_settings(cfg);
    let xmax = *cfg.xmax.get_or_insert(100.0);
    let run = lattice_run(&step, h, top, eps)?;
    let top_j = (xmax / h).round().max(0.0) as usize;
    let w = run.max_tail(eps, top_j)?;
    let mut table = Table::new(["x", "Wbar_lower", "Wbar_upper"]);
    let (lo, hi) = run.laws.p_interval();
    table.note(format!("step {} on lattice h={h}; p in [{}, {}]; leak {}", step.describe(), num(lo), num(hi), num(run.leak)));
    for j in 0..=top_j {
        table.push_nums(&[w.x(j), w.lower[j], w.upper[j]]);
    }
    table.write(out)
}

fn ruin(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<(), CliError> {
    let claims: TailSpec = cfg
        .claims
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing --claims".into()))?
        .parse()
        .map_err(usage)?;
    let inter: Interarrival = cfg
        .interarrival
        .get_or_insert_with(|| "exp:mean=1".into())
        .parse()
        .map_err(usage)?;
    let premium = cfg
        .premium
        .ok_or_else(|| CliError::Usage("missing --premium".into()))?;
    let sc = RuinScenario::new(claims, inter, premium).map_err(usage)?;
    let m = order(cfg, 2)?;
    let xs = grid(cfg, "10:100:10")?;
    let mut table = Table::new(
        ["x", "psi_expansion", "psi_expansion_se"]
            .into_iter()
            .map(String::from)
            .chain(term_header(m)),
    );
    let ms = match (&cfg.moments, inter) {
        (Some(path), _) => {
            table.note(format!("moments: {path}"));
            load_moments(std::path::Path::new(path))?
        }
        (None, Interarrival::Exponential { .. }) => {
            table.note("moments: closed form");
            sc.exact_moments(m).map_err(usage)?
        }
        (None, Interarrival::Deterministic { .. }) => {
            let s = seed(cfg, strict)?;
            let reps = *cfg.reps.get_or_insert(100_000);
            let censor = censor_from(cfg, &sc);
            let terms = *cfg.spitzer_terms.get_or_insert(200);
            table.note("moments: monte carlo");
            mc_moments(&sc, m, reps, censor, terms, s)?.0
        }
    };
    let (rows, w) = psi_expansion(&sc, m, &ms, &xs).map_err(usage)?;
    warn(w);
    let model = sc.step_tail();
    let ses = xs
        .iter()
        .map(|&x| Ok(value_with_se(&ms, m, model, x)?.2))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let mc = match cfg.reps {
        Some(reps) if reps > 0 => {
            let s = seed(cfg, strict)?;
            let censor = censor_from(cfg, &sc);
            table.header.extend(["psi_mc", "mc_se", "censoring"].map(String::from));
            table.note(format!("simulation: {reps} paths, barrier {}, cap {}", num(censor.barrier), censor.cap));
            Some(psi_monte_carlo(&sc, &xs, censor, reps, s))
        }
        _ => None,
    };
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![r.x, r.psi, ses[i]];
        row.extend(&r.terms);
        if let Some(mc) = &mc {
            row.extend([mc.tail[i].value, mc.tail[i].se, mc.censoring[i]]);
        }
        table.push_nums(&row);
    }
    table.write(out)
}

fn lemma1(cfg: &mut RunConfig, strict: bool, out: &mut Vec<u8>) -> Result<(), CliError> {
    let f: TailSpec = cfg
        .f
        .get_or_insert_with(|| "pareto:alpha=2,scale=1".into())
        .parse()
        .map_err(usage)?;
    let y = match cfg.y.get_or_insert_with(|| "det:t=1".into()).parse::<Interarrival>().map_err(usage)? {
        Interarrival::Deterministic { t } => RenewalStep::Deterministic(t),
        Interarrival::Exponential { mean } => RenewalStep::Exponential { mean },
    };
    let xs = grid(cfg, "log:10:10000:4")?;
    let horizon = *cfg.horizon.get_or_insert(0.1);
    let (reps, s) = match y {
        RenewalStep::Exponential { .. } => (*cfg.reps.get_or_insert(100_000), seed(cfg, strict)?),
        RenewalStep::Deterministic(_) => (0, 0),
    };
    let model = f.build().map_err(usage)?;
    let rows = lemma1_diagnostic(model.as_ref(), y, &xs, reps, horizon, s).map_err(usage)?;
    let mut table = Table::new(["x", "ratio", "ratio_se", "target"]);
    for r in rows {
        table.push_nums(&[r.x, r.ratio, r.se, r.target]);
    }
    table.write(out)
}
