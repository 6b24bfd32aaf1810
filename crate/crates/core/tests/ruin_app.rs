use walktail_core::ladder::Censor;
use walktail_core::rng::{run_batches, DEFAULT_BATCHES};
use walktail_core::ruin::{psi_expansion, psi_monte_carlo, Interarrival, RuinScenario};
use walktail_core::stats::batch_means;
use walktail_core::step::Step;
use walktail_core::tail::{Pareto, TailModel, TailSpec};

fn scenario(alpha: f64, c: f64) -> RuinScenario {
    RuinScenario::new(
        TailSpec::Pareto { alpha, scale: 1.0 },
        Interarrival::Exponential { mean: 1.0 },
        c,
    )
    .unwrap()
}

/// Simpson's rule for `∫_0^T (x + c t)^{-α-k} e^{-t} dt`, scaled to the
/// k-th derivative of the mixed Pareto tail.
fn brute_force(alpha: f64, c: f64, k: usize, x: f64) -> f64 {
    let (t_max, n) = (60.0, 2_000_000);
    let h = t_max / n as f64;
    let g = |t: f64| (x + c * t).powf(-alpha - k as f64) * (-t).exp();
    let mut acc = g(0.0) + g(t_max);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    let falling: f64 = (0..k).map(|j| -(alpha + j as f64)).product();
    falling * acc * h / 3.0
}

#[test]
fn net_loss_tail_matches_quadrature() {
    let sc = scenario(3.0, 2.0);
    let t = sc.step_tail();
    for k in 0..=2 {
        let v = t.dtail(k, 10.0).unwrap();
        let oracle = brute_force(3.0, 2.0, k, 10.0);
        assert!((v / oracle - 1.0).abs() < 1e-10, "k={k}: {v} vs {oracle}");
    }
}

#[test]
fn net_loss_derivatives_approach_claim_derivatives() {
    let sc = scenario(3.0, 2.0);
    let t = sc.step_tail();
    let claims = Pareto::new(3.0, 1.0).unwrap();
    // L̄(x) = 1e-8
    let x = 1e8f64.cbrt();
    for k in 0..=1 {
        let r = t.dtail(k, x).unwrap() / claims.dtail(k, x).unwrap();
        assert!((r - 1.0).abs() < 0.02, "k={k}: {r}");
    }
    // the gap shrinks like 1/x for every order
    for k in 0..=4 {
        let gap = |x: f64| 1.0 - t.dtail(k, x).unwrap() / claims.dtail(k, x).unwrap();
        let (g1, g10) = (gap(x), gap(10.0 * x));
        assert!(g1 > 0.0 && (g1 / g10 - 10.0).abs() < 0.5, "k={k}: {g1} {g10}");
    }
}

#[test]
fn scenario_mean_identity() {
    let sc = scenario(3.0, 2.5);
    assert!((sc.mean() + 1.0).abs() < 1e-15);
    let batches = run_batches(21, 0, 1_000_000, DEFAULT_BATCHES, |rng, n| {
        ((0..n).map(|_| sc.sample(rng)).sum::<f64>(), n)
    });
    assert!(batch_means(&batches).within(-1.0, 5.0));
}

#[test]
fn first_order_psi_is_integrated_tail_over_drift() {
    let sc = scenario(3.0, 2.5);
    let ms = sc.exact_moments(1).unwrap();
    let grid = [10.0, 30.0, 100.0];
    let (rows, warning) = psi_expansion(&sc, 1, &ms, &grid).unwrap();
    assert!(warning.is_none());
    for r in &rows {
        let lead = sc.step_tail().itail(r.x).unwrap() / sc.mean().abs();
        assert!((r.psi / lead - 1.0).abs() < 1e-12);
    }
}

#[test]
fn psi_is_decreasing() {
    let sc = scenario(3.0, 2.5);
    let ms = sc.exact_moments(2).unwrap();
    let grid: Vec<f64> = (1..=40).map(|i| 5.0 * i as f64).collect();
    let (rows, _) = psi_expansion(&sc, 2, &ms, &grid).unwrap();
    assert!(rows.windows(2).all(|w| w[1].psi < w[0].psi));
    assert!(rows
        .iter()
        .all(|r| (r.terms.iter().sum::<f64>() - r.psi).abs() <= 1e-12 * r.psi));
}

#[test]
fn order_at_the_tail_index_is_refused() {
    let sc = scenario(2.0, 3.0);
    let ms = sc.exact_moments(1).unwrap();
    assert!(psi_expansion(&sc, 2, &ms, &[10.0]).is_err());
}

#[test]
fn second_order_is_closer_at_the_largest_resolved_level() {
    let sc = scenario(3.0, 2.5);
    let grid: Vec<f64> = (1..=12).map(|i| 10.0 * i as f64).collect();
    let mc = psi_monte_carlo(&sc, &grid, Censor { barrier: 200.0, cap: 100_000 }, 1_000_000, 22);
    let ms = sc.exact_moments(2).unwrap();
    let (r1, _) = psi_expansion(&sc, 1, &ms, &grid).unwrap();
    let (r2, _) = psi_expansion(&sc, 2, &ms, &grid).unwrap();
    let i = (0..grid.len())
        .rev()
        .find(|&i| mc.tail[i].relative_se() < 0.05)
        .expect("a resolved level");
    let target = mc.tail[i].value;
    assert!(
        (r2[i].psi - target).abs() <= (r1[i].psi - target).abs(),
        "x={} mc={target} m1={} m2={}",
        grid[i],
        r1[i].psi,
        r2[i].psi
    );
}
