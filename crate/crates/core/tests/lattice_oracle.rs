use walktail_core::expansion::{build_operator, residual_diagnostic, residual_passes};
use walktail_core::lattice::{
    compound_geometric_tail, discretize, fplus_via_representation, ladder_laws,
    spitzer_p_lattice, wiener_hopf_residual, LadderMethod, LatticeDist,
};
use walktail_core::step::{Step, StepDistribution};

fn two_point() -> LatticeDist {
    LatticeDist::from_atoms(1.0, &[(-1.0, 0.75), (1.0, 0.25)]).unwrap()
}

#[test]
fn gamblers_ruin_laws_and_maximum() {
    let f = two_point();
    let laws = ladder_laws(&f, LadderMethod::auto(&f), 1e-12).unwrap();
    assert!((laws.p - 1.0 / 3.0).abs() < 1e-10);
    assert!((laws.plus.mass(1) - 1.0 / 3.0).abs() < 1e-10);
    assert!(laws.plus.tail_index(1) < 1e-10);
    assert!((laws.minus.moment(1) + 0.75).abs() < 1e-10);
    let w = compound_geometric_tail(&laws.conditional_plus().unwrap(), laws.p, 1e-14, 12).unwrap();
    // P{M >= 2} = P{M > 1} = 1/9
    assert!((w.lower[1] - 1.0 / 9.0).abs() < 1e-10);
    assert!(w.mass + (w.upper[0] - w.lower[0]) >= 1.0 - 2e-14);
    assert!(w.lower.windows(2).all(|p| p[1] <= p[0]));
    assert!(w.lower[0] <= laws.p + 1e-15);
}

#[test]
fn representation_series_matches_ladder_law() {
    let f = two_point();
    let laws = ladder_laws(&f, LadderMethod::auto(&f), 1e-13).unwrap();
    let fbar_plus = fplus_via_representation(&f, &laws.minus, 10_000, 1e-14).unwrap();
    for (t, v) in fbar_plus.iter().enumerate() {
        assert!((v - laws.plus.tail_index(t as i64)).abs() < 1e-12, "t={t}");
    }
    // F̄ ≡ 0 gives F̄₊ ≡ 0
    let down = LatticeDist::from_atoms(1.0, &[(-1.0, 1.0)]).unwrap();
    let zero = fplus_via_representation(&down, &laws.minus, 10, 1e-14).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
}

#[test]
fn descending_law_bounded_by_step_law() {
    // F₋(x) ≤ F(x)/(1−p) for x ≤ 0, as distribution functions
    for f in [
        two_point(),
        LatticeDist::new(1.0, -3, vec![0.3, 0.2, 0.1, 0.15, 0.1, 0.1, 0.05]).unwrap(),
    ] {
        let laws = ladder_laws(&f, LadderMethod::auto(&f), 1e-13).unwrap();
        for i in f.min_index()..=0 {
            assert!(laws.minus.cdf_index(i) <= f.cdf_index(i) / (1.0 - laws.p) + 1e-12);
        }
    }
}

#[test]
fn spitzer_matches_ladder_p_on_skewed_lattice() {
    let f = LatticeDist::new(1.0, -3, vec![0.3, 0.2, 0.1, 0.15, 0.1, 0.1, 0.05]).unwrap();
    assert!(f.mean() < 0.0);
    let laws = ladder_laws(&f, LadderMethod::auto(&f), 1e-14).unwrap();
    let fixed = ladder_laws(&f, LadderMethod::FixedPoint { max_iter: 10_000 }, 1e-14).unwrap();
    let sp = spitzer_p_lattice(&f, 1e-17, 5000).unwrap();
    assert!((laws.p - sp).abs() < 1e-8, "{} vs {sp}", laws.p);
    assert!((fixed.p - laws.p).abs() < 1e-10);
    assert!(wiener_hopf_residual(&f, &laws).unwrap() < 1e-10);
    assert!(wiener_hopf_residual(&f, &fixed).unwrap() < 1e-10);
}

#[test]
fn discretization_of_steps() {
    let tp = StepDistribution::two_point(0.25, 1.0, 1.0).unwrap();
    let d = discretize(&tp, 1.0, 1, 0.0).unwrap();
    assert_eq!(d.leak, 0.0);
    assert_eq!(d.lattice, two_point());

    let ps = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
    // F̄ = 1e-8 at x + 3 = 464.2; take the grid a little beyond
    let d = discretize(&ps, 1.0, 470, 1e-8).unwrap();
    assert!(d.leak <= 1e-8);
    assert!((d.lattice.mean() - ps.mean()).abs() < 1.0);
    assert!(discretize(&ps, 1.0, 100, 1e-8).is_err());
}

#[test]
fn heavy_tail_lattice_expansion_improves_with_order() {
    let ps = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
    let d = discretize(&ps, 1.0, 10_000, 1e-9).unwrap();
    let f = &d.lattice;
    let laws = ladder_laws(f, LadderMethod::FixedPoint { max_iter: 10_000 }, 1e-13).unwrap();
    assert!(wiener_hopf_residual(f, &laws).unwrap() < 1e-10);
    let w = compound_geometric_tail(&laws.conditional_plus().unwrap(), laws.p, 1e-15, 100).unwrap();
    let ms = laws.moment_set(f, 2);
    let model = ps.upper_tail().unwrap();
    let reference: Vec<(f64, f64, f64)> = (1..=10)
        .map(|i| {
            let j = 10 * i;
            (j as f64, w.midpoint(j), 0.5 * (w.upper[j] - w.lower[j]))
        })
        .collect();
    let r1 = residual_diagnostic(&build_operator(&ms, 1).unwrap(), 1, model, &reference, 0.5).unwrap();
    let r2 = residual_diagnostic(&build_operator(&ms, 2).unwrap(), 2, model, &reference, 0.5).unwrap();
    assert!(residual_passes(&r2));
    assert!(r2.last().unwrap().residual <= r1.last().unwrap().residual);
}

#[test]
fn scaled_residual_decreases_where_the_oracle_resolves_it() {
    let ps = StepDistribution::pareto_shift(3.0, 1.0, 3.0).unwrap();
    let d = discretize(&ps, 1.0, 16_000, 1e-9).unwrap();
    let f = &d.lattice;
    let laws = ladder_laws(f, LadderMethod::auto(f), 1e-14).unwrap();
    let mut w = compound_geometric_tail(&laws.conditional_plus().unwrap(), laws.p, 1e-15, 200).unwrap();
    let p_hi = laws.p_interval().1;
    w.widen(laws.defect * (1.0 + p_hi) / (1.0 - p_hi) + d.leak * 16_000.0 / ps.mean().abs());
    let ms = laws.moment_set(f, 2);
    let model = ps.upper_tail().unwrap();
    let reference: Vec<(f64, f64, f64)> = (2..=6)
        .map(|i| {
            let j = 20 * i;
            (j as f64, w.midpoint(j), 0.5 * (w.upper[j] - w.lower[j]))
        })
        .collect();
    let r2 = residual_diagnostic(&build_operator(&ms, 2).unwrap(), 2, model, &reference, 0.5).unwrap();
    assert!(r2.windows(2).all(|p| p[1].scaled < p[0].scaled));
    for r in &r2 {
        let half = r.reference_err / model.tail(r.x).unwrap();
        assert!(half < 0.2 * r.scaled, "x={} half-width {half} vs {}", r.x, r.scaled);
    }
}
