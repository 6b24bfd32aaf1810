use walktail_core::expansion::{
    displayed_three_terms, eliminate_step_mean, symbolic_fplus_operator, symbolic_listing,
    symbolic_operator, symbolic_penultimate_operator, theorem_operator,
};
use walktail_core::scalar::{ratio, Scalar};
use walktail_core::symbolic::{SymbolicScalar, Symbol};

fn sym(s: Symbol) -> SymbolicScalar {
    SymbolicScalar::symbol(s)
}

#[test]
fn order_four_matches_displayed_coefficients() {
    let op = symbolic_operator(4).unwrap();
    let shown = displayed_three_terms();
    for (k, d) in shown.iter().enumerate() {
        let imposed = eliminate_step_mean(d).unwrap();
        assert_eq!(&imposed, op.coeff(k), "coefficient {k}");
    }
    let listing = symbolic_listing(4, false, false).unwrap();
    assert_eq!(listing.len(), 3);
    assert_eq!(listing.iter().map(|t| t.power).collect::<Vec<_>>(), vec![-1, 0, 1]);
}

#[test]
fn listing_in_step_mean_starts_with_reciprocal() {
    let listing = symbolic_listing(4, true, true).unwrap();
    assert_eq!(listing.len(), 4);
    assert_eq!(listing[0].coeff.to_string(), "mu[F,1]^-1");
}

#[test]
fn nested_orders_agree_through_degree_m_minus_two() {
    for m in 2..=6 {
        let hi = symbolic_operator(m).unwrap();
        let lo = symbolic_operator(m - 1).unwrap();
        for k in 0..m - 1 {
            assert_eq!(hi.coeff(k), lo.coeff(k), "m={m} k={k}");
        }
        let fhi = symbolic_fplus_operator(m).unwrap();
        let flo = symbolic_fplus_operator(m - 1).unwrap();
        assert_eq!(fhi.truncate(m - 2).unwrap(), flo);
    }
}

#[test]
fn fplus_order_one_is_reciprocal_descending_mean() {
    let op = symbolic_fplus_operator(1).unwrap();
    assert_eq!(op.coeff(0), &sym(Symbol::MuMinus(1)).pow(-1).unwrap());
}

#[test]
fn penultimate_order_zero_is_reciprocal_q() {
    let op = symbolic_penultimate_operator(0).unwrap();
    assert_eq!(op.coeff(0), &sym(Symbol::Q).pow(-1).unwrap());
}

#[test]
fn rational_substrate_gives_exact_two_point_operator() {
    // two-point q = 1/4: p = 1/3, F- = 1/4 δ0 + 3/4 δ-1, F+ = 1/3 δ1
    let mu_minus = vec![ratio(1, 1), ratio(-3, 4), ratio(3, 4)];
    let mu_plus = vec![ratio(1, 3), ratio(1, 3)];
    let op = theorem_operator(&ratio(2, 3), &mu_minus, &mu_plus, 2).unwrap();
    assert_eq!(op.coeff(0), &ratio(-2, 1));
    // symbolic operator evaluated at the same moments agrees
    let sop = symbolic_operator(2).unwrap();
    let assign = |s: Symbol| match s {
        Symbol::Q => 2.0 / 3.0,
        Symbol::MuMinus(1) => -0.75,
        Symbol::MuMinus(2) => 0.75,
        Symbol::MuPlus(1) => 1.0 / 3.0,
        _ => f64::NAN,
    };
    for k in 0..2 {
        let exact = walktail_core::symbolic::SymbolicScalar::constant(op.coeff(k).clone());
        let v = sop.coeff(k).evaluate(&assign);
        let e = exact.evaluate(&|_| 0.0);
        assert!((v - e).abs() < 1e-12, "{k}: {v} vs {e}");
    }
    assert!(Scalar::approx_eq(&sop.coeff(0).evaluate(&assign), &-2.0));
}
