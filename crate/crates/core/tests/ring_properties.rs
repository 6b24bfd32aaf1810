use num_rational::BigRational;
use proptest::prelude::*;
use walktail_core::dop::DPoly;
use walktail_core::scalar::{ratio, Scalar};

type Q = BigRational;

fn rational() -> impl Strategy<Value = Q> {
    (-20i64..=20, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
}

fn element(order: usize) -> impl Strategy<Value = DPoly<Q>> {
    prop::collection::vec(rational(), order + 1).prop_map(|c| DPoly::new(c).unwrap())
}

fn triple() -> impl Strategy<Value = (DPoly<Q>, DPoly<Q>, DPoly<Q>)> {
    (0usize..=6).prop_flat_map(|m| (element(m), element(m), element(m)))
}

/// Moments `Σ w x^k`, `k = 0..=m`, of a finite (possibly defective) measure.
fn moments(atoms: &[(i64, Q)], m: usize) -> Vec<Q> {
    (0..=m)
        .map(|k| {
            atoms.iter().fold(Q::zero(), |acc, (x, w)| {
                acc.add(&w.mul(&Q::from_i64(x.pow(k as u32))))
            })
        })
        .collect()
}

fn measure() -> impl Strategy<Value = Vec<(i64, Q)>> {
    prop::collection::vec((-4i64..=4, (0i64..=5).prop_map(|n| ratio(n, 7))), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn commutative_ring((a, b, c) in triple()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(
            a.mul(&b).unwrap().mul(&c).unwrap(),
            a.mul(&b.mul(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        let unit = DPoly::unit(a.order());
        prop_assert_eq!(a.mul(&unit).unwrap(), a.clone());
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn units_have_exact_inverses((a, _, _) in triple()) {
        if a.coeff(0).is_zero() {
            prop_assert!(a.inverse().is_err());
        } else {
            let inv = a.inverse().unwrap();
            prop_assert_eq!(a.mul(&inv).unwrap(), DPoly::unit(a.order()));
            prop_assert_eq!(inv.inverse().unwrap(), a);
        }
    }

    #[test]
    fn laplace_character_is_multiplicative(mu in measure(), nu in measure(), m in 0usize..=6) {
        // moments of the convolution μ * ν
        let conv: Vec<(i64, Q)> = mu
            .iter()
            .flat_map(|(x, w)| nu.iter().map(move |(y, v)| (x + y, w.mul(v))))
            .collect();
        let lhs = DPoly::laplace_character(&moments(&conv, m), m).unwrap();
        let rhs = DPoly::laplace_character(&moments(&mu, m), m)
            .unwrap()
            .mul(&DPoly::laplace_character(&moments(&nu, m), m).unwrap())
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn shift_lowers_the_order((a, b, _) in (1usize..=6).prop_flat_map(|m| (element(m), element(m), element(m)))) {
        let s = a.shift().unwrap();
        prop_assert_eq!(s.order(), a.order() - 1);
        prop_assert_eq!(
            a.add(&b).unwrap().shift().unwrap(),
            s.add(&b.shift().unwrap()).unwrap()
        );
        prop_assert_eq!(s.coeff(0), &a.coeff(1).neg());
    }

    #[test]
    fn float_inverse_residual(c in prop::collection::vec(-3.0f64..3.0, 1..=11), c0 in 0.25f64..4.0) {
        let mut c = c;
        c[0] = c0;
        let a = DPoly::new(c).unwrap();
        let inv = a.inverse().unwrap();
        prop_assert!(a.unit_residual(&inv).unwrap() < 1e-12);
    }
}

#[test]
fn difference_of_squares() {
    let a = DPoly::new(vec![ratio(1, 1), ratio(1, 1)]).unwrap();
    let b = DPoly::new(vec![ratio(1, 1), ratio(-1, 1)]).unwrap();
    // (1 + D)(1 - D) = 1 - D² = 1 in R_1[D]
    assert_eq!(a.mul(&b).unwrap(), DPoly::unit(1));
    let a2 = DPoly::new(vec![ratio(1, 1), ratio(1, 1), ratio(0, 1)]).unwrap();
    let b2 = DPoly::new(vec![ratio(1, 1), ratio(-1, 1), ratio(0, 1)]).unwrap();
    assert_eq!(
        a2.mul(&b2).unwrap(),
        DPoly::new(vec![ratio(1, 1), ratio(0, 1), ratio(-1, 1)]).unwrap()
    );
}
