//! Randomized properties of the operator ring, over exact rationals and
//! floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use walktail_core::dop::DPoly;
use walktail_core::scalar::Scalar;

fn rational() -> impl Strategy<Value = BigRational> {
    (-30i64..=30, 1i64..=12).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn unit_rational() -> impl Strategy<Value = BigRational> {
    rational().prop_filter("nonzero", |r| !Scalar::is_zero(r))
}

/// Three rational elements of a common order `0..=7`.
fn triple() -> impl Strategy<Value = (DPoly<BigRational>, DPoly<BigRational>, DPoly<BigRational>)> {
    (0usize..=7).prop_flat_map(|m| {
        let el = || proptest::collection::vec(rational(), m + 1).prop_map(|c| DPoly::new(c).unwrap());
        (el(), el(), el())
    })
}

fn invertible_rational() -> impl Strategy<Value = DPoly<BigRational>> {
    (0usize..=7).prop_flat_map(|m| {
        (unit_rational(), proptest::collection::vec(rational(), m)).prop_map(|(c0, rest)| {
            let mut c = vec![c0];
            c.extend(rest);
            DPoly::new(c).unwrap()
        })
    })
}

fn invertible_float() -> impl Strategy<Value = DPoly<f64>> {
    (0usize..=10).prop_flat_map(|m| {
        (
            prop_oneof![0.25f64..4.0, -4.0f64..-0.25],
            proptest::collection::vec(-3.0f64..3.0, m),
        )
            .prop_map(|(c0, rest)| {
                let mut c = vec![c0];
                c.extend(rest);
                DPoly::new(c).unwrap()
            })
    })
}

fn fail(what: &str) -> TestCaseError {
    TestCaseError::fail(what.to_string())
}

/// Outcome of one property.
#[derive(Debug, Clone)]
pub struct PropResult {
    pub name: &'static str,
    pub cases: u32,
    pub error: Option<String>,
    /// Largest float inverse residual seen, where relevant.
    pub worst: f64,
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn record<F: FnOnce(&mut TestRunner) -> Result<(), String>>(name: &'static str, cases: u32, f: F) -> PropResult {
    let mut r = runner(cases);
    PropResult {
        name,
        cases,
        error: f(&mut r).err(),
        worst: 0.0,
    }
}

/// Runs every property with `cases` random cases each.
pub fn check_all(cases: u32) -> Vec<PropResult> {
    let mut out = Vec::new();

    out.push(record("ring axioms (exact)", cases, |r| {
        r.run(&triple(), |(a, b, c)| {
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(&ab_c, &a_bc, "associativity");
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap(), "commutativity");
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs, "distributivity");
            let id = DPoly::unit(a.order());
            prop_assert_eq!(a.mul(&id).unwrap(), a.clone(), "unit");
            prop_assert!(a.add(&a.neg()).unwrap().is_zero(), "additive inverse");
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap(), "additive commutativity");
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    out.push(record("inverse round trip (exact)", cases, |r| {
        r.run(&invertible_rational(), |a| {
            let inv = a.inverse().map_err(|e| fail(&e.to_string()))?;
            prop_assert_eq!(a.mul(&inv).unwrap(), DPoly::unit(a.order()));
            prop_assert_eq!(inv.inverse().unwrap(), a);
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    let mut worst = 0.0f64;
    let mut inv_float = record("inverse residual (float) < 1e-12", cases, |r| {
        let w = std::cell::Cell::new(0.0f64);
        let res = r
            .run(&invertible_float(), |a| {
                let inv = a.inverse().map_err(|e| fail(&e.to_string()))?;
                let res = a.unit_residual(&inv).unwrap();
                w.set(w.get().max(res));
                prop_assert!(res < 1e-12, "residual {res:e}");
                Ok(())
            })
            .map_err(|e| e.to_string());
        worst = w.get();
        res
    });
    inv_float.worst = worst;
    out.push(inv_float);

    out.push(record("shift of Laplace character", cases, |r| {
        let moments = (1usize..=8).prop_flat_map(|m| proptest::collection::vec(rational(), m + 1));
        r.run(&moments, |mu| {
            let m = mu.len() - 1;
            let l = DPoly::laplace_character(&mu, m).unwrap();
            let s = l.shift().unwrap();
            prop_assert_eq!(s.order(), m - 1);
            let mut fact = BigRational::from_integer(BigInt::from(1));
            for j in 0..m {
                fact = fact * BigRational::from_integer(BigInt::from((j + 1) as i64));
                // S D^{j+1} = −D^j, and ℒ carries (−1)^{j+1} μ_{j+1}/(j+1)!
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let expect = BigRational::from_integer(BigInt::from(sign)) * &mu[j + 1] / &fact;
                prop_assert_eq!(s.coeff(j), &expect, "coefficient {}", j);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    out.push(record("shift is additive and lowers order", cases, |r| {
        let pair = (1usize..=7).prop_flat_map(|m| {
            let el = || proptest::collection::vec(rational(), m + 1).prop_map(|c| DPoly::new(c).unwrap());
            (el(), el())
        });
        r.run(&pair, |(a, b)| {
            let lhs = a.add(&b).unwrap().shift().unwrap();
            let rhs = a.shift().unwrap().add(&b.shift().unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            // S(D·a) = −a truncated, for a of order m−1 lifted by D
            let mut lifted = vec![BigRational::from_integer(BigInt::from(0))];
            lifted.extend(a.coeffs()[..a.order()].iter().cloned());
            let d_a = DPoly::new(lifted).unwrap();
            prop_assert_eq!(d_a.shift().unwrap(), a.truncate(a.order() - 1).unwrap().neg());
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    out
}
