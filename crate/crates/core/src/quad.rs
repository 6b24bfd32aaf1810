//! Thin wrappers around double-exponential quadrature for the integrals the
//! tail models need: finite ranges split into geometric panels, and
//! semi-infinite ranges with power-law decay.

use quadrature::double_exponential;

/// Integral over `[a, b]`, split at doubling points so that integrands with
/// power-law behaviour are resolved on every scale.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut edges = vec![a];
    let mut x = a;
    loop {
        let step = x.abs().max(1.0);
        let next = x + step;
        if next >= b {
            break;
        }
        edges.push(next);
        x = next;
    }
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += double_exponential::integrate(f, w[0], w[1], 1e-300).integral;
    }
    total
}

/// Integral over `[a, ∞)` for an integrand that eventually decays at least
/// like `t^{-1-δ}`; panels double until a panel contributes less than
/// `rel_tol` of the running total.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, rel_tol: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = a.abs().max(1.0);
    let mut quiet = 0;
    for _ in 0..4000 {
        let hi = lo + width;
        let piece = double_exponential::integrate(f, lo, hi, 1e-300).integral;
        total += piece;
        if piece.abs() <= rel_tol * total.abs() {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x| 3.0 * x * x, 0.0, 2.0);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_to_infinity() {
        let v = integrate_to_infinity(&|x: f64| x.powi(-3), 2.0, 1e-15);
        assert!((v - 0.125).abs() < 1e-13, "{v}");
    }
}
