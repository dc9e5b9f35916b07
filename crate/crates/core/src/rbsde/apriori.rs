//! Computable form of the a priori bound on `|Y|`.
//!
//! The constants `λ`, `ε̄₀` and the partition count are fixed choices of this
//! implementation; the recursion mirrors the interval-by-interval argument
//! `b_{i−1} = (C₁ + 1) b_i + C₂ + C₃` starting from `b_N = ‖ξ‖_∞`.

/// `λ` in the Young inequality splitting.
pub const APRIORI_LAMBDA: f64 = 0.25;
/// Interval size bound used inside the constants.
pub const APRIORI_EPS0: f64 = 0.2;

/// ε̄ used by the solver before any shrinking.
pub fn default_eps_bar(c_f: f64, c_g: f64, wq: f64) -> f64 {
    (0.25 / (1.0 + c_f)).min(0.25 / (1.0 + c_g)).min(0.2 / (1.0 + wq))
}

/// Bound `L ≥ ‖ξ‖_∞` on `sup |Y|`, nondecreasing in every argument.
pub fn apriori_bound(c_f: f64, c_g: f64, c_t: f64, wq: f64, xi_inf: f64, p: f64) -> f64 {
    let (c_f, c_g, c_t, wq, xi) = (c_f.max(0.0), c_g.max(0.0), c_t.max(0.0), wq.max(0.0), xi_inf.max(0.0));
    let c = 2f64.powf(p.max(1.0) - 1.0);
    let lam = APRIORI_LAMBDA;
    let eta = c_f * APRIORI_EPS0.min(c_t) + c_g * APRIORI_EPS0.min(wq);
    let c1 = c * ((1.0 + eta.sqrt()) * (eta * lam + eta / lam).sqrt() + eta);
    let c2 = c * (eta + eta * eta + (1.0 + eta.sqrt()) * (lam * eta + eta + eta * eta).sqrt());
    let c3 = c_g * wq;
    let eps = default_eps_bar(c_f, c_g, wq);
    let span = if c_f > 0.0 { c_t.max(wq) } else { wq };
    let n = 1 + (span / eps).ceil() as usize;
    let mut b = xi;
    let mut total = xi;
    for _ in 0..n {
        total += c1 * b + c2 + c3;
        b = (c1 + 1.0) * b + c2 + c3;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_driver_no_drift() {
        assert_eq!(apriori_bound(0.0, 3.0, 1.0, 0.0, 2.5, 3.0), 2.5);
    }

    #[test]
    fn monotone_in_each_argument() {
        let base = [0.5, 1.0, 1.0, 0.7, 1.0, 3.0];
        let eval = |a: [f64; 6]| apriori_bound(a[0], a[1], a[2], a[3], a[4], a[5]);
        let b0 = eval(base);
        for i in 0..6 {
            let mut a = base;
            a[i] *= 1.5;
            assert!(eval(a) >= b0, "argument {i}");
        }
    }
}
