//! Convergence table of the global Picard iteration.

use crate::error::{Error, Result};

use super::norms::{bmo_norm_estimate, p2_norm_estimate};
use super::problem::Problem;
use super::scheme::{initial_iterate, picard_step, Iterate};
use super::tree::TreeModel;

/// Increments below this are treated as exact convergence.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport {
    /// `⦀Y^n − Y^{n−1}, Z^n − Z^{n−1}⦀_{[0,T]}` for `n = 1..=n_max`.
    pub residuals: Vec<f64>,
    /// First index from which the table is nonincreasing.
    pub monotone_from: Option<usize>,
    /// Geometric ratio fitted to the positive tail; 0 when the iteration
    /// becomes stationary.
    pub tail_ratio: f64,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.monotone_from.is_some() && self.tail_ratio < 1.0
    }
}

/// Runs `n_max` global Picard steps on `[0, T]` from `Y⁰ = E_t[ξ]`, `Z⁰ = 0`,
/// recording `‖ΔY‖_{p,2} + ‖ΔZ‖_BMO`.
pub fn picard_envelope_check(problem: &Problem, tree: &TreeModel, n_max: usize) -> Result<EnvelopeReport> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    let kt = tree.n_slices() - 1;
    let h = problem.h();
    let mut cur = Iterate::zeros(tree, h);
    cur.set_terminal(problem, tree);
    initial_iterate(tree, &mut cur, 0, kt);
    let mut nxt = cur.clone();
    let mut residuals = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        picard_step(problem, tree, &cur, &mut nxt, 0, kt, true)?;
        let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect()
        };
        let dyl = diff(&nxt.yl, &cur.yl);
        let dyr = diff(&nxt.yr, &cur.yr);
        let dz = diff(&nxt.z, &cur.z);
        let r = p2_norm_estimate(tree, &dyl, &dyr, h, problem.p, 0, kt)?.value + bmo_norm_estimate(tree, &dz, h, 0, kt)?;
        if !r.is_finite() {
            return Err(Error::NonFinite("picard increment".into()));
        }
        residuals.push(if r <= RESIDUAL_FLOOR { 0.0 } else { r });
        std::mem::swap(&mut cur, &mut nxt);
    }
    Ok(summarize(residuals))
}

/// Monotone start and fitted tail ratio of a residual table.
pub fn summarize(residuals: Vec<f64>) -> EnvelopeReport {
    let n = residuals.len();
    let mut start = n.saturating_sub(1);
    while start > 0 && residuals[start] <= residuals[start - 1] * (1.0 + 1e-9) {
        start -= 1;
    }
    let monotone_from = if n == 0 { None } else { Some(start) };
    let positive: Vec<(f64, f64)> = residuals[start..]
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > 0.0)
        .map(|(i, r)| ((start + i) as f64, r.ln()))
        .collect();
    let tail = &positive[positive.len() / 2..];
    let tail_ratio = if positive.len() < 2 || tail.len() < 2 {
        if positive.len() >= 2 {
            let (a, b) = (positive[positive.len() - 2], positive[positive.len() - 1]);
            ((b.1 - a.1) / (b.0 - a.0)).exp()
        } else {
            0.0
        }
    } else {
        let m = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / m;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    };
    EnvelopeReport { residuals, monotone_from, tail_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_table() {
        let r: Vec<f64> = (0..10).map(|i| 0.5f64.powi(i)).collect();
        let s = summarize(r);
        assert_eq!(s.monotone_from, Some(0));
        assert!((s.tail_ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eventually_monotone() {
        let s = summarize(vec![1.0, 2.0, 1.5, 0.5, 0.1]);
        assert_eq!(s.monotone_from, Some(1));
        assert!(s.holds());
    }

    #[test]
    fn stationary_after_first_step() {
        let s = summarize(vec![0.0; 5]);
        assert_eq!(s.tail_ratio, 0.0);
        assert!(s.holds());
    }
}
