//! The time change `τ^δ(t) = t + Σ_k r_k 1{t_k < t}`.

use crate::error::{Error, Result};

/// `r_k = 2^{−k} δ / r` with `r = Σ_{k=1}^{n} 2^{−k}`, for jumps ordered by time.
pub fn excursion_lengths(n: usize, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    let weights: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
    let r: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| w * delta / r).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauMap {
    /// Jump times, increasing.
    pub jumps: Vec<f64>,
    pub lengths: Vec<f64>,
    pub horizon: f64,
    pub delta: f64,
}

impl TauMap {
    /// `τ(t)`, left-continuous.
    pub fn eval(&self, t: f64) -> f64 {
        t + self.jumps.iter().zip(&self.lengths).filter(|(s, _)| **s < t).map(|(_, r)| r).sum::<f64>()
    }

    /// `τ(t+)`.
    pub fn eval_plus(&self, t: f64) -> f64 {
        t + self.jumps.iter().zip(&self.lengths).filter(|(s, _)| **s <= t).map(|(_, r)| r).sum::<f64>()
    }

    /// End of the extended interval, `T + δ`.
    pub fn extended_horizon(&self) -> f64 {
        self.horizon + self.delta
    }
}

/// Builds `τ^δ` for the jump set `pi` on `[0, horizon]`.
pub fn tau_delta(pi: &[f64], delta: f64, horizon: f64) -> Result<TauMap> {
    if pi.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("jump times must be strictly increasing".into()));
    }
    if pi.iter().any(|&t| t < 0.0 || t >= horizon) {
        return Err(Error::InvalidArgument("jump times must lie in [0, T)".into()));
    }
    Ok(TauMap {
        jumps: pi.to_vec(),
        lengths: excursion_lengths(pi.len(), delta)?,
        horizon,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_jump_takes_all_of_delta() {
        let tau = tau_delta(&[0.5], 0.1, 1.0).unwrap();
        assert_eq!(tau.lengths, vec![0.1]);
        assert_eq!(tau.eval(0.5), 0.5);
        assert!((tau.eval(0.7) - 0.8).abs() < 1e-15);
        assert!((tau.eval_plus(0.5) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn two_jumps_split_two_to_one() {
        let tau = tau_delta(&[0.2, 0.6], 0.3, 1.0).unwrap();
        assert!((tau.lengths[0] - 0.2).abs() < 1e-15);
        assert!((tau.lengths[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_set_is_identity() {
        let tau = tau_delta(&[], 0.1, 1.0).unwrap();
        assert_eq!(tau.eval(0.4), 0.4);
        assert_eq!(tau.extended_horizon(), 1.1);
        assert!(tau_delta(&[], 0.0, 1.0).is_err());
    }
}
