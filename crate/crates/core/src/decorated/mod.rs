//! Decorated paths: a càglàd base path together with an excursion on `[0, 1]`
//! attached to each jump.
//!
//! Orientation: every excursion starts at the right limit, `Φ(t)(0) = h(t+)`.
//! The `ȷ` embedding ends at `Φ(t)(1) = h(t)`, the `ι` embedding stays at
//! `h(t+)`. The δ-extension plays `Φ(t_k)((τ(t_k+) − s)/r_k)` on
//! `(τ(t_k), τ(t_k+)]`, so in extended time it runs from `Φ(t_k)(1)` to
//! `Φ(t_k)(0) = h(t_k+)`, and the extended path is left-continuous with value
//! `h(t_k)` at `τ(t_k)`.

pub mod alpha;
pub mod tau;

use crate::error::{Error, Result};
use crate::field::VectorFieldSpec;
use crate::marcus::{flow_trajectory, FlowRequest, DEFAULT_FLOW_STEPS};
use crate::pathcore::path::{dist, GridPath, Locus, PathMode};
use crate::rbsde::problem::JumpMode;

pub use alpha::{alpha_brute, alpha_p_upper, alpha_p_upper_with, AlphaConfig, AlphaResult, ReparamMatching};
pub use tau::{tau_delta, TauMap};

/// A path on `[0, 1]` sampled at `u = i/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Excursion {
    pub samples: Vec<Vec<f64>>,
}

impl Excursion {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("an excursion needs at least two samples".into()));
        }
        let d = samples[0].len();
        if samples.iter().any(|s| s.len() != d) {
            return Err(Error::Dimension("excursion samples differ in dimension".into()));
        }
        Ok(Excursion { samples })
    }

    pub fn m(&self) -> usize {
        self.samples.len() - 1
    }

    /// Piecewise-linear value at `u ∈ [0, 1]`.
    pub fn at(&self, u: f64) -> Vec<f64> {
        let m = self.m() as f64;
        let x = (u.clamp(0.0, 1.0) * m).min(m);
        let i = (x.floor() as usize).min(self.m() - 1);
        let th = x - i as f64;
        self.samples[i].iter().zip(&self.samples[i + 1]).map(|(a, b)| a + th * (b - a)).collect()
    }

    /// Resamples at `m + 1` equidistant points.
    pub fn resample(&self, m: usize) -> Excursion {
        let m = m.max(1);
        Excursion { samples: (0..=m).map(|i| self.at(i as f64 / m as f64)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoratedPath {
    pub base: GridPath,
    /// `Π`, increasing grid times in `[0, T)`.
    pub jumps: Vec<f64>,
    pub excursions: Vec<Excursion>,
}

impl DecoratedPath {
    /// Validates the jump set and the excursion start points.
    pub fn new(base: GridPath, jumps: Vec<f64>, excursions: Vec<Excursion>) -> Result<Self> {
        if base.mode().is_cadlag() {
            return Err(Error::InvalidArgument("the base of a decorated path must be càglàd".into()));
        }
        if jumps.len() != excursions.len() {
            return Err(Error::InvalidArgument("one excursion per jump time is required".into()));
        }
        if jumps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("jump times must be strictly increasing".into()));
        }
        let scale = 1.0 + base.values_flat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (t, ex) in jumps.iter().zip(&excursions) {
            if !matches!(base.locate(*t), Locus::Node(i) if i + 1 < base.len()) {
                return Err(Error::InvalidArgument(format!("jump time {t} is not an interior grid time")));
            }
            if ex.samples[0].len() != base.dim() {
                return Err(Error::Dimension("excursion and base dimensions differ".into()));
            }
            if dist(&ex.samples[0], &base.right_at(*t)) > 1e-9 * scale {
                return Err(Error::InvalidArgument(format!("excursion at {t} does not start at the right limit")));
            }
        }
        for i in base.jump_indices() {
            let t = base.times()[i];
            if !jumps.iter().any(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)) {
                return Err(Error::InvalidArgument(format!("base jumps at {t} outside the jump set")));
            }
        }
        Ok(DecoratedPath { base, jumps, excursions })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.base.horizon()
    }

    /// Same decoration with every excursion resampled at `m + 1` points.
    pub fn resampled(&self, m: usize) -> DecoratedPath {
        DecoratedPath {
            base: self.base.clone(),
            jumps: self.jumps.clone(),
            excursions: self.excursions.iter().map(|e| e.resample(m)).collect(),
        }
    }
}

fn jump_times(h: &GridPath) -> Vec<f64> {
    h.jump_indices().into_iter().map(|i| h.times()[i]).collect()
}

/// `ι h`: constant excursions at `h(t+)`.
pub fn embed_iota(h: &GridPath) -> Result<DecoratedPath> {
    let jumps = jump_times(h);
    let exc = jumps
        .iter()
        .map(|&t| Excursion::new(vec![h.right_at(t), h.right_at(t)]))
        .collect::<Result<_>>()?;
    DecoratedPath::new(h.clone(), jumps, exc)
}

/// `ȷ h`: `Φ(t)(s) = (1 − s) h(t+) + s h(t)`.
pub fn embed_jmath(h: &GridPath) -> Result<DecoratedPath> {
    let jumps = jump_times(h);
    let exc = jumps
        .iter()
        .map(|&t| Excursion::new(vec![h.right_at(t), h.left_at(t)]))
        .collect::<Result<_>>()?;
    DecoratedPath::new(h.clone(), jumps, exc)
}

/// The δ-extension of a decorated path.
#[derive(Clone, Debug)]
pub struct Extension {
    pub path: GridPath,
    pub tau: TauMap,
    /// Extended grid index of `τ(t_i)` per base grid time.
    pub left_index: Vec<usize>,
    /// Extended grid index of `τ(t_i+)` per base grid time.
    pub right_index: Vec<usize>,
}

/// Builds `Φ^δ` on `[0, T + δ]`; without jumps the base is followed by a
/// constant tail of length δ.
pub fn delta_extension(phi: &DecoratedPath, delta: f64) -> Result<Extension> {
    let base = &phi.base;
    let tau = tau_delta(&phi.jumps, delta, base.horizon())?;
    let d = base.dim();
    let mut times = Vec::new();
    let mut left: Vec<f64> = Vec::new();
    let mut right: Vec<f64> = Vec::new();
    let mut left_index = Vec::with_capacity(base.len());
    let mut right_index = Vec::with_capacity(base.len());
    let mut next = 0;
    for i in 0..base.len() {
        let t = base.times()[i];
        let s = tau.eval(t);
        left_index.push(times.len());
        times.push(s);
        left.extend_from_slice(base.left(i));
        let jumping = next < phi.jumps.len() && (phi.jumps[next] - t).abs() <= 1e-12 * t.abs().max(1.0);
        if !jumping {
            right.extend_from_slice(base.right(i));
            right_index.push(times.len() - 1);
            continue;
        }
        let ex = &phi.excursions[next];
        let r = tau.lengths[next];
        next += 1;
        let m = ex.m();
        right.extend_from_slice(&ex.samples[m]);
        for a in (0..m).rev() {
            let u = a as f64 / m as f64;
            times.push(s + (1.0 - u) * r);
            left.extend_from_slice(&ex.samples[a]);
            right.extend_from_slice(&ex.samples[a]);
        }
        right_index.push(times.len() - 1);
    }
    if phi.jumps.is_empty() {
        let n = base.len() - 1;
        times.push(tau.extended_horizon());
        left.extend_from_slice(base.right(n));
        right.extend_from_slice(base.right(n));
    } else {
        let n = times.len() - 1;
        times[n] = tau.extended_horizon();
    }
    let mode = if left == right { PathMode::ContinuousLinear } else { PathMode::CagladLinear };
    let path = GridPath::from_flat(times, d, left, right, mode)?;
    Ok(Extension { path, tau, left_index, right_index })
}

/// Decorates a solution path. Marcus excursions follow the flow
/// `u ↦ φ(g_t ΔW_t, Y_{t+}, u)`; forward excursions stay at `Y_{t+}`.
pub fn lift_solution(y: &GridPath, g: &VectorFieldSpec, w: &GridPath, mode: JumpMode, m: usize) -> Result<DecoratedPath> {
    let mut jumps = Vec::new();
    let mut exc = Vec::new();
    for i in w.jump_indices() {
        let t = w.times()[i];
        if !matches!(y.locate(t), Locus::Node(_)) {
            return Err(Error::InvalidArgument(format!("driver jump at {t} is not a solution grid time")));
        }
        let y_plus = y.right_at(t);
        let samples = match mode {
            JumpMode::Marcus => {
                let dw = w.jump(i);
                flow_trajectory(&FlowRequest::new(g, t, &dw, &y_plus).steps(DEFAULT_FLOW_STEPS), m.max(1))?
            }
            JumpMode::Forward => vec![y_plus.clone(); m.max(1) + 1],
        };
        jumps.push(t);
        exc.push(Excursion::new(samples)?);
    }
    DecoratedPath::new(y.clone(), jumps, exc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> GridPath {
        GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap()
    }

    #[test]
    fn continuous_path_has_no_decoration() {
        let h = GridPath::continuous(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert!(embed_iota(&h).unwrap().jumps.is_empty());
        assert!(embed_jmath(&h).unwrap().jumps.is_empty());
    }

    #[test]
    fn embeddings_of_unit_step() {
        let i = embed_iota(&step()).unwrap();
        assert_eq!(i.excursions[0].samples, vec![vec![1.0], vec![1.0]]);
        let j = embed_jmath(&step()).unwrap();
        assert_eq!(j.excursions[0].at(0.25), vec![0.75]);
    }

    #[test]
    fn jmath_extension_is_a_ramp() {
        let ext = delta_extension(&embed_jmath(&step()).unwrap(), 0.1).unwrap();
        let p = &ext.path;
        assert_eq!(p.value_at(0.5), vec![0.0]);
        assert!((p.value_at(0.55)[0] - 0.5).abs() < 1e-12);
        assert_eq!(p.value_at(0.6), vec![1.0]);
        assert!((p.horizon() - 1.1).abs() < 1e-15);
        assert!(p.mode().is_continuous());
    }

    #[test]
    fn retraction_reproduces_base() {
        let base = GridPath::caglad_jumps(&[0.0, 0.2, 0.5, 0.7, 1.0], &[1.0], &[(0.2, vec![-1.0]), (0.7, vec![3.0])]).unwrap();
        for phi in [embed_iota(&base).unwrap(), embed_jmath(&base).unwrap()] {
            let ext = delta_extension(&phi, 0.3).unwrap();
            for (i, &t) in base.times().iter().enumerate() {
                assert_eq!(ext.path.value_at(ext.tau.eval(t)), base.value(i).to_vec());
                assert_eq!(ext.path.value(ext.right_index[i]), base.right(i));
            }
        }
    }

    #[test]
    fn empty_jump_set_gets_a_tail() {
        let h = GridPath::continuous(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        let ext = delta_extension(&embed_iota(&h).unwrap(), 0.5).unwrap();
        assert_eq!(ext.path.value_at(1.3), vec![2.0]);
    }

    #[test]
    fn marcus_lift_follows_exponential() {
        let g = VectorFieldSpec::scalar_linear(1.0);
        let w = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![2f64.ln()])]).unwrap();
        let y = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[2.0], &[(0.5, vec![-1.0])]).unwrap();
        let lift = lift_solution(&y, &g, &w, JumpMode::Marcus, 4).unwrap();
        for (i, s) in lift.excursions[0].samples.iter().enumerate() {
            let u = i as f64 / 4.0;
            assert!((s[0] - (u * 2f64.ln()).exp()).abs() < 1e-14);
        }
        let fwd = lift_solution(&y, &g, &w, JumpMode::Forward, 4).unwrap();
        assert!(fwd.excursions[0].samples.iter().all(|s| s[0] == 1.0));
    }
}
