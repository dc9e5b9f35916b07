//! Solving through the δ-extension: every driver jump is replaced by an
//! inserted time interval on which the Brownian motion and the clock are
//! frozen and the driver runs through the jump's excursion.

use crate::decorated::tau::excursion_lengths;
use crate::error::{Error, Result};
use crate::pathcore::path::{GridPath, PathMode};

use super::problem::{JumpMode, Problem};
use super::residual::equation_defect;
use super::scheme::Iterate;
use super::solve::{solve_on_tree, Solution, SolverConfig};
use super::tree::{StepKind, TreeModel};

/// Default number of solver steps per inserted excursion.
pub const DEFAULT_EXCURSION_STEPS: usize = 16;

#[derive(Clone, Debug)]
pub struct StretchedTree {
    pub tree: TreeModel,
    /// Extended slice of `τ(t_i)` for every base slice `i`.
    pub left_index: Vec<usize>,
    /// Extended slice of `τ(t_i+)` for every base slice `i`.
    pub right_index: Vec<usize>,
}

/// Extends `base` by `delta`: Marcus problems run the linear excursion from
/// `W_t` to `W_{t+}`, forward problems keep the jump at `τ(t)` and then hold
/// `W_{t+}`. Without jumps a frozen tail of length `delta` is appended.
pub fn stretched_tree(problem: &Problem, base: &TreeModel, delta: f64, m_exc: usize) -> Result<StretchedTree> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    if m_exc < 1 {
        return Err(Error::InvalidArgument("excursions need at least one step".into()));
    }
    let e = base.w.dim();
    let kt = base.n_slices() - 1;
    let jumps: Vec<usize> = base.w.jump_indices();
    let lengths = excursion_lengths(jumps.len(), delta)?;

    let mut times = Vec::new();
    let mut model = Vec::new();
    let mut kinds = Vec::new();
    let mut wl: Vec<f64> = Vec::new();
    let mut wr: Vec<f64> = Vec::new();
    let mut clock = Vec::new();
    let mut left_index = Vec::with_capacity(kt + 1);
    let mut right_index = Vec::with_capacity(kt + 1);
    let mut shift = 0.0;
    let mut next_jump = 0;
    for i in 0..=kt {
        if i > 0 {
            kinds.push(base.kinds[i - 1]);
        }
        let t = base.times[i];
        let c = base.clock.left(i)[0];
        let l = base.w.left(i).to_vec();
        let r = base.w.right(i).to_vec();
        left_index.push(times.len());
        times.push(t + shift);
        model.push(t);
        clock.push(c);
        wl.extend_from_slice(&l);
        let jumping = next_jump < jumps.len() && jumps[next_jump] == i;
        if !jumping {
            wr.extend_from_slice(&r);
            right_index.push(times.len() - 1);
            continue;
        }
        let len = lengths[next_jump];
        next_jump += 1;
        match problem.mode {
            JumpMode::Marcus => wr.extend_from_slice(&l),
            JumpMode::Forward => wr.extend_from_slice(&r),
        }
        for s in 1..=m_exc {
            let u = s as f64 / m_exc as f64;
            kinds.push(StepKind::Excursion);
            times.push(t + shift + u * len);
            model.push(t);
            clock.push(c);
            let v: Vec<f64> = match problem.mode {
                JumpMode::Marcus => l.iter().zip(&r).map(|(a, b)| a + u * (b - a)).collect(),
                JumpMode::Forward => r.clone(),
            };
            wl.extend_from_slice(&v);
            wr.extend_from_slice(&v);
        }
        shift += len;
        right_index.push(times.len() - 1);
    }
    if jumps.is_empty() {
        let t = base.times[kt];
        let c = base.clock.left(kt)[0];
        let last: Vec<f64> = wr[wr.len() - e..].to_vec();
        for s in 1..=m_exc {
            kinds.push(StepKind::Frozen);
            times.push(t + delta * s as f64 / m_exc as f64);
            model.push(t);
            clock.push(c);
            wl.extend_from_slice(&last);
            wr.extend_from_slice(&last);
        }
    }
    let n = times.len();
    times[n - 1] = base.times[kt] + delta;
    let mode = if wl == wr { PathMode::ContinuousLinear } else { PathMode::CagladLinear };
    let w = GridPath::from_flat(times.clone(), e, wl, wr, mode)?;
    let clock = GridPath::continuous(times.clone(), clock)?;
    let tree = TreeModel::from_parts(times, model, kinds, w, clock, base.snapped)?;
    Ok(StretchedTree { tree, left_index, right_index })
}

#[derive(Clone, Debug)]
pub struct StretchResult {
    /// Solution of the continuous problem on `[0, T + δ]`.
    pub extended: Solution,
    /// `Y ∘ τ`, `Y ∘ τ(·+)` and `Z` read back on the base tree.
    pub retracted: Solution,
    pub stretched: StretchedTree,
}

/// Solves the extended problem and retracts it onto the direct solver grid.
pub fn time_stretched_solve(problem: &Problem, cfg: &SolverConfig, delta: f64, m_exc: usize) -> Result<StretchResult> {
    problem.validate()?;
    let base = TreeModel::build(problem, cfg.n_steps)?;
    let stretched = stretched_tree(problem, &base, delta, m_exc)?;
    let extended = solve_on_tree(problem, &stretched.tree, cfg)?;
    let h = problem.h();
    let mut fields = Iterate::zeros(&base, h);
    for i in 0..base.n_slices() {
        fields.yl[i].clone_from(&extended.fields.yl[stretched.left_index[i]]);
        fields.yr[i].clone_from(&extended.fields.yr[stretched.right_index[i]]);
        if i < base.n_steps() {
            fields.z[i].clone_from(&extended.fields.z[stretched.right_index[i]]);
        }
    }
    let mut diagnostics = extended.diagnostics.clone();
    diagnostics.residual = equation_defect(problem, &base, &fields)?;
    diagnostics.max_abs_y = fields.max_abs_y();
    let retracted = Solution { tree: base, fields, diagnostics };
    Ok(StretchResult { extended, retracted, stretched })
}
