//! One application of the fixed-point map on a window of the tree.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marcus::{flow, FlowRequest, DEFAULT_FLOW_STEPS};

use super::problem::{ContinuousScheme, JumpMode, Problem};
use super::tree::{StepKind, TreeModel};

/// Node fields of an iterate. `yl[k]` holds `Y_{t_k}`, `yr[k]` holds
/// `Y_{t_k+}` and `z[k]` the integrand of step `k`, each flattened over the
/// nodes of the slice with `h` entries per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub h: usize,
    pub yl: Vec<Vec<f64>>,
    pub yr: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl Iterate {
    pub fn zeros(tree: &TreeModel, h: usize) -> Self {
        let yl: Vec<Vec<f64>> = (0..tree.n_slices()).map(|k| vec![0.0; tree.nodes(k) * h]).collect();
        let z = (0..tree.n_steps()).map(|k| vec![0.0; tree.nodes(k) * h]).collect();
        Iterate { h, yr: yl.clone(), yl, z }
    }

    pub fn y_left(&self, k: usize, j: usize) -> &[f64] {
        &self.yl[k][j * self.h..(j + 1) * self.h]
    }

    pub fn y_right(&self, k: usize, j: usize) -> &[f64] {
        &self.yr[k][j * self.h..(j + 1) * self.h]
    }

    pub fn z_at(&self, k: usize, j: usize) -> &[f64] {
        &self.z[k][j * self.h..(j + 1) * self.h]
    }

    /// Sets the terminal slice to `ξ(B_T)`.
    pub fn set_terminal(&mut self, problem: &Problem, tree: &TreeModel) {
        let kt = tree.n_slices() - 1;
        let h = self.h;
        for j in 0..tree.nodes(kt) {
            let v = problem.xi.eval(tree.brownian_value(kt, j));
            self.yl[kt][j * h..(j + 1) * h].copy_from_slice(&v);
            self.yr[kt][j * h..(j + 1) * h].copy_from_slice(&v);
        }
    }

    /// `sup |ΔY| + sup |ΔZ|` over slices `ka..=kb` (steps `ka..kb`).
    pub fn distance(&self, other: &Iterate, ka: usize, kb: usize) -> f64 {
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let mut dy: f64 = 0.0;
        let mut dz: f64 = 0.0;
        for k in ka..=kb {
            dy = dy.max(sup(&self.yl[k], &other.yl[k])).max(sup(&self.yr[k], &other.yr[k]));
            if k < kb {
                dz = dz.max(sup(&self.z[k], &other.z[k]));
            }
        }
        dy + dz
    }

    /// Largest `|Y|` over all nodes and both sides.
    pub fn max_abs_y(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.yl.len() {
            for side in [&self.yl[k], &self.yr[k]] {
                for node in side.chunks(self.h) {
                    m = m.max(node.iter().map(|v| v * v).sum::<f64>().sqrt());
                }
            }
        }
        m
    }
}

/// Jump map at slice `k`: `Y_t` from `Y_{t+}`.
pub fn jump_map(problem: &Problem, t: f64, y_plus: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
    match problem.mode {
        JumpMode::Forward => {
            let d = problem.g.apply(t, y_plus, dw);
            Ok(y_plus.iter().zip(d).map(|(a, b)| a + b).collect())
        }
        JumpMode::Marcus => flow(&FlowRequest::new(&problem.g, t, dw, y_plus).steps(DEFAULT_FLOW_STEPS)),
    }
}

/// Increment contributed by the continuous driver over step `k`, evaluated at
/// the state `y` at the right end of the step.
pub fn continuous_increment(
    problem: &Problem,
    kind: StepKind,
    t: f64,
    y: &[f64],
    dw: &[f64],
) -> Result<Vec<f64>> {
    if dw.iter().all(|v| *v == 0.0) || problem.g.is_zero() {
        return Ok(vec![0.0; y.len()]);
    }
    let use_flow = kind == StepKind::Excursion || problem.scheme == ContinuousScheme::Flow;
    if use_flow {
        let phi = flow(&FlowRequest::new(&problem.g, t, dw, y).steps(DEFAULT_FLOW_STEPS))?;
        Ok(phi.iter().zip(y).map(|(a, b)| a - b).collect())
    } else {
        Ok(problem.g.apply(t, y, dw))
    }
}

/// Per-step data shared by all nodes of a slice.
pub(crate) struct StepData {
    pub kind: StepKind,
    pub brownian: bool,
    pub t_left: f64,
    pub t_right: f64,
    pub dc: f64,
    pub dw: Vec<f64>,
    pub jump: Vec<f64>,
    pub has_jump: bool,
}

impl StepData {
    pub fn new(tree: &TreeModel, k: usize) -> Self {
        let jump = tree.jump(k);
        StepData {
            kind: tree.kinds[k],
            brownian: tree.is_brownian(k),
            t_left: tree.model_times[k],
            t_right: tree.model_times[k + 1],
            dc: tree.dc(k),
            dw: tree.dw_cont(k),
            has_jump: jump.iter().any(|v| *v != 0.0),
            jump,
        }
    }
}

struct NodeOut {
    yl: Vec<f64>,
    yr: Vec<f64>,
    z: Vec<f64>,
}

const PARALLEL_NODES: usize = 256;

/// One Picard step on slices `ka..=kb`. `next.yl[kb]` must already hold the
/// window's terminal values. Driver jumps at slices in `(ka, kb)` enter
/// through `prev`; the jump at `ka` enters only if `include_left_jump`.
pub fn picard_step(
    problem: &Problem,
    tree: &TreeModel,
    prev: &Iterate,
    next: &mut Iterate,
    ka: usize,
    kb: usize,
    include_left_jump: bool,
) -> Result<()> {
    if !(ka < kb && kb < tree.n_slices()) {
        return Err(Error::InvalidArgument(format!("window [{ka}, {kb}] is not aligned with the tree")));
    }
    let h = prev.h;
    for k in (ka..kb).rev() {
        let step = StepData::new(tree, k);
        let apply_jump = step.has_jump && (k > ka || include_left_jump);
        let node = |j: usize| -> Result<NodeOut> {
            let offs = tree.child_offsets(k);
            let mut vals: Vec<Vec<f64>> = Vec::with_capacity(offs.len());
            for &o in offs {
                let c = j + o;
                let g = continuous_increment(problem, step.kind, step.t_right, prev.y_right(k + 1, c), &step.dw)?;
                vals.push(next.y_left(k + 1, c).iter().zip(g).map(|(a, b)| a + b).collect());
            }
            let f = problem.f.eval(step.t_left, prev.y_right(k, j), prev.z_at(k, j));
            let mut yr = vec![0.0; h];
            let mut z = vec![0.0; h];
            for i in 0..h {
                let ev = vals.iter().map(|v| v[i]).sum::<f64>() / vals.len() as f64;
                yr[i] = ev + f[i] * step.dc;
                if step.brownian {
                    z[i] = (vals[1][i] - vals[0][i]) / (2.0 * tree.sqrt_dt);
                }
            }
            let yl = if apply_jump {
                let target = jump_map(problem, step.t_left, prev.y_right(k, j), &step.jump)?;
                let d: Vec<f64> = target.iter().zip(prev.y_right(k, j)).map(|(a, b)| a - b).collect();
                yr.iter().zip(d).map(|(a, b)| a + b).collect()
            } else {
                yr.clone()
            };
            Ok(NodeOut { yl, yr, z })
        };
        let n = tree.nodes(k);
        let outs: Vec<NodeOut> = if n >= PARALLEL_NODES {
            (0..n).into_par_iter().map(node).collect::<Result<_>>()?
        } else {
            (0..n).map(node).collect::<Result<_>>()?
        };
        for (j, o) in outs.into_iter().enumerate() {
            next.yl[k][j * h..(j + 1) * h].copy_from_slice(&o.yl);
            next.yr[k][j * h..(j + 1) * h].copy_from_slice(&o.yr);
            next.z[k][j * h..(j + 1) * h].copy_from_slice(&o.z);
        }
    }
    Ok(())
}

/// `Y⁰_t = E_t[Y_{kb}]`, `Z⁰ = 0` on slices `ka..kb`.
pub fn initial_iterate(tree: &TreeModel, it: &mut Iterate, ka: usize, kb: usize) {
    let h = it.h;
    for k in (ka..kb).rev() {
        let offs = tree.child_offsets(k);
        let mut slice = vec![0.0; tree.nodes(k) * h];
        for j in 0..tree.nodes(k) {
            for i in 0..h {
                slice[j * h + i] = offs.iter().map(|o| it.yl[k + 1][(j + o) * h + i]).sum::<f64>() / offs.len() as f64;
            }
        }
        it.yl[k] = slice.clone();
        it.yr[k] = slice;
        it.z[k].iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Applies the exact jump map at slice `k` to the converged right limits.
pub fn apply_jump(problem: &Problem, tree: &TreeModel, it: &mut Iterate, k: usize) -> Result<()> {
    let jump = tree.jump(k);
    let h = it.h;
    if jump.iter().all(|v| *v == 0.0) {
        it.yl[k] = it.yr[k].clone();
        return Ok(());
    }
    let t = tree.model_times[k];
    for j in 0..tree.nodes(k) {
        let v = jump_map(problem, t, it.y_right(k, j), &jump)?;
        it.yl[k][j * h..(j + 1) * h].copy_from_slice(&v);
    }
    Ok(())
}
