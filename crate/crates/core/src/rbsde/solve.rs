//! Global solve: ε̄-partition, Picard iteration per interval from right to
//! left, large jumps applied by hand at interval boundaries.

use crate::error::{Error, Result};
use crate::pathcore::partition::find_partition;
use crate::pathcore::path::GridPath;
use crate::pathcore::pvar::p_var_full;

use super::apriori::{apriori_bound, default_eps_bar};
use super::norms::{bmo_norm_estimate, p2_norm_estimate};
use super::problem::Problem;
use super::residual::equation_defect;
use super::scheme::{apply_jump, initial_iterate, picard_step, Iterate};
use super::tree::TreeModel;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub n_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Overrides the default ε̄.
    pub eps_bar: Option<f64>,
    /// Halvings of ε̄ tried after a non-converging interval.
    pub max_shrinks: usize,
    /// Compute `‖Y‖_{p,2}` and `‖Z‖_BMO`.
    pub norms: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { n_steps: 200, tol: 1e-8, max_iter: 200, eps_bar: None, max_shrinks: 4, norms: true }
    }
}

impl SolverConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        SolverConfig { n_steps, ..Default::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub eps_bar: f64,
    pub shrinks: usize,
    pub partition: Vec<f64>,
    /// Single-step intervals whose driver increment still exceeds ε̄.
    pub unresolved: usize,
    /// Picard iterations per interval, left to right.
    pub iterations: Vec<usize>,
    /// Largest final Picard increment over all intervals.
    pub picard_residual: f64,
    /// Tolerance the Picard loop actually used.
    pub internal_tol: f64,
    /// Equation defect of the returned fields.
    pub residual: f64,
    pub apriori: f64,
    pub max_abs_y: f64,
    pub y_p2: Option<f64>,
    pub y_p2_exact: bool,
    pub z_bmo: Option<f64>,
    pub snapped: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub tree: TreeModel,
    pub fields: Iterate,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn h(&self) -> usize {
        self.fields.h
    }

    /// `Y_0`.
    pub fn y0(&self) -> Vec<f64> {
        self.fields.y_left(0, 0).to_vec()
    }

    /// `Y_{0+}`.
    pub fn y0_plus(&self) -> Vec<f64> {
        self.fields.y_right(0, 0).to_vec()
    }

    /// `Z` on the first step.
    pub fn z0(&self) -> Vec<f64> {
        self.fields.z_at(0, 0).to_vec()
    }

    /// `Y` along a tree path as a càglàd grid path.
    pub fn y_path(&self, nodes: &[usize]) -> Result<GridPath> {
        let h = self.h();
        let mut l = Vec::with_capacity(nodes.len() * h);
        let mut r = Vec::with_capacity(nodes.len() * h);
        for (k, &j) in nodes.iter().enumerate() {
            l.extend_from_slice(self.fields.y_left(k, j));
            r.extend_from_slice(self.fields.y_right(k, j));
        }
        self.tree.caglad_path(h, l, r)
    }

    /// Largest `|Y|` over nodes.
    pub fn max_abs_y(&self) -> f64 {
        self.fields.max_abs_y()
    }
}

/// Builds the tree for `problem` and solves on it.
pub fn solve_rbsde(problem: &Problem, cfg: &SolverConfig) -> Result<Solution> {
    problem.validate()?;
    let tree = TreeModel::build(problem, cfg.n_steps)?;
    solve_on_tree(problem, &tree, cfg)
}

struct Attempt {
    fields: Iterate,
    partition: Vec<f64>,
    unresolved: usize,
    iterations: Vec<usize>,
    picard_residual: f64,
}

fn attempt(problem: &Problem, tree: &TreeModel, cfg: &SolverConfig, eps: f64, itol: f64) -> Result<Attempt> {
    let part = find_partition(&tree.w, &tree.clock, problem.q, eps)?;
    let h = problem.h();
    let mut cur = Iterate::zeros(tree, h);
    cur.set_terminal(problem, tree);
    let mut nxt = cur.clone();
    let mut iterations = Vec::with_capacity(part.n_intervals());
    let mut picard_residual: f64 = 0.0;
    for w in part.indices.windows(2).rev() {
        let (ka, kb) = (w[0], w[1]);
        initial_iterate(tree, &mut cur, ka, kb);
        for k in ka..=kb {
            nxt.yl[k].clone_from(&cur.yl[k]);
            nxt.yr[k].clone_from(&cur.yr[k]);
        }
        let mut trace = Vec::new();
        let mut done = None;
        for it in 1..=cfg.max_iter {
            picard_step(problem, tree, &cur, &mut nxt, ka, kb, false)?;
            let d = nxt.distance(&cur, ka, kb);
            std::mem::swap(&mut cur, &mut nxt);
            trace.push(d);
            if !d.is_finite() {
                break;
            }
            if d <= itol {
                done = Some((it, d));
                break;
            }
        }
        let Some((it, d)) = done else {
            let tail: Vec<String> = trace.iter().rev().take(5).rev().map(|v| format!("{v:.3e}")).collect();
            return Err(Error::NonConvergence(format!(
                "interval [{}, {}] after {} iterations, last increments [{}]",
                tree.times[ka],
                tree.times[kb],
                trace.len(),
                tail.join(", ")
            )));
        };
        iterations.push(it);
        picard_residual = picard_residual.max(d);
        apply_jump(problem, tree, &mut cur, ka)?;
        for k in ka..=kb {
            nxt.yl[k].clone_from(&cur.yl[k]);
            nxt.yr[k].clone_from(&cur.yr[k]);
            if k < kb {
                nxt.z[k].clone_from(&cur.z[k]);
            }
        }
    }
    iterations.reverse();
    Ok(Attempt {
        fields: cur,
        partition: part.breakpoints,
        unresolved: part.unresolved,
        iterations,
        picard_residual,
    })
}

/// Solves on a prepared tree. Fails if Picard does not converge after all
/// ε̄ halvings or if the equation defect exceeds `10 · tol`.
pub fn solve_on_tree(problem: &Problem, tree: &TreeModel, cfg: &SolverConfig) -> Result<Solution> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", cfg.tol)));
    }
    let c_f = problem.c_f();
    let c_g = problem.c_g();
    let wq = p_var_full(&tree.w, problem.q)?;
    let c_t = tree.clock.value_at(tree.clock.horizon())[0];
    let tv = tree.w_total_variation();
    let itol = (cfg.tol / (10.0 * (1.0 + c_g * tv + 2.0 * c_f * c_t))).max(1e-13);
    let eps0 = cfg.eps_bar.unwrap_or_else(|| default_eps_bar(c_f, c_g, wq));
    let mut last_err = None;
    for shrink in 0..=cfg.max_shrinks {
        let eps = eps0 / 2f64.powi(shrink as i32);
        match attempt(problem, tree, cfg, eps, itol) {
            Ok(a) => {
                let residual = equation_defect(problem, tree, &a.fields)?;
                let b_max = tree.n_brownian() as f64 * tree.sqrt_dt;
                let mut diagnostics = Diagnostics {
                    eps_bar: eps,
                    shrinks: shrink,
                    partition: a.partition,
                    unresolved: a.unresolved,
                    iterations: a.iterations,
                    picard_residual: a.picard_residual,
                    internal_tol: itol,
                    residual,
                    apriori: apriori_bound(c_f, c_g, c_t, wq, problem.xi_sup(b_max), problem.p),
                    max_abs_y: a.fields.max_abs_y(),
                    snapped: tree.snapped,
                    ..Default::default()
                };
                let kt = tree.n_slices() - 1;
                if cfg.norms {
                    let est = p2_norm_estimate(tree, &a.fields.yl, &a.fields.yr, a.fields.h, problem.p, 0, kt)?;
                    diagnostics.y_p2 = Some(est.value);
                    diagnostics.y_p2_exact = est.exact;
                    diagnostics.z_bmo = Some(bmo_norm_estimate(tree, &a.fields.z, a.fields.h, 0, kt)?);
                }
                if residual > 10.0 * cfg.tol {
                    return Err(Error::Residual { residual, limit: 10.0 * cfg.tol });
                }
                return Ok(Solution { tree: tree.clone(), fields: a.fields, diagnostics });
            }
            Err(e @ Error::NonConvergence(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Equation defect of a solution, see [`equation_defect`].
pub fn residual_check(problem: &Problem, sol: &Solution) -> Result<f64> {
    equation_defect(problem, &sol.tree, &sol.fields)
}
