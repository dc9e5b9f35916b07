//! Plug a solution back into the equation and measure the pathwise defect.
//!
//! Along any tree path, `Y_t − (ξ + Σ f Δc + Σ g(⋄)ΔW − Σ Z ΔB)` telescopes
//! into the sum of per-step defects, per-jump defects and the terminal defect.
//! The supremum over paths of each component is obtained exactly by carrying
//! the componentwise maximum and minimum of the remaining sum backward.

use crate::error::Result;

use super::problem::Problem;
use super::scheme::{continuous_increment, jump_map, Iterate, StepData};
use super::tree::TreeModel;

/// `sup` over nodes, both sides and components of the pathwise defect.
pub fn equation_defect(problem: &Problem, tree: &TreeModel, sol: &Iterate) -> Result<f64> {
    let h = sol.h;
    let kt = tree.n_slices() - 1;
    let mut hi = vec![0.0; tree.nodes(kt) * h];
    let mut lo = vec![0.0; tree.nodes(kt) * h];
    let mut worst: f64 = 0.0;
    for j in 0..tree.nodes(kt) {
        let xi = problem.xi.eval(tree.brownian_value(kt, j));
        for i in 0..h {
            let d = sol.y_left(kt, j)[i] - xi[i];
            hi[j * h + i] = d;
            lo[j * h + i] = d;
            worst = worst.max(d.abs());
        }
    }
    for k in (0..kt).rev() {
        let step = StepData::new(tree, k);
        let offs = tree.child_offsets(k);
        let n = tree.nodes(k);
        let mut nhi = vec![f64::NEG_INFINITY; n * h];
        let mut nlo = vec![f64::INFINITY; n * h];
        for j in 0..n {
            let f = problem.f.eval(step.t_left, sol.y_right(k, j), sol.z_at(k, j));
            for (ci, &o) in offs.iter().enumerate() {
                let c = j + o;
                let g = continuous_increment(problem, step.kind, step.t_right, sol.y_right(k + 1, c), &step.dw)?;
                let db = if step.brownian { if ci == 1 { tree.sqrt_dt } else { -tree.sqrt_dt } } else { 0.0 };
                for i in 0..h {
                    let target = sol.y_left(k + 1, c)[i] + g[i] + f[i] * step.dc - sol.z_at(k, j)[i] * db;
                    let d = sol.y_right(k, j)[i] - target;
                    nhi[j * h + i] = nhi[j * h + i].max(d + hi[c * h + i]);
                    nlo[j * h + i] = nlo[j * h + i].min(d + lo[c * h + i]);
                }
            }
            for i in 0..h {
                worst = worst.max(nhi[j * h + i].abs()).max(nlo[j * h + i].abs());
            }
            let jd: Vec<f64> = if step.has_jump {
                let target = jump_map(problem, step.t_left, sol.y_right(k, j), &step.jump)?;
                sol.y_left(k, j).iter().zip(target).map(|(a, b)| a - b).collect()
            } else {
                sol.y_left(k, j).iter().zip(sol.y_right(k, j)).map(|(a, b)| a - b).collect()
            };
            for i in 0..h {
                nhi[j * h + i] += jd[i];
                nlo[j * h + i] += jd[i];
                worst = worst.max(nhi[j * h + i].abs()).max(nlo[j * h + i].abs());
            }
        }
        hi = nhi;
        lo = nlo;
    }
    Ok(worst)
}
