//! Conditional path norms of node-indexed fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pathcore::path::dist;
use crate::pathcore::pvar::{pow_p, PVarAccumulator};

use super::tree::TreeModel;

/// Windows with at most this many Brownian steps are enumerated exactly.
pub const EXACT_BROWNIAN_STEPS: usize = 12;
/// Tree paths drawn when a window is too deep to enumerate.
pub const SAMPLED_PATHS: usize = 256;
const SAMPLE_SEED: u64 = 0x005e_ed0f_7a7e;
const MIN_VISITS: usize = 16;

/// `‖Y‖_{p,2;[t_a,t_b]}` and whether it was computed exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub exact: bool,
}

fn check_field(tree: &TreeModel, field: &[Vec<f64>], h: usize, slices: usize) -> Result<()> {
    if field.len() < slices || (0..slices).any(|k| field[k].len() != tree.nodes(k) * h) {
        return Err(Error::Dimension("node field does not match the tree".into()));
    }
    Ok(())
}

fn node(field: &[Vec<f64>], h: usize, k: usize, j: usize) -> &[f64] {
    &field[k][j * h..(j + 1) * h]
}

/// `max_{nodes at t_k, a ≤ k ≤ b} E_{t_k}[‖Y‖²_{p;[t_k,t_b]}]^{1/2}` for the
/// càglàd field with sides `yl`, `yr`.
pub fn p2_norm_estimate(
    tree: &TreeModel,
    yl: &[Vec<f64>],
    yr: &[Vec<f64>],
    h: usize,
    p: f64,
    ka: usize,
    kb: usize,
) -> Result<NormEstimate> {
    if !(p >= 1.0) {
        return Err(Error::Exponent(p));
    }
    if !(ka <= kb && kb < tree.n_slices()) {
        return Err(Error::InvalidArgument(format!("window [{ka}, {kb}] is outside the tree")));
    }
    check_field(tree, yl, h, tree.n_slices())?;
    check_field(tree, yr, h, tree.n_slices())?;
    let brownian = tree.width[kb] - tree.width[ka];
    if brownian <= EXACT_BROWNIAN_STEPS {
        let mut best: f64 = 0.0;
        for k in ka..=kb {
            for j in 0..tree.nodes(k) {
                let mut acc = PVarAccumulator::new(p, h);
                acc.push(node(yl, h, k, j));
                let mut sum = 0.0;
                descend(tree, yl, yr, h, k, j, kb, 1.0, &mut acc, &mut sum);
                best = best.max(sum.sqrt());
            }
        }
        return Ok(NormEstimate { value: best, exact: true });
    }
    Ok(NormEstimate { value: sampled(tree, yl, yr, h, p, ka, kb), exact: false })
}

// Pushes the right side of slice k, then walks the children of step k.
#[allow(clippy::too_many_arguments)]
fn descend(
    tree: &TreeModel,
    yl: &[Vec<f64>],
    yr: &[Vec<f64>],
    h: usize,
    k: usize,
    j: usize,
    kb: usize,
    weight: f64,
    acc: &mut PVarAccumulator,
    sum: &mut f64,
) {
    if k == kb {
        let v = acc.value();
        *sum += weight * v * v;
        return;
    }
    acc.push(node(yr, h, k, j));
    let offs = tree.child_offsets(k);
    let w = weight / offs.len() as f64;
    for &o in offs {
        acc.push(node(yl, h, k + 1, j + o));
        descend(tree, yl, yr, h, k + 1, j + o, kb, w, acc, sum);
        acc.pop();
    }
    acc.pop();
}

fn sampled(tree: &TreeModel, yl: &[Vec<f64>], yr: &[Vec<f64>], h: usize, p: f64, ka: usize, kb: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    // (sum of squared suffix norms, visits) per node
    let mut stats: Vec<Vec<(f64, usize)>> = (ka..=kb).map(|k| vec![(0.0, 0); tree.nodes(k)]).collect();
    for _ in 0..SAMPLED_PATHS {
        let path = tree.sample_path(&mut rng);
        let mut verts: Vec<&[f64]> = Vec::with_capacity(2 * (kb - ka) + 1);
        let mut slice_of = Vec::with_capacity(verts.capacity());
        for (k, &j) in path.iter().enumerate().take(kb + 1).skip(ka) {
            verts.push(node(yl, h, k, j));
            slice_of.push(Some(k));
            if k < kb {
                verts.push(node(yr, h, k, j));
                slice_of.push(None);
            }
        }
        // suffix DP: best[i] = sup over chains starting at vertex i
        let n = verts.len();
        let mut best = vec![0.0f64; n];
        for i in (0..n - 1).rev() {
            let mut b: f64 = 0.0;
            for m in i + 1..n {
                let d = dist(verts[i], verts[m]);
                let cand = if p.is_infinite() { d.max(best[m]) } else { pow_p(d, p) + best[m] };
                b = b.max(cand);
            }
            best[i] = b;
        }
        for (i, s) in slice_of.iter().enumerate() {
            if let Some(k) = s {
                let norm = if p.is_infinite() { best[i] } else { best[i].powf(1.0 / p) };
                let e = &mut stats[k - ka][path[*k]];
                e.0 += norm * norm;
                e.1 += 1;
            }
        }
    }
    let mut out: f64 = 0.0;
    for slice in &stats {
        for &(s, n) in slice {
            if n >= MIN_VISITS {
                out = out.max((s / n as f64).sqrt());
            }
        }
    }
    out
}

/// `max_{nodes at t_k, a ≤ k < b} E_{t_k}[Σ_{k ≤ i < b} |Z_i|² Δc_i]^{1/2}`,
/// exact by backward induction.
pub fn bmo_norm_estimate(tree: &TreeModel, z: &[Vec<f64>], h: usize, ka: usize, kb: usize) -> Result<f64> {
    if !(ka <= kb && kb < tree.n_slices()) {
        return Err(Error::InvalidArgument(format!("window [{ka}, {kb}] is outside the tree")));
    }
    check_field(tree, z, h, tree.n_steps())?;
    let mut u = vec![0.0; tree.nodes(kb)];
    let mut best: f64 = 0.0;
    for k in (ka..kb).rev() {
        let offs = tree.child_offsets(k);
        let dc = tree.dc(k);
        let next: Vec<f64> = (0..tree.nodes(k))
            .map(|j| {
                let zz: f64 = node(z, h, k, j).iter().map(|v| v * v).sum();
                zz * dc + offs.iter().map(|o| u[j + o]).sum::<f64>() / offs.len() as f64
            })
            .collect();
        u = next;
        best = best.max(u.iter().cloned().fold(0.0, f64::max).sqrt());
    }
    Ok(best)
}

/// `E[Σ_i |Z_i|² Δc_i]` at the root, exact by backward induction.
pub fn expected_z_energy(tree: &TreeModel, z: &[Vec<f64>], h: usize) -> Result<f64> {
    check_field(tree, z, h, tree.n_steps())?;
    let mut u = vec![0.0; tree.nodes(tree.n_slices() - 1)];
    for k in (0..tree.n_steps()).rev() {
        let offs = tree.child_offsets(k);
        let dc = tree.dc(k);
        u = (0..tree.nodes(k))
            .map(|j| {
                let zz: f64 = node(z, h, k, j).iter().map(|v| v * v).sum();
                zz * dc + offs.iter().map(|o| u[j + o]).sum::<f64>() / offs.len() as f64
            })
            .collect();
    }
    Ok(u[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
    use crate::pathcore::path::GridPath;
    use crate::rbsde::problem::{JumpMode, Problem};

    fn tree(n: usize) -> TreeModel {
        let p = Problem::new(
            1.0,
            TerminalSpec::Constant(vec![0.0]),
            GeneratorSpec::Zero,
            VectorFieldSpec::scalar_constant(0.0),
            GridPath::constant(1.0, &[0.0]).unwrap(),
            JumpMode::Forward,
        )
        .unwrap();
        TreeModel::build(&p, n).unwrap()
    }

    fn field(t: &TreeModel, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        (0..t.n_slices()).map(|k| (0..t.nodes(k)).map(|j| f(k, j)).collect()).collect()
    }

    #[test]
    fn constant_field_has_zero_norm() {
        let t = tree(4);
        let y = field(&t, |_, _| 3.0);
        assert_eq!(p2_norm_estimate(&t, &y, &y, 1, 2.0, 0, 4).unwrap().value, 0.0);
    }

    #[test]
    fn unit_z_bmo() {
        let t = tree(8);
        let z: Vec<Vec<f64>> = (0..t.n_steps()).map(|k| vec![1.0; t.nodes(k)]).collect();
        assert!((bmo_norm_estimate(&t, &z, 1, 0, 8).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampled_estimate_is_close_to_exact() {
        let t = tree(12);
        let y = field(&t, |k, j| t.brownian_value(k, j));
        let exact = p2_norm_estimate(&t, &y, &y, 1, 2.0, 0, 12).unwrap();
        assert!(exact.exact);
        let approx = sampled(&t, &y, &y, 1, 2.0, 0, 12);
        assert!((approx - exact.value).abs() < 0.25 * exact.value);
    }
}
