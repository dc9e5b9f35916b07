//! Pathwise Itô formula and quadratic variation checks for `Y = M + A` with
//! `M` a tree Brownian path and `A` a càglàd path of finite q-variation.

use crate::error::{Error, Result};
use crate::pathcore::path::{merge_times, uniform_grid, GridPath};

/// Test functions for the Itô formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ItoFunction {
    Square,
    /// `exp` with its argument clipped to `[−20, 20]`.
    ExpClipped,
    Sin,
    /// `a + b x`.
    Linear { a: f64, b: f64 },
}

impl ItoFunction {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(ItoFunction::Square),
            "exp" | "exp-clipped" => Ok(ItoFunction::ExpClipped),
            "sin" => Ok(ItoFunction::Sin),
            "linear" => Ok(ItoFunction::Linear { a: 0.5, b: 2.0 }),
            other => Err(Error::Parse(format!("unknown Itô test function '{other}'"))),
        }
    }

    fn d(&self, x: f64, order: u8) -> f64 {
        match (self, order) {
            (ItoFunction::Square, 0) => x * x,
            (ItoFunction::Square, 1) => 2.0 * x,
            (ItoFunction::Square, _) => 2.0,
            (ItoFunction::ExpClipped, _) => x.clamp(-20.0, 20.0).exp(),
            (ItoFunction::Sin, 0) => x.sin(),
            (ItoFunction::Sin, 1) => x.cos(),
            (ItoFunction::Sin, _) => -x.sin(),
            (ItoFunction::Linear { a, b }, 0) => a + b * x,
            (ItoFunction::Linear { b, .. }, 1) => *b,
            (ItoFunction::Linear { .. }, _) => 0.0,
        }
    }
}

fn scalar(p: &GridPath, what: &str) -> Result<()> {
    if p.dim() != 1 {
        return Err(Error::Dimension(format!("{what} must be scalar")));
    }
    Ok(())
}

/// `sup_t |f(Y_t) − f(Y_0) − ∫_0^t f′(Y) d←A − Σ f′(Y) ΔM − ½ Σ f″(Y) (ΔM)²
/// − Σ_{s<t} (f(Y_{s+}) − f(Y_s) − f′(Y_{s+}) Δ⁺A_s)|` over the merged grid.
/// The backward Young sum evaluates `f′(Y)` at the right end of every
/// continuous increment and at `Y_{s+}` for a jump; the martingale and
/// bracket sums evaluate at the left end.
pub fn ito_residual(f: ItoFunction, a: &GridPath, m: &GridPath) -> Result<f64> {
    scalar(a, "A")?;
    scalar(m, "M")?;
    if a.mode().is_cadlag() || !m.mode().is_continuous() {
        return Err(Error::InvalidArgument("A must be càglàd and M continuous".into()));
    }
    if (a.horizon() - m.horizon()).abs() > 1e-12 * a.horizon().max(1.0) {
        return Err(Error::InvalidArgument("A and M differ in horizon".into()));
    }
    let grid = merge_times(&[a.times(), m.times()]);
    let al: Vec<f64> = grid.iter().map(|&t| a.left_at(t)[0]).collect();
    let ar: Vec<f64> = grid.iter().map(|&t| a.right_at(t)[0]).collect();
    let mv: Vec<f64> = grid.iter().map(|&t| m.value_at(t)[0]).collect();
    let y0 = al[0] + mv[0];
    let mut rhs = f.d(y0, 0);
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let yl = al[i] + mv[i];
        worst = worst.max((f.d(yl, 0) - rhs).abs());
        if i + 1 == grid.len() {
            break;
        }
        let yr = ar[i] + mv[i];
        let ja = ar[i] - al[i];
        if ja != 0.0 {
            rhs += f.d(yr, 1) * ja + (f.d(yr, 0) - f.d(yl, 0) - f.d(yr, 1) * ja);
        }
        let da = al[i + 1] - ar[i];
        let dm = mv[i + 1] - mv[i];
        let ynext = al[i + 1] + mv[i + 1];
        rhs += f.d(ynext, 1) * da + f.d(yr, 1) * dm + 0.5 * f.d(yr, 2) * dm * dm;
    }
    Ok(worst)
}

/// `S^π(T) = Σ (Y_{t_{i+1}} − Y_{t_i})²` over partition points.
pub fn qv_statistic(a: &GridPath, m: &GridPath, partition: &[f64]) -> Result<f64> {
    scalar(a, "A")?;
    scalar(m, "M")?;
    let y: Vec<f64> = partition.iter().map(|&t| a.value_at(t)[0] + m.value_at(t)[0]).collect();
    Ok(y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

/// `Σ_{s<T} (Δ⁺A_s)²`.
pub fn jump_square_sum(a: &GridPath) -> f64 {
    let n = a.len();
    a.jump_indices().into_iter().filter(|&i| i + 1 < n).map(|i| a.jump(i)[0].powi(2)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct QvReport {
    /// `[M](T) + Σ (Δ⁺A)²` with `[M](T) = T` on the tree.
    pub limit: f64,
    /// `(cells, RMS of S^π(T) − limit)` per level.
    pub rows: Vec<(usize, f64)>,
}

impl QvReport {
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Exact root-mean-square of `S^π(T) − [M](T) − Σ(Δ⁺A)²` over all paths of
/// an `n_tree`-step Brownian tree, for uniform partitions with `cells` cells
/// each. Every partition must coarsen the tree grid.
///
/// With `k` tree steps of size `dt` in a cell, `ΔM` is a sum of `k`
/// independent `±√dt` steps: `E ΔM² = k dt`, `E ΔM³ = 0` and
/// `E ΔM⁴ = (3k² − 2k) dt²`. Writing `a_i` for the increment of `A` over the
/// `i`-th cell (jumps at its left end included),
/// `E[R²] = c² + Σ_i ((2k² − 2k) dt² + 4 a_i² k dt)` with
/// `c = Σ a_i² − Σ (Δ⁺A)²`.
pub fn qv_check(a: &GridPath, n_tree: usize, ladder: &[usize]) -> Result<QvReport> {
    scalar(a, "A")?;
    let horizon = a.horizon();
    let dt = horizon / n_tree as f64;
    let jumps = jump_square_sum(a);
    let mut rows = Vec::with_capacity(ladder.len());
    for &cells in ladder {
        if cells == 0 || !n_tree.is_multiple_of(cells) {
            return Err(Error::InvalidArgument(format!("{cells} cells do not coarsen a {n_tree}-step tree")));
        }
        let k = (n_tree / cells) as f64;
        let grid = uniform_grid(horizon, cells);
        let incr: Vec<f64> = grid.windows(2).map(|w| a.value_at(w[1])[0] - a.value_at(w[0])[0]).collect();
        let c = incr.iter().map(|x| x * x).sum::<f64>() - jumps;
        let var: f64 = incr.iter().map(|x| (2.0 * k * k - 2.0 * k) * dt * dt + 4.0 * x * x * k * dt).sum();
        rows.push((cells, (c * c + var).sqrt()));
    }
    Ok(QvReport { limit: horizon + jumps, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_brownian(n: usize, signs: &[bool]) -> GridPath {
        let dt = 1.0 / n as f64;
        let mut v = vec![0.0];
        for k in 0..n {
            let s = if signs[k % signs.len()] { 1.0 } else { -1.0 };
            v.push(v[k] + s * dt.sqrt());
        }
        GridPath::continuous(uniform_grid(1.0, n), v).unwrap()
    }

    #[test]
    fn linear_function_is_exact() {
        let a = GridPath::caglad_jumps(&uniform_grid(1.0, 7), &[0.3], &[(0.4, vec![1.0]), (0.71, vec![-0.5])]).unwrap();
        let m = tree_brownian(16, &[true, false, false, true, true]);
        let f = ItoFunction::Linear { a: 0.5, b: 2.0 };
        assert!(ito_residual(f, &a, &m).unwrap() <= 1e-12);
    }

    #[test]
    fn pure_jump_without_martingale_is_exact() {
        let a = GridPath::caglad_jumps(&[0.0, 1.0], &[0.3], &[(0.2, vec![1.0]), (0.6, vec![-2.5])]).unwrap();
        let m = GridPath::constant(1.0, &[0.0]).unwrap();
        for f in [ItoFunction::Square, ItoFunction::Sin, ItoFunction::ExpClipped] {
            assert!(ito_residual(f, &a, &m).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn qv_ladder_without_driver() {
        let a = GridPath::constant(1.0, &[0.0]).unwrap();
        let r = qv_check(&a, 64, &[4, 16, 64]).unwrap();
        assert_eq!(r.rows[2].1, 0.0);
        assert!(r.monotone());
        let m = tree_brownian(64, &[true, true, false]);
        let s = qv_statistic(&a, &m, &uniform_grid(1.0, 64)).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_jump_without_martingale() {
        let a = GridPath::caglad_jumps(&[0.0, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap();
        let m = GridPath::constant(1.0, &[0.0]).unwrap();
        assert_eq!(qv_statistic(&a, &m, &uniform_grid(1.0, 8)).unwrap(), 1.0);
    }
}
