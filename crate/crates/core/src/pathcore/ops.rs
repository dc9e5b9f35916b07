//! Pointwise combinations of two paths on their merged grid.

use super::path::{merge_times, GridPath, PathMode};
use crate::error::{Error, Result};

fn merged_mode(a: PathMode, b: PathMode) -> Result<PathMode> {
    use PathMode::*;
    if a.is_continuous() && b.is_continuous() {
        return Ok(ContinuousLinear);
    }
    let cadlag = match (a.is_continuous(), b.is_continuous()) {
        (true, false) => b.is_cadlag(),
        (false, true) => a.is_cadlag(),
        _ => {
            if a.is_cadlag() != b.is_cadlag() {
                return Err(Error::InvalidArgument(format!(
                    "cannot combine a {} path with a {} path",
                    a.name(),
                    b.name()
                )));
            }
            a.is_cadlag()
        }
    };
    Ok(if cadlag { CadlagLinear } else { CagladLinear })
}

/// Applies `f` to the left sides and to the right sides of `a` and `b` at
/// every time of the merged grid.
pub fn combine(
    a: &GridPath,
    b: &GridPath,
    out_dim: usize,
    f: impl Fn(&[f64], &[f64]) -> Vec<f64>,
) -> Result<GridPath> {
    let ta = a.horizon();
    let tb = b.horizon();
    if (ta - tb).abs() > 1e-12 * ta.max(1.0) {
        return Err(Error::InvalidArgument(format!("horizons differ: {ta} vs {tb}")));
    }
    let mode = merged_mode(a.mode(), b.mode())?;
    let grid = merge_times(&[a.times(), b.times()]);
    let mut left = Vec::with_capacity(grid.len() * out_dim);
    let mut right = Vec::with_capacity(grid.len() * out_dim);
    for &t in &grid {
        let l = f(&a.left_at(t), &b.left_at(t));
        let r = f(&a.right_at(t), &b.right_at(t));
        if l.len() != out_dim || r.len() != out_dim {
            return Err(Error::Dimension("combine output".into()));
        }
        left.extend(l);
        right.extend(r);
    }
    let mode = if mode != PathMode::ContinuousLinear && left == right {
        PathMode::ContinuousLinear
    } else {
        mode
    };
    GridPath::from_flat(grid, out_dim, left, right, mode)
}

pub fn sub(a: &GridPath, b: &GridPath) -> Result<GridPath> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    combine(a, b, a.dim(), |x, y| x.iter().zip(y).map(|(u, v)| u - v).collect())
}

pub fn add(a: &GridPath, b: &GridPath) -> Result<GridPath> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    combine(a, b, a.dim(), |x, y| x.iter().zip(y).map(|(u, v)| u + v).collect())
}

/// Product of a scalar path with a path of any dimension.
pub fn product(a: &GridPath, b: &GridPath) -> Result<GridPath> {
    if a.dim() != 1 {
        return Err(Error::Dimension("left factor of a product must be scalar".into()));
    }
    combine(a, b, b.dim(), |x, y| y.iter().map(|v| x[0] * v).collect())
}

pub fn scale(a: &GridPath, c: f64) -> Result<GridPath> {
    a.map(a.dim(), |_, v| v.iter().map(|x| c * x).collect())
}
