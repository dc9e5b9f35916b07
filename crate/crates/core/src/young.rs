//! Backward and forward Young integration on merged grids.
//!
//! Every cell `[τ_k, τ_{k+1}]` of the merged grid splits the integrator into
//! a right jump at `τ_k`, a continuous increment on the open cell and a left
//! jump at `τ_{k+1}`. Jumps are paired with the exact one-sided limit of the
//! integrand that the refinement limit produces; continuous increments use
//! the integrand at the cell endpoint (right for backward, left for forward).
//! For pure-jump integrators the sums are therefore the exact integrals.

use crate::error::{Error, Result};
use crate::pathcore::ops;
use crate::pathcore::path::{merge_times, GridPath, PathMode};
use crate::pathcore::pvar::{p_var_full, p_variation, Endpoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// Cumulative `t ↦ ∫_0^t`.
    Left,
    /// Cumulative `t ↦ ∫_t^T`.
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Declared regularities: integrand of finite p-variation, integrator of
/// finite q-variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularity {
    pub p: f64,
    pub q: f64,
}

impl Regularity {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let r = Regularity { p, q };
        r.check()?;
        Ok(r)
    }

    pub fn theta(&self) -> f64 {
        1.0 / self.p + 1.0 / self.q
    }

    pub fn check(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::Exponent(self.p));
        }
        if !(self.q >= 1.0) {
            return Err(Error::Exponent(self.q));
        }
        if !(self.theta() > 1.0) {
            return Err(Error::Regularity(self.theta()));
        }
        Ok(())
    }

    /// Sewing constant `C_{p,q} = (1 − 2^{1−θ})^{−1}`.
    pub fn constant(&self) -> f64 {
        1.0 / (1.0 - 2f64.powf(1.0 - self.theta()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct YoungIntegralResult {
    pub cumulative: GridPath,
    /// Integral over the whole window.
    pub value: Vec<f64>,
    /// `C_{p,q} ‖x‖_{p;(s,t]} ‖y‖_{q;[s,t)}`.
    pub remainder_bound: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Backward,
    Forward,
}

fn out_dim(x: &GridPath, y: &GridPath) -> Result<usize> {
    if x.dim() == 1 {
        Ok(y.dim())
    } else if x.dim() == y.dim() {
        Ok(1)
    } else {
        Err(Error::Dimension(format!(
            "integrand of dim {} cannot act on an integrator of dim {}",
            x.dim(),
            y.dim()
        )))
    }
}

/// `x · dy`: scalar times vector, or the inner product of equal-length vectors.
fn contract(x: &[f64], dy: &[f64], acc: &mut [f64]) {
    if x.len() == 1 {
        for (a, d) in acc.iter_mut().zip(dy) {
            *a += x[0] * d;
        }
    } else {
        acc[0] += x.iter().zip(dy).map(|(a, b)| a * b).sum::<f64>();
    }
}

struct Sides {
    l: Vec<f64>,
    v: Vec<f64>,
    r: Vec<f64>,
}

fn sides(p: &GridPath, t: f64) -> Sides {
    Sides {
        l: p.left_at(t),
        v: p.value_at(t),
        r: p.right_at(t),
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

fn check_horizons(x: &GridPath, y: &GridPath) -> Result<f64> {
    let (a, b) = (x.horizon(), y.horizon());
    if (a - b).abs() > 1e-12 * a.max(1.0) {
        return Err(Error::InvalidArgument(format!("horizons differ: {a} vs {b}")));
    }
    Ok(a.min(b))
}

struct Sums {
    grid: Vec<f64>,
    dim: usize,
    cum_l: Vec<f64>,
    cum_r: Vec<f64>,
    value: Vec<f64>,
    remainder_bound: f64,
}

fn integrate(x: &GridPath, y: &GridPath, s: f64, t: f64, rule: Rule, reg: Regularity) -> Result<Sums> {
    reg.check()?;
    let horizon = check_horizons(x, y)?;
    let tol = 1e-12 * horizon.max(1.0);
    if !(s >= -tol && t <= horizon + tol && s < t) {
        return Err(Error::Window { s, t, horizon });
    }
    let dim = out_dim(x, y)?;
    let mut grid: Vec<f64> = merge_times(&[x.times(), y.times(), &[s, t]])
        .into_iter()
        .filter(|&u| u >= s - tol && u <= t + tol)
        .collect();
    grid[0] = s;
    let last = grid.len() - 1;
    grid[last] = t;

    let ycadlag = y.mode().is_cadlag();
    let xs: Vec<Sides> = grid.iter().map(|&u| sides(x, u)).collect();
    let ys: Vec<Sides> = grid.iter().map(|&u| sides(y, u)).collect();

    let n = grid.len();
    let mut cum_l = vec![0.0; n * dim];
    let mut cum_r = vec![0.0; n * dim];
    let mut acc = vec![0.0; dim];
    for k in 0..n {
        cum_l[k * dim..(k + 1) * dim].copy_from_slice(&acc);
        // left jump at τ_k for càdlàg integrators, τ_k ∈ (s, t]
        if k > 0 && ycadlag {
            let dy = diff(&ys[k].r, &ys[k].l);
            let xv = match rule {
                Rule::Backward => &xs[k].v,
                Rule::Forward => &xs[k].l,
            };
            contract(xv, &dy, &mut acc);
        }
        // right jump at τ_k for càglàd integrators, τ_k ∈ [s, t)
        if k < n - 1 && !ycadlag {
            let dy = diff(&ys[k].r, &ys[k].l);
            let xv = match rule {
                Rule::Backward => &xs[k].r,
                Rule::Forward => &xs[k].v,
            };
            contract(xv, &dy, &mut acc);
        }
        cum_r[k * dim..(k + 1) * dim].copy_from_slice(&acc);
        if k < n - 1 {
            let dy = diff(&ys[k + 1].l, &ys[k].r);
            if dy.iter().any(|v| *v != 0.0) {
                let xv = match rule {
                    Rule::Backward => &xs[k + 1].v,
                    Rule::Forward => &xs[k].v,
                };
                contract(xv, &dy, &mut acc);
            }
        }
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("young sum".into()));
    }
    let xp = p_variation(x, reg.p, s, t, Endpoint::OpenLeft)?;
    let yq = p_variation(y, reg.q, s, t, Endpoint::OpenRight)?;
    Ok(Sums {
        grid,
        dim,
        cum_l,
        cum_r,
        value: acc,
        remainder_bound: reg.constant() * xp * yq,
    })
}

fn into_result(sums: Sums, y_cadlag: bool, anchor: Anchor) -> Result<YoungIntegralResult> {
    let Sums { grid, dim, mut cum_l, mut cum_r, value, remainder_bound } = sums;
    if anchor == Anchor::Right {
        for (i, v) in cum_l.iter_mut().enumerate() {
            *v = value[i % dim] - *v;
        }
        for (i, v) in cum_r.iter_mut().enumerate() {
            *v = value[i % dim] - *v;
        }
    }
    let mode = if cum_l == cum_r {
        PathMode::ContinuousLinear
    } else if y_cadlag {
        PathMode::CadlagLinear
    } else {
        PathMode::CagladLinear
    };
    let cumulative = GridPath::from_flat(grid, dim, cum_l, cum_r, mode)?;
    Ok(YoungIntegralResult { cumulative, value, remainder_bound })
}

/// Backward Young integral over `[0, T]` with the requested anchoring of the
/// cumulative path.
pub fn backward_young(x: &GridPath, y: &GridPath, anchor: Anchor, reg: Regularity) -> Result<YoungIntegralResult> {
    let horizon = check_horizons(x, y)?;
    into_result(integrate(x, y, 0.0, horizon, Rule::Backward, reg)?, y.mode().is_cadlag(), anchor)
}

/// Forward Young integral over `[0, T]`, left-anchored.
pub fn forward_young(x: &GridPath, y: &GridPath, reg: Regularity) -> Result<YoungIntegralResult> {
    let horizon = check_horizons(x, y)?;
    into_result(integrate(x, y, 0.0, horizon, Rule::Forward, reg)?, y.mode().is_cadlag(), Anchor::Left)
}

/// `∫_s^t x d←y` computed directly on the window.
pub fn backward_young_window(x: &GridPath, y: &GridPath, s: f64, t: f64, reg: Regularity) -> Result<Vec<f64>> {
    Ok(integrate(x, y, s, t, Rule::Backward, reg)?.value)
}

/// `∫_s^t x dy` (forward) computed directly on the window.
pub fn forward_young_window(x: &GridPath, y: &GridPath, s: f64, t: f64, reg: Regularity) -> Result<Vec<f64>> {
    Ok(integrate(x, y, s, t, Rule::Forward, reg)?.value)
}

fn plus_jump(p: &GridPath, t: f64) -> Vec<f64> {
    if p.mode().is_cadlag() {
        vec![0.0; p.dim()]
    } else {
        diff(&p.right_at(t), &p.left_at(t))
    }
}

fn minus_jump(p: &GridPath, t: f64) -> Vec<f64> {
    if p.mode().is_cadlag() {
        diff(&p.right_at(t), &p.left_at(t))
    } else {
        vec![0.0; p.dim()]
    }
}

/// `Σ_{0≤r<T} Δ⁺x_r Δ⁺y_r` (plus) or `Σ_{0<r≤T} Δ⁻x_r Δ⁻y_r` (minus).
pub fn jump_correction(x: &GridPath, y: &GridPath, side: Side) -> Result<Vec<f64>> {
    let horizon = check_horizons(x, y)?;
    let dim = out_dim(x, y)?;
    let grid = merge_times(&[x.times(), y.times()]);
    let mut acc = vec![0.0; dim];
    for &t in &grid {
        let at_end = (t - horizon).abs() <= 1e-12 * horizon.max(1.0);
        match side {
            Side::Plus if !at_end => contract(&plus_jump(x, t), &plus_jump(y, t), &mut acc),
            Side::Minus if t > 0.0 => contract(&minus_jump(x, t), &minus_jump(y, t), &mut acc),
            _ => {}
        }
    }
    Ok(acc)
}

/// `∫_0^T x dy⁺ − (∫_0^T x dy + x_T Δ⁺y_T − x_0 Δ⁺y_0)` for càdlàg `x` and
/// càglàd `y`. The identity is exact when `x` and `y` share no jump time in
/// `(0, T)`; a common jump contributes `−Δ⁻x Δ⁺y`.
pub fn dy_plus_shift(x: &GridPath, y: &GridPath, reg: Regularity) -> Result<Vec<f64>> {
    if !(x.mode().is_cadlag() || x.mode().is_continuous()) {
        return Err(Error::InvalidArgument("dy_plus_shift needs a càdlàg integrand".into()));
    }
    if y.mode().is_cadlag() {
        return Err(Error::InvalidArgument("dy_plus_shift needs a càglàd integrator".into()));
    }
    let horizon = check_horizons(x, y)?;
    let y_plus = y.right_limit_path()?;
    let lhs = forward_young(x, &y_plus, reg)?.value;
    let base = forward_young(x, y, reg)?.value;
    let dim = lhs.len();
    let mut rhs = base;
    let mut bt = vec![0.0; dim];
    contract(&x.value_at(horizon), &plus_jump(y, horizon), &mut bt);
    let mut b0 = vec![0.0; dim];
    contract(&x.value_at(0.0), &plus_jump(y, 0.0), &mut b0);
    for i in 0..dim {
        rhs[i] += bt[i] - b0[i];
    }
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect())
}

/// `|∫_0^T x d(∫_0^· y d←z) − ∫_0^T xy d←z|` for scalar `x`.
pub fn associativity_check(x: &GridPath, y: &GridPath, z: &GridPath, reg: Regularity) -> Result<f64> {
    if z.mode().is_cadlag() {
        return Err(Error::InvalidArgument("associativity needs a càglàd integrator".into()));
    }
    let inner = backward_young(y, z, Anchor::Left, reg)?.cumulative;
    let lhs = backward_young(x, &inner, Anchor::Left, reg)?.value;
    let xy = ops::product(x, y)?;
    let rhs = backward_young(&xy, z, Anchor::Left, reg)?.value;
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `(lhs, rhs)` of the stability estimate for two backward integrals. The
/// right-hand side carries the factor `1 + C_{p,q}` from the Young–Loève
/// estimate, which the displayed inequality absorbs.
pub fn stability_bound_check(
    x1: &GridPath,
    x2: &GridPath,
    y1: &GridPath,
    y2: &GridPath,
    reg: Regularity,
) -> Result<(f64, f64)> {
    let i1 = backward_young(x1, y1, Anchor::Left, reg)?.cumulative;
    let i2 = backward_young(x2, y2, Anchor::Left, reg)?.cumulative;
    let lhs = p_var_full(&ops::sub(&i1, &i2)?, reg.p)?;
    let dx = ops::sub(x1, x2)?;
    let dy = ops::sub(y1, y2)?;
    let horizon = x1.horizon();
    let norm = |v: Vec<f64>| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let a = (p_var_full(&dx, reg.p)? + norm(dx.value_at(horizon))) * p_var_full(y1, reg.q)?;
    let b = (p_var_full(x2, reg.p)? + norm(x2.value_at(horizon))) * p_var_full(&dy, reg.q)?;
    Ok((lhs, (1.0 + reg.constant()) * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathcore::path::uniform_grid;

    fn reg() -> Regularity {
        Regularity::new(2.5, 1.5).unwrap()
    }

    fn indicator() -> GridPath {
        GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap()
    }

    fn identity(n: usize) -> GridPath {
        let g = uniform_grid(1.0, n);
        GridPath::continuous(g.clone(), g).unwrap()
    }

    #[test]
    fn constant_integrand_gives_increment() {
        let y = GridPath::continuous(vec![0.0, 0.3, 1.0], vec![1.0, -2.0, 4.0]).unwrap();
        let one = GridPath::constant(1.0, &[1.0]).unwrap();
        assert!((backward_young(&one, &y, Anchor::Left, reg()).unwrap().value[0] - 3.0).abs() < 1e-15);
        assert!((forward_young(&one, &y, reg()).unwrap().value[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_jump_backward_and_forward() {
        let x = indicator();
        assert_eq!(backward_young(&x, &x, Anchor::Left, reg()).unwrap().value, vec![1.0]);
        assert_eq!(forward_young(&x, &x, reg()).unwrap().value, vec![0.0]);
        assert_eq!(jump_correction(&x, &x, Side::Plus).unwrap(), vec![1.0]);
    }

    #[test]
    fn riemann_oracle_for_t_dt() {
        let x = identity(2000);
        let b = backward_young(&x, &x, Anchor::Left, reg()).unwrap().value[0];
        let f = forward_young(&x, &x, reg()).unwrap().value[0];
        assert!((b - 0.5).abs() < 5e-4);
        assert!((f - 0.5).abs() < 5e-4);
    }

    #[test]
    fn anchors_vanish_at_their_end() {
        let x = identity(10);
        let y = GridPath::caglad_jumps(&uniform_grid(1.0, 10), &[0.0], &[(0.3, vec![2.0])]).unwrap();
        let l = backward_young(&x, &y, Anchor::Left, reg()).unwrap();
        let r = backward_young(&x, &y, Anchor::Right, reg()).unwrap();
        assert_eq!(l.cumulative.value_at(0.0), vec![0.0]);
        assert!(r.cumulative.value_at(1.0)[0].abs() < 1e-15);
        assert!((r.cumulative.value_at(0.0)[0] - l.value[0]).abs() < 1e-15);
        assert!((l.value[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dy_plus_examples() {
        let one = GridPath::constant(1.0, &[1.0]).unwrap();
        let y = indicator();
        assert!(dy_plus_shift(&one, &y, reg()).unwrap()[0].abs() < 1e-15);
        let y0 = GridPath::caglad_jumps(&[0.0, 1.0], &[0.0], &[(0.0, vec![1.5])]).unwrap();
        let two = GridPath::constant(1.0, &[2.0]).unwrap();
        assert!(dy_plus_shift(&two, &y0, reg()).unwrap()[0].abs() < 1e-15);
        let lhs = forward_young(&two, &y0.right_limit_path().unwrap(), reg()).unwrap().value[0];
        let rhs = forward_young(&two, &y0, reg()).unwrap().value[0];
        assert!((lhs - rhs + 2.0 * 1.5).abs() < 1e-15);
        assert!(dy_plus_shift(&y, &y, reg()).is_err());
    }

    #[test]
    fn rejects_bad_regularity() {
        let x = indicator();
        assert!(matches!(
            backward_young(&x, &x, Anchor::Left, Regularity { p: 3.0, q: 2.0 }),
            Err(Error::Regularity(_))
        ));
    }

    #[test]
    fn associativity_on_smooth_paths() {
        let x = identity(2000);
        assert!(associativity_check(&x, &x, &x, reg()).unwrap() <= 1e-3);
        let one = GridPath::constant(1.0, &[1.0]).unwrap();
        assert!(associativity_check(&one, &x, &indicator(), reg()).unwrap() < 1e-15);
    }
}
