//! Flows `φ(g ΔW, x, u)` of the jump vector fields, Marcus corrections and the
//! diamond integral.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{FieldFamily, VectorFieldSpec};
use crate::pathcore::path::{GridPath, PathMode};
use crate::young::{backward_young, Anchor, Regularity, YoungIntegralResult};

/// Default RK4 substeps per unit of `|ΔW|`.
pub const DEFAULT_FLOW_STEPS: usize = 64;

#[derive(Clone, Debug)]
pub struct FlowRequest<'a> {
    pub field: &'a VectorFieldSpec,
    /// Time at which the field is frozen.
    pub time: f64,
    pub jump: &'a [f64],
    pub start: &'a [f64],
    pub duration: f64,
    pub steps: usize,
}

impl<'a> FlowRequest<'a> {
    pub fn new(field: &'a VectorFieldSpec, time: f64, jump: &'a [f64], start: &'a [f64]) -> Self {
        FlowRequest { field, time, jump, start, duration: 1.0, steps: DEFAULT_FLOW_STEPS }
    }

    pub fn duration(mut self, d: f64) -> Self {
        self.duration = d;
        self
    }

    pub fn steps(mut self, n: usize) -> Self {
        self.steps = n;
        self
    }

    fn check(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::InvalidArgument("flow needs at least one step".into()));
        }
        if self.jump.len() != self.field.e || self.start.len() != self.field.h {
            return Err(Error::Dimension(format!(
                "flow of a {}x{} field from a {}-vector along a {}-jump",
                self.field.h,
                self.field.e,
                self.start.len(),
                self.jump.len()
            )));
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::InvalidArgument(format!("flow duration {}", self.duration)));
        }
        Ok(())
    }
}

fn finite(v: Vec<f64>) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite("flow".into()))
    }
}

/// `φ(g_t ΔW, x, duration)`. Constant and linear fields use their closed
/// forms; other families use classic RK4 with `steps · duration · max(1, |σ ΔW|)`
/// substeps.
pub fn flow(req: &FlowRequest) -> Result<Vec<f64>> {
    req.check()?;
    let sigma = req.field.sigma(req.time);
    match &req.field.family {
        FieldFamily::Constant(_) => {
            let v = req.field.apply(req.time, req.start, req.jump);
            finite(req.start.iter().zip(v).map(|(x, d)| x + req.duration * d).collect())
        }
        FieldFamily::Linear(mats) => {
            let h = req.field.h;
            let mut gen = vec![0.0; h * h];
            for (k, a) in mats.iter().enumerate() {
                for (g, v) in gen.iter_mut().zip(a) {
                    *g += sigma * req.duration * req.jump[k] * v;
                }
            }
            let e = expm(&gen, h);
            finite(matvec(&e, req.start, h))
        }
        FieldFamily::SmoothBounded { .. } => {
            let size = sigma.abs() * req.jump.iter().map(|w| w * w).sum::<f64>().sqrt();
            let n = ((req.steps as f64) * req.duration * size.max(1.0)).ceil().max(1.0) as usize;
            rk4(req, n)
        }
    }
}

/// `φ` by RK4 with exactly `req.steps` substeps, whatever the family.
pub fn flow_rk4(req: &FlowRequest) -> Result<Vec<f64>> {
    req.check()?;
    rk4(req, req.steps)
}

fn rk4(req: &FlowRequest, n: usize) -> Result<Vec<f64>> {
    let h = req.field.h;
    let dt = req.duration / n as f64;
    let rhs = |y: &[f64]| req.field.apply(req.time, y, req.jump);
    let mut y = req.start.to_vec();
    let mut tmp = vec![0.0; h];
    for _ in 0..n {
        let k1 = rhs(&y);
        for i in 0..h {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        let k2 = rhs(&tmp);
        for i in 0..h {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        let k3 = rhs(&tmp);
        for i in 0..h {
            tmp[i] = y[i] + dt * k3[i];
        }
        let k4 = rhs(&tmp);
        for i in 0..h {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    finite(y)
}

/// Samples `u ↦ φ(g ΔW, x, u)` at `u = i/m`, `i = 0..=m`.
pub fn flow_trajectory(req: &FlowRequest, m: usize) -> Result<Vec<Vec<f64>>> {
    req.check()?;
    if m < 1 {
        return Err(Error::InvalidArgument("trajectory needs at least one interval".into()));
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(req.start.to_vec());
    for i in 1..=m {
        let u = i as f64 / m as f64;
        let r = FlowRequest { duration: u * req.duration, ..req.clone() };
        out.push(flow(&r)?);
    }
    Ok(out)
}

fn matvec(a: &[f64], x: &[f64], h: usize) -> Vec<f64> {
    (0..h).map(|i| (0..h).map(|j| a[i * h + j] * x[j]).sum()).collect()
}

/// Matrix exponential of a row-major `h × h` matrix.
pub fn expm(a: &[f64], h: usize) -> Vec<f64> {
    DMatrix::from_row_slice(h, h, a).exp().transpose().as_slice().to_vec()
}

/// `φ(g_t ΔW, y⁺) − y⁺ − g_t(y⁺) ΔW`.
pub fn marcus_correction(g: &VectorFieldSpec, t: f64, y_plus: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
    let phi = flow(&FlowRequest::new(g, t, dw, y_plus))?;
    let lin = g.apply(t, y_plus, dw);
    Ok(phi.iter().zip(y_plus).zip(lin).map(|((p, y), l)| p - y - l).collect())
}

/// `∫ g_r(Y_{r+}) ⋄ dW`: the backward Young integral of `g(Y⁺)` against `W`
/// plus the Marcus correction at every jump of `W` in `[0, T)`.
pub fn diamond_integral(
    g: &VectorFieldSpec,
    y: &GridPath,
    w: &GridPath,
    anchor: Anchor,
    reg: Regularity,
) -> Result<YoungIntegralResult> {
    if w.mode().is_cadlag() {
        return Err(Error::InvalidArgument("the driver must be càglàd".into()));
    }
    if y.dim() != g.h || w.dim() != g.e {
        return Err(Error::Dimension("diamond integral: field, solution and driver dimensions".into()));
    }
    if (y.horizon() - w.horizon()).abs() > 1e-12 * w.horizon().max(1.0) {
        return Err(Error::InvalidArgument("solution and driver grids do not share a horizon".into()));
    }
    let y_plus = y.right_limit_path()?;
    let h = g.h;
    let mut parts = Vec::with_capacity(h);
    for i in 0..h {
        let row = y_plus.map(g.e, |t, v| {
            let m = g.matrix(t, v);
            m[i * g.e..(i + 1) * g.e].to_vec()
        })?;
        parts.push(backward_young(&row, w, Anchor::Left, reg)?);
    }
    let grid = parts[0].cumulative.times().to_vec();
    let n = grid.len();
    let mut left = vec![0.0; n * h];
    let mut right = vec![0.0; n * h];
    let mut value = vec![0.0; h];
    let mut bound: f64 = 0.0;
    for (i, part) in parts.iter().enumerate() {
        for k in 0..n {
            left[k * h + i] = part.cumulative.left(k)[0];
            right[k * h + i] = part.cumulative.right(k)[0];
        }
        value[i] = part.value[0];
        bound = bound.max(part.remainder_bound);
    }
    // corrections accumulate from left to right at the driver's jump times
    let mut extra = vec![0.0; h];
    for k in 0..n {
        for i in 0..h {
            left[k * h + i] += extra[i];
        }
        let t = grid[k];
        if k < n - 1 {
            let dw: Vec<f64> = w.right_at(t).iter().zip(w.left_at(t)).map(|(a, b)| a - b).collect();
            if dw.iter().any(|v| *v != 0.0) {
                let c = marcus_correction(g, t, &y_plus.value_at(t), &dw)?;
                for i in 0..h {
                    extra[i] += c[i];
                }
            }
        }
        for i in 0..h {
            right[k * h + i] += extra[i];
        }
    }
    for i in 0..h {
        value[i] += extra[i];
    }
    if anchor == Anchor::Right {
        for (j, v) in left.iter_mut().enumerate() {
            *v = value[j % h] - *v;
        }
        for (j, v) in right.iter_mut().enumerate() {
            *v = value[j % h] - *v;
        }
    }
    let mode = if left == right { PathMode::ContinuousLinear } else { PathMode::CagladLinear };
    Ok(YoungIntegralResult {
        cumulative: GridPath::from_flat(grid, h, left, right, mode)?,
        value,
        remainder_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_jump_is_stationary() {
        let g = VectorFieldSpec::smooth_bounded(1, 1, 1.0, 2.0, 0.0);
        assert_eq!(flow(&FlowRequest::new(&g, 0.0, &[0.0], &[0.7])).unwrap(), vec![0.7]);
    }

    #[test]
    fn linear_closed_form() {
        let g = VectorFieldSpec::scalar_linear(1.0);
        let y = flow(&FlowRequest::new(&g, 0.0, &[2f64.ln()], &[1.0])).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-14);
        let r = flow_rk4(&FlowRequest::new(&g, 0.0, &[2f64.ln()], &[1.0]).steps(64)).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_field_is_linear_in_jump() {
        let g = VectorFieldSpec::scalar_constant(3.0);
        assert_eq!(flow(&FlowRequest::new(&g, 0.0, &[0.5], &[0.0])).unwrap(), vec![1.5]);
        assert_eq!(marcus_correction(&g, 0.0, &[2.0], &[0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn linear_correction_closed_form() {
        let g = VectorFieldSpec::scalar_linear(1.0);
        let (w, y) = (0.3f64, 1.7f64);
        let c = marcus_correction(&g, 0.0, &[y], &[w]).unwrap()[0];
        assert!((c - y * (w.exp() - 1.0 - w)).abs() < 1e-14);
    }

    #[test]
    fn expm_of_rotation() {
        let th = 0.9f64;
        let e = expm(&[0.0, -th, th, 0.0], 2);
        let want = [th.cos(), -th.sin(), th.sin(), th.cos()];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn diamond_with_linear_field_single_jump() {
        let g = VectorFieldSpec::scalar_linear(1.0);
        let w = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![0.4])]).unwrap();
        let y = GridPath::constant(1.0, &[2.0]).unwrap();
        let reg = Regularity::new(3.0, 1.0).unwrap();
        let d = diamond_integral(&g, &y, &w, Anchor::Right, reg).unwrap();
        let want = 2.0 * 0.4 + 2.0 * (0.4f64.exp() - 1.0 - 0.4);
        assert!((d.value[0] - want).abs() < 1e-14);
        assert!((d.cumulative.value_at(0.5)[0] - want).abs() < 1e-14);
        assert!(d.cumulative.value_at(0.75)[0].abs() < 1e-14);
    }
}
