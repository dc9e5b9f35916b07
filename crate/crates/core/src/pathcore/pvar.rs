//! Exact discrete p-variation.
//!
//! A grid path traces a polyline through its one-sided limits, so the
//! supremum over partitions is attained on the vertex sequence
//! `L_0, R_0, L_1, R_1, …` restricted to the window. The supremum over vertex
//! subsequences is computed by the `O(n²)` recursion
//! `V(j) = max_{i<j} V(i) + |x_j − x_i|^p`.

use super::path::{dist, GridPath, Locus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// `[s, t]`
    Closed,
    /// `(s, t]`: the jump at `s` is not part of the window.
    OpenLeft,
    /// `[s, t)`: the jump at `t` is not part of the window.
    OpenRight,
}

#[inline]
pub(crate) fn pow_p(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

/// p-variation of a sequence under the metric `dist`; `p = ∞` gives the
/// oscillation `max |x_j − x_i|`.
pub fn p_var_seq<T, F>(v: &[T], p: f64, dist: F) -> f64
where
    F: Fn(&T, &T) -> f64,
{
    if v.len() < 2 {
        return 0.0;
    }
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                m = m.max(dist(&v[i], &v[j]));
            }
        }
        return m;
    }
    let mut run = vec![0.0f64; v.len()];
    for j in 1..v.len() {
        let mut best = 0.0f64;
        for i in 0..j {
            let cand = run[i] + pow_p(dist(&v[i], &v[j]), p);
            if cand > best {
                best = cand;
            }
        }
        run[j] = best;
    }
    run[v.len() - 1].powf(1.0 / p)
}

/// p-variation of a scalar sequence.
pub fn p_var_scalar(v: &[f64], p: f64) -> f64 {
    p_var_seq(v, p, |a, b| (a - b).abs())
}

/// Incremental p-variation of a growing sequence of vectors.
#[derive(Clone, Debug)]
pub struct PVarAccumulator {
    p: f64,
    dim: usize,
    points: Vec<f64>,
    run: Vec<f64>,
}

impl PVarAccumulator {
    pub fn new(p: f64, dim: usize) -> Self {
        PVarAccumulator {
            p,
            dim,
            points: Vec::new(),
            run: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.run.len()
    }

    pub fn is_empty(&self) -> bool {
        self.run.is_empty()
    }

    pub fn push(&mut self, x: &[f64]) {
        let n = self.run.len();
        let mut best = 0.0f64;
        for i in 0..n {
            let d = dist(&self.points[i * self.dim..(i + 1) * self.dim], x);
            let cand = if self.p.is_infinite() {
                self.run[i].max(d)
            } else {
                self.run[i] + pow_p(d, self.p)
            };
            if cand > best {
                best = cand;
            }
        }
        self.points.extend_from_slice(x);
        self.run.push(best);
    }

    pub fn pop(&mut self) {
        if self.run.pop().is_some() {
            self.points.truncate(self.run.len() * self.dim);
        }
    }

    /// p-variation of the current sequence.
    pub fn value(&self) -> f64 {
        match self.run.last() {
            None => 0.0,
            Some(&v) if self.p.is_infinite() => v,
            Some(&v) => v.powf(1.0 / self.p),
        }
    }
}

fn check_window(x: &GridPath, s: f64, t: f64) -> Result<()> {
    let horizon = x.horizon();
    let tol = 1e-12 * horizon.max(1.0);
    if !(s >= -tol && t <= horizon + tol && s <= t) || !s.is_finite() || !t.is_finite() {
        return Err(Error::Window { s, t, horizon });
    }
    Ok(())
}

/// Polyline vertices of `x` inside the window, in time order.
pub fn window_vertices(x: &GridPath, s: f64, t: f64, conv: Endpoint) -> Result<Vec<Vec<f64>>> {
    check_window(x, s, t)?;
    let cadlag = x.mode().is_cadlag();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |v: &[f64], out: &mut Vec<Vec<f64>>| {
        if out.last().map(|l: &Vec<f64>| l.as_slice() != v).unwrap_or(true) {
            out.push(v.to_vec());
        }
    };
    if s == t {
        push(&x.value_at(s), &mut out);
        return Ok(out);
    }
    let (first_interior, last_interior) = {
        let start = match x.locate(s) {
            Locus::Node(i) => {
                let include_left = !cadlag && conv != Endpoint::OpenLeft;
                if include_left {
                    push(x.left(i), &mut out);
                }
                push(x.right(i), &mut out);
                i + 1
            }
            Locus::Cell(i, th) => {
                let v: Vec<f64> = x.right(i).iter().zip(x.left(i + 1)).map(|(a, b)| a + th * (b - a)).collect();
                push(&v, &mut out);
                i + 1
            }
        };
        let end = match x.locate(t) {
            Locus::Node(j) => j,
            Locus::Cell(j, _) => j + 1,
        };
        (start, end)
    };
    for k in first_interior..last_interior {
        if x.times()[k] >= t {
            break;
        }
        push(x.left(k), &mut out);
        push(x.right(k), &mut out);
    }
    match x.locate(t) {
        Locus::Node(j) => {
            push(x.left(j), &mut out);
            if cadlag && conv != Endpoint::OpenRight {
                push(x.right(j), &mut out);
            }
        }
        Locus::Cell(j, th) => {
            let v: Vec<f64> = x.right(j).iter().zip(x.left(j + 1)).map(|(a, b)| a + th * (b - a)).collect();
            push(&v, &mut out);
        }
    }
    Ok(out)
}

/// `‖x‖_{p;window}`, the exact supremum over partitions with points in the grid.
pub fn p_variation(x: &GridPath, p: f64, s: f64, t: f64, conv: Endpoint) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Exponent(p));
    }
    let verts = window_vertices(x, s, t, conv)?;
    Ok(p_var_seq(&verts, p, |a, b| dist(a, b)))
}

/// `‖x‖_{p;[0,T]}`.
pub fn p_var_full(x: &GridPath, p: f64) -> Result<f64> {
    p_variation(x, p, 0.0, x.horizon(), Endpoint::Closed)
}

/// Control `ω(s, t) = ‖x‖^p_{p;[s,t]}`.
pub fn control_eval(x: &GridPath, p: f64, s: f64, t: f64) -> Result<f64> {
    if s > t {
        return Err(Error::Window { s, t, horizon: x.horizon() });
    }
    if s == t {
        return Ok(0.0);
    }
    Ok(pow_p(p_variation(x, p, s, t, Endpoint::Closed)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zigzag() -> GridPath {
        GridPath::continuous(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn monotone_total_rise() {
        let x = GridPath::continuous(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 2.0]).unwrap();
        assert!((p_var_full(&x, 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_path_is_zero() {
        let x = GridPath::constant(1.0, &[3.0]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(p_var_full(&x, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn zigzag_two_variation() {
        let v = p_var_full(&zigzag(), 2.0).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zigzag_control_split() {
        let x = zigzag();
        assert!((control_eval(&x, 2.0, 0.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        let a = control_eval(&x, 2.0, 0.0, 1.5).unwrap();
        let b = control_eval(&x, 2.0, 1.5, 3.0).unwrap();
        assert!((a - 1.25).abs() < 1e-14 && (b - 1.25).abs() < 1e-14);
        assert!(a + b <= 3.0);
        assert_eq!(control_eval(&x, 2.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(control_eval(&x, 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn open_left_drops_jump_at_start() {
        let x = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap();
        assert_eq!(p_variation(&x, 1.0, 0.5, 1.0, Endpoint::Closed).unwrap(), 1.0);
        assert_eq!(p_variation(&x, 1.0, 0.5, 1.0, Endpoint::OpenLeft).unwrap(), 0.0);
        assert_eq!(p_variation(&x, 1.0, 0.0, 0.5, Endpoint::Closed).unwrap(), 0.0);
    }

    #[test]
    fn cadlag_open_right_drops_jump_at_end() {
        let x = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])])
            .unwrap()
            .right_limit_path()
            .unwrap();
        assert_eq!(p_variation(&x, 1.0, 0.0, 0.5, Endpoint::Closed).unwrap(), 1.0);
        assert_eq!(p_variation(&x, 1.0, 0.0, 0.5, Endpoint::OpenRight).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let x = zigzag();
        assert!(matches!(p_variation(&x, 0.5, 0.0, 1.0, Endpoint::Closed), Err(Error::Exponent(_))));
        assert!(matches!(p_variation(&x, 1.0, 0.0, 4.0, Endpoint::Closed), Err(Error::Window { .. })));
    }

    #[test]
    fn accumulator_matches_batch() {
        let v = [0.0, 1.0, -0.5, 0.25, 2.0, 1.5];
        let mut acc = PVarAccumulator::new(1.7, 1);
        for x in v {
            acc.push(&[x]);
        }
        assert!((acc.value() - p_var_scalar(&v, 1.7)).abs() < 1e-13);
        acc.pop();
        assert!((acc.value() - p_var_scalar(&v[..5], 1.7)).abs() < 1e-13);
    }
}
