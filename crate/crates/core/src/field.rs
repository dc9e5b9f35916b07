//! Builtin families for the vector field `g(t, y)`, the generator `f(t, y, z)`
//! and the terminal condition `ξ(B_T)`, each with a declared bound.

use crate::error::{Error, Result};

/// Continuous time modulation `σ(t) = 1 + amplitude · sin(frequency · t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulation {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Modulation {
    pub fn eval(&self, t: f64) -> f64 {
        1.0 + self.amplitude * (self.frequency * t).sin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldFamily {
    /// `g(y) = G`, an `h × e` matrix stored row-major.
    Constant(Vec<f64>),
    /// `g(y) w = Σ_k w_k A_k y` with one `h × h` matrix per driver component.
    Linear(Vec<Vec<f64>>),
    /// `g_{ik}(y) = amplitude · sin(omega · y_i + phase · k)`.
    SmoothBounded { amplitude: f64, omega: f64, phase: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldSpec {
    pub h: usize,
    pub e: usize,
    pub family: FieldFamily,
    pub modulation: Option<Modulation>,
}

fn frob(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl VectorFieldSpec {
    pub fn constant(h: usize, e: usize, g: Vec<f64>) -> Result<Self> {
        if g.len() != h * e {
            return Err(Error::Dimension(format!("constant field needs {} entries", h * e)));
        }
        Ok(VectorFieldSpec { h, e, family: FieldFamily::Constant(g), modulation: None })
    }

    pub fn scalar_constant(g: f64) -> Self {
        VectorFieldSpec { h: 1, e: 1, family: FieldFamily::Constant(vec![g]), modulation: None }
    }

    pub fn linear(h: usize, mats: Vec<Vec<f64>>) -> Result<Self> {
        if mats.is_empty() || mats.iter().any(|m| m.len() != h * h) {
            return Err(Error::Dimension(format!("linear field needs h×h = {} entries per component", h * h)));
        }
        Ok(VectorFieldSpec { h, e: mats.len(), family: FieldFamily::Linear(mats), modulation: None })
    }

    /// Scalar `g(y) = b · y`.
    pub fn scalar_linear(b: f64) -> Self {
        VectorFieldSpec { h: 1, e: 1, family: FieldFamily::Linear(vec![vec![b]]), modulation: None }
    }

    pub fn smooth_bounded(h: usize, e: usize, amplitude: f64, omega: f64, phase: f64) -> Self {
        VectorFieldSpec { h, e, family: FieldFamily::SmoothBounded { amplitude, omega, phase }, modulation: None }
    }

    pub fn zero(h: usize, e: usize) -> Self {
        VectorFieldSpec { h, e, family: FieldFamily::Constant(vec![0.0; h * e]), modulation: None }
    }

    pub fn with_modulation(mut self, m: Modulation) -> Self {
        self.modulation = Some(m);
        self
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.modulation.map(|m| m.eval(t)).unwrap_or(1.0)
    }

    /// Declared bound on `|g|`, `|Dg|`, `|D²g|` and the time seminorms. For the
    /// linear family this is the Lipschitz constant, which is what the
    /// stability and Picard estimates use on bounded solutions.
    pub fn c_g(&self) -> f64 {
        let smod = self.modulation.map(|m| 1.0 + m.amplitude.abs() * (1.0 + m.frequency.abs())).unwrap_or(1.0);
        let base = match &self.family {
            FieldFamily::Constant(g) => frob(g),
            FieldFamily::Linear(mats) => mats.iter().map(|m| frob(m)).sum(),
            FieldFamily::SmoothBounded { amplitude, omega, .. } => {
                amplitude.abs() * (1.0 + omega.abs() + omega * omega) * ((self.h * self.e) as f64).sqrt()
            }
        };
        base * smod
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            FieldFamily::Constant(g) => g.iter().all(|v| *v == 0.0),
            FieldFamily::Linear(m) => m.iter().all(|a| a.iter().all(|v| *v == 0.0)),
            FieldFamily::SmoothBounded { amplitude, .. } => *amplitude == 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, FieldFamily::Constant(_))
    }

    /// `g(t, y) w`, the field applied to a driver increment.
    pub fn apply(&self, t: f64, y: &[f64], w: &[f64]) -> Vec<f64> {
        let s = self.sigma(t);
        let mut out = vec![0.0; self.h];
        self.apply_base(y, w, &mut out);
        if s != 1.0 {
            for o in out.iter_mut() {
                *o *= s;
            }
        }
        out
    }

    /// Time-free part `g(y) w` written into `out`.
    pub fn apply_base(&self, y: &[f64], w: &[f64], out: &mut [f64]) {
        let h = self.h;
        match &self.family {
            FieldFamily::Constant(g) => {
                for i in 0..h {
                    out[i] = (0..self.e).map(|k| g[i * self.e + k] * w[k]).sum();
                }
            }
            FieldFamily::Linear(mats) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (k, a) in mats.iter().enumerate() {
                    if w[k] == 0.0 {
                        continue;
                    }
                    for i in 0..h {
                        let row: f64 = (0..h).map(|j| a[i * h + j] * y[j]).sum();
                        out[i] += w[k] * row;
                    }
                }
            }
            FieldFamily::SmoothBounded { amplitude, omega, phase } => {
                for i in 0..h {
                    out[i] = (0..self.e)
                        .map(|k| amplitude * (omega * y[i] + phase * k as f64).sin() * w[k])
                        .sum();
                }
            }
        }
    }

    /// `g(t, y)` as a row-major `h × e` matrix.
    pub fn matrix(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.h * self.e];
        for k in 0..self.e {
            let mut unit = vec![0.0; self.e];
            unit[k] = 1.0;
            let col = self.apply(t, y, &unit);
            for i in 0..self.h {
                m[i * self.e + k] = col[i];
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Zero,
    /// `f(y) = k · y`.
    LinearInY(f64),
    /// `f(y, z) = a + b · y + c · z`, componentwise.
    Affine { a: f64, b: f64, c: f64 },
}

impl GeneratorSpec {
    pub fn eval(&self, _t: f64, y: &[f64], z: &[f64]) -> Vec<f64> {
        match self {
            GeneratorSpec::Zero => vec![0.0; y.len()],
            GeneratorSpec::LinearInY(k) => y.iter().map(|v| k * v).collect(),
            GeneratorSpec::Affine { a, b, c } => y.iter().zip(z).map(|(yv, zv)| a + b * yv + c * zv).collect(),
        }
    }

    /// Declared `C_f` for dimension `h`: dominates `|f(t,0,0)|` and the
    /// Lipschitz constant in `(y, z)`.
    pub fn c_f(&self, h: usize) -> f64 {
        match self {
            GeneratorSpec::Zero => 0.0,
            GeneratorSpec::LinearInY(k) => k.abs(),
            GeneratorSpec::Affine { a, b, c } => (a.abs() * (h as f64).sqrt()).max(b.abs()).max(c.abs()),
        }
    }

    pub fn depends_on_z(&self) -> bool {
        matches!(self, GeneratorSpec::Affine { c, .. } if *c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            GeneratorSpec::Zero => true,
            GeneratorSpec::LinearInY(k) => *k == 0.0,
            GeneratorSpec::Affine { a, b, c } => *a == 0.0 && *b == 0.0 && *c == 0.0,
        }
    }
}

/// Terminal condition as a function of the terminal Brownian value.
#[derive(Clone, Debug, PartialEq)]
pub enum TerminalSpec {
    Constant(Vec<f64>),
    /// `ξ = a + b · B_T` in every component.
    BrownianLinear { h: usize, a: f64, b: f64 },
    /// `ξ = a + amplitude · sin(frequency · B_T)` in every component.
    BrownianSin { h: usize, a: f64, amplitude: f64, frequency: f64 },
}

impl TerminalSpec {
    pub fn h(&self) -> usize {
        match self {
            TerminalSpec::Constant(v) => v.len(),
            TerminalSpec::BrownianLinear { h, .. } | TerminalSpec::BrownianSin { h, .. } => *h,
        }
    }

    pub fn eval(&self, b: f64) -> Vec<f64> {
        match self {
            TerminalSpec::Constant(v) => v.clone(),
            TerminalSpec::BrownianLinear { h, a, b: slope } => vec![a + slope * b; *h],
            TerminalSpec::BrownianSin { h, a, amplitude, frequency } => vec![a + amplitude * (frequency * b).sin(); *h],
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            TerminalSpec::Constant(_) => true,
            TerminalSpec::BrownianLinear { b, .. } => *b == 0.0,
            TerminalSpec::BrownianSin { amplitude, frequency, .. } => *amplitude == 0.0 || *frequency == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_applies_matrix() {
        let g = VectorFieldSpec::linear(2, vec![vec![1.0, 2.0, 0.0, 1.0]]).unwrap();
        assert_eq!(g.apply(0.0, &[1.0, 1.0], &[2.0]), vec![6.0, 2.0]);
    }

    #[test]
    fn smooth_bounded_respects_declared_bound() {
        let g = VectorFieldSpec::smooth_bounded(2, 2, 0.7, 1.3, 0.4);
        let cg = g.c_g();
        for y in [-3.0, 0.0, 1.7] {
            let m = g.matrix(0.0, &[y, -y]);
            assert!(frob(&m) <= cg);
        }
    }

    #[test]
    fn affine_generator_bound() {
        let f = GeneratorSpec::Affine { a: 0.5, b: -2.0, c: 0.3 };
        assert_eq!(f.c_f(1), 2.0);
        assert_eq!(f.eval(0.0, &[1.0], &[1.0]), vec![0.5 - 2.0 + 0.3]);
    }
}
