//! Problem data and its standing assumptions.

use crate::error::{Error, Result};
use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
use crate::pathcore::path::GridPath;
use crate::pathcore::pvar::p_var_full;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpMode {
    /// `Y_t = Y_{t+} + g_t(Y_{t+}) ΔW_t`.
    Forward,
    /// `Y_t = φ(g_t ΔW_t, Y_{t+})`.
    Marcus,
}

impl JumpMode {
    pub fn name(self) -> &'static str {
        match self {
            JumpMode::Forward => "forward",
            JumpMode::Marcus => "marcus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "forward" => Ok(JumpMode::Forward),
            "marcus" => Ok(JumpMode::Marcus),
            other => Err(Error::Parse(format!("unknown jump mode '{other}'"))),
        }
    }
}

/// How the continuous part of the driver enters one solver step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuousScheme {
    /// Right-endpoint Young sum `g(Y_{t_{k+1}}) ΔW`.
    Young,
    /// Exact flow `φ(g ΔW, Y_{t_{k+1}}) − Y_{t_{k+1}}` of the step increment.
    Flow,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub horizon: f64,
    pub xi: TerminalSpec,
    pub f: GeneratorSpec,
    pub g: VectorFieldSpec,
    /// Càglàd driver of finite q-variation.
    pub w: GridPath,
    /// Continuous nondecreasing clock with `c_0 = 0`.
    pub clock: GridPath,
    pub mode: JumpMode,
    pub p: f64,
    pub q: f64,
    pub scheme: ContinuousScheme,
}

impl Problem {
    /// Problem with the identity clock, `p = 3`, `q = 1.2` and Young sums.
    pub fn new(
        horizon: f64,
        xi: TerminalSpec,
        f: GeneratorSpec,
        g: VectorFieldSpec,
        w: GridPath,
        mode: JumpMode,
    ) -> Result<Self> {
        let p = Problem {
            horizon,
            xi,
            f,
            g,
            w,
            clock: GridPath::identity(horizon)?,
            mode,
            p: 3.0,
            q: 1.2,
            scheme: ContinuousScheme::Young,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn h(&self) -> usize {
        self.g.h
    }

    pub fn e(&self) -> usize {
        self.g.e
    }

    pub fn c_f(&self) -> f64 {
        self.f.c_f(self.h())
    }

    pub fn c_g(&self) -> f64 {
        self.g.c_g()
    }

    pub fn c_total(&self) -> f64 {
        self.clock.value_at(self.horizon)[0]
    }

    pub fn w_qvar(&self) -> Result<f64> {
        p_var_full(&self.w, self.q)
    }

    /// `sup |ξ|` over the terminal values the tree can reach, or the declared
    /// bound of the family when that is smaller to compute.
    pub fn xi_sup(&self, b_max: f64) -> f64 {
        use TerminalSpec::*;
        let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match &self.xi {
            Constant(v) => norm(v.clone()),
            BrownianLinear { h, a, b } => (a.abs() + b.abs() * b_max) * (*h as f64).sqrt(),
            BrownianSin { h, a, amplitude, .. } => (a.abs() + amplitude.abs()) * (*h as f64).sqrt(),
        }
    }

    /// Checks dimensions, exponents and the shape of driver and clock.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Assumption(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.q >= 1.0 && self.q < 2.0) {
            return Err(Error::Assumption(format!("q = {} must lie in [1, 2)", self.q)));
        }
        if !(self.p >= 2.0) {
            return Err(Error::Assumption(format!("p = {} must be at least 2", self.p)));
        }
        if !(1.0 / self.p + 1.0 / self.q > 1.0) {
            return Err(Error::Regularity(1.0 / self.p + 1.0 / self.q));
        }
        if self.xi.h() != self.g.h {
            return Err(Error::Dimension(format!("terminal has dim {}, field has h = {}", self.xi.h(), self.g.h)));
        }
        if self.w.dim() != self.g.e {
            return Err(Error::Dimension(format!("driver has dim {}, field has e = {}", self.w.dim(), self.g.e)));
        }
        if self.w.mode().is_cadlag() {
            return Err(Error::Assumption("the driver must be càglàd".into()));
        }
        let tol = 1e-12 * self.horizon.max(1.0);
        for (name, path) in [("driver", &self.w), ("clock", &self.clock)] {
            if (path.horizon() - self.horizon).abs() > tol {
                return Err(Error::Assumption(format!("{name} horizon {} differs from {}", path.horizon(), self.horizon)));
            }
        }
        let c = &self.clock;
        if c.dim() != 1 || !c.mode().is_continuous() {
            return Err(Error::Assumption("the clock must be a continuous scalar path".into()));
        }
        if c.left(0)[0].abs() > 1e-15 {
            return Err(Error::Assumption("the clock must start at 0".into()));
        }
        if (1..c.len()).any(|i| c.left(i)[0] < c.left(i - 1)[0]) {
            return Err(Error::Assumption("the clock must be nondecreasing".into()));
        }
        if !(self.c_total() > 0.0) {
            return Err(Error::Assumption("the clock must increase".into()));
        }
        if !(self.c_g().is_finite() && self.c_f().is_finite()) {
            return Err(Error::Assumption("field and generator bounds must be finite".into()));
        }
        Ok(())
    }
}
