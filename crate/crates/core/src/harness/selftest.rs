//! Quick end-to-end checks against a table of reference constants.

use crate::bdsde::{solve_bdsde, BdsdeRun, SamplePlan};
use crate::decorated::{alpha_p_upper, embed_iota, embed_jmath};
use crate::drivers::DriverSampler;
use crate::error::Result;
use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
use crate::harness::ito::{ito_residual, ItoFunction};
use crate::marcus::{flow, FlowRequest};
use crate::pathcore::path::uniform_grid;
use crate::pathcore::{p_var_full, GridPath, PathMode};
use crate::rbsde::{solve_rbsde, JumpMode, Problem, SolverConfig};
use crate::young::{backward_young, Anchor, Regularity};

/// Reference values the self test compares against.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantTable {
    /// 2-variation of `0, 1, 0, 1`.
    pub pvar_alternating: f64,
    /// `∫_0^1 t d←t`.
    pub young_identity: f64,
    /// Marcus flow of `g(y) = y` over a jump `ln 2` from 1.
    pub marcus_linear: f64,
    /// `Y_0` of the Marcus problem `g(y) = y`, jump `ln 2`, `ξ = 1`.
    pub marcus_y0: f64,
    /// `Y_0` of the forward problem with the same data.
    pub forward_y0: f64,
    /// `Y_0` of `f(y) = −y`, `ξ = 1`, `T = 1`.
    pub drift_y0: f64,
    /// `α_∞` of ι-embedded unit steps at `0.5` and `0.55`.
    pub j1_shift: f64,
    /// `α_∞` between ι and ȷ embeddings of a unit step.
    pub step_vs_ramp: f64,
    /// Two-point annealed mean for jumps `±0.3`.
    pub two_point_mean: f64,
}

impl Default for ConstantTable {
    fn default() -> Self {
        ConstantTable {
            pvar_alternating: 3f64.sqrt(),
            young_identity: 0.5,
            marcus_linear: 2.0,
            marcus_y0: 2.0,
            forward_y0: 1.0 + 2f64.ln(),
            drift_y0: (-1f64).exp(),
            j1_shift: 0.05,
            step_vs_ramp: 0.5,
            two_point_mean: 0.3f64.cosh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestReport {
    pub checks: Vec<CheckResult>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn compare(name: &'static str, got: Result<f64>, want: f64, tol: f64) -> CheckResult {
    match got {
        Ok(v) => CheckResult {
            name,
            passed: (v - want).abs() <= tol,
            detail: format!("got {v:.12}, want {want:.12} ± {tol:e}"),
        },
        Err(e) => CheckResult { name, passed: false, detail: e.to_string() },
    }
}

fn step(t: f64, a: f64) -> Result<GridPath> {
    GridPath::caglad_jumps(&[0.0, t, 1.0], &[0.0], &[(t, vec![a])])
}

fn linear_problem(mode: JumpMode) -> Result<Problem> {
    Problem::new(
        1.0,
        TerminalSpec::Constant(vec![1.0]),
        GeneratorSpec::Zero,
        VectorFieldSpec::scalar_linear(1.0),
        step(0.5, 2f64.ln())?,
        mode,
    )
}

/// Runs every check against `table`.
pub fn selftest(table: &ConstantTable) -> SelfTestReport {
    let mut checks = Vec::new();
    checks.push(compare(
        "pvar-alternating",
        GridPath::continuous(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 1.0]).and_then(|x| p_var_full(&x, 2.0)),
        table.pvar_alternating,
        1e-12,
    ));
    checks.push(compare(
        "young-identity",
        (|| {
            let t = GridPath::continuous(uniform_grid(1.0, 2000), uniform_grid(1.0, 2000))?;
            Ok(backward_young(&t, &t, Anchor::Left, Regularity::new(1.0, 1.0)?)?.value[0])
        })(),
        table.young_identity,
        5e-4,
    ));
    checks.push(compare(
        "marcus-flow",
        flow(&FlowRequest::new(&VectorFieldSpec::scalar_linear(1.0), 0.0, &[2f64.ln()], &[1.0])).map(|v| v[0]),
        table.marcus_linear,
        1e-9,
    ));
    let cfg = SolverConfig::with_steps(20);
    checks.push(compare(
        "solver-marcus",
        linear_problem(JumpMode::Marcus).and_then(|p| solve_rbsde(&p, &cfg)).map(|s| s.y0()[0]),
        table.marcus_y0,
        1e-10,
    ));
    checks.push(compare(
        "solver-forward",
        linear_problem(JumpMode::Forward).and_then(|p| solve_rbsde(&p, &cfg)).map(|s| s.y0()[0]),
        table.forward_y0,
        1e-12,
    ));
    checks.push(compare(
        "solver-drift",
        Problem::new(
            1.0,
            TerminalSpec::Constant(vec![1.0]),
            GeneratorSpec::LinearInY(-1.0),
            VectorFieldSpec::zero(1, 1),
            GridPath::constant(1.0, &[0.0]).unwrap(),
            JumpMode::Forward,
        )
        .and_then(|p| solve_rbsde(&p, &SolverConfig::with_steps(200)))
        .map(|s| s.y0()[0]),
        table.drift_y0,
        1e-3,
    ));
    checks.push(compare(
        "metric-j1",
        (|| {
            let a = embed_iota(&step(0.5, 1.0)?)?;
            let b = embed_iota(&step(0.55, 1.0)?)?;
            Ok(alpha_p_upper(&a, &b, f64::INFINITY, &[0.01], 4)?.value)
        })(),
        table.j1_shift,
        1e-10,
    ));
    checks.push(compare(
        "metric-step-vs-ramp",
        (|| {
            let a = embed_iota(&step(0.5, 1.0)?)?;
            let b = embed_jmath(&step(0.5, 1.0)?)?.resampled(16);
            Ok(alpha_p_upper(&a, &b, f64::INFINITY, &[0.01], 4)?.value)
        })(),
        table.step_vs_ramp,
        1e-6,
    ));
    checks.push(compare(
        "bdsde-two-point",
        (|| {
            let mut run =
                BdsdeRun::new(linear_problem(JumpMode::Marcus)?, DriverSampler::Choice(vec![step(0.5, 0.3)?, step(0.5, -0.3)?]), 2, 0);
            run.plan = SamplePlan::Exhaustive;
            run.solver = SolverConfig::with_steps(10);
            Ok(solve_bdsde(&run)?.aggregates.mean_y0[0])
        })(),
        table.two_point_mean,
        1e-9,
    ));
    checks.push(compare(
        "ito-pure-jump",
        (|| {
            let a = GridPath::caglad_jumps(&[0.0, 1.0], &[0.2], &[(0.3, vec![1.0]), (0.6, vec![-0.7])])?;
            let m = GridPath::scalar(vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0], PathMode::ContinuousLinear)?;
            ito_residual(ItoFunction::Square, &a, &m)
        })(),
        0.0,
        1e-12,
    ));
    SelfTestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_passes() {
        let r = selftest(&ConstantTable::default());
        assert!(r.passed(), "{:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn corrupted_table_names_the_check() {
        let table = ConstantTable { forward_y0: 2.0, ..ConstantTable::default() };
        assert_eq!(selftest(&table).failures(), vec!["solver-forward"]);
    }
}
