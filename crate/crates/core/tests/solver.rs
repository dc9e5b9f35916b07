use rbsde_core::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
use rbsde_core::pathcore::GridPath;
use rbsde_core::rbsde::{
    picard_envelope_check, residual_check, solve_rbsde, time_stretched_solve, JumpMode, Problem, SolverConfig, TreeModel,
};

fn unit_step(size: f64) -> GridPath {
    GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![size])]).unwrap()
}

fn problem(xi: TerminalSpec, f: GeneratorSpec, g: VectorFieldSpec, w: GridPath, mode: JumpMode) -> Problem {
    Problem::new(1.0, xi, f, g, w, mode).unwrap()
}

fn max_dev(sol: &rbsde_core::rbsde::Solution, k: usize, left: bool, target: f64) -> f64 {
    (0..sol.tree.nodes(k))
        .map(|j| {
            let y = if left { sol.fields.y_left(k, j) } else { sol.fields.y_right(k, j) };
            (y[0] - target).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn zero_data_keeps_terminal_value() {
    let p = problem(
        TerminalSpec::Constant(vec![5.0]),
        GeneratorSpec::Zero,
        VectorFieldSpec::zero(1, 1),
        GridPath::constant(1.0, &[0.0]).unwrap(),
        JumpMode::Forward,
    );
    let s = solve_rbsde(&p, &SolverConfig::with_steps(20)).unwrap();
    for k in 0..=20 {
        assert_eq!(max_dev(&s, k, true, 5.0), 0.0);
    }
    assert!(s.fields.z.iter().flatten().all(|z| *z == 0.0));
}

#[test]
fn constant_field_single_jump_both_modes() {
    for mode in [JumpMode::Forward, JumpMode::Marcus] {
        let p = problem(
            TerminalSpec::Constant(vec![0.0]),
            GeneratorSpec::Zero,
            VectorFieldSpec::scalar_constant(2.0),
            unit_step(1.0),
            mode,
        );
        let s = solve_rbsde(&p, &SolverConfig::with_steps(40)).unwrap();
        for k in 0..=40 {
            let t = s.tree.times[k];
            let want = if t <= 0.5 { 2.0 } else { 0.0 };
            assert!(max_dev(&s, k, true, want) < 1e-12, "{mode:?} t={t}");
        }
        assert!(s.fields.z.iter().flatten().all(|z| z.abs() < 1e-12));
        assert!(residual_check(&p, &s).unwrap() <= 1e-12);
    }
}

#[test]
fn linear_field_marcus_and_forward() {
    let w = unit_step(2f64.ln());
    let pm = problem(
        TerminalSpec::Constant(vec![1.0]),
        GeneratorSpec::Zero,
        VectorFieldSpec::scalar_linear(1.0),
        w.clone(),
        JumpMode::Marcus,
    );
    let s = solve_rbsde(&pm, &SolverConfig::with_steps(40)).unwrap();
    assert!((s.y0()[0] - 2.0).abs() < 1e-10);
    assert!(max_dev(&s, 30, true, 1.0) < 1e-12);
    let pf = problem(
        TerminalSpec::Constant(vec![1.0]),
        GeneratorSpec::Zero,
        VectorFieldSpec::scalar_linear(1.0),
        w,
        JumpMode::Forward,
    );
    let s = solve_rbsde(&pf, &SolverConfig::with_steps(40)).unwrap();
    assert!((s.y0()[0] - (1.0 + 2f64.ln())).abs() < 1e-12);
}

#[test]
fn drift_only_matches_exponential() {
    let p = problem(
        TerminalSpec::Constant(vec![1.0]),
        GeneratorSpec::LinearInY(-1.0),
        VectorFieldSpec::zero(1, 1),
        GridPath::constant(1.0, &[0.0]).unwrap(),
        JumpMode::Forward,
    );
    let s = solve_rbsde(&p, &SolverConfig::with_steps(200)).unwrap();
    assert!((s.y0()[0] - (-1f64).exp()).abs() < 1e-3, "{}", s.y0()[0]);
}

#[test]
fn brownian_terminal_gives_unit_z() {
    let p = problem(
        TerminalSpec::BrownianLinear { h: 1, a: 0.0, b: 1.0 },
        GeneratorSpec::Zero,
        VectorFieldSpec::zero(1, 1),
        GridPath::constant(1.0, &[0.0]).unwrap(),
        JumpMode::Forward,
    );
    let s = solve_rbsde(&p, &SolverConfig::with_steps(16)).unwrap();
    assert!(s.fields.z.iter().flatten().all(|z| (z - 1.0).abs() < 1e-12));
}

#[test]
fn corrupted_z_is_detected() {
    let p = problem(
        TerminalSpec::BrownianSin { h: 1, a: 0.2, amplitude: 1.0, frequency: 1.5 },
        GeneratorSpec::Affine { a: 0.1, b: -0.5, c: 0.3 },
        VectorFieldSpec::smooth_bounded(1, 1, 0.5, 1.0, 0.0),
        unit_step(0.4),
        JumpMode::Marcus,
    );
    let cfg = SolverConfig { tol: 1e-8, ..SolverConfig::with_steps(60) };
    let mut s = solve_rbsde(&p, &cfg).unwrap();
    assert!(s.diagnostics.residual <= 1e-6, "{}", s.diagnostics.residual);
    assert!(s.max_abs_y() <= s.diagnostics.apriori);
    for z in s.fields.z.iter_mut().flatten() {
        *z += 0.1;
    }
    assert!(residual_check(&p, &s).unwrap() > 1e-3);
}

#[test]
fn stretched_solve_matches_direct() {
    for mode in [JumpMode::Marcus, JumpMode::Forward] {
        let p = problem(
            TerminalSpec::BrownianLinear { h: 1, a: 1.0, b: 0.3 },
            GeneratorSpec::Affine { a: 0.0, b: -0.5, c: 0.2 },
            VectorFieldSpec::scalar_linear(0.8),
            unit_step(0.7),
            mode,
        );
        let cfg = SolverConfig { tol: 1e-11, ..SolverConfig::with_steps(40) };
        let direct = solve_rbsde(&p, &cfg).unwrap();
        for delta in [0.1, 0.01] {
            let st = time_stretched_solve(&p, &cfg, delta, 16).unwrap();
            let r = &st.retracted;
            let mut dev: f64 = 0.0;
            for k in 0..direct.tree.n_slices() {
                for j in 0..direct.tree.nodes(k) {
                    dev = dev.max((direct.fields.y_left(k, j)[0] - r.fields.y_left(k, j)[0]).abs());
                    dev = dev.max((direct.fields.y_right(k, j)[0] - r.fields.y_right(k, j)[0]).abs());
                }
            }
            assert!(dev < 1e-8, "{mode:?} delta={delta} dev={dev}");
        }
    }
}

#[test]
fn picard_table_decays() {
    let p = problem(
        TerminalSpec::Constant(vec![1.0]),
        GeneratorSpec::LinearInY(-0.5),
        VectorFieldSpec::scalar_linear(1.0),
        unit_step(2f64.ln()),
        JumpMode::Marcus,
    );
    let tree = TreeModel::build(&p, 20).unwrap();
    let rep = picard_envelope_check(&p, &tree, 25).unwrap();
    assert!(rep.residuals[5] < rep.residuals[2], "{:?}", rep.residuals);
    assert!(rep.holds(), "{rep:?}");
}
