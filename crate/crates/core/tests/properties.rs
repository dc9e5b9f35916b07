use proptest::prelude::*;
use rbsde_core::decorated::{alpha_p_upper, embed_iota, embed_jmath, DecoratedPath};
use rbsde_core::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
use rbsde_core::marcus::{flow, FlowRequest};
use rbsde_core::pathcore::ops::{add, scale};
use rbsde_core::pathcore::path::uniform_grid;
use rbsde_core::pathcore::{control_eval, p_var_full, GridPath};
use rbsde_core::rbsde::{solve_rbsde, JumpMode, Problem, SolverConfig};
use rbsde_core::young::{backward_young, backward_young_window, Anchor, Regularity};

fn linear_path() -> impl Strategy<Value = GridPath> {
    prop::collection::vec(-2.0..2.0f64, 2..14).prop_map(|v| {
        let n = v.len() - 1;
        GridPath::continuous(uniform_grid(1.0, n), v).unwrap()
    })
}

/// Scalar càglàd pure-jump path on `{0, 1/8, …, 1}` with jumps at grid points.
fn jump_path() -> impl Strategy<Value = GridPath> {
    (-1.0..1.0f64, prop::collection::vec((1usize..8, -1.5..1.5f64), 0..5)).prop_map(|(x0, js)| {
        let mut jumps: Vec<(f64, Vec<f64>)> = Vec::new();
        for (k, a) in js {
            let t = k as f64 / 8.0;
            if !jumps.iter().any(|(s, _)| *s == t) {
                jumps.push((t, vec![a]));
            }
        }
        jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
        GridPath::caglad_jumps(&uniform_grid(1.0, 8), &[x0], &jumps).unwrap()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pvar_is_monotone_in_p(x in linear_path(), p1 in 1.0..4.0f64, dp in 0.0..3.0f64) {
        let (a, b) = (p_var_full(&x, p1).unwrap(), p_var_full(&x, p1 + dp).unwrap());
        prop_assert!(b <= a * (1.0 + 1e-12) + 1e-14, "{a} < {b}");
    }

    #[test]
    fn control_is_superadditive(x in linear_path(), p in 1.0..3.0f64, r in prop::array::uniform3(0.0..1.0f64)) {
        let mut r = r;
        r.sort_by(f64::total_cmp);
        let [s, t, u] = r;
        let lhs = control_eval(&x, p, s, t).unwrap() + control_eval(&x, p, t, u).unwrap();
        let rhs = control_eval(&x, p, s, u).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn young_is_bilinear(x1 in jump_path(), x2 in jump_path(), y1 in jump_path(), y2 in jump_path(), c in -2.0..2.0f64) {
        let reg = Regularity::new(1.0, 1.0).unwrap();
        let int = |x: &GridPath, y: &GridPath| backward_young(x, y, Anchor::Left, reg).unwrap().value[0];
        let y = add(&y1, &scale(&y2, c).unwrap()).unwrap();
        prop_assert!(close(int(&x1, &y), int(&x1, &y1) + c * int(&x1, &y2), 1e-12));
        let x = add(&x1, &scale(&x2, c).unwrap()).unwrap();
        prop_assert!(close(int(&x, &y1), int(&x1, &y1) + c * int(&x2, &y1), 1e-12));
    }

    #[test]
    fn young_chasles(x in jump_path(), y in jump_path(), s in 0usize..=6, du in 1usize..=4, dt in 1usize..=4) {
        let reg = Regularity::new(1.0, 1.0).unwrap();
        let u = (s + du).min(7);
        let t = (u + dt).min(8);
        let [s, u, t] = [s, u, t].map(|i| i as f64 / 8.0);
        let a = backward_young_window(&x, &y, s, u, reg).unwrap()[0];
        let b = backward_young_window(&x, &y, u, t, reg).unwrap()[0];
        let whole = backward_young_window(&x, &y, s, t, reg).unwrap()[0];
        prop_assert!(close(a + b, whole, 1e-12), "{a} + {b} != {whole}");
    }

    #[test]
    fn marcus_flow_is_gronwall_lipschitz(
        amp in 0.1..1.0f64, omega in 0.5..3.0f64, phase in 0.0..3.0f64,
        dw in -1.5..1.5f64, x in -2.0..2.0f64, x2 in -2.0..2.0f64,
    ) {
        let g = VectorFieldSpec::smooth_bounded(1, 1, amp, omega, phase);
        let a = flow(&FlowRequest::new(&g, 0.0, &[dw], &[x])).unwrap()[0];
        let b = flow(&FlowRequest::new(&g, 0.0, &[dw], &[x2])).unwrap()[0];
        prop_assert!((a - b).abs() <= (x - x2).abs() * (g.c_g() * dw.abs()).exp() + 1e-12);
    }
}

fn step_decorated(t: f64, a: f64, ramp: bool) -> DecoratedPath {
    let h = GridPath::caglad_jumps(&[0.0, t, 1.0], &[0.0], &[(t, vec![a])]).unwrap();
    if ramp {
        embed_jmath(&h).unwrap().resampled(2)
    } else {
        embed_iota(&h).unwrap()
    }
}

fn decorated() -> impl Strategy<Value = DecoratedPath> {
    (1usize..8, -1.5..1.5f64, any::<bool>()).prop_map(|(k, a, ramp)| step_decorated(k as f64 / 8.0, a, ramp))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alpha_vanishes_on_the_diagonal(a in decorated(), p in prop::sample::select(vec![1.0, 2.0, 3.0, f64::INFINITY])) {
        prop_assert_eq!(alpha_p_upper(&a, &a, p, &[0.1, 0.01], 2).unwrap().value, 0.0);
    }

    #[test]
    fn alpha_is_symmetric(a in decorated(), b in decorated(), p in prop::sample::select(vec![1.0, 2.0, 3.0, f64::INFINITY])) {
        let ab = alpha_p_upper(&a, &b, p, &[0.05], 2).unwrap().value;
        let ba = alpha_p_upper(&b, &a, p, &[0.05], 2).unwrap().value;
        prop_assert!(close(ab, ba, 1e-12), "{ab} != {ba}");
    }

    #[test]
    fn alpha_settles_along_the_delta_schedule(a in decorated(), b in decorated(), p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let schedule = [0.04, 0.02, 0.01, 0.005];
        let r = alpha_p_upper(&a, &b, p, &schedule, 2).unwrap();
        let v: Vec<f64> = r.per_delta.iter().map(|(_, m)| m.objective).collect();
        for w in v.windows(3) {
            prop_assert!((w[2] - w[1]).abs() <= (w[1] - w[0]).abs() + 1e-3, "{v:?}");
        }
    }

    #[test]
    fn modes_agree_for_constant_fields(c in -1.0..1.0f64, js in prop::collection::vec((1usize..10, -1.0..1.0f64), 1..4)) {
        let mut jumps: Vec<(f64, Vec<f64>)> = Vec::new();
        for (k, a) in js {
            let t = k as f64 / 10.0;
            if !jumps.iter().any(|(s, _)| *s == t) {
                jumps.push((t, vec![a]));
            }
        }
        jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
        let w = GridPath::caglad_jumps(&[0.0, 1.0], &[0.0], &jumps).unwrap();
        let solve = |mode| {
            let p = Problem::new(
                1.0,
                TerminalSpec::Constant(vec![1.0]),
                GeneratorSpec::LinearInY(-0.5),
                VectorFieldSpec::scalar_constant(c),
                w.clone(),
                mode,
            )
            .unwrap();
            solve_rbsde(&p, &SolverConfig::with_steps(20)).unwrap().y0()[0]
        };
        let (f, m) = (solve(JumpMode::Forward), solve(JumpMode::Marcus));
        prop_assert!((f - m).abs() <= 1e-12, "{f} vs {m}");
    }
}
