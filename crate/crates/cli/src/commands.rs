//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbsde_core::bdsde::{aggregate, solve_bdsde, solve_quenched, BdsdeRun};
use rbsde_core::decorated::{alpha_brute, alpha_p_upper_with, embed_iota, embed_jmath, AlphaConfig, DecoratedPath};
use rbsde_core::drivers::{generate_report, DriverSampler};
use rbsde_core::harness::config::{driver_spec_from, problem_from, solver_from};
use rbsde_core::harness::{selftest as run_selftest, stability_experiment, Config, ConstantTable, StabilityConfig};
use rbsde_core::pathcore::{p_var_full, GridPath};
use rbsde_core::rbsde::{residual_check, solve_rbsde, time_stretched_solve, Solution};
use rbsde_core::young::{backward_young, forward_young, jump_correction, Anchor, Regularity, Side};
use serde_json::json;

use crate::Report;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn read_path(cfg: &Config, key: &str) -> Result<GridPath> {
    let file = cfg.get(key).with_context(|| format!("missing key '{key}'"))?;
    let path = cfg.resolve(file);
    let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    Ok(GridPath::read_csv(BufReader::new(f))?)
}

fn flag(cfg: &Config, key: &str, default: bool) -> Result<bool> {
    match cfg.str_or(key, if default { "true" } else { "false" }) {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("{key}: expected true or false, got '{other}'"),
    }
}

pub fn selftest() -> Result<Report> {
    let r = run_selftest(&ConstantTable::default());
    let checks: Vec<_> =
        r.checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail })).collect();
    Ok(Report { summary: json!({ "command": "selftest", "checks": checks }), passed: r.passed() })
}

/// Keys: `x.file`, `y.file`, `p`, `q`, `anchor` (`left` | `right`).
pub fn young(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let x = read_path(cfg, "x.file")?;
    let y = read_path(cfg, "y.file")?;
    let reg = Regularity::new(cfg.f64_or("p", 2.0)?, cfg.f64_or("q", 1.5)?)?;
    let anchor = match cfg.str_or("anchor", "left") {
        "left" => Anchor::Left,
        "right" => Anchor::Right,
        other => bail!("anchor: expected left or right, got '{other}'"),
    };
    let backward = backward_young(&x, &y, anchor, reg)?;
    let forward = forward_young(&x, &y, reg)?;
    let whole = backward_young(&x, &y, Anchor::Left, reg)?.value;
    let correction = jump_correction(&x, &y, Side::Plus)?;
    let gap = whole
        .iter()
        .zip(&forward.value)
        .zip(&correction)
        .map(|((b, f), c)| (b - f - c).abs())
        .fold(0.0, f64::max);
    let pure_jump = x.mode().is_pure_jump() && y.mode().is_pure_jump() && !y.mode().is_cadlag();
    let scale = 1.0 + whole.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let finite = backward.value.iter().chain(&forward.value).all(|v| v.is_finite());
    if let Some(path) = out {
        backward.cumulative.write_csv(create(path)?)?;
    }
    Ok(Report {
        summary: json!({
            "command": "young",
            "backward": backward.value,
            "forward": forward.value,
            "jump_correction": correction,
            "identity_gap": gap,
            "identity_asserted": pure_jump,
            "remainder_bound": backward.remainder_bound,
        }),
        passed: finite && (!pure_jump || gap <= 1e-12 * scale),
    })
}

/// Keys: the `driver.*` block, `horizon`, `q`, `seed`.
pub fn driver(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let spec = driver_spec_from(cfg)?;
    let (path, report) = generate_report(&spec)?;
    let qvar = p_var_full(&path, spec.q)?;
    if let Some(p) = out {
        path.write_csv(create(p)?)?;
    }
    Ok(Report {
        summary: json!({
            "command": "driver",
            "kind": spec.kind.name(),
            "seed": spec.seed,
            "q": spec.q,
            "points": path.len(),
            "n_jumps": report.n_jumps,
            "jitter": report.jitter,
            "q_variation": qvar,
        }),
        passed: qvar.is_finite(),
    })
}

fn write_nodes<W: Write>(sol: &Solution, mut w: W) -> Result<()> {
    let h = sol.h();
    let cols: Vec<String> = (0..h).flat_map(|i| [format!("y_left_{i}"), format!("y_right_{i}")]).collect();
    writeln!(w, "# nodes v1")?;
    writeln!(w, "k,time,node,{}", cols.join(","))?;
    for k in 0..sol.tree.n_slices() {
        for j in 0..sol.tree.nodes(k) {
            let vals: Vec<String> = (0..h)
                .flat_map(|i| [sol.fields.y_left(k, j)[i].to_string(), sol.fields.y_right(k, j)[i].to_string()])
                .collect();
            writeln!(w, "{k},{},{j},{}", sol.tree.times[k], vals.join(","))?;
        }
    }
    Ok(())
}

/// Keys: the problem block, the solver keys, `assert.residual`.
pub fn solve(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let problem = problem_from(cfg)?;
    let sol = solve_rbsde(&problem, &solver_from(cfg)?)?;
    let residual = residual_check(&problem, &sol)?;
    let limit = cfg.f64_or("assert.residual", 1e-6)?;
    let d = &sol.diagnostics;
    if let Some(p) = out {
        write_nodes(&sol, create(p)?)?;
    }
    let within_bound = d.max_abs_y <= d.apriori;
    Ok(Report {
        summary: json!({
            "command": "solve",
            "y0": sol.y0(),
            "y0_plus": sol.y0_plus(),
            "z0": sol.z0(),
            "residual": residual,
            "picard_iterations": d.iterations,
            "eps_bar": d.eps_bar,
            "shrinks": d.shrinks,
            "partition": d.partition,
            "unresolved": d.unresolved,
            "apriori": d.apriori,
            "max_abs_y": d.max_abs_y,
            "y_p2": d.y_p2,
            "z_bmo": d.z_bmo,
        }),
        passed: residual <= limit && within_bound,
    })
}

/// Keys: the problem block, the solver keys, `stretch.delta` (list),
/// `stretch.m`, `assert.stretch`.
pub fn stretch(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let problem = problem_from(cfg)?;
    let solver = solver_from(cfg)?;
    let direct = solve_rbsde(&problem, &solver)?;
    let m = cfg.usize_or("stretch.m", 16)?;
    let limit = cfg.f64_or("assert.stretch", 1e-8)?;
    let mut rows = Vec::new();
    for delta in cfg.list_or("stretch.delta", &[0.1, 0.01])? {
        let r = time_stretched_solve(&problem, &solver, delta, m)?.retracted;
        let mut dev: f64 = 0.0;
        for k in 0..r.tree.n_slices() {
            for j in 0..r.tree.nodes(k) {
                let pairs = [(r.fields.y_left(k, j), direct.fields.y_left(k, j)), (r.fields.y_right(k, j), direct.fields.y_right(k, j))];
                for (a, b) in pairs {
                    dev = a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(dev, f64::max);
                }
            }
        }
        rows.push((delta, dev));
    }
    if let Some(p) = out {
        let mut w = create(p)?;
        writeln!(w, "# stretch v1")?;
        writeln!(w, "delta,max_deviation")?;
        for (d, dev) in &rows {
            writeln!(w, "{d},{dev:e}")?;
        }
    }
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Report {
        summary: json!({
            "command": "stretch",
            "y0": direct.y0(),
            "deviations": rows.iter().map(|(d, dev)| json!({ "delta": d, "max_deviation": dev })).collect::<Vec<_>>(),
        }),
        passed: worst <= limit,
    })
}

fn decorated(cfg: &Config, side: &str) -> Result<DecoratedPath> {
    let h = read_path(cfg, &format!("{side}.file"))?;
    match cfg.str_or(&format!("{side}.embed"), "iota") {
        "iota" => Ok(embed_iota(&h)?),
        "jmath" => Ok(embed_jmath(&h)?.resampled(cfg.usize_or(&format!("{side}.samples"), 4)?)),
        other => bail!("{side}.embed: expected iota or jmath, got '{other}'"),
    }
}

/// Keys: `a.file`, `b.file`, `a.embed`/`b.embed` (`iota` | `jmath`),
/// `a.samples`/`b.samples`, `p`, `delta_schedule`, `beam`, `lattice`,
/// `brute`.
pub fn metric(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let a = decorated(cfg, "a")?;
    let b = decorated(cfg, "b")?;
    let schedule = cfg.list_or("delta_schedule", &[0.1, 0.01])?;
    let lattice = match cfg.get("lattice") {
        None | Some("none") => None,
        Some(_) => Some(cfg.f64_or("lattice", 0.0)?),
    };
    let metric = AlphaConfig { p: cfg.f64_or("p", 2.0)?, beam: cfg.usize_or("beam", 4)?, lattice };
    let r = alpha_p_upper_with(&a, &b, &schedule, &metric)?;
    let brute = if flag(cfg, "brute", false)? {
        let delta = schedule.iter().copied().fold(f64::INFINITY, f64::min);
        Some(alpha_brute(&a, &b, metric.p, delta)?)
    } else {
        None
    };
    let smallest = r.per_delta.iter().min_by(|x, y| x.0.total_cmp(&y.0)).map(|(_, m)| m.objective);
    let consistent = match (brute, smallest) {
        (Some(lo), Some(up)) => up >= lo - 1e-12,
        _ => true,
    };
    if let Some(p) = out {
        let mut w = create(p)?;
        writeln!(w, "# metric v1")?;
        writeln!(w, "delta,objective,time_distortion,pvar_diff")?;
        for (d, m) in &r.per_delta {
            writeln!(w, "{d},{:e},{:e},{:e}", m.objective, m.time_distortion, m.pvar_diff)?;
        }
    }
    Ok(Report {
        summary: json!({
            "command": "metric",
            "p": metric.p,
            "value": r.value,
            "per_delta": r.per_delta.iter().map(|(d, m)| json!({
                "delta": d,
                "objective": m.objective,
                "time_distortion": m.time_distortion,
                "pvar_diff": m.pvar_diff,
            })).collect::<Vec<_>>(),
            "brute": brute,
        }),
        passed: r.value.is_finite() && r.value >= 0.0 && consistent,
    })
}

/// Keys: the problem block, the solver keys, the `driver.*` block as the
/// sampler, `n_outer`, `seed`, `max_qvar`.
pub fn bdsde(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let template = problem_from(cfg)?;
    let sampler = DriverSampler::Spec(driver_spec_from(cfg)?);
    let mut run = BdsdeRun::new(template, sampler, cfg.usize_or("n_outer", 100)?, cfg.u64_or("seed", 0)?);
    run.solver = solver_from(cfg)?;
    if cfg.get("max_qvar").is_some() {
        run.max_qvar = Some(cfg.f64_or("max_qvar", f64::INFINITY)?);
    }
    let result = solve_bdsde(&run)?;
    let recomputed = aggregate(&result.samples)? == result.aggregates;
    let quenched = match result.samples.first() {
        Some(s) => {
            let w = run.sampler.sample(&mut ChaCha8Rng::seed_from_u64(s.seed))?;
            solve_quenched(&run.template, &w, &run.solver)?.y0() == s.y0
        }
        None => false,
    };
    if let Some(p) = out {
        let mut w = create(p)?;
        writeln!(w, "# bdsde v1")?;
        writeln!(w, "index,seed,y0,z_energy,weight,rejected")?;
        for s in &result.samples {
            writeln!(w, "{},{},{},{},{},{}", s.index, s.seed, s.y0[0], s.z_energy, s.weight, s.rejected)?;
        }
    }
    let a = &result.aggregates;
    Ok(Report {
        summary: json!({
            "command": "bdsde",
            "n": a.n,
            "mean_y0": a.mean_y0,
            "std_err": a.std_err,
            "quantiles": a.quantiles,
            "mean_z_energy": a.mean_z_energy,
            "drawn": a.drawn,
            "rejected": a.rejected,
            "aggregates_recomputed": recomputed,
            "quenched_consistent": quenched,
        }),
        passed: recomputed && quenched,
    })
}

/// Starts from the standard experiment. Keys: `meshes`, `n_paths`, `p`, `q`,
/// `delta_schedule`, `beam`, `lattice` (a step or `none`), `steps`, `seed`.
pub fn stability(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    let mut s = StabilityConfig::standard()?;
    s.meshes = cfg.list_or("meshes", &s.meshes)?;
    s.n_paths = cfg.usize_or("n_paths", s.n_paths)?;
    s.p = cfg.f64_or("p", s.p)?;
    s.problem.q = cfg.f64_or("q", s.problem.q)?;
    s.delta_schedule = cfg.list_or("delta_schedule", &s.delta_schedule)?;
    s.beam = cfg.usize_or("beam", s.beam)?;
    s.lattice = match cfg.get("lattice") {
        Some("none") => None,
        Some(_) => Some(cfg.f64_or("lattice", 0.0)?),
        None => s.lattice,
    };
    s.n_steps = cfg.usize_or("steps", s.n_steps)?;
    s.seed = cfg.u64_or("seed", s.seed)?;
    let table = stability_experiment(&s)?;
    if let Some(p) = out {
        table.write_csv(create(p)?)?;
    }
    Ok(Report {
        summary: json!({
            "command": "stability",
            "rows": table.rows.iter().map(|r| json!({
                "mesh": r.mesh,
                "mean_alpha_p": r.mean_alpha,
                "q90_alpha_p": r.q90_alpha,
                "z_gap": r.z_gap,
                "alpha_q_driver": r.alpha_w,
            })).collect::<Vec<_>>(),
            "alpha_decreasing": table.alpha_decreasing(),
            "alpha_contracts": table.alpha_contracts(),
            "driver_decreasing": table.driver_decreasing(),
            "z_decreasing": table.z_decreasing(),
        }),
        passed: table.holds(),
    })
}
