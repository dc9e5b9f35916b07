//! Annealed solving: draw driver paths, solve the quenched equation on each
//! frozen path and aggregate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::drivers::DriverSampler;
use crate::error::{Error, Result};
use crate::pathcore::{p_var_full, GridPath};
use crate::rbsde::{expected_z_energy, solve_rbsde, Problem, Solution, SolverConfig};

/// Largest accepted fraction of rejected draws.
pub const MAX_REJECT_FRACTION: f64 = 0.2;

/// Draws per sample before the run is aborted.
const MAX_ATTEMPTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplePlan {
    /// `n_outer` draws with seeds `base_seed + i`.
    MonteCarlo,
    /// Every path of a [`DriverSampler::Choice`] once, equally weighted.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct BdsdeRun {
    /// The driver of the template is replaced by each sample.
    pub template: Problem,
    pub sampler: DriverSampler,
    pub n_outer: usize,
    pub base_seed: u64,
    pub plan: SamplePlan,
    pub solver: SolverConfig,
    /// Samples with `‖L‖_q` above this bound are rejected and redrawn.
    pub max_qvar: Option<f64>,
}

impl BdsdeRun {
    pub fn new(template: Problem, sampler: DriverSampler, n_outer: usize, base_seed: u64) -> Self {
        BdsdeRun {
            template,
            sampler,
            n_outer,
            base_seed,
            plan: SamplePlan::MonteCarlo,
            solver: SolverConfig::default(),
            max_qvar: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub index: usize,
    pub seed: u64,
    pub y0: Vec<f64>,
    /// `E[∫ |Z|² dc]` on the quenched tree.
    pub z_energy: f64,
    pub weight: f64,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregates {
    pub n: usize,
    pub mean_y0: Vec<f64>,
    /// Standard error of the first component of `Y_0`.
    pub std_err: f64,
    /// 10%, 50% and 90% quantiles of the first component of `Y_0`.
    pub quantiles: [f64; 3],
    pub mean_z_energy: f64,
    pub drawn: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct BdsdeResult {
    pub samples: Vec<SampleSummary>,
    pub aggregates: Aggregates,
}

/// Solves the template with `w` frozen as its driver.
pub fn solve_quenched(template: &Problem, w: &GridPath, cfg: &SolverConfig) -> Result<Solution> {
    let mut p = template.clone();
    p.w = w.clone();
    p.validate()?;
    solve_rbsde(&p, cfg)
}

fn summarize(index: usize, seed: u64, weight: f64, rejected: usize, sol: &Solution) -> Result<SampleSummary> {
    Ok(SampleSummary {
        index,
        seed,
        y0: sol.y0(),
        z_energy: expected_z_energy(&sol.tree, &sol.fields.z, sol.h())?,
        weight,
        rejected,
    })
}

fn admissible(run: &BdsdeRun, w: &GridPath) -> Result<bool> {
    let mut p = run.template.clone();
    p.w = w.clone();
    if p.validate().is_err() {
        return Ok(false);
    }
    match run.max_qvar {
        Some(cap) => Ok(p_var_full(w, p.q)? <= cap),
        None => Ok(true),
    }
}

fn draw(run: &BdsdeRun, index: usize) -> Result<SampleSummary> {
    let seed = run.base_seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        let w = run.sampler.sample(&mut rng)?;
        if admissible(run, &w)? {
            let sol = solve_quenched(&run.template, &w, &run.solver)?;
            return summarize(index, seed, 1.0 / run.n_outer as f64, attempt, &sol);
        }
    }
    Err(Error::Sampler { rejected: MAX_ATTEMPTS, drawn: MAX_ATTEMPTS })
}

/// Runs the annealed solver. Per-sample solves run in parallel; the
/// aggregation order is fixed.
pub fn solve_bdsde(run: &BdsdeRun) -> Result<BdsdeResult> {
    let samples: Vec<SampleSummary> = match run.plan {
        SamplePlan::MonteCarlo => {
            if run.n_outer < 1 {
                return Err(Error::InvalidArgument("n_outer must be positive".into()));
            }
            (0..run.n_outer).into_par_iter().map(|i| draw(run, i)).collect::<Result<_>>()?
        }
        SamplePlan::Exhaustive => {
            let DriverSampler::Choice(paths) = &run.sampler else {
                return Err(Error::InvalidArgument("the exhaustive plan needs a choice sampler".into()));
            };
            let n = paths.len();
            paths
                .par_iter()
                .enumerate()
                .map(|(i, w)| {
                    let sol = solve_quenched(&run.template, w, &run.solver)?;
                    summarize(i, run.base_seed, 1.0 / n as f64, 0, &sol)
                })
                .collect::<Result<_>>()?
        }
    };
    let aggregates = aggregate(&samples)?;
    if aggregates.rejected as f64 > MAX_REJECT_FRACTION * aggregates.drawn as f64 {
        return Err(Error::Sampler { rejected: aggregates.rejected, drawn: aggregates.drawn });
    }
    Ok(BdsdeResult { samples, aggregates })
}

/// Weighted aggregates of a per-sample table, in table order.
pub fn aggregate(samples: &[SampleSummary]) -> Result<Aggregates> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let h = samples[0].y0.len();
    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    let mut mean_y0 = vec![0.0; h];
    let mut mean_z_energy = 0.0;
    for s in samples {
        for (m, y) in mean_y0.iter_mut().zip(&s.y0) {
            *m += s.weight * y;
        }
        mean_z_energy += s.weight * s.z_energy;
    }
    for m in &mut mean_y0 {
        *m /= wsum;
    }
    mean_z_energy /= wsum;
    let n = samples.len();
    let var = samples.iter().map(|s| s.weight * (s.y0[0] - mean_y0[0]).powi(2)).sum::<f64>() / wsum;
    let std_err = if n > 1 { (var * n as f64 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
    let mut sorted: Vec<(f64, f64)> = samples.iter().map(|s| (s.y0[0], s.weight / wsum)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for &(v, w) in &sorted {
            acc += w;
            if acc >= q - 1e-12 {
                return v;
            }
        }
        sorted[sorted.len() - 1].0
    };
    let rejected: usize = samples.iter().map(|s| s.rejected).sum();
    Ok(Aggregates {
        n,
        mean_y0,
        std_err,
        quantiles: [quantile(0.1), quantile(0.5), quantile(0.9)],
        mean_z_energy,
        drawn: n + rejected,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
    use crate::rbsde::JumpMode;

    fn step(w: f64) -> GridPath {
        GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![w])]).unwrap()
    }

    fn template() -> Problem {
        Problem::new(
            1.0,
            TerminalSpec::Constant(vec![1.0]),
            GeneratorSpec::Zero,
            VectorFieldSpec::scalar_linear(1.0),
            step(0.0),
            JumpMode::Marcus,
        )
        .unwrap()
    }

    #[test]
    fn two_point_mean_is_cosh() {
        let w = 0.3;
        let mut run = BdsdeRun::new(template(), DriverSampler::Choice(vec![step(w), step(-w)]), 2, 7);
        run.plan = SamplePlan::Exhaustive;
        run.solver = SolverConfig::with_steps(10);
        let r = solve_bdsde(&run).unwrap();
        assert!((r.aggregates.mean_y0[0] - w.cosh()).abs() < 1e-9);
    }

    #[test]
    fn point_mass_equals_direct_solve() {
        let mut run = BdsdeRun::new(template(), DriverSampler::Fixed(step(0.4)), 3, 1);
        run.solver = SolverConfig::with_steps(10);
        let r = solve_bdsde(&run).unwrap();
        let direct = solve_quenched(&template(), &step(0.4), &run.solver).unwrap();
        assert!(r.samples.iter().all(|s| s.y0 == direct.y0()));
    }

    #[test]
    fn seeding_prefix_is_stable() {
        let sampler = DriverSampler::Choice(vec![step(0.2), step(-0.2), step(0.5)]);
        let mut a = BdsdeRun::new(template(), sampler.clone(), 6, 11);
        a.solver = SolverConfig::with_steps(8);
        let mut b = a.clone();
        b.n_outer = 12;
        let ra = solve_bdsde(&a).unwrap();
        let rb = solve_bdsde(&b).unwrap();
        for (x, y) in ra.samples.iter().zip(&rb.samples) {
            assert_eq!((x.seed, &x.y0, x.z_energy), (y.seed, &y.y0, y.z_energy));
        }
    }
}
