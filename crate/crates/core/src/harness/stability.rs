//! Wong–Zakai stability experiment: the limit problem against problems
//! driven by piecewise-linear smoothings of its driver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decorated::{alpha_p_upper_with, embed_iota, embed_jmath, lift_solution, AlphaConfig};
use crate::drivers::wong_zakai;
use crate::error::{Error, Result};
use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
use crate::pathcore::GridPath;
use crate::rbsde::{expected_z_energy, solve_on_tree, ContinuousScheme, JumpMode, Problem, SolverConfig, TreeModel};

#[derive(Clone, Debug)]
pub struct StabilityConfig {
    /// The limit problem; its driver is smoothed at every mesh.
    pub problem: Problem,
    /// Strictly decreasing smoothing meshes.
    pub meshes: Vec<f64>,
    pub n_paths: usize,
    /// Exponent of the solution metric; the driver metric uses `problem.q`.
    pub p: f64,
    pub delta_schedule: Vec<f64>,
    pub beam: usize,
    /// Value lattice for the metric, see [`AlphaConfig`].
    pub lattice: Option<f64>,
    pub n_steps: usize,
    /// Samples per lifted excursion.
    pub excursion_samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl StabilityConfig {
    /// Linear field `g(y) = y`, Marcus jump `ln 2` at `0.4` (a point of every
    /// ladder grid), `ξ = 1 + 0.05 B_T`, `f = 0`, ladder
    /// `{0.2, 0.1, 0.05, 0.025}`.
    pub fn standard() -> Result<Self> {
        let w = GridPath::caglad_jumps(&[0.0, 0.4, 1.0], &[0.0], &[(0.4, vec![2f64.ln()])])?;
        let mut problem = Problem::new(
            1.0,
            TerminalSpec::BrownianLinear { h: 1, a: 1.0, b: 0.05 },
            GeneratorSpec::Zero,
            VectorFieldSpec::scalar_linear(1.0),
            w,
            JumpMode::Marcus,
        )?;
        problem.scheme = ContinuousScheme::Flow;
        Ok(StabilityConfig {
            problem,
            meshes: vec![0.2, 0.1, 0.05, 0.025],
            n_paths: 64,
            p: 3.0,
            delta_schedule: vec![0.004, 0.002],
            beam: 4,
            lattice: Some(0.01),
            n_steps: 80,
            excursion_samples: 8,
            seed: 2024,
            tol: 1e-10,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.meshes.is_empty() || self.meshes.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidArgument("the mesh ladder must be nonempty and strictly decreasing".into()));
        }
        if self.n_paths < 1 {
            return Err(Error::InvalidArgument("n_paths must be positive".into()));
        }
        self.problem.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub mesh: f64,
    /// Probability-weighted mean of `α_p(𝐘ᵏ, 𝐘^∞)` over the sampled paths.
    pub mean_alpha: f64,
    pub q90_alpha: f64,
    /// `E ∫ (Zᵏ − Z^∞)² dc`, exact on the tree.
    pub z_gap: f64,
    /// `α_q(𝐖ᵏ, 𝐖^∞)`.
    pub alpha_w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

impl StabilityTable {
    pub fn alpha_decreasing(&self) -> bool {
        decreasing(&self.rows.iter().map(|r| r.mean_alpha).collect::<Vec<_>>())
    }

    /// Final mean `α_p` at most a third of the first.
    pub fn alpha_contracts(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.mean_alpha <= a.mean_alpha / 3.0,
            _ => false,
        }
    }

    pub fn driver_decreasing(&self) -> bool {
        decreasing(&self.rows.iter().map(|r| r.alpha_w).collect::<Vec<_>>())
    }

    pub fn z_decreasing(&self) -> bool {
        decreasing(&self.rows.iter().map(|r| r.z_gap).collect::<Vec<_>>())
    }

    pub fn holds(&self) -> bool {
        self.alpha_decreasing() && self.alpha_contracts() && self.driver_decreasing() && self.z_decreasing()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# stability v1")?;
        writeln!(out, "mesh,mean_alpha_p,q90_alpha_p,z_gap,alpha_q_driver")?;
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e},{:e},{:e}", r.mesh, r.mean_alpha, r.q90_alpha, r.z_gap, r.alpha_w)?;
        }
        Ok(())
    }
}

fn weighted_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// Runs the experiment. Sampled tree paths are drawn with their own
/// probabilities, so the plain mean over samples is the weighted mean.
pub fn stability_experiment(cfg: &StabilityConfig) -> Result<StabilityTable> {
    cfg.validate()?;
    let limit = &cfg.problem;
    let solver = SolverConfig { tol: cfg.tol, norms: false, ..SolverConfig::with_steps(cfg.n_steps) };
    let tree = TreeModel::build(limit, cfg.n_steps)?;
    let sol_inf = solve_on_tree(limit, &tree, &solver)?;
    let w_limit = match limit.mode {
        JumpMode::Marcus => embed_jmath(&limit.w)?,
        JumpMode::Forward => embed_iota(&limit.w)?,
    }
    .resampled(cfg.excursion_samples);

    let metric_p = AlphaConfig { p: cfg.p, beam: cfg.beam, lattice: cfg.lattice };
    let metric_q = AlphaConfig { p: limit.q, ..metric_p.clone() };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let paths: Vec<Vec<usize>> = (0..cfg.n_paths).map(|_| tree.sample_path(&mut rng)).collect();
    let lifts_inf = paths
        .iter()
        .map(|nodes| lift_solution(&sol_inf.y_path(nodes)?, &limit.g, &tree.w, limit.mode, cfg.excursion_samples))
        .collect::<Result<Vec<_>>>()?;

    let rows = cfg
        .meshes
        .iter()
        .map(|&mesh| {
            let mut pk = limit.clone();
            pk.w = wong_zakai(&limit.w, mesh)?;
            let tree_k = TreeModel::build(&pk, cfg.n_steps)?;
            if tree_k.times != tree.times {
                return Err(Error::InvalidArgument("smoothed and limit trees are not aligned".into()));
            }
            let sol_k = solve_on_tree(&pk, &tree_k, &solver)?;
            let dz: Vec<Vec<f64>> = sol_k
                .fields
                .z
                .iter()
                .zip(&sol_inf.fields.z)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect();
            let z_gap = expected_z_energy(&tree, &dz, limit.h())?;
            let alphas = paths
                .par_iter()
                .zip(&lifts_inf)
                .map(|(nodes, lift_inf)| {
                    let lift_k = lift_solution(&sol_k.y_path(nodes)?, &pk.g, &tree_k.w, pk.mode, cfg.excursion_samples)?;
                    Ok(alpha_p_upper_with(&lift_k, lift_inf, &cfg.delta_schedule, &metric_p)?.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_alpha = alphas.iter().sum::<f64>() / alphas.len() as f64;
            let alpha_w = alpha_p_upper_with(&embed_iota(&pk.w)?, &w_limit, &cfg.delta_schedule, &metric_q)?.value;
            Ok(StabilityRow { mesh, mean_alpha, q90_alpha: weighted_quantile(&alphas, 0.9), z_gap, alpha_w })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_driver_gives_zero_columns() {
        let mut cfg = StabilityConfig::standard().unwrap();
        cfg.problem.w = GridPath::constant(1.0, &[0.0]).unwrap();
        cfg.meshes = vec![0.2, 0.1];
        cfg.n_paths = 4;
        cfg.n_steps = 20;
        let t = stability_experiment(&cfg).unwrap();
        for r in &t.rows {
            assert_eq!((r.mean_alpha, r.z_gap, r.alpha_w), (0.0, 0.0, 0.0));
        }
    }
}
