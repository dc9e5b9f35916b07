//! Rough driver generation: deterministic test paths, fractional Brownian
//! motion with `H > 1/2`, pure-jump Lévy paths and Wong–Zakai smoothings.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::pathcore::ops::add;
use crate::pathcore::path::{uniform_grid, GridPath, TIME_TOL};

/// Largest fBm grid accepted by the Cholesky generator.
pub const FBM_MAX_SAMPLES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum DriverKind {
    /// Scalar pure-jump path starting at `x0`.
    Step { x0: f64, jumps: Vec<(f64, f64)> },
    /// Continuous path through `0, a, 0, a, …` with `2·teeth` linear pieces.
    Zigzag { amplitude: f64, teeth: usize },
    Fbm { hurst: f64 },
    /// Jumps at Poisson times with normal sizes.
    CompoundPoisson { rate: f64, jump_mean: f64, jump_std: f64 },
    /// Symmetric β-stable jumps of size at least `truncation`, Lévy measure
    /// `scale |x|^{−1−β} dx`, small jumps dropped.
    LevyTruncated { beta: f64, truncation: f64, scale: f64 },
    Sum(Vec<DriverKind>),
}

impl DriverKind {
    pub fn name(&self) -> &'static str {
        match self {
            DriverKind::Step { .. } => "step",
            DriverKind::Zigzag { .. } => "zigzag",
            DriverKind::Fbm { .. } => "fbm",
            DriverKind::CompoundPoisson { .. } => "compound-poisson",
            DriverKind::LevyTruncated { .. } => "levy-truncated",
            DriverKind::Sum(_) => "sum",
        }
    }

    pub fn is_random(&self) -> bool {
        match self {
            DriverKind::Step { .. } | DriverKind::Zigzag { .. } => false,
            DriverKind::Sum(parts) => parts.iter().any(|k| k.is_random()),
            _ => true,
        }
    }

    fn validate(&self, q: f64) -> Result<()> {
        match self {
            DriverKind::Fbm { hurst } => {
                if !(*hurst > 0.5 && *hurst < 1.0) {
                    return Err(Error::InvalidArgument(format!("Hurst index {hurst} must lie in (1/2, 1)")));
                }
                if q <= 1.0 / hurst {
                    return Err(Error::InvalidArgument(format!("declared q = {q} must exceed 1/H = {}", 1.0 / hurst)));
                }
            }
            DriverKind::LevyTruncated { beta, truncation, scale } => {
                if !(*beta > 0.0 && *beta < 2.0) {
                    return Err(Error::InvalidArgument(format!("stability index {beta} must lie in (0, 2)")));
                }
                if !(*truncation > 0.0) || !(*scale >= 0.0) {
                    return Err(Error::InvalidArgument("truncation must be positive and scale nonnegative".into()));
                }
                if q <= *beta {
                    return Err(Error::InvalidArgument(format!("declared q = {q} must exceed beta = {beta}")));
                }
            }
            DriverKind::CompoundPoisson { rate, jump_std, .. } => {
                if !(*rate >= 0.0) || !(*jump_std >= 0.0) {
                    return Err(Error::InvalidArgument("rate and jump_std must be nonnegative".into()));
                }
            }
            DriverKind::Zigzag { teeth, .. } => {
                if *teeth == 0 {
                    return Err(Error::InvalidArgument("zigzag needs at least one tooth".into()));
                }
            }
            DriverKind::Step { .. } => {}
            DriverKind::Sum(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidArgument("empty sum driver".into()));
                }
                for k in parts {
                    k.validate(q)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriverSpec {
    pub kind: DriverKind,
    pub horizon: f64,
    /// Grid cells for fBm and the base grid of jump paths.
    pub n_samples: usize,
    pub seed: u64,
    /// Declared q-variation index.
    pub q: f64,
}

impl DriverSpec {
    pub fn new(kind: DriverKind, horizon: f64, n_samples: usize, seed: u64, q: f64) -> Self {
        DriverSpec { kind, horizon, n_samples, seed, q }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {} must be positive", self.horizon)));
        }
        if self.n_samples < 1 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        if !(1.0..2.0).contains(&self.q) {
            return Err(Error::InvalidArgument(format!("declared q = {} must lie in [1, 2)", self.q)));
        }
        self.kind.validate(self.q)
    }
}

/// Side information of a generated path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriverReport {
    /// Diagonal jitter added to the fBm covariance.
    pub jitter: f64,
    pub n_jumps: usize,
}

/// Generates the driver; deterministic in `spec.seed`.
pub fn generate(spec: &DriverSpec) -> Result<GridPath> {
    Ok(generate_report(spec)?.0)
}

pub fn generate_report(spec: &DriverSpec) -> Result<(GridPath, DriverReport)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = DriverReport::default();
    let path = generate_kind(&spec.kind, spec.horizon, spec.n_samples, &mut rng, &mut report)?;
    Ok((path, report))
}

/// Generates with an external generator, for batch sampling.
pub fn generate_with_rng<R: Rng + ?Sized>(spec: &DriverSpec, rng: &mut R) -> Result<GridPath> {
    spec.validate()?;
    generate_kind(&spec.kind, spec.horizon, spec.n_samples, rng, &mut DriverReport::default())
}

fn generate_kind<R: Rng + ?Sized>(kind: &DriverKind, horizon: f64, n: usize, rng: &mut R, report: &mut DriverReport) -> Result<GridPath> {
    match kind {
        DriverKind::Step { x0, jumps } => {
            let js: Vec<(f64, Vec<f64>)> = jumps.iter().map(|(t, a)| (*t, vec![*a])).collect();
            if js.iter().any(|(t, _)| !(*t >= 0.0 && *t <= horizon)) {
                return Err(Error::InvalidArgument("step jump times must lie in [0, T]".into()));
            }
            report.n_jumps += js.len();
            GridPath::caglad_jumps(&[0.0, horizon], &[*x0], &js)
        }
        DriverKind::Zigzag { amplitude, teeth } => {
            let times = uniform_grid(horizon, 2 * teeth);
            let values = (0..=2 * teeth).map(|i| if i % 2 == 1 { *amplitude } else { 0.0 }).collect();
            GridPath::continuous(times, values)
        }
        DriverKind::Fbm { hurst } => {
            let (path, jitter) = fbm(*hurst, horizon, n, rng)?;
            report.jitter = report.jitter.max(jitter);
            Ok(path)
        }
        DriverKind::CompoundPoisson { rate, jump_mean, jump_std } => {
            let count = poisson(rate * horizon, rng)?;
            let size = Normal::new(*jump_mean, *jump_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let jumps = (0..count).map(|_| (rng.random::<f64>() * horizon, vec![size.sample(rng)])).collect();
            jump_path(horizon, n, jumps, report)
        }
        DriverKind::LevyTruncated { beta, truncation, scale } => {
            let mass = 2.0 * scale * truncation.powf(-beta) / beta;
            let count = poisson(mass * horizon, rng)?;
            let jumps = (0..count)
                .map(|_| {
                    let t = rng.random::<f64>() * horizon;
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let r = truncation * u.powf(-1.0 / beta);
                    (t, vec![if rng.random::<bool>() { r } else { -r }])
                })
                .collect();
            jump_path(horizon, n, jumps, report)
        }
        DriverKind::Sum(parts) => {
            let mut acc = generate_kind(&parts[0], horizon, n, rng, report)?;
            for k in &parts[1..] {
                let next = generate_kind(k, horizon, n, rng, report)?;
                acc = add(&acc, &next)?;
            }
            Ok(acc)
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(d.sample(rng) as usize)
}

/// Pure-jump path on the uniform grid with the jump times inserted. Jumps in
/// the open interval `(T − tol, T]` are dropped: a jump at `T` does not move
/// the path on `[0, T]`.
fn jump_path(horizon: f64, n: usize, mut jumps: Vec<(f64, Vec<f64>)>, report: &mut DriverReport) -> Result<GridPath> {
    jumps.retain(|(t, _)| *t < horizon - TIME_TOL * horizon.max(1.0));
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    report.n_jumps += jumps.len();
    GridPath::caglad_jumps(&uniform_grid(horizon, n), &[0.0], &jumps)
}

/// fBm on the uniform grid with `n` cells via the Cholesky factor of
/// `½(s^{2H} + t^{2H} − |t − s|^{2H})`, factorized once for many draws.
#[derive(Clone, Debug)]
pub struct FbmGenerator {
    times: Vec<f64>,
    factor: DMatrix<f64>,
    /// Diagonal jitter that was needed.
    pub jitter: f64,
}

impl FbmGenerator {
    pub fn new(hurst: f64, horizon: f64, n: usize) -> Result<Self> {
        if n > FBM_MAX_SAMPLES {
            return Err(Error::InvalidArgument(format!("fBm grids are capped at {FBM_MAX_SAMPLES} cells")));
        }
        let times = uniform_grid(horizon, n);
        let h2 = 2.0 * hurst;
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let (s, t) = (times[i + 1], times[j + 1]);
            0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
        });
        let mut jitter = 0.0;
        let chol = loop {
            let mut m = cov.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(c) = m.cholesky() {
                break c;
            }
            jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
            if jitter > 1e-6 {
                return Err(Error::InvalidArgument("fBm covariance is not positive definite".into()));
            }
        };
        Ok(FbmGenerator { times, factor: chol.l(), jitter })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridPath> {
        let n = self.times.len() - 1;
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.factor * z;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(x.iter().copied());
        GridPath::continuous(self.times.clone(), values)
    }
}

/// One fBm draw; returns the path and the diagonal jitter that was needed.
pub fn fbm<R: Rng + ?Sized>(hurst: f64, horizon: f64, n: usize, rng: &mut R) -> Result<(GridPath, f64)> {
    let g = FbmGenerator::new(hurst, horizon, n)?;
    Ok((g.sample(rng)?, g.jitter))
}

/// Continuous piecewise-linear interpolation of `w` on a uniform grid of
/// step at most `mesh`; a jump is spread over the cell that ends at or after
/// it.
pub fn wong_zakai(w: &GridPath, mesh: f64) -> Result<GridPath> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::InvalidArgument(format!("mesh {mesh} must be positive")));
    }
    let horizon = w.horizon();
    let cells = ((horizon / mesh) - 1e-9).ceil().max(1.0) as usize;
    let grid = uniform_grid(horizon, cells);
    let values = grid.iter().map(|&t| w.value_at(t)).collect();
    GridPath::continuous_vec(grid, values)
}

/// Draws driver paths for the annealed solver.
#[derive(Clone, Debug, PartialEq)]
pub enum DriverSampler {
    Spec(DriverSpec),
    /// Uniform choice among fixed paths.
    Choice(Vec<GridPath>),
    Fixed(GridPath),
}

impl DriverSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridPath> {
        match self {
            DriverSampler::Spec(spec) => generate_with_rng(spec, rng),
            DriverSampler::Choice(paths) => {
                if paths.is_empty() {
                    return Err(Error::InvalidArgument("empty choice sampler".into()));
                }
                Ok(paths[rng.random_range(0..paths.len())].clone())
            }
            DriverSampler::Fixed(p) => Ok(p.clone()),
        }
    }

    /// Declared q of sampled paths.
    pub fn q(&self) -> Option<f64> {
        match self {
            DriverSampler::Spec(s) => Some(s.q),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_driver() {
        let spec = DriverSpec::new(DriverKind::Step { x0: 0.0, jumps: vec![(0.5, 1.0)] }, 1.0, 10, 0, 1.2);
        let p = generate(&spec).unwrap();
        assert_eq!(p.jump_indices().len(), 1);
        assert_eq!(p.value_at(0.7), vec![1.0]);
    }

    #[test]
    fn seeds_are_deterministic() {
        let kind = DriverKind::Sum(vec![
            DriverKind::Fbm { hurst: 0.75 },
            DriverKind::CompoundPoisson { rate: 3.0, jump_mean: 0.0, jump_std: 0.5 },
        ]);
        let spec = DriverSpec::new(kind, 1.0, 64, 42, 1.5);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = DriverSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(DriverSpec::new(DriverKind::Fbm { hurst: 0.4 }, 1.0, 8, 0, 1.9).validate().is_err());
        assert!(DriverSpec::new(DriverKind::Fbm { hurst: 0.75 }, 1.0, 8, 0, 1.2).validate().is_err());
        let levy = DriverKind::LevyTruncated { beta: 1.5, truncation: 0.1, scale: 1.0 };
        assert!(DriverSpec::new(levy, 1.0, 8, 0, 1.4).validate().is_err());
    }

    #[test]
    fn wong_zakai_ramps_over_one_cell() {
        let w = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap();
        let s = wong_zakai(&w, 0.1).unwrap();
        assert!(s.mode().is_continuous());
        assert_eq!(s.value_at(0.5), vec![0.0]);
        assert!((s.value_at(0.55)[0] - 0.5).abs() < 1e-12);
        assert_eq!(s.value_at(0.6), vec![1.0]);
    }

    #[test]
    fn zigzag_shape() {
        let spec = DriverSpec::new(DriverKind::Zigzag { amplitude: 1.0, teeth: 2 }, 1.0, 1, 0, 1.0);
        let p = generate(&spec).unwrap();
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(p.value_at(0.75), vec![1.0]);
    }
}
