//! Recombining binomial tree for `M = B ∘ c`, aligned with the solver grid.
//!
//! Slice `k` carries nodes `j = 0..=m_k`, where `m_k` counts the Brownian
//! steps before it, and `B(k, j) = (2j − m_k) √Δ`. A Brownian step moves node
//! `j` to `j` or `j + 1` with probability ½ each and advances the clock by
//! `Δ`. Frozen and excursion steps keep the node and the clock.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pathcore::path::{GridPath, PathMode};

use super::problem::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Brownian,
    /// `dc = 0`, `dB = 0`; the driver may still move continuously.
    Frozen,
    /// A frozen step inside an inserted excursion; always integrated by flow.
    Excursion,
}

#[derive(Clone, Debug)]
pub struct TreeModel {
    /// Solver times (extended times for stretched problems).
    pub times: Vec<f64>,
    /// Time at which `f`, `g` are evaluated on each slice.
    pub model_times: Vec<f64>,
    pub kinds: Vec<StepKind>,
    /// `m_k` for every slice.
    pub width: Vec<usize>,
    /// Clock increment of one Brownian step.
    pub dt: f64,
    pub sqrt_dt: f64,
    /// Driver resampled on `times`.
    pub w: GridPath,
    /// Clock resampled on `times`.
    pub clock: GridPath,
    /// Driver jumps that fell between grid times and were moved to the
    /// preceding grid time.
    pub snapped: usize,
}

/// Smallest `t` with `c(t) = level`, for a continuous nondecreasing clock.
pub fn clock_inverse(c: &GridPath, level: f64) -> f64 {
    let times = c.times();
    let v = |i: usize| c.left(i)[0];
    if level <= v(0) {
        return times[0];
    }
    for i in 1..times.len() {
        if v(i) >= level {
            let (a, b) = (v(i - 1), v(i));
            if b == a {
                return times[i - 1];
            }
            let th = ((level - a) / (b - a)).clamp(0.0, 1.0);
            return times[i - 1] + th * (times[i] - times[i - 1]);
        }
    }
    *times.last().expect("validated path")
}

impl TreeModel {
    /// Uniform-in-clock tree with `n_steps` Brownian steps.
    pub fn build(problem: &Problem, n_steps: usize) -> Result<Self> {
        if n_steps < 1 {
            return Err(Error::InvalidArgument("the tree needs at least one step".into()));
        }
        let c_t = problem.c_total();
        let levels: Vec<f64> = (0..=n_steps).map(|i| c_t * i as f64 / n_steps as f64).collect();
        let mut times: Vec<f64> = levels.iter().map(|&l| clock_inverse(&problem.clock, l)).collect();
        times[0] = 0.0;
        times[n_steps] = problem.horizon;
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("clock inverse produced a degenerate grid".into()));
        }
        let (w, snapped) = problem.w.resample_caglad(&times)?;
        let clock = GridPath::continuous(times.clone(), levels)?;
        Self::from_parts(times.clone(), times, vec![StepKind::Brownian; n_steps], w, clock, snapped)
    }

    /// Assembles a tree from explicit slices; the Brownian clock step is read
    /// off the clock and must be uniform.
    pub fn from_parts(
        times: Vec<f64>,
        model_times: Vec<f64>,
        kinds: Vec<StepKind>,
        w: GridPath,
        clock: GridPath,
        snapped: usize,
    ) -> Result<Self> {
        let n = times.len();
        if n < 2 || kinds.len() != n - 1 || model_times.len() != n {
            return Err(Error::InvalidArgument("tree slices and steps do not match".into()));
        }
        if w.times() != times.as_slice() || clock.times() != times.as_slice() {
            return Err(Error::InvalidArgument("driver and clock must live on the tree grid".into()));
        }
        let mut width = vec![0usize; n];
        let mut dt = None;
        for k in 0..n - 1 {
            let dc = clock.left(k + 1)[0] - clock.left(k)[0];
            width[k + 1] = width[k];
            match kinds[k] {
                StepKind::Brownian => {
                    width[k + 1] += 1;
                    let d = *dt.get_or_insert(dc);
                    if !(dc > 0.0) || (dc - d).abs() > 1e-9 * d {
                        return Err(Error::InvalidArgument(format!("nonuniform Brownian clock step at slice {k}")));
                    }
                }
                _ => {
                    if dc.abs() > 1e-14 {
                        return Err(Error::InvalidArgument(format!("frozen step {k} advances the clock")));
                    }
                }
            }
        }
        let dt = dt.ok_or_else(|| Error::InvalidArgument("the tree has no Brownian step".into()))?;
        Ok(TreeModel { times, model_times, kinds, width, dt, sqrt_dt: dt.sqrt(), w, clock, snapped })
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn n_steps(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_brownian(&self) -> usize {
        *self.width.last().expect("nonempty")
    }

    pub fn nodes(&self, k: usize) -> usize {
        self.width[k] + 1
    }

    pub fn is_brownian(&self, k: usize) -> bool {
        self.kinds[k] == StepKind::Brownian
    }

    pub fn brownian_value(&self, k: usize, j: usize) -> f64 {
        (2.0 * j as f64 - self.width[k] as f64) * self.sqrt_dt
    }

    /// Offsets of the children of any node across step `k`: node `j` moves
    /// to `j + offset`.
    pub fn child_offsets(&self, k: usize) -> &'static [usize] {
        if self.is_brownian(k) {
            &[0, 1]
        } else {
            &[0]
        }
    }

    /// Clock increment over step `k`.
    pub fn dc(&self, k: usize) -> f64 {
        if self.is_brownian(k) {
            self.dt
        } else {
            0.0
        }
    }

    /// Continuous driver increment over the open cell of step `k`.
    pub fn dw_cont(&self, k: usize) -> Vec<f64> {
        self.w.left(k + 1).iter().zip(self.w.right(k)).map(|(a, b)| a - b).collect()
    }

    /// Right jump of the driver at slice `k < K`.
    pub fn jump(&self, k: usize) -> Vec<f64> {
        if k + 1 >= self.n_slices() {
            return vec![0.0; self.w.dim()];
        }
        self.w.jump(k)
    }

    /// Total variation of the driver on the grid.
    pub fn w_total_variation(&self) -> f64 {
        self.w.total_variation()
    }

    /// Samples a root-to-leaf path of node indices.
    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(self.n_slices());
        let mut j = 0usize;
        nodes.push(j);
        for k in 0..self.n_steps() {
            if self.is_brownian(k) && rng.random::<bool>() {
                j += 1;
            }
            nodes.push(j);
        }
        nodes
    }

    /// Brownian path along a node sequence as a continuous grid path.
    pub fn brownian_path(&self, nodes: &[usize]) -> Result<GridPath> {
        let vals = nodes.iter().enumerate().map(|(k, &j)| self.brownian_value(k, j)).collect();
        GridPath::continuous(self.times.clone(), vals)
    }

    /// Builds a `PathMode` consistent càglàd path from per-slice sides.
    pub fn caglad_path(&self, dim: usize, left: Vec<f64>, right: Vec<f64>) -> Result<GridPath> {
        let mode = if left == right { PathMode::ContinuousLinear } else { PathMode::CagladLinear };
        GridPath::from_flat(self.times.clone(), dim, left, right, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GeneratorSpec, TerminalSpec, VectorFieldSpec};
    use crate::rbsde::problem::JumpMode;

    fn problem(w: GridPath) -> Problem {
        Problem::new(
            1.0,
            TerminalSpec::Constant(vec![1.0]),
            GeneratorSpec::Zero,
            VectorFieldSpec::scalar_constant(1.0),
            w,
            JumpMode::Forward,
        )
        .unwrap()
    }

    #[test]
    fn uniform_tree_shape() {
        let w = GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap();
        let t = TreeModel::build(&problem(w), 4).unwrap();
        assert_eq!(t.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(t.width, vec![0, 1, 2, 3, 4]);
        assert_eq!(t.jump(2), vec![1.0]);
        assert_eq!(t.snapped, 0);
        assert!((t.brownian_value(4, 0) + 4.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn off_grid_jump_is_snapped() {
        let w = GridPath::caglad_jumps(&[0.0, 0.3, 1.0], &[0.0], &[(0.3, vec![1.0])]).unwrap();
        let t = TreeModel::build(&problem(w), 4).unwrap();
        assert_eq!(t.snapped, 1);
        assert_eq!(t.jump(1), vec![1.0]);
    }

    #[test]
    fn inverse_of_nonlinear_clock() {
        let c = GridPath::continuous(vec![0.0, 0.5, 1.0], vec![0.0, 1.5, 2.0]).unwrap();
        assert!((clock_inverse(&c, 0.75) - 0.25).abs() < 1e-15);
        assert!((clock_inverse(&c, 1.75) - 0.75).abs() < 1e-15);
    }
}
