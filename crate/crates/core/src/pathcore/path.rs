//! Sampled paths with explicit one-sided limits at every grid time.
//!
//! Each grid time `t_i` carries a left-side vector `L_i` (`values`) and a
//! right-side vector `R_i` (`right_limits`). On the open cell `(t_i, t_{i+1})`
//! the path is linear from `R_i` to `L_{i+1}`. The mode decides which side is
//! the value at `t_i`: càglàd paths take `L_i`, càdlàg paths take `R_i`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Relative tolerance used to identify grid times coming from different paths.
pub const TIME_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathMode {
    /// Constant on `(t_i, t_{i+1}]` at `R_i`, jump `Δ⁺x(t_i) = R_i − L_i`.
    CagladPureJump,
    /// `L_i = R_i` everywhere, linear in between.
    ContinuousLinear,
    /// Constant on `[t_i, t_{i+1})` at `R_i`, `L_i` stores the left limit.
    CadlagPureJump,
    /// Left-continuous, right jumps at grid times, linear on open cells.
    CagladLinear,
    /// Right-continuous, left jumps at grid times, linear on open cells.
    CadlagLinear,
}

impl PathMode {
    pub fn is_cadlag(self) -> bool {
        matches!(self, PathMode::CadlagPureJump | PathMode::CadlagLinear)
    }

    pub fn is_continuous(self) -> bool {
        self == PathMode::ContinuousLinear
    }

    pub fn is_pure_jump(self) -> bool {
        matches!(self, PathMode::CagladPureJump | PathMode::CadlagPureJump)
    }

    pub fn name(self) -> &'static str {
        match self {
            PathMode::CagladPureJump => "caglad-pure-jump",
            PathMode::ContinuousLinear => "continuous-piecewise-linear",
            PathMode::CadlagPureJump => "cadlag-pure-jump",
            PathMode::CagladLinear => "caglad-piecewise-linear",
            PathMode::CadlagLinear => "cadlag-piecewise-linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "caglad-pure-jump" => PathMode::CagladPureJump,
            "continuous-piecewise-linear" => PathMode::ContinuousLinear,
            "cadlag-pure-jump" => PathMode::CadlagPureJump,
            "caglad-piecewise-linear" => PathMode::CagladLinear,
            "cadlag-piecewise-linear" => PathMode::CadlagLinear,
            other => return Err(Error::Parse(format!("unknown path mode '{other}'"))),
        })
    }
}

/// Where a time falls relative to a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Locus {
    Node(usize),
    /// Inside the open cell `(t_i, t_{i+1})` at fraction `theta ∈ (0, 1)`.
    Cell(usize, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    times: Vec<f64>,
    dim: usize,
    left: Vec<f64>,
    right: Vec<f64>,
    mode: PathMode,
}

impl GridPath {
    /// Builds a path from per-time vectors, validating the mode invariants.
    pub fn new(
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        right_limits: Vec<Vec<f64>>,
        mode: PathMode,
    ) -> Result<Self> {
        let n = times.len();
        if values.len() != n || right_limits.len() != n {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values and {} right limits",
                n,
                values.len(),
                right_limits.len()
            )));
        }
        let dim = values.first().map(|v| v.len()).unwrap_or(0);
        let left: Vec<f64> = values.into_iter().flatten().collect();
        let right: Vec<f64> = right_limits.into_iter().flatten().collect();
        Self::from_flat(times, dim, left, right, mode)
    }

    pub fn from_flat(
        times: Vec<f64>,
        dim: usize,
        left: Vec<f64>,
        right: Vec<f64>,
        mode: PathMode,
    ) -> Result<Self> {
        let path = GridPath {
            times,
            dim,
            left,
            right,
            mode,
        };
        path.validate()?;
        Ok(path)
    }

    /// Scalar path from left values and right limits.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>, rights: Vec<f64>, mode: PathMode) -> Result<Self> {
        Self::from_flat(times, 1, values, rights, mode)
    }

    /// Continuous piecewise-linear scalar path through the given points.
    pub fn continuous(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let rights = values.clone();
        Self::from_flat(times, 1, values, rights, PathMode::ContinuousLinear)
    }

    /// Continuous piecewise-linear vector path.
    pub fn continuous_vec(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let rights = values.clone();
        Self::new(times, values, rights, PathMode::ContinuousLinear)
    }

    /// Càglàd pure-jump path starting at `x0` with jumps `(time, size)`.
    /// Jump times are inserted into `grid`; a jump at `T` is kept as a right
    /// limit at the terminal time.
    pub fn caglad_jumps(grid: &[f64], x0: &[f64], jumps: &[(f64, Vec<f64>)]) -> Result<Self> {
        let dim = x0.len();
        let mut times: Vec<f64> = grid.to_vec();
        for (t, _) in jumps {
            times.push(*t);
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        times.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL * b.abs().max(1.0));
        let mut left = Vec::with_capacity(times.len() * dim);
        let mut right = Vec::with_capacity(times.len() * dim);
        let mut level = x0.to_vec();
        for &t in &times {
            left.extend_from_slice(&level);
            for (s, size) in jumps {
                if (s - t).abs() <= TIME_TOL * t.abs().max(1.0) {
                    if size.len() != dim {
                        return Err(Error::Dimension(format!("jump of dim {} for path of dim {dim}", size.len())));
                    }
                    for (l, d) in level.iter_mut().zip(size) {
                        *l += d;
                    }
                }
            }
            right.extend_from_slice(&level);
        }
        Self::from_flat(times, dim, left, right, PathMode::CagladPureJump)
    }

    /// Constant path on `[0, horizon]`.
    pub fn constant(horizon: f64, value: &[f64]) -> Result<Self> {
        let v = vec![value.to_vec(), value.to_vec()];
        Self::new(vec![0.0, horizon], v.clone(), v, PathMode::ContinuousLinear)
    }

    /// Identity clock `t ↦ t` on `[0, horizon]`.
    pub fn identity(horizon: f64) -> Result<Self> {
        Self::continuous(vec![0.0, horizon], vec![0.0, horizon])
    }

    fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::InvalidPath("need at least two grid times".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if self.left.len() != n * self.dim || self.right.len() != n * self.dim {
            return Err(Error::InvalidPath("ragged value arrays".into()));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidPath(format!("first time {} is not 0", self.times[0])));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidPath(format!("times not strictly increasing at {}", w[0])));
            }
        }
        if self.times.iter().chain(&self.left).chain(&self.right).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path".into()));
        }
        let scale = self
            .left
            .iter()
            .chain(&self.right)
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        match self.mode {
            PathMode::ContinuousLinear => {
                for i in 0..n {
                    if dist(self.left(i), self.right(i)) > tol {
                        return Err(Error::InvalidPath(format!(
                            "continuous path has a jump at t = {}",
                            self.times[i]
                        )));
                    }
                }
            }
            PathMode::CagladPureJump | PathMode::CadlagPureJump => {
                for i in 0..n - 1 {
                    if dist(self.right(i), self.left(i + 1)) > tol {
                        return Err(Error::InvalidPath(format!(
                            "pure-jump path moves inside the cell at t = {}",
                            self.times[i]
                        )));
                    }
                }
            }
            PathMode::CagladLinear | PathMode::CadlagLinear => {}
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> PathMode {
        self.mode
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated")
    }

    /// Left-side vector `L_i` (stored `values[i]`).
    pub fn left(&self, i: usize) -> &[f64] {
        &self.left[i * self.dim..(i + 1) * self.dim]
    }

    /// Right-side vector `R_i` (stored `right_limits[i]`).
    pub fn right(&self, i: usize) -> &[f64] {
        &self.right[i * self.dim..(i + 1) * self.dim]
    }

    /// The value `x(t_i)` according to the mode.
    pub fn value(&self, i: usize) -> &[f64] {
        if self.mode.is_cadlag() {
            self.right(i)
        } else {
            self.left(i)
        }
    }

    /// Jump across `t_i`, `R_i − L_i`.
    pub fn jump(&self, i: usize) -> Vec<f64> {
        self.right(i).iter().zip(self.left(i)).map(|(r, l)| r - l).collect()
    }

    pub fn has_jump(&self, i: usize) -> bool {
        self.right(i).iter().zip(self.left(i)).any(|(r, l)| r != l)
    }

    /// Indices `i` with `t_i < T` and a nonzero jump.
    pub fn jump_indices(&self) -> Vec<usize> {
        (0..self.len() - 1).filter(|&i| self.has_jump(i)).collect()
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.left
    }

    pub fn rights_flat(&self) -> &[f64] {
        &self.right
    }

    pub fn locate(&self, t: f64) -> Locus {
        let tol = TIME_TOL * t.abs().max(1.0);
        let idx = self.times.partition_point(|&s| s < t - tol);
        if idx < self.times.len() && (self.times[idx] - t).abs() <= tol {
            return Locus::Node(idx);
        }
        if idx == 0 {
            return Locus::Node(0);
        }
        if idx >= self.times.len() {
            return Locus::Node(self.times.len() - 1);
        }
        let i = idx - 1;
        let theta = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Locus::Cell(i, theta)
    }

    fn interp(&self, i: usize, theta: f64) -> Vec<f64> {
        self.right(i)
            .iter()
            .zip(self.left(i + 1))
            .map(|(a, b)| a + theta * (b - a))
            .collect()
    }

    /// `x(t−)`; at grid times this is `L_i`.
    pub fn left_at(&self, t: f64) -> Vec<f64> {
        match self.locate(t) {
            Locus::Node(i) => self.left(i).to_vec(),
            Locus::Cell(i, th) => self.interp(i, th),
        }
    }

    /// `x(t+)`; at grid times this is `R_i`.
    pub fn right_at(&self, t: f64) -> Vec<f64> {
        match self.locate(t) {
            Locus::Node(i) => self.right(i).to_vec(),
            Locus::Cell(i, th) => self.interp(i, th),
        }
    }

    /// `x(t)` according to the mode.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        match self.locate(t) {
            Locus::Node(i) => self.value(i).to_vec(),
            Locus::Cell(i, th) => self.interp(i, th),
        }
    }

    /// Same data read with another continuity convention (e.g. `y⁺` from `y`).
    pub fn with_mode(&self, mode: PathMode) -> Result<Self> {
        Self::from_flat(self.times.clone(), self.dim, self.left.clone(), self.right.clone(), mode)
    }

    /// Version of the path whose value at every time is the right limit.
    pub fn right_limit_path(&self) -> Result<Self> {
        let mode = match self.mode {
            PathMode::CagladPureJump => PathMode::CadlagPureJump,
            PathMode::CagladLinear => PathMode::CadlagLinear,
            m => m,
        };
        self.with_mode(mode)
    }

    /// Version of the path whose value at every time is the left limit.
    pub fn left_limit_path(&self) -> Result<Self> {
        let mode = match self.mode {
            PathMode::CadlagPureJump => PathMode::CagladPureJump,
            PathMode::CadlagLinear => PathMode::CagladLinear,
            m => m,
        };
        self.with_mode(mode)
    }

    /// Component `k` as a scalar path.
    pub fn component(&self, k: usize) -> Result<Self> {
        if k >= self.dim {
            return Err(Error::Dimension(format!("component {k} of a {}-dim path", self.dim)));
        }
        let left = (0..self.len()).map(|i| self.left(i)[k]).collect();
        let right = (0..self.len()).map(|i| self.right(i)[k]).collect();
        Self::from_flat(self.times.clone(), 1, left, right, self.mode)
    }

    /// Applies `f` to both sides at every grid time. Linear interpolation of the
    /// image is kept, so pure-jump paths stay exact and linear ones are sampled.
    pub fn map(&self, out_dim: usize, mut f: impl FnMut(f64, &[f64]) -> Vec<f64>) -> Result<Self> {
        let mut left = Vec::with_capacity(self.len() * out_dim);
        let mut right = Vec::with_capacity(self.len() * out_dim);
        for i in 0..self.len() {
            let t = self.times[i];
            let l = f(t, self.left(i));
            let r = if self.has_jump(i) { f(t, self.right(i)) } else { l.clone() };
            if l.len() != out_dim || r.len() != out_dim {
                return Err(Error::Dimension("map output".into()));
            }
            left.extend(l);
            right.extend(r);
        }
        Self::from_flat(self.times.clone(), out_dim, left, right, self.mode)
    }

    /// Resamples the path onto `grid` (which must start at 0 and end at the
    /// same horizon). Jumps falling strictly inside a cell of `grid` are moved
    /// to the cell's left endpoint; the number of moved jumps is returned.
    pub fn resample_caglad(&self, grid: &[f64]) -> Result<(Self, usize)> {
        let n = grid.len();
        if n < 2 || (grid[n - 1] - self.horizon()).abs() > TIME_TOL * self.horizon().max(1.0) {
            return Err(Error::InvalidArgument("resampling grid must span the path horizon".into()));
        }
        let mut left = Vec::with_capacity(n * self.dim);
        let mut right = Vec::with_capacity(n * self.dim);
        for &t in grid {
            left.extend(self.left_at(t));
            right.extend(self.right_at(t));
        }
        let mut moved = 0;
        for i in self.jump_indices() {
            let t = self.times[i];
            if let Locus::Cell(k, _) = locate_in(grid, t) {
                moved += 1;
                let jump = self.jump(i);
                for (d, j) in jump.iter().enumerate() {
                    right[k * self.dim + d] += j;
                }
            }
        }
        let mode = if left == right { PathMode::ContinuousLinear } else { PathMode::CagladLinear };
        Ok((Self::from_flat(grid.to_vec(), self.dim, left, right, mode)?, moved))
    }

    /// Total variation over the whole grid (sum of all vertex increments).
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for i in 0..self.len() {
            tv += dist(self.left(i), self.right(i));
            if i + 1 < self.len() {
                tv += dist(self.right(i), self.left(i + 1));
            }
        }
        tv
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# mode={} dim={}", self.mode.name(), self.dim)?;
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend((0..self.dim).map(|k| format!("value{k}")));
        header.extend((0..self.dim).map(|k| format!("right_limit{k}")));
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:.17e}", self.times[i])];
            row.extend(self.left(i).iter().map(|v| format!("{v:.17e}")));
            row.extend(self.right(i).iter().map(|v| format!("{v:.17e}")));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let mode_str = first
            .trim()
            .trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("mode="))
            .ok_or_else(|| Error::Parse("missing '# mode=...' header line".into()))?;
        let mode = PathMode::parse(mode_str)?;
        let mut rdr = csv::Reader::from_reader(input);
        let ncols = rdr.headers()?.len();
        if ncols < 3 || (ncols - 1) % 2 != 0 {
            return Err(Error::Parse(format!("expected time + 2·dim columns, got {ncols}")));
        }
        let dim = (ncols - 1) / 2;
        let (mut times, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            times.push(nums[0]);
            left.extend_from_slice(&nums[1..1 + dim]);
            right.extend_from_slice(&nums[1 + dim..]);
        }
        Self::from_flat(times, dim, left, right, mode)
    }
}

/// Locates `t` in a bare grid of times.
pub fn locate_in(grid: &[f64], t: f64) -> Locus {
    let tol = TIME_TOL * t.abs().max(1.0);
    let idx = grid.partition_point(|&s| s < t - tol);
    if idx < grid.len() && (grid[idx] - t).abs() <= tol {
        return Locus::Node(idx);
    }
    if idx == 0 {
        return Locus::Node(0);
    }
    if idx >= grid.len() {
        return Locus::Node(grid.len() - 1);
    }
    let i = idx - 1;
    Locus::Cell(i, (t - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Sorted union of grids, identifying times closer than [`TIME_TOL`].
pub fn merge_times(grids: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flat_map(|g| g.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    all.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL * b.abs().max(1.0));
    all
}

/// Uniform grid `0, T/n, …, T`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    g[n] = horizon;
    g
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> GridPath {
        GridPath::caglad_jumps(&[0.0, 0.5, 1.0], &[0.0], &[(0.5, vec![1.0])]).unwrap()
    }

    #[test]
    fn caglad_step_limits() {
        let x = step();
        assert_eq!(x.value_at(0.5), vec![0.0]);
        assert_eq!(x.right_at(0.5), vec![1.0]);
        assert_eq!(x.value_at(0.75), vec![1.0]);
        assert_eq!(x.jump_indices(), vec![1]);
    }

    #[test]
    fn cadlag_reading_takes_right_side() {
        let y = step().right_limit_path().unwrap();
        assert_eq!(y.mode(), PathMode::CadlagPureJump);
        assert_eq!(y.value_at(0.5), vec![1.0]);
        assert_eq!(y.left_at(0.5), vec![0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridPath::continuous(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GridPath::continuous(vec![0.1, 1.0], vec![1.0, 1.0]).is_err());
        assert!(GridPath::scalar(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0], PathMode::ContinuousLinear).is_err());
        assert!(GridPath::scalar(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0], PathMode::CagladPureJump).is_err());
    }

    #[test]
    fn interpolates_in_cells() {
        let x = GridPath::continuous(vec![0.0, 2.0], vec![0.0, 4.0]).unwrap();
        assert_eq!(x.value_at(0.5), vec![1.0]);
    }

    #[test]
    fn resample_moves_offgrid_jumps_left() {
        let x = GridPath::caglad_jumps(&[0.0, 1.0], &[0.0], &[(0.3, vec![2.0])]).unwrap();
        let (r, moved) = x.resample_caglad(&[0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(moved, 1);
        assert_eq!(r.right(1), &[2.0]);
        assert_eq!(r.left(2), &[2.0]);
        assert_eq!(r.left(1), &[0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let x = step();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let y = GridPath::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(x, y);
    }
}
