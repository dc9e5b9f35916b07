//! The Skorokhod-type metric `α_p` on decorated paths, evaluated on the
//! vertex sequences of the δ-extensions.
//!
//! A reparameterization is represented by a monotone matching of the two
//! vertex sequences with steps `(1,0)`, `(0,1)` and `(1,1)`. Between matched
//! pairs both paths are traversed linearly, so the difference path is linear
//! too and its sup and p-variation are attained on the matched pairs. A
//! diagonal step is allowed only when both segments are continuous or both
//! are jumps, since a jump cannot be spread over an interval of the other
//! path. Single steps are limits of strictly increasing bijections.
//!
//! Both sequences are first refined onto the union of the two extended
//! grids, which leaves the paths unchanged. An optional value lattice adds
//! the points where a continuous segment crosses a multiple of the lattice
//! step in some coordinate, so that ramps of different durations share their
//! vertex values and can be matched proportionally.
//!
//! The objective of a matching is `max(max |s_i − u_j|, ‖d‖)`, with `d` the
//! difference sequence and `‖d‖ = |d_0| + ‖d‖_{p-var}`, or `sup |d|` for
//! `p = ∞`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::pathcore::path::{dist, merge_times, norm, GridPath, TIME_TOL};
use crate::pathcore::pvar::PVarAccumulator;

use super::{delta_extension, DecoratedPath};

/// Largest vertex sequence accepted by [`alpha_brute`].
pub const BRUTE_MAX_SAMPLES: usize = 12;

/// Longest matching refined by local search in [`alpha_p_upper`].
pub const LOCAL_SEARCH_MAX_LEN: usize = 64;

const WEIGHTS: [f64; 7] = [0.0, 0.25, 1.0, 4.0, 16.0, 64.0, 1024.0];

/// Time-distortion thresholds tried by the banded alignments on large pair
/// grids.
const MAX_THRESHOLDS: usize = 12;

/// Pair grids up to this size try every pairwise time distance.
const ALL_THRESHOLDS_MAX_PAIRS: usize = 1024;

/// Vertex sequence of an extended path: `L_i`, then `R_i` when it differs.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Samples {
    pub fn from_path(path: &GridPath) -> Samples {
        Self::on_grid(path, path.times())
    }

    /// Vertices at every time of `grid`, which must contain the path's grid.
    pub fn on_grid(path: &GridPath, grid: &[f64]) -> Samples {
        let mut times = Vec::with_capacity(2 * grid.len());
        let mut values = Vec::with_capacity(2 * grid.len());
        for &t in grid {
            let (l, r) = (path.left_at(t), path.right_at(t));
            times.push(t);
            let jump = l != r;
            values.push(l);
            if jump {
                times.push(t);
                values.push(r);
            }
        }
        Samples { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn is_jump(&self, i: usize) -> bool {
        self.times[i + 1] - self.times[i] <= TIME_TOL * self.times[i].abs().max(1.0)
    }

    /// Inserts the crossings of every continuous segment with the levels
    /// `k · step` of each coordinate.
    pub fn refine_lattice(&self, step: f64) -> Samples {
        let mut times = Vec::with_capacity(self.len());
        let mut values = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            times.push(self.times[i]);
            values.push(self.values[i].clone());
            if i + 1 == self.len() || self.is_jump(i) {
                continue;
            }
            let (x, y) = (&self.values[i], &self.values[i + 1]);
            let mut fracs: Vec<f64> = Vec::new();
            for (&u, &v) in x.iter().zip(y) {
                if u == v {
                    continue;
                }
                let (lo, hi) = (u.min(v), u.max(v));
                let mut k = (lo / step).floor() + 1.0;
                while k * step < hi {
                    let theta = (k * step - u) / (v - u);
                    if theta > 1e-12 && theta < 1.0 - 1e-12 {
                        fracs.push(theta);
                    }
                    k += 1.0;
                }
            }
            fracs.sort_by(f64::total_cmp);
            fracs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            let dt = self.times[i + 1] - self.times[i];
            for theta in fracs {
                times.push(self.times[i] + theta * dt);
                values.push(x.iter().zip(y).map(|(u, v)| u + theta * (v - u)).collect());
            }
        }
        Samples { times, values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReparamMatching {
    /// Matched vertex indices, monotone, from `(0, 0)` to the last pair.
    pub pairs: Vec<(usize, usize)>,
    /// Knots `(u_j, s_i)` of the piecewise-linear `λ` from the second path's
    /// extended time to the first one's.
    pub lambda: Vec<(f64, f64)>,
    /// `max |s_i − u_j|` over the pairs.
    pub time_distortion: f64,
    /// `‖d‖` of the difference sequence.
    pub pvar_diff: f64,
    pub objective: f64,
}

impl ReparamMatching {
    /// Whether the pairs form a complete monotone matching of sequences of
    /// lengths `n1` and `n2`.
    pub fn is_valid(&self, n1: usize, n2: usize) -> bool {
        if self.pairs.first() != Some(&(0, 0)) || self.pairs.last() != Some(&(n1 - 1, n2 - 1)) {
            return false;
        }
        self.pairs.windows(2).all(|w| {
            let (di, dj) = (w[1].0 as isize - w[0].0 as isize, w[1].1 as isize - w[0].1 as isize);
            matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
        })
    }
}

/// Norm of a difference sequence.
pub fn diff_norm(d: &[Vec<f64>], p: f64) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return d.iter().map(|v| norm(v)).fold(0.0, f64::max);
    }
    let mut acc = PVarAccumulator::new(p, d[0].len());
    if d[0].len() == 1 {
        for x in turning_points(d) {
            acc.push(&[x]);
        }
    } else {
        for v in d {
            acc.push(v);
        }
    }
    norm(&d[0]) + acc.value()
}

/// Endpoints and local extrema of a scalar sequence, repeats removed. For
/// `p ≥ 1` the p-variation is attained on these points.
fn turning_points(d: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(d.len());
    for v in d {
        let x = v[0];
        match out.len() {
            0 => out.push(x),
            _ if x == out[out.len() - 1] => {}
            1 => out.push(x),
            n => {
                let (u, w) = (out[n - 2], out[n - 1]);
                if (w - u) * (x - w) > 0.0 {
                    out[n - 1] = x;
                } else {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Exact objective of a matching.
pub fn evaluate(a: &Samples, b: &Samples, pairs: Vec<(usize, usize)>, p: f64) -> ReparamMatching {
    let time_distortion = pairs.iter().map(|&(i, j)| (a.times[i] - b.times[j]).abs()).fold(0.0, f64::max);
    let d: Vec<Vec<f64>> = pairs.iter().map(|&(i, j)| diff(&a.values[i], &b.values[j])).collect();
    let pvar_diff = diff_norm(&d, p);
    let lambda = pairs.iter().map(|&(i, j)| (b.times[j], a.times[i])).collect();
    ReparamMatching { pairs, lambda, time_distortion, pvar_diff, objective: time_distortion.max(pvar_diff) }
}

fn diagonal_ok(a: &Samples, b: &Samples, i: usize, j: usize) -> bool {
    a.is_jump(i) == b.is_jump(j)
}

/// Lexicographic `(bottleneck, sum)` or pure-sum alignment under the pair cost
/// `max(w |s_i − u_j|, |x_i − y_j|)`.
fn align(a: &Samples, b: &Samples, w: f64, bottleneck: bool) -> Vec<(usize, usize)> {
    let (n1, n2) = (a.len(), b.len());
    let cost = |i: usize, j: usize| (w * (a.times[i] - b.times[j]).abs()).max(dist(&a.values[i], &b.values[j]));
    let mut best = vec![(f64::INFINITY, f64::INFINITY); n1 * n2];
    let mut from = vec![0u8; n1 * n2];
    let at = |i: usize, j: usize| i * n2 + j;
    let c0 = cost(0, 0);
    best[0] = if bottleneck { (c0, c0) } else { (0.0, c0) };
    for i in 0..n1 {
        for j in 0..n2 {
            if i == 0 && j == 0 {
                continue;
            }
            let c = cost(i, j);
            let mut cand = (f64::INFINITY, f64::INFINITY);
            let mut dir = 0u8;
            let mut consider = |prev: (f64, f64), d: u8| {
                let v = if bottleneck { (prev.0.max(c), prev.1 + c) } else { (0.0, prev.1 + c) };
                if v < cand {
                    cand = v;
                    dir = d;
                }
            };
            if i > 0 && j > 0 && diagonal_ok(a, b, i - 1, j - 1) {
                consider(best[at(i - 1, j - 1)], 3);
            }
            if i > 0 {
                consider(best[at(i - 1, j)], 1);
            }
            if j > 0 {
                consider(best[at(i, j - 1)], 2);
            }
            best[at(i, j)] = cand;
            from[at(i, j)] = dir;
        }
    }
    trace_back(&from, n1, n2)
}

#[derive(Clone, Copy)]
enum BandCost {
    /// `|d_0| + Σ |Δd|`: the exact objective for `p = 1` and an upper bound
    /// of `‖d‖` for every `p`.
    Variation,
    /// `Σ |Δd|^p` with the exponent of the [`PairGrid`].
    PowerSum,
    /// `(max |d|, Σ |Δd|)` lexicographically: exact for `p = ∞`.
    Sup,
}

/// Differences `d_ij = x_i − y_j` and edge lengths shared by the banded
/// alignments. Edge slots are `0` from `(i−1, j)`, `1` from `(i, j−1)` and `2`
/// from `(i−1, j−1)`; a missing or forbidden edge is `NaN`.
struct PairGrid<'s> {
    a: &'s Samples,
    b: &'s Samples,
    n2: usize,
    dim: usize,
    d: Vec<f64>,
    dnorm: Vec<f64>,
    edge: Vec<[f64; 3]>,
    /// `edge^p` for the exponent passed to [`PairGrid::new`].
    edge_p: Vec<[f64; 3]>,
}

impl<'s> PairGrid<'s> {
    fn new(a: &'s Samples, b: &'s Samples, p: f64) -> Self {
        let (n1, n2, dim) = (a.len(), b.len(), a.values[0].len());
        let mut d = Vec::with_capacity(n1 * n2 * dim);
        for x in &a.values {
            for y in &b.values {
                d.extend(x.iter().zip(y).map(|(u, v)| u - v));
            }
        }
        let cell = |k: usize| &d[k * dim..(k + 1) * dim];
        let dnorm = (0..n1 * n2).map(|k| norm(cell(k))).collect();
        let mut edge = vec![[f64::NAN; 3]; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let k = i * n2 + j;
                if i > 0 {
                    edge[k][0] = dist(cell(k), cell(k - n2));
                }
                if j > 0 {
                    edge[k][1] = dist(cell(k), cell(k - 1));
                }
                if i > 0 && j > 0 && diagonal_ok(a, b, i - 1, j - 1) {
                    edge[k][2] = dist(cell(k), cell(k - n2 - 1));
                }
            }
        }
        let edge_p = if p.is_finite() { edge.iter().map(|e| e.map(|x| pow_p(x, p))).collect() } else { Vec::new() };
        PairGrid { a, b, n2, dim, d, dnorm, edge, edge_p }
    }

    fn cell(&self, k: usize) -> &[f64] {
        &self.d[k * self.dim..(k + 1) * self.dim]
    }

    fn pred(&self, k: usize, slot: usize) -> usize {
        match slot {
            0 => k - self.n2,
            1 => k - 1,
            _ => k - self.n2 - 1,
        }
    }

    /// Column range of row `i` inside the band `|s_i − u_j| ≤ θ`.
    fn band(&self, i: usize, theta: f64) -> std::ops::Range<usize> {
        let s = self.a.times[i];
        let lo = self.b.times.partition_point(|&u| u < s && s - u > theta);
        let hi = self.b.times.partition_point(|&u| u <= s || u - s <= theta);
        lo..hi
    }

    fn admits(&self, theta: f64) -> bool {
        let (n1, n2) = (self.a.len(), self.b.len());
        (self.a.times[0] - self.b.times[0]).abs() <= theta && (self.a.times[n1 - 1] - self.b.times[n2 - 1]).abs() <= theta
    }

    fn trace(&self, from: &[u8]) -> Vec<(usize, usize)> {
        let mut k = self.a.len() * self.n2 - 1;
        let mut pairs = vec![(k / self.n2, k % self.n2)];
        while k > 0 {
            k = self.pred(k, from[k] as usize);
            pairs.push((k / self.n2, k % self.n2));
        }
        pairs.reverse();
        pairs
    }
}

/// Best matching under `cost` among those with time distortion at most
/// `theta`, or `None` when the band admits no matching.
fn band_align(g: &PairGrid, theta: f64, cost: BandCost) -> Option<Vec<(usize, usize)>> {
    if !g.admits(theta) {
        return None;
    }
    let cells = g.a.len() * g.n2;
    let mut best = vec![(f64::INFINITY, f64::INFINITY); cells];
    let mut from = vec![0u8; cells];
    best[0] = match cost {
        BandCost::Variation => (0.0, g.dnorm[0]),
        BandCost::PowerSum => (0.0, 0.0),
        BandCost::Sup => (g.dnorm[0], 0.0),
    };
    for i in 0..g.a.len() {
        for j in g.band(i, theta) {
            let k = i * g.n2 + j;
            if k == 0 {
                continue;
            }
            let edges = match cost {
                BandCost::PowerSum => &g.edge_p[k],
                _ => &g.edge[k],
            };
            let mut cand = (f64::INFINITY, f64::INFINITY);
            let mut dir = 0u8;
            for slot in [2usize, 0, 1] {
                let step = edges[slot];
                if step.is_nan() {
                    continue;
                }
                let (p0, p1) = best[g.pred(k, slot)];
                if !p1.is_finite() {
                    continue;
                }
                let v = match cost {
                    BandCost::Sup => (p0.max(g.dnorm[k]), p1 + step),
                    _ => (0.0, p1 + step),
                };
                if v < cand {
                    cand = v;
                    dir = slot as u8;
                }
            }
            best[k] = cand;
            from[k] = dir;
        }
    }
    if !best[cells - 1].1.is_finite() {
        return None;
    }
    Some(g.trace(&from))
}

/// Labels kept per cell by [`band_align_runs`] on small and large pair grids.
const RUN_LABELS_SMALL: usize = 6;
const RUN_LABELS_LARGE: usize = 2;

/// `x^p`, through `powi` for small integer exponents.
fn pow_p(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p <= 16.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

#[derive(Clone, Copy)]
struct RunLabel {
    score: f64,
    closed: f64,
    /// `|run|^p`.
    open: f64,
    prev: usize,
    prev_label: usize,
}

/// Banded alignment under `Σ |run|^p` over the monotone runs of `d`, a step
/// continuing the current run when it points the same way. Keeps the best
/// few labels per cell, so this is a heuristic.
fn band_align_runs(g: &PairGrid, theta: f64, p: f64) -> Option<Vec<(usize, usize)>> {
    if !g.admits(theta) {
        return None;
    }
    let cells = g.a.len() * g.n2;
    let keep = if cells <= ALL_THRESHOLDS_MAX_PAIRS { RUN_LABELS_SMALL } else { RUN_LABELS_LARGE };
    let dim = g.dim;
    let mut count = vec![0usize; cells];
    let mut labels = vec![RunLabel { score: 0.0, closed: 0.0, open: 0.0, prev: usize::MAX, prev_label: 0 }; cells * keep];
    let mut runs = vec![0.0; cells * keep * dim];
    count[0] = 1;
    let mut cand: Vec<RunLabel> = Vec::with_capacity(3 * keep);
    let mut cand_runs: Vec<f64> = Vec::with_capacity(3 * keep * dim);
    let mut step = vec![0.0; dim];
    let mut order: Vec<usize> = Vec::with_capacity(3 * keep);
    for i in 0..g.a.len() {
        for j in g.band(i, theta) {
            let k = i * g.n2 + j;
            if k == 0 {
                continue;
            }
            cand.clear();
            cand_runs.clear();
            for slot in [2usize, 0, 1] {
                if g.edge[k][slot].is_nan() {
                    continue;
                }
                let prev = g.pred(k, slot);
                for (s, (x, y)) in step.iter_mut().zip(g.cell(k).iter().zip(g.cell(prev))) {
                    *s = x - y;
                }
                for l in 0..count[prev] {
                    let lab = labels[prev * keep + l];
                    let r = &runs[(prev * keep + l) * dim..(prev * keep + l + 1) * dim];
                    let same = r.iter().zip(&step).map(|(x, y)| x * y).sum::<f64>() >= 0.0;
                    let closed = if same {
                        cand_runs.extend(r.iter().zip(&step).map(|(x, y)| x + y));
                        lab.closed
                    } else {
                        cand_runs.extend_from_slice(&step);
                        lab.closed + lab.open
                    };
                    let open = pow_p(norm(&cand_runs[cand_runs.len() - dim..]), p);
                    cand.push(RunLabel { score: closed + open, closed, open, prev, prev_label: l });
                }
            }
            order.clear();
            order.extend(0..cand.len());
            order.sort_by(|&x, &y| cand[x].score.total_cmp(&cand[y].score));
            let mut n = 0;
            for &c in &order {
                if n == keep {
                    break;
                }
                let run = &cand_runs[c * dim..(c + 1) * dim];
                let dup = (0..n).any(|m| {
                    let kept = &runs[(k * keep + m) * dim..(k * keep + m + 1) * dim];
                    (labels[k * keep + m].closed - cand[c].closed).abs() <= 1e-12
                        && kept.iter().zip(run).all(|(x, y)| (x - y).abs() <= 1e-12)
                });
                if !dup {
                    labels[k * keep + n] = cand[c];
                    runs[(k * keep + n) * dim..(k * keep + n + 1) * dim].copy_from_slice(run);
                    n += 1;
                }
            }
            count[k] = n;
        }
    }
    if count[cells - 1] == 0 {
        return None;
    }
    let mut pairs = Vec::with_capacity(g.a.len() + g.n2);
    let (mut k, mut l) = (cells - 1, 0);
    loop {
        pairs.push((k / g.n2, k % g.n2));
        let lab = labels[k * keep + l];
        if lab.prev == usize::MAX {
            break;
        }
        k = lab.prev;
        l = lab.prev_label;
    }
    pairs.reverse();
    Some(pairs)
}

/// Candidate thresholds: pairwise time distances up to `cap`, thinned to
/// [`MAX_THRESHOLDS`] quantiles on large pair grids.
fn thresholds(a: &Samples, b: &Samples, cap: f64) -> Vec<f64> {
    let mut all: Vec<f64> = a
        .times
        .iter()
        .flat_map(|s| b.times.iter().map(move |u| (s - u).abs()))
        .filter(|&t| t <= cap + TIME_TOL)
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| (*x - *y).abs() <= TIME_TOL);
    if all.len() <= MAX_THRESHOLDS || a.len() * b.len() <= ALL_THRESHOLDS_MAX_PAIRS {
        return all;
    }
    let last = all.len() - 1;
    (0..MAX_THRESHOLDS).map(|k| all[k * last / (MAX_THRESHOLDS - 1)]).collect()
}

fn trace_back(from: &[u8], n1: usize, n2: usize) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (n1 - 1, n2 - 1);
    let mut pairs = vec![(i, j)];
    while i > 0 || j > 0 {
        match from[i * n2 + j] {
            1 => i -= 1,
            2 => j -= 1,
            _ => {
                i -= 1;
                j -= 1;
            }
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    pairs
}

fn steps_of(pairs: &[(usize, usize)]) -> Vec<u8> {
    pairs
        .windows(2)
        .map(|w| match (w[1].0 - w[0].0, w[1].1 - w[0].1) {
            (1, 0) => 1,
            (0, 1) => 2,
            _ => 3,
        })
        .collect()
}

fn pairs_of(steps: &[u8]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(steps.len() + 1);
    let (mut i, mut j) = (0, 0);
    pairs.push((0, 0));
    for s in steps {
        match s {
            1 => i += 1,
            2 => j += 1,
            _ => {
                i += 1;
                j += 1;
            }
        }
        pairs.push((i, j));
    }
    pairs
}

fn steps_valid(a: &Samples, b: &Samples, steps: &[u8]) -> bool {
    let (mut i, mut j) = (0, 0);
    for s in steps {
        match s {
            1 => i += 1,
            2 => j += 1,
            _ => {
                if !diagonal_ok(a, b, i, j) {
                    return false;
                }
                i += 1;
                j += 1;
            }
        }
    }
    true
}

/// Best-improvement search. Moves: a diagonal step splits into two single
/// steps in either order, two adjacent single steps merge into a diagonal or
/// swap, and a single step is relocated to any other position.
fn local_search(a: &Samples, b: &Samples, start: ReparamMatching, p: f64) -> ReparamMatching {
    let mut cur = start;
    for _ in 0..500 {
        let steps = steps_of(&cur.pairs);
        let mut best: Option<ReparamMatching> = None;
        let try_steps = |s: Vec<u8>, best: &mut Option<ReparamMatching>| {
            if !steps_valid(a, b, &s) {
                return;
            }
            let m = evaluate(a, b, pairs_of(&s), p);
            let target = best.as_ref().map_or(cur.objective, |x| x.objective);
            if m.objective < target * (1.0 - 1e-12) - 1e-15 {
                *best = Some(m);
            }
        };
        for k in 0..steps.len() {
            if steps[k] == 3 {
                for (x, y) in [(1u8, 2u8), (2, 1)] {
                    let mut s = steps.clone();
                    s.splice(k..=k, [x, y]);
                    try_steps(s, &mut best);
                }
                continue;
            }
            if k + 1 < steps.len() && steps[k + 1] != 3 && steps[k] != steps[k + 1] {
                let mut s = steps.clone();
                s.splice(k..=k + 1, [3]);
                try_steps(s, &mut best);
                let mut s = steps.clone();
                s.swap(k, k + 1);
                try_steps(s, &mut best);
            }
            for l in 0..steps.len() {
                if l != k && l != k + 1 {
                    let mut s = steps.clone();
                    let x = s.remove(k);
                    s.insert(if l > k { l - 1 } else { l }, x);
                    try_steps(s, &mut best);
                }
            }
        }
        match best {
            Some(m) => cur = m,
            None => break,
        }
    }
    cur
}

fn upper_on_samples(a: &Samples, b: &Samples, p: f64, beam: usize) -> ReparamMatching {
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    let mut evaluated: Vec<ReparamMatching> = Vec::new();
    let mut offer = |c: Vec<(usize, usize)>, evaluated: &mut Vec<ReparamMatching>| {
        if seen.insert(c.clone()) {
            evaluated.push(evaluate(a, b, c, p));
        }
    };
    for &w in &WEIGHTS {
        for bottleneck in [true, false] {
            offer(align(a, b, w, bottleneck), &mut evaluated);
        }
    }
    let kinds = if p.is_infinite() {
        vec![BandCost::Sup]
    } else if p == 1.0 {
        vec![BandCost::Variation]
    } else {
        vec![BandCost::Variation, BandCost::PowerSum, BandCost::Sup]
    };
    // An optimal matching has time distortion at most the best objective.
    let cap = evaluated.iter().map(|m| m.objective).fold(f64::INFINITY, f64::min);
    let grid = PairGrid::new(a, b, p);
    for theta in thresholds(a, b, cap) {
        for &kind in &kinds {
            if let Some(c) = band_align(&grid, theta, kind) {
                offer(c, &mut evaluated);
            }
        }
        if p > 1.0 && p.is_finite() && a.len() * b.len() <= ALL_THRESHOLDS_MAX_PAIRS {
            if let Some(c) = band_align_runs(&grid, theta, p) {
                offer(c, &mut evaluated);
            }
        }
    }
    evaluated.sort_by(|x, y| x.objective.total_cmp(&y.objective));
    evaluated.truncate(beam);
    if a.len() + b.len() <= LOCAL_SEARCH_MAX_LEN {
        evaluated = evaluated.into_iter().map(|m| local_search(a, b, m, p)).collect();
    }
    evaluated.into_iter().min_by(|x, y| x.objective.total_cmp(&y.objective)).expect("beam is nonempty")
}

#[derive(Clone, Debug)]
pub struct AlphaResult {
    /// Minimum over the schedule.
    pub value: f64,
    /// Best matching found per δ.
    pub per_delta: Vec<(f64, ReparamMatching)>,
}

/// Search settings for [`alpha_p_upper_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaConfig {
    pub p: f64,
    pub beam: usize,
    /// Value lattice step; `None` keeps the union-grid vertices only.
    pub lattice: Option<f64>,
}

fn check_inputs(phi1: &DecoratedPath, phi2: &DecoratedPath, p: f64) -> Result<()> {
    if phi1.dim() != phi2.dim() {
        return Err(Error::Dimension("decorated paths differ in dimension".into()));
    }
    if (phi1.horizon() - phi2.horizon()).abs() > TIME_TOL * phi1.horizon().max(1.0) {
        return Err(Error::InvalidArgument("decorated paths differ in horizon".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Exponent(p));
    }
    Ok(())
}

/// Upper bound of `α_p(Φ¹, Φ²)`: for every δ in the schedule, alignment
/// candidates from a family of dynamic programs are evaluated exactly, the
/// best `beam` are refined by local search on short sequences, and both
/// argument orders are tried. Returns the minimum over the schedule.
pub fn alpha_p_upper(phi1: &DecoratedPath, phi2: &DecoratedPath, p: f64, schedule: &[f64], beam: usize) -> Result<AlphaResult> {
    alpha_p_upper_with(phi1, phi2, schedule, &AlphaConfig { p, beam, lattice: None })
}

pub fn alpha_p_upper_with(phi1: &DecoratedPath, phi2: &DecoratedPath, schedule: &[f64], cfg: &AlphaConfig) -> Result<AlphaResult> {
    check_inputs(phi1, phi2, cfg.p)?;
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty delta schedule".into()));
    }
    if cfg.lattice.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidArgument("lattice step must be positive".into()));
    }
    if cfg.beam < 1 {
        return Err(Error::InvalidArgument("beam must be at least 1".into()));
    }
    let mut per_delta = Vec::with_capacity(schedule.len());
    for &delta in schedule {
        let (mut a, mut b) = sample_pair(phi1, phi2, delta)?;
        if let Some(h) = cfg.lattice {
            a = a.refine_lattice(h);
            b = b.refine_lattice(h);
        }
        if a == b {
            per_delta.push((delta, evaluate(&a, &b, (0..a.len()).map(|i| (i, i)).collect(), cfg.p)));
            continue;
        }
        let ab = upper_on_samples(&a, &b, cfg.p, cfg.beam);
        let ba = upper_on_samples(&b, &a, cfg.p, cfg.beam);
        let best = if ba.objective < ab.objective {
            let pairs = ba.pairs.iter().map(|&(j, i)| (i, j)).collect();
            evaluate(&a, &b, pairs, cfg.p)
        } else {
            ab
        };
        per_delta.push((delta, best));
    }
    let value = per_delta.iter().map(|(_, m)| m.objective).fold(f64::INFINITY, f64::min);
    Ok(AlphaResult { value, per_delta })
}

/// Vertex sequences of both δ-extensions on the union of their grids, so
/// that every vertex of one path has a partner at the same time.
pub fn sample_pair(phi1: &DecoratedPath, phi2: &DecoratedPath, delta: f64) -> Result<(Samples, Samples)> {
    let e1 = delta_extension(phi1, delta)?.path;
    let e2 = delta_extension(phi2, delta)?.path;
    let grid = merge_times(&[e1.times(), e2.times()]);
    Ok((Samples::on_grid(&e1, &grid), Samples::on_grid(&e2, &grid)))
}

struct Brute<'a> {
    a: &'a Samples,
    b: &'a Samples,
    p: f64,
    acc: PVarAccumulator,
    d0: f64,
    best: f64,
}

impl Brute<'_> {
    fn visit(&mut self, i: usize, j: usize, tdist: f64, sup: f64) {
        let d = diff(&self.a.values[i], &self.b.values[j]);
        let tdist = tdist.max((self.a.times[i] - self.b.times[j]).abs());
        let sup = sup.max(norm(&d));
        if !self.p.is_infinite() {
            if self.acc.is_empty() {
                self.d0 = norm(&d);
            }
            self.acc.push(&d);
        }
        let partial = if self.p.is_infinite() { sup } else { self.d0 + self.acc.value() };
        let bound = tdist.max(partial);
        if bound < self.best {
            let (n1, n2) = (self.a.len(), self.b.len());
            if i + 1 == n1 && j + 1 == n2 {
                self.best = bound;
            } else {
                if i + 1 < n1 && j + 1 < n2 && diagonal_ok(self.a, self.b, i, j) {
                    self.visit(i + 1, j + 1, tdist, sup);
                }
                if i + 1 < n1 {
                    self.visit(i + 1, j, tdist, sup);
                }
                if j + 1 < n2 {
                    self.visit(i, j + 1, tdist, sup);
                }
            }
        }
        if !self.p.is_infinite() {
            self.acc.pop();
        }
    }
}

/// Exact minimum of the matching objective over all monotone matchings of
/// the extended vertex sequences, by depth-first search with pruning.
pub fn alpha_brute(phi1: &DecoratedPath, phi2: &DecoratedPath, p: f64, delta: f64) -> Result<f64> {
    check_inputs(phi1, phi2, p)?;
    let (a, b) = sample_pair(phi1, phi2, delta)?;
    if a.len() > BRUTE_MAX_SAMPLES || b.len() > BRUTE_MAX_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "brute force needs at most {BRUTE_MAX_SAMPLES} samples per path, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(brute_on_samples(&a, &b, p))
}

/// Exhaustive search on explicit vertex sequences.
pub fn brute_on_samples(a: &Samples, b: &Samples, p: f64) -> f64 {
    let dim = a.values.first().map_or(0, |v| v.len());
    let mut s = Brute { a, b, p, acc: PVarAccumulator::new(p, dim), d0: 0.0, best: f64::INFINITY };
    s.visit(0, 0, 0.0, 0.0);
    s.best
}

/// `‖x^δ ∘ λ_ε − x^δ‖_p` for `λ_ε(t) = t + ε (S/π) sin(π t / S)` on the
/// extended horizon `S = T + δ`, one value per `ε`. Each `λ_ε` is a strictly
/// increasing bijection with `|λ_ε − id|_∞ = ε S/π`. The path must be
/// continuous.
pub fn continuity_parametrization_check(x: &GridPath, p: f64, delta: f64, eps: &[f64]) -> Result<Vec<f64>> {
    if !x.mode().is_continuous() {
        return Err(Error::InvalidArgument("the continuity check needs a continuous path".into()));
    }
    if eps.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(Error::InvalidArgument("eps must lie in [0, 1)".into()));
    }
    let ext = delta_extension(&super::embed_iota(x)?, delta)?.path;
    let s = ext.horizon();
    let mut grid: Vec<f64> = crate::pathcore::path::uniform_grid(s, 4096);
    grid.extend_from_slice(ext.times());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(eps
        .iter()
        .map(|&e| {
            let d: Vec<Vec<f64>> = grid
                .iter()
                .map(|&t| {
                    let l = (t + e * s / std::f64::consts::PI * (std::f64::consts::PI * t / s).sin()).clamp(0.0, s);
                    diff(&ext.value_at(l), &ext.value_at(t))
                })
                .collect();
            diff_norm(&d, p)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::{embed_iota, embed_jmath};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use super::*;

    fn step(t: f64, a: f64) -> GridPath {
        GridPath::caglad_jumps(&[0.0, t, 1.0], &[0.0], &[(t, vec![a])]).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let phi = embed_jmath(&step(0.5, 1.0)).unwrap();
        assert_eq!(alpha_p_upper(&phi, &phi, 2.0, &[0.1], 4).unwrap().value, 0.0);
        assert_eq!(alpha_brute(&phi, &phi, 2.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn shifted_steps_give_the_shift() {
        let h = 0.05;
        let a = embed_iota(&step(0.5, 1.0)).unwrap();
        let b = embed_iota(&step(0.5 + h, 1.0)).unwrap();
        let r = alpha_p_upper(&a, &b, f64::INFINITY, &[0.1, 0.01], 4).unwrap();
        assert!((r.value - h).abs() < 1e-10, "{}", r.value);
        assert!((alpha_brute(&a, &b, f64::INFINITY, 0.01).unwrap() - h).abs() < 1e-10);
    }

    #[test]
    fn step_against_ramp() {
        let a = embed_iota(&step(0.5, 1.0)).unwrap();
        let b = embed_jmath(&step(0.5, 1.0)).unwrap().resampled(16);
        let r = alpha_p_upper(&a, &b, f64::INFINITY, &[0.01], 4).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn matchings_are_valid() {
        let a = embed_jmath(&step(0.3, 1.0)).unwrap().resampled(3);
        let b = embed_iota(&step(0.6, -2.0)).unwrap();
        let r = alpha_p_upper(&a, &b, 2.0, &[0.2], 3).unwrap();
        let (sa, sb) = sample_pair(&a, &b, 0.2).unwrap();
        assert!(r.per_delta[0].1.is_valid(sa.len(), sb.len()));
        assert!(r.value >= alpha_brute(&a, &b, 2.0, 0.2).unwrap() - 1e-12);
    }

    #[test]
    fn brute_rejects_long_sequences() {
        let a = embed_jmath(&step(0.5, 1.0)).unwrap().resampled(20);
        assert!(alpha_brute(&a, &a, 2.0, 0.1).is_err());
    }

    #[test]
    fn lattice_matches_ramps_of_different_duration() {
        let slow = embed_iota(&GridPath::continuous(vec![0.0, 0.4, 0.6, 1.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap()).unwrap();
        let fast = embed_jmath(&step(0.4, 1.0)).unwrap().resampled(8);
        let cfg = AlphaConfig { p: 1.5, beam: 4, lattice: Some(0.125) };
        let r = alpha_p_upper_with(&slow, &fast, &[0.01], &cfg).unwrap();
        assert!(r.value <= 0.2 + 1e-9, "{}", r.value);
        let plain = alpha_p_upper(&slow, &fast, 1.5, &[0.01], 4).unwrap();
        assert!(plain.value > r.value);
    }

    #[test]
    fn turning_points_keep_the_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let d: Vec<Vec<f64>> = (0..n).map(|_| vec![(rng.random_range(-4..5) as f64) * 0.25]).collect();
            for p in [1.0, 1.5, 2.0, 3.0] {
                let mut acc = PVarAccumulator::new(p, 1);
                for v in &d {
                    acc.push(v);
                }
                let full = norm(&d[0]) + acc.value();
                assert!((diff_norm(&d, p) - full).abs() <= 1e-12 * full.max(1.0), "{d:?} {p}");
            }
        }
    }

    #[test]
    fn lattice_keeps_the_path() {
        let s = Samples { times: vec![0.0, 1.0, 1.0, 2.0], values: vec![vec![0.0], vec![0.3], vec![1.0], vec![0.95]] };
        let r = s.refine_lattice(0.25);
        assert_eq!(r.times, vec![0.0, 0.25 / 0.3, 1.0, 1.0, 2.0]);
        assert!((r.values[1][0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn shrinking_reparameterizations() {
        let x = GridPath::continuous(vec![0.0, 0.3, 0.6, 1.0], vec![0.0, 1.0, -0.5, 0.2]).unwrap();
        let v = continuity_parametrization_check(&x, 2.0, 0.1, &[0.4, 0.2, 0.1, 0.05, 0.0]).unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(v[4], 0.0);
    }
}
