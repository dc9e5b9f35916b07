//! Greedy ε̄-partitions of a driver and a clock.

use super::path::{dist, merge_times, GridPath};
use super::pvar::PVarAccumulator;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// Interval endpoints, including `0` and `T`.
    pub breakpoints: Vec<f64>,
    /// Positions of the breakpoints in the merged grid they were chosen from.
    pub indices: Vec<usize>,
    /// Single-cell intervals that still exceed ε̄ because the grid cannot be
    /// split further (a continuous increment larger than ε̄ inside one cell).
    pub unresolved: usize,
}

impl Partition {
    pub fn n_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

/// Scans left to right, closing an interval as soon as extending it would
/// push `‖W‖_{q;(a,b]}` or `|c_{a,b}|` above `eps_bar`. A jump larger than
/// `eps_bar` therefore always ends an interval and starts the next one, where
/// the open-left window excludes it.
pub fn find_partition(w: &GridPath, c: &GridPath, q: f64, eps_bar: f64) -> Result<Partition> {
    if !(eps_bar > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_bar must be positive, got {eps_bar}")));
    }
    if !(q >= 1.0) {
        return Err(Error::Exponent(q));
    }
    let grid = merge_times(&[w.times(), c.times()]);
    let n = grid.len();
    let wl: Vec<Vec<f64>> = grid.iter().map(|&t| w.left_at(t)).collect();
    let wr: Vec<Vec<f64>> = grid.iter().map(|&t| w.right_at(t)).collect();
    let cv: Vec<Vec<f64>> = grid.iter().map(|&t| c.value_at(t)).collect();

    let limit = eps_bar * (1.0 + 1e-12);
    let mut indices = vec![0usize];
    let mut unresolved = 0;
    let mut a = 0usize;
    while a < n - 1 {
        let mut acc = PVarAccumulator::new(q, w.dim());
        acc.push(&wr[a]);
        let mut b = a;
        let mut j = a + 1;
        while j < n {
            acc.push(&wl[j]);
            let ok = acc.value() <= limit && dist(&cv[j], &cv[a]) <= limit;
            if !ok {
                break;
            }
            b = j;
            acc.push(&wr[j]);
            j += 1;
        }
        if b == a {
            b = a + 1;
            unresolved += 1;
        }
        indices.push(b);
        a = b;
    }
    Ok(Partition {
        breakpoints: indices.iter().map(|&i| grid[i]).collect(),
        indices,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_to_split() {
        let w = GridPath::constant(1.0, &[0.0]).unwrap();
        let c = GridPath::identity(1.0).unwrap();
        let p = find_partition(&w, &c, 1.5, 1.0).unwrap();
        assert_eq!(p.breakpoints, vec![0.0, 1.0]);
    }

    #[test]
    fn large_jump_is_a_boundary() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let w = GridPath::caglad_jumps(&grid, &[0.0], &[(0.3, vec![3.0])]).unwrap();
        let c = GridPath::identity(1.0).unwrap();
        let p = find_partition(&w, &c, 1.5, 0.1).unwrap();
        assert!(p.breakpoints.iter().any(|&t| (t - 0.3).abs() < 1e-12));
        assert_eq!(p.unresolved, 0);
    }

    #[test]
    fn zigzag_four_intervals() {
        let w = GridPath::continuous(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let c = GridPath::identity(1.0).unwrap();
        let p = find_partition(&w, &c, 1.0, 1.1).unwrap();
        assert_eq!(p.n_intervals(), 4);
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let w = GridPath::constant(1.0, &[0.0]).unwrap();
        let c = GridPath::identity(1.0).unwrap();
        assert!(find_partition(&w, &c, 1.0, 0.0).is_err());
    }
}
