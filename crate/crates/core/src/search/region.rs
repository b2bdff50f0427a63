//! N_max over the qutrit region `λ1 ≤ λ0`, `λ0 + λ1 ≤ 1`, `λ1 ≥ (1 - λ0)/2`.
//!
//! The region is the triangle with corners (1/3, 1/3), (1/2, 1/2) and (1, 0).
//! It is sampled on the barycentric lattice
//! `P(i, j) = A + (i/R)(B - A) + (j/R)(C - A)`, `i + j ≤ R`, so every corner
//! and edge is hit exactly. Values come from [`n_max`] and are one-sided: a
//! cell's value is the largest alphabet the search found, and a larger one
//! may exist that the search missed.

use rayon::prelude::*;
use serde::Serialize;

use super::config::SearchConfig;
use super::nmax::n_max;
use crate::error::{Error, Result};
use crate::qstate::{OperatorSet, SchmidtVector};

const CORNER_A: (f64, f64) = (1.0 / 3.0, 1.0 / 3.0);
const CORNER_B: (f64, f64) = (0.5, 0.5);
const CORNER_C: (f64, f64) = (1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCell {
    pub i: usize,
    pub j: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub n_max: usize,
    /// The verified set of size `n_max`.
    #[serde(skip)]
    pub witness: OperatorSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    pub d: usize,
    pub resolution: usize,
    pub cells: Vec<RegionCell>,
    pub config: SearchConfig,
}

/// Lattice coordinates `(i, j, λ0, λ1)` in row order.
pub fn lattice(resolution: usize) -> Vec<(usize, usize, f64, f64)> {
    let r = resolution as f64;
    let mut pts = Vec::new();
    for i in 0..=resolution {
        for j in 0..=(resolution - i) {
            let (a, b) = (i as f64 / r, j as f64 / r);
            let l0 = CORNER_A.0 + a * (CORNER_B.0 - CORNER_A.0) + b * (CORNER_C.0 - CORNER_A.0);
            let l1 = CORNER_A.1 + a * (CORNER_B.1 - CORNER_A.1) + b * (CORNER_C.1 - CORNER_A.1);
            pts.push((i, j, l0, l1.max(0.0)));
        }
    }
    pts
}

pub fn cell_state(lambda0: f64, lambda1: f64) -> Result<SchmidtVector> {
    SchmidtVector::new(&[lambda0, lambda1, (1.0 - lambda0 - lambda1).max(0.0)], 3)
}

pub fn region_map(resolution: usize, config: &SearchConfig) -> Result<RegionMap> {
    if resolution < 8 {
        return Err(Error::BadArguments(format!("resolution must be at least 8, got {resolution}")));
    }
    config.validate()?;
    let points = lattice(resolution);
    let cells = config.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(idx, &(i, j, l0, l1))| {
                let state = cell_state(l0, l1)?;
                let result = n_max(&state, &config.derived(idx as u64))?;
                Ok(RegionCell {
                    i,
                    j,
                    lambda0: l0,
                    lambda1: l1,
                    n_max: result.n_max,
                    witness: result.set,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(RegionMap { d: 3, resolution, cells, config: config.clone() })
}

impl RegionMap {
    pub fn value_at(&self, i: usize, j: usize) -> Option<usize> {
        self.cells.iter().find(|c| c.i == i && c.j == j).map(|c| c.n_max)
    }

    /// Number of connected components (lattice 6-neighbourhood) of cells with value `n`.
    pub fn components(&self, n: usize) -> usize {
        let member = |i: isize, j: isize| -> bool {
            i >= 0 && j >= 0 && self.value_at(i as usize, j as usize) == Some(n)
        };
        let mut seen = std::collections::HashSet::new();
        let mut count = 0;
        for c in self.cells.iter().filter(|c| c.n_max == n) {
            if !seen.insert((c.i as isize, c.j as isize)) {
                continue;
            }
            count += 1;
            let mut stack = vec![(c.i as isize, c.j as isize)];
            while let Some((i, j)) = stack.pop() {
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
                    let nb = (i + di, j + dj);
                    if member(nb.0, nb.1) && seen.insert(nb) {
                        stack.push(nb);
                    }
                }
            }
        }
        count
    }
}
