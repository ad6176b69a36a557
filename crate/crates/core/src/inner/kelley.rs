//! Kelley's cutting-plane method for maximizing a concave function over a box.

use super::simplex::{self, LpStatus};
use crate::error::{Error, Result};

/// One oracle answer: value, supergradient and whatever the caller attached.
pub struct Cut<P> {
    pub point: Vec<f64>,
    pub value: f64,
    pub supergradient: Vec<f64>,
    pub payload: P,
}

pub struct KelleyOutcome<P> {
    pub cuts: Vec<Cut<P>>,
    /// Index of the best cut.
    pub best: usize,
    /// Master-problem value, an upper bound on the maximum.
    pub upper: f64,
    /// Master duals on each cut; they sum to one at an interior optimum.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl<P> KelleyOutcome<P> {
    pub fn lower(&self) -> f64 {
        self.cuts[self.best].value
    }
}

/// Maximizes a concave `φ` over `[0, cap]^m` starting from the origin. Stops
/// when the master bound is within `tol·(1 + |best|)` of the best value.
pub fn maximize<P>(
    m: usize,
    cap: f64,
    max_iter: usize,
    tol: f64,
    mut oracle: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>, P)>,
) -> Result<KelleyOutcome<P>> {
    let start = vec![0.0; m];
    let (v0, g0, p0) = oracle(&start)?;
    let mut cuts = vec![Cut {
        point: start,
        value: v0,
        supergradient: g0,
        payload: p0,
    }];
    let mut best = 0;
    let mut iterations = 1;
    loop {
        // max z s.t. z ≤ v_k + g_k·(λ − λ_k), written as min −z.
        let mut obj = vec![0.0; m + 1];
        obj[m] = -1.0;
        let rows: Vec<Vec<f64>> = cuts
            .iter()
            .map(|c| {
                c.supergradient
                    .iter()
                    .map(|g| -g)
                    .chain(std::iter::once(1.0))
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = cuts
            .iter()
            .map(|c| {
                c.value
                    - c.supergradient
                        .iter()
                        .zip(&c.point)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        let mut lower = vec![0.0; m + 1];
        lower[m] = cuts[best].value - 1.0;
        let mut up = vec![cap; m + 1];
        up[m] = f64::INFINITY;
        let sol = simplex::solve(&obj, &rows, &[], &rhs, &lower, &up);
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(format!(
                "cutting-plane master returned {:?}",
                sol.status
            )));
        }
        let upper = -sol.value;
        let weights: Vec<f64> = sol.row_duals.iter().map(|d| -d).collect();
        let lb = cuts[best].value;
        let converged = upper - lb <= tol * (1.0 + lb.abs());
        if converged || iterations >= max_iter {
            return Ok(KelleyOutcome {
                cuts,
                best,
                upper,
                weights,
                iterations,
                converged,
            });
        }
        let point = sol.x[..m].to_vec();
        let (v, g, p) = oracle(&point)?;
        iterations += 1;
        if v > cuts[best].value {
            best = cuts.len();
        }
        cuts.push(Cut {
            point,
            value: v,
            supergradient: g,
            payload: p,
        });
    }
}
