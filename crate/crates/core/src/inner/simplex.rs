//! Dense two-phase primal simplex.
//!
//! Solves `min qᵀx` subject to `E x (≤ | =) h` and `lo ≤ x ≤ hi`, with `lo`
//! finite and `hi` possibly infinite. Finite upper bounds become explicit
//! rows. Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so cycling cannot occur.

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// Primal solution with duals in the "value sensitivity" convention:
/// `row_duals[r] = ∂value/∂h_r` (≤ 0 for `≤` rows), `upper_duals[j] = ∂value/∂hi_j`
/// (≤ 0) and `lower_duals[j] = ∂value/∂lo_j` (≥ 0, the reduced costs).
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub row_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 32;

struct Tableau {
    rows: usize,
    width: usize, // columns including rhs
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    /// Pivot on (r, c); row `self.rows` is the objective row.
    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        let inv = 1.0 / p;
        for k in 0..w {
            self.data[r * w + k] *= inv;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs pivots until optimality. Columns `>= allowed` never enter.
    fn optimize(&mut self, allowed: usize, budget: &mut usize, iters: &mut usize) -> LpStatus {
        let obj = self.rows;
        let rhs = self.rhs_col();
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -COST_TOL;
            for c in 0..allowed {
                let d = self.at(obj, c);
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, rhs).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            if *budget == 0 {
                return LpStatus::IterationLimit;
            }
            *budget -= 1;
            *iters += 1;
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }

    fn reset_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let obj = self.rows;
        for k in 0..w {
            self.data[obj * w + k] = if k < cost.len() { cost[k] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for k in 0..w {
                    self.data[obj * w + k] -= cb * self.data[r * w + k];
                }
            }
        }
    }
}

/// Solves the LP. `senses` may be empty, meaning every row is `≤`.
pub fn solve(
    objective: &[f64],
    rows: &[Vec<f64>],
    senses: &[Sense],
    rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> LpSolution {
    let n = objective.len();
    let m = rows.len();
    debug_assert_eq!(rhs.len(), m);
    debug_assert_eq!(lower.len(), n);
    debug_assert_eq!(upper.len(), n);
    let sense = |r: usize| senses.get(r).copied().unwrap_or(Sense::Le);

    // Shift x = lo + y so that y ≥ 0.
    let mut b: Vec<f64> = (0..m)
        .map(|r| rhs[r] - rows[r].iter().zip(lower).map(|(a, l)| a * l).sum::<f64>())
        .collect();
    let upper_rows: Vec<usize> = (0..n).filter(|&j| upper[j].is_finite()).collect();
    for &j in &upper_rows {
        b.push(upper[j] - lower[j]);
    }
    let total = m + upper_rows.len();
    let is_eq = |r: usize| r < m && sense(r) == Sense::Eq;

    let flip: Vec<bool> = (0..total).map(|r| b[r] < 0.0).collect();
    let needs_art: Vec<bool> = (0..total).map(|r| is_eq(r) || flip[r]).collect();
    let n_slack = (0..total).filter(|&r| !is_eq(r)).count();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let slack0 = n;
    let art0 = n + n_slack;
    let ncols = n + n_slack + n_art;
    let width = ncols + 1;

    let mut t = Tableau {
        rows: total,
        width,
        data: vec![0.0; (total + 1) * width],
        basis: vec![0; total],
    };
    let mut first_col = vec![0usize; total];
    let (mut s, mut a) = (slack0, art0);
    for r in 0..total {
        let sign = if flip[r] { -1.0 } else { 1.0 };
        let base = r * width;
        if r < m {
            for j in 0..n {
                t.data[base + j] = sign * rows[r][j];
            }
        } else {
            t.data[base + upper_rows[r - m]] = sign;
        }
        t.data[base + ncols] = sign * b[r];
        let mut slack_col = None;
        if !is_eq(r) {
            t.data[base + s] = sign;
            slack_col = Some(s);
            s += 1;
        }
        if needs_art[r] {
            t.data[base + a] = 1.0;
            t.basis[r] = a;
            first_col[r] = a;
            a += 1;
        } else {
            let sc = slack_col.expect("le row has slack");
            t.basis[r] = sc;
            first_col[r] = sc;
        }
    }

    let mut budget = 50 * (ncols + total) + 1000;
    let mut iters = 0usize;
    let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        for c in cost.iter_mut().skip(art0) {
            *c = 1.0;
        }
        t.reset_objective(&cost);
        let st = t.optimize(ncols, &mut budget, &mut iters);
        if st == LpStatus::IterationLimit {
            return failed(LpStatus::IterationLimit, n, m, iters, lower);
        }
        let infeas: f64 = (0..total)
            .filter(|&r| t.basis[r] >= art0)
            .map(|r| t.at(r, ncols).abs())
            .sum();
        if infeas > FEAS_TOL * scale {
            return failed(LpStatus::Infeasible, n, m, iters, lower);
        }
        for r in 0..total {
            if t.basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&c| t.at(r, c).abs() > 1e-9) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(objective);
    t.reset_objective(&cost);
    let status = t.optimize(art0, &mut budget, &mut iters);
    if status == LpStatus::Unbounded {
        return failed(LpStatus::Unbounded, n, m, iters, lower);
    }

    let mut x = lower.to_vec();
    for r in 0..total {
        let j = t.basis[r];
        if j < n {
            x[j] = lower[j] + t.at(r, ncols).max(0.0);
        }
    }
    for j in 0..n {
        if upper[j].is_finite() && x[j] > upper[j] {
            x[j] = upper[j];
        }
    }
    let mut duals = vec![0.0; total];
    for r in 0..total {
        let pi = -t.at(total, first_col[r]);
        duals[r] = if flip[r] { -pi } else { pi };
    }
    let mut upper_duals = vec![0.0; n];
    for (k, &j) in upper_rows.iter().enumerate() {
        upper_duals[j] = duals[m + k];
    }
    duals.truncate(m);
    let lower_duals: Vec<f64> = (0..n).map(|j| t.at(total, j)).collect();
    let value = objective.iter().zip(&x).map(|(q, v)| q * v).sum();
    LpSolution {
        status,
        x,
        value,
        row_duals: duals,
        upper_duals,
        lower_duals,
        iterations: iters,
    }
}

fn failed(status: LpStatus, n: usize, m: usize, iterations: usize, lower: &[f64]) -> LpSolution {
    LpSolution {
        status,
        x: lower.to_vec(),
        value: f64::NAN,
        row_duals: vec![0.0; m],
        upper_duals: vec![0.0; n],
        lower_duals: vec![0.0; n],
        iterations,
    }
}
