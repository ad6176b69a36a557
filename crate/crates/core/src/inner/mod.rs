//! Per-period second-stage problem.
//!
//! For fixed `(c, λ, θ)` solves `min_x f_θ(x) + s Σᵢ λᵢ gᵢ(c, x)/(T βᵢ)` over
//! `K(θ, c)` with `s = +1` (packing) or `−1` (covering), and returns the
//! Lagrangian `L̄(c, λ, θ)` and a subgradient in `c` built from the LP duals.

pub mod kelley;
pub mod simplex;

pub use simplex::{LpSolution, LpStatus, Sense};

use crate::error::{Error, Result};
use crate::model::{dot, ConstraintFn, CostFn, ProblemInstance, TypeRealization};

/// `{x : E x ≤ h, lower ≤ x ≤ upper}` with `∂h/∂c` attached to each row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polyhedron {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub sensitivity: Vec<Vec<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Polyhedron {
    /// Materializes `K(θ, c)`.
    pub fn feasible_set(theta: &TypeRealization, c: &[f64], inst: &ProblemInstance) -> Self {
        let dim_x = inst.dim_x();
        let dim_c = c.len();
        let mut p = Polyhedron {
            lower: inst.second_stage_box.lower(),
            upper: inst.second_stage_box.hi.clone(),
            ..Default::default()
        };
        for (k, row) in theta.coupling.iter().enumerate() {
            p.rows.push(row.clone());
            p.rhs.push(c[k]);
            let mut s = vec![0.0; dim_c];
            s[k] = 1.0;
            p.sensitivity.push(s);
        }
        let extra = theta.extra.rows(c, dim_x);
        p.rows.extend(extra.rows);
        p.rhs.extend(extra.rhs);
        p.sensitivity.extend(extra.sensitivity);
        p
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for (row, h) in self.rows.iter().zip(&self.rhs) {
            r = r.max(dot(row, x) - h);
        }
        for ((v, l), u) in x.iter().zip(&self.lower).zip(&self.upper) {
            r = r.max(l - v).max(v - u);
        }
        r
    }

    /// Indices of rows violated at `x`.
    pub fn violated_rows(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| dot(&self.rows[r], x) - self.rhs[r] > tol)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    /// Optimal value of the weighted objective.
    pub value: f64,
    /// `γ* ≤ 0`, the sensitivity of the value to each row's right-hand side.
    pub row_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub status: LpStatus,
    /// Set when the solution came from the first-order fallback.
    pub approximate: bool,
}

/// Which optimal point to return when the optimum is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Whatever vertex the simplex stops at (deterministic).
    #[default]
    Vertex,
    /// The lexicographically smallest optimal vertex.
    Lexicographic,
}

pub fn lp_solve(objective: &[f64], poly: &Polyhedron) -> InnerSolution {
    let s = simplex::solve(
        objective,
        &poly.rows,
        &[],
        &poly.rhs,
        &poly.lower,
        &poly.upper,
    );
    InnerSolution {
        x: s.x,
        value: s.value,
        row_duals: s.row_duals,
        upper_duals: s.upper_duals,
        lower_duals: s.lower_duals,
        status: s.status,
        approximate: false,
    }
}

/// Optimal solution whose `x` is lexicographically smallest among optima.
/// Duals are those of the plain solve; any optimal dual pairs with any optimal primal.
pub fn lp_solve_lex(objective: &[f64], poly: &Polyhedron) -> InnerSolution {
    let mut base = lp_solve(objective, poly);
    if base.status != LpStatus::Optimal {
        return base;
    }
    let n = poly.dim();
    let mut rows = poly.rows.clone();
    let mut rhs = poly.rhs.clone();
    let tol = 1e-9 * (1.0 + base.value.abs());
    rows.push(objective.to_vec());
    rhs.push(base.value + tol);
    let mut upper = poly.upper.clone();
    let mut x = base.x.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let s = simplex::solve(&e, &rows, &[], &rhs, &poly.lower, &upper);
        if s.status != LpStatus::Optimal {
            break;
        }
        upper[j] = s.x[j].max(poly.lower[j]);
        x = s.x;
    }
    base.x = x;
    base
}

/// `(q, constant)` such that the weighted objective equals `q·x + constant`,
/// or `None` when some function is an opaque oracle.
fn linear_objective(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
) -> Option<(Vec<f64>, f64)> {
    let CostFn::Linear { q } = &theta.cost else {
        return None;
    };
    let dim_x = inst.dim_x();
    let mut obj: Vec<f64> = (0..dim_x)
        .map(|j| q.get(j).copied().unwrap_or(0.0))
        .collect();
    let mut constant = 0.0;
    let s = inst.direction.sign();
    let t = inst.horizon as f64;
    for (i, g) in theta.constraints.iter().enumerate() {
        let ConstraintFn::Affine(a) = g else {
            return None;
        };
        let w = s * lambda[i] / (t * inst.beta[i]);
        if w == 0.0 {
            continue;
        }
        for (o, aj) in obj.iter_mut().zip(&a.a) {
            *o += w * aj;
        }
        constant += w * (dot(&a.b, c) + a.d);
    }
    Some((obj, constant))
}

fn weighted_objective(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
    x: &[f64],
) -> f64 {
    let s = inst.direction.sign();
    let t = inst.horizon as f64;
    theta.cost.value(x)
        + theta
            .constraints
            .iter()
            .enumerate()
            .map(|(i, g)| s * lambda[i] * g.eval(c, x) / (t * inst.beta[i]))
            .sum::<f64>()
}

pub fn solve_second_stage(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
) -> Result<InnerSolution> {
    solve_second_stage_with(c, lambda, theta, inst, TieBreak::Vertex)
}

pub fn solve_second_stage_with(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
    tie: TieBreak,
) -> Result<InnerSolution> {
    if lambda.len() != inst.m() || theta.constraints.len() != inst.m() {
        return Err(Error::Dimension(format!(
            "λ has {} entries, type has {} constraints, instance has {}",
            lambda.len(),
            theta.constraints.len(),
            inst.m()
        )));
    }
    if c.len() != inst.dim_c() {
        return Err(Error::Dimension(format!(
            "c has {} entries, C has dimension {}",
            c.len(),
            inst.dim_c()
        )));
    }
    if lambda.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("c or λ".into()));
    }
    let poly = Polyhedron::feasible_set(theta, c, inst);
    let sol = match linear_objective(c, lambda, theta, inst) {
        Some((q, constant)) => {
            let mut s = match tie {
                TieBreak::Vertex => lp_solve(&q, &poly),
                TieBreak::Lexicographic => lp_solve_lex(&q, &poly),
            };
            s.value += constant;
            s
        }
        None => oracle_fallback(c, lambda, theta, inst, &poly),
    };
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => {
            let zero = vec![0.0; poly.dim()];
            Err(Error::Infeasible(format!(
                "rows violated at x = 0: {:?}",
                poly.violated_rows(&zero, 1e-9)
            )))
        }
        LpStatus::Unbounded => Err(Error::Solver("second-stage LP unbounded".into())),
        LpStatus::IterationLimit => Err(Error::Solver(
            "second-stage LP hit the iteration limit".into(),
        )),
    }
}

/// Value, solution and c-subgradient of `L̄` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub lagrangian: f64,
    pub subgradient: Vec<f64>,
    pub solution: InnerSolution,
}

pub fn lagrangian_from(
    c: &[f64],
    lambda: &[f64],
    inst: &ProblemInstance,
    sol: &InnerSolution,
) -> f64 {
    let s = inst.direction.sign();
    inst.first_stage_cost.value(c) - s * lambda.iter().sum::<f64>() / inst.horizon as f64
        + sol.value
}

pub fn lagrangian_value(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
) -> Result<f64> {
    let sol = solve_second_stage(c, lambda, theta, inst)?;
    Ok(lagrangian_from(c, lambda, inst, &sol))
}

/// `∇p(c) + (∂h/∂c)ᵀ γ* + s Σᵢ λᵢ ∇_c gᵢ(c, x*)/(T βᵢ)`.
pub fn subgradient_from(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
    sol: &InnerSolution,
) -> Result<Vec<f64>> {
    let poly = Polyhedron::feasible_set(theta, c, inst);
    if sol.row_duals.len() != poly.rows.len() {
        return Err(Error::Dimension(
            "duals do not match the feasible set rows".into(),
        ));
    }
    let mut g = inst.first_stage_cost.grad(c);
    for (gamma, sens) in sol.row_duals.iter().zip(&poly.sensitivity) {
        for (gk, sk) in g.iter_mut().zip(sens) {
            *gk += gamma * sk;
        }
    }
    let s = inst.direction.sign();
    let t = inst.horizon as f64;
    for (i, gi) in theta.constraints.iter().enumerate() {
        if lambda[i] == 0.0 {
            continue;
        }
        let w = s * lambda[i] / (t * inst.beta[i]);
        for (gk, dk) in g.iter_mut().zip(gi.grad_c(c, &sol.x)) {
            *gk += w * dk;
        }
    }
    Ok(g)
}

pub fn subgradient_c(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
) -> Result<Vec<f64>> {
    let sol = solve_second_stage(c, lambda, theta, inst)?;
    subgradient_from(c, lambda, theta, inst, &sol)
}

pub fn evaluate(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
) -> Result<Evaluation> {
    let solution = solve_second_stage(c, lambda, theta, inst)?;
    let subgradient = subgradient_from(c, lambda, theta, inst, &solution)?;
    Ok(Evaluation {
        lagrangian: lagrangian_from(c, lambda, inst, &solution),
        subgradient,
        solution,
    })
}

const FALLBACK_ITERS: usize = 500;

/// Projected subgradient on the weighted objective, then one LP on its
/// linearization at the final point to recover multipliers.
fn oracle_fallback(
    c: &[f64],
    lambda: &[f64],
    theta: &TypeRealization,
    inst: &ProblemInstance,
    poly: &Polyhedron,
) -> InnerSolution {
    let n = poly.dim();
    let feasible = lp_solve(&vec![0.0; n], poly);
    if feasible.status != LpStatus::Optimal {
        return feasible;
    }
    let grad = |x: &[f64]| -> Vec<f64> {
        let mut g = match &theta.cost {
            CostFn::Linear { q } => (0..n).map(|j| q.get(j).copied().unwrap_or(0.0)).collect(),
            CostFn::Oracle(o) => o.grad_x(c, x),
        };
        let s = inst.direction.sign();
        let t = inst.horizon as f64;
        for (i, gi) in theta.constraints.iter().enumerate() {
            let w = s * lambda[i] / (t * inst.beta[i]);
            if w == 0.0 {
                continue;
            }
            let gx = match gi {
                ConstraintFn::Affine(a) => {
                    (0..n).map(|j| a.a.get(j).copied().unwrap_or(0.0)).collect()
                }
                ConstraintFn::Oracle(o) => o.grad_x(c, x),
            };
            for (a, b) in g.iter_mut().zip(gx) {
                *a += w * b;
            }
        }
        g
    };
    let diam = poly
        .lower
        .iter()
        .zip(&poly.upper)
        .map(|(l, u)| (u - l).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1e-12);
    let mut x = feasible.x;
    let mut best = x.clone();
    let mut best_val = weighted_objective(c, lambda, theta, inst, &x);
    for k in 1..=FALLBACK_ITERS {
        let g = grad(&x);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let step = diam / (norm * (k as f64).sqrt());
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        x = project_polyhedron(poly, &y);
        let v = weighted_objective(c, lambda, theta, inst, &x);
        if v < best_val {
            best_val = v;
            best = x.clone();
        }
    }
    let lin = lp_solve(&grad(&best), poly);
    InnerSolution {
        x: best,
        value: best_val,
        row_duals: lin.row_duals,
        upper_duals: lin.upper_duals,
        lower_duals: lin.lower_duals,
        status: LpStatus::Optimal,
        approximate: true,
    }
}

/// Euclidean projection onto a polyhedron by Dykstra's alternating projections.
pub fn project_polyhedron(poly: &Polyhedron, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let sets = poly.rows.len() + 1;
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; n]; sets];
    for _ in 0..200 {
        let mut moved: f64 = 0.0;
        for s in 0..sets {
            let z: Vec<f64> = x.iter().zip(&incr[s]).map(|(a, b)| a + b).collect();
            let p: Vec<f64> = if s < poly.rows.len() {
                let a = &poly.rows[s];
                let aa = dot(a, a);
                let viol = dot(a, &z) - poly.rhs[s];
                if viol > 0.0 && aa > 0.0 {
                    z.iter().zip(a).map(|(v, ai)| v - viol / aa * ai).collect()
                } else {
                    z.clone()
                }
            } else {
                z.iter()
                    .zip(&poly.lower)
                    .zip(&poly.upper)
                    .map(|((v, l), u)| v.clamp(*l, *u))
                    .collect()
            };
            for j in 0..n {
                incr[s][j] = z[j] - p[j];
                moved = moved.max((p[j] - x[j]).abs());
            }
            x = p;
        }
        if moved < 1e-12 {
            break;
        }
    }
    x
}
