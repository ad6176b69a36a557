//! Exact joint LP for finite first-stage sets and exactly discrete segments.
//!
//! The first stage is randomized: `ρ_{j,p}` is the probability of playing
//! point `p` in segment `j` and `y_{j,p,k} = ρ_{j,p} x_{j,p,k}` is the
//! second-stage decision for atom `k` scaled by that probability, which keeps
//! every constraint linear. The long-term rows' duals are `λ̂*`.

use super::dual::{minimize_c, DualSolution, SaaSegment, SearchOptions};
use crate::error::{Error, Result};
use crate::inner::{simplex, LpStatus, Polyhedron, Sense};
use crate::model::{ConstraintFn, CostFn, FirstStageSet, ProblemInstance};

pub fn solve_exact(inst: &ProblemInstance, segs: &[SaaSegment]) -> Result<DualSolution> {
    let FirstStageSet::Finite { points } = &inst.first_stage_set else {
        return Err(Error::InvalidArgument(
            "exact solve needs a finite first-stage set".into(),
        ));
    };
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "finite first-stage set is empty".into(),
        ));
    }
    let m = inst.m();
    let n = inst.dim_x();
    let kp = points.len();
    let t = inst.horizon as f64;
    let lower = inst.second_stage_box.lower();
    let upper = &inst.second_stage_box.hi;

    // Column layout: per segment, per point: ρ then per atom n entries of y.
    let mut offsets = Vec::new();
    let mut ncols = 0usize;
    for seg in segs {
        let mut per_point = Vec::new();
        for _ in 0..kp {
            per_point.push(ncols);
            ncols += 1 + seg.types.len() * n;
        }
        offsets.push(per_point);
    }

    let mut obj = vec![0.0; ncols];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    let mut long_term = vec![vec![0.0; ncols]; m];
    let mut lo = vec![0.0; ncols];
    let mut hi = vec![0.0; ncols];

    for (j, seg) in segs.iter().enumerate() {
        let len = seg.len() as f64;
        let mut simplex_row = vec![0.0; ncols];
        for (p, c) in points.iter().enumerate() {
            let base = offsets[j][p];
            simplex_row[base] = 1.0;
            hi[base] = 1.0;
            obj[base] += len * inst.first_stage_cost.value(c);
            for (k, (theta, w)) in seg.types.iter().zip(&seg.weights).enumerate() {
                let y0 = base + 1 + k * n;
                let CostFn::Linear { q } = &theta.cost else {
                    return Err(Error::InvalidArgument(
                        "exact solve needs linear second-stage costs".into(),
                    ));
                };
                for (l, ql) in q.iter().enumerate().take(n) {
                    obj[y0 + l] += len * w * ql;
                }
                for l in 0..n {
                    lo[y0 + l] = 0.0;
                    hi[y0 + l] = upper[l];
                    let mut r = vec![0.0; ncols];
                    r[y0 + l] = 1.0;
                    r[base] = -upper[l];
                    rows.push(r);
                    senses.push(Sense::Le);
                    rhs.push(0.0);
                    if lower[l] > 0.0 {
                        let mut r = vec![0.0; ncols];
                        r[y0 + l] = -1.0;
                        r[base] = lower[l];
                        rows.push(r);
                        senses.push(Sense::Le);
                        rhs.push(0.0);
                    }
                }
                let poly = Polyhedron::feasible_set(theta, c, inst);
                for (er, h) in poly.rows.iter().zip(&poly.rhs) {
                    let mut r = vec![0.0; ncols];
                    r[y0..y0 + n].copy_from_slice(er);
                    r[base] = -h;
                    rows.push(r);
                    senses.push(Sense::Le);
                    rhs.push(0.0);
                }
                for (i, g) in theta.constraints.iter().enumerate() {
                    let ConstraintFn::Affine(a) = g else {
                        return Err(Error::InvalidArgument(
                            "exact solve needs affine constraints".into(),
                        ));
                    };
                    let scale = len * w / (t * inst.beta[i]);
                    for (l, al) in a.a.iter().enumerate().take(n) {
                        long_term[i][y0 + l] += scale * al;
                    }
                    long_term[i][base] += scale * (crate::model::dot(&a.b, c) + a.d);
                }
            }
        }
        rows.push(simplex_row);
        senses.push(Sense::Eq);
        rhs.push(1.0);
    }
    let s = inst.direction.sign();
    let first_long = rows.len();
    for row in long_term {
        rows.push(row.iter().map(|v| s * v).collect());
        senses.push(Sense::Le);
        rhs.push(s);
    }

    let sol = simplex::solve(&obj, &rows, &senses, &rhs, &lo, &hi);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(
                "long-term targets cannot be met in expectation".into(),
            ))
        }
        other => return Err(Error::Solver(format!("exact joint LP returned {other:?}"))),
    }
    // Row dual is ∂value/∂(s·1); λ enters as −s·dual so that λ ≥ 0 for both directions.
    let lambda: Vec<f64> = (0..m)
        .map(|i| (-sol.row_duals[first_long + i]).max(0.0))
        .collect();

    let mut targets = Vec::with_capacity(segs.len());
    let mut mixtures = Vec::with_capacity(segs.len());
    for (j, seg) in segs.iter().enumerate() {
        let mut beta_hat = vec![0.0; m];
        let mut mix = Vec::new();
        for (p, c) in points.iter().enumerate() {
            let base = offsets[j][p];
            let rho = sol.x[base];
            if rho > 1e-12 {
                mix.push((c.clone(), rho));
            }
            for (k, (theta, w)) in seg.types.iter().zip(&seg.weights).enumerate() {
                let y0 = base + 1 + k * n;
                for (i, g) in theta.constraints.iter().enumerate() {
                    if let ConstraintFn::Affine(a) = g {
                        let v = crate::model::dot(&a.a, &sol.x[y0..y0 + n])
                            + (crate::model::dot(&a.b, c) + a.d) * rho;
                        beta_hat[i] += w * v;
                    }
                }
            }
        }
        targets.push(beta_hat);
        mixtures.push(mix);
    }
    let opts = SearchOptions::default();
    let evals = segs
        .iter()
        .map(|seg| minimize_c(inst, seg, &lambda, &opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(DualSolution {
        lambda,
        value: sol.value,
        gap: 0.0,
        converged: true,
        iterations: sol.iterations,
        evals,
        recovered_targets: Some(targets),
        mixtures: Some(mixtures),
    })
}
