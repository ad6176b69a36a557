//! Comparison quantities: hindsight and fluid optima, Wasserstein prediction
//! error, regret and violation reports.
//!
//! Objectives are kept in minimization form throughout, so regret is always
//! `ALG − OPT`. For a maximization experiment encoded as `min Σ(−c)` this
//! equals the usual `OPT − ALG` of the original objective.

use serde::{Deserialize, Serialize};

use crate::algorithms::dual::{build_segments, solve_dual, DualSolver, SearchOptions};
use crate::algorithms::EpisodeLog;
use crate::error::{Error, Result};
use crate::inner::simplex::{self, LpStatus, Sense};
use crate::inner::{kelley, lagrangian_value};
use crate::model::{
    ConstraintFn, CostFn, DiscreteDistribution, Distribution, FirstStageSet, ProblemInstance,
    TypeRealization,
};

/// How [`hindsight_opt`] solves the offline program.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HindsightMethod {
    /// Direct when the assembled LP has at most [`DIRECT_LIMIT`] variables.
    #[default]
    Auto,
    /// One LP over all periods.
    Direct,
    /// Lagrangian decomposition over the long-term rows, maximized by cutting planes.
    Decomposition,
}

/// Largest variable count `Auto` sends to the monolithic LP.
pub const DIRECT_LIMIT: usize = 1200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HindsightOptions {
    pub method: HindsightMethod,
    /// Refuse horizons above this length.
    pub max_horizon: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for HindsightOptions {
    fn default() -> Self {
        HindsightOptions {
            method: HindsightMethod::Auto,
            max_horizon: None,
            max_iter: 600,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HindsightValue {
    pub value: f64,
    /// Certified gap between the bounds; zero for direct solves.
    pub gap: f64,
    /// False for a finite first-stage set solved by decomposition, where the
    /// value is only a Lagrangian bound.
    pub exact: bool,
    pub method: HindsightMethod,
}

/// Optimal offline value on a realized stream. Extra rows enter through their
/// affine piece, so `Σx ≥ min(c, ΣD)` becomes `Σx ≥ c`.
pub fn hindsight_opt(
    types: &[TypeRealization],
    inst: &ProblemInstance,
    opts: &HindsightOptions,
) -> Result<HindsightValue> {
    if types.len() != inst.horizon {
        return Err(Error::Dimension(format!(
            "{} types for T = {}",
            types.len(),
            inst.horizon
        )));
    }
    if let Some(cap) = opts.max_horizon {
        if inst.horizon > cap {
            return Err(Error::InvalidArgument(format!(
                "T = {} exceeds the hindsight cap {cap}",
                inst.horizon
            )));
        }
    }
    if inst.first_stage_cost.quadratic.iter().any(|q| *q != 0.0) {
        return Err(Error::InvalidArgument(
            "hindsight solve needs a linear first-stage cost".into(),
        ));
    }
    for theta in types {
        if !theta.is_affine() {
            return Err(Error::InvalidArgument(
                "hindsight solve needs linear costs and affine constraints".into(),
            ));
        }
    }
    let boxed = matches!(inst.first_stage_set, FirstStageSet::Box { .. });
    let vars = inst.horizon * (inst.dim_c() + inst.dim_x());
    let method = match opts.method {
        HindsightMethod::Auto if boxed && vars <= DIRECT_LIMIT => HindsightMethod::Direct,
        HindsightMethod::Auto => HindsightMethod::Decomposition,
        m => m,
    };
    match method {
        HindsightMethod::Direct => {
            if !boxed {
                return Err(Error::InvalidArgument(
                    "direct hindsight solve needs a box first-stage set".into(),
                ));
            }
            direct(types, inst).map(|value| HindsightValue {
                value,
                gap: 0.0,
                exact: true,
                method,
            })
        }
        _ => decomposition(types, inst, opts).map(|(value, gap)| HindsightValue {
            value,
            gap,
            exact: boxed,
            method,
        }),
    }
}

fn linear_cost(theta: &TypeRealization) -> &[f64] {
    match &theta.cost {
        CostFn::Linear { q } => q,
        CostFn::Oracle(_) => unreachable!("checked affine"),
    }
}

/// `(a, b, d)` of constraint `i` with `b` padded to `dim_c`.
fn affine_parts(theta: &TypeRealization, i: usize, dim_c: usize) -> (Vec<f64>, Vec<f64>, f64) {
    match &theta.constraints[i] {
        ConstraintFn::Affine(a) => {
            let mut b = a.b.clone();
            b.resize(dim_c, 0.0);
            (a.a.clone(), b, a.d)
        }
        ConstraintFn::Oracle(_) => unreachable!("checked affine"),
    }
}

/// Per-period rows over `(c, x)`: coupling `B x − c ≤ 0` and the affine piece
/// `E x − H c ≤ h0`.
fn period_rows(theta: &TypeRealization, dim_c: usize, dim_x: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, b) in theta.coupling.iter().enumerate() {
        let mut r = vec![0.0; dim_c + dim_x];
        r[k] = -1.0;
        r[dim_c..].copy_from_slice(b);
        rows.push(r);
        rhs.push(0.0);
    }
    let piece = theta.extra.affine_piece(dim_c, dim_x);
    for ((e, h0), hc) in piece.rows.iter().zip(&piece.h0).zip(&piece.h_c) {
        let mut r: Vec<f64> = hc.iter().map(|v| -v).collect();
        r.extend_from_slice(e);
        rows.push(r);
        rhs.push(*h0);
    }
    (rows, rhs)
}

fn direct(types: &[TypeRealization], inst: &ProblemInstance) -> Result<f64> {
    let (dim_c, dim_x, m) = (inst.dim_c(), inst.dim_x(), inst.m());
    let w = dim_c + dim_x;
    let n = inst.horizon * w;
    let s = inst.direction.sign();
    let (c_lo, c_hi) = match &inst.first_stage_set {
        FirstStageSet::Box { lo, hi } => (lo.clone(), hi.clone()),
        FirstStageSet::Finite { .. } => unreachable!("checked box"),
    };
    let mut obj = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut longterm = vec![vec![0.0; n]; m];
    let mut longterm_rhs: Vec<f64> = inst
        .beta
        .iter()
        .map(|b| s * inst.horizon as f64 * b)
        .collect();
    for (t, theta) in types.iter().enumerate() {
        let off = t * w;
        obj[off..off + dim_c].copy_from_slice(&inst.first_stage_cost.linear);
        obj[off + dim_c..off + w].copy_from_slice(linear_cost(theta));
        lower[off..off + dim_c].copy_from_slice(&c_lo);
        upper[off..off + dim_c].copy_from_slice(&c_hi);
        lower[off + dim_c..off + w].copy_from_slice(&inst.second_stage_box.lower());
        upper[off + dim_c..off + w].copy_from_slice(&inst.second_stage_box.hi);
        let (pr, ph) = period_rows(theta, dim_c, dim_x);
        for (r, h) in pr.into_iter().zip(ph) {
            let mut full = vec![0.0; n];
            full[off..off + w].copy_from_slice(&r);
            rows.push(full);
            rhs.push(h);
        }
        for (i, (row, h)) in longterm.iter_mut().zip(longterm_rhs.iter_mut()).enumerate() {
            let (a, b, d) = affine_parts(theta, i, dim_c);
            for k in 0..dim_c {
                row[off + k] = s * b[k];
            }
            for j in 0..dim_x {
                row[off + dim_c + j] = s * a[j];
            }
            *h -= s * d;
        }
    }
    rows.extend(longterm);
    rhs.extend(longterm_rhs);
    let senses = vec![Sense::Le; rows.len()];
    let sol = simplex::solve(&obj, &rows, &senses, &rhs, &lower, &upper);
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "the offline program has no feasible point".into(),
        )),
        other => Err(Error::Solver(format!("offline LP returned {other:?}"))),
    }
}

/// `min_{c, x} p(c) + f(x) + s Σ λᵢ gᵢ/(Tβᵢ)` for one period; returns the value and `g`.
fn period_min(
    theta: &TypeRealization,
    inst: &ProblemInstance,
    lambda: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let (dim_c, dim_x, m) = (inst.dim_c(), inst.dim_x(), inst.m());
    let s = inst.direction.sign();
    let t = inst.horizon as f64;
    let parts: Vec<_> = (0..m).map(|i| affine_parts(theta, i, dim_c)).collect();
    let mut obj = inst.first_stage_cost.linear.clone();
    obj.extend_from_slice(linear_cost(theta));
    let mut constant = 0.0;
    for (i, (a, b, d)) in parts.iter().enumerate() {
        let wgt = s * lambda[i] / (t * inst.beta[i]);
        for k in 0..dim_c {
            obj[k] += wgt * b[k];
        }
        for j in 0..dim_x {
            obj[dim_c + j] += wgt * a[j];
        }
        constant += wgt * d;
    }
    let (rows, rhs) = period_rows(theta, dim_c, dim_x);
    let mut lower = Vec::with_capacity(dim_c + dim_x);
    let mut upper = Vec::with_capacity(dim_c + dim_x);
    let candidates: Vec<Option<Vec<f64>>> = match &inst.first_stage_set {
        FirstStageSet::Box { lo, hi } => {
            lower.extend_from_slice(lo);
            upper.extend_from_slice(hi);
            vec![None]
        }
        FirstStageSet::Finite { points } => points.iter().cloned().map(Some).collect(),
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cand in candidates {
        let (mut lo, mut hi) = (lower.clone(), upper.clone());
        if let Some(p) = &cand {
            lo = p.clone();
            hi = p.clone();
        }
        lo.extend_from_slice(&inst.second_stage_box.lower());
        hi.extend_from_slice(&inst.second_stage_box.hi);
        let sol = simplex::solve(&obj, &rows, &[], &rhs, &lo, &hi);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            other => return Err(Error::Solver(format!("period LP returned {other:?}"))),
        }
        let v = sol.value + constant;
        if best.as_ref().is_none_or(|b| v < b.0) {
            let (c, x) = sol.x.split_at(dim_c);
            let g = parts
                .iter()
                .map(|(a, b, d)| dot(a, x) + dot(b, c) + d)
                .collect();
            best = Some((v, g));
        }
    }
    best.ok_or_else(|| Error::Infeasible("a period admits no feasible (c, x)".into()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn decomposition(
    types: &[TypeRealization],
    inst: &ProblemInstance,
    opts: &HindsightOptions,
) -> Result<(f64, f64)> {
    let m = inst.m();
    let t = inst.horizon as f64;
    let s = inst.direction.sign();
    let cap = crate::algorithms::dual::LAMBDA_CAP * t;
    let out = kelley::maximize(m, cap, opts.max_iter, opts.tol, |lambda| {
        let mut value = -s * lambda.iter().sum::<f64>();
        let mut sg = vec![-s; m];
        for theta in types {
            let (v, g) = period_min(theta, inst, lambda)?;
            value += v;
            for i in 0..m {
                sg[i] += s * g[i] / (t * inst.beta[i]);
            }
        }
        Ok((value, sg, ()))
    })?;
    let lower = out.lower();
    if out.cuts[out.best].point.iter().any(|l| *l >= 0.99 * cap) {
        return Err(Error::Infeasible(
            "offline dual is unbounded; the targets cannot be met".into(),
        ));
    }
    Ok((lower, (out.upper - lower).max(0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidValue {
    pub value: f64,
    /// Standard error of the sample-average value.
    pub se: f64,
    pub lambda: Vec<f64>,
    pub gap: f64,
    pub converged: bool,
}

/// Sample-average value of the distributional program under `dist`, using
/// the same dual machinery as the prediction-stage solve.
pub fn fluid_opt(
    inst: &ProblemInstance,
    dist: &Distribution,
    n: usize,
    seed: u64,
    solver: DualSolver,
    search: &SearchOptions,
) -> Result<FluidValue> {
    let segs = build_segments(inst, dist, n, seed)?;
    let sol = solve_dual(inst, &segs, solver, search)?;
    // Per-type values of the recovered first-stage mixture; the minimizer at λ*
    // alone can be a degenerate point with no spread.
    let mut var = 0.0;
    for (j, seg) in segs.iter().enumerate().filter(|(_, seg)| !seg.exact) {
        let mixture = match &sol.mixtures {
            Some(mx) => mx[j].clone(),
            None => vec![(sol.evals[j].c.clone(), 1.0)],
        };
        let values = seg
            .types
            .iter()
            .map(|theta| {
                mixture.iter().try_fold(0.0, |acc, (c, w)| {
                    Ok::<f64, Error>(acc + w * lagrangian_value(c, &sol.lambda, theta, inst)?)
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let v = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        var += (seg.len() as f64).powi(2) * v / k;
    }
    Ok(FluidValue {
        value: sol.value,
        se: var.sqrt(),
        lambda: sol.lambda,
        gap: sol.gap,
        converged: sol.converged,
    })
}

/// Sup-norm distance between `(f, g)` descriptors over a box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric {
    pub c_lo: Vec<f64>,
    pub c_hi: Vec<f64>,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// Quasi-random probe count for non-affine pairs.
    pub probes: usize,
}

impl GroundMetric {
    /// `[0, 1]` in every coordinate.
    pub fn unit(dim_c: usize, dim_x: usize) -> Self {
        GroundMetric {
            c_lo: vec![0.0; dim_c],
            c_hi: vec![1.0; dim_c],
            x_lo: vec![0.0; dim_x],
            x_hi: vec![1.0; dim_x],
            probes: 64,
        }
    }

    /// `C × K` of an instance; a finite `C` is replaced by its bounding box.
    pub fn for_instance(inst: &ProblemInstance) -> Self {
        let (c_lo, c_hi) = match &inst.first_stage_set {
            FirstStageSet::Box { lo, hi } => (lo.clone(), hi.clone()),
            FirstStageSet::Finite { points } => {
                let d = inst.dim_c();
                let lo = (0..d)
                    .map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..d)
                    .map(|k| {
                        points
                            .iter()
                            .map(|p| p[k])
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                (lo, hi)
            }
        };
        GroundMetric {
            c_lo,
            c_hi,
            x_lo: inst.second_stage_box.lower(),
            x_hi: inst.second_stage_box.hi.clone(),
            probes: 64,
        }
    }

    pub fn distance(&self, a: &TypeRealization, b: &TypeRealization) -> Result<f64> {
        let dim_x = self.x_lo.len();
        if a.constraints.len() != b.constraints.len() {
            return Err(Error::Dimension(
                "types have different constraint counts".into(),
            ));
        }
        let qa = cost_len(a);
        if qa.is_some_and(|n| n != dim_x) || cost_len(b).is_some_and(|n| n != dim_x) {
            return Err(Error::Dimension(
                "type cost dimension does not match the domain".into(),
            ));
        }
        if a.is_affine() && b.is_affine() {
            let (CostFn::Linear { q: q1 }, CostFn::Linear { q: q2 }) = (&a.cost, &b.cost) else {
                unreachable!("affine types have linear costs")
            };
            let dq: Vec<f64> = q1.iter().zip(q2).map(|(u, v)| u - v).collect();
            let mut d = self.sup_abs(&dq, &[], 0.0);
            for (ga, gb) in a.constraints.iter().zip(&b.constraints) {
                let (ConstraintFn::Affine(x), ConstraintFn::Affine(y)) = (ga, gb) else {
                    unreachable!()
                };
                let da: Vec<f64> = pad(&x.a, dim_x)
                    .iter()
                    .zip(pad(&y.a, dim_x))
                    .map(|(u, v)| u - v)
                    .collect();
                let dim_c = self.c_lo.len();
                let db: Vec<f64> = pad(&x.b, dim_c)
                    .iter()
                    .zip(pad(&y.b, dim_c))
                    .map(|(u, v)| u - v)
                    .collect();
                d = d.max(self.sup_abs(&da, &db, x.d - y.d));
            }
            return Ok(d);
        }
        let mut d: f64 = 0.0;
        for k in 0..self.probes.max(1) {
            let (c, x) = self.probe(k);
            d = d.max((a.cost.value(&x) - b.cost.value(&x)).abs());
            for (ga, gb) in a.constraints.iter().zip(&b.constraints) {
                d = d.max((ga.eval(&c, &x) - gb.eval(&c, &x)).abs());
            }
        }
        Ok(d)
    }

    /// `sup |a·x + b·c + d|` over the box.
    fn sup_abs(&self, a: &[f64], b: &[f64], d: f64) -> f64 {
        let span = |coef: &[f64], lo: &[f64], hi: &[f64]| -> (f64, f64) {
            coef.iter()
                .zip(lo.iter().zip(hi))
                .fold((0.0, 0.0), |(mn, mx), (k, (l, h))| {
                    let (u, v) = (k * l, k * h);
                    (mn + u.min(v), mx + u.max(v))
                })
        };
        let (mn1, mx1) = span(a, &self.x_lo, &self.x_hi);
        let (mn2, mx2) = span(b, &self.c_lo, &self.c_hi);
        (mx1 + mx2 + d).abs().max((mn1 + mn2 + d).abs())
    }

    /// Halton point `k` mapped into the box.
    fn probe(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        const PRIMES: [u64; 24] = [
            2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83,
            89,
        ];
        let radical = |mut i: u64, base: u64| {
            let (mut f, mut r) = (1.0, 0.0);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        };
        let mut coord = 0usize;
        let mut next = |lo: f64, hi: f64| {
            let u = radical(k as u64 + 1, PRIMES[coord % PRIMES.len()]);
            coord += 1;
            lo + u * (hi - lo)
        };
        let c = self
            .c_lo
            .iter()
            .zip(&self.c_hi)
            .map(|(l, h)| next(*l, *h))
            .collect();
        let x = self
            .x_lo
            .iter()
            .zip(&self.x_hi)
            .map(|(l, h)| next(*l, *h))
            .collect();
        (c, x)
    }
}

fn cost_len(t: &TypeRealization) -> Option<usize> {
    match &t.cost {
        CostFn::Linear { q } => Some(q.len()),
        CostFn::Oracle(_) => None,
    }
}

fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(n, 0.0);
    out
}

/// Optimal transport cost between weight vectors under `cost[j][k]`.
pub fn transport(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> Result<f64> {
    let (a, b) = (p.len(), q.len());
    if a == 0 || b == 0 || cost.len() != a || cost.iter().any(|r| r.len() != b) {
        return Err(Error::Dimension(
            "transport cost matrix does not match the weights".into(),
        ));
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if (sp - 1.0).abs() > 1e-9 || (sq - 1.0).abs() > 1e-9 || p.iter().chain(q).any(|w| *w < 0.0) {
        return Err(Error::InvalidArgument(
            "transport weights must be probability vectors".into(),
        ));
    }
    let n = a * b;
    let obj: Vec<f64> = cost.iter().flatten().copied().collect();
    let mut rows = Vec::with_capacity(a + b - 1);
    let mut rhs = Vec::with_capacity(a + b - 1);
    for j in 0..a {
        let mut r = vec![0.0; n];
        r[j * b..(j + 1) * b].iter_mut().for_each(|v| *v = 1.0);
        rows.push(r);
        rhs.push(p[j]);
    }
    // The last column constraint is implied by the others.
    for k in 0..b - 1 {
        let mut r = vec![0.0; n];
        for j in 0..a {
            r[j * b + k] = 1.0;
        }
        rows.push(r);
        rhs.push(q[k]);
    }
    let senses = vec![Sense::Eq; rows.len()];
    let sol = simplex::solve(
        &obj,
        &rows,
        &senses,
        &rhs,
        &vec![0.0; n],
        &vec![f64::INFINITY; n],
    );
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        other => Err(Error::Solver(format!("transport LP returned {other:?}"))),
    }
}

/// 1-Wasserstein distance under the unit-box ground metric.
pub fn wasserstein(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let first = p
        .support
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty support".into()))?;
    let dim_x = cost_len(first).unwrap_or(0);
    let dim_c = first
        .constraints
        .iter()
        .map(|g| match g {
            ConstraintFn::Affine(a) => a.b.len(),
            ConstraintFn::Oracle(_) => 0,
        })
        .max()
        .unwrap_or(0);
    wasserstein_with(p, q, &GroundMetric::unit(dim_c, dim_x))
}

pub fn wasserstein_with(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    metric: &GroundMetric,
) -> Result<f64> {
    p.check()?;
    q.check()?;
    let cost = p
        .support
        .iter()
        .map(|a| {
            q.support
                .iter()
                .map(|b| metric.distance(a, b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    transport(&p.weights, &q.weights, &cost)
}

/// `W_T = Σ_t W(P_t, P̂_t)` when it can be computed exactly: identical leaves
/// contribute zero and discrete leaves are compared by transport.
pub fn prediction_error(inst: &ProblemInstance) -> Result<Option<f64>> {
    let Some(pred) = &inst.prediction else {
        return Ok(None);
    };
    let metric = GroundMetric::for_instance(inst);
    let mut total = 0.0;
    let mut bounds = vec![1usize];
    bounds.extend(
        inst.distribution
            .segments(inst.horizon)
            .iter()
            .map(|s| s.start),
    );
    bounds.extend(pred.segments(inst.horizon).iter().map(|s| s.start));
    bounds.sort_unstable();
    bounds.dedup();
    for (k, &start) in bounds.iter().enumerate() {
        let end = bounds.get(k + 1).map(|b| b - 1).unwrap_or(inst.horizon);
        let len = (end + 1 - start) as f64;
        match (inst.distribution.at(start), pred.at(start)) {
            (a, b) if a == b => {}
            (Distribution::Discrete(a), Distribution::Discrete(b)) => {
                total += len * wasserstein_with(a, b, &metric)?
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub algorithm_value: f64,
    pub benchmark_value: f64,
    pub regret: f64,
    /// `regret / |benchmark|`, absent when the benchmark is within 1e-9 of zero.
    pub relative_regret: Option<f64>,
    /// `dᵢ`, positive when constraint `i` is violated on average.
    pub violations: Vec<f64>,
    pub max_violation: f64,
    pub w_t: Option<f64>,
    pub w_theta: Option<usize>,
}

pub fn report(
    log: &EpisodeLog,
    benchmark: f64,
    inst: &ProblemInstance,
    w_t: Option<f64>,
) -> Result<BenchmarkReport> {
    if log.records.len() != inst.horizon || log.cumulative_g.len() != inst.m() {
        return Err(Error::Dimension("log does not match the instance".into()));
    }
    let t = inst.horizon as f64;
    let s = inst.direction.sign();
    let violations: Vec<f64> = log
        .cumulative_g
        .iter()
        .zip(&inst.beta)
        .map(|(g, b)| s * (g / t - b))
        .collect();
    let max_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let regret = log.objective - benchmark;
    Ok(BenchmarkReport {
        algorithm_value: log.objective,
        benchmark_value: benchmark,
        regret,
        relative_regret: (benchmark.abs() > 1e-9).then(|| regret / benchmark.abs()),
        violations,
        max_violation,
        w_t,
        w_theta: log.w_theta,
    })
}
