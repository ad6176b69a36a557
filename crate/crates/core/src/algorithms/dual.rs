//! Sample-average Lagrangians over distribution segments and the dual solvers
//! that maximize them over `λ ≥ 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{self, kelley, InnerSolution, LpStatus, TieBreak};
use crate::model::{Distribution, FirstStageSet, ProblemInstance, TypeRealization};
use crate::rng::{stream, Purpose};

/// A weighted sample standing in for one segment's distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SaaSegment {
    /// First period (1-based).
    pub start: usize,
    /// Last period, inclusive.
    pub end: usize,
    pub types: Vec<TypeRealization>,
    pub weights: Vec<f64>,
    /// True when `types`/`weights` reproduce the distribution exactly.
    pub exact: bool,
}

impl SaaSegment {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn from_types(start: usize, end: usize, types: Vec<TypeRealization>) -> Self {
        let w = 1.0 / types.len().max(1) as f64;
        let weights = vec![w; types.len()];
        SaaSegment {
            start,
            end,
            types,
            weights,
            exact: false,
        }
    }
}

/// Builds one [`SaaSegment`] per maximal run of `dist` over `1..=T`. Discrete
/// leaves with at most `n` atoms are kept exact; other leaves get `n` draws
/// keyed by `(seed, segment index)`.
pub fn build_segments(
    inst: &ProblemInstance,
    dist: &Distribution,
    n: usize,
    seed: u64,
) -> Result<Vec<SaaSegment>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    dist.check()?;
    let mut out = Vec::new();
    for (k, seg) in dist.segments(inst.horizon).into_iter().enumerate() {
        match seg.dist {
            Distribution::Discrete(d) if d.support.len() <= n => out.push(SaaSegment {
                start: seg.start,
                end: seg.end,
                types: d.support.clone(),
                weights: d.weights.clone(),
                exact: true,
            }),
            leaf => {
                let mut rng = stream(seed, u64::MAX, k as u64, Purpose::Saa);
                let types = (0..n)
                    .map(|_| {
                        leaf.sample(
                            seg.start,
                            inst.family.as_ref(),
                            inst.normalization_scale,
                            &mut rng,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(SaaSegment::from_types(seg.start, seg.end, types));
            }
        }
    }
    Ok(out)
}

/// `L̂(c, λ)` on one segment plus the expectations needed by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEval {
    pub c: Vec<f64>,
    pub value: f64,
    /// `E[gᵢ(c, x*(θ))]`.
    pub eg: Vec<f64>,
    /// `E[f(x*(θ))]`.
    pub ef: f64,
    /// Sample variance of the per-type Lagrangian values.
    pub var: f64,
    pub subgradient: Vec<f64>,
}

pub fn eval_segment(
    inst: &ProblemInstance,
    seg: &SaaSegment,
    c: &[f64],
    lambda: &[f64],
    tie: TieBreak,
) -> Result<SegmentEval> {
    let m = inst.m();
    let mut eg = vec![0.0; m];
    let mut ef = 0.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut sub = inst.first_stage_cost.grad(c);
    let base = inner::lagrangian_from(c, lambda, inst, &zero_solution());
    for (theta, w) in seg.types.iter().zip(&seg.weights) {
        if *w == 0.0 {
            continue;
        }
        let sol = inner::solve_second_stage_with(c, lambda, theta, inst, tie)?;
        let g = theta.g(c, &sol.x);
        for (a, b) in eg.iter_mut().zip(&g) {
            *a += w * b;
        }
        ef += w * theta.cost.value(&sol.x);
        mean += w * sol.value;
        second += w * sol.value * sol.value;
        let sg = inner::subgradient_from(c, lambda, theta, inst, &sol)?;
        let pg = inst.first_stage_cost.grad(c);
        for ((s, a), p) in sub.iter_mut().zip(&sg).zip(&pg) {
            *s += w * (a - p);
        }
    }
    Ok(SegmentEval {
        c: c.to_vec(),
        value: base + mean,
        eg,
        ef,
        var: (second - mean * mean).max(0.0),
        subgradient: sub,
    })
}

fn zero_solution() -> InnerSolution {
    InnerSolution {
        x: vec![],
        value: 0.0,
        row_duals: vec![],
        upper_duals: vec![],
        lower_duals: vec![],
        status: LpStatus::Optimal,
        approximate: false,
    }
}

/// Controls the search over the first-stage set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Uniform grid size for one-dimensional boxes.
    pub grid: usize,
    /// Golden-section refinements around the best grid point.
    pub golden: usize,
    /// Projected-subgradient steps for boxes of dimension ≥ 2.
    pub subgradient_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: 33,
            golden: 40,
            subgradient_steps: 150,
        }
    }
}

/// `argmin_{c ∈ C} L̂(c, λ)` on one segment. Finite sets are enumerated; a
/// one-dimensional box gets a grid scan followed by golden-section search,
/// which also handles the non-convex case; larger boxes use projected
/// subgradient steps with the null point as a fallback candidate.
pub fn minimize_c(
    inst: &ProblemInstance,
    seg: &SaaSegment,
    lambda: &[f64],
    opts: &SearchOptions,
) -> Result<SegmentEval> {
    let eval = |c: &[f64]| eval_segment(inst, seg, c, lambda, TieBreak::Vertex);
    let better = |a: &SegmentEval, b: &SegmentEval| a.value < b.value - 1e-12;
    match &inst.first_stage_set {
        FirstStageSet::Finite { points } => {
            let mut best: Option<SegmentEval> = None;
            for p in points {
                let e = eval(p)?;
                if best.as_ref().is_none_or(|b| better(&e, b)) {
                    best = Some(e);
                }
            }
            best.ok_or_else(|| Error::InvalidArgument("finite first-stage set is empty".into()))
        }
        FirstStageSet::Box { lo, .. } if lo.is_empty() => eval(&[]),
        FirstStageSet::Box { lo, hi } if lo.len() == 1 => {
            let (a, b) = (lo[0], hi[0]);
            let g = opts.grid.max(2);
            let pts: Vec<f64> = (0..g)
                .map(|k| a + (b - a) * k as f64 / (g - 1) as f64)
                .collect();
            let mut best = eval(&[pts[0]])?;
            let mut best_k = 0;
            for (k, &p) in pts.iter().enumerate().skip(1) {
                let e = eval(&[p])?;
                if better(&e, &best) {
                    best = e;
                    best_k = k;
                }
            }
            let mut l = pts[best_k.saturating_sub(1)];
            let mut r = pts[(best_k + 1).min(g - 1)];
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let mut x1 = r - phi * (r - l);
            let mut x2 = l + phi * (r - l);
            let mut f1 = eval(&[x1])?;
            let mut f2 = eval(&[x2])?;
            for _ in 0..opts.golden {
                if f1.value <= f2.value {
                    r = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = r - phi * (r - l);
                    f1 = eval(&[x1])?;
                } else {
                    l = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = l + phi * (r - l);
                    f2 = eval(&[x2])?;
                }
            }
            for cand in [f1, f2] {
                if better(&cand, &best) {
                    best = cand;
                }
            }
            Ok(best)
        }
        FirstStageSet::Box { lo, hi } => {
            let set = &inst.first_stage_set;
            let diam = set.diameter().max(1e-12);
            let mut c: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
            let mut best = eval(&set.null_point())?;
            for k in 1..=opts.subgradient_steps {
                let e = eval(&c)?;
                let norm = e.subgradient.iter().map(|v| v * v).sum::<f64>().sqrt();
                if better(&e, &best) {
                    best = e.clone();
                }
                if norm < 1e-14 {
                    break;
                }
                let step = diam / (norm * (k as f64).sqrt());
                for (v, g) in c.iter_mut().zip(&e.subgradient) {
                    *v -= step * g;
                }
                set.project(&mut c);
            }
            Ok(best)
        }
    }
}

/// How `max_{λ ≥ 0} Σ_segments |seg| · min_c L̂(c, λ)` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualSolver {
    /// Exact LP when every segment is exactly discrete and `C` is finite,
    /// cutting planes otherwise.
    Auto,
    /// Kelley's cutting-plane method on the box `[0, cap·T]^m`.
    CuttingPlane { max_iter: usize, tol: f64 },
    /// Projected supergradient ascent with averaging, step `a/√k`, `a = T·min β`.
    Supergradient { iterations: usize },
    /// Joint LP over randomized first-stage choices; finite `C` and exact segments only.
    ExactLp,
}

impl Default for DualSolver {
    fn default() -> Self {
        DualSolver::Auto
    }
}

/// Result of a dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    /// `max_λ D(λ)`, the value of the sample-average program.
    pub value: f64,
    /// Upper estimate minus lower estimate of the optimum.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Per-segment minimizer at `lambda`.
    pub evals: Vec<SegmentEval>,
    /// Primal targets recovered from the solver, one vector per segment.
    pub recovered_targets: Option<Vec<Vec<f64>>>,
    /// Per-segment first-stage mixtures `(point, probability)` when available.
    pub mixtures: Option<Vec<Vec<(Vec<f64>, f64)>>>,
}

/// `D(λ)` and its supergradient.
pub fn dual_function(
    inst: &ProblemInstance,
    segs: &[SaaSegment],
    lambda: &[f64],
    opts: &SearchOptions,
) -> Result<(f64, Vec<f64>, Vec<SegmentEval>)> {
    let m = inst.m();
    let s = inst.direction.sign();
    let t = inst.horizon as f64;
    let mut value = 0.0;
    let mut sg = vec![0.0; m];
    let mut evals = Vec::with_capacity(segs.len());
    for seg in segs {
        let e = minimize_c(inst, seg, lambda, opts)?;
        let len = seg.len() as f64;
        value += len * e.value;
        for i in 0..m {
            sg[i] += len * s * (e.eg[i] / (t * inst.beta[i]) - 1.0 / t);
        }
        evals.push(e);
    }
    Ok((value, sg, evals))
}

/// Upper end of the λ box for the cutting-plane solver, as a multiple of `T`.
pub const LAMBDA_CAP: f64 = 50.0;

pub fn solve_dual(
    inst: &ProblemInstance,
    segs: &[SaaSegment],
    solver: DualSolver,
    opts: &SearchOptions,
) -> Result<DualSolution> {
    match solver {
        DualSolver::Auto => {
            let finite = matches!(inst.first_stage_set, FirstStageSet::Finite { .. });
            if finite && segs.iter().all(|s| s.exact) && exact_size(inst, segs) <= 4000 {
                super::exact::solve_exact(inst, segs)
            } else {
                cutting_plane(inst, segs, 400, 1e-7, opts)
            }
        }
        DualSolver::CuttingPlane { max_iter, tol } => {
            cutting_plane(inst, segs, max_iter, tol, opts)
        }
        DualSolver::Supergradient { iterations } => supergradient(inst, segs, iterations, opts),
        DualSolver::ExactLp => super::exact::solve_exact(inst, segs),
    }
}

fn exact_size(inst: &ProblemInstance, segs: &[SaaSegment]) -> usize {
    let k = match &inst.first_stage_set {
        FirstStageSet::Finite { points } => points.len(),
        FirstStageSet::Box { .. } => 1,
    };
    segs.iter().map(|s| s.types.len()).sum::<usize>() * k * (inst.dim_x() + 1)
}

fn cutting_plane(
    inst: &ProblemInstance,
    segs: &[SaaSegment],
    max_iter: usize,
    tol: f64,
    opts: &SearchOptions,
) -> Result<DualSolution> {
    let cap = LAMBDA_CAP * inst.horizon as f64;
    let out = kelley::maximize(inst.m(), cap, max_iter, tol, |l| {
        dual_function(inst, segs, l, opts)
    })?;
    let gap = (out.upper - out.lower()).max(0.0);
    let payloads: Vec<&Vec<SegmentEval>> = out.cuts.iter().map(|c| &c.payload).collect();
    let recovered = recover_targets(&payloads, &out.weights, segs.len());
    let mixtures = recover_mixtures(&payloads, &out.weights, segs.len());
    let (iterations, converged, best) = (out.iterations, out.converged, out.best);
    if out.cuts[best].point.iter().any(|l| *l >= 0.99 * cap) {
        return Err(Error::Infeasible(
            "dual is unbounded; the targets cannot be met".into(),
        ));
    }
    let cut = out.cuts.into_iter().nth(best).expect("best cut exists");
    Ok(DualSolution {
        lambda: cut.point,
        value: cut.value,
        gap,
        converged,
        iterations,
        evals: cut.payload,
        recovered_targets: recovered,
        mixtures,
    })
}

fn recover_targets(
    evals: &[&Vec<SegmentEval>],
    weights: &[f64],
    nseg: usize,
) -> Option<Vec<Vec<f64>>> {
    let total: f64 = weights.iter().sum();
    if weights.len() != evals.len() || !(total > 0.5) {
        return None;
    }
    let m = evals.first()?.first()?.eg.len();
    let mut out = vec![vec![0.0; m]; nseg];
    for (ev, w) in evals.iter().zip(weights) {
        if *w <= 0.0 {
            continue;
        }
        for (o, e) in out.iter_mut().zip(ev.iter()) {
            for (a, b) in o.iter_mut().zip(&e.eg) {
                *a += w / total * b;
            }
        }
    }
    Some(out)
}

fn recover_mixtures(
    evals: &[&Vec<SegmentEval>],
    weights: &[f64],
    nseg: usize,
) -> Option<Vec<Vec<(Vec<f64>, f64)>>> {
    let total: f64 = weights.iter().sum();
    if weights.len() != evals.len() || !(total > 0.5) {
        return None;
    }
    let mut out = vec![Vec::new(); nseg];
    for (ev, w) in evals.iter().zip(weights) {
        if *w <= 1e-12 {
            continue;
        }
        for (o, e) in out.iter_mut().zip(ev.iter()) {
            o.push((e.c.clone(), w / total));
        }
    }
    Some(out)
}

fn supergradient(
    inst: &ProblemInstance,
    segs: &[SaaSegment],
    iterations: usize,
    opts: &SearchOptions,
) -> Result<DualSolution> {
    let m = inst.m();
    let s = inst.direction.sign();
    let a = inst.horizon as f64 * inst.beta_min();
    let mut lambda = vec![0.0; m];
    let mut avg = vec![0.0; m];
    // Ergodic primal: running averages of the responses' objective and usage.
    let mut primal = 0.0;
    let mut usage = vec![0.0; m];
    for k in 1..=iterations.max(1) {
        let (_, sg, evals) = dual_function(inst, segs, &lambda, opts)?;
        let kf = k as f64;
        let obj: f64 = segs
            .iter()
            .zip(&evals)
            .map(|(seg, e)| seg.len() as f64 * (inst.first_stage_cost.value(&e.c) + e.ef))
            .sum();
        primal += (obj - primal) / kf;
        for (u, g) in usage.iter_mut().zip(&sg) {
            *u += (s * g - *u) / kf;
        }
        let norm = sg.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-12);
        let step = a / kf.sqrt() / norm;
        for (l, g) in lambda.iter_mut().zip(&sg) {
            *l = (*l + step * g).max(0.0);
        }
        for (v, l) in avg.iter_mut().zip(&lambda) {
            *v += (l - *v) / kf;
        }
    }
    let (value, _, evals) = dual_function(inst, segs, &avg, opts)?;
    let violation = usage.iter().map(|u| (s * u).max(0.0)).fold(0.0, f64::max);
    let gap = (primal - value).abs();
    Ok(DualSolution {
        lambda: avg,
        value,
        gap,
        converged: gap <= 1e-3 * (1.0 + value.abs()) && violation <= 1e-3,
        iterations,
        evals,
        recovered_targets: None,
        mixtures: None,
    })
}

/// Draws `n` types from the prediction for period `t`.
pub fn sample_prediction<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<TypeRealization>> {
    (0..n).map(|_| inst.sample_prediction(t, rng)).collect()
}
