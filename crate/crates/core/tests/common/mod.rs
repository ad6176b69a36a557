//! Brute-force oracles and random instance builders shared by the
//! integration tests. Nothing here calls the simplex kernel.
#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twostage_core::learners::{
    audit_regret_experts, audit_regret_online, Exp3State, HedgeState, OgdState,
};
use twostage_core::model::{
    Affine, BoxSet, ConstraintFn, CostFn, Direction, DiscreteDistribution, Distribution, ExtraRows,
    FirstStageCost, FirstStageSet, ProblemInstance, TypeRealization,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves the square system, `None` when it is (numerically) singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let lu = m.lu();
    let det = lu.determinant();
    if det.abs() < 1e-10 {
        return None;
    }
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
}

/// Every basic feasible point of `{E x ≤ h, lo ≤ x ≤ hi}`, with repeats.
pub fn vertices(rows: &[Vec<f64>], rhs: &[f64], lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let n = lo.len();
    let mut all_rows: Vec<Vec<f64>> = rows.to_vec();
    let mut all_rhs: Vec<f64> = rhs.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all_rows.push(e.clone());
        all_rhs.push(hi[j]);
        e[j] = -1.0;
        all_rows.push(e);
        all_rhs.push(-lo[j]);
    }
    let mut out = Vec::new();
    for active in (0..all_rows.len()).combinations(n) {
        let a: Vec<Vec<f64>> = active.iter().map(|&r| all_rows[r].clone()).collect();
        let b: Vec<f64> = active.iter().map(|&r| all_rhs[r]).collect();
        let Some(x) = solve_square(&a, &b) else {
            continue;
        };
        let feasible = all_rows
            .iter()
            .zip(&all_rhs)
            .all(|(r, h)| r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= h + 1e-9);
        if feasible {
            out.push(x);
        }
    }
    out
}

/// `min q·x` over `{E x ≤ h, lo ≤ x ≤ hi}` by enumerating every basic
/// solution; `None` if the polytope is empty.
pub fn lp_by_vertices(
    q: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Option<f64> {
    vertices(rows, rhs, lo, hi)
        .iter()
        .map(|x| q.iter().zip(x).map(|(u, v)| u * v).sum::<f64>())
        .min_by(f64::total_cmp)
}

/// Optimal transport cost by enumerating basic solutions of the
/// `a + b − 1` independent marginal equations.
pub fn transport_by_vertices(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (a, b) = (p.len(), q.len());
    let n = a * b;
    let k = a + b - 1;
    let mut eq: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..a {
        eq.push((0..n).map(|v| if v / b == j { 1.0 } else { 0.0 }).collect());
        rhs.push(p[j]);
    }
    for l in 0..b - 1 {
        eq.push((0..n).map(|v| if v % b == l { 1.0 } else { 0.0 }).collect());
        rhs.push(q[l]);
    }
    let mut best = f64::INFINITY;
    for basis in (0..n).combinations(k) {
        let mat: Vec<Vec<f64>> = eq
            .iter()
            .map(|row| basis.iter().map(|&c| row[c]).collect())
            .collect();
        let Some(xb) = solve_square(&mat, &rhs) else {
            continue;
        };
        if xb.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let v: f64 = basis
            .iter()
            .zip(&xb)
            .map(|(&c, x)| cost[c / b][c % b] * x)
            .sum();
        best = best.min(v);
    }
    best
}

pub fn random_simplex_point<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k)
        .map(|_| -rng.random::<f64>().max(1e-12).ln())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// A random affine type with `f ∈ [−1, 0]` and `g ∈ [0, 1]` on `[0,1]^n × C`,
/// coupling `B x ≤ c` with nonnegative rows.
pub fn random_type<R: Rng>(dim_c: usize, dim_x: usize, m: usize, rng: &mut R) -> TypeRealization {
    let nx = dim_x as f64;
    let nc = dim_c.max(1) as f64;
    TypeRealization {
        cost: CostFn::Linear {
            q: (0..dim_x).map(|_| -rng.random::<f64>() / nx).collect(),
        },
        constraints: (0..m)
            .map(|_| {
                ConstraintFn::Affine(Affine {
                    a: (0..dim_x)
                        .map(|_| rng.random::<f64>() / (2.0 * nx))
                        .collect(),
                    b: (0..dim_c)
                        .map(|_| rng.random::<f64>() / (2.0 * nc))
                        .collect(),
                    d: 0.0,
                })
            })
            .collect(),
        coupling: (0..dim_c)
            .map(|_| (0..dim_x).map(|_| 0.2 + rng.random::<f64>()).collect())
            .collect(),
        extra: ExtraRows::None,
    }
}

/// Packing instance on `C = [0,1]^dim_c`, `K = [0,1]^dim_x` with a random
/// discrete distribution and a small linear first-stage cost.
pub fn random_packing_instance<R: Rng>(
    horizon: usize,
    dim_c: usize,
    dim_x: usize,
    m: usize,
    atoms: usize,
    rng: &mut R,
) -> ProblemInstance {
    let support: Vec<TypeRealization> = (0..atoms)
        .map(|_| random_type(dim_c, dim_x, m, rng))
        .collect();
    let weights = random_simplex_point(atoms, rng);
    let dist =
        Distribution::Discrete(DiscreteDistribution::new(support, weights).expect("valid weights"));
    ProblemInstance {
        horizon,
        beta: (0..m).map(|_| 0.05 + 0.4 * rng.random::<f64>()).collect(),
        direction: Direction::Packing,
        first_stage_set: FirstStageSet::Box {
            lo: vec![0.0; dim_c],
            hi: vec![1.0; dim_c],
        },
        first_stage_cost: FirstStageCost::linear(
            (0..dim_c).map(|_| 0.1 * rng.random::<f64>()).collect(),
        ),
        second_stage_box: BoxSet {
            lo: vec![0.0; dim_x],
            hi: vec![1.0; dim_x],
        },
        normalization_scale: 1.0,
        distribution: dist.clone(),
        prediction: Some(dist),
        family: None,
    }
}

/// Same data as [`random_packing_instance`] with a finite first-stage set.
pub fn with_finite_c(mut inst: ProblemInstance, points: Vec<Vec<f64>>) -> ProblemInstance {
    inst.first_stage_set = FirstStageSet::Finite { points };
    inst
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Reward streams in `[-δ, δ]`: i.i.d., a leader that flips every block,
/// and an adaptive adversary that rewards the currently least likely expert.
pub fn hedge_regret(t: usize, m: usize, delta: f64, stream: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut h = HedgeState::new(m, t).unwrap();
    let mut payoffs = Vec::with_capacity(t);
    let mut actions = Vec::with_capacity(t);
    for k in 0..t {
        let y = h.distribution();
        let l: Vec<f64> = match stream {
            0 => (0..m).map(|_| delta * r.random_range(-1.0..1.0)).collect(),
            1 => {
                let leader = (k / (t / 10).max(1)) % m;
                (0..m)
                    .map(|i| if i == leader { delta } else { -delta })
                    .collect()
            }
            _ => {
                let worst = (0..m).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
                (0..m)
                    .map(|i| if i == worst { delta } else { -delta })
                    .collect()
            }
        };
        actions.push(h.select(&mut r));
        h.update(&l).unwrap();
        payoffs.push(l);
    }
    audit_regret_experts(&payoffs, &actions).unwrap()
}

/// Separable quadratics `hₜ(c) = Σ_k aₜₖ (c_k − bₜₖ)²` on `[0, F_k]`; the best
/// fixed point is the clamped weighted mean per coordinate.
pub fn ogd_regret(t: usize, d: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let side = 1.0;
    let set = FirstStageSet::Box {
        lo: vec![0.0; d],
        hi: vec![side; d],
    };
    let f = set.diameter();
    let mut o = OgdState::new(set, vec![0.0; d], 1.0).unwrap();
    let mut a_all = Vec::with_capacity(t);
    let mut b_all = Vec::with_capacity(t);
    let mut losses = Vec::with_capacity(t);
    let mut g_max: f64 = 0.0;
    for k in 1..=t {
        let a: Vec<f64> = (0..d).map(|_| r.random_range(0.1..1.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| r.random_range(-0.5..1.5)).collect();
        let c = o.c.clone();
        losses.push((0..d).map(|j| a[j] * (c[j] - b[j]).powi(2)).sum::<f64>());
        let g: Vec<f64> = (0..d).map(|j| 2.0 * a[j] * (c[j] - b[j])).collect();
        g_max = g_max.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        o.step(&g, k).unwrap();
        a_all.push(a);
        b_all.push(b);
    }
    // worst-case gradient norm over the box
    let g_bound = (d as f64).sqrt() * 2.0 * 1.0 * 1.5;
    assert!(g_max <= g_bound);
    let mut best = 0.0;
    for j in 0..d {
        let sa: f64 = a_all.iter().map(|a| a[j]).sum();
        let sab: f64 = a_all.iter().zip(&b_all).map(|(a, b)| a[j] * b[j]).sum();
        let cj = (sab / sa).clamp(0.0, side);
        best += a_all
            .iter()
            .zip(&b_all)
            .map(|(a, b)| a[j] * (cj - b[j]).powi(2))
            .sum::<f64>();
    }
    let reg = audit_regret_online(&losses, best);
    (
        reg,
        1.5 * (f * f / 2.0 + g_bound * g_bound) * (t as f64).sqrt(),
    )
}

pub fn exp3_last_decile_fraction(seed: u64) -> f64 {
    let t = 10_000;
    let mut e = Exp3State::new(2, t).unwrap();
    let mut r = rng(seed);
    let mut hits = 0;
    for k in 0..t {
        let arm = e.select(&mut r);
        let payoff = if arm == 0 { 1.0 } else { 0.0 };
        e.update(arm, payoff).unwrap();
        if k >= t - t / 10 && arm == 0 {
            hits += 1;
        }
    }
    hits as f64 / (t / 10) as f64
}
