mod common;

use common::{approx, lp_by_vertices, random_packing_instance, random_type, rng};
use proptest::prelude::*;
use rand::Rng;

use twostage_core::error::Error;
use twostage_core::inner::{
    evaluate, lagrangian_value, lp_solve, simplex, solve_second_stage, subgradient_c, LpStatus,
    Polyhedron,
};
use twostage_core::model::{
    Affine, BoxSet, ConstraintFn, CostFn, Direction, Distribution, ExtraRows, FirstStageCost,
    FirstStageSet, ProblemInstance, TypeFamily, TypeRealization,
};
use twostage_core::scenarios::{linear_type, toy_instance};

/// `f = −x`, `g = x`, `x ≤ c`, `C = K = [0, 1]`, `β = 1/2`.
fn coupled_toy(horizon: usize) -> (ProblemInstance, TypeRealization) {
    let theta = TypeRealization {
        coupling: vec![vec![1.0]],
        ..linear_type(1.0)
    };
    let inst = ProblemInstance {
        horizon,
        beta: vec![0.5],
        direction: Direction::Packing,
        first_stage_set: FirstStageSet::Box {
            lo: vec![0.0],
            hi: vec![1.0],
        },
        first_stage_cost: FirstStageCost::linear(vec![0.0]),
        second_stage_box: BoxSet {
            lo: vec![0.0],
            hi: vec![1.0],
        },
        normalization_scale: 1.0,
        distribution: Distribution::point(theta.clone()),
        prediction: None,
        family: None,
    };
    (inst, theta)
}

/// Four-resource demand/service instance with `C = [0, 6]`.
fn service_instance(horizon: usize, direction: Direction) -> ProblemInstance {
    ProblemInstance {
        horizon,
        beta: vec![0.95, 0.9, 0.85, 0.8],
        direction,
        first_stage_set: FirstStageSet::Box {
            lo: vec![0.0],
            hi: vec![6.0],
        },
        first_stage_cost: FirstStageCost::linear(vec![-1.0]),
        second_stage_box: BoxSet {
            lo: vec![0.0; 4],
            hi: vec![6.0; 4],
        },
        normalization_scale: 10.0,
        distribution: Distribution::TruncNormal {
            mean: 10.0,
            std: 10.0 / 3.0,
        },
        prediction: None,
        family: Some(TypeFamily::DemandService {
            resources: 4,
            fill_rate: false,
        }),
    }
}

fn service_type<R: Rng>(rng: &mut R) -> TypeRealization {
    let raw: Vec<f64> = (0..4).map(|_| 20.0 * rng.random::<f64>()).collect();
    TypeFamily::DemandService {
        resources: 4,
        fill_rate: false,
    }
    .build(&raw, 10.0)
}

#[test]
fn box_corner_lp() {
    let poly = Polyhedron {
        lower: vec![0.0],
        upper: vec![1.0],
        ..Default::default()
    };
    let s = lp_solve(&[-1.0], &poly);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 1.0).abs() < 1e-12);
    assert!((s.value + 1.0).abs() < 1e-12);
    assert!((s.upper_duals[0] + 1.0).abs() < 1e-12);
}

#[test]
fn zero_objective_has_zero_value() {
    let poly = Polyhedron {
        rows: vec![vec![1.0, 1.0], vec![-1.0, 2.0]],
        rhs: vec![1.5, 0.5],
        sensitivity: vec![vec![], vec![]],
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 1.0],
    };
    assert_eq!(lp_solve(&[0.0, 0.0], &poly).value, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Value, feasibility and strong duality against vertex enumeration.
    #[test]
    fn lp_kernel_matches_vertex_enumeration(seed in any::<u64>(), n in 1usize..=5, m in 0usize..=8) {
        let mut r = rng(seed);
        let q: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let rhs: Vec<f64> = (0..m).map(|_| r.random_range(-0.2..1.0)).collect();
        let lo = vec![0.0; n];
        let hi: Vec<f64> = (0..n).map(|_| r.random_range(0.5..2.0)).collect();
        let oracle = lp_by_vertices(&q, &rows, &rhs, &lo, &hi);
        let s = simplex::solve(&q, &rows, &[], &rhs, &lo, &hi);
        match oracle {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.value - v).abs() <= 1e-8, "kernel {} vs vertices {}", s.value, v);
                // primal feasibility
                for (row, h) in rows.iter().zip(&rhs) {
                    let lhs: f64 = row.iter().zip(&s.x).map(|(a, b)| a * b).sum();
                    prop_assert!(lhs <= h + 1e-8);
                }
                for j in 0..n {
                    prop_assert!(s.x[j] >= lo[j] - 1e-8 && s.x[j] <= hi[j] + 1e-8);
                }
                // dual feasibility and strong duality in the sensitivity convention
                let mut dual_value = 0.0;
                for (y, h) in s.row_duals.iter().zip(&rhs) {
                    prop_assert!(*y <= 1e-9);
                    dual_value += y * h;
                }
                for j in 0..n {
                    let red = q[j]
                        - rows.iter().zip(&s.row_duals).map(|(row, y)| row[j] * y).sum::<f64>()
                        - s.upper_duals[j]
                        - s.lower_duals[j];
                    prop_assert!(red.abs() <= 1e-8, "reduced-cost residual {}", red);
                    dual_value += s.upper_duals[j] * hi[j] + s.lower_duals[j] * lo[j];
                }
                prop_assert!((dual_value - s.value).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn second_stage_examples() {
    let (inst, theta) = coupled_toy(10);
    let s = solve_second_stage(&[1.0], &[0.0], &theta, &inst).unwrap();
    assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.value + 1.0).abs() < 1e-12);

    // λ/(Tβ) = 2 makes the coefficient −1 + 2 positive.
    let lam = 2.0 * 10.0 * 0.5;
    let s = solve_second_stage(&[1.0], &[lam], &theta, &inst).unwrap();
    assert!(s.x[0].abs() < 1e-12 && s.value.abs() < 1e-12);

    let s = solve_second_stage(&[0.0], &[0.0], &theta, &inst).unwrap();
    assert!(s.x[0].abs() < 1e-12 && s.value.abs() < 1e-12);
}

#[test]
fn empty_second_stage_set_names_rows() {
    let (inst, theta) = coupled_toy(10);
    match solve_second_stage(&[-1.0], &[0.0], &theta, &inst) {
        Err(Error::Infeasible(msg)) => assert!(msg.contains("[0]"), "{msg}"),
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn lagrangian_examples() {
    let (inst, theta) = coupled_toy(10);
    // λ = 0: p(c) + min f.
    assert!((lagrangian_value(&[0.7], &[0.0], &theta, &inst).unwrap() + 0.7).abs() < 1e-12);
    // λ = Tβ/2: −λ/T + min_x (−1 + 1/2) x = −1/4 − 1/2 on c = 1.
    let l = lagrangian_value(&[1.0], &[2.5], &theta, &inst).unwrap();
    assert!((l + 0.75).abs() < 1e-12, "{l}");

    let toy = toy_instance(100).unwrap();
    let l = lagrangian_value(&[], &[50.0], &linear_type(1.0), &toy).unwrap();
    assert!((l + 0.5).abs() < 1e-12);
}

#[test]
fn covering_signs() {
    let mut inst = toy_instance(10).unwrap();
    inst.direction = Direction::Covering;
    // p + λ/T + min_x (−1 − λ/(Tβ)) x with λ = 5: 0.5 − 2 = −1.5
    let l = lagrangian_value(&[], &[5.0], &linear_type(1.0), &inst).unwrap();
    assert!((l + 1.5).abs() < 1e-12, "{l}");
}

#[test]
fn subgradient_examples() {
    let (inst, theta) = coupled_toy(10);
    let mut inactive = inst.clone();
    inactive.first_stage_cost = FirstStageCost::linear(vec![0.3]);
    // f ≡ 0 leaves the coupling row inactive.
    let zero = TypeRealization {
        cost: CostFn::Linear { q: vec![0.0] },
        ..theta.clone()
    };
    assert_eq!(
        subgradient_c(&[0.4], &[0.0], &zero, &inactive).unwrap(),
        vec![0.3]
    );
    // x ≤ c binds with f = −x: ∂L̄/∂c = −1.
    let g = subgradient_c(&[0.4], &[0.0], &theta, &inst).unwrap();
    assert!((g[0] + 1.0).abs() < 1e-12);
}

/// While `c` fits in the cheapest resource, `∂L̄/∂c = −1 + minᵢ λᵢ/(Tβᵢ)`;
/// above `ΣD` the service row no longer moves.
#[test]
fn service_row_sensitivity() {
    let inst = service_instance(100, Direction::Packing);
    let theta = TypeFamily::DemandService {
        resources: 4,
        fill_rate: false,
    }
    .build(&[3.0, 3.0, 2.0, 2.0], 10.0);
    let lambda = [30.0, 9.0, 40.0, 50.0];
    let w_min = lambda
        .iter()
        .zip(&inst.beta)
        .map(|(l, b)| l / (100.0 * b))
        .fold(f64::INFINITY, f64::min);
    let fd = |c: f64| {
        let h = 1e-5;
        (lagrangian_value(&[c + h], &lambda, &theta, &inst).unwrap()
            - lagrangian_value(&[c - h], &lambda, &theta, &inst).unwrap())
            / (2.0 * h)
    };
    let g = subgradient_c(&[0.2], &lambda, &theta, &inst).unwrap()[0];
    assert!((g - (-1.0 + w_min)).abs() < 1e-9, "{g}");
    assert!((g - fd(0.2)).abs() < 1e-4);
    let above = subgradient_c(&[1.5], &lambda, &theta, &inst).unwrap()[0];
    assert!((above + 1.0).abs() < 1e-9, "{above}");
    assert!((above - fd(1.5)).abs() < 1e-4);
    // The service row makes L̄ concave across c = ΣD (the slope drops from
    // −1 + w_max to −1); the c ≤ ΣD piece is the one selected there.
    let h = 1e-6;
    let at = |c: f64| lagrangian_value(&[c], &lambda, &theta, &inst).unwrap();
    let (left, right) = ((at(1.0) - at(1.0 - h)) / h, (at(1.0 + h) - at(1.0)) / h);
    let w_max = lambda
        .iter()
        .zip(&inst.beta)
        .map(|(l, b)| l / (100.0 * b))
        .fold(0.0, f64::max);
    assert!(
        (left - (-1.0 + w_max)).abs() < 1e-6 && (right + 1.0).abs() < 1e-6,
        "{left} {right}"
    );
    let kink = subgradient_c(&[1.0], &lambda, &theta, &inst).unwrap()[0];
    assert!((kink - left).abs() < 1e-6, "{kink} vs left slope {left}");
}

/// Central differences at random points, skipping kinks detected by
/// disagreeing one-sided differences.
#[test]
fn subgradient_matches_central_differences() {
    let mut r = rng(11);
    let packing = random_packing_instance(50, 2, 3, 2, 1, &mut r);
    let service = service_instance(200, Direction::Packing);
    let mut covering = service_instance(200, Direction::Covering);
    covering.first_stage_cost = FirstStageCost::linear(vec![1.0]);
    let h = 1e-5;
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 100 {
        attempts += 1;
        assert!(attempts < 1000, "too many kink points");
        let which = attempts % 3;
        let (inst, theta, c, lambda) = match which {
            0 => {
                let th = random_type(2, 3, 2, &mut r);
                let c = vec![r.random::<f64>(), r.random::<f64>()];
                let lam = vec![30.0 * r.random::<f64>(), 30.0 * r.random::<f64>()];
                (&packing, th, c, lam)
            }
            1 => (
                &service,
                service_type(&mut r),
                vec![6.0 * r.random::<f64>()],
                (0..4).map(|_| 300.0 * r.random::<f64>()).collect(),
            ),
            _ => (
                &covering,
                service_type(&mut r),
                vec![6.0 * r.random::<f64>()],
                (0..4).map(|_| 300.0 * r.random::<f64>()).collect(),
            ),
        };
        let l = |c: &[f64]| lagrangian_value(c, &lambda, &theta, inst).unwrap();
        let g = subgradient_c(&c, &lambda, &theta, inst).unwrap();
        let mut kink = false;
        let mut fd = vec![0.0; c.len()];
        for k in 0..c.len() {
            let mut up = c.clone();
            up[k] += h;
            let mut dn = c.clone();
            dn[k] -= h;
            let base = l(&c);
            let right = (l(&up) - base) / h;
            let left = (base - l(&dn)) / h;
            if (right - left).abs() > 1e-6 {
                kink = true;
            }
            fd[k] = (l(&up) - l(&dn)) / (2.0 * h);
        }
        if kink {
            continue;
        }
        for k in 0..c.len() {
            assert!(
                (g[k] - fd[k]).abs() <= 1e-4,
                "case {which}: subgradient {g:?} vs differences {fd:?} at c = {c:?}"
            );
        }
        checked += 1;
    }
}

/// `L̄(c′) ≥ L̄(c) + g·(c′ − c)` for 100 random `c′` per point.
#[test]
fn subgradient_inequality() {
    let mut r = rng(5);
    let inst = random_packing_instance(40, 2, 3, 2, 1, &mut r);
    for _ in 0..20 {
        let theta = random_type(2, 3, 2, &mut r);
        let lambda = vec![20.0 * r.random::<f64>(), 20.0 * r.random::<f64>()];
        let c = vec![r.random::<f64>(), r.random::<f64>()];
        let ev = evaluate(&c, &lambda, &theta, &inst).unwrap();
        for _ in 0..100 {
            let c2 = vec![r.random::<f64>(), r.random::<f64>()];
            let lhs = lagrangian_value(&c2, &lambda, &theta, &inst).unwrap();
            let rhs = ev.lagrangian
                + ev.subgradient
                    .iter()
                    .zip(c2.iter().zip(&c))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum::<f64>();
            assert!(lhs >= rhs - 1e-7, "{lhs} < {rhs}");
        }
    }
}

/// Convex chords in `c` and concave chords in `λ`, 1000 each.
#[test]
fn lagrangian_chords() {
    let mut r = rng(99);
    let inst = random_packing_instance(30, 2, 3, 3, 1, &mut r);
    let mut worst_c: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for _ in 0..1000 {
        let theta = random_type(2, 3, 3, &mut r);
        let lambda: Vec<f64> = (0..3).map(|_| 20.0 * r.random::<f64>()).collect();
        let c1 = vec![r.random::<f64>(), r.random::<f64>()];
        let c2 = vec![r.random::<f64>(), r.random::<f64>()];
        let mid: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 0.5 * (a + b)).collect();
        let l = |c: &[f64], lam: &[f64]| lagrangian_value(c, lam, &theta, &inst).unwrap();
        worst_c = worst_c.max(l(&mid, &lambda) - 0.5 * (l(&c1, &lambda) + l(&c2, &lambda)));

        let l1: Vec<f64> = (0..3).map(|_| 20.0 * r.random::<f64>()).collect();
        let l2: Vec<f64> = (0..3).map(|_| 20.0 * r.random::<f64>()).collect();
        let lm: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| 0.5 * (a + b)).collect();
        worst_l = worst_l.max(0.5 * (l(&c1, &l1) + l(&c1, &l2)) - l(&c1, &lm));
    }
    assert!(worst_c <= 1e-9, "convexity violated by {worst_c}");
    assert!(worst_l <= 1e-9, "concavity violated by {worst_l}");
}

/// Every solved period is feasible and satisfies strong duality.
#[test]
fn inner_solutions_are_feasible_with_zero_gap() {
    let mut r = rng(3);
    let inst = service_instance(100, Direction::Packing);
    for _ in 0..200 {
        let theta = service_type(&mut r);
        let c = [6.0 * r.random::<f64>()];
        let lambda: Vec<f64> = (0..4).map(|_| 200.0 * r.random::<f64>()).collect();
        let s = solve_second_stage(&c, &lambda, &theta, &inst).unwrap();
        let poly = Polyhedron::feasible_set(&theta, &c, &inst);
        assert!(poly.residual(&s.x) <= 1e-8);
        let t = inst.horizon as f64;
        let constant = 0.0;
        let dual: f64 = s
            .row_duals
            .iter()
            .zip(&poly.rhs)
            .map(|(y, h)| y * h)
            .sum::<f64>()
            + s.upper_duals
                .iter()
                .zip(&poly.upper)
                .map(|(u, h)| u * h)
                .sum::<f64>()
            + s.lower_duals
                .iter()
                .zip(&poly.lower)
                .map(|(l, h)| l * h)
                .sum::<f64>()
            + constant;
        let primal = theta.cost.value(&s.x)
            + theta
                .g(&c, &s.x)
                .iter()
                .zip(&lambda)
                .zip(&inst.beta)
                .map(|((g, l), b)| l * g / (t * b))
                .sum::<f64>();
        assert!(approx(s.value, primal, 1e-10));
        assert!((dual - s.value).abs() <= 1e-8, "{dual} vs {}", s.value);
    }
}

#[test]
fn descriptor_and_oracle_agree() {
    use std::sync::Arc;
    use twostage_core::model::AffineOracle;
    let mut r = rng(8);
    for _ in 0..100 {
        let a = Affine {
            a: (0..3).map(|_| r.random::<f64>()).collect(),
            b: (0..2).map(|_| r.random::<f64>()).collect(),
            d: r.random::<f64>(),
        };
        let direct = ConstraintFn::Affine(a.clone());
        let wrapped = ConstraintFn::Oracle(Arc::new(AffineOracle(a)));
        let c: Vec<f64> = (0..2).map(|_| r.random::<f64>()).collect();
        let x: Vec<f64> = (0..3).map(|_| r.random::<f64>()).collect();
        assert!((direct.eval(&c, &x) - wrapped.eval(&c, &x)).abs() <= 1e-12);
        assert_eq!(direct.grad_c(&c, &x), wrapped.grad_c(&c, &x));
    }
}

/// The oracle fallback is flagged approximate and lands near the LP optimum.
#[test]
fn oracle_constraints_use_the_fallback() {
    use std::sync::Arc;
    use twostage_core::model::AffineOracle;
    let (inst, theta) = coupled_toy(10);
    let ConstraintFn::Affine(a) = theta.constraints[0].clone() else {
        unreachable!()
    };
    let opaque = TypeRealization {
        constraints: vec![ConstraintFn::Oracle(Arc::new(AffineOracle(a)))],
        extra: ExtraRows::None,
        ..theta.clone()
    };
    let exact = solve_second_stage(&[0.8], &[2.0], &theta, &inst).unwrap();
    let approx_sol = solve_second_stage(&[0.8], &[2.0], &opaque, &inst).unwrap();
    assert!(approx_sol.approximate && !exact.approximate);
    assert!(
        (approx_sol.value - exact.value).abs() < 1e-3,
        "{} vs {}",
        approx_sol.value,
        exact.value
    );
}
