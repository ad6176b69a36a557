mod common;

use common::{exp3_last_decile_fraction, hedge_regret, ogd_regret, rng};
use proptest::prelude::*;
use rand::Rng;

use twostage_core::learners::{Exp3State, HedgeState, OgdState};
use twostage_core::model::FirstStageSet;

#[test]
fn hedge_selection_frequencies() {
    let h = HedgeState::new(4, 100).unwrap();
    let mut r = rng(1);
    let mut counts = [0usize; 4];
    let n = 1_000_000;
    for _ in 0..n {
        counts[h.select(&mut r)] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.01, "{counts:?}");
    }
}

proptest! {
    #[test]
    fn hedge_shift_invariance(seed in any::<u64>(), m in 1usize..8, shift in -5.0f64..5.0) {
        let mut r = rng(seed);
        let mut a = HedgeState::new(m, 1000).unwrap();
        let mut b = a.clone();
        for _ in 0..20 {
            let l: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
            let shifted: Vec<f64> = l.iter().map(|v| v + shift).collect();
            a.update(&l).unwrap();
            b.update(&shifted).unwrap();
            let (ya, yb) = (a.distribution(), b.distribution());
            for (u, v) in ya.iter().zip(&yb) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
            prop_assert!((ya.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn ogd_iterate_stays_in_the_box(seed in any::<u64>(), d in 1usize..4) {
        let mut r = rng(seed);
        let hi: Vec<f64> = (0..d).map(|_| r.random_range(0.5..5.0)).collect();
        let set = FirstStageSet::Box { lo: vec![0.0; d], hi: hi.clone() };
        let mut o = OgdState::new(set.clone(), vec![0.0; d], 1.0).unwrap();
        for t in 1..=200 {
            let g: Vec<f64> = (0..d).map(|_| r.random_range(-10.0..10.0)).collect();
            o.step(&g, t).unwrap();
            prop_assert!(set.contains(&o.c, 0.0));
        }
    }
}

#[test]
fn hedge_regret_bound() {
    for t in [1_000usize, 10_000] {
        for m in [2usize, 8] {
            let bound = 3.0 * (t as f64 * (m as f64).ln()).sqrt();
            for stream in 0..3 {
                let reg = hedge_regret(t, m, 1.0, stream, 17 + stream as u64);
                assert!(
                    reg <= bound,
                    "T={t} m={m} stream {stream}: regret {reg} > {bound}"
                );
            }
        }
    }
}

#[test]
fn ogd_regret_bound() {
    for (seed, d) in [(1u64, 1usize), (2, 2), (3, 3)] {
        for t in [1_000usize, 10_000] {
            let (reg, bound) = ogd_regret(t, d, seed);
            assert!(reg <= bound, "d={d} T={t}: {reg} > {bound}");
        }
    }
}

#[test]
fn exp3_finds_the_dominant_arm() {
    for seed in [1, 2, 3] {
        let frac = exp3_last_decile_fraction(seed);
        assert!(frac >= 0.9, "seed {seed}: {frac}");
    }
}

#[test]
fn exp3_estimates_are_unbiased() {
    let mut e = Exp3State::new(3, 100).unwrap();
    e.weights = vec![1.0, 3.0, 0.5];
    let payoffs = [0.7, -0.4, 0.9];
    let mut r = rng(4);
    let n = 400_000;
    let mut sums = [0.0; 3];
    let mut sq = [0.0; 3];
    for _ in 0..n {
        let arm = e.select(&mut r);
        let est = e.estimate(arm, payoffs[arm]).unwrap();
        for i in 0..3 {
            sums[i] += est[i];
            sq[i] += est[i] * est[i];
        }
    }
    for i in 0..3 {
        let mean = sums[i] / n as f64;
        let se = ((sq[i] / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (mean - payoffs[i]).abs() <= 3.0 * se,
            "arm {i}: {mean} vs {} (se {se})",
            payoffs[i]
        );
    }
    assert!(e.distribution().iter().all(|y| *y >= e.gamma / 3.0));
}

#[test]
fn exp3_rejects_bad_arms() {
    let mut e = Exp3State::new(2, 10).unwrap();
    assert!(e.update(2, 0.0).is_err());
    assert!(Exp3State::new(0, 10).is_err());
}
