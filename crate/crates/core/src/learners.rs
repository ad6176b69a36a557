//! Adversarial learners: Hedge over constraints, OGD over a box, EXP3 over a
//! finite set of first-stage points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FirstStageSet;

const RENORM_HIGH: f64 = 1e100;
const RENORM_LOW: f64 = 1e-100;

/// Exponential weights with full feedback. `sign = +1` moves mass toward
/// large payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    pub weights: Vec<f64>,
    pub eps: f64,
    pub sign: f64,
    /// Largest payoff magnitude seen so far.
    pub delta: f64,
}

impl HedgeState {
    /// Uniform weights and `ε = √(ln m / T)`.
    pub fn new(m: usize, horizon: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "Hedge needs at least one expert".into(),
            ));
        }
        if horizon == 0 {
            return Err(Error::InvalidArgument(
                "Hedge needs a positive horizon".into(),
            ));
        }
        let eps = ((m as f64).ln() / horizon as f64).sqrt();
        Ok(HedgeState {
            weights: vec![1.0; m],
            eps,
            sign: 1.0,
            delta: 0.0,
        })
    }

    pub fn with_sign(mut self, sign: f64) -> Self {
        self.sign = sign.signum();
        self
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn distribution(&self) -> Vec<f64> {
        let s: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / s).collect()
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.weights, rng)
    }

    /// `wᵢ ← wᵢ exp(s ε lᵢ)`, with exact rescaling to keep weights in range.
    pub fn update(&mut self, payoffs: &[f64]) -> Result<()> {
        if payoffs.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "{} payoffs for {} experts",
                payoffs.len(),
                self.weights.len()
            )));
        }
        if payoffs.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("Hedge payoff".into()));
        }
        for l in payoffs {
            self.delta = self.delta.max(l.abs());
        }
        let exps: Vec<f64> = payoffs.iter().map(|l| self.sign * self.eps * l).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if top.abs() > 500.0 { top } else { 0.0 };
        for (w, e) in self.weights.iter_mut().zip(&exps) {
            *w *= (e - shift).exp();
        }
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if !(RENORM_LOW..=RENORM_HIGH).contains(&max) {
            let s: f64 = self.weights.iter().sum();
            let k = self.weights.len() as f64 / s;
            for w in &mut self.weights {
                *w *= k;
            }
        }
        for w in &mut self.weights {
            if *w < f64::MIN_POSITIVE {
                *w = f64::MIN_POSITIVE;
            }
        }
        Ok(())
    }
}

/// Projected online gradient descent with `η_t = η₀/√t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgdState {
    pub c: Vec<f64>,
    pub set: FirstStageSet,
    pub eta0: f64,
    /// Observed bound on subgradient norms.
    pub grad_bound: f64,
    pub diameter: f64,
}

impl OgdState {
    pub fn new(set: FirstStageSet, start: Vec<f64>, eta0: f64) -> Result<Self> {
        if !matches!(set, FirstStageSet::Box { .. }) {
            return Err(Error::InvalidArgument(
                "OGD needs a box first-stage set".into(),
            ));
        }
        if start.len() != set.dim() {
            return Err(Error::Dimension("OGD start point".into()));
        }
        let diameter = set.diameter();
        let mut s = OgdState {
            c: start,
            set,
            eta0,
            grad_bound: 0.0,
            diameter,
        };
        s.set.project(&mut s.c);
        Ok(s)
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.eta0 / (t as f64).sqrt()
    }

    /// `c ← P_C(c − η_t g)`.
    pub fn step(&mut self, grad: &[f64], t: usize) -> Result<()> {
        if t == 0 {
            return Err(Error::InvalidArgument("OGD period starts at 1".into()));
        }
        if grad.len() != self.c.len() {
            return Err(Error::Dimension("OGD subgradient".into()));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("OGD subgradient".into()));
        }
        self.grad_bound = self
            .grad_bound
            .max(grad.iter().map(|g| g * g).sum::<f64>().sqrt());
        let eta = self.eta(t);
        for (c, g) in self.c.iter_mut().zip(grad) {
            *c -= eta * g;
        }
        self.set.project(&mut self.c);
        Ok(())
    }
}

/// EXP3 with uniform exploration; payoffs are rewards in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3State {
    pub weights: Vec<f64>,
    pub gamma: f64,
    pub eta: f64,
}

impl Exp3State {
    /// `γ = min(1, √(K ln K / ((e−1) T)))` and `η = γ/K`.
    pub fn new(k: usize, horizon: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("EXP3 needs at least one arm".into()));
        }
        let kf = k as f64;
        let gamma = if k == 1 {
            0.0
        } else {
            (kf * kf.ln() / ((std::f64::consts::E - 1.0) * horizon.max(1) as f64))
                .sqrt()
                .min(1.0)
        };
        Ok(Exp3State {
            weights: vec![1.0; k],
            gamma,
            eta: gamma / kf,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn distribution(&self) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let s: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / s + self.gamma / k)
            .collect()
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.distribution(), rng)
    }

    /// Importance-weighted estimate for every arm: `l·1{i = arm}/yᵢ`.
    pub fn estimate(&self, arm: usize, payoff: f64) -> Result<Vec<f64>> {
        if arm >= self.weights.len() {
            return Err(Error::InvalidArgument(format!("arm {arm} out of range")));
        }
        let y = self.distribution();
        let mut est = vec![0.0; self.weights.len()];
        est[arm] = payoff / y[arm];
        Ok(est)
    }

    pub fn update(&mut self, arm: usize, payoff: f64) -> Result<()> {
        if !payoff.is_finite() {
            return Err(Error::NonFinite("EXP3 payoff".into()));
        }
        let est = self.estimate(arm, payoff)?;
        self.weights[arm] *= (self.eta * est[arm]).exp();
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if !(RENORM_LOW..=RENORM_HIGH).contains(&max) {
            let s: f64 = self.weights.iter().sum();
            let k = self.weights.len() as f64 / s;
            for w in &mut self.weights {
                *w = (*w * k).max(f64::MIN_POSITIVE);
            }
        }
        Ok(())
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// `maxᵢ Σₜ l_{i,t} − Σₜ l_{a_t,t}` for a reward-maximizing expert learner.
pub fn audit_regret_experts(payoffs: &[Vec<f64>], actions: &[usize]) -> Result<f64> {
    if payoffs.len() != actions.len() {
        return Err(Error::Dimension(
            "one action per payoff row required".into(),
        ));
    }
    let Some(m) = payoffs.first().map(Vec::len) else {
        return Ok(0.0);
    };
    if payoffs.iter().any(|r| r.len() != m) || actions.iter().any(|&a| a >= m) {
        return Err(Error::Dimension(
            "ragged payoff matrix or action out of range".into(),
        ));
    }
    let mut totals = vec![0.0; m];
    let mut earned = 0.0;
    for (row, &a) in payoffs.iter().zip(actions) {
        for (t, l) in totals.iter_mut().zip(row) {
            *t += l;
        }
        earned += row[a];
    }
    Ok(totals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - earned)
}

/// `Σₜ hₜ(cₜ) − min_c Σₜ hₜ(c)` for a loss-minimizing learner, given the
/// losses at the iterates and the best fixed total.
pub fn audit_regret_online(losses_at_iterates: &[f64], best_fixed_total: f64) -> f64 {
    losses_at_iterates.iter().sum::<f64>() - best_fixed_total
}
