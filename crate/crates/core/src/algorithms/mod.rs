//! The IAL and DAL online loops and the IAL prediction-stage solve.

pub mod dual;
pub mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{self, TieBreak};
use crate::learners::{Exp3State, HedgeState, OgdState};
use crate::model::{Direction, FirstStageSet, ProblemInstance, TypeRealization};
use crate::rng::{stream, Purpose};

pub use dual::{DualSolution, DualSolver, SaaSegment, SearchOptions, SegmentEval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoKind {
    Ial,
    Dal,
    IalFiniteC,
    DalFiniteC,
}

impl AlgoKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgoKind::Ial => "ial",
            AlgoKind::Dal => "dal",
            AlgoKind::IalFiniteC => "ial_finite_c",
            AlgoKind::DalFiniteC => "dal_finite_c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuPolicy {
    Fixed {
        value: f64,
    },
    /// IAL: `‖λ̂*‖` in the configured norm. DAL: `T` for packing, the
    /// covering estimate for covering.
    Auto,
    CoveringEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuNorm {
    Inf,
    /// Keeps the long-term rows priced strongly enough that the violation
    /// shrinks with `T`; the infinity norm can leave a constant violation
    /// when several duals are active.
    One,
}

/// How the per-period targets `β̂` are read off the prediction-stage solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// Expected usage at `(λ̂*, ĉ*)` under the lexicographically smallest optimal `x`.
    Lexicographic,
    /// Primal solution recovered by the dual solver when it provides one,
    /// lexicographic otherwise.
    Recovered,
}

/// How the dual player's Hedge distribution `y_t` becomes `λ_t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualPlay {
    /// `λ_t = μ e_{i_t}` with `i_t ~ y_t`.
    #[default]
    Sampled,
    /// `λ_t = μ y_t`; the dummy expert's mass prices nothing.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoConfig {
    pub mu: MuPolicy,
    pub mu_norm: MuNorm,
    /// SAA sample count per prediction segment.
    pub saa_samples: usize,
    pub dual_solver: DualSolver,
    pub target_rule: TargetRule,
    pub search: SearchOptions,
    /// `+1` moves Hedge toward large payoffs.
    pub hedge_sign: f64,
    /// OGD step `η_t = ogd_eta0/√t`.
    pub ogd_eta0: f64,
    /// Bound used to scale EXP3 rewards into `[-1, 1]`; derived when absent.
    pub exp3_payoff_bound: Option<f64>,
    /// Seed for the prediction-stage samples (shared across replications).
    pub saa_seed: u64,
    /// Under [`DualPlay::Mixed`], IAL re-solves step 2 once any component
    /// of `y_t` has moved this far from the distribution of the last solve.
    pub mixed_refresh: f64,
    /// Adds an always-tight constraint `g ≡ β` as expert `m`; choosing it
    /// prices nothing, so Hedge can mix `λ` between `0` and `μ e_i`.
    pub dummy_expert: bool,
    pub dual_play: DualPlay,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        AlgoConfig {
            mu: MuPolicy::Auto,
            mu_norm: MuNorm::One,
            saa_samples: 256,
            dual_solver: DualSolver::Auto,
            target_rule: TargetRule::Recovered,
            search: SearchOptions::default(),
            hedge_sign: 1.0,
            ogd_eta0: 1.0,
            exp3_payoff_bound: None,
            saa_seed: 0,
            dummy_expert: true,
            dual_play: DualPlay::Sampled,
            mixed_refresh: 0.05,
        }
    }
}

/// Output of the prediction-stage solve, organized by prediction segment.
#[derive(Debug, Clone, PartialEq)]
pub struct IalPrecomputation {
    pub lambda: Vec<f64>,
    pub mu: f64,
    /// `μ / T`.
    pub alpha: f64,
    /// Value of the sample-average prediction-stage program.
    pub value: f64,
    pub gap: f64,
    pub converged: bool,
    /// `(start, end)` of each segment, 1-based inclusive.
    pub segments: Vec<(usize, usize)>,
    /// `ĉ*` per segment.
    pub c_hat: Vec<Vec<f64>>,
    /// `β̂` per segment (per-period values).
    pub beta_hat: Vec<Vec<f64>>,
    /// `argmin_c L̂_t(c, μ eᵢ)` per segment and constraint.
    pub step2_c: Vec<Vec<Vec<f64>>>,
    pub horizon: usize,
    /// The prediction samples, kept for step 2 under [`DualPlay::Mixed`].
    pub samples: Vec<SaaSegment>,
}

impl IalPrecomputation {
    pub fn segment_of(&self, t: usize) -> Option<usize> {
        self.segments.iter().position(|&(s, e)| t >= s && t <= e)
    }

    pub fn beta_hat_at(&self, t: usize) -> Option<&[f64]> {
        self.segment_of(t).map(|j| self.beta_hat[j].as_slice())
    }

    pub fn c_hat_at(&self, t: usize) -> Option<&[f64]> {
        self.segment_of(t).map(|j| self.c_hat[j].as_slice())
    }

    /// `Σ_t β̂_{i,t}`.
    pub fn total_targets(&self) -> Vec<f64> {
        let m = self.lambda.len();
        let mut out = vec![0.0; m];
        for (&(s, e), b) in self.segments.iter().zip(&self.beta_hat) {
            for (o, v) in out.iter_mut().zip(b) {
                *o += (e + 1 - s) as f64 * v;
            }
        }
        out
    }
}

pub fn resolve_mu_from_lambda(lambda: &[f64], norm: MuNorm) -> f64 {
    match norm {
        MuNorm::Inf => lambda.iter().copied().fold(0.0, f64::max),
        MuNorm::One => lambda.iter().sum(),
    }
}

/// Solves the sample-average prediction-stage program and derives `λ̂*`,
/// `ĉ*`, `β̂` and the step-2 first-stage table.
pub fn ial_precompute(inst: &ProblemInstance, cfg: &AlgoConfig) -> Result<IalPrecomputation> {
    let pred = inst
        .prediction
        .as_ref()
        .ok_or(Error::MissingPrediction(1))?;
    let segs = dual::build_segments(inst, pred, cfg.saa_samples, cfg.saa_seed)?;
    ial_precompute_on(inst, &segs, cfg)
}

pub fn ial_precompute_on(
    inst: &ProblemInstance,
    segs: &[SaaSegment],
    cfg: &AlgoConfig,
) -> Result<IalPrecomputation> {
    let m = inst.m();
    let sol = dual::solve_dual(inst, segs, cfg.dual_solver, &cfg.search)?;
    let lambda = sol.lambda.clone();
    let mut c_hat = Vec::with_capacity(segs.len());
    let mut beta_hat = Vec::with_capacity(segs.len());
    let recovered = match cfg.target_rule {
        TargetRule::Recovered => sol.recovered_targets.clone(),
        TargetRule::Lexicographic => None,
    };
    for (j, (seg, ev)) in segs.iter().zip(&sol.evals).enumerate() {
        c_hat.push(ev.c.clone());
        let b = match &recovered {
            Some(r) => r[j].clone(),
            None => dual::eval_segment(inst, seg, &ev.c, &lambda, TieBreak::Lexicographic)?.eg,
        };
        beta_hat.push(b.into_iter().map(|v| v.max(0.0)).collect());
    }
    let mu = match cfg.mu {
        MuPolicy::Fixed { value } => value,
        _ => resolve_mu_from_lambda(&lambda, cfg.mu_norm),
    };
    let mut step2_c = Vec::with_capacity(segs.len());
    for seg in segs {
        let experts = m + cfg.dummy_expert as usize;
        let mut per_i = Vec::with_capacity(experts);
        for i in 0..experts {
            let lam = e_i(m, i, mu);
            per_i.push(dual::minimize_c(inst, seg, &lam, &cfg.search)?.c);
        }
        step2_c.push(per_i);
    }
    Ok(IalPrecomputation {
        lambda,
        mu,
        alpha: mu / inst.horizon as f64,
        value: sol.value,
        gap: sol.gap,
        converged: sol.converged,
        segments: segs.iter().map(|s| (s.start, s.end)).collect(),
        c_hat,
        beta_hat,
        step2_c,
        horizon: inst.horizon,
        samples: segs.to_vec(),
    })
}

/// One period of an episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub c: Vec<f64>,
    /// Constraint chosen by the dual player; `None` after termination.
    pub i: Option<usize>,
    pub x: Vec<f64>,
    pub p: f64,
    pub f: f64,
    pub g: Vec<f64>,
    pub corrupted: bool,
    pub null_action: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub algorithm: AlgoKind,
    pub records: Vec<PeriodRecord>,
    pub cumulative_g: Vec<f64>,
    /// Last period in which a non-null action could be taken (`T` if never terminated).
    pub tau: usize,
    /// `Σ_t p(c_t) + f(x_t)`.
    pub objective: f64,
    pub mu: f64,
    pub seed: u64,
    pub replication: u64,
    /// Number of corrupted periods seen, when the caller supplied the flags.
    pub w_theta: Option<usize>,
}

impl EpisodeLog {
    fn new(
        algorithm: AlgoKind,
        m: usize,
        horizon: usize,
        mu: f64,
        seed: u64,
        replication: u64,
    ) -> Self {
        EpisodeLog {
            algorithm,
            records: Vec::with_capacity(horizon),
            cumulative_g: vec![0.0; m],
            tau: horizon,
            objective: 0.0,
            mu,
            seed,
            replication,
            w_theta: None,
        }
    }

    fn push(&mut self, rec: PeriodRecord) {
        for (a, b) in self.cumulative_g.iter_mut().zip(&rec.g) {
            *a += b;
        }
        self.objective += rec.p + rec.f;
        self.records.push(rec);
    }
}

/// Realized types with optional corruption flags.
#[derive(Debug, Clone, Copy)]
pub struct TypeStream<'a> {
    pub types: &'a [TypeRealization],
    pub corrupted: Option<&'a [bool]>,
}

impl<'a> TypeStream<'a> {
    pub fn clean(types: &'a [TypeRealization]) -> Self {
        TypeStream {
            types,
            corrupted: None,
        }
    }

    fn flag(&self, idx: usize) -> bool {
        self.corrupted.is_some_and(|c| c[idx])
    }
}

fn check_stream(inst: &ProblemInstance, stream: &TypeStream<'_>) -> Result<()> {
    if stream.types.len() != inst.horizon {
        return Err(Error::Dimension(format!(
            "stream has {} types for T = {}",
            stream.types.len(),
            inst.horizon
        )));
    }
    if stream.corrupted.is_some_and(|c| c.len() != inst.horizon) {
        return Err(Error::Dimension(
            "corruption flags do not match the horizon".into(),
        ));
    }
    Ok(())
}

/// `μ e_i`, or zero for the dummy expert `i = m`.
fn e_i(m: usize, i: usize, mu: f64) -> Vec<f64> {
    let mut l = vec![0.0; m];
    if i < m {
        l[i] = mu;
    }
    l
}

/// Informative adversarial learning: Hedge picks a constraint, the first stage
/// comes from the precomputed step-2 table, and all `m` payoffs are fed back.
pub fn ial_run(
    inst: &ProblemInstance,
    pre: &IalPrecomputation,
    stream: TypeStream<'_>,
    cfg: &AlgoConfig,
    seed: u64,
    replication: u64,
) -> Result<EpisodeLog> {
    check_stream(inst, &stream)?;
    let m = inst.m();
    if pre.horizon != inst.horizon || pre.lambda.len() != m {
        return Err(Error::Dimension(
            "precomputation does not match the instance".into(),
        ));
    }
    let kind = if matches!(inst.first_stage_set, FirstStageSet::Finite { .. }) {
        AlgoKind::IalFiniteC
    } else {
        AlgoKind::Ial
    };
    let t_f = inst.horizon as f64;
    let s = inst.direction.sign();
    let mu = pre.mu;
    let experts = m + cfg.dummy_expert as usize;
    if pre.step2_c.iter().any(|row| row.len() != experts) {
        return Err(Error::Dimension(
            "precomputation was built with a different expert set".into(),
        ));
    }
    let mut hedge = HedgeState::new(experts, inst.horizon)?.with_sign(cfg.hedge_sign);
    let mut log = EpisodeLog::new(kind, m, inst.horizon, mu, seed, replication);
    let mut corrupted = 0;
    let mut cache: Option<(usize, Vec<f64>, Vec<f64>)> = None;
    for t in 1..=inst.horizon {
        let seg = pre.segment_of(t).ok_or(Error::MissingPrediction(t))?;
        let i = hedge.select(&mut stream_rng(seed, replication, t, Purpose::Dual));
        let (c, lam) = match cfg.dual_play {
            DualPlay::Sampled => (pre.step2_c[seg][i].clone(), e_i(m, i, mu)),
            DualPlay::Mixed => {
                let y = hedge.distribution();
                let stale = match &cache {
                    Some((j, y0, _)) => {
                        *j != seg
                            || y.iter()
                                .zip(y0)
                                .any(|(a, b)| (a - b).abs() > cfg.mixed_refresh)
                    }
                    None => true,
                };
                let lam: Vec<f64> = y[..m].iter().map(|v| mu * v).collect();
                if stale {
                    let c = dual::minimize_c(inst, &pre.samples[seg], &lam, &cfg.search)?.c;
                    cache = Some((seg, y, c));
                }
                (cache.as_ref().expect("cache filled").2.clone(), lam)
            }
        };
        let theta = &stream.types[t - 1];
        let sol = inner::solve_second_stage(&c, &lam, theta, inst)?;
        let p = inst.first_stage_cost.value(&c);
        let f = theta.cost.value(&sol.x);
        let g = theta.g(&c, &sol.x);
        let bh = &pre.beta_hat[seg];
        let payoffs: Vec<f64> = (0..experts)
            .map(|k| match k < m {
                true => {
                    p - s * mu * bh[k] / (t_f * inst.beta[k])
                        + f
                        + s * mu * g[k] / (t_f * inst.beta[k])
                }
                false => p + f,
            })
            .collect();
        hedge.update(&payoffs)?;
        let flag = stream.flag(t - 1);
        corrupted += flag as usize;
        log.push(PeriodRecord {
            t,
            c,
            i: Some(i),
            x: sol.x,
            p,
            f,
            g,
            corrupted: flag,
            null_action: false,
        });
    }
    if stream.corrupted.is_some() {
        log.w_theta = Some(corrupted);
    }
    Ok(log)
}

fn stream_rng(seed: u64, replication: u64, t: usize, purpose: Purpose) -> rand_chacha::ChaCha8Rng {
    stream(seed, replication, t as u64, purpose)
}

/// Resolves DAL's `μ`. The covering estimate needs the first `⌈√T⌉` types.
pub fn resolve_dal_mu(
    inst: &ProblemInstance,
    cfg: &AlgoConfig,
    observed: &[TypeRealization],
) -> Result<f64> {
    match (cfg.mu, inst.direction) {
        (MuPolicy::Fixed { value }, _) => Ok(value),
        (MuPolicy::Auto, Direction::Packing) => Ok(inst.horizon as f64),
        (MuPolicy::Auto, Direction::Covering) | (MuPolicy::CoveringEstimate, _) => {
            let n0 = warmup_len(inst.horizon);
            estimate_mu_covering(inst, &observed[..n0.min(observed.len())], cfg)
        }
    }
}

/// `⌈√T⌉`.
pub fn warmup_len(horizon: usize) -> usize {
    (horizon as f64).sqrt().ceil() as usize
}

/// `2‖λ‖₁` of the dual solved on the empirical distribution of `observed`,
/// floored at `T·min β`.
pub fn estimate_mu_covering(
    inst: &ProblemInstance,
    observed: &[TypeRealization],
    cfg: &AlgoConfig,
) -> Result<f64> {
    if inst.horizon < 4 {
        return Err(Error::InvalidArgument(
            "covering estimate needs T ≥ 4".into(),
        ));
    }
    let floor = inst.horizon as f64 * inst.beta_min();
    if observed.is_empty() {
        return Err(Error::InvalidArgument(
            "covering estimate needs observations".into(),
        ));
    }
    let seg = SaaSegment::from_types(1, inst.horizon, observed.to_vec());
    let solver = match cfg.dual_solver {
        DualSolver::ExactLp => DualSolver::Auto,
        other => other,
    };
    let sol = match dual::solve_dual(inst, std::slice::from_ref(&seg), solver, &cfg.search) {
        Ok(s) => s,
        // Unattainable empirical targets give no finite dual; the warmup carries no price information.
        Err(Error::Infeasible(_)) => return Ok(floor),
        Err(e) => return Err(e),
    };
    Ok((2.0 * sol.lambda.iter().sum::<f64>()).max(floor))
}

/// Doubly adversarial learning. Packing episodes stop at the first overflow
/// and play the null action afterwards; covering episodes never stop.
pub fn dal_run(
    inst: &ProblemInstance,
    stream: TypeStream<'_>,
    cfg: &AlgoConfig,
    seed: u64,
    replication: u64,
) -> Result<EpisodeLog> {
    check_stream(inst, &stream)?;
    let m = inst.m();
    let horizon = inst.horizon;
    let t_f = horizon as f64;
    let s = inst.direction.sign();
    let finite = matches!(inst.first_stage_set, FirstStageSet::Finite { .. });
    let kind = if finite {
        AlgoKind::DalFiniteC
    } else {
        AlgoKind::Dal
    };
    let covering_estimate = inst.direction == Direction::Covering
        && !matches!(cfg.mu, MuPolicy::Fixed { .. })
        || matches!(cfg.mu, MuPolicy::CoveringEstimate);
    let warmup = if covering_estimate {
        warmup_len(horizon).min(horizon)
    } else {
        0
    };
    let mut mu = if covering_estimate {
        t_f
    } else {
        resolve_dal_mu(inst, cfg, &[])?
    };

    let experts = m + cfg.dummy_expert as usize;
    let mut hedge = HedgeState::new(experts, horizon)?.with_sign(cfg.hedge_sign);
    let mut ogd = if finite {
        None
    } else {
        Some(OgdState::new(
            inst.first_stage_set.clone(),
            inst.first_stage_set.null_point(),
            cfg.ogd_eta0,
        )?)
    };
    let points = match &inst.first_stage_set {
        FirstStageSet::Finite { points } => points.clone(),
        FirstStageSet::Box { .. } => vec![],
    };
    let mut exp3 = if finite {
        Some(Exp3State::new(points.len(), horizon)?)
    } else {
        None
    };
    let exp3_bound = cfg.exp3_payoff_bound.unwrap_or_else(|| {
        let pmax = points
            .iter()
            .map(|c| inst.first_stage_cost.value(c).abs())
            .fold(0.0, f64::max);
        pmax + 2.0 + 2.0 / inst.beta_min()
    });

    let mut log = EpisodeLog::new(kind, m, horizon, mu, seed, replication);
    let mut terminated = false;
    let mut corrupted = 0;
    for t in 1..=horizon {
        if warmup > 0 && t == warmup + 1 {
            mu = estimate_mu_covering(inst, &stream.types[..warmup], cfg)?;
            log.mu = mu;
        }
        let flag = stream.flag(t - 1);
        corrupted += flag as usize;
        if terminated {
            log.push(PeriodRecord {
                t,
                c: inst.first_stage_set.null_point(),
                i: None,
                x: vec![0.0; inst.dim_x()],
                p: 0.0,
                f: 0.0,
                g: vec![0.0; m],
                corrupted: flag,
                null_action: true,
            });
            continue;
        }
        let (c, arm) = match (&ogd, &exp3) {
            (Some(o), _) => (o.c.clone(), None),
            (None, Some(e)) => {
                let a = e.select(&mut stream_rng(seed, replication, t, Purpose::Primal));
                (points[a].clone(), Some(a))
            }
            _ => unreachable!(),
        };
        let i = hedge.select(&mut stream_rng(seed, replication, t, Purpose::Dual));
        let theta = &stream.types[t - 1];
        let lam = match cfg.dual_play {
            DualPlay::Sampled => e_i(m, i, mu),
            DualPlay::Mixed => hedge.distribution()[..m].iter().map(|y| mu * y).collect(),
        };
        let ev = inner::evaluate(&c, &lam, theta, inst)?;
        let p = inst.first_stage_cost.value(&c);
        let f = theta.cost.value(&ev.solution.x);
        let g = theta.g(&c, &ev.solution.x);
        match (&mut ogd, &mut exp3, arm) {
            (Some(o), _, _) => o.step(&ev.subgradient, t)?,
            (None, Some(e), Some(a)) => {
                e.update(a, (-ev.lagrangian / exp3_bound).clamp(-1.0, 1.0))?
            }
            _ => unreachable!(),
        }
        let payoffs: Vec<f64> = (0..experts)
            .map(|k| match k < m {
                true => p - s * mu / t_f + f + s * mu * g[k] / (t_f * inst.beta[k]),
                false => p + f,
            })
            .collect();
        hedge.update(&payoffs)?;
        log.push(PeriodRecord {
            t,
            c,
            i: Some(i),
            x: ev.solution.x,
            p,
            f,
            g,
            corrupted: flag,
            null_action: false,
        });
        if inst.direction == Direction::Packing
            && log
                .cumulative_g
                .iter()
                .zip(&inst.beta)
                .any(|(cg, b)| *cg > t_f * b)
        {
            terminated = true;
            log.tau = t;
        }
    }
    if stream.corrupted.is_some() {
        log.w_theta = Some(corrupted);
    }
    Ok(log)
}
