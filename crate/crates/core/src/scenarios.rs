//! Experiment instances, segment schedules, corruption plans and the
//! two-branch lower-bound constructions.

use serde::{Deserialize, Serialize};

use crate::algorithms::TypeStream;
use crate::error::{Error, Result};
use crate::model::{
    Affine, BoxSet, ConstraintFn, CostFn, Direction, Distribution, ExtraRows, FirstStageCost,
    FirstStageSet, ProblemInstance, TypeFamily, TypeRealization,
};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    #[default]
    Exp1,
    Exp2,
    Toy,
    LowerboundPred,
    LowerboundCorrupt,
    Custom,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[default]
    A,
    B,
    C,
    D,
}

impl Case {
    /// Demand-mean multipliers over equal-length segments.
    pub fn multipliers(self) -> Vec<f64> {
        match self {
            Case::A => vec![2.0],
            Case::B => vec![1.0, 3.0],
            Case::C => vec![3.0, 1.0],
            Case::D => vec![1.0, 2.0, 3.0, 2.0, 1.0],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        }
    }

    pub fn all() -> [Case; 4] {
        [Case::A, Case::B, Case::C, Case::D]
    }
}

/// Which second-half type the lower-bound construction uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `f = −(1 + W/T) x`.
    #[default]
    Theta2,
    /// `f = −(1 − W/T) x`.
    Theta3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundKind {
    Pred,
    Corrupt,
}

/// How the long-term constraint measures service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceMetric {
    /// `g_i = x_i`.
    Units,
    /// `g_i = x_i / D_i`.
    FillRate,
}

/// Replacement applied at planned periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReplacementRule {
    Fixed {
        theta: TypeRealization,
    },
    /// A fresh draw keyed by `(seed, replication, t)`, so re-applying the
    /// rule yields the same type.
    Draw {
        distribution: Distribution,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionPlan {
    /// 1-based periods.
    pub periods: Vec<usize>,
    pub rule: ReplacementRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub experiment: ExperimentId,
    pub case: Case,
    pub horizon: usize,
    pub resources: usize,
    pub mu0: f64,
    pub sigma0: f64,
    /// Overrides the case's multiplier schedule.
    pub multipliers: Option<Vec<f64>>,
    pub beta: Vec<f64>,
    /// Upper end of the budget range, raw units.
    pub budget_cap: f64,
    /// Raw units per model unit.
    pub scale: f64,
    /// Defaults to units for `exp1` and fill rate for `exp2`.
    pub metric: Option<ServiceMetric>,
    pub corruption: Option<CorruptionPlan>,
    /// Prediction error (pred kind) or corruption magnitude (corrupt kind).
    pub w_t: f64,
    pub branch: Branch,
    /// Used by `custom`.
    pub instance: Option<ProblemInstance>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            experiment: ExperimentId::Exp1,
            case: Case::A,
            horizon: 10_000,
            resources: 4,
            mu0: 5.0,
            sigma0: 10.0 / 3.0,
            multipliers: None,
            beta: vec![0.95, 0.90, 0.85, 0.80],
            budget_cap: 60.0,
            scale: 10.0,
            metric: None,
            corruption: None,
            w_t: 0.0,
            branch: Branch::Theta2,
            instance: None,
        }
    }
}

/// An instance plus the corruption applied to its realized streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub instance: ProblemInstance,
    pub corruption: Option<CorruptionPlan>,
}

/// One replication's revealed types.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedStream {
    pub types: Vec<TypeRealization>,
    pub flags: Option<Vec<bool>>,
    pub w_theta: Option<usize>,
}

impl RealizedStream {
    pub fn as_stream(&self) -> TypeStream<'_> {
        TypeStream {
            types: &self.types,
            corrupted: self.flags.as_deref(),
        }
    }
}

impl Scenario {
    /// True types for `(seed, replication)` with the corruption plan applied.
    pub fn realize(&self, seed: u64, replication: u64) -> Result<RealizedStream> {
        let types = self.instance.realize(seed, replication)?;
        match &self.corruption {
            None => Ok(RealizedStream {
                types,
                flags: None,
                w_theta: None,
            }),
            Some(plan) => {
                let out = corrupt_stream(&types, plan, &self.instance, seed, replication)?;
                Ok(RealizedStream {
                    types: out.types,
                    flags: Some(out.flags),
                    w_theta: Some(out.w_theta),
                })
            }
        }
    }
}

/// `(start, end)` of `n` near-equal segments of `1..=T`. Segment `k` starts at
/// `⌊kT/n⌋ + 1`.
pub fn segment_table(horizon: usize, n: usize) -> Result<Vec<(usize, usize)>> {
    if n == 0 || n > horizon {
        return Err(Error::InvalidArgument(format!(
            "cannot split T = {horizon} into {n} segments"
        )));
    }
    Ok((0..n)
        .map(|k| (k * horizon / n + 1, (k + 1) * horizon / n))
        .collect())
}

/// Piecewise truncated-normal schedule with means `k·μ₀`.
pub fn demand_schedule(
    horizon: usize,
    multipliers: &[f64],
    mu0: f64,
    sigma0: f64,
) -> Result<Distribution> {
    if multipliers.is_empty() || multipliers.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::InvalidArgument(
            "segment multipliers must be positive".into(),
        ));
    }
    let table = segment_table(horizon, multipliers.len())?;
    let leaves: Vec<Distribution> = multipliers
        .iter()
        .map(|k| Distribution::TruncNormal {
            mean: k * mu0,
            std: sigma0,
        })
        .collect();
    if leaves.len() == 1 {
        return Ok(leaves.into_iter().next().expect("one leaf"));
    }
    Ok(Distribution::Piecewise {
        breaks: table[1..].iter().map(|s| s.0).collect(),
        segments: leaves,
    })
}

pub fn make_experiment(spec: &ScenarioSpec) -> Result<Scenario> {
    let scenario = match spec.experiment {
        ExperimentId::Exp1 | ExperimentId::Exp2 => resource_experiment(spec)?,
        ExperimentId::Toy => Scenario {
            spec: spec.clone(),
            instance: toy_instance(spec.horizon)?,
            corruption: None,
        },
        ExperimentId::LowerboundPred | ExperimentId::LowerboundCorrupt => {
            let kind = match spec.experiment {
                ExperimentId::LowerboundPred => LowerBoundKind::Pred,
                _ => LowerBoundKind::Corrupt,
            };
            let mut s = make_lowerbound(kind, spec.horizon, spec.w_t, spec.branch)?;
            s.spec = spec.clone();
            s
        }
        ExperimentId::Custom => {
            let instance = spec.instance.clone().ok_or_else(|| {
                Error::InvalidArgument("custom scenario without an instance".into())
            })?;
            Scenario {
                spec: spec.clone(),
                instance,
                corruption: None,
            }
        }
    };
    match (&spec.corruption, spec.experiment) {
        (Some(plan), e) if e != ExperimentId::LowerboundCorrupt => Ok(Scenario {
            corruption: Some(plan.clone()),
            ..scenario
        }),
        _ => Ok(scenario),
    }
}

fn resource_experiment(spec: &ScenarioSpec) -> Result<Scenario> {
    if spec.resources == 0 || spec.beta.len() != spec.resources {
        return Err(Error::Dimension(format!(
            "{} targets for {} resources",
            spec.beta.len(),
            spec.resources
        )));
    }
    if !(spec.scale > 0.0 && spec.budget_cap > 0.0) {
        return Err(Error::InvalidArgument(
            "scale and budget cap must be positive".into(),
        ));
    }
    let exp1 = spec.experiment == ExperimentId::Exp1;
    let metric = spec.metric.unwrap_or(if exp1 {
        ServiceMetric::Units
    } else {
        ServiceMetric::FillRate
    });
    let ks = spec
        .multipliers
        .clone()
        .unwrap_or_else(|| spec.case.multipliers());
    let schedule = demand_schedule(spec.horizon, &ks, spec.mu0, spec.sigma0)?;
    let cap = spec.budget_cap / spec.scale;
    let n = spec.resources;
    let instance = ProblemInstance {
        horizon: spec.horizon,
        beta: spec.beta.clone(),
        direction: if exp1 {
            Direction::Packing
        } else {
            Direction::Covering
        },
        first_stage_set: FirstStageSet::Box {
            lo: vec![0.0],
            hi: vec![cap],
        },
        // Experiment 1 maximizes the budget; Experiment 2 buys the targets as cheaply as possible.
        first_stage_cost: FirstStageCost::linear(vec![if exp1 { -1.0 } else { 1.0 }]),
        second_stage_box: BoxSet {
            lo: vec![0.0; n],
            hi: vec![cap; n],
        },
        normalization_scale: spec.scale,
        distribution: schedule.clone(),
        prediction: Some(schedule),
        family: Some(TypeFamily::DemandService {
            resources: n,
            fill_rate: metric == ServiceMetric::FillRate,
        }),
    };
    Ok(Scenario {
        spec: spec.clone(),
        instance,
        corruption: None,
    })
}

/// One-variable type `f = −coef·x`, `g = x`, no first stage.
pub fn linear_type(coef: f64) -> TypeRealization {
    TypeRealization {
        cost: CostFn::Linear { q: vec![-coef] },
        constraints: vec![ConstraintFn::Affine(Affine {
            a: vec![1.0],
            b: vec![],
            d: 0.0,
        })],
        coupling: vec![],
        extra: ExtraRows::None,
    }
}

fn unit_interval_instance(
    horizon: usize,
    distribution: Distribution,
    prediction: Option<Distribution>,
) -> ProblemInstance {
    ProblemInstance {
        horizon,
        beta: vec![0.5],
        direction: Direction::Packing,
        first_stage_set: FirstStageSet::Box {
            lo: vec![],
            hi: vec![],
        },
        first_stage_cost: FirstStageCost::linear(vec![]),
        second_stage_box: BoxSet {
            lo: vec![0.0],
            hi: vec![1.0],
        },
        normalization_scale: 1.0,
        distribution,
        prediction,
        family: None,
    }
}

/// `f = −x`, `g = x`, `K = [0, 1]`, `β = 1/2`, exact point-mass prediction.
pub fn toy_instance(horizon: usize) -> Result<ProblemInstance> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let d = Distribution::point(linear_type(1.0));
    Ok(unit_interval_instance(horizon, d.clone(), Some(d)))
}

/// The two-branch construction: `θ¹` throughout the first half, `θ²` or `θ³`
/// afterwards. The pred kind changes the true distribution and predicts `θ¹`;
/// the corrupt kind keeps `θ¹` true and corrupts the second half.
pub fn make_lowerbound(
    kind: LowerBoundKind,
    horizon: usize,
    w_t: f64,
    branch: Branch,
) -> Result<Scenario> {
    if horizon < 2 {
        return Err(Error::InvalidArgument(
            "lower-bound construction needs T ≥ 2".into(),
        ));
    }
    if !(w_t.is_finite() && (0.0..=horizon as f64 / 2.0).contains(&w_t)) {
        return Err(Error::InvalidArgument(format!(
            "W_T = {w_t} outside [0, T/2]"
        )));
    }
    let eps = w_t / horizon as f64;
    let theta1 = linear_type(1.0);
    let late = match branch {
        Branch::Theta2 => linear_type(1.0 + eps),
        Branch::Theta3 => linear_type(1.0 - eps),
    };
    let half = horizon / 2;
    let spec = ScenarioSpec {
        experiment: match kind {
            LowerBoundKind::Pred => ExperimentId::LowerboundPred,
            LowerBoundKind::Corrupt => ExperimentId::LowerboundCorrupt,
        },
        horizon,
        resources: 1,
        beta: vec![0.5],
        w_t,
        branch,
        ..ScenarioSpec::default()
    };
    match kind {
        LowerBoundKind::Pred => {
            let dist = Distribution::Piecewise {
                breaks: vec![half + 1],
                segments: vec![
                    Distribution::point(theta1.clone()),
                    Distribution::point(late),
                ],
            };
            let instance = unit_interval_instance(horizon, dist, Some(Distribution::point(theta1)));
            Ok(Scenario {
                spec,
                instance,
                corruption: None,
            })
        }
        LowerBoundKind::Corrupt => {
            let instance = unit_interval_instance(horizon, Distribution::point(theta1), None);
            let plan = CorruptionPlan {
                periods: (half + 1..=horizon).collect(),
                rule: ReplacementRule::Fixed { theta: late },
            };
            Ok(Scenario {
                spec,
                instance,
                corruption: Some(plan),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedStream {
    pub types: Vec<TypeRealization>,
    /// `θ_tᶜ ≠ θ_t`.
    pub flags: Vec<bool>,
    pub w_theta: usize,
}

/// Replaces the planned periods and counts the periods that actually changed.
pub fn corrupt_stream(
    types: &[TypeRealization],
    plan: &CorruptionPlan,
    inst: &ProblemInstance,
    seed: u64,
    replication: u64,
) -> Result<CorruptedStream> {
    let horizon = types.len();
    let mut out = types.to_vec();
    let mut flags = vec![false; horizon];
    for &t in &plan.periods {
        if t == 0 || t > horizon {
            return Err(Error::PeriodOutOfRange { t, horizon });
        }
        let replacement = match &plan.rule {
            ReplacementRule::Fixed { theta } => theta.clone(),
            ReplacementRule::Draw { distribution } => {
                let mut rng = stream(seed, replication, t as u64, Purpose::Corruption);
                distribution.sample(t, inst.family.as_ref(), inst.normalization_scale, &mut rng)?
            }
        };
        out[t - 1] = replacement;
    }
    for (k, flag) in flags.iter_mut().enumerate() {
        *flag = out[k] != types[k];
    }
    let w_theta = flags.iter().filter(|f| **f).count();
    Ok(CorruptedStream {
        types: out,
        flags,
        w_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_boundaries_go_to_the_later_segment() {
        assert_eq!(segment_table(10, 2).unwrap(), vec![(1, 5), (6, 10)]);
        assert_eq!(
            segment_table(10, 5).unwrap(),
            vec![(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)]
        );
        assert_eq!(segment_table(7, 2).unwrap(), vec![(1, 3), (4, 7)]);
        assert!(segment_table(3, 4).is_err());
    }

    #[test]
    fn case_tables() {
        assert_eq!(Case::A.multipliers(), vec![2.0]);
        assert_eq!(Case::D.multipliers(), vec![1.0, 2.0, 3.0, 2.0, 1.0]);
        let mut b = Case::B.multipliers();
        b.reverse();
        assert_eq!(b, Case::C.multipliers());
    }

    #[test]
    fn case_d_schedule_has_fifths() {
        let spec = ScenarioSpec {
            case: Case::D,
            horizon: 1000,
            ..ScenarioSpec::default()
        };
        let s = make_experiment(&spec).unwrap();
        let segs = s.instance.distribution.segments(1000);
        let spans: Vec<_> = segs.iter().map(|g| (g.start, g.end)).collect();
        assert_eq!(
            spans,
            vec![(1, 200), (201, 400), (401, 600), (601, 800), (801, 1000)]
        );
        let means: Vec<f64> = segs
            .iter()
            .map(|g| match g.dist {
                Distribution::TruncNormal { mean, .. } => *mean,
                _ => f64::NAN,
            })
            .collect();
        assert_eq!(means, vec![5.0, 10.0, 15.0, 10.0, 5.0]);
        assert_eq!(
            s.instance.prediction.as_ref(),
            Some(&s.instance.distribution)
        );
    }

    #[test]
    fn nonpositive_multiplier_rejected() {
        let spec = ScenarioSpec {
            multipliers: Some(vec![1.0, 0.0]),
            ..ScenarioSpec::default()
        };
        assert!(make_experiment(&spec).is_err());
    }

    #[test]
    fn custom_needs_instance() {
        let spec = ScenarioSpec {
            experiment: ExperimentId::Custom,
            ..ScenarioSpec::default()
        };
        assert!(make_experiment(&spec).is_err());
    }

    #[test]
    fn lowerbound_range_checked() {
        assert!(make_lowerbound(LowerBoundKind::Pred, 100, 51.0, Branch::Theta2).is_err());
        assert!(make_lowerbound(LowerBoundKind::Pred, 100, -1.0, Branch::Theta2).is_err());
        assert!(make_lowerbound(LowerBoundKind::Corrupt, 100, 50.0, Branch::Theta3).is_ok());
    }

    #[test]
    fn zero_w_branches_match_the_stationary_problem() {
        for kind in [LowerBoundKind::Pred, LowerBoundKind::Corrupt] {
            for branch in [Branch::Theta2, Branch::Theta3] {
                let s = make_lowerbound(kind, 40, 0.0, branch).unwrap();
                let r = s.realize(1, 0).unwrap();
                assert!(r.types.iter().all(|t| *t == linear_type(1.0)));
                assert_eq!(r.w_theta.unwrap_or(0), 0);
            }
        }
    }

    #[test]
    fn empty_plan_changes_nothing() {
        let s = make_experiment(&ScenarioSpec {
            horizon: 50,
            ..ScenarioSpec::default()
        })
        .unwrap();
        let types = s.instance.realize(3, 0).unwrap();
        let plan = CorruptionPlan {
            periods: vec![],
            rule: ReplacementRule::Fixed {
                theta: linear_type(1.0),
            },
        };
        let out = corrupt_stream(&types, &plan, &s.instance, 3, 0).unwrap();
        assert_eq!(out.w_theta, 0);
        assert_eq!(out.types, types);
    }

    #[test]
    fn replacing_everything_counts_changed_periods() {
        let s = make_lowerbound(LowerBoundKind::Pred, 20, 4.0, Branch::Theta2).unwrap();
        let types = s.instance.realize(0, 0).unwrap();
        let plan = CorruptionPlan {
            periods: (1..=20).collect(),
            rule: ReplacementRule::Fixed {
                theta: linear_type(1.0),
            },
        };
        let out = corrupt_stream(&types, &plan, &s.instance, 0, 0).unwrap();
        // The first half already equals the replacement.
        assert_eq!(out.w_theta, 10);
        assert!(corrupt_stream(
            &types,
            &CorruptionPlan {
                periods: vec![21],
                ..plan
            },
            &s.instance,
            0,
            0
        )
        .is_err());
    }
}
