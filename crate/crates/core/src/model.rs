//! Problem data: types, distributions, first- and second-stage sets.
//!
//! A period's feasible set is `K(θ, c) = {x ≥ 0 within the box : B_θ x ≤ c, E(c) x ≤ h(c)}`
//! where the extra rows `(E, h)` come from the type's row generator.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `(1/T) Σ g ≤ β`
    Packing,
    /// `(1/T) Σ g ≥ β`
    Covering,
}

impl Direction {
    /// +1 for packing, −1 for covering: the sign with which `λ·g` enters the Lagrangian.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Packing => 1.0,
            Direction::Covering => -1.0,
        }
    }
}

/// A convex function of `(c, x)` given only through evaluations.
pub trait ConvexOracle: Send + Sync + fmt::Debug {
    fn value(&self, c: &[f64], x: &[f64]) -> f64;
    fn grad_x(&self, c: &[f64], x: &[f64]) -> Vec<f64>;
    fn grad_c(&self, c: &[f64], x: &[f64]) -> Vec<f64>;
}

/// Second-stage cost `f_θ(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFn {
    Linear {
        q: Vec<f64>,
    },
    #[serde(skip)]
    Oracle(Arc<dyn ConvexOracle>),
}

impl CostFn {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            CostFn::Linear { q } => dot(q, x),
            CostFn::Oracle(o) => o.value(&[], x),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostFn::Linear { .. })
    }
}

/// `g(c, x) = a·x + b·c + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub d: f64,
}

impl Affine {
    pub fn eval(&self, c: &[f64], x: &[f64]) -> f64 {
        dot(&self.a, x) + dot(&self.b, c) + self.d
    }
}

/// Long-term constraint function `g_{i,θ}(c, x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintFn {
    Affine(Affine),
    #[serde(skip)]
    Oracle(Arc<dyn ConvexOracle>),
}

impl ConstraintFn {
    pub fn eval(&self, c: &[f64], x: &[f64]) -> f64 {
        match self {
            ConstraintFn::Affine(a) => a.eval(c, x),
            ConstraintFn::Oracle(o) => o.value(c, x),
        }
    }

    pub fn grad_c(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            ConstraintFn::Affine(a) => (0..c.len())
                .map(|k| a.b.get(k).copied().unwrap_or(0.0))
                .collect(),
            ConstraintFn::Oracle(o) => o.grad_c(c, x),
        }
    }
}

/// Wraps an affine descriptor as an opaque oracle.
#[derive(Debug, Clone)]
pub struct AffineOracle(pub Affine);

impl ConvexOracle for AffineOracle {
    fn value(&self, c: &[f64], x: &[f64]) -> f64 {
        self.0.eval(c, x)
    }
    fn grad_x(&self, _c: &[f64], x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|j| self.0.a.get(j).copied().unwrap_or(0.0))
            .collect()
    }
    fn grad_c(&self, c: &[f64], _x: &[f64]) -> Vec<f64> {
        (0..c.len())
            .map(|k| self.0.b.get(k).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Rows `E x ≤ h(c)` together with the local sensitivity `∂h/∂c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowBlock {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// `sensitivity[r][k] = ∂h_r/∂c_k`
    pub sensitivity: Vec<Vec<f64>>,
}

/// Affine rows `E x ≤ h0 + H c` valid on a whole region of `c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineRows {
    pub rows: Vec<Vec<f64>>,
    pub h0: Vec<f64>,
    pub h_c: Vec<Vec<f64>>,
}

/// User-supplied generator of extra feasibility rows.
pub trait RowGenerator: Send + Sync + fmt::Debug {
    fn rows(&self, c: &[f64], dim_x: usize) -> RowBlock;
    /// The affine piece used when `c` is a decision variable of a larger LP.
    fn affine_piece(&self, dim_c: usize, dim_x: usize) -> AffineRows;
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtraRows {
    #[default]
    None,
    /// `x_i ≤ D_i` and `Σ x ≥ min(c_k, Σ D)`.
    DemandService {
        demand: Vec<f64>,
        #[serde(default)]
        c_index: usize,
    },
    #[serde(skip)]
    Custom(Arc<dyn RowGenerator>),
}

impl ExtraRows {
    pub fn rows(&self, c: &[f64], dim_x: usize) -> RowBlock {
        match self {
            ExtraRows::None => RowBlock::default(),
            ExtraRows::DemandService { demand, c_index } => {
                let dim_c = c.len();
                let mut block = RowBlock::default();
                for (i, &d) in demand.iter().enumerate() {
                    block.rows.push(unit(dim_x, i, 1.0));
                    block.rhs.push(d);
                    block.sensitivity.push(vec![0.0; dim_c]);
                }
                let total: f64 = demand.iter().sum();
                let ck = c[*c_index];
                let mut sens = vec![0.0; dim_c];
                let rhs = if ck <= total {
                    sens[*c_index] = -1.0;
                    -ck
                } else {
                    -total
                };
                block.rows.push(vec![-1.0; dim_x]);
                block.rhs.push(rhs);
                block.sensitivity.push(sens);
                block
            }
            ExtraRows::Custom(g) => g.rows(c, dim_x),
        }
    }

    pub fn affine_piece(&self, dim_c: usize, dim_x: usize) -> AffineRows {
        match self {
            ExtraRows::None => AffineRows::default(),
            ExtraRows::DemandService { demand, c_index } => {
                let mut out = AffineRows::default();
                for (i, &d) in demand.iter().enumerate() {
                    out.rows.push(unit(dim_x, i, 1.0));
                    out.h0.push(d);
                    out.h_c.push(vec![0.0; dim_c]);
                }
                out.rows.push(vec![-1.0; dim_x]);
                out.h0.push(0.0);
                out.h_c.push(unit(dim_c, *c_index, -1.0));
                out
            }
            ExtraRows::Custom(g) => g.affine_piece(dim_c, dim_x),
        }
    }
}

/// One realized type θ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeRealization {
    pub cost: CostFn,
    pub constraints: Vec<ConstraintFn>,
    /// Rows of `B_θ`; row `k` reads `B_k·x ≤ c_k`.
    #[serde(default)]
    pub coupling: Vec<Vec<f64>>,
    #[serde(default)]
    pub extra: ExtraRows,
}

impl TypeRealization {
    pub fn is_affine(&self) -> bool {
        self.cost.is_linear()
            && self
                .constraints
                .iter()
                .all(|g| matches!(g, ConstraintFn::Affine(_)))
    }

    pub fn g(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|g| g.eval(c, x)).collect()
    }

    /// Type with zero cost, zero consumption and no coupling.
    pub fn null(dim_x: usize, m: usize) -> Self {
        TypeRealization {
            cost: CostFn::Linear {
                q: vec![0.0; dim_x],
            },
            constraints: (0..m)
                .map(|_| {
                    ConstraintFn::Affine(Affine {
                        a: vec![0.0; dim_x],
                        b: vec![],
                        d: 0.0,
                    })
                })
                .collect(),
            coupling: vec![],
            extra: ExtraRows::None,
        }
    }
}

impl PartialEq for TypeRealization {
    fn eq(&self, other: &Self) -> bool {
        let cost = match (&self.cost, &other.cost) {
            (CostFn::Linear { q: a }, CostFn::Linear { q: b }) => a == b,
            (CostFn::Oracle(a), CostFn::Oracle(b)) => Arc::ptr_eq(a, b),
            _ => false,
        };
        let cons = self.constraints.len() == other.constraints.len()
            && self
                .constraints
                .iter()
                .zip(&other.constraints)
                .all(|p| match p {
                    (ConstraintFn::Affine(a), ConstraintFn::Affine(b)) => a == b,
                    (ConstraintFn::Oracle(a), ConstraintFn::Oracle(b)) => Arc::ptr_eq(a, b),
                    _ => false,
                });
        let extra = match (&self.extra, &other.extra) {
            (ExtraRows::None, ExtraRows::None) => true,
            (
                ExtraRows::DemandService {
                    demand: a,
                    c_index: i,
                },
                ExtraRows::DemandService {
                    demand: b,
                    c_index: j,
                },
            ) => a == b && i == j,
            (ExtraRows::Custom(a), ExtraRows::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        };
        cost && cons && extra && self.coupling == other.coupling
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub support: Vec<TypeRealization>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<TypeRealization>, weights: Vec<f64>) -> Result<Self> {
        let d = DiscreteDistribution { support, weights };
        d.check()?;
        Ok(d)
    }

    pub fn point(theta: TypeRealization) -> Self {
        DiscreteDistribution {
            support: vec![theta],
            weights: vec![1.0],
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        if self.support.len() != self.weights.len() {
            return Err(Error::Dimension(
                "support and weights differ in length".into(),
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &TypeRealization {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (theta, w) in self.support.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return theta;
            }
        }
        let last = self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
        &self.support[last]
    }
}

/// How a parametric draw becomes a [`TypeRealization`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeFamily {
    /// Resource allocation: `resources` demands, one long-term constraint per
    /// resource with `g_i = x_i`, coupling `Σx ≤ c`, rows `x ≤ D` and
    /// `Σx ≥ min(c, ΣD)`. Raw demands are divided by the instance scale.
    /// With `fill_rate` the constraint reads `g_i = x_i / D_i` instead, and
    /// `g_i = 1` when `D_i = 0`.
    DemandService {
        resources: usize,
        #[serde(default)]
        fill_rate: bool,
    },
}

impl TypeFamily {
    pub fn build(&self, raw_demand: &[f64], scale: f64) -> TypeRealization {
        match *self {
            TypeFamily::DemandService {
                resources,
                fill_rate,
            } => {
                let demand: Vec<f64> = raw_demand.iter().map(|d| d / scale).collect();
                // A period without demand counts as fully served.
                let service = |i: usize| match (fill_rate, demand[i] > 0.0) {
                    (false, _) => Affine {
                        a: unit(resources, i, 1.0),
                        b: vec![],
                        d: 0.0,
                    },
                    (true, true) => Affine {
                        a: unit(resources, i, 1.0 / demand[i]),
                        b: vec![],
                        d: 0.0,
                    },
                    (true, false) => Affine {
                        a: vec![0.0; resources],
                        b: vec![],
                        d: 1.0,
                    },
                };
                TypeRealization {
                    cost: CostFn::Linear {
                        q: vec![0.0; resources],
                    },
                    constraints: (0..resources)
                        .map(|i| ConstraintFn::Affine(service(i)))
                        .collect(),
                    coupling: vec![vec![1.0; resources]],
                    extra: ExtraRows::DemandService { demand, c_index: 0 },
                }
            }
        }
    }

    pub fn draws(&self) -> usize {
        match *self {
            TypeFamily::DemandService { resources, .. } => resources,
        }
    }
}

/// Per-period distribution `P_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Independent `max(0, N(mean, std))` raw draws fed to the instance's type family.
    TruncNormal {
        mean: f64,
        std: f64,
    },
    Discrete(DiscreteDistribution),
    /// `segments[j]` governs periods `breaks[j-1] ..= breaks[j]-1` (1-based), so a
    /// break period belongs to the later segment.
    Piecewise {
        breaks: Vec<usize>,
        segments: Vec<Distribution>,
    },
}

/// A maximal run of periods governed by one leaf distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<'a> {
    /// First period, 1-based.
    pub start: usize,
    /// Last period, inclusive.
    pub end: usize,
    pub dist: &'a Distribution,
}

impl Segment<'_> {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

impl Distribution {
    pub fn point(theta: TypeRealization) -> Self {
        Distribution::Discrete(DiscreteDistribution::point(theta))
    }

    /// Leaf distribution governing period `t` (1-based).
    pub fn at(&self, t: usize) -> &Distribution {
        match self {
            Distribution::Piecewise { breaks, segments } => {
                let j = breaks.iter().take_while(|&&b| t >= b).count();
                segments[j.min(segments.len() - 1)].at(t)
            }
            leaf => leaf,
        }
    }

    /// Splits `1..=horizon` into maximal runs governed by the same leaf.
    pub fn segments(&self, horizon: usize) -> Vec<Segment<'_>> {
        let mut out: Vec<Segment<'_>> = Vec::new();
        let mut bounds = vec![1usize];
        self.collect_breaks(&mut bounds);
        bounds.retain(|&b| b >= 1 && b <= horizon);
        bounds.sort_unstable();
        bounds.dedup();
        for (k, &s) in bounds.iter().enumerate() {
            let e = bounds.get(k + 1).map(|b| b - 1).unwrap_or(horizon);
            let dist = self.at(s);
            match out.last_mut() {
                Some(last) if std::ptr::eq(last.dist, dist) => last.end = e,
                _ => out.push(Segment {
                    start: s,
                    end: e,
                    dist,
                }),
            }
        }
        out
    }

    fn collect_breaks(&self, acc: &mut Vec<usize>) {
        if let Distribution::Piecewise { breaks, segments } = self {
            acc.extend(breaks.iter().copied());
            for s in segments {
                s.collect_breaks(acc);
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Distribution::TruncNormal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std >= 0.0) {
                    return Err(Error::InvalidArgument(
                        "truncated normal needs finite mean and std ≥ 0".into(),
                    ));
                }
                Ok(())
            }
            Distribution::Discrete(d) => d.check(),
            Distribution::Piecewise { breaks, segments } => {
                if segments.len() != breaks.len() + 1 {
                    return Err(Error::Dimension(
                        "piecewise needs one more segment than breaks".into(),
                    ));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.first().is_some_and(|&b| b < 2)
                {
                    return Err(Error::InvalidArgument(
                        "breaks must be increasing and ≥ 2".into(),
                    ));
                }
                segments.iter().try_for_each(|s| s.check())
            }
        }
    }

    /// Draws one type from the leaf distribution governing `t`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        t: usize,
        family: Option<&TypeFamily>,
        scale: f64,
        rng: &mut R,
    ) -> Result<TypeRealization> {
        match self.at(t) {
            Distribution::Discrete(d) => Ok(d.sample(rng).clone()),
            Distribution::TruncNormal { mean, std } => {
                let family = family.ok_or_else(|| {
                    Error::InvalidArgument("parametric distribution without a type family".into())
                })?;
                let raw = sample_trunc_normal(*mean, *std, family.draws(), rng);
                Ok(family.build(&raw, scale))
            }
            Distribution::Piecewise { .. } => unreachable!("at() returns a leaf"),
        }
    }
}

/// `n` independent draws of `max(0, N(mean, std))`.
pub fn sample_trunc_normal<R: Rng + ?Sized>(
    mean: f64,
    std: f64,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    if std == 0.0 {
        return vec![mean.max(0.0); n];
    }
    let normal = Normal::new(mean, std).expect("validated std");
    (0..n).map(|_| normal.sample(rng).max(0.0)).collect()
}

/// The first-stage feasible set `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FirstStageSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Finite { points: Vec<Vec<f64>> },
}

impl FirstStageSet {
    pub fn dim(&self) -> usize {
        match self {
            FirstStageSet::Box { lo, .. } => lo.len(),
            FirstStageSet::Finite { points } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn project(&self, c: &mut [f64]) {
        if let FirstStageSet::Box { lo, hi } = self {
            for ((v, l), h) in c.iter_mut().zip(lo).zip(hi) {
                *v = v.clamp(*l, *h);
            }
        }
    }

    pub fn contains(&self, c: &[f64], tol: f64) -> bool {
        match self {
            FirstStageSet::Box { lo, hi } => c
                .iter()
                .zip(lo)
                .zip(hi)
                .all(|((v, l), h)| *v >= l - tol && *v <= h + tol),
            FirstStageSet::Finite { points } => points
                .iter()
                .any(|p| p.iter().zip(c).all(|(a, b)| (a - b).abs() <= tol)),
        }
    }

    /// Largest distance between two points of the set.
    pub fn diameter(&self) -> f64 {
        match self {
            FirstStageSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l).powi(2))
                .sum::<f64>()
                .sqrt(),
            FirstStageSet::Finite { points } => {
                let mut d: f64 = 0.0;
                for a in points {
                    for b in points {
                        d = d.max(
                            a.iter()
                                .zip(b)
                                .map(|(u, v)| (u - v).powi(2))
                                .sum::<f64>()
                                .sqrt(),
                        );
                    }
                }
                d
            }
        }
    }

    pub fn null_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// `p(c) = l·c + ½ Σ q_k c_k²` with `q ≥ 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FirstStageCost {
    pub linear: Vec<f64>,
    #[serde(default)]
    pub quadratic: Vec<f64>,
}

impl FirstStageCost {
    pub fn linear(l: Vec<f64>) -> Self {
        FirstStageCost {
            linear: l,
            quadratic: vec![],
        }
    }

    pub fn value(&self, c: &[f64]) -> f64 {
        let lin = dot(&self.linear, c);
        let quad: f64 = self
            .quadratic
            .iter()
            .zip(c)
            .map(|(q, v)| 0.5 * q * v * v)
            .sum();
        lin + quad
    }

    pub fn grad(&self, c: &[f64]) -> Vec<f64> {
        (0..c.len())
            .map(|k| {
                self.linear.get(k).copied().unwrap_or(0.0)
                    + self.quadratic.get(k).copied().unwrap_or(0.0) * c[k]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn dim(&self) -> usize {
        self.hi.len()
    }

    /// Effective lower bounds after intersecting with `x ≥ 0`.
    pub fn lower(&self) -> Vec<f64> {
        self.lo.iter().map(|l| l.max(0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub horizon: usize,
    pub beta: Vec<f64>,
    pub direction: Direction,
    pub first_stage_set: FirstStageSet,
    pub first_stage_cost: FirstStageCost,
    pub second_stage_box: BoxSet,
    #[serde(default = "one")]
    pub normalization_scale: f64,
    pub distribution: Distribution,
    #[serde(default)]
    pub prediction: Option<Distribution>,
    #[serde(default)]
    pub family: Option<TypeFamily>,
}

fn one() -> f64 {
    1.0
}

impl ProblemInstance {
    pub fn m(&self) -> usize {
        self.beta.len()
    }

    pub fn dim_c(&self) -> usize {
        self.first_stage_set.dim()
    }

    pub fn dim_x(&self) -> usize {
        self.second_stage_box.dim()
    }

    pub fn beta_min(&self) -> f64 {
        self.beta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Draws θ_t; identical `(seed, replication, t)` always gives the same type.
    pub fn sample_type(&self, t: usize, seed: u64, replication: u64) -> Result<TypeRealization> {
        if t == 0 || t > self.horizon {
            return Err(Error::PeriodOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let mut rng = stream(seed, replication, t as u64, Purpose::TypeDraw);
        self.distribution
            .sample(t, self.family.as_ref(), self.normalization_scale, &mut rng)
    }

    /// Draws θ_t from an explicit generator.
    pub fn sample_type_with<R: Rng + ?Sized>(
        &self,
        t: usize,
        rng: &mut R,
    ) -> Result<TypeRealization> {
        if t == 0 || t > self.horizon {
            return Err(Error::PeriodOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        self.distribution
            .sample(t, self.family.as_ref(), self.normalization_scale, rng)
    }

    /// The realized stream θ_1..θ_T for one replication.
    pub fn realize(&self, seed: u64, replication: u64) -> Result<Vec<TypeRealization>> {
        (1..=self.horizon)
            .map(|t| self.sample_type(t, seed, replication))
            .collect()
    }

    /// Draws from the prediction `P̂_t`.
    pub fn sample_prediction<R: Rng + ?Sized>(
        &self,
        t: usize,
        rng: &mut R,
    ) -> Result<TypeRealization> {
        let p = self
            .prediction
            .as_ref()
            .ok_or(Error::MissingPrediction(t))?;
        p.sample(t, self.family.as_ref(), self.normalization_scale, rng)
    }
}

/// One failed clause of the standing assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub detail: String,
}

/// Checks ranges, the null action and boundedness on 1000 probe types.
pub fn validate_instance(inst: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |clause: &'static str, detail: String| out.push(Violation { clause, detail });

    for (i, b) in inst.beta.iter().enumerate() {
        if !(*b > 0.0 && *b < 1.0) {
            push("target outside (0,1)", format!("beta[{i}] = {b}"));
        }
    }
    if inst.horizon == 0 {
        push("horizon must be positive", "T = 0".into());
    }
    if !(inst.normalization_scale.is_finite() && inst.normalization_scale > 0.0) {
        push(
            "normalization scale must be positive",
            format!("S = {}", inst.normalization_scale),
        );
    }
    let dim_c = inst.dim_c();
    let zero_c = vec![0.0; dim_c];
    if !inst.first_stage_set.contains(&zero_c, 1e-12) {
        push("null first-stage action outside C", "0 ∉ C".into());
    }
    if let FirstStageSet::Box { lo, hi } = &inst.first_stage_set {
        if lo.len() != hi.len()
            || lo
                .iter()
                .zip(hi)
                .any(|(l, h)| !(l.is_finite() && h.is_finite()) || l > h)
        {
            push(
                "first-stage box malformed",
                "bounds must be finite with lo ≤ hi".into(),
            );
        }
    }
    if inst.first_stage_cost.value(&zero_c).abs() > 1e-12 {
        push(
            "first-stage cost not zero at null action",
            "p(0) ≠ 0".into(),
        );
    }
    if inst.first_stage_cost.quadratic.iter().any(|q| *q < 0.0) {
        push(
            "first-stage cost not convex",
            "negative quadratic coefficient".into(),
        );
    }
    let bx = &inst.second_stage_box;
    if bx.lo.len() != bx.hi.len() || bx.hi.iter().any(|h| !h.is_finite()) {
        push(
            "second-stage box not compact",
            "finite bounds required".into(),
        );
    }
    if bx.lo.iter().zip(&bx.hi).any(|(l, h)| *l > 0.0 || *h < 0.0) {
        push("null second-stage action outside K", "0 ∉ box".into());
    }
    if let Err(e) = inst.distribution.check() {
        push("distribution malformed", e.to_string());
        return out;
    }
    if let Some(p) = &inst.prediction {
        if let Err(e) = p.check() {
            push("prediction malformed", e.to_string());
        }
    }

    let m = inst.m();
    let dim_x = inst.dim_x();
    let corners_x = corners(&bx.lower(), &bx.hi);
    let corners_c: Vec<Vec<f64>> = match &inst.first_stage_set {
        FirstStageSet::Box { lo, hi } => corners(lo, hi),
        FirstStageSet::Finite { points } => points.clone(),
    };
    let zero_x = vec![0.0; dim_x];
    let mut rng = stream(0, 0, 0, Purpose::Probe);
    let mut seen = [false; 5];
    for _ in 0..1000 {
        let t = rng.random_range(1..=inst.horizon.max(1));
        let theta = match inst.distribution.sample(
            t,
            inst.family.as_ref(),
            inst.normalization_scale,
            &mut rng,
        ) {
            Ok(th) => th,
            Err(e) => {
                push("distribution cannot be sampled", e.to_string());
                return out;
            }
        };
        if theta.constraints.len() != m && !seen[0] {
            seen[0] = true;
            push(
                "constraint count mismatch",
                format!(
                    "type has {} constraints, β has {m}",
                    theta.constraints.len()
                ),
            );
            continue;
        }
        if theta.cost.value(&zero_x).abs() > 1e-12 && !seen[1] {
            seen[1] = true;
            push(
                "null action not cost-free",
                format!("f(0) = {}", theta.cost.value(&zero_x)),
            );
        }
        if theta.g(&zero_c, &zero_x).iter().any(|v| v.abs() > 1e-12) && !seen[2] {
            seen[2] = true;
            push("null action consumes budget", "g(0, 0) ≠ 0".into());
        }
        for x in &corners_x {
            if theta.cost.value(x).abs() > 1.0 + 1e-9 && !seen[3] {
                seen[3] = true;
                push(
                    "second-stage cost outside [-1, 1]",
                    format!("|f| = {} at a box corner", theta.cost.value(x).abs()),
                );
            }
            for c in &corners_c {
                if theta.g(c, x).iter().any(|v| *v < -1e-9 || *v > 1.0 + 1e-9) && !seen[4] {
                    seen[4] = true;
                    push(
                        "constraint value outside [0, 1]",
                        "g leaves [0, 1] at a corner of C × K".into(),
                    );
                }
            }
        }
    }
    out
}

/// All corners of a box; boxes above 12 dimensions are probed on the two
/// diagonal corners and the coordinate corners only.
fn corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let n = lo.len();
    if n > 12 {
        let mut out = vec![lo.to_vec(), hi.to_vec()];
        for j in 0..n {
            let mut v = lo.to_vec();
            v[j] = hi[j];
            out.push(v);
        }
        return out;
    }
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|j| if mask >> j & 1 == 1 { hi[j] } else { lo[j] })
                .collect()
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub(crate) fn unit(n: usize, i: usize, v: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = v;
    e
}
