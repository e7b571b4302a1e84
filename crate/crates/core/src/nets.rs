//! Riemann-sum nets over tagged partitions.
//!
//! Tagged partitions of `[a, b]` ordered by refinement form a directed set,
//! and `(P, T) ↦ Σ f(tᵢ)(xᵢ − xᵢ₋₁)` is a net on it. That directed set cannot
//! be materialized, so limits are taken along a cofinal chain: repeated
//! uniform bisection. Every partition is refined by a fine enough uniform
//! one, so the chain reaches arbitrarily far into the directed set.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::Extended;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("partition needs at least two points")]
    TooFewPoints,
    #[error("partition points must be finite and strictly increasing (index {index})")]
    NotIncreasing { index: usize },
    #[error("expected {expected} tags, got {got}")]
    TagCount { expected: usize, got: usize },
    #[error("tag {index} = {tag} lies outside its cell [{lo}, {hi}]")]
    TagOutsideCell {
        index: usize,
        tag: f64,
        lo: f64,
        hi: f64,
    },
    #[error("Riemann sums need a one-variable integrand, got arity {0}")]
    IntegrandArity(usize),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence within {} steps", report.steps.len())]
    NotConverged { report: ConvergenceReport },
    #[error("chain is not nondecreasing at index {index}")]
    NotMonotone { index: usize },
    #[error("empty chain")]
    EmptyChain,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Where each cell's tag sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagRule {
    Left,
    #[default]
    Midpoint,
    Right,
}

impl TagRule {
    fn place(self, lo: f64, hi: f64) -> f64 {
        match self {
            TagRule::Left => lo,
            TagRule::Midpoint => 0.5 * (lo + hi),
            TagRule::Right => hi,
        }
    }
}

/// Points `x₀ < … < x_k` of `[a, b]` with one tag `tᵢ ∈ [xᵢ₋₁, xᵢ]` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPartition {
    points: Vec<f64>,
    tags: Vec<f64>,
}

impl TaggedPartition {
    pub fn new(points: Vec<f64>, tags: Vec<f64>) -> Result<Self, NetError> {
        if points.len() < 2 {
            return Err(NetError::TooFewPoints);
        }
        for (index, w) in points.windows(2).enumerate() {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(NetError::NotIncreasing { index: index + 1 });
            }
        }
        if tags.len() != points.len() - 1 {
            return Err(NetError::TagCount {
                expected: points.len() - 1,
                got: tags.len(),
            });
        }
        for (index, (&tag, w)) in tags.iter().zip(points.windows(2)).enumerate() {
            if !(w[0] <= tag && tag <= w[1]) {
                return Err(NetError::TagOutsideCell {
                    index,
                    tag,
                    lo: w[0],
                    hi: w[1],
                });
            }
        }
        Ok(TaggedPartition { points, tags })
    }

    /// `cells` equal cells of `[a, b]`, tagged by `rule`.
    pub fn uniform(a: f64, b: f64, cells: usize, rule: TagRule) -> Result<Self, NetError> {
        let cells = cells.max(1);
        let h = (b - a) / cells as f64;
        let points: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { b } else { a + h * i as f64 })
            .collect();
        let tags = Self::tags_for(&points, rule);
        TaggedPartition::new(points, tags)
    }

    fn tags_for(points: &[f64], rule: TagRule) -> Vec<f64> {
        points.windows(2).map(|w| rule.place(w[0], w[1])).collect()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn tags(&self) -> &[f64] {
        &self.tags
    }

    pub fn cells(&self) -> usize {
        self.tags.len()
    }

    /// Largest cell width.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Bisects every cell and tags the new cells at their midpoints.
    pub fn refine(&self) -> TaggedPartition {
        self.refine_with(TagRule::Midpoint)
    }

    pub fn refine_with(&self, rule: TagRule) -> TaggedPartition {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            points.push(w[0]);
            points.push(0.5 * (w[0] + w[1]));
        }
        points.push(*self.points.last().expect("at least two points"));
        let tags = Self::tags_for(&points, rule);
        TaggedPartition { points, tags }
    }

    /// `true` when every point of `self` is also a point of `finer`.
    pub fn is_refined_by(&self, finer: &TaggedPartition) -> bool {
        let mut j = 0;
        self.points.iter().all(|p| {
            while j < finer.points.len() && finer.points[j] < *p {
                j += 1;
            }
            j < finer.points.len() && finer.points[j] == *p
        })
    }
}

/// `Σ f(tᵢ)(xᵢ − xᵢ₋₁)`, accumulated left to right.
pub fn riemann_sum(f: &Expression, p: &TaggedPartition) -> Result<f64, NetError> {
    if f.arity() != 1 {
        return Err(NetError::IntegrandArity(f.arity()));
    }
    let mut sum = 0.0;
    for (t, w) in p.tags.iter().zip(p.points.windows(2)) {
        sum += f.eval(&[*t])? * (w[1] - w[0]);
    }
    Ok(sum)
}

/// A cofinal chain in the refinement order: start from `initial`, then
/// bisect repeatedly, tagging by `rule`.
#[derive(Debug, Clone)]
pub struct RefinementNet {
    pub initial: TaggedPartition,
    pub rule: TagRule,
}

impl RefinementNet {
    /// One midpoint-tagged cell spanning `[a, b]`.
    pub fn over(a: f64, b: f64) -> Result<Self, NetError> {
        Ok(RefinementNet {
            initial: TaggedPartition::uniform(a, b, 1, TagRule::Midpoint)?,
            rule: TagRule::Midpoint,
        })
    }

    /// The chain itself, lazily.
    pub fn chain(&self) -> impl Iterator<Item = TaggedPartition> + '_ {
        std::iter::successors(Some(self.initial.clone()), move |p| {
            Some(p.refine_with(self.rule))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetStep {
    pub step: usize,
    pub cells: usize,
    pub width: f64,
    pub sum: f64,
    /// `|Sₖ − Sₖ₋₁|`; absent on the first step.
    pub delta: Option<f64>,
}

/// Every Riemann sum computed along the chain.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceReport {
    pub steps: Vec<NetStep>,
}

/// Walks the chain until two successive sums differ by less than `abs_tol`.
///
/// `max_steps` bounds the number of sums computed. Exhausting it returns
/// [`NetError::NotConverged`] carrying the report so far.
pub fn net_limit(
    net: &RefinementNet,
    f: &Expression,
    abs_tol: f64,
    max_steps: usize,
) -> Result<(f64, ConvergenceReport), NetError> {
    if !(abs_tol > 0.0) {
        return Err(NetError::InvalidTolerance(abs_tol));
    }
    let mut report = ConvergenceReport::default();
    let mut previous: Option<f64> = None;
    for (step, p) in net.chain().take(max_steps).enumerate() {
        let sum = riemann_sum(f, &p)?;
        let delta = previous.map(|s| (sum - s).abs());
        report.steps.push(NetStep {
            step,
            cells: p.cells(),
            width: p.mesh(),
            sum,
            delta,
        });
        if delta.is_some_and(|d| d < abs_tol) {
            return Ok((sum, report));
        }
        previous = Some(sum);
    }
    Err(NetError::NotConverged { report })
}

/// What the caller knows about the chain's bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainBound {
    /// Nothing declared: the materialized chain is taken at face value.
    Unknown,
    /// The net is declared bounded by this value; exceeding it signals
    /// divergence.
    AtMost(f64),
    /// The net is declared unbounded.
    Unbounded,
}

/// Limit of a nondecreasing chain: its supremum, or `+∞` for unbounded nets.
///
/// ```
/// use hausdorff::nets::{monotone_net_limit, ChainBound};
/// use hausdorff::Extended;
///
/// let chain: Vec<f64> = (1..=20).map(|k| k as f64).collect();
/// assert_eq!(monotone_net_limit(&chain, ChainBound::AtMost(10.0)).unwrap(), Extended::PosInfinity);
/// assert_eq!(monotone_net_limit(&chain, ChainBound::Unknown).unwrap(), Extended::Finite(20.0));
/// ```
pub fn monotone_net_limit(values: &[f64], bound: ChainBound) -> Result<Extended, NetError> {
    let last = *values.last().ok_or(NetError::EmptyChain)?;
    if let Some(index) = values.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(NetError::NotMonotone { index: index + 1 });
    }
    Ok(match bound {
        ChainBound::Unbounded => Extended::PosInfinity,
        ChainBound::AtMost(b) if last > b => Extended::PosInfinity,
        _ => Extended::Finite(last),
    })
}
