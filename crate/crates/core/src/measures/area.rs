use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::Expression;
use crate::geometry::{volume_element, Chart, GeometryError};
use crate::quadrature::{integrate_box, AdaptiveOptions, BoxIntegral, QuadratureError};

/// Parameter samples drawn per chart by the overlap spot-check; every pair
/// of charts compares `OVERLAP_SAMPLES_PER_CHART²` image points.
pub const OVERLAP_SAMPLES_PER_CHART: usize = 100;
/// Image points closer than this are reported as a possible overlap.
pub const OVERLAP_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AreaError {
    #[error("chart {chart} maps into R^{got}, manifold is declared in R^{expected}")]
    AmbientMismatch {
        chart: usize,
        expected: usize,
        got: usize,
    },
    #[error("chart {chart} has dimension {got}, other charts have {expected}")]
    MixedDimensions {
        chart: usize,
        expected: usize,
        got: usize,
    },
    #[error("field has arity {got}, ambient dimension is {expected}")]
    FieldArity { expected: usize, got: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("chart {chart}: {source}")]
    Chart {
        chart: usize,
        #[source]
        source: GeometryError,
    },
    #[error("chart {chart}: quadrature did not converge ({cells} cells, depth {depth})")]
    NotConverged {
        chart: usize,
        depth: u32,
        cells: usize,
    },
}

/// A finite union of charts with essentially disjoint images, all of the
/// same dimension `m` in the same ambient `Rⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointManifold {
    ambient_dim: usize,
    charts: Vec<Chart>,
}

/// Two charts whose sampled images came within [`OVERLAP_DISTANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapWarning {
    pub chart_a: usize,
    pub chart_b: usize,
    pub param_a: Vec<f64>,
    pub param_b: Vec<f64>,
    pub distance: f64,
}

impl DisjointManifold {
    pub fn new(ambient_dim: usize, charts: Vec<Chart>) -> Result<Self, AreaError> {
        for (chart, c) in charts.iter().enumerate() {
            if c.ambient_dim() != ambient_dim {
                return Err(AreaError::AmbientMismatch {
                    chart,
                    expected: ambient_dim,
                    got: c.ambient_dim(),
                });
            }
            if c.param_dim() != charts[0].param_dim() {
                return Err(AreaError::MixedDimensions {
                    chart,
                    expected: charts[0].param_dim(),
                    got: c.param_dim(),
                });
            }
        }
        Ok(DisjointManifold {
            ambient_dim,
            charts,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Local dimension `m`, or `None` for the empty union.
    pub fn dim(&self) -> Option<usize> {
        self.charts.first().map(Chart::param_dim)
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    /// Spot-checks that chart images are essentially disjoint.
    ///
    /// The same [`OVERLAP_SAMPLES_PER_CHART`] points of the unit cube,
    /// drawn from `seed`, are mapped into every chart's box, and every pair
    /// of charts compares all pairs of images. Shared boundaries are
    /// legitimate, so this only warns.
    pub fn overlap_warnings(&self, seed: u64) -> Vec<OverlapWarning> {
        let Some(m) = self.dim() else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit: Vec<Vec<f64>> = (0..OVERLAP_SAMPLES_PER_CHART)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect();
        let images: Vec<Vec<(Vec<f64>, Vec<f64>)>> = self
            .charts
            .iter()
            .map(|c| {
                unit.iter()
                    .filter_map(|t| {
                        let u = c.domain().from_unit(t);
                        c.map(&u).ok().map(|x| (u, x))
                    })
                    .collect()
            })
            .collect();
        let mut warnings = Vec::new();
        for a in 0..images.len() {
            for b in a + 1..images.len() {
                let closest = images[a]
                    .iter()
                    .flat_map(|pa| images[b].iter().map(move |pb| (pa, pb)))
                    .map(|(pa, pb)| (distance(&pa.1, &pb.1), pa, pb))
                    .min_by(|x, y| x.0.total_cmp(&y.0));
                if let Some((d, pa, pb)) = closest {
                    if d < OVERLAP_DISTANCE {
                        warnings.push(OverlapWarning {
                            chart_a: a,
                            chart_b: b,
                            param_a: pa.0.clone(),
                            param_b: pb.0.clone(),
                            distance: d,
                        });
                    }
                }
            }
        }
        warnings
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The integral and its per-chart breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaIntegral {
    pub value: f64,
    pub charts: Vec<BoxIntegral>,
}

/// `∫ f dH_{m≤n}` over `manifold`: the sum over charts of
/// `∫_U f(φ(u)) √det(JᵀJ) du`.
///
/// Each chart is integrated to `abs_tol / #charts`.
pub fn hausdorff_integrate(
    f: &Expression,
    manifold: &DisjointManifold,
    abs_tol: f64,
) -> Result<f64, AreaError> {
    hausdorff_integrate_detailed(f, manifold, abs_tol, AdaptiveOptions::default()).map(|r| r.value)
}

pub fn hausdorff_integrate_detailed(
    f: &Expression,
    manifold: &DisjointManifold,
    abs_tol: f64,
    opts: AdaptiveOptions,
) -> Result<AreaIntegral, AreaError> {
    if !(abs_tol > 0.0) {
        return Err(AreaError::InvalidTolerance(abs_tol));
    }
    if f.arity() != manifold.ambient_dim {
        return Err(AreaError::FieldArity {
            expected: manifold.ambient_dim,
            got: f.arity(),
        });
    }
    let per_chart = abs_tol / manifold.charts.len().max(1) as f64;
    let parts = manifold
        .charts
        .par_iter()
        .enumerate()
        .map(|(index, chart)| integrate_chart(f, chart, per_chart, opts, index))
        .collect::<Result<Vec<_>, _>>()?;
    // sequential, in chart order, so the result does not depend on scheduling
    let value = parts.iter().fold(0.0, |acc, p| acc + p.value);
    Ok(AreaIntegral {
        value,
        charts: parts,
    })
}

fn integrate_chart(
    f: &Expression,
    chart: &Chart,
    tol: f64,
    opts: AdaptiveOptions,
    index: usize,
) -> Result<BoxIntegral, AreaError> {
    let integrand = |u: &[f64]| -> Result<f64, GeometryError> {
        let (x, j) = chart.evaluate(u)?;
        let density = volume_element(&j, u)?;
        Ok(f.eval(&x)? * density)
    };
    integrate_box(integrand, chart.domain().bounds(), tol, opts).map_err(|e| match e {
        QuadratureError::Integrand(source) => AreaError::Chart {
            chart: index,
            source,
        },
        QuadratureError::NotConverged { depth, cells } => AreaError::NotConverged {
            chart: index,
            depth,
            cells,
        },
    })
}
