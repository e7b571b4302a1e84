//! Numerical check of the coarea formula on a grid.
//!
//! For a smooth `H: Rⁿ → R` (`n = 2, 3`) and a field `f`, the region side
//!
//! ```text
//! ∫_{a ≤ H ≤ b} f dx
//! ```
//!
//! is compared with the sliced side
//!
//! ```text
//! ∫_a^b ∫_{H⁻¹(t)} f / |∇H| dH_{n−1} dt.
//! ```
//!
//! The region side is a midpoint sum over grid cells. Each slice `H⁻¹(t)` is
//! extracted by marching simplices and integrated element by element; the
//! outer integral over `t` is composite Gauss–Legendre. Slices that touch a
//! critical point of `H` are excluded and their `t`-weight is reported.
//!
//! ```
//! use hausdorff::coarea::{coarea_check, GridSpec, ImplicitField};
//! use hausdorff::expr::Expression;
//!
//! let h = ImplicitField::parse("sqrt(x1^2 + x2^2)", 2).unwrap();
//! let f = Expression::parse("1", 2, "x").unwrap();
//! let grid = GridSpec::cube(2, -3.0, 3.0, 128).unwrap();
//! let report = coarea_check(&f, &h, 1.0, 2.0, &grid, 16).unwrap();
//! // the annulus 1 ≤ r ≤ 2 has area 3π
//! let area = 3.0 * std::f64::consts::PI;
//! assert!((report.rhs - area).abs() < 1e-2 * area);
//! assert!((report.lhs - area).abs() < 1e-2 * area);
//! ```

mod mesh;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::quadrature::GaussLegendre;

pub use mesh::{Element, SampledGrid, SliceMesh, GRAD_TOL, SLICE_TOL_PER_DIAGONAL};

/// Share of `b − a` that critical slices may occupy before the check gives up.
pub const SARD_BUDGET: f64 = 0.05;
/// Gauss–Legendre points per panel of the outer `t` integral.
pub const POINTS_PER_PANEL: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoareaError {
    #[error("only 2 and 3 dimensions are supported, got {0}")]
    Dimension(usize),
    #[error("field has dimension {field}, grid has {grid}")]
    GridDimension { field: usize, grid: usize },
    #[error("integrand has arity {got}, expected {expected}")]
    IntegrandArity { expected: usize, got: usize },
    #[error("axis {axis}: need lo < hi, got [{lo}, {hi}]")]
    DegenerateAxis { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: resolution must be at least 2, got {res}")]
    Resolution { axis: usize, res: usize },
    #[error("grid bounds and resolution disagree in length")]
    GridShape,
    #[error("need a < b, got [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("need at least 4 slices, got {0}")]
    TooFewSlices(usize),
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("level t = {t} is critical: |∇H| = {grad_norm:e} at {point:?}")]
    CriticalSlice {
        t: f64,
        point: Vec<f64>,
        grad_norm: f64,
    },
    #[error("level t = {t}: sample residual {residual:e} exceeds {tol:e}")]
    Residual { t: f64, residual: f64, tol: f64 },
    #[error("critical slices cover t-measure {excluded}, more than the allowed {allowed}")]
    SardBudget {
        excluded: f64,
        allowed: f64,
        report: Box<CoareaReport>,
    },
}

/// The level-set function `H`, with coordinates `x1, …, xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitField {
    h: Expression,
}

impl ImplicitField {
    pub fn new(h: Expression) -> Result<Self, CoareaError> {
        match h.arity() {
            2 | 3 => Ok(ImplicitField { h }),
            n => Err(CoareaError::Dimension(n)),
        }
    }

    pub fn parse(source: &str, dim: usize) -> Result<Self, CoareaError> {
        ImplicitField::new(Expression::parse(source, dim, "x")?)
    }

    pub fn h(&self) -> &Expression {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.arity()
    }
}

/// An axis-aligned box cut into `res[k]` cells along axis `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>) -> Result<Self, CoareaError> {
        if lo.len() != hi.len() || lo.len() != res.len() {
            return Err(CoareaError::GridShape);
        }
        if !(2..=3).contains(&lo.len()) {
            return Err(CoareaError::Dimension(lo.len()));
        }
        for axis in 0..lo.len() {
            if !(lo[axis] < hi[axis]) || !lo[axis].is_finite() || !hi[axis].is_finite() {
                return Err(CoareaError::DegenerateAxis {
                    axis,
                    lo: lo[axis],
                    hi: hi[axis],
                });
            }
            if res[axis] < 2 {
                return Err(CoareaError::Resolution {
                    axis,
                    res: res[axis],
                });
            }
        }
        Ok(GridSpec { lo, hi, res })
    }

    /// The cube `[lo, hi]ⁿ` with `res` cells per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, res: usize) -> Result<Self, CoareaError> {
        GridSpec::new(vec![lo; dim], vec![hi; dim], vec![res; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.res[axis] as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.spacing(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Grid vertex with integer coordinates `idx`. The last vertex on each
    /// axis is exactly `hi`.
    pub fn vertex(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| {
                if i == self.res[k] {
                    self.hi[k]
                } else {
                    self.lo[k] + i as f64 * self.spacing(k)
                }
            })
            .collect()
    }

    fn cell_center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.lo[k] + (i as f64 + 0.5) * self.spacing(k))
            .collect()
    }
}

/// Piecewise-linear approximation of `H⁻¹(t)` inside the grid box.
///
/// Fails with [`CoareaError::CriticalSlice`] if `|∇H|` drops below
/// [`GRAD_TOL`] at a sample point. A level that misses the box yields an
/// empty mesh.
pub fn extract_level_set(
    h: &ImplicitField,
    t: f64,
    grid: &GridSpec,
) -> Result<SliceMesh, CoareaError> {
    let sampled = SampledGrid::new(h, grid)?;
    mesh::extract(h, &sampled, t)
}

/// `Σ f(p) / |∇H(p)| · |e|` over the elements `e` of a slice mesh.
pub fn slice_integral(
    f: &Expression,
    h: &ImplicitField,
    mesh: &SliceMesh,
) -> Result<f64, CoareaError> {
    check_integrand(f, h)?;
    mesh.elements.iter().try_fold(0.0, |acc, e| {
        let d = h.h().eval_dual(&e.sample)?;
        Ok(acc + f.eval(&e.sample)? / d.gradient_norm() * e.measure)
    })
}

/// Midpoint sum of `f` over the grid cells whose centre satisfies
/// `a ≤ H ≤ b`.
pub fn region_integral(
    f: &Expression,
    h: &ImplicitField,
    a: f64,
    b: f64,
    grid: &GridSpec,
) -> Result<f64, CoareaError> {
    check_integrand(f, h)?;
    check_grid(h, grid)?;
    if !(a < b) {
        return Err(CoareaError::InvalidInterval { a, b });
    }
    let res = grid.res();
    let rows: usize = res[1..].iter().product();
    let row_sums = (0..rows)
        .into_par_iter()
        .map(|row| {
            let mut idx = vec![0usize; grid.dim()];
            let mut rest = row;
            for k in 1..grid.dim() {
                idx[k] = rest % res[k];
                rest /= res[k];
            }
            let mut sum = 0.0;
            for i in 0..res[0] {
                idx[0] = i;
                let c = grid.cell_center(&idx);
                let v = h.h().eval(&c)?;
                if a <= v && v <= b {
                    sum += f.eval(&c)?;
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>, CoareaError>>()?;
    Ok(row_sums.iter().fold(0.0, |acc, x| acc + x) * grid.cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceStatus {
    Ok,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRecord {
    pub t: f64,
    /// Slice integral; absent for critical slices.
    pub value: Option<f64>,
    pub status: SliceStatus,
    #[serde(skip)]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoareaReport {
    /// Region side.
    pub lhs: f64,
    /// Sliced side.
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub excluded_t_measure: f64,
    pub per_slice: Vec<SliceRecord>,
}

/// Evaluates both sides of the coarea formula over `a ≤ H ≤ b`.
///
/// The outer integral uses `n_slices` panels with [`POINTS_PER_PANEL`]
/// Gauss–Legendre levels each. Fails with [`CoareaError::SardBudget`] when
/// critical slices carry more than [`SARD_BUDGET`]` · (b − a)` of the weight.
pub fn coarea_check(
    f: &Expression,
    h: &ImplicitField,
    a: f64,
    b: f64,
    grid: &GridSpec,
    n_slices: usize,
) -> Result<CoareaReport, CoareaError> {
    check_integrand(f, h)?;
    check_grid(h, grid)?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(CoareaError::InvalidInterval { a, b });
    }
    if n_slices < 4 {
        return Err(CoareaError::TooFewSlices(n_slices));
    }
    let lhs = region_integral(f, h, a, b, grid)?;
    let sampled = SampledGrid::new(h, grid)?;
    let levels = GaussLegendre::new(POINTS_PER_PANEL).composite(a, b, n_slices);
    let per_slice = levels
        .par_iter()
        .map(|&(t, weight)| match mesh::extract(h, &sampled, t) {
            Ok(m) => Ok(SliceRecord {
                t,
                value: Some(slice_integral(f, h, &m)?),
                status: SliceStatus::Ok,
                weight,
            }),
            Err(CoareaError::CriticalSlice { .. }) => Ok(SliceRecord {
                t,
                value: None,
                status: SliceStatus::Critical,
                weight,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, CoareaError>>()?;

    let rhs = per_slice
        .iter()
        .filter_map(|s| s.value.map(|v| v * s.weight))
        .fold(0.0, |acc, x| acc + x);
    let excluded = per_slice
        .iter()
        .filter(|s| s.status == SliceStatus::Critical)
        .fold(0.0, |acc, s| acc + s.weight);
    let abs_err = (lhs - rhs).abs();
    let rel_err = if lhs != 0.0 {
        abs_err / lhs.abs()
    } else if abs_err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let report = CoareaReport {
        lhs,
        rhs,
        abs_err,
        rel_err,
        excluded_t_measure: excluded,
        per_slice,
    };
    let allowed = SARD_BUDGET * (b - a);
    if excluded > allowed {
        return Err(CoareaError::SardBudget {
            excluded,
            allowed,
            report: Box::new(report),
        });
    }
    Ok(report)
}

fn check_integrand(f: &Expression, h: &ImplicitField) -> Result<(), CoareaError> {
    if f.arity() != h.dim() {
        return Err(CoareaError::IntegrandArity {
            expected: h.dim(),
            got: f.arity(),
        });
    }
    Ok(())
}

fn check_grid(h: &ImplicitField, grid: &GridSpec) -> Result<(), CoareaError> {
    if grid.dim() != h.dim() {
        return Err(CoareaError::GridDimension {
            field: h.dim(),
            grid: grid.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn x(src: &str, n: usize) -> Expression {
        Expression::parse(src, n, "x").unwrap()
    }

    #[test]
    fn unit_circle_length() {
        let h = ImplicitField::parse("x1^2 + x2^2", 2).unwrap();
        let grid = GridSpec::cube(2, -2.0, 2.0, 256).unwrap();
        let mesh = extract_level_set(&h, 1.0, &grid).unwrap();
        assert!((mesh.measure() - 2.0 * PI).abs() < 1e-3 * 2.0 * PI);
        for e in &mesh.elements {
            for v in &e.vertices {
                assert!(v.iter().all(|c| (-2.0..=2.0).contains(c)));
            }
        }
    }

    #[test]
    fn linear_levels_are_exact() {
        // H = x1 + 2 x2 on [0,1]²: the level t = 1 is the segment (1,0)–(0,1/2)
        let h = ImplicitField::parse("x1 + 2*x2", 2).unwrap();
        let grid = GridSpec::cube(2, 0.0, 1.0, 7).unwrap();
        let mesh = extract_level_set(&h, 1.0, &grid).unwrap();
        let exact = (1.0f64 + 0.25).sqrt();
        assert!((mesh.measure() - exact).abs() < 1e-12);
        for e in &mesh.elements {
            assert!((h.h().eval(&e.sample).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_sphere_area() {
        let h = ImplicitField::parse("x1^2 + x2^2 + x3^2", 3).unwrap();
        let grid = GridSpec::cube(3, -1.5, 1.5, 64).unwrap();
        let mesh = extract_level_set(&h, 1.0, &grid).unwrap();
        assert!((mesh.measure() - 4.0 * PI).abs() < 1e-2 * 4.0 * PI);
    }

    #[test]
    fn level_missing_the_box_is_empty() {
        let h = ImplicitField::parse("x1^2 + x2^2", 2).unwrap();
        let grid = GridSpec::cube(2, -1.0, 1.0, 8).unwrap();
        let mesh = extract_level_set(&h, 10.0, &grid).unwrap();
        assert!(mesh.is_empty());
        assert_eq!(slice_integral(&x("1", 2), &h, &mesh).unwrap(), 0.0);
    }

    #[test]
    fn critical_level_is_reported() {
        let h = ImplicitField::parse("x1^3", 2).unwrap();
        let grid = GridSpec::cube(2, -1.0, 1.0, 8).unwrap();
        assert!(matches!(
            extract_level_set(&h, 0.0, &grid),
            Err(CoareaError::CriticalSlice { .. })
        ));
    }

    #[test]
    fn sard_budget_exhausted() {
        let h = ImplicitField::parse("x1^3", 2).unwrap();
        let grid = GridSpec::cube(2, -1.0, 1.0, 8).unwrap();
        let err = coarea_check(&x("1", 2), &h, -1e-20, 1e-20, &grid, 4).unwrap_err();
        match err {
            CoareaError::SardBudget {
                excluded, report, ..
            } => {
                assert!((excluded - 2e-20).abs() < 1e-30);
                assert!(report
                    .per_slice
                    .iter()
                    .all(|s| s.status == SliceStatus::Critical));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn annulus_both_sides() {
        let h = ImplicitField::parse("sqrt(x1^2 + x2^2)", 2).unwrap();
        let grid = GridSpec::cube(2, -3.0, 3.0, 256).unwrap();
        let r = coarea_check(&x("1", 2), &h, 1.0, 2.0, &grid, 64).unwrap();
        let exact = 3.0 * PI;
        assert!((r.lhs - exact).abs() < 1e-2 * exact);
        assert!((r.rhs - exact).abs() < 1e-2 * exact);
        assert!(r.rel_err < 1e-2);
        assert_eq!(r.excluded_t_measure, 0.0);
        assert_eq!(r.per_slice.len(), 128);

        let r = coarea_check(&x("x1^2 + x2^2", 2), &h, 1.0, 2.0, &grid, 64).unwrap();
        let exact = 7.5 * PI;
        assert!((r.lhs - exact).abs() < 1e-2 * exact);
        assert!((r.rhs - exact).abs() < 1e-2 * exact);
    }

    #[test]
    fn gradient_weight_cancels() {
        // with f = |∇H| each slice integral is just the slice length
        let h = ImplicitField::parse("x1^2 + 3*x2^2", 2).unwrap();
        let f = x("sqrt((2*x1)^2 + (6*x2)^2)", 2);
        let grid = GridSpec::cube(2, -2.0, 2.0, 64).unwrap();
        let mesh = extract_level_set(&h, 1.0, &grid).unwrap();
        let s = slice_integral(&f, &h, &mesh).unwrap();
        assert!((s - mesh.measure()).abs() <= 1e-12 * mesh.measure());
    }

    #[test]
    fn linear_in_the_integrand() {
        let h = ImplicitField::parse("x1^2 + x2^2", 2).unwrap();
        let grid = GridSpec::cube(2, -2.0, 2.0, 64).unwrap();
        let (f, g) = (x("1 + x1", 2), x("x2^2", 2));
        let fg = x("2*(1 + x1) - 3*x2^2", 2);
        let a = coarea_check(&f, &h, 0.5, 2.0, &grid, 8).unwrap();
        let b = coarea_check(&g, &h, 0.5, 2.0, &grid, 8).unwrap();
        let c = coarea_check(&fg, &h, 0.5, 2.0, &grid, 8).unwrap();
        let scale = a.lhs.abs() + b.lhs.abs();
        assert!((c.lhs - (2.0 * a.lhs - 3.0 * b.lhs)).abs() < 1e-12 * scale);
        assert!((c.rhs - (2.0 * a.rhs - 3.0 * b.rhs)).abs() < 1e-12 * scale);
    }

    #[test]
    fn discrepancy_shrinks_with_resolution() {
        let h = ImplicitField::parse("sqrt(x1^2 + x2^2)", 2).unwrap();
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&res| {
                let grid = GridSpec::cube(2, -3.0, 3.0, res).unwrap();
                coarea_check(&x("1", 2), &h, 1.0, 2.0, &grid, 32)
                    .unwrap()
                    .abs_err
            })
            .collect();
        assert!(
            errs[1] < errs[0] * 1.5 && errs[2] < errs[1] * 1.5,
            "{errs:?}"
        );
        assert!(errs[2] < errs[0]);
    }

    #[test]
    fn validation() {
        let h = ImplicitField::parse("x1 + x2", 2).unwrap();
        let grid = GridSpec::cube(2, 0.0, 1.0, 4).unwrap();
        let one = x("1", 2);
        assert!(matches!(
            coarea_check(&one, &h, 1.0, 1.0, &grid, 4),
            Err(CoareaError::InvalidInterval { .. })
        ));
        assert!(matches!(
            coarea_check(&one, &h, 0.0, 1.0, &grid, 3),
            Err(CoareaError::TooFewSlices(3))
        ));
        assert!(matches!(
            GridSpec::cube(2, 0.0, 1.0, 1),
            Err(CoareaError::Resolution { .. })
        ));
        assert!(matches!(
            GridSpec::cube(2, 1.0, 1.0, 4),
            Err(CoareaError::DegenerateAxis { .. })
        ));
        assert!(matches!(
            ImplicitField::parse("x1", 1),
            Err(CoareaError::Dimension(1))
        ));
        let grid3 = GridSpec::cube(3, 0.0, 1.0, 4).unwrap();
        assert!(matches!(
            coarea_check(&one, &h, 0.0, 1.0, &grid3, 4),
            Err(CoareaError::GridDimension { .. })
        ));
    }
}
