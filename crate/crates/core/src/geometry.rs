//! Charts, Jacobians and the Gram volume element.
//!
//! A [`Chart`] is a smooth map `φ: U ⊂ Rᵐ → Rⁿ` from a parameter box into
//! ambient space, given by one [`Expression`] per output component. Its
//! volume element at `u` is `√det(JᵀJ)`, the square root of the determinant
//! of the pullback metric `g = JᵀJ`. Integrating a field against that element
//! over the box gives the field's integral over the image.

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};

/// Coordinate prefix used for chart parameters: `u1, u2, ...`.
pub const PARAM_PREFIX: &str = "u";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("parameter box must have at least one axis")]
    EmptyBox,
    #[error("axis {axis}: need lo < hi, got [{lo}, {hi}]")]
    DegenerateAxis { axis: usize, lo: f64, hi: f64 },
    #[error("chart has {param_dim} parameters but only {ambient_dim} ambient coordinates")]
    ParamExceedsAmbient {
        param_dim: usize,
        ambient_dim: usize,
    },
    #[error("component {component} has arity {arity}, chart has {param_dim} parameters")]
    ComponentArity {
        component: usize,
        arity: usize,
        param_dim: usize,
    },
    #[error("point {point:?} lies outside the parameter box")]
    OutsideDomain { point: Vec<f64> },
    #[error("chart is not an immersion at {point:?}: det(JᵀJ) = {det:e} below {tol:e}")]
    RankDeficient { point: Vec<f64>, det: f64, tol: f64 },
    #[error("component {component}: {source}")]
    Parse {
        component: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// An axis-aligned parameter box `U = Π [loₖ, hiₖ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    bounds: Vec<(f64, f64)>,
}

impl ParamBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if bounds.is_empty() {
            return Err(GeometryError::EmptyBox);
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GeometryError::DegenerateAxis { axis, lo, hi });
            }
        }
        Ok(ParamBox { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Maps a point of the unit cube `[0,1]ᵐ` affinely into the box.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(&self.bounds)
            .map(|(s, (lo, hi))| lo + s * (hi - lo))
            .collect()
    }
}

/// Dense row-major matrix, sized for Jacobians and Gram matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for a in 0..self.cols {
            for b in a..self.cols {
                let s: f64 = (0..self.rows).map(|i| self[(i, a)] * self[(i, b)]).sum();
                g[(a, b)] = s;
                g[(b, a)] = s;
            }
        }
        g
    }

    /// Determinant by partial-pivot elimination. Square matrices only.
    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
                .expect("non-empty range");
            if a[p * n + c] == 0.0 {
                return 0.0;
            }
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            let pivot = a[c * n + c];
            det *= pivot;
            for r in c + 1..n {
                let f = a[r * n + c] / pivot;
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
            }
        }
        det
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A parameterized piece of an `m`-dimensional submanifold of `Rⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    domain: ParamBox,
    components: Vec<Expression>,
}

impl Chart {
    pub fn new(domain: ParamBox, components: Vec<Expression>) -> Result<Self, GeometryError> {
        let m = domain.dim();
        let n = components.len();
        if m > n {
            return Err(GeometryError::ParamExceedsAmbient {
                param_dim: m,
                ambient_dim: n,
            });
        }
        if let Some((component, c)) = components.iter().enumerate().find(|(_, c)| c.arity() != m) {
            return Err(GeometryError::ComponentArity {
                component,
                arity: c.arity(),
                param_dim: m,
            });
        }
        Ok(Chart { domain, components })
    }

    /// Parses one component per entry of `map`, with parameters `u1..um`.
    ///
    /// ```
    /// use hausdorff::geometry::Chart;
    /// use std::f64::consts::TAU;
    ///
    /// let circle = Chart::parse(vec![(0.0, TAU)], &["cos(u1)", "sin(u1)"]).unwrap();
    /// assert_eq!(circle.ambient_dim(), 2);
    /// assert!((circle.gram_volume_element(&[1.0]).unwrap() - 1.0).abs() < 1e-15);
    /// ```
    pub fn parse<S: AsRef<str>>(bounds: Vec<(f64, f64)>, map: &[S]) -> Result<Self, GeometryError> {
        let domain = ParamBox::new(bounds)?;
        let m = domain.dim();
        let components = map
            .iter()
            .enumerate()
            .map(|(component, s)| {
                Expression::parse(s.as_ref(), m, PARAM_PREFIX)
                    .map_err(|source| GeometryError::Parse { component, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Chart::new(domain, components)
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    fn check_inside(&self, u: &[f64]) -> Result<(), GeometryError> {
        if self.domain.contains(u) {
            Ok(())
        } else {
            Err(GeometryError::OutsideDomain { point: u.to_vec() })
        }
    }

    /// `φ(u)`.
    pub fn map(&self, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_inside(u)?;
        self.map_unchecked(u)
    }

    fn map_unchecked(&self, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        Ok(self
            .components
            .iter()
            .map(|c| c.eval(u))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// The `n × m` Jacobian; column `k` holds `∂φ/∂u_k`.
    pub fn jacobian(&self, u: &[f64]) -> Result<Matrix, GeometryError> {
        self.check_inside(u)?;
        Ok(self.evaluate(u)?.1)
    }

    /// `φ(u)` and its Jacobian in one pass of dual evaluation.
    pub fn evaluate(&self, u: &[f64]) -> Result<(Vec<f64>, Matrix), GeometryError> {
        let mut j = Matrix::zeros(self.ambient_dim(), self.param_dim());
        let mut x = Vec::with_capacity(self.ambient_dim());
        for (i, c) in self.components.iter().enumerate() {
            let d = c.eval_dual(u)?;
            x.push(d.value);
            for (k, p) in d.partials.iter().enumerate() {
                j[(i, k)] = *p;
            }
        }
        Ok((x, j))
    }

    /// `√det(JᵀJ)` at `u`.
    pub fn gram_volume_element(&self, u: &[f64]) -> Result<f64, GeometryError> {
        self.check_inside(u)?;
        let (_, j) = self.evaluate(u)?;
        volume_element(&j, u)
    }
}

/// `√det(JᵀJ)` as `Π |R_kk|` from a Householder QR factorisation of `J`,
/// which avoids squaring the condition number by forming `JᵀJ`.
///
/// The immersion test is relative: `det(JᵀJ)` must reach
/// `1e-12 · (max_k |J e_k|²)^m`.
pub fn volume_element(j: &Matrix, u: &[f64]) -> Result<f64, GeometryError> {
    let (n, m) = (j.rows(), j.cols());
    let max_col = (0..m)
        .map(|c| (0..n).map(|r| j[(r, c)] * j[(r, c)]).sum::<f64>())
        .fold(0.0, f64::max);
    let tol = 1e-12 * max_col.powi(m as i32);
    let mut a = j.clone();
    let mut sqrt_det = 1.0;
    for c in 0..m {
        let norm = (c..n).map(|r| a[(r, c)] * a[(r, c)]).sum::<f64>().sqrt();
        sqrt_det *= norm;
        if norm == 0.0 {
            break;
        }
        let alpha = if a[(c, c)] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (c..n).map(|r| a[(r, c)]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for k in c + 1..m {
            let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * a[(c + i, k)]).sum();
            let s = 2.0 * dot / vv;
            for (i, vi) in v.iter().enumerate() {
                a[(c + i, k)] -= s * vi;
            }
        }
    }
    let det = sqrt_det * sqrt_det;
    if !(det >= tol) || det == 0.0 {
        return Err(GeometryError::RankDeficient {
            point: u.to_vec(),
            det,
            tol,
        });
    }
    Ok(sqrt_det)
}

/// Volume of the unit ball in `Rᵐ`, `2π^{m/2} / (m Γ(m/2))`.
pub fn unit_ball_volume(m: u32) -> f64 {
    assert!(m >= 1, "dimension must be positive");
    let half = f64::from(m) / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / (f64::from(m) * gamma(half))
}
