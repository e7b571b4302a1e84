//! Scene and curve-family files.
//!
//! A scene is JSON of the form
//!
//! ```json
//! {"ambient_dim": 2,
//!  "charts": [{"param_dim": 1, "domain": [[0, "2*pi"]], "map": ["cos(u1)", "sin(u1)"]}],
//!  "field": "1"}
//! ```
//!
//! Domain bounds are numbers or constant expressions. `field` is optional.
//! A curve family has the same chart shape, once as a `template` whose
//! strings may mention the family parameter `k`, and once as the explicit
//! `limit` chart.

use std::fs;
use std::path::Path;

use hausdorff::expr::Expression;
use hausdorff::geometry::Chart;
use hausdorff::measures::DisjointManifold;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A chart bound: a literal number or a constant expression such as `"2*pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Expr(String),
}

impl Bound {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Bound::Number(v) => Ok(*v),
            Bound::Expr(s) => parse_scalar(s).map_err(CliError::validation),
        }
    }

    fn substitute(&self, k: u64) -> Bound {
        match self {
            Bound::Number(v) => Bound::Number(*v),
            Bound::Expr(s) => Bound::Expr(substitute_k(s, k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub param_dim: usize,
    pub domain: Vec<[Bound; 2]>,
    pub map: Vec<String>,
}

impl ChartSpec {
    /// Builds the chart, checking it against the declared dimensions.
    pub fn build(&self, ambient_dim: usize, index: usize) -> Result<Chart, CliError> {
        let fail = |msg: String| CliError::validation(format!("chart {index}: {msg}"));
        if self.domain.len() != self.param_dim {
            return Err(fail(format!(
                "domain has {} intervals, param_dim is {}",
                self.domain.len(),
                self.param_dim
            )));
        }
        if self.map.len() != ambient_dim {
            return Err(fail(format!(
                "map has {} components, ambient_dim is {ambient_dim}",
                self.map.len()
            )));
        }
        let bounds = self
            .domain
            .iter()
            .map(|[lo, hi]| Ok((lo.value()?, hi.value()?)))
            .collect::<Result<Vec<_>, CliError>>()
            .map_err(|e| fail(e.message))?;
        Chart::parse(bounds, &self.map).map_err(|e| fail(e.to_string()))
    }

    fn substitute(&self, k: u64) -> ChartSpec {
        ChartSpec {
            param_dim: self.param_dim,
            domain: self
                .domain
                .iter()
                .map(|[lo, hi]| [lo.substitute(k), hi.substitute(k)])
                .collect(),
            map: self.map.iter().map(|s| substitute_k(s, k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub ambient_dim: usize,
    pub charts: Vec<ChartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("scene: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Scene, CliError> {
        Scene::from_json(&read(path)?)
    }

    pub fn manifold(&self) -> Result<DisjointManifold, CliError> {
        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(i, c)| c.build(self.ambient_dim, i))
            .collect::<Result<Vec<_>, _>>()?;
        DisjointManifold::new(self.ambient_dim, charts)
            .map_err(|e| CliError::validation(e.to_string()))
    }

    /// The integrand, over coordinates `x1..xn`.
    pub fn field(&self, source: &str) -> Result<Expression, CliError> {
        parse_field(source, self.ambient_dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFamily {
    pub ambient_dim: usize,
    pub template: ChartSpec,
    pub limit: ChartSpec,
}

impl CurveFamily {
    pub fn from_json(text: &str) -> Result<CurveFamily, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("family: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<CurveFamily, CliError> {
        CurveFamily::from_json(&read(path)?)
    }

    /// The member with parameter `k`, as a one-chart manifold.
    pub fn member(&self, k: u64) -> Result<DisjointManifold, CliError> {
        let chart = self
            .template
            .substitute(k)
            .build(self.ambient_dim, 0)
            .map_err(|e| CliError::validation(format!("k = {k}: {}", e.message)))?;
        DisjointManifold::new(self.ambient_dim, vec![chart])
            .map_err(|e| CliError::validation(e.to_string()))
    }

    pub fn limit(&self) -> Result<DisjointManifold, CliError> {
        let chart = self
            .limit
            .build(self.ambient_dim, 0)
            .map_err(|e| CliError::validation(format!("limit: {}", e.message)))?;
        DisjointManifold::new(self.ambient_dim, vec![chart])
            .map_err(|e| CliError::validation(e.to_string()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn parse_field(source: &str, ambient_dim: usize) -> Result<Expression, CliError> {
    Expression::parse(source, ambient_dim, "x")
        .map_err(|e| CliError::validation(format!("field: {e}")))
}

/// Evaluates a constant expression such as `"pi/2"`.
pub fn parse_scalar(source: &str) -> Result<f64, String> {
    let e = Expression::parse(source, 0, "x").map_err(|e| format!("`{source}`: {e}"))?;
    e.eval(&[]).map_err(|e| format!("`{source}`: {e}"))
}

/// Replaces every standalone identifier `k` by `(k)` with the given value.
pub fn substitute_k(source: &str, k: u64) -> String {
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_';
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        let standalone = c == 'k'
            && (i == 0 || !is_ident(chars[i - 1]))
            && chars.get(i + 1).is_none_or(|&n| !is_ident(n));
        if standalone {
            out.push_str(&format!("({k})"));
        } else {
            out.push(c);
        }
    }
    out
}
