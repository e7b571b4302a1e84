//! The four subcommands.

use hausdorff::coarea::{
    coarea_check, CoareaError, CoareaReport, GridSpec, ImplicitField, SliceStatus,
};
use hausdorff::expr::Expression;
use hausdorff::measures::{hausdorff_integrate_detailed, AreaError, DisjointManifold};
use hausdorff::nets::{net_limit, NetError, NetStep, RefinementNet};
use hausdorff::quadrature::AdaptiveOptions;
use serde::Serialize;

use crate::output::{format_f64, format_opt, to_csv, to_json};
use crate::scene::{parse_field, CurveFamily, Scene};
use crate::{exit, CliError, CommandOutput, Primary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartContribution {
    pub chart: usize,
    pub value: f64,
    pub depth: u32,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapNote {
    pub chart_a: usize,
    pub chart_b: usize,
    pub param_a: Vec<f64>,
    pub param_b: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaReport {
    pub value: f64,
    pub abs_tol: f64,
    /// Deepest refinement level reached over all charts.
    pub depth: u32,
    pub charts: Vec<ChartContribution>,
    pub overlap_warnings: Vec<OverlapNote>,
}

fn area_error(e: AreaError) -> CliError {
    match e {
        AreaError::AmbientMismatch { .. }
        | AreaError::MixedDimensions { .. }
        | AreaError::FieldArity { .. }
        | AreaError::InvalidTolerance(_) => CliError::validation(e.to_string()),
        AreaError::Chart { .. } | AreaError::NotConverged { .. } => {
            CliError::numerical(e.to_string())
        }
    }
}

fn integrate(f: &Expression, m: &DisjointManifold, abs_tol: f64) -> Result<AreaReport, CliError> {
    let r = hausdorff_integrate_detailed(f, m, abs_tol, AdaptiveOptions::default())
        .map_err(area_error)?;
    let charts: Vec<ChartContribution> = r
        .charts
        .iter()
        .enumerate()
        .map(|(chart, c)| ChartContribution {
            chart,
            value: c.value,
            depth: c.depth,
            cells: c.cells,
        })
        .collect();
    Ok(AreaReport {
        value: r.value,
        abs_tol,
        depth: charts.iter().map(|c| c.depth).max().unwrap_or(0),
        charts,
        overlap_warnings: Vec::new(),
    })
}

/// `area`: integrates `field` (or the scene's own field, or 1) over the scene.
pub fn run_area(
    scene: &Scene,
    field: Option<&str>,
    abs_tol: f64,
    seed: u64,
) -> Result<CommandOutput, CliError> {
    let manifold = scene.manifold()?;
    let f = scene.field(field.or(scene.field.as_deref()).unwrap_or("1"))?;
    let mut report = integrate(&f, &manifold, abs_tol)?;
    report.overlap_warnings = manifold
        .overlap_warnings(seed)
        .into_iter()
        .map(|w| OverlapNote {
            chart_a: w.chart_a,
            chart_b: w.chart_b,
            param_a: w.param_a,
            param_b: w.param_b,
            distance: w.distance,
        })
        .collect();
    let warnings = report
        .overlap_warnings
        .iter()
        .map(|w| {
            format!(
                "warning: charts {} and {} may overlap (sampled images {:e} apart)",
                w.chart_a, w.chart_b, w.distance
            )
        })
        .collect();
    let rows = report
        .charts
        .iter()
        .map(|c| {
            vec![
                c.chart.to_string(),
                format_f64(c.value),
                c.depth.to_string(),
                c.cells.to_string(),
            ]
        })
        .collect::<Vec<_>>();
    Ok(CommandOutput {
        json: to_json(&report),
        csv: to_csv(&["chart", "value", "depth", "cells"], &rows),
        primary: Primary::Json,
        code: exit::OK,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoareaArgs {
    pub h: String,
    pub f: String,
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    pub res: usize,
    pub slices: usize,
    /// The grid is the cube `[lo, hi]^dim`.
    pub lo: f64,
    pub hi: f64,
    pub max_rel_err: f64,
}

impl Default for CoareaArgs {
    fn default() -> Self {
        CoareaArgs {
            h: String::new(),
            f: "1".into(),
            a: 0.0,
            b: 1.0,
            dim: 2,
            res: 256,
            slices: 64,
            lo: -3.0,
            hi: 3.0,
            max_rel_err: 0.02,
        }
    }
}

fn coarea_output(report: &CoareaReport, code: i32) -> CommandOutput {
    let rows = report
        .per_slice
        .iter()
        .map(|s| {
            let status = match s.status {
                SliceStatus::Ok => "ok",
                SliceStatus::Critical => "critical",
            };
            vec![format_f64(s.t), format_opt(s.value), status.to_string()]
        })
        .collect::<Vec<_>>();
    CommandOutput {
        json: to_json(report),
        csv: to_csv(&["t", "value", "status"], &rows),
        primary: Primary::Json,
        code,
        warnings: Vec::new(),
    }
}

/// `coarea`: both sides of the coarea formula for `H`, `f` over `a ≤ H ≤ b`.
pub fn run_coarea(args: &CoareaArgs) -> Result<CommandOutput, CliError> {
    if !(args.a < args.b) {
        return Err(CliError::validation(format!(
            "need a < b, got a = {}, b = {}",
            args.a, args.b
        )));
    }
    let fail = |e: CoareaError| match e {
        CoareaError::SardBudget { ref report, .. } => CliError {
            code: exit::SARD_BUDGET,
            message: e.to_string(),
            output: None,
        }
        .with_output(coarea_output(report, exit::SARD_BUDGET)),
        CoareaError::Eval(_) | CoareaError::CriticalSlice { .. } | CoareaError::Residual { .. } => {
            CliError::numerical(e.to_string())
        }
        _ => CliError::validation(e.to_string()),
    };
    let h = ImplicitField::parse(&args.h, args.dim)
        .map_err(|e| CliError::validation(format!("h: {e}")))?;
    let f = parse_field(&args.f, args.dim)?;
    let grid = GridSpec::cube(args.dim, args.lo, args.hi, args.res).map_err(fail)?;
    let report = coarea_check(&f, &h, args.a, args.b, &grid, args.slices).map_err(fail)?;
    let code = if report.rel_err <= args.max_rel_err {
        exit::OK
    } else {
        exit::COAREA_MISMATCH
    };
    Ok(coarea_output(&report, code))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub k: u64,
    pub value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStudyReport {
    pub limit_value: f64,
    pub k_max: u64,
    pub abs_tol: f64,
    pub quad_tol: f64,
    pub final_gap: f64,
    pub converged: bool,
    pub rows: Vec<LimitRow>,
}

/// The last (up to) three gaps are non-increasing and the final gap is
/// below `10 · abs_tol`.
pub fn limit_converged(gaps: &[f64], abs_tol: f64) -> bool {
    let Some(&last) = gaps.last() else {
        return false;
    };
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    tail.windows(2).all(|w| w[1] <= w[0]) && last < 10.0 * abs_tol
}

/// `limit-study`: `I_k = ∫_{γ_k} f` for `k = 1..=k_max` against the limit
/// curve's integral. Chart integrals use `quad_tol`.
pub fn run_limit_study(
    family: &CurveFamily,
    field: &str,
    k_max: u64,
    abs_tol: f64,
    quad_tol: f64,
) -> Result<CommandOutput, CliError> {
    if k_max < 2 {
        return Err(CliError::validation(format!(
            "k_max must be at least 2, got {k_max}"
        )));
    }
    if !(abs_tol > 0.0) || !(quad_tol > 0.0) {
        return Err(CliError::validation("tolerances must be positive"));
    }
    let f = parse_field(field, family.ambient_dim)?;
    let limit = family.limit()?;
    let members = (1..=k_max)
        .map(|k| family.member(k))
        .collect::<Result<Vec<_>, _>>()?;
    let numerical = |e: CliError| CliError::numerical(e.message);
    let limit_value = integrate(&f, &limit, quad_tol).map_err(numerical)?.value;
    let rows = members
        .iter()
        .zip(1..)
        .map(|(m, k)| {
            let value = integrate(&f, m, quad_tol)
                .map_err(|e| CliError::numerical(format!("k = {k}: {}", e.message)))?
                .value;
            Ok(LimitRow {
                k,
                value,
                gap: (value - limit_value).abs(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let report = LimitStudyReport {
        limit_value,
        k_max,
        abs_tol,
        quad_tol,
        final_gap: *gaps.last().expect("k_max ≥ 2"),
        converged: limit_converged(&gaps, abs_tol),
        rows,
    };
    let csv_rows = report
        .rows
        .iter()
        .map(|r| vec![r.k.to_string(), format_f64(r.value), format_f64(r.gap)])
        .collect::<Vec<_>>();
    Ok(CommandOutput {
        json: to_json(&report),
        csv: to_csv(&["k", "value", "gap"], &csv_rows),
        primary: Primary::Json,
        code: exit::OK,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetArgs {
    pub f: String,
    pub a: f64,
    pub b: f64,
    pub tol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetReport {
    pub value: Option<f64>,
    pub converged: bool,
    pub steps: Vec<NetStep>,
}

fn net_output(value: Option<f64>, steps: Vec<NetStep>, code: i32) -> CommandOutput {
    let rows = steps
        .iter()
        .map(|s| {
            vec![
                s.step.to_string(),
                s.cells.to_string(),
                format_f64(s.sum),
                format_opt(s.delta),
            ]
        })
        .collect::<Vec<_>>();
    let report = NetReport {
        value,
        converged: value.is_some(),
        steps,
    };
    CommandOutput {
        json: to_json(&report),
        csv: to_csv(&["step", "cells", "sum", "delta"], &rows),
        primary: Primary::Csv,
        code,
        warnings: Vec::new(),
    }
}

/// `net`: Riemann sums of `f(x1)` along the midpoint-bisection chain.
pub fn run_net(args: &NetArgs) -> Result<CommandOutput, CliError> {
    let f = parse_field(&args.f, 1)?;
    let net =
        RefinementNet::over(args.a, args.b).map_err(|e| CliError::validation(e.to_string()))?;
    match net_limit(&net, &f, args.tol, args.max_steps) {
        Ok((value, report)) => Ok(net_output(Some(value), report.steps, exit::OK)),
        Err(NetError::NotConverged { report }) => {
            let msg = format!("no convergence within {} steps", report.steps.len());
            Err(CliError::numerical(msg).with_output(net_output(
                None,
                report.steps,
                exit::NUMERICAL,
            )))
        }
        Err(e @ NetError::Eval(_)) => Err(CliError::numerical(e.to_string())),
        Err(e) => Err(CliError::validation(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_flag() {
        assert!(limit_converged(&[3.0, 2.0, 1.0, 0.01], 0.01));
        assert!(!limit_converged(&[3.0, 2.0, 1.0, 0.2], 0.01));
        assert!(!limit_converged(&[0.001, 0.002, 0.001], 0.01));
        assert!(limit_converged(&[0.0, 0.0, 0.0], 0.01));
        assert!(!limit_converged(&[], 0.01));
    }
}
