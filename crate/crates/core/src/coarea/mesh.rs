//! Piecewise-linear level sets by marching simplices.
//!
//! Grid squares are split into two triangles and grid cubes into six
//! tetrahedra along the main diagonal (the Kuhn triangulation, which
//! matches across neighbouring cubes). Inside each simplex `H − t` is
//! interpolated linearly, so its zero set is a segment (in a triangle) or
//! one or two triangles (in a tetrahedron).

use rayon::prelude::*;

use super::{CoareaError, GridSpec, ImplicitField};

/// Vertex values `H(x)` on every grid vertex, computed once and reused for
/// every level `t`.
#[derive(Debug, Clone)]
pub struct SampledGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl SampledGrid {
    pub fn new(field: &ImplicitField, spec: &GridSpec) -> Result<Self, CoareaError> {
        if spec.dim() != field.dim() {
            return Err(CoareaError::GridDimension {
                field: field.dim(),
                grid: spec.dim(),
            });
        }
        let counts: Vec<usize> = spec.res().iter().map(|r| r + 1).collect();
        let row_len = counts[0];
        let rows: usize = counts[1..].iter().product();
        let values = (0..rows)
            .into_par_iter()
            .map(|row| {
                let mut rest = row;
                let mut idx = vec![0usize; spec.dim()];
                for (k, c) in counts.iter().enumerate().skip(1) {
                    idx[k] = rest % c;
                    rest /= c;
                }
                (0..row_len)
                    .map(|i| {
                        idx[0] = i;
                        field
                            .h()
                            .eval(&spec.vertex(&idx))
                            .map_err(CoareaError::from)
                    })
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?
            .concat();
        Ok(SampledGrid {
            spec: spec.clone(),
            values,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn value(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        let mut stride = 1;
        for (k, &i) in idx.iter().enumerate() {
            flat += i * stride;
            stride *= self.spec.res()[k] + 1;
        }
        self.values[flat]
    }
}

/// One straight piece of the level set: a segment (`n = 2`) or a triangle
/// (`n = 3`).
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub vertices: Vec<Vec<f64>>,
    /// Where the field is sampled: the element centroid, pulled back onto
    /// the true level set by Newton steps along `∇H`.
    pub sample: Vec<f64>,
    /// Length or area.
    pub measure: f64,
}

/// Piecewise-linear approximation of `H⁻¹(t)` inside a grid box.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMesh {
    pub level: f64,
    pub dim: usize,
    pub elements: Vec<Element>,
}

impl SliceMesh {
    /// Total length (`n = 2`) or area (`n = 3`).
    pub fn measure(&self) -> f64 {
        self.elements.iter().fold(0.0, |acc, e| acc + e.measure)
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }
}

/// Absolute gradient threshold below which a sample makes the slice critical.
pub const GRAD_TOL: f64 = 1e-8;
/// Residual allowance `|H(p) − t|` at sample points, per unit of grid-cell
/// diagonal.
pub const SLICE_TOL_PER_DIAGONAL: f64 = 1e-6;
const NEWTON_STEPS: usize = 30;

pub(super) fn extract(
    field: &ImplicitField,
    grid: &SampledGrid,
    t: f64,
) -> Result<SliceMesh, CoareaError> {
    let spec = grid.spec();
    let raw = match spec.dim() {
        2 => march_triangles(grid, t),
        3 => march_tetrahedra(grid, t),
        n => return Err(CoareaError::Dimension(n)),
    };
    let slice_tol = SLICE_TOL_PER_DIAGONAL * spec.cell_diagonal();
    let elements = raw
        .into_iter()
        .filter(|(_, measure)| *measure > 0.0)
        .map(|(vertices, measure)| {
            let sample = project(field, centroid(&vertices), t, slice_tol)?;
            Ok(Element {
                vertices,
                sample,
                measure,
            })
        })
        .collect::<Result<Vec<_>, CoareaError>>()?;
    Ok(SliceMesh {
        level: t,
        dim: spec.dim(),
        elements,
    })
}

fn centroid(vertices: &[Vec<f64>]) -> Vec<f64> {
    let n = vertices.len() as f64;
    (0..vertices[0].len())
        .map(|k| vertices.iter().map(|v| v[k]).sum::<f64>() / n)
        .collect()
}

/// Newton iteration `p ← p − (H(p) − t) ∇H / |∇H|²` until the residual is
/// within `tol`; fails on a vanishing gradient.
fn project(
    field: &ImplicitField,
    mut p: Vec<f64>,
    t: f64,
    tol: f64,
) -> Result<Vec<f64>, CoareaError> {
    for _ in 0..NEWTON_STEPS {
        let d = field.h().eval_dual(&p)?;
        let norm = d.gradient_norm();
        if norm < GRAD_TOL {
            return Err(CoareaError::CriticalSlice {
                t,
                point: p,
                grad_norm: norm,
            });
        }
        let r = d.value - t;
        if r.abs() <= tol {
            return Ok(p);
        }
        let step = r / (norm * norm);
        for (x, g) in p.iter_mut().zip(&d.partials) {
            *x -= step * g;
        }
    }
    let residual = field.h().eval(&p)? - t;
    Err(CoareaError::Residual { t, residual, tol })
}

fn lerp(pa: &[f64], sa: f64, pb: &[f64], sb: f64) -> Vec<f64> {
    let s = sa / (sa - sb);
    pa.iter().zip(pb).map(|(a, b)| a + s * (b - a)).collect()
}

fn length(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt()
}

type RawElement = (Vec<Vec<f64>>, f64);

fn march_triangles(grid: &SampledGrid, t: f64) -> Vec<RawElement> {
    let spec = grid.spec();
    let (nx, ny) = (spec.res()[0], spec.res()[1]);
    (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut out = Vec::new();
            for i in 0..nx {
                let corners = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]];
                let values = corners.map(|c| grid.value(&c) - t);
                if values.iter().all(|&v| v >= 0.0) || values.iter().all(|&v| v < 0.0) {
                    continue;
                }
                for tri in [[0, 1, 2], [0, 2, 3]] {
                    let pts: Vec<(Vec<f64>, f64)> = tri
                        .iter()
                        .map(|&c| (spec.vertex(&corners[c]), values[c]))
                        .collect();
                    if let Some(seg) = triangle_crossing(&pts) {
                        let len = length(&seg[0], &seg[1]);
                        out.push((seg, len));
                    }
                }
            }
            out
        })
        .collect()
}

/// Zero set of the linear interpolant on one triangle. Values `≥ 0` count
/// as positive.
fn triangle_crossing(pts: &[(Vec<f64>, f64)]) -> Option<Vec<Vec<f64>>> {
    let pos: Vec<bool> = pts.iter().map(|p| p.1 >= 0.0).collect();
    let count = pos.iter().filter(|&&b| b).count();
    if count == 0 || count == 3 {
        return None;
    }
    let lone = (0..3)
        .find(|&k| pos[k] == (count == 1))
        .expect("one vertex differs");
    let (pa, sa) = &pts[lone];
    Some(
        (0..3)
            .filter(|&k| k != lone)
            .map(|k| lerp(pa, *sa, &pts[k].0, pts[k].1))
            .collect(),
    )
}

/// Kuhn triangulation of the unit cube; corner `b` has offset bit `k` on
/// axis `k`.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn march_tetrahedra(grid: &SampledGrid, t: f64) -> Vec<RawElement> {
    let spec = grid.spec();
    let (nx, ny, nz) = (spec.res()[0], spec.res()[1], spec.res()[2]);
    (0..nz)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut out = Vec::new();
            for j in 0..ny {
                for i in 0..nx {
                    let corners: Vec<[usize; 3]> = (0..8)
                        .map(|b| [i + (b & 1), j + (b >> 1 & 1), k + (b >> 2 & 1)])
                        .collect();
                    let values: Vec<f64> = corners.iter().map(|c| grid.value(c) - t).collect();
                    if values.iter().all(|&v| v >= 0.0) || values.iter().all(|&v| v < 0.0) {
                        continue;
                    }
                    let points: Vec<Vec<f64>> = corners.iter().map(|c| spec.vertex(c)).collect();
                    for tet in KUHN {
                        let pts: Vec<(&[f64], f64)> = tet
                            .iter()
                            .map(|&c| (points[c].as_slice(), values[c]))
                            .collect();
                        for tri in tetrahedron_crossing(&pts) {
                            let a = area(&tri[0], &tri[1], &tri[2]);
                            out.push((tri, a));
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// Zero set of the linear interpolant on one tetrahedron: nothing, one
/// triangle, or a quadrilateral split into two triangles.
fn tetrahedron_crossing(pts: &[(&[f64], f64)]) -> Vec<Vec<Vec<f64>>> {
    let pos: Vec<usize> = (0..4).filter(|&k| pts[k].1 >= 0.0).collect();
    let neg: Vec<usize> = (0..4).filter(|&k| pts[k].1 < 0.0).collect();
    let cut = |a: usize, b: usize| lerp(pts[a].0, pts[a].1, pts[b].0, pts[b].1);
    match (pos.len(), neg.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if pos.len() == 1 {
                (pos[0], &neg)
            } else {
                (neg[0], &pos)
            };
            vec![rest.iter().map(|&k| cut(lone, k)).collect()]
        }
        (2, 2) => {
            let (a, b, c, d) = (pos[0], pos[1], neg[0], neg[1]);
            let (ac, ad, bd, bc) = (cut(a, c), cut(a, d), cut(b, d), cut(b, c));
            vec![vec![ac.clone(), ad, bd.clone()], vec![ac, bd, bc]]
        }
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_tetrahedra_fill_the_cube() {
        // each tetrahedron has volume 1/6 and they share only faces
        for tet in KUHN {
            let p: Vec<[f64; 3]> = tet
                .iter()
                .map(|&b| [(b & 1) as f64, (b >> 1 & 1) as f64, (b >> 2 & 1) as f64])
                .collect();
            let d = |k: usize| [p[k][0] - p[0][0], p[k][1] - p[0][1], p[k][2] - p[0][2]];
            let (u, v, w) = (d(1), d(2), d(3));
            let det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
                + u[2] * (v[0] * w[1] - v[1] * w[0]);
            assert!((det.abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quad_case_covers_the_section() {
        // H = x + y − 1/2 on the corner tetrahedron: positives {a, b}
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        let c = [0.0, 0.0, 0.0];
        let d = [0.0, 0.0, 1.0];
        let s = |p: &[f64; 3]| p[0] + p[1] - 0.5;
        let pts = [
            (&a[..], s(&a)),
            (&b[..], s(&b)),
            (&c[..], s(&c)),
            (&d[..], s(&d)),
        ];
        let tris = tetrahedron_crossing(&pts);
        assert_eq!(tris.len(), 2);
        let total: f64 = tris.iter().map(|t| area(&t[0], &t[1], &t[2])).sum();
        // the section is a √2/2 × 1/2 rectangle
        assert!((total - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_crossing_cases() {
        let pts = vec![
            (vec![0.0, 0.0], -1.0),
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
        ];
        let seg = triangle_crossing(&pts).unwrap();
        assert_eq!(seg, vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        let all_pos = vec![
            (vec![0.0, 0.0], 0.0),
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 2.0),
        ];
        assert!(triangle_crossing(&all_pos).is_none());
    }
}
