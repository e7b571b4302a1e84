//! Gauss–Legendre rules and adaptive tensor-product integration over boxes.

use std::sync::OnceLock;

use thiserror::Error;

/// Points per axis of the per-cell rule used by [`integrate_box`].
pub const CELL_ORDER: usize = 8;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
    /// iteration from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(point, weight)` pairs mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// Composite rule over `panels` equal sub-intervals of `[lo, hi]`.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let width = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|k| {
                let a = lo + width * k as f64;
                let b = if k + 1 == panels { hi } else { a + width };
                self.mapped(a, b).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 8-point rule.
pub fn cell_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(CELL_ORDER))
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Deepest dyadic level a cell may be split to.
    pub max_depth: u32,
    /// Budget on the number of cell-rule evaluations.
    pub max_cells: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            max_depth: 40,
            max_cells: 1 << 16,
        }
    }
}

/// Result of [`integrate_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxIntegral {
    pub value: f64,
    /// Deepest dyadic level any accepted cell reached.
    pub depth: u32,
    /// Number of cell-rule evaluations.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError<E> {
    #[error(transparent)]
    Integrand(E),
    #[error("no convergence after {cells} cells (depth {depth})")]
    NotConverged { depth: u32, cells: usize },
}

/// Adaptive tensor-product Gauss–Legendre integration of `f` over the box
/// `bounds`.
///
/// Each cell is integrated with the 8-point rule per axis. A cell is split
/// dyadically along every axis; the split is accepted when the children's
/// sum differs from the parent estimate by at most the cell's share of
/// `abs_tol` (shares halve per axis at each level). Every cell is split at
/// least once.
pub fn integrate_box<E, F>(
    f: F,
    bounds: &[(f64, f64)],
    abs_tol: f64,
    opts: AdaptiveOptions,
) -> Result<BoxIntegral, QuadratureError<E>>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let mut state = Adaptive {
        f: &f,
        rule: cell_rule(),
        dim: bounds.len(),
        opts,
        cells: 0,
        depth: 0,
        point: vec![0.0; bounds.len()],
    };
    let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    let whole = state.cell(&lo, &hi)?;
    let value = state.refine(&lo, &hi, whole, abs_tol, 0)?;
    Ok(BoxIntegral {
        value,
        depth: state.depth,
        cells: state.cells,
    })
}

struct Adaptive<'a, F> {
    f: &'a F,
    rule: &'static GaussLegendre,
    dim: usize,
    opts: AdaptiveOptions,
    cells: usize,
    depth: u32,
    point: Vec<f64>,
}

impl<F, E> Adaptive<'_, F>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    fn cell(&mut self, lo: &[f64], hi: &[f64]) -> Result<f64, QuadratureError<E>> {
        self.cells += 1;
        let q = self.rule.len();
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b + a)).collect();
        let vol: f64 = half.iter().product();
        let nodes = self.rule.nodes();
        let weights = self.rule.weights();
        let mut idx = vec![0usize; self.dim];
        let mut sum = 0.0;
        loop {
            let mut w = 1.0;
            for k in 0..self.dim {
                self.point[k] = mid[k] + half[k] * nodes[idx[k]];
                w *= weights[idx[k]];
            }
            sum += w * (self.f)(&self.point).map_err(QuadratureError::Integrand)?;
            // odometer over the tensor grid
            let mut k = 0;
            loop {
                if k == self.dim {
                    return Ok(sum * vol);
                }
                idx[k] += 1;
                if idx[k] < q {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn children(&self, lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..1usize << self.dim)
            .map(|mask| {
                let mut clo = lo.to_vec();
                let mut chi = hi.to_vec();
                for k in 0..self.dim {
                    let m = 0.5 * (lo[k] + hi[k]);
                    if mask >> k & 1 == 0 {
                        chi[k] = m;
                    } else {
                        clo[k] = m;
                    }
                }
                (clo, chi)
            })
            .collect()
    }

    fn refine(
        &mut self,
        lo: &[f64],
        hi: &[f64],
        estimate: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadratureError<E>> {
        let depth = depth + 1;
        self.depth = self.depth.max(depth);
        if depth > self.opts.max_depth || self.cells >= self.opts.max_cells {
            return Err(QuadratureError::NotConverged {
                depth: self.depth,
                cells: self.cells,
            });
        }
        let kids = self.children(lo, hi);
        let mut parts = Vec::with_capacity(kids.len());
        for (clo, chi) in &kids {
            parts.push(self.cell(clo, chi)?);
        }
        let refined: f64 = parts.iter().sum();
        if (refined - estimate).abs() <= tol {
            return Ok(refined);
        }
        let share = tol / kids.len() as f64;
        let mut total = 0.0;
        for ((clo, chi), part) in kids.iter().zip(parts) {
            total += self.refine(clo, chi, part, share, depth)?;
        }
        Ok(total)
    }
}
