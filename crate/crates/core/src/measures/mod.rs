//! Measures on finite cell algebras, inductive systems of measures, and the
//! Hausdorff integrator over disjoint unions of charts.
//!
//! The finite model mirrors the measure-theoretic construction exactly: a
//! ground set is cut into finitely many labeled cells, a measure is a table
//! of nonnegative (possibly infinite) cell masses, and a net of measures is
//! indexed by an explicit finite directed set. Over such a model the
//! generalized limit of an increasing net is the per-cell supremum, and the
//! theorems about it become checkable identities.
//!
//! [`hausdorff_integrate`] is the continuous counterpart: the integral of a
//! field against `H_{m≤n}` over a finite disjoint union of charts is the sum
//! of the per-chart volume integrals.

mod area;
mod directed;
mod system;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Extended;

pub use area::{
    hausdorff_integrate, hausdorff_integrate_detailed, AreaError, AreaIntegral, DisjointManifold,
    OverlapWarning, OVERLAP_DISTANCE, OVERLAP_SAMPLES_PER_CHART,
};
pub use directed::{check_directed, DirectedViolation, Relation};
pub use system::{
    check_compatibility, generalized_limit, restriction_theorem_check, CompatibilityViolation,
    InductiveSystem, PlantedViolation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("cell index {cell} out of range for {cells} cells")]
    CellOutOfRange { cell: usize, cells: usize },
    #[error("mass of cell {cell} must be nonnegative, got {mass}")]
    NegativeMass { cell: usize, mass: f64 },
    #[error("table has {got} entries, algebra has {expected} cells")]
    TableSize { expected: usize, got: usize },
    #[error("integrand must be nonnegative; cell {cell} has {value}")]
    NegativeIntegrand { cell: usize, value: f64 },
    #[error("integrand value at cell {cell} is not finite")]
    NonFiniteIntegrand { cell: usize },
    #[error("both the positive and negative parts integrate to infinity")]
    UndefinedIntegral,
    #[error("index relation is not directed: {0}")]
    NotDirected(DirectedViolation),
    #[error("expected {expected} index entries, got {got}")]
    IndexSize { expected: usize, got: usize },
    #[error("exhaustion is not monotone: Ω[{lower}] ⊄ Ω[{upper}]")]
    OmegaNotMonotone { lower: usize, upper: usize },
    #[error("exhaustion misses cell {cell}")]
    OmegaNotExhaustive { cell: usize },
    #[error("net is not increasing at cell {cell}: μ[{lower}] > μ[{upper}]")]
    NotIncreasing {
        lower: usize,
        upper: usize,
        cell: usize,
    },
    #[error("integrand is nonzero on cell {cell} outside Ω[{index}]")]
    SupportViolation { index: usize, cell: usize },
}

/// A finite partition of the ground set into labeled cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAlgebra {
    labels: Vec<String>,
}

impl CellAlgebra {
    pub fn new(labels: Vec<String>) -> Self {
        CellAlgebra { labels }
    }

    /// Cells labeled `c0, c1, …`.
    pub fn with_cells(n: usize) -> Self {
        CellAlgebra::new((0..n).map(|i| format!("c{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn full(&self) -> CellSet {
        CellSet((0..self.len()).collect())
    }
}

/// A measurable set: a union of cells, stored as sorted cell indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellSet(Vec<usize>);

impl CellSet {
    pub fn empty() -> Self {
        CellSet(Vec::new())
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.0.binary_search(&cell).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.iter().all(|c| other.contains(c))
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        self.iter().filter(|c| other.contains(*c)).collect()
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.iter().all(|c| !other.contains(c))
    }

    /// The cells whose bit is set in `mask`.
    pub fn from_mask(mask: u64) -> CellSet {
        (0..64).filter(|k| mask >> k & 1 == 1).collect()
    }
}

impl FromIterator<usize> for CellSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        CellSet(v)
    }
}

/// A measure on a cell algebra: one mass per cell. The measure of a set is
/// the sum of its cells' masses, so finite additivity holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureTable {
    masses: Vec<Extended>,
}

impl MeasureTable {
    pub fn new(masses: Vec<Extended>) -> Result<Self, MeasureError> {
        for (cell, m) in masses.iter().enumerate() {
            match *m {
                Extended::Finite(v) if v >= 0.0 => {}
                Extended::PosInfinity => {}
                Extended::Finite(v) => return Err(MeasureError::NegativeMass { cell, mass: v }),
                Extended::NegInfinity => {
                    return Err(MeasureError::NegativeMass {
                        cell,
                        mass: f64::NEG_INFINITY,
                    })
                }
            }
        }
        Ok(MeasureTable { masses })
    }

    pub fn from_finite(masses: &[f64]) -> Result<Self, MeasureError> {
        MeasureTable::new(masses.iter().map(|&m| Extended::Finite(m)).collect())
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[Extended] {
        &self.masses
    }

    pub fn mass(&self, cell: usize) -> Extended {
        self.masses[cell]
    }

    pub fn total(&self) -> Extended {
        self.measure_cells(0..self.len())
    }

    pub fn measure(&self, set: &CellSet) -> Result<Extended, MeasureError> {
        if let Some(cell) = set.iter().find(|&c| c >= self.len()) {
            return Err(MeasureError::CellOutOfRange {
                cell,
                cells: self.len(),
            });
        }
        Ok(self.measure_cells(set.iter()))
    }

    fn measure_cells(&self, cells: impl Iterator<Item = usize>) -> Extended {
        cells.fold(Extended::ZERO, |acc, c| {
            acc.checked_add(self.masses[c])
                .expect("masses are never -inf")
        })
    }

    /// Same table with masses outside `set` set to zero.
    pub fn restricted(&self, set: &CellSet) -> MeasureTable {
        MeasureTable {
            masses: (0..self.len())
                .map(|c| {
                    if set.contains(c) {
                        self.masses[c]
                    } else {
                        Extended::ZERO
                    }
                })
                .collect(),
        }
    }
}

/// `Σ f(c) μ(c)` for a nonnegative simple function, with `0 · ∞ = 0`.
pub fn integrate_table(f: &[f64], mu: &MeasureTable) -> Result<Extended, MeasureError> {
    check_integrand(f, mu)?;
    if let Some(cell) = f.iter().position(|&v| v < 0.0) {
        return Err(MeasureError::NegativeIntegrand {
            cell,
            value: f[cell],
        });
    }
    Ok(f.iter()
        .zip(mu.masses())
        .fold(Extended::ZERO, |acc, (&v, m)| {
            acc.checked_add(m.scale(v)).expect("nonnegative terms")
        }))
}

/// Signed integral `∫ f⁺ dμ − ∫ f⁻ dμ`; undefined when both parts are infinite.
pub fn integrate_signed(f: &[f64], mu: &MeasureTable) -> Result<Extended, MeasureError> {
    check_integrand(f, mu)?;
    let pos: Vec<f64> = f.iter().map(|v| v.max(0.0)).collect();
    let neg: Vec<f64> = f.iter().map(|v| (-v).max(0.0)).collect();
    let p = integrate_table(&pos, mu)?;
    let n = integrate_table(&neg, mu)?;
    p.checked_add(n.scale(-1.0))
        .ok_or(MeasureError::UndefinedIntegral)
}

fn check_integrand(f: &[f64], mu: &MeasureTable) -> Result<(), MeasureError> {
    if f.len() != mu.len() {
        return Err(MeasureError::TableSize {
            expected: mu.len(),
            got: f.len(),
        });
    }
    if let Some(cell) = f.iter().position(|v| !v.is_finite()) {
        return Err(MeasureError::NonFiniteIntegrand { cell });
    }
    Ok(())
}
