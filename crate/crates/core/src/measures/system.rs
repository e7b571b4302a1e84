use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_directed, integrate_table, CellAlgebra, CellSet, MeasureError, MeasureTable, Relation,
};
use crate::Extended;

/// An increasing net of measures `(μᵢ)` over a finite directed index,
/// together with an exhaustion `Ωᵢ ↗ Ω`.
///
/// Construction checks that the index is directed, that `i ≼ j` implies
/// `Ωᵢ ⊆ Ωⱼ` and `μᵢ ≤ μⱼ` cellwise, and that the `Ωᵢ` cover every cell.
/// Compatibility is deliberately not enforced here; see
/// [`check_compatibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct InductiveSystem {
    algebra: CellAlgebra,
    index: Relation,
    omegas: Vec<CellSet>,
    measures: Vec<MeasureTable>,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    cells: Vec<String>,
    index: Relation,
    omegas: Vec<CellSet>,
    measures: Vec<Vec<Extended>>,
}

impl TryFrom<SystemRepr> for InductiveSystem {
    type Error = MeasureError;

    fn try_from(r: SystemRepr) -> Result<Self, Self::Error> {
        let measures = r
            .measures
            .into_iter()
            .map(MeasureTable::new)
            .collect::<Result<Vec<_>, _>>()?;
        InductiveSystem::new(CellAlgebra::new(r.cells), r.index, r.omegas, measures)
    }
}

impl From<InductiveSystem> for SystemRepr {
    fn from(s: InductiveSystem) -> Self {
        SystemRepr {
            cells: s.algebra.labels().to_vec(),
            index: s.index,
            omegas: s.omegas,
            measures: s
                .measures
                .into_iter()
                .map(|m| m.masses().to_vec())
                .collect(),
        }
    }
}

/// A failure of `μᵢ(A ∩ Ωⱼ) = μⱼ(A ∩ Ωⱼ)` for `j ≼ i`, witnessed by a
/// single cell of `Ωⱼ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityViolation {
    pub i: usize,
    pub j: usize,
    pub cell: usize,
    pub mass_i: Extended,
    pub mass_j: Extended,
}

/// Where a violation was planted by [`InductiveSystem::plant_violation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedViolation {
    /// The lower index whose exhaustion contains `cell`.
    pub j: usize,
    pub cell: usize,
}

impl InductiveSystem {
    pub fn new(
        algebra: CellAlgebra,
        index: Relation,
        omegas: Vec<CellSet>,
        measures: Vec<MeasureTable>,
    ) -> Result<Self, MeasureError> {
        check_directed(&index).map_err(MeasureError::NotDirected)?;
        let n = index.len();
        for got in [omegas.len(), measures.len()] {
            if got != n {
                return Err(MeasureError::IndexSize { expected: n, got });
            }
        }
        let cells = algebra.len();
        for m in &measures {
            if m.len() != cells {
                return Err(MeasureError::TableSize {
                    expected: cells,
                    got: m.len(),
                });
            }
        }
        for o in &omegas {
            if let Some(cell) = o.iter().find(|&c| c >= cells) {
                return Err(MeasureError::CellOutOfRange { cell, cells });
            }
        }
        for lower in 0..n {
            for upper in (0..n).filter(|&u| index.leq(lower, u)) {
                if !omegas[lower].is_subset(&omegas[upper]) {
                    return Err(MeasureError::OmegaNotMonotone { lower, upper });
                }
                if let Some(cell) =
                    (0..cells).find(|&c| measures[lower].mass(c) > measures[upper].mass(c))
                {
                    return Err(MeasureError::NotIncreasing { lower, upper, cell });
                }
            }
        }
        if let Some(cell) = (0..cells).find(|&c| !omegas.iter().any(|o| o.contains(c))) {
            return Err(MeasureError::OmegaNotExhaustive { cell });
        }
        Ok(InductiveSystem {
            algebra,
            index,
            omegas,
            measures,
        })
    }

    /// Each `μᵢ` is `master` restricted to `Ωᵢ`. Always compatible.
    pub fn from_master(
        algebra: CellAlgebra,
        index: Relation,
        omegas: Vec<CellSet>,
        master: &MeasureTable,
    ) -> Result<Self, MeasureError> {
        let measures = omegas.iter().map(|o| master.restricted(o)).collect();
        InductiveSystem::new(algebra, index, omegas, measures)
    }

    pub fn algebra(&self) -> &CellAlgebra {
        &self.algebra
    }

    pub fn index(&self) -> &Relation {
        &self.index
    }

    pub fn omega(&self, i: usize) -> &CellSet {
        &self.omegas[i]
    }

    pub fn measure(&self, i: usize) -> &MeasureTable {
        &self.measures[i]
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// A random compatible system with `1..=max_cells` cells and
    /// `1..=max_index` indices.
    ///
    /// The index is a random preorder closed transitively with a forced top,
    /// so it is directed. Each cell enters the exhaustion at a random index
    /// `e(c)`, giving `Ωᵢ = {c : e(c) ≼ i}`. On `Ωᵢ` the measure is a master
    /// table `λ`; off it, `μᵢ(c) = λ(c)·|↓i|/16`, which grows along `≼` and
    /// never reaches `λ(c)`. All masses are dyadic rationals, so sums of up
    /// to 16 of them are exact in `f64`.
    pub fn random_compatible<R: Rng + ?Sized>(
        rng: &mut R,
        max_cells: usize,
        max_index: usize,
    ) -> InductiveSystem {
        assert!(max_cells >= 1 && (1..=15).contains(&max_index));
        let cells = rng.random_range(1..=max_cells);
        let n = rng.random_range(1..=max_index);
        let top = n - 1;
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
            row[top] = true;
            for (j, entry) in row.iter_mut().enumerate() {
                if i != j && rng.random_bool(if i < j { 0.3 } else { 0.05 }) {
                    *entry = true;
                }
            }
        }
        // transitive closure (Floyd–Warshall)
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    let row_k = leq[k].clone();
                    for (entry, &via) in leq[i].iter_mut().zip(&row_k) {
                        *entry |= via;
                    }
                }
            }
        }
        let index = Relation::new((0..n).map(|i| format!("i{i}")).collect(), leq);
        let entry: Vec<usize> = (0..cells).map(|_| rng.random_range(0..n)).collect();
        let omegas: Vec<CellSet> = (0..n)
            .map(|i| (0..cells).filter(|&c| index.leq(entry[c], i)).collect())
            .collect();
        let master: Vec<f64> = (0..cells)
            .map(|_| f64::from(rng.random_range(0..=1u32 << 20)) / 1024.0)
            .collect();
        let measures = (0..n)
            .map(|i| {
                let weight = index.down_set(i).count() as f64 / 16.0;
                let masses = (0..cells)
                    .map(|c| {
                        if omegas[i].contains(c) {
                            master[c]
                        } else {
                            master[c] * weight
                        }
                    })
                    .collect::<Vec<_>>();
                MeasureTable::from_finite(&masses).expect("nonnegative masses")
            })
            .collect();
        InductiveSystem::new(CellAlgebra::with_cells(cells), index, omegas, measures)
            .expect("generator produces valid systems")
    }

    /// Breaks compatibility while keeping the net increasing.
    ///
    /// Picks an index `j` outside the top class and a cell of `Ωⱼ`, then adds
    /// mass to that cell in every top index. Returns `None` when no such
    /// pair exists (e.g. a single index).
    pub fn plant_violation<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Option<(InductiveSystem, PlantedViolation)> {
        let tops = self.index.tops();
        let candidates: Vec<(usize, usize)> = (0..self.len())
            .filter(|j| !tops.contains(j))
            .flat_map(|j| self.omegas[j].iter().map(move |c| (j, c)))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let (j, cell) = candidates[rng.random_range(0..candidates.len())];
        let bump = f64::from(rng.random_range(1..=64u32)) / 64.0;
        let mut planted = self.clone();
        for &k in &tops {
            let mut masses = planted.measures[k].masses().to_vec();
            masses[cell] = masses[cell]
                .checked_add(Extended::Finite(bump))
                .expect("finite");
            planted.measures[k] = MeasureTable::new(masses).expect("still nonnegative");
        }
        Some((planted, PlantedViolation { j, cell }))
    }
}

/// Verifies the compatibility condition for every comparable pair `j ≼ i`.
///
/// Measures are additive over cells, so `μᵢ(A ∩ Ωⱼ) = μⱼ(A ∩ Ωⱼ)` for all
/// unions of cells `A` holds exactly when it holds for each single cell of
/// `Ωⱼ`; the check runs over cells and is exact for any algebra size.
pub fn check_compatibility(s: &InductiveSystem) -> Result<(), CompatibilityViolation> {
    for i in 0..s.len() {
        for j in (0..s.len()).filter(|&j| j != i && s.index.leq(j, i)) {
            for cell in s.omegas[j].iter() {
                let (mass_i, mass_j) = (s.measures[i].mass(cell), s.measures[j].mass(cell));
                if mass_i != mass_j {
                    return Err(CompatibilityViolation {
                        i,
                        j,
                        cell,
                        mass_i,
                        mass_j,
                    });
                }
            }
        }
    }
    Ok(())
}

/// The limit measure `ν(E) = supᵢ μᵢ(E)`, computed per cell.
pub fn generalized_limit(s: &InductiveSystem) -> MeasureTable {
    let masses = (0..s.algebra.len())
        .map(|c| {
            s.measures
                .iter()
                .map(|m| m.mass(c))
                .fold(Extended::ZERO, Extended::max)
        })
        .collect();
    MeasureTable::new(masses).expect("maxima of nonnegative masses")
}

/// For `f ≥ 0` vanishing outside `Ω_{i0}`, checks `∫ f dμ = ∫ f dμ_{i0}` to
/// `1e-12` relative, `μ` being the generalized limit.
pub fn restriction_theorem_check(
    s: &InductiveSystem,
    f: &[f64],
    i0: usize,
) -> Result<bool, MeasureError> {
    if i0 >= s.len() {
        return Err(MeasureError::IndexSize {
            expected: s.len(),
            got: i0 + 1,
        });
    }
    if f.len() != s.algebra.len() {
        return Err(MeasureError::TableSize {
            expected: s.algebra.len(),
            got: f.len(),
        });
    }
    if let Some(cell) = (0..f.len()).find(|&c| f[c] != 0.0 && !s.omegas[i0].contains(c)) {
        return Err(MeasureError::SupportViolation { index: i0, cell });
    }
    let limit = integrate_table(f, &generalized_limit(s))?;
    let local = integrate_table(f, &s.measures[i0])?;
    Ok(match (limit, local) {
        (Extended::Finite(a), Extended::Finite(b)) => (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
        (a, b) => a == b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Extended::*;

    fn chain(n: usize) -> Relation {
        let items: Vec<usize> = (0..n).collect();
        Relation::from_fn(&items, |a, b| a <= b)
    }

    #[test]
    fn master_restrictions_are_compatible() {
        let master = MeasureTable::from_finite(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let omegas = vec![
            CellSet::from_iter([0]),
            CellSet::from_iter([0, 1, 2]),
            CellSet::from_iter([0, 1, 2, 3]),
        ];
        let s = InductiveSystem::from_master(CellAlgebra::with_cells(4), chain(3), omegas, &master)
            .unwrap();
        assert_eq!(check_compatibility(&s), Ok(()));
        assert_eq!(generalized_limit(&s), master);
    }

    #[test]
    fn perturbation_is_caught_with_witness() {
        let master = MeasureTable::from_finite(&[1.0, 2.0]).unwrap();
        let omegas = vec![CellSet::from_iter([0]), CellSet::from_iter([0, 1])];
        let s = InductiveSystem::from_master(
            CellAlgebra::with_cells(2),
            chain(2),
            omegas.clone(),
            &master,
        )
        .unwrap();
        let mut measures = vec![s.measure(0).clone(), s.measure(1).clone()];
        measures[1] = MeasureTable::from_finite(&[1.5, 2.0]).unwrap();
        let bad =
            InductiveSystem::new(CellAlgebra::with_cells(2), chain(2), omegas, measures).unwrap();
        let v = check_compatibility(&bad).unwrap_err();
        assert_eq!((v.i, v.j, v.cell), (1, 0, 0));
    }

    #[test]
    fn single_index_is_vacuously_compatible() {
        let master = MeasureTable::from_finite(&[0.25, 7.0]).unwrap();
        let s = InductiveSystem::from_master(
            CellAlgebra::with_cells(2),
            chain(1),
            vec![CellSet::from_iter([0, 1])],
            &master,
        )
        .unwrap();
        assert_eq!(check_compatibility(&s), Ok(()));
        assert_eq!(generalized_limit(&s), master);
    }

    #[test]
    fn geometric_chain_limit() {
        let lambda = [1.0, 3.0, 0.5];
        let measures: Vec<MeasureTable> = (1..=10)
            .map(|i| {
                let s = 1.0 - 2f64.powi(-i);
                MeasureTable::from_finite(&lambda.map(|l| s * l)).unwrap()
            })
            .collect();
        let all = CellSet::from_iter(0..3);
        let s = InductiveSystem::new(
            CellAlgebra::with_cells(3),
            chain(10),
            vec![all; 10],
            measures,
        )
        .unwrap();
        let expected = lambda.map(|l| (1.0 - 2f64.powi(-10)) * l);
        assert_eq!(
            generalized_limit(&s),
            MeasureTable::from_finite(&expected).unwrap()
        );
    }

    #[test]
    fn infinite_masses_survive_the_limit() {
        let all = CellSet::from_iter(0..2);
        let measures = vec![
            MeasureTable::new(vec![Finite(1.0), Finite(1.0)]).unwrap(),
            MeasureTable::new(vec![Finite(1.0), PosInfinity]).unwrap(),
        ];
        let s = InductiveSystem::new(
            CellAlgebra::with_cells(2),
            chain(2),
            vec![all.clone(), all],
            measures,
        )
        .unwrap();
        assert_eq!(generalized_limit(&s).masses(), &[Finite(1.0), PosInfinity]);
    }

    #[test]
    fn construction_rejects_bad_systems() {
        let all = CellSet::from_iter(0..2);
        let m = MeasureTable::from_finite(&[1.0, 1.0]).unwrap();
        let small = MeasureTable::from_finite(&[0.5, 1.0]).unwrap();
        assert!(matches!(
            InductiveSystem::new(
                CellAlgebra::with_cells(2),
                chain(2),
                vec![all.clone(), all.clone()],
                vec![m.clone(), small.clone()]
            ),
            Err(MeasureError::NotIncreasing {
                lower: 0,
                upper: 1,
                cell: 0
            })
        ));
        assert!(matches!(
            InductiveSystem::new(
                CellAlgebra::with_cells(2),
                chain(2),
                vec![all.clone(), CellSet::from_iter([0])],
                vec![small.clone(), m.clone()]
            ),
            Err(MeasureError::OmegaNotMonotone { lower: 0, upper: 1 })
        ));
        assert!(matches!(
            InductiveSystem::new(
                CellAlgebra::with_cells(2),
                chain(1),
                vec![CellSet::from_iter([1])],
                vec![m.clone()]
            ),
            Err(MeasureError::OmegaNotExhaustive { cell: 0 })
        ));
        let two_chains = Relation::from_fn(&[(0, 0), (1, 0)], |a, b| a == b);
        assert!(matches!(
            InductiveSystem::new(
                CellAlgebra::with_cells(2),
                two_chains,
                vec![all.clone(), all],
                vec![m.clone(), m]
            ),
            Err(MeasureError::NotDirected(_))
        ));
    }

    #[test]
    fn restriction_preconditions() {
        let master = MeasureTable::from_finite(&[1.0, 2.0]).unwrap();
        let omegas = vec![CellSet::from_iter([0]), CellSet::from_iter([0, 1])];
        let s = InductiveSystem::from_master(CellAlgebra::with_cells(2), chain(2), omegas, &master)
            .unwrap();
        assert_eq!(restriction_theorem_check(&s, &[0.0, 0.0], 0), Ok(true));
        assert_eq!(restriction_theorem_check(&s, &[3.0, 0.0], 0), Ok(true));
        assert!(matches!(
            restriction_theorem_check(&s, &[0.0, 1.0], 0),
            Err(MeasureError::SupportViolation { index: 0, cell: 1 })
        ));
    }

    /// Brute-force oracle: the compatibility equation over every union of
    /// cells, not just single cells.
    fn compatible_by_enumeration(s: &InductiveSystem) -> bool {
        let cells = s.algebra().len();
        for i in 0..s.len() {
            for j in (0..s.len()).filter(|&j| s.index().leq(j, i)) {
                for mask in 0..1u64 << cells {
                    let a = CellSet::from_mask(mask).intersection(s.omega(j));
                    if s.measure(i).measure(&a).unwrap() != s.measure(j).measure(&a).unwrap() {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn cellwise_check_agrees_with_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = InductiveSystem::random_compatible(&mut rng, 8, 6);
            assert!(check_compatibility(&s).is_ok());
            assert!(compatible_by_enumeration(&s));
            if let Some((bad, _)) = s.plant_violation(&mut rng) {
                assert!(check_compatibility(&bad).is_err());
                assert!(!compatible_by_enumeration(&bad));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = InductiveSystem::random_compatible(&mut rng, 6, 4);
        let text = serde_json::to_string(&s).unwrap();
        let back: InductiveSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        // validation runs on the way in
        let broken = text.replace("\"omegas\":[", "\"omegas\":[[],");
        assert!(serde_json::from_str::<InductiveSystem>(&broken).is_err());
    }
}
