use std::fmt;

use serde::{Deserialize, Serialize};

/// A finite binary relation `≼` on labeled indices, stored as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
}

/// Why a relation fails to be a directed preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectedViolation {
    /// The table is not square over the labels.
    Malformed,
    NotReflexive {
        i: usize,
    },
    /// `i ≼ j` and `j ≼ k` but not `i ≼ k`.
    NotTransitive {
        i: usize,
        j: usize,
        k: usize,
    },
    /// No `k` dominates both `i` and `j`.
    NoUpperBound {
        i: usize,
        j: usize,
    },
}

impl fmt::Display for DirectedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectedViolation::Malformed => f.write_str("relation table is not square"),
            DirectedViolation::NotReflexive { i } => {
                write!(f, "index {i} is not related to itself")
            }
            DirectedViolation::NotTransitive { i, j, k } => {
                write!(f, "{i} ≼ {j} ≼ {k} but not {i} ≼ {k}")
            }
            DirectedViolation::NoUpperBound { i, j } => {
                write!(f, "indices {i} and {j} have no common upper bound")
            }
        }
    }
}

impl Relation {
    pub fn new(labels: Vec<String>, leq: Vec<Vec<bool>>) -> Self {
        Relation { labels, leq }
    }

    /// Tabulates `leq(a, b)` over all pairs of `items`.
    ///
    /// ```
    /// use hausdorff::measures::{check_directed, Relation};
    ///
    /// // subsets of {1, 2} under inclusion, encoded as bitmasks
    /// let subsets = [0b00u8, 0b01, 0b10, 0b11];
    /// let rel = Relation::from_fn(&subsets, |a, b| a & !b == 0);
    /// assert!(check_directed(&rel).is_ok());
    /// ```
    pub fn from_fn<T: fmt::Debug>(items: &[T], leq: impl Fn(&T, &T) -> bool) -> Self {
        Relation {
            labels: items.iter().map(|x| format!("{x:?}")).collect(),
            leq: items
                .iter()
                .map(|a| items.iter().map(|b| leq(a, b)).collect())
                .collect(),
        }
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

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// `i ≼ j`.
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Indices `j` with `j ≼ i`.
    pub fn down_set(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.leq(j, i))
    }

    /// Indices dominating every other index.
    pub fn tops(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| (0..self.len()).all(|i| self.leq(i, k)))
            .collect()
    }
}

/// Checks reflexivity, then transitivity, then that every pair has an upper
/// bound. The first violation found is returned as the witness.
pub fn check_directed(rel: &Relation) -> Result<(), DirectedViolation> {
    let n = rel.len();
    if rel.leq.len() != n || rel.leq.iter().any(|row| row.len() != n) {
        return Err(DirectedViolation::Malformed);
    }
    if let Some(i) = (0..n).find(|&i| !rel.leq(i, i)) {
        return Err(DirectedViolation::NotReflexive { i });
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| rel.leq(i, j)) {
            if let Some(k) = (0..n).find(|&k| rel.leq(j, k) && !rel.leq(i, k)) {
                return Err(DirectedViolation::NotTransitive { i, j, k });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !(0..n).any(|k| rel.leq(i, k) && rel.leq(j, k)) {
                return Err(DirectedViolation::NoUpperBound { i, j });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerset_under_inclusion_is_directed() {
        let subsets = [0b00u8, 0b01, 0b10, 0b11];
        let rel = Relation::from_fn(&subsets, |a, b| a & !b == 0);
        assert_eq!(check_directed(&rel), Ok(()));
        assert_eq!(rel.tops(), vec![3]);
    }

    #[test]
    fn two_chains_have_two_infinities() {
        // {0,1} × {a < b}, comparable only within the same chain
        let items = [(0, 'a'), (0, 'b'), (1, 'a'), (1, 'b')];
        let rel = Relation::from_fn(&items, |x, y| x.0 == y.0 && x.1 <= y.1);
        let v = check_directed(&rel).unwrap_err();
        assert_eq!(v, DirectedViolation::NoUpperBound { i: 0, j: 2 });
        if let DirectedViolation::NoUpperBound { i, j } = v {
            assert_eq!((rel.label(i), rel.label(j)), ("(0, 'a')", "(1, 'a')"));
        }
    }

    #[test]
    fn singleton_is_directed() {
        let rel = Relation::from_fn(&[()], |_, _| true);
        assert_eq!(check_directed(&rel), Ok(()));
    }

    #[test]
    fn other_violations() {
        let rel = Relation::new(
            vec!["a".into(), "b".into()],
            vec![vec![true, true], vec![false, false]],
        );
        assert_eq!(
            check_directed(&rel),
            Err(DirectedViolation::NotReflexive { i: 1 })
        );
        let items = [0, 1, 2];
        // 0 ≼ 1 ≼ 2 without 0 ≼ 2
        let rel = Relation::from_fn(&items, |a, b| a == b || b - a == 1);
        assert_eq!(
            check_directed(&rel),
            Err(DirectedViolation::NotTransitive { i: 0, j: 1, k: 2 })
        );
        let rel = Relation::new(vec!["a".into()], vec![vec![true, true]]);
        assert_eq!(check_directed(&rel), Err(DirectedViolation::Malformed));
    }

    #[test]
    fn preorders_with_ties_are_fine() {
        let rel = Relation::from_fn(&[1, 2, 3], |_, _| true);
        assert_eq!(check_directed(&rel), Ok(()));
        assert_eq!(rel.tops(), vec![0, 1, 2]);
    }
}
