//! Integer-dimension Hausdorff measures built from chart volume elements.
//!
//! The crate is organised the way the construction is: scalar
//! [`expr`]essions define fields and charts, [`geometry`] turns charts into
//! volume elements, [`nets`] models Riemann-sum nets over refining
//! partitions, and [`measures`] holds both the finite model of increasing
//! nets and inductive systems of measures and the Hausdorff integrator over
//! disjoint unions of charts. [`coarea`] checks the coarea identity by
//! slicing a region into level sets.
//!
//! The `book/` directory next to the workspace explains each piece in
//! prose; its code listings are compiled and run as doc-tests of this crate.

// `!(a < b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarea;
pub mod expr;
mod extended;
pub mod geometry;
pub mod measures;
pub mod nets;
pub mod quadrature;

pub use extended::Extended;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/volume-elements.md")]
    mod volume_elements {}
    #[doc = include_str!("../../../book/src/riemann-nets.md")]
    mod riemann_nets {}
    #[doc = include_str!("../../../book/src/inductive-limits.md")]
    mod inductive_limits {}
    #[doc = include_str!("../../../book/src/area-formula.md")]
    mod area_formula {}
    #[doc = include_str!("../../../book/src/coarea.md")]
    mod coarea {}
}
