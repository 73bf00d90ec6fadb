//! Exact engine for reduced one-dimensional complete local rings.

#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod curve_ring;
pub mod endo;
pub mod error;
pub mod field;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod polymat;
pub mod resolver;
pub mod series;
pub mod suite;

pub use chain::{ChainTree, EFamily};
pub use curve_ring::{CurveRing, RingOptions, RingReport};
pub use error::{Error, Result};
pub use field::{FieldSpec, Scalar};
pub use lattice::{hom_lattice, AmbVec, HomLattice, Lattice, LatticeMap, Sublattice};
pub use series::{BranchVector, LaurentPoly};
