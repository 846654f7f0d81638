//! Exact matrix elements of unitary irreducible representations of U(n) in
//! Gelfand-Zetlin and weight bases, the symplectic geometry of the matching
//! coadjoint orbits, and the semiclassical formulas relating the two.

pub mod bergman;
pub mod cache;
pub mod combinatorics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hp;
pub mod intersect;
pub mod linalg;
pub mod monomial;
pub mod predict;
pub mod radical;
pub mod representation;
pub mod sparse;

pub use error::{GzError, Result};
