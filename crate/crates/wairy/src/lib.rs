//! Exact symbolic engine for quantum Airy structures realized as
//! W(gl_r)-modules of twisted bosonic modes.
//!
//! The crate is organized around an exact scalar ring (a cyclotomic field
//! with adjoined zero-mode symbols), a normal-ordered Weyl algebra of
//! bosonic modes, the twisted W-algebra mode constructors, dilaton shifts
//! and their closed-form leading parts, the classification of admissible
//! twist/shift data, a triangular solver for the free energy, and the
//! spectral-curve dictionary. Everything is exact; there is no floating
//! point in the computational core.

pub mod scalar;
pub mod partitions;
pub mod weyl;
pub mod wmodes;
pub mod dilaton;
pub mod classify;
pub mod solver;
pub mod speccurve;
pub mod verify;

pub use scalar::{CycloScalar, ScalarCtx, ScalarError};
pub use weyl::{GradedOperator, Mode, Poly, Window};
pub use wmodes::TwistSpec;
