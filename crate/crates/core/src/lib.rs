//! Resolution of diagonal cyclic quotient singularities by iterated
//! weighted blow-ups, done on the toric side as star subdivisions of
//! simplicial fans, with exact arithmetic throughout.
//!
//! The modules build on each other bottom-up:
//!
//! * [`lattice`]: exact integer vectors and matrices, determinants,
//!   Hermite and Smith normal forms.
//! * [`cone`]: simplicial cones, fans and star subdivision.
//! * [`quotient`]: the cone / cyclic quotient dictionary.
//! * [`filtration`]: weighted filtrations, invariant monomials and the
//!   gluing test for weighted algebras.
//! * [`resolution`]: the blow-up loop with its termination measure and
//!   replayable traces.
//! * [`hj`]: Hirzebruch–Jung continued fractions and brute-force group
//!   oracles.
//! * [`io`]: fan and trace file formats.
//! * [`cli`]: the commands behind the `qres` binary.

pub mod cli;
pub mod cone;
pub mod error;
pub mod filtration;
pub mod hj;
pub mod io;
pub mod lattice;
pub mod quotient;
pub mod resolution;

pub use error::{Error, Result};
