//! Semiclassical Dirac dynamics along curved domain walls.
//!
//! The crate evolves `(eps D_t + H) psi = 0` with
//! `H = [[kappa, eps(D1 - i D2)], [eps(D1 + i D2), -kappa]]` on a periodic box,
//! constructs Gaussian edge-state wavepackets and their transport correctors
//! along the interface `kappa = 0`, and measures how the two compare.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod dirac;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod gmres;
pub mod grid;
pub mod hermite;
pub mod jet;
pub mod poly;
pub mod profile;
pub mod snapshot;
pub mod straight;
pub mod transport;
pub mod wall;

pub use error::{EdgeError, Result};
pub use wall::{DerivativeBackend, DomainWall, WallDerivatives, WallFamily};
