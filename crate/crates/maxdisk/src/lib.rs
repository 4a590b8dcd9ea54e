//! Construction kit for conformal maximal disks in Lorentz-Minkowski 3-space.
//!
//! The crate builds spacelike immersions from holomorphic Weierstrass data,
//! carves polygonal labyrinths that force intrinsic distance to grow while
//! the image stays inside a shrinking region family, fits zero-free window
//! multipliers for the conformal deformations, and measures everything with
//! grid solvers so that each quantitative claim is certified numerically.
//!
//! Browse `examples/` for runnable tours of each capability; the `maxdisk`
//! binary exposes the same entry points as subcommands.

pub mod contour;
pub mod deform;
pub mod driver;
pub mod holo;
pub mod labyrinth;
pub mod lorentz;
pub mod metric;
pub mod polygon;
pub mod runge;
pub mod weierstrass;

pub use lorentz::{LVec3, Frame};
