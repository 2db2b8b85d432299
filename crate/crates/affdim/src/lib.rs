//! Dimension theory of diagonal self-affine sets and measures, at desk
//! scale: exact or floating-point systems of contracting diagonal affine
//! maps, the dimension values attached to them (affinity and Lyapunov), the
//! separation diagnostics that decide whether those values are attained, and
//! entropy experiments on finite proxy measures that watch the predicted
//! rates appear.
//!
//! Everything is deterministic: accumulations run in canonical orders,
//! random sampling is seeded, and exact rational arithmetic backs every
//! computation whose conclusion (an overlap, a root, a lattice identity)
//! would be meaningless with rounding in it. All entropies and logarithms
//! are base 2 throughout — rates are in bits.
//!
//! The crate is organized by subject:
//!
//! - [`ifs`]: systems of maps, words, composition, Lyapunov exponents;
//! - [`dimension`]: pressure, affinity and Lyapunov dimensions, the
//!   entropy-rate constant, natural weights;
//! - [`separation`]: exact overlaps, separation profiles, the ±1/0
//!   polynomial root criterion;
//! - [`measures`]: finite atomic measures, anisotropic dyadic partitions,
//!   entropies, convolutions, Gaussian comparison;
//! - [`experiments`]: word and sampled proxy measures, entropy curves,
//!   covering counts, slice entropies;
//! - [`schema`]: the JSON system format and CSV emission.

#![forbid(unsafe_code)]

pub mod dimension;
pub mod error;
pub mod experiments;
pub mod ifs;
pub mod measures;
pub mod schema;
pub mod separation;

pub use error::{Error, Result};
