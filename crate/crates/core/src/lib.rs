//! Dianalytic self-maps of the real projective plane `P^2 = sphere / <h>`,
//! `h(z) = -1/conj(z)`.
//!
//! The crate covers the geometry of the sphere and its antipodal quotient,
//! the standard representations of dianalytic maps (rotations, coefficient-mirrored
//! rational maps, canonical zero products, h-invariant Blaschke products),
//! rotation dynamics, basin/Julia estimation for Blaschke iteration, a small
//! declaration language and deterministic PPM rendering.

// `!(x < y)` is used on purpose where NaN must land in the failing branch
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod dsl;
pub mod dynamics;
pub mod maps;
pub mod render;
pub mod roots;
pub mod rotation;
pub mod sphere;

pub use num_complex::Complex64;
pub use sphere::{
    chordal_distance, h_involution, p2_distance, project_p2, stereographic, ExtComplex, P2Point,
};
