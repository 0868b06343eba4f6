//! Möbius cameras of point configurations.
//!
//! A configuration of five points in 3-space, projected orthogonally along a
//! direction and considered up to Möbius transformations of the image plane,
//! gives a point of the moduli space `M5` of five points on the projective
//! line. Letting the direction vary over the sphere yields a rational curve in
//! `M5 ⊂ P^5`, the image of the *Möbius camera*. This crate evaluates that map,
//! computes the degree of its image exactly, reconstructs configurations from
//! it, and uses it to check necessary conditions for pentapod mobility.

pub mod camera;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod io;
pub mod moduli;
pub mod pentapod;
pub mod projective;
pub mod reconstruction;
pub mod sphere;

pub use error::{Error, Result};
