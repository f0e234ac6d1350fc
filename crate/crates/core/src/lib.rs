//! Numerical laboratory for a shear/overshear automorphism of C^2 with a
//! parabolic cylinder: the map itself, its normalizing coordinate changes,
//! orbit asymptotics, Fatou coordinates and basin rasters.

pub mod error;
pub mod numeric;

pub use error::{Error, Result};
pub mod rotation;
pub mod maps;
pub mod conjugation;
pub mod orbits;
pub mod fatou;

#[cfg(test)]
mod testutil;
