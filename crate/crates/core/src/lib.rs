//! Rendering engine for 360° object layouts.
//!
//! A layout is an ordered set of latent ellipses placed on the sphere. Each
//! ellipse is turned into a distance field over the equirectangular pixel
//! grid, then into an opacity field, and the opacities are alpha-composited
//! into a `W×H×d_f` feature map.
//!
//! - [`geometry`]: sphere coordinates and the pixel-to-ellipse distance.
//! - [`layout`]: object vectors, compositing, structure/style split, edits.
//! - [`grad`]: analytic derivatives of the composite and a finite-difference checker.
//! - [`imageops`]: circular padding, convolution, augmentation, perspective views.
//! - [`losses`]: scalar losses over discriminator scores and image batches.
//! - [`grid`]: the dense `W×H×C` grid type and its `PLT1` binary format.
//! - [`reference`]: literal slow implementations used as oracles.

pub mod error;
pub mod geometry;
pub mod grad;
pub mod grid;
pub mod imageops;
pub mod layout;
pub mod losses;
pub mod reference;

pub use error::{Error, Result};
pub use geometry::{EllipseParams, PolarCoord, SphereCoord, UnitVec};
pub use grid::{FieldGrid, Grid, LayoutMap};
pub use layout::{Manipulation, ObjectVector, SceneLayout};
