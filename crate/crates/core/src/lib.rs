//! Learning tabletop cleaning skills from demonstrations.
//!
//! This crate is `no_std` (it needs `alloc`) and carries every algorithm of the
//! toolkit; file formats, PNG IO and the command line live in the `tabletop-lfd`
//! companion crate.
//!
//! The pipeline, in order:
//!
//! 1. [`geometry`]: estimate the homography that turns a robot camera image into
//!    the canonical bird-view virtual image, and convert between table meters and
//!    virtual pixels.
//! 2. [`augment`]: expand a demonstration set with illumination jitter, consistent
//!    image/trajectory translation and dual Perlin-noise table/background textures.
//! 3. [`perception`]: segment dirt, classify it, and predict the three reference
//!    frame origins (initial, intermediate, final) through a pluggable predictor.
//! 4. [`tpgmm`]: analytic frame orientations, TP-GMM fitting by EM and trajectory
//!    generation by Gaussian mixture regression.
//! 5. [`simulator`]: a 2D table where a sponge erases ink or pushes lentils, scored
//!    with the dirty-area (m1) and dirt-distance (m2) metrics.
//!
//! [`dataset`] ties these together with an in-memory demonstration set and a
//! synthetic demonstration generator.

#![no_std]

// Float math comes from `num_traits::Float` (libm). Once anything in the build
// graph links std, its inherent float methods shadow the trait, hence the
// `allow(unused_imports)` on those imports.
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augment;
pub mod dataset;
pub mod geometry;
pub mod image;
pub mod linalg;
pub mod perception;
pub mod seed;
pub mod simulator;
pub mod tpgmm;

pub use geometry::{Homography, Pixel, TablePoint};
pub use image::{RgbImage, VirtualImage};
pub use perception::{DirtMask, DirtType};
pub use tpgmm::{ReferenceFrame, TpGmmModel, Trajectory};
