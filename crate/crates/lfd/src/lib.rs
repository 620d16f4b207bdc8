//! File formats, dataset storage, experiments and the `tabletop-lfd` command line
//! for the [`tabletop_core`] cleaning toolkit.
//!
//! On-disk layout of a dataset directory:
//!
//! ```text
//! manifest.json
//! imgs/000.png     8-bit RGB virtual images
//! traj/000.csv     header `n,t,x,y`, one row per sample
//! ```

pub mod cli;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod parallel;
pub mod store;

pub use error::LfdError;
