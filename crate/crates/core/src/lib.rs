//! Periods of pluricanonical forms on compact Riemann surfaces.

pub mod cohomology;
pub mod contour;
pub mod eichler;
pub mod error;
pub mod forms;
pub mod fuchsian;
pub mod hyperelliptic;
pub mod moebius;
pub mod polyspace;
pub mod relations;
pub mod suite;

pub use error::{Error, Result};
pub use moebius::{MoebiusMap, C64};
