//! Asymptotic perimeter statistics of column-built polyomino families.
//!
//! For the directed column-convex (`dcc`), column-convex (`cc`), directed
//! diagonally-convex (`dc`), staircase (`st`), escalier (`es`) and wall (`wa`)
//! families this crate computes the dominant singularity of the width/area
//! generating function, Bender's width constants, the column-size Markov
//! chain, the vertical-perimeter moments and the Gaussian law of the total
//! perimeter at large area. Exact enumeration and Monte Carlo simulation are
//! provided as independent checks.

pub mod cli;
pub mod enumerate;
pub mod error;
pub mod families;
pub mod markov;
pub mod moments;
pub mod numeric;
pub mod qseries;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use families::FamilyId;
