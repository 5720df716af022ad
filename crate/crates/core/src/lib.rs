//! Benchmarking vision-based tactile sensor gels.
//!
//! * [`model`]: frames, protocols and the on-disk run format.
//! * [`metrics`]: wear (MAE) series and force-sensitivity curves.
//! * [`spatial`]: model-free spatial sensitivity from ridged surfaces.
//! * [`simulator`]: synthetic runs with known ground truth.
//!
//! ```
//! use tactile_core::metrics::mae;
//! use tactile_core::model::Frame;
//!
//! let a = Frame::filled(4, 4, 10.0)?;
//! let b = a.offset(5.0);
//! assert_eq!(mae(&b, &a)?, 5.0);
//! # Ok::<(), tactile_core::Error>(())
//! ```

pub mod error;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod spatial;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frames-and-runs.md")]
    mod frames_and_runs {}
    #[doc = include_str!("../../../book/src/wear.md")]
    mod wear {}
    #[doc = include_str!("../../../book/src/force.md")]
    mod force {}
    #[doc = include_str!("../../../book/src/spatial.md")]
    mod spatial {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
