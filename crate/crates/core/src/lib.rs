//! Evaluation of judgment in panels of macroeconomic backcasts.
//!
//! The crate extracts each forecaster's judgment relative to a common
//! baseline (the cross-sectional median or mean), tests unbiasedness,
//! efficiency and accuracy of the judgment-augmented predictions, and
//! measures how persistent the judgment is with fixed-effects panel
//! regressions on unbalanced panels.
//!
//! Everything here is pure computation over in-memory data. File formats,
//! the command-line interface and parallel drivers live in the `judgebench`
//! crate.
//!
//! # `no_std` support
//!
//! The crate is `no_std` and only requires `alloc`. Floating point
//! transcendental functions come from `libm`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accuracy;
pub mod armodel;
pub mod descriptive;
mod error;
pub mod judgment;
pub mod linalg;
pub mod linreg;
pub mod panel;
pub mod panelreg;
pub mod quarter;
pub mod special;
pub mod syngen;

pub use error::{Error, Result};
pub use panel::{ActualSeries, ForecastPanel, ForecastRecord, QuarterlySeries};
pub use quarter::{Date, Quarter, QuarterRange, ReleaseKind};
