//! Adaptive sparse estimation with side information.
//!
//! The estimator splits coordinates into `K` groups by thresholding an
//! auxiliary sequence `S` at breakpoints `tau`, then soft-thresholds the
//! primary statistics `Y` inside every group with its own threshold. All
//! hyperparameters are tuned by minimizing Stein's unbiased risk estimate.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numeric
//! pieces: the shared [`kernel`], the hyperparameter search in [`tuner`],
//! the comparison [`estimators`] and the closed-form evaluators in
//! [`theory`]. Scenario generators, file formats and the command line live
//! in the companion `asus` crate.
//!
//! ```
//! use asus_core::{DataBatch, SearchConfig, tuner};
//!
//! let y = vec![0.1, -0.3, 4.0, 0.2, 5.5, -0.1, 0.05, 3.9];
//! let s = vec![0.2, 0.1, 3.0, 0.4, 2.8, 0.3, 0.2, 3.3];
//! let batch = DataBatch::new(y, vec![1.0; 8], s).unwrap();
//! let fit = tuner::fit_asus(&batch, &SearchConfig::new(2)).unwrap();
//! assert_eq!(fit.group_sizes.iter().sum::<usize>(), 8);
//! ```

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod batch;
mod error;
mod fit;
mod math;
mod search;

pub mod estimators;
pub mod kernel;
pub mod theory;
pub mod tuner;

pub use batch::{DataBatch, Grouping, HyperParams};
pub use error::{Error, Result};
pub use fit::{FitResult, GroupBasis};
pub use tuner::{HybridScale, SearchConfig};
