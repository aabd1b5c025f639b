//! Bandwidth selection for univariate Gaussian kernel density estimates built
//! from dependent draws, such as the output of a Markov chain Monte Carlo
//! sampler.
//!
//! Standard selectors (biased cross-validation and the two Sheather-Jones
//! plug-in rules) assume independent data. Serial dependence inflates the
//! variance of a kernel estimate by the integrated autocorrelation time of
//! the kernel, and this crate offers dependence-aware counterparts of all
//! three selectors that multiply the variance term of their criteria by an
//! estimate of that inflation, `ζ̂`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel study execution live in the `depkde` crate.
//!
//! ```
//! use depkde_core::samplers::{iid_sample, TargetDistribution};
//! use depkde_core::selectors::{select, Method, SelectorConfig};
//!
//! let sample = iid_sample(&TargetDistribution::standard_normal(), 500, 7).unwrap();
//! let cfg = SelectorConfig::for_sample(Method::SjSe, &sample);
//! let chosen = select(&sample, &cfg).unwrap();
//! assert!(chosen.h > 0.1 && chosen.h < 0.6);
//! ```

#![no_std]

extern crate alloc;

pub mod density;
pub mod dependence;
mod error;
pub mod experiment;
mod fft;
pub mod kernel;
pub mod pairs;
pub mod samplers;
pub mod selectors;

pub use density::{EvaluationGrid, Sample};
pub use error::{Error, Result};
