//! Periodic-orbit approximation of shift-invariant measures on sequence
//! spaces, spliced typical points with certified Birkhoff-average bounds,
//! and a finite cyclic model of the covering argument behind the ergodic
//! theorem.
//!
//! ```
//! use shiftorbit::approx::{approximate, Mode, Precision};
//! use shiftorbit::measure::WordMeasure;
//! use shiftorbit::rational::rat;
//!
//! let kappa = WordMeasure::new(2, 2, vec![rat(1, 2), rat(1, 4), rat(1, 4), rat(0, 1)])?;
//! let run = approximate(&kappa, &Precision::Denominator(4))?;
//! assert_eq!(run.point(Mode::Paper).period_word(), &[0, 0, 0, 1, 0]);
//! assert_eq!(run.paper_error.max_error, rat(1, 10));
//! assert_eq!(run.paper_error.bound, rat(1, 3));
//! assert_eq!(run.cyclic_error.max_error, rat(0, 1));
//! # Ok::<(), shiftorbit::Error>(())
//! ```

pub mod approx;
pub mod birkhoff;
pub mod cyclic;
pub mod error;
pub mod measure;
pub mod rational;
pub mod splice;
pub mod symbolic;

pub use error::{Error, Result};
pub use rational::Rational;
