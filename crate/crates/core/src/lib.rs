//! Shoulder presentation evaluation.
//!
//! Scores how square and level a subject's shoulders are from the two
//! shoulder landmarks of a pose estimator, and evaluates those scores against
//! human compliance labels: regression and threshold metrics, absolute-error
//! histograms, and error-versus-discard curves.
//!
//! ```
//! use spe::score::{evaluate_pose, Landmark, ShoulderObservation, SpeConfig, Status};
//!
//! let left = Landmark::new(0.7, 0.5, 0.0, 1.0).unwrap();
//! let right = Landmark::new(0.3, 0.5, 0.0, 1.0).unwrap();
//! let obs = ShoulderObservation::new(left, right);
//! let result = evaluate_pose(Some(&obs), &SpeConfig::default()).unwrap();
//! assert_eq!(result.status, Status::Ok);
//! assert_eq!(result.combined_score, 1.0);
//! ```

pub mod chart;
pub mod cli;
pub mod dataset;
pub mod edc;
pub mod error;
pub mod metrics;
pub mod score;
pub mod table;

pub use error::{DatasetError, EvalError, SpeError};
pub use score::{evaluate_pose, Landmark, ShoulderObservation, SpeConfig, SpeResult, Status};
