//! Transportation mode inference (walk, bike, bus, driving, train) from
//! raw GPS trajectories with one-dimensional convolutional networks.
//!
//! The path from GeoLife files to predictions:
//!
//! - [`ingest`] parses `.plt` tracks and `labels.txt`, splits trips at
//!   20-minute gaps and cuts them into single-mode segments.
//! - [`kinematics`] computes speed, acceleration, jerk and bearing rate
//!   from Vincenty distances.
//! - [`pipeline`] removes outliers, smooths with Savitzky-Golay, chunks to
//!   fixed-length samples and reads and writes the TMSG sample format.
//! - [`nn`] holds the layers, loss, Adam and the TMMD model format.
//! - [`zoo`] builds configurations A to I and bagged ensembles.
//! - [`train`] has the training loop, early stopping, dropout grid search,
//!   metrics and the KNN and decision tree baselines over [`features`].
//! - [`synth`] generates labelled tracks with known sample counts.
//! - [`cli`] backs the `modewise` binary.
//!
//! Every random draw comes from [`seed::rng`], keyed by a master seed, a
//! stream tag and an index, so results do not depend on the worker count.
//!
//! Runnable examples live in `examples/`: `parse_geolife`,
//! `kinematic_channels`, `savgol_smoothing`, `build_dataset`,
//! `layer_gradients`, `model_configs`, `train_synthetic`,
//! `bagging_ensemble`, `handcrafted_baselines` and `predict_track`.

pub mod cli;
pub mod error;
pub mod features;
pub mod ingest;
pub mod kinematics;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod synth;
pub mod train;
pub mod zoo;

pub use error::{Error, Result};
