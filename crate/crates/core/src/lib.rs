//! Driver drowsiness detection from vehicle dynamics.
//!
//! Sessions of steering, speed, acceleration and lane signals are cut into
//! windows, labeled from concurrent EEG or from detection-response-task
//! events, turned into feature vectors and classified.

pub mod dataset;
pub mod error;
pub mod features;
pub mod labeling;
pub mod models;
pub mod multiwavelet;
pub mod pipeline;
pub mod selection;
pub mod signal;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
