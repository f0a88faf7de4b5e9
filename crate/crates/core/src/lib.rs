//! Feeder-level EV charging detection.
//!
//! The pipeline turns an aggregate feeder load series into per-minute
//! sliding-window features ([`features`]), trains tree ensembles on them
//! ([`trees`]), and scores detections against ground truth ([`eval`]).
//! [`synth`] generates labelled household and feeder data to run it on.

pub mod eval;
pub mod features;
pub mod par;
pub mod seeding;
pub mod series;
pub mod synth;
pub mod trees;
