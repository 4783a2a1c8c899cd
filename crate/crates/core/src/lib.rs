//! Aggregated sentiment analysis for document streams.
//!
//! Estimates the proportion of opinion categories in an unlabeled corpus
//! directly from a labeled training set (quantification), then builds the
//! downstream analyses: daily sentiment/attention deviation series with
//! lowess trends, an event-study regression with heteroskedasticity-robust
//! standard errors, and a cross-country negative-binomial count model with
//! an exposure offset. A synthetic-data module provides generators with
//! known ground truth and brute-force reference solvers for verification.

pub mod cli;
pub mod corpus;
pub mod econometrics;
pub mod error;
pub mod events;
pub mod geo;
pub mod io;
pub mod quantifier;
pub mod rng;
pub mod series;
pub mod synth;
pub mod validate;

pub use error::{Error, Result};
