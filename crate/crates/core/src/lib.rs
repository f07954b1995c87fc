//! Active information seeking on a synthetic guessing game.
//!
//! A seeker asks yes/no attribute questions about a hidden target object. Its
//! questioning policy is represented by an ensemble of softmax-linear policy
//! particles moved by Stein variational gradient descent toward a
//! reward-weighted posterior. An internal answerer model predicts the
//! oracle's replies and prices each candidate question by an optimistic
//! bound on the gain its answer would bring; that bound is both the
//! intrinsic reward during training and the query-selection criterion at
//! inference.
//!
//! Module map:
//! - [`domain`]: schemas, scenes, queries, answers, featurized dialog state
//! - [`policy`]: softmax-linear particles and their score function
//! - [`svgd`]: RBF kernel, median bandwidth and the Stein update
//! - [`answerer`]: the imitation model `p(a | q, s; omega)`
//! - [`executor`]: exact consistency filtering over candidates
//! - [`gain`]: utilities, gain bound, reward shaping and query selection
//! - [`env`]: scene generation, oracle and episodes
//! - [`rl`]: rollouts, baselined REINFORCE, posterior gradient, training
//! - [`harness`], [`config`], [`metrics`], [`checkpoint`], [`bench`]: runs and artifacts

pub mod answerer;
pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod domain;
pub mod env;
pub mod error;
pub mod executor;
pub mod gain;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod rl;
pub mod svgd;

pub use error::{Error, Result};
