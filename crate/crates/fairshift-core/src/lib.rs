//! Causal-graph-guided fair domain adaptation.
//!
//! The crate builds a pipeline out of small parts: an annotated causal DAG
//! with d-separation queries ([`graph`]), a linear-Gaussian structural causal
//! model that simulates domain shift ([`scm`]), a tabular data model with the
//! shift perturbations used in the experiments ([`data`]), hinge-loss linear
//! classifiers with an equality-of-opportunity projection ([`fair_erm`]),
//! feature-subset search under the two invariance assumptions ([`selection`]),
//! transfer metrics and source-only risk estimators ([`metrics`]), and a
//! seeded replicate engine ([`experiment`]).
//!
//! The crate is `no_std` (alloc required); all float math goes through
//! `libm` so results are bit-identical across platforms.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod experiment;
pub mod fair_erm;
pub mod graph;
pub mod logistic;
pub mod metrics;
pub mod rng;
pub mod scm;
pub mod selection;
