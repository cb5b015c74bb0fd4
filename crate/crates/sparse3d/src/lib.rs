//! Sparse point cloud classification with rotation- and position-invariant
//! descriptors.
//!
//! The pipeline turns a 3D object into a fixed-size set of pair/triplet
//! descriptors that are invariant to rigid motion, feeds them through a
//! shared per-descriptor MLP compressed by max-pooling into a single latent
//! vector, and trains classification and voxel reconstruction heads jointly
//! on that latent. The latent also serves as an embedding for shape
//! retrieval.
//!
//! Modules:
//! - [`geom`]: OFF meshes, surface sampling, rotations, voxel grids,
//!   synthetic shapes.
//! - [`descriptor`]: the invariant pair/triplet features and descriptor-set
//!   assembly.
//! - [`nn`]: a small dense-network substrate with hand-derived gradients.
//! - [`model`]: shared MLP + max-pool encoder with classification and
//!   reconstruction heads.
//! - [`config`], [`dataset`], [`train`], [`evaluate`], [`ablation`]: the
//!   experiment pipeline (synth4 / ModelNet40, training loop, accuracy,
//!   retrieval MAP, reconstruction IoU, ablation and sparsity sweeps).
//! - [`selftest`]: runnable invariance suites.
//! - [`cli`]: the `sparse3d` command-line front end.

pub mod ablation;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod descriptor;
pub mod error;
pub mod evaluate;
pub mod geom;
pub mod model;
pub mod nn;
pub mod seed;
pub mod selftest;
pub mod train;

pub use error::{Error, Result};
