//! Manifold matching with a learned metric, at desk scale.
//!
//! Two small dense networks are trained alternately: a data generator that
//! pushes a latent prior onto point clouds in ambient space, and a metric
//! network whose image defines a pullback distance on that space. The
//! generator matches geometric shape descriptors of real and generated
//! sets — embedded centroids and 2-diameters — under the learned distance,
//! while the metric network separates generated points from real ones with
//! a direction-regularized triplet loss.
//!
//! The crate is organized around that loop:
//!
//! - [`space`], [`descriptors`], [`spectrum`]: sample sets, metrics (plain
//!   and pullback), Fréchet means, p-diameters, Hausdorff distance, and
//!   distance-matrix eigen diagnostics;
//! - [`net`], [`adam`]: dense networks with exact reverse-mode gradients
//!   and the optimizer;
//! - [`losses`]: every objective with analytic gradients;
//! - [`synth`]: synthetic manifold samplers and the paired degradation;
//! - [`train`]: the alternating loop and its per-epoch diagnostics;
//! - [`gradcheck`]: a finite-difference audit of all of the above;
//! - [`config`], [`io`]: run configuration and the on-disk formats.
//!
//! A narrative guide with runnable examples lives in [`guide`]; the same
//! chapters render as a book from `book/` at the repository root.

// Index-based loops are the natural idiom for the pairwise matrix math here.
#![allow(clippy::needless_range_loop)]

pub mod adam;
pub mod config;
pub mod descriptors;
pub mod error;
pub mod gradcheck;
pub mod guide;
pub mod io;
pub mod losses;
pub mod net;
pub mod space;
pub mod spectrum;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
