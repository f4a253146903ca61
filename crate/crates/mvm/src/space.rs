//! Sample sets and the metrics they are measured with.
//!
//! A [`SampleSet`] is a finite batch of points in `R^D` carrying the uniform
//! empirical measure (each point has weight `1/k`). A [`Metric`] is either
//! the ambient Euclidean distance or the distance pulled back through an
//! embedding network: `d(x, y) = ‖g(x) − g(y)‖`.

use crate::error::{Error, Result};
use crate::net::DenseNetwork;

/// A point in ambient space; all entries finite, length fixed per experiment.
pub type Point = Vec<f64>;

/// A finite batch of points sharing one ambient dimension, with the uniform
/// empirical measure implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<Point>,
    dim: usize,
}

impl SampleSet {
    /// Validates that the batch is nonempty, dimension-consistent, and finite.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySampleSet)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("sample set", "zero-dimensional points"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(dim, p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample set"));
            }
        }
        Ok(Self { points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Coordinate-wise arithmetic mean of the batch.
    pub fn mean(&self) -> Point {
        let mut m = vec![0.0; self.dim];
        for p in &self.points {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let k = self.points.len() as f64;
        for v in &mut m {
            *v /= k;
        }
        m
    }
}

/// Distance function on ambient space: Euclidean, or Euclidean between the
/// images of an embedding network (the pullback of `d_E` through `g`).
///
/// A pullback metric borrows the network, so it sees a fixed parameter
/// snapshot; it must not be held across parameter updates.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Euclidean,
    Pullback(&'a DenseNetwork),
}

impl<'a> Metric<'a> {
    /// Distance between two points of equal dimension.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(x.len(), y.len()));
        }
        match self {
            Metric::Euclidean => Ok(euclidean(x, y)),
            Metric::Pullback(net) => {
                let gx = net.forward(x)?;
                let gy = net.forward(y)?;
                Ok(euclidean(&gx, &gy))
            }
        }
    }

    /// Maps a point into the space the distance is actually measured in
    /// (identity for Euclidean, the network image for a pullback).
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Metric::Euclidean => Ok(x.to_vec()),
            Metric::Pullback(net) => net.forward(x),
        }
    }

    /// Embeds a whole sample set; distances between the returned vectors
    /// under `d_E` equal `self.distance` on the originals.
    pub fn embed_set(&self, s: &SampleSet) -> Result<Vec<Vec<f64>>> {
        s.points().iter().map(|p| self.embed(p)).collect()
    }
}

/// Plain Euclidean distance; callers guarantee equal lengths.
pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
