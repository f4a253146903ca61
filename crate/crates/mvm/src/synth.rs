//! Synthetic manifold samplers and the paired linear degradation used by
//! the supervised task.
//!
//! Every sampler is a deterministic function of its spec, the batch size,
//! and an explicit seed. When the ambient dimension exceeds the manifold's
//! natural dimension, points are zero-padded and rotated by a fixed seeded
//! rotation so the embedding is not axis-aligned.

use crate::error::{Error, Result};
use crate::space::SampleSet;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Supported synthetic manifolds with their shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldKind {
    Circle { radius: f64 },
    Sphere { radius: f64 },
    Helix { radius: f64, pitch: f64, turns: f64 },
    SwissRoll { scale: f64 },
}

impl ManifoldKind {
    /// Dimension the manifold naturally lives in.
    pub fn natural_dim(&self) -> usize {
        match self {
            ManifoldKind::Circle { .. } => 2,
            _ => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Circle { .. } => "circle",
            ManifoldKind::Sphere { .. } => "sphere",
            ManifoldKind::Helix { .. } => "helix",
            ManifoldKind::SwissRoll { .. } => "swiss_roll",
        }
    }
}

/// A manifold, the ambient space it is embedded in, and the Gaussian tube
/// width around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub ambient_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ManifoldSpec {
    fn validate(&self) -> Result<()> {
        if self.ambient_dim < self.kind.natural_dim() {
            return Err(Error::invalid(
                "manifold spec",
                format!(
                    "{} needs ambient dimension >= {}, got {}",
                    self.kind.name(),
                    self.kind.natural_dim(),
                    self.ambient_dim
                ),
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::invalid("noise_sigma", self.noise_sigma.to_string()));
        }
        let positive = match self.kind {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere { radius } => radius > 0.0,
            ManifoldKind::Helix { radius, pitch, turns } => {
                radius > 0.0 && pitch > 0.0 && turns > 0.0
            }
            ManifoldKind::SwissRoll { scale } => scale > 0.0,
        };
        if !positive {
            return Err(Error::invalid("manifold spec", "non-positive shape parameter"));
        }
        Ok(())
    }
}

/// Standard-Gaussian prior on the generator's latent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub latent_dim: usize,
}

/// Sampler with the embedding rotation precomputed, for repeated batches.
#[derive(Debug, Clone)]
pub struct ManifoldSampler {
    spec: ManifoldSpec,
    // None when the manifold already fills the ambient dimension.
    rotation: Option<Vec<Vec<f64>>>,
}

impl ManifoldSampler {
    pub fn new(spec: ManifoldSpec) -> Result<Self> {
        spec.validate()?;
        let rotation = if spec.ambient_dim > spec.kind.natural_dim() {
            // The rotation is part of the embedding, so it depends on the
            // spec seed only, never on the batch stream.
            Some(seeded_rotation(spec.ambient_dim, spec.seed ^ 0x9e37_79b9))
        } else {
            None
        };
        Ok(Self { spec, rotation })
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    /// Draws `k` points from the caller's stream: uniform on the manifold
    /// parameterization plus isotropic Gaussian noise of width `noise_sigma`.
    pub fn sample_rng(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<SampleSet> {
        if k == 0 {
            return Err(Error::EmptySampleSet);
        }
        let d = self.spec.ambient_dim;
        let mut points = Vec::with_capacity(k);
        for _ in 0..k {
            let mut p = vec![0.0; d];
            let natural = self.on_manifold(rng);
            p[..natural.len()].copy_from_slice(&natural);
            if let Some(q) = &self.rotation {
                p = mat_vec(q, &p);
            }
            if self.spec.noise_sigma > 0.0 {
                for v in &mut p {
                    let n: f64 = StandardNormal.sample(rng);
                    *v += self.spec.noise_sigma * n;
                }
            }
            points.push(p);
        }
        SampleSet::new(points)
    }

    fn on_manifold(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.spec.kind {
            ManifoldKind::Circle { radius } => {
                let theta = rng.random_range(0.0..2.0 * PI);
                vec![radius * theta.cos(), radius * theta.sin()]
            }
            ManifoldKind::Sphere { radius } => {
                // Uniform area measure: z uniform, azimuth uniform.
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi = rng.random_range(0.0..2.0 * PI);
                let s = (1.0 - z * z).sqrt();
                vec![radius * s * phi.cos(), radius * s * phi.sin(), radius * z]
            }
            ManifoldKind::Helix { radius, pitch, turns } => {
                let t = rng.random_range(0.0..2.0 * PI * turns);
                vec![radius * t.cos(), radius * t.sin(), pitch * t / (2.0 * PI)]
            }
            ManifoldKind::SwissRoll { scale } => {
                let t = rng.random_range(1.5 * PI..4.5 * PI);
                let h: f64 = rng.random_range(-1.0..1.0);
                let r = t / (4.5 * PI);
                vec![scale * r * t.cos(), scale * h, scale * r * t.sin()]
            }
        }
    }
}

/// One-shot sampling seeded from the spec itself.
pub fn sample_manifold(spec: &ManifoldSpec, k: usize) -> Result<SampleSet> {
    let sampler = ManifoldSampler::new(*spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    sampler.sample_rng(k, &mut rng)
}

/// `k` standard-Gaussian latent vectors, deterministic under the seed.
pub fn sample_prior(spec: &PriorSpec, k: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_prior_rng(spec, k, &mut rng)
}

/// Prior sampling from a caller-provided stream.
pub fn sample_prior_rng(spec: &PriorSpec, k: usize, rng: &mut ChaCha8Rng) -> Result<SampleSet> {
    if k == 0 {
        return Err(Error::EmptySampleSet);
    }
    if spec.latent_dim == 0 {
        return Err(Error::invalid("prior", "latent dimension must be >= 1"));
    }
    let points = (0..k)
        .map(|_| {
            (0..spec.latent_dim)
                .map(|_| StandardNormal.sample(rng))
                .collect()
        })
        .collect();
    SampleSet::new(points)
}

/// Fixed linear map to a strictly lower dimension, the degradation of the
/// supervised task.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: Vec<Vec<f64>>, // D' × D
}

impl Projection {
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || rows >= cols {
            return Err(Error::invalid(
                "projection",
                format!("{rows}×{cols} does not reduce dimension"),
            ));
        }
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("projection", "ragged matrix"));
        }
        Ok(Self { matrix })
    }

    /// Coordinate-deletion projection keeping the listed indices, in order.
    pub fn keep_coords(keep: &[usize], ambient_dim: usize) -> Result<Self> {
        if keep.is_empty() || keep.len() >= ambient_dim {
            return Err(Error::invalid(
                "projection",
                format!("keeping {} of {ambient_dim} coordinates", keep.len()),
            ));
        }
        let mut matrix = vec![vec![0.0; ambient_dim]; keep.len()];
        for (row, &idx) in matrix.iter_mut().zip(keep) {
            if idx >= ambient_dim {
                return Err(Error::invalid("projection", format!("index {idx} out of range")));
            }
            row[idx] = 1.0;
        }
        Ok(Self { matrix })
    }

    pub fn input_dim(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(x.len(), self.input_dim()));
        }
        Ok(mat_vec(&self.matrix, x))
    }
}

/// Degrades a batch: `x_L = P·x + noise`, index-paired with the source.
pub fn degrade(
    x: &SampleSet,
    projection: &Projection,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleSet> {
    if x.dim() != projection.input_dim() {
        return Err(Error::DimensionMismatch(x.dim(), projection.input_dim()));
    }
    let mut points = Vec::with_capacity(x.len());
    for p in x.points() {
        let mut low = projection.apply(p)?;
        if noise_sigma > 0.0 {
            for v in &mut low {
                let n: f64 = StandardNormal.sample(rng);
                *v += noise_sigma * n;
            }
        }
        points.push(low);
    }
    SampleSet::new(points)
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

// Haar-style random rotation: QR of a Gaussian matrix with column signs
// fixed, then determinant forced to +1.
fn seeded_rotation(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..dim {
            q[(i, dim - 1)] = -q[(i, dim - 1)];
        }
    }
    (0..dim)
        .map(|i| (0..dim).map(|j| q[(i, j)]).collect())
        .collect()
}
