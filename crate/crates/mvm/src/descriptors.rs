//! Geometric shape descriptors of sample sets: discrete Fréchet mean,
//! embedded centroids, p-diameter, and Hausdorff distance.
//!
//! All descriptors are defined against a [`Metric`], so the same code paths
//! serve the ambient Euclidean view and the learned pullback view.

use crate::error::{Error, Result};
use crate::net::DenseNetwork;
use crate::space::{euclidean, Metric, SampleSet};

/// Index of the point of `s` minimizing the summed squared distance to the
/// rest of the set, `F(i) = Σ_j d²(x_i, x_j)`. Ties break to the smallest
/// index so the result is deterministic.
pub fn frechet_mean_discrete(s: &SampleSet, metric: &Metric) -> Result<usize> {
    let k = s.len();
    // Pairwise distances once; F sums squares over each row.
    let mut best = (0usize, f64::INFINITY);
    for i in 0..k {
        let mut cost = 0.0;
        for j in 0..k {
            let d = metric.distance(s.point(i), s.point(j))?;
            cost += d * d;
        }
        if cost < best.1 {
            best = (i, cost);
        }
    }
    Ok(best.0)
}

/// Arithmetic mean of the embedded set `{g(x) : x ∈ s}`.
pub fn embedded_centroid(s: &SampleSet, embedding: &DenseNetwork) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; embedding.output_dim()];
    for p in s.points() {
        let e = embedding.forward(p)?;
        for (acc, v) in mean.iter_mut().zip(&e) {
            *acc += v;
        }
    }
    let k = s.len() as f64;
    for v in &mut mean {
        *v /= k;
    }
    Ok(mean)
}

/// Euclidean distance between the embedded centroids of two sets. Under a
/// pullback metric this equals the learned distance between the sets'
/// Fréchet means.
pub fn centroid_distance(
    s_real: &SampleSet,
    s_fake: &SampleSet,
    embedding: &DenseNetwork,
) -> Result<f64> {
    if s_real.dim() != s_fake.dim() {
        return Err(Error::DimensionMismatch(s_real.dim(), s_fake.dim()));
    }
    let a = embedded_centroid(s_real, embedding)?;
    let b = embedded_centroid(s_fake, embedding)?;
    Ok(euclidean(&a, &b))
}

/// Empirical p-diameter: `((1/k²) Σ_i Σ_j d(x_i, x_j)^p)^(1/p)` over all
/// ordered pairs, diagonal included.
///
/// For p > 32 the sum is accumulated on ratios `d/d_max` so that `d^p`
/// cannot overflow.
pub fn p_diameter(s: &SampleSet, metric: &Metric, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid("p", format!("{p} < 1")));
    }
    let k = s.len();
    let mut dists = Vec::with_capacity(k * (k - 1) / 2);
    let mut d_max = 0.0_f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = metric.distance(s.point(i), s.point(j))?;
            d_max = d_max.max(d);
            dists.push(d);
        }
    }
    if d_max == 0.0 {
        return Ok(0.0);
    }
    let kk = (k * k) as f64;
    if p == 2.0 {
        let sum: f64 = dists.iter().map(|d| 2.0 * d * d).sum();
        Ok((sum / kk).sqrt())
    } else if p <= 32.0 {
        let sum: f64 = dists.iter().map(|d| 2.0 * d.powf(p)).sum();
        Ok((sum / kk).powf(1.0 / p))
    } else {
        let sum: f64 = dists.iter().map(|d| 2.0 * (d / d_max).powf(p)).sum();
        Ok(d_max * (sum / kk).powf(1.0 / p))
    }
}

/// Hausdorff distance `max{sup_a inf_b d(a,b), sup_b inf_a d(a,b)}` by exact
/// double-loop evaluation.
pub fn hausdorff_distance(a: &SampleSet, b: &SampleSet, metric: &Metric) -> Result<f64> {
    let ab = directed_hausdorff(a, b, metric)?;
    let ba = directed_hausdorff(b, a, metric)?;
    Ok(ab.max(ba))
}

fn directed_hausdorff(a: &SampleSet, b: &SampleSet, metric: &Metric) -> Result<f64> {
    let mut sup = 0.0_f64;
    for p in a.points() {
        let mut inf = f64::INFINITY;
        for q in b.points() {
            let d = metric.distance(p, q)?;
            if d < inf {
                inf = d;
            }
        }
        if inf > sup {
            sup = inf;
        }
    }
    Ok(sup)
}
