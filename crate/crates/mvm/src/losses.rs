//! Objective functions: geometric matching between two embedded sample
//! sets, the direction-regularized triplet loss, and the supervised
//! reconstruction losses.
//!
//! Every operation returns a [`LossValue`]: the scalar objective plus exact
//! gradients with respect to the network-output vectors that produced it.
//! Chaining those gradients through the networks is the trainer's job, which
//! keeps each loss a pure function that finite differences can audit.
//!
//! Subgradient conventions: at a hinge or absolute-value kink, and wherever
//! a norm in a denominator vanishes, the gradient is zero.

use crate::error::{Error, Result};
use crate::space::euclidean;

/// Scalar objective plus `dL/d(output)` for each contributing output
/// vector. The layout of `grads` is documented per operation.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grads: Vec<Vec<f64>>,
}

impl LossValue {
    fn zeros(value: f64, shapes: &[&[Vec<f64>]]) -> Self {
        let grads = shapes
            .iter()
            .flat_map(|batch| batch.iter().map(|v| vec![0.0; v.len()]))
            .collect();
        Self { value, grads }
    }
}

/// Which descriptors the matching loss compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    CentroidOnly,
    DiameterOnly,
    Both,
}

impl std::fmt::Display for MatchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MatchMode::CentroidOnly => "centroid_only",
            MatchMode::DiameterOnly => "diameter_only",
            MatchMode::Both => "both",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid_only" => Ok(MatchMode::CentroidOnly),
            "diameter_only" => Ok(MatchMode::DiameterOnly),
            "both" => Ok(MatchMode::Both),
            _ => Err(Error::invalid("match_mode", format!("unknown {s:?}"))),
        }
    }
}

/// Anchor and positive drawn from real data, negative from generated data.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl Triplet {
    pub fn new(anchor: Vec<f64>, positive: Vec<f64>, negative: Vec<f64>) -> Result<Self> {
        if anchor.len() != positive.len() || anchor.len() != negative.len() {
            return Err(Error::DimensionMismatch(anchor.len(), positive.len().max(negative.len())));
        }
        Ok(Self {
            anchor,
            positive,
            negative,
        })
    }
}

const NORM_GUARD: f64 = 1e-12;

fn mean_of(batch: &[Vec<f64>]) -> Vec<f64> {
    let dim = batch[0].len();
    let mut mean = vec![0.0; dim];
    for v in batch {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let k = batch.len() as f64;
    for m in &mut mean {
        *m /= k;
    }
    mean
}

// 2-diameter of an embedded batch and its per-point gradient scale:
// diam = sqrt((1/k²) Σ_{i,j} ‖e_i − e_j‖²), ∂diam/∂e_a = 2(e_a − ē)/(k·diam).
fn embedded_diam2(batch: &[Vec<f64>]) -> f64 {
    let k = batch.len();
    let mut sum = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = euclidean(&batch[i], &batch[j]);
            sum += 2.0 * d * d;
        }
    }
    (sum / (k * k) as f64).sqrt()
}

fn check_dims(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    let dim = a
        .first()
        .or_else(|| b.first())
        .ok_or(Error::EmptySampleSet)?
        .len();
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    for v in a.iter().chain(b) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch(dim, v.len()));
        }
    }
    Ok(dim)
}

/// Matching objective between two embedded sets:
/// `‖ē_R − ē_F‖ + λ·|diam₂(E_R) − diam₂(E_F)|`.
///
/// Gradient layout: one entry per real vector, then one per fake vector.
/// `mode` selects which descriptor terms participate; with `λ = 0` or
/// `CentroidOnly` the diameter term is skipped entirely, so the value equals
/// the centroid distance bit for bit.
pub fn mm_loss(
    e_real: &[Vec<f64>],
    e_fake: &[Vec<f64>],
    lambda: f64,
    mode: MatchMode,
) -> Result<LossValue> {
    let dim = check_dims(e_real, e_fake)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid("lambda", format!("{lambda} < 0")));
    }
    let (k_r, k_f) = (e_real.len(), e_fake.len());
    let mut out = LossValue::zeros(0.0, &[e_real, e_fake]);

    if mode != MatchMode::DiameterOnly {
        let mean_r = mean_of(e_real);
        let mean_f = mean_of(e_fake);
        let c_norm = euclidean(&mean_r, &mean_f);
        out.value += c_norm;
        if c_norm > 0.0 {
            for d in 0..dim {
                let unit = (mean_r[d] - mean_f[d]) / c_norm;
                for g in out.grads.iter_mut().take(k_r) {
                    g[d] += unit / k_r as f64;
                }
                for g in out.grads.iter_mut().skip(k_r) {
                    g[d] -= unit / k_f as f64;
                }
            }
        }
    }

    if mode != MatchMode::CentroidOnly && lambda != 0.0 {
        let diam_r = embedded_diam2(e_real);
        let diam_f = embedded_diam2(e_fake);
        let diff = diam_r - diam_f;
        out.value += lambda * diff.abs();
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sign != 0.0 {
            if diam_r > 0.0 {
                let mean_r = mean_of(e_real);
                let scale = lambda * sign * 2.0 / (k_r as f64 * diam_r);
                for (g, e) in out.grads.iter_mut().zip(e_real) {
                    for d in 0..dim {
                        g[d] += scale * (e[d] - mean_r[d]);
                    }
                }
            }
            if diam_f > 0.0 {
                let mean_f = mean_of(e_fake);
                let scale = -lambda * sign * 2.0 / (k_f as f64 * diam_f);
                for (g, e) in out.grads.iter_mut().skip(k_r).zip(e_fake) {
                    for d in 0..dim {
                        g[d] += scale * (e[d] - mean_f[d]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Plain triplet hinge on embedded points:
/// `max{0, ‖e_a − e_p‖² − ‖e_a − e_n‖² + α}`.
///
/// Gradient layout: anchor, positive, negative. An exactly-zero hinge
/// argument counts as inactive.
pub fn triplet_loss(e_a: &[f64], e_p: &[f64], e_n: &[f64], alpha: f64) -> Result<LossValue> {
    apn_hinge(e_a, e_p, e_n, alpha, 0.0)
}

/// Triplet hinge with the direction regularizer inside the max:
/// `max{0, ‖e_a−e_p‖² − ‖e_a−e_n‖² + α − γ·cos(e_n−e_a, e_p−e_a)}`.
///
/// The cosine is defined as zero when either difference vector has norm
/// below 1e-12. With `γ = 0` this equals [`triplet_loss`] bit for bit.
pub fn apn_loss(
    e_a: &[f64],
    e_p: &[f64],
    e_n: &[f64],
    alpha: f64,
    gamma: f64,
) -> Result<LossValue> {
    apn_hinge(e_a, e_p, e_n, alpha, gamma)
}

fn apn_hinge(e_a: &[f64], e_p: &[f64], e_n: &[f64], alpha: f64, gamma: f64) -> Result<LossValue> {
    if e_a.len() != e_p.len() || e_a.len() != e_n.len() {
        return Err(Error::DimensionMismatch(e_a.len(), e_p.len().max(e_n.len())));
    }
    let dim = e_a.len();
    let d_ap2: f64 = e_a.iter().zip(e_p).map(|(a, p)| (a - p) * (a - p)).sum();
    let d_an2: f64 = e_a.iter().zip(e_n).map(|(a, n)| (a - n) * (a - n)).sum();
    let mut arg = d_ap2 - d_an2 + alpha;

    // Direction term, skipped entirely at γ = 0 so the reduction to the
    // plain hinge is exact.
    let mut cos_grads: Option<(Vec<f64>, Vec<f64>)> = None; // (∂C/∂u, ∂C/∂v)
    if gamma != 0.0 {
        let u: Vec<f64> = e_n.iter().zip(e_a).map(|(n, a)| n - a).collect();
        let v: Vec<f64> = e_p.iter().zip(e_a).map(|(p, a)| p - a).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nu >= NORM_GUARD && nv >= NORM_GUARD {
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            let cos = dot / (nu * nv);
            arg -= gamma * cos;
            let du: Vec<f64> = u
                .iter()
                .zip(&v)
                .map(|(ui, vi)| (vi / nv - cos * ui / nu) / nu)
                .collect();
            let dv: Vec<f64> = u
                .iter()
                .zip(&v)
                .map(|(ui, vi)| (ui / nu - cos * vi / nv) / nv)
                .collect();
            cos_grads = Some((du, dv));
        }
    }

    let mut out = LossValue {
        value: 0.0,
        grads: vec![vec![0.0; dim]; 3],
    };
    if arg > 0.0 {
        out.value = arg;
        for d in 0..dim {
            out.grads[0][d] = 2.0 * (e_n[d] - e_p[d]);
            out.grads[1][d] = -2.0 * (e_a[d] - e_p[d]);
            out.grads[2][d] = 2.0 * (e_a[d] - e_n[d]);
        }
        if let Some((du, dv)) = cos_grads {
            for d in 0..dim {
                out.grads[0][d] += gamma * (du[d] + dv[d]);
                out.grads[1][d] -= gamma * dv[d];
                out.grads[2][d] -= gamma * du[d];
            }
        }
    }
    Ok(out)
}

/// Mean embedded distance between index-paired batches:
/// `(1/k) Σ_i ‖e_real_i − e_fake_i‖`.
///
/// Gradient layout: real block then fake block.
pub fn pair_loss(e_real: &[Vec<f64>], e_fake: &[Vec<f64>]) -> Result<LossValue> {
    if e_real.len() != e_fake.len() {
        return Err(Error::DimensionMismatch(e_real.len(), e_fake.len()));
    }
    let dim = check_dims(e_real, e_fake)?;
    let k = e_real.len();
    let mut out = LossValue::zeros(0.0, &[e_real, e_fake]);
    for i in 0..k {
        let d = euclidean(&e_real[i], &e_fake[i]);
        out.value += d / k as f64;
        if d > 0.0 {
            for j in 0..dim {
                let g = (e_real[i][j] - e_fake[i][j]) / (d * k as f64);
                out.grads[i][j] = g;
                out.grads[k + i][j] = -g;
            }
        }
    }
    Ok(out)
}

/// Mean absolute per-coordinate reconstruction error:
/// `(1/(k·D)) Σ_i Σ_d |x_real − x_fake|`.
///
/// Gradient layout: one entry per fake (reconstructed) vector; the real
/// batch is data, not a network output.
pub fn img_loss(x_real: &[Vec<f64>], x_fake: &[Vec<f64>]) -> Result<LossValue> {
    if x_real.len() != x_fake.len() {
        return Err(Error::DimensionMismatch(x_real.len(), x_fake.len()));
    }
    let dim = check_dims(x_real, x_fake)?;
    let count = (x_real.len() * dim) as f64;
    let mut out = LossValue::zeros(0.0, &[x_fake]);
    for (i, (r, f)) in x_real.iter().zip(x_fake).enumerate() {
        for d in 0..dim {
            let diff = f[d] - r[d];
            out.value += diff.abs() / count;
            out.grads[i][d] = if diff > 0.0 {
                1.0 / count
            } else if diff < 0.0 {
                -1.0 / count
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

/// Total supervised generator objective:
/// `L_img + λ₂·L_pair + λ₃·L_MM`.
///
/// All three components must carry gradients over the same generator
/// outputs (the caller chains embedded-space gradients back through the
/// metric network first). Zero-weight components are skipped, so with
/// `λ₂ = λ₃ = 0` the result equals `img` bit for bit.
pub fn gen_total_loss(
    img: &LossValue,
    pair: &LossValue,
    mm: &LossValue,
    lambda2: f64,
    lambda3: f64,
) -> Result<LossValue> {
    let mut out = img.clone();
    for (weight, part) in [(lambda2, pair), (lambda3, mm)] {
        if weight == 0.0 {
            continue;
        }
        if part.grads.len() != out.grads.len() {
            return Err(Error::DimensionMismatch(part.grads.len(), out.grads.len()));
        }
        out.value += weight * part.value;
        for (acc, g) in out.grads.iter_mut().zip(&part.grads) {
            if acc.len() != g.len() {
                return Err(Error::DimensionMismatch(acc.len(), g.len()));
            }
            for (a, v) in acc.iter_mut().zip(g) {
                *a += weight * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect()
    }

    fn bits(x: f64) -> u64 {
        x.to_bits()
    }

    #[test]
    fn mm_loss_vanishes_on_identical_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let e = random_batch(&mut rng, 5, 3);
            let l = mm_loss(&e, &e, 1.7, MatchMode::Both).unwrap();
            assert_eq!(l.value, 0.0);
            assert!(l.grads.iter().flatten().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn mm_loss_lambda_zero_is_centroid_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_batch(&mut rng, 4, 3);
        let b = random_batch(&mut rng, 6, 3);
        let l = mm_loss(&a, &b, 0.0, MatchMode::Both).unwrap();
        let expected = euclidean(&mean_of(&a), &mean_of(&b));
        assert_eq!(bits(l.value), bits(expected));
    }

    #[test]
    fn mm_loss_two_point_line_example() {
        // Identity embedding on the line: diam₂({0,2}) = √2, diam₂({1,1}) = 0.
        let real = vec![vec![0.0], vec![2.0]];
        let fake = vec![vec![1.0], vec![1.0]];
        let l = mm_loss(&real, &fake, 1.0, MatchMode::Both).unwrap();
        assert!((l.value - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mm_loss_modes_zero_the_other_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_batch(&mut rng, 5, 2);
        let b = random_batch(&mut rng, 5, 2);
        let lambda = 0.37;

        let c_only = mm_loss(&a, &b, lambda, MatchMode::CentroidOnly).unwrap();
        let d_only = mm_loss(&a, &b, lambda, MatchMode::DiameterOnly).unwrap();
        let both = mm_loss(&a, &b, lambda, MatchMode::Both).unwrap();

        let centroid = euclidean(&mean_of(&a), &mean_of(&b));
        assert_eq!(bits(c_only.value), bits(centroid));
        let diam_term = lambda * (embedded_diam2(&a) - embedded_diam2(&b)).abs();
        assert!((d_only.value - diam_term).abs() < 1e-15);
        assert!((both.value - (centroid + diam_term)).abs() < 1e-15);
    }

    #[test]
    fn mm_loss_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_batch(&mut rng, 6, 3);
        let b = random_batch(&mut rng, 6, 3);
        let l1 = mm_loss(&a, &b, 0.8, MatchMode::Both).unwrap();

        let mut a_perm = a.clone();
        a_perm.reverse();
        let mut b_perm = b.clone();
        b_perm.swap(0, 3);
        let l2 = mm_loss(&a_perm, &b_perm, 0.8, MatchMode::Both).unwrap();
        assert!((l1.value - l2.value).abs() < 1e-9);
    }

    #[test]
    fn mm_loss_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_batch(&mut rng, 4, 2);
            let b = random_batch(&mut rng, 3, 2);
            let l = mm_loss(&a, &b, 2.0, MatchMode::Both).unwrap();
            assert!(l.value >= 0.0);
        }
    }

    #[test]
    fn triplet_examples() {
        // Embedded distances d_ap = 1, d_an = 2 with α = 0.5 → inactive.
        let a = vec![0.0, 0.0];
        let p = vec![1.0, 0.0];
        let n = vec![2.0, 0.0];
        let l = triplet_loss(&a, &p, &n, 0.5).unwrap();
        assert_eq!(l.value, 0.0);
        assert!(l.grads.iter().flatten().all(|&g| g == 0.0));

        // d_ap = 2, d_an = 1, α = 0.5 → 4 − 1 + 0.5 = 3.5.
        let l = triplet_loss(&a, &n, &p, 0.5).unwrap();
        assert!((l.value - 3.5).abs() < 1e-15);

        // Positive equals negative at α = 0 → exactly zero.
        let l = triplet_loss(&a, &p, &p, 0.0).unwrap();
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn apn_gamma_zero_is_triplet_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let alpha = rng.random_range(0.0..2.0);
            let t = triplet_loss(&a, &p, &n, alpha).unwrap();
            let x = apn_loss(&a, &p, &n, alpha, 0.0).unwrap();
            assert_eq!(bits(t.value), bits(x.value));
            for (tg, xg) in t.grads.iter().flatten().zip(x.grads.iter().flatten()) {
                assert_eq!(bits(*tg), bits(*xg));
            }
        }
    }

    #[test]
    fn apn_orthogonal_differences_have_zero_cosine() {
        let a = vec![0.0, 0.0];
        let p = vec![0.0, 2.0];
        let n = vec![1.0, 0.0];
        let l = apn_loss(&a, &p, &n, 0.5, 5.0).unwrap();
        assert!((l.value - 3.5).abs() < 1e-15);
    }

    #[test]
    fn apn_collinear_example_inactive() {
        let a = vec![0.0, 0.0];
        let p = vec![1.0, 0.0];
        let n = vec![2.0, 0.0];
        let l = apn_loss(&a, &p, &n, 1.0, 0.01).unwrap();
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn apn_degenerate_difference_guarded() {
        let a = vec![0.5, 0.5];
        let p = a.clone(); // zero-norm positive difference
        let n = vec![1.5, 0.5];
        let l = apn_loss(&a, &p, &n, 2.0, 0.9).unwrap();
        // cosine treated as zero: 0 − 1 + 2 = 1.
        assert!((l.value - 1.0).abs() < 1e-15);
        assert!(l.grads.iter().flatten().all(|g| g.is_finite()));
    }

    #[test]
    fn hinge_losses_non_increasing_in_negative_distance() {
        let a = vec![0.0, 0.0];
        let p = vec![0.5, 0.1];
        let mut prev_t = f64::INFINITY;
        let mut prev_x = f64::INFINITY;
        for scale in [0.2, 0.5, 1.0, 2.0, 4.0] {
            // Push the negative radially away from the anchor.
            let n = vec![0.3 * scale, 0.4 * scale];
            let t = triplet_loss(&a, &p, &n, 1.0).unwrap().value;
            let x = apn_loss(&a, &p, &n, 1.0, 0.05).unwrap().value;
            assert!(t <= prev_t + 1e-12);
            assert!(x <= prev_x + 1e-12);
            prev_t = t;
            prev_x = x;
        }
    }

    #[test]
    fn pair_loss_examples() {
        let r = vec![vec![0.0, 0.0, 0.0]];
        assert_eq!(pair_loss(&r, &r).unwrap().value, 0.0);

        let f = vec![vec![1.0, 0.0, 0.0]];
        assert!((pair_loss(&r, &f).unwrap().value - 1.0).abs() < 1e-15);

        // Two pairs at distances 1 and 3 → mean 2.
        let r2 = vec![vec![0.0], vec![0.0]];
        let f2 = vec![vec![1.0], vec![3.0]];
        assert!((pair_loss(&r2, &f2).unwrap().value - 2.0).abs() < 1e-15);

        assert!(pair_loss(&r, &f2).is_err());
    }

    #[test]
    fn img_loss_examples() {
        let r = vec![vec![1.0; 4]];
        assert_eq!(img_loss(&r, &r).unwrap().value, 0.0);

        let f = vec![vec![0.0; 4]];
        let l = img_loss(&r, &f).unwrap();
        assert!((l.value - 1.0).abs() < 1e-15);
        // Fake below real → negative sign on the fake gradient.
        assert!(l.grads[0].iter().all(|&g| g == -0.25));

        let above = vec![vec![2.0; 4]];
        let l = img_loss(&r, &above).unwrap();
        assert!(l.grads[0].iter().all(|&g| g == 0.25));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn batch(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
            proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, 3), k)
        }

        proptest! {
            #[test]
            fn mm_loss_nonnegative_and_zero_on_self(
                a in batch(1..=8),
                b in batch(1..=8),
                lambda in 0.0..3.0f64,
            ) {
                let l = mm_loss(&a, &b, lambda, MatchMode::Both).unwrap();
                prop_assert!(l.value >= 0.0);
                let same = mm_loss(&a, &a, lambda, MatchMode::Both).unwrap();
                prop_assert_eq!(same.value, 0.0);
            }

            #[test]
            fn mm_loss_invariant_under_permutation(
                a in batch(2..=8),
                b in batch(2..=8),
                swap_a in 0usize..8,
                swap_b in 0usize..8,
            ) {
                let l1 = mm_loss(&a, &b, 0.7, MatchMode::Both).unwrap();
                let mut ap = a.clone();
                let mut bp = b.clone();
                let (ia, ib) = (swap_a % ap.len(), swap_b % bp.len());
                ap.swap(0, ia);
                bp.swap(0, ib);
                ap.reverse();
                let l2 = mm_loss(&ap, &bp, 0.7, MatchMode::Both).unwrap();
                prop_assert!((l1.value - l2.value).abs() < 1e-9);
            }

            #[test]
            fn img_loss_gradient_signs(
                r in batch(1..=4),
                f in batch(1..=4),
            ) {
                prop_assume!(r.len() == f.len());
                let l = img_loss(&r, &f).unwrap();
                for (i, (rv, fv)) in r.iter().zip(&f).enumerate() {
                    for (d, (a, b)) in rv.iter().zip(fv).enumerate() {
                        let g = l.grads[i][d];
                        if b > a {
                            prop_assert!(g > 0.0);
                        } else if b < a {
                            prop_assert!(g < 0.0);
                        } else {
                            prop_assert_eq!(g, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gen_total_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = random_batch(&mut rng, 3, 2);
        let f = random_batch(&mut rng, 3, 2);
        let img = img_loss(&r, &f).unwrap();
        // Stand-ins with the same layout as the image loss.
        let pair = LossValue {
            value: 2.0,
            grads: img.grads.clone(),
        };
        let mm = LossValue {
            value: 3.0,
            grads: img.grads.clone(),
        };

        let total = gen_total_loss(&img, &pair, &mm, 0.0, 0.0).unwrap();
        assert_eq!(bits(total.value), bits(img.value));
        for (a, b) in total.grads.iter().flatten().zip(img.grads.iter().flatten()) {
            assert_eq!(bits(*a), bits(*b));
        }

        let one = LossValue {
            value: 1.0,
            grads: img.grads.clone(),
        };
        let weighted = gen_total_loss(&one, &pair, &mm, 1e-3, 1e-3).unwrap();
        assert!((weighted.value - 1.005).abs() < 1e-12);

        let zero = LossValue {
            value: 0.0,
            grads: img.grads.clone(),
        };
        let all_zero = gen_total_loss(&zero, &zero, &zero, 0.5, 0.5).unwrap();
        assert_eq!(all_zero.value, 0.0);
    }
}
