//! Alternating optimization of the data generator and the metric network,
//! plus per-epoch diagnostics.
//!
//! Each step first updates the generator against the geometric matching
//! objective under the current pullback metric, then updates the metric
//! network with the direction-regularized triplet loss fed by fresh
//! negatives. The two optimizers keep independent states with their own
//! decay settings.
//!
//! A full run is a pure function of its [`TrainConfig`]: every random draw
//! comes from streams derived from the master seed, so identical configs
//! produce bitwise-identical traces.

use crate::adam::AdamState;
use crate::config::{Mode, TrainConfig};
use crate::descriptors::{hausdorff_distance, p_diameter};
use crate::error::{Error, Result};
use crate::losses::{apn_loss, gen_total_loss, img_loss, mm_loss, pair_loss, LossValue};
use crate::net::{Activation, DenseNetwork, LayerSpec};
use crate::space::{euclidean, Metric, SampleSet};
use crate::spectrum::distance_matrix;
use crate::synth::{degrade, sample_prior_rng, ManifoldSampler, PriorSpec, Projection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Sub-stream tags added to the master seed; one stream per purpose keeps
// the draws independent of loop-order changes elsewhere.
const SEED_GEN_INIT: u64 = 1;
const SEED_MET_INIT: u64 = 2;
const SEED_DATA: u64 = 3;
const SEED_PRIOR: u64 = 4;
const SEED_TRIPLET: u64 = 5;
const SEED_PROBE: u64 = 6;
const SEED_DEGRADE: u64 = 7;

/// Per-epoch diagnostics. Distances are measured on the fixed probe batch
/// under the pullback metric of the current metric network; losses are
/// means over the epoch's steps. Eigenvalues appear at the diagnostics
/// interval only.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    pub d_c: f64,
    pub d_g: f64,
    pub d_h: f64,
    pub d_p: Option<f64>,
    pub loss_mm: f64,
    pub loss_apn: f64,
    pub loss_gen: Option<f64>,
    pub eigenvalues: Option<Vec<f64>>,
}

/// Why a run stopped before its epoch budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AbortDiagnostic {
    pub epoch: usize,
    pub step: usize,
    pub reason: String,
}

/// Everything a finished (or aborted) run produces. On abort the networks
/// hold the last parameters that were still finite at an epoch boundary.
/// `snapshots` and `checkpoints` are taken at each diagnostics interval.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub generator: DenseNetwork,
    pub metric_net: DenseNetwork,
    pub trace: Vec<TraceRecord>,
    pub snapshots: Vec<(usize, SampleSet)>,
    pub checkpoints: Vec<(usize, DenseNetwork, DenseNetwork)>,
    pub abort: Option<AbortDiagnostic>,
}

/// Runs the mode the config selects.
pub fn train(cfg: &TrainConfig) -> Result<TrainRun> {
    match cfg.mode {
        Mode::Unconditional => train_unconditional(cfg),
        Mode::Supervised => train_supervised(cfg),
    }
}

/// Unpaired manifold matching: generator against the matching objective,
/// metric network against the triplet objective, alternating per step.
pub fn train_unconditional(cfg: &TrainConfig) -> Result<TrainRun> {
    if cfg.mode != Mode::Unconditional {
        return Err(Error::invalid("mode", "config is not unconditional"));
    }
    Trainer::new(cfg)?.run()
}

/// Paired reconstruction: the generator minimizes the total supervised
/// objective, the metric network trains on triplets whose negatives are
/// the reconstructions.
pub fn train_supervised(cfg: &TrainConfig) -> Result<TrainRun> {
    if cfg.mode != Mode::Supervised {
        return Err(Error::invalid("mode", "config is not supervised"));
    }
    Trainer::new(cfg)?.run()
}

/// Probe-batch distances between a real and a generated set under the
/// embedding: centroid distance, 2-diameter gap, Hausdorff distance, and
/// the pair loss when the sets are index-paired. Loss and spectrum fields
/// are left empty; the training loop fills them.
pub fn compute_trace(
    epoch: usize,
    s_real: &SampleSet,
    s_fake: &SampleSet,
    embedding: &DenseNetwork,
    paired: bool,
) -> Result<TraceRecord> {
    let e_real = embedding.forward_set(s_real)?;
    let e_fake = embedding.forward_set(s_fake)?;
    let emb_real = SampleSet::new(e_real.clone())?;
    let emb_fake = SampleSet::new(e_fake.clone())?;

    // Distances of embedded sets under d_E equal pullback distances of the
    // originals, so these agree bitwise with direct pullback evaluation.
    let d_c = euclidean(&mean_vectors(&e_real), &mean_vectors(&e_fake));
    let diam_r = p_diameter(&emb_real, &Metric::Euclidean, 2.0)?;
    let diam_f = p_diameter(&emb_fake, &Metric::Euclidean, 2.0)?;
    let d_h = hausdorff_distance(&emb_real, &emb_fake, &Metric::Euclidean)?;
    let d_p = if paired {
        Some(pair_loss(&e_real, &e_fake)?.value)
    } else {
        None
    };
    Ok(TraceRecord {
        epoch,
        d_c,
        d_g: (diam_r - diam_f).abs(),
        d_h,
        d_p,
        loss_mm: 0.0,
        loss_apn: 0.0,
        loss_gen: None,
        eigenvalues: None,
    })
}

fn mean_vectors(batch: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; batch[0].len()];
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

impl DenseNetwork {
    /// Forward pass over a whole sample set.
    pub fn forward_set(&self, s: &SampleSet) -> Result<Vec<Vec<f64>>> {
        s.points().iter().map(|p| self.forward(p)).collect()
    }
}

// Outcome of one optimization step.
enum StepOutcome {
    Ok { loss_main: f64, loss_apn: f64 },
    NonFinite(String),
}

struct Trainer {
    cfg: TrainConfig,
    sampler: ManifoldSampler,
    prior: PriorSpec,
    projection: Option<Projection>,
    generator: DenseNetwork,
    metric_net: DenseNetwork,
    gen_adam: AdamState,
    met_adam: AdamState,
    data_rng: ChaCha8Rng,
    prior_rng: ChaCha8Rng,
    triplet_rng: ChaCha8Rng,
    degrade_rng: ChaCha8Rng,
    // Fixed at epoch 0: a real probe batch, and either a latent probe
    // (unconditional) or a degraded probe paired with the real one.
    probe_real: SampleSet,
    probe_input: SampleSet,
}

impl Trainer {
    fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let sampler = ManifoldSampler::new(cfg.manifold_spec())?;
        let prior = PriorSpec {
            latent_dim: cfg.latent_dim,
        };
        let projection = match cfg.mode {
            Mode::Supervised => Some(Projection::keep_coords(&cfg.degrade_keep, cfg.ambient_dim)?),
            Mode::Unconditional => None,
        };

        let gen_input = match cfg.mode {
            Mode::Unconditional => cfg.latent_dim,
            Mode::Supervised => cfg.degrade_keep.len(),
        };
        let generator = DenseNetwork::init(
            &mlp_spec(gen_input, &cfg.gen_hidden, cfg.ambient_dim),
            cfg.seed.wrapping_add(SEED_GEN_INIT),
        )?;
        let metric_net = DenseNetwork::init(
            &mlp_spec(cfg.ambient_dim, &cfg.met_hidden, cfg.embed_dim),
            cfg.seed.wrapping_add(SEED_MET_INIT),
        )?;
        let gen_adam = AdamState::new(
            generator.param_count(),
            cfg.gen_opt.learning_rate,
            cfg.gen_opt.beta1,
            cfg.gen_opt.beta2,
        )?;
        let met_adam = AdamState::new(
            metric_net.param_count(),
            cfg.met_opt.learning_rate,
            cfg.met_opt.beta1,
            cfg.met_opt.beta2,
        )?;

        let mut probe_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_PROBE));
        let probe_real = sampler.sample_rng(cfg.batch_size, &mut probe_rng)?;
        let probe_input = match cfg.mode {
            Mode::Unconditional => sample_prior_rng(&prior, cfg.batch_size, &mut probe_rng)?,
            Mode::Supervised => degrade(
                &probe_real,
                projection.as_ref().expect("supervised projection"),
                cfg.degrade_noise,
                &mut probe_rng,
            )?,
        };

        Ok(Self {
            sampler,
            prior,
            projection,
            generator,
            metric_net,
            gen_adam,
            met_adam,
            data_rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_DATA)),
            prior_rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_PRIOR)),
            triplet_rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_TRIPLET)),
            degrade_rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_DEGRADE)),
            probe_real,
            probe_input,
            cfg: cfg.clone(),
        })
    }

    fn run(mut self) -> Result<TrainRun> {
        let mut trace: Vec<TraceRecord> = Vec::with_capacity(self.cfg.epochs);
        let mut snapshots = Vec::new();
        let mut checkpoints = Vec::new();
        let mut abort = None;

        // Last parameters seen finite at an epoch boundary.
        let mut last_valid = (self.generator.clone(), self.metric_net.clone());

        'epochs: for epoch in 1..=self.cfg.epochs {
            let mut sum_main = 0.0;
            let mut sum_apn = 0.0;
            for step in 1..=self.cfg.steps_per_epoch {
                let outcome = match self.cfg.mode {
                    Mode::Unconditional => self.step_unconditional(),
                    Mode::Supervised => self.step_supervised(),
                };
                match outcome {
                    Ok(StepOutcome::Ok { loss_main, loss_apn }) => {
                        sum_main += loss_main;
                        sum_apn += loss_apn;
                    }
                    Ok(StepOutcome::NonFinite(reason)) => {
                        log::error!("aborting at epoch {epoch} step {step}: {reason}");
                        self.generator = last_valid.0.clone();
                        self.metric_net = last_valid.1.clone();
                        abort = Some(AbortDiagnostic { epoch, step, reason });
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                }
            }

            let steps = self.cfg.steps_per_epoch as f64;
            let probe = self
                .fake_probe()
                .and_then(|fake| {
                    self.epoch_record(epoch, &fake, sum_main / steps, sum_apn / steps)
                        .map(|r| (fake, r))
                });
            let (fake, record) = match probe {
                Ok(pair) => pair,
                Err(e) => {
                    // Diagnostics blowing up means the run diverged too.
                    self.generator = last_valid.0.clone();
                    self.metric_net = last_valid.1.clone();
                    abort = Some(AbortDiagnostic {
                        epoch,
                        step: self.cfg.steps_per_epoch,
                        reason: format!("diagnostics failed: {e}"),
                    });
                    break 'epochs;
                }
            };
            if record.eigenvalues.is_some() {
                snapshots.push((epoch, fake));
                checkpoints.push((epoch, self.generator.clone(), self.metric_net.clone()));
            }
            log::info!(
                "epoch {epoch}: d_c={:.6} d_g={:.6} d_H={:.6}",
                record.d_c,
                record.d_g,
                record.d_h
            );
            trace.push(record);
            last_valid = (self.generator.clone(), self.metric_net.clone());

            if self.cfg.early_stop && epoch > 20 {
                let prev = trace[epoch - 21].d_h;
                let now = trace[epoch - 1].d_h;
                if prev > 0.0 && (now - prev).abs() < 0.01 * prev {
                    log::info!("early stop at epoch {epoch}: d_H change below 1% over 20 epochs");
                    break;
                }
            }
        }

        Ok(TrainRun {
            generator: self.generator,
            metric_net: self.metric_net,
            trace,
            snapshots,
            checkpoints,
            abort,
        })
    }

    // Generator update on the matching objective, then metric update on
    // freshly resampled triplets.
    fn step_unconditional(&mut self) -> Result<StepOutcome> {
        let k = self.cfg.batch_size;
        let s_real = self.sampler.sample_rng(k, &mut self.data_rng)?;
        let latents = sample_prior_rng(&self.prior, k, &mut self.prior_rng)?;

        // Forward both networks, keeping tapes where gradients must flow.
        let mut gen_caches = Vec::with_capacity(k);
        let mut fake = Vec::with_capacity(k);
        for z in latents.points() {
            let cache = self.generator.forward_cached(z)?;
            fake.push(cache.output().to_vec());
            gen_caches.push(cache);
        }
        let e_real = self.metric_net.forward_set(&s_real)?;
        let mut met_caches = Vec::with_capacity(k);
        let mut e_fake = Vec::with_capacity(k);
        for x in &fake {
            let cache = self.metric_net.forward_cached(x)?;
            e_fake.push(cache.output().to_vec());
            met_caches.push(cache);
        }

        let loss = mm_loss(&e_real, &e_fake, self.cfg.lambda, self.cfg.match_mode)?;
        if !loss.value.is_finite() {
            return Ok(StepOutcome::NonFinite(format!(
                "matching loss {} is not finite",
                loss.value
            )));
        }

        // Chain fake-side gradients through the metric net (read-only) into
        // the generator parameters.
        let mut gen_grads = vec![0.0; self.generator.param_count()];
        for j in 0..k {
            let through_metric = self
                .metric_net
                .input_gradient(&met_caches[j], &loss.grads[k + j])?;
            self.generator
                .backward_accumulate(&gen_caches[j], &through_metric, &mut gen_grads)?;
        }
        if let Err(e) = self.apply_update(true, &gen_grads) {
            return Ok(StepOutcome::NonFinite(e.to_string()));
        }

        // Metric step: anchors and positives from the real batch, negatives
        // from fresh noise through the frozen generator.
        let l = self.cfg.triplet_count;
        let fresh = sample_prior_rng(&self.prior, l, &mut self.prior_rng)?;
        let negatives: Vec<Vec<f64>> = fresh
            .points()
            .iter()
            .map(|z| self.generator.forward(z))
            .collect::<Result<_>>()?;
        let apn_sum = match self.metric_step(&s_real, &negatives)? {
            Some(v) => v,
            None => return Ok(StepOutcome::NonFinite("triplet loss diverged".into())),
        };

        Ok(StepOutcome::Ok {
            loss_main: loss.value,
            loss_apn: apn_sum,
        })
    }

    // Generator update on the total supervised objective, then metric
    // update with the reconstructions as negatives.
    fn step_supervised(&mut self) -> Result<StepOutcome> {
        let k = self.cfg.batch_size;
        let projection = self.projection.as_ref().expect("supervised projection");
        let x_real = self.sampler.sample_rng(k, &mut self.data_rng)?;
        let x_low = degrade(&x_real, projection, self.cfg.degrade_noise, &mut self.degrade_rng)?;

        let mut gen_caches = Vec::with_capacity(k);
        let mut x_fake = Vec::with_capacity(k);
        for z in x_low.points() {
            let cache = self.generator.forward_cached(z)?;
            x_fake.push(cache.output().to_vec());
            gen_caches.push(cache);
        }

        let img = img_loss(x_real.points(), &x_fake)?;

        // Embedded losses, chained back to data space per component so the
        // total keeps the documented composition.
        let (lambda2, lambda3) = (self.cfg.lambda2, self.cfg.lambda3);
        let needs_embedding = lambda2 != 0.0 || lambda3 != 0.0;
        let (pair_chained, mm_chained) = if needs_embedding {
            let e_real = self.metric_net.forward_set(&x_real)?;
            let mut met_caches = Vec::with_capacity(k);
            let mut e_fake = Vec::with_capacity(k);
            for x in &x_fake {
                let cache = self.metric_net.forward_cached(x)?;
                e_fake.push(cache.output().to_vec());
                met_caches.push(cache);
            }
            let pair = pair_loss(&e_real, &e_fake)?;
            let mm = mm_loss(&e_real, &e_fake, self.cfg.lambda, self.cfg.match_mode)?;
            let chain = |loss: &LossValue| -> Result<LossValue> {
                let mut grads = Vec::with_capacity(k);
                for j in 0..k {
                    grads.push(
                        self.metric_net
                            .input_gradient(&met_caches[j], &loss.grads[k + j])?,
                    );
                }
                Ok(LossValue {
                    value: loss.value,
                    grads,
                })
            };
            (chain(&pair)?, chain(&mm)?)
        } else {
            let zero = LossValue {
                value: 0.0,
                grads: img.grads.clone(),
            };
            (zero.clone(), zero)
        };

        let total = gen_total_loss(&img, &pair_chained, &mm_chained, lambda2, lambda3)?;
        if !total.value.is_finite() {
            return Ok(StepOutcome::NonFinite(format!(
                "generator loss {} is not finite",
                total.value
            )));
        }

        let mut gen_grads = vec![0.0; self.generator.param_count()];
        for j in 0..k {
            self.generator
                .backward_accumulate(&gen_caches[j], &total.grads[j], &mut gen_grads)?;
        }
        if let Err(e) = self.apply_update(true, &gen_grads) {
            return Ok(StepOutcome::NonFinite(e.to_string()));
        }

        let apn_sum = match self.metric_step(&x_real, &x_fake)? {
            Some(v) => v,
            None => return Ok(StepOutcome::NonFinite("triplet loss diverged".into())),
        };

        Ok(StepOutcome::Ok {
            loss_main: total.value,
            loss_apn: apn_sum,
        })
    }

    // Accumulates the summed triplet objective over `triplet_count`
    // triplets and applies one Adam update to the metric parameters.
    // Returns None when the loss stops being finite.
    fn metric_step(&mut self, s_real: &SampleSet, negatives: &[Vec<f64>]) -> Result<Option<f64>> {
        let k = s_real.len();
        let l = self.cfg.triplet_count;
        let mut met_grads = vec![0.0; self.metric_net.param_count()];
        let mut total = 0.0;
        for _ in 0..l {
            // Anchor and positive: distinct indices of the real batch.
            let a_idx = self.triplet_rng.random_range(0..k);
            let mut p_idx = self.triplet_rng.random_range(0..k - 1);
            if p_idx >= a_idx {
                p_idx += 1;
            }
            let n_idx = self.triplet_rng.random_range(0..negatives.len());

            let cache_a = self.metric_net.forward_cached(s_real.point(a_idx))?;
            let cache_p = self.metric_net.forward_cached(s_real.point(p_idx))?;
            let cache_n = self.metric_net.forward_cached(&negatives[n_idx])?;
            let loss = apn_loss(
                cache_a.output(),
                cache_p.output(),
                cache_n.output(),
                self.cfg.alpha,
                self.cfg.gamma,
            )?;
            if !loss.value.is_finite() {
                return Ok(None);
            }
            total += loss.value;
            self.metric_net
                .backward_accumulate(&cache_a, &loss.grads[0], &mut met_grads)?;
            self.metric_net
                .backward_accumulate(&cache_p, &loss.grads[1], &mut met_grads)?;
            self.metric_net
                .backward_accumulate(&cache_n, &loss.grads[2], &mut met_grads)?;
        }
        match self.apply_update(false, &met_grads) {
            Ok(()) => Ok(Some(total)),
            Err(_) => Ok(None),
        }
    }

    // One Adam update for the selected network. Each optimizer only ever
    // touches its own parameter vector.
    fn apply_update(&mut self, generator: bool, grads: &[f64]) -> Result<()> {
        let (net, adam) = if generator {
            (&mut self.generator, &mut self.gen_adam)
        } else {
            (&mut self.metric_net, &mut self.met_adam)
        };
        let mut params = net.params();
        adam.step(&mut params, grads)?;
        net.set_params(&params)
    }

    // Generated probe set from the fixed probe inputs and current generator.
    fn fake_probe(&self) -> Result<SampleSet> {
        let outputs: Vec<Vec<f64>> = self
            .probe_input
            .points()
            .iter()
            .map(|z| self.generator.forward(z))
            .collect::<Result<_>>()?;
        SampleSet::new(outputs)
    }

    fn epoch_record(
        &self,
        epoch: usize,
        fake: &SampleSet,
        loss_main: f64,
        loss_apn: f64,
    ) -> Result<TraceRecord> {
        let paired = self.cfg.mode == Mode::Supervised;
        let mut record = compute_trace(epoch, &self.probe_real, fake, &self.metric_net, paired)?;
        match self.cfg.mode {
            Mode::Unconditional => {
                record.loss_mm = loss_main;
            }
            Mode::Supervised => {
                record.loss_mm = 0.0;
                record.loss_gen = Some(loss_main);
            }
        }
        record.loss_apn = loss_apn;

        if epoch.is_multiple_of(self.cfg.diagnostics_interval) {
            let matrix = distance_matrix(&self.probe_real, &Metric::Pullback(&self.metric_net), true)?;
            let count = self.cfg.batch_size.min(10);
            record.eigenvalues = Some(matrix.top_eigenvalues(count)?);
        }
        Ok(record)
    }
}

fn mlp_spec(input: usize, hidden: &[usize], output: usize) -> Vec<LayerSpec> {
    let mut dims = vec![input];
    dims.extend_from_slice(hidden);
    dims.push(output);
    dims.windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let act = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::LeakyRelu(0.2)
            };
            LayerSpec::new(pair[0], pair[1], act)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::centroid_distance;

    fn tiny_config() -> TrainConfig {
        let mut cfg = TrainConfig::defaults(Mode::Unconditional);
        cfg.batch_size = 8;
        cfg.triplet_count = 8;
        cfg.epochs = 2;
        cfg.steps_per_epoch = 3;
        cfg.diagnostics_interval = 1;
        cfg.gen_hidden = vec![8];
        cfg.met_hidden = vec![8];
        cfg
    }

    #[test]
    fn zero_epochs_leaves_networks_at_init() {
        let mut cfg = tiny_config();
        cfg.epochs = 0;
        let run = train_unconditional(&cfg).unwrap();
        assert!(run.trace.is_empty());
        let fresh = DenseNetwork::init(
            &mlp_spec(cfg.latent_dim, &cfg.gen_hidden, cfg.ambient_dim),
            cfg.seed.wrapping_add(SEED_GEN_INIT),
        )
        .unwrap();
        assert_eq!(run.generator.params(), fresh.params());
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let cfg = tiny_config();
        let a = train_unconditional(&cfg).unwrap();
        let b = train_unconditional(&cfg).unwrap();
        assert_eq!(a.trace.len(), b.trace.len());
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(ra, rb);
        }
        assert_eq!(a.generator.params(), b.generator.params());
        assert_eq!(a.metric_net.params(), b.metric_net.params());
    }

    #[test]
    fn mode_mismatch_rejected() {
        let cfg = tiny_config();
        assert!(train_supervised(&cfg).is_err());
    }

    #[test]
    fn compute_trace_identical_sets_all_zero() {
        let s = SampleSet::new(vec![vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap();
        let id = DenseNetwork::identity(2);
        let t = compute_trace(0, &s, &s, &id, true).unwrap();
        assert_eq!(t.d_c, 0.0);
        assert_eq!(t.d_g, 0.0);
        assert_eq!(t.d_h, 0.0);
        assert_eq!(t.d_p, Some(0.0));
    }

    #[test]
    fn compute_trace_line_example() {
        // Identity embedding, {0,2} vs {1,3}: d_c = 1, d_g = 0, d_H = 1.
        let a = SampleSet::new(vec![vec![0.0], vec![2.0]]).unwrap();
        let b = SampleSet::new(vec![vec![1.0], vec![3.0]]).unwrap();
        let id = DenseNetwork::identity(1);
        let t = compute_trace(0, &a, &b, &id, false).unwrap();
        assert!((t.d_c - 1.0).abs() < 1e-15);
        assert!(t.d_g.abs() < 1e-15);
        assert!((t.d_h - 1.0).abs() < 1e-15);
        assert_eq!(t.d_p, None);
    }

    #[test]
    fn compute_trace_agrees_with_direct_descriptor_calls() {
        let net = DenseNetwork::init(
            &mlp_spec(2, &[6], 3),
            99,
        )
        .unwrap();
        let a = SampleSet::new(vec![vec![0.1, 0.4], vec![-0.5, 0.2], vec![0.9, -0.3]]).unwrap();
        let b = SampleSet::new(vec![vec![0.3, -0.1], vec![0.0, 0.8], vec![-0.2, -0.6]]).unwrap();
        let t = compute_trace(0, &a, &b, &net, false).unwrap();

        let metric = Metric::Pullback(&net);
        let d_c = centroid_distance(&a, &b, &net).unwrap();
        let d_g = (p_diameter(&a, &metric, 2.0).unwrap() - p_diameter(&b, &metric, 2.0).unwrap()).abs();
        let d_h = hausdorff_distance(&a, &b, &metric).unwrap();
        assert_eq!(t.d_c.to_bits(), d_c.to_bits());
        assert_eq!(t.d_g.to_bits(), d_g.to_bits());
        assert_eq!(t.d_h.to_bits(), d_h.to_bits());
    }

    #[test]
    fn generator_step_never_writes_metric_parameters() {
        let cfg = tiny_config();
        let mut tr = Trainer::new(&cfg).unwrap();
        let before = tr.metric_net.params();
        // Run only the generator half by zeroing out the metric update.
        let k = cfg.batch_size;
        let s_real = tr.sampler.sample_rng(k, &mut tr.data_rng).unwrap();
        let latents = sample_prior_rng(&tr.prior, k, &mut tr.prior_rng).unwrap();
        let mut gen_caches = Vec::new();
        let mut fake = Vec::new();
        for z in latents.points() {
            let c = tr.generator.forward_cached(z).unwrap();
            fake.push(c.output().to_vec());
            gen_caches.push(c);
        }
        let e_real = tr.metric_net.forward_set(&s_real).unwrap();
        let mut met_caches = Vec::new();
        let mut e_fake = Vec::new();
        for x in &fake {
            let c = tr.metric_net.forward_cached(x).unwrap();
            e_fake.push(c.output().to_vec());
            met_caches.push(c);
        }
        let loss = mm_loss(&e_real, &e_fake, cfg.lambda, cfg.match_mode).unwrap();
        let mut gen_grads = vec![0.0; tr.generator.param_count()];
        for j in 0..k {
            let through = tr
                .metric_net
                .input_gradient(&met_caches[j], &loss.grads[k + j])
                .unwrap();
            tr.generator
                .backward_accumulate(&gen_caches[j], &through, &mut gen_grads)
                .unwrap();
        }
        tr.apply_update(true, &gen_grads).unwrap();
        assert_eq!(tr.metric_net.params(), before);
    }

    #[test]
    fn metric_step_never_writes_generator_parameters() {
        let cfg = tiny_config();
        let mut tr = Trainer::new(&cfg).unwrap();
        let before = tr.generator.params();
        let s_real = tr
            .sampler
            .sample_rng(cfg.batch_size, &mut tr.data_rng)
            .unwrap();
        let negatives: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 * 0.1, -0.2]).collect();
        tr.metric_step(&s_real, &negatives).unwrap().unwrap();
        assert_eq!(tr.generator.params(), before);
    }

    #[test]
    fn optimizer_states_match_their_own_networks() {
        let cfg = tiny_config();
        let tr = Trainer::new(&cfg).unwrap();
        assert_eq!(tr.gen_adam.len(), tr.generator.param_count());
        assert_eq!(tr.met_adam.len(), tr.metric_net.param_count());
        // Different shapes, so cross-wiring would fail the length check.
        assert_ne!(tr.gen_adam.len(), tr.met_adam.len());
    }

    #[test]
    fn diverging_run_aborts_with_last_valid_checkpoint() {
        let mut cfg = tiny_config();
        cfg.gen_opt.learning_rate = 1e200;
        cfg.epochs = 4;
        let run = train_unconditional(&cfg).unwrap();
        let abort = run.abort.expect("run should abort");
        assert!(abort.epoch >= 1);
        assert!(run.generator.params().iter().all(|p| p.is_finite()));
        assert!(run.trace.len() < 4);
    }

    #[test]
    fn early_stop_triggers_on_flat_hausdorff() {
        let mut cfg = tiny_config();
        cfg.epochs = 200;
        cfg.early_stop = true;
        // Learning rates small enough that nothing moves: d_H is flat, so
        // the 1%-over-20-epochs rule fires at the first opportunity.
        cfg.gen_opt.learning_rate = 1e-12;
        cfg.met_opt.learning_rate = 1e-12;
        let run = train_unconditional(&cfg).unwrap();
        assert!(run.abort.is_none());
        assert_eq!(run.trace.len(), 21);
    }

    #[test]
    fn supervised_pure_regression_with_linear_generator_fits_exactly() {
        // Circle padded and rotated into R³ lies in a 2-d linear subspace,
        // so after dropping one coordinate a single affine layer can invert
        // the degradation exactly; with zero-weight embedded terms the
        // objective is plain L1 regression.
        let mut cfg = TrainConfig::defaults(Mode::Supervised);
        cfg.ambient_dim = 3;
        cfg.manifold = crate::synth::ManifoldKind::Circle { radius: 1.0 };
        cfg.degrade_keep = vec![0, 1];
        cfg.lambda2 = 0.0;
        cfg.lambda3 = 0.0;
        cfg.batch_size = 128;
        cfg.triplet_count = 4;
        cfg.epochs = 120;
        cfg.steps_per_epoch = 25;
        cfg.diagnostics_interval = 120;
        cfg.gen_hidden = vec![];
        cfg.met_hidden = vec![8];
        cfg.gen_opt = crate::config::OptSettings {
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
        };
        let run = train_supervised(&cfg).unwrap();
        assert!(run.abort.is_none());
        let final_img = run.trace.last().unwrap().loss_gen.unwrap();
        assert!(final_img < 1e-3, "final L1 loss {final_img}");
    }

    #[test]
    fn supervised_produces_paired_trace() {
        let mut cfg = TrainConfig::defaults(Mode::Supervised);
        cfg.ambient_dim = 3;
        cfg.manifold = crate::synth::ManifoldKind::Helix {
            radius: 1.0,
            pitch: 1.0,
            turns: 2.0,
        };
        cfg.degrade_keep = vec![0, 2];
        cfg.batch_size = 8;
        cfg.triplet_count = 8;
        cfg.epochs = 2;
        cfg.steps_per_epoch = 2;
        cfg.diagnostics_interval = 1;
        cfg.gen_hidden = vec![8];
        cfg.met_hidden = vec![8];
        let run = train_supervised(&cfg).unwrap();
        assert!(run.abort.is_none());
        for r in &run.trace {
            let d_p = r.d_p.expect("supervised trace carries d_p");
            assert!(d_p >= 0.0);
            assert!(r.loss_gen.is_some());
        }
    }

    #[test]
    fn match_mode_ablation_changes_loss_composition() {
        let mut cfg = tiny_config();
        cfg.match_mode = crate::losses::MatchMode::CentroidOnly;
        let a = train_unconditional(&cfg).unwrap();
        cfg.match_mode = crate::losses::MatchMode::DiameterOnly;
        let b = train_unconditional(&cfg).unwrap();
        assert_ne!(a.trace.last().unwrap().loss_mm, b.trace.last().unwrap().loss_mm);
    }
}
