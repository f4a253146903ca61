//! Central finite-difference audit of every loss composed with random
//! two-layer networks.
//!
//! Each scenario builds a scalar function of the full parameter vectors of
//! a generator `f` and a metric embedding `g`, computes analytic gradients
//! by the same chaining the trainer uses, and compares every partial
//! against `(L(p+h) − L(p−h)) / 2h`. Configurations that land within 1e-6
//! of a hinge, absolute-value, or relu kink are redrawn, since the
//! two-sided difference would straddle the non-smooth point.

use crate::error::Result;
use crate::losses::{
    apn_loss, gen_total_loss, img_loss, mm_loss, pair_loss, triplet_loss, LossValue, MatchMode,
};
use crate::net::{Activation, DenseNetwork, ForwardCache, LayerSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-7;
// Wider than the finite-difference step: a parameter nudge of 1e-5 can move
// a hinge argument by about that much, so anything closer gets redrawn.
const KINK_TOL: f64 = 1e-4;

/// Worst partial seen across a run, by relative error.
#[derive(Debug, Clone)]
pub struct WorstPartial {
    pub scenario: &'static str,
    pub network: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Outcome of one full audit.
#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub checked: usize,
    pub failures: usize,
    pub worst: Option<WorstPartial>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Mm,
    Triplet,
    Apn,
    Pair,
    Img,
    GenTotal,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Mm => "mm_loss",
            Family::Triplet => "triplet_loss",
            Family::Apn => "apn_loss",
            Family::Pair => "pair_loss",
            Family::Img => "img_loss",
            Family::GenTotal => "gen_total_loss",
        }
    }

    // The image loss never touches the metric network.
    fn uses_metric(self) -> bool {
        !matches!(self, Family::Img)
    }
}

const ALL_FAMILIES: [Family; 6] = [
    Family::Mm,
    Family::Triplet,
    Family::Apn,
    Family::Pair,
    Family::Img,
    Family::GenTotal,
];

struct Scenario {
    family: Family,
    f: DenseNetwork,
    g: DenseNetwork,
    x_real: Vec<Vec<f64>>,
    f_inputs: Vec<Vec<f64>>,
    lambda: f64,
    alpha: f64,
    gamma: f64,
    lambda2: f64,
    lambda3: f64,
}

// Forward pass products shared by the value, gradient, and kink probes.
struct Tape {
    f_caches: Vec<ForwardCache>,
    x_fake: Vec<Vec<f64>>,
    g_real_caches: Vec<ForwardCache>,
    e_real: Vec<Vec<f64>>,
    g_fake_caches: Vec<ForwardCache>,
    e_fake: Vec<Vec<f64>>,
}

impl Scenario {
    fn build(family: Family, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = DenseNetwork::init(
            &[
                LayerSpec::new(3, 8, Activation::LeakyRelu(0.2)),
                LayerSpec::new(8, 2, Activation::Identity),
            ],
            rng.random(),
        )?;
        let g = DenseNetwork::init(
            &[
                LayerSpec::new(2, 8, Activation::Tanh),
                LayerSpec::new(8, 4, Activation::Identity),
            ],
            rng.random(),
        )?;
        let k = 4;
        let draw = |rng: &mut ChaCha8Rng, n: usize, dim: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        Ok(Self {
            family,
            f,
            g,
            x_real: draw(&mut rng, k, 2),
            f_inputs: draw(&mut rng, k, 3),
            lambda: 0.7,
            alpha: 0.5,
            gamma: 0.3,
            lambda2: 0.4,
            lambda3: 0.6,
        })
    }

    fn tape(&self, f: &DenseNetwork, g: &DenseNetwork) -> Result<Tape> {
        let mut f_caches = Vec::new();
        let mut x_fake = Vec::new();
        for z in &self.f_inputs {
            let c = f.forward_cached(z)?;
            x_fake.push(c.output().to_vec());
            f_caches.push(c);
        }
        let (mut g_real_caches, mut e_real) = (Vec::new(), Vec::new());
        let (mut g_fake_caches, mut e_fake) = (Vec::new(), Vec::new());
        if self.family.uses_metric() {
            for x in &self.x_real {
                let c = g.forward_cached(x)?;
                e_real.push(c.output().to_vec());
                g_real_caches.push(c);
            }
            for x in &x_fake {
                let c = g.forward_cached(x)?;
                e_fake.push(c.output().to_vec());
                g_fake_caches.push(c);
            }
        }
        Ok(Tape {
            f_caches,
            x_fake,
            g_real_caches,
            e_real,
            g_fake_caches,
            e_fake,
        })
    }

    fn loss(&self, tape: &Tape) -> Result<LossValue> {
        match self.family {
            Family::Mm => mm_loss(&tape.e_real, &tape.e_fake, self.lambda, MatchMode::Both),
            Family::Triplet => triplet_loss(&tape.e_real[0], &tape.e_real[1], &tape.e_fake[0], self.alpha),
            Family::Apn => apn_loss(
                &tape.e_real[0],
                &tape.e_real[1],
                &tape.e_fake[0],
                self.alpha,
                self.gamma,
            ),
            Family::Pair => pair_loss(&tape.e_real, &tape.e_fake),
            Family::Img => img_loss(&self.x_real, &tape.x_fake),
            Family::GenTotal => {
                // value only; gradients are assembled in `analytic`.
                let img = img_loss(&self.x_real, &tape.x_fake)?;
                let pair = pair_loss(&tape.e_real, &tape.e_fake)?;
                let mm = mm_loss(&tape.e_real, &tape.e_fake, self.lambda, MatchMode::Both)?;
                Ok(LossValue {
                    value: img.value + self.lambda2 * pair.value + self.lambda3 * mm.value,
                    grads: vec![],
                })
            }
        }
    }

    fn value(&self, f: &DenseNetwork, g: &DenseNetwork) -> Result<f64> {
        let tape = self.tape(f, g)?;
        Ok(self.loss(&tape)?.value)
    }

    // Full analytic gradients (dL/dθ, dL/dw) via the trainer's chaining:
    // embedded gradients go through g's parameters, and the fake-side path
    // continues through g's input into f.
    fn analytic(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let tape = self.tape(&self.f, &self.g)?;
        let mut grads_f = vec![0.0; self.f.param_count()];
        let mut grads_g = vec![0.0; self.g.param_count()];
        let k = self.x_real.len();

        let chain_real = |idx: usize, grad: &[f64], grads_g: &mut [f64]| -> Result<()> {
            self.g
                .backward_accumulate(&tape.g_real_caches[idx], grad, grads_g)?;
            Ok(())
        };
        let chain_fake =
            |idx: usize, grad: &[f64], grads_g: &mut [f64], grads_f: &mut [f64]| -> Result<()> {
                let input_grad = {
                    let (param_part, input_part) = self.g.backward(&tape.g_fake_caches[idx], grad)?;
                    for (acc, v) in grads_g.iter_mut().zip(&param_part) {
                        *acc += v;
                    }
                    input_part
                };
                self.f
                    .backward_accumulate(&tape.f_caches[idx], &input_grad, grads_f)?;
                Ok(())
            };

        match self.family {
            Family::Mm | Family::Pair => {
                let loss = self.loss(&tape)?;
                for i in 0..k {
                    chain_real(i, &loss.grads[i], &mut grads_g)?;
                }
                for j in 0..k {
                    chain_fake(j, &loss.grads[k + j], &mut grads_g, &mut grads_f)?;
                }
            }
            Family::Triplet | Family::Apn => {
                let loss = self.loss(&tape)?;
                chain_real(0, &loss.grads[0], &mut grads_g)?;
                chain_real(1, &loss.grads[1], &mut grads_g)?;
                chain_fake(0, &loss.grads[2], &mut grads_g, &mut grads_f)?;
            }
            Family::Img => {
                let loss = self.loss(&tape)?;
                for j in 0..k {
                    self.f
                        .backward_accumulate(&tape.f_caches[j], &loss.grads[j], &mut grads_f)?;
                }
            }
            Family::GenTotal => {
                let img = img_loss(&self.x_real, &tape.x_fake)?;
                let pair = pair_loss(&tape.e_real, &tape.e_fake)?;
                let mm = mm_loss(&tape.e_real, &tape.e_fake, self.lambda, MatchMode::Both)?;
                // Chain each embedded component into data space, then let
                // the total-loss operation combine them.
                let chain_to_data = |loss: &LossValue| -> Result<LossValue> {
                    let mut grads = Vec::with_capacity(k);
                    for j in 0..k {
                        grads.push(
                            self.g
                                .input_gradient(&tape.g_fake_caches[j], &loss.grads[k + j])?,
                        );
                    }
                    Ok(LossValue {
                        value: loss.value,
                        grads,
                    })
                };
                let total = gen_total_loss(
                    &img,
                    &chain_to_data(&pair)?,
                    &chain_to_data(&mm)?,
                    self.lambda2,
                    self.lambda3,
                )?;
                for j in 0..k {
                    self.f
                        .backward_accumulate(&tape.f_caches[j], &total.grads[j], &mut grads_f)?;
                }
                // The real-side embedded gradients reach only w.
                for i in 0..k {
                    let mut combined = vec![0.0; pair.grads[i].len()];
                    for (c, (p, m)) in combined
                        .iter_mut()
                        .zip(pair.grads[i].iter().zip(&mm.grads[i]))
                    {
                        *c = self.lambda2 * p + self.lambda3 * m;
                    }
                    chain_real(i, &combined, &mut grads_g)?;
                }
                // And the fake-side embedded gradients reach w as well.
                for j in 0..k {
                    let mut combined = vec![0.0; pair.grads[k + j].len()];
                    for (c, (p, m)) in combined
                        .iter_mut()
                        .zip(pair.grads[k + j].iter().zip(&mm.grads[k + j]))
                    {
                        *c = self.lambda2 * p + self.lambda3 * m;
                    }
                    self.g
                        .backward_accumulate(&tape.g_fake_caches[j], &combined, &mut grads_g)?;
                }
            }
        }
        Ok((grads_f, grads_g))
    }

    // A configuration is unusable when the finite-difference step could
    // cross a non-smooth point.
    fn near_kink(&self) -> Result<bool> {
        let tape = self.tape(&self.f, &self.g)?;
        for cache in tape.f_caches.iter() {
            if self.f.cache_near_kink(cache, KINK_TOL) {
                return Ok(true);
            }
        }
        for cache in tape.g_real_caches.iter().chain(&tape.g_fake_caches) {
            if self.g.cache_near_kink(cache, KINK_TOL) {
                return Ok(true);
            }
        }
        let hinge_near = |e_a: &[f64], e_p: &[f64], e_n: &[f64], gamma: f64| -> bool {
            let d_ap2: f64 = e_a.iter().zip(e_p).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_an2: f64 = e_a.iter().zip(e_n).map(|(a, b)| (a - b) * (a - b)).sum();
            let mut arg = d_ap2 - d_an2 + self.alpha;
            if gamma != 0.0 {
                let u: Vec<f64> = e_n.iter().zip(e_a).map(|(n, a)| n - a).collect();
                let v: Vec<f64> = e_p.iter().zip(e_a).map(|(p, a)| p - a).collect();
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nu < 1e-6 || nv < 1e-6 {
                    return true;
                }
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                arg -= gamma * dot / (nu * nv);
            }
            arg.abs() < KINK_TOL
        };
        let mm_near = |e_real: &[Vec<f64>], e_fake: &[Vec<f64>]| -> bool {
            let diam = |batch: &[Vec<f64>]| -> f64 {
                let k = batch.len();
                let mut sum = 0.0;
                for i in 0..k {
                    for j in (i + 1)..k {
                        let d: f64 = batch[i]
                            .iter()
                            .zip(&batch[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        sum += 2.0 * d;
                    }
                }
                (sum / (k * k) as f64).sqrt()
            };
            let mean = |batch: &[Vec<f64>]| -> Vec<f64> {
                let mut m = vec![0.0; batch[0].len()];
                for v in batch {
                    for (a, b) in m.iter_mut().zip(v) {
                        *a += b / batch.len() as f64;
                    }
                }
                m
            };
            let c: f64 = crate::space::euclidean(&mean(e_real), &mean(e_fake));
            (diam(e_real) - diam(e_fake)).abs() < KINK_TOL || c < KINK_TOL
        };
        Ok(match self.family {
            Family::Mm => mm_near(&tape.e_real, &tape.e_fake),
            Family::Triplet => hinge_near(&tape.e_real[0], &tape.e_real[1], &tape.e_fake[0], 0.0),
            Family::Apn => hinge_near(&tape.e_real[0], &tape.e_real[1], &tape.e_fake[0], self.gamma),
            Family::Pair => tape
                .e_real
                .iter()
                .zip(&tape.e_fake)
                .any(|(r, f)| crate::space::euclidean(r, f) < KINK_TOL),
            Family::Img => self
                .x_real
                .iter()
                .zip(&tape.x_fake)
                .any(|(r, f)| r.iter().zip(f).any(|(a, b)| (a - b).abs() < KINK_TOL)),
            Family::GenTotal => {
                mm_near(&tape.e_real, &tape.e_fake)
                    || tape
                        .e_real
                        .iter()
                        .zip(&tape.e_fake)
                        .any(|(r, f)| crate::space::euclidean(r, f) < KINK_TOL)
                    || self
                        .x_real
                        .iter()
                        .zip(&tape.x_fake)
                        .any(|(r, f)| r.iter().zip(f).any(|(a, b)| (a - b).abs() < KINK_TOL))
            }
        })
    }
}

/// Runs the full audit. `corrupt` perturbs one analytic partial, a test
/// hook proving the harness can fail.
pub fn run_gradcheck(seed: u64, corrupt: bool) -> Result<GradcheckReport> {
    let mut report = GradcheckReport {
        checked: 0,
        failures: 0,
        worst: None,
    };
    for (fi, family) in ALL_FAMILIES.iter().enumerate() {
        // Redraw until the configuration is clear of kinks.
        let mut scenario = None;
        for attempt in 0..32 {
            let s = Scenario::build(*family, seed.wrapping_add(1000 * fi as u64 + attempt))?;
            if !s.near_kink()? {
                scenario = Some(s);
                break;
            }
        }
        let scenario = scenario.ok_or_else(|| {
            crate::error::Error::invalid("gradcheck", format!("{}: no kink-free draw", family.name()))
        })?;

        let (mut grads_f, grads_g) = scenario.analytic()?;
        if corrupt && fi == 0 {
            grads_f[0] += 1e-2;
        }

        check_params(
            &scenario,
            family.name(),
            "generator",
            true,
            &grads_f,
            &mut report,
        )?;
        if family.uses_metric() {
            check_params(
                &scenario,
                family.name(),
                "metric",
                false,
                &grads_g,
                &mut report,
            )?;
        }
    }
    Ok(report)
}

fn check_params(
    scenario: &Scenario,
    name: &'static str,
    network: &'static str,
    is_f: bool,
    analytic: &[f64],
    report: &mut GradcheckReport,
) -> Result<()> {
    let base = if is_f {
        scenario.f.params()
    } else {
        scenario.g.params()
    };
    let mut probe = base.clone();
    for i in 0..base.len() {
        probe[i] = base[i] + FD_STEP;
        let up = eval_with(scenario, is_f, &probe)?;
        probe[i] = base[i] - FD_STEP;
        let down = eval_with(scenario, is_f, &probe)?;
        probe[i] = base[i];
        let numeric = (up - down) / (2.0 * FD_STEP);

        let diff = (analytic[i] - numeric).abs();
        let scale = analytic[i].abs().max(numeric.abs());
        let rel = if scale > 0.0 { diff / scale } else { 0.0 };
        let pass = diff <= ABS_FLOOR || rel < REL_TOL;

        report.checked += 1;
        if !pass {
            report.failures += 1;
        }
        let record = match &report.worst {
            Some(w) => rel > w.rel_error,
            None => rel > 0.0,
        };
        if record {
            report.worst = Some(WorstPartial {
                scenario: name,
                network,
                index: i,
                analytic: analytic[i],
                numeric,
                rel_error: rel,
            });
        }
    }
    Ok(())
}

fn eval_with(scenario: &Scenario, is_f: bool, params: &[f64]) -> Result<f64> {
    if is_f {
        let mut f = scenario.f.clone();
        f.set_params(params)?;
        scenario.value(&f, &scenario.g)
    } else {
        let mut g = scenario.g.clone();
        g.set_params(params)?;
        scenario.value(&scenario.f, &g)
    }
}
