//! Flat `key = value` run configuration.
//!
//! `#` starts a comment, blank lines are ignored, and unknown or duplicate
//! keys are errors so a typo in a hyperparameter name cannot silently fall
//! back to a default. Parsing then re-serializing is idempotent.

use crate::error::{Error, Result};
use crate::losses::MatchMode;
use crate::synth::{ManifoldKind, ManifoldSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Training task: unpaired matching against the manifold, or paired
/// reconstruction from a linear degradation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Unconditional,
    Supervised,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Unconditional => write!(f, "unconditional"),
            Mode::Supervised => write!(f, "supervised"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconditional" => Ok(Mode::Unconditional),
            "supervised" => Ok(Mode::Supervised),
            _ => Err(Error::invalid("mode", format!("unknown {s:?}"))),
        }
    }
}

/// Adam settings for one network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Every hyperparameter of a run. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub seed: u64,
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub embed_dim: usize,
    pub batch_size: usize,
    pub triplet_count: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub gen_opt: OptSettings,
    pub met_opt: OptSettings,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub diagnostics_interval: usize,
    pub manifold: ManifoldKind,
    pub noise_sigma: f64,
    pub match_mode: MatchMode,
    pub gen_hidden: Vec<usize>,
    pub met_hidden: Vec<usize>,
    pub early_stop: bool,
    pub degrade_keep: Vec<usize>,
    pub degrade_noise: f64,
}

impl TrainConfig {
    /// Desk-scale defaults for the given mode; `mode` itself has no default
    /// and is the one required key in config files.
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            seed: 42,
            latent_dim: 4,
            ambient_dim: 2,
            embed_dim: 4,
            batch_size: 64,
            triplet_count: 64,
            lambda: 1.0,
            alpha: 1.0,
            gamma: 0.01,
            lambda2: 1e-3,
            lambda3: 1e-3,
            gen_opt: OptSettings {
                learning_rate: 4e-4,
                beta1: 0.0,
                beta2: 0.9,
            },
            met_opt: OptSettings {
                learning_rate: 1e-5,
                beta1: 0.5,
                beta2: 0.999,
            },
            epochs: 200,
            steps_per_epoch: 20,
            diagnostics_interval: 20,
            manifold: ManifoldKind::Circle { radius: 1.0 },
            noise_sigma: 0.0,
            match_mode: MatchMode::Both,
            gen_hidden: vec![64, 64],
            met_hidden: vec![64, 64],
            early_stop: false,
            degrade_keep: vec![],
            degrade_noise: 0.0,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(&label, e))?;
        Self::parse_str(&text, &label)
    }

    /// Parses config text; `label` names the source in error messages.
    pub fn parse_str(text: &str, label: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(label, line_no, format!("expected `key = value`, got {raw:?}"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::parse(label, line_no, format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = entries.get(&key) {
                return Err(Error::parse(
                    label,
                    line_no,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
            entries.insert(key, (line_no, value));
        }

        let mut src = Source {
            label,
            entries,
            triplet_count_given: false,
        };
        src.triplet_count_given = src.entries.contains_key("triplet_count");

        let mode: Mode = match src.entries.remove("mode") {
            Some((line, v)) => v
                .parse()
                .map_err(|e: Error| Error::parse(label, line, e.to_string()))?,
            None => {
                return Err(Error::parse(label, 0, "missing required key `mode`"));
            }
        };

        let mut cfg = TrainConfig::defaults(mode);
        cfg.seed = src.take("seed", cfg.seed)?;
        cfg.latent_dim = src.take("latent_dim", cfg.latent_dim)?;
        cfg.ambient_dim = src.take("ambient_dim", cfg.ambient_dim)?;
        cfg.embed_dim = src.take("embed_dim", cfg.embed_dim)?;
        cfg.batch_size = src.take("batch_size", cfg.batch_size)?;
        cfg.lambda = src.take("lambda", cfg.lambda)?;
        cfg.alpha = src.take("alpha", cfg.alpha)?;
        cfg.gamma = src.take("gamma", cfg.gamma)?;
        cfg.lambda2 = src.take("lambda2", cfg.lambda2)?;
        cfg.lambda3 = src.take("lambda3", cfg.lambda3)?;
        cfg.gen_opt.learning_rate = src.take("gen_lr", cfg.gen_opt.learning_rate)?;
        cfg.gen_opt.beta1 = src.take("gen_beta1", cfg.gen_opt.beta1)?;
        cfg.gen_opt.beta2 = src.take("gen_beta2", cfg.gen_opt.beta2)?;
        cfg.met_opt.learning_rate = src.take("met_lr", cfg.met_opt.learning_rate)?;
        cfg.met_opt.beta1 = src.take("met_beta1", cfg.met_opt.beta1)?;
        cfg.met_opt.beta2 = src.take("met_beta2", cfg.met_opt.beta2)?;
        cfg.epochs = src.take("epochs", cfg.epochs)?;
        cfg.steps_per_epoch = src.take("steps_per_epoch", cfg.steps_per_epoch)?;
        cfg.diagnostics_interval = src.take("diagnostics_interval", cfg.diagnostics_interval)?;
        cfg.noise_sigma = src.take("noise_sigma", cfg.noise_sigma)?;
        cfg.early_stop = src.take_bool("early_stop", cfg.early_stop)?;
        cfg.gen_hidden = src.take_list("gen_hidden", cfg.gen_hidden.clone())?;
        cfg.met_hidden = src.take_list("met_hidden", cfg.met_hidden.clone())?;
        cfg.degrade_keep = src.take_list("degrade_keep", cfg.degrade_keep.clone())?;
        cfg.degrade_noise = src.take("degrade_noise", cfg.degrade_noise)?;

        if let Some((line, v)) = src.entries.remove("match_mode") {
            cfg.match_mode = v
                .parse()
                .map_err(|e: Error| Error::parse(label, line, e.to_string()))?;
        }

        let manifold_name = src.entries.remove("manifold");
        let radius = src.take("manifold_radius", 1.0)?;
        let pitch = src.take("manifold_pitch", 1.0)?;
        let turns = src.take("manifold_turns", 2.0)?;
        let scale = src.take("manifold_scale", 1.0)?;
        if let Some((line, name)) = manifold_name {
            cfg.manifold = match name.as_str() {
                "circle" => ManifoldKind::Circle { radius },
                "sphere" => ManifoldKind::Sphere { radius },
                "helix" => ManifoldKind::Helix { radius, pitch, turns },
                "swiss_roll" => ManifoldKind::SwissRoll { scale },
                other => {
                    return Err(Error::parse(label, line, format!("unknown manifold `{other}`")));
                }
            };
        } else {
            cfg.manifold = ManifoldKind::Circle { radius };
        }

        // l defaults to k when not given explicitly.
        cfg.triplet_count = if src.triplet_count_given {
            src.take("triplet_count", cfg.batch_size)?
        } else {
            cfg.batch_size
        };

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive_dims = [
            ("latent_dim", self.latent_dim),
            ("ambient_dim", self.ambient_dim),
            ("embed_dim", self.embed_dim),
            ("steps_per_epoch", self.steps_per_epoch),
            ("diagnostics_interval", self.diagnostics_interval),
        ];
        for (name, v) in positive_dims {
            if v == 0 {
                return Err(Error::invalid("config", format!("{name} must be >= 1")));
            }
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("config", "batch_size must be >= 2"));
        }
        if self.triplet_count < 1 {
            return Err(Error::invalid("config", "triplet_count must be >= 1"));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::invalid("config", format!("{name} must be >= 0")));
            }
        }
        for (name, opt) in [("gen", self.gen_opt), ("met", self.met_opt)] {
            if opt.learning_rate <= 0.0 || !opt.learning_rate.is_finite() {
                return Err(Error::invalid("config", format!("{name}_lr must be > 0")));
            }
            if !(0.0..1.0).contains(&opt.beta1) || !(0.0..1.0).contains(&opt.beta2) {
                return Err(Error::invalid("config", format!("{name} betas must lie in [0, 1)")));
            }
        }
        if self.ambient_dim < self.manifold.natural_dim() {
            return Err(Error::invalid(
                "config",
                format!(
                    "ambient_dim {} too small for {}",
                    self.ambient_dim,
                    self.manifold.name()
                ),
            ));
        }
        if self.mode == Mode::Supervised {
            if self.degrade_keep.is_empty() {
                return Err(Error::invalid(
                    "config",
                    "supervised mode needs a nonempty degrade_keep list",
                ));
            }
            if self.degrade_keep.len() >= self.ambient_dim {
                return Err(Error::invalid(
                    "config",
                    "degrade_keep must drop at least one coordinate",
                ));
            }
            if self.degrade_keep.iter().any(|&i| i >= self.ambient_dim) {
                return Err(Error::invalid("config", "degrade_keep index out of range"));
            }
            if self.degrade_noise.is_nan() || self.degrade_noise < 0.0 {
                return Err(Error::invalid("config", "degrade_noise must be >= 0"));
            }
        }
        Ok(())
    }

    /// The manifold together with ambient dimension and tube width; the
    /// embedding rotation (if any) is fixed by the master seed.
    pub fn manifold_spec(&self) -> ManifoldSpec {
        ManifoldSpec {
            kind: self.manifold,
            ambient_dim: self.ambient_dim,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    /// Canonical serialization: fixed key order, every effective value
    /// written out, so a saved config reconstructs the run exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "latent_dim = {}", self.latent_dim);
        let _ = writeln!(s, "ambient_dim = {}", self.ambient_dim);
        let _ = writeln!(s, "embed_dim = {}", self.embed_dim);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "triplet_count = {}", self.triplet_count);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "lambda2 = {}", self.lambda2);
        let _ = writeln!(s, "lambda3 = {}", self.lambda3);
        let _ = writeln!(s, "gen_lr = {}", self.gen_opt.learning_rate);
        let _ = writeln!(s, "gen_beta1 = {}", self.gen_opt.beta1);
        let _ = writeln!(s, "gen_beta2 = {}", self.gen_opt.beta2);
        let _ = writeln!(s, "met_lr = {}", self.met_opt.learning_rate);
        let _ = writeln!(s, "met_beta1 = {}", self.met_opt.beta1);
        let _ = writeln!(s, "met_beta2 = {}", self.met_opt.beta2);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "steps_per_epoch = {}", self.steps_per_epoch);
        let _ = writeln!(s, "diagnostics_interval = {}", self.diagnostics_interval);
        let _ = writeln!(s, "manifold = {}", self.manifold.name());
        match self.manifold {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere { radius } => {
                let _ = writeln!(s, "manifold_radius = {radius}");
            }
            ManifoldKind::Helix { radius, pitch, turns } => {
                let _ = writeln!(s, "manifold_radius = {radius}");
                let _ = writeln!(s, "manifold_pitch = {pitch}");
                let _ = writeln!(s, "manifold_turns = {turns}");
            }
            ManifoldKind::SwissRoll { scale } => {
                let _ = writeln!(s, "manifold_scale = {scale}");
            }
        }
        let _ = writeln!(s, "noise_sigma = {}", self.noise_sigma);
        let _ = writeln!(s, "match_mode = {}", self.match_mode);
        let _ = writeln!(s, "gen_hidden = {}", join(&self.gen_hidden));
        let _ = writeln!(s, "met_hidden = {}", join(&self.met_hidden));
        let _ = writeln!(s, "early_stop = {}", self.early_stop);
        if self.mode == Mode::Supervised {
            let _ = writeln!(s, "degrade_keep = {}", join(&self.degrade_keep));
            let _ = writeln!(s, "degrade_noise = {}", self.degrade_noise);
        }
        s
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "seed",
    "latent_dim",
    "ambient_dim",
    "embed_dim",
    "batch_size",
    "triplet_count",
    "lambda",
    "alpha",
    "gamma",
    "lambda2",
    "lambda3",
    "gen_lr",
    "gen_beta1",
    "gen_beta2",
    "met_lr",
    "met_beta1",
    "met_beta2",
    "epochs",
    "steps_per_epoch",
    "diagnostics_interval",
    "manifold",
    "manifold_radius",
    "manifold_pitch",
    "manifold_turns",
    "manifold_scale",
    "noise_sigma",
    "match_mode",
    "gen_hidden",
    "met_hidden",
    "early_stop",
    "degrade_keep",
    "degrade_noise",
];

struct Source<'a> {
    label: &'a str,
    entries: BTreeMap<String, (usize, String)>,
    triplet_count_given: bool,
}

impl Source<'_> {
    fn take<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            Some((line, v)) => v.parse().map_err(|_| {
                Error::parse(self.label, line, format!("cannot parse `{key} = {v}`"))
            }),
            None => Ok(default),
        }
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.entries.remove(key) {
            Some((line, v)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::parse(
                    self.label,
                    line,
                    format!("`{key}` expects true or false, got {v:?}"),
                )),
            },
            None => Ok(default),
        }
    }

    fn take_list(&mut self, key: &str, default: Vec<usize>) -> Result<Vec<usize>> {
        match self.entries.remove(key) {
            Some((line, v)) => v
                .split(',')
                .map(|part| {
                    part.trim().parse().map_err(|_| {
                        Error::parse(self.label, line, format!("bad list entry {part:?} in `{key}`"))
                    })
                })
                .collect(),
            None => Ok(default),
        }
    }
}
