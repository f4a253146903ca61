//! Command-line front end: training runs, standalone descriptor
//! computation, distance-matrix diagnostics, and the gradient audit.

use clap::{Parser, Subcommand};
use mvm::config::TrainConfig;
use mvm::descriptors::{centroid_distance, frechet_mean_discrete, hausdorff_distance, p_diameter};
use mvm::error::Error;
use mvm::io;
use mvm::net::DenseNetwork;
use mvm::space::{Metric, SampleSet};
use mvm::spectrum::{distance_matrix, pca_project_2d};
use mvm::train;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit codes: 0 success, 1 input or configuration error, 3 training
/// aborted on a non-finite loss.
const EXIT_ERROR: i32 = 1;
const EXIT_NON_FINITE: i32 = 3;

#[derive(Parser)]
#[command(name = "mvm", version, about = "Manifold matching with a learned metric")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training configuration and write traces, snapshots,
    /// checkpoints, and a manifest into the output directory.
    Train {
        /// Path to a `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Geometric descriptors of a point CSV: Fréchet-mean index and
    /// p-diameters; with a second file, centroid and Hausdorff distances.
    Descriptors {
        /// Point CSV, one row per point.
        #[arg(long)]
        input: PathBuf,
        /// Optional second point CSV for two-set descriptors.
        #[arg(long)]
        input2: Option<PathBuf>,
        /// `euclidean` or a metric-network checkpoint path.
        #[arg(long, default_value = "euclidean")]
        metric: String,
        /// Comma-separated list of diameter orders.
        #[arg(long, default_value = "2")]
        p: String,
    },
    /// Top eigenvalues of the normalized distance matrix, and optionally a
    /// 2-d principal-component projection of the embedded points.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        /// `euclidean` or a metric-network checkpoint path.
        #[arg(long, default_value = "euclidean")]
        metric: String,
        /// How many leading eigenvalues to print.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Write the 2-d projection of the embedded points to this CSV.
        #[arg(long)]
        pca: Option<PathBuf>,
    },
    /// Finite-difference audit of every loss; exits nonzero on any failure.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test hook: corrupt one analytic partial to prove the audit can
        /// fail.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("MVM_LOG")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Train { config, out } => cmd_train(&config, &out),
        Command::Descriptors {
            input,
            input2,
            metric,
            p,
        } => cmd_descriptors(&input, input2.as_deref(), &metric, &p),
        Command::Diagnose {
            input,
            metric,
            count,
            pca,
        } => cmd_diagnose(&input, &metric, count, pca.as_deref()),
        Command::Gradcheck { seed, corrupt } => cmd_gradcheck(seed, corrupt),
    };
    std::process::exit(code);
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_ERROR
}

// Either the ambient Euclidean metric or a pullback through a checkpoint.
fn load_metric(metric: &str) -> Result<Option<DenseNetwork>, Error> {
    if metric == "euclidean" {
        Ok(None)
    } else {
        let (net, _) = io::load_checkpoint(Path::new(metric))?;
        Ok(Some(net))
    }
}

fn cmd_train(config_path: &Path, out_dir: &Path) -> i32 {
    let started = Instant::now();
    let cfg = match TrainConfig::from_file(config_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return fail(&Error::io(out_dir.display().to_string(), e));
    }

    let run = match train::train(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };

    let write = || -> Result<(), Error> {
        io::write_trace_csv(&out_dir.join("trace.csv"), &run.trace)?;
        io::write_spectra_csv(&out_dir.join("spectra.csv"), &run.trace)?;
        io::save_checkpoint(&out_dir.join("checkpoint_f.ckpt"), &run.generator, cfg.seed)?;
        io::save_checkpoint(&out_dir.join("checkpoint_g.ckpt"), &run.metric_net, cfg.seed)?;
        let snap_dir = out_dir.join("snapshots");
        std::fs::create_dir_all(&snap_dir)
            .map_err(|e| Error::io(snap_dir.display().to_string(), e))?;
        for (epoch, set) in &run.snapshots {
            io::write_sample_csv(&snap_dir.join(format!("sf_epoch_{epoch:05}.csv")), set)?;
        }
        let ckpt_dir = out_dir.join("checkpoints");
        std::fs::create_dir_all(&ckpt_dir)
            .map_err(|e| Error::io(ckpt_dir.display().to_string(), e))?;
        for (epoch, f_net, g_net) in &run.checkpoints {
            io::save_checkpoint(&ckpt_dir.join(format!("f_epoch_{epoch:05}.ckpt")), f_net, cfg.seed)?;
            io::save_checkpoint(&ckpt_dir.join(format!("g_epoch_{epoch:05}.ckpt")), g_net, cfg.seed)?;
        }
        std::fs::write(out_dir.join("config_resolved.cfg"), cfg.to_config_string())
            .map_err(|e| Error::io(out_dir.display().to_string(), e))?;

        let status = match &run.abort {
            None => "ok".to_string(),
            Some(a) => format!(
                "aborted_non_finite (epoch {}, step {}: {})",
                a.epoch, a.step, a.reason
            ),
        };
        io::write_manifest(
            &out_dir.join("manifest.txt"),
            &[
                ("mode", cfg.mode.to_string()),
                ("config", "config_resolved.cfg".to_string()),
                ("trace", "trace.csv".to_string()),
                ("spectra", "spectra.csv".to_string()),
                ("checkpoint_f", "checkpoint_f.ckpt".to_string()),
                ("checkpoint_g", "checkpoint_g.ckpt".to_string()),
                ("snapshots", "snapshots/".to_string()),
                ("checkpoints", "checkpoints/".to_string()),
                ("epochs_completed", run.trace.len().to_string()),
                ("status", status),
                (
                    "wall_clock_seconds",
                    format!("{:.3}", started.elapsed().as_secs_f64()),
                ),
            ],
        )?;
        Ok(())
    };
    if let Err(e) = write() {
        return fail(&e);
    }

    match run.abort {
        None => {
            println!(
                "completed {} epochs in {:.1}s; outputs in {}",
                run.trace.len(),
                started.elapsed().as_secs_f64(),
                out_dir.display()
            );
            0
        }
        Some(a) => {
            eprintln!(
                "aborted at epoch {} step {}: {} (last valid checkpoint written)",
                a.epoch, a.step, a.reason
            );
            EXIT_NON_FINITE
        }
    }
}

fn cmd_descriptors(input: &Path, input2: Option<&Path>, metric: &str, p_list: &str) -> i32 {
    let inner = || -> Result<(), Error> {
        let s = io::read_sample_csv(input)?;
        let net = load_metric(metric)?;
        let m = match &net {
            Some(n) => Metric::Pullback(n),
            None => Metric::Euclidean,
        };
        let ps: Vec<f64> = p_list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid("p list", format!("bad entry {t:?}")))
            })
            .collect::<Result<_, _>>()?;

        println!("points = {}", s.len());
        println!("frechet_mean_index = {}", frechet_mean_discrete(&s, &m)?);
        for p in &ps {
            println!("diam_{p} = {}", p_diameter(&s, &m, *p)?);
        }

        if let Some(path2) = input2 {
            let s2 = io::read_sample_csv(path2)?;
            let embedding = match &net {
                Some(n) => n.clone(),
                None => DenseNetwork::identity(s.dim()),
            };
            println!("centroid_distance = {}", centroid_distance(&s, &s2, &embedding)?);
            println!("hausdorff = {}", hausdorff_distance(&s, &s2, &m)?);
        }
        Ok(())
    };
    match inner() {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn cmd_diagnose(input: &Path, metric: &str, count: usize, pca: Option<&Path>) -> i32 {
    let inner = || -> Result<(), Error> {
        let s = io::read_sample_csv(input)?;
        let net = load_metric(metric)?;
        let m = match &net {
            Some(n) => Metric::Pullback(n),
            None => Metric::Euclidean,
        };
        let matrix = distance_matrix(&s, &m, true)?;
        let eigs = matrix.top_eigenvalues(count.min(s.len()))?;
        let cells: Vec<String> = eigs.iter().map(|v| v.to_string()).collect();
        println!("eigenvalues = {}", cells.join(","));

        if let Some(path) = pca {
            let embedded = m.embed_set(&s)?;
            let proj = pca_project_2d(&embedded)?;
            let set = SampleSet::new(proj.iter().map(|p| p.to_vec()).collect())?;
            io::write_sample_csv(path, &set)?;
            println!("pca_csv = {}", path.display());
        }
        Ok(())
    };
    match inner() {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn cmd_gradcheck(seed: u64, corrupt: bool) -> i32 {
    match mvm::gradcheck::run_gradcheck(seed, corrupt) {
        Ok(report) => {
            println!(
                "checked {} partials, {} failures",
                report.checked, report.failures
            );
            if let Some(w) = &report.worst {
                println!(
                    "worst: {} ({} param {}): analytic {:.9e}, numeric {:.9e}, rel {:.3e}",
                    w.scenario, w.network, w.index, w.analytic, w.numeric, w.rel_error
                );
            }
            if report.passed() {
                0
            } else {
                EXIT_ERROR
            }
        }
        Err(e) => fail(&e),
    }
}
