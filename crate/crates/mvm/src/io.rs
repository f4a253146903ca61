//! File formats: sample-set CSV, trace and spectra CSV, network
//! checkpoints, and the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so saving
//! and reloading is bit-exact and identical runs produce byte-identical
//! files.

use crate::error::{Error, Result};
use crate::net::{Activation, DenseNetwork, Layer};
use crate::space::SampleSet;
use crate::train::TraceRecord;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Fixed trace header; unconditional runs leave `d_p` and `loss_gen` empty.
pub const TRACE_HEADER: &str = "epoch,d_c,d_g,d_p,d_H,loss_mm,loss_apn,loss_gen";

/// Fixed spectra header: epoch plus ten eigenvalue columns.
pub const SPECTRA_HEADER: &str =
    "epoch,ev1,ev2,ev3,ev4,ev5,ev6,ev7,ev8,ev9,ev10";

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_all(path: &Path, content: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(content.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// One row per point, columns are coordinates.
pub fn write_sample_csv(path: &Path, s: &SampleSet) -> Result<()> {
    let mut out = String::new();
    for p in s.points() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    write_all(path, &out)
}

/// Reads a coordinate CSV; every row must have the same number of columns.
pub fn read_sample_csv(path: &Path) -> Result<SampleSet> {
    let label = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&label, e))?;
    let reader = BufReader::new(file);
    let mut points = Vec::new();
    let mut width = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(&label, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let coords: Vec<f64> = trimmed
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse()
                    .map_err(|_| Error::parse(&label, line_no, format!("bad number {cell:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if coords.len() != w {
                return Err(Error::parse(
                    &label,
                    line_no,
                    format!("ragged row: {} columns, expected {w}", coords.len()),
                ));
            }
        } else {
            width = Some(coords.len());
        }
        points.push(coords);
    }
    SampleSet::new(points)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trace CSV with the fixed header; column order never depends on config.
pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_HEADER}");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.epoch,
            r.d_c,
            r.d_g,
            opt_cell(r.d_p),
            r.d_h,
            r.loss_mm,
            r.loss_apn,
            opt_cell(r.loss_gen)
        );
    }
    write_all(path, &out)
}

/// Spectra CSV: one row per record that carries eigenvalues, padded or
/// truncated to ten columns.
pub fn write_spectra_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{SPECTRA_HEADER}");
    for r in trace {
        if let Some(eigs) = &r.eigenvalues {
            let mut cells: Vec<String> = eigs.iter().take(10).map(|v| v.to_string()).collect();
            while cells.len() < 10 {
                cells.push("0".to_string());
            }
            let _ = writeln!(out, "{},{}", r.epoch, cells.join(","));
        }
    }
    write_all(path, &out)
}

/// Text checkpoint: a header with the layer spec and seed, then one weight
/// row per output unit and a bias row per layer.
pub fn save_checkpoint(path: &Path, net: &DenseNetwork, seed: u64) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "mvm-checkpoint v1");
    let _ = writeln!(out, "seed = {seed}");
    let _ = writeln!(out, "layers = {}", net.layers().len());
    for (i, layer) in net.layers().iter().enumerate() {
        let _ = writeln!(
            out,
            "layer {i}: in={} out={} activation={}",
            layer.weights[0].len(),
            layer.weights.len(),
            layer.activation
        );
        for row in &layer.weights {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "w: {}", cells.join(","));
        }
        let cells: Vec<String> = layer.bias.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "b: {}", cells.join(","));
    }
    write_all(path, &out)
}

/// Loads a checkpoint saved by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(DenseNetwork, u64)> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&label, e))?;
    let mut lines = text.lines().enumerate();

    let mut next_line = |expect: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::parse(&label, 0, format!("unexpected end of file, expected {expect}")))
    };

    let (n, header) = next_line("header")?;
    if header.trim() != "mvm-checkpoint v1" {
        return Err(Error::parse(&label, n, "not an mvm checkpoint"));
    }
    let (n, seed_line) = next_line("seed")?;
    let seed: u64 = seed_line
        .trim()
        .strip_prefix("seed = ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(&label, n, "malformed seed line"))?;
    let (n, count_line) = next_line("layer count")?;
    let layer_count: usize = count_line
        .trim()
        .strip_prefix("layers = ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(&label, n, "malformed layers line"))?;

    let parse_row = |line: &str, line_no: usize, prefix: &str| -> Result<Vec<f64>> {
        line.trim()
            .strip_prefix(prefix)
            .ok_or_else(|| Error::parse(&label, line_no, format!("expected `{prefix}` row")))?
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse()
                    .map_err(|_| Error::parse(&label, line_no, format!("bad number {cell:?}")))
            })
            .collect()
    };

    let mut layers = Vec::with_capacity(layer_count);
    for li in 0..layer_count {
        let (n, spec_line) = next_line("layer spec")?;
        let spec = spec_line.trim();
        let rest = spec
            .strip_prefix(&format!("layer {li}: "))
            .ok_or_else(|| Error::parse(&label, n, format!("expected layer {li} spec")))?;
        let mut in_dim = 0usize;
        let mut out_dim = 0usize;
        let mut activation = Activation::Identity;
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("in=") {
                in_dim = v
                    .parse()
                    .map_err(|_| Error::parse(&label, n, "bad in="))?;
            } else if let Some(v) = part.strip_prefix("out=") {
                out_dim = v
                    .parse()
                    .map_err(|_| Error::parse(&label, n, "bad out="))?;
            } else if let Some(v) = part.strip_prefix("activation=") {
                activation = v.parse()?;
            }
        }
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::parse(&label, n, "layer spec missing dimensions"));
        }
        let mut weights = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            let (n, row) = next_line("weight row")?;
            let row = parse_row(row, n, "w: ")?;
            if row.len() != in_dim {
                return Err(Error::parse(&label, n, "weight row width mismatch"));
            }
            weights.push(row);
        }
        let (n, bias_line) = next_line("bias row")?;
        let bias = parse_row(bias_line, n, "b: ")?;
        if bias.len() != out_dim {
            return Err(Error::parse(&label, n, "bias width mismatch"));
        }
        layers.push(Layer {
            weights,
            bias,
            activation,
        });
    }
    Ok((DenseNetwork::from_layers(layers)?, seed))
}

/// Plain `key = value` manifest describing one run's outputs.
pub fn write_manifest(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut out = String::from("# mvm run manifest\n");
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    write_all(path, &out)
}
