//! Single-sample inference latency measurement.
//!
//! Timing wraps the whole input-to-forces path: submergence evaluation,
//! feature assembly, normalization, the network forward pass, and force
//! reconstruction. Measurement never alters the computation; the benched
//! outputs are returned so callers can check them against direct calls.

use std::hint::black_box;
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::defaults::{BENCH_MAX_TIMER_RESOLUTION, BENCH_WARMUP};
use crate::error::{Error, Result};
use crate::pipeline::{InferencePipeline, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BenchInput {
    pub velocity: [f64; 3],
    pub density: f64,
    pub depth: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencyStats {
    pub n: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub precision: &'static str,
    pub machine: String,
}

#[derive(Debug, Clone)]
pub struct SingleBench {
    pub stats: LatencyStats,
    /// Per-iteration wall times, in iteration order.
    pub raw_ms: Vec<f64>,
    /// One prediction per distinct input, from the measured loop.
    pub outputs: Vec<Prediction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InputMode {
    Constant,
    Varying,
}

#[derive(Debug, Clone, Serialize)]
pub struct SustainedStats {
    pub iterations: usize,
    pub elapsed_s: f64,
    pub rate_hz: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub mode: InputMode,
    pub precision: &'static str,
    pub machine: String,
}

pub fn machine_descriptor() -> String {
    format!(
        "{} {} ({} cpus)",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(0, |n| n.get())
    )
}

/// Smallest observable step of the monotonic clock, in seconds.
pub fn timer_resolution() -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..32 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1.duration_since(t0).as_secs_f64());
    }
    best
}

fn check_timer() -> Result<()> {
    let res = timer_resolution();
    if res > BENCH_MAX_TIMER_RESOLUTION {
        return Err(Error::Numeric(format!(
            "timer resolution {:.1} us is too coarse for latency measurement",
            res * 1e6
        )));
    }
    Ok(())
}

/// Nearest-rank quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn stats_from(raw_ms: &[f64], precision: Precision) -> LatencyStats {
    let n = raw_ms.len();
    let mean = raw_ms.iter().sum::<f64>() / n as f64;
    let var = raw_ms.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    let mut sorted = raw_ms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    LatencyStats {
        n,
        mean_ms: mean,
        std_ms: var.sqrt(),
        median_ms: quantile(&sorted, 0.50),
        p95_ms: quantile(&sorted, 0.95),
        p99_ms: quantile(&sorted, 0.99),
        precision: precision.as_str(),
        machine: machine_descriptor(),
    }
}

fn predict_once(
    pipeline: &InferencePipeline,
    input: &BenchInput,
    precision: Precision,
) -> Prediction {
    let v = Vector3::from(input.velocity);
    match precision {
        Precision::F64 => pipeline.predict(&v, input.density, input.depth, input.gravity),
        Precision::F32 => pipeline.predict_f32(&v, input.density, input.depth, input.gravity),
    }
}

/// Times single-sample inference over the full path. Inputs are cycled;
/// `BENCH_WARMUP` unmeasured iterations run first.
pub fn bench_single(
    pipeline: &InferencePipeline,
    inputs: &[BenchInput],
    n_iters: usize,
    precision: Precision,
) -> Result<SingleBench> {
    if inputs.is_empty() {
        return Err(Error::Config("latency run needs at least one input".into()));
    }
    if n_iters < 100 {
        return Err(Error::Config(format!(
            "latency statistics need at least 100 iterations, got {n_iters}"
        )));
    }
    check_timer()?;
    for k in 0..BENCH_WARMUP {
        black_box(predict_once(pipeline, &inputs[k % inputs.len()], precision));
    }
    let mut raw_ms = Vec::with_capacity(n_iters);
    let mut outputs = Vec::with_capacity(inputs.len());
    for k in 0..n_iters {
        let input = &inputs[k % inputs.len()];
        let t0 = Instant::now();
        let p = black_box(predict_once(pipeline, input, precision));
        raw_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        if k < inputs.len() {
            outputs.push(p);
        }
    }
    Ok(SingleBench { stats: stats_from(&raw_ms, precision), raw_ms, outputs })
}

fn varying_input(base: &BenchInput, k: usize) -> BenchInput {
    let phase = k as f64 * 0.013;
    let speed = base.velocity[0] * (1.0 + 0.5 * phase.sin());
    BenchInput {
        velocity: [speed, base.velocity[1], base.velocity[2]],
        density: base.density,
        depth: base.depth * (1.0 + 0.4 * (phase * 0.7).cos()),
        gravity: base.gravity,
    }
}

/// Runs an uninterrupted inference loop for the given wall-clock duration
/// and reports the achieved rate and latency tail.
pub fn bench_sustained(
    pipeline: &InferencePipeline,
    base: &BenchInput,
    duration_s: f64,
    mode: InputMode,
    precision: Precision,
) -> Result<(SustainedStats, Vec<f64>)> {
    if duration_s <= 0.0 {
        return Err(Error::Config("sustained run needs a positive duration".into()));
    }
    check_timer()?;
    let mut raw_ms = Vec::new();
    let start = Instant::now();
    let mut k = 0usize;
    loop {
        let input = match mode {
            InputMode::Constant => *base,
            InputMode::Varying => varying_input(base, k),
        };
        let t0 = Instant::now();
        black_box(predict_once(pipeline, &input, precision));
        raw_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        k += 1;
        if start.elapsed().as_secs_f64() >= duration_s {
            break;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut sorted = raw_ms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let stats = SustainedStats {
        iterations: raw_ms.len(),
        elapsed_s: elapsed,
        rate_hz: raw_ms.len() as f64 / elapsed,
        p99_ms: quantile(&sorted, 0.99),
        max_ms: *sorted.last().unwrap(),
        mode,
        precision: precision.as_str(),
        machine: machine_descriptor(),
    };
    Ok((stats, raw_ms))
}

/// One duration per line, milliseconds.
pub fn durations_to_text(raw_ms: &[f64]) -> String {
    let mut out = String::with_capacity(raw_ms.len() * 12);
    for d in raw_ms {
        out.push_str(&format!("{d:?}\n"));
    }
    out
}
