//! Wall-time scaling on 2-regular square marginals.

use std::time::{Duration, Instant};

use anyhow::Result;
use serde_json::{json, Value};

use ctgen_core::driver::{Config, MatrixGen, TailBound};
use ctgen_core::params::log2_ratio;
use ctgen_core::BitSource;

use crate::output::FORMAT_VERSION;

/// Untimed samples drawn before timing starts.
pub const WARMUP: usize = 20;

/// The timed samples are split into this many batches. The reported time
/// is the median batch mean, which shrugs off scheduler stalls.
pub const BATCHES: usize = 10;

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub t0: u64,
    pub log2_b_hat: Option<f64>,
    pub setup: Duration,
    pub samples: usize,
    /// Median over batches of the mean time per sample.
    pub per_sample: Duration,
    /// Mean time per sample over all timed samples.
    pub mean: Duration,
    pub restarts: u64,
}

/// Times `samples` draws (as nonzero cells) for each size `n` of the
/// 2-regular `n × n` instance. Setup is timed separately. The timed draws
/// run in `BATCHES` rounds that visit every size in turn, so slow drift in
/// machine load hits all sizes alike.
pub fn scaling(sizes: &[usize], samples: usize, seed: u64, tail: TailBound) -> Result<Vec<BenchRow>> {
    let config = Config {
        tail,
        ..Config::default()
    };
    let mut gens = Vec::with_capacity(sizes.len());
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let marg = vec![2u32; n];
        let start = Instant::now();
        let mut gen = MatrixGen::new(&marg, &marg, config.clone())?;
        gen.brute_context()?;
        let setup = start.elapsed();
        let mut src = BitSource::new(seed);
        for _ in 0..WARMUP {
            gen.sample_cells(&mut src)?;
        }
        rows.push(BenchRow {
            n,
            t0: gen.params().t0(),
            log2_b_hat: gen.params().b_hat().map(log2_ratio),
            setup,
            samples,
            per_sample: Duration::ZERO,
            mean: Duration::ZERO,
            restarts: gen.stats().restarts,
        });
        gens.push((gen, src));
    }
    let mut batch_means = vec![Vec::with_capacity(BATCHES); sizes.len()];
    let mut totals = vec![Duration::ZERO; sizes.len()];
    for b in 0..BATCHES {
        let size = samples / BATCHES + usize::from(b < samples % BATCHES);
        if size == 0 {
            continue;
        }
        for (k, (gen, src)) in gens.iter_mut().enumerate() {
            let start = Instant::now();
            for _ in 0..size {
                std::hint::black_box(gen.sample_cells(src)?);
            }
            let spent = start.elapsed();
            totals[k] += spent;
            batch_means[k].push(spent / size as u32);
        }
    }
    for (k, row) in rows.iter_mut().enumerate() {
        let means = &mut batch_means[k];
        means.sort_unstable();
        row.per_sample = means.get(means.len() / 2).copied().unwrap_or_default();
        row.mean = totals[k] / samples.max(1) as u32;
        row.restarts = gens[k].0.stats().restarts - row.restarts;
    }
    Ok(rows)
}

/// Time ratio of each size to the previous one.
pub fn ratios(rows: &[BenchRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| w[1].per_sample.as_secs_f64() / w[0].per_sample.as_secs_f64())
        .collect()
}

pub fn report(rows: &[BenchRow]) -> Value {
    json!({
        "format": FORMAT_VERSION,
        "kind": "bench",
        "sizes": rows.iter().map(|r| json!({
            "n": r.n,
            "t0": r.t0,
            "log2_b_hat": r.log2_b_hat,
            "setup_ms": r.setup.as_secs_f64() * 1e3,
            "samples": r.samples,
            "median_batch_us": r.per_sample.as_secs_f64() * 1e6,
            "mean_us": r.mean.as_secs_f64() * 1e6,
            "restarts": r.restarts,
        })).collect::<Vec<_>>(),
        "ratios": ratios(rows),
    })
}
