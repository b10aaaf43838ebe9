//! Benchmark harness: synthetic batches, median-of-N wall times per builder,
//! and an analytic lattice-memory estimate (arc count times arc byte size).
//! Absolute numbers are hardware-specific; only relative orderings matter.

use crate::{BenchArgs, CliError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rnnt_lattice::builders::epsilon_state_count;
use rnnt_lattice::{build_lattice, Builder, LogProbTensor, LossKind, Precision, TargetSeq};
use std::fmt;
use std::time::Instant;

/// Ceiling on estimated epsilon-lattice states per item; beyond it the builder
/// is refused instead of timed.
pub const EPSILON_STATE_GUARD: usize = 50_000;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// (T, U) pairs cycled over the batch.
    pub shapes: Vec<(usize, usize)>,
    pub vocab: usize,
    pub batch: usize,
    pub repetitions: usize,
    pub precision: Precision,
    pub builders: Vec<Builder>,
    pub sorted_batch: bool,
    pub seed: u64,
    /// Worker threads; `None` defers to the `RNNT_THREADS` environment variable.
    pub threads: Option<usize>,
}

impl BenchConfig {
    pub fn from_args(args: &BenchArgs) -> Result<Self, CliError> {
        let mut shapes = Vec::new();
        for s in &args.shapes {
            let (t, u) = s
                .split_once('x')
                .ok_or_else(|| CliError::usage(format!("shape `{s}` is not TxU")))?;
            let t: usize = t
                .parse()
                .map_err(|_| CliError::usage(format!("bad frame count in shape `{s}`")))?;
            let u: usize = u
                .parse()
                .map_err(|_| CliError::usage(format!("bad unit count in shape `{s}`")))?;
            if t < 1 {
                return Err(CliError::usage("shapes need T >= 1"));
            }
            shapes.push((t, u));
        }
        Ok(Self {
            shapes,
            vocab: args.vocab,
            batch: args.batch,
            repetitions: args.reps,
            precision: args.precision.into(),
            builders: args.builders.iter().map(|&b| b.into()).collect(),
            sorted_batch: args.sorted,
            seed: args.seed,
            threads: None,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.repetitions < 3 {
            return Err(CliError::usage("bench reports a median: need --reps >= 3"));
        }
        if self.shapes.is_empty() || self.batch == 0 || self.vocab < 2 {
            return Err(CliError::usage(
                "bench needs at least one shape, --batch >= 1 and --vocab >= 2",
            ));
        }
        if self.builders.is_empty() {
            return Err(CliError::usage("no builders selected"));
        }
        if self.builders.contains(&Builder::Epsilon) {
            for &(t, u) in &self.shapes {
                let states = epsilon_state_count(t, u);
                if states > EPSILON_STATE_GUARD {
                    return Err(CliError::usage(format!(
                        "epsilon builder refused at shape {t}x{u}: about {states} lattice \
                         states; this construction is inefficient in both speed and memory \
                         and is only meant for prototyping at small shapes \
                         (guard: {EPSILON_STATE_GUARD} states)"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub builder: Builder,
    pub precision: Precision,
    pub median_ms: f64,
    pub mem_bytes: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub threads: usize,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Max absolute loss difference between single-precision populate and
    /// double-precision end-to-end, over the batch (grid builder).
    pub precision_agreement: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shapes: Vec<String> = self
            .config
            .shapes
            .iter()
            .map(|(t, u)| format!("{t}x{u}"))
            .collect();
        writeln!(
            f,
            "bench: shapes [{}], V={}, batch={}, reps={}, precision={:?}, sorted={}, threads={}",
            shapes.join(", "),
            self.config.vocab,
            self.config.batch,
            self.config.repetitions,
            self.config.precision,
            self.config.sorted_batch,
            self.threads
        )?;
        writeln!(
            f,
            "{:<10} {:>10} {:>14} {:>12}",
            "builder", "precision", "median ms", "lattice MB"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<10} {:>10} {:>14.3} {:>12.2}",
                row.builder.name(),
                match row.precision {
                    Precision::Single => "single",
                    Precision::Double => "double",
                },
                row.median_ms,
                row.mem_bytes as f64 / (1024.0 * 1024.0)
            )?;
        }
        writeln!(
            f,
            "single-populate vs double end-to-end max |loss delta| = {:.3e}",
            self.precision_agreement
        )
    }
}

fn make_batch(config: &BenchConfig, precision: Precision) -> Vec<(LogProbTensor, TargetSeq)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut items = Vec::with_capacity(config.batch);
    for i in 0..config.batch {
        let (t, u) = config.shapes[i % config.shapes.len()];
        let x = LogProbTensor::random_normalized_in(t, u, config.vocab, rng.random(), precision)
            .expect("bench shapes validated");
        let y = TargetSeq::new(
            (0..u)
                .map(|_| rng.random_range(1..config.vocab as u32))
                .collect(),
        )
        .expect("units start at 1");
        items.push((x, y));
    }
    if config.sorted_batch {
        items.sort_by_key(|item| std::cmp::Reverse(item.0.frames()));
    }
    items
}

fn run_batch(items: &[(LogProbTensor, TargetSeq)], builder: Builder) -> Vec<f64> {
    items
        .par_iter()
        .map(|(x, y)| {
            let lat = build_lattice(x, y, LossKind::Rnnt, builder).expect("bench shapes are valid");
            lat.loss_and_grad(x.shape())
                .expect("normalized tensors always have a path")
                .loss
        })
        .collect()
}

/// Times each selected builder over the same synthetic batch and reports the
/// median wall time plus the analytic lattice memory estimate.
pub fn bench_run(config: &BenchConfig) -> Result<BenchReport, CliError> {
    config.validate()?;
    let (pool, threads) = match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            let effective = pool.current_num_threads();
            (pool, effective)
        }
        None => crate::thread_pool()?,
    };
    let items = make_batch(config, config.precision);

    let mut rows = Vec::new();
    for &builder in &config.builders {
        // memory estimate from one untimed pass
        let mem_bytes: usize = items
            .iter()
            .map(|(x, y)| {
                build_lattice(x, y, LossKind::Rnnt, builder)
                    .expect("bench shapes are valid")
                    .memory_bytes()
            })
            .sum();
        // warmup: pool spin-up and allocator churn stay out of the medians
        std::hint::black_box(pool.install(|| run_batch(&items, builder)));
        let mut times = Vec::with_capacity(config.repetitions);
        for _ in 0..config.repetitions {
            let start = Instant::now();
            let losses = pool.install(|| run_batch(&items, builder));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(losses);
            times.push(elapsed);
        }
        times.sort_by(f64::total_cmp);
        let median_ms = times[times.len() / 2];
        rows.push(BenchRow {
            builder,
            precision: config.precision,
            median_ms,
            mem_bytes,
        });
    }

    // precision contract: single-precision populate, double accumulation vs
    // full double precision, same seeds
    let singles = make_batch(config, Precision::Single);
    let doubles = make_batch(config, Precision::Double);
    let precision_agreement = singles
        .iter()
        .zip(&doubles)
        .map(|((xs, ys), (xd, yd))| {
            let ls = -build_lattice(xs, ys, LossKind::Rnnt, Builder::Grid)
                .expect("valid")
                .total_score();
            let ld = -build_lattice(xd, yd, LossKind::Rnnt, Builder::Grid)
                .expect("valid")
                .total_score();
            (ls - ld).abs()
        })
        .fold(0.0f64, f64::max);

    Ok(BenchReport {
        threads,
        config: config.clone(),
        rows,
        precision_agreement,
    })
}
