//! Implementations of the `loss`, `viz`, and `check` subcommands. Each is a
//! thin wrapper: numerical output comes straight from the library calls.

use crate::{from_core, CheckArgs, CliError, GraphKind, LossArgs, Reduction, VizArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rnnt_lattice::builders::{build_time_schema, build_unit_schema};
use rnnt_lattice::oracle;
use rnnt_lattice::wrnnt::{w_time_schema, w_unit_schema};
use rnnt_lattice::{
    build_lattice, fd_gradient, transducer_loss, Batch, Builder, LogProbTensor, LossKind,
    LossResult, TargetSeq,
};
use std::io::Write;
use std::path::{Path, PathBuf};

fn read_tensor(path: &Path) -> Result<LogProbTensor, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let parsed = if bytes.starts_with(b"RNTL") {
        LogProbTensor::from_bytes(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| rnnt_lattice::Error::BadMagic)
            .and_then(|t| {
                if t.trim_start().starts_with('{') {
                    LogProbTensor::from_json(t)
                } else {
                    Err(rnnt_lattice::Error::BadMagic)
                }
            });
        text
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn read_targets(path: &Path) -> Result<TargetSeq, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    TargetSeq::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn grad_out_path(base: &Path, item: usize, total: usize) -> PathBuf {
    if total == 1 {
        base.to_path_buf()
    } else {
        let mut name = base.as_os_str().to_os_string();
        name.push(format!(".{item}"));
        PathBuf::from(name)
    }
}

pub fn cmd_loss(args: &LossArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.tensors.len() != args.targets.len() {
        return Err(CliError::usage(format!(
            "{} tensor files but {} target files",
            args.tensors.len(),
            args.targets.len()
        )));
    }
    let mut items = Vec::new();
    for (tp, yp) in args.tensors.iter().zip(&args.targets) {
        let x = read_tensor(tp)?
            .remap_blank(args.blank_index)
            .map_err(from_core)?;
        let y = read_targets(yp)?;
        items.push((x, y));
    }
    let batch = Batch::new(items).map_err(from_core)?;

    let builder: Builder = args.builder.into();
    let kind: LossKind = args.loss.into();
    let (pool, _) = crate::thread_pool()?;
    let results: Vec<Result<LossResult, rnnt_lattice::Error>> = pool.install(|| {
        batch
            .items()
            .par_iter()
            .map(|(x, y)| transducer_loss(x, y, kind, builder))
            .collect()
    });

    let mut losses = Vec::with_capacity(results.len());
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => {
                writeln!(out, "item {i}: loss = {:.12}", r.loss)
                    .map_err(|e| CliError::usage(e.to_string()))?;
                if let Some(base) = &args.grad_out {
                    let path = grad_out_path(base, i, batch.len());
                    std::fs::write(&path, r.grad.to_bytes())
                        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                }
                losses.push(r.loss);
            }
            Err(rnnt_lattice::Error::NoPath) => {
                return Err(CliError::numerical(format!(
                    "no path in batch item {i}: the lattice admits no complete alignment"
                )));
            }
            Err(e) => return Err(CliError::usage(format!("batch item {i}: {e}"))),
        }
    }
    let sum: f64 = losses.iter().sum();
    match args.reduction {
        Reduction::Sum => writeln!(out, "sum = {sum:.12}"),
        Reduction::Mean => writeln!(out, "mean = {:.12}", sum / losses.len() as f64),
        Reduction::None => Ok(()),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(())
}

fn parse_names(names: &Option<String>) -> Option<Vec<String>> {
    names
        .as_ref()
        .map(|s| s.split(',').map(|n| n.trim().to_string()).collect())
}

fn zero_tensor(frames: usize, target_len: usize, vocab: usize) -> Result<LogProbTensor, CliError> {
    let rows = target_len + 1;
    LogProbTensor::from_vec_f64(
        [frames, rows, vocab],
        vec![0.0; frames * rows * vocab],
        false,
    )
    .map_err(from_core)
}

pub fn cmd_viz(args: &VizArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let names = parse_names(&args.names);
    let need_target = matches!(
        args.graph,
        GraphKind::Unit | GraphKind::WUnit | GraphKind::Lattice | GraphKind::WLattice
    );
    let need_frames = matches!(
        args.graph,
        GraphKind::Time | GraphKind::WTime | GraphKind::Lattice | GraphKind::WLattice
    );
    let target = if need_target {
        let spec = args
            .target
            .as_deref()
            .ok_or_else(|| CliError::usage("--target is required for this graph kind"))?;
        TargetSeq::parse(spec).map_err(from_core)?
    } else {
        TargetSeq::empty()
    };
    let frames = if need_frames {
        args.frames
            .ok_or_else(|| CliError::usage("--frames is required for this graph kind"))?
    } else {
        0
    };

    let dot = match args.graph {
        GraphKind::Unit => build_unit_schema(&target, args.vocab)
            .map_err(from_core)?
            .graph()
            .to_dot(names.as_deref()),
        GraphKind::Time => build_time_schema(frames, args.vocab)
            .map_err(from_core)?
            .graph()
            .to_dot(names.as_deref()),
        GraphKind::WUnit => w_unit_schema(&target, args.vocab, args.variant.into())
            .map_err(from_core)?
            .graph()
            .to_dot(names.as_deref()),
        GraphKind::WTime => w_time_schema(frames, args.vocab)
            .map_err(from_core)?
            .graph()
            .to_dot(names.as_deref()),
        GraphKind::Lattice | GraphKind::WLattice => {
            let x = zero_tensor(frames, target.len(), args.vocab)?;
            let kind = match (args.graph, args.variant) {
                (GraphKind::Lattice, _) => LossKind::Rnnt,
                (_, crate::VariantArg::ForceFinal) => LossKind::WForceFinal,
                (_, crate::VariantArg::AllowIgnore) => LossKind::WAllowIgnore,
            };
            build_lattice(&x, &target, kind, Builder::Grid)
                .map_err(from_core)?
                .graph()
                .to_dot(names.as_deref())
        }
    };
    write!(out, "{dot}").map_err(|e| CliError::usage(e.to_string()))?;
    Ok(())
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.trials == 0 || args.max_t == 0 || args.max_v < 2 {
        return Err(CliError::usage(
            "check needs --trials >= 1, --max-t >= 1, --max-v >= 2",
        ));
    }
    let loss_tol = 1e-10;
    let grad_tol = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut max_dp = 0.0f64;
    let mut max_compose = 0.0f64;
    let mut max_epsilon = 0.0f64;
    let mut max_fd = 0.0f64;
    for _ in 0..args.trials {
        let t = rng.random_range(1..=args.max_t);
        let u = rng.random_range(0..=args.max_u);
        let v = rng.random_range(2..=args.max_v);
        let x = LogProbTensor::random_normalized(t, u, v, rng.random()).unwrap();
        let y = TargetSeq::new((0..u).map(|_| rng.random_range(1..v as u32)).collect())
            .map_err(from_core)?;

        let grid = build_lattice(&x, &y, LossKind::Rnnt, Builder::Grid).map_err(from_core)?;
        let grid_loss = -grid.total_score();
        let dp = oracle::dp_loss(&x, &y).map_err(from_core)?;
        let mut compose_loss = rnnt_lattice::loss_value(&x, &y, LossKind::Rnnt, Builder::Compose)
            .map_err(from_core)?;
        let epsilon_loss = rnnt_lattice::loss_value(&x, &y, LossKind::Rnnt, Builder::Epsilon)
            .map_err(from_core)?;
        if args.inject_fault {
            compose_loss += 1e-6;
        }
        max_dp = max_dp.max((grid_loss - dp).abs());
        max_compose = max_compose.max((grid_loss - compose_loss).abs());
        max_epsilon = max_epsilon.max((grid_loss - epsilon_loss).abs());

        let analytic = grid.loss_and_grad(x.shape()).map_err(from_core)?.grad;
        let fd = fd_gradient(&x, &y, LossKind::Rnnt, Builder::Grid, 1e-4).map_err(from_core)?;
        for (a, f) in analytic.to_f64_vec().iter().zip(fd.to_f64_vec()) {
            max_fd = max_fd.max((a - f).abs() / a.abs().max(f.abs()).max(1e-3));
        }
    }
    let pass = max_dp <= loss_tol
        && max_compose <= loss_tol
        && max_epsilon <= loss_tol
        && max_fd <= grad_tol;
    writeln!(
        out,
        "self-check: {} trials, seed {}",
        args.trials, args.seed
    )
    .and_then(|_| {
        writeln!(
            out,
            "  grid vs recursion oracle : max |delta| = {max_dp:.3e} (tol {loss_tol:.0e})"
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  grid vs compose builder  : max |delta| = {max_compose:.3e} (tol {loss_tol:.0e})"
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  grid vs epsilon builder  : max |delta| = {max_epsilon:.3e} (tol {loss_tol:.0e})"
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  analytic vs fd gradient  : max rel err = {max_fd:.3e} (tol {grad_tol:.0e})"
        )
    })
    .and_then(|_| writeln!(out, "result: {}", if pass { "PASS" } else { "FAIL" }))
    .map_err(|e| CliError::usage(e.to_string()))?;
    if !pass {
        return Err(CliError::numerical(
            "self-check exceeded tolerances".to_string(),
        ));
    }
    Ok(())
}
