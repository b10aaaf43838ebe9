//! RNN-Transducer and W-Transducer losses over weighted finite-state acceptor
//! lattices.
//!
//! The training lattice for one (log-score tensor, target sequence) pair can be
//! built three equivalent ways — direct grid construction, composition of time
//! and unit schemas, or an epsilon-adapter pipeline — then scored with a
//! log-semiring forward/backward pass that yields the loss and its gradient
//! with respect to the tensor. The W-Transducer variants add probability-one
//! skip-frame arcs for weakly supervised transcripts with missing prefixes or
//! suffixes. Reference oracles (classical recursion, exhaustive enumeration,
//! finite differences) live in [`oracle`].

pub mod builders;
pub mod error;
pub mod lattice;
mod logmath;
pub mod oracle;
pub mod tensor;
pub mod wfsa;
pub mod wrnnt;

pub use error::{Error, Result};
pub use lattice::{Binding, Lattice, LossResult};
pub use tensor::{Batch, LogProbTensor, Precision, TargetSeq, TensorShape};
pub use wfsa::{Arc, Label, StateId, Wfsa};
pub use wrnnt::{WBuilder, WVariant};

/// Lattice construction route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builder {
    Grid,
    Compose,
    Epsilon,
}

impl Builder {
    pub const ALL: [Builder; 3] = [Builder::Grid, Builder::Compose, Builder::Epsilon];

    pub fn name(self) -> &'static str {
        match self {
            Builder::Grid => "grid",
            Builder::Compose => "compose",
            Builder::Epsilon => "epsilon",
        }
    }
}

/// Which loss a lattice encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Rnnt,
    WForceFinal,
    WAllowIgnore,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Rnnt => "rnnt",
            LossKind::WForceFinal => "wrnnt-force-final",
            LossKind::WAllowIgnore => "wrnnt-allow-ignore",
        }
    }
}

/// Builds the populated training lattice for the requested loss and builder.
///
/// The W losses are defined for the grid and compose builders; requesting them
/// through the epsilon pipeline is an error.
pub fn build_lattice(
    x: &LogProbTensor,
    y: &TargetSeq,
    kind: LossKind,
    builder: Builder,
) -> Result<Lattice> {
    match kind {
        LossKind::Rnnt => match builder {
            Builder::Grid => builders::grid_lattice(x, y),
            Builder::Compose => builders::compose_lattice(x, y),
            Builder::Epsilon => builders::epsilon_lattice(x, y),
        },
        LossKind::WForceFinal | LossKind::WAllowIgnore => {
            let variant = if kind == LossKind::WForceFinal {
                WVariant::ForceFinal
            } else {
                WVariant::AllowIgnore
            };
            match builder {
                Builder::Grid => wrnnt::w_grid_lattice(x, y, variant),
                Builder::Compose => wrnnt::w_compose_lattice(x, y, variant),
                Builder::Epsilon => Err(Error::Unsupported(
                    "the epsilon builder does not support W losses".into(),
                )),
            }
        }
    }
}

/// Loss and gradient in one call.
///
/// ```
/// use rnnt_lattice::{transducer_loss, Builder, LogProbTensor, LossKind, TargetSeq};
///
/// let x = LogProbTensor::random_normalized(8, 3, 16, 42)?;
/// let y = TargetSeq::new(vec![3, 1, 9])?;
/// let out = transducer_loss(&x, &y, LossKind::Rnnt, Builder::Grid)?;
/// assert!(out.loss > 0.0);
/// assert_eq!(out.grad.dims(), x.dims());
/// # Ok::<(), rnnt_lattice::Error>(())
/// ```
pub fn transducer_loss(
    x: &LogProbTensor,
    y: &TargetSeq,
    kind: LossKind,
    builder: Builder,
) -> Result<LossResult> {
    build_lattice(x, y, kind, builder)?.loss_and_grad(x.shape())
}

/// Loss only; cheaper than [`transducer_loss`] when the gradient is not needed.
pub fn loss_value(
    x: &LogProbTensor,
    y: &TargetSeq,
    kind: LossKind,
    builder: Builder,
) -> Result<f64> {
    let total = build_lattice(x, y, kind, builder)?.total_score();
    if total == f64::NEG_INFINITY {
        return Err(Error::NoPath);
    }
    Ok(-total)
}

/// Central-difference gradient of the selected loss, rebuilding the lattice at
/// every probe. Validation plumbing around [`oracle::fd_gradient`].
pub fn fd_gradient(
    x: &LogProbTensor,
    y: &TargetSeq,
    kind: LossKind,
    builder: Builder,
    h: f64,
) -> Result<LogProbTensor> {
    oracle::fd_gradient(x, h, |probe| loss_value(probe, y, kind, builder))
}
