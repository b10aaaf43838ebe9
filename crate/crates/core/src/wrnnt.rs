//! W-Transducer loss: wild-card skip-frame arcs for untranscribed utterance
//! prefixes and suffixes, built either directly on the grid or by schema
//! composition.
//!
//! Initial skips are probability-one arcs from the start corner to any
//! first-column state, usable only before scored emissions. Final skips come in
//! two variants: force-final skips land on the previous-to-final grid state so
//! the model still has to emit one terminating blank, allow-ignore skips go
//! straight to the final state so that blank becomes optional. All skip arcs
//! are structural sentinels and carry exactly zero gradient mass.

use crate::builders::{grid_graph, TimeSchema, UnitSchema};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LossResult};
use crate::tensor::{LogProbTensor, TargetSeq};
use crate::wfsa::{Arc, Wfsa, BLANK, WILD_END, WILD_START};

/// Which final-skip rule a W-lattice uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WVariant {
    /// Final skips land on the previous-to-final grid state; the terminating
    /// blank is still consumed.
    ForceFinal,
    /// Final skips go straight to the final state; the ordinary terminating
    /// blank path is kept alongside.
    AllowIgnore,
}

/// Which lattice construction backs [`w_loss`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBuilder {
    Grid,
    Compose,
}

fn check_shapes(x: &LogProbTensor, y: &TargetSeq) -> Result<()> {
    if x.unit_rows() != y.len() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "tensor has {} unit rows but target of length {} needs {}",
            x.unit_rows(),
            y.len(),
            y.len() + 1
        )));
    }
    y.check_vocab(x.vocab())
}

pub(crate) fn w_grid_graph(
    frames: usize,
    y: &TargetSeq,
    initial_skips: bool,
    final_skips: Option<WVariant>,
) -> Wfsa {
    let rows = y.len() + 1;
    let last_row_top = |t: usize| t * rows + (rows - 1);
    let final_state = frames * rows;
    let mut g = grid_graph(frames, y);
    if initial_skips {
        for t in 1..frames {
            g.add_arc(Arc::new(0, t * rows, WILD_START, 0.0));
        }
    }
    match final_skips {
        Some(WVariant::ForceFinal) => {
            for t in 0..frames.saturating_sub(1) {
                g.add_arc(Arc::new(
                    last_row_top(t),
                    last_row_top(frames - 1),
                    WILD_END,
                    0.0,
                ));
            }
        }
        Some(WVariant::AllowIgnore) => {
            for t in 0..frames.saturating_sub(1) {
                g.add_arc(Arc::new(last_row_top(t), final_state, WILD_END, 0.0));
            }
        }
        None => {}
    }
    g
}

/// W-lattice built directly on the grid: the plain grid plus structural
/// initial skips `(0,0) -> (t,0)` and the variant's final skips. With a single
/// frame there is no room for skips and the result equals the plain grid.
pub fn w_grid_lattice(x: &LogProbTensor, y: &TargetSeq, variant: WVariant) -> Result<Lattice> {
    check_shapes(x, y)?;
    let g = w_grid_graph(x.frames(), y, true, Some(variant));
    // skip arcs only ever point forward, so the grid's ordering survives
    let mut lat = Lattice::from_topsorted_graph(g)?;
    lat.populate(x)?;
    Ok(lat)
}

/// Unit schema with wild-card arcs: a wild-start self-arc at state 0, and
/// either a wild-end self-arc at state `U` (force-final) or a wild-end arc from
/// state `U` to the final state (allow-ignore).
pub fn w_unit_schema(y: &TargetSeq, vocab: usize, variant: WVariant) -> Result<UnitSchema> {
    let base = crate::builders::build_unit_schema(y, vocab)?;
    let u_len = base.target_len();
    let mut g = base.into_graph();
    g.add_arc(Arc::new(0, 0, WILD_START, 0.0));
    match variant {
        WVariant::ForceFinal => g.add_arc(Arc::new(u_len, u_len, WILD_END, 0.0)),
        WVariant::AllowIgnore => g.add_arc(Arc::new(u_len, u_len + 1, WILD_END, 0.0)),
    }
    Ok(UnitSchema::from_parts(g, u_len))
}

/// Time schema with skip-frame arcs, serving both variants.
///
/// Three layers per frame: a pre-emission layer carrying the wild-start chain
/// (left on the first scored emission, so initial skips can only happen before
/// anything is scored), the ordinary scored layer, and a post-emission layer
/// entered by wild-end arcs, inside which only further wild-end steps and the
/// last frame's terminating blank exist (so final skips cannot interleave with
/// scored emissions). Post-emission states are final so an allow-ignore unit
/// schema can stop right after its single wild-end arc.
///
/// With one frame there are no sentinel arcs at all.
pub fn w_time_schema(frames: usize, vocab: usize) -> Result<TimeSchema> {
    if frames < 1 || vocab < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need T >= 1 and V >= 2, got T={frames}, V={vocab}"
        )));
    }
    let pre = |t: usize| t;
    let scored = |t: usize| frames + t;
    let post = |t: usize| 2 * frames + (t - 1); // defined for t in 1..frames
    let final_state = 3 * frames - 1;
    let mut g = Wfsa::new(3 * frames);
    for t in 0..frames {
        // pre-emission layer: first scored emission drops into the scored layer
        for v in 1..vocab {
            g.add_arc(Arc::new(pre(t), scored(t), v as i32, 0.0).with_time(t));
        }
        if t + 1 < frames {
            g.add_arc(Arc::new(pre(t), scored(t + 1), BLANK, 0.0).with_time(t));
            g.add_arc(Arc::new(pre(t), pre(t + 1), WILD_START, 0.0));
            g.add_arc(Arc::new(pre(t), post(t + 1), WILD_END, 0.0));
        } else {
            g.add_arc(Arc::new(pre(t), final_state, BLANK, 0.0).with_time(t));
        }
        // scored layer: the plain time schema
        for v in 1..vocab {
            g.add_arc(Arc::new(scored(t), scored(t), v as i32, 0.0).with_time(t));
        }
        if t + 1 < frames {
            g.add_arc(Arc::new(scored(t), scored(t + 1), BLANK, 0.0).with_time(t));
            g.add_arc(Arc::new(scored(t), post(t + 1), WILD_END, 0.0));
        } else {
            g.add_arc(Arc::new(scored(t), final_state, BLANK, 0.0).with_time(t));
        }
        // post-emission layer
        if t >= 1 {
            if t + 1 < frames {
                g.add_arc(Arc::new(post(t), post(t + 1), WILD_END, 0.0));
            } else {
                g.add_arc(Arc::new(post(t), final_state, BLANK, 0.0).with_time(t));
            }
        }
    }
    g.add_final(final_state);
    for t in 1..frames {
        g.add_final(post(t));
    }
    Ok(TimeSchema::from_parts(g, frames))
}

/// W-lattice as `w_time_schema . w_unit_schema`, trimmed and populated.
pub fn w_compose_lattice(x: &LogProbTensor, y: &TargetSeq, variant: WVariant) -> Result<Lattice> {
    check_shapes(x, y)?;
    let mut ts = w_time_schema(x.frames(), x.vocab())?.into_graph();
    let mut us = w_unit_schema(y, x.vocab(), variant)?.into_graph();
    ts.arcsort();
    us.arcsort();
    let mut lat = Lattice::from_graph(ts.compose(&us)?)?;
    lat.populate(x)?;
    Ok(lat)
}

/// W-Transducer loss and gradient. Structural wild arcs contribute zero
/// gradient; only bound arcs scatter into the tensor.
pub fn w_loss(
    x: &LogProbTensor,
    y: &TargetSeq,
    variant: WVariant,
    builder: WBuilder,
) -> Result<LossResult> {
    let lat = match builder {
        WBuilder::Grid => w_grid_lattice(x, y, variant)?,
        WBuilder::Compose => w_compose_lattice(x, y, variant)?,
    };
    lat.loss_and_grad(x.shape())
}
