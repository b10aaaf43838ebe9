//! Constructs the RNN-T training lattice three ways: direct grid construction,
//! composition of time/unit schemas, and the epsilon-adapter pipeline over a
//! flattened emissions chain. All three produce the same loss and gradient;
//! they differ in size and speed. The grid is the compact, fast route; the
//! schema composition is the modular route; the epsilon pipeline exists for
//! prototyping and grows quadratically with the target length.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::tensor::{LogProbTensor, TargetSeq};
use crate::wfsa::{Arc, Wfsa, BLANK, FRAME_SKIP};

/// Target-side schema: unit indices on every non-structural arc.
///
/// States `0..=U` plus one final. State `u < U` carries a blank self-loop and
/// an advance arc labeled with the next target unit; state `U` carries a blank
/// self-loop and the terminating blank arc to the final state.
#[derive(Debug, Clone)]
pub struct UnitSchema {
    graph: Wfsa,
    target_len: usize,
}

impl UnitSchema {
    pub fn graph(&self) -> &Wfsa {
        &self.graph
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub(crate) fn into_graph(self) -> Wfsa {
        self.graph
    }

    pub(crate) fn from_parts(graph: Wfsa, target_len: usize) -> Self {
        Self { graph, target_len }
    }
}

/// Time-side schema: time indices on every non-structural arc.
///
/// States `0..T-1` plus one final. Each frame state carries one self-loop per
/// non-blank unit and a blank advance arc; the last frame's blank goes to the
/// final state.
#[derive(Debug, Clone)]
pub struct TimeSchema {
    graph: Wfsa,
    frames: usize,
}

impl TimeSchema {
    pub fn graph(&self) -> &Wfsa {
        &self.graph
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub(crate) fn into_graph(self) -> Wfsa {
        self.graph
    }

    pub(crate) fn from_parts(graph: Wfsa, frames: usize) -> Self {
        Self { graph, frames }
    }
}

/// Skip-counting adapter for the epsilon pipeline; specific to one target
/// length. After a non-terminating blank it demands exactly `U` frame-skip
/// sentinel steps, after a unit none, so a flattened emissions chain emulates
/// the grid's blank jumps.
#[derive(Debug, Clone)]
pub struct EpsilonAdapter {
    graph: Wfsa,
    u_built: usize,
}

impl EpsilonAdapter {
    pub fn graph(&self) -> &Wfsa {
        &self.graph
    }

    /// The target length this adapter was built for.
    pub fn u_built(&self) -> usize {
        self.u_built
    }
}

fn check_dims_tv(frames: usize, vocab: usize) -> Result<()> {
    if frames < 1 || vocab < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need T >= 1 and V >= 2, got T={frames}, V={vocab}"
        )));
    }
    Ok(())
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

/// Builds the unit schema for a target sequence: `U+2` states and `2U+2` arcs.
pub fn build_unit_schema(y: &TargetSeq, vocab: usize) -> Result<UnitSchema> {
    if vocab < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need V >= 2, got {vocab}"
        )));
    }
    y.check_vocab(vocab)?;
    let u_len = y.len();
    let final_state = u_len + 1;
    let mut g = Wfsa::new(u_len + 2);
    for w in 0..=u_len {
        g.add_arc(Arc::new(w, w, BLANK, 0.0).with_unit(w));
        if w < u_len {
            g.add_arc(Arc::new(w, w + 1, y.units()[w] as i32, 0.0).with_unit(w));
        } else {
            g.add_arc(Arc::new(w, final_state, BLANK, 0.0).with_unit(w));
        }
    }
    g.add_final(final_state);
    Ok(UnitSchema {
        graph: g,
        target_len: u_len,
    })
}

/// Builds the time schema for `frames` frames: `T+1` states and `T(V-1) + T` arcs.
pub fn build_time_schema(frames: usize, vocab: usize) -> Result<TimeSchema> {
    check_dims_tv(frames, vocab)?;
    let final_state = frames;
    let mut g = Wfsa::new(frames + 1);
    for t in 0..frames {
        for v in 1..vocab {
            g.add_arc(Arc::new(t, t, v as i32, 0.0).with_time(t));
        }
        let dst = if t + 1 < frames { t + 1 } else { final_state };
        g.add_arc(Arc::new(t, dst, BLANK, 0.0).with_time(t));
    }
    g.add_final(final_state);
    Ok(TimeSchema { graph: g, frames })
}

/// Plain grid graph: states `(t, u)` numbered `t*(U+1) + u` plus a final state,
/// blank arcs with stride `U+1`, unit arcs with stride 1, and the mandatory
/// terminating blank from `(T-1, U)`. Construction order is already topological.
pub(crate) fn grid_graph(frames: usize, y: &TargetSeq) -> Wfsa {
    let rows = y.len() + 1;
    let final_state = frames * rows;
    let mut g = Wfsa::new(final_state + 1);
    g.reserve_arcs((frames - 1) * rows + frames * y.len() + 1);
    for t in 0..frames {
        let base = t * rows;
        for (u, s) in (base..base + rows).enumerate() {
            if t + 1 < frames {
                g.add_arc(Arc::new(s, s + rows, BLANK, 0.0).with_time(t).with_unit(u));
            }
            if u + 1 < rows {
                g.add_arc(
                    Arc::new(s, s + 1, y.units()[u] as i32, 0.0)
                        .with_time(t)
                        .with_unit(u),
                );
            }
        }
    }
    g.add_arc(
        Arc::new(final_state - 1, final_state, BLANK, 0.0)
            .with_time(frames - 1)
            .with_unit(rows - 1),
    );
    g.add_final(final_state);
    g
}

/// Direct grid construction of the populated training lattice. The arc arrays
/// come straight out of index arithmetic, trim and in topological order, so no
/// graph algorithms run here.
pub fn grid_lattice(x: &LogProbTensor, y: &TargetSeq) -> Result<Lattice> {
    check_shapes(x, y)?;
    let mut lat = Lattice::from_topsorted_graph(grid_graph(x.frames(), y))?;
    lat.populate(x)?;
    Ok(lat)
}

/// Training lattice as `time schema . unit schema`, trimmed and populated.
pub fn compose_lattice(x: &LogProbTensor, y: &TargetSeq) -> Result<Lattice> {
    check_shapes(x, y)?;
    let mut ts = build_time_schema(x.frames(), x.vocab())?.into_graph();
    let mut us = build_unit_schema(y, x.vocab())?.into_graph();
    ts.arcsort();
    us.arcsort();
    let mut lat = Lattice::from_graph(ts.compose(&us)?)?;
    lat.populate(x)?;
    Ok(lat)
}

/// Alignment graph: blank self-loops, unit advances, and the terminating blank
/// (the loss topology applied to the target's linear graph). Frame-skip
/// sentinel self-loops let the adapter's skip chains pass through composition.
pub fn alignment_graph(y: &TargetSeq, vocab: usize) -> Result<Wfsa> {
    if vocab < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need V >= 2, got {vocab}"
        )));
    }
    y.check_vocab(vocab)?;
    let u_len = y.len();
    let final_state = u_len + 1;
    let mut g = Wfsa::new(u_len + 2);
    for w in 0..=u_len {
        g.add_arc(Arc::new(w, w, BLANK, 0.0));
        g.add_arc(Arc::new(w, w, FRAME_SKIP, 0.0));
        if w < u_len {
            g.add_arc(Arc::new(w, w + 1, y.units()[w] as i32, 0.0));
        } else {
            g.add_arc(Arc::new(w, final_state, BLANK, 0.0));
        }
    }
    g.add_final(final_state);
    Ok(g)
}

/// Flattened emissions chain over slots `p in [0, T*(U+1))`: per slot, `V`
/// scored arcs bound to `(p / (U+1), p mod (U+1), v)` plus one frame-skip
/// sentinel arc of weight 0.
pub fn emissions_graph(frames: usize, target_len: usize, vocab: usize) -> Result<Wfsa> {
    check_dims_tv(frames, vocab)?;
    let rows = target_len + 1;
    let slots = frames * rows;
    let mut g = Wfsa::new(slots + 1);
    for p in 0..slots {
        let (t, u) = (p / rows, p % rows);
        for v in 0..vocab {
            g.add_arc(Arc::new(p, p + 1, v as i32, 0.0).with_time(t).with_unit(u));
        }
        g.add_arc(Arc::new(p, p + 1, FRAME_SKIP, 0.0));
    }
    g.add_final(slots);
    Ok(g)
}

/// Builds the epsilon emissions adapter for one target sequence.
///
/// States are explicit (unit-position, skips-remaining) pairs: `ready(w)` when
/// no skips are pending, `skip(w, k)` while `k` frame-skip steps remain after a
/// blank consumed at unit position `w`. The terminating blank goes straight to
/// the final state with no pending skips.
pub fn build_epsilon_adapter(y: &TargetSeq) -> EpsilonAdapter {
    let u_len = y.len();
    let ready = |w: usize| w;
    // skip(w, k) for k in 1..=U, laid out after the ready block
    let skip = |w: usize, k: usize| (u_len + 1) + w * u_len + (k - 1);
    let final_state = (u_len + 1) * (u_len + 1);
    let mut g = Wfsa::new(final_state + 1);
    for w in 0..=u_len {
        if u_len == 0 {
            g.add_arc(Arc::new(ready(w), ready(w), BLANK, 0.0));
        } else {
            g.add_arc(Arc::new(ready(w), skip(w, u_len), BLANK, 0.0));
        }
        if w < u_len {
            g.add_arc(Arc::new(ready(w), ready(w + 1), y.units()[w] as i32, 0.0));
        } else {
            g.add_arc(Arc::new(ready(w), final_state, BLANK, 0.0));
        }
        for k in 1..=u_len {
            let dst = if k > 1 { skip(w, k - 1) } else { ready(w) };
            g.add_arc(Arc::new(skip(w, k), dst, FRAME_SKIP, 0.0));
        }
    }
    g.add_final(final_state);
    EpsilonAdapter {
        graph: g,
        u_built: u_len,
    }
}

/// Training lattice via the epsilon pipeline:
/// `emissions . (adapter . alignment)`, trimmed and populated.
///
/// The result is score-equivalent to the grid lattice (the sentinel arcs carry
/// weight 0 and appear in both composition operands), but its state count grows
/// with `T * U^2`, which is why this route is kept for prototyping only.
pub fn epsilon_lattice(x: &LogProbTensor, y: &TargetSeq) -> Result<Lattice> {
    check_shapes(x, y)?;
    let mut emissions = emissions_graph(x.frames(), y.len(), x.vocab())?;
    let mut alignment = alignment_graph(y, x.vocab())?;
    let mut adapter = build_epsilon_adapter(y).graph;
    emissions.arcsort();
    alignment.arcsort();
    adapter.arcsort();
    let adapted = adapter.compose(&alignment)?;
    let graph = emissions.compose(&adapted)?;
    let mut lat = Lattice::from_graph(graph)?;
    lat.populate(x)?;
    Ok(lat)
}

/// Closed-form state count of the trimmed epsilon lattice; kept next to the
/// builder so the growth tests can check construction against arithmetic.
pub fn epsilon_state_count(frames: usize, target_len: usize) -> usize {
    let rows = target_len + 1;
    frames * rows + (frames.saturating_sub(1)) * rows * target_len + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Precision;
    use num_bigint::BigUint;

    fn uniform(t: usize, u: usize, v: usize) -> LogProbTensor {
        let rows = u + 1;
        let w = (1.0 / v as f64).ln();
        LogProbTensor::from_vec_f64([t, rows, v], vec![w; t * rows * v], true).unwrap()
    }

    fn binom(n: usize, k: usize) -> BigUint {
        let mut r = BigUint::from(1u32);
        for i in 0..k {
            r = r * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        r
    }

    #[test]
    fn unit_schema_structure() {
        let y = TargetSeq::new(vec![1, 3]).unwrap();
        let s = build_unit_schema(&y, 4).unwrap();
        let g = s.graph();
        assert_eq!(g.num_states(), 4);
        assert_eq!(g.num_arcs(), 6);
        // blank self-loops at 0, 1, 2; advances labeled 1 then 3; terminating blank
        for w in 0..=2usize {
            assert!(g.arcs().iter().any(|a| a.src == w
                && a.dst == w
                && a.label == BLANK
                && a.unit_idx == Some(w as u32)));
        }
        assert!(g
            .arcs()
            .iter()
            .any(|a| a.src == 0 && a.dst == 1 && a.label == 1));
        assert!(g
            .arcs()
            .iter()
            .any(|a| a.src == 1 && a.dst == 2 && a.label == 3));
        assert!(g
            .arcs()
            .iter()
            .any(|a| a.src == 2 && a.dst == 3 && a.label == BLANK));
        assert_eq!(g.finals(), &[3]);
    }

    #[test]
    fn unit_schema_empty_target() {
        let s = build_unit_schema(&TargetSeq::empty(), 2).unwrap();
        assert_eq!(s.graph().num_states(), 2);
        assert_eq!(s.graph().num_arcs(), 2);
    }

    #[test]
    fn unit_schema_rejects_out_of_range() {
        let y = TargetSeq::new(vec![5]).unwrap();
        assert!(matches!(
            build_unit_schema(&y, 4),
            Err(Error::UnitOutOfRange { .. })
        ));
    }

    #[test]
    fn time_schema_structure() {
        let s = build_time_schema(3, 4).unwrap();
        assert_eq!(s.graph().num_states(), 4);
        assert_eq!(s.graph().num_arcs(), 12); // 9 self-loops + 2 interior blanks + 1 final blank
        let blanks: Vec<_> = s
            .graph()
            .arcs()
            .iter()
            .filter(|a| a.label == BLANK)
            .collect();
        assert_eq!(blanks.len(), 3);
        assert!(blanks.iter().any(|a| a.src == 2 && a.dst == 3));

        let tiny = build_time_schema(1, 2).unwrap();
        assert_eq!(tiny.graph().num_arcs(), 2);
    }

    #[test]
    fn grid_matches_four_frame_example() {
        // four frames, target "A C" over <b>, A, B, C
        let y = TargetSeq::new(vec![1, 3]).unwrap();
        let x = uniform(4, 2, 4);
        let lat = grid_lattice(&x, &y).unwrap();
        assert_eq!(lat.num_states(), 13); // 12 grid states + final
        assert!(lat.graph().is_topsorted());
        // construction order is already topological
        let identity: Vec<usize> = (0..13).collect();
        assert_eq!(lat.graph().topological_order().unwrap(), identity);
        assert_eq!(lat.graph().count_paths().unwrap(), BigUint::from(10u32));
    }

    #[test]
    fn grid_uniform_micro_loss() {
        let x = uniform(2, 1, 3);
        let y = TargetSeq::new(vec![1]).unwrap();
        let lat = grid_lattice(&x, &y).unwrap();
        let loss = -lat.total_score();
        let expect = 3.0 * 3f64.ln() - 2f64.ln();
        assert!((loss - expect).abs() < 1e-12, "{loss} vs {expect}");
    }

    #[test]
    fn grid_uniform_micro_occupancies() {
        // two symmetric alignments: each unit arc carries half the posterior,
        // the terminating blank carries all of it
        let x = uniform(2, 1, 3);
        let y = TargetSeq::new(vec![1]).unwrap();
        let lat = grid_lattice(&x, &y).unwrap();
        let occ = lat.arc_posteriors().unwrap();
        for (arc, o) in lat.graph().arcs().iter().zip(&occ) {
            if arc.label == 1 {
                assert!((o - 0.5).abs() < 1e-12);
            }
            if arc.dst == lat.num_states() - 1 {
                assert!((o - 1.0).abs() < 1e-12);
            }
        }
        let alpha = lat.forward_scores();
        let expect = (2.0f64 / 27.0).ln();
        assert!((alpha[lat.num_states() - 1] - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_single_arc_case() {
        let x = LogProbTensor::random_normalized(1, 0, 2, 3).unwrap();
        let lat = grid_lattice(&x, &TargetSeq::empty()).unwrap();
        assert_eq!(lat.num_arcs(), 1);
        assert!((-lat.total_score() - (-x.get(0, 0, 0))).abs() < 1e-15);
    }

    #[test]
    fn compose_matches_schema_example() {
        let y = TargetSeq::new(vec![1, 3]).unwrap();
        let x = uniform(3, 2, 4);
        let lat = compose_lattice(&x, &y).unwrap();
        assert_eq!(lat.num_states(), 10); // 3x3 grid + final
        assert_eq!(lat.graph().count_paths().unwrap(), BigUint::from(6u32));
    }

    #[test]
    fn three_builders_agree_on_random_instances() {
        let mut idx = 0u64;
        for t in 1..=4usize {
            for u in 0..=3usize {
                for v in [2usize, 4] {
                    idx += 1;
                    let x = LogProbTensor::random_normalized(t, u, v, 1000 + idx).unwrap();
                    let y = TargetSeq::new(
                        (0..u)
                            .map(|i| 1 + ((i as u32 + idx as u32) % (v as u32 - 1)))
                            .collect(),
                    )
                    .unwrap();
                    let lg = grid_lattice(&x, &y).unwrap();
                    let lc = compose_lattice(&x, &y).unwrap();
                    let le = epsilon_lattice(&x, &y).unwrap();
                    let (g, c, e) = (lg.total_score(), lc.total_score(), le.total_score());
                    assert!(
                        (g - c).abs() <= 1e-10,
                        "grid {g} vs compose {c} at T={t} U={u} V={v}"
                    );
                    assert!(
                        (g - e).abs() <= 1e-10,
                        "grid {g} vs epsilon {e} at T={t} U={u} V={v}"
                    );

                    let gg = lg.loss_and_grad(x.shape()).unwrap().grad.to_f64_vec();
                    let gc = lc.loss_and_grad(x.shape()).unwrap().grad.to_f64_vec();
                    let ge = le.loss_and_grad(x.shape()).unwrap().grad.to_f64_vec();
                    for ((a, b), c) in gg.iter().zip(&gc).zip(&ge) {
                        assert!((a - b).abs() <= 1e-10);
                        assert!((a - c).abs() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn path_counts_match_binomial() {
        for t in 1..=6usize {
            for u in 0..=4usize {
                let y = TargetSeq::new(vec![1; u]).unwrap();
                let x = uniform(t, u, 3);
                let expect = binom(t - 1 + u, u);
                assert_eq!(
                    grid_lattice(&x, &y).unwrap().graph().count_paths().unwrap(),
                    expect
                );
                assert_eq!(
                    compose_lattice(&x, &y)
                        .unwrap()
                        .graph()
                        .count_paths()
                        .unwrap(),
                    expect
                );
            }
        }
    }

    #[test]
    fn epsilon_state_count_matches_closed_form() {
        for (t, u) in [(2usize, 1usize), (3, 2), (5, 3), (4, 0), (1, 2)] {
            let y = TargetSeq::new(vec![1; u]).unwrap();
            let x = uniform(t, u, 3);
            let lat = epsilon_lattice(&x, &y).unwrap();
            assert_eq!(lat.num_states(), epsilon_state_count(t, u), "T={t} U={u}");
        }
    }

    #[test]
    fn populate_shift_covariance() {
        let y = TargetSeq::new(vec![2, 1]).unwrap();
        let x = LogProbTensor::random_normalized(3, 2, 4, 99).unwrap();
        let base = -grid_lattice(&x, &y).unwrap().total_score();
        let c = 0.37;
        let shifted = -grid_lattice(&x.shifted(c), &y).unwrap().total_score();
        let drop = c * (3 + 2) as f64;
        assert!((base - shifted - drop).abs() < 1e-9);
    }

    #[test]
    fn schemas_compose_acyclic_over_sizes() {
        for t in 1..=5usize {
            for u in 0..=4usize {
                let y = TargetSeq::new(vec![1; u]).unwrap();
                let x = LogProbTensor::random_normalized(t, u, 3, (t * 10 + u) as u64).unwrap();
                let lat = compose_lattice(&x, &y).unwrap();
                assert!(lat.graph().is_topsorted());
                assert!(lat.graph().topological_order().is_ok());
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = uniform(2, 1, 3);
        let y = TargetSeq::new(vec![1, 2]).unwrap();
        assert!(matches!(grid_lattice(&x, &y), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            compose_lattice(&x, &y),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            epsilon_lattice(&x, &y),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn single_precision_populate_double_accumulation() {
        let y = TargetSeq::new(vec![1, 2]).unwrap();
        let xd = LogProbTensor::random_normalized(6, 2, 5, 4).unwrap();
        let xs = LogProbTensor::random_normalized_in(6, 2, 5, 4, Precision::Single).unwrap();
        let ld = -grid_lattice(&xd, &y).unwrap().total_score();
        let ls = -grid_lattice(&xs, &y).unwrap().total_score();
        assert!((ld - ls).abs() <= 1e-4);
    }
}
