//! Log-semiring forward/backward over an acyclic lattice: total score (the
//! loss), per-arc posteriors, and gradient scatter back into the tensor.

use crate::error::{Error, Result};
use crate::logmath::lse;
use crate::tensor::{LogProbTensor, Precision, TensorShape};
use crate::wfsa::{arc_byte_size, Wfsa};

/// How one arc relates to the score tensor: either an index triple into it, or
/// a structural probability-one arc with weight fixed at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Bound { t: usize, u: usize, v: usize },
    Structural,
}

/// Scalar loss plus the gradient tensor, shaped like the source tensor.
#[derive(Debug, Clone)]
pub struct LossResult {
    /// Natural-log units; non-negative for normalized inputs.
    pub loss: f64,
    /// `d loss / d X[t,u,v]`; zero wherever no bound arc points.
    pub grad: LogProbTensor,
}

/// An acyclic, trimmed, topologically ordered acceptor whose arcs carry
/// `(t, u, label)` bindings into a [`LogProbTensor`].
///
/// Construction trims and relabels the graph so that every arc goes from a
/// lower to a higher state id, forces structural (sentinel-labeled) arcs to
/// weight 0, and derives one [`Binding`] per arc. All scoring happens in double
/// precision over the stored weights.
#[derive(Debug, Clone)]
pub struct Lattice {
    graph: Wfsa,
    bindings: Vec<Binding>,
    in_arcs: ArcIndex,
    out_arcs: ArcIndex,
}

/// Offset-array map from state id to the indices of its incoming or outgoing
/// arcs, in arc-list order (the fixed summation order of each reduction).
#[derive(Debug, Clone)]
struct ArcIndex {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl ArcIndex {
    fn build(n: usize, endpoints: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for s in endpoints.clone() {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; offsets[n]];
        for (i, s) in endpoints.enumerate() {
            indices[cursor[s]] = i;
            cursor[s] += 1;
        }
        Self { offsets, indices }
    }

    fn at(&self, s: usize) -> &[usize] {
        &self.indices[self.offsets[s]..self.offsets[s + 1]]
    }
}

impl Lattice {
    /// Builds a lattice from an acceptor: connect, topologically relabel, strip
    /// sentinels to weight-0 structural arcs, and bind scored arcs.
    ///
    /// Every non-negative arc label must come with both auxiliary indices; the
    /// binding is then `(time_idx, unit_idx, label)`.
    pub fn from_graph(graph: Wfsa) -> Result<Self> {
        let graph = graph.into_trim_topsorted()?;
        Self::bind(graph)
    }

    /// Constructor for builders whose output is trim and topologically ordered
    /// by construction (the direct grid). Verified in debug builds only.
    pub(crate) fn from_topsorted_graph(graph: Wfsa) -> Result<Self> {
        debug_assert!(graph.is_topsorted());
        debug_assert!(graph
            .clone()
            .into_trim_topsorted()
            .map(|g| g.num_states() == graph.num_states())
            .unwrap_or(false));
        Self::bind(graph)
    }

    fn bind(mut graph: Wfsa) -> Result<Self> {
        let mut bindings = Vec::with_capacity(graph.num_arcs());
        for arc in graph.arcs() {
            if arc.label >= 0 {
                match (arc.time_idx, arc.unit_idx) {
                    (Some(t), Some(u)) => bindings.push(Binding::Bound {
                        t: t as usize,
                        u: u as usize,
                        v: arc.label as usize,
                    }),
                    _ => return Err(Error::UnboundScoredArc { label: arc.label }),
                }
            } else {
                bindings.push(Binding::Structural);
            }
        }
        let in_arcs = ArcIndex::build(graph.num_states(), graph.arcs().iter().map(|a| a.dst));
        let out_arcs = ArcIndex::build(graph.num_states(), graph.arcs().iter().map(|a| a.src));
        graph.strip_structural_weights();
        Ok(Self {
            graph,
            bindings,
            in_arcs,
            out_arcs,
        })
    }

    pub fn graph(&self) -> &Wfsa {
        &self.graph
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.graph.num_states()
    }

    pub fn num_arcs(&self) -> usize {
        self.graph.num_arcs()
    }

    /// Analytic memory proxy: arc count times arc byte size.
    pub fn memory_bytes(&self) -> usize {
        self.graph.num_arcs() * arc_byte_size()
    }

    /// Assigns each bound arc the tensor entry its binding indexes; structural
    /// arcs stay at weight 0. Idempotent for a fixed tensor.
    pub fn populate(&mut self, x: &LogProbTensor) -> Result<()> {
        let [dt, du, dv] = x.dims();
        for (i, b) in self.bindings.iter().enumerate() {
            if let Binding::Bound { t, u, v } = *b {
                if t >= dt || u >= du || v >= dv {
                    return Err(Error::BindingOutOfRange {
                        t,
                        u,
                        v,
                        shape: x.dims(),
                    });
                }
                self.graph.set_weight(i, x.get(t, u, v));
            }
        }
        Ok(())
    }

    /// Per-state forward scores: `alpha(start) = 0`, then logsumexp over
    /// incoming arcs in topological (= id) order. Unreachable states get `-inf`.
    ///
    /// Each reduction gathers its inputs (fixed arc-list order) before the
    /// max-subtraction sum, so results do not depend on evaluation strategy.
    pub fn forward_scores(&self) -> Vec<f64> {
        let n = self.graph.num_states();
        let mut alpha = vec![f64::NEG_INFINITY; n];
        if n == 0 {
            return alpha;
        }
        alpha[0] = 0.0;
        let arcs = self.graph.arcs();
        for s in 1..n {
            let incoming = self.in_arcs.at(s);
            alpha[s] = lse_by(incoming, f64::NEG_INFINITY, |i| {
                alpha[arcs[i].src] + arcs[i].weight
            });
        }
        alpha
    }

    /// Per-state backward scores: `beta(final) = 0` plus logsumexp over outgoing
    /// arcs, in reverse topological order.
    pub fn backward_scores(&self) -> Vec<f64> {
        let n = self.graph.num_states();
        let mut beta = vec![f64::NEG_INFINITY; n];
        let arcs = self.graph.arcs();
        for s in (0..n).rev() {
            let seed = if self.graph.is_final(s) {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            beta[s] = lse_by(self.out_arcs.at(s), seed, |i| {
                arcs[i].weight + beta[arcs[i].dst]
            });
        }
        beta
    }

    /// logsumexp of forward scores over final states; the loss is its negation.
    /// `-inf` signals the no-path condition.
    pub fn total_score(&self) -> f64 {
        let alpha = self.forward_scores();
        let finals: Vec<f64> = self.graph.finals().iter().map(|&f| alpha[f]).collect();
        lse(&finals)
    }

    fn posteriors_and_total(&self) -> Result<(Vec<f64>, f64)> {
        let alpha = self.forward_scores();
        let beta = self.backward_scores();
        let finals: Vec<f64> = self.graph.finals().iter().map(|&f| alpha[f]).collect();
        let total = lse(&finals);
        if total == f64::NEG_INFINITY {
            return Err(Error::NoPath);
        }
        let occ = self
            .graph
            .arcs()
            .iter()
            .map(|a| {
                let num = alpha[a.src] + a.weight + beta[a.dst];
                if num == f64::NEG_INFINITY {
                    0.0
                } else {
                    (num - total).exp()
                }
            })
            .collect();
        Ok((occ, total))
    }

    /// Per-arc occupancy `exp(alpha(src) + w + beta(dst) - total)`: the
    /// probability that an alignment drawn from the lattice posterior traverses
    /// the arc. Structural arcs are included.
    pub fn arc_posteriors(&self) -> Result<Vec<f64>> {
        Ok(self.posteriors_and_total()?.0)
    }

    /// Loss and gradient with respect to the supplied tensor shape:
    /// `loss = -total`, `grad[t,u,v] = -sum of occupancies` over bound arcs with
    /// that binding. Structural arcs contribute nothing to the gradient.
    pub fn loss_and_grad(&self, shape: TensorShape) -> Result<LossResult> {
        let (occ, total) = self.posteriors_and_total()?;
        let loss = -total;
        let [dt, du, dv] = shape.dims;
        let mut grad = vec![0.0f64; dt * du * dv];
        for (i, b) in self.bindings.iter().enumerate() {
            if let Binding::Bound { t, u, v } = *b {
                if t >= dt || u >= du || v >= dv {
                    return Err(Error::BindingOutOfRange {
                        t,
                        u,
                        v,
                        shape: shape.dims,
                    });
                }
                grad[(t * du + u) * dv + v] -= occ[i];
            }
        }
        // occupancies are finite, so the scattered gradient needs no entry scan
        let grad = match shape.precision {
            Precision::Double => LogProbTensor::from_finite_vec(shape.dims, grad),
            Precision::Single => LogProbTensor::from_finite_vec_f32(
                shape.dims,
                grad.into_iter().map(|x| x as f32).collect(),
            ),
        };
        Ok(LossResult { loss, grad })
    }

    /// `beta(start)`, which must match the forward total; used by tests.
    pub fn backward_total(&self) -> f64 {
        let beta = self.backward_scores();
        if beta.is_empty() {
            f64::NEG_INFINITY
        } else {
            beta[0]
        }
    }
}

/// Allocation-free logsumexp over mapped arc indices plus an optional seed
/// term: one pass for the max, one for the sum.
fn lse_by(indices: &[usize], seed: f64, term: impl Fn(usize) -> f64) -> f64 {
    let mut hi = seed;
    for &i in indices {
        let x = term(i);
        if x > hi {
            hi = x;
        }
    }
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = if seed == f64::NEG_INFINITY {
        0.0
    } else {
        (seed - hi).exp()
    };
    for &i in indices {
        sum += (term(i) - hi).exp();
    }
    hi + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfsa::{Arc, WILD_END};

    // two-state graph with one blank arc per frame: a linear chain
    fn chain_lattice(weights: &[f64]) -> (Lattice, LogProbTensor) {
        let t = weights.len();
        let mut g = Wfsa::new(t + 1);
        for (i, _) in weights.iter().enumerate() {
            g.add_arc(Arc::new(i, i + 1, 0, 0.0).with_time(i).with_unit(0));
        }
        g.add_final(t);
        let mut data = Vec::new();
        for &w in weights {
            data.extend_from_slice(&[w, -1.0]);
        }
        let x = LogProbTensor::from_vec_f64([t, 1, 2], data, false).unwrap();
        let mut lat = Lattice::from_graph(g).unwrap();
        lat.populate(&x).unwrap();
        (lat, x)
    }

    #[test]
    fn forward_on_linear_chain_adds_weights() {
        let (lat, _) = chain_lattice(&[-0.5, -1.25]);
        let alpha = lat.forward_scores();
        assert_eq!(alpha[0], 0.0);
        assert!((alpha[2] - (-1.75)).abs() < 1e-15);
        assert!((lat.total_score() - (-1.75)).abs() < 1e-15);
    }

    #[test]
    fn parallel_half_arcs_sum_to_one() {
        let mut g = Wfsa::new(2);
        g.add_arc(Arc::new(0, 1, 0, 0.0).with_time(0).with_unit(0));
        g.add_arc(Arc::new(0, 1, 1, 0.0).with_time(0).with_unit(0));
        g.add_final(1);
        let x =
            LogProbTensor::from_vec_f64([1, 1, 2], vec![0.5f64.ln(), 0.5f64.ln()], true).unwrap();
        let mut lat = Lattice::from_graph(g).unwrap();
        lat.populate(&x).unwrap();
        assert!(lat.total_score().abs() < 1e-15);
    }

    #[test]
    fn backward_mirrors_forward() {
        let (lat, _) = chain_lattice(&[-0.3, -0.7, -0.1]);
        let beta = lat.backward_scores();
        assert_eq!(beta[3], 0.0); // single final, no outgoing arcs
        assert!((lat.backward_total() - lat.total_score()).abs() < 1e-12);
    }

    #[test]
    fn single_path_occupancies_are_one_and_grad_minus_one() {
        let (lat, x) = chain_lattice(&[-0.5, -1.25]);
        let occ = lat.arc_posteriors().unwrap();
        for o in &occ {
            assert!((o - 1.0).abs() < 1e-12);
        }
        let res = lat.loss_and_grad(x.shape()).unwrap();
        assert!((res.loss - 1.75).abs() < 1e-12);
        assert_eq!(res.grad.get(0, 0, 0), -1.0);
        assert_eq!(res.grad.get(1, 0, 0), -1.0);
        assert_eq!(res.grad.get(0, 0, 1), 0.0);
    }

    #[test]
    fn structural_arcs_keep_weight_zero_and_carry_no_grad() {
        let mut g = Wfsa::new(3);
        g.add_arc(Arc::new(0, 1, 0, 0.0).with_time(0).with_unit(0));
        g.add_arc(Arc::new(1, 2, WILD_END, 123.0)); // strip pass zeroes this
        g.add_final(2);
        let x = LogProbTensor::from_vec_f64([1, 1, 2], vec![-0.25, -1.0], false).unwrap();
        let mut lat = Lattice::from_graph(g).unwrap();
        lat.populate(&x).unwrap();
        assert!((lat.total_score() - (-0.25)).abs() < 1e-15);
        let res = lat.loss_and_grad(x.shape()).unwrap();
        let total: f64 = res.grad.to_f64_vec().iter().sum();
        assert!((total - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_lattice_is_no_path() {
        let lat = Lattice::from_graph(Wfsa::empty()).unwrap();
        assert_eq!(lat.total_score(), f64::NEG_INFINITY);
        assert_eq!(lat.arc_posteriors(), Err(Error::NoPath));
        let shape = TensorShape {
            dims: [1, 1, 2],
            precision: Precision::Double,
        };
        assert!(matches!(lat.loss_and_grad(shape), Err(Error::NoPath)));
    }

    #[test]
    fn populate_is_idempotent_and_checks_bounds() {
        let (mut lat, x) = chain_lattice(&[-0.5]);
        let before = lat.graph().to_text();
        lat.populate(&x).unwrap();
        assert_eq!(lat.graph().to_text(), before);

        let small = LogProbTensor::from_vec_f64([1, 1, 2], vec![0.0, 0.0], false).unwrap();
        let (mut lat2, _) = chain_lattice(&[-0.5, -0.5]);
        assert!(matches!(
            lat2.populate(&small),
            Err(Error::BindingOutOfRange { .. })
        ));
    }

    #[test]
    fn scored_arc_without_indices_is_rejected() {
        let mut g = Wfsa::new(2);
        g.add_arc(Arc::new(0, 1, 0, 0.0).with_time(0)); // missing unit_idx
        g.add_final(1);
        assert!(matches!(
            Lattice::from_graph(g),
            Err(Error::UnboundScoredArc { label: 0 })
        ));
    }
}
