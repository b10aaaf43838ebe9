//! Minimal weighted finite-state acceptor engine.
//!
//! Acceptors carry per-arc auxiliary time and unit indices besides the input
//! label, in place of a transducer's output label. The engine is epsilon-free:
//! structural probability-one arcs use negative sentinel labels that compose
//! like ordinary symbols, and scoring later treats them as weight-0 pass-through
//! arcs. Weights are natural-log scores stored in double precision.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

pub type StateId = usize;

/// Arc label. `0` is blank, `1..V-1` are vocabulary units, negative values are
/// structural: `-1` epsilon (never produced by this crate's builders), `-2`
/// wild-start, `-3` wild-end, `-4` frame-skip.
pub type Label = i32;

pub const BLANK: Label = 0;
pub const EPSILON: Label = -1;
pub const WILD_START: Label = -2;
pub const WILD_END: Label = -3;
pub const FRAME_SKIP: Label = -4;

/// True for the sentinel labels that stand in for probability-one arcs.
pub fn is_sentinel(label: Label) -> bool {
    (FRAME_SKIP..=WILD_START).contains(&label)
}

/// A weighted arc with optional auxiliary time/unit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub src: StateId,
    pub dst: StateId,
    pub label: Label,
    pub time_idx: Option<u32>,
    pub unit_idx: Option<u32>,
    pub weight: f64,
}

impl Arc {
    pub fn new(src: StateId, dst: StateId, label: Label, weight: f64) -> Self {
        Self {
            src,
            dst,
            label,
            time_idx: None,
            unit_idx: None,
            weight,
        }
    }

    pub fn with_time(mut self, t: usize) -> Self {
        self.time_idx = Some(t as u32);
        self
    }

    pub fn with_unit(mut self, u: usize) -> Self {
        self.unit_idx = Some(u as u32);
        self
    }
}

/// Byte size of one arc as stored; the benchmark's analytic memory proxy.
pub fn arc_byte_size() -> usize {
    std::mem::size_of::<Arc>()
}

/// Weighted finite-state acceptor. State 0 is the start state; the canonical
/// empty acceptor has zero states.
///
/// Values are immutable once built (construction happens through the `add_*`
/// methods before first use) and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Wfsa {
    num_states: usize,
    arcs: Vec<Arc>,
    finals: Vec<StateId>,
    arc_sorted: bool,
}

impl Wfsa {
    pub fn new(num_states: usize) -> Self {
        Self {
            num_states,
            arcs: Vec::new(),
            finals: Vec::new(),
            arc_sorted: false,
        }
    }

    /// The canonical empty acceptor: zero states, no arcs, no finals.
    pub fn empty() -> Self {
        Self::new(0)
    }

    pub fn is_empty(&self) -> bool {
        self.num_states == 0
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Start state id; meaningful only for non-empty acceptors.
    pub fn start(&self) -> StateId {
        0
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn finals(&self) -> &[StateId] {
        &self.finals
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.binary_search(&s).is_ok()
    }

    pub fn add_arc(&mut self, arc: Arc) {
        debug_assert!(arc.src < self.num_states && arc.dst < self.num_states);
        self.arc_sorted = false;
        self.arcs.push(arc);
    }

    pub fn reserve_arcs(&mut self, n: usize) {
        self.arcs.reserve(n);
    }

    pub fn add_final(&mut self, s: StateId) {
        debug_assert!(s < self.num_states);
        if let Err(pos) = self.finals.binary_search(&s) {
            self.finals.insert(pos, s);
        }
    }

    /// Whether arcs are currently sorted by `(src, label)`.
    pub fn is_arc_sorted(&self) -> bool {
        self.arc_sorted
    }

    /// Rewrites one arc's weight in place; used by lattice population.
    pub(crate) fn set_weight(&mut self, arc_index: usize, weight: f64) {
        self.arcs[arc_index].weight = weight;
    }

    /// The strip pass before scoring: sentinel-labeled arcs are probability-one
    /// by definition, so their weights are forced to 0.
    pub(crate) fn strip_structural_weights(&mut self) {
        for arc in &mut self.arcs {
            if arc.label < 0 {
                arc.weight = 0.0;
            }
        }
    }

    /// Stable-sorts arcs by `(src, label)`; a precondition of [`compose`](Self::compose).
    pub fn arcsort(&mut self) {
        self.arcs.sort_by_key(|a| (a.src, a.label));
        self.arc_sorted = true;
    }

    fn out_offsets(&self) -> Vec<usize> {
        // offsets into the (src-sorted) arc list, one slot per state plus end
        let mut offsets = vec![0usize; self.num_states + 1];
        for arc in &self.arcs {
            offsets[arc.src + 1] += 1;
        }
        for i in 0..self.num_states {
            offsets[i + 1] += offsets[i];
        }
        offsets
    }

    /// Product construction over matching labels.
    ///
    /// Both operands must be arc-sorted and epsilon-free. A result arc inherits
    /// the matched label, the sum of the component weights, and each auxiliary
    /// index from whichever side defines it; an arc pair where both sides define
    /// the same auxiliary field is a construction-time error. States are
    /// `(left, right)` pairs discovered from a worklist seeded with the start
    /// pair, so ids are deterministic; only reachable pairs are created.
    pub fn compose(&self, other: &Wfsa) -> Result<Wfsa> {
        if self.is_empty() || other.is_empty() {
            return Ok(Wfsa::empty());
        }
        if !self.arc_sorted || !other.arc_sorted {
            return Err(Error::UnsortedCompose);
        }
        if self
            .arcs
            .iter()
            .chain(other.arcs.iter())
            .any(|a| a.label == EPSILON)
        {
            return Err(Error::EpsilonInCompose);
        }

        let off_a = self.out_offsets();
        let off_b = other.out_offsets();

        let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
        let mut pairs: Vec<(StateId, StateId)> = Vec::new();
        let mut queue: VecDeque<StateId> = VecDeque::new();
        ids.insert((0, 0), 0);
        pairs.push((0, 0));
        queue.push_back(0);

        let mut out = Wfsa::new(0);
        while let Some(id) = queue.pop_front() {
            let (sa, sb) = pairs[id];
            let arcs_a = &self.arcs[off_a[sa]..off_a[sa + 1]];
            let arcs_b = &other.arcs[off_b[sb]..off_b[sb + 1]];
            let (mut i, mut j) = (0, 0);
            while i < arcs_a.len() && j < arcs_b.len() {
                let la = arcs_a[i].label;
                let lb = arcs_b[j].label;
                if la < lb {
                    i += 1;
                } else if lb < la {
                    j += 1;
                } else {
                    // label groups [i, i2) and [j, j2) match pairwise
                    let i2 = i + arcs_a[i..].iter().take_while(|a| a.label == la).count();
                    let j2 = j + arcs_b[j..].iter().take_while(|b| b.label == la).count();
                    for a in &arcs_a[i..i2] {
                        for b in &arcs_b[j..j2] {
                            let time_idx = match (a.time_idx, b.time_idx) {
                                (Some(_), Some(_)) => {
                                    return Err(Error::AuxConflict { field: "time_idx" })
                                }
                                (t, None) => t,
                                (None, t) => t,
                            };
                            let unit_idx = match (a.unit_idx, b.unit_idx) {
                                (Some(_), Some(_)) => {
                                    return Err(Error::AuxConflict { field: "unit_idx" })
                                }
                                (u, None) => u,
                                (None, u) => u,
                            };
                            let pair = (a.dst, b.dst);
                            let next = pairs.len();
                            let dst = *ids.entry(pair).or_insert_with(|| {
                                pairs.push(pair);
                                queue.push_back(next);
                                next
                            });
                            out.arcs.push(Arc {
                                src: id,
                                dst,
                                label: la,
                                time_idx,
                                unit_idx,
                                weight: a.weight + b.weight,
                            });
                        }
                    }
                    i = i2;
                    j = j2;
                }
            }
        }
        out.num_states = pairs.len();
        for (id, &(sa, sb)) in pairs.iter().enumerate() {
            if self.is_final(sa) && other.is_final(sb) {
                out.finals.push(id);
            }
        }
        out.finals.sort_unstable();
        // arcs were emitted per source in merge order, hence (src, label)-sorted
        out.arc_sorted = true;
        Ok(out)
    }

    /// States lying on some start-to-final path, as a mask.
    fn path_states(&self) -> Vec<bool> {
        let fwd = Csr::forward(self.num_states, &self.arcs);
        let rev = Csr::reverse(self.num_states, &self.arcs);
        let reach = bfs(self.num_states, &[0], &fwd);
        let coacc = bfs(self.num_states, &self.finals, &rev);
        (0..self.num_states).map(|s| reach[s] && coacc[s]).collect()
    }

    /// Trims the acceptor to states lying on some start-to-final path.
    ///
    /// Surviving states keep their relative order, so ids stay deterministic.
    /// An acceptor with no start-to-final path becomes the canonical empty
    /// acceptor. The multiset of path weights is unchanged.
    pub fn connect(&self) -> Wfsa {
        if self.is_empty() {
            return Wfsa::empty();
        }
        let keep = self.path_states();
        if !keep[0] {
            return Wfsa::empty();
        }
        let mut remap = vec![usize::MAX; self.num_states];
        let mut next = 0;
        for (s, &k) in keep.iter().enumerate() {
            if k {
                remap[s] = next;
                next += 1;
            }
        }
        let mut out = Wfsa::new(next);
        for arc in &self.arcs {
            if keep[arc.src] && keep[arc.dst] {
                out.arcs.push(Arc {
                    src: remap[arc.src],
                    dst: remap[arc.dst],
                    ..arc.clone()
                });
            }
        }
        out.finals = self
            .finals
            .iter()
            .filter(|&&f| keep[f])
            .map(|&f| remap[f])
            .collect();
        // remap is monotone, so a (src, label) sort survives trimming
        out.arc_sorted = self.arc_sorted;
        out
    }

    /// True when every arc already goes from a lower to a higher state id.
    pub fn is_topsorted(&self) -> bool {
        self.arcs.iter().all(|a| a.src < a.dst)
    }

    /// Topological order of all states (Kahn's algorithm, smallest id first),
    /// or an error if the graph has a cycle. An already-sorted graph yields the
    /// identity order.
    pub fn topological_order(&self) -> Result<Vec<StateId>> {
        if self.is_topsorted() {
            return Ok((0..self.num_states).collect());
        }
        let mut indeg = vec![0usize; self.num_states];
        for arc in &self.arcs {
            if arc.src == arc.dst {
                return Err(Error::CyclicGraph);
            }
            indeg[arc.dst] += 1;
        }
        let adj = Csr::forward(self.num_states, &self.arcs);
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<StateId>> = (0..self
            .num_states)
            .filter(|&s| indeg[s] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.num_states);
        while let Some(std::cmp::Reverse(s)) = ready.pop() {
            order.push(s);
            for &d in adj.neighbors(s) {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    ready.push(std::cmp::Reverse(d));
                }
            }
        }
        if order.len() != self.num_states {
            return Err(Error::CyclicGraph);
        }
        Ok(order)
    }

    /// Consumes the acceptor, trimming and topologically relabeling only when
    /// needed; already-trim, already-sorted graphs (the grid builder's output)
    /// pass through without copies.
    pub fn into_trim_topsorted(self) -> Result<Wfsa> {
        if self.is_empty() {
            return Ok(self);
        }
        let trimmed = if self.path_states().iter().all(|&k| k) {
            self
        } else {
            self.connect()
        };
        if trimmed.is_topsorted() {
            Ok(trimmed)
        } else {
            trimmed.topsort()
        }
    }

    /// Relabels states into topological order so that every arc satisfies
    /// `src < dst`. The arc list order is preserved.
    pub fn topsort(&self) -> Result<Wfsa> {
        let order = self.topological_order()?;
        if order.iter().enumerate().all(|(i, &s)| i == s) {
            return Ok(self.clone());
        }
        let mut remap = vec![0usize; self.num_states];
        for (pos, &s) in order.iter().enumerate() {
            remap[s] = pos;
        }
        let mut out = Wfsa::new(self.num_states);
        for arc in &self.arcs {
            out.arcs.push(Arc {
                src: remap[arc.src],
                dst: remap[arc.dst],
                ..arc.clone()
            });
        }
        out.finals = self.finals.iter().map(|&f| remap[f]).collect();
        out.finals.sort_unstable();
        out.arc_sorted = false;
        Ok(out)
    }

    /// Exact number of distinct start-to-final arc sequences.
    pub fn count_paths(&self) -> Result<BigUint> {
        if self.is_empty() {
            return Ok(BigUint::from(0u32));
        }
        let order = self.topological_order()?;
        let mut counts: Vec<BigUint> = vec![BigUint::from(0u32); self.num_states];
        counts[0] = BigUint::from(1u32);
        let adj = Csr::forward(self.num_states, &self.arcs);
        for &s in &order {
            if counts[s] == BigUint::from(0u32) {
                continue;
            }
            let c = counts[s].clone();
            for &d in adj.neighbors(s) {
                counts[d] += &c;
            }
        }
        Ok(self
            .finals
            .iter()
            .map(|&f| counts[f].clone())
            .sum::<BigUint>())
    }

    /// Caption for one label, using vocabulary names when provided.
    fn label_caption(label: Label, names: Option<&[String]>) -> String {
        match label {
            EPSILON => "eps".to_string(),
            WILD_START => "*start".to_string(),
            WILD_END => "*end".to_string(),
            FRAME_SKIP => "skip".to_string(),
            l if l >= 0 => match names.and_then(|n| n.get(l as usize)) {
                Some(name) => name.clone(),
                None => l.to_string(),
            },
            l => l.to_string(),
        }
    }

    /// DOT rendering. Arc captions read `label:t:u/weight` with `-` for absent
    /// fields; final states are double-circled; structural sentinel arcs are bold.
    pub fn to_dot(&self, names: Option<&[String]>) -> String {
        let mut s = String::new();
        s.push_str("digraph wfsa {\n  rankdir = LR;\n  node [shape = circle];\n");
        for &f in &self.finals {
            let _ = writeln!(s, "  {f} [shape = doublecircle];");
        }
        for arc in &self.arcs {
            let t = arc
                .time_idx
                .map_or_else(|| "-".to_string(), |x| x.to_string());
            let u = arc
                .unit_idx
                .map_or_else(|| "-".to_string(), |x| x.to_string());
            let style = if is_sentinel(arc.label) {
                ", style = bold"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "  {} -> {} [label = \"{}:{}:{}/{:.4}\"{}];",
                arc.src,
                arc.dst,
                Self::label_caption(arc.label, names),
                t,
                u,
                arc.weight,
                style
            );
        }
        s.push_str("}\n");
        s
    }

    /// Compact text form for golden-file tests: one `src dst label time unit weight`
    /// line per arc, finals on a trailing line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for arc in &self.arcs {
            let t = arc
                .time_idx
                .map_or_else(|| "-".to_string(), |x| x.to_string());
            let u = arc
                .unit_idx
                .map_or_else(|| "-".to_string(), |x| x.to_string());
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                arc.src, arc.dst, arc.label, t, u, arc.weight
            );
        }
        let finals: Vec<String> = self.finals.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(s, "finals {}", finals.join(" "));
        s
    }
}

/// Offset-array adjacency; avoids per-state allocations on hot paths.
pub(crate) struct Csr {
    offsets: Vec<usize>,
    targets: Vec<StateId>,
}

impl Csr {
    fn build(n: usize, arcs: &[Arc], key: impl Fn(&Arc) -> (StateId, StateId)) -> Csr {
        let mut offsets = vec![0usize; n + 1];
        for arc in arcs {
            offsets[key(arc).0 + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0 as StateId; arcs.len()];
        for arc in arcs {
            let (from, to) = key(arc);
            targets[cursor[from]] = to;
            cursor[from] += 1;
        }
        Csr { offsets, targets }
    }

    pub(crate) fn forward(n: usize, arcs: &[Arc]) -> Csr {
        Self::build(n, arcs, |a| (a.src, a.dst))
    }

    pub(crate) fn reverse(n: usize, arcs: &[Arc]) -> Csr {
        Self::build(n, arcs, |a| (a.dst, a.src))
    }

    pub(crate) fn neighbors(&self, s: StateId) -> &[StateId] {
        &self.targets[self.offsets[s]..self.offsets[s + 1]]
    }
}

fn bfs(n: usize, seeds: &[StateId], adj: &Csr) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &d in adj.neighbors(s) {
            if !seen[d] {
                seen[d] = true;
                queue.push_back(d);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_chain(weights: &[f64]) -> Wfsa {
        let mut g = Wfsa::new(weights.len() + 1);
        for (i, &w) in weights.iter().enumerate() {
            g.add_arc(Arc::new(i, i + 1, 1, w));
        }
        g.add_final(weights.len());
        g
    }

    fn path_weights(g: &Wfsa) -> Vec<(Vec<Label>, f64)> {
        // depth-first enumeration; test graphs here are tiny and acyclic
        fn go(
            g: &Wfsa,
            s: StateId,
            labels: &mut Vec<Label>,
            w: f64,
            out: &mut Vec<(Vec<Label>, f64)>,
        ) {
            if g.is_final(s) {
                out.push((labels.clone(), w));
            }
            for arc in g.arcs().iter().filter(|a| a.src == s) {
                labels.push(arc.label);
                go(g, arc.dst, labels, w + arc.weight, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        if !g.is_empty() {
            go(g, 0, &mut Vec::new(), 0.0, &mut out);
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    #[test]
    fn compose_with_identity_preserves_paths() {
        let mut a = Wfsa::new(3);
        a.add_arc(Arc::new(0, 1, 1, -0.5));
        a.add_arc(Arc::new(1, 2, 2, -1.5));
        a.add_arc(Arc::new(0, 2, 2, -0.25));
        a.add_final(2);
        a.arcsort();

        let mut id = Wfsa::new(1);
        id.add_arc(Arc::new(0, 0, 1, 0.0));
        id.add_arc(Arc::new(0, 0, 2, 0.0));
        id.add_final(0);
        id.arcsort();

        let c = a.compose(&id).unwrap();
        assert_eq!(c.count_paths().unwrap(), BigUint::from(2u32));
        let want = path_weights(&a);
        let got = path_weights(&c);
        assert_eq!(want.len(), got.len());
        for ((la, wa), (lc, wc)) in want.iter().zip(&got) {
            assert_eq!(la, lc);
            assert!((wa - wc).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_disjoint_labels_has_no_paths() {
        let mut a = Wfsa::new(2);
        a.add_arc(Arc::new(0, 1, 1, 0.0));
        a.add_final(1);
        a.arcsort();
        let mut b = Wfsa::new(2);
        b.add_arc(Arc::new(0, 1, 2, 0.0));
        b.add_final(1);
        b.arcsort();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.count_paths().unwrap(), BigUint::from(0u32));
        assert!(c.connect().is_empty());
    }

    #[test]
    fn compose_requires_sorted_and_rejects_epsilon() {
        let mut a = Wfsa::new(2);
        a.add_arc(Arc::new(0, 1, 1, 0.0));
        a.add_final(1);
        let mut b = a.clone();
        b.arcsort();
        assert_eq!(a.compose(&b), Err(Error::UnsortedCompose));

        let mut e = Wfsa::new(2);
        e.add_arc(Arc::new(0, 1, EPSILON, 0.0));
        e.add_final(1);
        e.arcsort();
        assert_eq!(b.compose(&e), Err(Error::EpsilonInCompose));
    }

    #[test]
    fn compose_rejects_aux_conflicts() {
        let mut a = Wfsa::new(2);
        a.add_arc(Arc::new(0, 1, 1, 0.0).with_time(0));
        a.add_final(1);
        a.arcsort();
        let mut b = Wfsa::new(2);
        b.add_arc(Arc::new(0, 1, 1, 0.0).with_time(1));
        b.add_final(1);
        b.arcsort();
        assert_eq!(a.compose(&b), Err(Error::AuxConflict { field: "time_idx" }));
    }

    #[test]
    fn connect_drops_unreachable_and_is_idempotent() {
        let mut g = Wfsa::new(4);
        g.add_arc(Arc::new(0, 1, 1, 0.0));
        g.add_arc(Arc::new(2, 3, 1, 0.0));
        g.add_final(1);
        let t = g.connect();
        assert_eq!(t.num_states(), 2);
        assert_eq!(t.num_arcs(), 1);
        assert_eq!(t.connect(), t);
    }

    #[test]
    fn connect_no_path_gives_canonical_empty() {
        let mut g = Wfsa::new(2);
        g.add_arc(Arc::new(0, 1, 1, 0.0));
        // no finals
        assert!(g.connect().is_empty());
        assert!(Wfsa::empty().connect().is_empty());
    }

    #[test]
    fn topsort_chain_and_cycle() {
        let chain = linear_chain(&[0.0, 0.0]);
        assert_eq!(chain.topological_order().unwrap(), vec![0, 1, 2]);
        assert!(chain.is_topsorted());

        let mut cyclic = Wfsa::new(1);
        cyclic.add_arc(Arc::new(0, 0, 1, 0.0));
        cyclic.add_final(0);
        assert_eq!(cyclic.topological_order(), Err(Error::CyclicGraph));
        assert_eq!(cyclic.count_paths(), Err(Error::CyclicGraph));
    }

    #[test]
    fn topsort_relabels_arcs_forward() {
        // 0 -> 2 -> 1 -> 3 in arc terms; ids out of order
        let mut g = Wfsa::new(4);
        g.add_arc(Arc::new(0, 2, 1, 0.0));
        g.add_arc(Arc::new(2, 1, 1, 0.0));
        g.add_arc(Arc::new(1, 3, 1, 0.0));
        g.add_final(3);
        let sorted = g.topsort().unwrap();
        assert!(sorted.is_topsorted());
        assert_eq!(sorted.count_paths().unwrap(), g.count_paths().unwrap());
    }

    #[test]
    fn count_paths_empty_and_diamond() {
        assert_eq!(Wfsa::empty().count_paths().unwrap(), BigUint::from(0u32));
        let mut g = Wfsa::new(4);
        g.add_arc(Arc::new(0, 1, 1, 0.0));
        g.add_arc(Arc::new(0, 2, 2, 0.0));
        g.add_arc(Arc::new(1, 3, 3, 0.0));
        g.add_arc(Arc::new(2, 3, 4, 0.0));
        g.add_final(3);
        assert_eq!(g.count_paths().unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn dot_output_shape() {
        assert_eq!(
            Wfsa::empty().to_dot(None),
            "digraph wfsa {\n  rankdir = LR;\n  node [shape = circle];\n}\n"
        );
        let mut g = Wfsa::new(2);
        g.add_arc(Arc::new(0, 1, WILD_START, 0.0));
        g.add_final(1);
        let dot = g.to_dot(None);
        assert!(dot.contains("doublecircle"));
        assert!(dot.contains("style = bold"));
        assert!(dot.contains("*start:-:-/0.0000"));
    }

    #[test]
    fn text_serialization_shape() {
        let mut g = Wfsa::new(2);
        g.add_arc(Arc::new(0, 1, 0, -0.5).with_time(0).with_unit(1));
        g.add_final(1);
        assert_eq!(g.to_text(), "0 1 0 0 1 -0.5\nfinals 1\n");
    }
}
