//! Independent reference implementations used solely for validation: the
//! classical two-dimensional transducer recursion, exhaustive path
//! enumeration, and a central-difference gradient harness.
//!
//! The recursion here deliberately shares no code with the lattice engine:
//! different table indexing (unit-major), different logsumexp formulation,
//! no graph machinery.

use crate::error::{Error, Result};
use crate::lattice::{Binding, Lattice};
use crate::tensor::{LogProbTensor, TargetSeq};
use crate::wfsa::Label;
use num_bigint::BigUint;

/// Default cap on exhaustive enumeration; breaching it is an error, never a
/// silent truncation.
pub const DEFAULT_ENUM_CAP: u64 = 1_000_000;

/// One complete start-to-final path of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWeight {
    pub steps: Vec<PathStep>,
    /// Sum of bound-arc tensor entries along the path (structural arcs add 0).
    pub logweight: f64,
}

/// One arc of an enumerated path: a tensor binding or a structural sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStep {
    Bound { t: usize, u: usize, v: usize },
    Structural(Label),
}

fn ora_lse2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// Classical dynamic-programming transducer loss: a direct 2-D table with no
/// graph machinery. `alpha(0,0) = 0`;
/// `alpha(t,u) = lse(alpha(t-1,u) + X[t-1,u,blank], alpha(t,u-1) + X[t,u-1,y_u])`;
/// the loss is `-(alpha(T-1,U) + X[T-1,U,blank])`.
pub fn dp_loss(x: &LogProbTensor, y: &TargetSeq) -> Result<f64> {
    if x.unit_rows() != y.len() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "tensor has {} unit rows but target of length {} needs {}",
            x.unit_rows(),
            y.len(),
            y.len() + 1
        )));
    }
    y.check_vocab(x.vocab())?;
    let frames = x.frames();
    let u_len = y.len();
    // unit-major table, unlike the engine's time-major lattices
    let at = |t: usize, u: usize| u * frames + t;
    let mut alpha = vec![f64::NEG_INFINITY; frames * (u_len + 1)];
    alpha[at(0, 0)] = 0.0;
    for t in 0..frames {
        for u in 0..=u_len {
            if t == 0 && u == 0 {
                continue;
            }
            let from_blank = if t > 0 {
                alpha[at(t - 1, u)] + x.get(t - 1, u, 0)
            } else {
                f64::NEG_INFINITY
            };
            let from_unit = if u > 0 {
                alpha[at(t, u - 1)] + x.get(t, u - 1, y.units()[u - 1] as usize)
            } else {
                f64::NEG_INFINITY
            };
            alpha[at(t, u)] = ora_lse2(from_blank, from_unit);
        }
    }
    Ok(-(alpha[at(frames - 1, u_len)] + x.get(frames - 1, u_len, 0)))
}

/// Depth-first enumeration of every start-to-final path. Returns the loss
/// (negative logsumexp of path weights) and the full path list for debugging.
///
/// Errors with [`Error::PathCapExceeded`] when the lattice has more than `cap`
/// paths, and with [`Error::NoPath`] when no path carries finite weight.
pub fn enumerate_loss(lat: &Lattice, cap: u64) -> Result<(f64, Vec<PathWeight>)> {
    let count = lat.graph().count_paths()?;
    if count > BigUint::from(cap) {
        return Err(Error::PathCapExceeded {
            cap,
            count: count.to_string(),
        });
    }
    let mut paths = Vec::new();
    if !lat.is_empty() {
        let mut steps: Vec<usize> = Vec::new();
        dfs(lat, 0, 0.0, &mut steps, &mut paths);
    }
    let total = {
        let hi = paths
            .iter()
            .map(|p| p.logweight)
            .fold(f64::NEG_INFINITY, f64::max);
        if hi == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            hi + paths
                .iter()
                .map(|p| (p.logweight - hi).exp())
                .sum::<f64>()
                .ln()
        }
    };
    if total == f64::NEG_INFINITY {
        return Err(Error::NoPath);
    }
    Ok((-total, paths))
}

fn dfs(
    lat: &Lattice,
    state: usize,
    weight: f64,
    steps: &mut Vec<usize>,
    out: &mut Vec<PathWeight>,
) {
    if lat.graph().is_final(state) {
        out.push(PathWeight {
            steps: steps
                .iter()
                .map(|&i| match lat.bindings()[i] {
                    Binding::Bound { t, u, v } => PathStep::Bound { t, u, v },
                    Binding::Structural => PathStep::Structural(lat.graph().arcs()[i].label),
                })
                .collect(),
            logweight: weight,
        });
    }
    for (i, arc) in lat.graph().arcs().iter().enumerate() {
        if arc.src == state {
            steps.push(i);
            dfs(lat, arc.dst, weight + arc.weight, steps, out);
            steps.pop();
        }
    }
}

/// Central finite differences of an arbitrary loss function with respect to
/// every tensor entry, rebuilding at each probe: `(f(x + h e) - f(x - h e)) / 2h`.
///
/// A loss function may report [`Error::NoPath`]; it is treated as an infinite
/// loss, and entries whose probes are infinite on both sides get gradient 0.
pub fn fd_gradient<F>(x: &LogProbTensor, h: f64, mut loss_fn: F) -> Result<LogProbTensor>
where
    F: FnMut(&LogProbTensor) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidDimensions(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let [dt, du, dv] = x.dims();
    let mut probe = |x: &LogProbTensor| -> Result<f64> {
        match loss_fn(x) {
            Ok(v) => Ok(v),
            Err(Error::NoPath) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let mut grad = vec![0.0f64; dt * du * dv];
    for t in 0..dt {
        for u in 0..du {
            for v in 0..dv {
                let base = x.get(t, u, v);
                let plus = probe(&x.with_entry(t, u, v, base + h))?;
                let minus = probe(&x.with_entry(t, u, v, base - h))?;
                grad[(t * du + u) * dv + v] = if !plus.is_finite() && !minus.is_finite() {
                    0.0
                } else {
                    (plus - minus) / (2.0 * h)
                };
            }
        }
    }
    LogProbTensor::from_vec_f64([dt, du, dv], grad, false)
}
