//! Log-semiring arithmetic: addition is logsumexp, multiplication is `+`.
//! `-inf` is the additive identity and absorbs under multiplication.

#[allow(dead_code)] // kept alongside lse; used by unit tests
/// logsumexp of two values with max-subtraction.
pub fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// logsumexp over a slice with max-subtraction; empty reductions yield `-inf`.
pub fn lse(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}
