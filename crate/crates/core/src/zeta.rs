//! Tail sums of `(q + j)^(-s)` (the Hurwitz zeta function restricted to
//! real `s > 1`, `q >= 1`).
//!
//! A short direct sum is followed by the Euler-Maclaurin expansion of the
//! remaining tail. For `x^(-s)` every derivative has constant sign and
//! decreases in magnitude, so the remainder after `P` correction terms is
//! bounded by the magnitude of the first omitted term. That bound, plus a
//! generous allowance for rounding, is returned alongside the value.

/// `B_2, B_4, ..., B_20`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Correction terms used; the next Bernoulli number bounds the remainder.
const CORRECTION_TERMS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum {
    pub value: f64,
    /// Upper bound on `|value - exact|`.
    pub error_bound: f64,
}

/// `sum_{j >= 0} (q + j)^(-s)` with `direct` leading terms summed explicitly
/// before the asymptotic expansion takes over.
pub fn hurwitz_tail(s: f64, q: f64, direct: usize) -> TailSum {
    debug_assert!(s > 1.0 && q >= 1.0);
    let start = q + direct as f64;

    // smallest terms first
    let mut head = 0.0;
    for j in (0..direct).rev() {
        head += (q + j as f64).powf(-s);
    }

    let ln_n = start.ln();
    let integral = (-(s - 1.0) * ln_n).exp() / (s - 1.0);
    let n_pow_s = (-s * ln_n).exp();
    let mut tail = integral + 0.5 * n_pow_s;

    // term_i = B_{2i}/(2i)! * s(s+1)...(s+2i-2) * N^(-s-2i+1)
    let inv_n2 = 1.0 / (start * start);
    let mut poch = s; // (s)_{2i-1}
    let mut fact = 2.0; // (2i)!
    let mut power = n_pow_s / start; // N^(-s-2i+1)
    let mut remainder = 0.0;
    for (idx, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * poch * power;
        if idx == CORRECTION_TERMS {
            remainder = term.abs();
            break;
        }
        tail += term;
        let m = 2.0 * (idx as f64 + 1.0);
        poch *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        power *= inv_n2;
    }

    let value = head + tail;
    let rounding = (direct as f64 + 2.0 * CORRECTION_TERMS as f64 + 8.0) * f64::EPSILON * value;
    TailSum {
        value,
        error_bound: remainder + rounding,
    }
}

/// Tail sum with enough direct terms that the truncation remainder is
/// negligible for any `q >= 1`.
pub fn hurwitz(s: f64, q: f64) -> TailSum {
    let direct = if q >= 12.0 { 0 } else { (12.0 - q.floor()) as usize };
    hurwitz_tail(s, q, direct)
}
