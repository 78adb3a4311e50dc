//! Bridges: the diffeomorphism `φ_{a',b'}^{-1} ∘ φ_{a,b}` between two
//! intervals, built from the cotangent chart
//! `φ_{a,b}(x) = -cot(π (x - a)/(b - a)) / (b - a)`.
//!
//! In normalized coordinates `t = (x - a)/|I|`, `t' = (y - a')/|J|` the
//! bridge solves `cot(π t') = r cot(π t)` with `r = |J|/|I|`. Evaluating it
//! as `t' = atan2(sin πt, r cos πt)/π` on the half nearer an endpoint never
//! forms the divergent chart values, so no series crossover is required.
//! The map is odd about the midpoint, `t'(1 - t) = 1 - t'(t)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Modulus of continuity for the derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Modulus {
    /// `ω(s) = s^α`.
    PowerAlpha(f64),
}

impl Modulus {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Modulus::PowerAlpha(alpha) => {
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(alpha)
                }
            }
        }
    }
}

/// `φ_{a,b}(x)` for `a < x < b`.
pub fn phi(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a < b) {
        return Err(LabError::domain(format!("degenerate chart interval [{a}, {b}]")));
    }
    if !(x > a && x < b) {
        return Err(LabError::domain(format!("x = {x} not in ]{a}, {b}[")));
    }
    let len = b - a;
    let dl = x - a;
    let dr = b - x;
    // cot(π t) = -cot(π (1 - t)); use the smaller of the two distances
    let cot = if dl <= dr {
        1.0 / (PI * dl / len).tan()
    } else {
        -1.0 / (PI * dr / len).tan()
    };
    Ok(-cot / len)
}

/// Inverse chart on the principal branch: `arccot` with range `]0, π[`.
pub fn phi_inv(a: f64, b: f64, y: f64) -> f64 {
    let len = b - a;
    let z = -len * y; // cot(π t) = z
    if z >= 0.0 {
        // t in ]0, 1/2]
        let t = (1.0f64).atan2(z) / PI;
        a + t * len
    } else {
        // measure from the right end: cot(π (1 - t)) = -z
        let t_bar = (1.0f64).atan2(-z) / PI;
        b - t_bar * len
    }
}

/// `t'` for `t ∈ [0, 1/2]`.
#[inline]
pub(crate) fn unit_half(t: f64, r: f64) -> f64 {
    let sin = (PI * t).sin();
    let cos = (PI * (0.5 - t)).sin();
    sin.atan2(r * cos) / PI
}

/// Global derivative `r^2 sin^2(π t') / sin^2(π t)` given `t` on the near
/// half and `t' = unit_half(t, r)`; exactly `1` at `t = 0`.
#[inline]
pub(crate) fn unit_half_deriv(t: f64, tp: f64, r: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let q = r * (PI * tp).sin() / (PI * t).sin();
    q * q
}

/// The bridge from the near endpoint: given the distance fraction `t ∈
/// [0, 1/2]`, returns `(t', derivative)`.
#[inline]
pub(crate) fn unit_half_with_deriv(t: f64, r: f64) -> (f64, f64) {
    let tp = unit_half(t, r);
    (tp, unit_half_deriv(t, tp, r))
}

/// The bridge diffeomorphism `I = [a, b] → J = [a', b']`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    source: (f64, f64),
    target: (f64, f64),
    source_len: f64,
    target_len: f64,
    ratio: f64,
}

impl Bridge {
    pub fn new(source: (f64, f64), target: (f64, f64)) -> Result<Self> {
        if !(source.0 < source.1) || !(target.0 < target.1) {
            return Err(LabError::domain(format!(
                "bridge needs nondegenerate intervals, got {source:?} -> {target:?}"
            )));
        }
        let source_len = source.1 - source.0;
        let target_len = target.1 - target.0;
        Ok(Bridge {
            source,
            target,
            source_len,
            target_len,
            ratio: target_len / source_len,
        })
    }

    pub fn source(&self) -> (f64, f64) {
        self.source
    }

    pub fn target(&self) -> (f64, f64) {
        self.target
    }

    /// `|J| / |I|`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// The bridge `J → I`, which is the inverse map.
    pub fn inverse(&self) -> Bridge {
        Bridge {
            source: self.target,
            target: self.source,
            source_len: self.target_len,
            target_len: self.source_len,
            ratio: self.source_len / self.target_len,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if x >= self.source.0 && x <= self.source.1 {
            Ok(())
        } else {
            Err(LabError::domain(format!(
                "x = {x} outside bridge source [{}, {}]",
                self.source.0, self.source.1
            )))
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let dl = x - self.source.0;
        let dr = self.source.1 - x;
        Ok(if dl <= dr {
            let tp = unit_half(dl / self.source_len, self.ratio);
            self.target.0 + tp * self.target_len
        } else {
            let tp = unit_half(dr / self.source_len, self.ratio);
            self.target.1 - tp * self.target_len
        })
    }

    /// `φ'_{a,b}(x) / φ'_{a',b'}(y)`; exactly 1 at both endpoints.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let dl = x - self.source.0;
        let dr = self.source.1 - x;
        let t = dl.min(dr) / self.source_len;
        Ok(unit_half_with_deriv(t, self.ratio).1)
    }
}

/// Outcome of checking the smoothing hypotheses for one pair `I → J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCertificate {
    pub m: f64,
    /// `1/2 <= |I|/|J| <= 2`.
    pub ratio_ok: bool,
    /// `||J|/|I| - 1| / ω(|I|)`.
    pub bound_value: f64,
    pub bound_ok: bool,
    /// `6πM`, the bound on the ω-seminorm of the bridge derivative.
    pub norm_bound: f64,
}

impl LemmaCertificate {
    pub fn passes(&self) -> bool {
        self.ratio_ok && self.bound_ok
    }
}

/// The smallest `M` for which the pair satisfies the bound hypothesis.
pub fn lemma_constant(source_len: f64, target_len: f64, modulus: &Modulus) -> f64 {
    (target_len / source_len - 1.0).abs() / modulus.eval(source_len)
}

pub fn check_lemma_hypothesis(
    source_len: f64,
    target_len: f64,
    modulus: &Modulus,
    m: f64,
) -> LemmaCertificate {
    let ratio = source_len / target_len;
    let bound_value = lemma_constant(source_len, target_len, modulus);
    LemmaCertificate {
        m,
        ratio_ok: (0.5..=2.0).contains(&ratio),
        bound_value,
        bound_ok: bound_value <= m,
        norm_bound: 6.0 * PI * m,
    }
}

/// Sampling plan for empirical seminorms: scales `L 2^-j` for
/// `j_min <= j <= j_max` relative to a reference length `L`, with
/// `samples_per_scale` seeded random pairs at each scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub j_min: i32,
    pub j_max: i32,
    pub samples_per_scale: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.j_min > self.j_max || self.samples_per_scale == 0 {
            return Err(LabError::parameter(format!(
                "empty grid: j in {}..={}, {} samples per scale",
                self.j_min, self.j_max, self.samples_per_scale
            )));
        }
        if self.j_max - self.j_min > 200 {
            return Err(LabError::parameter("grid spans more than 200 octaves"));
        }
        Ok(())
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            j_min: 0,
            j_max: 20,
            samples_per_scale: 64,
            seed: 42,
        }
    }
}

/// Seeded stream for one `(scale, stream)` cell; refining a grid by adding
/// scales or samples only appends pairs, so the maximum never decreases.
pub(crate) fn cell_rng(seed: u64, scale: i32, stream: u64) -> ChaCha8Rng {
    let mut key = seed ^ 0x9e37_79b9_7f4a_7c15;
    key = key.wrapping_mul(0xbf58_476d_1ce4_e5b9) ^ (scale as i64 as u64);
    key = key.wrapping_mul(0x94d0_49bb_1331_11eb) ^ stream;
    ChaCha8Rng::seed_from_u64(key)
}

/// `max |D(x) - D(y)| / ω(|x - y|)` over sampled pairs in `[a, b]`.
///
/// At each scale `h = (b - a) 2^-j` the pairs are `(x, x + h)` with `x`
/// drawn uniformly from `[a, b - h]`, plus three anchored pairs: at the left
/// end, at the right end and centred on the midpoint. Scales with `h > b - a`
/// are skipped.
pub fn empirical_omega_norm<D>(
    derivative: D,
    interval: (f64, f64),
    modulus: &Modulus,
    grid: &GridSpec,
) -> Result<f64>
where
    D: Fn(f64) -> f64 + Sync,
{
    grid.validate()?;
    let (a, b) = interval;
    if !(a < b) {
        return Err(LabError::parameter(format!("degenerate interval [{a}, {b}]")));
    }
    let len = b - a;
    let scales: Vec<i32> = grid.scales().filter(|&j| j >= 0).collect();
    let best = scales
        .par_iter()
        .map(|&j| {
            let h = len * 2f64.powi(-j);
            let w = modulus.eval(h);
            let quotient = |x: f64| {
                let x = x.max(a);
                let y = (x + h).min(b);
                let q = (derivative(x) - derivative(y)).abs() / w;
                if q.is_finite() {
                    q
                } else {
                    0.0
                }
            };
            let mut best = quotient(a).max(quotient(b - h)).max(quotient(a + 0.5 * (len - h)));
            let mut rng = cell_rng(grid.seed, j, 0);
            for _ in 0..grid.samples_per_scale {
                let x = a + rng.random::<f64>() * (len - h);
                best = best.max(quotient(x));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
