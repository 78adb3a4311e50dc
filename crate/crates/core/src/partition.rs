//! Interval combinatorics: fundamental intervals `[a_{n+1}, a_n]`, the
//! marked intervals `[b_k, c_k] ⊃ [u_k, v_k]`, the chains carried by `f`
//! from level `k + 1` up to level `k`, and the scaling constants `λ_k`.
//!
//! Geometry inside a fundamental interval is stored as offsets in `[0, 1]`
//! relative to that interval, never as absolute coordinates: the interval
//! lengths decay polynomially and absolute coordinates near the deep end
//! would lose most of their significant digits.
//!
//! Index convention: the chain interval `(k, i)` lives in the fundamental
//! interval `n = n_{k+1} - i`, so that `(k, 0)` is `[u_{k+1}, v_{k+1}]`
//! inside `[a_{n_{k+1}+1}, a_{n_{k+1}}]` and `(k, n_{k+1} - n_k)` is exactly
//! `[b_k, c_k]`. Some of the published figures label the same intervals
//! shifted by one; the convention here is the one compatible with the
//! centre alignment and with the chain ending on `[b_k, c_k]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::zeta;

/// Largest supported level for the `n_k = 2^k` schedule (2^22 fundamental
/// intervals are materialized at that depth).
pub const MAX_K_POWERS_OF_TWO: u32 = 21;
pub const MAX_K_LINEAR: u32 = 100_000;

/// Only IEEE binary64 is implemented.
pub const SUPPORTED_PRECISION_BITS: u32 = 53;

/// Which sequence `n_k` places the levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Schedule {
    /// `n_k = 2^k`.
    #[serde(rename = "pow2")]
    PowersOfTwo,
    /// `n_k = k` (Hector's choice).
    #[serde(rename = "linear")]
    Linear,
}

impl Schedule {
    /// `n_k`, the fundamental interval holding level `k`.
    pub fn level_index(self, k: u32) -> i64 {
        match self {
            Schedule::PowersOfTwo => 1i64 << k,
            Schedule::Linear => k as i64,
        }
    }

    /// `n_{k+1} - n_k`, the number of `f`-steps from level `k + 1` to level `k`.
    pub fn chain_steps(self, k: u32) -> u64 {
        (self.level_index(k + 1) - self.level_index(k)) as u64
    }

    /// Inverse of [`Schedule::level_index`].
    pub fn level_of_index(self, n: i64) -> Option<u32> {
        if n < 1 {
            return None;
        }
        match self {
            Schedule::PowersOfTwo => {
                if (n as u64).is_power_of_two() && n >= 2 {
                    Some(n.trailing_zeros())
                } else {
                    None
                }
            }
            Schedule::Linear => u32::try_from(n).ok(),
        }
    }

    /// Level `k` whose chain occupies fundamental interval `n`, i.e.
    /// `n_k < n <= n_{k+1}`, ignoring truncation.
    pub fn chain_level_of_index(self, n: i64) -> Option<u32> {
        if n < 2 {
            return None;
        }
        match self {
            Schedule::PowersOfTwo => {
                // n in (2^k, 2^{k+1}]  <=>  k = ceil(log2 n) - 1
                let m = (n - 1) as u64;
                let k = 63 - m.leading_zeros();
                if k == 0 {
                    None
                } else {
                    Some(k)
                }
            }
            Schedule::Linear => u32::try_from(n - 1).ok(),
        }
    }

    fn max_k(self) -> u32 {
        match self {
            Schedule::PowersOfTwo => MAX_K_POWERS_OF_TWO,
            Schedule::Linear => MAX_K_LINEAR,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::PowersOfTwo => f.write_str("pow2"),
            Schedule::Linear => f.write_str("linear"),
        }
    }
}

impl FromStr for Schedule {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pow2" | "powers-of-two" | "powers_of_two" => Ok(Schedule::PowersOfTwo),
            "linear" | "hector" => Ok(Schedule::Linear),
            other => Err(LabError::parameter(format!(
                "unknown schedule `{other}` (expected pow2 or linear)"
            ))),
        }
    }
}

/// Construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Target Hölder exponent of the derivatives.
    pub alpha: f64,
    /// Tail exponent perturbation: `|[a_{n+1}, a_n]| ∝ (1 + |n|)^-(1+ε)`.
    pub epsilon: f64,
    /// Marked-interval shrink exponent: `|[u_k, v_k]| = |[b_k, c_k]|^(1+θ)`.
    pub theta: f64,
    pub k_max: u32,
    pub n_neg: u32,
    pub schedule: Schedule,
    pub precision_bits: u32,
    pub tol: f64,
}

impl Params {
    pub fn new(
        alpha: f64,
        epsilon: f64,
        theta: f64,
        k_max: u32,
        n_neg: u32,
        schedule: Schedule,
    ) -> Result<Self> {
        let params = Params {
            alpha,
            epsilon,
            theta,
            k_max,
            n_neg,
            schedule,
            precision_bits: SUPPORTED_PRECISION_BITS,
            tol: 1e-12,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters with `θ = α + ε` and `ε` from
    /// [`default_theta_epsilon`](crate::regularity::default_theta_epsilon).
    pub fn for_alpha(alpha: f64, k_max: u32, schedule: Schedule) -> Result<Self> {
        let (theta, epsilon) = crate::regularity::default_theta_epsilon(alpha)?;
        Params::new(alpha, epsilon, theta, k_max, 32, schedule)
    }

    pub fn with_k_max(mut self, k_max: u32) -> Result<Self> {
        self.k_max = k_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(LabError::parameter(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("epsilon", self.epsilon)?;
        positive("theta", self.theta)?;
        positive("tol", self.tol)?;
        if self.alpha >= 1.0 {
            return Err(LabError::parameter(format!("alpha must be < 1, got {}", self.alpha)));
        }
        if self.k_max < 1 {
            return Err(LabError::parameter("k_max must be >= 1"));
        }
        if self.k_max > self.schedule.max_k() {
            return Err(LabError::range(format!(
                "k_max = {} exceeds the supported depth {} for schedule {}",
                self.k_max,
                self.schedule.max_k(),
                self.schedule
            )));
        }
        if self.n_neg < 1 {
            return Err(LabError::parameter("n_neg must be >= 1"));
        }
        if self.precision_bits != SUPPORTED_PRECISION_BITS {
            return Err(LabError::parameter(format!(
                "precision_bits = {} is not supported; only {} (binary64) is implemented",
                self.precision_bits, SUPPORTED_PRECISION_BITS
            )));
        }
        Ok(())
    }
}

/// Normalization constant together with its certified error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub c_eps: f64,
    /// Bound on `|c_eps * sum_n (1+|n|)^-(1+ε) - 1|`.
    pub residual_bound: f64,
}

/// `c_ε` such that `c_ε * sum_{n ∈ Z} (1 + |n|)^-(1+ε) = 1`.
pub fn normalization_constant(epsilon: f64, tol: f64) -> Result<f64> {
    normalization(epsilon, tol).map(|n| n.c_eps)
}

pub fn normalization(epsilon: f64, tol: f64) -> Result<Normalization> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(LabError::parameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(LabError::parameter(format!("tol must be > 0, got {tol}")));
    }
    let s = 1.0 + epsilon;
    let mut last = f64::INFINITY;
    for direct in [11usize, 100, 1000] {
        let z = zeta::hurwitz_tail(s, 1.0, direct);
        // sum over Z = 2 zeta(s) - 1
        let total = 2.0 * z.value - 1.0;
        let c_eps = 1.0 / total;
        let residual = c_eps * (2.0 * z.error_bound) + 2.0 * f64::EPSILON;
        if residual <= tol {
            return Ok(Normalization {
                c_eps,
                residual_bound: residual,
            });
        }
        last = residual;
    }
    Err(LabError::parameter(format!(
        "cannot certify c_eps to tol = {tol:e} (best bound {last:e})"
    )))
}

/// The closed-form length laws, independent of truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthLaw {
    pub c_eps: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub schedule: Schedule,
}

impl LengthLaw {
    pub fn new(params: &Params) -> Result<Self> {
        params.validate()?;
        Ok(LengthLaw {
            c_eps: normalization_constant(params.epsilon, params.tol)?,
            epsilon: params.epsilon,
            theta: params.theta,
            schedule: params.schedule,
        })
    }

    /// `|[a_{n+1}, a_n]| = c_ε / (1 + |n|)^(1+ε)`.
    pub fn interval_length(&self, n: i64) -> f64 {
        let base = 1.0 + n.unsigned_abs() as f64;
        self.c_eps * base.powf(-(1.0 + self.epsilon))
    }

    /// `|[b_k, c_k]|`, half of the fundamental interval holding level `k`.
    pub fn bc_length(&self, k: u32) -> Result<f64> {
        check_level(k)?;
        Ok(0.5 * self.interval_length(self.schedule.level_index(k)))
    }

    /// `|[u_k, v_k]| = |[b_k, c_k]|^(1+θ)`.
    pub fn uv_length(&self, k: u32) -> Result<f64> {
        let bc = self.bc_length(k)?;
        let uv = bc.powf(1.0 + self.theta);
        if !(uv >= f64::MIN_POSITIVE) {
            return Err(LabError::range(format!(
                "|[u_{k}, v_{k}]| = |[b_{k}, c_{k}]|^(1+θ) underflows (θ = {})",
                self.theta
            )));
        }
        Ok(uv)
    }

    /// `ln λ_k` with `λ_k^(n_{k+1}-n_k) = |[b_k, c_k]| / |[u_{k+1}, v_{k+1}]|`.
    ///
    /// Dividing the logarithm by a power of two is exact, so
    /// `exp(2^k ln λ_k)` recovers the ratio to a couple of ulps.
    pub fn ln_lambda(&self, k: u32) -> Result<f64> {
        let ratio = self.bc_length(k)? / self.uv_length(k + 1)?;
        if !(ratio > 1.0) {
            return Err(LabError::Inconsistent(format!(
                "|[b_{k},c_{k}]| / |[u_{},v_{}]| = {ratio} is not > 1",
                k + 1,
                k + 1
            )));
        }
        Ok(ratio.ln() / self.schedule.chain_steps(k) as f64)
    }

    pub fn lambda(&self, k: u32) -> Result<f64> {
        self.ln_lambda(k).map(f64::exp)
    }

    /// `λ_k^i`, evaluated as `exp(i ln λ_k)`.
    pub fn lambda_power(&self, k: u32, i: u64) -> Result<f64> {
        Ok((i as f64 * self.ln_lambda(k)?).exp())
    }

    /// `|[u_{k+1}^i, v_{k+1}^i]| = λ_k^i |[u_{k+1}, v_{k+1}]|`; the last
    /// element of the chain is `|[b_k, c_k]|` by construction.
    pub fn chain_length(&self, k: u32, i: u64) -> Result<f64> {
        let steps = self.schedule.chain_steps(k);
        if i > steps {
            return Err(LabError::range(format!("chain index {i} > {steps} at level {k}")));
        }
        if i == 0 {
            self.uv_length(k + 1)
        } else if i == steps {
            self.bc_length(k)
        } else {
            Ok(self.lambda_power(k, i)? * self.uv_length(k + 1)?)
        }
    }

    /// `sum_{m >= n} |[a_{m+1}, a_m]|`, i.e. `a_n`, with its error bound.
    pub fn tail_mass(&self, n: i64) -> (f64, f64) {
        let s = 1.0 + self.epsilon;
        if n >= 0 {
            let z = zeta::hurwitz(s, n as f64 + 1.0);
            (self.c_eps * z.value, self.c_eps * z.error_bound)
        } else {
            // 1 - sum_{m < n} = 1 - c * zeta(s, |n| + 2)
            let z = zeta::hurwitz(s, n.unsigned_abs() as f64 + 2.0);
            (1.0 - self.c_eps * z.value, self.c_eps * z.error_bound + f64::EPSILON)
        }
    }

    /// Integral upper bound for `a_n`, `n >= 0`.
    pub fn tail_mass_upper_bound(&self, n: i64) -> f64 {
        let x = 1.0 + n.max(0) as f64;
        self.c_eps * (x.powf(-(1.0 + self.epsilon)) + x.powf(-self.epsilon) / self.epsilon)
    }
}

fn check_level(k: u32) -> Result<()> {
    if k == 0 {
        Err(LabError::range("levels start at k = 1"))
    } else {
        Ok(())
    }
}

/// A point of `[0, 1]` in local coordinates: fundamental interval `n` and
/// offset `s` measured from its left end `a_{n+1}` in units of its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalPoint {
    Zero,
    One,
    Interior { n: i64, s: f64 },
}

impl LocalPoint {
    pub fn interior(n: i64, s: f64) -> Self {
        LocalPoint::Interior { n, s }
    }

    pub fn interval(&self) -> Option<i64> {
        match *self {
            LocalPoint::Interior { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn offset(&self) -> Option<f64> {
        match *self {
            LocalPoint::Interior { s, .. } => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for LocalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalPoint::Zero => f.write_str("0"),
            LocalPoint::One => f.write_str("1"),
            LocalPoint::Interior { n, s } => write!(f, "(n={n}, s={s})"),
        }
    }
}

/// Level `k` geometry inside its fundamental interval `n_k`, as offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub k: u32,
    pub n: i64,
    pub bc_length: f64,
    pub uv_length: f64,
    pub b: f64,
    pub c: f64,
    pub u: f64,
    pub v: f64,
}

/// `[u_{k+1}^i, v_{k+1}^i]` as offsets inside fundamental interval `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainInterval {
    pub k: u32,
    pub i: u64,
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
    pub length: f64,
}

impl ChainInterval {
    pub fn endpoints(&self) -> (LocalPoint, LocalPoint) {
        (LocalPoint::interior(self.n, self.lo), LocalPoint::interior(self.n, self.hi))
    }

    pub fn contains_open(&self, p: &LocalPoint) -> bool {
        matches!(*p, LocalPoint::Interior { n, s } if n == self.n && s > self.lo && s < self.hi)
    }
}

/// The truncated partition: fundamental intervals `n_min..=n_max`, levels
/// `1..=k_max` and chains for levels `1..k_max`.
#[derive(Debug, Clone)]
pub struct PartitionModel {
    params: Params,
    law: LengthLaw,
    normalization: Normalization,
    n_min: i64,
    n_max: i64,
    /// `a_n` for `n_min ..= n_max + 1`.
    a: Vec<f64>,
    /// `a_n` error bounds, same indexing.
    a_err: Vec<f64>,
    /// `ℓ_n` for `n_min ..= n_max`.
    ell: Vec<f64>,
    levels: Vec<Level>,
    chains: Vec<Vec<ChainInterval>>,
}

impl PartitionModel {
    pub fn build(params: &Params) -> Result<Self> {
        params.validate()?;
        let normalization = normalization(params.epsilon, params.tol)?;
        let law = LengthLaw {
            c_eps: normalization.c_eps,
            epsilon: params.epsilon,
            theta: params.theta,
            schedule: params.schedule,
        };
        let schedule = params.schedule;
        let n_min = -(params.n_neg as i64);
        let n_max = schedule.level_index(params.k_max + 1) + 1;

        let ell: Vec<f64> = (n_min..=n_max).map(|n| law.interval_length(n)).collect();
        let (a, a_err): (Vec<f64>, Vec<f64>) =
            (n_min..=n_max + 1).map(|n| law.tail_mass(n)).unzip();
        for w in a.windows(2) {
            if !(w[1] < w[0]) {
                return Err(LabError::Inconsistent(
                    "fundamental interval endpoints are not strictly decreasing".into(),
                ));
            }
        }

        let mut levels = Vec::with_capacity(params.k_max as usize);
        for k in 1..=params.k_max {
            let n = schedule.level_index(k);
            let ell_n = ell[(n - n_min) as usize];
            let bc_length = law.bc_length(k)?;
            let uv_length = law.uv_length(k)?;
            let half = uv_length / (2.0 * ell_n);
            let level = Level {
                k,
                n,
                bc_length,
                uv_length,
                b: 0.5 - bc_length / (2.0 * ell_n),
                c: 0.5 + bc_length / (2.0 * ell_n),
                u: 0.5 - half,
                v: 0.5 + half,
            };
            if !(0.0 < level.b && level.b < level.u && level.u < level.v && level.v < level.c && level.c < 1.0)
            {
                return Err(LabError::range(format!(
                    "level {k}: b < u < v < c is not representable (|[u,v]| = {uv_length:e} inside |[b,c]| = {bc_length:e}); θ too large for this depth"
                )));
            }
            levels.push(level);
        }

        let mut chains = Vec::with_capacity(params.k_max.saturating_sub(1) as usize);
        for k in 1..params.k_max {
            let steps = schedule.chain_steps(k);
            let top = schedule.level_index(k + 1);
            let mut chain = Vec::with_capacity(steps as usize + 1);
            for i in 0..=steps {
                let n = top - i as i64;
                let (lo, hi, length) = if i == 0 {
                    let l = &levels[k as usize];
                    (l.u, l.v, l.uv_length)
                } else if i == steps {
                    let l = &levels[k as usize - 1];
                    (l.b, l.c, l.bc_length)
                } else {
                    let length = law.chain_length(k, i)?;
                    let half = length / (2.0 * ell[(n - n_min) as usize]);
                    (0.5 - half, 0.5 + half, length)
                };
                if !(0.0 < lo && lo < hi && hi < 1.0) {
                    return Err(LabError::Inconsistent(format!(
                        "chain interval ({k}, {i}) of length {length:e} does not fit strictly inside fundamental interval {n}"
                    )));
                }
                chain.push(ChainInterval { k, i, n, lo, hi, length });
            }
            chains.push(chain);
        }

        Ok(PartitionModel {
            params: *params,
            law,
            normalization,
            n_min,
            n_max,
            a,
            a_err,
            ell,
            levels,
            chains,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn law(&self) -> &LengthLaw {
        &self.law
    }

    pub fn schedule(&self) -> Schedule {
        self.params.schedule
    }

    pub fn k_max(&self) -> u32 {
        self.params.k_max
    }

    pub fn c_eps(&self) -> f64 {
        self.normalization.c_eps
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Materialized fundamental intervals, inclusive.
    pub fn n_range(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn is_materialized(&self, n: i64) -> bool {
        n >= self.n_min && n <= self.n_max
    }

    fn check_n(&self, n: i64) -> Result<usize> {
        if self.is_materialized(n) {
            Ok((n - self.n_min) as usize)
        } else {
            Err(LabError::range(format!(
                "fundamental interval {n} is outside the materialized range [{}, {}]",
                self.n_min, self.n_max
            )))
        }
    }

    pub fn interval_length(&self, n: i64) -> Result<f64> {
        Ok(self.ell[self.check_n(n)?])
    }

    /// `a_n` for `n` in `n_min ..= n_max + 1`.
    pub fn a_position(&self, n: i64) -> Result<f64> {
        self.a_with_error(n).map(|(a, _)| a)
    }

    pub fn a_with_error(&self, n: i64) -> Result<(f64, f64)> {
        if n < self.n_min || n > self.n_max + 1 {
            return Err(LabError::range(format!(
                "a_{n} is outside the stored range [{}, {}]",
                self.n_min,
                self.n_max + 1
            )));
        }
        let idx = (n - self.n_min) as usize;
        Ok((self.a[idx], self.a_err[idx]))
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: u32) -> Result<&Level> {
        if k == 0 || k > self.params.k_max {
            return Err(LabError::range(format!(
                "level {k} outside 1..={}",
                self.params.k_max
            )));
        }
        Ok(&self.levels[k as usize - 1])
    }

    pub fn bc_length(&self, k: u32) -> Result<f64> {
        self.level(k).map(|l| l.bc_length)
    }

    pub fn uv_length(&self, k: u32) -> Result<f64> {
        self.level(k).map(|l| l.uv_length)
    }

    pub fn lambda(&self, k: u32) -> Result<f64> {
        self.check_chain_level(k)?;
        self.law.lambda(k)
    }

    pub fn ln_lambda(&self, k: u32) -> Result<f64> {
        self.check_chain_level(k)?;
        self.law.ln_lambda(k)
    }

    fn check_chain_level(&self, k: u32) -> Result<()> {
        if k == 0 || k >= self.params.k_max {
            Err(LabError::range(format!(
                "chain level {k} outside 1..{} (needs k + 1 <= k_max)",
                self.params.k_max
            )))
        } else {
            Ok(())
        }
    }

    pub fn chain(&self, k: u32) -> Result<&[ChainInterval]> {
        self.check_chain_level(k)?;
        Ok(&self.chains[k as usize - 1])
    }

    /// `[u_{k+1}^i, v_{k+1}^i]`.
    pub fn chain_interval(&self, k: u32, i: u64) -> Result<&ChainInterval> {
        let chain = self.chain(k)?;
        chain.get(i as usize).ok_or_else(|| {
            LabError::range(format!("chain index {i} > {} at level {k}", chain.len() - 1))
        })
    }

    /// `(k, i)` of the chain piece that owns fundamental interval `n` as a
    /// source of `f`, if any.
    pub fn owner(&self, n: i64) -> Option<(u32, u64)> {
        let k = self.params.schedule.chain_level_of_index(n)?;
        if k >= self.params.k_max || !self.is_materialized(n) {
            return None;
        }
        Some((k, (self.params.schedule.level_index(k + 1) - n) as u64))
    }

    /// Level `k` with `n_k = n`, if materialized.
    pub fn level_at(&self, n: i64) -> Option<u32> {
        self.params
            .schedule
            .level_of_index(n)
            .filter(|&k| k >= 1 && k <= self.params.k_max)
    }

    pub fn point_a(&self, n: i64) -> Result<LocalPoint> {
        if n == self.n_max + 1 {
            return Ok(LocalPoint::interior(self.n_max, 0.0));
        }
        self.check_n(n - 1)?;
        Ok(LocalPoint::interior(n - 1, 0.0))
    }

    pub fn point_b(&self, k: u32) -> Result<LocalPoint> {
        self.level(k).map(|l| LocalPoint::interior(l.n, l.b))
    }

    pub fn point_c(&self, k: u32) -> Result<LocalPoint> {
        self.level(k).map(|l| LocalPoint::interior(l.n, l.c))
    }

    pub fn point_u(&self, k: u32) -> Result<LocalPoint> {
        self.level(k).map(|l| LocalPoint::interior(l.n, l.u))
    }

    pub fn point_v(&self, k: u32) -> Result<LocalPoint> {
        self.level(k).map(|l| LocalPoint::interior(l.n, l.v))
    }

    /// Global coordinate `a_{n+1} + s ℓ_n`.
    pub fn global(&self, p: &LocalPoint) -> Result<f64> {
        match *p {
            LocalPoint::Zero => Ok(0.0),
            LocalPoint::One => Ok(1.0),
            LocalPoint::Interior { n, s } => {
                let idx = self.check_n(n)?;
                Ok(self.a[idx + 1] + s * self.ell[idx])
            }
        }
    }

    /// Local coordinates of a global point in the materialized range.
    pub fn local(&self, x: f64) -> Result<LocalPoint> {
        if x == 0.0 {
            return Ok(LocalPoint::Zero);
        }
        if x == 1.0 {
            return Ok(LocalPoint::One);
        }
        let left = *self.a.last().expect("nonempty");
        let right = self.a[0];
        if !(x >= left && x <= right) {
            return Err(LabError::range(format!(
                "x = {x} outside the materialized range [{left}, {right}]"
            )));
        }
        if x == right {
            return Ok(LocalPoint::interior(self.n_min, 1.0));
        }
        // a is decreasing; find the first index j with a[j] <= x, then n = n_min + j - 1
        let j = self.a.partition_point(|&a| a > x);
        let idx = j - 1;
        let n = self.n_min + idx as i64;
        let s = ((x - self.a[idx + 1]) / self.ell[idx]).clamp(0.0, 1.0);
        let s = if s >= 1.0 { 1.0 - f64::EPSILON / 2.0 } else { s };
        Ok(LocalPoint::interior(n, s))
    }

    /// Rewrites `(n, 1)` as `(n - 1, 0)` where that interval exists.
    pub fn canonical(&self, n: i64, s: f64) -> LocalPoint {
        if s >= 1.0 && n > self.n_min {
            LocalPoint::interior(n - 1, 0.0)
        } else {
            LocalPoint::interior(n, s)
        }
    }

    /// Serializable summary used by the `table` command.
    pub fn document(&self) -> PartitionDocument {
        let intervals = (self.n_min..=self.n_max)
            .map(|n| {
                let idx = (n - self.n_min) as usize;
                IntervalRow {
                    n,
                    a_n: self.a[idx],
                    ell_n: self.ell[idx],
                }
            })
            .collect();
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let g = |s: f64| self.global(&LocalPoint::interior(l.n, s)).unwrap_or(f64::NAN);
                LevelRow {
                    k: l.k,
                    n_k: l.n,
                    b: g(l.b),
                    c: g(l.c),
                    u: g(l.u),
                    v: g(l.v),
                    bc_length: l.bc_length,
                    uv_length: l.uv_length,
                    lambda: self.lambda(l.k).ok(),
                }
            })
            .collect();
        PartitionDocument {
            params: self.params,
            c_eps: self.normalization.c_eps,
            c_eps_residual_bound: self.normalization.residual_bound,
            a_left_end: *self.a.last().expect("nonempty"),
            intervals,
            levels,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalRow {
    pub n: i64,
    pub a_n: f64,
    pub ell_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub k: u32,
    pub n_k: i64,
    pub b: f64,
    pub c: f64,
    pub u: f64,
    pub v: f64,
    pub bc_length: f64,
    pub uv_length: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionDocument {
    pub params: Params,
    pub c_eps: f64,
    pub c_eps_residual_bound: f64,
    /// `a_{n_max+1}`, the left end of the materialized range.
    pub a_left_end: f64,
    pub intervals: Vec<IntervalRow>,
    pub levels: Vec<LevelRow>,
}
