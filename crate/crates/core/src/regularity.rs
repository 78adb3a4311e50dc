//! Parameter conditions, the growth bounds on `λ_k`, the per-piece
//! estimate quantities, and empirical Hölder seminorms of `f'` and `g'`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bridge::{cell_rng, check_lemma_hypothesis, GridSpec, Modulus};
use crate::error::{LabError, Result};
use crate::generators::{build_f, build_g, IntervalAction, MapKind, Piece, PieceKind, PiecewiseDiffeo};
use crate::output::{fmt_float, Csv};
use crate::partition::{Params, PartitionModel, Schedule};

/// `(√5 − 1)/2`: the parameter conditions admit some `ε > 0` exactly for
/// `α` below this value.
pub const GOLDEN_THRESHOLD: f64 = 0.618_033_988_749_894_8;

/// Largest `j` tried in the grid `ε = 2^-j`.
const EPSILON_GRID_DEPTH: i32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterCheck {
    pub alpha: f64,
    pub theta: f64,
    pub epsilon: f64,
    /// `(1 + ε)(1 + θ)α`, required `< 1`.
    pub product: f64,
    pub product_ok: bool,
    /// `1/(1 + ε)`, required `> α`.
    pub inverse_tail: f64,
    pub inverse_tail_ok: bool,
    /// `θ > α`.
    pub theta_ok: bool,
    pub pass: bool,
}

/// The three conditions on `(α, θ, ε)`. Nonpositive inputs fail every
/// condition they enter.
pub fn check_parameters(alpha: f64, theta: f64, epsilon: f64) -> ParameterCheck {
    let positive = alpha > 0.0 && theta > 0.0 && epsilon > 0.0;
    let product = (1.0 + epsilon) * (1.0 + theta) * alpha;
    let inverse_tail = 1.0 / (1.0 + epsilon);
    let product_ok = positive && product < 1.0;
    let inverse_tail_ok = positive && inverse_tail > alpha;
    let theta_ok = positive && theta > alpha;
    ParameterCheck {
        alpha,
        theta,
        epsilon,
        product,
        product_ok,
        inverse_tail,
        inverse_tail_ok,
        theta_ok,
        pass: product_ok && inverse_tail_ok && theta_ok,
    }
}

/// `(θ, ε)` with `θ = α + ε` and `ε` the largest power `2^-j`, `j >= 0`,
/// that passes [`check_parameters`].
pub fn default_theta_epsilon(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(LabError::parameter(format!("alpha must be finite and > 0, got {alpha}")));
    }
    if alpha >= GOLDEN_THRESHOLD {
        return Err(LabError::Threshold {
            alpha,
            bound: GOLDEN_THRESHOLD,
        });
    }
    (0..=EPSILON_GRID_DEPTH)
        .map(|j| 2f64.powi(-j))
        .find(|&eps| check_parameters(alpha, alpha + eps, eps).pass)
        .map(|eps| (alpha + eps, eps))
        .ok_or_else(|| {
            LabError::parameter(format!(
                "alpha = {alpha} is within 2^-{EPSILON_GRID_DEPTH} of the threshold {GOLDEN_THRESHOLD}; no grid epsilon passes"
            ))
        })
}

/// Whether some `ε > 0` with `θ = α + ε` passes the conditions.
pub fn admits_epsilon(alpha: f64) -> bool {
    default_theta_epsilon(alpha).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRow {
    pub k: u32,
    pub lambda: f64,
    /// `λ_k^(n_{k+1} - n_k)`.
    pub lambda_power: f64,
    /// `λ_k^(n_{k+1} - n_k) · 2^(-kθ(1+ε))`.
    pub power_ratio: f64,
    /// `|λ_k − 1|`.
    pub deviation: f64,
    /// `|λ_k − 1| · 2^k / k`.
    pub deviation_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaBoundsReport {
    pub schedule: Schedule,
    pub rows: Vec<LambdaRow>,
    /// Fitted constant for `λ_k^(2^k) <= M 2^(kθ(1+ε))`.
    pub sup_power_ratio: f64,
    /// Fitted constant for `|λ_k − 1| <= M k / 2^k`.
    pub sup_deviation_ratio: f64,
    /// Both ratio sequences stay within twice their early suprema.
    pub bounded: bool,
    /// `|λ_k − 1|` at the deepest `k` is below half its maximum.
    pub deviation_vanishes: bool,
}

impl LambdaBoundsReport {
    /// The schedule fails the bounds (the expected outcome for `n_k = k`).
    pub fn diverges(&self) -> bool {
        !(self.bounded && self.deviation_vanishes)
    }
}

/// `sup(second half) <= 2 sup(first half)`; true for fewer than two values.
fn stays_bounded(values: &[f64]) -> bool {
    if values.len() < 2 {
        return values.iter().all(|v| v.is_finite());
    }
    let mid = values.len().div_ceil(2);
    let head = values[..mid].iter().copied().fold(0.0, f64::max);
    let tail = values[mid..].iter().copied().fold(0.0, f64::max);
    values.iter().all(|v| v.is_finite()) && tail <= 2.0 * head
}

pub fn lambda_bounds_report(model: &PartitionModel) -> Result<LambdaBoundsReport> {
    let p = model.params();
    let rows = (1..model.k_max())
        .map(|k| {
            let ln = model.ln_lambda(k)?;
            let steps = model.schedule().chain_steps(k) as f64;
            let lambda = ln.exp();
            let lambda_power = (steps * ln).exp();
            let deviation = ln.exp_m1().abs();
            let kf = f64::from(k);
            Ok(LambdaRow {
                k,
                lambda,
                lambda_power,
                power_ratio: lambda_power * 2f64.powf(-kf * p.theta * (1.0 + p.epsilon)),
                deviation,
                deviation_ratio: deviation * 2f64.powi(k as i32) / kf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let powers: Vec<f64> = rows.iter().map(|r| r.power_ratio).collect();
    let devs: Vec<f64> = rows.iter().map(|r| r.deviation_ratio).collect();
    let max_dev = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(LambdaBoundsReport {
        schedule: model.schedule(),
        sup_power_ratio: powers.iter().copied().fold(0.0, f64::max),
        sup_deviation_ratio: devs.iter().copied().fold(0.0, f64::max),
        bounded: stays_bounded(&powers) && stays_bounded(&devs),
        deviation_vanishes: rows.len() < 2 || rows.last().is_none_or(|r| r.deviation < 0.5 * max_dev),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub k: u32,
    pub i: u64,
    /// `|λ_k − 1| (λ_k^i |[u_{k+1}, v_{k+1}]|)^-α`, for the marked piece.
    pub quantity2: f64,
    /// `(k / 2^k) 2^(k(1+ε)(1+θ)α)`.
    pub bound2: f64,
    /// `|(D − C)/(B − A) − 1| 2^α / (B − A)^α`, for the gap pieces.
    pub quantity3: f64,
    /// `k 2^(-k(1 − (1+ε)α))`.
    pub bound3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelEstimate {
    pub k: u32,
    /// `|[u_k, v_k]| / gap^(1+α)` with `gap = (|[b_k, c_k]| − |[u_k, v_k]|)/2`.
    pub quantity4: f64,
    /// `|[b_k, c_k]|^(θ−α)`.
    pub bound4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedConstants {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// A bridge whose lengths violate `1/2 <= |I|/|J| <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaException {
    pub map: MapKind,
    pub n: i64,
    pub piece: PieceKind,
    pub source_len: f64,
    pub target_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTrend {
    /// `(k, max_i quantity(k, i))`.
    pub maxima: Vec<(u32, f64)>,
    /// `(k, max(k) / max(k − 1))`.
    pub ratios: Vec<(u32, f64)>,
    /// Smallest `k0 <= 6` from which every ratio is `< 1`.
    pub decays_from: Option<u32>,
}

impl DecayTrend {
    fn from_maxima(maxima: Vec<(u32, f64)>) -> Self {
        let ratios: Vec<(u32, f64)> = maxima.windows(2).map(|w| (w[1].0, w[1].1 / w[0].1)).collect();
        let decays_from = (1..=6u32).find(|&k0| {
            let tail: Vec<_> = ratios.iter().filter(|(k, _)| *k >= k0).collect();
            !tail.is_empty() && tail.iter().all(|(_, r)| *r < 1.0)
        });
        DecayTrend {
            maxima,
            ratios,
            decays_from,
        }
    }

    /// Largest successive ratio with `k` in `ks`.
    pub fn worst_ratio(&self, ks: std::ops::RangeInclusive<u32>) -> Option<f64> {
        self.ratios
            .iter()
            .filter(|(k, _)| ks.contains(k))
            .map(|&(_, r)| r)
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateFlags {
    pub parameters_pass: bool,
    /// `(1+ε)(1+θ)α − 1 < 0`.
    pub bound2_decays: bool,
    /// `1 − (1+ε)α > 0`.
    pub bound3_decays: bool,
    /// `θ − α > 0`.
    pub bound4_decays: bool,
    pub quantity2_decays: bool,
    pub quantity3_decays: bool,
    /// `quantity4` at the deepest level is below its first value.
    pub quantity4_decreases: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub schedule: Schedule,
    #[serde(skip)]
    pub records: Vec<EstimateRecord>,
    pub levels: Vec<LevelEstimate>,
    pub fitted: FittedConstants,
    pub quantity2_trend: DecayTrend,
    pub quantity3_trend: DecayTrend,
    pub flags: EstimateFlags,
    pub lemma_exceptions: Vec<LemmaException>,
}

impl EstimateReport {
    /// Columns `k,i,quantity2,bound2,quantity3,bound3`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::with_header(&["k", "i", "quantity2", "bound2", "quantity3", "bound3"]);
        for r in &self.records {
            csv.row([
                r.k.to_string(),
                r.i.to_string(),
                fmt_float(r.quantity2),
                fmt_float(r.bound2),
                fmt_float(r.quantity3),
                fmt_float(r.bound3),
            ]);
        }
        csv.into_string()
    }
}

fn lemma_exceptions(map: &PiecewiseDiffeo) -> Vec<LemmaException> {
    map.pieces()
        .filter(|p| !p.is_identity())
        .filter(|p| !check_lemma_hypothesis(p.src_len, p.tgt_len, &Modulus::PowerAlpha(1.0), 0.0).ratio_ok)
        .map(|p| LemmaException {
            map: map.kind(),
            n: p.source,
            piece: p.kind,
            source_len: p.src_len,
            target_len: p.tgt_len,
        })
        .collect()
}

/// Computes the left-hand sides of the three estimates from the model's
/// exact lengths, together with the fitted constants and trend flags.
pub fn estimate_quantities(model: &PartitionModel, alpha: f64) -> Result<EstimateReport> {
    let p = *model.params();
    let law = model.law();
    let (eps, theta) = (p.epsilon, p.theta);
    let schedule = model.schedule();

    let mut records = Vec::new();
    let mut q2_max = Vec::new();
    let mut q3_max = Vec::new();
    for k in 1..model.k_max() {
        let kf = f64::from(k);
        let ln = model.ln_lambda(k)?;
        let dev = ln.exp_m1().abs();
        let bound2 = kf * 2f64.powf(-kf + kf * (1.0 + eps) * (1.0 + theta) * alpha);
        let bound3 = kf * 2f64.powf(-kf * (1.0 - (1.0 + eps) * alpha));
        let steps = schedule.chain_steps(k);
        let top = schedule.level_index(k + 1);
        let (mut m2, mut m3) = (0.0f64, 0.0f64);
        for i in 0..steps {
            let a = law.chain_length(k, i)?;
            let c = law.chain_length(k, i + 1)?;
            let n = top - i as i64;
            let b = law.interval_length(n);
            let d = law.interval_length(n - 1);
            let quantity2 = dev * a.powf(-alpha);
            let gap = b - a;
            let quantity3 = ((d - c) / gap - 1.0).abs() * 2f64.powf(alpha) / gap.powf(alpha);
            m2 = m2.max(quantity2);
            m3 = m3.max(quantity3);
            records.push(EstimateRecord {
                k,
                i,
                quantity2,
                bound2,
                quantity3,
                bound3,
            });
        }
        q2_max.push((k, m2));
        q3_max.push((k, m3));
    }

    let levels = (1..=model.k_max())
        .map(|k| {
            let bc = model.bc_length(k)?;
            let uv = model.uv_length(k)?;
            let gap = 0.5 * (bc - uv);
            Ok(LevelEstimate {
                k,
                quantity4: uv / gap.powf(1.0 + alpha),
                bound4: bc.powf(theta - alpha),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fit = |pairs: &mut dyn Iterator<Item = (f64, f64)>| pairs.map(|(q, b)| q / b).fold(0.0, f64::max);
    let fitted = FittedConstants {
        m2: fit(&mut records.iter().map(|r| (r.quantity2, r.bound2))),
        m3: fit(&mut records.iter().map(|r| (r.quantity3, r.bound3))),
        m4: fit(&mut levels.iter().map(|l| (l.quantity4, l.bound4))),
    };

    let quantity2_trend = DecayTrend::from_maxima(q2_max);
    let quantity3_trend = DecayTrend::from_maxima(q3_max);
    let flags = EstimateFlags {
        parameters_pass: check_parameters(alpha, theta, eps).pass,
        bound2_decays: (1.0 + eps) * (1.0 + theta) * alpha < 1.0,
        bound3_decays: (1.0 + eps) * alpha < 1.0,
        bound4_decays: theta > alpha,
        quantity2_decays: quantity2_trend.decays_from.is_some(),
        quantity3_decays: quantity3_trend.decays_from.is_some(),
        quantity4_decreases: levels.len() >= 2 && levels[levels.len() - 1].quantity4 < levels[0].quantity4,
    };

    let mut exceptions = lemma_exceptions(&build_f(model)?);
    exceptions.extend(lemma_exceptions(&build_g(model)?));

    Ok(EstimateReport {
        alpha,
        epsilon: eps,
        theta,
        schedule,
        records,
        levels,
        fitted,
        quantity2_trend,
        quantity3_trend,
        flags,
        lemma_exceptions: exceptions,
    })
}

/// Where the largest sampled quotient was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormLocation {
    pub n: i64,
    pub piece: PieceKind,
    /// Global distance of the maximizing pair.
    pub scale: f64,
    /// Whether the pair straddles a piece boundary.
    pub across_knot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub location: Option<SeminormLocation>,
    pub pieces: usize,
    /// Smallest sampled scale.
    pub floor: f64,
}

/// `10^-3` of the smallest marked interval of the model.
pub fn default_floor(model: &PartitionModel) -> Result<f64> {
    Ok(1e-3 * model.uv_length(model.k_max())?)
}

#[derive(Clone, Copy)]
struct Best {
    q: f64,
    loc: Option<SeminormLocation>,
}

impl Best {
    const NONE: Best = Best { q: 0.0, loc: None };

    fn max(self, other: Best) -> Best {
        if other.q > self.q {
            other
        } else {
            self
        }
    }
}

/// Empirical `ω`-seminorm of the derivative of `map` over its domain.
///
/// Inside every non-identity piece of global length `L`, pairs at distance
/// `L 2^-j` are sampled as in [`crate::bridge::empirical_omega_norm`].
/// Across each boundary between globally adjacent pieces, pairs straddling
/// the boundary are sampled at scales `min(L, L') 2^-j`. Scales below
/// `floor` are skipped. Every `(piece, scale)` cell has its own seeded
/// stream, so refining the grid never lowers the result.
pub fn piecewise_seminorm(
    map: &PiecewiseDiffeo,
    modulus: &Modulus,
    grid: &GridSpec,
    floor: f64,
) -> Result<SeminormEstimate> {
    grid.validate()?;
    if !(floor > 0.0) {
        return Err(LabError::parameter(format!("seminorm floor must be > 0, got {floor}")));
    }
    let (lo, hi) = map.domain();
    // left to right: intervals from n = hi down to lo
    let pieces: Vec<Piece> = (lo..=hi).rev().flat_map(|n| map.pieces_in(n).iter().copied()).collect();
    let j_start = grid.j_min.max(0);

    let within = |idx: usize| -> Best {
        let p = &pieces[idx];
        if p.is_identity() {
            return Best::NONE;
        }
        let width = p.src_hi - p.src_lo;
        let mut best = Best::NONE;
        for j in j_start..=grid.j_max {
            let scale = 2f64.powi(-j);
            let h = p.src_len * scale;
            if h < floor {
                break;
            }
            let hs = width * scale;
            let w = modulus.eval(h);
            let quotient = |x: f64| {
                let x = x.max(p.src_lo);
                let y = (x + hs).min(p.src_hi);
                let q = (p.forward(x).1 - p.forward(y).1).abs() / w;
                if q.is_finite() {
                    q
                } else {
                    0.0
                }
            };
            let span = width - hs;
            let mut q = quotient(p.src_lo).max(quotient(p.src_hi - hs)).max(quotient(p.src_lo + 0.5 * span));
            let mut rng = cell_rng(grid.seed, j, 2 * idx as u64);
            for _ in 0..grid.samples_per_scale {
                q = q.max(quotient(p.src_lo + rng.random::<f64>() * span));
            }
            best = best.max(Best {
                q,
                loc: Some(SeminormLocation {
                    n: p.source,
                    piece: p.kind,
                    scale: h,
                    across_knot: false,
                }),
            });
        }
        best
    };

    let across = |idx: usize| -> Best {
        let (p, r) = (&pieces[idx], &pieces[idx + 1]);
        if p.is_identity() && r.is_identity() {
            return Best::NONE;
        }
        let ell_p = p.src_len / (p.src_hi - p.src_lo);
        let ell_r = r.src_len / (r.src_hi - r.src_lo);
        let top = p.src_len.min(r.src_len);
        let mut best = Best::NONE;
        for j in j_start..=grid.j_max {
            let h = top * 2f64.powi(-j);
            if h < floor {
                break;
            }
            let w = modulus.eval(h);
            let quotient = |t: f64| {
                let x = p.src_hi - t * h / ell_p;
                let y = r.src_lo + (1.0 - t) * h / ell_r;
                let q = (p.forward(x.max(p.src_lo)).1 - r.forward(y.min(r.src_hi)).1).abs() / w;
                if q.is_finite() {
                    q
                } else {
                    0.0
                }
            };
            let mut q = quotient(0.5).max(quotient(1.0)).max(quotient(0.0));
            let mut rng = cell_rng(grid.seed, j, 2 * idx as u64 + 1);
            for _ in 0..grid.samples_per_scale {
                q = q.max(quotient(rng.random::<f64>()));
            }
            best = best.max(Best {
                q,
                loc: Some(SeminormLocation {
                    n: p.source,
                    piece: p.kind,
                    scale: h,
                    across_knot: true,
                }),
            });
        }
        best
    };

    let n = pieces.len();
    let best = (0..n)
        .into_par_iter()
        .map(|idx| {
            let b = within(idx);
            if idx + 1 < n {
                b.max(across(idx))
            } else {
                b
            }
        })
        .reduce(|| Best::NONE, Best::max);
    Ok(SeminormEstimate {
        value: best.q,
        location: best.loc,
        pieces: n,
        floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub depth: u32,
    pub map: MapKind,
    pub schedule: Schedule,
    pub seminorm: f64,
    pub floor: f64,
    pub pieces: usize,
    pub location: Option<SeminormLocation>,
}

/// Seminorm of `map'` at each truncation depth, all other parameters as in
/// `base`.
pub fn empirical_holder_sweep(base: &Params, map: MapKind, depths: &[u32], grid: &GridSpec) -> Result<Vec<SweepRow>> {
    let modulus = Modulus::PowerAlpha(base.alpha);
    depths
        .iter()
        .map(|&depth| {
            let params = base.with_k_max(depth)?;
            let action = IntervalAction::build(&params)?;
            let floor = default_floor(action.model())?;
            let est = piecewise_seminorm(action.map(map), &modulus, grid, floor)?;
            Ok(SweepRow {
                depth,
                map,
                schedule: params.schedule,
                seminorm: est.value,
                floor,
                pieces: est.pieces,
                location: est.location,
            })
        })
        .collect()
}

/// Growth statistics of a depth sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub max_over_min: f64,
    /// Last value over first value.
    pub growth: f64,
    pub strictly_increasing: bool,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Option<SweepSummary> {
    let first = rows.first()?.seminorm;
    let last = rows.last()?.seminorm;
    let max = rows.iter().map(|r| r.seminorm).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.seminorm).fold(f64::INFINITY, f64::min);
    Some(SweepSummary {
        max_over_min: max / min,
        growth: last / first,
        strictly_increasing: rows.windows(2).all(|w| w[1].seminorm > w[0].seminorm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::build_identity;

    #[test]
    fn parameter_examples() {
        let ok = check_parameters(0.5, 0.55, 0.05);
        assert!(ok.pass);
        assert!((ok.product - 0.81375).abs() < 1e-15);
        for eps in [1e-6, 1e-4, 1e-2, 0.05] {
            let c = check_parameters(0.62, 0.62 + eps, eps);
            assert!(!c.product_ok && !c.pass, "eps={eps}");
        }
        let c = check_parameters(0.5, 0.5, 0.1);
        assert!(!c.theta_ok && !c.pass);
        assert!(!check_parameters(0.5, 0.6, -0.1).pass);
    }

    #[test]
    fn default_epsilon_grid() {
        let (theta, eps) = default_theta_epsilon(0.3).unwrap();
        assert_eq!(eps, 0.5);
        assert!((theta - 0.8).abs() < 1e-15);
        assert!(check_parameters(0.3, 0.55, 0.25).pass);
        assert_eq!(default_theta_epsilon(0.5).unwrap(), (0.625, 0.125));
        let (theta, eps) = default_theta_epsilon(0.618).unwrap();
        assert!(eps > 0.0 && eps < 1e-4);
        assert!(check_parameters(0.618, theta, eps).pass);
        assert!(matches!(default_theta_epsilon(0.62), Err(LabError::Threshold { .. })));
        assert!(default_theta_epsilon(0.0).is_err());
        // doubling the returned epsilon fails
        let (_, eps) = default_theta_epsilon(0.45).unwrap();
        assert!(!check_parameters(0.45, 0.45 + 2.0 * eps, 2.0 * eps).pass);
    }

    #[test]
    fn threshold_split() {
        assert!(admits_epsilon(0.61));
        assert!(admits_epsilon(0.618));
        assert!(!admits_epsilon(0.6181));
        assert!(!admits_epsilon(0.9));
    }

    fn model(alpha: f64, k_max: u32, schedule: Schedule) -> PartitionModel {
        PartitionModel::build(&Params::for_alpha(alpha, k_max, schedule).unwrap()).unwrap()
    }

    #[test]
    fn lambda_bounds_powers_of_two() {
        let r = lambda_bounds_report(&model(0.5, 12, Schedule::PowersOfTwo)).unwrap();
        assert_eq!(r.rows.len(), 11);
        assert!(r.sup_power_ratio.is_finite() && r.sup_deviation_ratio.is_finite());
        assert!(r.bounded && r.deviation_vanishes && !r.diverges());
        let single = lambda_bounds_report(&model(0.5, 2, Schedule::PowersOfTwo)).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert!(single.bounded);
    }

    #[test]
    fn lambda_bounds_linear_diverge() {
        let r = lambda_bounds_report(&model(0.5, 12, Schedule::Linear)).unwrap();
        assert!(r.diverges());
        assert!(r.rows.last().unwrap().deviation > r.rows[0].deviation);
    }

    #[test]
    fn estimates_are_positive_and_cover_the_chains() {
        let m = model(0.5, 8, Schedule::PowersOfTwo);
        let rep = estimate_quantities(&m, 0.5).unwrap();
        let expected: u64 = (1..8).map(|k| 1u64 << k).sum();
        assert_eq!(rep.records.len() as u64, expected);
        assert_eq!(rep.levels.len(), 8);
        for r in &rep.records {
            assert!(r.quantity2 >= 0.0 && r.quantity2.is_finite());
            assert!(r.quantity3 >= 0.0 && r.quantity3.is_finite());
            assert!(r.quantity2 <= rep.fitted.m2 * r.bound2 * (1.0 + 1e-12));
        }
        assert!(rep.flags.parameters_pass && rep.flags.bound2_decays && rep.flags.bound4_decays);
        let csv = rep.to_csv();
        assert!(csv.starts_with("k,i,quantity2,bound2,quantity3,bound3\n"));
        assert_eq!(csv.lines().count(), rep.records.len() + 1);
    }

    #[test]
    fn quantity4_grows_when_theta_below_alpha() {
        let p = Params::new(0.7, 0.05, 0.3, 10, 8, Schedule::PowersOfTwo).unwrap();
        let rep = estimate_quantities(&PartitionModel::build(&p).unwrap(), 0.7).unwrap();
        assert!(!rep.flags.bound4_decays);
        for w in rep.levels.windows(2) {
            assert!(w[1].quantity4 > w[0].quantity4);
        }
    }

    #[test]
    fn identity_seminorm_vanishes() {
        let m = model(0.5, 6, Schedule::PowersOfTwo);
        let id = build_identity(&m).unwrap();
        let est = piecewise_seminorm(&id, &Modulus::PowerAlpha(0.5), &GridSpec::default(), 1e-9).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.location.is_none());
    }

    #[test]
    fn seminorm_refinement_is_monotone() {
        let a = IntervalAction::build(&Params::for_alpha(0.5, 5, Schedule::PowersOfTwo).unwrap()).unwrap();
        let md = Modulus::PowerAlpha(0.5);
        let floor = default_floor(a.model()).unwrap();
        let coarse = GridSpec { j_min: 0, j_max: 6, samples_per_scale: 8, seed: 3 };
        let fine = GridSpec { j_max: 12, samples_per_scale: 32, ..coarse };
        for map in [a.f(), a.g()] {
            let c = piecewise_seminorm(map, &md, &coarse, floor).unwrap().value;
            let f = piecewise_seminorm(map, &md, &fine, floor).unwrap().value;
            assert!(c > 0.0 && f >= c, "{c} {f}");
        }
    }

    #[test]
    fn sweep_rejects_excessive_depth() {
        let base = Params::for_alpha(0.5, 4, Schedule::PowersOfTwo).unwrap();
        assert!(empirical_holder_sweep(&base, MapKind::F, &[40], &GridSpec::default()).is_err());
        let rows = empirical_holder_sweep(&base, MapKind::F, &[3, 4], &GridSpec::default()).unwrap();
        assert_eq!(rows.len(), 2);
        let s = summarize_sweep(&rows).unwrap();
        assert!(s.max_over_min >= 1.0);
    }
}
