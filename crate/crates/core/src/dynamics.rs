//! Level classification, descent certificates and bounded orbit
//! exploration for the action of `⟨f, g⟩`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::generators::{IntervalAction, Letter, Word};
use crate::partition::LocalPoint;

/// Default cap on the number of `g^-1` steps tried per certificate.
pub const DEFAULT_M_MAX: u64 = 1_000_000;

/// Buckets per fundamental interval used to prune revisits while exploring.
const ORBIT_HASH_RESOLUTION: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum LevelClass {
    /// Strictly inside `]b_k, c_k[`; `marked` when also in `[u_k, v_k]`.
    Level { k: u32, marked: bool },
    Boundary { k: u32, side: Endpoint },
    /// In fundamental interval `n` but outside every `]b_k, c_k[`.
    Gap { n: i64 },
    /// `0` or `1`.
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    #[serde(flatten)]
    pub class: LevelClass,
    /// Chain intervals `[u_{k+1}^i, v_{k+1}^i]` containing the point, as `(k, i)`.
    pub chains: Vec<(u32, u64)>,
}

impl Classification {
    pub fn level(&self) -> Option<u32> {
        match self.class {
            LevelClass::Level { k, .. } => Some(k),
            _ => None,
        }
    }
}

pub fn level_of(action: &IntervalAction, p: &LocalPoint) -> Result<Classification> {
    let model = action.model();
    let LocalPoint::Interior { n, s } = *p else {
        return Ok(Classification {
            class: LevelClass::FixedPoint,
            chains: Vec::new(),
        });
    };
    if !model.is_materialized(n) {
        return Err(LabError::range(format!("point {p} is outside the materialized range")));
    }
    let class = match model.level_at(n) {
        Some(k) => {
            let l = model.level(k)?;
            if s == l.b {
                LevelClass::Boundary { k, side: Endpoint::B }
            } else if s == l.c {
                LevelClass::Boundary { k, side: Endpoint::C }
            } else if s > l.b && s < l.c {
                LevelClass::Level {
                    k,
                    marked: s >= l.u && s <= l.v,
                }
            } else {
                LevelClass::Gap { n }
            }
        }
        None => LevelClass::Gap { n },
    };
    let mut chains = Vec::new();
    if let Some((k, i)) = model.owner(n) {
        let c = model.chain_interval(k, i)?;
        if s >= c.lo && s <= c.hi {
            chains.push((k, i));
        }
    }
    // the last element of chain k is [b_k, c_k] itself, in interval n_k
    if let Some(k) = model.level_at(n).filter(|&k| k < model.k_max()) {
        let top = model.chain_interval(k, model.schedule().chain_steps(k))?;
        if s >= top.lo && s <= top.hi {
            chains.push((k, top.i));
        }
    }
    Ok(Classification { class, chains })
}

fn serialize_word<S: Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

/// A word carrying a level-`k` point strictly into `]b_{k+1}, c_{k+1}[`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentCertificate {
    pub k: u32,
    /// Number of leading `g^-1` letters.
    pub m: u64,
    #[serde(serialize_with = "serialize_word")]
    pub word: Word,
    pub start: LocalPoint,
    pub end: LocalPoint,
    pub hit: bool,
    /// Global distance from `end` to the nearer of `b_{k+1}`, `c_{k+1}`.
    pub margin: f64,
    /// `margin / |[b_{k+1}, c_{k+1}]|`.
    pub relative_margin: f64,
}

/// Outcome of a bounded search for a descent word.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentSearch {
    pub k: u32,
    pub m_max: u64,
    pub certificate: Option<DescentCertificate>,
    /// `m` at which the image came closest to `]b_{k+1}, c_{k+1}[`.
    pub closest_m: u64,
    /// Global distance from that image to the target (0 when inside).
    pub closest_distance: f64,
    /// Set when the search stopped on an evaluation error.
    pub error: Option<String>,
}

/// Signed containment of `p` in `]b_{k}, c_{k}[`: `(inside, margin)` where
/// `margin` is the distance to the nearer endpoint, or to the interval when
/// outside.
fn containment(action: &IntervalAction, k: u32, p: &LocalPoint) -> Result<(bool, f64)> {
    let model = action.model();
    let l = model.level(k)?;
    let ell = model.interval_length(l.n)?;
    match *p {
        LocalPoint::Interior { n, s } if n == l.n => {
            if s > l.b && s < l.c {
                Ok((true, (s - l.b).min(l.c - s) * ell))
            } else {
                Ok((false, if s <= l.b { (l.b - s) * ell } else { (s - l.c) * ell }))
            }
        }
        _ => {
            let x = model.global(p)?;
            let b = model.global(&model.point_b(k)?)?;
            let c = model.global(&model.point_c(k)?)?;
            Ok((false, if x <= b { b - x } else { x - c }))
        }
    }
}

/// Minimal `m <= m_max` such that `F^-(n_{k+1} - n_k)` applied after
/// `G^-m` carries `start` into `]b_{k+1}, c_{k+1}[`.
pub fn search_descent(action: &IntervalAction, k: u32, start: LocalPoint, m_max: u64) -> Result<DescentSearch> {
    let model = action.model();
    if k == 0 || k >= model.k_max() {
        return Err(LabError::range(format!(
            "descent from level {k} needs 1 <= k and k + 1 <= k_max = {}",
            model.k_max()
        )));
    }
    let steps = model.schedule().chain_steps(k);
    let descend = Word::power(Letter::FInv, steps);
    let mut report = DescentSearch {
        k,
        m_max,
        certificate: None,
        closest_m: 0,
        closest_distance: f64::INFINITY,
        error: None,
    };
    let mut current = start;
    for m in 0..=m_max {
        if m > 0 {
            current = match action.apply_letter(Letter::GInv, &current) {
                Ok(q) => q,
                Err(e) => {
                    report.error = Some(e.to_string());
                    return Ok(report);
                }
            };
        }
        let end = match action.apply_word(&descend, &current) {
            Ok(q) => q,
            Err(e) => {
                report.error = Some(e.to_string());
                return Ok(report);
            }
        };
        let (inside, margin) = containment(action, k + 1, &end)?;
        if inside {
            let word = Word::power(Letter::GInv, m).then(&descend);
            report.closest_m = m;
            report.closest_distance = 0.0;
            report.certificate = Some(DescentCertificate {
                k,
                m,
                word,
                start,
                end,
                hit: true,
                margin,
                relative_margin: margin / model.bc_length(k + 1)?,
            });
            return Ok(report);
        }
        if margin < report.closest_distance {
            report.closest_distance = margin;
            report.closest_m = m;
        }
    }
    Ok(report)
}

/// Certificate starting from `u_k`.
pub fn descent_certificate(action: &IntervalAction, k: u32, m_max: u64) -> Result<DescentCertificate> {
    let start = action.model().point_u(k)?;
    let search = search_descent(action, k, start, m_max)?;
    search.certificate.ok_or_else(|| {
        LabError::Construction(format!(
            "no descent word from level {k} with m <= {m_max}: closest approach {:e} at m = {}{}",
            search.closest_distance,
            search.closest_m,
            search.error.map(|e| format!(" ({e})")).unwrap_or_default()
        ))
    })
}

/// Re-applies the stored word to the stored start and checks containment
/// with at least `min_relative_margin`.
pub fn verify_certificate(action: &IntervalAction, cert: &DescentCertificate, min_relative_margin: f64) -> Result<bool> {
    let end = action.apply_word(&cert.word, &cert.start)?;
    let (inside, margin) = containment(action, cert.k + 1, &end)?;
    Ok(inside && margin >= min_relative_margin * action.model().bc_length(cert.k + 1)?)
}

/// Distances `|g^-m(u_k) − b_k|` for `m = 0..=m_count`.
pub fn g_inverse_approach(action: &IntervalAction, k: u32, m_count: u64) -> Result<Vec<f64>> {
    let model = action.model();
    let l = *model.level(k)?;
    let ell = model.interval_length(l.n)?;
    let mut p = model.point_u(k)?;
    let mut out = Vec::with_capacity(m_count as usize + 1);
    for m in 0..=m_count {
        if m > 0 {
            p = action.apply_letter(Letter::GInv, &p)?;
        }
        let s = p.offset().expect("interior");
        out.push((s - l.b) * ell);
    }
    Ok(out)
}

/// Smallest `m <= m_max` with `|g^-m(u_k) − b_k| < delta`.
pub fn g_inverse_steps_within(action: &IntervalAction, k: u32, delta: f64, m_max: u64) -> Result<Option<u64>> {
    let model = action.model();
    let l = *model.level(k)?;
    let ell = model.interval_length(l.n)?;
    let mut p = model.point_u(k)?;
    for m in 0..=m_max {
        if m > 0 {
            p = action.apply_letter(Letter::GInv, &p)?;
        }
        if (p.offset().expect("interior") - l.b) * ell < delta {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeReport {
    pub k_from: u32,
    pub k_to: u32,
    pub stages: Vec<DescentCertificate>,
    #[serde(serialize_with = "serialize_word")]
    pub word: Word,
    pub start: LocalPoint,
    pub end: LocalPoint,
    pub complete: bool,
    /// Level at which the cascade stopped, with the reason.
    pub failed_stage: Option<(u32, String)>,
}

/// Chains descent searches for `k = k_from..=k_to`, each starting from the
/// previous end point.
pub fn descent_cascade(action: &IntervalAction, k_from: u32, k_to: u32, m_max: u64) -> Result<CascadeReport> {
    if k_from > k_to {
        return Err(LabError::parameter(format!("empty cascade {k_from}..{k_to}")));
    }
    let start = action.model().point_u(k_from)?;
    let mut report = CascadeReport {
        k_from,
        k_to,
        stages: Vec::new(),
        word: Word::identity(),
        start,
        end: start,
        complete: false,
        failed_stage: None,
    };
    for k in k_from..=k_to {
        let search = match search_descent(action, k, report.end, m_max) {
            Ok(s) => s,
            Err(e) => {
                report.failed_stage = Some((k, e.to_string()));
                return Ok(report);
            }
        };
        match search.certificate {
            Some(cert) => {
                report.word = std::mem::take(&mut report.word).then(&cert.word);
                report.end = cert.end;
                report.stages.push(cert);
            }
            None => {
                report.failed_stage = Some((
                    k,
                    format!(
                        "closest approach {:e} at m = {}{}",
                        search.closest_distance,
                        search.closest_m,
                        search.error.map(|e| format!(" ({e})")).unwrap_or_default()
                    ),
                ));
                return Ok(report);
            }
        }
    }
    report.complete = true;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub point: LocalPoint,
    pub x: f64,
    pub word_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub start: LocalPoint,
    pub max_word_length: usize,
    pub budget: usize,
    /// Distinct hash cells visited.
    pub visited: usize,
    pub truncated: bool,
    pub deepest_level: Option<u32>,
    pub leftmost: OrbitPoint,
    pub rightmost: OrbitPoint,
    /// Distinct chain intervals `(k, i)` entered.
    pub marked_intervals: usize,
    /// Distinct levels `k` whose `]b_k, c_k[` was entered.
    pub levels_entered: Vec<u32>,
}

fn hash_key(p: &LocalPoint) -> (i64, i64) {
    match *p {
        LocalPoint::Zero => (i64::MIN, 0),
        LocalPoint::One => (i64::MAX, 0),
        LocalPoint::Interior { n, s } => (n, (s * ORBIT_HASH_RESOLUTION).floor() as i64),
    }
}

/// Breadth-first exploration of the orbit of `start` under words of length
/// at most `max_word_length` over `alphabet`, expanding letters in the given
/// order. Points within the same `10^-3` cell of a fundamental interval are
/// visited once; moves leaving the materialized range are dropped.
pub fn orbit_explore(
    action: &IntervalAction,
    start: LocalPoint,
    max_word_length: usize,
    budget: usize,
    alphabet: &[Letter],
) -> Result<OrbitReport> {
    if budget == 0 {
        return Err(LabError::parameter("orbit budget must be positive"));
    }
    let model = action.model();
    let x0 = model.global(&start)?;
    let origin = OrbitPoint {
        point: start,
        x: x0,
        word_length: 0,
    };
    let mut report = OrbitReport {
        start,
        max_word_length,
        budget,
        visited: 0,
        truncated: false,
        deepest_level: None,
        leftmost: origin,
        rightmost: origin,
        marked_intervals: 0,
        levels_entered: Vec::new(),
    };
    let mut seen = HashSet::new();
    let mut marked = BTreeSet::new();
    let mut levels = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(hash_key(&start));
    queue.push_back((start, 0usize));

    while let Some((p, len)) = queue.pop_front() {
        report.visited += 1;
        let x = model.global(&p)?;
        if x < report.leftmost.x {
            report.leftmost = OrbitPoint { point: p, x, word_length: len };
        }
        if x > report.rightmost.x {
            report.rightmost = OrbitPoint { point: p, x, word_length: len };
        }
        let class = level_of(action, &p)?;
        if let Some(k) = class.level() {
            levels.insert(k);
        }
        marked.extend(class.chains.iter().copied());

        if len == max_word_length {
            continue;
        }
        for &letter in alphabet {
            let Ok(q) = action.apply_letter(letter, &p) else {
                continue;
            };
            if seen.insert(hash_key(&q)) {
                if seen.len() > budget {
                    report.truncated = true;
                    break;
                }
                queue.push_back((q, len + 1));
            }
        }
        if report.truncated {
            // drain what is already queued without expanding further
            while let Some((p, len)) = queue.pop_front() {
                report.visited += 1;
                let x = model.global(&p)?;
                if x < report.leftmost.x {
                    report.leftmost = OrbitPoint { point: p, x, word_length: len };
                }
                if x > report.rightmost.x {
                    report.rightmost = OrbitPoint { point: p, x, word_length: len };
                }
                let class = level_of(action, &p)?;
                if let Some(k) = class.level() {
                    levels.insert(k);
                }
                marked.extend(class.chains.iter().copied());
            }
        }
    }
    report.deepest_level = levels.iter().next_back().copied();
    report.marked_intervals = marked.len();
    report.levels_entered = levels.into_iter().collect();
    Ok(report)
}
