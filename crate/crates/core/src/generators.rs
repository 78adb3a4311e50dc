//! The generators `f` and `g` as fits of bridges, evaluated in local
//! coordinates, and words over `{f, f^-1, g, g^-1}`.
//!
//! Piece layout for `f`: a fundamental interval `n` owned by the chain of
//! level `k` (`n_k < n <= n_{k+1}`, chain index `i = n_{k+1} - n`) is split
//! into left gap, marked interval and right gap, sent to the corresponding
//! three parts of interval `n - 1` around chain interval `(k, i + 1)`. Every
//! other interval is sent onto `n - 1` by a single bridge. `g` is the
//! identity except on `[b_k, c_k]`, where `[b_k, u_k] → [b_k, v_k]` and
//! `[u_k, c_k] → [v_k, c_k]`.
//!
//! Consecutive pieces share endpoints bit for bit and a bridge sends its
//! endpoints exactly onto the target endpoints, so orbits of piece endpoints
//! (in particular `f(a_{n+1}) = a_n` and the chains ending on `[b_k, c_k]`)
//! carry no rounding error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bridge::unit_half_with_deriv;
use crate::error::{LabError, Result};
use crate::partition::{LocalPoint, Params, PartitionModel, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    F,
    G,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::F => f.write_str("f"),
            MapKind::G => f.write_str("g"),
        }
    }
}

impl FromStr for MapKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "F" => Ok(MapKind::F),
            "g" | "G" => Ok(MapKind::G),
            other => Err(LabError::parameter(format!("unknown map `{other}` (expected f or g)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    /// Whole fundamental interval onto the next one.
    Whole,
    LeftGap,
    Marked,
    RightGap,
    /// `[b_k, u_k] → [b_k, v_k]`.
    Lower,
    /// `[u_k, c_k] → [v_k, c_k]`.
    Upper,
    Identity,
}

/// One bridge, with source and target given as offsets inside their
/// fundamental intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub kind: PieceKind,
    pub source: i64,
    pub src_lo: f64,
    pub src_hi: f64,
    pub target: i64,
    pub tgt_lo: f64,
    pub tgt_hi: f64,
    /// Global source length.
    pub src_len: f64,
    /// Global target length.
    pub tgt_len: f64,
    /// `tgt_len / src_len`.
    pub ratio: f64,
}

impl Piece {
    fn new(
        kind: PieceKind,
        (source, src_lo, src_hi): (i64, f64, f64),
        (target, tgt_lo, tgt_hi): (i64, f64, f64),
        model: &PartitionModel,
    ) -> Result<Self> {
        if !(src_lo < src_hi) || !(tgt_lo < tgt_hi) {
            return Err(LabError::Construction(format!(
                "{kind:?} piece in interval {source}: [{src_lo}, {src_hi}] -> [{tgt_lo}, {tgt_hi}] is not strictly ordered"
            )));
        }
        let src_len = (src_hi - src_lo) * model.interval_length(source)?;
        let tgt_len = (tgt_hi - tgt_lo) * model.interval_length(target)?;
        Ok(Piece {
            kind,
            source,
            src_lo,
            src_hi,
            target,
            tgt_lo,
            tgt_hi,
            src_len,
            tgt_len,
            ratio: tgt_len / src_len,
        })
    }

    fn identity(n: i64, lo: f64, hi: f64, len: f64) -> Self {
        Piece {
            kind: PieceKind::Identity,
            source: n,
            src_lo: lo,
            src_hi: hi,
            target: n,
            tgt_lo: lo,
            tgt_hi: hi,
            src_len: len,
            tgt_len: len,
            ratio: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kind == PieceKind::Identity
    }

    /// Image offset and global derivative at source offset `s`.
    pub fn forward(&self, s: f64) -> (f64, f64) {
        if self.is_identity() {
            return (s, 1.0);
        }
        map_offset(s, (self.src_lo, self.src_hi), (self.tgt_lo, self.tgt_hi), self.ratio)
    }

    /// Preimage offset and global derivative of the inverse at target offset `s`.
    pub fn backward(&self, s: f64) -> (f64, f64) {
        if self.is_identity() {
            return (s, 1.0);
        }
        map_offset(s, (self.tgt_lo, self.tgt_hi), (self.src_lo, self.src_hi), 1.0 / self.ratio)
    }
}

fn map_offset(s: f64, (lo, hi): (f64, f64), (tlo, thi): (f64, f64), ratio: f64) -> (f64, f64) {
    let w = hi - lo;
    let tw = thi - tlo;
    let dl = s - lo;
    let dr = hi - s;
    if dl <= dr {
        let (tp, d) = unit_half_with_deriv(dl / w, ratio);
        (tlo + tp * tw, d)
    } else {
        let (tp, d) = unit_half_with_deriv(dr / w, ratio);
        (thi - tp * tw, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `f` or `g` as an ordered fit of bridges over the materialized range.
#[derive(Debug, Clone)]
pub struct PiecewiseDiffeo {
    kind: MapKind,
    n_min: i64,
    n_max: i64,
    /// Target interval minus source interval.
    shift: i64,
    by_source: Vec<Vec<Piece>>,
    by_target: Vec<Vec<Piece>>,
    schedule: Schedule,
    max_k: u32,
}

impl PiecewiseDiffeo {
    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Fundamental intervals on which the map (not its inverse) is defined.
    pub fn domain(&self) -> (i64, i64) {
        match self.shift {
            -1 => (self.n_min + 1, self.n_max),
            _ => (self.n_min, self.n_max),
        }
    }

    /// Fundamental intervals on which the inverse is defined.
    pub fn codomain(&self) -> (i64, i64) {
        let (lo, hi) = self.domain();
        (lo + self.shift, hi + self.shift)
    }

    pub fn pieces(&self) -> impl Iterator<Item = &Piece> {
        self.by_source.iter().flatten()
    }

    pub fn pieces_in(&self, n: i64) -> &[Piece] {
        if n < self.n_min || n > self.n_max {
            return &[];
        }
        &self.by_source[(n - self.n_min) as usize]
    }

    /// Interior piece boundaries, as source points.
    pub fn knots(&self) -> Vec<LocalPoint> {
        self.pieces()
            .filter(|p| p.src_lo > 0.0)
            .map(|p| LocalPoint::interior(p.source, p.src_lo))
            .collect()
    }

    fn out_of_range(&self, n: i64, inverse: bool) -> LabError {
        let (lo, hi) = if inverse { self.codomain() } else { self.domain() };
        let hint = if n > hi {
            // the forward domain ends at n_{k_max+1} + 1, the inverse one step earlier
            let need = n + i64::from(inverse);
            match (1..=self.max_k).find(|&k| self.schedule.level_index(k + 1) + 1 >= need) {
                Some(k) => format!("; needs k_max >= {k}"),
                None => String::from("; beyond the supported depth"),
            }
        } else {
            format!("; needs n_neg >= {}", lo - n - self.n_min)
        };
        LabError::range(format!(
            "{}{} is defined on fundamental intervals [{lo}, {hi}], point lies in interval {n}{hint}",
            self.kind,
            if inverse { "^-1" } else { "" }
        ))
    }

    fn piece_at(list: &[Piece], s: f64, source_side: bool) -> &Piece {
        let hi = |p: &Piece| if source_side { p.src_hi } else { p.tgt_hi };
        list.iter().find(|p| s < hi(p)).unwrap_or_else(|| list.last().expect("nonempty"))
    }

    fn forward_pieces(&self, n: i64) -> Result<&[Piece]> {
        let (lo, hi) = self.domain();
        if n < lo || n > hi {
            return Err(self.out_of_range(n, false));
        }
        Ok(&self.by_source[(n - self.n_min) as usize])
    }

    fn backward_pieces(&self, n: i64) -> Result<&[Piece]> {
        let (lo, hi) = self.codomain();
        if n < lo || n > hi {
            return Err(self.out_of_range(n, true));
        }
        Ok(&self.by_target[(n - self.n_min) as usize])
    }

    fn canonical(&self, n: i64, s: f64) -> LocalPoint {
        if s >= 1.0 && n > self.n_min {
            LocalPoint::interior(n - 1, 0.0)
        } else {
            LocalPoint::interior(n, s)
        }
    }

    /// Image of a point and the global derivative there.
    pub fn eval_with_derivative(&self, p: &LocalPoint) -> Result<(LocalPoint, f64)> {
        match *p {
            LocalPoint::Zero | LocalPoint::One => Ok((*p, 1.0)),
            LocalPoint::Interior { n, s } => {
                let piece = Self::piece_at(self.forward_pieces(n)?, s, true);
                let (t, d) = piece.forward(s);
                Ok((self.canonical(piece.target, t), d))
            }
        }
    }

    pub fn eval(&self, p: &LocalPoint) -> Result<LocalPoint> {
        self.eval_with_derivative(p).map(|(q, _)| q)
    }

    /// Preimage of a point and the global derivative of the inverse there.
    pub fn eval_inverse_with_derivative(&self, p: &LocalPoint) -> Result<(LocalPoint, f64)> {
        match *p {
            LocalPoint::Zero | LocalPoint::One => Ok((*p, 1.0)),
            LocalPoint::Interior { n, s } => {
                let piece = Self::piece_at(self.backward_pieces(n)?, s, false);
                let (t, d) = piece.backward(s);
                Ok((self.canonical(piece.source, t), d))
            }
        }
    }

    pub fn eval_inverse(&self, p: &LocalPoint) -> Result<LocalPoint> {
        self.eval_inverse_with_derivative(p).map(|(q, _)| q)
    }

    pub fn derivative(&self, p: &LocalPoint) -> Result<f64> {
        self.eval_with_derivative(p).map(|(_, d)| d)
    }

    /// Derivative from the piece ending at `p` (`Left`) or starting at `p`
    /// (`Right`); at interior points of a piece both agree with
    /// [`PiecewiseDiffeo::derivative`].
    pub fn derivative_one_sided(&self, p: &LocalPoint, side: Side) -> Result<f64> {
        let LocalPoint::Interior { n, s } = *p else {
            return Ok(1.0);
        };
        let (n, s) = if side == Side::Left && s == 0.0 { (n + 1, 1.0) } else { (n, s) };
        let list = self.forward_pieces(n)?;
        let piece = match side {
            Side::Right => list.iter().find(|q| s < q.src_hi),
            Side::Left => list.iter().find(|q| s <= q.src_hi && s > q.src_lo),
        }
        .unwrap_or_else(|| list.last().expect("nonempty"));
        Ok(piece.forward(s).1)
    }

    /// Checks that pieces tile every interval on both sides, sharing
    /// endpoints exactly.
    pub fn validate(&self) -> Result<()> {
        let tiles = |list: &[Piece], ends: fn(&Piece) -> (f64, f64)| {
            list.is_empty()
                || (ends(&list[0]).0 == 0.0
                    && ends(&list[list.len() - 1]).1 == 1.0
                    && list.windows(2).all(|w| ends(&w[0]).1 == ends(&w[1]).0))
        };
        for (idx, (src, tgt)) in self.by_source.iter().zip(&self.by_target).enumerate() {
            let n = self.n_min + idx as i64;
            if !tiles(src, |p| (p.src_lo, p.src_hi)) || !tiles(tgt, |p| (p.tgt_lo, p.tgt_hi)) {
                return Err(LabError::Construction(format!(
                    "{}: pieces in interval {n} do not tile [0, 1] with shared endpoints",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

fn assemble(kind: MapKind, model: &PartitionModel, shift: i64, by_source: Vec<Vec<Piece>>) -> Result<PiecewiseDiffeo> {
    let (n_min, n_max) = model.n_range();
    let mut by_target = vec![Vec::new(); by_source.len()];
    for list in &by_source {
        for p in list {
            by_target[(p.target - n_min) as usize].push(*p);
        }
    }
    for list in &mut by_target {
        list.sort_by(|a, b| a.tgt_lo.total_cmp(&b.tgt_lo));
    }
    let diffeo = PiecewiseDiffeo {
        kind,
        n_min,
        n_max,
        shift,
        by_source,
        by_target,
        schedule: model.schedule(),
        max_k: match model.schedule() {
            Schedule::PowersOfTwo => crate::partition::MAX_K_POWERS_OF_TWO,
            Schedule::Linear => crate::partition::MAX_K_LINEAR,
        },
    };
    diffeo.validate()?;
    Ok(diffeo)
}

/// Builds `f` from the partition.
pub fn build_f(model: &PartitionModel) -> Result<PiecewiseDiffeo> {
    let (n_min, n_max) = model.n_range();
    let mut by_source = vec![Vec::new(); (n_max - n_min + 1) as usize];
    for n in n_min + 1..=n_max {
        let m = n - 1;
        let pieces = match model.owner(n) {
            Some((k, i)) => {
                let src = model.chain_interval(k, i)?;
                let tgt = model.chain_interval(k, i + 1)?;
                debug_assert_eq!(src.n, n);
                debug_assert_eq!(tgt.n, m);
                vec![
                    Piece::new(PieceKind::LeftGap, (n, 0.0, src.lo), (m, 0.0, tgt.lo), model)?,
                    Piece::new(PieceKind::Marked, (n, src.lo, src.hi), (m, tgt.lo, tgt.hi), model)?,
                    Piece::new(PieceKind::RightGap, (n, src.hi, 1.0), (m, tgt.hi, 1.0), model)?,
                ]
            }
            None => vec![Piece::new(PieceKind::Whole, (n, 0.0, 1.0), (m, 0.0, 1.0), model)?],
        };
        by_source[(n - n_min) as usize] = pieces;
    }
    assemble(MapKind::F, model, -1, by_source)
}

/// The identity as a one-piece-per-interval map, useful as a baseline.
pub fn build_identity(model: &PartitionModel) -> Result<PiecewiseDiffeo> {
    let (n_min, n_max) = model.n_range();
    let by_source = (n_min..=n_max)
        .map(|n| Ok(vec![Piece::identity(n, 0.0, 1.0, model.interval_length(n)?)]))
        .collect::<Result<Vec<_>>>()?;
    assemble(MapKind::G, model, 0, by_source)
}

/// Samples per level used to confirm `g(x) > x` on `]b_k, c_k[`.
const G_DISPLACEMENT_SAMPLES: usize = 100;

/// Builds `g` from the partition.
pub fn build_g(model: &PartitionModel) -> Result<PiecewiseDiffeo> {
    let (n_min, n_max) = model.n_range();
    let mut by_source = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        let ell = model.interval_length(n)?;
        let pieces = match model.level_at(n) {
            Some(k) => {
                let l = *model.level(k)?;
                vec![
                    Piece::identity(n, 0.0, l.b, l.b * ell),
                    Piece::new(PieceKind::Lower, (n, l.b, l.u), (n, l.b, l.v), model)?,
                    Piece::new(PieceKind::Upper, (n, l.u, l.c), (n, l.v, l.c), model)?,
                    Piece::identity(n, l.c, 1.0, (1.0 - l.c) * ell),
                ]
            }
            None => vec![Piece::identity(n, 0.0, 1.0, ell)],
        };
        by_source.push(pieces);
    }
    let g = assemble(MapKind::G, model, 0, by_source)?;

    for level in model.levels() {
        for j in 0..G_DISPLACEMENT_SAMPLES {
            let s = level.b + (level.c - level.b) * (j as f64 + 0.5) / G_DISPLACEMENT_SAMPLES as f64;
            let p = LocalPoint::interior(level.n, s);
            match g.eval(&p)? {
                LocalPoint::Interior { n, s: t } if n == level.n && t > s => {}
                other => {
                    return Err(LabError::Construction(format!(
                        "g does not move {p} to the right at level {} (image {other})",
                        level.k
                    )))
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    F,
    FInv,
    G,
    GInv,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::F, Letter::FInv, Letter::G, Letter::GInv];

    pub fn inverse(self) -> Letter {
        match self {
            Letter::F => Letter::FInv,
            Letter::FInv => Letter::F,
            Letter::G => Letter::GInv,
            Letter::GInv => Letter::G,
        }
    }

    fn base(self) -> (char, i64) {
        match self {
            Letter::F => ('F', 1),
            Letter::FInv => ('F', -1),
            Letter::G => ('G', 1),
            Letter::GInv => ('G', -1),
        }
    }
}

/// A word in `f, g` and their inverses, applied left to right: the first
/// letter acts first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    pub fn identity() -> Self {
        Word::default()
    }

    /// `letter` repeated `count` times.
    pub fn power(letter: Letter, count: u64) -> Self {
        Word {
            letters: vec![letter; count as usize],
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn push(&mut self, letter: Letter) {
        self.letters.push(letter);
    }

    /// `self` followed by `other`.
    pub fn then(mut self, other: &Word) -> Word {
        self.letters.extend_from_slice(&other.letters);
        self
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Free reduction: cancels adjacent inverse pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    /// Runs of equal generators with signed exponents, e.g. `[('G', -3), ('F', 2)]`.
    pub fn runs(&self) -> Vec<(char, i64)> {
        let mut runs: Vec<(char, i64)> = Vec::new();
        for &l in &self.letters {
            let (c, e) = l.base();
            match runs.last_mut() {
                Some((lc, le)) if *lc == c && le.signum() == e => *le += e,
                _ => runs.push((c, e)),
            }
        }
        runs
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        let parts: Vec<String> = self
            .runs()
            .into_iter()
            .map(|(c, e)| if e == 1 { c.to_string() } else { format!("{c}^{e}") })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Word {
    type Err = LabError;

    /// Whitespace-separated tokens `F`, `G`, `F^k`, `G^k` with signed `k`;
    /// `e` or an empty string is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut word = Word::identity();
        for token in s.split_whitespace() {
            if token == "e" || token == "id" {
                continue;
            }
            let (gen, exp) = match token.split_once('^') {
                Some((g, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| LabError::parameter(format!("bad exponent in `{token}`")))?;
                    (g, e)
                }
                None => (token, 1),
            };
            let (fwd, back) = match gen {
                "F" | "f" => (Letter::F, Letter::FInv),
                "G" | "g" => (Letter::G, Letter::GInv),
                _ => return Err(LabError::parameter(format!("unknown generator in `{token}`"))),
            };
            let letter = if exp >= 0 { fwd } else { back };
            for _ in 0..exp.unsigned_abs() {
                word.push(letter);
            }
        }
        Ok(word)
    }
}

/// The partition together with the two generators built from it.
#[derive(Debug, Clone)]
pub struct IntervalAction {
    model: PartitionModel,
    f: PiecewiseDiffeo,
    g: PiecewiseDiffeo,
}

impl IntervalAction {
    pub fn build(params: &Params) -> Result<Self> {
        Self::from_model(PartitionModel::build(params)?)
    }

    pub fn from_model(model: PartitionModel) -> Result<Self> {
        let f = build_f(&model)?;
        let g = build_g(&model)?;
        Ok(IntervalAction { model, f, g })
    }

    pub fn model(&self) -> &PartitionModel {
        &self.model
    }

    pub fn f(&self) -> &PiecewiseDiffeo {
        &self.f
    }

    pub fn g(&self) -> &PiecewiseDiffeo {
        &self.g
    }

    pub fn map(&self, kind: MapKind) -> &PiecewiseDiffeo {
        match kind {
            MapKind::F => &self.f,
            MapKind::G => &self.g,
        }
    }

    pub fn apply_letter_with_derivative(&self, letter: Letter, p: &LocalPoint) -> Result<(LocalPoint, f64)> {
        match letter {
            Letter::F => self.f.eval_with_derivative(p),
            Letter::FInv => self.f.eval_inverse_with_derivative(p),
            Letter::G => self.g.eval_with_derivative(p),
            Letter::GInv => self.g.eval_inverse_with_derivative(p),
        }
    }

    pub fn apply_letter(&self, letter: Letter, p: &LocalPoint) -> Result<LocalPoint> {
        self.apply_letter_with_derivative(letter, p).map(|(q, _)| q)
    }

    /// Image of `p` under `word` and the derivative of the composite.
    pub fn apply_word_with_derivative(&self, word: &Word, p: &LocalPoint) -> Result<(LocalPoint, f64)> {
        let mut point = *p;
        let mut deriv = 1.0;
        for (idx, &letter) in word.letters().iter().enumerate() {
            match self.apply_letter_with_derivative(letter, &point) {
                Ok((q, d)) => {
                    point = q;
                    deriv *= d;
                }
                Err(e) => {
                    return Err(LabError::Escape {
                        prefix_len: idx,
                        prefix: Word::new(word.letters()[..idx].to_vec()).to_string(),
                        reason: e.to_string(),
                    })
                }
            }
        }
        Ok((point, deriv))
    }

    pub fn apply_word(&self, word: &Word, p: &LocalPoint) -> Result<LocalPoint> {
        self.apply_word_with_derivative(word, p).map(|(q, _)| q)
    }

    /// `f` or `g` (or an inverse) at a global coordinate: `(y, dy/dx)`.
    pub fn eval_global(&self, kind: MapKind, inverse: bool, x: f64) -> Result<(f64, f64)> {
        let p = self.model.local(x)?;
        let map = self.map(kind);
        let (q, d) = if inverse {
            map.eval_inverse_with_derivative(&p)?
        } else {
            map.eval_with_derivative(&p)?
        };
        Ok((self.model.global(&q)?, d))
    }

    /// `n` evenly spaced global samples of `(x, y, dy/dx)` over the domain
    /// of the chosen map.
    pub fn sample_graph(&self, kind: MapKind, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
        if samples < 2 {
            return Err(LabError::parameter("graph resolution must be at least 2"));
        }
        let (lo, hi) = self.map(kind).domain();
        let left = self.model.a_position(hi + 1)?;
        let right = self.model.a_position(lo)?;
        (0..samples)
            .map(|j| {
                let x = if j + 1 == samples {
                    right
                } else {
                    left + (right - left) * (j as f64 / (samples - 1) as f64)
                };
                let p = if j + 1 == samples {
                    LocalPoint::interior(lo, 1.0)
                } else {
                    self.model.local(x)?
                };
                let (q, d) = self.map(kind).eval_with_derivative(&p)?;
                Ok((x, self.model.global(&q)?, d))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn action(k_max: u32) -> IntervalAction {
        let p = Params::new(0.5, 0.125, 0.625, k_max, 6, Schedule::PowersOfTwo).unwrap();
        IntervalAction::build(&p).unwrap()
    }

    #[test]
    fn word_parsing_and_display() {
        let w: Word = "F^-2 G^3".parse().unwrap();
        assert_eq!(w.letters(), &[Letter::FInv, Letter::FInv, Letter::G, Letter::G, Letter::G]);
        assert_eq!(w.to_string(), "F^-2 G^3");
        assert_eq!("".parse::<Word>().unwrap(), Word::identity());
        assert_eq!("e".parse::<Word>().unwrap().to_string(), "e");
        assert_eq!("F G^0 F".parse::<Word>().unwrap().to_string(), "F^2");
        assert!("H^2".parse::<Word>().is_err());
        assert!("F^x".parse::<Word>().is_err());
        let red = "F G G^-1 F^-1 G".parse::<Word>().unwrap().reduced();
        assert_eq!(red.to_string(), "G");
        assert_eq!(w.inverse().to_string(), "G^-3 F^2");
    }

    #[test]
    fn fixed_endpoints() {
        let a = action(4);
        assert_eq!(a.f().eval(&LocalPoint::Zero).unwrap(), LocalPoint::Zero);
        assert_eq!(a.f().eval(&LocalPoint::One).unwrap(), LocalPoint::One);
        assert_eq!(a.g().eval_inverse(&LocalPoint::One).unwrap(), LocalPoint::One);
    }

    #[test]
    fn f_sends_a_to_next_a() {
        let a = action(4);
        let m = a.model();
        let (lo, hi) = a.f().domain();
        for n in lo..=hi {
            let p = m.point_a(n + 1).unwrap();
            assert_eq!(a.f().eval(&p).unwrap(), m.point_a(n).unwrap(), "n={n}");
            assert_eq!(a.f().eval_inverse(&m.point_a(n).unwrap()).unwrap(), p);
        }
    }

    #[test]
    fn f_carries_chain_intervals_exactly() {
        let a = action(5);
        let m = a.model();
        for k in 1..5u32 {
            let chain = m.chain(k).unwrap();
            for w in chain.windows(2) {
                let (lo0, hi0) = w[0].endpoints();
                let (lo1, hi1) = w[1].endpoints();
                assert_eq!(a.f().eval(&lo0).unwrap(), lo1);
                assert_eq!(a.f().eval(&hi0).unwrap(), hi1);
            }
        }
    }

    #[test]
    fn g_examples() {
        let a = action(4);
        let m = a.model();
        for k in 1..=4 {
            assert_eq!(a.g().eval(&m.point_u(k).unwrap()).unwrap(), m.point_v(k).unwrap());
            assert_eq!(a.g().eval_inverse(&m.point_v(k).unwrap()).unwrap(), m.point_u(k).unwrap());
            assert_eq!(a.g().eval(&m.point_b(k).unwrap()).unwrap(), m.point_b(k).unwrap());
            assert_eq!(a.g().eval(&m.point_c(k).unwrap()).unwrap(), m.point_c(k).unwrap());
            assert_eq!(a.g().derivative(&m.point_b(k).unwrap()).unwrap(), 1.0);
            let l = m.level(k).unwrap();
            let gap_mid = LocalPoint::interior(l.n, (l.c + 1.0) / 2.0);
            assert_eq!(a.g().eval(&gap_mid).unwrap(), gap_mid);
            assert_eq!(a.g().derivative(&gap_mid).unwrap(), 1.0);
        }
        let plain = LocalPoint::interior(5, 0.37);
        assert_eq!(a.g().eval(&plain).unwrap(), plain);
    }

    #[test]
    fn out_of_domain_reports_needed_depth() {
        let a = action(3);
        let (_, hi) = a.model().n_range();
        let err = a.f().eval(&LocalPoint::interior(hi + 5, 0.5)).unwrap_err();
        assert!(matches!(&err, LabError::Range(msg) if msg.contains("k_max >= 4")), "{err}");
        let (lo, _) = a.model().n_range();
        let err = a.f().eval(&LocalPoint::interior(lo, 0.5)).unwrap_err();
        assert!(matches!(&err, LabError::Range(msg) if msg.contains("n_neg")), "{err}");
        assert!(a.f().eval_inverse(&LocalPoint::interior(hi, 0.5)).is_err());
    }

    #[test]
    fn word_escape_reports_prefix() {
        let a = action(2);
        let p = a.model().point_u(1).unwrap();
        let w = Word::power(Letter::FInv, 100);
        match a.apply_word(&w, &p) {
            Err(LabError::Escape { prefix_len, .. }) => assert!(prefix_len > 0 && prefix_len < 100),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn identity_and_inverse_pair_words() {
        let a = action(4);
        let p = LocalPoint::interior(7, 0.3141);
        assert_eq!(a.apply_word(&Word::identity(), &p).unwrap(), p);
        let q = a.apply_word(&"F F^-1".parse().unwrap(), &p).unwrap();
        let (LocalPoint::Interior { n, s }, LocalPoint::Interior { s: s0, .. }) = (q, p) else {
            panic!()
        };
        assert_eq!(n, 7);
        assert!((s - s0).abs() < 1e-11);
    }

    #[test]
    fn knots_are_c1() {
        let a = action(4);
        for map in [a.f(), a.g()] {
            for k in map.knots() {
                let l = map.derivative_one_sided(&k, Side::Left).unwrap();
                let r = map.derivative_one_sided(&k, Side::Right).unwrap();
                assert_eq!(l, 1.0);
                assert_eq!(r, 1.0);
            }
        }
    }

    #[test]
    fn graph_sampling() {
        let a = action(3);
        let rows = a.sample_graph(MapKind::F, 50).unwrap();
        assert_eq!(rows.len(), 50);
        for w in rows.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
        assert!(rows.iter().all(|r| r.2 > 0.0));
        assert!(a.sample_graph(MapKind::G, 1).is_err());
    }
}
