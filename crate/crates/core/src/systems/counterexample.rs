//! The family `F_k` on `X = ℕ₁ × ℝ`, handled in closed form.
//!
//! Dilations `f_n` scale line `n` by `n`; contractions `f_{n,m}` swap lines
//! `n < m` while scaling by `m^{-(k-2)/2}`. Under the metric
//!
//! ```text
//! d((a,b),(c,d)) = min{1/a, |b − d|}                      a = c
//!                  |a − c| + min{1/a, |b|} + min{1/c, |d|}  a ≠ c
//! ```
//!
//! `F_k^k` is equicontinuous while `F_k^{k+1}` is not. For `k < 2` the
//! family is realized through `F_2`: `F_1 := F_2^2` and `F_0 := F_2^3`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CexPoint {
    pub a: u64,
    pub b: f64,
}

impl CexPoint {
    pub fn new(a: u64, b: f64) -> Result<Self> {
        if a == 0 {
            return Err(Error::Argument("line index must be at least 1".into()));
        }
        if !b.is_finite() {
            return Err(Error::Argument(format!("coordinate must be finite, got {b}")));
        }
        Ok(Self { a, b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CexGen {
    Dilation(u64),
    Contraction(u64, u64),
}

impl CexGen {
    pub fn dilation(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("dilation index must be at least 1".into()));
        }
        Ok(Self::Dilation(n))
    }

    pub fn contraction(n: u64, m: u64) -> Result<Self> {
        if n == 0 || n >= m {
            return Err(Error::Argument(format!(
                "contraction needs 1 <= n < m, got n = {n}, m = {m}"
            )));
        }
        Ok(Self::Contraction(n, m))
    }

    /// The index `m` that counts towards `M` when this generator changes `U`.
    fn top_index(self) -> u64 {
        match self {
            Self::Dilation(n) => n,
            Self::Contraction(_, m) => m,
        }
    }

    /// Applies the generator to a line index, returning the new line and the
    /// factor applied to the second coordinate.
    fn act(self, k: u32, line: u64) -> (u64, f64) {
        match self {
            Self::Dilation(n) if line == n => (line, n as f64),
            Self::Dilation(_) => (line, 1.0),
            Self::Contraction(n, m) if line == n => (m, contraction_scale(k, m)),
            Self::Contraction(n, m) if line == m => (n, contraction_scale(k, m)),
            Self::Contraction(..) => (line, 1.0),
        }
    }
}

impl fmt::Display for CexGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dilation(n) => write!(f, "f_{n}"),
            Self::Contraction(n, m) => write!(f, "f_{n},{m}"),
        }
    }
}

/// Scaling parameter actually used: `k` itself for `k ≥ 2`, otherwise 2.
pub fn effective_k(k: u32) -> u32 {
    k.max(2)
}

/// `m^{-(k-2)/2}`.
pub fn contraction_scale(k: u32, m: u64) -> f64 {
    let k = effective_k(k);
    match k {
        2 => 1.0,
        4 => 1.0 / m as f64,
        _ => (m as f64).powf(-((k - 2) as f64) / 2.0),
    }
}

pub fn cex_apply(k: u32, gen: CexGen, p: CexPoint) -> CexPoint {
    let (a, s) = gen.act(k, p.a);
    CexPoint { a, b: p.b * s }
}

pub fn cex_metric(p: CexPoint, q: CexPoint) -> f64 {
    let (p, q) = if p.a <= q.a { (p, q) } else { (q, p) };
    let inv = |a: u64| 1.0 / a as f64;
    if p.a == q.a {
        inv(p.a).min((p.b - q.b).abs())
    } else {
        p.a.abs_diff(q.a) as f64 + inv(p.a).min(p.b.abs()) + inv(q.a).min(q.b.abs())
    }
}

/// Open interval `{line} × (lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerticalInterval {
    pub line: u64,
    pub lo: f64,
    pub hi: f64,
}

impl VerticalInterval {
    /// `diam_d = min{1/line, hi − lo}`.
    pub fn diameter(&self) -> f64 {
        (1.0 / self.line as f64).min(self.hi - self.lo)
    }

    fn apply(self, k: u32, gen: CexGen) -> Self {
        let (line, s) = gen.act(k, self.line);
        Self {
            line,
            lo: self.lo * s,
            hi: self.hi * s,
        }
    }
}

/// Applies `word[0]` first.
pub fn apply_word(k: u32, word: &[CexGen], u: VerticalInterval) -> VerticalInterval {
    word.iter().fold(u, |acc, &g| acc.apply(k, g))
}

/// `g_m = f_{1,m} ∘ f_m^{k−1} ∘ f_{1,m}` as a word, first letter first. For
/// `k = 1` it is padded with `f_1 = id` to lie in `F_2^4 = F_1^2`.
pub fn gm_word(k: u32, m: u64) -> Result<Vec<CexGen>> {
    let c = CexGen::contraction(1, m)?;
    let mut word = vec![c];
    word.extend(std::iter::repeat_n(CexGen::Dilation(m), effective_k(k) as usize - 1));
    word.push(c);
    if k == 1 {
        word.push(CexGen::Dilation(1));
    }
    Ok(word)
}

/// Image of `{1} × (−δ, δ)` under `g_m`.
pub fn cex_gm_image(k: u32, m: u64, delta: f64) -> Result<VerticalInterval> {
    if m <= 1 {
        return Err(Error::Argument(format!("g_m needs m > 1, got {m}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::Argument(format!("delta must be nonnegative, got {delta}")));
    }
    let u = VerticalInterval {
        line: 1,
        lo: -delta,
        hi: delta,
    };
    Ok(apply_word(k, &gm_word(k, m)?, u))
}

/// The three exhaustive cases of the equicontinuity argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CexCase {
    /// Image on a line `n ≥ N`, whose whole `d`-diameter is at most `ε`.
    FarLine,
    /// Image on a line `n < N` with `M > N`.
    LargeIndex,
    /// Image on a line `n < N` with `M ≤ N`.
    SmallIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordCheck {
    pub word: String,
    pub image: VerticalInterval,
    pub diameter: f64,
    /// Largest index among letters that changed the current set.
    pub top_index: u64,
    pub case: CexCase,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquicontinuityCertificate {
    pub k: u32,
    pub point: CexPoint,
    pub eps: f64,
    pub n_bound: u64,
    pub delta: f64,
    pub words: Vec<WordCheck>,
    pub case_counts: [usize; 3],
}

impl EquicontinuityCertificate {
    pub fn passed(&self) -> bool {
        self.words.iter().all(|w| w.passed)
    }
}

/// Length of the words in `F_k^k`, counted in `F_2` letters when `k < 2`.
pub fn certificate_word_length(k: u32) -> usize {
    match k {
        0 => 0,
        1 => 2,
        _ => k as usize,
    }
}

/// The bounded alphabet `{f_1..f_B} ∪ {f_{n,m} : n < m ≤ B}`.
pub fn alphabet(bound: u64) -> Vec<CexGen> {
    let mut out: Vec<CexGen> = (1..=bound).map(CexGen::Dilation).collect();
    for m in 2..=bound {
        for n in 1..m {
            out.push(CexGen::Contraction(n, m));
        }
    }
    out
}

/// Every word of the given length over `alphabet`, in lexicographic order.
pub fn all_words(alphabet: &[CexGen], len: usize) -> Vec<Vec<CexGen>> {
    let mut words = vec![Vec::new()];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&g| {
                    let mut v = w.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
    }
    words
}

/// `count` words drawn uniformly with replacement, sorted and deduplicated.
pub fn sample_words<R: Rng>(rng: &mut R, alphabet: &[CexGen], len: usize, count: usize) -> Vec<Vec<CexGen>> {
    let mut out: Vec<Vec<CexGen>> = (0..count)
        .map(|_| (0..len).map(|_| *alphabet.choose(rng).expect("nonempty alphabet")).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

fn word_string(word: &[CexGen]) -> String {
    if word.is_empty() {
        return "id".into();
    }
    word.iter().rev().map(ToString::to_string).collect::<Vec<_>>().join(" ∘ ")
}

/// For `N = max{a, ⌈1/ε⌉}` and `δ = ε/(2N^k)`, computes `diam_d f(U)` for
/// `U = {a} × (b − δ, b + δ)` and every sampled `f ∈ F_k^k`, and classifies
/// it into the three cases.
pub fn cex_equicontinuity_certificate(
    k: u32,
    point: CexPoint,
    eps: f64,
    words: &[Vec<CexGen>],
) -> Result<EquicontinuityCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let len = certificate_word_length(k);
    let n_bound = point.a.max((1.0 / eps).ceil() as u64);
    let exponent = if k < 2 { len as i32 } else { k as i32 };
    let delta = eps / (2.0 * (n_bound as f64).powi(exponent));
    let u = VerticalInterval {
        line: point.a,
        lo: point.b - delta,
        hi: point.b + delta,
    };
    let mut checks = Vec::with_capacity(words.len());
    let mut counts = [0usize; 3];
    for word in words {
        if word.len() != len {
            return Err(Error::Argument(format!(
                "word {} has length {}, expected {len}",
                word_string(word),
                word.len()
            )));
        }
        let mut cur = u;
        let mut top = 0;
        for &g in word {
            let next = cur.apply(k, g);
            if next != cur {
                top = top.max(g.top_index());
            }
            cur = next;
        }
        let case = if cur.line >= n_bound {
            CexCase::FarLine
        } else if top > n_bound {
            CexCase::LargeIndex
        } else {
            CexCase::SmallIndex
        };
        counts[case as usize] += 1;
        let diameter = cur.diameter();
        checks.push(WordCheck {
            word: word_string(word),
            image: cur,
            diameter,
            top_index: top,
            case,
            passed: diameter <= eps,
        });
    }
    Ok(EquicontinuityCertificate {
        k,
        point,
        eps,
        n_bound,
        delta,
        words: checks,
        case_counts: counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessRow {
    pub delta: f64,
    pub m: u64,
    pub image: VerticalInterval,
    /// `min{1, 2mδ}`, the `d`-diameter of `g_m({1} × (−δ, δ))`.
    pub diameter: f64,
    pub exceeds_eps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonEquicontinuityReport {
    pub k: u32,
    pub eps: f64,
    pub rows: Vec<WitnessRow>,
    pub note: &'static str,
}

impl NonEquicontinuityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.exceeds_eps)
    }
}

/// For each `δ`, the least `m > 1` (starting from `⌊ε/(2δ)⌋ + 1`) with
/// `min{1, 2mδ} > ε`, so `g_m ∈ F_k^{k+1}` spreads `{1} × (−δ, δ)` beyond
/// `ε` at the point `(1, 0)`.
pub fn cex_nonequicontinuity_witness(k: u32, eps: f64, deltas: &[f64]) -> Result<NonEquicontinuityReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(Error::Argument(format!("delta must be positive, got {delta}")));
        }
        let mut m = ((eps / (2.0 * delta)).floor() as u64 + 1).max(2);
        while !(2.0 * m as f64 * delta).min(1.0).gt(&eps) {
            m += 1;
        }
        let image = cex_gm_image(k, m, delta)?;
        let diameter = image.diameter();
        rows.push(WitnessRow {
            delta,
            m,
            image,
            diameter,
            exceeds_eps: diameter > eps,
        });
    }
    Ok(NonEquicontinuityReport {
        k,
        eps,
        rows,
        note: "certified for the metric d only; the statement for every compatible metric is not finitely checkable",
    })
}
