//! Moduli of continuity.
//!
//! A modulus of continuity is a map `ω: [0, ∞) → [0, ∞)` with
//!
//! * `ω(0) = 0` and `ω(t) → 0` as `t → 0⁺` (MC1),
//! * `ω` nondecreasing (MC2),
//! * `t ↦ ω(t)/t` nonincreasing on `(0, ∞)` (MC3).
//!
//! The derivative at zero `ω'(0) = lim_{t→0⁺} ω(t)/t` exists under MC3 and
//! bounds `ω` from above by `ω'(0)·t`. Moduli are subadditive.
//!
//! This module evaluates the representable kinds, audits MC1–MC3 on grids,
//! and implements the two sequence-level tools needed for the main
//! construction: the semi-decision of the liminf condition and the
//! extraction of simple minorants `φ_n(t) = min{α_n t, c}`.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{le_tol, Scalar};

/// Piecewise-linear modulus given by a grid of `(t, ω(t))` pairs.
///
/// Between grid points the value is interpolated linearly. Past the last grid
/// point the final segment is continued with its slope clamped to
/// `[0, ω_last / t_last]`, which keeps MC2 and MC3 valid beyond the table if
/// they hold on it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TabulatedModulus<S> {
    points: Vec<(S, S)>,
    tail_slope: S,
}

impl<S: Scalar> TabulatedModulus<S> {
    pub fn new(mut points: Vec<(S, S)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("tabulated modulus needs at least one point".into()));
        }
        for &(t, w) in &points {
            if !(t.is_finite() && w.is_finite()) || t < S::zero() || w < S::zero() {
                return Err(Error::Argument(format!(
                    "tabulated modulus entries must be finite and nonnegative, got ({t}, {w})"
                )));
            }
        }
        if points.windows(2).any(|p| p[0].0 >= p[1].0) {
            return Err(Error::Argument(
                "tabulated modulus grid must be strictly increasing in t".into(),
            ));
        }
        if points[0].0 > S::zero() {
            points.insert(0, (S::zero(), S::zero()));
        }
        let tail_slope = Self::clamped_tail(&points);
        Ok(Self { points, tail_slope })
    }

    fn clamped_tail(points: &[(S, S)]) -> S {
        let n = points.len();
        if n < 2 {
            return S::zero();
        }
        let (t0, w0) = points[n - 2];
        let (t1, w1) = points[n - 1];
        let slope = (w1 - w0) / (t1 - t0);
        let ratio_cap = if t1 > S::zero() { w1 / t1 } else { S::zero() };
        slope.max(S::zero()).min(ratio_cap)
    }

    pub fn points(&self) -> &[(S, S)] {
        &self.points
    }

    pub fn tail_slope(&self) -> S {
        self.tail_slope
    }

    /// Reads a two-column CSV of `t,ω(t)` rows. A non-numeric first row is
    /// treated as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut points = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "{}: row {} has {} columns, expected 2",
                    path.display(),
                    row + 1,
                    record.len()
                )));
            }
            let t = record[0].parse::<S>();
            let w = record[1].parse::<S>();
            match (t, w) {
                (Ok(t), Ok(w)) => points.push((t, w)),
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    fn value(&self, t: S) -> S {
        let pts = &self.points;
        let last = pts[pts.len() - 1];
        if t >= last.0 {
            return last.1 + self.tail_slope * (t - last.0);
        }
        // first index with grid t > query
        let hi = pts.partition_point(|&(x, _)| x <= t);
        let (t0, w0) = pts[hi - 1];
        let (t1, w1) = pts[hi];
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    fn first_slope(&self) -> S {
        if self.points.len() < 2 {
            return self.tail_slope;
        }
        let (t0, w0) = self.points[0];
        let (t1, w1) = self.points[1];
        (w1 - w0) / (t1 - t0)
    }

    fn capped(&self, cap: S) -> Self {
        let mut out: Vec<(S, S)> = Vec::with_capacity(self.points.len() + 1);
        let mut crossed = false;
        for (i, &(t, w)) in self.points.iter().enumerate() {
            if w <= cap {
                out.push((t, w));
                continue;
            }
            if i > 0 {
                let (tp, wp) = self.points[i - 1];
                if wp < cap {
                    let tc = tp + (cap - wp) * (t - tp) / (w - wp);
                    out.push((tc, cap));
                }
            }
            if out.last().is_none_or(|&(_, w)| w < cap) {
                out.push((t, cap));
            }
            crossed = true;
            break;
        }
        let tail_slope = if crossed {
            S::zero()
        } else {
            let last = out[out.len() - 1];
            if self.tail_slope > S::zero() {
                let tc = last.0 + (cap - last.1) / self.tail_slope;
                if last.1 < cap {
                    out.push((tc, cap));
                }
            }
            S::zero()
        };
        Self {
            points: out,
            tail_slope,
        }
    }
}

/// An evaluable modulus of continuity.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus<S> {
    /// `min{slope·t, cap}`; `cap` may be `+∞`.
    Simple { slope: S, cap: S },
    /// `t·ln(index + 2)`.
    LinearLog { index: usize },
    /// `slope·t`.
    Linear { slope: S },
    Tabulated(TabulatedModulus<S>),
}

impl<S: Scalar> Modulus<S> {
    pub fn simple(slope: S, cap: S) -> Self {
        Modulus::Simple { slope, cap }
    }

    pub fn linear(slope: S) -> Self {
        Modulus::Linear { slope }
    }

    pub fn linear_log(index: usize) -> Self {
        Modulus::LinearLog { index }
    }

    pub fn identity() -> Self {
        Modulus::Linear { slope: S::one() }
    }

    pub fn tabulated(points: Vec<(S, S)>) -> Result<Self> {
        TabulatedModulus::new(points).map(Modulus::Tabulated)
    }

    pub fn eval(&self, t: S) -> Result<S> {
        if t.is_nan() || t < S::zero() {
            return Err(Error::Domain(format!("modulus evaluated at negative t = {t}")));
        }
        Ok(self.at(t))
    }

    /// Evaluation without the domain check; `t` must be nonnegative.
    pub(crate) fn at(&self, t: S) -> S {
        match self {
            Modulus::Simple { slope, cap } => (*slope * t).min(*cap),
            Modulus::LinearLog { index } => t * log_shift(*index),
            Modulus::Linear { slope } => *slope * t,
            Modulus::Tabulated(tab) => tab.value(t),
        }
    }

    pub fn derivative_at_zero(&self) -> S {
        match self {
            Modulus::Simple { slope, cap } => {
                if *cap > S::zero() {
                    *slope
                } else {
                    S::zero()
                }
            }
            Modulus::LinearLog { index } => log_shift(*index),
            Modulus::Linear { slope } => *slope,
            Modulus::Tabulated(tab) => tab.first_slope(),
        }
    }

    /// `sup_t ω(t)`, possibly `+∞`.
    pub fn supremum(&self) -> S {
        match self {
            Modulus::Simple { slope, cap } => {
                if *slope > S::zero() {
                    *cap
                } else {
                    S::zero()
                }
            }
            Modulus::LinearLog { .. } => S::infinity(),
            Modulus::Linear { slope } => {
                if *slope > S::zero() {
                    S::infinity()
                } else {
                    S::zero()
                }
            }
            Modulus::Tabulated(tab) => {
                if tab.tail_slope > S::zero() {
                    S::infinity()
                } else {
                    tab.points
                        .iter()
                        .map(|p| p.1)
                        .fold(S::zero(), |a, b| a.max(b))
                }
            }
        }
    }

    /// Pointwise minimum with the constant `cap`.
    pub fn bound_cap(&self, cap: S) -> Result<Self> {
        if cap.is_nan() || cap <= S::zero() {
            return Err(Error::Argument(format!("cap must be positive, got {cap}")));
        }
        Ok(match self {
            Modulus::Simple { slope, cap: own } => Modulus::simple(*slope, own.min(cap)),
            Modulus::LinearLog { .. } | Modulus::Linear { .. } => {
                Modulus::simple(self.derivative_at_zero(), cap)
            }
            Modulus::Tabulated(tab) => Modulus::Tabulated(tab.capped(cap)),
        })
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, Modulus::Simple { .. })
    }
}

impl<S: Scalar> fmt::Display for Modulus<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Simple { slope, cap } => write!(f, "min{{{slope}·t, {cap}}}"),
            Modulus::LinearLog { index } => write!(f, "t·ln({})", index + 2),
            Modulus::Linear { slope } => write!(f, "{slope}·t"),
            Modulus::Tabulated(tab) => write!(f, "table[{} points]", tab.points.len()),
        }
    }
}

fn log_shift<S: Scalar>(n: usize) -> S {
    S::from_count(n + 2).ln()
}

/// Result of one grid audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck<S> {
    pub passed: bool,
    /// For MC1 a single point (repeated); otherwise the offending pair.
    pub witness: Option<(S, S)>,
}

impl<S> ConditionCheck<S> {
    fn pass() -> Self {
        Self {
            passed: true,
            witness: None,
        }
    }

    fn fail(a: S, b: S) -> Self {
        Self {
            passed: false,
            witness: Some((a, b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport<S> {
    pub mc1: ConditionCheck<S>,
    pub mc2: ConditionCheck<S>,
    pub mc3: ConditionCheck<S>,
    pub subadditive: ConditionCheck<S>,
}

impl<S> McReport<S> {
    pub fn all_passed(&self) -> bool {
        self.mc1.passed && self.mc2.passed && self.mc3.passed && self.subadditive.passed
    }
}

/// Audits MC1–MC3 and subadditivity of `m` on a sorted grid of positive
/// points. MC2 and MC3 are checked on consecutive grid points (enough for
/// chains); subadditivity on every ordered pair.
pub fn check_mc<S: Scalar>(m: &Modulus<S>, grid: &[S], tol: S) -> Result<McReport<S>> {
    if grid.is_empty() {
        return Err(Error::Argument("audit grid is empty".into()));
    }
    if grid.iter().any(|&t| !(t > S::zero()) || !t.is_finite()) {
        return Err(Error::Argument("audit grid entries must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("audit grid must be sorted".into()));
    }

    let values: Vec<S> = grid.iter().map(|&t| m.at(t)).collect();

    let zero = m.at(S::zero());
    let mc1 = if zero.abs() > tol || !m.derivative_at_zero().is_finite() {
        ConditionCheck::fail(S::zero(), S::zero())
    } else {
        ConditionCheck::pass()
    };

    let mut mc2 = ConditionCheck::pass();
    let mut mc3 = ConditionCheck::pass();
    for i in 1..grid.len() {
        let (x, y) = (grid[i - 1], grid[i]);
        let (wx, wy) = (values[i - 1], values[i]);
        if mc2.passed && !le_tol(wx, wy, tol) {
            mc2 = ConditionCheck::fail(x, y);
        }
        if mc3.passed && !le_tol(wy / y, wx / x, tol) {
            mc3 = ConditionCheck::fail(x, y);
        }
    }

    let mut subadditive = ConditionCheck::pass();
    'outer: for (i, &x) in grid.iter().enumerate() {
        for (j, &y) in grid.iter().enumerate().skip(i) {
            if !le_tol(m.at(x + y), values[i] + values[j], tol) {
                subadditive = ConditionCheck::fail(x, y);
                break 'outer;
            }
        }
    }

    Ok(McReport {
        mc1,
        mc2,
        mc3,
        subadditive,
    })
}

type ModulusRule<S> = Arc<dyn Fn(usize) -> Modulus<S> + Send + Sync>;

#[derive(Clone)]
enum SequenceRule<S> {
    LogLinear,
    Constant(Modulus<S>),
    Explicit(Vec<Modulus<S>>),
    Rule(ModulusRule<S>),
}

/// A sequence `(ω_n)_{n≥1}` materializable up to `horizon`.
///
/// `monotone` records that `ω_n(t)` is nondecreasing in `n` for every `t`,
/// which lets tail conditions of the form "for all n ≥ N" be decided by the
/// first crossing.
#[derive(Clone)]
pub struct ModulusSequence<S> {
    rule: SequenceRule<S>,
    horizon: usize,
    monotone: bool,
}

impl<S: Scalar> ModulusSequence<S> {
    /// `ω_n(t) = t·ln(n+2)`.
    pub fn log_linear(horizon: usize) -> Self {
        Self {
            rule: SequenceRule::LogLinear,
            horizon,
            monotone: true,
        }
    }

    pub fn constant(m: Modulus<S>, horizon: usize) -> Self {
        Self {
            rule: SequenceRule::Constant(m),
            horizon,
            monotone: true,
        }
    }

    /// Explicit list; entry `k` is `ω_{k+1}`. Not assumed monotone.
    pub fn explicit(list: Vec<Modulus<S>>) -> Self {
        Self {
            horizon: list.len(),
            rule: SequenceRule::Explicit(list),
            monotone: false,
        }
    }

    /// Closed-form rule. `monotone` is the caller's declaration that
    /// `ω_n(t)` is nondecreasing in `n`.
    pub fn from_fn<F>(horizon: usize, monotone: bool, rule: F) -> Self
    where
        F: Fn(usize) -> Modulus<S> + Send + Sync + 'static,
    {
        Self {
            rule: SequenceRule::Rule(Arc::new(rule)),
            horizon,
            monotone,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        if let SequenceRule::Explicit(list) = &self.rule {
            self.horizon = horizon.min(list.len());
        } else {
            self.horizon = horizon;
        }
        self
    }

    /// `ω_n` for `1 ≤ n ≤ horizon`.
    pub fn get(&self, n: usize) -> Result<Modulus<S>> {
        if n == 0 || n > self.horizon {
            return Err(Error::Argument(format!(
                "modulus index {n} outside 1..={}",
                self.horizon
            )));
        }
        Ok(match &self.rule {
            SequenceRule::LogLinear => Modulus::linear_log(n),
            SequenceRule::Constant(m) => m.clone(),
            SequenceRule::Explicit(list) => list[n - 1].clone(),
            SequenceRule::Rule(f) => f(n),
        })
    }
}

impl<S: Scalar> fmt::Debug for ModulusSequence<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match &self.rule {
            SequenceRule::LogLinear => "log-linear".to_string(),
            SequenceRule::Constant(m) => format!("constant({m})"),
            SequenceRule::Explicit(l) => format!("explicit[{}]", l.len()),
            SequenceRule::Rule(_) => "rule".to_string(),
        };
        f.debug_struct("ModulusSequence")
            .field("rule", &rule)
            .field("horizon", &self.horizon)
            .field("monotone", &self.monotone)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Refuted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiminfRow<S> {
    pub t: S,
    /// `inf_{n ∈ window} ω_n(t)`.
    pub window_inf: S,
    pub argmin: usize,
    pub exceeds_c: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionIvReport<S> {
    pub c: S,
    pub window: (usize, usize),
    pub rows: Vec<LiminfRow<S>>,
    /// First `n ≤ window end` with `ω_n'(0) ≤ 1`, with that derivative.
    pub derivative_failure: Option<(usize, S)>,
    /// `min_t inf_n ω_n(t)` over the grid and window: every `c` strictly
    /// below it is supported by this sample.
    pub largest_supported_c: S,
    pub verdict: Verdict,
    pub note: &'static str,
}

const FINITE_WINDOW_NOTE: &str =
    "a finite window can refute or support the liminf condition but never prove it";

/// Semi-decision of condition (iv) on a finite window: for each `t` compares
/// `inf_{n ∈ window} ω_n(t)` against `c`, and checks `ω_n'(0) > 1` for every
/// `n` up to the window end.
pub fn check_condition_iv<S: Scalar>(
    seq: &ModulusSequence<S>,
    c: S,
    t_grid: &[S],
    window: RangeInclusive<usize>,
) -> Result<ConditionIvReport<S>> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo == 0 || lo > hi || hi > seq.horizon() {
        return Err(Error::Argument(format!(
            "degenerate window {lo}..={hi} (horizon {})",
            seq.horizon()
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > S::zero())) {
        return Err(Error::Argument("t grid must be nonempty and positive".into()));
    }
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("c must be positive, got {c}")));
    }

    let mut derivative_failure = None;
    for n in 1..=hi {
        let d = seq.get(n)?.derivative_at_zero();
        if !(d > S::one()) {
            derivative_failure = Some((n, d));
            break;
        }
    }

    let window_moduli: Vec<Modulus<S>> = (lo..=hi).map(|n| seq.get(n)).collect::<Result<_>>()?;
    let rows: Vec<LiminfRow<S>> = t_grid
        .iter()
        .map(|&t| {
            let (argmin, window_inf) = window_moduli
                .iter()
                .enumerate()
                .map(|(k, m)| (lo + k, m.at(t)))
                .fold((lo, S::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best });
            LiminfRow {
                t,
                window_inf,
                argmin,
                exceeds_c: window_inf > c,
            }
        })
        .collect();

    let largest_supported_c = rows
        .iter()
        .map(|r| r.window_inf)
        .fold(S::infinity(), |a, b| a.min(b));
    let verdict = if derivative_failure.is_none() && rows.iter().all(|r| r.exceeds_c) {
        Verdict::Supported
    } else {
        Verdict::Refuted
    };

    Ok(ConditionIvReport {
        c,
        window: (lo, hi),
        rows,
        derivative_failure,
        largest_supported_c,
        verdict,
        note: FINITE_WINDOW_NOTE,
    })
}

type ThresholdOracle<S> = Arc<dyn Fn(usize, S) -> Option<usize> + Send + Sync>;

/// How the tail clause "for all n ≥ N_m: c < ω_n(c/m)" is certified.
#[derive(Clone)]
pub enum TailWitness<S> {
    /// The sequence is monotone in `n`; the first crossing is the threshold.
    Monotone,
    /// Caller-supplied oracle `(m, c) ↦ N_m`. `None` means it cannot certify.
    Threshold(ThresholdOracle<S>),
}

impl<S> fmt::Debug for TailWitness<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailWitness::Monotone => f.write_str("Monotone"),
            TailWitness::Threshold(_) => f.write_str("Threshold(..)"),
        }
    }
}

/// Simple minorants of a modulus sequence.
#[derive(Clone, Debug)]
pub struct PhiConstruction<S> {
    pub c: S,
    /// `½·min_n sup φ_n`.
    pub c_tilde: S,
    /// `N_1 < N_2 < …`, all within the horizon.
    pub thresholds: Vec<usize>,
    phis: Vec<Modulus<S>>,
    blocks: Vec<Option<usize>>,
}

impl<S: Scalar> PhiConstruction<S> {
    pub fn horizon(&self) -> usize {
        self.phis.len()
    }

    /// `φ_n` for `1 ≤ n ≤ horizon`.
    pub fn phi(&self, n: usize) -> Option<&Modulus<S>> {
        n.checked_sub(1).and_then(|i| self.phis.get(i))
    }

    /// Block index `m` with `N_m ≤ n < N_{m+1}`, or `None` when `n < N_1`.
    pub fn block_of(&self, n: usize) -> Option<usize> {
        n.checked_sub(1).and_then(|i| self.blocks.get(i).copied().flatten())
    }

    pub fn phis(&self) -> &[Modulus<S>] {
        &self.phis
    }

    pub fn to_sequence(&self) -> ModulusSequence<S> {
        ModulusSequence::explicit(self.phis.clone())
    }
}

const CUT_GRID_DEPTH: i32 = 100;

/// Builds simple moduli `φ_n ≤ ω_n` with `φ_n'(0) > 1`, `φ_n'(0) → ∞` and
/// `sup φ_n` bounded away from zero.
///
/// For `n` in block `[N_m, N_{m+1})` the minorant is
/// `φ_n(t) = min{ω_n(c/m)·(m/c)·t, c}`, where `N_m` is the least index from
/// which `c < ω_n(c/m)`. Indices below `N_1` get cut minorants
/// `min{(ω_n(t*)/t*)·t, ω_n(t*)}` at the largest `t* = c·2^{-j}` with
/// `ω_n(t*)/t* > 1`.
pub fn construct_phi<S: Scalar>(
    seq: &ModulusSequence<S>,
    c: S,
    horizon: usize,
    tail: &TailWitness<S>,
) -> Result<PhiConstruction<S>> {
    if !(c > S::zero()) || !c.is_finite() {
        return Err(Error::Argument(format!("c must be positive, got {c}")));
    }
    if horizon == 0 || horizon > seq.horizon() {
        return Err(Error::Argument(format!(
            "phi horizon {horizon} must lie in 1..={}",
            seq.horizon()
        )));
    }
    if matches!(tail, TailWitness::Monotone) && !seq.is_monotone() {
        return Err(Error::Argument(
            "monotone tail certification requested for a sequence not declared monotone".into(),
        ));
    }

    let omegas: Vec<Modulus<S>> = (1..=horizon).map(|n| seq.get(n)).collect::<Result<_>>()?;
    for (i, w) in omegas.iter().enumerate() {
        let d = w.derivative_at_zero();
        if !(d > S::one()) {
            return Err(Error::ConditionViolated(format!(
                "derivative at zero of omega_{} is {d}, not > 1",
                i + 1
            )));
        }
    }

    let crossing = |m: usize| -> Option<usize> {
        match tail {
            TailWitness::Monotone => {
                let t = c / S::from_count(m);
                omegas.iter().position(|w| c < w.at(t)).map(|i| i + 1)
            }
            TailWitness::Threshold(oracle) => oracle(m, c),
        }
    };

    let mut thresholds: Vec<usize> = Vec::new();
    for m in 1.. {
        let found = crossing(m);
        let n_m = match (found, thresholds.last()) {
            (None, None) => return Err(Error::HorizonExhausted { m, horizon }),
            (None, Some(_)) if matches!(tail, TailWitness::Monotone) => break,
            (None, Some(_)) => return Err(Error::HorizonExhausted { m, horizon }),
            (Some(n), None) => n,
            (Some(n), Some(&prev)) => n.max(prev + 1),
        };
        if n_m > horizon {
            if thresholds.is_empty() {
                return Err(Error::HorizonExhausted { m, horizon });
            }
            break;
        }
        thresholds.push(n_m);
    }

    let mut phis = Vec::with_capacity(horizon);
    let mut blocks = Vec::with_capacity(horizon);
    for (i, w) in omegas.iter().enumerate() {
        let n = i + 1;
        let m = thresholds.partition_point(|&nm| nm <= n);
        if m == 0 {
            phis.push(cut_minorant(w, c, n)?);
            blocks.push(None);
        } else {
            let mm = S::from_count(m);
            let slope = w.at(c / mm) * mm / c;
            phis.push(Modulus::simple(slope, c));
            blocks.push(Some(m));
        }
    }

    let min_sup = phis
        .iter()
        .map(Modulus::supremum)
        .fold(S::infinity(), |a, b| a.min(b));
    let half = S::lit(0.5);

    Ok(PhiConstruction {
        c,
        c_tilde: half * min_sup,
        thresholds,
        phis,
        blocks,
    })
}

fn cut_minorant<S: Scalar>(w: &Modulus<S>, c: S, n: usize) -> Result<Modulus<S>> {
    let two = S::lit(2.0);
    for j in 0..=CUT_GRID_DEPTH {
        let t = c / two.powi(j);
        if !(t > S::zero()) {
            break;
        }
        let ratio = w.at(t) / t;
        if ratio > S::one() {
            return Ok(Modulus::simple(ratio, w.at(t)));
        }
    }
    Err(Error::ConditionViolated(format!(
        "no grid point t = c·2^-j (j ≤ {CUT_GRID_DEPTH}) with omega_{n}(t)/t > 1"
    )))
}

/// A parsed modulus specification.
///
/// Grammar: `simple:<alpha>:<beta>` (`beta` may be `inf`), `loglin`,
/// `linear:<slope>`, `table:<csv path>`. Every kind except `loglin` denotes
/// a constant sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum ModulusSpec<S> {
    LogLinear,
    Fixed(Modulus<S>),
}

impl<S: Scalar> ModulusSpec<S> {
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| -> Result<S> {
            match s.trim() {
                "inf" | "+inf" | "infinity" => Ok(S::infinity()),
                v => v
                    .parse::<S>()
                    .map_err(|_| Error::Parse(format!("not a number: {v:?} in {spec:?}"))),
            }
        };
        match parts.as_slice() {
            ["loglin"] => Ok(ModulusSpec::LogLinear),
            ["simple", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                if !(a >= S::zero()) || !a.is_finite() || !(b >= S::zero()) {
                    return Err(Error::Parse(format!("simple modulus needs alpha, beta >= 0: {spec:?}")));
                }
                Ok(ModulusSpec::Fixed(Modulus::simple(a, b)))
            }
            ["linear", s] => {
                let s = num(s)?;
                if !(s >= S::zero()) || !s.is_finite() {
                    return Err(Error::Parse(format!("linear slope must be >= 0: {spec:?}")));
                }
                Ok(ModulusSpec::Fixed(Modulus::linear(s)))
            }
            ["table", ..] if spec.len() > "table:".len() => {
                let path = &spec["table:".len()..];
                Ok(ModulusSpec::Fixed(Modulus::Tabulated(TabulatedModulus::from_csv(path)?)))
            }
            _ => Err(Error::Parse(format!(
                "unknown modulus spec {spec:?}; expected simple:<a>:<b>, loglin, linear:<s> or table:<path>"
            ))),
        }
    }

    pub fn to_sequence(&self, horizon: usize) -> ModulusSequence<S> {
        match self {
            ModulusSpec::LogLinear => ModulusSequence::log_linear(horizon),
            ModulusSpec::Fixed(m) => ModulusSequence::constant(m.clone(), horizon),
        }
    }
}
