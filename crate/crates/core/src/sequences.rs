//! Submultiplicative minorants of divergent sequences.
//!
//! Given `a_n > 1` with `a_n → ∞`, [`build_envelope`] produces `b_n` with
//! `1 < b_n ≤ a_n`, `b_n → ∞` and `b_{n+m} ≤ b_n·b_m`. The construction is
//! blockwise: with `c = inf a_n`, block boundaries are
//!
//! ```text
//! i_0 = 1,   i_ν = max{2·i_{ν-1}, min{n : a_m ≥ c^ν for all m ≥ n}}
//! ```
//!
//! and `b_n = c^{max(ν,1)}` on `[i_ν, i_{ν+1})`, `b_0 = 1`. The first block
//! uses `c` rather than `c^0 = 1` so that `b_n > 1` holds for every `n ≥ 1`.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{le_tol, Scalar};

#[derive(Clone, Debug, PartialEq)]
enum GrowthRule<S> {
    Log,
    Constant(S),
    Linear,
    Explicit { values: Vec<S>, suffix_min: Vec<S> },
}

/// A sequence `(a_n)_{n≥1}` together with its tail-infimum index
/// `θ ↦ min{n : a_m ≥ θ for all m ≥ n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSequence<S> {
    rule: GrowthRule<S>,
}

impl<S: Scalar> GrowthSequence<S> {
    /// `a_n = ln(n + 2)`.
    pub fn log() -> Self {
        Self { rule: GrowthRule::Log }
    }

    /// `a_n = v` for every `n`.
    pub fn constant(v: S) -> Self {
        Self {
            rule: GrowthRule::Constant(v),
        }
    }

    /// `a_n = n + 1`.
    pub fn linear() -> Self {
        Self {
            rule: GrowthRule::Linear,
        }
    }

    /// Finite list `a_1, …, a_L`, treated as the whole sequence.
    pub fn explicit(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("explicit sequence is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Argument(format!("a_{} is NaN", i + 1)));
        }
        let mut suffix_min = values.clone();
        for i in (0..suffix_min.len().saturating_sub(1)).rev() {
            suffix_min[i] = suffix_min[i].min(suffix_min[i + 1]);
        }
        Ok(Self {
            rule: GrowthRule::Explicit { values, suffix_min },
        })
    }

    /// One value per CSV row (the last column is used when a row has several).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let Some(field) = record.iter().next_back() else {
                continue;
            };
            match field.parse::<S>() {
                Ok(v) => values.push(v),
                Err(_) if row == 0 => continue,
                Err(_) => {
                    return Err(Error::Parse(format!(
                        "{}: row {} is not numeric: {field:?}",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
        Self::explicit(values)
    }

    /// Length of an explicit list; `None` for closed forms.
    pub fn len_limit(&self) -> Option<usize> {
        match &self.rule {
            GrowthRule::Explicit { values, .. } => Some(values.len()),
            _ => None,
        }
    }

    /// True when `a_n → ∞` is known from the closed form.
    pub fn is_divergent(&self) -> bool {
        matches!(self.rule, GrowthRule::Log | GrowthRule::Linear)
    }

    /// `a_n` for `n ≥ 1` (within the list length for explicit sequences).
    pub fn value(&self, n: usize) -> Option<S> {
        if n == 0 {
            return None;
        }
        match &self.rule {
            GrowthRule::Log => Some(S::from_count(n + 2).ln()),
            GrowthRule::Constant(v) => Some(*v),
            GrowthRule::Linear => Some(S::from_count(n + 1)),
            GrowthRule::Explicit { values, .. } => values.get(n - 1).copied(),
        }
    }

    /// `inf_n a_n`.
    pub fn infimum(&self) -> S {
        match &self.rule {
            GrowthRule::Log => S::lit(3.0).ln(),
            GrowthRule::Constant(v) => *v,
            GrowthRule::Linear => S::lit(2.0),
            GrowthRule::Explicit { suffix_min, .. } => suffix_min[0],
        }
    }

    /// Least `n ≥ 1` such that `a_m ≥ threshold` for every `m ≥ n`, or `None`
    /// when no such index exists.
    pub fn tail_index(&self, threshold: S) -> Option<usize> {
        match &self.rule {
            GrowthRule::Constant(v) => (*v >= threshold).then_some(1),
            GrowthRule::Explicit { suffix_min, .. } => {
                suffix_min.iter().position(|&v| v >= threshold).map(|i| i + 1)
            }
            GrowthRule::Log => first_crossing(threshold, |n| self.value(n).unwrap(), |t| {
                t.exp() - 2.0
            }),
            GrowthRule::Linear => {
                first_crossing(threshold, |n| self.value(n).unwrap(), |t| t - 1.0)
            }
        }
    }
}

/// First `n ≥ 1` with `a(n) ≥ threshold` for an increasing `a`, seeded with a
/// real-valued guess of the inverse and corrected against `a` itself so the
/// answer agrees with the scalar evaluation bit for bit.
fn first_crossing<S: Scalar>(
    threshold: S,
    a: impl Fn(usize) -> S,
    inverse_guess: impl Fn(f64) -> f64,
) -> Option<usize> {
    const FAR: f64 = 1e15;
    let guess = inverse_guess(threshold.to_f64()?);
    if !(guess < FAR) {
        return Some(FAR as usize);
    }
    let mut n = guess.ceil().max(1.0) as usize;
    while n > 1 && a(n - 1) >= threshold {
        n -= 1;
    }
    while a(n) < threshold {
        n += 1;
    }
    Some(n)
}

/// The submultiplicative minorant, materialized on `0..=horizon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope<S> {
    c: S,
    /// `i_0 = 1 < i_1 < …`; the last entry may exceed the horizon.
    blocks: Vec<usize>,
    /// `b` on block `ν`, i.e. `c^{max(ν,1)}`.
    block_values: Vec<S>,
    /// The last block extends to infinity because its successor's crossing
    /// set is empty (bounded input).
    saturated: bool,
    values: Vec<S>,
}

impl<S: Scalar> Envelope<S> {
    /// Wraps an explicit list `b_1, …, b_H`; `b_0 = 1` is prepended. No
    /// property is assumed; use the verifiers.
    pub fn from_values(b: Vec<S>) -> Self {
        let c = b.first().copied().unwrap_or_else(S::one);
        let mut values = Vec::with_capacity(b.len() + 1);
        values.push(S::one());
        values.extend(b);
        Self {
            c,
            blocks: Vec::new(),
            block_values: Vec::new(),
            saturated: false,
            values,
        }
    }

    pub fn c(&self) -> S {
        self.c
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block_values(&self) -> &[S] {
        &self.block_values
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// `b_n` for `n ≤ horizon`.
    pub fn get(&self, n: usize) -> Option<S> {
        self.values.get(n).copied()
    }

    /// Block index `ν` containing `n ≥ 1`, for envelopes built by
    /// [`build_envelope`].
    pub fn block_of(&self, n: usize) -> Option<usize> {
        if n == 0 || self.blocks.is_empty() || n > self.horizon() {
            return None;
        }
        Some(self.blocks.partition_point(|&i| i <= n) - 1)
    }

    /// `b_0, …, b_horizon`.
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `b_0 = 1` and `b` nondecreasing on the horizon.
    pub fn is_monotone(&self) -> bool {
        self.values[0] == S::one() && self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Builds the blockwise submultiplicative minorant of `a` on `1..=horizon`.
///
/// For bounded inputs the crossing set for some `c^ν` is empty; the last
/// nonempty block is then extended indefinitely (the envelope is marked
/// saturated and no longer diverges, mirroring the input).
pub fn build_envelope<S: Scalar>(a: &GrowthSequence<S>, horizon: usize) -> Result<Envelope<S>> {
    if horizon == 0 {
        return Err(Error::Horizon {
            horizon,
            reason: "cannot place i_1".into(),
        });
    }
    if let Some(len) = a.len_limit() {
        if horizon > len {
            return Err(Error::Horizon {
                horizon,
                reason: format!("explicit sequence only has {len} entries"),
            });
        }
    }
    for n in 1..=horizon {
        let v = a.value(n).expect("value within horizon");
        if !(v > S::one()) {
            return Err(Error::Hypothesis(format!("a_{n} = {v} is not > 1")));
        }
    }

    let c = a.infimum();
    let mut blocks = vec![1usize];
    let mut block_values = vec![c];
    let mut power = S::one();
    let mut saturated = false;
    loop {
        power = power * c;
        let Some(crossing) = a.tail_index(power) else {
            saturated = true;
            break;
        };
        let prev = *blocks.last().unwrap();
        let start = prev.saturating_mul(2).max(crossing);
        blocks.push(start);
        block_values.push(power);
        if start > horizon {
            break;
        }
    }

    let mut values = Vec::with_capacity(horizon + 1);
    values.push(S::one());
    let mut nu = 0;
    for n in 1..=horizon {
        while nu + 1 < blocks.len() && blocks[nu + 1] <= n {
            nu += 1;
        }
        values.push(block_values[nu]);
    }

    Ok(Envelope {
        c,
        blocks,
        block_values,
        saturated,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmultiplicativeReport<S> {
    pub limit: usize,
    pub pairs_checked: usize,
    /// `(n, m, b_{n+m}, b_n·b_m)` of the first violation in `(n+m, n)` order.
    pub first_violation: Option<(usize, usize, S, S)>,
}

impl<S> SubmultiplicativeReport<S> {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `b_{n+m} ≤ b_n·b_m` for all `n, m ≥ 1` with `n + m ≤ limit`, with
/// relative tolerance `tol`.
pub fn verify_submultiplicative<S: Scalar>(
    e: &Envelope<S>,
    limit: usize,
    tol: S,
) -> Result<SubmultiplicativeReport<S>> {
    if limit > e.horizon() {
        return Err(Error::Argument(format!(
            "limit {limit} exceeds envelope horizon {}",
            e.horizon()
        )));
    }
    let b = e.values();
    let mut pairs_checked = 0;
    for total in 2..=limit {
        for n in 1..=total / 2 {
            let m = total - n;
            pairs_checked += 1;
            let rhs = b[n] * b[m];
            if !le_tol(b[total], rhs, tol * rhs.abs().max(S::one())) {
                return Ok(SubmultiplicativeReport {
                    limit,
                    pairs_checked,
                    first_violation: Some((n, m, b[total], rhs)),
                });
            }
        }
    }
    Ok(SubmultiplicativeReport {
        limit,
        pairs_checked,
        first_violation: None,
    })
}

/// Parsed growth-sequence specification: `log`, `const:<v>`, `linear`,
/// `list:<csv path>`.
pub fn parse_growth_spec<S: Scalar>(spec: &str) -> Result<GrowthSequence<S>> {
    match spec.split_once(':') {
        None if spec == "log" => Ok(GrowthSequence::log()),
        None if spec == "linear" => Ok(GrowthSequence::linear()),
        Some(("const", v)) => v
            .trim()
            .parse::<S>()
            .map(GrowthSequence::constant)
            .map_err(|_| Error::Parse(format!("not a number in {spec:?}"))),
        Some(("list", path)) if !path.is_empty() => GrowthSequence::from_csv(path),
        _ => Err(Error::Parse(format!(
            "unknown sequence spec {spec:?}; expected log, const:<v>, linear or list:<path>"
        ))),
    }
}
