//! The sup-metric `d̂(x, y) = sup{d(f x, f y) / b_n : n ≥ 0, f ∈ F^n}`.
//!
//! On a finite carrier the supremum is attained and computed exactly. Each
//! distinct map table is evaluated once, at the least level producing it,
//! which is sound because `b` is nondecreasing. The scan stops when the
//! closure stabilizes (no later level contains a new table) or when every
//! pair is settled: its orbits coincide under a single generator, or the
//! tail bound `diam_d / b_{n+1}` no longer exceeds its running maximum.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{ClosureLevels, FunctionFamily, MapTable, DEFAULT_TABLE_BUDGET};
use crate::metricspace::{admits_modulus, lipschitz_estimate, FiniteMetricSpace};
use crate::moduli::{Modulus, ModulusSequence};
use crate::scalar::{le_tol, Scalar};
use crate::sequences::Envelope;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions<S> {
    pub table_budget: usize,
    pub tol: S,
}

impl<S: Scalar> Default for BuildOptions<S> {
    fn default() -> Self {
        Self {
            table_budget: DEFAULT_TABLE_BUDGET,
            tol: S::metric_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A level produced no new table, so every later `F^n` repeats tables
    /// already counted with a weight at least as large.
    ClosureStabilized,
    /// Every pair was settled by orbit coincidence or the tail bound.
    AllPairsSettled,
}

/// Why the scan could stop without examining further levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate<S> {
    pub reason: StopReason,
    /// Last level whose tables were examined.
    pub stop_level: usize,
    pub pairs: usize,
    pub settled_by_orbit: usize,
    pub settled_by_tail: usize,
    /// Pairs still open when the closure stabilized.
    pub closed_by_stabilization: usize,
    /// `diam_d / b_{stop_level + 1}`, when that envelope value exists.
    pub tail_bound: Option<S>,
    /// Least positive entry of `d̂`.
    pub min_positive: Option<S>,
    pub tables_examined: usize,
}

#[derive(Clone, Debug)]
pub struct Remetrization<S> {
    base: FiniteMetricSpace<S>,
    envelope: Envelope<S>,
    levels: ClosureLevels,
    dhat: FiniteMetricSpace<S>,
    c: S,
    certificate: Certificate<S>,
}

impl<S: Scalar> Remetrization<S> {
    pub fn base(&self) -> &FiniteMetricSpace<S> {
        &self.base
    }

    pub fn envelope(&self) -> &Envelope<S> {
        &self.envelope
    }

    pub fn levels(&self) -> &ClosureLevels {
        &self.levels
    }

    pub fn dhat(&self) -> &FiniteMetricSpace<S> {
        &self.dhat
    }

    pub fn c(&self) -> S {
        self.c
    }

    pub fn stop_level(&self) -> usize {
        self.certificate.stop_level
    }

    pub fn certificate(&self) -> &Certificate<S> {
        &self.certificate
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PairState {
    Open,
    Orbit,
    Tail,
}

/// Builds `d̂` for `family` over `base`.
///
/// Requires `diam base < c`, and an envelope with `b_0 = 1` that is
/// nondecreasing. Runs out of envelope values with
/// [`Error::EnvelopeHorizon`], reporting the `b` value that would settle
/// every open pair.
pub fn build_dhat<S: Scalar>(
    base: &FiniteMetricSpace<S>,
    family: &FunctionFamily,
    envelope: &Envelope<S>,
    c: S,
    opts: &BuildOptions<S>,
) -> Result<Remetrization<S>> {
    let n = base.len();
    if family.carrier_size() != n {
        return Err(Error::Argument(format!(
            "family acts on {} points but the metric space has {n}",
            family.carrier_size()
        )));
    }
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("bound constant must be positive, got {c}")));
    }
    if !(base.diameter() < c) {
        return Err(Error::Argument(format!(
            "base diameter {} is not below c = {c}; apply the bounding transform first",
            base.diameter()
        )));
    }
    if envelope.get(0) != Some(S::one()) {
        return Err(Error::Argument("envelope must start with b_0 = 1".into()));
    }
    if !envelope.is_monotone() {
        return Err(Error::Argument(
            "envelope is not nondecreasing; minimal-level deduplication would be unsound".into(),
        ));
    }

    let single = family.is_single_generator();
    let diam = base.diameter();
    let mut levels = ClosureLevels::new(family, opts.table_budget);
    let mut running: Vec<S> = (0..n * n).map(|k| base.d(k / n, k % n)).collect();
    let mut state = vec![PairState::Open; n * n];
    for i in 0..n {
        for j in 0..=i {
            state[i * n + j] = PairState::Tail;
        }
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let mut open = pairs;

    let settle = |running: &[S], state: &mut [PairState], b_next: Option<S>, open: &mut usize| {
        if let Some(b) = b_next {
            let bound = diam / b;
            for k in 0..n * n {
                if state[k] == PairState::Open && bound <= running[k] {
                    state[k] = PairState::Tail;
                    *open -= 1;
                }
            }
        }
    };
    settle(&running, &mut state, envelope.get(1), &mut open);

    let mut level = 0;
    let reason = loop {
        if open == 0 {
            break StopReason::AllPairsSettled;
        }
        if !levels.advance()? {
            break StopReason::ClosureStabilized;
        }
        level += 1;
        let b = match envelope.get(level) {
            Some(b) => b,
            None => {
                let worst = (0..n * n)
                    .filter(|&k| state[k] == PairState::Open)
                    .map(|k| running[k])
                    .fold(S::infinity(), S::min);
                let needed = if worst > S::zero() { diam / worst } else { S::infinity() };
                return Err(Error::EnvelopeHorizon {
                    horizon: envelope.horizon(),
                    level,
                    needed_b: needed.to_f64().unwrap_or(f64::INFINITY),
                });
            }
        };
        let tables: Vec<&MapTable> = levels.level(level).iter().map(|&id| levels.table(id)).collect();
        running
            .par_chunks_mut(n)
            .zip(state.par_chunks_mut(n))
            .enumerate()
            .for_each(|(i, (row, st))| {
                for j in i + 1..n {
                    if st[j] != PairState::Open {
                        continue;
                    }
                    let mut best = row[j];
                    for t in &tables {
                        let v = base.d(t[i], t[j]) / b;
                        if v > best {
                            best = v;
                        }
                    }
                    row[j] = best;
                    if single && tables[0][i] == tables[0][j] {
                        st[j] = PairState::Orbit;
                    }
                }
            });
        open = state.iter().filter(|&&s| s == PairState::Open).count();
        settle(&running, &mut state, envelope.get(level + 1), &mut open);
    };

    let settled_by_orbit = state.iter().filter(|&&s| s == PairState::Orbit).count();
    let mut dist = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            dist[i * n + j] = running[i * n + j];
            dist[j * n + i] = running[i * n + j];
        }
    }
    let dhat = FiniteMetricSpace::from_flat(base.labels().to_vec(), dist)?;
    let certificate = Certificate {
        reason,
        stop_level: level,
        pairs,
        settled_by_orbit,
        settled_by_tail: pairs - open - settled_by_orbit,
        closed_by_stabilization: open,
        tail_bound: envelope.get(level + 1).map(|b| diam / b),
        min_positive: dhat.min_positive(),
        tables_examined: levels.total_tables(),
    };
    Ok(Remetrization {
        base: base.clone(),
        envelope: envelope.clone(),
        levels,
        dhat,
        c,
        certificate,
    })
}

/// Per-level check of the modulus-admission conclusion under `d̂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConclusionRow<S> {
    pub m: usize,
    pub b_m: S,
    /// `|F^m|` as distinct tables.
    pub maps: usize,
    /// Tables whose least level is `m`.
    pub minimal_maps: usize,
    /// Largest `d̂(f x, f y) / d̂(x, y)` over `f ∈ F^m`.
    pub worst_ratio: S,
    pub witness: Option<(usize, usize)>,
    /// Same maximum restricted to tables of least level `m`.
    pub minimal_worst_ratio: S,
    /// `d̂(f x, f y) ≤ b_m d̂(x, y) + tol` for all `f ∈ F^m`.
    pub within_envelope: bool,
    /// `d̂(f x, f y) ≤ c + tol`.
    pub within_c: bool,
    /// `f` admits the supplied modulus of index `m` under `d̂`.
    pub admits_modulus: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConclusionReport<S> {
    pub rows: Vec<ConclusionRow<S>>,
}

impl<S> ConclusionReport<S> {
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.within_envelope && r.within_c && r.admits_modulus)
    }
}

struct LevelStats<S> {
    worst: S,
    witness: Option<(usize, usize)>,
    within_envelope: bool,
    admits: bool,
}

fn level_stats<S: Scalar>(
    dhat: &FiniteMetricSpace<S>,
    maps: &[&MapTable],
    envelope_bound: &Modulus<S>,
    omega: &Modulus<S>,
    tol: S,
) -> Result<LevelStats<S>> {
    let mut stats = LevelStats {
        worst: S::zero(),
        witness: None,
        within_envelope: true,
        admits: true,
    };
    for f in maps {
        let est = lipschitz_estimate(dhat, dhat, f)?;
        if stats.witness.is_none() || est.ratio > stats.worst {
            stats.worst = est.ratio;
            stats.witness = Some(est.witness);
        }
        stats.within_envelope &= admits_modulus(dhat, dhat, f, envelope_bound, tol)?.passed;
        stats.admits &= admits_modulus(dhat, dhat, f, omega, tol)?.passed;
    }
    Ok(stats)
}

/// For `m = 1..=n_max` checks every `f ∈ F^m` against `b_m`, against `c`,
/// and against the modulus `moduli.get(m)`; the chain of inequalities holds
/// for the whole of `F^m`, not only for tables of least level `m`.
pub fn verify_conclusion<S: Scalar>(
    r: &Remetrization<S>,
    moduli: &ModulusSequence<S>,
    n_max: usize,
    tol: S,
) -> Result<ConclusionReport<S>> {
    if r.dhat.len() < 2 {
        return Err(Error::Argument("conclusion check needs at least two points".into()));
    }
    let mut closure = r.levels.clone();
    let exact = closure.exact_levels(n_max)?;
    let within_c = le_tol(r.dhat.diameter(), r.c, tol);
    let mut rows = Vec::with_capacity(n_max);
    for m in 1..=n_max {
        let omega = moduli.get(m)?;
        let b_m = r.envelope.get(m).ok_or_else(|| Error::Horizon {
            horizon: r.envelope.horizon(),
            reason: format!("no envelope value for m = {m}"),
        })?;
        let bound = Modulus::linear(b_m);
        let maps: Vec<&MapTable> = exact[m].iter().map(|&id| closure.table(id)).collect();
        let minimal: Vec<&MapTable> = closure.level(m).iter().map(|&id| closure.table(id)).collect();
        let all = level_stats(&r.dhat, &maps, &bound, &omega, tol)?;
        let min_worst = minimal
            .iter()
            .map(|f| lipschitz_estimate(&r.dhat, &r.dhat, f).map(|e| e.ratio))
            .try_fold(S::zero(), |acc, x| x.map(|x| acc.max(x)))?;
        rows.push(ConclusionRow {
            m,
            b_m,
            maps: maps.len(),
            minimal_maps: minimal.len(),
            worst_ratio: all.worst,
            witness: all.witness,
            minimal_worst_ratio: min_worst,
            within_envelope: all.within_envelope,
            within_c,
            admits_modulus: all.admits,
        });
    }
    Ok(ConclusionReport { rows })
}

/// Lipschitz constant under `d̂` of one group element, with its word length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementBound<S> {
    pub table: Vec<usize>,
    pub word_length: usize,
    pub lipschitz: S,
    pub b: S,
    pub within_envelope: bool,
}

/// Every distinct table in the computed closure against `b_{m(g)}`, where
/// `m(g)` is its least level. Meaningful once the closure has stabilized.
pub fn element_bounds<S: Scalar>(r: &Remetrization<S>, tol: S) -> Result<Vec<ElementBound<S>>> {
    let mut closure = r.levels.clone();
    closure.extend_to(usize::MAX)?;
    (0..closure.total_tables())
        .map(|id| {
            let g = closure.table(id);
            let m = closure.min_level_of(id);
            let b = r.envelope.get(m).ok_or_else(|| Error::Horizon {
                horizon: r.envelope.horizon(),
                reason: format!("no envelope value for word length {m}"),
            })?;
            let lipschitz = if r.dhat.len() < 2 {
                S::zero()
            } else {
                lipschitz_estimate(&r.dhat, &r.dhat, g)?.ratio
            };
            Ok(ElementBound {
                table: g.to_vec(),
                word_length: m,
                lipschitz,
                b,
                within_envelope: le_tol(lipschitz, b, tol),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceRow<S> {
    pub eps: S,
    /// First `n` with `diam_d ≤ b_n ε`, or `None` past the envelope horizon.
    pub n_cut: Option<usize>,
    pub delta: S,
    /// `d(x, y) < δ ⇒ d̂(x, y) ≤ ε` on every pair.
    pub holds: bool,
    pub counterexample: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport<S> {
    /// `d ≤ d̂` entrywise.
    pub base_dominated: bool,
    pub rows: Vec<EquivalenceRow<S>>,
}

impl<S> EquivalenceReport<S> {
    pub fn passed(&self) -> bool {
        self.base_dominated && self.rows.iter().all(|r| r.holds)
    }
}

/// Two-sided comparability of `d` and `d̂`. For each `ε`, levels `n ≥ N`
/// contribute at most `diam_d / b_N ≤ ε`, so `δ` is taken from the
/// equicontinuity of `F^0 ∪ … ∪ F^{N-1}` under `d`: the least `d(x, y)`
/// over pairs some member of that union spreads beyond `ε`.
pub fn equivalence_probe<S: Scalar>(
    r: &Remetrization<S>,
    eps_grid: &[S],
    tol: S,
) -> Result<EquivalenceReport<S>> {
    let base = &r.base;
    let n = base.len();
    let diam = base.diameter();
    let mut closure = r.levels.clone();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > S::zero()) {
            return Err(Error::Argument(format!("eps must be positive, got {eps}")));
        }
        let n_cut = (0..=r.envelope.horizon()).find(|&k| diam <= r.envelope.values()[k] * eps);
        match n_cut {
            Some(cut) if cut > 0 => closure.extend_to(cut - 1)?,
            Some(_) => {}
            None => closure.extend_to(usize::MAX)?,
        }
        let limit = match n_cut {
            Some(cut) => cut,
            None if closure.is_stabilized() => closure.depth() + 1,
            None => {
                return Err(Error::Horizon {
                    horizon: r.envelope.horizon(),
                    reason: format!("no level with diam <= b_n * {eps}"),
                })
            }
        };
        let maps: Vec<&MapTable> = (0..limit.min(closure.depth() + 1))
            .flat_map(|k| closure.level(k).iter().map(|&id| closure.table(id)))
            .collect();
        let mut delta = S::infinity();
        for i in 0..n {
            for j in i + 1..n {
                if maps.iter().any(|f| base.d(f[i], f[j]) > eps) {
                    delta = delta.min(base.d(i, j));
                }
            }
        }
        let mut counterexample = None;
        'scan: for i in 0..n {
            for j in i + 1..n {
                if base.d(i, j) < delta && !le_tol(r.dhat.d(i, j), eps, tol) {
                    counterexample = Some((i, j));
                    break 'scan;
                }
            }
        }
        rows.push(EquivalenceRow {
            eps,
            n_cut,
            delta,
            holds: counterexample.is_none(),
            counterexample,
        });
    }
    Ok(EquivalenceReport {
        base_dominated: base.dominated_by(&r.dhat, tol),
        rows,
    })
}

/// A pair `(2^{-j}, 2^{-j+1})` expanded by `T^n` under `d̂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefutationWitness<S> {
    pub n: usize,
    pub j: u32,
    pub pair: (usize, usize),
    pub image: (usize, usize),
    pub before: S,
    pub after: S,
    pub ratio: S,
    /// `ratio − 1`.
    pub margin: S,
    /// `b_n`, which the ratio still respects.
    pub b_n: S,
}

fn grid_level(points: usize) -> Option<u32> {
    let m = points.checked_sub(1)?;
    (m.is_power_of_two()).then(|| m.trailing_zeros())
}

/// Searches pairs `(2^{-j}, 2^{-j+1})` with `j ≤ L` a multiple of `n` for
/// one that `T^n` expands under `d̂`, where `T` is the single generator of
/// `r` acting on the dyadic grid of level `L`. Returns the witness with the
/// largest ratio.
pub fn tent_one_lipschitz_refutation<S: Scalar>(
    r: &Remetrization<S>,
    n: usize,
) -> Result<RefutationWitness<S>> {
    if n == 0 {
        return Err(Error::Argument("iteration count must be positive".into()));
    }
    let gens = r.levels.generators();
    if gens.len() != 1 {
        return Err(Error::Argument("refutation expects a single generator".into()));
    }
    let level = grid_level(r.dhat.len()).ok_or_else(|| {
        Error::Argument(format!("{} points is not a dyadic grid", r.dhat.len()))
    })?;
    let tn = gens[0].power(n);
    let b_n = r.envelope.get(n).ok_or_else(|| Error::Horizon {
        horizon: r.envelope.horizon(),
        reason: format!("no envelope value for n = {n}"),
    })?;
    let mut best: Option<RefutationWitness<S>> = None;
    let mut j = n as u32;
    while j <= level {
        let x = 1usize << (level - j);
        let y = 2 * x;
        let before = r.dhat.d(x, y);
        let after = r.dhat.d(tn[x], tn[y]);
        if before > S::zero() {
            let ratio = after / before;
            if ratio > S::one() && best.as_ref().is_none_or(|b| ratio > b.ratio) {
                best = Some(RefutationWitness {
                    n,
                    j,
                    pair: (x, y),
                    image: (tn[x], tn[y]),
                    before,
                    after,
                    ratio,
                    margin: ratio - S::one(),
                    b_n,
                });
            }
        }
        j += n as u32;
    }
    best.ok_or(Error::GridTooCoarse {
        required_level: level + n as u32,
    })
}

/// `d̂(0, 1) ≤ ω_n(t_n)` with `t_n = d̂(2^{-n}, 2^{-(n-1)})`, since `T^n`
/// sends that pair to `(1, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TentWitnessRow<S> {
    pub n: usize,
    pub t_n: S,
    pub omega_t_n: S,
    pub d01: S,
    pub holds: bool,
}

pub fn tent_witness_inequalities<S: Scalar>(
    r: &Remetrization<S>,
    moduli: &ModulusSequence<S>,
    n_max: usize,
    tol: S,
) -> Result<Vec<TentWitnessRow<S>>> {
    let level = grid_level(r.dhat.len()).ok_or_else(|| {
        Error::Argument(format!("{} points is not a dyadic grid", r.dhat.len()))
    })?;
    if n_max as u64 > level as u64 {
        return Err(Error::GridTooCoarse {
            required_level: n_max as u32,
        });
    }
    let last = 1usize << level;
    let d01 = r.dhat.d(0, last);
    (1..=n_max)
        .map(|n| {
            let x = 1usize << (level as usize - n);
            let t_n = r.dhat.d(x, 2 * x);
            let omega_t_n = moduli.get(n)?.eval(t_n)?;
            Ok(TentWitnessRow {
                n,
                t_n,
                omega_t_n,
                d01,
                holds: le_tol(d01, omega_t_n, tol),
            })
        })
        .collect()
}
