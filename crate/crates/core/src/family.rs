//! Function families on finite carriers and their composition levels.
//!
//! A map on a carrier of `N` points is an index table of length `N`. The
//! family `F` is given by generator tables; `F^n` is the set of all
//! compositions of exactly `n` generators and `F^0 = {id}`.
//!
//! [`ClosureLevels`] enumerates distinct tables breadth-first, each at the
//! least word length producing it. For inverse-closed families (groups
//! generated by bijections, with `S = {h_i, id, h_i^{-1}}`) that least length
//! is the word-length metric.

use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metricspace::FiniteMetricSpace;
use crate::scalar::Scalar;

/// Default cap on the number of distinct tables a closure may hold.
pub const DEFAULT_TABLE_BUDGET: usize = 1_000_000;

/// A total map on `0..len`, as a zero-based index array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct MapTable(Vec<usize>);

impl MapTable {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        let n = entries.len();
        if let Some(x) = entries.iter().position(|&y| y >= n) {
            return Err(Error::Argument(format!(
                "map sends {x} to {} outside a carrier of {n} points",
                entries[x]
            )));
        }
        Ok(Self(entries))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn constant(n: usize, value: usize) -> Self {
        assert!(value < n, "constant value outside carrier");
        Self(vec![value; n])
    }

    /// `self ∘ inner`, i.e. `x ↦ self[inner[x]]`.
    pub fn after(&self, inner: &MapTable) -> MapTable {
        MapTable(inner.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        self.0.iter().all(|&x| !std::mem::replace(&mut seen[x], true))
    }

    pub fn inverse(&self) -> Option<MapTable> {
        if !self.is_bijection() {
            return None;
        }
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Some(MapTable(inv))
    }

    /// `self` composed with itself `k` times; `k = 0` gives the identity.
    pub fn power(&self, k: usize) -> MapTable {
        let mut out = MapTable::identity(self.0.len());
        for _ in 0..k {
            out = self.after(&out);
        }
        out
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for MapTable {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Named generators on a common carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionFamily {
    carrier_size: usize,
    generators: Vec<(String, MapTable)>,
    inverse_closed: bool,
}

impl FunctionFamily {
    /// In inverse-closed mode every generator must be a bijection; the
    /// identity and all inverses are added to the effective generating set.
    pub fn new(
        carrier_size: usize,
        generators: Vec<(String, Vec<usize>)>,
        inverse_closed: bool,
    ) -> Result<Self> {
        if carrier_size == 0 {
            return Err(Error::Argument("carrier must be nonempty".into()));
        }
        let mut out = Vec::with_capacity(generators.len());
        for (name, table) in generators {
            if table.len() != carrier_size {
                return Err(Error::Argument(format!(
                    "generator {name:?} has {} entries, carrier has {carrier_size}",
                    table.len()
                )));
            }
            let table = MapTable::new(table)
                .map_err(|e| Error::Argument(format!("generator {name:?}: {e}")))?;
            if inverse_closed && !table.is_bijection() {
                return Err(Error::Argument(format!(
                    "generator {name:?} is not a bijection but the family is inverse-closed"
                )));
            }
            out.push((name, table));
        }
        Ok(Self {
            carrier_size,
            generators: out,
            inverse_closed,
        })
    }

    pub fn carrier_size(&self) -> usize {
        self.carrier_size
    }

    pub fn generators(&self) -> &[(String, MapTable)] {
        &self.generators
    }

    pub fn is_inverse_closed(&self) -> bool {
        self.inverse_closed
    }

    /// The generating set actually composed: the given tables, plus the
    /// identity and inverses in inverse-closed mode, without duplicates.
    pub fn effective_generators(&self) -> Vec<MapTable> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut push = |t: MapTable| {
            if seen.insert(t.clone()) {
                out.push(t);
            }
        };
        for (_, g) in &self.generators {
            push(g.clone());
        }
        if self.inverse_closed {
            push(MapTable::identity(self.carrier_size));
            for (_, g) in &self.generators {
                push(g.inverse().expect("validated bijection"));
            }
        }
        out
    }

    /// One generator and no inverse closure: `F^n = {g^n}`.
    pub fn is_single_generator(&self) -> bool {
        !self.inverse_closed && self.effective_generators().len() == 1
    }
}

/// Word length of a table within computed levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WordLength {
    Reached(usize),
    /// Not produced within the levels computed so far (and the closure has
    /// not stabilized).
    Unreached,
    /// The closure stabilized without producing the table.
    NotGenerated,
}

/// Distinct tables grouped by the least word length producing them.
#[derive(Clone, Debug)]
pub struct ClosureLevels {
    carrier_size: usize,
    generators: Vec<MapTable>,
    tables: Vec<MapTable>,
    min_level: Vec<usize>,
    index: HashMap<MapTable, usize>,
    levels: Vec<Vec<usize>>,
    stabilized: bool,
    budget: usize,
}

impl ClosureLevels {
    /// Level 0 only.
    pub fn new(family: &FunctionFamily, budget: usize) -> Self {
        let id = MapTable::identity(family.carrier_size());
        let mut index = HashMap::new();
        index.insert(id.clone(), 0);
        let generators = family.effective_generators();
        Self {
            carrier_size: family.carrier_size(),
            stabilized: generators.is_empty(),
            generators,
            tables: vec![id],
            min_level: vec![0],
            index,
            levels: vec![vec![0]],
            budget,
        }
    }

    /// Computes the next level. Returns `false` once the closure has
    /// stabilized (the new level came out empty, so every later `F^n`
    /// consists of tables already seen).
    pub fn advance(&mut self) -> Result<bool> {
        if self.stabilized {
            return Ok(false);
        }
        let n = self.levels.len();
        let mut fresh = Vec::new();
        let frontier = self.levels[n - 1].clone();
        for &f in &frontier {
            for g in &self.generators {
                let h = g.after(&self.tables[f]);
                if self.index.contains_key(&h) {
                    continue;
                }
                if self.tables.len() >= self.budget {
                    return Err(Error::TableBudget {
                        budget: self.budget,
                    });
                }
                let id = self.tables.len();
                self.index.insert(h.clone(), id);
                self.tables.push(h);
                self.min_level.push(n);
                fresh.push(id);
            }
        }
        if fresh.is_empty() {
            self.stabilized = true;
            return Ok(false);
        }
        self.levels.push(fresh);
        Ok(true)
    }

    /// Advances until `max_n` levels beyond 0 exist or the closure stabilizes.
    pub fn extend_to(&mut self, max_n: usize) -> Result<()> {
        while self.depth() < max_n && self.advance()? {}
        Ok(())
    }

    pub fn carrier_size(&self) -> usize {
        self.carrier_size
    }

    pub fn generators(&self) -> &[MapTable] {
        &self.generators
    }

    /// Highest nonempty level computed.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn is_stabilized(&self) -> bool {
        self.stabilized
    }

    /// Ids of tables first appearing at level `n` (empty past the depth).
    pub fn level(&self, n: usize) -> &[usize] {
        self.levels.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn table(&self, id: usize) -> &MapTable {
        &self.tables[id]
    }

    pub fn min_level_of(&self, id: usize) -> usize {
        self.min_level[id]
    }

    pub fn total_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn id_of(&self, table: &MapTable) -> Option<usize> {
        self.index.get(table).copied()
    }

    pub fn word_length(&self, g: &[usize]) -> Result<WordLength> {
        if g.len() != self.carrier_size {
            return Err(Error::Argument(format!(
                "table has {} entries, carrier has {}",
                g.len(),
                self.carrier_size
            )));
        }
        let key = MapTable(g.to_vec());
        Ok(match self.index.get(&key) {
            Some(&id) => WordLength::Reached(self.min_level[id]),
            None if self.stabilized => WordLength::NotGenerated,
            None => WordLength::Unreached,
        })
    }

    /// The exact sets `F^0, …, F^max_n` as table ids, built by left
    /// composition with generators. Extends the closure as needed.
    pub fn exact_levels(&mut self, max_n: usize) -> Result<Vec<Vec<usize>>> {
        self.extend_to(max_n)?;
        let mut out = vec![vec![0usize]];
        for _ in 0..max_n {
            let prev = out.last().unwrap();
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for &f in prev {
                for g in &self.generators {
                    let h = g.after(&self.tables[f]);
                    let id = *self
                        .index
                        .get(&h)
                        .expect("every composition of length <= depth is indexed");
                    if seen.insert(id) {
                        next.push(id);
                    }
                }
            }
            next.sort_unstable();
            out.push(next);
        }
        Ok(out)
    }
}

/// Breadth-first closure up to `max_n` with the default table budget.
pub fn close_levels(family: &FunctionFamily, max_n: usize) -> Result<ClosureLevels> {
    close_levels_with_budget(family, max_n, DEFAULT_TABLE_BUDGET)
}

pub fn close_levels_with_budget(
    family: &FunctionFamily,
    max_n: usize,
    budget: usize,
) -> Result<ClosureLevels> {
    let mut levels = ClosureLevels::new(family, budget);
    levels.extend_to(max_n)?;
    Ok(levels)
}

/// `max_{f ∈ maps} d(f x, f y)` for every pair, as a dense matrix.
fn image_spread<S: Scalar>(m: &FiniteMetricSpace<S>, maps: &[&MapTable]) -> Vec<S> {
    let n = m.len();
    let mut out = vec![S::zero(); n * n];
    for f in maps {
        for i in 0..n {
            let fi = f[i];
            for j in i + 1..n {
                let d = m.d(fi, f[j]);
                if d > out[i * n + j] {
                    out[i * n + j] = d;
                }
            }
        }
    }
    out
}

/// Least `d(x, y)` over pairs whose image spread violates the bound; `∞`
/// when no pair does. With `strict`, a pair violates when the spread is
/// `≥ eps`, otherwise when it is `> eps`.
fn delta_from_spread<S: Scalar>(m: &FiniteMetricSpace<S>, spread: &[S], eps: S, strict: bool) -> S {
    let n = m.len();
    let mut delta = S::infinity();
    for i in 0..n {
        for j in i + 1..n {
            let s = spread[i * n + j];
            let bad = if strict { s >= eps } else { s > eps };
            if bad {
                delta = delta.min(m.d(i, j));
            }
        }
    }
    delta
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquicontinuityRow<S> {
    pub eps: S,
    /// Largest `δ` with `d(x, y) < δ ⇒ d(f x, f y) ≤ ε` for all `f ∈ F^n`;
    /// `+∞` when no pair constrains it.
    pub delta: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquicontinuityProfile<S> {
    pub level: usize,
    pub maps: usize,
    pub rows: Vec<EquicontinuityRow<S>>,
}

fn check_carrier<S: Scalar>(family: &FunctionFamily, m: &FiniteMetricSpace<S>) -> Result<()> {
    if family.carrier_size() != m.len() {
        return Err(Error::Argument(format!(
            "family acts on {} points but the metric space has {}",
            family.carrier_size(),
            m.len()
        )));
    }
    Ok(())
}

/// The `δ(ε)` profile of `F^n`. On a finite carrier equicontinuity and
/// uniform equicontinuity coincide, so a single `δ` per `ε` is reported.
pub fn check_equicontinuity_level<S: Scalar>(
    family: &FunctionFamily,
    m: &FiniteMetricSpace<S>,
    n: usize,
    eps_grid: &[S],
) -> Result<EquicontinuityProfile<S>> {
    check_carrier(family, m)?;
    let mut closure = ClosureLevels::new(family, DEFAULT_TABLE_BUDGET);
    let exact = closure.exact_levels(n)?;
    let maps: Vec<&MapTable> = exact[n].iter().map(|&id| closure.table(id)).collect();
    let spread = image_spread(m, &maps);
    let rows = eps_grid
        .iter()
        .map(|&eps| EquicontinuityRow {
            eps,
            delta: delta_from_spread(m, &spread, eps, false),
        })
        .collect();
    Ok(EquicontinuityProfile {
        level: n,
        maps: maps.len(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRow<S> {
    pub level: usize,
    /// `δ` obtained by chaining the level-1 profile through the previous
    /// level's `δ`.
    pub chained_delta: S,
    /// Largest `δ` with `d(x, y) < δ ⇒ d(f x, f y) < ε` for all `f ∈ F^n`.
    pub direct_delta: S,
    /// `chained_delta ≤ direct_delta`, i.e. the chained `δ` is valid.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport<S> {
    pub eps: S,
    pub rows: Vec<ChainRow<S>>,
}

impl<S> ChainReport<S> {
    pub fn all_certified(&self) -> bool {
        self.rows.iter().all(|r| r.certified)
    }
}

/// Materializes the induction "uniformly equicontinuous ⇒ finitely
/// equicontinuous": with `δ_F(·)` the strict profile of `F`, the chained
/// value for level `n+1` is `δ_F(δ_{n})`, and it is checked against the
/// direct profile of `F^{n+1}`.
pub fn uniform_implies_finite_probe<S: Scalar>(
    family: &FunctionFamily,
    m: &FiniteMetricSpace<S>,
    n_max: usize,
    eps: S,
) -> Result<ChainReport<S>> {
    check_carrier(family, m)?;
    if !(eps > S::zero()) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let mut closure = ClosureLevels::new(family, DEFAULT_TABLE_BUDGET);
    let exact = closure.exact_levels(n_max)?;
    let spread_of = |level: usize| {
        let maps: Vec<&MapTable> = exact[level].iter().map(|&id| closure.table(id)).collect();
        image_spread(m, &maps)
    };

    let base = spread_of(1.min(n_max));
    let mut rows = Vec::with_capacity(n_max);
    let mut chained = eps;
    for level in 1..=n_max {
        chained = delta_from_spread(m, &base, chained, true);
        let direct = delta_from_spread(m, &spread_of(level), eps, true);
        rows.push(ChainRow {
            level,
            chained_delta: chained,
            direct_delta: direct,
            certified: chained <= direct,
        });
    }
    Ok(ChainReport { eps, rows })
}
