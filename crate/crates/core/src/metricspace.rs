//! Finite metric spaces stored as dense distance matrices.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::Modulus;
use crate::scalar::{le_tol, Scalar};

/// An indexed point set with an `N×N` distance matrix.
///
/// Construction only checks shape and nonnegativity; the metric axioms are
/// audited separately by [`validate_metric`].
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace<S> {
    labels: Vec<String>,
    n: usize,
    dist: Vec<S>,
    diameter: S,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    pub fn from_matrix(labels: Vec<String>, rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n {
            return Err(Error::Argument(format!(
                "{} labels for a {n}-row matrix",
                labels.len()
            )));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Argument(format!(
                    "matrix is not square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend(row);
        }
        Self::from_flat(labels, dist)
    }

    /// Builds the matrix from a distance function evaluated on `i < j` and
    /// mirrored, with a zero diagonal.
    pub fn from_fn(labels: Vec<String>, f: impl Fn(usize, usize) -> S) -> Result<Self> {
        let n = labels.len();
        let mut dist = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(labels, dist)
    }

    pub(crate) fn from_flat(labels: Vec<String>, dist: Vec<S>) -> Result<Self> {
        let n = labels.len();
        debug_assert_eq!(dist.len(), n * n);
        if let Some(k) = dist.iter().position(|d| d.is_nan() || *d < S::zero()) {
            return Err(Error::Argument(format!(
                "distance ({}, {}) = {} is negative or NaN",
                k / n,
                k % n,
                dist[k]
            )));
        }
        let diameter = dist.iter().copied().fold(S::zero(), S::max);
        Ok(Self {
            labels,
            n,
            dist,
            diameter,
        })
    }

    /// Points on the real line with `min{|x − y|, cap}`.
    pub fn capped_line(points: &[S], cap: S) -> Result<Self> {
        if !(cap > S::zero()) {
            return Err(Error::Argument(format!("cap must be positive, got {cap}")));
        }
        let labels = points.iter().map(|p| p.to_string()).collect();
        Self::from_fn(labels, |i, j| (points[i] - points[j]).abs().min(cap))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> S {
        self.dist[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn diameter(&self) -> S {
        self.diameter
    }

    /// Smallest positive distance, if any.
    pub fn min_positive(&self) -> Option<S> {
        let m = self
            .dist
            .iter()
            .copied()
            .filter(|&d| d > S::zero())
            .fold(S::infinity(), S::min);
        m.is_finite().then_some(m)
    }

    /// Entrywise `self ≤ other + tol`.
    pub fn dominated_by(&self, other: &Self, tol: S) -> bool {
        self.n == other.n && self.dist.iter().zip(&other.dist).all(|(&a, &b)| le_tol(a, b, tol))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!(self.n, other.n, "carrier sizes differ");
        self.dist
            .iter()
            .zip(&other.dist)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max)
    }

    /// Header row of labels followed by `N` rows of distances, each written
    /// in shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.labels)?;
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|d| d.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::with_capacity(labels.len());
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<S>()
                        .map_err(|_| Error::Parse(format!("row {}: not a number: {f:?}", i + 1)))
                })
                .collect::<Result<Vec<S>>>()?;
            rows.push(row);
        }
        Self::from_matrix(labels, rows)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "lowercase")]
pub enum MetricViolation {
    /// `d(i, j) ≠ d(j, i)`.
    Symmetry { i: usize, j: usize },
    /// `d(i, i) ≠ 0`, or `d(i, j) = 0` with `i ≠ j`.
    Identity { i: usize, j: usize },
    /// `d(x, z) > d(x, y) + d(y, z)`.
    Triangle { x: usize, y: usize, z: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub points: usize,
    pub violation: Option<MetricViolation>,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Exhaustive audit of symmetry, identity of indiscernibles and the triangle
/// inequality. Triangles are scanned over unordered triples once symmetry
/// holds, and the lexicographically first violation is reported.
pub fn validate_metric<S: Scalar>(m: &FiniteMetricSpace<S>, tol: S) -> MetricReport {
    let n = m.len();
    let report = |violation| MetricReport { points: n, violation };

    for i in 0..n {
        if m.d(i, i).abs() > tol {
            return report(Some(MetricViolation::Identity { i, j: i }));
        }
        for j in i + 1..n {
            if (m.d(i, j) - m.d(j, i)).abs() > tol {
                return report(Some(MetricViolation::Symmetry { i, j }));
            }
            if m.d(i, j) <= S::zero() {
                return report(Some(MetricViolation::Identity { i, j }));
            }
        }
    }

    let violation = (0..n).into_par_iter().find_map_first(|i| {
        let ri = m.row(i);
        for j in i + 1..n {
            let rj = m.row(j);
            let dij = ri[j];
            for k in j + 1..n {
                let (dik, djk) = (ri[k], rj[k]);
                if dik > dij + djk + tol {
                    return Some(MetricViolation::Triangle { x: i, y: j, z: k });
                }
                if dij > dik + djk + tol {
                    return Some(MetricViolation::Triangle { x: i, y: k, z: j });
                }
                if djk > dij + dik + tol {
                    return Some(MetricViolation::Triangle { x: j, y: i, z: k });
                }
            }
        }
        None
    });
    report(violation)
}

/// Entrywise `min{d, c/2}`, so the result has diameter `≤ c/2 < c`.
pub fn bound_metric<S: Scalar>(m: &FiniteMetricSpace<S>, c: S) -> Result<FiniteMetricSpace<S>> {
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("bound constant must be positive, got {c}")));
    }
    let cap = c / S::lit(2.0);
    let dist = m.dist.iter().map(|&d| d.min(cap)).collect();
    FiniteMetricSpace::from_flat(m.labels.clone(), dist)
}

fn check_map(dom: usize, cod: usize, f: &[usize]) -> Result<()> {
    if f.len() != dom {
        return Err(Error::Argument(format!(
            "map table has {} entries for a domain of {dom} points",
            f.len()
        )));
    }
    if let Some(x) = f.iter().position(|&y| y >= cod) {
        return Err(Error::Argument(format!(
            "map sends {x} to {} outside the codomain of {cod} points",
            f[x]
        )));
    }
    Ok(())
}

/// Row-parallel max over pairs `i < j` with deterministic tie-breaking: the
/// lexicographically smallest pair wins among equal scores.
fn argmax_pairs<S: Scalar>(n: usize, score: impl Fn(usize, usize) -> Option<S> + Sync) -> Option<(S, (usize, usize))> {
    (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut best: Option<(S, (usize, usize))> = None;
            for j in i + 1..n {
                if let Some(s) = score(i, j) {
                    if best.is_none_or(|(b, _)| s > b) {
                        best = Some((s, (i, j)));
                    }
                }
            }
            best
        })
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissionReport<S> {
    pub passed: bool,
    pub pairs: usize,
    /// Pair maximizing `ρ(f x, f y) − ω(d(x, y))`.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_excess: S,
    /// `max ρ(f x, f y) / ω(d(x, y))` over pairs with `ω(d) > 0`.
    pub max_ratio: S,
}

/// Checks `ρ(f x, f y) ≤ ω(d(x, y)) + tol` on all pairs.
pub fn admits_modulus<S: Scalar>(
    dom: &FiniteMetricSpace<S>,
    cod: &FiniteMetricSpace<S>,
    f: &[usize],
    omega: &Modulus<S>,
    tol: S,
) -> Result<AdmissionReport<S>> {
    check_map(dom.len(), cod.len(), f)?;
    let n = dom.len();
    let worst = argmax_pairs(n, |i, j| Some(cod.d(f[i], f[j]) - omega.at(dom.d(i, j))));
    let ratio = argmax_pairs(n, |i, j| {
        let w = omega.at(dom.d(i, j));
        (w > S::zero()).then(|| cod.d(f[i], f[j]) / w)
    });
    let worst_excess = worst.map_or(S::neg_infinity(), |w| w.0);
    Ok(AdmissionReport {
        passed: worst_excess <= tol,
        pairs: n * n.saturating_sub(1) / 2,
        worst_pair: worst.map(|w| w.1),
        worst_excess,
        max_ratio: ratio.map_or(S::zero(), |r| r.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzEstimate<S> {
    pub ratio: S,
    pub witness: (usize, usize),
}

/// `max_{x≠y} ρ(f x, f y) / d(x, y)` with its lowest-index argmax.
pub fn lipschitz_estimate<S: Scalar>(
    dom: &FiniteMetricSpace<S>,
    cod: &FiniteMetricSpace<S>,
    f: &[usize],
) -> Result<LipschitzEstimate<S>> {
    if dom.len() < 2 {
        return Err(Error::Argument("Lipschitz estimate needs at least two points".into()));
    }
    check_map(dom.len(), cod.len(), f)?;
    let best = argmax_pairs(dom.len(), |i, j| {
        let d = dom.d(i, j);
        (d > S::zero()).then(|| cod.d(f[i], f[j]) / d)
    });
    let (ratio, witness) = best.ok_or_else(|| {
        Error::Argument("all pairwise distances are zero".into())
    })?;
    Ok(LipschitzEstimate { ratio, witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn unit_grid(level: u32) -> Vec<f64> {
        let m = 1u32 << level;
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }

    #[test]
    fn euclidean_grid_is_a_metric() {
        let m = FiniteMetricSpace::capped_line(&unit_grid(2), f64::INFINITY).unwrap();
        assert!(validate_metric(&m, 1e-9).passed());
        assert_eq!(m.diameter(), 1.0);
    }

    #[test]
    fn triangle_violation_is_located() {
        let rows = vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ];
        let m = FiniteMetricSpace::from_matrix(labels(3), rows).unwrap();
        assert_eq!(
            validate_metric(&m, 1e-9).violation,
            Some(MetricViolation::Triangle { x: 0, y: 1, z: 2 })
        );
    }

    #[test]
    fn identity_and_symmetry_violations() {
        let zero_off = FiniteMetricSpace::from_matrix(
            labels(2),
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(
            validate_metric(&zero_off, 1e-9).violation,
            Some(MetricViolation::Identity { i: 0, j: 1 })
        );
        let skew = FiniteMetricSpace::from_matrix(
            labels(2),
            vec![vec![0.0, 1.0], vec![2.0, 0.0]],
        )
        .unwrap();
        assert_eq!(
            validate_metric(&skew, 1e-9).violation,
            Some(MetricViolation::Symmetry { i: 0, j: 1 })
        );
    }

    #[test]
    fn construction_errors() {
        assert!(FiniteMetricSpace::from_matrix(labels(2), vec![vec![0.0, 1.0]]).is_err());
        assert!(FiniteMetricSpace::from_matrix(labels(2), vec![vec![0.0], vec![1.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::from_matrix(
            labels(2),
            vec![vec![0.0, -1.0], vec![-1.0, 0.0]]
        )
        .is_err());
    }

    #[test]
    fn bound_metric_caps_at_half_c() {
        let m = FiniteMetricSpace::capped_line(&unit_grid(3), f64::INFINITY).unwrap();
        let b = bound_metric(&m, 1.0).unwrap();
        assert_eq!(b.d(0, 8), 0.5);
        assert!(b.diameter() <= 0.5);
        assert!(validate_metric(&b, 1e-9).passed());
        assert_eq!(bound_metric(&m, 10.0).unwrap(), m);

        let two = FiniteMetricSpace::from_matrix(labels(2), vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(bound_metric(&two, 1.0).unwrap().d(0, 1), 0.5);
        assert!(bound_metric(&two, 0.0).is_err());
    }

    #[test]
    fn lipschitz_of_identity_and_constant() {
        let m = FiniteMetricSpace::capped_line(&unit_grid(3), 0.5).unwrap();
        let id: Vec<usize> = (0..m.len()).collect();
        let est = lipschitz_estimate(&m, &m, &id).unwrap();
        assert_eq!(est.ratio, 1.0);
        assert_eq!(est.witness, (0, 1));
        let constant = vec![3; m.len()];
        assert_eq!(lipschitz_estimate(&m, &m, &constant).unwrap().ratio, 0.0);
    }

    #[test]
    fn lipschitz_argument_errors() {
        let one = FiniteMetricSpace::capped_line(&[0.0], 1.0).unwrap();
        assert!(lipschitz_estimate(&one, &one, &[0]).is_err());
        let m = FiniteMetricSpace::capped_line(&[0.0, 1.0], 1.0).unwrap();
        assert!(lipschitz_estimate(&m, &m, &[0, 2]).is_err());
        assert!(lipschitz_estimate(&m, &m, &[0]).is_err());
    }

    #[test]
    fn admits_identity_with_equality() {
        let m = FiniteMetricSpace::capped_line(&unit_grid(2), 0.5).unwrap();
        let id: Vec<usize> = (0..m.len()).collect();
        let r = admits_modulus(&m, &m, &id, &Modulus::identity(), 1e-9).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_excess, 0.0);
        assert_eq!(r.max_ratio, 1.0);
    }

    #[test]
    fn admits_detects_violation() {
        let m = FiniteMetricSpace::capped_line(&unit_grid(2), 0.5).unwrap();
        // doubling on the left half
        let f = vec![0, 2, 4, 4, 4];
        let r = admits_modulus(&m, &m, &f, &Modulus::identity(), 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_pair, Some((0, 1)));
        assert_eq!(r.worst_excess, 0.25);
        assert_eq!(r.max_ratio, 2.0);
        assert!(admits_modulus(&m, &m, &f, &Modulus::simple(2.0, 0.5), 1e-9).unwrap().passed);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = FiniteMetricSpace::from_fn(labels(6), |i, j| {
            ((i as f64 + 1.0).ln() - (j as f64 + 1.0).ln()).abs() / 3.0
        })
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = FiniteMetricSpace::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);
    }
}
