use crate::error::{Error, Result};
use crate::family::FunctionFamily;
use crate::metricspace::FiniteMetricSpace;
use crate::scalar::Scalar;

use super::System;

/// Points `k / 2^L` for `0 ≤ k ≤ 2^L`; index `k` is the point `k / 2^L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    /// Levels above 30 would not fit a dense distance matrix anyway.
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > 30 {
            return Err(Error::Argument(format!("grid level must be in 1..=30, got {level}")));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        (1usize << self.level) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point<S: Scalar>(&self, k: usize) -> S {
        S::from_count(k) / S::from_count(1usize << self.level)
    }

    pub fn points<S: Scalar>(&self) -> Vec<S> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Index of `2^{-j}`, for `j ≤ L`.
    pub fn index_of_power(&self, j: u32) -> Option<usize> {
        (j <= self.level).then(|| 1usize << (self.level - j))
    }
}

/// `T(x) = 1 − |2x − 1|`. Exact on dyadic rationals.
pub fn tent_apply<S: Scalar>(x: S) -> Result<S> {
    if !(x >= S::zero() && x <= S::one()) {
        return Err(Error::Domain(format!("tent map is defined on [0, 1], got {x}")));
    }
    Ok(S::one() - (S::lit(2.0) * x - S::one()).abs())
}

/// Image indices of `T` on the grid: `k ↦ min(2k, 2^{L+1} − 2k)`.
pub fn tent_table(grid: DyadicGrid) -> Vec<usize> {
    let m = 1usize << grid.level();
    (0..=m).map(|k| (2 * k).min(2 * m - 2 * k)).collect()
}

/// The tent map on `D_L` with base metric `min{|x − y|, c/2}`.
pub fn make_tent_system<S: Scalar>(level: u32, c: S) -> Result<System<S>> {
    let grid = DyadicGrid::new(level)?;
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("bound constant must be positive, got {c}")));
    }
    let space = FiniteMetricSpace::capped_line(&grid.points::<S>(), c / S::lit(2.0))?;
    let family = FunctionFamily::new(grid.len(), vec![("T".into(), tent_table(grid))], false)?;
    Ok(System {
        name: format!("tent:{level}"),
        space,
        family,
        c,
    })
}
