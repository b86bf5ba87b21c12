use crate::error::{Error, Result};
use crate::family::FunctionFamily;
use crate::metricspace::FiniteMetricSpace;
use crate::scalar::Scalar;

use super::System;

/// Rotation by one step on `q` equally spaced points of a circle of unit
/// length. The metric is arc length capped at `c/2`; the family is
/// inverse-closed.
pub fn make_rotation_system<S: Scalar>(q: usize, c: S) -> Result<System<S>> {
    if q < 3 {
        return Err(Error::Argument(format!("rotation needs at least 3 points, got {q}")));
    }
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("bound constant must be positive, got {c}")));
    }
    let cap = c / S::lit(2.0);
    let labels = (0..q).map(|k| format!("{k}/{q}")).collect();
    let space = FiniteMetricSpace::from_fn(labels, |i, j| {
        let k = i.abs_diff(j);
        (S::from_count(k.min(q - k)) / S::from_count(q)).min(cap)
    })?;
    let shift = (0..q).map(|i| (i + 1) % q).collect();
    let family = FunctionFamily::new(q, vec![("h".into(), shift)], true)?;
    Ok(System {
        name: format!("rotation:{q}"),
        space,
        family,
        c,
    })
}
