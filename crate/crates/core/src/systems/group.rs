use crate::error::{Error, Result};
use crate::family::FunctionFamily;
use crate::metricspace::FiniteMetricSpace;
use crate::scalar::Scalar;

use super::System;

/// A permutation group acting on its carrier, with generating set
/// `S = {h_i} ∪ {id} ∪ {h_i^{-1}}` and the discrete metric `c/2`.
pub fn make_group_system<S: Scalar>(perms: Vec<(String, Vec<usize>)>, c: S) -> Result<System<S>> {
    let n = perms
        .first()
        .map(|p| p.1.len())
        .ok_or_else(|| Error::Argument("at least one permutation is required".into()))?;
    if !(c > S::zero()) {
        return Err(Error::Argument(format!("bound constant must be positive, got {c}")));
    }
    let cap = c / S::lit(2.0);
    let labels = (0..n).map(|i| i.to_string()).collect();
    let space = FiniteMetricSpace::from_fn(labels, |_, _| cap)?;
    let family = FunctionFamily::new(n, perms, true)?;
    Ok(System {
        name: "group".into(),
        space,
        family,
        c,
    })
}

/// `S₃` generated by `(0 1)` and `(1 2)`.
pub fn s3_adjacent_transpositions() -> Vec<(String, Vec<usize>)> {
    vec![
        ("(0 1)".into(), vec![1, 0, 2]),
        ("(1 2)".into(), vec![0, 2, 1]),
    ]
}

/// `S₃` generated by all three transpositions.
pub fn s3_all_transpositions() -> Vec<(String, Vec<usize>)> {
    let mut g = s3_adjacent_transpositions();
    g.push(("(0 2)".into(), vec![2, 1, 0]));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{close_levels, WordLength};

    #[test]
    fn s3_word_lengths() {
        let s = make_group_system(s3_adjacent_transpositions(), 1.0f64).unwrap();
        let levels = close_levels(&s.family, 10).unwrap();
        assert!(levels.is_stabilized());
        assert_eq!(levels.total_tables(), 6);
        assert_eq!(levels.depth(), 3);
        assert_eq!(levels.word_length(&[2, 1, 0]).unwrap(), WordLength::Reached(3));
        let s = make_group_system(s3_all_transpositions(), 1.0f64).unwrap();
        let levels = close_levels(&s.family, 10).unwrap();
        assert_eq!(levels.total_tables(), 6);
        assert_eq!(levels.depth(), 2);
    }

    #[test]
    fn involution_and_trivial_groups() {
        let s = make_group_system(vec![("t".into(), vec![1, 0, 2, 3])], 1.0f64).unwrap();
        let levels = close_levels(&s.family, 5).unwrap();
        assert_eq!(levels.total_tables(), 2);
        assert_eq!(levels.depth(), 1);
        let s = make_group_system(vec![("id".into(), vec![0, 1, 2])], 1.0f64).unwrap();
        let levels = close_levels(&s.family, 5).unwrap();
        assert_eq!(levels.total_tables(), 1);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(make_group_system(vec![("f".into(), vec![0, 0, 1])], 1.0f64).is_err());
        assert!(make_group_system(Vec::new(), 1.0f64).is_err());
    }
}
