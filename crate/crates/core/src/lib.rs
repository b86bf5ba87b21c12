//! Remetrization of dynamical systems on finite forward-invariant carriers.
//!
//! Given a family of maps acting on a finite metric carrier, the crate builds
//! the sup-metric
//!
//! ```text
//! d̂(x, y) = sup { d(f x, f y) / b_n : n ≥ 0, f ∈ F^n }
//! ```
//!
//! where `b` is a submultiplicative minorant of a divergent growth sequence
//! `a_n` such as `ln(n + 2)`. Under `d̂` every `n`-fold composition is
//! `b_n`-Lipschitz, so for the tent map the Lipschitz constant of `T^n` is at
//! most `ln(n + 2)`.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.
//!
//! ```
//! use remetric::{build_dhat, build_envelope, systems, BuildOptions, GrowthSequence};
//!
//! let sys = systems::make_tent_system(2, 1.0).unwrap();
//! let env = build_envelope(&GrowthSequence::log(), 64).unwrap();
//! let r = build_dhat(&sys.space, &sys.family, &env, sys.c, &BuildOptions::default()).unwrap();
//! let expected = 0.5 / 3f64.ln();
//! assert!((r.dhat().d(1, 2) - expected).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod metricspace;
pub mod moduli;
pub mod remetrize;
pub mod scalar;
pub mod sequences;
pub mod systems;

pub use error::{Error, Result};
pub use family::{close_levels, ClosureLevels, FunctionFamily, MapTable, WordLength};
pub use metricspace::{admits_modulus, bound_metric, lipschitz_estimate, validate_metric};
pub use moduli::{check_condition_iv, check_mc, construct_phi, TailWitness};
pub use remetrize::{
    build_dhat, equivalence_probe, tent_one_lipschitz_refutation, verify_conclusion, BuildOptions,
};
pub use scalar::Scalar;
pub use sequences::{build_envelope, verify_submultiplicative};

pub type Modulus = moduli::Modulus<f64>;
pub type ModulusSequence = moduli::ModulusSequence<f64>;
pub type ModulusSpec = moduli::ModulusSpec<f64>;
pub type GrowthSequence = sequences::GrowthSequence<f64>;
pub type Envelope = sequences::Envelope<f64>;
pub type FiniteMetricSpace = metricspace::FiniteMetricSpace<f64>;
pub type Remetrization = remetrize::Remetrization<f64>;
pub type System = systems::System<f64>;
