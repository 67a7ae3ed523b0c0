//! Extended COM-Poisson (ECOMP) count distribution and its characterizations.
//!
//! ECOMP(nu, p, alpha, beta) has p.m.f. proportional to
//! `[(nu)_k]^beta p^k / (k!)^alpha` and nests Poisson, geometric, negative
//! binomial and COM-Poisson as parameter reductions. The crate provides:
//!
//! - log-space evaluation of the p.m.f., c.d.f., quantiles and moments with
//!   certified series truncation ([`table`]);
//! - seeded inversion sampling ([`sample`]);
//! - convolution of two components, the extended negative hypergeometric
//!   conditional law given the sum, and marginal reconstruction from
//!   conditional data ([`conditional`]);
//! - the Stein-operator residual suite and recurrence checks ([`stein`]);
//! - log-concavity/log-convexity classification, a sufficient condition for
//!   infinite divisibility, and discrete compound Poisson decomposition via
//!   the Panjer recursion ([`divisibility`]);
//! - the birth-death chain whose stationary law is ECOMP, with a
//!   continuous-time simulation cross-check ([`birthdeath`]);
//! - maximum-likelihood fitting of count data ([`inference`]).
//!
//! All types are immutable after construction and every operation is a pure
//! function; sampling and simulation take explicit seeds.

pub mod birthdeath;
pub mod conditional;
pub mod divisibility;
pub mod error;
pub mod inference;
pub mod params;
pub mod sample;
pub mod stein;
pub mod table;

pub use error::{EcompError, Result};
pub use params::{Branch, EcompParams};
pub use sample::{sample, SampleConfig};
pub use table::{Dispersion, PmfTable, DEFAULT_TAIL_TOL};
