//! Learning hidden software-repository constraints from installation
//! attempts.
//!
//! A repository holds packages with declared dependencies, plus constraints
//! nobody wrote down: broken packages, undocumented dependencies, and
//! conflicts. The only probe available is attempting to install a subset of
//! packages and observing success or failure. This crate implements
//!
//! - an installation oracle with exact query accounting ([`oracle`]),
//! - an adaptive binary-splitting search for root defects when all
//!   dependencies are declared ([`gbs`]),
//! - cover-free-family test designs and the non-adaptive learners built on
//!   them, including layered and two-phase variants and an anytime bound
//!   search ([`cff`], [`learn`]),
//! - brute-force reference oracles for every definition ([`truth`]),
//! - adversarial fixture instances whose structure certifies the hard cases
//!   ([`fixtures`]), and a seeded random-instance generator ([`generate`]).

pub mod cff;
pub mod error;
pub mod fixtures;
pub mod gbs;
pub mod generate;
pub mod instance;
pub mod json;
pub mod learn;
pub mod oracle;
pub mod truth;

pub use error::{Error, Result};
pub use instance::{
    contract_sccs, topological_sort, Bounds, DependencyClosure, Installation, PackageId,
    RepositoryInstance,
};
pub use oracle::InstallationOracle;
