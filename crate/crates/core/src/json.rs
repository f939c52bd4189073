//! The on-disk instance format.
//!
//! ```json
//! {
//!   "n": 6,
//!   "known_deps": [[1, 0]],
//!   "unknown_deps": [[3, 2]],
//!   "conflicts": [[4, 5]],
//!   "root_defects": [2],
//!   "bounds": {"d": 1, "u": 1, "c": 1},
//!   "strict_model": false
//! }
//! ```
//!
//! Dependency pairs are `[q, p]` meaning "q depends on p" — q cannot be
//! installed without p. Package ids are 0-based; duplicate pairs are
//! rejected. The optional `fixture` field names the generator an instance
//! came from.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{Bounds, RepositoryInstance};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub known_deps: Vec<(usize, usize)>,
    pub unknown_deps: Vec<(usize, usize)>,
    pub conflicts: Vec<(usize, usize)>,
    pub root_defects: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default)]
    pub strict_model: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
}

impl InstanceJson {
    pub fn from_instance(instance: &RepositoryInstance, bounds: Option<Bounds>) -> Self {
        InstanceJson {
            n: instance.n(),
            known_deps: instance.known_deps().to_vec(),
            unknown_deps: instance.unknown_deps().to_vec(),
            conflicts: instance.conflicts().to_vec(),
            root_defects: instance.root_defects().to_vec(),
            bounds,
            strict_model: instance.strict_model(),
            fixture: None,
        }
    }

    /// Validates and builds the instance (duplicate pairs, cycles in the
    /// known digraph, and strict-mode violations are all rejected).
    pub fn build(&self) -> Result<RepositoryInstance> {
        RepositoryInstance::new(
            self.n,
            self.known_deps.clone(),
            self.unknown_deps.clone(),
            self.conflicts.clone(),
            self.root_defects.clone(),
            self.strict_model,
        )
    }
}
