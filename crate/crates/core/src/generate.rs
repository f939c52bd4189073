//! Seeded random instances for experiments and test suites.
//!
//! Construction order: a random permutation fixes a topological order;
//! conflict endpoints and root defects are reserved up front; known and
//! unknown dependencies are then sampled as forward edges over the
//! permutation (so the dependency digraph stays acyclic), never touching a
//! conflict endpoint and, in strict mode, never pointing at a defect.
//! Keeping conflict endpoints dependency-free makes the weak-conflict count
//! equal the direct conflict count, so the emitted bounds really do bound
//! the weak relations a learner must respect.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Bounds, RepositoryInstance};

#[derive(Debug, Clone, Copy)]
pub struct GeneratorParams {
    pub n: usize,
    /// Probability of each candidate forward known-dependency edge.
    pub known_density: f64,
    pub unknown_deps: usize,
    pub conflicts: usize,
    pub root_defects: usize,
    /// Strict mode forbids dependencies into root defects, which pins the
    /// total defect count to the root count.
    pub strict: bool,
}

impl GeneratorParams {
    pub fn sparse(n: usize) -> Self {
        GeneratorParams {
            n,
            known_density: 0.15,
            unknown_deps: 0,
            conflicts: 0,
            root_defects: 0,
            strict: false,
        }
    }
}

pub fn random_instance(params: &GeneratorParams, seed: u64) -> Result<RepositoryInstance> {
    let n = params.n;
    if n == 0 {
        return Err(Error::param("need at least one package".to_string()));
    }
    if !(0.0..=1.0).contains(&params.known_density) {
        return Err(Error::param(format!(
            "known-dependency density must lie in [0, 1], got {}",
            params.known_density
        )));
    }
    if 2 * params.conflicts + params.root_defects > n {
        return Err(Error::param(format!(
            "need 2c + defects <= n to place {} conflicts and {} defects in {} packages",
            params.conflicts, params.root_defects, n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    // Reserve roles. Conflict endpoints stay out of the dependency graph
    // entirely: nothing depends on them and they depend on nothing, so each
    // conflict contributes exactly one weak conflict and no derived defects.
    let mut roles: Vec<usize> = (0..n).collect();
    roles.shuffle(&mut rng);
    let endpoint_list: Vec<usize> = roles[..2 * params.conflicts].to_vec();
    let defect_list: Vec<usize> =
        roles[2 * params.conflicts..2 * params.conflicts + params.root_defects].to_vec();
    let is_endpoint = |p: usize| endpoint_list.contains(&p);

    let mut defects = defect_list.clone();
    defects.sort_unstable();

    // Forward edges over the permutation: position j depends on position i.
    let mut known = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (target, source) = (perm[i], perm[j]);
            if is_endpoint(target) || is_endpoint(source) {
                continue;
            }
            if params.strict && defects.binary_search(&target).is_ok() {
                continue;
            }
            if rng.random_bool(params.known_density) {
                known.push((source, target));
            }
        }
    }

    // Unknown dependencies: same edge model, avoiding duplicates.
    let mut unknown = Vec::new();
    if params.unknown_deps > 0 {
        let taken: std::collections::HashSet<(usize, usize)> = known.iter().copied().collect();
        let mut chosen = std::collections::HashSet::new();
        let mut attempts = 0usize;
        let budget = 2000 * (params.unknown_deps + 1);
        while chosen.len() < params.unknown_deps {
            attempts += 1;
            if attempts > budget {
                return Err(Error::param(format!(
                    "could not place {} unknown dependencies",
                    params.unknown_deps
                )));
            }
            if n < 2 {
                return Err(Error::param("unknown dependencies need n >= 2".to_string()));
            }
            let i = rng.random_range(0..n - 1);
            let j = rng.random_range(i + 1..n);
            let (target, source) = (perm[i], perm[j]);
            if is_endpoint(target) || is_endpoint(source) {
                continue;
            }
            if params.strict && defects.binary_search(&target).is_ok() {
                continue;
            }
            let edge = (source, target);
            if taken.contains(&edge) || chosen.contains(&edge) {
                continue;
            }
            chosen.insert(edge);
        }
        unknown.extend(chosen);
        unknown.sort_unstable();
    }

    // Pair up the reserved endpoints into disjoint conflicts.
    let mut conflicts: Vec<(usize, usize)> = endpoint_list
        .chunks(2)
        .map(|pair| (pair[0].min(pair[1]), pair[0].max(pair[1])))
        .collect();
    conflicts.sort_unstable();

    RepositoryInstance::new(n, known, unknown, conflicts, defects, params.strict)
}

/// Bounds actually realized by a generated instance: total dependency-derived
/// defects, unknown-edge count, and direct conflict count (equal to the weak
/// count under the generator's endpoint rule).
pub fn realized_bounds(instance: &RepositoryInstance) -> Bounds {
    Bounds {
        d: instance.dependency_defects().len(),
        u: instance.unknown_deps().len(),
        c: instance.conflicts().len(),
    }
}
