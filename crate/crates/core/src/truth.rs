//! Brute-force reference semantics: every definition realized by exhaustive
//! enumeration, as the independent ground truth learners are checked against.
//!
//! Everything here is guarded to desk scale (2^n installations, 2^c conflict
//! resolutions) and works on packed masks internally.

use serde_json::json;

use crate::error::{Error, Result};
use crate::instance::{Installation, RepositoryInstance};

pub const MAX_BRUTE_FORCE_N: usize = 20;
pub const MAX_BRUTE_FORCE_CONFLICTS: usize = 20;

/// Exhaustively computed ground truth for one instance.
#[derive(Debug, Clone)]
pub struct TruthReport {
    pub successful_installations: Vec<Installation>,
    pub true_defects: Vec<usize>,
    /// Ordered pairs (p, q): every successful installation containing p also
    /// contains q. Restricted to non-defective p (a defect would vacuously
    /// depend on everything); q is then non-defective automatically.
    pub weak_dep_pairs: Vec<(usize, usize)>,
    /// Unordered pairs {p, q}, stored with p < q, both endpoints
    /// non-defective, that no successful installation contains together.
    pub weak_conflict_pairs: Vec<(usize, usize)>,
    pub max_installation: Installation,
}

impl TruthReport {
    pub fn max_installation_size(&self) -> usize {
        self.max_installation.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "defects": self.true_defects,
            "weak_conflicts": self.weak_conflict_pairs,
            "weak_deps": self.weak_dep_pairs,
            "successful_count": self.successful_installations.len(),
            "max_installation": self.max_installation.indices(),
        })
    }
}

struct MaskEvaluator {
    defect_mask: u64,
    deps: Vec<(u64, u64)>,
    conflicts: Vec<u64>,
}

impl MaskEvaluator {
    fn new(instance: &RepositoryInstance) -> Self {
        let mut defect_mask = 0u64;
        for &d in instance.root_defects() {
            defect_mask |= 1 << d;
        }
        let deps = instance
            .known_deps()
            .iter()
            .chain(instance.unknown_deps())
            .map(|&(q, p)| (1u64 << q, 1u64 << p))
            .collect();
        let conflicts = instance
            .conflicts()
            .iter()
            .map(|&(a, b)| (1u64 << a) | (1u64 << b))
            .collect();
        MaskEvaluator {
            defect_mask,
            deps,
            conflicts,
        }
    }

    fn succeeds(&self, mask: u64) -> bool {
        if mask & self.defect_mask != 0 {
            return false;
        }
        for &(q, p) in &self.deps {
            if mask & q != 0 && mask & p == 0 {
                return false;
            }
        }
        for &pair in &self.conflicts {
            if mask & pair == pair {
                return false;
            }
        }
        true
    }
}

fn guard_n(instance: &RepositoryInstance) -> Result<usize> {
    let n = instance.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::guard(format!(
            "brute force enumerates 2^n installations; n={n} exceeds {MAX_BRUTE_FORCE_N}"
        )));
    }
    Ok(n)
}

fn successful_masks(instance: &RepositoryInstance) -> Result<Vec<u64>> {
    let n = guard_n(instance)?;
    let eval = MaskEvaluator::new(instance);
    Ok((0..1u64 << n).filter(|&m| eval.succeeds(m)).collect())
}

/// All successful installations, in ascending bitmask order.
pub fn enumerate_successful(instance: &RepositoryInstance) -> Result<Vec<Installation>> {
    let n = instance.n();
    Ok(successful_masks(instance)?
        .into_iter()
        .map(|m| Installation::from_mask(n, m))
        .collect())
}

/// Exhaustive weak relations, defects, and the maximum installation.
pub fn weak_relations(instance: &RepositoryInstance) -> Result<TruthReport> {
    let n = guard_n(instance)?;
    let masks = successful_masks(instance)?;

    // common[p] accumulates the intersection of all successful installations
    // containing p; an untouched sentinel marks a defect.
    let sentinel = u64::MAX;
    let mut common = vec![sentinel; n];
    let mut together = vec![0u64; n]; // together[p] bit q: some success has both
    let mut best_mask = 0u64;
    let mut best_size = 0u32;
    for &m in &masks {
        let size = m.count_ones();
        if size > best_size {
            best_size = size;
            best_mask = m;
        }
        let mut rest = m;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            common[p] &= m;
            together[p] |= m;
        }
    }

    let true_defects: Vec<usize> = (0..n).filter(|&p| common[p] == sentinel).collect();
    let defective = |p: usize| common[p] == sentinel;

    let mut weak_dep_pairs = Vec::new();
    let mut weak_conflict_pairs = Vec::new();
    for p in 0..n {
        if defective(p) {
            continue;
        }
        for q in 0..n {
            if q != p && common[p] >> q & 1 == 1 {
                weak_dep_pairs.push((p, q));
            }
        }
        for q in (p + 1)..n {
            if !defective(q) && together[p] >> q & 1 == 0 {
                weak_conflict_pairs.push((p, q));
            }
        }
    }

    Ok(TruthReport {
        successful_installations: masks
            .iter()
            .map(|&m| Installation::from_mask(n, m))
            .collect(),
        true_defects,
        weak_dep_pairs,
        weak_conflict_pairs,
        max_installation: Installation::from_mask(n, best_mask),
    })
}

/// A maximum-size successful installation; ties go to the numerically
/// smallest bitmask (package 0 in the lowest bit), which the ascending
/// enumeration yields for free.
pub fn max_subrepo_bruteforce(instance: &RepositoryInstance) -> Result<Installation> {
    let n = guard_n(instance)?;
    let eval = MaskEvaluator::new(instance);
    let mut best_mask = 0u64;
    let mut best_size = 0u32;
    for m in 0..1u64 << n {
        if m.count_ones() > best_size && eval.succeeds(m) {
            best_size = m.count_ones();
            best_mask = m;
        }
    }
    Ok(Installation::from_mask(n, best_mask))
}

/// Conflict resolution over *learned* constraints: tries all 2^c ways of
/// dropping one endpoint per conflict, removes every dropped package plus
/// everything that depends on it through the dependency edges, removes all
/// defects and their dependents, and keeps the largest surviving set.
pub fn resolve_conflicts_exhaustive(
    n: usize,
    deps: &[(usize, usize)],
    conflicts: &[(usize, usize)],
    defects: &[usize],
) -> Result<Installation> {
    if n > 64 {
        return Err(Error::guard(format!(
            "conflict resolution uses packed masks; n={n} exceeds 64"
        )));
    }
    let c = conflicts.len();
    if c > MAX_BRUTE_FORCE_CONFLICTS {
        return Err(Error::guard(format!(
            "2^c resolution choices; c={c} exceeds {MAX_BRUTE_FORCE_CONFLICTS}"
        )));
    }
    for &(q, p) in deps {
        if q >= n || p >= n {
            return Err(Error::PackageOutOfRange(q.max(p), n));
        }
    }
    for &(a, b) in conflicts {
        if a >= n || b >= n {
            return Err(Error::PackageOutOfRange(a.max(b), n));
        }
    }

    // dependents_mask[p]: p plus everything that transitively depends on it.
    // Plain BFS so learned closures with mutual (cyclic) pairs are fine.
    let mut dependents_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(q, p) in deps {
        dependents_adj[p].push(q);
    }
    let dependents_mask: Vec<u64> = (0..n)
        .map(|p| {
            let mut mask = 1u64 << p;
            let mut stack = vec![p];
            while let Some(x) = stack.pop() {
                for &q in &dependents_adj[x] {
                    if mask >> q & 1 == 0 {
                        mask |= 1 << q;
                        stack.push(q);
                    }
                }
            }
            mask
        })
        .collect();

    let mut base_removed = 0u64;
    for &d in defects {
        if d >= n {
            return Err(Error::PackageOutOfRange(d, n));
        }
        base_removed |= dependents_mask[d];
    }

    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best: Option<u64> = None;
    for choice in 0..1u64 << c {
        let mut removed = base_removed;
        for (i, &(a, b)) in conflicts.iter().enumerate() {
            let dropped = if choice >> i & 1 == 0 { a } else { b };
            removed |= dependents_mask[dropped];
        }
        let candidate = full & !removed;
        if conflicts
            .iter()
            .any(|&(a, b)| candidate >> a & 1 == 1 && candidate >> b & 1 == 1)
        {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                candidate.count_ones() > b.count_ones()
                    || (candidate.count_ones() == b.count_ones() && candidate < b)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(Installation::from_mask(n, best.unwrap_or(0)))
}
