//! Deterministic adversarial instances used as regression fixtures.
//!
//! Each generator realizes one hard-case construction: a repository shape
//! under which some class of algorithm provably cannot do better than a
//! stated query count. The generators keep to desk scale (n <= 12) so the
//! brute-force oracle can certify every structural claim, and the sibling
//! generators return both scenarios of an indistinguishable pair so that
//! feedback-diff properties are first-class test subjects.
//!
//! Index conventions: paths run "package j depends on package j-1", and the
//! pivot package of the star/fan constructions sits at the highest id so
//! that maximum-installation tie-breaking (smallest bitmask) prefers the
//! pivot-free optimum.

use crate::error::{Error, Result};
use crate::instance::RepositoryInstance;

/// Generators kept small enough for exhaustive certification.
pub const MAX_FIXTURE_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    PathRootDefect,
    StarDefects,
    ConflictChain,
    SingleConflictPath,
    SingleUnknownDepPath,
    FullLearningConflictFan,
    AdaptiveLbCycles,
}

impl FixtureKind {
    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::PathRootDefect => "path-root-defect",
            FixtureKind::StarDefects => "star-defects",
            FixtureKind::ConflictChain => "conflict-chain",
            FixtureKind::SingleConflictPath => "single-conflict-path",
            FixtureKind::SingleUnknownDepPath => "single-unknown-dep-path",
            FixtureKind::FullLearningConflictFan => "full-learning-conflict-fan",
            FixtureKind::AdaptiveLbCycles => "adaptive-lb-cycles",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "path-root-defect" => FixtureKind::PathRootDefect,
            "star-defects" => FixtureKind::StarDefects,
            "conflict-chain" => FixtureKind::ConflictChain,
            "single-conflict-path" => FixtureKind::SingleConflictPath,
            "single-unknown-dep-path" => FixtureKind::SingleUnknownDepPath,
            "full-learning-conflict-fan" => FixtureKind::FullLearningConflictFan,
            "adaptive-lb-cycles" => FixtureKind::AdaptiveLbCycles,
            _ => return None,
        })
    }
}

/// Kind plus parameters, the CLI-facing handle on a generator. `pivot` is
/// the index parameter of the path-style constructions.
#[derive(Debug, Clone, Copy)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub n: usize,
    pub d: usize,
    pub u: usize,
    pub c: usize,
    pub pivot: usize,
}

impl FixtureSpec {
    /// Builds the fixture; for sibling-pair kinds this is the first scenario.
    pub fn build(&self) -> Result<RepositoryInstance> {
        match self.kind {
            FixtureKind::PathRootDefect => path_root_defect(self.n, self.pivot),
            FixtureKind::StarDefects => star_defects(self.n, self.d, self.u),
            FixtureKind::ConflictChain => conflict_chain(self.n, self.d, self.u, self.c),
            FixtureKind::SingleConflictPath => single_conflict_path(self.n, self.pivot),
            FixtureKind::SingleUnknownDepPath => single_unknown_dep_path(self.n, self.pivot),
            FixtureKind::FullLearningConflictFan => {
                full_learning_conflict_fan(self.n, self.d, self.u, self.c)
            }
            FixtureKind::AdaptiveLbCycles => Ok(adaptive_lb_cycles(self.n, self.d, self.u)?.0),
        }
    }
}

fn guard_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_FIXTURE_N {
        return Err(Error::param(format!(
            "fixture sizes are capped at n <= {MAX_FIXTURE_N} for exhaustive certification, got {n}"
        )));
    }
    Ok(())
}

fn path_deps(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|j| (j, j - 1)).collect()
}

/// Directed path a_1 <- a_2 <- ... <- a_n (package j depends on j-1, 0-based)
/// with one hidden dependency of a_1 on a_i and the root defect at a_{i+1}.
/// The only successful installations are the empty set and the prefix
/// {a_1..a_i}; an algorithm that skipped that prefix cannot tell this
/// instance from its all-defective twin.
pub fn path_root_defect(n: usize, i: usize) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if i == 0 || i >= n {
        return Err(Error::param(format!("pivot must satisfy 1 <= i < n, got i={i}, n={n}")));
    }
    // At i = 1 the hidden edge would be a_1 -> a_1; the scenario degenerates
    // to the bare defect at a_2 and needs no unknown dependency.
    let unknown = if i == 1 { vec![] } else { vec![(0, i - 1)] };
    RepositoryInstance::new(n, path_deps(n), unknown, vec![], vec![i], false)
}

/// The indistinguishable twin: same path, but a_1 itself is the root defect,
/// so no nonempty installation succeeds.
pub fn path_root_defect_pair(
    n: usize,
    i: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    let main = path_root_defect(n, i)?;
    let twin = RepositoryInstance::new(n, path_deps(n), vec![], vec![], vec![0], false)?;
    Ok((main, twin))
}

/// Star: pivot package p (highest id... here p = 0 is fine since no maximum
/// claim involves ties) hiddenly depends on a_1..a_u while x_1..x_{d-1} are
/// root defects. Whether p itself is defective is invisible to any test that
/// misses an a_i or touches an x_j.
pub fn star_defects(n: usize, d: usize, u: usize) -> Result<RepositoryInstance> {
    star_defects_variant(n, d, u, false)
}

/// Both scenarios: p working, and p defective.
pub fn star_defects_pair(
    n: usize,
    d: usize,
    u: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    Ok((
        star_defects_variant(n, d, u, false)?,
        star_defects_variant(n, d, u, true)?,
    ))
}

fn star_defects_variant(
    n: usize,
    d: usize,
    u: usize,
    pivot_defective: bool,
) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if u + d.max(1) > n {
        return Err(Error::param(format!(
            "star needs 1 + u + (d-1) packages, got n={n}, d={d}, u={u}"
        )));
    }
    // p = 0; a_i = i for 1..=u; x_j = u+1 .. u+d-1; the rest are fillers.
    let unknown: Vec<(usize, usize)> = (1..=u).map(|i| (0, i)).collect();
    let mut defects: Vec<usize> = (u + 1..u + d.max(1)).collect();
    if pivot_defective {
        defects.push(0);
    }
    RepositoryInstance::new(n, vec![], unknown, vec![], defects, false)
}

/// Conflict chain: p (highest id) hiddenly depends on a_1..a_u; packages
/// b_1..b_{ceil(c/2)-1} each conflict with the matching a_i, so they weakly
/// conflict with p through the dependency, and b_{ceil(c/2)} conflicts with
/// p directly. For odd c the weak-conflict count among working packages is
/// exactly c.
pub fn conflict_chain(n: usize, d: usize, u: usize, c: usize) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if c == 0 || c > 2 * u {
        return Err(Error::param(format!(
            "conflict chain needs 1 <= c <= 2u, got c={c}, u={u}"
        )));
    }
    let m = c.div_ceil(2);
    if u + d + m + 1 > n {
        return Err(Error::param(format!(
            "conflict chain needs u + d + ceil(c/2) + 1 <= n, got n={n}, d={d}, u={u}, c={c}"
        )));
    }
    // a_i = i-1; b_i = u+i-1; x_j next; fillers; p = n-1.
    let p = n - 1;
    let unknown: Vec<(usize, usize)> = (0..u).map(|i| (p, i)).collect();
    let mut conflicts: Vec<(usize, usize)> = (0..m - 1).map(|i| (u + i, i)).collect();
    conflicts.push((u + m - 1, p));
    let defects: Vec<usize> = (0..d.saturating_sub(1)).map(|j| u + m + j).collect();
    RepositoryInstance::new(n, vec![], unknown, conflicts, defects, false)
}

/// Path with one conflict: p sits off the path and conflicts with a_l, so
/// {p} + prefix_j succeeds exactly when j < l. Sibling instances at l and
/// l-1 answer identically everywhere except {p} + prefix_{l-1}.
pub fn single_conflict_path(n: usize, l: usize) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if n < 2 || l == 0 || l > n - 1 {
        return Err(Error::param(format!(
            "conflict position must satisfy 1 <= l <= n-1, got l={l}, n={n}"
        )));
    }
    // a_i = i-1 for i in 1..=n-1, p = n-1; path over the a's only.
    let deps: Vec<(usize, usize)> = (1..n - 1).map(|i| (i, i - 1)).collect();
    RepositoryInstance::new(n, deps, vec![], vec![(l - 1, n - 1)], vec![], false)
}

pub fn single_conflict_path_pair(
    n: usize,
    l: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    if l < 2 {
        return Err(Error::param("sibling pair needs l >= 2".to_string()));
    }
    Ok((single_conflict_path(n, l)?, single_conflict_path(n, l - 1)?))
}

/// Full path with one hidden dependency (a_i, a_n): only the i-prefix
/// distinguishes it from the sibling at i+1.
pub fn single_unknown_dep_path(n: usize, i: usize) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if i == 0 || i >= n {
        return Err(Error::param(format!(
            "dependency source must satisfy 1 <= i <= n-1, got i={i}, n={n}"
        )));
    }
    RepositoryInstance::new(n, path_deps(n), vec![(i - 1, n - 1)], vec![], vec![], false)
}

pub fn single_unknown_dep_path_pair(
    n: usize,
    i: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    if i + 1 >= n {
        return Err(Error::param("sibling pair needs i <= n-2".to_string()));
    }
    Ok((
        single_unknown_dep_path(n, i)?,
        single_unknown_dep_path(n, i + 1)?,
    ))
}

/// Fan for full learning: p (highest id) hiddenly depends on a_1..a_u,
/// directly conflicts with b_1..b_{c-1}, and x_1..x_d are root defects.
/// Whether p also conflicts with the probe package q is invisible without a
/// test containing p, q, and all the a's while dodging the b's and x's.
pub fn full_learning_conflict_fan(
    n: usize,
    d: usize,
    u: usize,
    c: usize,
) -> Result<RepositoryInstance> {
    full_learning_conflict_fan_variant(n, d, u, c, false)
}

/// Both scenarios: without and with the extra {p, q} conflict.
pub fn full_learning_conflict_fan_pair(
    n: usize,
    d: usize,
    u: usize,
    c: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    Ok((
        full_learning_conflict_fan_variant(n, d, u, c, false)?,
        full_learning_conflict_fan_variant(n, d, u, c, true)?,
    ))
}

fn full_learning_conflict_fan_variant(
    n: usize,
    d: usize,
    u: usize,
    c: usize,
    with_probe_conflict: bool,
) -> Result<RepositoryInstance> {
    guard_n(n)?;
    if c == 0 {
        return Err(Error::param("fan needs c >= 1".to_string()));
    }
    if 2 + u + (c - 1) + d > n {
        return Err(Error::param(format!(
            "fan needs 2 + u + (c-1) + d <= n, got n={n}, d={d}, u={u}, c={c}"
        )));
    }
    // a_i = i-1; b_i = u+i-1; x_j = u+c-2+j; fillers; q = n-2; p = n-1.
    let p = n - 1;
    let q = n - 2;
    let unknown: Vec<(usize, usize)> = (0..u).map(|i| (p, i)).collect();
    let mut conflicts: Vec<(usize, usize)> = (0..c - 1).map(|i| (u + i, p)).collect();
    if with_probe_conflict {
        conflicts.push((q, p));
    }
    let defects: Vec<usize> = (0..d).map(|j| u + c - 1 + j).collect();
    RepositoryInstance::new(n, vec![], unknown, conflicts, defects, false)
}

/// Adaptive lower-bound pair: inside the probe set P' = {0..u+d-1}, scenario
/// one makes {0..d-1} defective and cycles {d..d+u-1} through hidden
/// dependencies; scenario two swaps the roles, making {u..u+d-1} defective
/// with the cycle on {0..u-1}. Every installation touching P' fails in both
/// scenarios unless it has witness shape for one of them.
pub fn adaptive_lb_cycles(
    n: usize,
    d: usize,
    u: usize,
) -> Result<(RepositoryInstance, RepositoryInstance)> {
    guard_n(n)?;
    if d == 0 || u == 0 {
        return Err(Error::param("cycle pair needs d >= 1 and u >= 1".to_string()));
    }
    if 2 * (u + d) > n {
        return Err(Error::param(format!(
            "cycle pair needs 2(u+d) <= n, got n={n}, d={d}, u={u}"
        )));
    }
    let cycle = |members: &[usize]| -> Vec<(usize, usize)> {
        if members.len() < 2 {
            return Vec::new();
        }
        (0..members.len())
            .map(|k| (members[k], members[(k + 1) % members.len()]))
            .collect()
    };
    let a1: Vec<usize> = (0..d).collect();
    let a2: Vec<usize> = (d..d + u).collect();
    let b2: Vec<usize> = (0..u).collect();
    let b1: Vec<usize> = (u..u + d).collect();
    let scenario1 = RepositoryInstance::new(n, vec![], cycle(&a2), vec![], a1, false)?;
    let scenario2 = RepositoryInstance::new(n, vec![], cycle(&b2), vec![], b1, false)?;
    Ok((scenario1, scenario2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Installation;
    use crate::truth::enumerate_successful;

    fn success_masks(r: &RepositoryInstance) -> Vec<u64> {
        enumerate_successful(r).unwrap().iter().map(|i| i.to_mask()).collect()
    }

    fn prefix_mask(j: usize) -> u64 {
        (1u64 << j) - 1
    }

    #[test]
    fn path_root_defect_successes_are_the_empty_set_and_the_i_prefix() {
        for n in [4, 6, 8] {
            for i in 1..n {
                let r = path_root_defect(n, i).unwrap();
                let got = success_masks(&r);
                assert_eq!(got, vec![0, prefix_mask(i)], "n={n} i={i}");
                // Every success is a prefix of length at most i.
                for &m in &got {
                    assert!(m == 0 || m == prefix_mask(i));
                }
            }
        }
        // i = n-1 forces a maximum installation of size n-1.
        let r = path_root_defect(6, 5).unwrap();
        let max = crate::truth::max_subrepo_bruteforce(&r).unwrap();
        assert_eq!(max.len(), 5);
    }

    #[test]
    fn path_root_defect_twin_has_no_nonempty_success() {
        let (_, twin) = path_root_defect_pair(7, 3).unwrap();
        assert_eq!(success_masks(&twin), vec![0]);
    }

    #[test]
    fn star_pair_differs_exactly_on_witness_installations() {
        let (working, defective) = star_defects_pair(8, 2, 2).unwrap();
        // Witness shape: contains p=0 and all a's {1,2}, avoids x's {3}.
        let n = 8;
        let mut differing = Vec::new();
        for m in 0..1u64 << n {
            let a = working.evaluate(&Installation::from_mask(n, m)).unwrap();
            let b = defective.evaluate(&Installation::from_mask(n, m)).unwrap();
            if a != b {
                differing.push(m);
            }
        }
        let expected: Vec<u64> = (0..1u64 << n)
            .filter(|m| m & 0b111 == 0b111 && m & 0b1000 == 0)
            .collect();
        assert_eq!(differing, expected);
        assert_eq!(working.unknown_deps().len(), 2);
    }

    #[test]
    fn star_pivot_is_installable_with_its_prerequisites() {
        let r = star_defects(8, 2, 2).unwrap();
        let report = crate::truth::weak_relations(&r).unwrap();
        assert!(!report.true_defects.contains(&0));
        let max = crate::truth::max_subrepo_bruteforce(&r).unwrap();
        assert!(max.contains(0) && max.contains(1) && max.contains(2));
    }

    #[test]
    fn conflict_chain_weak_conflicts_count_is_c_for_odd_c() {
        // u=3, c=3: m=2, so b_1 conflicts a_1 and b_2 conflicts p.
        let r = conflict_chain(10, 1, 3, 3).unwrap();
        let report = crate::truth::weak_relations(&r).unwrap();
        assert_eq!(report.weak_conflict_pairs.len(), 3, "{report:?}");
        assert_eq!(r.unknown_deps().len(), 3);
        // Even c realizes c-1 weak conflicts; the off-by-one is inherent to
        // the pairing of b's with a's.
        let r = conflict_chain(10, 1, 3, 4).unwrap();
        let report = crate::truth::weak_relations(&r).unwrap();
        assert_eq!(report.weak_conflict_pairs.len(), 3);
    }

    #[test]
    fn conflict_chain_max_installation_excludes_pivot() {
        let r = conflict_chain(9, 1, 2, 1).unwrap();
        let max = crate::truth::max_subrepo_bruteforce(&r).unwrap();
        assert!(max.contains(0) && max.contains(1), "all a's present");
        assert!(!max.contains(8), "pivot excluded by tie-break");
    }

    #[test]
    fn single_conflict_path_prefix_successes() {
        let n = 7;
        for l in 1..n {
            let r = single_conflict_path(n, l).unwrap();
            for j in 0..n {
                // {p} + prefix_j
                let mut inst = Installation::from_mask(n, prefix_mask(j.min(n - 1)));
                inst.insert(n - 1);
                if j <= n - 2 {
                    let ok = r.evaluate(&inst).unwrap();
                    assert_eq!(ok, j < l, "l={l} j={j}");
                }
            }
        }
    }

    #[test]
    fn single_conflict_path_siblings_differ_on_one_installation() {
        let n = 7;
        for l in 2..n {
            let (hi, lo) = single_conflict_path_pair(n, l).unwrap();
            let mut differing = Vec::new();
            for m in 0..1u64 << n {
                let a = hi.evaluate(&Installation::from_mask(n, m)).unwrap();
                let b = lo.evaluate(&Installation::from_mask(n, m)).unwrap();
                if a != b {
                    differing.push(m);
                }
            }
            let witness = prefix_mask(l - 1) | 1 << (n - 1);
            assert_eq!(differing, vec![witness], "l={l}");
        }
    }

    #[test]
    fn single_unknown_dep_path_siblings_differ_on_the_i_prefix() {
        let n = 8;
        for i in 1..n - 1 {
            let (a, b) = single_unknown_dep_path_pair(n, i).unwrap();
            assert_eq!(a.unknown_deps().len(), 1);
            let mut differing = Vec::new();
            for m in 0..1u64 << n {
                let fa = a.evaluate(&Installation::from_mask(n, m)).unwrap();
                let fb = b.evaluate(&Installation::from_mask(n, m)).unwrap();
                if fa != fb {
                    differing.push(m);
                }
            }
            assert_eq!(differing, vec![prefix_mask(i)], "i={i}");
            // Shorter prefixes succeed in both scenarios.
            for j in 0..i {
                let inst = Installation::from_mask(n, prefix_mask(j));
                assert!(a.evaluate(&inst).unwrap());
                assert!(b.evaluate(&inst).unwrap());
            }
        }
    }

    #[test]
    fn fan_budgets_and_sibling_diff() {
        let (plain, conflicted) = full_learning_conflict_fan_pair(9, 1, 1, 2).unwrap();
        assert_eq!(plain.root_defects().len(), 1);
        let report = crate::truth::weak_relations(&plain).unwrap();
        assert!(report.weak_conflict_pairs.len() <= 2);

        // Differ exactly on installations with p, q, all a's, and no b/x.
        let n = 9;
        let p = n - 1;
        let q = n - 2;
        let mut differing = Vec::new();
        for m in 0..1u64 << n {
            let a = plain.evaluate(&Installation::from_mask(n, m)).unwrap();
            let b = conflicted.evaluate(&Installation::from_mask(n, m)).unwrap();
            if a != b {
                differing.push(m);
            }
        }
        let expected: Vec<u64> = (0..1u64 << n)
            .filter(|m| {
                let has = |i: usize| m >> i & 1 == 1;
                has(p) && has(q) && has(0) && !has(1) && !has(2)
            })
            .collect();
        assert_eq!(differing, expected);
    }

    #[test]
    fn cycle_pair_scenarios() {
        let n = 8;
        let (s1, s2) = adaptive_lb_cycles(n, 1, 2).unwrap();
        // Scenario one: defects {0}, cycle on {1,2}.
        assert_eq!(s1.root_defects(), &[0]);
        assert_eq!(s1.unknown_deps().len(), 2);
        // Any installation containing the cycle and no defect passes.
        for m in 0..1u64 << n {
            let inst = Installation::from_mask(n, m);
            let witness1 = m & 0b110 == 0b110 && m & 0b001 == 0;
            let witness2 = m & 0b011 == 0b011 && m & 0b100 == 0;
            let touches = m & 0b111 != 0;
            let f1 = s1.evaluate(&inst).unwrap();
            let f2 = s2.evaluate(&inst).unwrap();
            if touches && !witness1 && !witness2 {
                assert!(!f1 && !f2, "m={m:b} must fail in both");
            }
            if !touches {
                assert!(f1 && f2);
            }
            if witness1 {
                assert!(f1);
            }
            if witness2 {
                assert!(f2);
            }
        }
    }

    #[test]
    fn oversize_parameters_are_rejected() {
        assert!(path_root_defect(20, 3).is_err());
        assert!(path_root_defect(6, 0).is_err());
        assert!(path_root_defect(6, 6).is_err());
        assert!(conflict_chain(8, 1, 1, 3).is_err()); // c > 2u
        assert!(adaptive_lb_cycles(6, 2, 2).is_err()); // 2(u+d) > n
    }
}
