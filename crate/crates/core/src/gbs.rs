//! Adaptive root-defect identification when every dependency is declared.
//!
//! Generalized binary splitting, adjusted so that each query is closed under
//! known dependencies: candidates are taken as prefixes of a
//! prerequisites-first topological order and every identified-good package is
//! carried along in later queries. With no conflicts and no unknown
//! dependencies a query then fails exactly when it contains a root defect,
//! and at most `B + r - 1` queries are spent overall, `B` being the group
//! testing information bound.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::instance::{topological_sort, Installation};
use crate::oracle::InstallationOracle;

/// Information-theoretic bound `B = ceil(log2 sum_{i<=r} C(n, i))`, in exact
/// integer arithmetic.
pub fn group_testing_lower_bound(n: usize, r: usize) -> Result<u64> {
    if r > n {
        return Err(Error::param(format!("defect bound r={r} exceeds n={n}")));
    }
    let mut sum = BigUint::from(0u32);
    let mut term = BigUint::from(1u32); // C(n, 0)
    sum += &term;
    for i in 1..=r {
        term = term * BigUint::from((n - i + 1) as u64) / BigUint::from(i as u64);
        sum += &term;
    }
    let one = BigUint::from(1u32);
    if sum == one {
        return Ok(0);
    }
    Ok((sum - one).bits())
}

/// Search state: identified-good packages are added to every later query so
/// prerequisites of untested candidates stay satisfied.
#[derive(Debug)]
pub struct GbsState {
    pub cleared: Installation,
    pub found_roots: Vec<usize>,
    /// Untested candidates, kept sorted by topological position.
    pub untested: Vec<usize>,
    pub remaining_bound: usize,
    pub order: Vec<usize>,
}

/// Finds all root defects, assuming the instance has at most `r` of them and
/// no conflicts or unknown dependencies. Returns the sorted defect set.
///
/// The `<= r` promise is load-bearing twice over: the search stops once `r`
/// roots are found (staying within `B + r - 1` queries), and feedback that
/// contradicts earlier clearances raises `InconsistentInstance` instead of
/// mis-answering.
pub fn find_defects(oracle: &InstallationOracle, r: usize) -> Result<Vec<usize>> {
    let n = oracle.n();
    if r > n {
        return Err(Error::param(format!("defect bound r={r} exceeds n={n}")));
    }
    if r == 0 {
        // The caller asserts there is nothing to find.
        return Ok(Vec::new());
    }
    let deps = oracle.known_deps().to_vec();
    let order = topological_sort(n, &deps)?;

    // dependents[p] lists every package that transitively depends on p,
    // p itself included; removing a root defect removes all of them.
    let dependents = dependents_table(n, &deps);

    let mut state = GbsState {
        cleared: Installation::empty(n),
        found_roots: Vec::new(),
        untested: order.clone(),
        remaining_bound: r,
        order,
    };

    // Once the budget hits zero the <= r promise certifies everything still
    // untested; testing on would blow the B + r - 1 query bound.
    while state.remaining_bound > 0 && state.untested.len() + 2 > 2 * state.remaining_bound {
        let len = state.untested.len();
        if len == 0 {
            break;
        }
        let l = len - state.remaining_bound + 1;
        let alpha = (l / state.remaining_bound).ilog2();
        let t_size = 1usize << alpha;
        let suspects: Vec<usize> = state.untested[..t_size].to_vec();

        if query_with_cleared(oracle, &state.cleared, &suspects)? {
            for &p in &suspects {
                state.cleared.insert(p);
            }
        } else {
            let defect = find_single_defect(oracle, &suspects, &mut state)?;
            record_defect(&mut state, defect, &dependents)?;
        }
        let cleared = &state.cleared;
        state.untested.retain(|&p| !cleared.contains(p));
    }

    // Few enough candidates remain to test them one by one, in order, so each
    // query still has its prerequisites either cleared or already condemned.
    let snapshot = state.untested.clone();
    let mut removed = Installation::empty(n);
    for &p in &snapshot {
        if state.remaining_bound == 0 {
            break;
        }
        if removed.contains(p) {
            continue;
        }
        if query_with_cleared(oracle, &state.cleared, &[p])? {
            state.cleared.insert(p);
        } else {
            record_defect(&mut state, p, &dependents)?;
            for q in dependents[p].ones() {
                removed.insert(q);
            }
        }
    }

    let mut roots = state.found_roots;
    roots.sort_unstable();
    Ok(roots)
}

/// Binary split over a failing suspect group: narrows to one root defect in
/// at most `ceil(log2 |suspects|)` queries, clearing every half that passes.
/// Callers must have seen `suspects + cleared` fail.
pub fn find_single_defect(
    oracle: &InstallationOracle,
    suspects: &[usize],
    state: &mut GbsState,
) -> Result<usize> {
    assert!(!suspects.is_empty(), "cannot split an empty suspect set");
    let mut active: Vec<usize> = suspects.to_vec();
    while active.len() > 1 {
        let half = active.len() / 2;
        let lower = &active[..half];
        if query_with_cleared(oracle, &state.cleared, lower)? {
            for &p in lower {
                state.cleared.insert(p);
            }
            active.drain(..half);
        } else {
            active.truncate(half);
        }
    }
    Ok(active[0])
}

fn record_defect(
    state: &mut GbsState,
    defect: usize,
    dependents: &[Installation],
) -> Result<()> {
    if state.cleared.contains(defect) {
        return Err(Error::InconsistentInstance(format!(
            "package {defect} was cleared earlier but is now implicated"
        )));
    }
    for q in dependents[defect].ones() {
        if state.cleared.contains(q) {
            return Err(Error::InconsistentInstance(format!(
                "cleared package {q} depends on discovered root defect {defect}"
            )));
        }
    }
    state.found_roots.push(defect);
    let deps = &dependents[defect];
    state.untested.retain(|&p| !deps.contains(p));
    state.remaining_bound -= 1;
    Ok(())
}

fn query_with_cleared(
    oracle: &InstallationOracle,
    cleared: &Installation,
    extra: &[usize],
) -> Result<bool> {
    let mut inst = cleared.clone();
    for &p in extra {
        inst.insert(p);
    }
    oracle.query(&inst)
}

fn dependents_table(n: usize, deps: &[(usize, usize)]) -> Vec<Installation> {
    let mut dependents_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(q, p) in deps {
        dependents_adj[p].push(q);
    }
    (0..n)
        .map(|p| {
            let mut set = Installation::empty(n);
            set.insert(p);
            let mut stack = vec![p];
            while let Some(x) = stack.pop() {
                for &q in &dependents_adj[x] {
                    if !set.contains(q) {
                        set.insert(q);
                        stack.push(q);
                    }
                }
            }
            set
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::RepositoryInstance;

    fn path_instance(n: usize, defects: &[usize]) -> RepositoryInstance {
        let deps: Vec<_> = (1..n).map(|j| (j, j - 1)).collect();
        RepositoryInstance::new(n, deps, vec![], vec![], defects.to_vec(), false).unwrap()
    }

    #[test]
    fn lower_bound_arithmetic() {
        // n=8, r=2: 1 + 8 + 28 = 37, ceil(log2 37) = 6.
        assert_eq!(group_testing_lower_bound(8, 2).unwrap(), 6);
        // n=4, r=1: 1 + 4 = 5, ceil(log2 5) = 3.
        assert_eq!(group_testing_lower_bound(4, 1).unwrap(), 3);
        assert_eq!(group_testing_lower_bound(100, 0).unwrap(), 0);
        assert!(group_testing_lower_bound(4, 5).is_err());
    }

    #[test]
    fn no_defects_power_of_two_resolves_in_one_query() {
        let oracle = InstallationOracle::new(RepositoryInstance::unconstrained(8));
        let roots = find_defects(&oracle, 1).unwrap();
        assert!(roots.is_empty());
        assert_eq!(oracle.query_count(), 1);
    }

    #[test]
    fn r_zero_trusts_the_bound() {
        let oracle = InstallationOracle::new(RepositoryInstance::unconstrained(8));
        assert!(find_defects(&oracle, 0).unwrap().is_empty());
        assert_eq!(oracle.query_count(), 0);
    }

    #[test]
    fn path_graph_single_defect_within_bound() {
        // Path on 8 packages with the root defect in the middle.
        for defect in 0..8 {
            let oracle = InstallationOracle::new(path_instance(8, &[defect]));
            let roots = find_defects(&oracle, 1).unwrap();
            assert_eq!(roots, vec![defect]);
            let bound = group_testing_lower_bound(8, 1).unwrap(); // + r - 1 = + 0
            assert!(
                oracle.query_count() <= bound,
                "defect {defect}: {} queries > bound {bound}",
                oracle.query_count()
            );
        }
    }

    #[test]
    fn single_defect_split_uses_at_most_alpha_queries() {
        // |T| = 2^alpha: sweep every defect placement and count queries.
        for alpha in 0..=4u32 {
            let n = 1usize << alpha;
            for defect in 0..n {
                let instance =
                    RepositoryInstance::new(n, vec![], vec![], vec![], vec![defect], false)
                        .unwrap();
                let oracle = InstallationOracle::new(instance);
                let mut state = GbsState {
                    cleared: Installation::empty(n),
                    found_roots: Vec::new(),
                    untested: (0..n).collect(),
                    remaining_bound: 1,
                    order: (0..n).collect(),
                };
                let suspects: Vec<usize> = (0..n).collect();
                let found = find_single_defect(&oracle, &suspects, &mut state).unwrap();
                assert_eq!(found, defect);
                assert!(
                    oracle.query_count() <= alpha as u64,
                    "alpha={alpha} defect={defect} used {}",
                    oracle.query_count()
                );
            }
        }
    }

    #[test]
    fn singleton_suspect_needs_no_query() {
        let oracle = InstallationOracle::new(RepositoryInstance::unconstrained(4));
        let mut state = GbsState {
            cleared: Installation::empty(4),
            found_roots: Vec::new(),
            untested: (0..4).collect(),
            remaining_bound: 1,
            order: (0..4).collect(),
        };
        assert_eq!(find_single_defect(&oracle, &[2], &mut state).unwrap(), 2);
        assert_eq!(oracle.query_count(), 0);
    }

    #[test]
    fn defect_with_dependents_reports_only_the_root() {
        // 4 depends on 2 depends on 0; 0 defective makes 2 and 4 derived.
        let instance = RepositoryInstance::new(
            5,
            vec![(4, 2), (2, 0)],
            vec![],
            vec![],
            vec![0],
            false,
        )
        .unwrap();
        let oracle = InstallationOracle::new(instance);
        let roots = find_defects(&oracle, 2).unwrap();
        assert_eq!(roots, vec![0]);
        let bound = group_testing_lower_bound(5, 2).unwrap() + 1;
        assert!(oracle.query_count() <= bound);
    }

    #[test]
    fn over_budget_instance_truncates_at_the_promise() {
        // Three isolated defects with r = 2: the search trusts the bound and
        // stops at two genuine roots. Detecting the excess would need extra
        // queries past B + r - 1.
        let instance =
            RepositoryInstance::new(6, vec![], vec![], vec![], vec![0, 2, 4], false).unwrap();
        let oracle = InstallationOracle::new(instance);
        let found = find_defects(&oracle, 2).unwrap();
        assert_eq!(found.len(), 2);
        assert!(found.iter().all(|p| [0, 2, 4].contains(p)));
    }

    #[test]
    fn stops_as_soon_as_the_budget_is_spent() {
        for n in [16usize, 32, 33, 48] {
            for defects in [vec![0], vec![3, 7], vec![1, n - 2]] {
                let r = defects.len();
                let instance =
                    RepositoryInstance::new(n, vec![], vec![], vec![], defects.clone(), false)
                        .unwrap();
                let oracle = InstallationOracle::new(instance);
                let found = find_defects(&oracle, r).unwrap();
                let mut expected = defects.clone();
                expected.sort_unstable();
                assert_eq!(found, expected);
                let bound = group_testing_lower_bound(n, r).unwrap() + r as u64 - 1;
                assert!(
                    oracle.query_count() <= bound,
                    "n={n} defects={defects:?}: {} > {bound}",
                    oracle.query_count()
                );
            }
        }
    }

    #[test]
    fn query_log_is_deterministic_and_respects_ordering_reservoir() {
        let deps = vec![(3, 1), (4, 1), (1, 0), (5, 2)];
        let instance =
            RepositoryInstance::new(6, deps.clone(), vec![], vec![], vec![1], false).unwrap();

        let run = |instance: &RepositoryInstance| {
            let oracle = InstallationOracle::new(instance.clone());
            let roots = find_defects(&oracle, 2).unwrap();
            (roots, oracle.log_snapshot().unwrap())
        };
        let (roots1, log1) = run(&instance);
        let (roots2, log2) = run(&instance);
        assert_eq!(roots1, vec![1]);
        assert_eq!(roots1, roots2);
        assert_eq!(log1, log2);

        // Ordering reservoir: a query contains p without q (q earlier in L)
        // only if q ends up condemned as a defect or a dependent of one.
        let order = instance.topological_sort().unwrap();
        let pos: Vec<usize> = {
            let mut pos = vec![0; 6];
            for (i, &p) in order.iter().enumerate() {
                pos[p] = i;
            }
            pos
        };
        let condemned = instance.dependency_defects();
        for (inst, _) in &log1 {
            for p in inst.ones() {
                for q in 0..6 {
                    if pos[q] < pos[p] && !inst.contains(q) {
                        assert!(
                            condemned.contains(q),
                            "query tested {p} without earlier {q}"
                        );
                    }
                }
            }
        }
    }
}
