//! Ground-truth repository model: packages, dependencies, conflicts, defects,
//! and installation semantics.
//!
//! A dependency pair `(q, p)` always means "q depends on p": any installation
//! that includes `q` but excludes `p` fails. Conflicts are unordered pairs that
//! cannot coexist. Root defects fail every installation containing them, and a
//! package whose prerequisites include a defect fails transitively through the
//! dependency rule.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

/// Dense package identifier in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageId(pub usize);

impl PackageId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A subset of packages submitted as one oracle query. Fixed width `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Installation {
    bits: FixedBitSet,
}

impl Installation {
    pub fn empty(n: usize) -> Self {
        Installation {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        Installation { bits }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut inst = Installation::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::PackageOutOfRange(i, n));
            }
            inst.bits.insert(i);
        }
        Ok(inst)
    }

    /// Low bits of `mask` become members; only valid for `n <= 64`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        let mut inst = Installation::empty(n);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                inst.bits.insert(i);
            }
        }
        inst
    }

    /// Packed bitmask for `n <= 64`; package `i` occupies bit `i`.
    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.width() <= 64);
        let mut mask = 0u64;
        for i in self.bits.ones() {
            mask |= 1 << i;
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.remove(i);
    }

    pub fn union_with(&mut self, other: &Installation) {
        self.bits.union_with(&other.bits);
    }

    pub fn is_subset(&self, other: &Installation) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &Installation) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.ones().collect()
    }
}

/// Reflexive-transitive reachability over the known-dependency digraph.
/// `reach(p)` contains every package reachable from `p` via known edges,
/// including `p` itself.
#[derive(Debug, Clone)]
pub struct DependencyClosure {
    n: usize,
    reach: Vec<FixedBitSet>,
}

impl DependencyClosure {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reaches(&self, p: usize, q: usize) -> bool {
        self.reach[p].contains(q)
    }

    /// c(v): close an installation under known dependencies so that every
    /// member's prerequisites are included. Extensive, monotone, idempotent.
    pub fn propagate(&self, v: &Installation) -> Installation {
        assert_eq!(v.width(), self.n, "propagate width mismatch");
        let mut out = FixedBitSet::with_capacity(self.n);
        for p in v.ones() {
            out.union_with(&self.reach[p]);
        }
        Installation { bits: out }
    }
}

/// Bounds metadata carried by the JSON instance format: `d` caps total
/// defects, `u` unknown dependencies, `c` weak conflicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub d: usize,
    pub u: usize,
    pub c: usize,
}

impl Bounds {
    pub fn new(d: usize, u: usize, c: usize) -> Self {
        Bounds { d, u, c }
    }
}

/// The hidden ground truth a learner probes through installation attempts.
#[derive(Debug, Clone)]
pub struct RepositoryInstance {
    n: usize,
    known_deps: Vec<(usize, usize)>,
    unknown_deps: Vec<(usize, usize)>,
    conflicts: Vec<(usize, usize)>,
    root_defects: Vec<usize>,
    strict_model: bool,
}

impl RepositoryInstance {
    /// Validates and constructs an instance. The known-dependency digraph must
    /// be acyclic (run inputs through [`contract_sccs`] first if it is not).
    /// In strict mode no dependency may point at a root defect; relaxed mode
    /// (the default for generated instances) permits it.
    pub fn new(
        n: usize,
        known_deps: Vec<(usize, usize)>,
        unknown_deps: Vec<(usize, usize)>,
        conflicts: Vec<(usize, usize)>,
        root_defects: Vec<usize>,
        strict_model: bool,
    ) -> Result<Self> {
        let mut seen_deps = BTreeSet::new();
        for &(q, p) in known_deps.iter().chain(unknown_deps.iter()) {
            if q >= n {
                return Err(Error::PackageOutOfRange(q, n));
            }
            if p >= n {
                return Err(Error::PackageOutOfRange(p, n));
            }
            if q == p {
                return Err(Error::SelfDependency(q));
            }
            if !seen_deps.insert((q, p)) {
                return Err(Error::DuplicatePair(q, p));
            }
        }

        let mut canon_conflicts = Vec::with_capacity(conflicts.len());
        let mut seen_conflicts = BTreeSet::new();
        for &(a, b) in &conflicts {
            if a >= n {
                return Err(Error::PackageOutOfRange(a, n));
            }
            if b >= n {
                return Err(Error::PackageOutOfRange(b, n));
            }
            if a == b {
                return Err(Error::SelfConflict(a));
            }
            let pair = (a.min(b), a.max(b));
            if !seen_conflicts.insert(pair) {
                return Err(Error::DuplicatePair(pair.0, pair.1));
            }
            canon_conflicts.push(pair);
        }
        canon_conflicts.sort_unstable();

        let mut defects: Vec<usize> = root_defects;
        defects.sort_unstable();
        defects.dedup();
        if let Some(&d) = defects.iter().find(|&&d| d >= n) {
            return Err(Error::PackageOutOfRange(d, n));
        }

        if strict_model {
            let defect_set: BTreeSet<usize> = defects.iter().copied().collect();
            for &(q, p) in known_deps.iter().chain(unknown_deps.iter()) {
                if defect_set.contains(&p) {
                    return Err(Error::DependencyOnDefect(q, p));
                }
            }
        }

        let instance = RepositoryInstance {
            n,
            known_deps,
            unknown_deps,
            conflicts: canon_conflicts,
            root_defects: defects,
            strict_model,
        };
        // Rejecting cycles here keeps every constructed instance's invariants
        // locally checkable.
        instance.topological_sort()?;
        Ok(instance)
    }

    pub fn unconstrained(n: usize) -> Self {
        RepositoryInstance {
            n,
            known_deps: Vec::new(),
            unknown_deps: Vec::new(),
            conflicts: Vec::new(),
            root_defects: Vec::new(),
            strict_model: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn known_deps(&self) -> &[(usize, usize)] {
        &self.known_deps
    }

    pub fn unknown_deps(&self) -> &[(usize, usize)] {
        &self.unknown_deps
    }

    pub fn conflicts(&self) -> &[(usize, usize)] {
        &self.conflicts
    }

    pub fn root_defects(&self) -> &[usize] {
        &self.root_defects
    }

    pub fn strict_model(&self) -> bool {
        self.strict_model
    }

    /// True iff the installation violates no dependency, conflict, or defect
    /// constraint. The empty installation always succeeds.
    pub fn evaluate(&self, inst: &Installation) -> Result<bool> {
        if inst.width() != self.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: inst.width(),
            });
        }
        for &d in &self.root_defects {
            if inst.contains(d) {
                return Ok(false);
            }
        }
        for &(q, p) in self.known_deps.iter().chain(self.unknown_deps.iter()) {
            if inst.contains(q) && !inst.contains(p) {
                return Ok(false);
            }
        }
        for &(a, b) in &self.conflicts {
            if inst.contains(a) && inst.contains(b) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reflexive-transitive closure of the known-dependency digraph,
    /// computed once so tests can be propagated in linear time per vector.
    pub fn known_closure(&self) -> DependencyClosure {
        closure_of(self.n, &self.known_deps)
    }

    /// Prerequisites-first order: for every known dependency `(q, p)`,
    /// `p` appears before `q`. Ties break by ascending package id, so the
    /// output is deterministic.
    pub fn topological_sort(&self) -> Result<Vec<usize>> {
        topological_sort(self.n, &self.known_deps)
    }

    /// Defective packages all of whose direct prerequisites work: the set a
    /// root-defect finder is expected to return. Dependency semantics only,
    /// so meaningful when the instance has no conflicts.
    pub fn dependency_root_defects(&self) -> Vec<usize> {
        let defective = self.dependency_defects();
        (0..self.n)
            .filter(|&p| defective.contains(p))
            .filter(|&p| {
                self.known_deps
                    .iter()
                    .chain(self.unknown_deps.iter())
                    .all(|&(q, pre)| q != p || !defective.contains(pre))
            })
            .collect()
    }

    /// Packages that depend, transitively through known or unknown edges, on
    /// a root defect (the root defects themselves included). Conflict-induced
    /// defects are not covered here; the brute-force oracle computes those.
    pub fn dependency_defects(&self) -> Installation {
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for &(q, p) in self.known_deps.iter().chain(self.unknown_deps.iter()) {
            dependents[p].push(q);
        }
        let mut defective = Installation::empty(self.n);
        let mut stack: Vec<usize> = self.root_defects.clone();
        for &d in &stack {
            defective.insert(d);
        }
        while let Some(p) = stack.pop() {
            for &q in &dependents[p] {
                if !defective.contains(q) {
                    defective.insert(q);
                    stack.push(q);
                }
            }
        }
        defective
    }
}

fn closure_of(n: usize, deps: &[(usize, usize)]) -> DependencyClosure {
    let order = topological_sort(n, deps).expect("closure requires an acyclic digraph");
    let mut prereqs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(q, p) in deps {
        prereqs[q].push(p);
    }
    let mut reach: Vec<FixedBitSet> = (0..n)
        .map(|i| {
            let mut row = FixedBitSet::with_capacity(n);
            row.insert(i);
            row
        })
        .collect();
    // Prerequisites come first in the order, so each row only unions
    // already-final rows.
    for &q in &order {
        for i in 0..prereqs[q].len() {
            let p = prereqs[q][i];
            let (row_p, row_q) = if p < q {
                let (lo, hi) = reach.split_at_mut(q);
                (&lo[p], &mut hi[0])
            } else {
                let (lo, hi) = reach.split_at_mut(p);
                (&hi[0], &mut lo[q])
            };
            row_q.union_with(row_p);
        }
    }
    DependencyClosure { n, reach }
}

/// Standalone form of [`RepositoryInstance::topological_sort`] usable on raw
/// edge lists. Kahn's algorithm with a min-heap over ready vertices.
pub fn topological_sort(n: usize, deps: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing_prereqs = vec![0usize; n];
    for &(q, p) in deps {
        dependents[p].push(q);
        missing_prereqs[q] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| missing_prereqs[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(p)) = ready.pop() {
        order.push(p);
        for &q in &dependents[p] {
            missing_prereqs[q] -= 1;
            if missing_prereqs[q] == 0 {
                ready.push(Reverse(q));
            }
        }
    }
    if order.len() != n {
        let stuck = missing_prereqs
            .iter()
            .position(|&c| c > 0)
            .unwrap_or(0);
        return Err(Error::CyclicDependencies(stuck));
    }
    Ok(order)
}

/// Contracts strongly connected components of a (possibly cyclic) dependency
/// digraph into super-packages. Components are numbered in ascending order of
/// their smallest member, so an acyclic input yields the identity mapping.
pub fn contract_sccs(
    n: usize,
    deps: &[(usize, usize)],
) -> Result<(RepositoryInstance, Vec<usize>)> {
    use petgraph::graph::{DiGraph, NodeIndex};

    for &(q, p) in deps {
        if q >= n {
            return Err(Error::PackageOutOfRange(q, n));
        }
        if p >= n {
            return Err(Error::PackageOutOfRange(p, n));
        }
    }

    let mut graph = DiGraph::<(), ()>::with_capacity(n, deps.len());
    for _ in 0..n {
        graph.add_node(());
    }
    for &(q, p) in deps {
        graph.add_edge(NodeIndex::new(q), NodeIndex::new(p), ());
    }

    let mut components = petgraph::algo::tarjan_scc(&graph);
    components.sort_by_key(|comp| comp.iter().map(|ix| ix.index()).min().unwrap());

    let mut mapping = vec![0usize; n];
    for (cid, comp) in components.iter().enumerate() {
        for ix in comp {
            mapping[ix.index()] = cid;
        }
    }

    let mut contracted: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(q, p) in deps {
        let (cq, cp) = (mapping[q], mapping[p]);
        if cq != cp {
            contracted.insert((cq, cp));
        }
    }

    let instance = RepositoryInstance::new(
        components.len(),
        contracted.into_iter().collect(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
        false,
    )?;
    Ok((instance, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, k: &[(usize, usize)]) -> RepositoryInstance {
        RepositoryInstance::new(n, k.to_vec(), vec![], vec![], vec![], false).unwrap()
    }

    #[test]
    fn empty_installation_always_succeeds() {
        let r = RepositoryInstance::new(4, vec![(1, 0)], vec![(2, 1)], vec![(0, 3)], vec![3], false)
            .unwrap();
        assert!(r.evaluate(&Installation::empty(4)).unwrap());
    }

    #[test]
    fn dependency_chain_semantics() {
        // P = {0,1,2,3}, package 1 depends on 0, package 2 depends on 1.
        let r = inst(4, &[(1, 0), (2, 1)]);
        assert!(r.evaluate(&Installation::from_indices(4, &[0, 1]).unwrap()).unwrap());
        assert!(!r.evaluate(&Installation::from_indices(4, &[1]).unwrap()).unwrap());
    }

    #[test]
    fn conflict_semantics() {
        let r =
            RepositoryInstance::new(2, vec![], vec![], vec![(0, 1)], vec![], false).unwrap();
        assert!(!r.evaluate(&Installation::from_indices(2, &[0, 1]).unwrap()).unwrap());
        assert!(r.evaluate(&Installation::from_indices(2, &[0]).unwrap()).unwrap());
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let r = RepositoryInstance::unconstrained(3);
        assert_eq!(
            r.evaluate(&Installation::empty(4)),
            Err(Error::WidthMismatch { expected: 3, got: 4 })
        );
    }

    #[test]
    fn constructor_rejects_cycles_duplicates_and_self_edges() {
        assert!(matches!(
            RepositoryInstance::new(2, vec![(0, 1), (1, 0)], vec![], vec![], vec![], false),
            Err(Error::CyclicDependencies(_))
        ));
        assert!(matches!(
            RepositoryInstance::new(3, vec![(0, 1), (0, 1)], vec![], vec![], vec![], false),
            Err(Error::DuplicatePair(0, 1))
        ));
        assert!(matches!(
            RepositoryInstance::new(3, vec![(0, 1)], vec![(0, 1)], vec![], vec![], false),
            Err(Error::DuplicatePair(0, 1))
        ));
        assert!(matches!(
            RepositoryInstance::new(3, vec![(1, 1)], vec![], vec![], vec![], false),
            Err(Error::SelfDependency(1))
        ));
        assert!(matches!(
            RepositoryInstance::new(3, vec![], vec![], vec![(2, 2)], vec![], false),
            Err(Error::SelfConflict(2))
        ));
    }

    #[test]
    fn strict_mode_rejects_dependency_on_defect() {
        let r = RepositoryInstance::new(3, vec![(0, 2)], vec![], vec![], vec![2], true);
        assert_eq!(r.unwrap_err(), Error::DependencyOnDefect(0, 2));
        // Relaxed mode permits it.
        assert!(RepositoryInstance::new(3, vec![(0, 2)], vec![], vec![], vec![2], false).is_ok());
    }

    #[test]
    fn closure_identity_without_deps() {
        let r = RepositoryInstance::unconstrained(4);
        let c = r.known_closure();
        for p in 0..4 {
            for q in 0..4 {
                assert_eq!(c.reaches(p, q), p == q);
            }
        }
    }

    #[test]
    fn closure_on_chain() {
        let r = inst(4, &[(1, 0), (2, 1)]);
        let c = r.known_closure();
        assert!(c.reaches(2, 2) && c.reaches(2, 1) && c.reaches(2, 0));
        assert!(!c.reaches(2, 3));
        assert!(c.reaches(3, 3) && !c.reaches(3, 0));
    }

    /// Independent oracle: reachability by repeated squaring of the boolean
    /// adjacency matrix (with the diagonal set).
    fn matrix_power_reach(n: usize, deps: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for i in 0..n {
            m[i][i] = true;
        }
        for &(q, p) in deps {
            m[q][p] = true;
        }
        let mul = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| {
            let mut out = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if a[i][k] {
                        for j in 0..n {
                            out[i][j] |= b[k][j];
                        }
                    }
                }
            }
            out
        };
        let mut acc = m.clone();
        let mut steps = 1;
        while steps < n {
            acc = mul(&acc, &acc);
            steps *= 2;
        }
        acc
    }

    #[test]
    fn closure_matches_matrix_power_on_random_dags() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let n = 8;
            let mut deps = Vec::new();
            for p in 0..n {
                for q in (p + 1)..n {
                    if next() % 3 == 0 {
                        deps.push((q, p)); // forward edges only: acyclic
                    }
                }
            }
            let r = inst(n, &deps);
            let c = r.known_closure();
            let m = matrix_power_reach(n, &deps);
            for p in 0..n {
                for q in 0..n {
                    assert_eq!(c.reaches(p, q), m[p][q], "p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn propagate_matches_worked_example() {
        // P={0,1,2,3}, K={(1,0),(2,1)}, v=<0,1,0,0> closes to {0,1}.
        let r = inst(4, &[(1, 0), (2, 1)]);
        let c = r.known_closure();
        let v = Installation::from_indices(4, &[1]).unwrap();
        assert_eq!(c.propagate(&v), Installation::from_indices(4, &[0, 1]).unwrap());
    }

    #[test]
    fn propagate_is_identity_without_deps() {
        let r = RepositoryInstance::unconstrained(5);
        let c = r.known_closure();
        let v = Installation::from_indices(5, &[1, 3]).unwrap();
        assert_eq!(c.propagate(&v), v);
    }

    #[test]
    fn topological_sort_tie_break_and_path() {
        let r = RepositoryInstance::unconstrained(5);
        assert_eq!(r.topological_sort().unwrap(), vec![0, 1, 2, 3, 4]);

        // Path: package j depends on j-1; prerequisites first.
        let n = 6;
        let deps: Vec<_> = (1..n).map(|j| (j, j - 1)).collect();
        let r = inst(n, &deps);
        assert_eq!(r.topological_sort().unwrap(), (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn topological_sort_respects_every_edge() {
        let deps = vec![(4, 2), (2, 0), (3, 0), (4, 1), (1, 0), (5, 3)];
        let r = inst(6, &deps);
        let order = r.topological_sort().unwrap();
        let pos = |x: usize| order.iter().position(|&y| y == x).unwrap();
        for &(q, p) in &deps {
            assert!(pos(p) < pos(q), "prerequisite {p} must precede {q}");
        }
    }

    #[test]
    fn contract_sccs_identity_on_acyclic_input() {
        let (r, mapping) = contract_sccs(4, &[(1, 0), (2, 1)]).unwrap();
        assert_eq!(r.n(), 4);
        assert_eq!(mapping, vec![0, 1, 2, 3]);
        assert_eq!(r.known_deps(), &[(1, 0), (2, 1)]);
    }

    #[test]
    fn contract_sccs_collapses_cycle() {
        let (r, mapping) = contract_sccs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(r.n(), 1);
        assert_eq!(mapping, vec![0, 0, 0]);
        assert!(r.known_deps().is_empty());
    }

    #[test]
    fn contract_sccs_matches_mutual_reachability_partition() {
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let n = 10;
            let mut deps = Vec::new();
            for q in 0..n {
                for p in 0..n {
                    if q != p && next() % 5 == 0 {
                        deps.push((q, p));
                    }
                }
            }
            deps.sort_unstable();
            deps.dedup();
            let (contracted, mapping) = contract_sccs(n, &deps).unwrap();

            // Brute-force partition by pairwise mutual reachability.
            let reach = matrix_power_reach(n, &deps);
            for a in 0..n {
                for b in 0..n {
                    let mutual = reach[a][b] && reach[b][a];
                    assert_eq!(mapping[a] == mapping[b], mutual, "a={a} b={b}");
                }
            }
            let expected_components = {
                let mut ids: Vec<usize> = mapping.clone();
                ids.sort_unstable();
                ids.dedup();
                ids.len()
            };
            assert_eq!(contracted.n(), expected_components);
            // Output must satisfy the instance acyclicity invariant.
            assert!(contracted.topological_sort().is_ok());
        }
    }

    #[test]
    fn dependency_defects_follow_both_edge_kinds() {
        let r = RepositoryInstance::new(
            5,
            vec![(1, 0)],
            vec![(2, 1)],
            vec![],
            vec![0],
            false,
        )
        .unwrap();
        let d = r.dependency_defects();
        assert_eq!(d.indices(), vec![0, 1, 2]);
    }
}
