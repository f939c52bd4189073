//! CFF-driven learners: maximal sub-repository, full learning with known
//! dependencies, full learning with everything unknown (flat, layered, and
//! two-phase adaptive variants), plus the anytime wrapper that searches for
//! workable bounds.
//!
//! All inference reduces to the per-package success sets S(p): a package is
//! defective iff S(p) is empty, two packages weakly conflict iff their
//! success sets are disjoint, and p weakly depends on q iff S(p) is contained
//! in S(q). Those rules are sound as long as the instance respects the stated
//! bounds and the family really is cover-free; the acceptance suite checks
//! both against the brute-force oracle.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::cff::{build_randomized_cff, CoverFreeFamily};
use crate::error::{Error, Result};
use crate::instance::{Bounds, DependencyClosure, Installation};
use crate::oracle::InstallationOracle;

pub use crate::instance::Bounds as LearnerBounds;

/// Tests, their boolean feedback, and the derived success sets S(p).
#[derive(Debug, Clone)]
pub struct FeedbackTable {
    tests: Vec<Installation>,
    feedback: Vec<bool>,
    success_sets: Vec<FixedBitSet>,
}

impl FeedbackTable {
    pub fn tests(&self) -> &[Installation] {
        &self.tests
    }

    pub fn feedback(&self) -> &[bool] {
        &self.feedback
    }

    /// Indices of successful tests containing p.
    pub fn success_indices(&self, p: usize) -> Vec<usize> {
        self.success_sets[p].ones().collect()
    }

    /// Indices of all tests containing p, successful or not.
    pub fn test_indices(&self, p: usize) -> Vec<usize> {
        self.tests
            .iter()
            .enumerate()
            .filter(|(_, t)| t.contains(p))
            .map(|(i, _)| i)
            .collect()
    }

    fn defective(&self, p: usize) -> bool {
        self.success_sets[p].is_clear()
    }
}

/// Output of every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedModel {
    pub defects: Vec<usize>,
    pub weak_conflicts: Vec<(usize, usize)>,
    pub weak_deps: Vec<(usize, usize)>,
    pub queries_used: u64,
    pub bounds_used: Option<Bounds>,
}

impl LearnedModel {
    fn empty() -> Self {
        LearnedModel {
            defects: Vec::new(),
            weak_conflicts: Vec::new(),
            weak_deps: Vec::new(),
            queries_used: 0,
            bounds_used: None,
        }
    }

    /// Content equality: same constraints, ignoring query accounting.
    pub fn same_content(&self, other: &LearnedModel) -> bool {
        self.defects == other.defects
            && self.weak_conflicts == other.weak_conflicts
            && self.weak_deps == other.weak_deps
    }

    /// Learned dependency pairs together with the pairs implied by the
    /// declared dependencies, restricted to packages the model considers
    /// working. Learners that trust the declared graph leave `weak_deps`
    /// empty, so comparisons against ground truth go through this view.
    pub fn effective_deps(
        &self,
        n: usize,
        known_deps: &[(usize, usize)],
    ) -> Result<BTreeSet<(usize, usize)>> {
        let closure = crate::instance::RepositoryInstance::new(
            n,
            known_deps.to_vec(),
            vec![],
            vec![],
            vec![],
            false,
        )?
        .known_closure();
        let mut out: BTreeSet<(usize, usize)> = self.weak_deps.iter().copied().collect();
        for p in 0..n {
            if self.defects.contains(&p) {
                continue;
            }
            for q in 0..n {
                if p != q && !self.defects.contains(&q) && closure.reaches(p, q) {
                    out.insert((p, q));
                }
            }
        }
        Ok(out)
    }
}

/// Closes every family vector under known dependencies.
pub fn generate_tests(
    closure: &DependencyClosure,
    family: &CoverFreeFamily,
) -> Result<Vec<Installation>> {
    if family.n() != closure.n() {
        return Err(Error::WidthMismatch {
            expected: closure.n(),
            got: family.n(),
        });
    }
    Ok(family.vectors().iter().map(|v| closure.propagate(v)).collect())
}

/// Queries every test once, in order, and tabulates the success sets.
pub fn collect_feedback(
    oracle: &InstallationOracle,
    tests: Vec<Installation>,
) -> Result<FeedbackTable> {
    let n = oracle.n();
    let mut feedback = Vec::with_capacity(tests.len());
    for t in &tests {
        feedback.push(oracle.query(t)?);
    }
    let mut success_sets = vec![FixedBitSet::with_capacity(tests.len()); n];
    for (i, (t, &ok)) in tests.iter().zip(feedback.iter()).enumerate() {
        if ok {
            for p in t.ones() {
                success_sets[p].insert(i);
            }
        }
    }
    Ok(FeedbackTable {
        tests,
        feedback,
        success_sets,
    })
}

fn infer_defects(n: usize, table: &FeedbackTable) -> Vec<usize> {
    (0..n).filter(|&p| table.defective(p)).collect()
}

fn infer_conflicts(n: usize, table: &FeedbackTable) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for p in 0..n {
        if table.defective(p) {
            continue;
        }
        for q in (p + 1)..n {
            if !table.defective(q) && table.success_sets[p].is_disjoint(&table.success_sets[q]) {
                out.push((p, q));
            }
        }
    }
    out
}

fn infer_weak_deps(n: usize, table: &FeedbackTable) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for p in 0..n {
        if table.defective(p) {
            continue;
        }
        for q in 0..n {
            if q != p
                && !table.defective(q)
                && table.success_sets[p].is_subset(&table.success_sets[q])
            {
                out.push((p, q));
            }
        }
    }
    out
}

/// Maximal sub-repository with no conflicts: builds an (n, d, u+1) family,
/// propagates known dependencies, and returns the packages with a nonempty
/// success set. Under the bounds this is both the non-defect set and the
/// maximum installation.
pub fn learn_max_subrepo(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<Installation> {
    let n = oracle.n();
    let closure = crate::instance::RepositoryInstance::new(
        n,
        oracle.known_deps().to_vec(),
        vec![],
        vec![],
        vec![],
        false,
    )?
    .known_closure();
    let family = build_randomized_cff(n, bounds.d, bounds.u + 1, delta, seed)?;
    let tests = generate_tests(&closure, &family)?;
    let table = collect_feedback(oracle, tests)?;
    let mut keep = Installation::empty(n);
    for p in 0..n {
        if !table.defective(p) {
            keep.insert(p);
        }
    }
    Ok(keep)
}

/// Full learning with all dependencies declared: one (n, d+c, 2) family,
/// propagated. Learns defects and weak conflicts; the dependency closure
/// stays empty because dependencies are known.
pub fn learn_full_known_deps(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<LearnedModel> {
    let n = oracle.n();
    let closure = known_closure_of(oracle)?;
    let family = build_randomized_cff(n, bounds.d + bounds.c, 2, delta, seed)?;
    let tests = generate_tests(&closure, &family)?;
    let table = collect_feedback(oracle, tests)?;
    Ok(LearnedModel {
        defects: infer_defects(n, &table),
        weak_conflicts: infer_conflicts(n, &table),
        weak_deps: Vec::new(),
        queries_used: table.tests.len() as u64,
        bounds_used: Some(bounds),
    })
}

/// Two-phase variant: a (n, d+c, 1) family pins down the defects, then a
/// (n', c, 2) family over the surviving packages learns the conflicts.
pub fn learn_full_known_deps_adaptive(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<LearnedModel> {
    let n = oracle.n();
    let closure = known_closure_of(oracle)?;
    let phase_delta = delta / 2.0;

    let family1 = build_randomized_cff(n, bounds.d + bounds.c, 1, phase_delta, seed)?;
    let tests1 = generate_tests(&closure, &family1)?;
    let table1 = collect_feedback(oracle, tests1)?;
    let defects = infer_defects(n, &table1);
    let mut queries = table1.tests.len() as u64;

    let survivors: Vec<usize> = (0..n).filter(|p| !defects.contains(p)).collect();
    let mut weak_conflicts = Vec::new();
    if survivors.len() >= 2 {
        let family2 = subuniverse_family(
            survivors.len(),
            bounds.c,
            2,
            phase_delta,
            seed.wrapping_add(1),
        )?;
        let lifted = lift_vectors(n, &survivors, &family2);
        let tests2: Vec<Installation> = lifted.iter().map(|v| closure.propagate(v)).collect();
        let table2 = collect_feedback(oracle, tests2)?;
        queries += table2.tests.len() as u64;
        for &p in &survivors {
            for &q in &survivors {
                if p < q && table2.success_sets[p].is_disjoint(&table2.success_sets[q]) {
                    weak_conflicts.push((p, q));
                }
            }
        }
    }

    Ok(LearnedModel {
        defects,
        weak_conflicts,
        weak_deps: Vec::new(),
        queries_used: queries,
        bounds_used: Some(bounds),
    })
}

/// Full learning with nothing declared: raw (n, d+c+u+1, u+2) family, no
/// propagation. Learns defects, weak conflicts, and the weak-dependency
/// closure.
pub fn learn_full_unknown_deps(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<LearnedModel> {
    let n = oracle.n();
    let family = build_randomized_cff(
        n,
        bounds.d + bounds.c + bounds.u + 1,
        bounds.u + 2,
        delta,
        seed,
    )?;
    let table = collect_feedback(oracle, family.vectors().to_vec())?;
    Ok(model_with_deps(n, &table, bounds))
}

/// Layered test design: u+1 families, layer i sized for packages with
/// exactly i hidden prerequisites. Same inference over the pooled feedback,
/// fewer total queries than the flat family.
pub fn learn_full_unknown_deps_layered(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<LearnedModel> {
    let n = oracle.n();
    let layer_delta = delta / (bounds.u + 1) as f64;
    let mut tests = Vec::new();
    for i in 0..=bounds.u {
        let family = build_randomized_cff(
            n,
            bounds.d + bounds.c + (bounds.u - i) + 1,
            i + 2,
            layer_delta,
            seed.wrapping_add(i as u64),
        )?;
        tests.extend_from_slice(family.vectors());
    }
    let table = collect_feedback(oracle, tests)?;
    Ok(model_with_deps(n, &table, bounds))
}

/// Two-phase variant for the unknown-dependency setting: a (n, u+c+d, u+1)
/// family finds the defects, then a (n', u+c+d+1, u+2) family over the
/// survivors learns conflicts and dependencies.
pub fn learn_full_unknown_deps_adaptive(
    oracle: &InstallationOracle,
    bounds: Bounds,
    delta: f64,
    seed: u64,
) -> Result<LearnedModel> {
    let n = oracle.n();
    let phase_delta = delta / 2.0;
    let a1 = bounds.u + bounds.c + bounds.d;
    let family1 = build_randomized_cff(n, a1, bounds.u + 1, phase_delta, seed)?;
    let table1 = collect_feedback(oracle, family1.vectors().to_vec())?;
    let defects = infer_defects(n, &table1);
    let mut queries = table1.tests.len() as u64;

    let survivors: Vec<usize> = (0..n).filter(|p| !defects.contains(p)).collect();
    let mut weak_conflicts = Vec::new();
    let mut weak_deps = Vec::new();
    if survivors.len() >= 2 {
        let family2 = subuniverse_family(
            survivors.len(),
            bounds.u + bounds.c + bounds.d + 1,
            bounds.u + 2,
            phase_delta,
            seed.wrapping_add(1),
        )?;
        let tests2 = lift_vectors(n, &survivors, &family2);
        let table2 = collect_feedback(oracle, tests2)?;
        queries += table2.tests.len() as u64;
        for &p in &survivors {
            for &q in &survivors {
                if p < q && table2.success_sets[p].is_disjoint(&table2.success_sets[q]) {
                    weak_conflicts.push((p, q));
                }
                if p != q && table2.success_sets[p].is_subset(&table2.success_sets[q]) {
                    weak_deps.push((p, q));
                }
            }
        }
        weak_deps.sort_unstable();
    }

    Ok(LearnedModel {
        defects,
        weak_conflicts,
        weak_deps,
        queries_used: queries,
        bounds_used: Some(bounds),
    })
}

fn model_with_deps(n: usize, table: &FeedbackTable, bounds: Bounds) -> LearnedModel {
    LearnedModel {
        defects: infer_defects(n, table),
        weak_conflicts: infer_conflicts(n, table),
        weak_deps: infer_weak_deps(n, table),
        queries_used: table.tests.len() as u64,
        bounds_used: Some(bounds),
    }
}

fn known_closure_of(oracle: &InstallationOracle) -> Result<DependencyClosure> {
    Ok(crate::instance::RepositoryInstance::new(
        oracle.n(),
        oracle.known_deps().to_vec(),
        vec![],
        vec![],
        vec![],
        false,
    )?
    .known_closure())
}

/// Family over a shrunken universe. The excluded-set size is clamped to what
/// disjoint subsets of the sub-universe can actually realize; with fewer
/// packages than the included-set size the all-ones family is the best we
/// can offer.
fn subuniverse_family(
    n_sub: usize,
    a: usize,
    b: usize,
    delta: f64,
    seed: u64,
) -> Result<CoverFreeFamily> {
    let b_eff = b.min(n_sub);
    let a_eff = a.min(n_sub - b_eff);
    build_randomized_cff(n_sub, a_eff, b_eff, delta, seed)
}

fn lift_vectors(n: usize, survivors: &[usize], family: &CoverFreeFamily) -> Vec<Installation> {
    family
        .vectors()
        .iter()
        .map(|v| {
            let mut lifted = Installation::empty(n);
            for j in v.ones() {
                lifted.insert(survivors[j]);
            }
            lifted
        })
        .collect()
}

/// Result of the anytime bound search.
#[derive(Debug, Clone)]
pub struct AnytimeOutcome {
    pub model: LearnedModel,
    pub bounds: Bounds,
    /// True when the returned model reproduces every observed query and all
    /// of its exclusions are positively witnessed.
    pub consistent: bool,
    pub rounds: usize,
}

/// Iterates candidate bounds in nondecreasing order of d+c+u (bumping d
/// first, then c, then u), re-running the matching learner each round, and
/// stops at the first round whose model
///   1. fits its own claimed bounds,
///   2. reproduces the feedback of every query issued so far, and
///   3. has a positive witness for everything it excludes: a successful
///      installation containing each non-defect, each non-conflicting pair,
///      and, for each absent dependency (p, q), containing p without q.
///
/// Rule 1 rejects self-refuting rounds (a round with d = 0 that "learned"
/// defects), and rule 3 prevents stopping while some relation was never
/// exercised by any test. Gives up after the round cap (default d+c+u <= n)
/// and returns the last model flagged inconsistent.
pub fn anytime_full_learning(
    oracle: &InstallationOracle,
    delta: f64,
    seed: u64,
    round_cap: Option<usize>,
) -> Result<AnytimeOutcome> {
    let n = oracle.n();
    let cap = round_cap.unwrap_or(n);
    let known_deps = oracle.known_deps().to_vec();
    let closure = known_closure_of(oracle)?;
    let known_pairs: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|p| (0..n).map(move |q| (p, q)))
        .filter(|&(p, q)| p != q && closure.reaches(p, q))
        .collect();

    let mut pooled: Vec<(Installation, bool)> = Vec::new();
    let mut cumulative_queries = 0u64;
    let mut rounds = 0usize;
    let mut last_model = LearnedModel::empty();
    let mut last_bounds = Bounds::default();

    for total in 0..=cap {
        for d in (0..=total).rev() {
            for c in (0..=total - d).rev() {
                let u = total - d - c;
                let bounds = Bounds { d, u, c };
                let round_seed = seed.wrapping_add(rounds as u64);
                // Rounds with hidden dependencies use the layered design: its
                // per-layer excluded+included sizes stay within d+c+u+3, so it
                // expresses bound combinations the single flat family cannot
                // fit into n packages, and it is cheaper besides.
                let attempt = if u == 0 {
                    learn_full_known_deps(oracle, bounds, delta, round_seed)
                } else {
                    learn_full_unknown_deps_layered(oracle, bounds, delta, round_seed)
                };
                let mut model = match attempt {
                    Ok(m) => m,
                    // Bounds that no family over n packages can express are
                    // skipped, not fatal.
                    Err(Error::InvalidParameter(_)) | Err(Error::GuardExceeded(_)) => continue,
                    Err(e) => return Err(e),
                };
                rounds += 1;
                cumulative_queries += model.queries_used;
                let log = oracle
                    .log_snapshot()
                    .ok_or_else(|| Error::param("anytime learning needs a logging oracle"))?;
                let new_from = pooled.len();
                pooled.extend(log.into_iter().skip(new_from));

                model.queries_used = cumulative_queries;
                model.bounds_used = Some(bounds);

                if round_accepted(n, &bounds, &model, &known_deps, &known_pairs, &pooled) {
                    return Ok(AnytimeOutcome {
                        model,
                        bounds,
                        consistent: true,
                        rounds,
                    });
                }
                last_model = model;
                last_bounds = bounds;
            }
        }
    }

    Ok(AnytimeOutcome {
        model: last_model,
        bounds: last_bounds,
        consistent: false,
        rounds,
    })
}

/// Replays the pooled log against a candidate model. Exposed so callers can
/// audit a reported-consistent outcome.
pub fn model_explains_log(
    n: usize,
    model: &LearnedModel,
    known_deps: &[(usize, usize)],
    log: &[(Installation, bool)],
) -> bool {
    let mut defect_set = Installation::empty(n);
    for &d in &model.defects {
        defect_set.insert(d);
    }
    let deps: Vec<(usize, usize)> = known_deps
        .iter()
        .copied()
        .chain(model.weak_deps.iter().copied())
        .collect();
    log.iter().all(|(inst, recorded)| {
        let ok = inst.ones().all(|p| !defect_set.contains(p))
            && deps
                .iter()
                .all(|&(q, p)| !inst.contains(q) || inst.contains(p))
            && model
                .weak_conflicts
                .iter()
                .all(|&(a, b)| !(inst.contains(a) && inst.contains(b)));
        ok == *recorded
    })
}

fn round_accepted(
    n: usize,
    bounds: &Bounds,
    model: &LearnedModel,
    known_deps: &[(usize, usize)],
    known_pairs: &BTreeSet<(usize, usize)>,
    pooled: &[(Installation, bool)],
) -> bool {
    // 1. The model must fit the bounds it was learned under.
    if model.defects.len() > bounds.d || model.weak_conflicts.len() > bounds.c {
        return false;
    }
    let extra_deps: BTreeSet<(usize, usize)> = model
        .weak_deps
        .iter()
        .copied()
        .filter(|pair| !known_pairs.contains(pair))
        .collect();
    if min_realizing_edges(n, &extra_deps) > bounds.u {
        return false;
    }

    // 2. Replay.
    if !model_explains_log(n, model, known_deps, pooled) {
        return false;
    }

    // 3. Witnesses for every exclusion.
    let successes: Vec<&Installation> = pooled
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(inst, _)| inst)
        .collect();
    let defective = |p: usize| model.defects.contains(&p);
    let conflicting = |p: usize, q: usize| {
        model
            .weak_conflicts
            .contains(&(p.min(q), p.max(q)))
    };
    let dependent = |p: usize, q: usize| {
        known_pairs.contains(&(p, q)) || model.weak_deps.contains(&(p, q))
    };
    for p in 0..n {
        if defective(p) {
            continue;
        }
        if !successes.iter().any(|s| s.contains(p)) {
            return false;
        }
        for q in 0..n {
            if q == p || defective(q) {
                continue;
            }
            if p < q
                && !conflicting(p, q)
                && !successes.iter().any(|s| s.contains(p) && s.contains(q))
            {
                return false;
            }
            if !dependent(p, q) && !successes.iter().any(|s| s.contains(p) && !s.contains(q)) {
                return false;
            }
        }
    }
    true
}

/// Minimum number of edges whose reflexive-transitive closure reproduces the
/// given (transitively closed) pair set: each nontrivial strongly connected
/// component needs a cycle through all of its members, and the acyclic part
/// needs its transitive reduction.
fn min_realizing_edges(n: usize, pairs: &BTreeSet<(usize, usize)>) -> usize {
    use petgraph::graph::{DiGraph, NodeIndex};

    if pairs.is_empty() {
        return 0;
    }
    let mut graph = DiGraph::<(), ()>::with_capacity(n, pairs.len());
    for _ in 0..n {
        graph.add_node(());
    }
    for &(p, q) in pairs {
        graph.add_edge(NodeIndex::new(p), NodeIndex::new(q), ());
    }
    let components = petgraph::algo::tarjan_scc(&graph);
    let mut comp_of = vec![0usize; n];
    let mut cycle_edges = 0usize;
    for (cid, comp) in components.iter().enumerate() {
        for ix in comp {
            comp_of[ix.index()] = cid;
        }
        if comp.len() >= 2 {
            cycle_edges += comp.len();
        }
    }
    let condensed: BTreeSet<(usize, usize)> = pairs
        .iter()
        .map(|&(p, q)| (comp_of[p], comp_of[q]))
        .filter(|&(a, b)| a != b)
        .collect();
    // The input is a closure, so the condensed DAG is transitively closed and
    // its reduction keeps exactly the non-shortcut edges.
    let reduction = condensed
        .iter()
        .filter(|&&(a, b)| {
            !condensed
                .iter()
                .any(|&(x, y)| x == a && y != b && condensed.contains(&(y, b)))
        })
        .count();
    cycle_edges + reduction
}
