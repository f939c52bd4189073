//! Query-counting installation oracle.
//!
//! Learners see only the package count, the declared known dependencies, and
//! per-query boolean feedback; the full instance stays hidden behind this
//! type. Query counting is atomic and the optional log is append-ordered, so
//! a non-adaptive test battery may issue its queries from several threads.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::Result;
use crate::instance::{Installation, RepositoryInstance};

#[derive(Debug)]
pub struct InstallationOracle {
    instance: RepositoryInstance,
    queries: AtomicU64,
    log: Option<Mutex<Vec<(Installation, bool)>>>,
}

impl InstallationOracle {
    /// Oracle with query logging enabled.
    pub fn new(instance: RepositoryInstance) -> Self {
        InstallationOracle {
            instance,
            queries: AtomicU64::new(0),
            log: Some(Mutex::new(Vec::new())),
        }
    }

    /// Oracle that only counts, for long batches where the log is dead weight.
    pub fn without_log(instance: RepositoryInstance) -> Self {
        InstallationOracle {
            instance,
            queries: AtomicU64::new(0),
            log: None,
        }
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    /// The declared dependency structure; the only part of the instance a
    /// learner is allowed to read.
    pub fn known_deps(&self) -> &[(usize, usize)] {
        self.instance.known_deps()
    }

    /// Attempt an installation. Counts exactly one query per call.
    pub fn query(&self, inst: &Installation) -> Result<bool> {
        let ok = self.instance.evaluate(inst)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        if let Some(log) = &self.log {
            log.lock().unwrap().push((inst.clone(), ok));
        }
        Ok(ok)
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// The hidden instance, for truth-oracle comparisons in tests. Not part
    /// of what a learner may consult.
    #[cfg(test)]
    pub(crate) fn instance_for_verification(&self) -> &RepositoryInstance {
        &self.instance
    }

    /// Snapshot of the (installation, feedback) log, in query order.
    pub fn log_snapshot(&self) -> Option<Vec<(Installation, bool)>> {
        self.log.as_ref().map(|l| l.lock().unwrap().clone())
    }
}
