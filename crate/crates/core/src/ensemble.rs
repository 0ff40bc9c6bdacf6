//! Deterministic parallel maps over realizations.

use std::ops::Range;

use rayon::prelude::*;

use crate::disorder::{sample_couplings, CouplingField, DistributionSpec, StreamKey};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::spectra::{solve_with, CountingFunction, SolverConfig, Spectrum};

/// `f(i)` for every index, results in index order regardless of scheduling.
/// `workers = None` uses the global rayon pool.
pub fn par_map_ordered<T, F>(indices: Range<u64>, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || indices.clone().into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
    }
}

/// Random couplings on a fixed geometry, realization `r` drawn from stream
/// `(master_seed, r)`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub domain: DomainSpec,
    pub dist: DistributionSpec,
    pub master_seed: u64,
    pub realizations: Range<u64>,
    pub solver: SolverConfig,
    pub workers: Option<usize>,
}

impl Ensemble {
    pub fn new(domain: DomainSpec, dist: DistributionSpec, master_seed: u64, realizations: u64) -> Self {
        Ensemble {
            domain,
            dist,
            master_seed,
            realizations: 0..realizations,
            solver: SolverConfig::default(),
            workers: None,
        }
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn len(&self) -> usize {
        (self.realizations.end - self.realizations.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.domain.volume()
    }

    pub fn key(&self, realization: u64) -> StreamKey {
        StreamKey::new(self.master_seed, realization)
    }

    pub fn field(&self, realization: u64) -> Result<CouplingField> {
        sample_couplings(&self.dist, self.domain.num_sites(), self.key(realization))
    }

    /// `f(r, ω_r)` over all realizations, in realization order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &CouplingField) -> Result<T> + Sync + Send,
    {
        par_map_ordered(self.realizations.clone(), self.workers, |r| {
            let field = self.field(r)?;
            f(r, &field)
        })
    }

    /// `N(E)` at each of `energies` for every realization.
    pub fn counts_at(&self, energies: &[f64]) -> Result<Vec<Vec<usize>>> {
        self.map(|_, field| {
            let cf = CountingFunction::new(&self.domain, field, self.solver)?;
            energies.iter().map(|&e| Ok(cf.count(e)?.count)).collect()
        })
    }

    /// Eigenvalue counts in each interval `[lo, hi)` for every realization.
    pub fn interval_counts(&self, intervals: &[(f64, f64)]) -> Result<Vec<Vec<usize>>> {
        let mut energies: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
        energies.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
        energies.dedup();
        let at = self.counts_at(&energies)?;
        let idx = |e: f64| energies.iter().position(|&x| x == e).expect("energy present");
        Ok(at
            .into_iter()
            .map(|row| intervals.iter().map(|&(a, b)| row[idx(b)] - row[idx(a)]).collect())
            .collect())
    }

    /// Spectrum in `window` for every realization.
    pub fn spectra(&self, window: (f64, f64)) -> Result<Vec<Spectrum>> {
        self.map(|_, field| {
            let cf = CountingFunction::new(&self.domain, field, self.solver)?;
            solve_with(&cf, window)
        })
    }
}
