use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::{FeasibleSet, SparsityValue};
use crate::error::Result;
use crate::scalar::{Point, Real};

/// Cumulative oracle calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub fo: u64,
    pub loo: u64,
    pub sparse_proj: u64,
    pub exact_proj: u64,
}

impl CallCounts {
    /// LOO calls plus `r_hat` per sparse projection.
    pub fn loo_equivalents(&self, r_hat: usize) -> u64 {
        self.loo + r_hat as u64 * self.sparse_proj
    }
}

impl std::ops::AddAssign for CallCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.fo += rhs.fo;
        self.loo += rhs.loo;
        self.sparse_proj += rhs.sparse_proj;
        self.exact_proj += rhs.exact_proj;
    }
}

/// A feasible set whose oracle calls are tallied. Not shared across
/// threads; each solver run owns one.
pub struct CountingOracle<'a, T: Real> {
    set: &'a FeasibleSet<T>,
    counts: Cell<CallCounts>,
}

impl<'a, T: Real> CountingOracle<'a, T> {
    pub fn new(set: &'a FeasibleSet<T>) -> Self {
        Self {
            set,
            counts: Cell::new(CallCounts::default()),
        }
    }

    pub fn set(&self) -> &'a FeasibleSet<T> {
        self.set
    }

    pub fn counts(&self) -> CallCounts {
        self.counts.get()
    }

    fn bump(&self, f: impl FnOnce(&mut CallCounts)) {
        let mut c = self.counts.get();
        f(&mut c);
        self.counts.set(c);
    }

    pub fn record_fo(&self) {
        self.bump(|c| c.fo += 1);
    }

    pub fn loo(&self, g: &Point<T>) -> Result<Point<T>> {
        self.bump(|c| c.loo += 1);
        self.set.loo(g)
    }

    pub fn loo_vertex(&self, g: &Point<T>) -> Result<usize> {
        self.bump(|c| c.loo += 1);
        self.set.loo_vertex(g)
    }

    pub fn sparse_project(&self, x: &Point<T>, r: SparsityValue) -> Result<Point<T>> {
        self.bump(|c| c.sparse_proj += 1);
        self.set.sparse_project(x, r)
    }

    pub fn exact_project(&self, x: &Point<T>) -> Result<Point<T>> {
        self.bump(|c| c.exact_proj += 1);
        self.set.exact_project(x)
    }
}
