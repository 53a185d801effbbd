//! Per-iteration run records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};
use crate::instance::InstanceMeta;
use crate::oracles::CallCounts;
use crate::scalar::{Point, Real};

/// Every solver the harness knows how to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Accelerated outer loop, away-step inner solver.
    AfistaAfw,
    /// Sparse projection with an away-step fallback loop.
    AfistaSpAfw,
    /// Sparse projection with a plain Frank-Wolfe fallback loop.
    AfistaSpFw,
    /// Accelerated outer loop with exact projections (reference only).
    AfistaExact,
    /// Conditional gradient sliding.
    Cgs,
    /// Frank-Wolfe with exact line search.
    Fw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::AfistaAfw,
        Algorithm::AfistaSpAfw,
        Algorithm::AfistaSpFw,
        Algorithm::AfistaExact,
        Algorithm::Cgs,
        Algorithm::Fw,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::AfistaAfw => "AFISTA-AFW",
            Algorithm::AfistaSpAfw => "AFISTA-SP/AFW",
            Algorithm::AfistaSpFw => "AFISTA-SP/FW",
            Algorithm::AfistaExact => "AFISTA-EXACT",
            Algorithm::Cgs => "CGS",
            Algorithm::Fw => "FW",
        }
    }

    pub fn is_afista(&self) -> bool {
        matches!(
            self,
            Algorithm::AfistaAfw | Algorithm::AfistaSpAfw | Algorithm::AfistaSpFw | Algorithm::AfistaExact
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts the display label or a short alias (`afw`, `sp-afw`,
    /// `sp-fw`, `exact`, `cgs`, `fw`), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase();
        let alg = match key.as_str() {
            "afista-afw" | "afw" => Algorithm::AfistaAfw,
            "afista-sp/afw" | "sp-afw" | "sp/afw" => Algorithm::AfistaSpAfw,
            "afista-sp/fw" | "sp-fw" | "sp/fw" => Algorithm::AfistaSpFw,
            "afista-exact" | "exact" => Algorithm::AfistaExact,
            "cgs" | "gls" => Algorithm::Cgs,
            "fw" => Algorithm::Fw,
            _ => return Err(invalid(format!("unknown algorithm {s:?}"))),
        };
        Ok(alg)
    }
}

/// How an inner solve returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    SparseProjectionHit,
    FwLoop,
    AfwLoop,
    ExactProjection,
    /// Methods without an inner subproblem split.
    None,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::SparseProjectionHit => "sp-hit",
            Branch::FwLoop => "fw-loop",
            Branch::AfwLoop => "afw-loop",
            Branch::ExactProjection => "exact",
            Branch::None => "-",
        }
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "sp-hit" => Branch::SparseProjectionHit,
            "fw-loop" => Branch::FwLoop,
            "afw-loop" => Branch::AfwLoop,
            "exact" => Branch::ExactProjection,
            "-" => Branch::None,
            _ => return Err(invalid(format!("unknown branch tag {s:?}"))),
        })
    }
}

/// What the `error` column holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    /// `f(x_t) - f*`.
    Gap,
    /// `f(x_t)`, when `f*` is unknown.
    Value,
}

/// One outer iteration. Counters are cumulative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub error: f64,
    pub fo: u64,
    pub loo: u64,
    pub sparse_proj: u64,
    pub loo_equiv: u64,
    /// Inner iterations in this outer iteration (not cumulative).
    pub inner_iters: u64,
    pub branch: Branch,
    /// Inner tolerance `nu_t` (NaN for methods without one).
    pub nu: f64,
    /// Stopping value reported by the inner solver.
    pub certificate: f64,
    /// Stopping value recomputed with a fresh, uncounted LOO (NaN if not audited).
    pub audit_stop: f64,
    /// `omega_t(x_t)` recomputed with a fresh, uncounted LOO (NaN if not audited).
    pub audit_omega: f64,
    /// `1/2 ||x_t - x_{t-1}||^2`.
    pub step_dist: f64,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Aborted { outer_iter: usize, reason: String },
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Aborted { outer_iter, .. } => format!("aborted@{outer_iter}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub instance: Option<InstanceMeta>,
    pub r_hat: usize,
    pub error_kind: ErrorKind,
    /// Error of the starting point.
    pub initial_error: f64,
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn new(algorithm: Algorithm, instance: Option<InstanceMeta>, r_hat: usize, error_kind: ErrorKind, initial_error: f64) -> Self {
        Self {
            algorithm,
            instance,
            r_hat,
            error_kind,
            initial_error,
            rows: Vec::new(),
            status: RunStatus::Completed,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.instance.map(|m| m.seed)
    }

    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(self.initial_error, |r| r.error)
    }

    /// First outer iteration whose error is at most `eps`.
    pub fn first_iter_below(&self, eps: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.error <= eps).map(|r| r.outer_iter)
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// A finished (or aborted) run: its trace, last iterate and oracle tallies.
#[derive(Clone, Debug)]
pub struct RunOutcome<T: Real> {
    pub trace: RunTrace,
    pub x_final: Point<T>,
    pub counts: CallCounts,
}
