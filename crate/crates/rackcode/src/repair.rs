//! Types shared by the repair engines: requests, transcripts, and the
//! corrupted-helper hypothesis search.
//!
//! Both engines follow the same shape: helper racks send aggregated payloads,
//! the downloaded payloads plus parity structure overdetermine the missing
//! aggregates, and up to `error_budget` helper racks may be lying. The
//! resolution strategy treats each candidate set of liars as unknowns and
//! keeps the hypotheses whose systems stay consistent; all surviving
//! hypotheses provably agree on the repaired data, so any one of them is the
//! answer and the liars are identified afterwards by comparing received
//! payloads against the completed ones.

use crate::gf::FieldError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairScheme {
    /// Failure count fits the helper budget of the primary scheme.
    Base,
    /// Larger failure counts: extra rounds served by one additional helper.
    Extended,
}

/// A repair job: columns `failed` (all in rack `host`) are lost; racks in
/// `helpers` are contacted for aggregated reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRequest {
    pub host: usize,
    pub failed: Vec<usize>,
    pub helpers: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("nothing to repair: no failed columns")]
    EmptyFailure,
    #[error("failed columns span racks {racks:?}; repair handles one rack at a time")]
    FailuresSpanRacks { racks: Vec<usize> },
    #[error("failed columns live in rack {actual}, request names host {host}")]
    HostMismatch { host: usize, actual: usize },
    #[error("{failed} failures exceed the supported maximum {max} for this code")]
    TooManyFailures { failed: usize, max: usize },
    #[error("column {0} out of range")]
    BadColumn(usize),
    #[error("rack {0} out of range")]
    BadRack(usize),
    #[error("rack {0} is not a contacted helper; only in-transit payloads can be corrupted")]
    NotAHelper(usize),
    #[error("duplicate entry {0} in request")]
    Duplicate(usize),
    #[error("helper set contains the host rack {0}")]
    HelperIsHost(usize),
    #[error("expected {expected} helper racks for this scheme, got {got}")]
    WrongHelperCount { expected: usize, got: usize },
    #[error(
        "extended repair needs {required} helper racks but only {available} other racks exist"
    )]
    ExtendedUnsupported { required: usize, available: usize },
    #[error("no corruption hypothesis within budget {budget} is consistent")]
    NoConsistentHypothesis { budget: usize },
    #[error("distinct corruption hypotheses disagree; this indicates a code defect")]
    AmbiguousResolution,
    #[error("helper payload for rack {rack} is malformed")]
    BadPayload { rack: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Audit record of one repair run. Symbol counts are in base-field scalars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairTranscript {
    pub scheme: RepairScheme,
    pub host: usize,
    pub failed: Vec<usize>,
    pub helpers: Vec<usize>,
    /// Helper racks whose payloads were deliberately corrupted.
    pub corrupted_injected: Vec<usize>,
    /// Helper racks the decoder identified as corrupted.
    pub corrupted_detected: Vec<usize>,
    /// Symbols that crossed rack boundaries.
    pub downloaded_symbols: u64,
    /// Symbols helper racks read from disk to build their payloads.
    pub accessed_symbols: u64,
    /// Symbols read from the surviving columns of the host rack.
    pub local_reads: u64,
    pub ok: bool,
}

/// The rack shape a repair plan is validated against. Both code families
/// share the same topology rules; only the failure ceiling differs.
#[derive(Debug, Clone, Copy)]
pub struct RackLayout {
    pub rack_size: usize,
    pub racks: usize,
    /// k mod rack_size; base rounds cover failure counts up to
    /// rack_size - k_rem.
    pub k_rem: usize,
    pub helper_racks: usize,
    /// Largest failure count the code family supports in one rack.
    pub max_failures: usize,
}

impl RackLayout {
    fn n(&self) -> usize {
        self.rack_size * self.racks
    }

    fn rack_of(&self, col: usize) -> usize {
        col / self.rack_size
    }
}

/// Round assignments for a validated request.
#[derive(Debug, Clone)]
pub struct RepairPlan {
    pub scheme: RepairScheme,
    pub host: usize,
    /// Offsets of the failed columns within the host rack, ascending.
    pub failed_offsets: Vec<usize>,
    /// Helper racks, ascending.
    pub helpers: Vec<usize>,
    /// round_servers[m] = helper racks serving aggregation round m.
    pub round_servers: Vec<Vec<usize>>,
}

impl RepairPlan {
    pub fn rounds(&self) -> usize {
        self.round_servers.len()
    }

    pub fn rounds_of(&self, rack: usize) -> Vec<usize> {
        (0..self.rounds())
            .filter(|&m| self.round_servers[m].contains(&rack))
            .collect()
    }
}

/// Validates a request against a rack layout and assigns aggregation rounds
/// to helpers. Failure counts within the base limit use `helper_racks`
/// helpers for every round; beyond it, the rounds past the limit need one
/// extra helper rack.
pub fn plan(layout: &RackLayout, req: &RepairRequest) -> Result<RepairPlan, RepairError> {
    if req.failed.is_empty() {
        return Err(RepairError::EmptyFailure);
    }
    for &c in &req.failed {
        if c >= layout.n() {
            return Err(RepairError::BadColumn(c));
        }
    }
    let mut racks_of_failed: Vec<usize> = req.failed.iter().map(|&c| layout.rack_of(c)).collect();
    racks_of_failed.sort_unstable();
    racks_of_failed.dedup();
    if racks_of_failed.len() > 1 {
        return Err(RepairError::FailuresSpanRacks {
            racks: racks_of_failed,
        });
    }
    if racks_of_failed[0] != req.host {
        return Err(RepairError::HostMismatch {
            host: req.host,
            actual: racks_of_failed[0],
        });
    }
    let mut failed_offsets: Vec<usize> = req
        .failed
        .iter()
        .map(|&c| c % layout.rack_size)
        .collect();
    failed_offsets.sort_unstable();
    for w in failed_offsets.windows(2) {
        if w[0] == w[1] {
            return Err(RepairError::Duplicate(
                req.host * layout.rack_size + w[0],
            ));
        }
    }
    let h = failed_offsets.len();
    if h > layout.max_failures {
        return Err(RepairError::TooManyFailures {
            failed: h,
            max: layout.max_failures,
        });
    }
    let mut helpers = req.helpers.clone();
    helpers.sort_unstable();
    for w in helpers.windows(2) {
        if w[0] == w[1] {
            return Err(RepairError::Duplicate(w[0]));
        }
    }
    for &rk in &helpers {
        if rk >= layout.racks {
            return Err(RepairError::BadRack(rk));
        }
        if rk == req.host {
            return Err(RepairError::HelperIsHost(rk));
        }
    }
    let base_limit = layout.rack_size - layout.k_rem;
    let (scheme, expected) = if h <= base_limit {
        (RepairScheme::Base, layout.helper_racks)
    } else {
        let required = layout.helper_racks + 1;
        if required > layout.racks - 1 {
            return Err(RepairError::ExtendedUnsupported {
                required,
                available: layout.racks - 1,
            });
        }
        (RepairScheme::Extended, required)
    };
    if helpers.len() != expected {
        return Err(RepairError::WrongHelperCount {
            expected,
            got: helpers.len(),
        });
    }
    let round_servers: Vec<Vec<usize>> = (0..h)
        .map(|m| {
            if m < base_limit {
                helpers[..layout.helper_racks].to_vec()
            } else {
                helpers.clone()
            }
        })
        .collect();
    Ok(RepairPlan {
        scheme,
        host: req.host,
        failed_offsets,
        helpers,
        round_servers,
    })
}

/// All `size`-subsets of `items`, in lexicographic order.
pub(crate) fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > items.len() {
        return out;
    }
    if size == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    'walk: loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let n = items.len();
        let mut i = size;
        while i > 0 {
            i -= 1;
            if idx[i] < n - size + i {
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'walk;
            }
        }
        break;
    }
    out
}

/// Tries every corruption hypothesis of size up to `budget` over `helpers`.
/// `solve` returns `Ok(Some(_))` when its linear systems are consistent under
/// the hypothesis, `Ok(None)` when they are not. All consistent hypotheses
/// must agree on the completion; disagreement is a structural defect and is
/// reported as such.
pub(crate) fn resolve_with_errors<T, F>(
    helpers: &[usize],
    budget: usize,
    mut solve: F,
) -> Result<T, RepairError>
where
    T: PartialEq,
    F: FnMut(&[usize]) -> Result<Option<T>, RepairError>,
{
    let mut agreed: Option<T> = None;
    for size in 0..=budget.min(helpers.len()) {
        for support in subsets(helpers, size) {
            if let Some(completion) = solve(&support)? {
                match &agreed {
                    None => agreed = Some(completion),
                    Some(prev) => {
                        if *prev != completion {
                            return Err(RepairError::AmbiguousResolution);
                        }
                    }
                }
            }
        }
    }
    agreed.ok_or(RepairError::NoConsistentHypothesis { budget })
}
