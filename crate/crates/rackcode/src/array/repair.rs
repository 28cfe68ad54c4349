//! Multi-node repair for the array code.
//!
//! To repair `h` columns inside one rack, each helper rack ships `h` rounds
//! of aggregated symbols: round `m` weights its rack's columns by powers
//! `root^(g*m)` and restricts to rows whose host digit is zero. Parity rows
//! whose exponent is congruent to `m` modulo the rack size see exactly those
//! aggregates, which yields, per round:
//!
//! 1. a completion system that pins down the aggregates of racks that were
//!    not contacted (host terms cancel between parity rows a whole digit
//!    cycle apart), with spare equations left over to catch lying helpers;
//! 2. the host rack's own aggregate on every row, read off parity rows one
//!    digit shift at a time;
//! 3. an unlock step per row: `h` aggregate values form a small transposed
//!    Vandermonde system in the failed columns' root powers.
//!
//! Downloaded volume is `rounds * base_rows` per helper; bytes read by a
//! helper are independent of `h` because every round reuses the same
//! restricted rows.

use super::ArrayCodeParams;
use crate::gf::{self, FieldElement, FieldError, Matrix};
use crate::repair::{
    plan, resolve_with_errors, RackLayout, RepairError, RepairPlan, RepairRequest,
    RepairTranscript,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Validates a request against the code shape and assigns rounds to helpers.
pub fn plan_repair(
    params: &ArrayCodeParams,
    req: &RepairRequest,
) -> Result<RepairPlan, RepairError> {
    plan(
        &RackLayout {
            rack_size: params.rack_size(),
            racks: params.racks(),
            k_rem: params.k_rem(),
            helper_racks: params.helper_racks(),
            // A whole rack can be rebuilt from the other racks alone.
            max_failures: params.rack_size(),
        },
        req,
    )
}

/// Rows whose digit for `host` is zero, ascending. These are the only rows a
/// helper touches.
pub fn base_rows(params: &ArrayCodeParams, host: usize) -> Vec<usize> {
    (0..params.rows())
        .filter(|&j| params.digit(j, host) == 0)
        .collect()
}

/// Position of a base row within the ascending base-row enumeration: its
/// digits with the host digit deleted.
fn compress(params: &ArrayCodeParams, host: usize, j: usize) -> usize {
    let mut acc = 0usize;
    let mut mult = 1usize;
    for i in 0..params.racks() {
        if i == host {
            continue;
        }
        acc += params.digit(j, i) * mult;
        mult *= params.radix();
    }
    acc
}

/// One helper rack's aggregates: for each requested round m, the vector over
/// base rows of sum_g root^(g*m) * column_g[row].
pub fn helper_payload(
    params: &ArrayCodeParams,
    rack_columns: &[Vec<FieldElement>],
    host: usize,
    rounds: &[usize],
) -> BTreeMap<usize, Vec<FieldElement>> {
    assert_eq!(rack_columns.len(), params.rack_size());
    let f = params.field();
    let rows0 = base_rows(params, host);
    rounds
        .iter()
        .map(|&m| {
            let vec: Vec<FieldElement> = rows0
                .iter()
                .map(|&j| {
                    let mut acc = f.zero();
                    for (g, col) in rack_columns.iter().enumerate() {
                        let w = f.pow(params.rack_root(), (g * m) as u64);
                        acc = f.add(&acc, &f.mul(&w, &col[j]));
                    }
                    acc
                })
                .collect();
            (m, vec)
        })
        .collect()
}

/// Payloads downloaded from helper racks, with exact symbol accounting.
#[derive(Debug, Clone)]
pub struct PayloadSet {
    /// rack -> round -> aggregate vector over base rows.
    per_rack: BTreeMap<usize, BTreeMap<usize, Vec<FieldElement>>>,
    corrupted: Vec<usize>,
    downloaded: u64,
    accessed: u64,
}

impl PayloadSet {
    pub fn downloaded_symbols(&self) -> u64 {
        self.downloaded
    }

    pub fn accessed_symbols(&self) -> u64 {
        self.accessed
    }

    pub fn rounds_of(&self, rack: usize) -> Option<&BTreeMap<usize, Vec<FieldElement>>> {
        self.per_rack.get(&rack)
    }

    /// Replaces every payload vector of `rack` with fresh random values,
    /// modelling a lying or bit-rotted helper. Guaranteed to differ from the
    /// original payload.
    pub fn corrupt_rack(
        &mut self,
        params: &ArrayCodeParams,
        rack: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(), RepairError> {
        let f = params.field();
        let Some(rounds) = self.per_rack.get_mut(&rack) else {
            return Err(RepairError::NotAHelper(rack));
        };
        for (_, vec) in rounds.iter_mut() {
            loop {
                let fresh: Vec<FieldElement> = vec.iter().map(|_| f.random(rng)).collect();
                if fresh != *vec {
                    *vec = fresh;
                    break;
                }
            }
        }
        if !self.corrupted.contains(&rack) {
            self.corrupted.push(rack);
            self.corrupted.sort_unstable();
        }
        Ok(())
    }
}

/// Computes every helper's payload for its assigned rounds and tallies the
/// download/access volumes.
pub fn collect_payloads(
    params: &ArrayCodeParams,
    columns: &[Vec<FieldElement>],
    plan: &RepairPlan,
) -> PayloadSet {
    assert_eq!(columns.len(), params.n());
    let u = params.rack_size();
    let base_len = params.rows() / params.radix();
    let mut per_rack = BTreeMap::new();
    let mut downloaded = 0u64;
    let mut accessed = 0u64;
    for &rack in &plan.helpers {
        let rounds = plan.rounds_of(rack);
        if rounds.is_empty() {
            continue;
        }
        let rack_cols = &columns[rack * u..(rack + 1) * u];
        let payload = helper_payload(params, rack_cols, plan.host, &rounds);
        downloaded += (rounds.len() * base_len) as u64;
        accessed += (u * base_len) as u64;
        per_rack.insert(rack, payload);
    }
    PayloadSet {
        per_rack,
        corrupted: Vec::new(),
        downloaded,
        accessed,
    }
}

/// What a successful repair returns: the rebuilt columns and the audit
/// transcript.
#[derive(Debug)]
pub struct RepairOutcome {
    pub columns: BTreeMap<usize, Vec<FieldElement>>,
    pub transcript: RepairTranscript,
}

#[derive(Debug, PartialEq)]
struct Completion {
    repaired: BTreeMap<usize, Vec<FieldElement>>,
    /// round -> rack -> completed aggregate vector (every non-host rack).
    aggregates: BTreeMap<usize, BTreeMap<usize, Vec<FieldElement>>>,
}

/// Rebuilds the failed columns from helper payloads plus the host rack's
/// surviving columns. `survivors` must hold exactly the non-failed columns
/// of the host rack, keyed by global column index.
pub fn repair(
    params: &ArrayCodeParams,
    survivors: &BTreeMap<usize, Vec<FieldElement>>,
    req: &RepairRequest,
    payloads: &PayloadSet,
) -> Result<RepairOutcome, RepairError> {
    let plan = plan_repair(params, req)?;
    let f = params.field();
    let u = params.rack_size();
    let host = plan.host;
    let h = plan.rounds();
    let radix = params.radix();
    let rows0 = base_rows(params, host);
    let base_len = rows0.len();

    // Survivors: exactly the host columns that did not fail, nothing else.
    for g in 0..u {
        let col = host * u + g;
        let is_failed = plan.failed_offsets.contains(&g);
        match survivors.get(&col) {
            Some(data) if !is_failed => {
                if data.len() != params.rows() {
                    return Err(RepairError::BadColumn(col));
                }
            }
            None if is_failed => {}
            _ => return Err(RepairError::BadColumn(col)),
        }
    }
    if let Some(&stray) = survivors.keys().find(|&&c| params.rack_of(c) != host) {
        return Err(RepairError::BadColumn(stray));
    }
    for &rack in &plan.helpers {
        if !payloads.per_rack.contains_key(&rack) {
            return Err(RepairError::BadPayload { rack });
        }
    }
    for (&rack, rounds) in payloads.per_rack.iter() {
        let expect = plan.rounds_of(rack);
        let got: Vec<usize> = rounds.keys().copied().collect();
        if expect != got || rounds.values().any(|v| v.len() != base_len) {
            return Err(RepairError::BadPayload { rack });
        }
    }

    let parity_racks = params.parity_racks();
    let spare = parity_racks as i64 - radix as i64; // equations beyond the unknowns, per shift
    let host_scale = f.pow(params.xi(), (host * u) as u64);

    // Transposed Vandermonde in the failed columns' root powers, shared by
    // every row's unlock solve.
    let mut vmat = Matrix::zero(f, h, h);
    for m in 0..h {
        for (fi, &g) in plan.failed_offsets.iter().enumerate() {
            vmat.set(m, fi, f.pow(params.rack_root(), (g * m) as u64));
        }
    }
    let vandermonde = gf::factor(f, &vmat).map_err(RepairError::Field)?;

    let solve_hypothesis = |support: &[usize]| -> Result<Option<Completion>, RepairError> {
        let mut aggregates: BTreeMap<usize, BTreeMap<usize, Vec<FieldElement>>> = BTreeMap::new();
        for m in 0..h {
            let servers = &plan.round_servers[m];
            let known: Vec<usize> = servers
                .iter()
                .copied()
                .filter(|rk| !support.contains(rk))
                .collect();
            let unknown: Vec<usize> = (0..params.racks())
                .filter(|&rk| rk != host && !known.contains(&rk))
                .collect();
            let eq_shifts = if m < params.rack_size() - params.k_rem() {
                (spare).max(0) as usize
            } else {
                (spare - 1).max(0) as usize
            };
            debug_assert!(
                eq_shifts * base_len >= unknown.len() * base_len,
                "completion system must not be underdetermined"
            );
            // Equation (shift eta, base row x): sum over non-host racks of
            // (hostScale - rackScale) * run * V_rack[shifted row] = 0,
            // with t = eta * rack_size + m.
            let mut mat = Matrix::zero(f, eq_shifts * base_len, unknown.len() * base_len);
            let mut rhs = vec![f.zero(); eq_shifts * base_len];
            for eta in 0..eq_shifts {
                let t = eta * u + m;
                debug_assert!(t + u * radix < params.r());
                for (xi_pos, &x) in rows0.iter().enumerate() {
                    let eq = eta * base_len + xi_pos;
                    for rk in 0..params.racks() {
                        if rk == host {
                            continue;
                        }
                        let rack_scale = f.pow(params.xi(), (rk * u) as u64);
                        let weight = f.sub(&host_scale, &rack_scale);
                        let run = params.scale_run(rk, params.digit(x, rk), t);
                        let coeff = f.mul(&weight, &run);
                        let target = compress(params, host, params.shift_digit(x, rk, t));
                        if let Some(ui) = unknown.iter().position(|&r2| r2 == rk) {
                            let col = ui * base_len + target;
                            let cur = f.add(mat.get(eq, col), &coeff);
                            mat.set(eq, col, cur);
                        } else {
                            let val = &payloads.per_rack[&rk][&m][target];
                            let term = f.mul(&coeff, val);
                            rhs[eq] = f.sub(&rhs[eq], &term);
                        }
                    }
                }
            }
            let solved = if unknown.is_empty() {
                if rhs.iter().any(|v| !f.is_zero(v)) {
                    return Ok(None);
                }
                Vec::new()
            } else {
                match gf::solve_linear(f, &mat, &rhs) {
                    Ok(sol) => sol,
                    Err(FieldError::Inconsistent) => return Ok(None),
                    Err(e) => return Err(RepairError::Field(e)),
                }
            };
            let mut round_aggs: BTreeMap<usize, Vec<FieldElement>> = BTreeMap::new();
            for (ui, &rk) in unknown.iter().enumerate() {
                round_aggs.insert(rk, solved[ui * base_len..(ui + 1) * base_len].to_vec());
            }
            for &rk in &known {
                round_aggs.insert(rk, payloads.per_rack[&rk][&m].clone());
            }
            aggregates.insert(m, round_aggs);
        }

        // Host aggregates: parity rows with t = w * rack_size + m place the
        // host sum at digit (t mod radix); the coprimality of rack_size and
        // radix walks every digit value.
        let mut host_aggs: BTreeMap<usize, Vec<FieldElement>> = BTreeMap::new();
        for m in 0..h {
            let round_aggs = &aggregates[&m];
            let mut delta = vec![f.zero(); params.rows()];
            let mut filled = vec![false; params.rows()];
            for w in 0..radix {
                let t = w * u + m;
                debug_assert!(t < params.r());
                let host_run_inv = f
                    .inv(&params.scale_run(host, 0, t))
                    .expect("scale factors are nonzero");
                for &x in rows0.iter() {
                    let mut acc = f.zero();
                    for rk in 0..params.racks() {
                        if rk == host {
                            continue;
                        }
                        let run = params.scale_run(rk, params.digit(x, rk), t);
                        let target = compress(params, host, params.shift_digit(x, rk, t));
                        let term = f.mul(&run, &round_aggs[&rk][target]);
                        acc = f.add(&acc, &term);
                    }
                    let dest = params.with_digit(x, host, t % radix);
                    delta[dest] = f.neg(&f.mul(&host_run_inv, &acc));
                    debug_assert!(!filled[dest]);
                    filled[dest] = true;
                }
            }
            debug_assert!(filled.iter().all(|&b| b));
            host_aggs.insert(m, delta);
        }

        // Unlock: per row, h aggregate equations in the h failed columns.
        let mut repaired: BTreeMap<usize, Vec<FieldElement>> = plan
            .failed_offsets
            .iter()
            .map(|&g| (host * u + g, vec![f.zero(); params.rows()]))
            .collect();
        for j in 0..params.rows() {
            let mut rhs = Vec::with_capacity(h);
            for m in 0..h {
                let mut v = host_aggs[&m][j].clone();
                for g in 0..u {
                    if plan.failed_offsets.contains(&g) {
                        continue;
                    }
                    let w = f.pow(params.rack_root(), (g * m) as u64);
                    let term = f.mul(&w, &survivors[&(host * u + g)][j]);
                    v = f.sub(&v, &term);
                }
                rhs.push(v);
            }
            let x = vandermonde.solve(f, &rhs);
            for (fi, &g) in plan.failed_offsets.iter().enumerate() {
                repaired.get_mut(&(host * u + g)).unwrap()[j] = x[fi].clone();
            }
        }
        Ok(Some(Completion {
            repaired,
            aggregates,
        }))
    };

    let completion = resolve_with_errors(&plan.helpers, params.error_budget(), solve_hypothesis)?;

    // Liars are whoever sent something other than the completed aggregates.
    let mut detected = Vec::new();
    for (&rack, rounds) in payloads.per_rack.iter() {
        let lied = rounds
            .iter()
            .any(|(m, received)| completion.aggregates[m][&rack] != *received);
        if lied {
            detected.push(rack);
        }
    }

    let transcript = RepairTranscript {
        scheme: plan.scheme,
        host,
        failed: plan
            .failed_offsets
            .iter()
            .map(|&g| host * u + g)
            .collect(),
        helpers: plan.helpers.clone(),
        corrupted_injected: payloads.corrupted.clone(),
        corrupted_detected: detected,
        downloaded_symbols: payloads.downloaded,
        accessed_symbols: payloads.accessed,
        local_reads: (survivors.len() * params.rows()) as u64,
        ok: true,
    };
    Ok(RepairOutcome {
        columns: completion.repaired,
        transcript,
    })
}

/// End-to-end driver: builds payloads from the full codeword, injects
/// corruption into the named helper racks, and repairs.
pub fn run_repair(
    params: &ArrayCodeParams,
    columns: &[Vec<FieldElement>],
    req: &RepairRequest,
    corrupt_racks: &[usize],
    seed: u64,
) -> Result<RepairOutcome, RepairError> {
    let plan = plan_repair(params, req)?;
    let mut payloads = collect_payloads(params, columns, &plan);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for &rack in corrupt_racks {
        payloads.corrupt_rack(params, rack, &mut rng)?;
    }
    let u = params.rack_size();
    let survivors: BTreeMap<usize, Vec<FieldElement>> = (0..u)
        .map(|g| req.host * u + g)
        .filter(|c| !req.failed.contains(c))
        .map(|c| (c, columns[c].clone()))
        .collect();
    repair(params, &survivors, req, &payloads)
}

/// Exact download floor for one repair shape, as an unreduced fraction
/// (numerator, denominator) of base-field symbols.
pub fn cutset_floor(params: &ArrayCodeParams, h: usize) -> (u64, u64) {
    let d = params.helper_racks() as u64;
    let e = params.error_budget() as u64;
    let kr = params.k_racks() as u64;
    let l = params.rows() as u64;
    let denom = d - 2 * e - kr + 1;
    (d * h as u64 * l, denom)
}
