//! Trace-projected repair for the tower Reed-Solomon code.
//!
//! To repair `h` coordinates inside one rack, each helper rack ships `h`
//! rounds of subfield traces: round `m` weights the rack's dual-scaled
//! coordinates by `gamma^(g*m)`, projects against the host's repair basis,
//! and sends the traces down to the subfield the host's rack generator is
//! transcendental over. Per round this yields:
//!
//! 1. a completion system over the dual parity checks that pins down both
//!    the traces of racks that were not contacted and the coordinates of the
//!    host rack's own weighted sum, with spare equations left over to catch
//!    lying helpers;
//! 2. an aggregate assembly step that rebuilds the host sum from its dual
//!    coordinates;
//! 3. an unlock step: `h` aggregate values form a small Vandermonde system
//!    in the failed coordinates' root powers.
//!
//! A helper sends `ell / span` base-field symbols per round but reads only
//! `ell / span` symbols total, because every round projects the same stored
//! data.

use super::{RsCodeParams, RsTower};
use crate::gf::{self, FieldElement, FieldError, Matrix};
use crate::repair::{
    plan, resolve_with_errors, RackLayout, RepairError, RepairPlan, RepairRequest,
    RepairTranscript,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Validates a request against the code shape and assigns rounds to helpers.
pub fn plan_repair(tower: &RsTower, req: &RepairRequest) -> Result<RepairPlan, RepairError> {
    let p = tower.params();
    // With leftover data coordinates in the rack, one coordinate must stay
    // alive: the trailing repair rounds run out of parity checks otherwise.
    // Fully aligned shapes can rebuild a whole rack.
    let max_failures = if p.k_rem() == 0 {
        p.rack_size()
    } else {
        p.rack_size() - 1
    };
    plan(
        &RackLayout {
            rack_size: p.rack_size(),
            racks: p.racks(),
            k_rem: p.k_rem(),
            helper_racks: p.helper_racks(),
            max_failures,
        },
        req,
    )
}

/// Per-host repair machinery: the projection basis, its certified dual, and
/// the trace table every round's completion system shares.
#[derive(Debug)]
pub struct RepairSpace {
    host: usize,
    /// Projection elements; traces against them are what helpers ship.
    basis: Vec<FieldElement>,
    /// basis[j] * lambda^(rack_size * w) for w < span, j fastest; a basis of
    /// the field over the host's payload subfield.
    products: Vec<FieldElement>,
    /// Dual of `products` under the payload-subfield trace.
    dual: Vec<FieldElement>,
    /// Traces of basis[j] * lambda^(rack_size * w) * dual[col], with row
    /// w * prime + j running over all parity shifts. The leading span*prime
    /// rows reduce to the identity.
    t_block: Matrix,
}

impl RepairSpace {
    pub(crate) fn build(tower: &RsTower, host: usize) -> Result<RepairSpace, FieldError> {
        let p = tower.params();
        let f = tower.field();
        let span = p.span();
        let ph = p.prime(host);
        let dh = p.co_degree(host);
        let lam_u = f.pow(tower.lambda(host), p.rack_size() as u64);

        // The head element folds every splitter power onto the top lambda
        // run; the rest stagger splitter powers against staircased runs.
        let mut alpha_sum = f.zero();
        for m in 0..span {
            alpha_sum = f.add(&alpha_sum, &f.pow(tower.alpha(), m as u64));
        }
        let mut basis = Vec::with_capacity(ph);
        basis.push(f.mul(&alpha_sum, &f.pow(&lam_u, (ph - 1) as u64)));
        for t in 0..(ph - 1) / span {
            for j in 0..span {
                let a = f.pow(tower.alpha(), j as u64);
                let l = f.pow(&lam_u, (j + t * span) as u64);
                basis.push(f.mul(&a, &l));
            }
        }
        debug_assert_eq!(basis.len(), ph);

        let mut products = Vec::with_capacity(span * ph);
        for w in 0..span {
            let lw = f.pow(&lam_u, w as u64);
            for e in &basis {
                products.push(f.mul(e, &lw));
            }
        }
        // Fails with a rank report if the products do not form a basis.
        let dual = f.dual_basis(dh, &products)?;

        let parity = p.parity_racks();
        let mut t_block = Matrix::zero(f, parity * ph, span * ph);
        for w in 0..parity {
            let lw = f.pow(&lam_u, w as u64);
            for j in 0..ph {
                let x = f.mul(&basis[j], &lw);
                for col in 0..span * ph {
                    let tr = f.trace_to_subfield(dh, &f.mul(&x, &dual[col]))?;
                    if w < span {
                        let want = if col == w * ph + j { f.one() } else { f.zero() };
                        debug_assert_eq!(tr, want, "dual head must be the identity");
                    }
                    t_block.set(w * ph + j, col, tr);
                }
            }
        }
        Ok(RepairSpace {
            host,
            basis,
            products,
            dual,
            t_block,
        })
    }

    pub fn host(&self) -> usize {
        self.host
    }

    pub fn basis(&self) -> &[FieldElement] {
        &self.basis
    }

    pub fn products(&self) -> &[FieldElement] {
        &self.products
    }

    pub fn dual(&self) -> &[FieldElement] {
        &self.dual
    }
}

/// One helper rack's payload for round m: for each projection element, the
/// subfield trace of the rack's dual-scaled coordinates summed with
/// gamma^(g*m) weights.
pub fn helper_payload(
    tower: &RsTower,
    space: &RepairSpace,
    rack: usize,
    rack_coords: &[FieldElement],
    m: usize,
) -> Vec<FieldElement> {
    let p = tower.params();
    let f = tower.field();
    let u = p.rack_size();
    assert_eq!(rack_coords.len(), u);
    let dh = p.co_degree(space.host);
    let mut weighted = f.zero();
    let mut out = Vec::with_capacity(p.prime(space.host));
    for (g, c) in rack_coords.iter().enumerate() {
        let w = f.pow(tower.gamma(), (g * m) as u64);
        let term = f.mul(&f.mul(&w, tower.dual(rack * u + g)), c);
        weighted = f.add(&weighted, &term);
    }
    for e in &space.basis {
        let tr = f
            .trace_to_subfield(dh, &f.mul(e, &weighted))
            .expect("payload subfield degree divides the field degree");
        out.push(tr);
    }
    out
}

/// Payloads downloaded from helper racks, with exact base-field symbol
/// accounting: a trace vector is prime(host) values of co_degree(host)
/// symbols each, i.e. ell / span symbols per rack per round.
#[derive(Debug, Clone)]
pub struct RsPayloads {
    /// rack -> round -> trace values against the host's projection basis.
    per_rack: BTreeMap<usize, BTreeMap<usize, Vec<FieldElement>>>,
    corrupted: Vec<usize>,
    downloaded: u64,
    accessed: u64,
}

impl RsPayloads {
    pub fn downloaded_symbols(&self) -> u64 {
        self.downloaded
    }

    pub fn accessed_symbols(&self) -> u64 {
        self.accessed
    }

    pub fn rounds_of(&self, rack: usize) -> Option<&BTreeMap<usize, Vec<FieldElement>>> {
        self.per_rack.get(&rack)
    }

    /// Replaces every payload vector of `rack` with different values drawn
    /// from the payload subfield, modelling a lying or bit-rotted helper.
    pub fn corrupt_rack(
        &mut self,
        tower: &RsTower,
        space: &RepairSpace,
        rack: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(), RepairError> {
        let p = tower.params();
        let f = tower.field();
        let dh = p.co_degree(space.host);
        let gen = tower.generator(space.host);
        let q = p.spec().q;
        let Some(rounds) = self.per_rack.get_mut(&rack) else {
            return Err(RepairError::NotAHelper(rack));
        };
        for (_, vec) in rounds.iter_mut() {
            loop {
                let fresh: Vec<FieldElement> = vec
                    .iter()
                    .map(|_| {
                        let mut acc = f.zero();
                        for _ in 0..dh {
                            let c = f.from_int(gf::uniform_mod(rng, q));
                            acc = f.add(&f.mul(&acc, gen), &c);
                        }
                        acc
                    })
                    .collect();
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
    tower: &RsTower,
    space: &RepairSpace,
    word: &[FieldElement],
    plan: &RepairPlan,
) -> RsPayloads {
    let p = tower.params();
    assert_eq!(word.len(), p.n());
    let u = p.rack_size();
    let per_round = (p.ell() / p.span()) as u64;
    let mut per_rack = BTreeMap::new();
    let mut downloaded = 0u64;
    let mut accessed = 0u64;
    for &rack in &plan.helpers {
        let rounds = plan.rounds_of(rack);
        if rounds.is_empty() {
            continue;
        }
        let coords = &word[rack * u..(rack + 1) * u];
        let payload: BTreeMap<usize, Vec<FieldElement>> = rounds
            .iter()
            .map(|&m| (m, helper_payload(tower, space, rack, coords, m)))
            .collect();
        downloaded += rounds.len() as u64 * per_round;
        accessed += u as u64 * per_round;
        per_rack.insert(rack, payload);
    }
    RsPayloads {
        per_rack,
        corrupted: Vec::new(),
        downloaded,
        accessed,
    }
}

/// What a successful repair returns: the rebuilt coordinates and the audit
/// transcript.
#[derive(Debug)]
pub struct RepairOutcome {
    pub coords: BTreeMap<usize, FieldElement>,
    pub transcript: RepairTranscript,
}

#[derive(Debug, PartialEq)]
struct Completion {
    /// round -> rack -> completed trace vector for every non-host rack.
    columns: BTreeMap<usize, BTreeMap<usize, Vec<FieldElement>>>,
}

/// Assembles the host rack's dual-weighted coordinate sum for round m from
/// the completed trace columns of every other rack: the leading parity
/// shifts hand over the sum's coordinates against the product dual, shifted
/// once by lambda^-m.
pub fn host_aggregate(
    tower: &RsTower,
    space: &RepairSpace,
    columns: &BTreeMap<usize, Vec<FieldElement>>,
    m: usize,
) -> FieldElement {
    let p = tower.params();
    let f = tower.field();
    let ph = p.prime(space.host);
    let span = p.span();
    assert_eq!(columns.len(), p.racks() - 1);
    let mut acc = f.zero();
    for w in 0..span {
        for j in 0..ph {
            let mut tau = f.zero();
            for (&rk, col) in columns.iter() {
                debug_assert_ne!(rk, space.host);
                let e = (p.rack_size() * w + m) as u64;
                let coef = f.pow(tower.lambda(rk), e);
                tau = f.add(&tau, &f.mul(&coef, &col[j]));
            }
            acc = f.sub(&acc, &f.mul(&tau, &space.dual[w * ph + j]));
        }
    }
    let lam_inv = f.inv(tower.lambda(space.host)).expect("rack generator is nonzero");
    f.mul(&acc, &f.pow(&lam_inv, m as u64))
}

/// Rebuilds the failed coordinates from helper payloads plus the host rack's
/// surviving coordinates. `survivors` must hold exactly the non-failed
/// coordinates of the host rack, keyed by global coordinate index.
pub fn repair(
    tower: &RsTower,
    survivors: &BTreeMap<usize, FieldElement>,
    req: &RepairRequest,
    payloads: &RsPayloads,
) -> Result<RepairOutcome, RepairError> {
    let plan = plan_repair(tower, req)?;
    let space = tower.repair_space(plan.host).map_err(RepairError::Field)?;
    let p = tower.params();
    let f = tower.field();
    let u = p.rack_size();
    let host = plan.host;
    let h = plan.rounds();
    let span = p.span();
    let ph = p.prime(host);
    let dh = p.co_degree(host);
    let parity = p.parity_racks();
    let base_limit = u - p.k_rem();

    // Survivors: exactly the host coordinates that did not fail.
    for g in 0..u {
        let c = host * u + g;
        let is_failed = plan.failed_offsets.contains(&g);
        match survivors.get(&c) {
            Some(_) if !is_failed => {}
            None if is_failed => {}
            _ => return Err(RepairError::BadColumn(c)),
        }
    }
    if let Some(&stray) = survivors.keys().find(|&&c| p.rack_of(c) != host) {
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
        if expect != got || rounds.values().any(|v| v.len() != ph) {
            return Err(RepairError::BadPayload { rack });
        }
        // Trace values must come from the payload subfield; anything else is
        // a protocol violation rather than a tolerable lie.
        if rounds
            .values()
            .any(|v| v.iter().any(|x| !f.in_subfield(dh, x)))
        {
            return Err(RepairError::BadPayload { rack });
        }
    }

    let solve_hypothesis = |support: &[usize]| -> Result<Option<Completion>, RepairError> {
        let mut columns = BTreeMap::new();
        for m in 0..h {
            let servers = &plan.round_servers[m];
            let known: Vec<usize> = servers
                .iter()
                .copied()
                .filter(|rk| !support.contains(rk))
                .collect();
            let unknown: Vec<usize> = (0..p.racks())
                .filter(|&rk| rk != host && !known.contains(&rk))
                .collect();
            let w_max = if m < base_limit { parity } else { parity - 1 };
            let rows = w_max * ph;
            let cols = span * ph + unknown.len() * ph;
            debug_assert!(cols <= rows, "completion system must not be underdetermined");
            let mut mat = Matrix::zero(f, rows, cols);
            let mut rhs = vec![f.zero(); rows];
            for eq in 0..rows {
                for col in 0..span * ph {
                    mat.set(eq, col, space.t_block.get(eq, col).clone());
                }
            }
            for rk in 0..p.racks() {
                if rk == host {
                    continue;
                }
                let lam = tower.lambda(rk);
                let step = f.pow(lam, u as u64);
                let mut coef = f.pow(lam, m as u64);
                let slot = unknown.iter().position(|&r2| r2 == rk);
                for w in 0..w_max {
                    for j in 0..ph {
                        let eq = w * ph + j;
                        match slot {
                            Some(ui) => {
                                mat.set(eq, span * ph + ui * ph + j, coef.clone());
                            }
                            None => {
                                let val = &payloads.per_rack[&rk][&m][j];
                                let term = f.mul(&coef, val);
                                rhs[eq] = f.sub(&rhs[eq], &term);
                            }
                        }
                    }
                    coef = f.mul(&coef, &step);
                }
            }
            let solved = match gf::solve_linear(f, &mat, &rhs) {
                Ok(sol) => sol,
                Err(FieldError::Inconsistent) => return Ok(None),
                Err(e) => return Err(RepairError::Field(e)),
            };
            let mut round_cols: BTreeMap<usize, Vec<FieldElement>> = BTreeMap::new();
            for (ui, &rk) in unknown.iter().enumerate() {
                let vals = solved[span * ph + ui * ph..span * ph + (ui + 1) * ph].to_vec();
                debug_assert!(vals.iter().all(|v| f.in_subfield(dh, v)));
                round_cols.insert(rk, vals);
            }
            for &rk in &known {
                round_cols.insert(rk, payloads.per_rack[&rk][&m].clone());
            }
            columns.insert(m, round_cols);
        }
        Ok(Some(Completion { columns }))
    };

    let completion = resolve_with_errors(&plan.helpers, p.error_budget(), solve_hypothesis)?;

    // Liars are whoever sent something other than the completed traces.
    let mut detected = Vec::new();
    for (&rack, rounds) in payloads.per_rack.iter() {
        let lied = rounds
            .iter()
            .any(|(m, received)| completion.columns[m][&rack] != *received);
        if lied {
            detected.push(rack);
        }
    }

    // Unlock: h aggregates form a Vandermonde system in the failed
    // coordinates' root powers, after the survivors' share is subtracted.
    let mut vmat = Matrix::zero(f, h, h);
    let mut rhs = Vec::with_capacity(h);
    for m in 0..h {
        for (fi, &g) in plan.failed_offsets.iter().enumerate() {
            vmat.set(m, fi, f.pow(tower.gamma(), (g * m) as u64));
        }
        let mut v = host_aggregate(tower, space, &completion.columns[&m], m);
        for g in 0..u {
            if plan.failed_offsets.contains(&g) {
                continue;
            }
            let c = host * u + g;
            let w = f.pow(tower.gamma(), (g * m) as u64);
            let term = f.mul(&f.mul(&w, tower.dual(c)), &survivors[&c]);
            v = f.sub(&v, &term);
        }
        rhs.push(v);
    }
    let scaled = gf::solve_linear(f, &vmat, &rhs).map_err(RepairError::Field)?;
    let mut coords = BTreeMap::new();
    for (fi, &g) in plan.failed_offsets.iter().enumerate() {
        let c = host * u + g;
        let vinv = f.inv(tower.dual(c)).expect("dual multipliers are nonzero");
        coords.insert(c, f.mul(&vinv, &scaled[fi]));
    }

    let transcript = RepairTranscript {
        scheme: plan.scheme,
        host,
        failed: plan.failed_offsets.iter().map(|&g| host * u + g).collect(),
        helpers: plan.helpers.clone(),
        corrupted_injected: payloads.corrupted.clone(),
        corrupted_detected: detected,
        downloaded_symbols: payloads.downloaded,
        accessed_symbols: payloads.accessed,
        local_reads: (survivors.len() * p.ell()) as u64,
        ok: true,
    };
    Ok(RepairOutcome { coords, transcript })
}

/// End-to-end driver: builds payloads from the full codeword, injects
/// corruption into the named helper racks, and repairs.
pub fn run_repair(
    tower: &RsTower,
    word: &[FieldElement],
    req: &RepairRequest,
    corrupt_racks: &[usize],
    seed: u64,
) -> Result<RepairOutcome, RepairError> {
    let plan = plan_repair(tower, req)?;
    let space = tower.repair_space(plan.host).map_err(RepairError::Field)?;
    let mut payloads = collect_payloads(tower, space, word, &plan);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for &rack in corrupt_racks {
        payloads.corrupt_rack(tower, space, rack, &mut rng)?;
    }
    let u = tower.params().rack_size();
    let survivors: BTreeMap<usize, FieldElement> = (0..u)
        .map(|g| req.host * u + g)
        .filter(|c| !req.failed.contains(c))
        .map(|c| (c, word[c].clone()))
        .collect();
    repair(tower, &survivors, req, &payloads)
}

/// Exact download floor for one repair shape, as an unreduced fraction
/// (numerator, denominator) of base-field symbols.
pub fn cutset_floor(params: &RsCodeParams, h: usize) -> (u64, u64) {
    (
        params.helper_racks() as u64 * h as u64 * params.ell() as u64,
        params.span() as u64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rs::{RsCodeParams, RsCodeSpec};
    use num_bigint::BigUint;

    fn workhorse() -> RsTower {
        let params = RsCodeParams::new(&RsCodeSpec {
            q: 3,
            rack_size: 2,
            racks: 2,
            k: 3,
            helper_racks: 1,
            error_budget: 0,
            seed: 7,
        })
        .unwrap();
        RsTower::build(params).unwrap()
    }

    fn encoded(t: &RsTower, seed: u64) -> Vec<FieldElement> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let message = t.random_message(&mut rng);
        t.encode(&message).unwrap()
    }

    #[test]
    fn repair_space_is_a_certified_dual_pair() {
        let t = workhorse();
        let f = t.field();
        for host in 0..2 {
            let space = t.repair_space(host).unwrap();
            let ph = t.params().prime(host);
            let dh = t.params().co_degree(host);
            assert_eq!(space.basis().len(), ph);
            assert_eq!(space.products().len(), ph * t.params().span());
            for (a, x) in space.products().iter().enumerate() {
                for (b, y) in space.dual().iter().enumerate() {
                    let tr = f.trace_to_subfield(dh, &f.mul(x, y)).unwrap();
                    let want = if a == b { f.one() } else { f.zero() };
                    assert_eq!(tr, want, "host {host} product {a} dual {b}");
                }
            }
        }
    }

    #[test]
    fn degenerate_span_basis_is_the_run_of_powers() {
        // span = 1: the head element is lambda^(u*(p-1)) and the rest start
        // from 1 and walk the lambda^u ladder.
        let t = workhorse();
        let f = t.field();
        let space = t.repair_space(0).unwrap();
        let lam_u = f.pow(t.lambda(0), 2);
        assert_eq!(space.basis()[0], f.pow(&lam_u, 2));
        assert_eq!(space.basis()[1], f.one());
        assert_eq!(space.basis()[2], lam_u);
    }

    #[test]
    fn helper_payload_matches_a_power_trace_oracle() {
        // Trace recomputed by raw exponentiation rather than linear maps.
        let t = workhorse();
        let f = t.field();
        let p = t.params();
        let word = encoded(&t, 5);
        let host = 0;
        let space = t.repair_space(host).unwrap();
        let rack = 1;
        let dh = p.co_degree(host);
        let m = 0;
        let payload = helper_payload(&t, space, rack, &word[2..4], m);
        let qd = BigUint::from(3u32).pow(dh as u32);
        for (j, e) in space.basis().iter().enumerate() {
            let mut want = f.zero();
            for g in 0..2 {
                let x = rack * 2 + g;
                let weight = f.pow(t.gamma(), (g * m) as u64);
                let base = f.mul(e, &f.mul(&f.mul(&weight, t.dual(x)), &word[x]));
                let mut acc = f.zero();
                let mut y = base;
                for _ in 0..p.ell() / dh {
                    acc = f.add(&acc, &y);
                    y = f.pow_big(&y, &qd);
                }
                want = f.add(&want, &acc);
            }
            assert_eq!(payload[j], want, "trace {j}");
            assert!(f.in_subfield(dh, &payload[j]));
        }
    }

    #[test]
    fn zero_codeword_gives_zero_payload() {
        let t = workhorse();
        let f = t.field();
        let space = t.repair_space(1).unwrap();
        let zeros = vec![f.zero(); 2];
        let payload = helper_payload(&t, space, 0, &zeros, 0);
        assert!(payload.iter().all(|x| f.is_zero(x)));
    }

    #[test]
    fn host_aggregate_matches_direct_evaluation() {
        let t = workhorse();
        let f = t.field();
        let word = encoded(&t, 31);
        for host in 0..2 {
            let space = t.repair_space(host).unwrap();
            let other = 1 - host;
            let m = 0;
            let columns: BTreeMap<usize, Vec<FieldElement>> = [(
                other,
                helper_payload(&t, space, other, &word[other * 2..other * 2 + 2], m),
            )]
            .into();
            let got = host_aggregate(&t, space, &columns, m);
            let mut want = f.zero();
            for g in 0..2 {
                let x = host * 2 + g;
                let w = f.pow(t.gamma(), (g * m) as u64);
                want = f.add(&want, &f.mul(&f.mul(&w, t.dual(x)), &word[x]));
            }
            assert_eq!(got, want, "host {host}");
        }
    }

    #[test]
    fn single_failure_repair_matches_original() {
        let t = workhorse();
        let word = encoded(&t, 4242);
        for failed in 0..4usize {
            let host = failed / 2;
            let req = RepairRequest {
                host,
                failed: vec![failed],
                helpers: vec![1 - host],
            };
            let out = run_repair(&t, &word, &req, &[], 0).unwrap();
            assert_eq!(out.coords[&failed], word[failed]);
            // One helper rack, one round: ell / span symbols.
            assert_eq!(out.transcript.downloaded_symbols, 15);
            assert_eq!(out.transcript.accessed_symbols, 30);
            assert_eq!(out.transcript.local_reads, 15);
            assert!(out.transcript.ok);
            assert!(out.transcript.corrupted_detected.is_empty());
        }
    }

    #[test]
    fn unbudgeted_corruption_poisons_the_result_silently() {
        // With a zero error budget the completion system is exactly square,
        // so a lying helper stays consistent and undetected; the rebuilt
        // coordinate comes out wrong. Budgeted shapes carry 2 * budget
        // spare equations per tower prime and catch this.
        let t = workhorse();
        let word = encoded(&t, 77);
        let req = RepairRequest {
            host: 0,
            failed: vec![1],
            helpers: vec![1],
        };
        let out = run_repair(&t, &word, &req, &[1], 3).unwrap();
        assert!(out.transcript.corrupted_detected.is_empty());
        assert_ne!(out.coords[&1], word[1]);
    }

    #[test]
    fn double_failure_is_rejected_for_the_ragged_shape() {
        // k % rack_size = 1 leaves no room for a whole-rack rebuild.
        let t = workhorse();
        let word = encoded(&t, 8);
        let req = RepairRequest {
            host: 0,
            failed: vec![0, 1],
            helpers: vec![1],
        };
        let err = run_repair(&t, &word, &req, &[], 0).unwrap_err();
        assert!(matches!(
            err,
            RepairError::TooManyFailures { failed: 2, max: 1 }
        ));
    }

    #[test]
    fn out_of_subfield_payload_is_a_protocol_violation() {
        let t = workhorse();
        let word = encoded(&t, 12);
        let req = RepairRequest {
            host: 0,
            failed: vec![0],
            helpers: vec![1],
        };
        let plan = plan_repair(&t, &req).unwrap();
        let space = t.repair_space(0).unwrap();
        let mut payloads = collect_payloads(&t, space, &word, &plan);
        // The splitter has full degree, so adding it leaves the subfield.
        let rounds = payloads.per_rack.get_mut(&1).unwrap();
        let vec = rounds.get_mut(&0).unwrap();
        vec[0] = t.field().add(&vec[0], t.alpha());
        let survivors: BTreeMap<usize, FieldElement> = [(1usize, word[1].clone())].into();
        let err = repair(&t, &survivors, &req, &payloads).unwrap_err();
        assert!(matches!(err, RepairError::BadPayload { rack: 1 }));
    }

    #[test]
    fn cutset_floor_matches_hand_computation() {
        let t = workhorse();
        assert_eq!(cutset_floor(t.params(), 1), (15, 1));
        let p = RsCodeParams::new(&RsCodeSpec {
            q: 3,
            rack_size: 2,
            racks: 3,
            k: 3,
            helper_racks: 2,
            error_budget: 0,
            seed: 7,
        })
        .unwrap();
        assert_eq!(cutset_floor(&p, 1), (420, 2));
    }
}
