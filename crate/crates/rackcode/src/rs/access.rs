//! Access audit: proves each helper node can serve every repair round from
//! `ell / span` stored base-field symbols.
//!
//! A helper node's payload contribution for any round is a base-field linear
//! combination of traces against the fixed set
//! `generator^t * basis[j]` (t below the payload subfield degree, j below
//! the host's tower prime): the per-round weights `gamma^(g*m)` live in the
//! base field and factor out. The audit builds a storage basis whose dual
//! starts with exactly that needed set, so each needed trace reads off a
//! single stored coefficient. It then re-verifies the duality by direct
//! field multiplication and counts, per node, how many stored symbols the
//! needed traces actually touch.

use super::{CodeError, RsTower};
use crate::gf::{self, FieldCtx, FieldElement, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Result of auditing one host rack's repair reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessAudit {
    pub host: usize,
    /// Stored base-field symbols each helper node reads, independent of how
    /// many coordinates fail.
    pub per_node_symbols: u64,
    /// Nodes serving the repair: every node of every helper rack.
    pub helper_nodes: u64,
    pub total_symbols: u64,
}

/// Row-echelon accumulator over the prime field, used to extend the needed
/// rows to a full basis.
struct Echelon {
    q: u64,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Echelon {
    fn new(q: u64) -> Echelon {
        Echelon {
            q,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Reduces `row` against the accumulated rows; keeps it and reports true
    /// if it adds rank.
    fn insert(&mut self, mut row: Vec<u64>) -> bool {
        let q = self.q;
        for (r, &p) in self.rows.iter().zip(&self.pivots) {
            let c = row[p];
            if c != 0 {
                for (x, y) in row.iter_mut().zip(r) {
                    let sub = c as u128 * *y as u128 % q as u128;
                    *x = ((*x as u128 + q as u128 - sub) % q as u128) as u64;
                }
            }
        }
        let Some(p) = row.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = mod_inverse(row[p], q);
        for x in row.iter_mut() {
            *x = ((*x as u128 * inv as u128) % q as u128) as u64;
        }
        self.rows.push(row);
        self.pivots.push(p);
        true
    }
}

fn mod_inverse(a: u64, q: u64) -> u64 {
    // q is prime, so a^(q-2) works.
    let mut base = a as u128;
    let mut e = q - 2;
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % q as u128;
        }
        base = base * base % q as u128;
        e >>= 1;
    }
    acc as u64
}

fn coeff_row(x: &FieldElement, ell: usize) -> Vec<u64> {
    let mut row = vec![0u64; ell];
    for (i, &c) in x.coeffs().iter().enumerate() {
        row[i] = c;
    }
    row
}

/// Builds a storage basis for the given host, certifies it against the
/// needed trace set by direct field arithmetic, and returns the read counts.
pub fn audit_access(tower: &RsTower, host: usize) -> Result<AccessAudit, CodeError> {
    let p = tower.params();
    let f = tower.field();
    let q = p.spec().q;
    let ell = p.ell();
    let ph = p.prime(host);
    let dh = p.co_degree(host);
    let needed_count = dh * ph;
    debug_assert_eq!(needed_count, ell / p.span());
    let space = tower.repair_space(host).map_err(CodeError::Field)?;

    // Needed traces, t-major: generator^t * basis[j].
    let mut needed = Vec::with_capacity(needed_count);
    let mut gen_pow = f.one();
    for _ in 0..dh {
        for e in space.basis() {
            needed.push(f.mul(&gen_pow, e));
        }
        gen_pow = f.mul(&gen_pow, tower.generator(host));
    }

    // Extend to a basis of the whole field over the prime field, preferring
    // power-basis units for the tail.
    let mut ech = Echelon::new(q);
    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(ell);
    for (i, nu) in needed.iter().enumerate() {
        let row = coeff_row(nu, ell);
        if !ech.insert(row.clone()) {
            return Err(CodeError::TowerDefect(format!(
                "needed trace set is dependent at element {i} for host {host}"
            )));
        }
        rows.push(row);
    }
    for r in 0..ell {
        if rows.len() == ell {
            break;
        }
        let mut unit = vec![0u64; ell];
        unit[r] = 1;
        if ech.insert(unit.clone()) {
            rows.push(unit);
        }
    }
    if rows.len() != ell {
        return Err(CodeError::TowerDefect(format!(
            "storage basis for host {host} stalled at rank {}",
            rows.len()
        )));
    }

    // Gram matrix of the power basis under the full trace is a Hankel matrix
    // of power traces; B * H has entry (b, s) = tr(row_b * x^s), so the dual
    // coefficient vectors are the columns of its inverse.
    let pt = f.power_traces(2 * ell - 1);
    let ctx1 = FieldCtx::new(q, 1, p.spec().seed)?;
    let mut bh = Matrix::zero(&ctx1, ell, ell);
    for (b, row) in rows.iter().enumerate() {
        for s in 0..ell {
            let mut acc = 0u128;
            for (r, &c) in row.iter().enumerate() {
                acc += c as u128 * pt[r + s] as u128 % q as u128;
            }
            bh.set(b, s, ctx1.from_int((acc % q as u128) as u64));
        }
    }
    let dual_coeffs = gf::invert(&ctx1, &bh).map_err(CodeError::Field)?;
    let storage: Vec<FieldElement> = (0..ell)
        .map(|b| {
            let col: Vec<u64> = (0..ell)
                .map(|s| {
                    ctx1.as_int(dual_coeffs.get(s, b))
                        .expect("prime-field entries are scalars")
                })
                .collect();
            f.element(&col)
        })
        .collect();

    // Independent check: real multiplications and traces, not the Hankel
    // shortcut. Every needed trace must touch exactly its own symbol.
    let mut touched = vec![false; ell];
    for (a, nu) in needed.iter().enumerate() {
        for (b, beta) in storage.iter().enumerate() {
            let tr = f
                .trace_to_subfield(1, &f.mul(nu, beta))
                .map_err(CodeError::Field)?;
            let want = if a == b { f.one() } else { f.zero() };
            if tr != want {
                return Err(CodeError::TowerDefect(format!(
                    "storage dual fails orthogonality at ({a}, {b}) for host {host}"
                )));
            }
            if !f.is_zero(&tr) {
                touched[b] = true;
            }
        }
    }
    let per_node = touched.iter().filter(|&&t| t).count();
    if per_node != needed_count {
        return Err(CodeError::TowerDefect(format!(
            "host {host} repair touches {per_node} symbols per node, expected {needed_count}"
        )));
    }

    // Round-trip probe: coefficients against the row basis, reconstruction
    // through the storage dual.
    let mut rng = ChaCha12Rng::seed_from_u64(p.spec().seed ^ (host as u64) << 8);
    let x = f.random(&mut rng);
    let mut back = f.zero();
    for (row, beta) in rows.iter().zip(&storage) {
        let el = f.element(row);
        let c = f
            .trace_to_subfield(1, &f.mul(&el, &x))
            .map_err(CodeError::Field)?;
        back = f.add(&back, &f.mul(&c, beta));
    }
    if back != x {
        return Err(CodeError::TowerDefect(format!(
            "storage basis for host {host} fails reconstruction"
        )));
    }

    let helper_nodes = (p.helper_racks() * p.rack_size()) as u64;
    Ok(AccessAudit {
        host,
        per_node_symbols: needed_count as u64,
        helper_nodes,
        total_symbols: helper_nodes * needed_count as u64,
    })
}
