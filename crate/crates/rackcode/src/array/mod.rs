//! MDS array code over a two-level (rack / node) topology.
//!
//! The code places `n = racks * rack_size` columns of `rows` field symbols
//! each. Columns in the same rack share an operator family that differs only
//! by powers of a fixed order-`rack_size` scalar, which is what makes
//! in-rack aggregation during repair possible. Row indices are read as
//! base-`radix` digit strings with one digit per rack; the parity operators
//! rotate one digit and scale by a run-dependent power of the field's
//! primitive element.

pub mod repair;

use crate::gf::{self, FieldCtx, FieldElement, FieldError, Matrix};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("field construction failed: {0}")]
    Field(#[from] FieldError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("columns {columns:?} are not recoverable: system rank {rank} over {unknowns} unknowns")]
    MdsViolation {
        columns: Vec<usize>,
        rank: usize,
        unknowns: usize,
    },
    #[error("need at least {need} known columns, got {got}")]
    NotEnoughColumns { need: usize, got: usize },
    #[error("known columns are inconsistent with the code")]
    InconsistentColumns,
    #[error("column index {0} out of range")]
    BadColumn(usize),
    #[error("message must be {k} columns of {rows} symbols")]
    BadMessageShape { k: usize, rows: usize },
}

/// Serializable parameter set; [`ArrayCodeParams::new`] validates and
/// derives the working context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayCodeSpec {
    /// Field size, a prime power.
    pub q: u64,
    /// Nodes per rack.
    pub rack_size: usize,
    /// Number of racks.
    pub racks: usize,
    /// Number of data columns; any k columns determine the rest.
    pub k: usize,
    /// Helper racks contacted by a repair.
    pub helper_racks: usize,
    /// Corrupted helper racks the repair must tolerate.
    pub error_budget: usize,
    /// Seed for deterministic field construction.
    pub seed: u64,
}

/// Validated array-code parameters plus the derived field machinery.
#[derive(Debug)]
pub struct ArrayCodeParams {
    spec: ArrayCodeSpec,
    n: usize,
    r: usize,
    /// Racks fully occupied by data columns: k / rack_size.
    k_racks: usize,
    /// Leftover data columns: k % rack_size.
    k_rem: usize,
    /// Digit alphabet for row indices.
    radix: usize,
    /// Symbols per column: radix^racks.
    rows: usize,
    field: FieldCtx,
    /// Primitive element of the field.
    xi: FieldElement,
    /// Element of multiplicative order `rack_size`.
    rack_root: FieldElement,
    pow_radix: Vec<usize>,
    encode_lu: OnceLock<Option<gf::Factored>>,
}

fn gcd_usize(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Splits a prime power into (p, e); errors if q is not a prime power.
fn prime_power(q: u64) -> Result<(u64, usize), CodeError> {
    if q < 2 {
        return Err(CodeError::InvalidParams(format!(
            "field size q={q} must be at least 2"
        )));
    }
    let mut p = q;
    let mut d = 2u64;
    while d * d <= q {
        if q % d == 0 {
            p = d;
            break;
        }
        d += 1;
    }
    let mut e = 0usize;
    let mut rest = q;
    while rest % p == 0 {
        rest /= p;
        e += 1;
    }
    if rest != 1 {
        return Err(CodeError::InvalidParams(format!(
            "field size q={q} is not a prime power"
        )));
    }
    Ok((p, e))
}

impl ArrayCodeParams {
    pub fn new(spec: &ArrayCodeSpec) -> Result<Self, CodeError> {
        Self::build(spec, true)
    }

    /// Skips the rate/topology inequalities (the field-level requirements
    /// still hold). Exists so degenerate shapes, like a code with no parity
    /// columns, can still be probed by the verifier.
    pub fn new_unchecked(spec: &ArrayCodeSpec) -> Result<Self, CodeError> {
        Self::build(spec, false)
    }

    fn build(spec: &ArrayCodeSpec, strict: bool) -> Result<Self, CodeError> {
        let s = spec;
        if s.rack_size < 1 {
            return Err(CodeError::InvalidParams(
                "rack_size must be at least 1".into(),
            ));
        }
        if s.racks < 2 {
            return Err(CodeError::InvalidParams(
                "racks must be at least 2".into(),
            ));
        }
        let n = s.rack_size * s.racks;
        if s.k < 1 || (strict && s.k >= n) {
            return Err(CodeError::InvalidParams(format!(
                "k={} must satisfy 1 <= k < n={n}",
                s.k
            )));
        }
        if s.k > n {
            return Err(CodeError::InvalidParams(format!(
                "k={} exceeds the column count n={n}",
                s.k
            )));
        }
        let k_racks = s.k / s.rack_size;
        let k_rem = s.k % s.rack_size;
        if strict && s.helper_racks > s.racks - 1 {
            return Err(CodeError::InvalidParams(format!(
                "helper_racks={} cannot exceed racks-1={}",
                s.helper_racks,
                s.racks - 1
            )));
        }
        let radix_signed =
            s.helper_racks as i64 - 2 * s.error_budget as i64 - k_racks as i64 + 1;
        if strict && radix_signed < 1 {
            return Err(CodeError::InvalidParams(format!(
                "helper_racks={} must be at least k/rack_size + 2*error_budget = {}",
                s.helper_racks,
                k_racks + 2 * s.error_budget
            )));
        }
        let radix = radix_signed.max(1) as usize;
        if strict && gcd_usize(s.rack_size, radix) != 1 {
            return Err(CodeError::InvalidParams(format!(
                "rack_size={} and repair radix {radix} must be coprime",
                s.rack_size
            )));
        }
        if (s.q - 1) % s.rack_size as u64 != 0 {
            return Err(CodeError::InvalidParams(format!(
                "rack_size={} must divide q-1={}",
                s.rack_size,
                s.q - 1
            )));
        }
        let rows = radix
            .checked_pow(s.racks as u32)
            .filter(|&l| l <= 1 << 20)
            .ok_or_else(|| {
                CodeError::InvalidParams(format!(
                    "row count {radix}^{} is too large",
                    s.racks
                ))
            })?;
        let (p, e) = prime_power(s.q)?;
        let field = FieldCtx::new(p, e, s.seed)?;
        let xi = field.primitive_element()?;
        let rack_root = field.element_of_order(s.rack_size as u64)?;
        let mut pow_radix = Vec::with_capacity(s.racks + 1);
        let mut acc = 1usize;
        for _ in 0..=s.racks {
            pow_radix.push(acc);
            acc = acc.saturating_mul(radix);
        }
        Ok(ArrayCodeParams {
            spec: s.clone(),
            n,
            r: n - s.k,
            k_racks,
            k_rem,
            radix,
            rows,
            field,
            xi,
            rack_root,
            pow_radix,
            encode_lu: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &ArrayCodeSpec {
        &self.spec
    }

    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn radix(&self) -> usize {
        self.radix
    }

    pub fn racks(&self) -> usize {
        self.spec.racks
    }

    pub fn rack_size(&self) -> usize {
        self.spec.rack_size
    }

    pub fn helper_racks(&self) -> usize {
        self.spec.helper_racks
    }

    pub fn error_budget(&self) -> usize {
        self.spec.error_budget
    }

    pub fn k_racks(&self) -> usize {
        self.k_racks
    }

    pub fn k_rem(&self) -> usize {
        self.k_rem
    }

    pub fn parity_racks(&self) -> usize {
        self.spec.racks - self.k_racks
    }

    pub fn xi(&self) -> &FieldElement {
        &self.xi
    }

    pub fn rack_root(&self) -> &FieldElement {
        &self.rack_root
    }

    pub fn rack_of(&self, col: usize) -> usize {
        col / self.spec.rack_size
    }

    pub fn offset_of(&self, col: usize) -> usize {
        col % self.spec.rack_size
    }

    /// Digit `i` (one per rack) of row index `j`, little-endian base `radix`.
    #[inline]
    pub fn digit(&self, j: usize, i: usize) -> usize {
        (j / self.pow_radix[i]) % self.radix
    }

    /// Row index `j` with digit `i` replaced by `v`.
    #[inline]
    pub fn with_digit(&self, j: usize, i: usize, v: usize) -> usize {
        j - self.digit(j, i) * self.pow_radix[i] + v * self.pow_radix[i]
    }

    /// Row index `j` with digit `i` advanced by `delta` (mod radix).
    #[inline]
    pub fn shift_digit(&self, j: usize, i: usize, delta: usize) -> usize {
        self.with_digit(j, i, (self.digit(j, i) + delta) % self.radix)
    }

    /// Number of times a length-`t` run starting at digit value `ji` passes
    /// through zero (mod radix).
    fn zero_hits(&self, ji: usize, t: usize) -> usize {
        let first = (self.radix - ji) % self.radix;
        if t <= first {
            0
        } else {
            1 + (t - 1 - first) / self.radix
        }
    }

    /// Scalar picked up by `t` applications of rack `i`'s operator starting
    /// from digit value `ji`: a power of the primitive element counting the
    /// digit's wraps through zero.
    pub fn scale_run(&self, i: usize, ji: usize, t: usize) -> FieldElement {
        let e = (i * self.zero_hits(ji, t)) as u64;
        self.field.pow(&self.xi, e)
    }

    /// Applies the `t`-th power of the operator for column offset `g` in rack
    /// `i` to a column vector.
    pub fn apply_operator(
        &self,
        i: usize,
        g: usize,
        t: usize,
        x: &[FieldElement],
    ) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.rows);
        let root_pow = self.field.pow(&self.rack_root, (g * t) as u64);
        (0..self.rows)
            .map(|j| {
                let src = self.shift_digit(j, i, t);
                let lam = self.scale_run(i, self.digit(j, i), t);
                let coeff = self.field.mul(&lam, &root_pow);
                self.field.mul(&coeff, &x[src])
            })
            .collect()
    }

    /// All `r * rows` parity sums; zero iff `columns` is a codeword.
    pub fn syndrome(&self, columns: &[Vec<FieldElement>]) -> Vec<Vec<FieldElement>> {
        assert_eq!(columns.len(), self.n);
        let f = &self.field;
        (0..self.r)
            .map(|t| {
                (0..self.rows)
                    .map(|x| {
                        let mut acc = f.zero();
                        for i in 0..self.spec.racks {
                            let src = self.shift_digit(x, i, t);
                            let lam = self.scale_run(i, self.digit(x, i), t);
                            let mut rack_sum = f.zero();
                            for g in 0..self.spec.rack_size {
                                let w = f.pow(&self.rack_root, (g * t) as u64);
                                let term = f.mul(&w, &columns[i * self.spec.rack_size + g][src]);
                                rack_sum = f.add(&rack_sum, &term);
                            }
                            acc = f.add(&acc, &f.mul(&lam, &rack_sum));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_codeword(&self, columns: &[Vec<FieldElement>]) -> bool {
        self.syndrome(columns)
            .iter()
            .all(|row| row.iter().all(|v| self.field.is_zero(v)))
    }

    /// Coefficient matrix of the parity system restricted to `unknown_cols`:
    /// rows are equations (t, x), columns are unknowns (col, y).
    fn parity_system(&self, unknown_cols: &[usize]) -> Matrix {
        let f = &self.field;
        let rows_eq = self.r * self.rows;
        let cols_un = unknown_cols.len() * self.rows;
        let mut m = Matrix::zero(f, rows_eq, cols_un);
        for t in 0..self.r {
            for x in 0..self.rows {
                let eq = t * self.rows + x;
                for (uc, &c) in unknown_cols.iter().enumerate() {
                    let i = self.rack_of(c);
                    let g = self.offset_of(c);
                    let y = self.shift_digit(x, i, t);
                    let lam = self.scale_run(i, self.digit(x, i), t);
                    let w = f.pow(&self.rack_root, (g * t) as u64);
                    let coeff = f.mul(&lam, &w);
                    let col = uc * self.rows + y;
                    let cur = f.add(m.get(eq, col), &coeff);
                    m.set(eq, col, cur);
                }
            }
        }
        m
    }

    /// Negated contribution of the known columns to each parity equation.
    fn parity_rhs(&self, known: &BTreeMap<usize, Vec<FieldElement>>) -> Vec<FieldElement> {
        let f = &self.field;
        let mut rhs = vec![f.zero(); self.r * self.rows];
        for t in 0..self.r {
            for x in 0..self.rows {
                let eq = t * self.rows + x;
                let mut acc = f.zero();
                for (&c, data) in known.iter() {
                    let i = self.rack_of(c);
                    let g = self.offset_of(c);
                    let y = self.shift_digit(x, i, t);
                    let lam = self.scale_run(i, self.digit(x, i), t);
                    let w = f.pow(&self.rack_root, (g * t) as u64);
                    let coeff = f.mul(&lam, &w);
                    acc = f.add(&acc, &f.mul(&coeff, &data[y]));
                }
                rhs[eq] = f.neg(&acc);
            }
        }
        rhs
    }

    /// Systematic encode: the message occupies columns 0..k, parity columns
    /// k..n are solved from the parity system (factored once per params).
    pub fn encode(&self, message: &[Vec<FieldElement>]) -> Result<Vec<Vec<FieldElement>>, CodeError> {
        if message.len() != self.spec.k || message.iter().any(|c| c.len() != self.rows) {
            return Err(CodeError::BadMessageShape {
                k: self.spec.k,
                rows: self.rows,
            });
        }
        let parity_cols: Vec<usize> = (self.spec.k..self.n).collect();
        let lu = self
            .encode_lu
            .get_or_init(|| {
                let m = self.parity_system(&parity_cols);
                gf::factor(&self.field, &m).ok()
            })
            .as_ref()
            .ok_or_else(|| CodeError::MdsViolation {
                columns: parity_cols.clone(),
                rank: 0,
                unknowns: self.r * self.rows,
            })?;
        let known: BTreeMap<usize, Vec<FieldElement>> = message
            .iter()
            .cloned()
            .enumerate()
            .collect();
        let rhs = self.parity_rhs(&known);
        let sol = lu.solve(&self.field, &rhs);
        let mut columns = message.to_vec();
        for (uc, _) in parity_cols.iter().enumerate() {
            columns.push(sol[uc * self.rows..(uc + 1) * self.rows].to_vec());
        }
        Ok(columns)
    }

    /// Recovers the full codeword from at least k known columns. With more
    /// than k known columns the system is overdetermined and inconsistent
    /// inputs are reported instead of silently projected.
    pub fn decode_from_columns(
        &self,
        known: &BTreeMap<usize, Vec<FieldElement>>,
    ) -> Result<Vec<Vec<FieldElement>>, CodeError> {
        for (&c, data) in known.iter() {
            if c >= self.n {
                return Err(CodeError::BadColumn(c));
            }
            if data.len() != self.rows {
                return Err(CodeError::BadMessageShape {
                    k: self.spec.k,
                    rows: self.rows,
                });
            }
        }
        if known.len() < self.spec.k {
            return Err(CodeError::NotEnoughColumns {
                need: self.spec.k,
                got: known.len(),
            });
        }
        let missing: Vec<usize> = (0..self.n).filter(|c| !known.contains_key(c)).collect();
        if missing.is_empty() {
            let cols: Vec<_> = known.values().cloned().collect();
            return Ok(cols);
        }
        let m = self.parity_system(&missing);
        let rhs = self.parity_rhs(known);
        let sol = match gf::solve_linear(&self.field, &m, &rhs) {
            Ok(sol) => sol,
            Err(FieldError::Underdetermined { rank, unknowns }) => {
                return Err(CodeError::MdsViolation {
                    columns: missing,
                    rank,
                    unknowns,
                })
            }
            Err(FieldError::Inconsistent) => return Err(CodeError::InconsistentColumns),
            Err(e) => return Err(CodeError::Field(e)),
        };
        let mut columns = vec![Vec::new(); self.n];
        for (&c, data) in known.iter() {
            columns[c] = data.clone();
        }
        for (uc, &c) in missing.iter().enumerate() {
            columns[c] = sol[uc * self.rows..(uc + 1) * self.rows].to_vec();
        }
        Ok(columns)
    }

    pub fn random_message(&self, rng: &mut dyn RngCore) -> Vec<Vec<FieldElement>> {
        (0..self.spec.k)
            .map(|_| (0..self.rows).map(|_| self.field.random(rng)).collect())
            .collect()
    }
}

/// Outcome of an erasure-pattern sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdsReport {
    pub total_patterns: u64,
    pub checked: u64,
    pub exhaustive: bool,
    /// Erasure patterns whose columns could not be recovered.
    pub violations: Vec<Vec<usize>>,
}

impl MdsReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

impl ArrayCodeParams {
    /// Checks that every (or a seeded sample of) r-column erasure pattern is
    /// recoverable. Exhaustive when the pattern count fits the budget.
    pub fn verify_mds(&self, budget: u64, sample_seed: u64) -> MdsReport {
        let total = binomial(self.n, self.r);
        let exhaustive = total <= budget;
        let mut violations = Vec::new();
        let mut checked = 0u64;
        let try_pattern = |pattern: &[usize], violations: &mut Vec<Vec<usize>>| {
            if pattern.is_empty() {
                return;
            }
            let m = self.parity_system(pattern);
            if gf::factor(&self.field, &m).is_err() {
                violations.push(pattern.to_vec());
            }
        };
        if exhaustive {
            // Lexicographic walk over r-subsets of the n columns.
            let r = self.r;
            if r == 0 {
                checked = 1;
            } else {
                let mut idx: Vec<usize> = (0..r).collect();
                'walk: loop {
                    try_pattern(&idx, &mut violations);
                    checked += 1;
                    let mut i = r;
                    while i > 0 {
                        i -= 1;
                        if idx[i] < self.n - r + i {
                            idx[i] += 1;
                            for j in i + 1..r {
                                idx[j] = idx[j - 1] + 1;
                            }
                            continue 'walk;
                        }
                    }
                    break;
                }
            }
        } else {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(sample_seed);
            let mut pool: Vec<usize> = (0..self.n).collect();
            for _ in 0..budget {
                // Partial Fisher-Yates for a uniform r-subset.
                for i in 0..self.r {
                    let j = i + (rng.next_u64() as usize) % (self.n - i);
                    pool.swap(i, j);
                }
                let mut pattern: Vec<usize> = pool[..self.r].to_vec();
                pattern.sort_unstable();
                try_pattern(&pattern, &mut violations);
                checked += 1;
            }
        }
        MdsReport {
            total_patterns: total,
            checked,
            exhaustive,
            violations,
        }
    }
}

#[cfg(test)]
mod tests;
