//! Rack-aware Reed-Solomon code over a tower of prime-degree subfields.
//!
//! Each coordinate is one symbol of a big extension field `K` and stores the
//! evaluation of a degree-bounded polynomial. The evaluation points are
//! chosen so that every rack owns a generator of its own prime-degree
//! subfield, scaled within the rack by powers of an order-`rack_size` base
//! scalar. Repair then never ships whole coordinates: helpers project onto a
//! small subfield via traces and send a `1/span` fraction of their data.

pub mod access;
pub mod repair;

use crate::gf::{FieldCtx, FieldElement, FieldError};
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
    #[error("tower certification failed: {0}")]
    TowerDefect(String),
    #[error("message must be exactly {k} symbols, got {got}")]
    BadMessageLength { k: usize, got: usize },
    #[error("need at least {need} known coordinates, got {got}")]
    NotEnoughCoordinates { need: usize, got: usize },
    #[error("known coordinates are inconsistent with the code")]
    InconsistentCoordinates,
    #[error("coordinate index {0} out of range")]
    BadCoordinate(usize),
}

/// Serializable parameter set; [`RsCodeParams::new`] validates and derives
/// the shape, [`RsTower::build`] pays for the field itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsCodeSpec {
    /// Base field size, a prime.
    pub q: u64,
    /// Nodes per rack.
    pub rack_size: usize,
    /// Number of racks.
    pub racks: usize,
    /// Number of message symbols; any k coordinates determine the rest.
    pub k: usize,
    /// Helper racks contacted by a repair.
    pub helper_racks: usize,
    /// Corrupted helper racks the repair must tolerate.
    pub error_budget: usize,
    /// Seed for deterministic field construction.
    pub seed: u64,
}

/// Validated shape: everything derivable without touching the big field, so
/// the sub-packetization cost is visible before the tower is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsCodeParams {
    spec: RsCodeSpec,
    n: usize,
    r: usize,
    /// Racks fully occupied by data coordinates: k / rack_size.
    k_racks: usize,
    /// Leftover data coordinates: k % rack_size.
    k_rem: usize,
    /// Degree of the full field over the subfield generated by all rack
    /// generators together. A helper ships a 1/span fraction of a coordinate
    /// per repair round.
    span: usize,
    /// One prime per rack, ascending; the degree of that rack's generator.
    primes: Vec<usize>,
    /// Symbols of the base field per coordinate: span * product(primes).
    ell: usize,
    /// co_degrees[i] is the degree of the subfield generated by the other
    /// racks' generators; repair payloads for host i live there.
    co_degrees: Vec<usize>,
}

fn is_prime(x: usize) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest supported sub-packetization; field arithmetic is quadratic in it.
const MAX_ELL: usize = 1 << 12;

impl RsCodeParams {
    pub fn new(spec: &RsCodeSpec) -> Result<Self, CodeError> {
        let s = spec;
        if s.rack_size < 1 {
            return Err(CodeError::InvalidParams(
                "rack_size must be at least 1".into(),
            ));
        }
        if s.racks < 2 {
            return Err(CodeError::InvalidParams("racks must be at least 2".into()));
        }
        if s.q < 2 || !is_prime(s.q as usize) {
            return Err(CodeError::InvalidParams(format!(
                "field size q={} must be prime for the tower construction",
                s.q
            )));
        }
        let n = s.rack_size * s.racks;
        if s.k < 1 || s.k >= n {
            return Err(CodeError::InvalidParams(format!(
                "k={} must satisfy 1 <= k < n={n}",
                s.k
            )));
        }
        if (s.q - 1) % s.rack_size as u64 != 0 {
            return Err(CodeError::InvalidParams(format!(
                "rack_size={} must divide q-1={}",
                s.rack_size,
                s.q - 1
            )));
        }
        let k_racks = s.k / s.rack_size;
        let k_rem = s.k % s.rack_size;
        if s.helper_racks > s.racks - 1 {
            return Err(CodeError::InvalidParams(format!(
                "helper_racks={} cannot exceed racks-1={}",
                s.helper_racks,
                s.racks - 1
            )));
        }
        let span_signed =
            s.helper_racks as i64 - 2 * s.error_budget as i64 - k_racks as i64 + 1;
        if span_signed < 1 {
            return Err(CodeError::InvalidParams(format!(
                "helper_racks={} must be at least k/rack_size + 2*error_budget = {}",
                s.helper_racks,
                k_racks + 2 * s.error_budget
            )));
        }
        let span = span_signed as usize;
        // Smallest admissible primes, ascending: distinct, above the rack
        // size, and congruent to 1 mod span so the per-rack repair spaces
        // tile evenly.
        let mut primes = Vec::with_capacity(s.racks);
        let mut cand = s.rack_size + 1;
        while primes.len() < s.racks {
            if is_prime(cand) && cand % span == 1 % span {
                primes.push(cand);
            }
            cand += 1;
        }
        let mut ell = span;
        for &p in &primes {
            ell = ell.checked_mul(p).unwrap_or(usize::MAX);
        }
        if ell > MAX_ELL {
            return Err(CodeError::InvalidParams(format!(
                "sub-packetization {ell} exceeds the supported {MAX_ELL}; \
                 fewer or smaller racks are needed"
            )));
        }
        let co_degrees = (0..s.racks).map(|i| ell / span / primes[i]).collect();
        Ok(RsCodeParams {
            spec: s.clone(),
            n,
            r: n - s.k,
            k_racks,
            k_rem,
            span,
            primes,
            ell,
            co_degrees,
        })
    }

    pub fn spec(&self) -> &RsCodeSpec {
        &self.spec
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

    /// Number of racks beyond the data-bearing ones.
    pub fn parity_racks(&self) -> usize {
        self.racks() - self.k_racks
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn primes(&self) -> &[usize] {
        &self.primes
    }

    pub fn prime(&self, rack: usize) -> usize {
        self.primes[rack]
    }

    pub fn co_degree(&self, rack: usize) -> usize {
        self.co_degrees[rack]
    }

    pub fn rack_of(&self, coord: usize) -> usize {
        coord / self.spec.rack_size
    }

    pub fn offset_of(&self, coord: usize) -> usize {
        coord % self.spec.rack_size
    }
}

/// The working field machinery: the big field plus every certified generator
/// the code and its repair engine need.
#[derive(Debug)]
pub struct RsTower {
    params: RsCodeParams,
    field: FieldCtx,
    /// Base-field scalar of multiplicative order rack_size.
    gamma: FieldElement,
    /// lambdas[i]: generator of rack i's prime-degree subfield.
    lambdas: Vec<FieldElement>,
    /// Full-degree element; its low powers split the field over the
    /// prime-product subfield.
    alpha: FieldElement,
    /// generators[i]: generator of the co-degree subfield that rack i's
    /// repair payloads live in.
    generators: Vec<FieldElement>,
    /// Evaluation points, rack-major: lambdas[i] * gamma^g.
    points: Vec<FieldElement>,
    /// Dual multipliers: duals[x] = prod_{y != x} (points[x] - points[y])^-1.
    duals: Vec<FieldElement>,
    /// Lazily built per-host repair machinery.
    spaces: Vec<OnceLock<repair::RepairSpace>>,
}

fn prime_divisors(mut x: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            out.push(d);
            while x % d == 0 {
                x /= d;
            }
        }
        d += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

impl RsTower {
    pub fn build(params: RsCodeParams) -> Result<Self, CodeError> {
        let s = params.spec();
        let field = FieldCtx::new(s.q, params.ell(), s.seed)?;
        let u = s.rack_size as u64;

        // gamma comes from the base field, where the order search is cheap,
        // and embeds as a constant.
        let gamma = if u == 1 {
            field.one()
        } else {
            let base = FieldCtx::new(s.q, 1, s.seed)?;
            let root = base.element_of_order(u)?;
            field.from_int(base.as_int(&root).expect("base-field element"))
        };
        if field.pow(&gamma, u) != field.one() {
            return Err(CodeError::TowerDefect(format!(
                "gamma^{u} is not 1"
            )));
        }
        for t in prime_divisors(u as usize) {
            if field.pow(&gamma, u / t as u64) == field.one() {
                return Err(CodeError::TowerDefect(format!(
                    "gamma has order dividing {}",
                    u as usize / t
                )));
            }
        }

        let mut lambdas = Vec::with_capacity(s.racks);
        for i in 0..s.racks {
            let p = params.prime(i);
            let lam = field.subfield_element_of_degree(p)?;
            if !field.in_subfield(p, &lam) || field.in_subfield(1, &lam) {
                return Err(CodeError::TowerDefect(format!(
                    "rack {i} generator does not have degree {p}"
                )));
            }
            lambdas.push(lam);
        }

        let alpha = field.subfield_element_of_degree(params.ell())?;
        for t in prime_divisors(params.ell()) {
            if field.in_subfield(params.ell() / t, &alpha) {
                return Err(CodeError::TowerDefect(format!(
                    "splitting element lies in the degree-{} subfield",
                    params.ell() / t
                )));
            }
        }

        let mut generators = Vec::with_capacity(s.racks);
        for i in 0..s.racks {
            let d = params.co_degree(i);
            let g = field.subfield_element_of_degree(d)?;
            if !field.in_subfield(d, &g) {
                return Err(CodeError::TowerDefect(format!(
                    "rack {i} payload generator escapes its degree-{d} subfield"
                )));
            }
            generators.push(g);
        }

        let mut points = Vec::with_capacity(params.n());
        for i in 0..s.racks {
            let mut scaled = lambdas[i].clone();
            for _ in 0..s.rack_size {
                points.push(scaled.clone());
                scaled = field.mul(&scaled, &gamma);
            }
        }
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                if points[a] == points[b] {
                    return Err(CodeError::TowerDefect(format!(
                        "evaluation points {a} and {b} collide"
                    )));
                }
            }
        }

        let mut duals = Vec::with_capacity(params.n());
        for x in 0..points.len() {
            let mut prod = field.one();
            for y in 0..points.len() {
                if y != x {
                    prod = field.mul(&prod, &field.sub(&points[x], &points[y]));
                }
            }
            duals.push(field.inv(&prod)?);
        }

        let spaces = (0..s.racks).map(|_| OnceLock::new()).collect();
        Ok(RsTower {
            params,
            field,
            gamma,
            lambdas,
            alpha,
            generators,
            points,
            duals,
            spaces,
        })
    }

    pub fn params(&self) -> &RsCodeParams {
        &self.params
    }

    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    pub fn gamma(&self) -> &FieldElement {
        &self.gamma
    }

    pub fn lambda(&self, rack: usize) -> &FieldElement {
        &self.lambdas[rack]
    }

    pub fn alpha(&self) -> &FieldElement {
        &self.alpha
    }

    pub fn generator(&self, rack: usize) -> &FieldElement {
        &self.generators[rack]
    }

    pub fn point(&self, coord: usize) -> &FieldElement {
        &self.points[coord]
    }

    pub fn dual(&self, coord: usize) -> &FieldElement {
        &self.duals[coord]
    }

    /// Per-host repair machinery, built on first use and cached.
    pub fn repair_space(&self, host: usize) -> Result<&repair::RepairSpace, FieldError> {
        assert!(host < self.params.racks(), "host rack out of range");
        if let Some(space) = self.spaces[host].get() {
            return Ok(space);
        }
        let space = repair::RepairSpace::build(self, host)?;
        let _ = self.spaces[host].set(space);
        Ok(self.spaces[host].get().expect("space just stored"))
    }

    pub fn random_message(&self, rng: &mut dyn RngCore) -> Vec<FieldElement> {
        (0..self.params.k()).map(|_| self.field.random(rng)).collect()
    }

    /// Evaluates the message polynomial at every point, rack-major.
    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if message.len() != self.params.k() {
            return Err(CodeError::BadMessageLength {
                k: self.params.k(),
                got: message.len(),
            });
        }
        Ok(self
            .points
            .iter()
            .map(|x| poly_eval(&self.field, message, x))
            .collect())
    }

    /// Recovers the message from any k or more coordinates; extra
    /// coordinates must agree with the interpolated polynomial.
    pub fn decode_from_coords(
        &self,
        coords: &BTreeMap<usize, FieldElement>,
    ) -> Result<Vec<FieldElement>, CodeError> {
        let k = self.params.k();
        if let Some(&bad) = coords.keys().find(|&&c| c >= self.params.n()) {
            return Err(CodeError::BadCoordinate(bad));
        }
        if coords.len() < k {
            return Err(CodeError::NotEnoughCoordinates {
                need: k,
                got: coords.len(),
            });
        }
        let pts: Vec<(FieldElement, FieldElement)> = coords
            .iter()
            .take(k)
            .map(|(&c, v)| (self.points[c].clone(), v.clone()))
            .collect();
        let message = interpolate(&self.field, &pts);
        for (&c, v) in coords.iter().skip(k) {
            if poly_eval(&self.field, &message, &self.points[c]) != *v {
                return Err(CodeError::InconsistentCoordinates);
            }
        }
        Ok(message)
    }

    /// The r dual checks: residual[t] = sum_x duals[x] * points[x]^t * word[x].
    /// All-zero exactly on codewords.
    pub fn parity_residual(&self, word: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if word.len() != self.params.n() {
            return Err(CodeError::BadMessageLength {
                k: self.params.n(),
                got: word.len(),
            });
        }
        let f = &self.field;
        let weighted: Vec<FieldElement> = word
            .iter()
            .enumerate()
            .map(|(x, c)| f.mul(&self.duals[x], c))
            .collect();
        let mut residual = Vec::with_capacity(self.params.r());
        let mut powers: Vec<FieldElement> = vec![f.one(); self.params.n()];
        for _ in 0..self.params.r() {
            let mut acc = f.zero();
            for x in 0..self.params.n() {
                acc = f.add(&acc, &f.mul(&powers[x], &weighted[x]));
            }
            residual.push(acc);
            for (pw, pt) in powers.iter_mut().zip(self.points.iter()) {
                *pw = f.mul(pw, pt);
            }
        }
        Ok(residual)
    }

    pub fn is_codeword(&self, word: &[FieldElement]) -> Result<bool, CodeError> {
        Ok(self
            .parity_residual(word)?
            .iter()
            .all(|v| self.field.is_zero(v)))
    }
}

/// Horner evaluation of an ascending coefficient vector.
fn poly_eval(f: &FieldCtx, coeffs: &[FieldElement], x: &FieldElement) -> FieldElement {
    let mut acc = f.zero();
    for c in coeffs.iter().rev() {
        acc = f.add(&f.mul(&acc, x), c);
    }
    acc
}

/// Divides a monic polynomial with poly(root) = 0 by (X - root).
fn divide_out_root(
    f: &FieldCtx,
    poly: &[FieldElement],
    root: &FieldElement,
) -> Vec<FieldElement> {
    let n = poly.len() - 1;
    let mut q = vec![f.zero(); n];
    let mut carry = poly[n].clone();
    for j in (0..n).rev() {
        q[j] = carry.clone();
        carry = f.add(&poly[j], &f.mul(root, &carry));
    }
    debug_assert!(f.is_zero(&carry), "root must divide the polynomial");
    q
}

/// Lagrange interpolation through distinct points, ascending coefficients.
fn interpolate(f: &FieldCtx, pts: &[(FieldElement, FieldElement)]) -> Vec<FieldElement> {
    let k = pts.len();
    let mut master = vec![f.one()];
    for (x, _) in pts {
        // master *= (X - x)
        let mut next = vec![f.zero(); master.len() + 1];
        for (i, c) in master.iter().enumerate() {
            next[i + 1] = f.add(&next[i + 1], c);
            next[i] = f.sub(&next[i], &f.mul(x, c));
        }
        master = next;
    }
    let mut out = vec![f.zero(); k];
    for (xi, yi) in pts {
        let basis = divide_out_root(f, &master, xi);
        let denom = poly_eval(f, &basis, xi);
        let scale = f.mul(yi, &f.inv(&denom).expect("interpolation points are distinct"));
        for (c, b) in out.iter_mut().zip(basis.iter()) {
            *c = f.add(c, &f.mul(&scale, b));
        }
    }
    out
}
