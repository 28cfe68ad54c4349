//! Exact finite-field arithmetic for GF(p^m).
//!
//! A [`FieldCtx`] owns the modulus and all derived caches; elements are plain
//! coefficient vectors that only make sense relative to their context. All
//! operations are exact: no floating point, no probabilistic shortcuts except
//! the seeded searches (modulus, subfield generators), which are deterministic
//! for a fixed seed.
//!
//! Subfields of GF(p^m) are addressed by their degree d | m. Traces down to a
//! subfield apply the p^d-power Frobenius map, which is cached per (context, d)
//! as an m x m GF(p)-linear map, so repeated traces cost one matrix-vector
//! product per Frobenius step.

mod linalg;
pub(crate) mod poly;

pub use linalg::{factor, invert, solve_linear, Factored, Matrix};

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrime(u64),
    #[error("characteristic {0} exceeds the supported bound 2^31")]
    CharTooLarge(u64),
    #[error("modulus is not a monic irreducible of degree {expected}")]
    BadModulus { expected: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("order {order} does not divide the multiplicative group size")]
    OrderDoesNotDivide { order: u64 },
    #[error("degree {degree} does not divide the extension degree {ext}")]
    DegreeDoesNotDivide { degree: usize, ext: usize },
    #[error("multiplicative order search is not supported for fields this large")]
    UnsupportedOrderSearch,
    #[error("dependent basis: rank {rank}, expected {expect}")]
    DependentBasis { rank: usize, expect: usize },
    #[error("singular linear system: rank {rank}")]
    Singular { rank: usize },
    #[error("inconsistent linear system")]
    Inconsistent,
    #[error("linear system is underdetermined: rank {rank} over {unknowns} unknowns")]
    Underdetermined { rank: usize, unknowns: usize },
}

/// Element of GF(p^m): exactly m coefficients over GF(p), little-endian in the
/// power basis of the context's modulus. Comparable and hashable; all
/// arithmetic goes through the owning [`FieldCtx`].
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement(SmallVec<[u64; 2]>);

impl FieldElement {
    pub fn coeffs(&self) -> &[u64] {
        &self.0
    }
}

impl std::fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{:?}", &self.0[..])
        }
    }
}

/// Serializable description of a field: enough to reconstruct the exact same
/// arithmetic on the other side of a file boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u64,
    pub m: usize,
    pub modulus: Vec<u64>,
}

struct Caches {
    /// d -> matrix of the p^d-power map, m x m row-major over GF(p).
    frobenius: Mutex<HashMap<usize, Arc<Vec<u64>>>>,
    /// tr(x^t) to GF(p), grown on demand (Newton's identities on the modulus).
    power_traces: Mutex<Vec<u64>>,
    primitive: Mutex<Option<FieldElement>>,
}

/// Arithmetic context for GF(p^m).
pub struct FieldCtx {
    p: u64,
    m: usize,
    modulus: Vec<u64>,
    caches: Caches,
}

impl std::fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FieldCtx(GF({}^{}))", self.p, self.m)
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = poly::pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn factor_u128(mut n: u128) -> Vec<u128> {
    fn rho(n: u128) -> u128 {
        // Pollard rho with Brent cycling; n is odd, composite, not a prime power
        // checked by the caller loop structure (retried with shifted c).
        fn mulmod(a: u128, b: u128, n: u128) -> u128 {
            // n < 2^120 in practice; use wide arithmetic via split multiply.
            if let (Ok(a64), Ok(b64), Ok(n64)) =
                (u64::try_from(a), u64::try_from(b), u64::try_from(n))
            {
                return ((a64 as u128 * b64 as u128) % n64 as u128) as u128;
            }
            let mut result = 0u128;
            let mut a = a % n;
            let mut b = b;
            while b > 0 {
                if b & 1 == 1 {
                    result = (result + a) % n;
                }
                a = (a << 1) % n;
                b >>= 1;
            }
            result
        }
        let mut c = 1u128;
        loop {
            let f = |x: u128| (mulmod(x, x, n) + c) % n;
            let mut x = 2u128;
            let mut y = 2u128;
            let mut d = 1u128;
            while d == 1 {
                x = f(x);
                y = f(f(y));
                let diff = if x > y { x - y } else { y - x };
                d = gcd_u128(diff, n);
            }
            if d != n {
                return d;
            }
            c += 1;
        }
    }
    fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    fn is_prime_u128(n: u128) -> bool {
        if let Ok(n64) = u64::try_from(n) {
            return is_prime_u64(n64);
        }
        // Trial-division fallback is impractical here; sizes above 2^64 only
        // arise transiently and are split by rho before primality matters.
        // Miller-Rabin with fixed witnesses is still correct with very high
        // confidence for our deterministic inputs; reject by construction.
        unreachable!("order search is capped below 2^64 factors")
    }
    let mut out = Vec::new();
    for q in [2u128, 3, 5] {
        while n % q == 0 {
            out.push(q);
            n /= q;
        }
    }
    let mut d = 7u128;
    while d * d <= n && d < 1_000_000 {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
        d += 2;
    }
    let mut stack = vec![n];
    while let Some(v) = stack.pop() {
        if v == 1 {
            continue;
        }
        if is_prime_u128(v) {
            out.push(v);
            continue;
        }
        let f = rho(v);
        stack.push(f);
        stack.push(v / f);
    }
    out.sort_unstable();
    out.dedup();
    out
}

impl FieldCtx {
    /// Builds GF(p^m) with a deterministic seeded modulus search. The same
    /// (p, m, seed) always yields the same modulus.
    pub fn new(p: u64, m: usize, seed: u64) -> Result<Self, FieldError> {
        if p >= poly::MAX_CHAR {
            return Err(FieldError::CharTooLarge(p));
        }
        if !is_prime_u64(p) {
            return Err(FieldError::NonPrime(p));
        }
        assert!(m >= 1, "extension degree must be positive");
        let modulus = poly::find_irreducible(p, m, seed);
        Ok(Self::from_parts(p, m, modulus))
    }

    /// Rebuilds a context from an explicit descriptor, re-validating the
    /// modulus.
    pub fn from_descriptor(d: &FieldDescriptor) -> Result<Self, FieldError> {
        if d.p >= poly::MAX_CHAR {
            return Err(FieldError::CharTooLarge(d.p));
        }
        if !is_prime_u64(d.p) {
            return Err(FieldError::NonPrime(d.p));
        }
        let mut modulus = d.modulus.clone();
        for c in modulus.iter_mut() {
            *c %= d.p;
        }
        let ok = poly::degree(&modulus) == Some(d.m)
            && (d.m == 1 || poly::is_irreducible(&modulus, d.p));
        if !ok {
            return Err(FieldError::BadModulus { expected: d.m });
        }
        Ok(Self::from_parts(d.p, d.m, modulus))
    }

    fn from_parts(p: u64, m: usize, modulus: Vec<u64>) -> Self {
        FieldCtx {
            p,
            m,
            modulus,
            caches: Caches {
                frobenius: Mutex::new(HashMap::new()),
                power_traces: Mutex::new(Vec::new()),
                primitive: Mutex::new(None),
            },
        }
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor {
            p: self.p,
            m: self.m,
            modulus: self.modulus.clone(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Field size p^m, if it fits in u128.
    pub fn size_u128(&self) -> Option<u128> {
        let mut acc: u128 = 1;
        for _ in 0..self.m {
            acc = acc.checked_mul(self.p as u128)?;
        }
        Some(acc)
    }

    pub fn size_big(&self) -> BigUint {
        BigUint::from(self.p).pow(self.m as u32)
    }

    pub fn same_field(&self, other: &FieldCtx) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }

    fn el(&self, mut v: Vec<u64>) -> FieldElement {
        v.resize(self.m, 0);
        FieldElement(SmallVec::from_vec(v))
    }

    pub fn zero(&self) -> FieldElement {
        self.el(vec![0])
    }

    pub fn one(&self) -> FieldElement {
        self.el(vec![1 % self.p])
    }

    pub fn from_int(&self, v: u64) -> FieldElement {
        self.el(vec![v % self.p])
    }

    /// Element from little-endian coefficients (reduced mod p, padded to m).
    pub fn element(&self, coeffs: &[u64]) -> FieldElement {
        assert!(coeffs.len() <= self.m, "too many coefficients");
        self.el(coeffs.iter().map(|&c| c % self.p).collect())
    }

    /// The constant value, if the element lies in the prime field.
    pub fn as_int(&self, x: &FieldElement) -> Option<u64> {
        if x.0[1..].iter().all(|&c| c == 0) {
            Some(x.0[0])
        } else {
            None
        }
    }

    pub fn is_zero(&self, x: &FieldElement) -> bool {
        x.0.iter().all(|&c| c == 0)
    }

    pub fn random(&self, rng: &mut dyn RngCore) -> FieldElement {
        let v: Vec<u64> = (0..self.m).map(|_| uniform_mod(rng, self.p)).collect();
        self.el(v)
    }

    #[inline]
    fn check(&self, x: &FieldElement) {
        debug_assert_eq!(x.0.len(), self.m, "element from a different context");
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let mut out = SmallVec::with_capacity(self.m);
        for i in 0..self.m {
            out.push((a.0[i] + b.0[i]) % self.p);
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        let mut out = SmallVec::with_capacity(self.m);
        for i in 0..self.m {
            out.push((a.0[i] + self.p - b.0[i]) % self.p);
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        self.check(a);
        FieldElement(a.0.iter().map(|&c| (self.p - c) % self.p).collect())
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.check(a);
        self.check(b);
        if self.m == 1 {
            let prod = a.0[0] as u128 * b.0[0] as u128;
            return self.el(vec![(prod % self.p as u128) as u64]);
        }
        let prod = poly::mul(&a.0, &b.0, self.p);
        self.el(poly::rem(&prod, &self.modulus, self.p))
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a);
        if self.is_zero(a) {
            return Err(FieldError::DivisionByZero);
        }
        if self.m == 1 {
            return Ok(self.from_int(poly::inv_mod(a.0[0], self.p)));
        }
        let (g, s) = poly::ext_gcd(&a.0, &self.modulus, self.p);
        debug_assert_eq!(poly::degree(&g), Some(0), "modulus must be irreducible");
        let scale = poly::inv_mod(g[0], self.p);
        let inv: Vec<u64> = s
            .iter()
            .map(|&c| ((c as u128 * scale as u128) % self.p as u128) as u64)
            .collect();
        Ok(self.el(poly::rem(&inv, &self.modulus, self.p)))
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &FieldElement, e: u64) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn pow_big(&self, a: &FieldElement, e: &BigUint) -> FieldElement {
        let mut acc = self.one();
        let bits = e.bits();
        if bits == 0 {
            return acc;
        }
        let mut i = bits;
        while i > 0 {
            i -= 1;
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    /// The p^d-power map as a cached GF(p)-linear matrix.
    fn frobenius_matrix(&self, d: usize) -> Arc<Vec<u64>> {
        assert!(d >= 1 && d <= self.m);
        if let Some(m) = self.caches.frobenius.lock().unwrap().get(&d) {
            return m.clone();
        }
        // w = x^(p^d) mod modulus, stepping one Frobenius at a time (reusing
        // the d=1 matrix when it exists). Only reached for m >= 2.
        let x = self.el(vec![0, 1]);
        let w = if d == 1 {
            self.pow(&x, self.p)
        } else {
            let m1 = self.frobenius_matrix(1);
            let mut w = self.apply_linmap(&m1, &x);
            for _ in 1..d {
                w = self.apply_linmap(&m1, &w);
            }
            w
        };
        // Column i is w^i.
        let mut mat = vec![0u64; self.m * self.m];
        let mut col = self.one();
        for i in 0..self.m {
            for r in 0..self.m {
                mat[r * self.m + i] = col.0[r];
            }
            if i + 1 < self.m {
                col = self.mul(&col, &w);
            }
        }
        let arc = Arc::new(mat);
        self.caches
            .frobenius
            .lock()
            .unwrap()
            .entry(d)
            .or_insert_with(|| arc.clone());
        arc
    }

    fn apply_linmap(&self, mat: &[u64], x: &FieldElement) -> FieldElement {
        let m = self.m;
        let mut out = SmallVec::with_capacity(m);
        let fast = self.p < (1 << 26) && m <= (1 << 11);
        for r in 0..m {
            let row = &mat[r * m..(r + 1) * m];
            let mut acc: u128 = 0;
            if fast {
                let mut a: u64 = 0;
                for (c, &v) in row.iter().enumerate() {
                    a += v * x.0[c];
                }
                acc = a as u128;
            } else {
                for (c, &v) in row.iter().enumerate() {
                    acc += v as u128 * x.0[c] as u128;
                }
            }
            out.push((acc % self.p as u128) as u64);
        }
        FieldElement(out)
    }

    /// x^(p^d), via the cached linear map.
    pub fn frobenius(&self, d: usize, x: &FieldElement) -> FieldElement {
        self.check(x);
        if self.m == 1 || d % self.m == 0 {
            return x.clone();
        }
        let mat = self.frobenius_matrix(d % self.m);
        self.apply_linmap(&mat, x)
    }

    /// Membership test for the degree-d subfield GF(p^d), d | m.
    pub fn in_subfield(&self, d: usize, x: &FieldElement) -> bool {
        self.frobenius(d, x) == *x
    }

    /// tr(x^t) down to GF(p) for t < count, by Newton's identities on the
    /// modulus (power sums of its roots) extended with the linear recurrence.
    pub fn power_traces(&self, count: usize) -> Vec<u64> {
        let mut cache = self.caches.power_traces.lock().unwrap();
        if cache.len() < count {
            let p = self.p;
            let m = self.m;
            let f = &self.modulus;
            if cache.is_empty() {
                cache.push((m as u64) % p);
            }
            while cache.len() < count {
                let t = cache.len();
                let mut acc: u64 = 0;
                // p_t + sum_{j=1..min(t,m)} c_{m-j} p_{t-j} (+ t*c_{m-t} if t<=m) = 0
                let upper = t.min(m);
                for j in 1..=upper {
                    if t == j && t <= m {
                        continue;
                    }
                    let c = f[m - j];
                    acc = (acc + c * cache[t - j]) % p;
                }
                if t <= m {
                    let c = f[m - t];
                    acc = (acc + ((t as u64) % p) * c) % p;
                }
                cache.push((p - acc % p) % p);
            }
        }
        cache[..count].to_vec()
    }

    /// Trace from GF(p^m) down to the subfield GF(p^d), d | m.
    pub fn trace_to_subfield(&self, d: usize, x: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(x);
        if d == 0 || self.m % d != 0 {
            return Err(FieldError::DegreeDoesNotDivide {
                degree: d,
                ext: self.m,
            });
        }
        if d == self.m {
            return Ok(x.clone());
        }
        if d == 1 {
            // Linear functional over GF(p): tr(sum a_i x^i) = sum a_i tr(x^i).
            let tau = self.power_traces(self.m);
            let fast = self.p < (1 << 26) && self.m <= (1 << 11);
            let total = if fast {
                let mut a: u64 = 0;
                for (i, &t) in tau.iter().enumerate() {
                    a += t * x.0[i];
                }
                a as u128
            } else {
                let mut a: u128 = 0;
                for (i, &t) in tau.iter().enumerate() {
                    a += t as u128 * x.0[i] as u128;
                }
                a
            };
            return Ok(self.from_int((total % self.p as u128) as u64));
        }
        let mat = self.frobenius_matrix(d);
        let mut acc = x.clone();
        let mut y = x.clone();
        for _ in 1..(self.m / d) {
            y = self.apply_linmap(&mat, &y);
            acc = self.add(&acc, &y);
        }
        debug_assert!(self.in_subfield(d, &acc));
        Ok(acc)
    }

    fn index_element(&self, idx: u64) -> FieldElement {
        let mut v = Vec::with_capacity(self.m);
        let mut rest = idx;
        for _ in 0..self.m {
            v.push(rest % self.p);
            rest /= self.p;
        }
        self.el(v)
    }

    /// Smallest primitive element under the base-p integer encoding of
    /// coefficient vectors. Requires a factorable group order.
    pub fn primitive_element(&self) -> Result<FieldElement, FieldError> {
        if let Some(cached) = self.caches.primitive.lock().unwrap().clone() {
            return Ok(cached);
        }
        let size = self.size_u128().ok_or(FieldError::UnsupportedOrderSearch)?;
        // Cap so every factor fits in u64 and the deterministic primality
        // witnesses stay valid.
        if size > (1u128 << 63) {
            return Err(FieldError::UnsupportedOrderSearch);
        }
        let group = size - 1;
        let primes = factor_u128(group);
        let mut idx = 2u64;
        loop {
            let cand = self.index_element(idx);
            if !self.is_zero(&cand) {
                let mut primitive = true;
                for &t in &primes {
                    let e = group / t;
                    if self.pow_u128(&cand, e) == self.one() {
                        primitive = false;
                        break;
                    }
                }
                if primitive {
                    *self.caches.primitive.lock().unwrap() = Some(cand.clone());
                    return Ok(cand);
                }
            }
            idx += 1;
        }
    }

    fn pow_u128(&self, a: &FieldElement, e: u128) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Deterministic element of exact multiplicative order u, derived from the
    /// smallest primitive element.
    pub fn element_of_order(&self, u: u64) -> Result<FieldElement, FieldError> {
        if u == 0 {
            return Err(FieldError::OrderDoesNotDivide { order: 0 });
        }
        let size = self.size_u128().ok_or(FieldError::UnsupportedOrderSearch)?;
        let group = size - 1;
        if group % u as u128 != 0 {
            return Err(FieldError::OrderDoesNotDivide { order: u });
        }
        let xi = self.primitive_element()?;
        let g = self.pow_u128(&xi, group / u as u128);
        debug_assert!(self.pow(&g, u) == self.one());
        for t in factor_u128(u as u128) {
            debug_assert!(self.pow(&g, u / t as u64) != self.one());
        }
        Ok(g)
    }

    /// Deterministic element of exact degree t over GF(p) (t | m): drawn as
    /// z^((p^m-1)/(p^t-1)) for seeded random z, redrawn until the degree
    /// certificate passes.
    pub fn subfield_element_of_degree(&self, t: usize) -> Result<FieldElement, FieldError> {
        if t == 0 || self.m % t != 0 {
            return Err(FieldError::DegreeDoesNotDivide {
                degree: t,
                ext: self.m,
            });
        }
        let qm = self.size_big();
        let qt = BigUint::from(self.p).pow(t as u32);
        let one = BigUint::from(1u32);
        let e = (&qm - &one) / (&qt - &one);
        // Seed from the modulus so any reconstruction of this field draws the
        // same candidates.
        let mut key = [0u8; 32];
        let mut h: u64 = 0xcbf29ce484222325;
        for &c in &self.modulus {
            h = (h ^ c).wrapping_mul(0x100000001b3);
        }
        key[..8].copy_from_slice(&h.to_le_bytes());
        key[8..16].copy_from_slice(&(t as u64).to_le_bytes());
        key[16..24].copy_from_slice(&self.p.to_le_bytes());
        key[24..32].copy_from_slice(b"subfield");
        let mut rng = ChaCha12Rng::from_seed(key);
        let maximal: Vec<usize> = {
            let mut ms: Vec<usize> = prime_divisors(t).into_iter().map(|q| t / q).collect();
            ms.sort_unstable();
            ms.dedup();
            ms
        };
        loop {
            let z = self.random(&mut rng);
            if self.is_zero(&z) {
                continue;
            }
            let lam = self.pow_big(&z, &e);
            if self.is_zero(&lam) {
                continue;
            }
            debug_assert!(self.in_subfield(t, &lam));
            if maximal.iter().all(|&s| !self.in_subfield(s, &lam)) {
                return Ok(lam);
            }
        }
    }

    /// Dual basis of `basis` for GF(p^m) over GF(p^d): inverts the trace Gram
    /// matrix over the subfield. tr(basis[s] * dual[t]) = delta(s,t).
    pub fn dual_basis(
        &self,
        d: usize,
        basis: &[FieldElement],
    ) -> Result<Vec<FieldElement>, FieldError> {
        if d == 0 || self.m % d != 0 {
            return Err(FieldError::DegreeDoesNotDivide {
                degree: d,
                ext: self.m,
            });
        }
        let n = self.m / d;
        if basis.len() != n {
            return Err(FieldError::DependentBasis {
                rank: basis.len(),
                expect: n,
            });
        }
        let mut gram = Matrix::zero(self, n, n);
        for s in 0..n {
            for t in s..n {
                let prod = self.mul(&basis[s], &basis[t]);
                let tr = self.trace_to_subfield(d, &prod)?;
                gram.set(s, t, tr.clone());
                gram.set(t, s, tr);
            }
        }
        let inv = match linalg::invert(self, &gram) {
            Ok(inv) => inv,
            Err(FieldError::Singular { rank }) => {
                return Err(FieldError::DependentBasis { rank, expect: n })
            }
            Err(e) => return Err(e),
        };
        let mut dual = Vec::with_capacity(n);
        for t in 0..n {
            let mut acc = self.zero();
            for r in 0..n {
                acc = self.add(&acc, &self.mul(inv.get(t, r), &basis[r]));
            }
            dual.push(acc);
        }
        Ok(dual)
    }
}

/// Unbiased uniform draw from [0, p) by rejection sampling.
pub(crate) fn uniform_mod(rng: &mut dyn RngCore, p: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % p);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % p;
        }
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
